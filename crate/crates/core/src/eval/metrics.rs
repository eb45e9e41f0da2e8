use crate::error::{Error, Result};

fn check_pair(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two points"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::UndefinedCorrelation("non-finite value"));
    }
    Ok(())
}

/// Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant series"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_pair(xs, ys)?;
    pearson(&average_ranks(xs), &average_ranks(ys))
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// F1 of the rule `score >= threshold` predicts positive.
pub fn f1_at(scores: &[f64], labels: &[bool], threshold: f64) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    Ok(f1(tp, fp, fn_))
}

/// Threshold maximizing F1 over −∞, +∞ and the midpoints between adjacent
/// distinct scores. Ties resolve to the lowest threshold.
pub fn best_f1_threshold(scores: &[f64], labels: &[bool]) -> Result<(f64, f64)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    if !labels.iter().any(|&l| l) {
        return Err(Error::NoPositiveLabels);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numerical("non-finite entailment score".into()));
    }
    let mut items: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_pos = labels.iter().filter(|&&l| l).count();
    let total_neg = labels.len() - total_pos;

    // Everything predicted positive at −∞.
    let (mut tp, mut fp) = (total_pos, total_neg);
    let mut best = (f64::NEG_INFINITY, f1(tp, fp, 0));
    let mut i = 0;
    while i < items.len() {
        let v = items[i].0;
        while i < items.len() && items[i].0 == v {
            if items[i].1 {
                tp -= 1;
            } else {
                fp -= 1;
            }
            i += 1;
        }
        let th = if i < items.len() {
            0.5 * (v + items[i].0)
        } else {
            f64::INFINITY
        };
        let score = f1(tp, fp, total_pos - tp);
        if score > best.1 {
            best = (th, score);
        }
    }
    Ok(best)
}

/// Generalized average precision of a system ranking.
///
/// `ranked` holds the gold weight of each ranked candidate in system order
/// (zero for non-gold); `gold` holds every gold weight.
pub fn gap(ranked: &[f64], gold: &[f64]) -> Result<f64> {
    if gold
        .iter()
        .chain(ranked)
        .any(|w| !(w.is_finite() && *w >= 0.0))
    {
        return Err(Error::format(
            "gold weights",
            "weights must be finite and non-negative",
        ));
    }
    let mut ideal: Vec<f64> = gold.iter().copied().filter(|&w| w > 0.0).collect();
    if ideal.is_empty() {
        return Err(Error::NoPositiveGold);
    }
    ideal.sort_by(|a, b| b.total_cmp(a));
    let mut num = 0.0;
    let mut acc = 0.0;
    for (i, &w) in ranked.iter().enumerate() {
        acc += w;
        if w > 0.0 {
            num += acc / (i + 1) as f64;
        }
    }
    let mut den = 0.0;
    acc = 0.0;
    for (j, &w) in ideal.iter().enumerate() {
        acc += w;
        den += acc / (j + 1) as f64;
    }
    Ok(num / den)
}
