use bsg::baselines::{clip_params, W2gModel};
use bsg::bsg::{window_loss, LossConfig};
use bsg::cli::{nearest, AnyModel, ModelBundle, NearestMeasure, SaveMode};
use bsg::corpus::Vocabulary;
use bsg::eval::{best_f1_threshold, f1_at, gap, pearson, spearman};
use bsg::gauss::{kl_divergence, CovKind};
use bsg::oracles::{random_bsg_model, random_gaussian};
use bsg::real::Matrix;
use bsg::table::GaussTable;
use bsg::{Energy, ModelKind, Objective, Pairing, TrainConfig};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn w2g(seed: u64, n: usize, d: usize, cov: CovKind, scale: f64) -> W2gModel<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = cov.width(d);
    let mean: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-scale..scale)).collect();
    let lv: Vec<f64> = (0..n * k).map(|_| rng.gen_range(-12.0..6.0)).collect();
    W2gModel {
        table: GaussTable::new(
            cov,
            Matrix::from_f64(n, d, &mean),
            Matrix::from_f64(n, k, &lv),
        )
        .unwrap(),
        energy: Energy::ExpectedLikelihood,
        max_mean_norm: 20.0,
        min_var: 1e-3,
        max_var: 10.0,
    }
}

proptest! {
    #[test]
    fn kl_zero_on_self(seed in any::<u64>(), d in 1usize..6, diag in any::<bool>()) {
        let cov = if diag { CovKind::Diagonal } else { CovKind::Spherical };
        let p = random_gaussian(&mut ChaCha8Rng::seed_from_u64(seed), d, cov);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn clip_idempotent_and_bounded(seed in any::<u64>(), n in 1usize..12, d in 1usize..8, diag in any::<bool>(), scale in 0.1f64..100.0) {
        let cov = if diag { CovKind::Diagonal } else { CovKind::Spherical };
        let m = w2g(seed, n, d, cov, scale);
        let once = clip_params(&m);
        prop_assert!(once.within_bounds());
        prop_assert_eq!(clip_params(&once), once.clone());
        if m.within_bounds() {
            prop_assert_eq!(once, m);
        }
    }

    #[test]
    fn hinge_loss_non_negative(seed in any::<u64>(), margin in 0.0f64..3.0, n_pos in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (model, _) = random_bsg_model(&mut rng, 15, 3, 4, CovKind::Diagonal).unwrap();
        let pos: Vec<usize> = (0..n_pos).map(|_| rng.gen_range(0..15)).collect();
        let neg: Vec<usize> = (0..n_pos).map(|_| rng.gen_range(0..15)).collect();
        let lc = LossConfig { objective: Objective::Hinge, margin, pairing: Pairing::Aligned };
        let l = window_loss(&model, rng.gen_range(0..15), &pos, &neg, &lc).unwrap();
        prop_assert!(l.is_finite() && l >= 0.0);
    }

    #[test]
    fn posterior_ignores_context_order(seed in any::<u64>(), n_ctx in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (model, _) = random_bsg_model(&mut rng, 12, 2, 5, CovKind::Diagonal).unwrap();
        let mut ctx: Vec<usize> = (0..n_ctx).map(|_| rng.gen_range(0..12)).collect();
        let a = model.posterior(0, &ctx).unwrap();
        ctx.shuffle(&mut rng);
        let b = model.posterior(0, &ctx).unwrap();
        for (x, y) in a.mean().iter().chain(a.log_var()).zip(b.mean().iter().chain(b.log_var())) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn spearman_rank_invariant(xs in prop::collection::vec(-50.0f64..50.0, 3..30), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ys: Vec<f64> = xs.iter().map(|x| x + rng.gen_range(-20.0..20.0)).collect();
        if let Ok(r) = spearman(&xs, &ys) {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            let warped: Vec<f64> = xs.iter().map(|x| x.powi(3) + 2.0 * x).collect();
            prop_assert!((spearman(&warped, &ys).unwrap() - r).abs() < 1e-12);
            prop_assert!((spearman(&ys, &xs).unwrap() - r).abs() < 1e-12);
        }
        if let Ok(r) = pearson(&xs, &ys) {
            let shifted: Vec<f64> = ys.iter().map(|y| 3.0 * y - 7.0).collect();
            prop_assert!((pearson(&xs, &shifted).unwrap() - r).abs() < 1e-9);
        }
    }

    #[test]
    fn gap_bounded_and_ideal_is_one(weights in prop::collection::vec(0.0f64..5.0, 1..12), seed in any::<u64>()) {
        let mut gold = weights.clone();
        gold.push(1.0);
        let mut ranked = gold.clone();
        ranked.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let g = gap(&ranked, &gold).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&g));
        let mut ideal = gold.clone();
        ideal.sort_by(|a, b| b.total_cmp(a));
        prop_assert!((gap(&ideal, &gold).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn best_f1_dominates(scores in prop::collection::vec(-3.0f64..3.0, 2..40), seed in any::<u64>(), ths in prop::collection::vec(-4.0f64..4.0, 1..20)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut labels: Vec<bool> = scores.iter().map(|_| rng.gen_bool(0.5)).collect();
        labels[0] = true;
        let (th, best) = best_f1_threshold(&scores, &labels).unwrap();
        prop_assert!((f1_at(&scores, &labels, th).unwrap() - best).abs() < 1e-12);
        for t in ths {
            prop_assert!(f1_at(&scores, &labels, t).unwrap() <= best + 1e-12);
        }
    }

    #[test]
    fn nearest_sorted_and_excludes_query(seed in any::<u64>(), k in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 8;
        let cfg = TrainConfig { dim: 2, hidden: 2, ..Default::default() };
        let m = W2gModel::<f32>::init(n, CovKind::Diagonal, &cfg, &mut rng);
        let vocab = Vocabulary::from_counts((0..n).map(|i| format!("w{i}")).collect(), vec![1; n], 1.0, 1.0).unwrap();
        let b = ModelBundle::new(ModelKind::W2gD, vocab, cfg, AnyModel::W2g(m)).unwrap();
        for measure in [NearestMeasure::CosineMean, NearestMeasure::NegKl] {
            let hits = nearest(&b, "w3", k, measure).unwrap();
            prop_assert_eq!(hits.len(), k.min(n - 1));
            prop_assert!(hits.iter().all(|h| h.0 != "w3"));
            prop_assert!(hits.windows(2).all(|w| w[0].1 >= w[1].1));
        }
    }

    #[test]
    fn text_round_trip_any_floats(vals in prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), 12)) {
        let n = 3;
        let cfg = TrainConfig { dim: 2, ..Default::default() };
        let mean: Vec<f64> = vals[..6].iter().map(|&v| v as f64).collect();
        let lv: Vec<f64> = vals[6..9].iter().map(|&v| (v as f64).clamp(-30.0, 30.0)).collect();
        let m = W2gModel {
            table: GaussTable::new(CovKind::Spherical, Matrix::from_f64(n, 2, &mean), Matrix::from_f64(n, 1, &lv)).unwrap(),
            energy: cfg.energy,
            max_mean_norm: cfg.max_mean_norm,
            min_var: cfg.min_var,
            max_var: cfg.max_var,
        };
        let vocab = Vocabulary::from_counts(vec!["a".into(), "b".into(), "c".into()], vec![3, 2, 1], 1.0, 1.0).unwrap();
        let b = ModelBundle::new(ModelKind::W2gS, vocab, cfg, AnyModel::W2g(m)).unwrap();
        let mut text = Vec::new();
        b.write(&mut text, SaveMode::Text).unwrap();
        let back = ModelBundle::read(text.as_slice()).unwrap();
        let (AnyModel::W2g(x), AnyModel::W2g(y)) = (&back.model, &b.model) else { unreachable!() };
        let bits = |m: &Matrix<f32>| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&x.table.mean), bits(&y.table.mean));
        prop_assert_eq!(bits(&x.table.log_var), bits(&y.table.log_var));
    }
}
