//! Gradient containers and the Adam optimizer.
//!
//! Models expose their parameters as an ordered list of matrices
//! ("blocks"). A gradient is the same list, where embedding tables carry
//! only the rows a batch touched.

use std::collections::BTreeMap;

use crate::real::{Matrix, Real};

/// Row-sparse gradient of a table with `width` columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseRows {
    width: usize,
    rows: BTreeMap<usize, Vec<f64>>,
}

impl SparseRows {
    pub fn new(width: usize) -> Self {
        SparseRows {
            width,
            rows: BTreeMap::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let w = self.width;
        self.rows.entry(r).or_insert_with(|| vec![0.0; w])
    }

    pub fn add_row(&mut self, r: usize, g: &[f64]) {
        debug_assert_eq!(g.len(), self.width);
        for (a, b) in self.row_mut(r).iter_mut().zip(g) {
            *a += b;
        }
    }

    pub fn add_scaled(&mut self, r: usize, g: &[f64], scale: f64) {
        for (a, b) in self.row_mut(r).iter_mut().zip(g) {
            *a += scale * b;
        }
    }

    pub fn get(&self, r: usize) -> Option<&[f64]> {
        self.rows.get(&r).map(|v| v.as_slice())
    }

    pub fn touched(&self) -> impl Iterator<Item = usize> + '_ {
        self.rows.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.rows.iter().map(|(&r, v)| (r, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Move every row of `other` into `self`, summing where both exist.
    pub fn absorb(&mut self, other: SparseRows) {
        for (r, g) in other.rows {
            match self.rows.get_mut(&r) {
                Some(acc) => acc.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                None => {
                    self.rows.insert(r, g);
                }
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.rows.values_mut() {
            v.iter_mut().for_each(|x| *x *= s);
        }
    }

    /// Dense copy with `n_rows` rows.
    pub fn to_dense(&self, n_rows: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_rows * self.width];
        for (r, g) in &self.rows {
            out[r * self.width..(r + 1) * self.width].copy_from_slice(g);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockGrad {
    Dense(Vec<f64>),
    Rows(SparseRows),
}

impl BlockGrad {
    pub fn absorb(&mut self, other: BlockGrad) {
        match (self, other) {
            (BlockGrad::Dense(a), BlockGrad::Dense(b)) => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y)
            }
            (BlockGrad::Rows(a), BlockGrad::Rows(b)) => a.absorb(b),
            _ => panic!("gradient block layout mismatch"),
        }
    }

    pub fn scale(&mut self, s: f64) {
        match self {
            BlockGrad::Dense(a) => a.iter_mut().for_each(|x| *x *= s),
            BlockGrad::Rows(a) => a.scale(s),
        }
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        match self {
            BlockGrad::Dense(a) => a.clone(),
            BlockGrad::Rows(a) => a.to_dense(len / a.width().max(1)),
        }
    }
}

/// Gradients for every parameter block of a model, in the model's order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSet {
    pub blocks: Vec<BlockGrad>,
}

impl GradSet {
    pub fn absorb(&mut self, other: GradSet) {
        assert_eq!(self.blocks.len(), other.blocks.len());
        for (a, b) in self.blocks.iter_mut().zip(other.blocks) {
            a.absorb(b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.blocks.iter_mut().for_each(|b| b.scale(s));
    }
}

/// A model whose parameters can be enumerated as blocks.
pub trait Parameters<T: Real> {
    fn blocks(&self) -> Vec<&Matrix<T>>;
    fn blocks_mut(&mut self) -> Vec<&mut Matrix<T>>;

    /// All parameters flattened in block order.
    fn to_flat(&self) -> Vec<f64> {
        self.blocks().iter().flat_map(|m| m.to_f64_vec()).collect()
    }

    fn set_flat(&mut self, flat: &[f64]) {
        let mut off = 0;
        for m in self.blocks_mut() {
            for v in m.as_mut_slice() {
                *v = T::from_f64(flat[off]);
                off += 1;
            }
        }
        assert_eq!(off, flat.len(), "flat parameter length");
    }

    fn param_norms(&self) -> Vec<f64> {
        self.blocks().iter().map(|m| m.frobenius_norm()).collect()
    }

    fn all_finite(&self) -> bool {
        self.blocks().iter().all(|m| m.all_finite())
    }
}

/// Flatten a gradient set against the model's block shapes.
pub fn flatten_grad<T: Real, P: Parameters<T>>(model: &P, grad: &GradSet) -> Vec<f64> {
    model
        .blocks()
        .iter()
        .zip(&grad.blocks)
        .flat_map(|(m, g)| g.to_dense(m.len()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Dense Adam with bias correction. Moments are kept in 64-bit for every
/// parameter; rows absent from a sparse gradient see a zero gradient.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new<T: Real, P: Parameters<T>>(cfg: AdamConfig, model: &P) -> Self {
        let sizes: Vec<usize> = model.blocks().iter().map(|m| m.len()).collect();
        Adam {
            cfg,
            step: 0,
            first: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            second: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step<T: Real, P: Parameters<T>>(&mut self, model: &mut P, grad: &GradSet) {
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.cfg;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        let blocks = model.blocks_mut();
        assert_eq!(blocks.len(), grad.blocks.len(), "gradient block count");
        for (((params, g), m), v) in blocks
            .into_iter()
            .zip(&grad.blocks)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            let cols = params.cols();
            let data = params.as_mut_slice();
            let n_rows = data_len_rows(data.len(), cols);
            let mut update = |i: usize, gi: f64| {
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let mhat = m[i] / c1;
                let vhat = v[i] / c2;
                let p = data[i].to_f64() - learning_rate * mhat / (vhat.sqrt() + epsilon);
                data[i] = T::from_f64(p);
            };
            match g {
                BlockGrad::Dense(gd) => {
                    for (i, &gi) in gd.iter().enumerate() {
                        update(i, gi);
                    }
                }
                BlockGrad::Rows(rows) => {
                    let mut next = rows.iter().peekable();
                    for r in 0..n_rows {
                        let touched = match next.peek() {
                            Some((tr, _)) if *tr == r => next.next().map(|(_, g)| g),
                            _ => None,
                        };
                        for c in 0..cols {
                            update(r * cols + c, touched.map_or(0.0, |g| g[c]));
                        }
                    }
                }
            }
        }
    }
}

fn data_len_rows(len: usize, cols: usize) -> usize {
    if cols == 0 {
        0
    } else {
        len / cols
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quad {
        x: Matrix<f64>,
    }

    impl Parameters<f64> for Quad {
        fn blocks(&self) -> Vec<&Matrix<f64>> {
            vec![&self.x]
        }
        fn blocks_mut(&mut self) -> Vec<&mut Matrix<f64>> {
            vec![&mut self.x]
        }
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut q = Quad {
            x: Matrix::from_vec(1, 2, vec![1.0, -1.0]),
        };
        let mut adam = Adam::new(
            AdamConfig {
                learning_rate: 0.1,
                ..Default::default()
            },
            &q,
        );
        adam.step(
            &mut q,
            &GradSet {
                blocks: vec![BlockGrad::Dense(vec![3.0, -0.5])],
            },
        );
        // bias-corrected first step is lr·sign(g) up to epsilon
        assert!((q.x.get(0, 0) - 0.9).abs() < 1e-6);
        assert!((q.x.get(0, 1) + 0.9).abs() < 1e-6);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut q = Quad {
            x: Matrix::from_vec(2, 1, vec![3.0, -2.0]),
        };
        let mut adam = Adam::new(
            AdamConfig {
                learning_rate: 0.05,
                ..Default::default()
            },
            &q,
        );
        for _ in 0..2000 {
            let mut rows = SparseRows::new(1);
            rows.add_row(0, &[2.0 * q.x.get(0, 0)]);
            rows.add_row(1, &[2.0 * q.x.get(1, 0)]);
            adam.step(
                &mut q,
                &GradSet {
                    blocks: vec![BlockGrad::Rows(rows)],
                },
            );
        }
        assert!(q.x.get(0, 0).abs() < 1e-3 && q.x.get(1, 0).abs() < 1e-3);
    }

    #[test]
    fn sparse_and_dense_agree() {
        let mut a = Quad {
            x: Matrix::from_vec(3, 2, vec![0.5; 6]),
        };
        let mut b = Quad {
            x: Matrix::from_vec(3, 2, vec![0.5; 6]),
        };
        let mut rows = SparseRows::new(2);
        rows.add_row(1, &[0.3, -0.2]);
        let dense = rows.to_dense(3);
        let mut oa = Adam::new(AdamConfig::default(), &a);
        let mut ob = Adam::new(AdamConfig::default(), &b);
        for _ in 0..3 {
            oa.step(
                &mut a,
                &GradSet {
                    blocks: vec![BlockGrad::Rows(rows.clone())],
                },
            );
            ob.step(
                &mut b,
                &GradSet {
                    blocks: vec![BlockGrad::Dense(dense.clone())],
                },
            );
        }
        assert_eq!(a.x, b.x);
    }
}
