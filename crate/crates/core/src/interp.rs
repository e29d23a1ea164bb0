//! Off-grid evaluation of grid samples.
//!
//! Everything is separable: a point gets a short list of `(index, weight)`
//! pairs per axis and the value is the tensor-product contraction.

use std::f64::consts::PI;

use ndarray::ArrayD;
use num_complex::Complex64;

use crate::lie::MAX_DIM;
use crate::symbol_space::{ConfigField, PhaseSpaceGrid};

/// Closeness to a node below which a coordinate counts as on-grid.
pub const NODE_TOL: f64 = 1e-9;

/// Uniform 1-D node set `x_j = origin + j·spacing`, `j = 0..len`.
#[derive(Debug, Clone, Copy)]
pub struct Axis1 {
    pub origin: f64,
    pub spacing: f64,
    pub len: usize,
}

impl Axis1 {
    pub fn grid(grid: &PhaseSpaceGrid) -> Self {
        Self { origin: grid.x(0), spacing: grid.h(), len: grid.points_per_axis() }
    }

    /// The grid refined by a factor of two; even indices are the original nodes.
    pub fn half_grid(grid: &PhaseSpaceGrid) -> Self {
        Self { origin: grid.x(0), spacing: 0.5 * grid.h(), len: 2 * grid.points_per_axis() }
    }

    pub fn node(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing
    }

    /// Index of the node `x` sits on, if any.
    pub fn exact_index(&self, x: f64) -> Option<usize> {
        let u = (x - self.origin) / self.spacing;
        let r = u.round();
        if (u - r).abs() <= NODE_TOL && r >= 0.0 && (r as usize) < self.len {
            Some(r as usize)
        } else {
            None
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let u = (x - self.origin) / self.spacing;
        u >= -NODE_TOL && u <= (self.len - 1) as f64 + NODE_TOL
    }
}

/// Weights of the periodic trigonometric interpolant on an even-length
/// uniform grid, with the Nyquist mode taken as a cosine:
/// `w_j(x) = sin(Nθ/2)·cot(θ/2)/N`, `θ = 2π(x − x_j)/(N·h)`.
pub fn trig_weights(axis: &Axis1, x: f64, out: &mut Vec<(usize, f64)>) {
    out.clear();
    if let Some(j) = axis.exact_index(x) {
        out.push((j, 1.0));
        return;
    }
    let n = axis.len as f64;
    for j in 0..axis.len {
        let delta = x - axis.node(j);
        let half = PI * delta / (n * axis.spacing);
        let s = half.sin();
        let w = if s.abs() < 1e-15 { 1.0 } else { (n * half).sin() * half.cos() / (s * n) };
        out.push((j, w));
    }
}

/// Derivatives of [`trig_weights`] with respect to `x`.
pub fn trig_weight_derivatives(axis: &Axis1, x: f64, out: &mut Vec<(usize, f64)>) {
    out.clear();
    let n = axis.len as f64;
    let k = PI / axis.spacing;
    for j in 0..axis.len {
        let delta = x - axis.node(j);
        let half = PI * delta / (n * axis.spacing);
        let s = half.sin();
        let dw = if s.abs() < 1e-12 {
            0.0
        } else {
            let big = k * delta;
            k / n * (big.cos() * half.cos() / s - big.sin() / (n * s * s))
        };
        out.push((j, dw));
    }
}

/// Cubic Lagrange weights, degrading to linear next to the ends and to an
/// empty list outside the node range.
pub fn lagrange_weights(axis: &Axis1, x: f64, cubic: bool, out: &mut Vec<(usize, f64)>) {
    out.clear();
    if let Some(j) = axis.exact_index(x) {
        out.push((j, 1.0));
        return;
    }
    if !axis.contains(x) {
        return;
    }
    let u = (x - axis.origin) / axis.spacing;
    let i = (u.floor() as isize).clamp(0, axis.len as isize - 2) as usize;
    let t = u - i as f64;
    if cubic && i >= 1 && i + 2 < axis.len {
        out.push((i - 1, -t * (t - 1.0) * (t - 2.0) / 6.0));
        out.push((i, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0));
        out.push((i + 1, -(t + 1.0) * t * (t - 2.0) / 2.0));
        out.push((i + 2, (t + 1.0) * t * (t - 1.0) / 6.0));
    } else {
        out.push((i, 1.0 - t));
        out.push((i + 1, t));
    }
}

/// `Σ Π_a w_a · values[idx]` over the tensor product of per-axis weight
/// lists. `strides` are in elements of `values`; `base` offsets the start.
pub fn contract(values: &[Complex64], base: usize, strides: &[usize], weights: &[Vec<(usize, f64)>]) -> Complex64 {
    fn rec(values: &[Complex64], offset: usize, strides: &[usize], weights: &[Vec<(usize, f64)>]) -> Complex64 {
        match weights.split_first() {
            None => values[offset],
            Some((first, rest)) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(j, w) in first {
                    acc += rec(values, offset + j * strides[0], &strides[1..], rest) * w;
                }
                acc
            }
        }
    }
    if weights.iter().any(Vec::is_empty) {
        return Complex64::new(0.0, 0.0);
    }
    rec(values, base, strides, weights)
}

pub fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * shape[a + 1];
    }
    strides
}

/// Periodic trigonometric interpolant of a config field; it reproduces the
/// samples at the nodes and is evaluated exactly anywhere else.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    axis: Axis1,
    dim: usize,
    values: Vec<Complex64>,
    strides: Vec<usize>,
}

impl TrigInterpolant {
    pub fn new(field: &ConfigField) -> Self {
        let grid = field.grid;
        Self {
            axis: Axis1::grid(&grid),
            dim: grid.dim(),
            values: field.values.iter().copied().collect(),
            strides: row_major_strides(&grid.config_shape()),
        }
    }

    pub fn eval(&self, y: &[f64]) -> Complex64 {
        let weights: Vec<Vec<(usize, f64)>> = y
            .iter()
            .map(|&c| {
                let mut w = Vec::new();
                trig_weights(&self.axis, c, &mut w);
                w
            })
            .collect();
        contract(&self.values, 0, &self.strides, &weights)
    }

    pub fn gradient(&self, y: &[f64]) -> [Complex64; MAX_DIM] {
        let d = self.dim;
        let mut w: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d];
        let mut dw: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d];
        for a in 0..d {
            // dense weights so that derivatives at nodes are not lost
            let mut full = Vec::new();
            trig_weights(&self.axis, y[a], &mut full);
            if full.len() == 1 {
                let j = full[0].0;
                full = (0..self.axis.len).map(|i| (i, if i == j { 1.0 } else { 0.0 })).collect();
            }
            w[a] = full;
            trig_weight_derivatives(&self.axis, y[a], &mut dw[a]);
        }
        let mut out = [Complex64::new(0.0, 0.0); MAX_DIM];
        for (a, o) in out.iter_mut().enumerate().take(d) {
            let mut ws = w.clone();
            ws[a] = dw[a].clone();
            *o = contract(&self.values, 0, &self.strides, &ws);
        }
        out
    }
}

/// Refines the listed axes of `values` to the half grid by trigonometric
/// interpolation. Each refined axis must have length `grid.N`.
pub fn refine_to_half_grid(values: &ArrayD<Complex64>, axes: &[usize], grid: &PhaseSpaceGrid) -> ArrayD<Complex64> {
    let coarse = Axis1::grid(grid);
    let fine = Axis1::half_grid(grid);
    let n = coarse.len;
    // weights[i] over coarse nodes for fine node i
    let mut matrix = vec![0.0; 2 * n * n];
    let mut w = Vec::new();
    for i in 0..2 * n {
        trig_weights(&coarse, fine.node(i), &mut w);
        for &(j, v) in &w {
            matrix[i * n + j] = v;
        }
    }
    let mut current = values.clone();
    for &ax in axes {
        let mut shape = current.shape().to_vec();
        shape[ax] = 2 * n;
        let mut next = ArrayD::<Complex64>::zeros(shape);
        for (src, mut dst) in current.lanes(ndarray::Axis(ax)).into_iter().zip(next.lanes_mut(ndarray::Axis(ax))) {
            for (i, d) in dst.iter_mut().enumerate() {
                let row = &matrix[i * n..(i + 1) * n];
                *d = src.iter().zip(row).map(|(s, &m)| s * m).sum();
            }
        }
        current = next;
    }
    current
}
