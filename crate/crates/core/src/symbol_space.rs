//! Discretized phase space `Ξ = 𝔤 × 𝔤*`.
//!
//! The 𝔤-grid has `N` points per axis, `x_j = (j − N/2)·h` with `h = 2L/N`,
//! and the 𝔤*-grid is its discrete Fourier dual, `ξ_k = (k − N/2)·Δξ` with
//! `Δξ = 2π/(N·h)`. Symbol arrays have axis order `(X₁…X_d, ξ₁…ξ_d)`.

use std::f64::consts::PI;
use std::io::{self, BufRead, Write};
use std::sync::Arc;

use ndarray::{ArrayD, Axis, IxDyn};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie::MAX_DIM;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("bad grid: {0}")]
    BadGridSpec(String),
    #[error("shape error: {0}")]
    ShapeError(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    dim: usize,
    n: usize,
    half_width: f64,
}

impl PhaseSpaceGrid {
    /// `N` must be even and at least 2. `N` need not be a power of two; the
    /// FFT handles any length.
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self, GridError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(GridError::BadGridSpec(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        if n < 2 || !n.is_multiple_of(2) {
            return Err(GridError::BadGridSpec(format!("points per axis must be even and ≥ 2, got {n}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(GridError::BadGridSpec(format!("box half width must be positive, got {half_width}")));
        }
        let total = (n as f64).powi(2 * dim as i32);
        if total > 1e9 {
            return Err(GridError::BadGridSpec(format!("phase-space grid with {total:e} points is too large")));
        }
        Ok(Self { dim, n, half_width })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn box_half_width(&self) -> f64 {
        self.half_width
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI / (self.n as f64 * self.h())
    }

    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.h()
    }

    pub fn xi(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dxi()
    }

    /// `N^d`
    pub fn config_len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn config_shape(&self) -> Vec<usize> {
        vec![self.n; self.dim]
    }

    pub fn symbol_shape(&self) -> Vec<usize> {
        vec![self.n; 2 * self.dim]
    }

    /// Multi-index of a row-major flat index over `N^d`.
    pub fn unflatten(&self, mut flat: usize, out: &mut [usize]) {
        for a in (0..self.dim).rev() {
            out[a] = flat % self.n;
            flat /= self.n;
        }
    }

    /// Coordinates of the config node with the given flat index.
    pub fn node(&self, flat: usize, out: &mut [f64]) {
        let mut idx = [0usize; MAX_DIM];
        self.unflatten(flat, &mut idx[..self.dim]);
        for a in 0..self.dim {
            out[a] = self.x(idx[a]);
        }
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.config_len())
            .map(|f| {
                let mut p = vec![0.0; self.dim];
                self.node(f, &mut p);
                p
            })
            .collect()
    }

    fn check_shape(&self, values: &ArrayD<Complex64>, shape: &[usize]) -> Result<(), GridError> {
        if values.shape() != shape {
            return Err(GridError::ShapeError(format!("array shape {:?}, grid expects {:?}", values.shape(), shape)));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(GridError::ShapeError("non-finite sample".into()));
        }
        Ok(())
    }
}

pub fn make_grid(dim: usize, n: usize, half_width: f64) -> Result<PhaseSpaceGrid, GridError> {
    PhaseSpaceGrid::new(dim, n, half_width)
}

/// Samples over the 𝔤-grid, or over the 𝔤*-grid after a Fourier transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigField {
    pub grid: PhaseSpaceGrid,
    pub values: ArrayD<Complex64>,
    pub dual: bool,
}

/// Samples of a symbol over the phase-space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolField {
    pub grid: PhaseSpaceGrid,
    pub values: ArrayD<Complex64>,
}

impl ConfigField {
    pub fn new(grid: PhaseSpaceGrid, values: ArrayD<Complex64>) -> Result<Self, GridError> {
        grid.check_shape(&values, &grid.config_shape())?;
        Ok(Self { grid, values, dual: false })
    }

    pub fn zeros(grid: PhaseSpaceGrid) -> Self {
        Self { grid, values: ArrayD::zeros(IxDyn(&grid.config_shape())), dual: false }
    }

    fn cell(&self) -> f64 {
        let w = if self.dual { self.grid.dxi() } else { self.grid.h() };
        w.powi(self.grid.dim as i32)
    }

    pub fn l2_norm(&self) -> f64 {
        l2(&self.values, self.cell())
    }

    /// `⟨f, g⟩ = Σ conj(f)·g · cell`
    pub fn inner(&self, other: &Self) -> Complex64 {
        inner(&self.values, &other.values, self.cell())
    }
}

impl SymbolField {
    pub fn new(grid: PhaseSpaceGrid, values: ArrayD<Complex64>) -> Result<Self, GridError> {
        grid.check_shape(&values, &grid.symbol_shape())?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: PhaseSpaceGrid) -> Self {
        Self { grid, values: ArrayD::zeros(IxDyn(&grid.symbol_shape())) }
    }

    fn cell(&self) -> f64 {
        (self.grid.h() * self.grid.dxi()).powi(self.grid.dim as i32)
    }

    pub fn l2_norm(&self) -> f64 {
        l2(&self.values, self.cell())
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        inner(&self.values, &other.values, self.cell())
    }

    /// `‖self − other‖ / ‖other‖`
    pub fn relative_error(&self, reference: &Self) -> f64 {
        relative_l2(&self.values, &reference.values)
    }
}

fn l2(values: &ArrayD<Complex64>, cell: f64) -> f64 {
    (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell).sqrt()
}

fn inner(a: &ArrayD<Complex64>, b: &ArrayD<Complex64>, cell: f64) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum::<Complex64>() * cell
}

/// Relative L² distance of two equally shaped arrays (weights cancel).
pub fn relative_l2(values: &ArrayD<Complex64>, reference: &ArrayD<Complex64>) -> f64 {
    let num: f64 = values.iter().zip(reference.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = reference.iter().map(|b| b.norm_sqr()).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

pub fn sample_symbol(grid: &PhaseSpaceGrid, f: impl Fn(&[f64], &[f64]) -> Complex64) -> SymbolField {
    let d = grid.dim;
    let len = grid.config_len();
    let mut x = vec![0.0; d];
    let mut xi = vec![0.0; d];
    let mut idx = vec![0usize; d];
    let mut values = Vec::with_capacity(len * len);
    for fx in 0..len {
        grid.node(fx, &mut x);
        for fk in 0..len {
            grid.unflatten(fk, &mut idx);
            for a in 0..d {
                xi[a] = grid.xi(idx[a]);
            }
            values.push(f(&x, &xi));
        }
    }
    SymbolField { grid: *grid, values: ArrayD::from_shape_vec(IxDyn(&grid.symbol_shape()), values).expect("shape") }
}

pub fn sample_config(grid: &PhaseSpaceGrid, f: impl Fn(&[f64]) -> Complex64) -> ConfigField {
    let mut x = vec![0.0; grid.dim];
    let values = (0..grid.config_len())
        .map(|fx| {
            grid.node(fx, &mut x);
            f(&x)
        })
        .collect();
    ConfigField {
        grid: *grid,
        values: ArrayD::from_shape_vec(IxDyn(&grid.config_shape()), values).expect("shape"),
        dual: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `(2π)^{−1/2} ∫ e^{−iξx} · dx`, 𝔤-grid to 𝔤*-grid.
    Forward,
    /// `(2π)^{−1/2} ∫ e^{+iξx} · dξ`, 𝔤*-grid to 𝔤-grid.
    Inverse,
}

/// Centered-grid unitary Fourier transform along each of `axes`.
///
/// With `ξ_k x_j = (2π/N)(k − N/2)(j − N/2)` the centered sum becomes a
/// plain DFT after multiplying by `(−1)^j` before and `(−1)^{k+N/2}` after.
pub fn fourier_axes(values: &mut ArrayD<Complex64>, axes: &[usize], grid: &PhaseSpaceGrid, direction: Direction) {
    let n = grid.n;
    let mut planner = FftPlanner::<f64>::new();
    let fft: Arc<dyn Fft<f64>> = match direction {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    };
    let scale = match direction {
        Direction::Forward => grid.h(),
        Direction::Inverse => grid.dxi(),
    } / (2.0 * PI).sqrt();
    let post_sign = if (n / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for &ax in axes {
        for mut lane in values.lanes_mut(Axis(ax)) {
            for (j, (b, v)) in buf.iter_mut().zip(lane.iter()).enumerate() {
                *b = if j % 2 == 0 { *v } else { -*v };
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for (k, (v, b)) in lane.iter_mut().zip(&buf).enumerate() {
                let s = if k % 2 == 0 { post_sign } else { -post_sign };
                *v = b * (s * scale);
            }
        }
    }
}

/// `F_𝔤` (forward) or `F_𝔤⁻¹` on a config field.
pub fn fourier_g(field: &ConfigField, direction: Direction) -> ConfigField {
    let mut values = field.values.clone();
    let axes: Vec<usize> = (0..field.grid.dim).collect();
    fourier_axes(&mut values, &axes, &field.grid, direction);
    ConfigField { grid: field.grid, values, dual: direction == Direction::Forward }
}

/// Exchanges the `X` and `ξ` axis blocks.
pub fn swap_blocks(values: &ArrayD<Complex64>, dim: usize) -> ArrayD<Complex64> {
    let perm: Vec<usize> = (dim..2 * dim).chain(0..dim).collect();
    values.view().permuted_axes(IxDyn(&perm)).as_standard_layout().into_owned()
}

/// `F_Ξ = ι*(F_𝔤 ⊗ F_𝔤⁻¹)`, an involution.
pub fn symplectic_fourier(a: &SymbolField) -> SymbolField {
    let d = a.grid.dim;
    let mut values = a.values.clone();
    fourier_axes(&mut values, &(0..d).collect::<Vec<_>>(), &a.grid, Direction::Forward);
    fourier_axes(&mut values, &(d..2 * d).collect::<Vec<_>>(), &a.grid, Direction::Inverse);
    SymbolField { grid: a.grid, values: swap_blocks(&values, d) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub kind: String,
    pub dim: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub axis_order: Vec<String>,
}

impl DumpHeader {
    pub fn new(kind: &str, grid: &PhaseSpaceGrid) -> Self {
        let d = grid.dim;
        let axis_order = match kind {
            "symbol" => (1..=d).map(|i| format!("X{i}")).chain((1..=d).map(|i| format!("xi{i}"))).collect(),
            "kernel" => (1..=d).map(|i| format!("Y{i}")).chain((1..=d).map(|i| format!("Z{i}"))).collect(),
            _ => (1..=d).map(|i| format!("X{i}")).collect(),
        };
        Self { kind: kind.to_string(), dim: d, n: grid.n, half_width: grid.half_width, axis_order }
    }
}

/// JSON header line, then little-endian `f32` (re, im) pairs in row-major order.
pub fn write_dump<'a>(
    mut w: impl Write,
    header: &DumpHeader,
    values: impl IntoIterator<Item = &'a Complex64>,
) -> io::Result<()> {
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    let mut bytes = Vec::new();
    for v in values {
        bytes.extend_from_slice(&(v.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    w.write_all(&bytes)
}

pub fn read_dump(mut r: impl BufRead) -> io::Result<(DumpHeader, Vec<Complex64>)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: DumpHeader = serde_json::from_str(line.trim_end()).map_err(io::Error::other)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "truncated complex64 payload"));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().expect("4 bytes"));
            let im = f32::from_le_bytes(c[4..].try_into().expect("4 bytes"));
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    Ok((header, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing() {
        let g = make_grid(1, 8, 4.0).unwrap();
        assert_eq!(g.h(), 1.0);
        assert!((g.dxi() - 2.0 * PI / 8.0).abs() < 1e-15);
        assert_eq!(g.x(0), -4.0);
        assert_eq!(g.x(4), 0.0);
        let g = make_grid(3, 8, 6.0).unwrap();
        assert_eq!(g.config_len(), 512);
        assert_eq!(g.symbol_shape(), vec![8; 6]);
        assert!(matches!(make_grid(1, 7, 1.0), Err(GridError::BadGridSpec(_))));
        assert!(matches!(make_grid(1, 8, 0.0), Err(GridError::BadGridSpec(_))));
    }

    #[test]
    fn all_ones_norm() {
        let g = make_grid(1, 2, 1.0).unwrap();
        let a = sample_symbol(&g, |_, _| Complex64::new(1.0, 0.0));
        assert!((a.l2_norm().powi(2) - 4.0 * g.h() * g.dxi()).abs() < 1e-14);
    }

    #[test]
    fn odd_symbol_sums_to_boundary_row() {
        // On the centered grid only x = −L has no mirror partner.
        let g = make_grid(1, 8, 4.0).unwrap();
        let a = sample_config(&g, |x| Complex64::new(x[0], 0.0));
        let s: Complex64 = a.values.iter().sum();
        assert_eq!(s.re, g.x(0));
    }

    #[test]
    fn dump_round_trip() {
        let g = make_grid(1, 4, 2.0).unwrap();
        let a = sample_symbol(&g, |x, xi| Complex64::new(x[0], xi[0]));
        let mut buf = Vec::new();
        write_dump(&mut buf, &DumpHeader::new("symbol", &g), a.values.iter()).unwrap();
        let (h, v) = read_dump(&buf[..]).unwrap();
        assert_eq!(h.axis_order, vec!["X1", "xi1"]);
        assert_eq!(v.len(), 16);
        assert!((v[5] - a.values.as_slice().unwrap()[5]).norm() < 1e-6);
    }
}
