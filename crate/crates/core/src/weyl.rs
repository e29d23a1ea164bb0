//! The magnetic Weyl calculus on the grid: the representation `π`, operator
//! kernels `K_a`, the symbol–kernel bijection and the magnetic Moyal product.
//!
//! Normalization: `K_a(Y, Z) = α_A(Y, Z)·b(m(Y, Z), Y∗(−Z))` where
//! `b = (1⊗F_𝔤⁻¹)a` uses the unitary Fourier transform and
//! `m(Y, Z) = ∫₀¹ (s(Z∗(−Y)))∗Y ds`. With this choice `a ↦ K_a` is unitary
//! from `L²(𝔤×𝔤*)` to `L²(𝔤×𝔤)`; the classical Weyl kernel carries an
//! extra `(2π)^{−d/2}`.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayD, IxDyn};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::interp::{self, Axis1, NODE_TOL};
use crate::lie::{dot, NilpotentLieAlgebra, MAX_DIM};
use crate::magnetic::{self, MagneticError, MagneticPotential};
use crate::quadrature::exact_rule_for_degree;
use crate::symbol_space::{fourier_axes, ConfigField, Direction, PhaseSpaceGrid, SymbolField};

/// Largest refined table `symbol_from_kernel` will allocate (complex entries).
const MAX_REFINED_ENTRIES: usize = 1 << 26;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeylError {
    #[error("shape error: {0}")]
    ShapeError(String),
    #[error("operation needs a two-step algebra, nilpotency index is {index}")]
    WrongClass { index: usize },
    #[error(transparent)]
    Magnetic(#[from] MagneticError),
}

/// How off-grid samples of kernels and symbols are reconstructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffGrid {
    /// Cubic Lagrange on the half grid for `m(Y, Z)`, trigonometric
    /// interpolation for kernels.
    #[default]
    Accurate,
    /// Multilinear interpolation everywhere.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeylFlags {
    /// On two-step algebras, take `m(Y, Z) = (Y + Z)/2` and
    /// `Σ⁻¹(X, T) = ((T/2)∗X, (−T/2)∗X)` without quadrature.
    pub use_twostep_fastpath: bool,
    pub offgrid: OffGrid,
}

impl Default for WeylFlags {
    fn default() -> Self {
        Self { use_twostep_fastpath: true, offgrid: OffGrid::Accurate }
    }
}

#[derive(Debug, Clone)]
pub struct WeylContext {
    pub algebra: NilpotentLieAlgebra,
    pub potential: MagneticPotential,
    pub grid: PhaseSpaceGrid,
    pub flags: WeylFlags,
    free_axes: Vec<bool>,
}

impl WeylContext {
    pub fn new(algebra: NilpotentLieAlgebra, potential: MagneticPotential, grid: PhaseSpaceGrid) -> Result<Self, WeylError> {
        if grid.dim() != algebra.dim() || potential.dim() != algebra.dim() {
            return Err(WeylError::ShapeError(format!(
                "algebra has dimension {}, potential {}, grid {}",
                algebra.dim(),
                potential.dim(),
                grid.dim()
            )));
        }
        let free_axes = algebra.bracket_free_axes();
        Ok(Self { algebra, potential, grid, flags: WeylFlags::default(), free_axes })
    }

    pub fn with_flags(mut self, flags: WeylFlags) -> Self {
        self.flags = flags;
        self
    }

    /// Same algebra and grid, different potential.
    pub fn with_potential(&self, potential: MagneticPotential) -> Result<Self, WeylError> {
        Ok(Self::new(self.algebra.clone(), potential, self.grid)?.with_flags(self.flags))
    }

    fn dim(&self) -> usize {
        self.algebra.dim()
    }

    fn fastpath(&self) -> bool {
        self.flags.use_twostep_fastpath && self.algebra.is_two_step()
    }

    fn midpoint(&self, y: &[f64], z: &[f64], out: &mut [f64]) {
        if self.fastpath() {
            for i in 0..self.dim() {
                out[i] = 0.5 * (y[i] + z[i]);
            }
        } else {
            self.algebra.segment_midpoint_into(y, z, out);
        }
    }

    /// `(Y, Z)` with `m(Y, Z) = X` and `Y∗(−Z) = T`.
    pub fn sigma_inverse(&self, x: &[f64], t: &[f64], y: &mut [f64], z: &mut [f64]) {
        let d = self.dim();
        let mut a = [0.0; MAX_DIM];
        let mut b = [0.0; MAX_DIM];
        if self.fastpath() {
            for i in 0..d {
                a[i] = 0.5 * t[i];
            }
            self.algebra.bch_into(&a[..d], x, y);
            for i in 0..d {
                a[i] = -a[i];
            }
            self.algebra.bch_into(&a[..d], x, z);
        } else {
            for i in 0..d {
                b[i] = -x[i];
            }
            self.algebra.psi_inverse_into(t, &b[..d], &mut a[..d]);
            for i in 0..d {
                y[i] = -a[i];
                b[i] = -t[i];
            }
            self.algebra.bch_into(&b[..d], y, z);
        }
    }

    fn alpha_exponent(&self, y: &[f64], z: &[f64]) -> f64 {
        magnetic::alpha_exponent(&self.algebra, &self.potential, y, z)
    }

    fn check_grid(&self, grid: &PhaseSpaceGrid) -> Result<(), WeylError> {
        if *grid != self.grid {
            return Err(WeylError::ShapeError("field lives on a different grid".into()));
        }
        Ok(())
    }
}

/// Kernel `K(Y, Z)` over the 𝔤-grid squared; rows are `Y`, columns `Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralKernel {
    pub grid: PhaseSpaceGrid,
    pub values: Array2<Complex64>,
}

impl IntegralKernel {
    pub fn new(grid: PhaseSpaceGrid, values: Array2<Complex64>) -> Result<Self, WeylError> {
        let len = grid.config_len();
        if values.dim() != (len, len) {
            return Err(WeylError::ShapeError(format!("kernel shape {:?}, grid expects ({len}, {len})", values.dim())));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: PhaseSpaceGrid) -> Self {
        let len = grid.config_len();
        Self { grid, values: Array2::zeros((len, len)) }
    }

    /// The kernel of `h^{−d}·identity`, i.e. the discrete delta.
    pub fn identity(grid: PhaseSpaceGrid) -> Self {
        let len = grid.config_len();
        let w = grid.h().powi(-(grid.dim() as i32));
        Self { grid, values: Array2::from_diag_elem(len, Complex64::new(w, 0.0)) }
    }

    pub fn l2_norm(&self) -> f64 {
        let cell = self.grid.h().powi(2 * self.grid.dim() as i32);
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell).sqrt()
    }

    /// `K*(Y, Z) = conj K(Z, Y)`
    pub fn adjoint(&self) -> Self {
        Self { grid: self.grid, values: self.values.t().mapv(|v| v.conj()) }
    }

    pub fn relative_error(&self, reference: &Self) -> f64 {
        let num: f64 = self.values.iter().zip(reference.values.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = reference.values.iter().map(|b| b.norm_sqr()).sum();
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}

/// `(Kf)(Y) = h^d Σ_Z K(Y, Z) f(Z)`
pub fn apply_operator(k: &IntegralKernel, f: &ConfigField) -> Result<ConfigField, WeylError> {
    if k.grid != f.grid || f.dual {
        return Err(WeylError::ShapeError("kernel and field grids differ".into()));
    }
    let flat: Vec<Complex64> = f.values.iter().copied().collect();
    let v = ndarray::Array1::from(flat);
    let out = k.values.dot(&v) * Complex64::new(k.grid.h().powi(k.grid.dim() as i32), 0.0);
    let values = ArrayD::from_shape_vec(IxDyn(&f.grid.config_shape()), out.to_vec()).expect("shape");
    Ok(ConfigField { grid: f.grid, values, dual: false })
}

/// Kernel of the operator product: `h^d·K₁K₂`.
pub fn compose_kernels(k1: &IntegralKernel, k2: &IntegralKernel) -> Result<IntegralKernel, WeylError> {
    if k1.grid != k2.grid {
        return Err(WeylError::ShapeError("kernels live on different grids".into()));
    }
    let w = Complex64::new(k1.grid.h().powi(k1.grid.dim() as i32), 0.0);
    Ok(IntegralKernel { grid: k1.grid, values: k1.values.dot(&k2.values) * w })
}

/// Samples of `(1⊗F_𝔤⁻¹)a` arranged for off-grid evaluation.
///
/// Bracket-free coordinates of `Y∗(−Z)` are differences of grid nodes, so the
/// corresponding ξ axes are transformed to the 𝔤-grid by FFT. The other ξ
/// axes keep scaled Fourier coefficients and are summed exactly at the
/// requested point.
struct PartialInverse {
    values: Vec<Complex64>,
    strides: Vec<usize>,
    row_axes: Vec<Axis1>,
    col_axis: Axis1,
    free: Vec<bool>,
    xis: Vec<f64>,
    dxi: f64,
    half_width: f64,
}

impl PartialInverse {
    /// `refine[i]` puts row axis `i` on the half grid.
    fn new(ctx: &WeylContext, a: &SymbolField, refine: &[bool]) -> Self {
        let grid = ctx.grid;
        let d = grid.dim();
        let refined: Vec<usize> = (0..d).filter(|&i| refine[i]).collect();
        let mut values = if refined.is_empty() {
            a.values.clone()
        } else {
            interp::refine_to_half_grid(&a.values, &refined, &grid)
        };
        let free_xi: Vec<usize> = (0..d).filter(|&i| ctx.free_axes[i]).map(|i| d + i).collect();
        fourier_axes(&mut values, &free_xi, &grid, Direction::Inverse);
        let bound = d - free_xi.len();
        if bound > 0 {
            let s = (grid.dxi() / (2.0 * PI).sqrt()).powi(bound as i32);
            values.mapv_inplace(|v| v * s);
        }
        let strides = interp::row_major_strides(values.shape());
        Self {
            values: values.into_raw_vec_and_offset().0,
            strides,
            row_axes: refine.iter().map(|&r| if r { Axis1::half_grid(&grid) } else { Axis1::grid(&grid) }).collect(),
            col_axis: Axis1::grid(&grid),
            free: ctx.free_axes.clone(),
            xis: (0..grid.points_per_axis()).map(|k| grid.xi(k)).collect(),
            dxi: grid.dxi(),
            half_width: grid.box_half_width(),
        }
    }

    /// `b(m, w)`, with `m` given through per-axis row weights.
    fn eval(&self, row_weights: &[Vec<(usize, f64)>], w: &[f64], scratch: &mut Scratch) -> Complex64 {
        let d = row_weights.len();
        for (a, rw) in row_weights.iter().enumerate() {
            let slot = &mut scratch.weights[a];
            slot.clear();
            slot.extend(rw.iter().map(|&(j, v)| (j, Complex64::new(v, 0.0))));
        }
        for a in 0..d {
            let wa = w[a];
            if wa.abs() > self.half_width + NODE_TOL {
                return Complex64::new(0.0, 0.0);
            }
            let slot = &mut scratch.weights[d + a];
            slot.clear();
            if self.free[a] {
                interp::trig_weights(&self.col_axis, wa, &mut scratch.real);
                slot.extend(scratch.real.iter().map(|&(j, v)| (j, Complex64::new(v, 0.0))));
            } else {
                let step = Complex64::from_polar(1.0, self.dxi * wa);
                let mut phase = Complex64::from_polar(1.0, self.xis[0] * wa);
                slot.push((0, Complex64::new(phase.re, 0.0)));
                for k in 1..self.xis.len() {
                    phase *= step;
                    slot.push((k, phase));
                }
            }
        }
        contract_complex(&self.values, 0, &self.strides, &scratch.weights[..2 * d])
    }
}

struct Scratch {
    weights: Vec<Vec<(usize, Complex64)>>,
    real: Vec<(usize, f64)>,
}

impl Scratch {
    fn new(axes: usize) -> Self {
        Self { weights: vec![Vec::new(); axes], real: Vec::new() }
    }
}

fn contract_complex(values: &[Complex64], offset: usize, strides: &[usize], weights: &[Vec<(usize, Complex64)>]) -> Complex64 {
    match weights.split_first() {
        None => values[offset],
        Some((first, rest)) => {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(j, w) in first {
                acc += contract_complex(values, offset + j * strides[0], &strides[1..], rest) * w;
            }
            acc
        }
    }
}

fn flat_nodes(grid: &PhaseSpaceGrid) -> Vec<f64> {
    grid.nodes().into_iter().flatten().collect()
}

/// `K_a(Y, Z) = α_A(Y, Z)·(1⊗F_𝔤⁻¹)a(m(Y, Z), Y∗(−Z))` on the grid.
///
/// `a` is refined to the half grid in `X` once; in two-step algebras every
/// midpoint lands on it. Entries whose arguments leave the box are zero.
pub fn kernel_from_symbol(ctx: &WeylContext, a: &SymbolField) -> Result<IntegralKernel, WeylError> {
    ctx.check_grid(&a.grid)?;
    let grid = ctx.grid;
    let d = grid.dim();
    let len = grid.config_len();
    let table = PartialInverse::new(ctx, a, &vec![true; d]);
    let nodes = flat_nodes(&grid);
    let cubic = ctx.flags.offgrid == OffGrid::Accurate;
    let magnetic = !ctx.potential.is_zero();
    let mut values = vec![Complex64::new(0.0, 0.0); len * len];
    values.par_chunks_mut(len).enumerate().for_each(|(iy, row)| {
        let y = &nodes[iy * d..(iy + 1) * d];
        let mut scratch = Scratch::new(2 * d);
        let mut row_w: Vec<Vec<(usize, f64)>> = vec![Vec::new(); d];
        let mut neg = [0.0; MAX_DIM];
        let mut t = [0.0; MAX_DIM];
        let mut m = [0.0; MAX_DIM];
        for (iz, out) in row.iter_mut().enumerate() {
            let z = &nodes[iz * d..(iz + 1) * d];
            for i in 0..d {
                neg[i] = -z[i];
            }
            ctx.algebra.bch_into(y, &neg[..d], &mut t[..d]);
            ctx.midpoint(y, z, &mut m[..d]);
            let mut inside = true;
            for i in 0..d {
                interp::lagrange_weights(&table.row_axes[i], m[i], cubic, &mut row_w[i]);
                inside &= !row_w[i].is_empty();
            }
            if !inside {
                continue;
            }
            let mut v = table.eval(&row_w, &t[..d], &mut scratch);
            if magnetic && v != Complex64::new(0.0, 0.0) {
                v *= Complex64::from_polar(1.0, ctx.alpha_exponent(y, z));
            }
            *out = v;
        }
    });
    IntegralKernel::new(grid, Array2::from_shape_vec((len, len), values).expect("shape"))
}

/// Inverse of [`kernel_from_symbol`]: `a(X, ·) = F_𝔤[T ↦ (α_A⁻¹K)(Σ⁻¹(X, T))]`.
///
/// `α_A⁻¹K` is interpolated rather than `K` itself, so the result does not
/// see the gauge. Bracket-free coordinates of `Σ⁻¹` sit on the half grid and
/// are read from an FFT-refined table; the others are interpolated.
pub fn symbol_from_kernel(ctx: &WeylContext, k: &IntegralKernel) -> Result<SymbolField, WeylError> {
    ctx.check_grid(&k.grid)?;
    let grid = ctx.grid;
    let d = grid.dim();
    let n = grid.points_per_axis();
    let len = grid.config_len();
    let nodes = flat_nodes(&grid);

    let mut g: Vec<Complex64> = k.values.iter().copied().collect();
    if !ctx.potential.is_zero() {
        g.par_chunks_mut(len).enumerate().for_each(|(iy, row)| {
            let y = &nodes[iy * d..(iy + 1) * d];
            for (iz, v) in row.iter_mut().enumerate() {
                if *v != Complex64::new(0.0, 0.0) {
                    let z = &nodes[iz * d..(iz + 1) * d];
                    *v *= Complex64::from_polar(1.0, -ctx.alpha_exponent(y, z));
                }
            }
        });
    }
    let g = ArrayD::from_shape_vec(IxDyn(&vec![n; 2 * d]), g).expect("shape");

    let accurate = ctx.flags.offgrid == OffGrid::Accurate;
    let mut refine: Vec<usize> = Vec::new();
    if accurate {
        let free: Vec<usize> = (0..d).filter(|&i| ctx.free_axes[i]).collect();
        let size = (2 * n).pow(2 * free.len() as u32) * n.pow(2 * (d - free.len()) as u32);
        if size <= MAX_REFINED_ENTRIES {
            refine = free.iter().copied().chain(free.iter().map(|&i| d + i)).collect();
        }
    }
    let table = if refine.is_empty() { g } else { interp::refine_to_half_grid(&g, &refine, &grid) };
    let axes: Vec<Axis1> =
        (0..2 * d).map(|ax| if refine.contains(&ax) { Axis1::half_grid(&grid) } else { Axis1::grid(&grid) }).collect();
    let strides = interp::row_major_strides(table.shape());
    let tv = table.as_slice().expect("standard layout");
    let half_width = grid.box_half_width();

    let mut c = vec![Complex64::new(0.0, 0.0); len * len];
    c.par_chunks_mut(len).enumerate().for_each(|(ix, row)| {
        let x = &nodes[ix * d..(ix + 1) * d];
        let mut y = [0.0; MAX_DIM];
        let mut z = [0.0; MAX_DIM];
        let mut weights: Vec<Vec<(usize, f64)>> = vec![Vec::new(); 2 * d];
        for (it, out) in row.iter_mut().enumerate() {
            let t = &nodes[it * d..(it + 1) * d];
            ctx.sigma_inverse(x, t, &mut y[..d], &mut z[..d]);
            let mut inside = true;
            for (ax, w) in weights.iter_mut().enumerate() {
                let coord = if ax < d { y[ax] } else { z[ax - d] };
                if coord.abs() > half_width + NODE_TOL {
                    inside = false;
                    break;
                }
                if accurate {
                    interp::trig_weights(&axes[ax], coord, w);
                } else {
                    interp::lagrange_weights(&axes[ax], coord, false, w);
                }
            }
            if inside {
                *out = interp::contract(tv, 0, &strides, &weights);
            }
        }
    });
    let mut c = ArrayD::from_shape_vec(IxDyn(&vec![n; 2 * d]), c).expect("shape");
    fourier_axes(&mut c, &(d..2 * d).collect::<Vec<_>>(), &grid, Direction::Forward);
    SymbolField::new(grid, c).map_err(|e| WeylError::ShapeError(e.to_string()))
}

/// `a #^A b` through kernels: invert `K_a K_b`.
pub fn moyal_product(ctx: &WeylContext, a: &SymbolField, b: &SymbolField) -> Result<SymbolField, WeylError> {
    let ka = kernel_from_symbol(ctx, a)?;
    let kb = kernel_from_symbol(ctx, b)?;
    symbol_from_kernel(ctx, &compose_kernels(&ka, &kb)?)
}

/// `(a #^A b)(X, ξ)` from the explicit two-step product integral.
///
/// The inner `ζ, τ` integrals are partial inverse Fourier transforms of `a`
/// and `b`; what remains is a Riemann sum over half-grid nodes `z, t` (the
/// midpoints of the two factors) with `Z = z + t − X`,
/// `T = 2(z − t) + [X, z − t]` and Jacobian `4^d`. The phase is the flux
/// cocycle `α⁻¹(Y', Z')α(Y', Z)α(Z, Z')` with `Y' = (T/2)∗X`, `Z' = (−T/2)∗X`.
pub fn moyal_2step_point(
    ctx: &WeylContext,
    a: &SymbolField,
    b: &SymbolField,
    x: &[f64],
    xi: &[f64],
) -> Result<Complex64, WeylError> {
    if !ctx.algebra.is_two_step() {
        return Err(WeylError::WrongClass { index: ctx.algebra.nilpotency_class() });
    }
    ctx.check_grid(&a.grid)?;
    ctx.check_grid(&b.grid)?;
    let grid = ctx.grid;
    let d = grid.dim();
    // on the grid itself the sum aliases: the phase e^{−i⟨ξ,T⟩} shifts the
    // narrow factors in `t` towards the lattice frequency
    let refine = vec![true; d];
    let ta = PartialInverse::new(ctx, a, &refine);
    let tb = PartialInverse::new(ctx, b, &refine);
    let axes = &ta.row_axes;
    let count: usize = axes.iter().map(|ax| ax.len).product();
    let mut lattice = vec![0.0; count * d];
    let mut lattice_idx = vec![0usize; count * d];
    for p in 0..count {
        let mut rem = p;
        for i in (0..d).rev() {
            let j = rem % axes[i].len;
            rem /= axes[i].len;
            lattice_idx[p * d + i] = j;
            lattice[p * d + i] = axes[i].node(j);
        }
    }
    let alg = &ctx.algebra;
    let magnetic = !ctx.potential.is_zero();

    let partial: Vec<Complex64> = (0..count)
        .into_par_iter()
        .map(|iz| {
            let z = &lattice[iz * d..(iz + 1) * d];
            let zw: Vec<Vec<(usize, f64)>> = (0..d).map(|i| vec![(lattice_idx[iz * d + i], 1.0)]).collect();
            let mut tw: Vec<Vec<(usize, f64)>> = vec![vec![(0, 1.0)]; d];
            let mut scratch = Scratch::new(2 * d);
            let mut zc = [0.0; MAX_DIM];
            let mut diff = [0.0; MAX_DIM];
            let mut br = [0.0; MAX_DIM];
            let mut big_t = [0.0; MAX_DIM];
            let mut half = [0.0; MAX_DIM];
            let mut yp = [0.0; MAX_DIM];
            let mut zp = [0.0; MAX_DIM];
            let mut neg = [0.0; MAX_DIM];
            let mut w1 = [0.0; MAX_DIM];
            let mut w2 = [0.0; MAX_DIM];
            let mut acc = Complex64::new(0.0, 0.0);
            for it in 0..count {
                let t = &lattice[it * d..(it + 1) * d];
                for i in 0..d {
                    zc[i] = z[i] + t[i] - x[i];
                    diff[i] = z[i] - t[i];
                }
                alg.bracket_into(x, &diff[..d], &mut br[..d]);
                for i in 0..d {
                    big_t[i] = 2.0 * diff[i] + br[i];
                    half[i] = 0.5 * big_t[i];
                }
                alg.bch_into(&half[..d], x, &mut yp[..d]);
                for i in 0..d {
                    half[i] = -half[i];
                    neg[i] = -zc[i];
                }
                alg.bch_into(&half[..d], x, &mut zp[..d]);
                alg.bch_into(&yp[..d], &neg[..d], &mut w1[..d]);
                let va = ta.eval(&zw, &w1[..d], &mut scratch);
                if va == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..d {
                    neg[i] = -zp[i];
                }
                alg.bch_into(&zc[..d], &neg[..d], &mut w2[..d]);
                for i in 0..d {
                    tw[i][0].0 = lattice_idx[it * d + i];
                }
                let vb = tb.eval(&tw, &w2[..d], &mut scratch);
                let mut phase = -dot(xi, &big_t[..d]);
                if magnetic {
                    phase += ctx.alpha_exponent(&yp[..d], &zc[..d]) + ctx.alpha_exponent(&zc[..d], &zp[..d])
                        - ctx.alpha_exponent(&yp[..d], &zp[..d]);
                }
                acc += Complex64::from_polar(1.0, phase) * va * vb;
            }
            acc
        })
        .collect();
    let sum: Complex64 = partial.iter().sum();
    let cell: f64 = axes.iter().map(|ax| ax.spacing).product();
    let scale = (2.0 * PI).powf(-(d as f64) / 2.0) * 4f64.powi(d as i32) * cell * cell;
    Ok(sum * scale)
}

/// `Φ(Y) = ∫₀¹ θ₀(X, ξ)((−sX)∗Y) ds`, the phase of `π(exp_M θ(X, ξ))` at `Y`.
pub fn pi_phase(ctx: &WeylContext, x: &[f64], xi: &[f64], y: &[f64]) -> f64 {
    let alg = &ctx.algebra;
    let d = alg.dim();
    let degree = magnetic::alpha_integrand_degree(alg, &ctx.potential).max(alg.path_degree());
    let mut sx = [0.0; MAX_DIM];
    let mut w = [0.0; MAX_DIM];
    let mut phi = 0.0;
    for (s, weight) in exact_rule_for_degree(degree).iter() {
        for i in 0..d {
            sx[i] = -s * x[i];
        }
        alg.bch_into(&sx[..d], y, &mut w[..d]);
        phi += weight * (dot(xi, &w[..d]) + magnetic::pairing_ar_slice(alg, &ctx.potential, &w[..d], x));
    }
    phi
}

/// `π(φ, g) f(Y) = e^{iφ(Y)} f((−g)∗Y)`, with `f` evaluated off-grid through
/// its trigonometric interpolant.
pub fn pi_group_element(
    ctx: &WeylContext,
    phase: impl Fn(&[f64]) -> f64 + Sync,
    g: &[f64],
    f: &ConfigField,
) -> ConfigField {
    let grid = ctx.grid;
    let d = grid.dim();
    let interp = interp::TrigInterpolant::new(f);
    let nodes = flat_nodes(&grid);
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    let values: Vec<Complex64> = (0..grid.config_len())
        .into_par_iter()
        .map(|iy| {
            let y = &nodes[iy * d..(iy + 1) * d];
            let mut p = [0.0; MAX_DIM];
            ctx.algebra.bch_into(&neg, y, &mut p[..d]);
            Complex64::from_polar(1.0, phase(y)) * interp.eval(&p[..d])
        })
        .collect();
    ConfigField { grid, values: ArrayD::from_shape_vec(IxDyn(&grid.config_shape()), values).expect("shape"), dual: false }
}

/// `π(exp_M θ(X, ξ)) f`
pub fn pi_action(ctx: &WeylContext, x: &[f64], xi: &[f64], f: &ConfigField) -> ConfigField {
    pi_group_element(ctx, |y| pi_phase(ctx, x, xi, y), x, f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeReport {
    pub tau: f64,
    /// Relative L² discrepancy at step `τ`.
    pub error: f64,
    /// Same at `τ/2`.
    pub error_half: f64,
    /// `error / error_half`, about 4 for a second-order difference.
    pub ratio: f64,
}

/// Compares `d/dt|₀ π(exp_M θ(tP₀, 0)) f` with `λ̇(P₀)f + i(A(Q)P₀)f`.
///
/// The derivative is the least-squares slope through `t ∈ {±τ, ±2τ}`, which
/// is second order, so halving `τ` divides the error by about four.
pub fn magnetic_derivative_check(ctx: &WeylContext, p0: &[f64], f: &ConfigField, tau: f64) -> DerivativeReport {
    let grid = ctx.grid;
    let d = grid.dim();
    let interp = interp::TrigInterpolant::new(f);
    let nodes = flat_nodes(&grid);
    let exact: Vec<Complex64> = (0..grid.config_len())
        .map(|iy| {
            let y = &nodes[iy * d..(iy + 1) * d];
            let mut r = [0.0; MAX_DIM];
            ctx.algebra.right_translation_differential_into(y, p0, &mut r[..d]);
            let grad = interp.gradient(y);
            let lambda: Complex64 = -(0..d).map(|i| grad[i] * r[i]).sum::<Complex64>();
            let pairing = magnetic::pairing_ar_slice(&ctx.algebra, &ctx.potential, y, p0);
            lambda + Complex64::new(0.0, pairing) * interp.eval(y)
        })
        .collect();
    let error_at = |tau: f64| {
        let g = |t: f64| {
            let x: Vec<f64> = p0.iter().map(|v| t * v).collect();
            pi_action(ctx, &x, &vec![0.0; d], f).values.into_raw_vec_and_offset().0
        };
        let (gp1, gm1, gp2, gm2) = (g(tau), g(-tau), g(2.0 * tau), g(-2.0 * tau));
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..exact.len() {
            let slope = (tau * (gp1[i] - gm1[i]) + 2.0 * tau * (gp2[i] - gm2[i])) / (10.0 * tau * tau);
            num += (slope - exact[i]).norm_sqr();
            den += exact[i].norm_sqr();
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    };
    let error = error_at(tau);
    let error_half = error_at(0.5 * tau);
    DerivativeReport { tau, error, error_half, ratio: error / error_half }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeReport {
    /// `max |K_{A₁} − e^{iψ(Y)} K_A e^{−iψ(Z)}|`
    pub max_abs_error: f64,
    /// The same divided by `max |K_A|`.
    pub relative_error: f64,
}

/// Checks `K_{A₁,a}(Y, Z) = e^{iψ(Y)} K_{A,a}(Y, Z) e^{−iψ(Z)}` with
/// `dψ = A₁ − A`.
pub fn gauge_covariance_check(ctx: &WeylContext, a1: &MagneticPotential, a: &SymbolField) -> Result<GaugeReport, WeylError> {
    let psi = magnetic::gauge_function(a1, &ctx.potential)?;
    let k = kernel_from_symbol(ctx, a)?;
    let k1 = kernel_from_symbol(&ctx.with_potential(a1.clone())?, a)?;
    let grid = ctx.grid;
    let d = grid.dim();
    let nodes = flat_nodes(&grid);
    let phases: Vec<Complex64> =
        (0..grid.config_len()).map(|i| Complex64::from_polar(1.0, psi.eval(&nodes[i * d..(i + 1) * d]))).collect();
    let mut max_abs_error: f64 = 0.0;
    let mut max_k: f64 = 0.0;
    for ((iy, iz), v) in k.values.indexed_iter() {
        let conj = phases[iy] * v * phases[iz].conj();
        max_abs_error = max_abs_error.max((k1.values[[iy, iz]] - conj).norm());
        max_k = max_k.max(v.norm());
    }
    let relative_error = if max_k == 0.0 { max_abs_error } else { max_abs_error / max_k };
    Ok(GaugeReport { max_abs_error, relative_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol_space::{make_grid, sample_config, sample_symbol};

    fn gaussian_ctx(alg: NilpotentLieAlgebra, n: usize, l: f64) -> WeylContext {
        let d = alg.dim();
        WeylContext::new(alg, MagneticPotential::zero(d), make_grid(d, n, l).unwrap()).unwrap()
    }

    #[test]
    fn sigma_inverse_inverts_sigma() {
        let alg = NilpotentLieAlgebra::filiform4().unwrap();
        let ctx = gaussian_ctx(alg.clone(), 4, 2.0);
        let x = [0.3, -0.7, 0.2, 1.1];
        let t = [-0.4, 0.5, 0.9, -0.3];
        let (mut y, mut z) = ([0.0; 4], [0.0; 4]);
        ctx.sigma_inverse(&x, &t, &mut y, &mut z);
        let mut m = [0.0; 4];
        alg.segment_midpoint_into(&y, &z, &mut m);
        let mut tt = [0.0; 4];
        alg.bch_into(&y, &z.map(|v| -v), &mut tt);
        for i in 0..4 {
            assert!((m[i] - x[i]).abs() < 1e-12);
            assert!((tt[i] - t[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn twostep_fastpath_matches_general_sigma() {
        let alg = NilpotentLieAlgebra::heisenberg(3).unwrap();
        let fast = gaussian_ctx(alg.clone(), 4, 2.0);
        let slow = gaussian_ctx(alg, 4, 2.0).with_flags(WeylFlags { use_twostep_fastpath: false, ..Default::default() });
        let (x, t) = ([0.3, -0.7, 0.2], [1.4, 0.5, -0.9]);
        let (mut y1, mut z1, mut y2, mut z2) = ([0.0; 3], [0.0; 3], [0.0; 3], [0.0; 3]);
        fast.sigma_inverse(&x, &t, &mut y1, &mut z1);
        slow.sigma_inverse(&x, &t, &mut y2, &mut z2);
        for i in 0..3 {
            assert!((y1[i] - y2[i]).abs() < 1e-13 && (z1[i] - z2[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_kernel_gives_zero_symbol() {
        let ctx = gaussian_ctx(NilpotentLieAlgebra::abelian(1).unwrap(), 16, 4.0);
        let a = symbol_from_kernel(&ctx, &IntegralKernel::zeros(ctx.grid)).unwrap();
        assert!(a.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn kernel_map_is_linear() {
        let ctx = gaussian_ctx(NilpotentLieAlgebra::heisenberg(3).unwrap(), 4, 3.0);
        let a = sample_symbol(&ctx.grid, |x, xi| Complex64::new((-(x[0] * x[0] + xi[1] * xi[1])).exp(), 0.0));
        let b = sample_symbol(&ctx.grid, |x, xi| Complex64::new(x[2], xi[0]) * (-(x[2] * x[2] + xi[2] * xi[2])).exp());
        let lam = Complex64::new(0.5, -2.0);
        let c = SymbolField { grid: ctx.grid, values: &a.values + &(&b.values * lam) };
        let (ka, kb, kc) = (kernel_from_symbol(&ctx, &a).unwrap(), kernel_from_symbol(&ctx, &b).unwrap(), kernel_from_symbol(&ctx, &c).unwrap());
        let combo = IntegralKernel { grid: ctx.grid, values: &ka.values + &(&kb.values * lam) };
        assert!(kc.relative_error(&combo) < 1e-13);
    }

    #[test]
    fn identity_and_rank_one_kernels() {
        let grid = make_grid(1, 8, 2.0).unwrap();
        let f = sample_config(&grid, |x| Complex64::new(x[0].cos(), x[0]));
        let id = IntegralKernel::identity(grid);
        let g = apply_operator(&id, &f).unwrap();
        assert!(crate::symbol_space::relative_l2(&g.values, &f.values) < 1e-15);

        let u = sample_config(&grid, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0));
        let v = sample_config(&grid, |x| Complex64::new(0.0, x[0]));
        let uv: Vec<Complex64> = u.values.iter().flat_map(|a| v.values.iter().map(move |b| a * b.conj())).collect();
        let k = IntegralKernel::new(grid, Array2::from_shape_vec((8, 8), uv).unwrap()).unwrap();
        let got = apply_operator(&k, &f).unwrap();
        let c = v.inner(&f);
        for (gv, uv) in got.values.iter().zip(u.values.iter()) {
            assert!((gv - uv * c).norm() < 1e-13);
        }
        assert!(compose_kernels(&k, &id).unwrap().relative_error(&k) < 1e-15);
    }

    #[test]
    fn pi_abelian_is_weyl_shift() {
        let ctx = gaussian_ctx(NilpotentLieAlgebra::abelian(1).unwrap(), 64, 8.0);
        let f = sample_config(&ctx.grid, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0));
        let (x, xi) = (0.37, 1.3);
        let g = pi_action(&ctx, &[x], &[xi], &f);
        for (j, v) in g.values.iter().enumerate() {
            let y = ctx.grid.x(j);
            let want = Complex64::from_polar(1.0, xi * y - 0.5 * xi * x) * (-(y - x) * (y - x) / 2.0).exp();
            assert!((v - want).norm() < 1e-10);
        }
        let id = pi_action(&ctx, &[0.0], &[0.0], &f);
        assert!(crate::symbol_space::relative_l2(&id.values, &f.values) < 1e-15);
    }

    #[test]
    fn derivative_check_vanishes_for_zero_direction() {
        let ctx = gaussian_ctx(NilpotentLieAlgebra::heisenberg(3).unwrap(), 6, 3.0);
        let f = sample_config(&ctx.grid, |x| Complex64::new((-x.iter().map(|v| v * v).sum::<f64>() / 2.0).exp(), 0.0));
        let r = magnetic_derivative_check(&ctx, &[0.0; 3], &f, 1e-3);
        assert_eq!(r.error, 0.0);
    }

    #[test]
    fn two_step_point_rejects_deeper_algebras() {
        let ctx = gaussian_ctx(NilpotentLieAlgebra::filiform4().unwrap(), 2, 1.0);
        let a = SymbolField::zeros(ctx.grid);
        assert_eq!(moyal_2step_point(&ctx, &a, &a, &[0.0; 4], &[0.0; 4]), Err(WeylError::WrongClass { index: 2 }));
    }
}

#[cfg(test)]
mod hermiticity {
    use super::*;
    use crate::symbol_space::{make_grid, sample_symbol};

    fn defect(alg: NilpotentLieAlgebra, pot: MagneticPotential, n: usize, l: f64) -> f64 {
        let d = alg.dim();
        let ctx = WeylContext::new(alg, pot, make_grid(d, n, l).unwrap()).unwrap();
        let a = sample_symbol(&ctx.grid, |x, xi| {
            let r: f64 = x.iter().map(|v| v * v / 2.0).sum::<f64>() + xi.iter().map(|v| v * v / 2.0).sum::<f64>();
            Complex64::new((1.0 + 0.4 * x[0] - 0.3 * xi[d - 1]) * (-r).exp(), 0.0)
        });
        let k = kernel_from_symbol(&ctx, &a).unwrap();
        k.adjoint().relative_error(&k)
    }

    #[test]
    fn real_symbols_give_hermitian_kernels() {
        let plane = defect(NilpotentLieAlgebra::abelian(2).unwrap(), MagneticPotential::landau(0.7), 16, 5.0);
        assert!(plane < 1e-12, "{plane}");
        for n in [6, 8] {
            let h = defect(NilpotentLieAlgebra::heisenberg(3).unwrap(), MagneticPotential::heisenberg_linear(3, 0.25).unwrap(), n, 4.0);
            assert!(h < 1e-12, "N={n}: {h}");
        }
    }
}
