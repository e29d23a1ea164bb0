//! Run configuration, verification suites and reports for the command-line
//! front end. Every check is "measured value ≤ tolerance"; two-sided
//! conditions are reported as deviations.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::IxDyn;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lie::{LieError, NilpotentLieAlgebra};
use crate::linalg;
use crate::magnetic::{MagneticError, MagneticPotential};
use crate::poly::{Monomial, Polynomial};
use crate::symbol_space::{
    make_grid, read_dump, relative_l2, sample_config, sample_symbol, symplectic_fourier, write_dump, DumpHeader,
    GridError, PhaseSpaceGrid, SymbolField,
};
use crate::weyl::{self, WeylContext, WeylError};

pub const SUITES: [&str; 6] = ["fourier", "unitarity", "gauge", "abelian-baseline", "moyal-crosscheck", "derivative-check"];

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("bad config: {0}")]
    Parse(String),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Magnetic(#[from] MagneticError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Weyl(#[from] WeylError),
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error("{0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SymbolSpec {
    /// `exp(−|X|²/2σ_X² − |ξ|²/2σ_ξ²)`
    Gaussian { sigma_x: f64, sigma_xi: f64 },
    Zero,
    /// A symbol dump.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Preset name or path to a `.json` algebra file.
    pub algebra: String,
    /// Preset name or path to a `.json` potential file.
    #[serde(default = "zero_potential")]
    pub potential: String,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub suites: Option<Vec<String>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Per-check tolerance overrides.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub symbol: Option<SymbolSpec>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn zero_potential() -> String {
    "zero".into()
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn read_file(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

impl RunConfig {
    pub fn from_json(json: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = serde_json::from_str(json).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&read_file(path)?, &base)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn load_algebra(&self) -> Result<NilpotentLieAlgebra, ConfigError> {
        if self.algebra.ends_with(".json") {
            Ok(NilpotentLieAlgebra::from_json(&read_file(&self.resolve(Path::new(&self.algebra)))?)?)
        } else {
            Ok(NilpotentLieAlgebra::from_preset(&self.algebra)?)
        }
    }

    pub fn load_potential(&self, dim: usize) -> Result<MagneticPotential, ConfigError> {
        if self.potential.ends_with(".json") {
            Ok(MagneticPotential::from_json(&read_file(&self.resolve(Path::new(&self.potential)))?, dim)?)
        } else {
            Ok(MagneticPotential::from_preset(&self.potential, dim)?)
        }
    }

    pub fn grid(&self, dim: usize) -> Result<PhaseSpaceGrid, ConfigError> {
        let spec = self.grid.ok_or_else(|| ConfigError::Parse("missing grid {\"N\", \"L\"}".into()))?;
        Ok(make_grid(dim, spec.n, spec.l)?)
    }

    pub fn context(&self) -> Result<WeylContext, ConfigError> {
        let alg = self.load_algebra()?;
        let d = alg.dim();
        let pot = self.load_potential(d)?;
        let grid = self.grid(d)?;
        Ok(WeylContext::new(alg, pot, grid)?)
    }

    /// Selected suites in canonical order; unknown names are errors.
    pub fn selected_suites(&self) -> Result<Vec<&'static str>, ConfigError> {
        match &self.suites {
            None => Ok(SUITES.to_vec()),
            Some(names) => {
                if let Some(bad) = names.iter().find(|n| !SUITES.contains(&n.as_str())) {
                    return Err(ConfigError::UnknownSuite(bad.clone()));
                }
                Ok(SUITES.iter().copied().filter(|s| names.iter().any(|n| n == s)).collect())
            }
        }
    }

    pub fn symbol(&self, grid: &PhaseSpaceGrid) -> Result<SymbolField, ConfigError> {
        match self.symbol.as_ref().ok_or_else(|| ConfigError::Parse("missing symbol spec".into()))? {
            SymbolSpec::Gaussian { sigma_x, sigma_xi } => Ok(sample_symbol(grid, gaussian(*sigma_x, *sigma_xi))),
            SymbolSpec::Zero => Ok(SymbolField::zeros(*grid)),
            SymbolSpec::File { path } => {
                let path = self.resolve(path);
                let file = fs::File::open(&path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
                let (header, values) =
                    read_dump(BufReader::new(file)).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
                if header.kind != "symbol"
                    || header.dim != grid.dim()
                    || header.n != grid.points_per_axis()
                    || header.half_width != grid.box_half_width()
                {
                    return Err(ConfigError::Mismatch(format!(
                        "symbol file is a {} dump on dim {}, N {}, L {}; the run uses dim {}, N {}, L {}",
                        header.kind,
                        header.dim,
                        header.n,
                        header.half_width,
                        grid.dim(),
                        grid.points_per_axis(),
                        grid.box_half_width()
                    )));
                }
                let values = ndarray::ArrayD::from_shape_vec(IxDyn(&grid.symbol_shape()), values)
                    .map_err(|e| ConfigError::Mismatch(e.to_string()))?;
                Ok(SymbolField::new(*grid, values)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub check: String,
    /// `None` when the measurement is not finite.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub label: String,
    pub seconds: f64,
}

/// Wall times are kept out of the JSON so identical runs give identical bytes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(skip)]
    pub timings: Vec<Timing>,
}

impl Report {
    pub fn new() -> Self {
        Self { checks: Vec::new(), pass: true, timings: Vec::new() }
    }

    pub fn record(&mut self, check: &str, value: f64, tolerance: f64, overrides: &BTreeMap<String, f64>) {
        let tolerance = overrides.get(check).copied().unwrap_or(tolerance);
        let pass = value.is_finite() && value <= tolerance;
        self.pass &= pass;
        self.checks.push(Check { check: check.to_string(), value: value.is_finite().then_some(value), tolerance, pass });
    }

    pub fn time(&mut self, label: &str, start: Instant) {
        self.timings.push(Timing { label: label.to_string(), seconds: start.elapsed().as_secs_f64() });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("check,value,tolerance,pass\n");
        for c in &self.checks {
            let value = c.value.map(|v| format!("{v:e}")).unwrap_or_else(|| "nan".into());
            let _ = writeln!(s, "{},{},{:e},{}", c.check, value, c.tolerance, c.pass);
        }
        s
    }

    pub fn timings_csv(&self) -> String {
        let mut s = String::from("label,seconds\n");
        for t in &self.timings {
            let _ = writeln!(s, "{},{:.3}", t.label, t.seconds);
        }
        s
    }

    /// Writes `report.json`, `summary.csv` and `timings.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.to_json())?;
        fs::write(dir.join("summary.csv"), self.summary_csv())?;
        fs::write(dir.join("timings.csv"), self.timings_csv())
    }
}

pub fn gaussian(sigma_x: f64, sigma_xi: f64) -> impl Fn(&[f64], &[f64]) -> Complex64 + Copy + Sync {
    move |x, xi| {
        let r = x.iter().map(|v| v * v).sum::<f64>() / (2.0 * sigma_x * sigma_x)
            + xi.iter().map(|v| v * v).sum::<f64>() / (2.0 * sigma_xi * sigma_xi);
        Complex64::new((-r).exp(), 0.0)
    }
}

/// `(1 + X₁/2 + 0.3i·ξ_d)` times a Gaussian.
pub fn polynomial_gaussian(sigma_x: f64, sigma_xi: f64) -> impl Fn(&[f64], &[f64]) -> Complex64 + Copy + Sync {
    let g = gaussian(sigma_x, sigma_xi);
    move |x, xi| g(x, xi) * Complex64::new(1.0 + 0.5 * x[0], 0.3 * xi[xi.len() - 1])
}

fn random_vector(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-scale..scale)).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest associativity and inverse defects of the BCH product over
/// `count` random triples.
pub fn bch_axioms(alg: &NilpotentLieAlgebra, rng: &mut ChaCha8Rng, count: usize) -> (f64, f64) {
    let d = alg.dim();
    let (mut assoc, mut inverse) = (0.0f64, 0.0f64);
    let mut t1 = vec![0.0; d];
    let mut t2 = vec![0.0; d];
    let mut lhs = vec![0.0; d];
    let mut rhs = vec![0.0; d];
    for _ in 0..count {
        let x = random_vector(rng, d, 1.5);
        let y = random_vector(rng, d, 1.5);
        let z = random_vector(rng, d, 1.5);
        alg.bch_into(&x, &y, &mut t1);
        alg.bch_into(&t1, &z, &mut lhs);
        alg.bch_into(&y, &z, &mut t2);
        alg.bch_into(&x, &t2, &mut rhs);
        assoc = assoc.max(max_diff(&lhs, &rhs));
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        alg.bch_into(&x, &neg, &mut t1);
        inverse = inverse.max(t1.iter().map(|v| v.abs()).fold(0.0, f64::max));
        alg.bch_into(&neg, &x, &mut t1);
        inverse = inverse.max(t1.iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    (assoc, inverse)
}

/// Largest `|Ψ_V⁻¹(Ψ_V(Y)) − Y|` and `|Ψ_V(Ψ_V⁻¹(Y)) − Y|` over random pairs.
pub fn psi_round_trip(alg: &NilpotentLieAlgebra, rng: &mut ChaCha8Rng, count: usize) -> f64 {
    let d = alg.dim();
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let v = random_vector(rng, d, 1.5);
        let y = random_vector(rng, d, 1.5);
        alg.psi_map_into(&v, &y, &mut a);
        alg.psi_inverse_into(&v, &a, &mut b);
        worst = worst.max(max_diff(&b, &y));
        alg.psi_inverse_into(&v, &y, &mut a);
        alg.psi_map_into(&v, &a, &mut b);
        worst = worst.max(max_diff(&b, &y));
    }
    worst
}

/// Largest `|det DΨ_V(Y) − 1|` with the Jacobian from central differences.
pub fn psi_jacobian(alg: &NilpotentLieAlgebra, rng: &mut ChaCha8Rng, count: usize) -> f64 {
    let d = alg.dim();
    let step = 1e-5;
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let v = random_vector(rng, d, 1.5);
        let y = random_vector(rng, d, 1.5);
        let mut jac = vec![vec![0.0; d]; d];
        for j in 0..d {
            let mut yp = y.clone();
            yp[j] += step;
            alg.psi_map_into(&v, &yp, &mut plus);
            yp[j] -= 2.0 * step;
            alg.psi_map_into(&v, &yp, &mut minus);
            for i in 0..d {
                jac[i][j] = (plus[i] - minus[i]) / (2.0 * step);
            }
        }
        worst = worst.max((linalg::determinant(&jac) - 1.0).abs());
    }
    worst
}

/// A sum of three Gaussian bumps with random centres, widths and phases,
/// resolved on both the 𝔤- and the 𝔤*-grid.
pub fn random_smooth_symbol(grid: &PhaseSpaceGrid, rng: &mut ChaCha8Rng) -> SymbolField {
    let d = grid.dim();
    let (lx, lxi) = (grid.box_half_width() / 3.0, grid.xi(grid.points_per_axis() - 1) / 3.0);
    let bumps: Vec<(Vec<f64>, Vec<f64>, f64, f64, Complex64)> = (0..3)
        .map(|_| {
            let cx = random_vector(rng, d, lx);
            let cxi = random_vector(rng, d, lxi);
            let sx = rng.gen_range(2.0..4.0) * grid.h();
            let sxi = rng.gen_range(2.0..4.0) * grid.dxi();
            let amp = Complex64::from_polar(rng.gen_range(0.5..1.5), rng.gen_range(0.0..2.0 * PI));
            (cx, cxi, sx, sxi, amp)
        })
        .collect();
    sample_symbol(grid, |x, xi| {
        bumps
            .iter()
            .map(|(cx, cxi, sx, sxi, amp)| {
                let r = x.iter().zip(cx).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * sx * sx)
                    + xi.iter().zip(cxi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * sxi * sxi);
                amp * (-r).exp()
            })
            .sum()
    })
}

/// Largest `‖F_Ξ F_Ξ a − a‖/‖a‖` and `|‖F_Ξ a‖/‖a‖ − 1|` over random symbols.
pub fn fourier_involution(grid: &PhaseSpaceGrid, rng: &mut ChaCha8Rng, count: usize) -> (f64, f64) {
    let (mut involution, mut parseval) = (0.0f64, 0.0f64);
    for _ in 0..count {
        let a = random_smooth_symbol(grid, rng);
        let fa = symplectic_fourier(&a);
        parseval = parseval.max((fa.l2_norm() / a.l2_norm() - 1.0).abs());
        involution = involution.max(symplectic_fourier(&fa).relative_error(&a));
    }
    (involution, parseval)
}

/// `|‖K_a‖/‖a‖ − 1|`
pub fn unitarity_defect(ctx: &WeylContext, a: &SymbolField) -> Result<f64, WeylError> {
    let k = weyl::kernel_from_symbol(ctx, a)?;
    Ok((k.l2_norm() / a.l2_norm() - 1.0).abs())
}

/// Relative L² distance between the kernel of `exp(−x²/2σ_X² − ξ²/2σ_ξ²)` on
/// the line and the closed form
/// `σ_ξ·exp(−(y+z)²/8σ_X² − σ_ξ²(y−z)²/2)`.
pub fn abelian_baseline(n: usize, l: f64, sigma_x: f64, sigma_xi: f64) -> Result<f64, ConfigError> {
    let grid = make_grid(1, n, l)?;
    let ctx = WeylContext::new(NilpotentLieAlgebra::abelian(1)?, MagneticPotential::zero(1), grid)?;
    let a = sample_symbol(&grid, gaussian(sigma_x, sigma_xi));
    let k = weyl::kernel_from_symbol(&ctx, &a)?;
    let (mut num, mut den) = (0.0, 0.0);
    for ((iy, iz), v) in k.values.indexed_iter() {
        let (y, z) = (grid.x(iy), grid.x(iz));
        let exact = sigma_xi * (-(y + z).powi(2) / (8.0 * sigma_x * sigma_x) - sigma_xi * sigma_xi * (y - z).powi(2) / 2.0).exp();
        num += (v - exact).norm_sqr();
        den += exact * exact;
    }
    Ok((num / den).sqrt())
}

/// Polynomial of degree three with every monomial present and coefficients
/// uniform in `[−scale, scale]`.
pub fn random_cubic(dim: usize, rng: &mut ChaCha8Rng, scale: f64) -> Polynomial {
    let mut terms = Vec::new();
    let mut exps = vec![0u32; dim];
    fn rec(k: usize, left: u32, exps: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == exps.len() {
            if left < 3 {
                out.push(exps.clone());
            }
            return;
        }
        for e in 0..=left {
            exps[k] = e;
            rec(k + 1, left - e, exps, out);
        }
        exps[k] = 0;
    }
    let mut all = Vec::new();
    rec(0, 3, &mut exps, &mut all);
    for e in all {
        if e.iter().any(|&v| v > 0) {
            terms.push(Monomial { exponents: e, coeff: rng.gen_range(-scale..scale) });
        }
    }
    Polynomial::from_terms(dim, terms).expect("exponent vectors have the algebra dimension")
}

/// Relative L² distance between `a #^A b` and `a #^{A₁} b`.
pub fn moyal_gauge_invariance(
    ctx: &WeylContext,
    a1: &MagneticPotential,
    a: &SymbolField,
    b: &SymbolField,
) -> Result<f64, WeylError> {
    let c = weyl::moyal_product(ctx, a, b)?;
    let c1 = weyl::moyal_product(&ctx.with_potential(a1.clone())?, a, b)?;
    Ok(relative_l2(&c1.values, &c.values))
}

/// Probe points as grid offsets from the origin, `(X, ξ)` index steps.
pub fn probe_offsets(d: usize) -> Vec<(Vec<isize>, Vec<isize>)> {
    let e = |i: usize, s: isize| {
        let mut v = vec![0isize; d];
        v[i] = s;
        v
    };
    let second = 1.min(d - 1);
    let mut both = e(0, 1);
    both[second] += 1;
    vec![
        (vec![0; d], vec![0; d]),
        (e(0, 1), vec![0; d]),
        (e(second, -1), e(second, 1)),
        (e(d - 1, 1), e(d - 1, 1)),
        (both, e(0, 1)),
    ]
}

fn probe_coordinates(grid: &PhaseSpaceGrid, off: &(Vec<isize>, Vec<isize>)) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let c = (grid.points_per_axis() / 2) as isize;
    let idx: Vec<usize> = off.0.iter().chain(&off.1).map(|&o| (c + o) as usize).collect();
    let d = grid.dim();
    let x = (0..d).map(|i| grid.x(idx[i])).collect();
    let xi = (0..d).map(|i| grid.xi(idx[d + i])).collect();
    (idx, x, xi)
}

/// Largest pointwise `|oracle − kernel route|/|kernel route|` over the probes.
pub fn moyal_crosscheck(ctx: &WeylContext, a: &SymbolField, b: &SymbolField) -> Result<f64, WeylError> {
    let c = weyl::moyal_product(ctx, a, b)?;
    let mut worst: f64 = 0.0;
    for off in probe_offsets(ctx.grid.dim()) {
        let (idx, x, xi) = probe_coordinates(&ctx.grid, &off);
        let route = c.values[IxDyn(&idx)];
        let point = weyl::moyal_2step_point(ctx, a, b, &x, &xi)?;
        worst = worst.max((point - route).norm() / route.norm());
    }
    Ok(worst)
}

/// `√(2π)/(1+λμ)·exp(−(λ+μ)(x²+ξ²)/(1+λμ))`: the product of
/// `exp(−λ(x²+ξ²))` and `exp(−μ(x²+ξ²))` on the line, in the unitary
/// normalization.
pub fn gaussian_moyal_exact(lambda: f64, mu: f64, x: f64, xi: f64) -> f64 {
    let s = 1.0 + lambda * mu;
    (2.0 * PI).sqrt() / s * (-(lambda + mu) / s * (x * x + xi * xi)).exp()
}

/// Largest pointwise relative errors of the kernel route and of the point
/// oracle against [`gaussian_moyal_exact`] on the line.
pub fn abelian_moyal_analytic(n: usize, l: f64, lambda: f64, mu: f64) -> Result<(f64, f64), ConfigError> {
    let grid = make_grid(1, n, l)?;
    let ctx = WeylContext::new(NilpotentLieAlgebra::abelian(1)?, MagneticPotential::zero(1), grid)?;
    let a = sample_symbol(&grid, |x, xi| Complex64::new((-lambda * (x[0] * x[0] + xi[0] * xi[0])).exp(), 0.0));
    let b = sample_symbol(&grid, |x, xi| Complex64::new((-mu * (x[0] * x[0] + xi[0] * xi[0])).exp(), 0.0));
    let c = weyl::moyal_product(&ctx, &a, &b)?;
    let (mut route, mut point) = (0.0f64, 0.0f64);
    for off in [(2isize, 0isize), (0, -2), (3, 1), (-4, 3), (0, 0)] {
        let (idx, x, xi) = probe_coordinates(&grid, &(vec![off.0], vec![off.1]));
        let exact = gaussian_moyal_exact(lambda, mu, x[0], xi[0]);
        route = route.max((c.values[IxDyn(&idx)] - exact).norm() / exact);
        let p = weyl::moyal_2step_point(&ctx, &a, &b, &x, &xi)?;
        point = point.max((p - exact).norm() / exact);
    }
    Ok((route, point))
}

/// Standard Gaussian on 𝔤.
pub fn gaussian_config(grid: &PhaseSpaceGrid) -> crate::symbol_space::ConfigField {
    sample_config(grid, |y| Complex64::new((-y.iter().map(|v| v * v).sum::<f64>() / 2.0).exp(), 0.0))
}

/// Runs the lie_core invariant checks on the configured algebra.
pub fn verify_algebra(cfg: &RunConfig) -> Result<Report, ConfigError> {
    let alg = cfg.load_algebra()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = Report::new();
    let tol = &cfg.tolerances;
    let start = Instant::now();
    let (assoc, inverse) = bch_axioms(&alg, &mut rng, 100);
    report.record("bch-associativity", assoc, 1e-10, tol);
    report.record("bch-inverse", inverse, 1e-10, tol);
    report.time("bch", start);
    let start = Instant::now();
    report.record("psi-round-trip", psi_round_trip(&alg, &mut rng, 100), 1e-10, tol);
    report.record("psi-jacobian", psi_jacobian(&alg, &mut rng, 20), 1e-6, tol);
    report.time("psi", start);
    Ok(report)
}

/// Runs the selected suites on the configured algebra, potential and grid.
pub fn run_suites(cfg: &RunConfig) -> Result<Report, ConfigError> {
    let suites = cfg.selected_suites()?;
    let ctx = cfg.context()?;
    let grid = ctx.grid;
    let d = grid.dim();
    let tol = &cfg.tolerances;
    let mut report = Report::new();
    let a = sample_symbol(&grid, gaussian(1.5, 0.75));
    let b = sample_symbol(&grid, polynomial_gaussian(1.5, 0.75));
    for suite in suites {
        // each suite draws from its own stream so selections do not interact
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(SUITES.iter().position(|s| *s == suite).unwrap_or(0) as u64);
        let start = Instant::now();
        match suite {
            "fourier" => {
                let (involution, parseval) = fourier_involution(&grid, &mut rng, 5);
                report.record("fourier-involution", involution, 1e-10, tol);
                report.record("fourier-parseval", parseval, 1e-10, tol);
            }
            "unitarity" => {
                let bound = if ctx.algebra.is_abelian() { 1e-6 } else { 1e-3 };
                report.record("unitarity-gaussian", unitarity_defect(&ctx, &a)?, bound, tol);
                report.record("unitarity-polynomial-gaussian", unitarity_defect(&ctx, &b)?, bound, tol);
            }
            "gauge" => {
                let a1 = ctx.potential.add_gradient(&random_cubic(d, &mut rng, 0.05))?;
                let g = weyl::gauge_covariance_check(&ctx, &a1, &a)?;
                report.record("gauge-covariance", g.relative_error, 1e-9, tol);
                report.record("moyal-gauge-invariance", moyal_gauge_invariance(&ctx, &a1, &a, &b)?, 1e-6, tol);
            }
            "abelian-baseline" => {
                report.record("abelian-kernel-closed-form", abelian_baseline(64, 8.0, 1.0, 1.0)?, 1e-6, tol);
            }
            "moyal-crosscheck" => {
                let (route, point) = abelian_moyal_analytic(64, 8.0, 0.5, 0.3)?;
                report.record("moyal-kernel-route-abelian-exact", route, 1e-4, tol);
                report.record("moyal-point-abelian-exact", point, 0.02, tol);
                if ctx.algebra.is_two_step() {
                    report.record("moyal-point-vs-kernel-route", moyal_crosscheck(&ctx, &a, &b)?, 0.05, tol);
                }
            }
            "derivative-check" => {
                let p0 = random_vector(&mut rng, d, 1.0);
                let r = weyl::magnetic_derivative_check(&ctx, &p0, &gaussian_config(&grid), 1e-3);
                report.record("derivative-error", r.error, 1e-4, tol);
                report.record("derivative-order", (r.ratio / 4.0 - 1.0).abs(), 0.2, tol);
            }
            _ => unreachable!("suite names are validated"),
        }
        report.time(suite, start);
    }
    Ok(report)
}

/// Output of [`build_kernel`]: where the dump went and its checksum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMetadata {
    pub algebra: String,
    pub potential: String,
    pub grid: GridSpec,
    pub symbol: SymbolSpec,
    pub dump: String,
    pub sha256: String,
}

/// Writes `kernel.bin` and `kernel.json` into `dir`.
pub fn build_kernel(cfg: &RunConfig, dir: &Path) -> Result<KernelMetadata, ConfigError> {
    let ctx = cfg.context()?;
    let a = cfg.symbol(&ctx.grid)?;
    let k = weyl::kernel_from_symbol(&ctx, &a)?;
    let mut bytes = Vec::new();
    write_dump(&mut bytes, &DumpHeader::new("kernel", &ctx.grid), k.values.iter()).expect("writes to memory");
    let sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    let io_err = |source| ConfigError::Io { path: dir.to_path_buf(), source };
    fs::create_dir_all(dir).map_err(io_err)?;
    fs::write(dir.join("kernel.bin"), &bytes).map_err(io_err)?;
    let meta = KernelMetadata {
        algebra: cfg.algebra.clone(),
        potential: cfg.potential.clone(),
        grid: cfg.grid.expect("context checked the grid"),
        symbol: cfg.symbol.clone().expect("symbol checked above"),
        dump: "kernel.bin".into(),
        sha256,
    };
    let mut json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    json.push('\n');
    fs::write(dir.join("kernel.json"), json).map_err(io_err)?;
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> RunConfig {
        RunConfig::from_json(json, Path::new(".")).unwrap()
    }

    #[test]
    fn defaults_and_suite_selection() {
        let c = cfg(r#"{"algebra":"heisenberg:3","grid":{"N":8,"L":4}}"#);
        assert_eq!(c.seed, 42);
        assert_eq!(c.potential, "zero");
        assert_eq!(c.selected_suites().unwrap(), SUITES.to_vec());
        let c = cfg(r#"{"algebra":"abelian:1","suites":["gauge","fourier"]}"#);
        assert_eq!(c.selected_suites().unwrap(), vec!["fourier", "gauge"]);
        let c = cfg(r#"{"algebra":"abelian:1","suites":["nope"]}"#);
        assert!(matches!(c.selected_suites(), Err(ConfigError::UnknownSuite(_))));
        assert!(RunConfig::from_json(r#"{"algebra":"abelian:1","extra":1}"#, Path::new(".")).is_err());
    }

    #[test]
    fn missing_algebra_file() {
        let c = cfg(r#"{"algebra":"does-not-exist.json"}"#);
        assert!(matches!(c.load_algebra(), Err(ConfigError::Io { .. })));
    }

    #[test]
    fn failed_checks_fail_the_report() {
        let mut r = Report::new();
        r.record("a", 1e-12, 1e-10, &BTreeMap::new());
        assert!(r.pass);
        r.record("b", f64::NAN, 1.0, &BTreeMap::new());
        assert!(!r.pass);
        assert_eq!(r.checks[1].value, None);
        let mut over = BTreeMap::new();
        over.insert("c".to_string(), 2.0);
        let mut r = Report::new();
        r.record("c", 1.5, 1.0, &over);
        assert!(r.pass && r.checks[0].tolerance == 2.0);
    }

    #[test]
    fn cubic_has_all_monomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_cubic(3, &mut rng, 1.0);
        assert_eq!(p.terms().len(), 19);
        assert_eq!(p.degree(), 3);
    }

    #[test]
    fn probes_fit_small_grids() {
        let g = make_grid(3, 4, 2.0).unwrap();
        for off in probe_offsets(3) {
            let (idx, _, _) = probe_coordinates(&g, &off);
            assert!(idx.iter().all(|&i| i < 4));
        }
        assert_eq!(probe_offsets(1).len(), 5);
    }

    #[test]
    fn gaussian_moyal_closed_form_at_origin() {
        assert!((gaussian_moyal_exact(0.0, 0.0, 0.3, 0.1) - (2.0 * PI).sqrt()).abs() < 1e-15);
    }
}
