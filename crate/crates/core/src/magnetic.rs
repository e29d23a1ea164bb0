//! Polynomial magnetic potentials `A: 𝔤 → 𝔤*`, the field `B = dA`, gauge
//! functions and the phase factor `α_A`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie::{dot, LieCovector, LieVector, NilpotentLieAlgebra, MAX_DIM};
use crate::poly::{Monomial, Polynomial};
use crate::quadrature::exact_rule_for_degree;

pub const MAX_POTENTIAL_DEGREE: usize = 8;
/// Number of random probes used to compare two magnetic fields.
pub const FIELD_PROBES: usize = 50;
pub const FIELD_PROBE_TOL: f64 = 1e-9;
const PROBE_SEED: u64 = 0x6d61_6777_6579_6c31;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MagneticError {
    #[error("potential degree {degree} exceeds {MAX_POTENTIAL_DEGREE}")]
    DegreeTooHigh { degree: usize },
    #[error("shape error: {0}")]
    ShapeError(String),
    #[error("magnetic fields differ at a probe point by {error:e}")]
    FieldsDiffer { error: f64 },
    #[error("bad potential description: {0}")]
    Parse(String),
}

/// `A_Y = Σ_k A_k(Y) e_k*` with polynomial components.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticPotential {
    components: Vec<Polynomial>,
    /// `jacobian[k][j] = ∂_j A_k`
    jacobian: Vec<Vec<Polynomial>>,
    degree: usize,
}

#[derive(Serialize, Deserialize)]
struct PotentialFile {
    components: Vec<Vec<Monomial>>,
}

impl MagneticPotential {
    pub fn new(dim: usize, components: Vec<Polynomial>) -> Result<Self, MagneticError> {
        if components.len() != dim {
            return Err(MagneticError::ShapeError(format!("expected {dim} components, got {}", components.len())));
        }
        if let Some(p) = components.iter().find(|p| p.dim() != dim) {
            return Err(MagneticError::ShapeError(format!("component over {} variables, expected {dim}", p.dim())));
        }
        let degree = components.iter().map(Polynomial::degree).max().unwrap_or(0);
        if degree > MAX_POTENTIAL_DEGREE {
            return Err(MagneticError::DegreeTooHigh { degree });
        }
        let jacobian = components.iter().map(Polynomial::gradient).collect();
        Ok(Self { components, jacobian, degree })
    }

    /// Builds a potential from per-component monomial lists.
    pub fn from_tables(dim: usize, tables: Vec<Vec<Monomial>>) -> Result<Self, MagneticError> {
        if let Some(degree) = tables
            .iter()
            .flatten()
            .map(|m| m.exponents.iter().sum::<u32>() as usize)
            .find(|&d| d > MAX_POTENTIAL_DEGREE)
        {
            return Err(MagneticError::DegreeTooHigh { degree });
        }
        let components = tables
            .into_iter()
            .map(|t| Polynomial::from_terms(dim, t).ok_or_else(|| MagneticError::ShapeError("bad monomial".into())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(dim, components)
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, vec![Polynomial::zero(dim); dim]).expect("valid")
    }

    /// `A = (0, b·x₁)` on ℝ², constant field `b`.
    pub fn landau(b: f64) -> Self {
        Self::new(2, vec![Polynomial::zero(2), Polynomial::linear(2, 0, b)]).expect("valid")
    }

    /// `A = (−b·x₂/2, b·x₁/2)` on ℝ², the same field as [`Self::landau`].
    pub fn symmetric_gauge(b: f64) -> Self {
        Self::new(2, vec![Polynomial::linear(2, 1, -0.5 * b), Polynomial::linear(2, 0, 0.5 * b)]).expect("valid")
    }

    /// Linear potential on the Heisenberg algebra of dimension `2k+1`:
    /// symmetric gauge in each `(yᵢ, y_{k+i})` plane plus `b·y₁/2` on the
    /// central direction, so the pairing with `[𝔤, 𝔤]` is nontrivial.
    pub fn heisenberg_linear(dim: usize, b: f64) -> Result<Self, MagneticError> {
        if dim < 3 || dim.is_multiple_of(2) {
            return Err(MagneticError::ShapeError(format!("Heisenberg dimension must be odd and ≥ 3, got {dim}")));
        }
        let k = (dim - 1) / 2;
        let mut comps = vec![Polynomial::zero(dim); dim];
        for i in 0..k {
            comps[i] = Polynomial::linear(dim, k + i, -0.5 * b);
            comps[k + i] = Polynomial::linear(dim, i, 0.5 * b);
        }
        comps[dim - 1] = Polynomial::linear(dim, 0, 0.5 * b);
        Self::new(dim, comps)
    }

    /// Parses `zero`, `landau:<b>`, `symmetric:<b>` or `heisenberg-linear:<b>`.
    pub fn from_preset(name: &str, dim: usize) -> Result<Self, MagneticError> {
        let (kind, arg) = match name.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (name, None),
        };
        let b = || -> Result<f64, MagneticError> {
            arg.ok_or_else(|| MagneticError::Parse(format!("preset {kind} needs a field strength")))?
                .parse::<f64>()
                .map_err(|e| MagneticError::Parse(e.to_string()))
        };
        let need = |d: usize| {
            if dim == d {
                Ok(())
            } else {
                Err(MagneticError::ShapeError(format!("preset {kind} lives on dimension {d}, algebra has {dim}")))
            }
        };
        match kind {
            "zero" => Ok(Self::zero(dim)),
            "landau" => need(2).and_then(|_| Ok(Self::landau(b()?))),
            "symmetric" => need(2).and_then(|_| Ok(Self::symmetric_gauge(b()?))),
            "heisenberg-linear" => Self::heisenberg_linear(dim, b()?),
            _ => Err(MagneticError::Parse(format!("unknown potential preset {name:?}"))),
        }
    }

    pub fn from_json(json: &str, dim: usize) -> Result<Self, MagneticError> {
        let file: PotentialFile = serde_json::from_str(json).map_err(|e| MagneticError::Parse(e.to_string()))?;
        Self::from_tables(dim, file.components)
    }

    pub fn to_json(&self) -> String {
        let file = PotentialFile { components: self.components.iter().map(|p| p.terms().to_vec()).collect() };
        serde_json::to_string(&file).expect("serializable")
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    pub fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.components) {
            *o = p.eval(y);
        }
    }

    pub fn eval(&self, y: &LieVector) -> LieCovector {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(&y.0, &mut out);
        LieCovector(out)
    }

    /// `A + dψ`
    pub fn add_gradient(&self, psi: &Polynomial) -> Result<Self, MagneticError> {
        let grad = psi.gradient();
        Self::new(self.dim(), self.components.iter().zip(&grad).map(|(a, g)| a.add(g)).collect())
    }

    pub fn difference(&self, other: &Self) -> Result<Self, MagneticError> {
        Self::new(self.dim(), self.components.iter().zip(&other.components).map(|(a, b)| a.add(&b.scaled(-1.0))).collect())
    }

    /// `⟨A'_X(u), v⟩`
    fn derivative_pairing(&self, x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        let mut s = 0.0;
        for (k, row) in self.jacobian.iter().enumerate() {
            if v[k] == 0.0 {
                continue;
            }
            let du: f64 = row.iter().zip(u).filter(|(_, &uj)| uj != 0.0).map(|(p, &uj)| p.eval(x) * uj).sum();
            s += du * v[k];
        }
        s
    }
}

/// `B_X(X₁, X₂) = ⟨A'_X(X₁), X₂⟩ − ⟨A'_X(X₂), X₁⟩`
pub fn field_eval(a: &MagneticPotential, x: &LieVector, x1: &LieVector, x2: &LieVector) -> f64 {
    a.derivative_pairing(&x.0, &x1.0, &x2.0) - a.derivative_pairing(&x.0, &x2.0, &x1.0)
}

/// Polynomial `ψ` with `dψ = A − A₁`, namely `ψ(X) = ∫₀¹ ⟨(A − A₁)_{tX}, X⟩ dt`.
/// Fails when the two fields disagree at a random probe.
pub fn gauge_function(a: &MagneticPotential, a1: &MagneticPotential) -> Result<Polynomial, MagneticError> {
    let d = a.dim();
    if a1.dim() != d {
        return Err(MagneticError::ShapeError("potentials over different dimensions".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mut draw = || LieVector((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect());
    for _ in 0..FIELD_PROBES {
        let (x, x1, x2) = (draw(), draw(), draw());
        let error = (field_eval(a, &x, &x1, &x2) - field_eval(a1, &x, &x1, &x2)).abs();
        if error > FIELD_PROBE_TOL {
            return Err(MagneticError::FieldsDiffer { error });
        }
    }
    let diff = a.difference(a1)?;
    Ok(diff
        .components
        .iter()
        .enumerate()
        .fold(Polynomial::zero(d), |acc, (k, p)| acc.add(&p.ray_integral_times(k))))
}

/// `⟨A_Y, (R_Y)'₀X⟩`
pub fn pairing_ar(alg: &NilpotentLieAlgebra, a: &MagneticPotential, y: &LieVector, x: &LieVector) -> f64 {
    pairing_ar_slice(alg, a, &y.0, &x.0)
}

pub(crate) fn pairing_ar_slice(alg: &NilpotentLieAlgebra, a: &MagneticPotential, y: &[f64], x: &[f64]) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let d = alg.dim();
    let mut r = [0.0; MAX_DIM];
    let mut ay = [0.0; MAX_DIM];
    alg.right_translation_differential_into(y, x, &mut r[..d]);
    a.eval_into(y, &mut ay[..d]);
    dot(&ay[..d], &r[..d])
}

/// `θ₀(X, ξ)(Y) = ⟨ξ, Y⟩ + ⟨A_Y, (R_Y)'₀X⟩`
pub fn theta0_eval(
    alg: &NilpotentLieAlgebra,
    a: &MagneticPotential,
    x: &LieVector,
    xi: &LieCovector,
    y: &LieVector,
) -> f64 {
    xi.pair(y) + pairing_ar(alg, a, y, x)
}

/// Polynomial degree in `s` of `⟨A(γ(s)), (R_{γ(s)})'₀W⟩` along a BCH segment.
pub(crate) fn alpha_integrand_degree(alg: &NilpotentLieAlgebra, a: &MagneticPotential) -> usize {
    alg.path_degree() * (a.degree() + alg.nilpotency_class())
}

/// The real phase `φ` with `α_A(Y, Z) = e^{iφ}`:
/// `φ = ∫₀¹ ⟨A(γ(s)), (R_{γ(s)})'₀(Y∗(−Z))⟩ ds`, `γ(s) = (s(Z∗(−Y)))∗Y`.
pub fn alpha_exponent(alg: &NilpotentLieAlgebra, a: &MagneticPotential, y: &[f64], z: &[f64]) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let d = alg.dim();
    let mut neg = [0.0; MAX_DIM];
    let mut v = [0.0; MAX_DIM];
    let mut w = [0.0; MAX_DIM];
    for i in 0..d {
        neg[i] = -y[i];
    }
    alg.bch_into(z, &neg[..d], &mut v[..d]);
    for i in 0..d {
        neg[i] = -z[i];
    }
    alg.bch_into(y, &neg[..d], &mut w[..d]);

    let rule = exact_rule_for_degree(alpha_integrand_degree(alg, a));
    let mut sv = [0.0; MAX_DIM];
    let mut g = [0.0; MAX_DIM];
    let mut phi = 0.0;
    for (s, weight) in rule.iter() {
        for i in 0..d {
            sv[i] = s * v[i];
        }
        alg.bch_into(&sv[..d], y, &mut g[..d]);
        phi += weight * pairing_ar_slice(alg, a, &g[..d], &w[..d]);
    }
    phi
}

/// `α_A(Y, Z)`, unimodular by construction.
pub fn alpha_phase(alg: &NilpotentLieAlgebra, a: &MagneticPotential, y: &LieVector, z: &LieVector) -> Complex64 {
    Complex64::from_polar(1.0, alpha_exponent(alg, a, &y.0, &z.0))
}

/// Specialized form for two-step algebras quoted in the literature:
/// `exp(−i ∫₀¹ ⟨A(sZ + (1−s)Y), Z∗(−Y)⟩ ds)`. It agrees with
/// [`alpha_phase`] when `A` annihilates `[𝔤, 𝔤]`.
pub fn alpha_phase_two_step_form(
    alg: &NilpotentLieAlgebra,
    a: &MagneticPotential,
    y: &LieVector,
    z: &LieVector,
) -> Complex64 {
    let d = alg.dim();
    let v = alg.bch(z, &y.neg());
    let rule = exact_rule_for_degree(a.degree());
    let mut p = vec![0.0; d];
    let mut ap = vec![0.0; d];
    let mut phi = 0.0;
    for (s, w) in rule.iter() {
        for i in 0..d {
            p[i] = s * z.0[i] + (1.0 - s) * y.0[i];
        }
        a.eval_into(&p, &mut ap);
        phi += w * dot(&ap, &v.0);
    }
    Complex64::from_polar(1.0, -phi)
}
