//! Finite-dimensional nilpotent Lie algebras in exponential coordinates.
//!
//! The group law on a simply connected nilpotent group is the BCH product on
//! its Lie algebra, which is a polynomial map. Everything here is exact up to
//! floating point: the BCH series is summed through the last non-vanishing
//! bracket degree and every `∫₀¹ … ds` is a Gauss-Legendre rule sized to the
//! polynomial degree of its integrand.
//!
//! Nilpotency index follows the convention `𝔤₀ = 𝔤`, `𝔤ₖ₊₁ = [𝔤, 𝔤ₖ]`, with
//! the index `n` the last `k` for which `𝔤ₖ ≠ {0}`. Abelian algebras have index
//! 0 and the Heisenberg algebras have index 1. Much of the literature calls
//! `n + 1` the nilpotency class.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bch::{self, LETTER_X, LETTER_Y};
use crate::linalg::{self, PIVOT_TOL};
use crate::quadrature::{exact_rule_for_degree, UnitRule};

/// Largest supported algebra dimension (fixed-size scratch buffers).
pub const MAX_DIM: usize = 16;
/// Largest supported nilpotency index; BCH words go up to length index + 1.
pub const MAX_NILPOTENCY_INDEX: usize = bch::MAX_WORD_LEN - 1;
/// Tolerance for antisymmetry and the Jacobi identity.
pub const IDENTITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error("shape error: {0}")]
    ShapeError(String),
    #[error("structure constants are not antisymmetric at ({i}, {j}): error {error:e}")]
    AntisymmetryViolation { i: usize, j: usize, error: f64 },
    #[error("Jacobi identity fails for basis triple ({i}, {j}, {k}): error {error:e}")]
    JacobiViolation { i: usize, j: usize, k: usize, error: f64 },
    #[error("algebra is not nilpotent: lower central series stabilizes at dimension {stable_dim}")]
    NotNilpotent { stable_dim: usize },
    #[error("nilpotency index {index} exceeds the supported maximum {MAX_NILPOTENCY_INDEX}")]
    ClassTooLarge { index: usize },
    #[error("an abelian algebra has no top-layer quotient")]
    AbelianHasNoQuotient,
    #[error("cannot parse algebra definition: {0}")]
    Parse(String),
}

/// One `[e_i, e_j] = Σ_k coeffs[k] e_k` entry of an algebra file, 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub dim: usize,
    pub brackets: Vec<BracketEntry>,
}

/// Element of 𝔤 in the user basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieVector(pub Vec<f64>);

/// Element of 𝔤* in the dual of the user basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieCovector(pub Vec<f64>);

impl LieVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|x| x * s).collect())
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl LieCovector {
    pub fn pair(&self, x: &LieVector) -> f64 {
        dot(&self.0, &x.0)
    }
}

impl From<Vec<f64>> for LieVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<Vec<f64>> for LieCovector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quotient `𝔤/𝔤ₙ` together with the maps relating it to `𝔤`.
#[derive(Debug, Clone)]
pub struct TopQuotient {
    pub algebra: NilpotentLieAlgebra,
    /// `q`: rows map user coordinates of 𝔤 to quotient coordinates.
    pub projection: Vec<Vec<f64>>,
    /// `ι`: rows map quotient coordinates to user coordinates of 𝔤.
    pub section: Vec<Vec<f64>>,
}

impl TopQuotient {
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.projection, v)
    }

    pub fn lift(&self, u: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.section, u)
    }
}

/// Nonzero structure constant `[e_i, e_j] ∋ c·e_k`.
#[derive(Debug, Clone, Copy)]
struct Entry {
    i: usize,
    j: usize,
    k: usize,
    c: f64,
}

#[derive(Debug, Clone)]
pub struct NilpotentLieAlgebra {
    dim: usize,
    /// `c[(i·dim + j)·dim + k]`
    structure: Vec<f64>,
    entries: Vec<Entry>,
    index: usize,
    lcs_dims: Vec<usize>,
    /// Adapted basis vectors (user coordinates), top layer `𝔤ₙ` last.
    adapted: Vec<Vec<f64>>,
    /// Rows map user coordinates to adapted coordinates.
    to_adapted: Vec<Vec<f64>>,
    quotient: Option<Box<TopQuotient>>,
}

impl NilpotentLieAlgebra {
    /// Validates the structure constants and computes the lower central
    /// series, the nilpotency index, an adapted basis and the quotient tower.
    pub fn new(dim: usize, structure_constants: Vec<f64>) -> Result<Self, LieError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(LieError::ShapeError(format!("dimension {dim} outside 1..={MAX_DIM}")));
        }
        if structure_constants.len() != dim * dim * dim {
            return Err(LieError::ShapeError(format!(
                "expected {} structure constants, got {}",
                dim * dim * dim,
                structure_constants.len()
            )));
        }
        if structure_constants.iter().any(|c| !c.is_finite()) {
            return Err(LieError::ShapeError("non-finite structure constant".into()));
        }
        let c = |i: usize, j: usize, k: usize| structure_constants[(i * dim + j) * dim + k];
        for i in 0..dim {
            for j in i..dim {
                let error = (0..dim).map(|k| (c(i, j, k) + c(j, i, k)).abs()).fold(0.0, f64::max);
                if error > IDENTITY_TOL {
                    return Err(LieError::AntisymmetryViolation { i, j, error });
                }
            }
        }
        let mut entries = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let v = c(i, j, k);
                    if v != 0.0 {
                        entries.push(Entry { i, j, k, c: v });
                    }
                }
            }
        }
        let mut alg = Self {
            dim,
            structure: structure_constants,
            entries,
            index: 0,
            lcs_dims: vec![],
            adapted: vec![],
            to_adapted: vec![],
            quotient: None,
        };
        alg.check_jacobi()?;
        let series = alg.lower_central_series()?;
        alg.index = series.len() - 1;
        if alg.index > MAX_NILPOTENCY_INDEX {
            return Err(LieError::ClassTooLarge { index: alg.index });
        }
        alg.lcs_dims = series.iter().map(Vec::len).collect();
        alg.adapted = adapted_basis(&series, dim);
        let m: Vec<Vec<f64>> = (0..dim).map(|r| alg.adapted.iter().map(|b| b[r]).collect()).collect();
        alg.to_adapted = linalg::invert(&m)
            .ok_or_else(|| LieError::ShapeError("adapted basis is singular".into()))?;
        if alg.index > 0 {
            alg.quotient = Some(Box::new(alg.build_quotient()?));
        }
        Ok(alg)
    }

    /// Abelian algebra ℝᵈ.
    pub fn abelian(dim: usize) -> Result<Self, LieError> {
        Self::new(dim, vec![0.0; dim * dim * dim])
    }

    /// Heisenberg algebra of dimension `2k+1` with `[e_i, e_{k+i}] = e_{2k+1}`.
    pub fn heisenberg(dim: usize) -> Result<Self, LieError> {
        if dim < 3 || dim.is_multiple_of(2) {
            return Err(LieError::ShapeError(format!("Heisenberg dimension must be odd and ≥ 3, got {dim}")));
        }
        let k = (dim - 1) / 2;
        let mut c = vec![0.0; dim * dim * dim];
        for i in 0..k {
            c[(i * dim + k + i) * dim + dim - 1] = 1.0;
            c[((k + i) * dim + i) * dim + dim - 1] = -1.0;
        }
        Self::new(dim, c)
    }

    /// Four-dimensional filiform algebra `[e₁,e₂]=e₃`, `[e₁,e₃]=e₄`.
    pub fn filiform4() -> Result<Self, LieError> {
        let d = 4;
        let mut c = vec![0.0; d * d * d];
        let mut set = |i: usize, j: usize, k: usize| {
            c[(i * d + j) * d + k] = 1.0;
            c[(j * d + i) * d + k] = -1.0;
        };
        set(0, 1, 2);
        set(0, 2, 3);
        Self::new(d, c)
    }

    /// `abelian:<d>`, `heisenberg:<2k+1>` or `filiform3:4`.
    pub fn from_preset(name: &str) -> Result<Self, LieError> {
        let (kind, arg) = name.split_once(':').ok_or_else(|| LieError::Parse(format!("unknown preset {name:?}")))?;
        let d: usize = arg.parse().map_err(|_| LieError::Parse(format!("bad dimension in {name:?}")))?;
        match kind {
            "abelian" => Self::abelian(d),
            "heisenberg" => Self::heisenberg(d),
            "filiform3" if d == 4 => Self::filiform4(),
            _ => Err(LieError::Parse(format!("unknown preset {name:?}"))),
        }
    }

    pub fn from_json(json: &str) -> Result<Self, LieError> {
        let file: AlgebraFile = serde_json::from_str(json).map_err(|e| LieError::Parse(e.to_string()))?;
        let mut entries = Vec::with_capacity(file.brackets.len());
        for b in file.brackets {
            if b.i == 0 || b.j == 0 {
                return Err(LieError::Parse("bracket indices are 1-based".into()));
            }
            entries.push((b.i - 1, b.j - 1, b.coeffs));
        }
        Self::new(file.dim, structure_from_brackets(file.dim, &entries)?)
    }

    /// Inverse of [`Self::from_json`], listing each `i < j` pair with a
    /// nonzero bracket.
    pub fn to_json(&self) -> String {
        let d = self.dim;
        let mut brackets = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                let coeffs: Vec<f64> = (0..d).map(|k| self.structure[(i * d + j) * d + k]).collect();
                if coeffs.iter().any(|&v| v != 0.0) {
                    brackets.push(BracketEntry { i: i + 1, j: j + 1, coeffs });
                }
            }
        }
        serde_json::to_string(&AlgebraFile { dim: d, brackets }).expect("algebra serializes")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nilpotency index `n` (abelian: 0, two-step: 1).
    pub fn nilpotency_class(&self) -> usize {
        self.index
    }

    /// `dim 𝔤ₖ` for `k = 0..=n`.
    pub fn lcs_dims(&self) -> &[usize] {
        &self.lcs_dims
    }

    pub fn structure_constants(&self) -> &[f64] {
        &self.structure
    }

    /// Columns are the adapted basis vectors in user coordinates.
    pub fn adapted_change_of_basis(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|r| self.adapted.iter().map(|b| b[r]).collect()).collect()
    }

    pub fn is_abelian(&self) -> bool {
        self.index == 0
    }

    /// True when `[𝔤, [𝔤, 𝔤]] = 0` (abelian included).
    pub fn is_two_step(&self) -> bool {
        self.index <= 1
    }

    /// For each user coordinate, whether no bracket has a component along
    /// it. Such coordinates of `X ∗ Y` are exactly `X_k + Y_k`.
    pub fn bracket_free_axes(&self) -> Vec<bool> {
        let mut free = vec![true; self.dim];
        for e in &self.entries {
            free[e.k] = false;
        }
        free
    }

    /// `𝔤/𝔤ₙ` with projection and section, for `n ≥ 1`.
    pub fn quotient_by_top_layer(&self) -> Result<TopQuotient, LieError> {
        self.quotient.as_deref().cloned().ok_or(LieError::AbelianHasNoQuotient)
    }

    pub(crate) fn top_quotient(&self) -> Option<&TopQuotient> {
        self.quotient.as_deref()
    }

    fn check_jacobi(&self) -> Result<(), LieError> {
        let d = self.dim;
        let mut t1 = vec![0.0; d];
        let mut t2 = vec![0.0; d];
        let mut acc = vec![0.0; d];
        let mut tmp = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let (ei, ej, ek) = (unit(d, i), unit(d, j), unit(d, k));
                    acc.iter_mut().for_each(|x| *x = 0.0);
                    for (a, b, c) in [(&ei, &ej, &ek), (&ej, &ek, &ei), (&ek, &ei, &ej)] {
                        self.bracket_into(b, c, &mut t1);
                        self.bracket_into(a, &t1, &mut t2);
                        for (x, y) in acc.iter_mut().zip(&t2) {
                            *x += y;
                        }
                    }
                    tmp.copy_from_slice(&acc);
                    let error = tmp.iter().map(|x| x.abs()).fold(0.0, f64::max);
                    if error > IDENTITY_TOL {
                        return Err(LieError::JacobiViolation { i, j, k, error });
                    }
                }
            }
        }
        Ok(())
    }

    /// Bases of `𝔤₀ ⊋ 𝔤₁ ⊋ … ⊋ 𝔤ₙ`, each in reduced row echelon form.
    fn lower_central_series(&self) -> Result<Vec<Vec<Vec<f64>>>, LieError> {
        let d = self.dim;
        let mut series = vec![(0..d).map(|i| unit(d, i)).collect::<Vec<_>>()];
        loop {
            let current = series.last().expect("nonempty");
            let mut spanning = Vec::with_capacity(d * current.len());
            let mut out = vec![0.0; d];
            for i in 0..d {
                let ei = unit(d, i);
                for b in current {
                    self.bracket_into(&ei, b, &mut out);
                    spanning.push(out.clone());
                }
            }
            let next = linalg::span_basis(&spanning, d, PIVOT_TOL);
            if next.is_empty() {
                return Ok(series);
            }
            if next.len() == current.len() {
                return Err(LieError::NotNilpotent { stable_dim: next.len() });
            }
            series.push(next);
        }
    }

    fn build_quotient(&self) -> Result<TopQuotient, LieError> {
        let d = self.dim;
        let top = *self.lcs_dims.last().expect("nonempty");
        let r = d - top;
        let mut c = vec![0.0; r * r * r];
        let mut w = vec![0.0; d];
        for i in 0..r {
            for j in 0..r {
                self.bracket_into(&self.adapted[i], &self.adapted[j], &mut w);
                let coords = linalg::mat_vec(&self.to_adapted, &w);
                for k in 0..r {
                    c[(i * r + j) * r + k] = coords[k];
                }
            }
        }
        let algebra = NilpotentLieAlgebra::new(r, c)?;
        debug_assert_eq!(algebra.index + 1, self.index);
        Ok(TopQuotient {
            algebra,
            projection: self.to_adapted[..r].to_vec(),
            section: (0..d).map(|row| (0..r).map(|i| self.adapted[i][row]).collect()).collect(),
        })
    }

    /// `[x, y]` written into `out`.
    pub fn bracket_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for e in &self.entries {
            out[e.k] += e.c * x[e.i] * y[e.j];
        }
    }

    pub fn bracket(&self, x: &LieVector, y: &LieVector) -> LieVector {
        let mut out = vec![0.0; self.dim];
        self.bracket_into(&x.0, &y.0, &mut out);
        LieVector(out)
    }

    /// Sums the BCH words built from the letters `x` (first argument) and
    /// `y`. With `single_x`, only words containing exactly one `x` are kept,
    /// which is the derivative of `(t·x)∗y` at `t = 0`.
    fn bch_series(&self, x: &[f64], y: &[f64], single_x: bool, out: &mut [f64]) {
        let d = self.dim;
        let max_len = self.index + 1;
        let table = bch::table();
        out.iter_mut().for_each(|v| *v = 0.0);
        let letters = [x, y];
        for first in [LETTER_X, LETTER_Y] {
            let xs = usize::from(first == LETTER_X);
            if single_x && xs > 1 {
                continue;
            }
            let mut v = [0.0; MAX_DIM];
            v[..d].copy_from_slice(letters[first]);
            self.bch_dfs(&letters, &v, 1, first, xs, single_x, max_len, table, out);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn bch_dfs(
        &self,
        letters: &[&[f64]; 2],
        value: &[f64; MAX_DIM],
        len: usize,
        code: usize,
        x_count: usize,
        single_x: bool,
        max_len: usize,
        table: &[Vec<f64>],
        out: &mut [f64],
    ) {
        let d = self.dim;
        if !single_x || x_count == 1 {
            let c = table[len][code];
            if c != 0.0 {
                for (o, v) in out.iter_mut().zip(&value[..d]) {
                    *o += c * v;
                }
            }
        }
        if len == max_len {
            return;
        }
        for letter in [LETTER_X, LETTER_Y] {
            if len == 1 && letter == code {
                continue;
            }
            let xs = x_count + usize::from(letter == LETTER_X);
            if single_x && xs > 1 {
                continue;
            }
            let mut next = [0.0; MAX_DIM];
            self.bracket_into(letters[letter], &value[..d], &mut next[..d]);
            if next[..d].iter().all(|&v| v == 0.0) {
                continue;
            }
            let next_code = (letter << len) | code;
            self.bch_dfs(letters, &next, len + 1, next_code, xs, single_x, max_len, table, out);
        }
    }

    /// BCH product `x ∗ y` written into `out`.
    pub fn bch_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        if self.index == 0 {
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                *o = a + b;
            }
            return;
        }
        if self.index == 1 {
            self.bracket_into(x, y, out);
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                *o = a + b + 0.5 * *o;
            }
            return;
        }
        self.bch_series(x, y, false, out);
    }

    /// Group product `X ∗ Y` in exponential coordinates.
    pub fn bch(&self, x: &LieVector, y: &LieVector) -> LieVector {
        let mut out = vec![0.0; self.dim];
        self.bch_into(&x.0, &y.0, &mut out);
        LieVector(out)
    }

    /// `(R_Y)'₀ X = d/dt|₀ (tX) ∗ Y`.
    pub fn right_translation_differential_into(&self, y: &[f64], x: &[f64], out: &mut [f64]) {
        if self.index == 0 {
            out.copy_from_slice(x);
            return;
        }
        if self.index == 1 {
            self.bracket_into(x, y, out);
            for (o, a) in out.iter_mut().zip(x) {
                *o = a + 0.5 * *o;
            }
            return;
        }
        self.bch_series(x, y, true, out);
    }

    pub fn right_translation_differential(&self, y: &LieVector, x: &LieVector) -> LieVector {
        let mut out = vec![0.0; self.dim];
        self.right_translation_differential_into(&y.0, &x.0, &mut out);
        LieVector(out)
    }

    /// Quadrature rule exact for `s ↦ Y ∗ (sV)` and the segment midpoint.
    pub(crate) fn path_rule(&self) -> &'static UnitRule {
        exact_rule_for_degree(self.index + 1)
    }

    /// Polynomial degree in `s` of `(sV) ∗ Y` (at most one per BCH letter).
    pub(crate) fn path_degree(&self) -> usize {
        self.index.max(1)
    }

    /// `Ψ_{𝔤,V}(Y) = ∫₀¹ Y ∗ (sV) ds` written into `out`.
    pub fn psi_map_into(&self, v: &[f64], y: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut sv = [0.0; MAX_DIM];
        let mut p = [0.0; MAX_DIM];
        for (s, w) in self.path_rule().iter() {
            for (a, b) in sv[..d].iter_mut().zip(v) {
                *a = s * b;
            }
            self.bch_into(y, &sv[..d], &mut p[..d]);
            for (o, q) in out.iter_mut().zip(&p[..d]) {
                *o += w * q;
            }
        }
    }

    pub fn psi_map(&self, v: &LieVector, y: &LieVector) -> LieVector {
        let mut out = vec![0.0; self.dim];
        self.psi_map_into(&v.0, &y.0, &mut out);
        LieVector(out)
    }

    /// Inverse of `Ψ_{𝔤,V}` by induction on the nilpotency index: solve in
    /// `𝔤/𝔤ₙ`, lift by the section, and correct by the central defect
    /// `Δ(Z) = Z − Ψ_{𝔤,V}(ι Φ q Z)`.
    pub fn psi_inverse_into(&self, v: &[f64], z: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let Some(q) = self.top_quotient() else {
            for ((o, a), b) in out.iter_mut().zip(z).zip(v) {
                *o = a - 0.5 * b;
            }
            return;
        };
        let qv = q.project(v);
        let qz = q.project(z);
        let mut phi = vec![0.0; q.algebra.dim];
        q.algebra.psi_inverse_into(&qv, &qz, &mut phi);
        let lifted = q.lift(&phi);
        let mut psi = [0.0; MAX_DIM];
        self.psi_map_into(v, &lifted, &mut psi[..d]);
        for i in 0..d {
            out[i] = z[i] - psi[i] + lifted[i];
        }
    }

    pub fn psi_inverse(&self, v: &LieVector, z: &LieVector) -> LieVector {
        let mut out = vec![0.0; self.dim];
        self.psi_inverse_into(&v.0, &z.0, &mut out);
        LieVector(out)
    }

    /// `∫₀¹ (s(Z∗(−Y)))∗Y ds`, the BCH midpoint of the segment from `Y` to `Z`.
    pub fn segment_midpoint_into(&self, y: &[f64], z: &[f64], out: &mut [f64]) {
        let d = self.dim;
        let mut neg_y = [0.0; MAX_DIM];
        for (a, b) in neg_y[..d].iter_mut().zip(y) {
            *a = -b;
        }
        let mut v = [0.0; MAX_DIM];
        self.bch_into(z, &neg_y[..d], &mut v[..d]);
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut sv = [0.0; MAX_DIM];
        let mut p = [0.0; MAX_DIM];
        for (s, w) in self.path_rule().iter() {
            for (a, b) in sv[..d].iter_mut().zip(&v[..d]) {
                *a = s * b;
            }
            self.bch_into(&sv[..d], y, &mut p[..d]);
            for (o, q) in out.iter_mut().zip(&p[..d]) {
                *o += w * q;
            }
        }
    }

    pub fn segment_midpoint(&self, y: &LieVector, z: &LieVector) -> LieVector {
        let mut out = vec![0.0; self.dim];
        self.segment_midpoint_into(&y.0, &z.0, &mut out);
        LieVector(out)
    }
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = 1.0;
    v
}

/// Basis of 𝔤 ordered as complements of `𝔤₁ ⊂ 𝔤₀`, `𝔤₂ ⊂ 𝔤₁`, …, then `𝔤ₙ`.
fn adapted_basis(series: &[Vec<Vec<f64>>], dim: usize) -> Vec<Vec<f64>> {
    let n = series.len() - 1;
    let mut blocks: Vec<Vec<Vec<f64>>> = vec![series[n].clone()];
    let mut chosen = series[n].clone();
    for k in (0..n).rev() {
        let mut block = Vec::new();
        for cand in &series[k] {
            let mut trial = chosen.clone();
            trial.push(cand.clone());
            if linalg::rank(&trial, dim) > chosen.len() {
                chosen.push(cand.clone());
                block.push(cand.clone());
            }
            if chosen.len() == series[k].len() {
                break;
            }
        }
        blocks.push(block);
    }
    blocks.into_iter().rev().flatten().collect()
}

/// Structure constants from `(i, j, coeffs)` bracket entries with 0-based
/// indices, closed under antisymmetry.
pub fn structure_from_brackets(
    dim: usize,
    brackets: &[(usize, usize, Vec<f64>)],
) -> Result<Vec<f64>, LieError> {
    let mut c = vec![0.0; dim * dim * dim];
    let mut set = vec![false; dim * dim];
    for (i, j, coeffs) in brackets {
        let (i, j) = (*i, *j);
        if i >= dim || j >= dim || coeffs.len() != dim {
            return Err(LieError::ShapeError(format!("bad bracket entry ({}, {})", i + 1, j + 1)));
        }
        if i == j {
            if coeffs.iter().any(|&x| x != 0.0) {
                return Err(LieError::AntisymmetryViolation { i, j, error: coeffs.iter().map(|x| x.abs()).fold(0.0, f64::max) });
            }
            continue;
        }
        for (k, &v) in coeffs.iter().enumerate() {
            let fwd = (i * dim + j) * dim + k;
            let bwd = (j * dim + i) * dim + k;
            if set[j * dim + i] && (c[bwd] + v).abs() > IDENTITY_TOL {
                return Err(LieError::AntisymmetryViolation { i, j, error: (c[bwd] + v).abs() });
            }
            c[fwd] = v;
            c[bwd] = -v;
        }
        set[i * dim + j] = true;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> LieVector {
        LieVector(x.to_vec())
    }

    #[test]
    fn abelian_line_has_index_zero() {
        let g = NilpotentLieAlgebra::abelian(1).unwrap();
        assert_eq!(g.nilpotency_class(), 0);
        assert_eq!(g.lcs_dims(), &[1]);
        assert_eq!(g.quotient_by_top_layer().unwrap_err(), LieError::AbelianHasNoQuotient);
    }

    #[test]
    fn heisenberg_series_and_index() {
        let g = NilpotentLieAlgebra::heisenberg(3).unwrap();
        assert_eq!(g.nilpotency_class(), 1);
        assert_eq!(g.lcs_dims(), &[3, 1]);
    }

    #[test]
    fn solvable_non_nilpotent_is_rejected() {
        let c = structure_from_brackets(3, &[(0, 1, vec![1.0, 0.0, 0.0])]).unwrap();
        assert!(matches!(NilpotentLieAlgebra::new(3, c), Err(LieError::NotNilpotent { stable_dim: 1 })));
    }

    #[test]
    fn broken_jacobi_is_rejected() {
        // [e1,e2]=e3, [e2,e3]=e1, [e3,e1]=e2 would be so(3); break it by scaling one.
        let c = structure_from_brackets(
            3,
            &[(0, 1, vec![0.0, 0.0, 1.0]), (1, 2, vec![1.0, 0.0, 0.0]), (2, 0, vec![0.0, 1.0, 0.5]), (0, 2, vec![0.0, -1.0, -0.5])],
        );
        // second entry for (0,2) contradicts nothing (same values negated), so building succeeds
        let c = c.unwrap();
        assert!(matches!(NilpotentLieAlgebra::new(3, c), Err(LieError::JacobiViolation { .. })));
    }

    #[test]
    fn wrong_shape_is_rejected() {
        assert!(matches!(NilpotentLieAlgebra::new(2, vec![0.0; 7]), Err(LieError::ShapeError(_))));
    }

    #[test]
    fn heisenberg_brackets() {
        let g = NilpotentLieAlgebra::heisenberg(3).unwrap();
        let (e1, e2) = (LieVector::basis(3, 0), LieVector::basis(3, 1));
        assert_eq!(g.bracket(&e1, &e2), v(&[0.0, 0.0, 1.0]));
        assert_eq!(g.bracket(&e2, &e1), v(&[0.0, 0.0, -1.0]));
    }

    #[test]
    fn bch_two_step_and_filiform() {
        let h = NilpotentLieAlgebra::heisenberg(3).unwrap();
        let p = h.bch(&LieVector::basis(3, 0), &LieVector::basis(3, 1));
        assert!(p.max_abs_diff(&v(&[1.0, 1.0, 0.5])) < 1e-15);

        let f = NilpotentLieAlgebra::filiform4().unwrap();
        assert_eq!(f.nilpotency_class(), 2);
        assert_eq!(f.lcs_dims(), &[4, 2, 1]);
        let p = f.bch(&LieVector::basis(4, 0), &LieVector::basis(4, 1));
        assert!(p.max_abs_diff(&v(&[1.0, 1.0, 0.5, 1.0 / 12.0])) < 1e-15);
    }

    #[test]
    fn right_translation_differential_two_step() {
        let h = NilpotentLieAlgebra::heisenberg(3).unwrap();
        let x = v(&[0.3, -1.2, 0.7]);
        let y = v(&[1.1, 0.4, -0.2]);
        let expect = x.add(&h.bracket(&x, &y).scaled(0.5));
        assert!(h.right_translation_differential(&y, &x).max_abs_diff(&expect) < 1e-15);
        assert!(h.right_translation_differential(&LieVector::zeros(3), &x).max_abs_diff(&x) < 1e-15);
    }

    #[test]
    fn psi_examples() {
        let a = NilpotentLieAlgebra::abelian(2).unwrap();
        let got = a.psi_map(&v(&[1.0, 2.0]), &v(&[0.5, 0.5]));
        assert!(got.max_abs_diff(&v(&[1.0, 1.5])) < 1e-15);

        let h = NilpotentLieAlgebra::heisenberg(3).unwrap();
        let got = h.psi_map(&LieVector::basis(3, 0), &LieVector::basis(3, 1));
        assert!(got.max_abs_diff(&v(&[0.5, 1.0, -0.25])) < 1e-15);
        let y = v(&[0.2, 0.3, 0.4]);
        assert!(h.psi_map(&LieVector::zeros(3), &y).max_abs_diff(&y) < 1e-15);
    }

    #[test]
    fn quotients() {
        let h = NilpotentLieAlgebra::heisenberg(3).unwrap();
        let q = h.quotient_by_top_layer().unwrap();
        assert!(q.algebra.is_abelian());
        assert_eq!(q.algebra.dim(), 2);
        assert_eq!(q.project(&[1.0, 2.0, 3.0]), vec![1.0, 2.0]);

        let f = NilpotentLieAlgebra::filiform4().unwrap();
        let q = f.quotient_by_top_layer().unwrap();
        assert_eq!(q.algebra.nilpotency_class(), 1);
        let b = q.algebra.bracket(&LieVector::basis(3, 0), &LieVector::basis(3, 1));
        assert_eq!(b, v(&[0.0, 0.0, 1.0]));
        for qq in [&q, &h.quotient_by_top_layer().unwrap()] {
            let r = qq.algebra.dim();
            for i in 0..r {
                let e = LieVector::basis(r, i);
                assert!(LieVector(qq.project(&qq.lift(&e.0))).max_abs_diff(&e) < 1e-15);
            }
        }
    }

    #[test]
    fn segment_midpoint_two_step_is_average() {
        let h = NilpotentLieAlgebra::heisenberg(3).unwrap();
        let y = v(&[0.5, -1.0, 2.0]);
        let z = v(&[1.5, 0.25, -0.75]);
        let m = h.segment_midpoint(&y, &z);
        assert!(m.max_abs_diff(&y.add(&z).scaled(0.5)) < 1e-14);
    }

    #[test]
    fn presets_and_files() {
        assert_eq!(NilpotentLieAlgebra::from_preset("abelian:2").unwrap().nilpotency_class(), 0);
        assert_eq!(NilpotentLieAlgebra::from_preset("heisenberg:5").unwrap().dim(), 5);
        assert_eq!(NilpotentLieAlgebra::from_preset("filiform3:4").unwrap().nilpotency_class(), 2);
        assert!(matches!(NilpotentLieAlgebra::from_preset("filiform3:5"), Err(LieError::Parse(_))));
        assert!(matches!(NilpotentLieAlgebra::from_preset("heisenberg:4"), Err(LieError::ShapeError(_))));
        let f = NilpotentLieAlgebra::filiform4().unwrap();
        let back = NilpotentLieAlgebra::from_json(&f.to_json()).unwrap();
        assert_eq!(back.structure_constants(), f.structure_constants());
        let json = r#"{"dim":3,"brackets":[{"i":1,"j":2,"coeffs":[0,0,1]}]}"#;
        let h = NilpotentLieAlgebra::from_json(json).unwrap();
        assert_eq!(h.structure_constants(), NilpotentLieAlgebra::heisenberg(3).unwrap().structure_constants());
    }

    #[test]
    fn broken_jacobi_is_reported() {
        // the cyclic sum over (e1, e2, e3) is [e1, e4] = e4
        let json = r#"{"dim":4,"brackets":[{"i":1,"j":2,"coeffs":[0,0,1,0]},{"i":2,"j":3,"coeffs":[0,0,0,1]},{"i":1,"j":4,"coeffs":[0,0,0,1]}]}"#;
        assert!(matches!(NilpotentLieAlgebra::from_json(json), Err(LieError::JacobiViolation { .. })));
    }
}
