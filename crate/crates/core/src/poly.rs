//! Sparse real polynomials in the exponential coordinates of 𝔤.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    /// Builds a polynomial, merging repeated exponents and dropping zeros.
    /// Every exponent vector must have length `dim`.
    pub fn from_terms(dim: usize, terms: Vec<Monomial>) -> Option<Self> {
        let mut merged: Vec<Monomial> = Vec::with_capacity(terms.len());
        for t in terms {
            if t.exponents.len() != dim || !t.coeff.is_finite() {
                return None;
            }
            match merged.iter_mut().find(|m| m.exponents == t.exponents) {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        merged.retain(|m| m.coeff != 0.0);
        merged.sort_by(|a, b| a.exponents.cmp(&b.exponents));
        Some(Self { dim, terms: merged })
    }

    /// `c · x_k`
    pub fn linear(dim: usize, k: usize, c: f64) -> Self {
        let mut e = vec![0; dim];
        e[k] = 1;
        Self::from_terms(dim, vec![Monomial { exponents: e, coeff: c }]).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|m| total(&m.exponents) as usize).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|m| m.coeff * m.exponents.iter().zip(x).map(|(&e, &v)| v.powi(e as i32)).product::<f64>())
            .sum()
    }

    pub fn partial(&self, k: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|m| m.exponents[k] > 0)
            .map(|m| {
                let mut e = m.exponents.clone();
                let c = m.coeff * e[k] as f64;
                e[k] -= 1;
                Monomial { exponents: e, coeff: c }
            })
            .collect();
        Self::from_terms(self.dim, terms).expect("same dim")
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.dim).map(|k| self.partial(k)).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Self::from_terms(self.dim, terms).expect("same dim")
    }

    pub fn scaled(&self, s: f64) -> Self {
        let terms = self.terms.iter().map(|m| Monomial { exponents: m.exponents.clone(), coeff: m.coeff * s }).collect();
        Self::from_terms(self.dim, terms).expect("same dim")
    }

    /// `x_k · p(x)` with every monomial of total degree `m` divided by `m + 1`,
    /// which is `∫₀¹ p(tx) x_k dt`.
    pub(crate) fn ray_integral_times(&self, k: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|m| {
                let mut e = m.exponents.clone();
                let c = m.coeff / (total(&e) as f64 + 1.0);
                e[k] += 1;
                Monomial { exponents: e, coeff: c }
            })
            .collect();
        Self::from_terms(self.dim, terms).expect("same dim")
    }
}

fn total(e: &[u32]) -> u32 {
    e.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mono(e: &[u32], c: f64) -> Monomial {
        Monomial { exponents: e.to_vec(), coeff: c }
    }

    #[test]
    fn merge_and_eval() {
        let p = Polynomial::from_terms(2, vec![mono(&[1, 0], 2.0), mono(&[0, 2], 1.0), mono(&[1, 0], -0.5)]).unwrap();
        assert_eq!(p.terms().len(), 2);
        assert_eq!(p.eval(&[2.0, 3.0]), 1.5 * 2.0 + 9.0);
        assert_eq!(p.degree(), 2);
        assert!(Polynomial::from_terms(2, vec![mono(&[1], 1.0)]).is_none());
    }

    #[test]
    fn derivatives() {
        let p = Polynomial::from_terms(2, vec![mono(&[2, 1], 3.0)]).unwrap();
        assert_eq!(p.partial(0), Polynomial::from_terms(2, vec![mono(&[1, 1], 6.0)]).unwrap());
        assert!(p.partial(1).partial(1).is_zero());
    }

    #[test]
    fn ray_integral() {
        // ∫₀¹ (t x) x dt = x²/2
        let p = Polynomial::linear(1, 0, 1.0).ray_integral_times(0);
        assert_eq!(p.eval(&[3.0]), 4.5);
    }
}
