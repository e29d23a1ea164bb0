//! Gauss-Legendre rules on the unit interval.
//!
//! Every `∫₀¹ … ds` in the calculus has a polynomial integrand, so callers pick
//! the node count from a degree bound and the rule integrates it exactly.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

const MAX_CACHED: usize = 64;

/// Nodes and weights of an `m`-point rule mapped to `[0, 1]`.
#[derive(Debug, Clone)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UnitRule {
    fn build(points: usize) -> Self {
        let rule = GaussLegendre::new(NonZeroUsize::new(points).expect("points > 0"));
        let (nodes, weights) = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.iter().map(|(s, w)| w * f(s)).sum()
    }
}

/// Shared `m`-point rule on `[0, 1]`.
pub fn unit_rule(points: usize) -> &'static UnitRule {
    static CACHE: OnceLock<Vec<UnitRule>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (1..=MAX_CACHED).map(UnitRule::build).collect());
    let points = points.clamp(1, MAX_CACHED);
    &cache[points - 1]
}

/// Smallest rule that is exact for polynomials of the given degree.
pub fn exact_rule_for_degree(degree: usize) -> &'static UnitRule {
    unit_rule(degree / 2 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_its_degree() {
        for deg in 0..20 {
            let rule = exact_rule_for_degree(deg);
            let got = rule.integrate(|s| s.powi(deg as i32));
            assert!((got - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn weights_sum_to_one() {
        for m in [1, 2, 5, 17] {
            let s: f64 = unit_rule(m).weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
