//! Word coefficients of the Baker-Campbell-Hausdorff series.
//!
//! `log(e^X e^Y)` is expanded in the free associative algebra on two letters
//! up to degree [`MAX_WORD_LEN`]. By the Dynkin-Specht-Wever lemma the degree
//! `d` part equals `(1/d) Σ_w c_w [w]`, where `[w]` is the right-nested
//! commutator `[w₁,[w₂,…,[w_{d-1},w_d]…]]`. The table below stores `c_w / d`.
//!
//! A word of length `len` is encoded as the binary number whose most
//! significant bit is its first letter, with `X = 0` and `Y = 1`.

use std::sync::OnceLock;

/// Longest word kept; supports nilpotency index up to 6.
pub const MAX_WORD_LEN: usize = 7;

pub const LETTER_X: usize = 0;
pub const LETTER_Y: usize = 1;

/// Truncated element of the free associative algebra: one coefficient
/// vector per degree, indexed by word code.
type FreeElement = Vec<Vec<f64>>;

fn zero_element() -> FreeElement {
    (0..=MAX_WORD_LEN).map(|d| vec![0.0; 1 << d]).collect()
}

fn mul(a: &FreeElement, b: &FreeElement) -> FreeElement {
    let mut out = zero_element();
    for (da, va) in a.iter().enumerate() {
        for (db, vb) in b.iter().enumerate() {
            if da + db > MAX_WORD_LEN {
                continue;
            }
            for (ca, &xa) in va.iter().enumerate() {
                if xa == 0.0 {
                    continue;
                }
                for (cb, &xb) in vb.iter().enumerate() {
                    if xb != 0.0 {
                        out[da + db][(ca << db) | cb] += xa * xb;
                    }
                }
            }
        }
    }
    out
}

fn exp_letter(letter: usize) -> FreeElement {
    let mut e = zero_element();
    let mut fact = 1.0;
    for d in 0..=MAX_WORD_LEN {
        if d > 0 {
            fact *= d as f64;
        }
        // letter^d: every position carries the same letter
        let code = if letter == LETTER_Y { (1 << d) - 1 } else { 0 };
        e[d][code] = 1.0 / fact;
    }
    e
}

fn compute_table() -> Vec<Vec<f64>> {
    let mut z = mul(&exp_letter(LETTER_X), &exp_letter(LETTER_Y));
    z[0][0] = 0.0;

    let mut log = zero_element();
    let mut power = z.clone();
    for k in 1..=MAX_WORD_LEN {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        for (d, coeffs) in power.iter().enumerate() {
            for (c, &x) in coeffs.iter().enumerate() {
                log[d][c] += sign * x / k as f64;
            }
        }
        power = mul(&power, &z);
    }

    log.iter()
        .enumerate()
        .map(|(d, coeffs)| {
            if d == 0 {
                coeffs.clone()
            } else {
                coeffs.iter().map(|c| c / d as f64).collect()
            }
        })
        .collect()
}

/// `table()[len][code]` is the coefficient of the nested commutator of the
/// word `code` in the BCH series, already divided by the word length.
pub fn table() -> &'static [Vec<f64>] {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(compute_table)
}

/// Coefficient for the word spelled by `letters` (first letter first).
pub fn word_coefficient(letters: &[usize]) -> f64 {
    let code = letters.iter().fold(0usize, |acc, &l| (acc << 1) | l);
    table()[letters.len()][code]
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: usize = LETTER_X;
    const Y: usize = LETTER_Y;

    #[test]
    fn low_degree_terms() {
        assert_eq!(word_coefficient(&[X]), 1.0);
        assert_eq!(word_coefficient(&[Y]), 1.0);
        // ¼[X,Y] + ¼·(−[Y,X])... both words contribute ½[X,Y] in total
        assert!((word_coefficient(&[X, Y]) - 0.25).abs() < 1e-15);
        assert!((word_coefficient(&[Y, X]) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn degree_three_matches_known_series() {
        // 1/12 [X,[X,Y]] + 1/12 [Y,[Y,X]]: the nested brackets of XXY, XYX, YXX, ...
        // must combine to this. Evaluate in the free Lie algebra by expanding
        // each nested bracket back into associative words.
        let mut assoc = [0.0; 8];
        for code in 0..8usize {
            let letters: Vec<usize> = (0..3).map(|i| (code >> (2 - i)) & 1).collect();
            let c = table()[3][code];
            // [a,[b,c]] = abc - acb - bca + cba
            let (a, b, cc) = (letters[0], letters[1], letters[2]);
            let w = |p: usize, q: usize, r: usize| (p << 2) | (q << 1) | r;
            assoc[w(a, b, cc)] += c;
            assoc[w(a, cc, b)] -= c;
            assoc[w(b, cc, a)] -= c;
            assoc[w(cc, b, a)] += c;
        }
        // 1/12 (XXY - 2XYX + YXX) + 1/12 (YYX - 2YXY + XYY)
        let expect = [0.0, 1.0, -2.0, 1.0, 1.0, -2.0, 1.0, 0.0].map(|v: f64| v / 12.0);
        for (got, want) in assoc.iter().zip(expect) {
            assert!((got - want).abs() < 1e-15);
        }
    }
}
