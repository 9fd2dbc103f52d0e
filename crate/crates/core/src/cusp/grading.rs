//! Quasihomogeneous grading of monomials in `(a, b, z, ε)`.
//!
//! Weights are the blow-up exponents: 3 for `a`, 2 for `b`, 1 for `z`, 5 for `ε`.

use std::ops::Mul;

use crate::error::{Error, Result};

pub const WEIGHTS: [u32; 4] = [3, 2, 1, 5];

/// `coefficient · a^α b^β z^γ ε^δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub exponents: [u32; 4],
    pub coefficient: f64,
}

impl Monomial {
    pub fn new(alpha: u32, beta: u32, gamma: u32, delta: u32, coefficient: f64) -> Self {
        Monomial {
            exponents: [alpha, beta, gamma, delta],
            coefficient,
        }
    }

    pub fn constant(coefficient: f64) -> Self {
        Monomial::new(0, 0, 0, 0, coefficient)
    }

    pub fn eps_power(&self) -> u32 {
        self.exponents[3]
    }

    pub fn eval(&self, a: f64, b: f64, z: f64, eps: f64) -> f64 {
        let [al, be, ga, de] = self.exponents;
        self.coefficient
            * a.powi(al as i32)
            * b.powi(be as i32)
            * z.powi(ga as i32)
            * eps.powi(de as i32)
    }
}

impl Mul for Monomial {
    type Output = Monomial;

    fn mul(self, rhs: Monomial) -> Monomial {
        let mut exponents = self.exponents;
        for (e, r) in exponents.iter_mut().zip(rhs.exponents) {
            *e += r;
        }
        Monomial {
            exponents,
            coefficient: self.coefficient * rhs.coefficient,
        }
    }
}

pub fn quasihomogeneous_order(m: &Monomial) -> u32 {
    m.exponents.iter().zip(WEIGHTS).map(|(e, w)| e * w).sum()
}

/// Hypotheses of the formal normal form for component `i` of an `A_k` system:
/// every monomial carries a factor of `ε` and has order at least `2k − i + 1`.
pub fn check_nf_condition(terms: &[Monomial], i: u32, k: u32) -> Result<bool> {
    if k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {k}")));
    }
    if i < 1 || i > k {
        return Err(Error::domain(format!(
            "component index {i} outside 1..={k}"
        )));
    }
    let bound = 2 * k - i + 1;
    Ok(terms
        .iter()
        .all(|m| m.eps_power() >= 1 && quasihomogeneous_order(m) >= bound))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders() {
        assert_eq!(quasihomogeneous_order(&Monomial::new(1, 1, 0, 0, 1.0)), 5);
        assert_eq!(quasihomogeneous_order(&Monomial::new(0, 0, 1, 1, 1.0)), 6);
        assert_eq!(quasihomogeneous_order(&Monomial::constant(2.0)), 0);
    }

    #[test]
    fn nf_condition_examples() {
        let eps_a = Monomial::new(1, 0, 0, 1, 1.0);
        assert!(check_nf_condition(&[eps_a], 1, 3).unwrap());
        let eps = Monomial::new(0, 0, 0, 1, 1.0);
        assert!(check_nf_condition(&[eps], 3, 3).unwrap());
        let a = Monomial::new(1, 0, 0, 0, 1.0);
        assert!(!check_nf_condition(&[a], 1, 3).unwrap());
        // order 5 < bound 6
        assert!(!check_nf_condition(&[eps], 1, 3).unwrap());
    }

    #[test]
    fn nf_condition_rejects_bad_indices() {
        assert!(check_nf_condition(&[], 0, 3).is_err());
        assert!(check_nf_condition(&[], 4, 3).is_err());
        assert!(check_nf_condition(&[], 1, 1).is_err());
    }
}
