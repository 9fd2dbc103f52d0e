//! Stock perturbations that are flat at the origin of `(a, b, z, ε)`.
//!
//! Flatness is all the normal-form reduction asks of the higher-order terms,
//! so these are the model perturbations used by the robustness studies.

use std::sync::Arc;

use super::{A3System, StatePoint};

/// Decay constant of [`eps_flat_bump`].
pub const FLAT_KAPPA: f64 = 0.01;

/// `exp(−1/s)` with `s = a² + b² + z² + ε²`, extended by 0 at the origin.
pub fn origin_bump(p: &StatePoint) -> f64 {
    let s = p.a * p.a + p.b * p.b + p.z * p.z + p.eps * p.eps;
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// `exp(−κ/ε) / (1 + a² + b² + z²)`, extended by 0 for `ε ≤ 0`.
///
/// Flat along the whole hyperplane `ε = 0`, hence at the origin, and
/// uniformly small along orbits that stay far from the cusp.
pub fn eps_flat_bump(p: &StatePoint, kappa: f64) -> f64 {
    if p.eps > 0.0 {
        (-kappa / p.eps).exp() / (1.0 + p.a * p.a + p.b * p.b + p.z * p.z)
    } else {
        0.0
    }
}

impl A3System {
    /// Stock flat system in the reduced form `ε(1 + ε f̃₁), ε² f̃₂, ε f̃₃`
    /// with every `f̃ᵢ` an amplitude-scaled [`eps_flat_bump`].
    /// Amplitude zero gives the principal part itself.
    pub fn stock_flat(amplitude: f64) -> Self {
        if amplitude == 0.0 {
            return A3System {
                f: None,
                label: format!("stock-flat(amplitude={amplitude})"),
            };
        }
        A3System::with_perturbations(
            format!("stock-flat(amplitude={amplitude})"),
            Arc::new(move |p| amplitude * p.eps * eps_flat_bump(p, FLAT_KAPPA)),
            Arc::new(move |p| amplitude * p.eps * eps_flat_bump(p, FLAT_KAPPA)),
            Arc::new(move |p| amplitude * eps_flat_bump(p, FLAT_KAPPA)),
        )
    }

    /// Perturbations built from [`origin_bump`], localized at the cusp point.
    pub fn origin_flat(amplitude: f64) -> Self {
        A3System::with_perturbations(
            format!("origin-flat(amplitude={amplitude})"),
            Arc::new(move |p| amplitude * origin_bump(p)),
            Arc::new(move |p| amplitude * origin_bump(p)),
            Arc::new(move |p| amplitude * origin_bump(p)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bumps_vanish_at_origin_faster_than_powers() {
        for k in 1..6 {
            let r = 10f64.powi(-k) * 0.5;
            let p = StatePoint::new(r, r, r, r).unwrap();
            assert!(origin_bump(&p) < r.powi(8));
        }
        for eps in [1e-4, 5e-5, 2e-5] {
            let p = StatePoint::new(eps, eps, eps, eps).unwrap();
            assert!(eps_flat_bump(&p, FLAT_KAPPA) < eps.powi(8));
        }
        let o = StatePoint::new(0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(origin_bump(&o), 0.0);
        assert_eq!(eps_flat_bump(&o, FLAT_KAPPA), 0.0);
    }

    #[test]
    fn zero_amplitude_matches_principal_exactly() {
        let flat = A3System::stock_flat(0.0);
        let principal = A3System::principal();
        let p = StatePoint::new(-0.3, 0.1, 1.2, 0.01).unwrap();
        assert_eq!(
            flat.eval_fast(&p).unwrap(),
            principal.eval_fast(&p).unwrap()
        );
    }
}
