//! The A₃ (cusp) slow-fast vector field and the geometry of its critical set.
//!
//! In fast time the system reads
//!
//! ```text
//! a' = ε (1 + f₁)
//! b' = ε f₂
//! z' = −(z³ + b z + a + ε f₃)
//! ε' = 0
//! ```
//!
//! with user-supplied perturbations `f₁, f₂, f₃`. The critical manifold is
//! `S = {z³ + b z + a = 0}` and its fold curve is `Δ = {3z² + b = 0} ∩ S`.

mod cubic;
pub mod flat;
mod grading;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::odeflow::{Field, Jacobian};

pub use cubic::{critical_branches, cubic_residual, discriminant, Root};
pub use grading::{check_nf_condition, quasihomogeneous_order, Monomial, WEIGHTS};

pub type Vec4 = [f64; 4];

/// A point `(a, b, z, ε)` of extended phase space.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StatePoint {
    pub a: f64,
    pub b: f64,
    pub z: f64,
    pub eps: f64,
}

impl StatePoint {
    pub fn new(a: f64, b: f64, z: f64, eps: f64) -> Result<Self> {
        let p = StatePoint { a, b, z, eps };
        if !p.to_array().iter().all(|v| v.is_finite()) {
            return Err(Error::domain(format!("non-finite state point {p}")));
        }
        if eps < 0.0 {
            return Err(Error::domain(format!("ε must be non-negative, got {eps}")));
        }
        Ok(p)
    }

    /// Builds a point from a state vector without validation; used on
    /// integrator-internal states.
    #[inline]
    pub fn from_array(y: &Vec4) -> Self {
        StatePoint {
            a: y[0],
            b: y[1],
            z: y[2],
            eps: y[3],
        }
    }

    #[inline]
    pub fn to_array(&self) -> Vec4 {
        [self.a, self.b, self.z, self.eps]
    }
}

impl fmt::Display for StatePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(a={}, b={}, z={}, ε={})",
            self.a, self.b, self.z, self.eps
        )
    }
}

/// A scalar perturbation term `f(a, b, z, ε)`.
pub type Perturbation = Arc<dyn Fn(&StatePoint) -> f64 + Send + Sync>;

/// The cusp slow-fast vector field with its perturbations.
#[derive(Clone)]
pub struct A3System {
    f: Option<[Perturbation; 3]>,
    label: String,
}

impl fmt::Debug for A3System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("A3System")
            .field("label", &self.label)
            .field("principal", &self.is_principal())
            .finish()
    }
}

impl A3System {
    /// The principal part `f₁ = f₂ = f₃ ≡ 0`.
    pub fn principal() -> Self {
        A3System {
            f: None,
            label: "principal".to_string(),
        }
    }

    pub fn with_perturbations(
        label: impl Into<String>,
        f1: Perturbation,
        f2: Perturbation,
        f3: Perturbation,
    ) -> Self {
        A3System {
            f: Some([f1, f2, f3]),
            label: label.into(),
        }
    }

    pub fn is_principal(&self) -> bool {
        self.f.is_none()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `(f₁, f₂, f₃)` at `p`, checked for finiteness.
    pub fn perturbations(&self, p: &StatePoint) -> Result<[f64; 3]> {
        let Some(fs) = &self.f else {
            return Ok([0.0; 3]);
        };
        const NAMES: [&str; 3] = ["f1", "f2", "f3"];
        let mut out = [0.0; 3];
        for (i, f) in fs.iter().enumerate() {
            let v = f(p);
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    component: NAMES[i],
                    point: p.to_array(),
                });
            }
            out[i] = v;
        }
        Ok(out)
    }

    /// Vector field in fast time `τ`.
    pub fn eval_fast(&self, p: &StatePoint) -> Result<Vec4> {
        let [f1, f2, f3] = self.perturbations(p)?;
        let StatePoint { a, b, z, eps } = *p;
        Ok([
            eps * (1.0 + f1),
            eps * f2,
            -(z * z * z + b * z + a + eps * f3),
            0.0,
        ])
    }

    /// Vector field in slow time `t = ε τ`.
    pub fn eval_slow(&self, p: &StatePoint) -> Result<Vec4> {
        if p.eps <= 0.0 {
            return Err(Error::domain("slow-time field undefined at ε=0"));
        }
        let v = self.eval_fast(p)?;
        Ok(v.map(|c| c / p.eps))
    }

    /// Layer equation: slow variables frozen and `ε` set to zero inside the
    /// fast equation.
    pub fn layer_field(&self, p: &StatePoint) -> Result<Vec4> {
        let frozen = StatePoint { eps: 0.0, ..*p };
        let [_, _, f3] = self.perturbations(&frozen)?;
        let StatePoint { a, b, z, .. } = *p;
        Ok([0.0, 0.0, -(z * z * z + b * z + a + 0.0 * f3), 0.0])
    }

    /// Jacobian of the fast field. The principal part is exact; derivatives
    /// of the perturbations are central differences.
    pub fn fast_jacobian(&self, p: &StatePoint) -> Result<Jacobian<4>> {
        let StatePoint { b, z, eps, .. } = *p;
        let [f1, f2, f3] = self.perturbations(p)?;
        let mut jac = [[0.0; 4]; 4];
        jac[0][3] = 1.0 + f1;
        jac[1][3] = f2;
        jac[2] = [-1.0, -z, -(3.0 * z * z + b), -f3];
        if self.is_principal() {
            return Ok(jac);
        }
        let y = p.to_array();
        for col in 0..4 {
            let h = 1e-6 * y[col].abs().max(1.0);
            let (lo, hi) = if col == 3 && y[3] - h < 0.0 {
                (y[3], y[3] + h)
            } else {
                (y[col] - h, y[col] + h)
            };
            let mut yl = y;
            let mut yh = y;
            yl[col] = lo;
            yh[col] = hi;
            let fl = self.perturbations(&StatePoint::from_array(&yl))?;
            let fh = self.perturbations(&StatePoint::from_array(&yh))?;
            let d: Vec<f64> = (0..3).map(|i| (fh[i] - fl[i]) / (hi - lo)).collect();
            jac[0][col] += eps * d[0];
            jac[1][col] += eps * d[1];
            jac[2][col] -= eps * d[2];
        }
        Ok(jac)
    }

    pub fn fast_field(&self) -> FastField<'_> {
        FastField(self)
    }

    pub fn slow_field(&self) -> SlowField<'_> {
        SlowField(self)
    }

    pub fn layer(&self) -> LayerField<'_> {
        LayerField(self)
    }
}

/// [`A3System::eval_fast`] as an integrable field.
#[derive(Clone, Copy)]
pub struct FastField<'s>(pub &'s A3System);

impl Field<4> for FastField<'_> {
    fn eval(&self, _t: f64, y: &Vec4) -> Result<Vec4> {
        self.0.eval_fast(&StatePoint::from_array(y))
    }

    fn jacobian(&self, _t: f64, y: &Vec4) -> Result<Jacobian<4>> {
        self.0.fast_jacobian(&StatePoint::from_array(y))
    }
}

/// [`A3System::eval_slow`] as an integrable field.
#[derive(Clone, Copy)]
pub struct SlowField<'s>(pub &'s A3System);

impl Field<4> for SlowField<'_> {
    fn eval(&self, _t: f64, y: &Vec4) -> Result<Vec4> {
        self.0.eval_slow(&StatePoint::from_array(y))
    }
}

/// [`A3System::layer_field`] as an integrable field.
#[derive(Clone, Copy)]
pub struct LayerField<'s>(pub &'s A3System);

impl Field<4> for LayerField<'_> {
    fn eval(&self, _t: f64, y: &Vec4) -> Result<Vec4> {
        self.0.layer_field(&StatePoint::from_array(y))
    }
}

/// Where a point sits relative to the critical set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum PointClass {
    OffManifold,
    Regular,
    Fold,
    Cusp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyTolerances {
    /// Membership in `S`.
    pub tol_s: f64,
    /// Membership in `Δ`.
    pub tol_delta: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        ClassifyTolerances {
            tol_s: 1e-9,
            tol_delta: 1e-9,
        }
    }
}

pub fn classify_point(a: f64, b: f64, z: f64, tol: ClassifyTolerances) -> PointClass {
    if cubic_residual(a, b, z).abs() > tol.tol_s {
        PointClass::OffManifold
    } else if a.abs() <= tol.tol_s && b.abs() <= tol.tol_s && z.abs() <= tol.tol_s {
        PointClass::Cusp
    } else if (3.0 * z * z + b).abs() < tol.tol_delta {
        PointClass::Fold
    } else {
        PointClass::Regular
    }
}

/// Parametrization `z ↦ (2z³, −3z²)` of the fold curve.
pub fn fold_curve_param(z: f64) -> (f64, f64) {
    (2.0 * z * z * z, -3.0 * z * z)
}

/// Catastrophe potential `V = z⁴/4 + b z²/2 + a z`; `∂V/∂z` is the cubic.
pub fn potential(a: f64, b: f64, z: f64) -> f64 {
    0.25 * z.powi(4) + 0.5 * b * z * z + a * z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn principal_fast(a: f64, b: f64, z: f64, eps: f64) -> Vec4 {
        A3System::principal()
            .eval_fast(&StatePoint::new(a, b, z, eps).unwrap())
            .unwrap()
    }

    #[test]
    fn fast_field_examples() {
        assert_eq!(principal_fast(0.0, 0.0, 0.0, 0.0), [0.0; 4]);
        assert_eq!(principal_fast(-1.0, 0.0, 1.0, 0.1), [0.1, 0.0, 0.0, 0.0]);
        assert_eq!(principal_fast(0.0, -1.0, 2.0, 0.0), [0.0, 0.0, -6.0, 0.0]);
    }

    #[test]
    fn slow_field_examples() {
        let s = A3System::principal();
        let v = s
            .eval_slow(&StatePoint::new(-1.0, 0.0, 1.0, 0.1).unwrap())
            .unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && v[1] == 0.0 && v[2] == 0.0);
        let v = s
            .eval_slow(&StatePoint::new(0.0, 0.0, 1.0, 0.5).unwrap())
            .unwrap();
        assert_eq!(v, [1.0, 0.0, -2.0, 0.0]);
        let err = s
            .eval_slow(&StatePoint::new(0.0, 0.0, 1.0, 0.0).unwrap())
            .unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn layer_field_examples() {
        let s = A3System::principal();
        let f = |a, b, z, e| {
            s.layer_field(&StatePoint::new(a, b, z, e).unwrap())
                .unwrap()
        };
        assert_eq!(f(0.0, 0.0, 0.0, 0.3), [0.0; 4]);
        assert_eq!(f(-1.0, 0.0, 0.0, 0.3), [0.0, 0.0, 1.0, 0.0]);
        assert_eq!(f(0.0, -1.0, 1.0, 0.0), [0.0; 4]);
    }

    #[test]
    fn non_finite_perturbation_names_component() {
        let s = A3System::with_perturbations(
            "bad",
            Arc::new(|_| 0.0),
            Arc::new(|_| 0.0),
            Arc::new(|p| 1.0 / p.z),
        );
        let err = s
            .eval_fast(&StatePoint::new(0.0, 0.0, 0.0, 0.1).unwrap())
            .unwrap_err();
        assert_eq!(
            err,
            Error::Evaluation {
                component: "f3",
                point: [0.0, 0.0, 0.0, 0.1]
            }
        );
    }

    #[test]
    fn state_point_rejects_negative_eps() {
        assert!(StatePoint::new(0.0, 0.0, 0.0, -1e-3).is_err());
        assert!(StatePoint::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn classification_examples() {
        let tol = ClassifyTolerances::default();
        assert_eq!(classify_point(0.0, 0.0, 0.0, tol), PointClass::Cusp);
        assert_eq!(classify_point(2.0, -3.0, 1.0, tol), PointClass::Fold);
        assert_eq!(classify_point(-1.0, 0.0, 1.0, tol), PointClass::Regular);
        assert_eq!(classify_point(1.0, 0.0, 1.0, tol), PointClass::OffManifold);
    }

    #[test]
    fn fold_param_examples() {
        assert_eq!(fold_curve_param(0.0), (0.0, -0.0));
        assert_eq!(fold_curve_param(1.0), (2.0, -3.0));
        assert_eq!(fold_curve_param(-1.0), (-2.0, -3.0));
    }

    #[test]
    fn potential_examples() {
        assert_eq!(potential(0.0, 0.0, 0.0), 0.0);
        assert_eq!(potential(0.0, 0.0, 1.0), 0.25);
        assert_eq!(potential(1.0, -2.0, 1.0), 0.25);
    }

    #[test]
    fn principal_jacobian_is_exact() {
        let s = A3System::principal();
        let j = s
            .fast_jacobian(&StatePoint::new(0.3, -0.2, 1.1, 0.05).unwrap())
            .unwrap();
        let want = [-1.0, -1.1, -(3.0 * 1.1 * 1.1 - 0.2), 0.0];
        for (g, w) in j[2].iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
        assert_eq!(j[0], [0.0, 0.0, 0.0, 1.0]);
    }
}
