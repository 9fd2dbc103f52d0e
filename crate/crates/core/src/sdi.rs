//! Slow flow on the critical manifold and the slow divergence integral.
//!
//! Along the slow flow `ȧ = 1` on `S`, `div X₀ = −(3z² + b)` and
//! `dt = −(3z² + b) dz`, so the integral reduces to `∫ (3z² + b)² dz` with
//! primitive `Ĩ(b, ζ) = (9/5)ζ⁵ + 2bζ³ + b²ζ`.

use crate::cusp::critical_branches;
use crate::error::{Error, Result};
use crate::odeflow::{integrate_to_section, Axis, Direction, Options, Section, Sign};

/// Distance to the fold below which the slow field is treated as singular.
const FOLD_TOL: f64 = 1e-12;

/// A point `(−z³ − bz, b, z)` of the critical manifold.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BranchPoint {
    pub b: f64,
    pub z: f64,
}

impl BranchPoint {
    pub fn new(b: f64, z: f64) -> Self {
        BranchPoint { b, z }
    }

    pub fn a(&self) -> f64 {
        -self.z * self.z * self.z - self.b * self.z
    }

    /// `∂g/∂z = −(3z² + b)` is negative.
    pub fn is_attracting(&self) -> bool {
        3.0 * self.z * self.z + self.b > 0.0
    }
}

fn fold_check(b: f64, z: f64) -> Result<()> {
    let d = 3.0 * z * z + b;
    if d.abs() < FOLD_TOL {
        return Err(Error::FoldSingularity(format!(
            "3z²+b = {d:e} at (b={b}, z={z})"
        )));
    }
    Ok(())
}

/// `dz/da = −1/(3z² + b)` on the critical manifold.
pub fn slow_field_on_branch(p: BranchPoint) -> Result<f64> {
    fold_check(p.b, p.z)?;
    Ok(-1.0 / (3.0 * p.z * p.z + p.b))
}

/// The primitive `Ĩ(b, ζ)`.
pub fn sdi_primitive(b: f64, zeta: f64) -> f64 {
    let z2 = zeta * zeta;
    zeta * (1.8 * z2 * z2 + 2.0 * b * z2 + b * b)
}

/// `Ĩ(b, z_ex) − Ĩ(b, z_en)`.
pub fn sdi_closed(b: f64, z_en: f64, z_ex: f64) -> Result<f64> {
    fold_check(b, z_en)?;
    fold_check(b, z_ex)?;
    Ok(sdi_primitive(b, z_ex) - sdi_primitive(b, z_en))
}

/// `∫_{z_en}^{z_ex} (3z² + b)² dz` by adaptive Gauss–Kronrod quadrature.
pub fn sdi_quadrature(b: f64, z_en: f64, z_ex: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    fold_check(b, z_en)?;
    fold_check(b, z_ex)?;
    if b < 0.0 {
        let zf = (-b / 3.0).sqrt();
        let (lo, hi) = (z_en.min(z_ex), z_en.max(z_ex));
        for root in [-zf, zf] {
            if lo <= root && root <= hi {
                return Err(Error::FoldSingularity(format!(
                    "path from z={z_en} to z={z_ex} crosses the fold at z={root}"
                )));
            }
        }
    }
    if z_en == z_ex {
        return Ok(0.0);
    }
    let f = |z: f64| {
        let d = 3.0 * z * z + b;
        d * d
    };
    Ok(adaptive_gk(&f, z_en, z_ex, tol, 0))
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const G_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut kron = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kron += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

fn adaptive_gk(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, lo, hi);
    if err <= tol || depth >= 40 {
        return val;
    }
    let mid = 0.5 * (lo + hi);
    adaptive_gk(f, lo, mid, 0.5 * tol, depth + 1) + adaptive_gk(f, mid, hi, 0.5 * tol, depth + 1)
}

/// Second, independent oracle: follows the orbit of the principal fast
/// field with small `ε` from the entry height to `a = a_plus` and
/// accumulates `ε · div = −ε(3z² + b)` in fast time. Agrees with the closed
/// form up to `O(ε ln ε)`, and handles the fold jump for `b < 0` without
/// special casing.
pub fn sdi_along_orbit(a_minus: f64, a_plus: f64, b: f64, eps: f64, opts: &Options) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("ε must be positive, got {eps}")));
    }
    let (z_en, _) = endpoints_for_sections(a_minus, a_plus, b)?;
    let field = move |_t: f64, y: &[f64; 4]| {
        let z = y[2];
        [
            eps,
            0.0,
            -(z * z * z + y[1] * z + y[0]),
            -eps * (3.0 * z * z + y[1]),
        ]
    };
    let sec = Section::new(Axis::A, a_plus)?.with_z_sign(Sign::Minus);
    let t_max = 2.0 * (a_minus + a_plus) / eps;
    let hit = integrate_to_section(
        &field,
        [-a_minus, b, z_en, 0.0],
        &sec,
        Direction::Increasing,
        opts,
        t_max,
    )?;
    Ok(hit.state[3])
}

/// Entry and exit heights `(z_en, z_ex)` of the slow manifold at the
/// sections `a = −a_minus` (upper sheet, `z > 0`) and `a = a_plus`
/// (lower sheet, `z < 0`).
pub fn endpoints_for_sections(a_minus: f64, a_plus: f64, b: f64) -> Result<(f64, f64)> {
    if !(a_minus > 0.0 && a_plus > 0.0) {
        return Err(Error::domain(format!(
            "section offsets must be positive, got a_minus={a_minus}, a_plus={a_plus}"
        )));
    }
    let pick = |a: f64, want_positive: bool| -> Result<f64> {
        let cands: Vec<f64> = critical_branches(a, b)
            .into_iter()
            .map(|r| r.z)
            .filter(|&z| if want_positive { z > 0.0 } else { z < 0.0 })
            .filter(|&z| BranchPoint::new(b, z).is_attracting())
            .collect();
        match cands.as_slice() {
            [z] => Ok(*z),
            [] => Err(Error::Geometry(format!(
                "no attracting root of z³+bz+a at a={a}, b={b} on the required side"
            ))),
            _ => Err(Error::Geometry(format!(
                "several attracting roots qualify at a={a}, b={b}"
            ))),
        }
    };
    Ok((pick(-a_minus, true)?, pick(a_plus, false)?))
}

/// Slow divergence integral of the attracting slow path from `Σ⁻` to
/// `Σ⁺`. For `b < 0` the path leaves the upper sheet at the fold
/// `a_f = 2(−b/3)^{3/2}` and lands on the lower sheet at `z = −2 z_f`; the
/// fast jump contributes nothing.
pub fn transition_sdi(a_minus: f64, a_plus: f64, b: f64) -> Result<f64> {
    let (z_en, z_ex) = endpoints_for_sections(a_minus, a_plus, b)?;
    if b >= 0.0 {
        return sdi_closed(b, z_en, z_ex);
    }
    let zf = (-b / 3.0).sqrt();
    let a_fold = 2.0 * zf * zf * zf;
    if a_fold >= a_plus {
        return Err(Error::Geometry(format!(
            "fold at a={a_fold} lies beyond the exit section a={a_plus}"
        )));
    }
    if a_fold <= -a_minus {
        return Err(Error::Geometry("fold lies before the entry section".into()));
    }
    Ok((sdi_primitive(b, zf) - sdi_primitive(b, z_en))
        + (sdi_primitive(b, z_ex) - sdi_primitive(b, -2.0 * zf)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slow_field_examples() {
        assert!(
            (slow_field_on_branch(BranchPoint::new(0.0, 1.0)).unwrap() + 1.0 / 3.0).abs() < 1e-15
        );
        assert_eq!(
            slow_field_on_branch(BranchPoint::new(1.0, 0.0)).unwrap(),
            -1.0
        );
        assert!(matches!(
            slow_field_on_branch(BranchPoint::new(-3.0, 1.0)),
            Err(Error::FoldSingularity(_))
        ));
    }

    #[test]
    fn closed_form_examples() {
        assert!((sdi_closed(0.0, 1.0, -1.0).unwrap() + 3.6).abs() < 1e-15);
        assert_eq!(sdi_closed(0.3, 0.7, 0.7).unwrap(), 0.0);
        assert!((sdi_closed(1.0, 1.0, 0.0).unwrap() + 4.8).abs() < 1e-14);
    }

    #[test]
    fn quadrature_examples() {
        assert!((sdi_quadrature(0.0, 1.0, -1.0, 1e-12).unwrap() + 3.6).abs() < 1e-10);
        assert_eq!(sdi_quadrature(0.0, 1.0, 1.0, 1e-12).unwrap(), 0.0);
        assert!(matches!(
            sdi_quadrature(-3.0, 2.0, 0.5, 1e-12),
            Err(Error::FoldSingularity(_))
        ));
    }

    #[test]
    fn endpoint_examples() {
        assert_eq!(endpoints_for_sections(1.0, 1.0, 0.0).unwrap(), (1.0, -1.0));
        let (z_en, _) = endpoints_for_sections(2.0, 2.0, -3.0).unwrap();
        assert!((z_en - 2.0).abs() < 1e-12);
        let (z_en, _) = endpoints_for_sections(8.0, 1.0, 0.0).unwrap();
        assert!((z_en - 2.0).abs() < 1e-12);
    }

    #[test]
    fn orbit_oracle_agrees() {
        // the fold passage converges like ε^{2/3}, smooth paths like ε
        for (b, tol) in [(0.0, 1e-4), (0.3, 1e-4), (-0.3, 2e-3)] {
            let want = transition_sdi(1.0, 1.0, b).unwrap();
            let got = sdi_along_orbit(1.0, 1.0, b, 1e-5, &Options::default()).unwrap();
            assert!((got - want).abs() < tol, "b={b}: {got} vs {want}");
        }
    }

    #[test]
    fn fold_jump_target_matches_pieces() {
        let b = -0.3;
        let zf = 0.1f64.sqrt();
        let (z_en, z_ex) = endpoints_for_sections(1.0, 1.0, b).unwrap();
        let upper = sdi_quadrature(b, z_en, zf + 1e-9, 1e-13).unwrap();
        let lower = sdi_quadrature(b, -2.0 * zf, z_ex, 1e-13).unwrap();
        assert!((transition_sdi(1.0, 1.0, b).unwrap() - (upper + lower)).abs() < 1e-9);
    }
}
