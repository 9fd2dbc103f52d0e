//! Real roots of the depressed cubic `z³ + b z + a`.

use std::f64::consts::PI;

/// One real root of the cubic and its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub z: f64,
    pub multiplicity: u8,
}

/// The discriminant `−4b³ − 27a²` of `z³ + b z + a`.
pub fn discriminant(a: f64, b: f64) -> f64 {
    -4.0 * b * b * b - 27.0 * a * a
}

/// Residual `z³ + b z + a`.
#[inline]
pub fn cubic_residual(a: f64, b: f64, z: f64) -> f64 {
    z * z * z + b * z + a
}

/// Relative width of the band in which the discriminant is treated as zero.
const DISCRIMINANT_BAND: f64 = 1e-13;

fn polish(a: f64, b: f64, z: f64) -> f64 {
    let f = cubic_residual(a, b, z);
    let df = 3.0 * z * z + b;
    if df == 0.0 || !df.is_finite() {
        return z;
    }
    let candidate = z - f / df;
    if cubic_residual(a, b, candidate).abs() <= f.abs() {
        candidate
    } else {
        z
    }
}

/// All real roots of `z³ + b z + a = 0` in ascending order.
///
/// Uses the trigonometric form when the discriminant is positive and
/// Cardano's hyperbolic forms when it is negative; simple roots get one
/// Newton step. A discriminant within a relative band of zero is treated as
/// a repeated root.
pub fn critical_branches(a: f64, b: f64) -> Vec<Root> {
    let disc = discriminant(a, b);
    let scale = 4.0 * (b * b * b).abs() + 27.0 * a * a;

    if scale == 0.0 {
        return vec![Root {
            z: 0.0,
            multiplicity: 3,
        }];
    }

    if disc.abs() <= DISCRIMINANT_BAND * scale {
        // b < 0 here: double root at −3a/(2b), simple root at 3a/b.
        let double = -1.5 * a / b;
        let simple = polish(a, b, 3.0 * a / b);
        let mut roots = vec![
            Root {
                z: double,
                multiplicity: 2,
            },
            Root {
                z: simple,
                multiplicity: 1,
            },
        ];
        roots.sort_by(|x, y| x.z.total_cmp(&y.z));
        return roots;
    }

    if disc > 0.0 {
        // three distinct real roots, b < 0
        let m = 2.0 * (-b / 3.0).sqrt();
        let arg = (1.5 * a / b * (-3.0 / b).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut roots: Vec<Root> = (0..3)
            .map(|k| Root {
                z: polish(a, b, m * (theta - 2.0 * PI * k as f64 / 3.0).cos()),
                multiplicity: 1,
            })
            .collect();
        roots.sort_by(|x, y| x.z.total_cmp(&y.z));
        return roots;
    }

    let z = if b == 0.0 {
        -a.cbrt()
    } else if b < 0.0 {
        let arg = -1.5 * a.abs() / b * (-3.0 / b).sqrt();
        -2.0 * a.signum() * (-b / 3.0).sqrt() * (arg.acosh() / 3.0).cosh()
    } else {
        let arg = 1.5 * a / b * (3.0 / b).sqrt();
        -2.0 * (b / 3.0).sqrt() * (arg.asinh() / 3.0).sinh()
    };
    vec![Root {
        z: polish(a, b, z),
        multiplicity: 1,
    }]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zs(a: f64, b: f64) -> Vec<f64> {
        critical_branches(a, b).iter().map(|r| r.z).collect()
    }

    #[test]
    fn triple_root_at_cusp() {
        let roots = critical_branches(0.0, 0.0);
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].z, 0.0);
        assert_eq!(roots[0].multiplicity, 3);
    }

    #[test]
    fn three_roots_of_z_cubed_minus_z() {
        let r = zs(0.0, -1.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn single_root_of_z_cubed_minus_one() {
        let r = zs(-1.0, 0.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-15);
        assert!(cubic_residual(-1.0, 0.0, r[0]).abs() < 1e-12);
    }

    #[test]
    fn double_root_on_fold() {
        // (z−1)²(z+2) = z³ − 3z + 2
        let roots = critical_branches(2.0, -3.0);
        assert_eq!(roots.len(), 2);
        assert!((roots[0].z + 2.0).abs() < 1e-12);
        assert_eq!(roots[0].multiplicity, 1);
        assert!((roots[1].z - 1.0).abs() < 1e-12);
        assert_eq!(roots[1].multiplicity, 2);
    }

    #[test]
    fn positive_b_single_root() {
        for &(a, b) in &[(1.0, 1.0), (-3.0, 2.0), (1e-3, 5.0), (7.0, 0.3)] {
            let r = zs(a, b);
            assert_eq!(r.len(), 1);
            assert!(cubic_residual(a, b, r[0]).abs() < 1e-12);
        }
    }
}
