//! Quasihomogeneous blow-up of the cusp point with weights `(3, 2, 1, 5)`:
//! directional charts, their desingularized fields and matching maps.

use std::fmt;
use std::str::FromStr;

use crate::cusp::{A3System, StatePoint};
use crate::error::{Error, Result};
use crate::odeflow::Field;

/// Below this radius the perturbation terms of a chart field are set to 0.
pub const FLAT_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ChartId {
    /// `ā = −1`
    En,
    /// `ā = 1`
    Ex,
    /// `ε̄ = 1`
    Eps,
    /// `b̄ = 1`
    BPlus,
    /// `b̄ = −1`
    BMinus,
}

impl ChartId {
    pub const ALL: [ChartId; 5] = [
        ChartId::En,
        ChartId::Ex,
        ChartId::Eps,
        ChartId::BPlus,
        ChartId::BMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChartId::En => "en",
            ChartId::Ex => "ex",
            ChartId::Eps => "eps",
            ChartId::BPlus => "b+",
            ChartId::BMinus => "b-",
        }
    }

    /// Time rescale `κ` in `DΦ · X_chart = κ r⁻² X ∘ Φ`.
    pub fn time_factor(self) -> f64 {
        match self {
            ChartId::En | ChartId::Ex => 3.0,
            _ => 1.0,
        }
    }

    /// Names of the three non-radial coordinates.
    pub fn coordinate_names(self) -> [&'static str; 3] {
        match self {
            ChartId::En => ["b1", "z1", "eps1"],
            ChartId::Ex => ["b3", "z3", "eps3"],
            ChartId::Eps => ["a2", "b2", "z2"],
            ChartId::BPlus | ChartId::BMinus => ["a2", "z2", "eps2"],
        }
    }

    fn domain_condition(self) -> &'static str {
        match self {
            ChartId::En => "a < 0",
            ChartId::Ex => "a > 0",
            ChartId::Eps => "eps > 0",
            ChartId::BPlus => "b > 0",
            ChartId::BMinus => "b < 0",
        }
    }

    fn contains(self, s: &StatePoint) -> bool {
        match self {
            ChartId::En => s.a < 0.0,
            ChartId::Ex => s.a > 0.0,
            ChartId::Eps => s.eps > 0.0,
            ChartId::BPlus => s.b > 0.0,
            ChartId::BMinus => s.b < 0.0,
        }
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChartId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "en" => Ok(ChartId::En),
            "ex" => Ok(ChartId::Ex),
            "eps" => Ok(ChartId::Eps),
            "b+" => Ok(ChartId::BPlus),
            "b-" => Ok(ChartId::BMinus),
            _ => Err(Error::Config(format!(
                "unknown chart '{s}' (expected en, ex, eps, b+ or b-)"
            ))),
        }
    }
}

/// A point `(r, c)` of one directional chart.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChartPoint {
    pub chart: ChartId,
    pub r: f64,
    pub c: [f64; 3],
}

impl ChartPoint {
    pub fn new(chart: ChartId, r: f64, c: [f64; 3]) -> Result<Self> {
        if !(r.is_finite() && c.iter().all(|v| v.is_finite())) {
            return Err(Error::ChartDomain("non-finite chart coordinates".into()));
        }
        if r < 0.0 {
            return Err(Error::ChartDomain(format!(
                "r must be non-negative, got {r}"
            )));
        }
        if chart != ChartId::Eps && c[2] < 0.0 {
            return Err(Error::ChartDomain(format!(
                "{} must be non-negative, got {}",
                chart.coordinate_names()[2],
                c[2]
            )));
        }
        Ok(ChartPoint { chart, r, c })
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.r, self.c[0], self.c[1], self.c[2]]
    }

    /// Inverse of [`ChartPoint::to_array`], with the same checks as `new`.
    pub fn from_array(chart: ChartId, y: &[f64; 4]) -> Result<Self> {
        ChartPoint::new(chart, y[0], [y[1], y[2], y[3]])
    }
}

impl fmt::Display for ChartPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.chart.coordinate_names();
        write!(
            f,
            "{}: r={}, {}={}, {}={}, {}={}",
            self.chart, self.r, n[0], self.c[0], n[1], self.c[1], n[2], self.c[2]
        )
    }
}

/// [`blow_down`] on raw coordinates, without domain checks.
pub fn blow_down_array(chart: ChartId, r: f64, c: &[f64; 3]) -> [f64; 4] {
    let r2 = r * r;
    let r3 = r2 * r;
    let r5 = r3 * r2;
    match chart {
        ChartId::En => [-r3, r2 * c[0], r * c[1], r5 * c[2]],
        ChartId::Ex => [r3, r2 * c[0], r * c[1], r5 * c[2]],
        ChartId::Eps => [r3 * c[0], r2 * c[1], r * c[2], r5],
        ChartId::BPlus => [r3 * c[0], r2, r * c[1], r5 * c[2]],
        ChartId::BMinus => [r3 * c[0], -r2, r * c[1], r5 * c[2]],
    }
}

pub fn blow_down(p: &ChartPoint) -> StatePoint {
    StatePoint::from_array(&blow_down_array(p.chart, p.r, &p.c))
}

pub fn blow_up(chart: ChartId, s: &StatePoint) -> Result<ChartPoint> {
    if !s.to_array().iter().all(|v| v.is_finite()) {
        return Err(Error::ChartDomain("non-finite state".into()));
    }
    if !chart.contains(s) {
        return Err(Error::ChartDomain(format!(
            "chart {chart} requires {}, got {s}",
            chart.domain_condition()
        )));
    }
    let StatePoint { a, b, z, eps } = *s;
    let (r, c) = match chart {
        ChartId::En | ChartId::Ex => {
            let r = a.abs().cbrt();
            let r2 = r * r;
            (r, [b / r2, z / r, eps / (r2 * r2 * r)])
        }
        ChartId::Eps => {
            let r = eps.powf(0.2);
            let r2 = r * r;
            (r, [a / (r2 * r), b / r2, z / r])
        }
        ChartId::BPlus | ChartId::BMinus => {
            let r = b.abs().sqrt();
            let r2 = r * r;
            (r, [a / (r2 * r), z / r, eps / (r2 * r2 * r)])
        }
    };
    Ok(ChartPoint { chart, r, c })
}

/// Coordinate change `K_from → K_to`, i.e. `blow_up(to, blow_down(p))`.
pub fn matching_map(from: ChartId, to: ChartId, p: &ChartPoint) -> Result<ChartPoint> {
    if p.chart != from {
        return Err(Error::ChartDomain(format!(
            "point belongs to chart {}, not {from}",
            p.chart
        )));
    }
    blow_up(to, &blow_down(p)).map_err(|e| match e {
        Error::ChartDomain(msg) => {
            Error::ChartDomain(format!("{from} -> {to} overlap violated: {msg}"))
        }
        other => other,
    })
}

/// Desingularized field of one chart, in the coordinate order `(r, c₀, c₁, c₂)`.
#[derive(Debug, Clone)]
pub struct ChartField {
    pub chart: ChartId,
    system: A3System,
}

pub fn chart_field(chart: ChartId, system: &A3System) -> ChartField {
    ChartField {
        chart,
        system: system.clone(),
    }
}

impl ChartField {
    pub fn eval_point(&self, p: &ChartPoint) -> Result<[f64; 4]> {
        self.eval_array(&p.to_array())
    }

    fn eval_array(&self, y: &[f64; 4]) -> Result<[f64; 4]> {
        let r = y[0];
        let c = [y[1], y[2], y[3]];
        let [f1, f2, f3] = if self.system.is_principal() || r.abs() < FLAT_GUARD {
            [0.0; 3]
        } else {
            let s = StatePoint::from_array(&blow_down_array(self.chart, r, &c));
            self.system.perturbations(&s)?
        };
        let r2 = r * r;
        Ok(match self.chart {
            ChartId::En => {
                let [b, z, e] = c;
                let g = 1.0 + f1;
                [
                    -e * r * g,
                    2.0 * e * b * g + 3.0 * r * e * f2,
                    -3.0 * (z * z * z + b * z - 1.0) + e * z * g - 3.0 * r2 * e * f3,
                    5.0 * e * e * g,
                ]
            }
            ChartId::Ex => {
                let [b, z, e] = c;
                let g = 1.0 + f1;
                [
                    e * r * g,
                    -2.0 * e * b * g + 3.0 * r * e * f2,
                    -3.0 * (z * z * z + b * z + 1.0) - e * z * g - 3.0 * r2 * e * f3,
                    -5.0 * e * e * g,
                ]
            }
            ChartId::Eps => {
                let [a, b, z] = c;
                [0.0, 1.0 + f1, r * f2, -(z * z * z + b * z + a) - r2 * f3]
            }
            ChartId::BPlus | ChartId::BMinus => {
                let [a, z, e] = c;
                // b = ±r²
                let s = if self.chart == ChartId::BPlus {
                    1.0
                } else {
                    -1.0
                };
                let h = r * e * f2;
                [
                    s * 0.5 * r * h,
                    e * (1.0 + f1) - s * 1.5 * h * a,
                    -(z * z * z + s * z + a) - r2 * e * f3 - s * 0.5 * h * z,
                    -s * 2.5 * h * e,
                ]
            }
        })
    }
}

impl Field<4> for ChartField {
    fn eval(&self, _t: f64, y: &[f64; 4]) -> Result<[f64; 4]> {
        self.eval_array(y)
    }
}

/// Which entry layers a point `b` of `Σ⁻` belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct LayerLabel {
    pub inner: bool,
    pub plus_lateral: bool,
    pub minus_lateral: bool,
}

impl fmt::Display for LayerLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.inner {
            parts.push("inner");
        }
        if self.plus_lateral {
            parts.push("plus");
        }
        if self.minus_lateral {
            parts.push("minus");
        }
        f.write_str(&parts.join("+"))
    }
}

/// Inner layer `|b| < M ε^{2/5}`, lateral layers `±b > L ε^{2/5}`.
pub fn classify_entry(b: f64, eps: f64, l: f64, m: f64) -> Result<LayerLabel> {
    if !(l > 0.0 && l < m && m.is_finite()) {
        return Err(Error::Config(format!(
            "layer constants need 0 < L < M, got L={l}, M={m}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::domain(format!("ε must be positive, got {eps}")));
    }
    let scale = eps.powf(0.4);
    Ok(LayerLabel {
        inner: b.abs() < m * scale,
        plus_lateral: b > l * scale,
        minus_lateral: -b > l * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp(chart: ChartId, r: f64, c: [f64; 3]) -> ChartPoint {
        ChartPoint::new(chart, r, c).unwrap()
    }

    fn close(x: [f64; 4], y: [f64; 4], tol: f64) -> bool {
        x.iter()
            .zip(y)
            .all(|(a, b)| (a - b).abs() <= tol * b.abs().max(1e-300))
    }

    #[test]
    fn blow_down_examples() {
        let s = blow_down(&cp(ChartId::Eps, 0.1, [1.0, 1.0, 1.0]));
        assert!(close(s.to_array(), [1e-3, 1e-2, 0.1, 1e-5], 1e-14));
        let s = blow_down(&cp(ChartId::En, 0.0, [3.0, -2.0, 1.0]));
        assert!(s.to_array().iter().all(|v| *v == 0.0));
        let s = blow_down(&cp(ChartId::BMinus, 0.2, [0.0, 0.0, 1.0]));
        assert!(close(s.to_array(), [0.0, -0.04, 0.0, 3.2e-4], 1e-14));
    }

    #[test]
    fn blow_up_examples() {
        let p = blow_up(
            ChartId::En,
            &StatePoint::new(-0.001, 0.0, 0.0, 0.0).unwrap(),
        )
        .unwrap();
        assert!((p.r - 0.1).abs() < 1e-15 && p.c == [0.0; 3]);
        let p = blow_up(ChartId::Eps, &StatePoint::new(0.0, 0.0, 0.0, 1e-5).unwrap()).unwrap();
        assert!((p.r - 0.1).abs() < 1e-15 && p.c == [0.0; 3]);
        let err = blow_up(ChartId::Eps, &StatePoint::new(0.1, 0.0, 0.0, 0.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::ChartDomain(ref m) if m.contains("eps > 0")));
    }

    #[test]
    fn matching_examples() {
        let q = matching_map(
            ChartId::En,
            ChartId::Eps,
            &cp(ChartId::En, 0.1, [0.0, 0.0, 1.0]),
        )
        .unwrap();
        assert!((q.r - 0.1).abs() < 1e-15);
        assert!((q.c[0] + 1.0).abs() < 1e-14 && q.c[1] == 0.0 && q.c[2] == 0.0);
        assert!(matching_map(
            ChartId::En,
            ChartId::Eps,
            &cp(ChartId::En, 0.1, [0.0, 0.0, 0.0])
        )
        .is_err());
        let q = matching_map(
            ChartId::Eps,
            ChartId::Ex,
            &cp(ChartId::Eps, 0.1, [1.0, 0.0, 0.0]),
        )
        .unwrap();
        assert!((q.r - 0.1).abs() < 1e-15);
        assert!(q.c[0] == 0.0 && q.c[1] == 0.0 && (q.c[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chart_field_examples() {
        let sys = A3System::principal();
        let v = chart_field(ChartId::En, &sys)
            .eval_point(&cp(ChartId::En, 0.0, [0.0, 1.0, 0.0]))
            .unwrap();
        assert!(v.iter().all(|x| *x == 0.0));
        let v = chart_field(ChartId::Eps, &sys)
            .eval_point(&cp(ChartId::Eps, 0.0, [0.0; 3]))
            .unwrap();
        assert_eq!(v, [0.0, 1.0, 0.0, 0.0]);
        let v = chart_field(ChartId::BPlus, &sys)
            .eval_point(&cp(ChartId::BPlus, 0.0, [0.0, 0.0, 0.1]))
            .unwrap();
        assert_eq!(v, [0.0, 0.1, 0.0, 0.0]);
    }

    #[test]
    fn chart_names_parse_case_insensitively() {
        for c in ChartId::ALL {
            assert_eq!(c.name().parse::<ChartId>().unwrap(), c);
            assert_eq!(c.name().to_uppercase().parse::<ChartId>().unwrap(), c);
        }
        assert!("k2".parse::<ChartId>().is_err());
    }

    #[test]
    fn classify_entry_examples() {
        let l = classify_entry(0.0, 1e-5, 0.5, 1.0).unwrap();
        assert_eq!(
            l,
            LayerLabel {
                inner: true,
                plus_lateral: false,
                minus_lateral: false
            }
        );
        let l = classify_entry(0.5, 1e-5, 0.5, 1.0).unwrap();
        assert_eq!(
            l,
            LayerLabel {
                inner: false,
                plus_lateral: true,
                minus_lateral: false
            }
        );
        let l = classify_entry(0.008, 1e-5, 0.5, 1.0).unwrap();
        assert_eq!(
            l,
            LayerLabel {
                inner: true,
                plus_lateral: true,
                minus_lateral: false
            }
        );
        assert!(matches!(
            classify_entry(0.0, 1e-5, 1.0, 1.0),
            Err(Error::Config(_))
        ));
    }
}
