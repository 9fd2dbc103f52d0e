//! Exponential-type maps `D(V, Z, ε) = B(V, ε) + Z exp(−(A(V, ε) + Φ(V, Z, ε))/ε)`,
//! their composition rules and the closed-form model transitions.
//!
//! Everything that can be exponentially small is carried as a logarithm.
//! The basic primitive is the log-slope
//! `ln((D(y₀ + x) − D(y₀))/x)`, which composes additively along a chain.

mod models;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use models::{
    regular_transition, saddle1_transition, saddle2_transition, RegularExit, Saddle1Exit,
    Saddle2Exit,
};

/// A function of `(V, ε)`.
pub type Comp2 = Arc<dyn Fn(f64, f64) -> Result<f64> + Send + Sync>;
/// A function of `(V, Z, ε)`.
pub type Comp3 = Arc<dyn Fn(f64, f64, f64) -> Result<f64> + Send + Sync>;

/// Below these relative offsets a secant slope is replaced by derivatives.
const SECANT_SWITCH: f64 = 1e-6;
const GAUSS_SWITCH: f64 = 1e-2;

/// `sign · exp(log)`; `log = −∞` encodes zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub sign: f64,
    pub log: f64,
}

impl Gap {
    pub fn of(x: f64) -> Gap {
        Gap {
            sign: if x < 0.0 { -1.0 } else { 1.0 },
            log: x.abs().ln(),
        }
    }

    pub fn value(&self) -> f64 {
        self.sign * self.log.exp()
    }

    pub fn is_zero(&self) -> bool {
        self.log == f64::NEG_INFINITY
    }
}

/// Result of evaluating an exponential-type map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpValue {
    /// `B + Z exp(−(A + Φ)/ε)` rounded to `f64`.
    pub value: f64,
    pub shift: f64,
    /// `Z̃ − B` in log form.
    pub gap: Gap,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("ε must be positive, got {eps}")))
    }
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::domain(format!("{what} is not finite")))
    }
}

/// A family `y ↦ Ψ(V, y, ε)` of increasing one-dimensional diffeomorphisms.
#[derive(Clone)]
pub struct Diffeo {
    f: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
    df: Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>,
    label: String,
}

impl fmt::Debug for Diffeo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Diffeo({})", self.label)
    }
}

impl Diffeo {
    /// From a map and its `y`-derivative.
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Diffeo {
            f: Arc::new(f),
            df: Arc::new(df),
            label: label.into(),
        }
    }

    /// Derivative by central differences.
    pub fn from_fn(
        label: impl Into<String>,
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let f = Arc::new(f);
        let g = f.clone();
        Diffeo {
            f,
            df: Arc::new(move |v, y, e| {
                let h = 1e-5 * (1.0 + y.abs());
                (g(v, y + h, e) - g(v, y - h, e)) / (2.0 * h)
            }),
            label: label.into(),
        }
    }

    pub fn identity() -> Self {
        Diffeo::new("id", |_, y, _| y, |_, _, _| 1.0)
    }

    pub fn scale(c: f64) -> Self {
        Diffeo::new(format!("{c}*y"), move |_, y, _| c * y, move |_, _, _| c)
    }

    pub fn translate(c: f64) -> Self {
        Diffeo::new(format!("y+{c}"), move |_, y, _| y + c, |_, _, _| 1.0)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn apply(&self, v: f64, y: f64, eps: f64) -> f64 {
        (self.f)(v, y, eps)
    }

    pub fn derivative(&self, v: f64, y: f64, eps: f64) -> f64 {
        (self.df)(v, y, eps)
    }

    /// `ln((Ψ(y₀ + x) − Ψ(y₀))/x)`.
    pub fn log_slope(&self, v: f64, y0: f64, gap: Gap, eps: f64) -> Result<f64> {
        let x = if gap.is_zero() { 0.0 } else { gap.value() };
        let slope = if x.abs() >= GAUSS_SWITCH * (1.0 + y0.abs()) {
            (self.apply(v, y0 + x, eps) - self.apply(v, y0, eps)) / x
        } else {
            let k = 0.5 * 0.6f64.sqrt();
            (5.0 * self.derivative(v, y0 + (0.5 - k) * x, eps)
                + 8.0 * self.derivative(v, y0 + 0.5 * x, eps)
                + 5.0 * self.derivative(v, y0 + (0.5 + k) * x, eps))
                / 18.0
        };
        if !(slope > 0.0) || !slope.is_finite() {
            return Err(Error::Diffeomorphism(format!(
                "{} has slope {slope} near y={y0}",
                self.label
            )));
        }
        Ok(slope.ln())
    }
}

/// An exponential-type map stored by its components.
#[derive(Clone)]
pub struct ExpTypeMap {
    shift: Comp2,
    rate: Comp2,
    correction: Comp3,
    pub no_shift: bool,
    pub linear: bool,
    label: String,
}

impl fmt::Debug for ExpTypeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExpTypeMap")
            .field("label", &self.label)
            .field("no_shift", &self.no_shift)
            .field("linear", &self.linear)
            .finish()
    }
}

impl ExpTypeMap {
    /// General map from infallible components; `no_shift` and `linear` are
    /// declared by the caller.
    pub fn new(
        label: impl Into<String>,
        shift: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        rate: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        correction: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        no_shift: bool,
        linear: bool,
    ) -> Self {
        ExpTypeMap {
            shift: Arc::new(move |v, e| Ok(shift(v, e))),
            rate: Arc::new(move |v, e| Ok(rate(v, e))),
            correction: Arc::new(move |v, z, e| Ok(correction(v, z, e))),
            no_shift,
            linear,
            label: label.into(),
        }
    }

    /// `Z e^{−a/ε}`.
    pub fn pure(a: f64) -> Self {
        ExpTypeMap::new(
            format!("Z exp(-{a}/eps)"),
            |_, _| 0.0,
            move |_, _| a,
            |_, _, _| 0.0,
            true,
            true,
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn shift(&self, v: f64, eps: f64) -> Result<f64> {
        if self.no_shift {
            return Ok(0.0);
        }
        finite((self.shift)(v, eps)?, "shift B")
    }

    pub fn rate(&self, v: f64, eps: f64) -> Result<f64> {
        finite((self.rate)(v, eps)?, "rate A")
    }

    pub fn correction(&self, v: f64, z: f64, eps: f64) -> Result<f64> {
        let z = if self.linear { 0.0 } else { z };
        finite((self.correction)(v, z, eps)?, "correction Φ")
    }

    /// `D − B` in log form for an input whose size is only known as a log.
    fn gap_of(&self, v: f64, z: Gap, eps: f64) -> Result<Gap> {
        if z.is_zero() {
            return Ok(z);
        }
        let zf = z.value();
        let expo = (self.rate(v, eps)? + self.correction(v, zf, eps)?) / eps;
        Ok(Gap {
            sign: z.sign,
            log: z.log - expo,
        })
    }

    pub fn eval(&self, v: f64, z: f64, eps: f64) -> Result<ExpValue> {
        check_eps(eps)?;
        let b = self.shift(v, eps)?;
        let gap = self.gap_of(v, Gap::of(z), eps)?;
        let value = if gap.is_zero() { b } else { b + gap.value() };
        Ok(ExpValue {
            value,
            shift: b,
            gap,
        })
    }

    /// `ln((D(y₀ + x) − D(y₀))/x)`.
    pub fn log_slope(&self, v: f64, y0: f64, gap: Gap, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        let a = self.rate(v, eps)?;
        let x = if gap.is_zero() { 0.0 } else { gap.value() };
        let y1 = y0 + x;
        if y0 == 0.0 {
            return Ok(-(a + self.correction(v, y1, eps)?) / eps);
        }
        let phi0 = self.correction(v, y0, eps)?;
        let bracket = if self.linear {
            1.0
        } else if x.abs() >= SECANT_SWITCH * y0.abs() {
            let phi1 = self.correction(v, y1, eps)?;
            1.0 + y1 * (-(phi1 - phi0) / eps).exp_m1() / x
        } else {
            let h = 1e-4 * y0.abs();
            let dphi =
                (self.correction(v, y0 + h, eps)? - self.correction(v, y0 - h, eps)?) / (2.0 * h);
            let u = -dphi * x / eps;
            let expm1_over_u = if u == 0.0 { 1.0 } else { u.exp_m1() / u };
            1.0 - y1 * dphi / eps * expm1_over_u
        };
        if !(bracket > 0.0) || !bracket.is_finite() {
            return Err(Error::NonContractive(format!(
                "{} is not monotone near y={y0}",
                self.label
            )));
        }
        Ok(-(a + phi0) / eps + bracket.ln())
    }
}

/// Anything whose component limits can be probed:
/// `D(V, 0, ε)` and `ln((D(V, Z, ε) − D(V, 0, ε))/Z)`.
pub trait ExpProbe {
    fn at_zero(&self, v: f64, eps: f64) -> Result<f64>;
    fn log_quotient(&self, v: f64, z: f64, eps: f64) -> Result<f64>;
}

impl ExpProbe for ExpTypeMap {
    fn at_zero(&self, v: f64, eps: f64) -> Result<f64> {
        Ok(self.eval(v, 0.0, eps)?.value)
    }

    fn log_quotient(&self, v: f64, z: f64, eps: f64) -> Result<f64> {
        let r = self.eval(v, z, eps)?;
        if r.gap.sign * z.signum() <= 0.0 {
            return Err(Error::NonContractive("(D−B)/Z is not positive".into()));
        }
        Ok(r.gap.log - z.abs().ln())
    }
}

/// A black-box map `D(V, Z, ε)` evaluated in plain floating point.
pub struct Plain<F>(pub F);

impl<F: Fn(f64, f64, f64) -> f64> ExpProbe for Plain<F> {
    fn at_zero(&self, v: f64, eps: f64) -> Result<f64> {
        Ok((self.0)(v, 0.0, eps))
    }

    fn log_quotient(&self, v: f64, z: f64, eps: f64) -> Result<f64> {
        let q = ((self.0)(v, z, eps) - (self.0)(v, 0.0, eps)) / z;
        if !(q > 0.0) {
            return Err(Error::NonContractive(format!(
                "(D(Z)−D(0))/Z = {q} is not positive"
            )));
        }
        Ok(q.ln())
    }
}

/// Components recovered from a map by probing.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Components {
    pub shift: f64,
    pub rate: f64,
    pub correction_at_probe: f64,
}

/// `B = D(V, 0, ε)`, `A = lim_{Z→0} −ε ln((D − B)/Z)` by two Richardson
/// levels over `z_probe, z_probe/2, z_probe/4`, and `Φ` at the probe.
pub fn extract_components(d: &dyn ExpProbe, v: f64, eps: f64, z_probe: f64) -> Result<Components> {
    check_eps(eps)?;
    if !(z_probe != 0.0 && z_probe.is_finite()) {
        return Err(Error::domain("z_probe must be finite and nonzero"));
    }
    let shift = d.at_zero(v, eps)?;
    let a_of = |z: f64| -> Result<f64> { Ok(-eps * d.log_quotient(v, z, eps)?) };
    let a1 = a_of(z_probe)?;
    let a2 = a_of(0.5 * z_probe)?;
    let a4 = a_of(0.25 * z_probe)?;
    let r1 = 2.0 * a2 - a1;
    let r2 = 2.0 * a4 - a2;
    let rate = (4.0 * r2 - r1) / 3.0;
    if !(rate > 0.0) {
        return Err(Error::NonContractive(format!(
            "extracted rate {rate} is not positive"
        )));
    }
    Ok(Components {
        shift,
        rate,
        correction_at_probe: a1 - rate,
    })
}

/// `Ψ ∘ D`: shift `Ψ(B)`, same rate, correction `Φ − ε ln(C(1 + ψ))`.
pub fn compose_left(psi: &Diffeo, d: &ExpTypeMap) -> ExpTypeMap {
    let (p1, p2, d1, d2) = (psi.clone(), psi.clone(), d.clone(), d.clone());
    ExpTypeMap {
        shift: Arc::new(move |v, e| Ok(p1.apply(v, d1.shift(v, e)?, e))),
        rate: d.rate.clone(),
        correction: Arc::new(move |v, z, e| {
            let b = d2.shift(v, e)?;
            let gap = d2.gap_of(v, Gap::of(z), e)?;
            Ok(d2.correction(v, z, e)? - e * p2.log_slope(v, b, gap, e)?)
        }),
        no_shift: false,
        linear: false,
        label: format!("{} o {}", psi.label, d.label),
    }
}

/// `D ∘ Ψ` for a no-shift `Ψ`: correction `Φ(Ψ(Z)) − ε ln(Ψ(Z)/Z)`.
///
/// `Ψ(V, 0, ε) = 0` is checked on a probe grid here and again at every
/// evaluation.
pub fn compose_right(d: &ExpTypeMap, psi: &Diffeo) -> Result<ExpTypeMap> {
    for v in [-1.0, 0.0, 1.0] {
        for e in [1e-3, 0.1, 1.0] {
            let s = psi.apply(v, 0.0, e);
            if s.abs() > 1e-14 {
                return Err(Error::ShiftViolation(format!(
                    "{}(0) = {s} at V={v}, ε={e}",
                    psi.label
                )));
            }
        }
    }
    let (p, d1) = (psi.clone(), d.clone());
    Ok(ExpTypeMap {
        shift: d.shift.clone(),
        rate: d.rate.clone(),
        correction: Arc::new(move |v, z, e| {
            let s = p.apply(v, 0.0, e);
            if s.abs() > 1e-14 {
                return Err(Error::ShiftViolation(format!("{}(0) = {s}", p.label)));
            }
            let lz = p.log_slope(v, 0.0, Gap::of(z), e)?;
            Ok(d1.correction(v, p.apply(v, z, e), e)? - e * lz)
        }),
        no_shift: d.no_shift,
        linear: false,
        label: format!("{} o {}", d.label, psi.label),
    })
}

/// `outer ∘ inner` of two exponential-type maps: shift `outer(B_inner)`,
/// rates add. With a no-shift inner map this is the inner-map corollary,
/// with a linear outer map the outer-map corollary.
pub fn compose_exp(outer: &ExpTypeMap, inner: &ExpTypeMap) -> ExpTypeMap {
    let (o1, o2, o3, i1, i2, i3) = (
        outer.clone(),
        outer.clone(),
        outer.clone(),
        inner.clone(),
        inner.clone(),
        inner.clone(),
    );
    ExpTypeMap {
        shift: Arc::new(move |v, e| Ok(o1.eval(v, i1.shift(v, e)?, e)?.value)),
        rate: Arc::new(move |v, e| Ok(i2.rate(v, e)? + o2.rate(v, e)?)),
        correction: Arc::new(move |v, z, e| {
            let b = i3.shift(v, e)?;
            let gap = i3.gap_of(v, Gap::of(z), e)?;
            let slope = o3.log_slope(v, b, gap, e)?;
            Ok(i3.correction(v, z, e)? - e * slope - o3.rate(v, e)?)
        }),
        no_shift: inner.no_shift && outer.no_shift,
        linear: inner.linear && outer.linear,
        label: format!("{} o {}", outer.label, inner.label),
    }
}

/// One factor of a transition chain.
#[derive(Debug, Clone)]
pub enum ChainLink {
    Exp(ExpTypeMap),
    Diffeo(Diffeo),
}

impl ChainLink {
    fn image(&self, v: f64, y: f64, eps: f64) -> Result<f64> {
        match self {
            ChainLink::Exp(d) => Ok(d.eval(v, y, eps)?.value),
            ChainLink::Diffeo(p) => Ok(p.apply(v, y, eps)),
        }
    }

    fn log_slope(&self, v: f64, y0: f64, gap: Gap, eps: f64) -> Result<f64> {
        match self {
            ChainLink::Exp(d) => d.log_slope(v, y0, gap, eps),
            ChainLink::Diffeo(p) => p.log_slope(v, y0, gap, eps),
        }
    }
}

fn check_chain(maps: &[ChainLink]) -> Result<()> {
    if maps.len() != 5 {
        return Err(Error::ChainStructure(format!(
            "expected 5 maps, got {}",
            maps.len()
        )));
    }
    for (i, m) in maps.iter().enumerate() {
        let ok = match (i, m) {
            (2, _) => true,
            (0 | 4, ChainLink::Exp(d)) => d.no_shift && d.linear,
            (1 | 3, ChainLink::Exp(d)) => d.no_shift,
            _ => false,
        };
        if !ok {
            let need = match i {
                0 | 4 => "a no-shift linear exponential-type map",
                _ => "a no-shift exponential-type map",
            };
            return Err(Error::ChainStructure(format!(
                "map {} must be {need}",
                i + 1
            )));
        }
    }
    Ok(())
}

/// `Π₅ ∘ Π₄ ∘ Π₃ ∘ Π₂ ∘ Π₁` with `Π₃` a diffeomorphism or exponential-type map.
pub fn compose_chain(maps: &[ChainLink]) -> Result<ExpTypeMap> {
    check_chain(maps)?;
    let exp = |i: usize| match &maps[i] {
        ChainLink::Exp(d) => d.clone(),
        ChainLink::Diffeo(_) => unreachable!("roles checked"),
    };
    let p12 = compose_exp(&exp(1), &exp(0));
    let p123 = match &maps[2] {
        ChainLink::Exp(d) => compose_exp(d, &p12),
        ChainLink::Diffeo(p) => compose_left(p, &p12),
    };
    let p1234 = compose_exp(&exp(3), &p123);
    Ok(compose_exp(&exp(4), &p1234))
}

/// Pointwise composition of a chain, carried as a pair of orbits (from `0`
/// and from `Z`) whose separation is tracked in log form.
pub struct ChainProbe<'a>(pub &'a [ChainLink]);

impl ExpProbe for ChainProbe<'_> {
    fn at_zero(&self, v: f64, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        self.0.iter().try_fold(0.0, |y, m| m.image(v, y, eps))
    }

    fn log_quotient(&self, v: f64, z: f64, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        let mut y0 = 0.0;
        let mut gap = Gap::of(z);
        for m in self.0 {
            gap.log += m.log_slope(v, y0, gap, eps)?;
            y0 = m.image(v, y0, eps)?;
        }
        if gap.sign * z.signum() <= 0.0 {
            return Err(Error::NonContractive("chain reverses orientation".into()));
        }
        Ok(gap.log - z.abs().ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn eval_examples() {
        let d = ExpTypeMap::pure(1.0);
        assert!(rel(d.eval(0.0, 1.0, 0.1).unwrap().value, 4.5399929762484854e-5) < 1e-14);
        let d = ExpTypeMap::new("t", |_, e| e * e, |_, _| 2.0, |_, z, e| e * z, false, false);
        assert_eq!(d.eval(0.0, 0.0, 0.5).unwrap().value, 0.25);
        assert!(rel(d.eval(0.0, 1.0, 1.0).unwrap().value, 1.0 + (-3f64).exp()) < 1e-14);
        assert!(d.eval(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn eval_keeps_underflowing_gap() {
        let d = ExpTypeMap::pure(3.6);
        let r = d.eval(0.0, 1.0, 1e-3).unwrap();
        assert_eq!(r.value, 0.0);
        assert!((r.gap.log + 3600.0).abs() < 1e-9);
    }

    #[test]
    fn extraction_examples() {
        let c = extract_components(&ExpTypeMap::pure(1.0), 0.0, 0.1, 0.1).unwrap();
        assert_eq!(c.shift, 0.0);
        assert!((c.rate - 1.0).abs() < 1e-12 && c.correction_at_probe.abs() < 1e-12);
        let plain = Plain(|_v: f64, z: f64, e: f64| e * e + z * (-(2.0 + e * z) / e).exp());
        let c = extract_components(&plain, 0.0, 0.5, 0.1).unwrap();
        assert!((c.shift - 0.25).abs() < 1e-15);
        assert!((c.rate - 2.0).abs() < 1e-9, "{}", c.rate);
        assert!((c.correction_at_probe - 0.05).abs() < 1e-9);
        let id = Plain(|_v: f64, z: f64, _e: f64| z);
        assert!(matches!(
            extract_components(&id, 0.0, 1e-3, 0.1),
            Err(Error::NonContractive(_))
        ));
    }

    #[test]
    fn compose_left_examples() {
        let d = ExpTypeMap::pure(1.0);
        let same = compose_left(&Diffeo::identity(), &d);
        assert_eq!(
            same.eval(0.0, 0.7, 0.1).unwrap().value,
            d.eval(0.0, 0.7, 0.1).unwrap().value
        );
        let twice = compose_left(&Diffeo::scale(2.0), &d);
        assert_eq!(twice.shift(0.0, 0.1).unwrap(), 0.0);
        assert_eq!(twice.rate(0.0, 0.1).unwrap(), 1.0);
        assert!((twice.correction(0.0, 0.3, 0.1).unwrap() + 0.1 * 2f64.ln()).abs() < 1e-15);
        let shifted = compose_left(&Diffeo::translate(1.0), &d);
        assert_eq!(shifted.shift(0.0, 0.1).unwrap(), 1.0);
        assert!(shifted.correction(0.0, 0.3, 0.1).unwrap().abs() < 1e-15);
    }

    #[test]
    fn compose_right_examples() {
        let d = ExpTypeMap::pure(1.0);
        let tripled = compose_right(&d, &Diffeo::scale(3.0)).unwrap();
        let z = 0.4;
        assert!(
            rel(
                tripled.eval(0.0, z, 0.1).unwrap().value,
                3.0 * z * (-10f64).exp()
            ) < 1e-13
        );
        assert!((tripled.correction(0.0, z, 0.1).unwrap() + 0.1 * 3f64.ln()).abs() < 1e-15);
        assert!(matches!(
            compose_right(&d, &Diffeo::translate(0.1)),
            Err(Error::ShiftViolation(_))
        ));
    }

    #[test]
    fn chain_rates_add() {
        let eps = 1e-3;
        let all: Vec<ChainLink> = (0..5)
            .map(|_| ChainLink::Exp(ExpTypeMap::pure(1.0)))
            .collect();
        let c = compose_chain(&all).unwrap();
        let got = extract_components(&c, 0.0, eps, 0.1).unwrap();
        assert!((got.rate - 5.0).abs() < 1e-4);
        let direct = extract_components(&ChainProbe(&all), 0.0, eps, 0.1).unwrap();
        assert!((direct.rate - 5.0).abs() < 1e-4);

        let mixed = vec![
            ChainLink::Exp(ExpTypeMap::pure(1.0)),
            ChainLink::Exp(ExpTypeMap::pure(2.0)),
            ChainLink::Diffeo(Diffeo::identity()),
            ChainLink::Exp(ExpTypeMap::pure(3.0)),
            ChainLink::Exp(ExpTypeMap::pure(4.0)),
        ];
        let c = compose_chain(&mixed).unwrap();
        assert!((extract_components(&c, 0.0, eps, 0.1).unwrap().rate - 10.0).abs() < 1e-4);
    }

    #[test]
    fn chain_roles_are_checked() {
        let mut links: Vec<ChainLink> = (0..5)
            .map(|_| ChainLink::Exp(ExpTypeMap::pure(1.0)))
            .collect();
        links[0] = ChainLink::Diffeo(Diffeo::identity());
        assert!(matches!(
            compose_chain(&links),
            Err(Error::ChainStructure(_))
        ));
        assert!(matches!(
            compose_chain(&links[1..]),
            Err(Error::ChainStructure(_))
        ));
    }

    #[test]
    fn outer_linear_corollary() {
        // D₁ with shift, then linear D₂ with shift
        let d1 = ExpTypeMap::new(
            "d1",
            |_, e| e,
            |_, _| 1.0,
            |_, z, e| e * z * z,
            false,
            false,
        );
        let d2 = ExpTypeMap::new("d2", |_, e| 2.0 * e, |_, _| 0.5, |_, _, _| 0.0, false, true);
        let c = compose_exp(&d2, &d1);
        let eps = 0.2;
        let got = extract_components(&c, 0.0, eps, 0.05).unwrap();
        assert!((got.rate - 1.5).abs() < 1e-6);
        let want_shift = 2.0 * eps + eps * (-0.5 / eps).exp();
        assert!(rel(got.shift, want_shift) < 1e-14);
    }
}
