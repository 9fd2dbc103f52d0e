//! Adaptive integration with dense output, hyperplane sections and fiber
//! derivatives of section maps.

mod dop853;
mod trajectory;

use std::fmt;

use crate::error::{Error, Result};

pub use dop853::Segment;
pub use trajectory::Trajectory;

use dop853::Stepper;

pub type Jacobian<const N: usize> = [[f64; N]; N];

/// A (possibly non-autonomous) vector field on `ℝᴺ`.
pub trait Field<const N: usize> {
    fn eval(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;

    /// Central-difference Jacobian `∂fᵢ/∂yⱼ`; override when an exact one is cheap.
    fn jacobian(&self, t: f64, y: &[f64; N]) -> Result<Jacobian<N>> {
        let mut jac = [[0.0; N]; N];
        for j in 0..N {
            let h = 1e-7 * y[j].abs().max(1.0);
            let mut yp = *y;
            let mut ym = *y;
            yp[j] += h;
            ym[j] -= h;
            let fp = self.eval(t, &yp)?;
            let fm = self.eval(t, &ym)?;
            for i in 0..N {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }
}

impl<F, const N: usize> Field<N> for F
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn eval(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]> {
        Ok(self(t, y))
    }
}

/// Adapter for closures that can fail.
#[derive(Clone, Copy)]
pub struct FallibleField<F>(pub F);

impl<F, const N: usize> Field<N> for FallibleField<F>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    fn eval(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]> {
        (self.0)(t, y)
    }
}

/// Step-size control settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    /// Steps below this size raise a stiffness error.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
            h_min: 1e-14,
            max_steps: 5_000_000,
        }
    }
}

impl Options {
    pub fn new(rtol: f64, atol: f64) -> Result<Self> {
        let o = Options {
            rtol,
            atol,
            ..Options::default()
        };
        o.validate()?;
        Ok(o)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return Err(Error::domain(format!(
                "rtol must be positive, got {}",
                self.rtol
            )));
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return Err(Error::domain(format!(
                "atol must be positive, got {}",
                self.atol
            )));
        }
        if !(self.h_max > 0.0) || !(self.h_min >= 0.0) || self.max_steps == 0 {
            return Err(Error::domain("invalid step-size limits"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    A,
    B,
    Z,
    Eps,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::A => 0,
            Axis::B => 1,
            Axis::Z => 2,
            Axis::Eps => 3,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::A => "a",
            Axis::B => "b",
            Axis::Z => "z",
            Axis::Eps => "eps",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    fn admits(self, x: f64) -> bool {
        match self {
            Sign::Plus => x > 0.0,
            Sign::Minus => x < 0.0,
        }
    }
}

/// Crossing direction of `state[axis] − value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// The hyperplane `state[axis] = value`, optionally restricted to one sign of `z`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Section {
    pub axis: Axis,
    pub value: f64,
    pub z_sign: Option<Sign>,
}

impl Section {
    pub fn new(axis: Axis, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::domain("section value must be finite"));
        }
        Ok(Section {
            axis,
            value,
            z_sign: None,
        })
    }

    pub fn with_z_sign(mut self, sign: Sign) -> Self {
        self.z_sign = Some(sign);
        self
    }

    #[inline]
    fn gap<const N: usize>(&self, y: &[f64; N]) -> f64 {
        y[self.axis.index()] - self.value
    }
}

/// A located section crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit<const N: usize> {
    pub state: [f64; N],
    pub t: f64,
}

impl<const N: usize> Hit<N> {
    pub fn residual(&self, sec: &Section) -> f64 {
        sec.gap(&self.state).abs()
    }
}

/// Integrates on `t_span` and keeps every accepted step with its interpolant.
pub fn integrate<F: Field<N>, const N: usize>(
    field: &F,
    initial: [f64; N],
    t_span: (f64, f64),
    opts: &Options,
) -> Result<Trajectory<N>> {
    opts.validate()?;
    let (t0, t1) = t_span;
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(Error::domain("time span must be finite"));
    }
    let mut traj = Trajectory::start(t0, initial);
    if t1 == t0 {
        return Ok(traj);
    }
    let mut st = Stepper::new(field, t0, initial, t1, *opts)?;
    while st.t != t1 {
        st.step(t1)?;
        traj.push(st.dense()?, st.t, st.y);
    }
    Ok(traj)
}

/// First crossing of `sec` in the given direction, located on the dense
/// output to `|state[axis] − value| < 1e−10`.
pub fn integrate_to_section<F: Field<N>, const N: usize>(
    field: &F,
    initial: [f64; N],
    sec: &Section,
    direction: Direction,
    opts: &Options,
    t_max: f64,
) -> Result<Hit<N>> {
    run_to_section(field, initial, sec, direction, opts, t_max, None)
}

/// Like [`integrate_to_section`], also returning the path up to the hit.
pub fn integrate_to_section_recorded<F: Field<N>, const N: usize>(
    field: &F,
    initial: [f64; N],
    sec: &Section,
    direction: Direction,
    opts: &Options,
    t_max: f64,
) -> Result<(Hit<N>, Trajectory<N>)> {
    let mut traj = Trajectory::start(0.0, initial);
    let hit = run_to_section(field, initial, sec, direction, opts, t_max, Some(&mut traj))?;
    Ok((hit, traj))
}

fn run_to_section<F: Field<N>, const N: usize>(
    field: &F,
    initial: [f64; N],
    sec: &Section,
    direction: Direction,
    opts: &Options,
    t_max: f64,
    mut record: Option<&mut Trajectory<N>>,
) -> Result<Hit<N>> {
    opts.validate()?;
    if !(t_max > 0.0) {
        return Err(Error::domain(format!(
            "t_max must be positive, got {t_max}"
        )));
    }
    if sec.axis.index() >= N || (sec.z_sign.is_some() && N < 3) {
        return Err(Error::domain("section axis outside the state dimension"));
    }
    if sec.gap(&initial) == 0.0 {
        return Err(Error::domain("initial state lies on the section"));
    }
    let crosses = |g0: f64, g1: f64| match direction {
        Direction::Increasing => g0 < 0.0 && g1 >= 0.0,
        Direction::Decreasing => g0 > 0.0 && g1 <= 0.0,
    };
    let mut st = Stepper::new(field, 0.0, initial, t_max, *opts)?;
    loop {
        if st.t >= t_max {
            return Err(Error::Timeout {
                t_max,
                state: st.y.to_vec(),
            });
        }
        let g0 = sec.gap(&st.y);
        st.step(t_max)?;
        let g1 = sec.gap(&st.y);
        let seg = if crosses(g0, g1) || record.is_some() {
            Some(st.dense()?)
        } else {
            None
        };
        if crosses(g0, g1) {
            let seg = seg.clone().expect("segment built above");
            let hit = locate(field, &seg, sec, g0, g1)?;
            let sign_ok = sec.z_sign.is_none_or(|s| s.admits(hit.state[2]));
            if sign_ok {
                if let Some(tr) = record.as_deref_mut() {
                    tr.push_partial(seg, hit.t, hit.state);
                }
                return Ok(hit);
            }
        }
        if let (Some(tr), Some(seg)) = (record.as_deref_mut(), seg) {
            tr.push(seg, st.t, st.y);
        }
    }
}

fn locate<F: Field<N>, const N: usize>(
    field: &F,
    seg: &Segment<N>,
    sec: &Section,
    g0: f64,
    g1: f64,
) -> Result<Hit<N>> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut glo, _ghi) = (g0, g1);
    let mut best = (1.0, g1);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = sec.gap(&seg.at_fraction(mid));
        if g.abs() < best.1.abs() {
            best = (mid, g);
        }
        if g == 0.0 {
            break;
        }
        if (g > 0.0) == (glo > 0.0) {
            lo = mid;
            glo = g;
        } else {
            hi = mid;
        }
    }
    let (s, g) = best;
    let mut t = seg.t0 + s * seg.h;
    let mut state = seg.at_fraction(s);
    let mut gap = g;
    // one Newton step on the true field
    let v = field.eval(t, &state)?[sec.axis.index()];
    if v != 0.0 && v.is_finite() {
        let tn = t - gap / v;
        let sn = (tn - seg.t0) / seg.h;
        if (0.0..=1.0).contains(&sn) {
            let yn = seg.at_fraction(sn);
            let gn = sec.gap(&yn);
            if gn.abs() <= gap.abs() {
                t = tn;
                state = yn;
                gap = gn;
            }
        }
    }
    if gap.abs() >= 1e-10 {
        return Err(Error::DegenerateFiber(format!(
            "section crossing could not be localized (residual {gap:e})"
        )));
    }
    Ok(Hit { state, t })
}

/// Central-difference derivative of the `z`-component of the section map
/// with respect to the initial `z`, Richardson-extrapolated over `dz0` and
/// `dz0/2`.
pub fn fiber_derivative<F: Field<N>, const N: usize>(
    field: &F,
    base: [f64; N],
    sec: &Section,
    direction: Direction,
    dz0: f64,
    opts: &Options,
    t_max: f64,
) -> Result<f64> {
    if !(dz0 > 0.0 && dz0.is_finite()) {
        return Err(Error::domain(format!("dz0 must be positive, got {dz0}")));
    }
    let z = Axis::Z.index();
    let exit_z = |offset: f64| -> Result<f64> {
        let mut y = base;
        y[z] += offset;
        Ok(integrate_to_section(field, y, sec, direction, opts, t_max)?.state[z])
    };
    let central = |h: f64| -> Result<f64> { Ok((exit_z(h)? - exit_z(-h)?) / (2.0 * h)) };
    let d1 = central(dz0)?;
    let d2 = central(0.5 * dz0)?;
    let d = (4.0 * d2 - d1) / 3.0;
    if !d.is_finite() {
        return Err(Error::DegenerateFiber(format!(
            "fiber derivative is not finite at base {base:?}"
        )));
    }
    Ok(d)
}

/// `∂Π_z/∂z₀` carried in log form: `sign · exp(log_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDerivative {
    pub log_abs: f64,
    pub sign: Sign,
    pub hit: Hit<4>,
}

/// Tangent flow in projective form: state, unit direction `u` and
/// `s = w · ln |δ|`, so that the tangent vector is `exp(s/w) u`.
struct Variational<'a, F> {
    field: &'a F,
    weight: f64,
}

impl<F: Field<4>> Field<9> for Variational<'_, F> {
    fn eval(&self, t: f64, y: &[f64; 9]) -> Result<[f64; 9]> {
        let x = [y[0], y[1], y[2], y[3]];
        let u = [y[4], y[5], y[6], y[7]];
        let f = self.field.eval(t, &x)?;
        let jac = self.field.jacobian(t, &x)?;
        let mut ju = [0.0; 4];
        for i in 0..4 {
            ju[i] = (0..4).map(|j| jac[i][j] * u[j]).sum();
        }
        let lambda: f64 = (0..4).map(|i| u[i] * ju[i]).sum();
        let mut out = [0.0; 9];
        out[..4].copy_from_slice(&f);
        for i in 0..4 {
            out[4 + i] = ju[i] - lambda * u[i];
        }
        out[8] = self.weight * lambda;
        Ok(out)
    }
}

/// Derivative of the `z`-component of the section map along the initial
/// `z` direction, from the variational equation integrated in log form.
///
/// Unlike [`fiber_derivative`] this resolves derivatives far below machine
/// epsilon. `weight` scales the logarithm carried by the integrator (a
/// weight of order `ε` keeps it `O(1)` on slow-fast problems).
pub fn log_fiber_derivative<F: Field<4>>(
    field: &F,
    base: [f64; 4],
    sec: &Section,
    direction: Direction,
    weight: f64,
    opts: &Options,
    t_max: f64,
) -> Result<LogDerivative> {
    log_section_derivative(field, base, sec, direction, Axis::Z, weight, opts, t_max)
}

fn check_weight(weight: f64) -> Result<()> {
    if weight > 0.0 && weight.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "weight must be positive, got {weight}"
        )))
    }
}

/// Diagonal entry `∂Π_along/∂along₀` of the section map, in log form.
#[allow(clippy::too_many_arguments)]
pub fn log_section_derivative<F: Field<4>>(
    field: &F,
    base: [f64; 4],
    sec: &Section,
    direction: Direction,
    along: Axis,
    weight: f64,
    opts: &Options,
    t_max: f64,
) -> Result<LogDerivative> {
    check_weight(weight)?;
    let k = sec.axis.index();
    let j = along.index();
    if k == j {
        return Err(Error::domain(format!(
            "the {along} component is constant on a {along}-section"
        )));
    }
    let aug = Variational { field, weight };
    let mut y0 = [0.0; 9];
    y0[..4].copy_from_slice(&base);
    y0[4 + j] = 1.0;
    let hit9 = integrate_to_section(&aug, y0, sec, direction, opts, t_max)?;
    let x = [hit9.state[0], hit9.state[1], hit9.state[2], hit9.state[3]];
    let u = [hit9.state[4], hit9.state[5], hit9.state[6], hit9.state[7]];
    let f = field.eval(hit9.t, &x)?;
    if f[k] == 0.0 {
        return Err(Error::DegenerateFiber(
            "flow is tangent to the section at the hit".into(),
        ));
    }
    let d = u[j] - f[j] * u[k] / f[k];
    if d == 0.0 || !d.is_finite() {
        return Err(Error::DegenerateFiber(format!(
            "section-map derivative vanishes or is not finite at {x:?}"
        )));
    }
    Ok(LogDerivative {
        log_abs: hit9.state[8] / weight + d.abs().ln(),
        sign: Sign::of(d),
        hit: Hit {
            state: x,
            t: hit9.t,
        },
    })
}

/// State plus `weight · ∫ tr J dt`.
struct Liouville<'a, F> {
    field: &'a F,
    weight: f64,
}

impl<F: Field<4>> Field<5> for Liouville<'_, F> {
    fn eval(&self, t: f64, y: &[f64; 5]) -> Result<[f64; 5]> {
        let x = [y[0], y[1], y[2], y[3]];
        let f = self.field.eval(t, &x)?;
        let jac = self.field.jacobian(t, &x)?;
        let trace: f64 = (0..4).map(|i| jac[i][i]).sum();
        Ok([f[0], f[1], f[2], f[3], self.weight * trace])
    }
}

/// Determinant of the section-to-section map, in log form, from
/// Liouville's formula `exp(∫ div f dt) · f_k(x₀)/f_k(x_T)`.
pub fn log_section_determinant<F: Field<4>>(
    field: &F,
    base: [f64; 4],
    sec: &Section,
    direction: Direction,
    weight: f64,
    opts: &Options,
    t_max: f64,
) -> Result<LogDerivative> {
    check_weight(weight)?;
    let k = sec.axis.index();
    let f0 = field.eval(0.0, &base)?;
    let aug = Liouville { field, weight };
    let y0 = [base[0], base[1], base[2], base[3], 0.0];
    let hit5 = integrate_to_section(&aug, y0, sec, direction, opts, t_max)?;
    let x = [hit5.state[0], hit5.state[1], hit5.state[2], hit5.state[3]];
    let f1 = field.eval(hit5.t, &x)?;
    let ratio = f0[k] / f1[k];
    if ratio == 0.0 || !ratio.is_finite() {
        return Err(Error::DegenerateFiber(
            "flow is tangent to a section".into(),
        ));
    }
    Ok(LogDerivative {
        log_abs: hit5.state[4] / weight + ratio.abs().ln(),
        sign: Sign::of(ratio),
        hit: Hit {
            state: x,
            t: hit5.t,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, y: &[f64; 1]) -> [f64; 1] {
        [-y[0]]
    }

    /// `U' = ε, Z' = −λ Z` embedded as `(U, 0, Z, ε)`.
    fn linear(lambda: f64) -> impl Fn(f64, &[f64; 4]) -> [f64; 4] {
        move |_t, y| [y[3], 0.0, -lambda * y[2], 0.0]
    }

    #[test]
    fn exponential_decay() {
        let tr = integrate(&decay, [1.0], (0.0, 1.0), &Options::default()).unwrap();
        let (_, y) = tr.last();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn dense_output_mid_step() {
        let opts = Options::new(1e-8, 1e-10).unwrap();
        let tr = integrate(&decay, [1.0], (0.0, 5.0), &opts).unwrap();
        for seg in tr.segments() {
            let t = seg.t0 + 0.5 * seg.h;
            let y = seg.at(t)[0];
            assert!((y - (-t).exp()).abs() < 10.0 * opts.rtol, "t={t}");
        }
    }

    #[test]
    fn linear_clock_hits_at_t_10() {
        let sec = Section::new(Axis::A, 1.0).unwrap();
        let hit = integrate_to_section(
            &linear(1.0),
            [0.0, 0.0, 1.0, 0.1],
            &sec,
            Direction::Increasing,
            &Options::default(),
            100.0,
        )
        .unwrap();
        assert!((hit.t - 10.0).abs() < 1e-9);
        assert!(hit.residual(&sec) < 1e-10);
        assert!((hit.state[2] / (-10f64).exp() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn frozen_field_times_out() {
        let frozen = |_t: f64, _y: &[f64; 4]| [0.0, 0.0, 0.0, 0.0];
        let sec = Section::new(Axis::A, 1.0).unwrap();
        let err = integrate_to_section(
            &frozen,
            [0.0; 4],
            &sec,
            Direction::Increasing,
            &Options::default(),
            10.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Timeout { .. }));
    }

    #[test]
    fn fiber_derivative_of_linear_flows() {
        let sec = Section::new(Axis::A, 1.0).unwrap();
        let opts = Options::default();
        let d = fiber_derivative(
            &linear(1.0),
            [0.0, 0.0, 1.0, 0.1],
            &sec,
            Direction::Increasing,
            1e-3,
            &opts,
            100.0,
        )
        .unwrap();
        assert!((d / (-10f64).exp() - 1.0).abs() < 1e-6);
        let d = fiber_derivative(
            &linear(2.0),
            [0.0, 0.0, 1.0, 0.5],
            &sec,
            Direction::Increasing,
            1e-3,
            &opts,
            100.0,
        )
        .unwrap();
        assert!((d / (-4f64).exp() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fiber_derivative_of_identity_and_collapsing_maps() {
        let f = |_t: f64, y: &[f64; 4]| [y[3], 0.0, 0.0, 0.0];
        let sec = Section::new(Axis::A, 1.0).unwrap();
        let d = fiber_derivative(
            &f,
            [0.0, 0.0, 1.0, 0.5],
            &sec,
            Direction::Increasing,
            1e-3,
            &Options::default(),
            100.0,
        )
        .unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let g = |_t: f64, y: &[f64; 4]| [y[3], 0.0, -y[2] * 100.0, 0.0];
        let d = fiber_derivative(
            &g,
            [0.0, 0.0, 1.0, 1.0],
            &sec,
            Direction::Increasing,
            1e-3,
            &Options::default(),
            100.0,
        )
        .unwrap();
        // exact value e^{−100}; the difference quotient only sees atol noise
        assert!(d.abs() < 1e-8);
    }

    #[test]
    fn log_derivative_resolves_tiny_contractions() {
        let sec = Section::new(Axis::A, 1.0).unwrap();
        let eps = 1e-3;
        let ld = log_fiber_derivative(
            &linear(1.0),
            [0.0, 0.0, 1.0, eps],
            &sec,
            Direction::Increasing,
            eps,
            &Options::default(),
            1e4,
        )
        .unwrap();
        assert_eq!(ld.sign, Sign::Plus);
        assert!((ld.log_abs + 1000.0).abs() < 1e-6);
    }

    #[test]
    fn determinant_of_a_sheared_flow() {
        // a' = ε, b' = ε z, z' = −z: det = e^{−1/ε}, ∂b̃/∂b = 1
        let eps = 0.05;
        let f = move |_t: f64, y: &[f64; 4]| [y[3], y[3] * y[2], -y[2], 0.0];
        let sec = Section::new(Axis::A, 1.0).unwrap();
        let opts = Options::default();
        let det = log_section_determinant(
            &f,
            [0.0, 0.0, 1.0, eps],
            &sec,
            Direction::Increasing,
            eps,
            &opts,
            1e3,
        )
        .unwrap();
        assert_eq!(det.sign, Sign::Plus);
        assert!((det.log_abs + 1.0 / eps).abs() < 1e-8);
        let bb = log_section_derivative(
            &f,
            [0.0, 0.0, 1.0, eps],
            &sec,
            Direction::Increasing,
            Axis::B,
            eps,
            &opts,
            1e3,
        )
        .unwrap();
        assert!(bb.log_abs.abs() < 1e-8);
        let zz = log_fiber_derivative(
            &f,
            [0.0, 0.0, 1.0, eps],
            &sec,
            Direction::Increasing,
            eps,
            &opts,
            1e3,
        )
        .unwrap();
        // u turns towards b, so u_z is small and only resolved to atol
        assert!((zz.log_abs + 1.0 / eps).abs() < 1e-3, "{}", zz.log_abs);
        assert!(log_section_derivative(
            &f,
            [0.0, 0.0, 1.0, eps],
            &sec,
            Direction::Increasing,
            Axis::A,
            eps,
            &opts,
            1e3
        )
        .is_err());
    }

    #[test]
    fn rejects_start_on_section() {
        let sec = Section::new(Axis::A, 0.0).unwrap();
        assert!(integrate_to_section(
            &linear(1.0),
            [0.0, 0.0, 1.0, 0.1],
            &sec,
            Direction::Increasing,
            &Options::default(),
            1.0
        )
        .is_err());
    }
}
