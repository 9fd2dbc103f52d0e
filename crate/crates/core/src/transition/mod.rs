//! Numerical transition `Π: Σ⁻ → Σ⁺` of the cusp system and the studies
//! built on it.

mod studies;
mod sweep;

use std::time::Instant;

use crate::cusp::{critical_branches, A3System, StatePoint};
use crate::error::{Error, Result};
use crate::odeflow::{
    integrate_to_section, log_section_derivative, log_section_determinant, Axis, Direction,
    Options, Section, Sign,
};

pub use studies::{
    flatness_robustness, fold_exponent_fit, fold_passage, fold_point, layer_study, logspace,
    FlatRow, FlatnessReport, FoldFit, FoldPassage, LayerRow, LAYER_Z0,
};
pub use sweep::{fit_slope, sweep_eps, SweepReport, SweepRow, CSV_HEADER};

/// Numerically extracted transition data for one `(b, ε)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TransitionEstimate {
    pub b: f64,
    pub eps: f64,
    /// Exit height of the slow-manifold orbit relative to the critical
    /// manifold at `Σ⁺`.
    pub shift_num: f64,
    /// `−ε ln` of the fiber contraction: the determinant of the section map
    /// divided by its slow multiplier `∂b̃/∂b`.
    pub rate_num: f64,
    pub z_exit_sign: Sign,
    pub z_exit: f64,
    /// `z₀` minus the slow-manifold height at `Σ⁻`.
    pub base_offset: f64,
    pub hit_residuals: Vec<f64>,
    pub wall_time: f64,
}

/// Sections `a = −a_minus` and `a = a_plus` and the integration settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TransitionSetup {
    pub a_minus: f64,
    pub a_plus: f64,
    pub opts: Options,
}

impl Default for TransitionSetup {
    fn default() -> Self {
        TransitionSetup {
            a_minus: 1.0,
            a_plus: 1.0,
            opts: Options::default(),
        }
    }
}

impl TransitionSetup {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_minus > 0.0 && self.a_plus > 0.0) {
            return Err(Error::domain(format!(
                "section offsets must be positive, got a_minus={}, a_plus={}",
                self.a_minus, self.a_plus
            )));
        }
        self.opts.validate()
    }

    fn t_max(&self, eps: f64, span: f64) -> f64 {
        // a' ≈ ε; generous margin for slowed-down perturbed clocks
        10.0 * span / eps + 1e3
    }

    pub fn exit_section(&self) -> Section {
        Section {
            axis: Axis::A,
            value: self.a_plus,
            z_sign: Some(Sign::Minus),
        }
    }
}

/// Height of the attracting slow manifold at `a = −a_minus`, reached by
/// following the flow from the critical manifold a distance
/// `max(1, 20ε)` upstream.
pub fn slow_manifold_height(
    system: &A3System,
    b0: f64,
    eps: f64,
    setup: &TransitionSetup,
) -> Result<([f64; 4], f64)> {
    let lead = 1f64.max(20.0 * eps);
    let a0 = -setup.a_minus - lead;
    let z0 = critical_branches(a0, b0)
        .last()
        .map(|r| r.z)
        .ok_or_else(|| Error::Geometry("no critical root upstream of Σ⁻".into()))?;
    let sec = Section::new(Axis::A, -setup.a_minus)?;
    let hit = integrate_to_section(
        &system.fast_field(),
        [a0, b0, z0, eps],
        &sec,
        Direction::Increasing,
        &setup.opts,
        setup.t_max(eps, lead),
    )?;
    Ok((hit.state, hit.residual(&sec)))
}

/// Transition from `(−a_minus, b0, z0, ε)` to `Σ⁺ = {a = a_plus, z < 0}`.
pub fn estimate_transition(
    system: &A3System,
    b0: f64,
    z0: f64,
    eps: f64,
    setup: &TransitionSetup,
) -> Result<TransitionEstimate> {
    let started = Instant::now();
    let wrap = |e: Error| Error::Transition {
        b0,
        eps,
        source: Box::new(e),
    };
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain(format!("ε must be positive, got {eps}")));
    }
    if !(z0 > 0.0) {
        return Err(Error::domain(format!("Σ⁻ requires z0 > 0, got {z0}")));
    }
    setup.validate()?;
    StatePoint::new(-setup.a_minus, b0, z0, eps)?;

    let span = setup.a_minus + setup.a_plus;
    let t_max = setup.t_max(eps, span);
    let sec = setup.exit_section();
    let field = system.fast_field();

    let det = log_section_determinant(
        &field,
        [-setup.a_minus, b0, z0, eps],
        &sec,
        Direction::Increasing,
        eps,
        &setup.opts,
        t_max,
    )
    .map_err(wrap)?;
    let slow = if system.is_principal() {
        None
    } else {
        Some(
            log_section_derivative(
                &field,
                [-setup.a_minus, b0, z0, eps],
                &sec,
                Direction::Increasing,
                Axis::B,
                eps,
                &setup.opts,
                t_max,
            )
            .map_err(wrap)?,
        )
    };
    if det.sign != Sign::Plus || slow.is_some_and(|s| s.sign != Sign::Plus) {
        return Err(wrap(Error::NonContractive(
            "section map reverses orientation".into(),
        )));
    }
    let log_fiber = det.log_abs - slow.map_or(0.0, |s| s.log_abs);
    let rate_num = -eps * log_fiber;
    if !(rate_num > 0.0) {
        return Err(wrap(Error::NonContractive(format!(
            "rate {rate_num} is not positive"
        ))));
    }

    let (base, base_res) = slow_manifold_height(system, b0, eps, setup).map_err(wrap)?;
    let companion = integrate_to_section(
        &field,
        base,
        &sec,
        Direction::Increasing,
        &setup.opts,
        t_max,
    )
    .map_err(wrap)?;
    let exit = companion.state;
    let z_crit = critical_branches(exit[0], exit[1])
        .first()
        .map(|r| r.z)
        .ok_or_else(|| wrap(Error::Geometry("no critical root at Σ⁺".into())))?;

    Ok(TransitionEstimate {
        b: b0,
        eps,
        shift_num: exit[2] - z_crit,
        rate_num,
        z_exit_sign: Sign::of(det.hit.state[2]),
        z_exit: det.hit.state[2],
        base_offset: z0 - base[2],
        hit_residuals: vec![det.hit.residual(&sec), base_res, companion.residual(&sec)],
        wall_time: started.elapsed().as_secs_f64(),
    })
}
