//! Layer-resolved runs, the fold-passage exponent and flat perturbations.

use super::sweep::{fit_slope, sweep_eps};
use super::{estimate_transition, TransitionEstimate, TransitionSetup};
use crate::blowup::{classify_entry, LayerLabel};
use crate::cusp::{critical_branches, A3System};
use crate::error::{Error, Result};
use crate::odeflow::{integrate_to_section, Axis, Direction, Options, Section};

/// Entry height used by the layer study.
pub const LAYER_Z0: f64 = 2.0;

/// One `(μ, ε)` run of the layer study.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LayerRow {
    pub mu: f64,
    pub eps: f64,
    pub b0: f64,
    pub label: LayerLabel,
    /// `b ε^{−2/5}` where the orbit reaches `a = −δ ε^{3/5}`.
    pub b1_exit: Option<f64>,
    /// `|b1_exit| > 2M`.
    pub escaped: bool,
    pub estimate: Option<TransitionEstimate>,
    pub error: Option<String>,
}

/// Runs the transition at `b0 = μ ε^{2/5}` for each `μ` and reads the
/// entry-chart coordinate `b₁` on the sphere section `r = ε^{1/5}`.
pub fn layer_study(
    system: &A3System,
    eps: f64,
    mu_list: &[f64],
    l: f64,
    m: f64,
    setup: &TransitionSetup,
) -> Result<Vec<LayerRow>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain(format!("ε must be positive, got {eps}")));
    }
    classify_entry(0.0, eps, l, m)?;
    setup.validate()?;
    let scale = eps.powf(0.4);
    let a_sphere = -eps.powf(0.6);
    if a_sphere <= -setup.a_minus {
        return Err(Error::domain(
            "ε too large: the sphere section lies before Σ⁻",
        ));
    }
    let sec = Section::new(Axis::A, a_sphere)?;
    let row = |mu: f64| -> Result<LayerRow> {
        let b0 = mu * scale;
        let label = classify_entry(b0, eps, l, m)?;
        let mut row = LayerRow {
            mu,
            eps,
            b0,
            label,
            b1_exit: None,
            escaped: false,
            estimate: None,
            error: None,
        };
        let reached = integrate_to_section(
            &system.fast_field(),
            [-setup.a_minus, b0, LAYER_Z0, eps],
            &sec,
            Direction::Increasing,
            &setup.opts,
            10.0 * setup.a_minus / eps + 1e3,
        );
        match reached {
            Ok(hit) => {
                let b1 = hit.state[1] / scale;
                row.b1_exit = Some(b1);
                row.escaped = b1.abs() > 2.0 * m;
            }
            Err(e) => row.error = Some(e.to_string()),
        }
        match estimate_transition(system, b0, LAYER_Z0, eps, setup) {
            Ok(est) => row.estimate = Some(est),
            Err(e) => {
                row.error.get_or_insert_with(|| e.to_string());
            }
        }
        Ok(row)
    };
    mu_list.iter().map(|&mu| row(mu)).collect()
}

/// Fold point `p₊ = (2/(3√3), 1/√3)` of `z³ − z + a = 0`.
pub fn fold_point() -> (f64, f64) {
    let s = 3f64.sqrt();
    (2.0 / (3.0 * s), 1.0 / s)
}

/// Exit offset past the fold for one ε.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FoldPassage {
    pub eps: f64,
    pub a_hit: f64,
    pub z_hit: f64,
    /// `a_hit − 2/(3√3)`.
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FoldFit {
    pub passages: Vec<FoldPassage>,
    pub slope: f64,
}

/// Start of the fold-passage runs; a jump must happen before `a = FOLD_A0`.
const FOLD_A0: f64 = 1.0;

/// Follows `a' = ε, z' = −(z³ − z + a)`, the fast field at `b = −1`,
/// from the upper attracting branch at `a = −1` until `z` falls through
/// the fold height `1/√3`.
pub fn fold_passage(eps: f64, opts: &Options) -> Result<FoldPassage> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::domain(format!("ε must be positive, got {eps}")));
    }
    let (a_fold, z_fold) = fold_point();
    let z0 = critical_branches(-FOLD_A0, -1.0)
        .last()
        .map(|r| r.z)
        .ok_or_else(|| Error::FoldDetection("no upper branch at the start".into()))?;
    let sec = Section::new(Axis::Z, z_fold)?;
    let t_max = 2.0 * FOLD_A0 / eps;
    let hit = integrate_to_section(
        &A3System::principal().fast_field(),
        [-FOLD_A0, -1.0, z0, eps],
        &sec,
        Direction::Decreasing,
        opts,
        t_max,
    )
    .map_err(|e| match e {
        Error::Timeout { .. } => {
            Error::FoldDetection(format!("no jump before a = {FOLD_A0} at ε = {eps}"))
        }
        e => e,
    })?;
    if hit.state[0] >= FOLD_A0 {
        return Err(Error::FoldDetection(format!(
            "jump only after a = {FOLD_A0} at ε = {eps}"
        )));
    }
    Ok(FoldPassage {
        eps,
        a_hit: hit.state[0],
        z_hit: hit.state[2],
        offset: hit.state[0] - a_fold,
    })
}

/// Slope of `ln(offset)` against `ln ε`.
pub fn fold_exponent_fit(eps_list: &[f64], opts: &Options) -> Result<FoldFit> {
    let lo = eps_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eps_list.iter().cloned().fold(0.0, f64::max);
    if eps_list.len() < 2 || !(lo > 0.0) || hi / lo < 10f64.powf(1.5) {
        return Err(Error::domain(
            "ε list must have positive entries spanning at least 1.5 decades",
        ));
    }
    let passages = eps_list
        .iter()
        .map(|&e| fold_passage(e, opts))
        .collect::<Result<Vec<_>>>()?;
    if let Some(p) = passages.iter().find(|p| !(p.offset > 0.0)) {
        return Err(Error::FoldDetection(format!(
            "non-positive exit offset {} at ε = {}",
            p.offset, p.eps
        )));
    }
    let xs: Vec<f64> = passages.iter().map(|p| p.eps.ln()).collect();
    let ys: Vec<f64> = passages.iter().map(|p| p.offset.ln()).collect();
    let slope = fit_slope(&xs, &ys).ok_or_else(|| Error::FoldDetection("degenerate fit".into()))?;
    Ok(FoldFit { passages, slope })
}

/// `n` logarithmically spaced points from `lo` to `hi`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l, h) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (l + (h - l) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FlatRow {
    pub eps: f64,
    pub rate_flat: Option<f64>,
    pub rate_principal: Option<f64>,
    pub difference: Option<f64>,
    /// Deviation of the principal rate from `−I`.
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FlatnessReport {
    pub system: String,
    pub b: f64,
    pub rows: Vec<FlatRow>,
    /// `difference(εᵢ) / difference(εᵢ₊₁)`.
    pub shrink_factors: Vec<f64>,
    /// `difference / ε²` decreases along the list.
    pub faster_than_eps2: bool,
}

/// Reruns the sweep with a flat-perturbed system and compares its rates
/// with the principal part.
pub fn flatness_robustness(
    system_flat: &A3System,
    b0: f64,
    eps_list: &[f64],
    setup: &TransitionSetup,
) -> Result<FlatnessReport> {
    let principal = A3System::principal();
    let base = sweep_eps(&principal, b0, LAYER_Z0, eps_list, setup)?;
    let flat = sweep_eps(system_flat, b0, LAYER_Z0, eps_list, setup)?;
    let rows: Vec<FlatRow> = base
        .rows
        .iter()
        .zip(&flat.rows)
        .map(|(p, f)| {
            let rp = p.estimate.as_ref().map(|e| e.rate_num);
            let rf = f.estimate.as_ref().map(|e| e.rate_num);
            FlatRow {
                eps: p.eps,
                rate_flat: rf,
                rate_principal: rp,
                difference: rp.zip(rf).map(|(a, b)| (a - b).abs()),
                deviation: p.deviation,
            }
        })
        .collect();
    let diffs: Vec<Option<f64>> = rows.iter().map(|r| r.difference).collect();
    let shrink_factors = diffs
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => a / b,
            _ => f64::NAN,
        })
        .collect();
    let scaled: Vec<f64> = rows
        .iter()
        .map(|r| r.difference.map_or(f64::NAN, |d| d / (r.eps * r.eps)))
        .collect();
    Ok(FlatnessReport {
        system: system_flat.label().to_string(),
        b: b0,
        rows,
        shrink_factors,
        faster_than_eps2: scaled.windows(2).all(|w| w[1] < w[0]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_point_is_on_the_fold() {
        let (a, z) = fold_point();
        assert!((z * z * z - z + a).abs() < 1e-15 && (3.0 * z * z - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fold_jump_is_near_the_fold() {
        let p = fold_passage(1e-5, &Options::default()).unwrap();
        let (a, z) = fold_point();
        assert!((p.a_hit - a).abs() < 0.1 && (p.z_hit - z).abs() < 0.1);
        assert!(p.offset > 0.0);
    }

    #[test]
    fn fold_fit_preconditions() {
        assert!(fold_exponent_fit(&[1e-3], &Options::default()).is_err());
        assert!(fold_exponent_fit(&[1e-3, 5e-4], &Options::default()).is_err());
    }

    #[test]
    fn logspace_endpoints() {
        let v = logspace(1e-5, 1e-3, 7);
        assert_eq!(v.len(), 7);
        assert!((v[0] - 1e-5).abs() < 1e-20 && (v[6] - 1e-3).abs() < 1e-17);
        assert!((v[3] - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn zero_mu_stays_at_zero() {
        let rows = layer_study(
            &A3System::principal(),
            1e-3,
            &[0.0, 0.5],
            0.5,
            1.0,
            &TransitionSetup::default(),
        )
        .unwrap();
        assert_eq!(rows[0].b1_exit, Some(0.0));
        assert!(rows[1].label.inner && !rows[1].escaped);
        assert!((rows[1].b1_exit.unwrap() - 0.5).abs() < 1e-12);
    }
}
