//! Leading-order transitions of the model normal forms.

use crate::error::{Error, Result};

/// Exit of the regular normal form `U' = ε, Z' = −Z`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RegularExit {
    pub v: f64,
    pub z: f64,
    /// `ln|Z̃/Z|`
    pub log_factor: f64,
    pub eps: f64,
}

/// `(V, Z) ↦ (V, Z e^{−(U_f − U_i)/ε})`.
pub fn regular_transition(u_i: f64, u_f: f64, eps: f64, v: f64, z: f64) -> Result<RegularExit> {
    if !(eps > 0.0) {
        return Err(Error::domain(format!("ε must be positive, got {eps}")));
    }
    if u_f < u_i {
        return Err(Error::domain(format!("need U_f ≥ U_i, got {u_i} → {u_f}")));
    }
    let log_factor = -(u_f - u_i) / eps;
    Ok(RegularExit {
        v,
        z: z * log_factor.exp(),
        log_factor,
        eps,
    })
}

/// Exit of the first semi-hyperbolic saddle model.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Saddle1Exit {
    pub u: f64,
    pub v: Vec<f64>,
    pub w: f64,
    pub z: f64,
    /// `ln|Z̃/Z|` of the leading term.
    pub log_factor: f64,
}

/// Leading-order passage of `u' = −wu, vᵢ' = βᵢwvᵢ, w' = γw², Z' = −ΛZ`
/// from `w` to `w_out`.
pub fn saddle1_transition(
    beta: &[f64],
    gamma: f64,
    lambda: f64,
    u: f64,
    v: &[f64],
    w: f64,
    w_out: f64,
    z: f64,
) -> Result<Saddle1Exit> {
    if beta.len() != v.len() {
        return Err(Error::domain("β and v must have the same length"));
    }
    if !(gamma > 0.0 && lambda > 0.0) || beta.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::domain("β, γ and Λ must be positive"));
    }
    if !(0.0 < w && w < w_out) {
        return Err(Error::domain(format!(
            "need 0 < w < w_out, got w={w}, w_out={w_out}"
        )));
    }
    for (bi, vi) in beta.iter().zip(v) {
        let bound = 10.0 * w.powf(bi / gamma);
        if vi.abs() > bound {
            return Err(Error::domain(format!(
                "|v| = {} exceeds 10·w^(β/γ) = {bound}",
                vi.abs()
            )));
        }
    }
    let ratio = w / w_out;
    let log_factor = -(lambda / (gamma * w)) * (1.0 - ratio);
    Ok(Saddle1Exit {
        u: u * ratio.powf(1.0 / gamma),
        v: beta
            .iter()
            .zip(v)
            .map(|(bi, vi)| vi * ratio.powf(-bi / gamma))
            .collect(),
        w: w_out,
        z: z * log_factor.exp(),
        log_factor,
    })
}

/// Exit of the second semi-hyperbolic saddle model.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Saddle2Exit {
    pub u: f64,
    pub v: Vec<f64>,
    pub w: f64,
    pub z: f64,
    pub log_factor: f64,
}

/// Leading-order passage of `u' = u, vᵢ' = −βᵢvᵢ, w' = −γw, Z' = −(Λ/w)Z`
/// from `u` to `u_out`.
pub fn saddle2_transition(
    beta: &[f64],
    gamma: f64,
    lambda: f64,
    u: f64,
    u_out: f64,
    v: &[f64],
    w: f64,
    z: f64,
) -> Result<Saddle2Exit> {
    if beta.len() != v.len() {
        return Err(Error::domain("β and v must have the same length"));
    }
    if !(gamma > 0.0 && lambda > 0.0) || beta.iter().any(|b| !(*b > 0.0)) {
        return Err(Error::domain("β, γ and Λ must be positive"));
    }
    if !(0.0 < u && u < u_out) {
        return Err(Error::domain(format!(
            "need 0 < u < u_out, got u={u}, u_out={u_out}"
        )));
    }
    if !(w > 0.0) {
        return Err(Error::domain(format!("need w > 0, got {w}")));
    }
    let ratio = u / u_out;
    let log_factor = -(lambda / (gamma * w)) * (ratio.powf(-gamma) - 1.0);
    Ok(Saddle2Exit {
        u: u_out,
        v: beta
            .iter()
            .zip(v)
            .map(|(bi, vi)| vi * ratio.powf(*bi))
            .collect(),
        w: w * ratio.powf(gamma),
        z: z * log_factor.exp(),
        log_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_examples() {
        let r = regular_transition(0.0, 1.0, 0.1, 0.3, 1.0).unwrap();
        assert!((r.z / (-10f64).exp() - 1.0).abs() < 1e-14 && r.v == 0.3);
        assert_eq!(regular_transition(0.0, 1.0, 0.1, 0.3, 0.0).unwrap().z, 0.0);
        assert_eq!(regular_transition(0.5, 0.5, 0.1, 0.3, 2.0).unwrap().z, 2.0);
    }

    #[test]
    fn saddle1_examples() {
        let s = saddle1_transition(&[1.0], 1.0, 1.0, 1.0, &[0.0], 0.1, 1.0, 1.0).unwrap();
        assert!((s.log_factor + 9.0).abs() < 1e-14);
        let s = saddle1_transition(&[1.0], 1.0, 1.0, 1.0, &[0.0], 0.1, 1.0, 0.0).unwrap();
        assert_eq!(s.z, 0.0);
        let s = saddle1_transition(&[2.0], 5.0, 1.0, 1.0, &[0.01], 0.1, 1.0, 1.0).unwrap();
        assert!((s.v[0] - 0.01 * 10f64.powf(0.4)).abs() < 1e-15);
        assert!((s.v[0] - 0.02512).abs() < 1e-5);
        assert!(saddle1_transition(&[1.0], 1.0, 1.0, 1.0, &[0.0], 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn saddle2_examples() {
        let s = saddle2_transition(&[1.0], 5.0, 1.8, 0.5, 1.0, &[0.0], 0.01, 1.0).unwrap();
        assert!((s.log_factor + 1116.0).abs() < 1e-9);
        assert_eq!(s.z, 0.0);
        let s = saddle2_transition(&[1.0], 5.0, 1.8, 1.0 - 1e-12, 1.0, &[0.0], 0.01, 1.0).unwrap();
        assert!((s.z - 1.0).abs() < 1e-8);
        assert!(saddle2_transition(&[1.0], 5.0, 1.8, 1.0, 1.0, &[0.0], 0.01, 1.0).is_err());
    }
}
