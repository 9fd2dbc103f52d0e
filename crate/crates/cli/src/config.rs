//! Run configuration: one JSON document, overridden by command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cusplab::cusp::A3System;
use cusplab::odeflow::Options;
use cusplab::transition::{logspace, TransitionSetup};

use crate::expr::load_system;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemSpec {
    Principal,
    StockFlat {
        amplitude: f64,
    },
    /// File with `f1 = ...`, `f2 = ...`, `f3 = ...` lines.
    Expression {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateParams {
    pub b: f64,
    pub z0: f64,
    pub eps: f64,
}

impl Default for SimulateParams {
    fn default() -> Self {
        SimulateParams {
            b: 0.0,
            z0: 2.0,
            eps: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub b: Vec<f64>,
    pub z0: f64,
    pub eps: Vec<f64>,
    /// Added to the target `I` before deviations are computed.
    pub target_offset: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            b: vec![0.0],
            z0: 2.0,
            eps: vec![1e-2, 5e-3, 2e-3, 1e-3],
            target_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayersParams {
    pub eps: Vec<f64>,
    pub mu: Vec<f64>,
}

impl Default for LayersParams {
    fn default() -> Self {
        LayersParams {
            eps: logspace(1e-4, 1e-2, 5),
            mu: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FoldParams {
    pub eps: Vec<f64>,
}

impl Default for FoldParams {
    fn default() -> Self {
        FoldParams {
            eps: logspace(1e-5, 1e-3, 7),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdiParams {
    pub b: f64,
    /// Explicit endpoints; both or neither.
    pub z_en: Option<f64>,
    pub z_ex: Option<f64>,
    /// Added to the quadrature value; a self-check fixture.
    pub check_offset: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub target_offset: f64,
    /// Subset of criteria 1 to 9; empty runs the full suite.
    pub only: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub a_minus: f64,
    pub a_plus: f64,
    pub layer_l: f64,
    pub layer_m: f64,
    pub out: PathBuf,
    pub seed: u64,
    pub simulate: SimulateParams,
    pub sweep: SweepParams,
    pub layers: LayersParams,
    pub fold: FoldParams,
    pub sdi: SdiParams,
    pub verify: VerifyParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        let opts = Options::default();
        RunConfig {
            system: SystemSpec::Principal,
            rtol: opts.rtol,
            atol: opts.atol,
            max_steps: opts.max_steps,
            a_minus: 1.0,
            a_plus: 1.0,
            layer_l: 0.5,
            layer_m: 1.0,
            out: PathBuf::from("out"),
            seed: 7,
            simulate: SimulateParams::default(),
            sweep: SweepParams::default(),
            layers: LayersParams::default(),
            fold: FoldParams::default(),
            sdi: SdiParams::default(),
            verify: VerifyParams::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(CliError::Usage(format!(
                "tolerances must be positive, got rtol={}, atol={}",
                self.rtol, self.atol
            )));
        }
        if !(self.a_minus > 0.0 && self.a_plus > 0.0) {
            return Err(CliError::Usage(
                "section values a_minus and a_plus must be positive".into(),
            ));
        }
        if !(self.layer_l > 0.0 && self.layer_l < self.layer_m) {
            return Err(CliError::Usage(format!(
                "layer constants need 0 < L < M, got L={}, M={}",
                self.layer_l, self.layer_m
            )));
        }
        Ok(())
    }

    pub fn options(&self) -> Result<Options, CliError> {
        let mut o = Options::new(self.rtol, self.atol)?;
        o.max_steps = self.max_steps;
        o.validate()?;
        Ok(o)
    }

    pub fn setup(&self) -> Result<TransitionSetup, CliError> {
        Ok(TransitionSetup {
            a_minus: self.a_minus,
            a_plus: self.a_plus,
            opts: self.options()?,
        })
    }

    pub fn system(&self) -> Result<A3System, CliError> {
        match &self.system {
            SystemSpec::Principal => Ok(A3System::principal()),
            SystemSpec::StockFlat { amplitude } => Ok(A3System::stock_flat(*amplitude)),
            SystemSpec::Expression { path } => load_system(path),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_documents_fill_defaults() {
        let c: RunConfig = serde_json::from_str(
            r#"{"system": {"kind": "stock-flat", "amplitude": 0.5}, "sweep": {"b": [0.3]}}"#,
        )
        .unwrap();
        assert_eq!(c.system, SystemSpec::StockFlat { amplitude: 0.5 });
        assert_eq!(c.sweep.b, vec![0.3]);
        assert_eq!(c.sweep.eps.len(), 4);
        assert_eq!(c.rtol, 1e-10);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"rtoll": 1e-8}"#).is_err());
    }

    #[test]
    fn round_trip() {
        let c = RunConfig::default();
        let back: RunConfig = serde_json::from_value(serde_json::to_value(&c).unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_ok());
        c.layer_l = 2.0;
        assert!(c.validate().is_err());
        c.layer_l = 0.5;
        c.atol = 0.0;
        assert!(c.validate().is_err());
    }
}
