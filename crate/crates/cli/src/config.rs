//! The JSON run configuration.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use wiener_tau::fields::{Axis, FieldSource, GridSpec};
use wiener_tau::tolerances;
use wiener_tau::{AreaSpec, PathEnsembleConfig, PhasePoint, ScatteringData, SolitonParams, TrivialFactor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    TauEval,
    Field,
    Residual,
    McVerify,
    KpsCheck,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Levy,
    Thm01,
    Area04,
    Prop4,
    Realize2d,
    #[default]
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tau_oracle_rtol: f64,
    pub pde_residual_rtol: f64,
    pub kps_rtol: f64,
    pub z_max: f64,
    pub quadrature_atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tau_oracle_rtol: tolerances::TAU_ORACLE_RTOL,
            pde_residual_rtol: tolerances::PDE_RESIDUAL_RTOL,
            kps_rtol: tolerances::KPS_RTOL,
            z_max: tolerances::Z_MAX,
            quadrature_atol: tolerances::QUADRATURE_ATOL,
        }
    }
}

fn one_soliton_params() -> SolitonParams {
    SolitonParams::new(vec![1.0], vec![1.0], vec![-1.0]).expect("valid")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauEvalBlock {
    pub params: SolitonParams,
    pub point: PhasePoint,
    /// Multi-indices over the times of `point`.
    pub derivatives: Vec<Vec<u32>>,
    pub trivial_factor: Option<TrivialFactor>,
}

impl Default for TauEvalBlock {
    fn default() -> Self {
        Self {
            params: one_soliton_params(),
            point: PhasePoint::zeros(3),
            derivatives: vec![],
            trivial_factor: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldBlock {
    pub source: FieldSource,
    pub grid: GridSpec,
    /// CSV file name inside the output directory.
    pub output: String,
}

impl Default for FieldBlock {
    fn default() -> Self {
        Self {
            // amplitude 2η² = 2 centred at x = 0
            source: FieldSource::Kdv {
                scattering: ScatteringData::new(vec![1.0], vec![2.0]).expect("valid"),
            },
            grid: GridSpec {
                axes: vec![Axis::new("x", -10.0, 10.0, 201)],
            },
            output: "field.csv".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Kp { params: SolitonParams },
    Kdv { scattering: ScatteringData },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResidualBlock {
    pub equation: Equation,
    pub points: usize,
    /// KP: times drawn from `[-half_width, half_width]`, kept if every `|ξ_i| ≤ max_phase`.
    /// KdV: `x` from that interval and `t` from a quarter of it.
    pub half_width: f64,
    pub max_phase: f64,
    pub seed: u64,
}

impl Default for ResidualBlock {
    fn default() -> Self {
        Self {
            equation: Equation::Kp {
                params: SolitonParams::new(vec![1.0, 0.8, 1.2], vec![0.5, 1.0, 1.5], vec![-0.4, -0.8, -1.2])
                    .expect("valid"),
            },
            points: 100,
            half_width: 8.0,
            max_phase: 20.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McBlock {
    pub suite: Suite,
    pub levy_xi: f64,
    /// Spec for the `z = i` checks (thm01, realize2d).
    pub spec: AreaSpec,
    /// Spec for the real-σ check.
    pub area04_spec: AreaSpec,
    pub sigma: f64,
    /// Symmetric spec for the OU check.
    pub prop4_spec: AreaSpec,
    /// Seed of the random orthonormal basis of the planar check.
    pub basis_seed: u64,
}

impl Default for McBlock {
    fn default() -> Self {
        let rows = |a: &[[f64; 2]; 2]| a.iter().map(|r| r.to_vec()).collect::<Vec<_>>();
        Self {
            suite: Suite::All,
            levy_xi: 1.0,
            spec: AreaSpec::from_rows(vec![0.2, 0.3], &rows(&[[0.3, 0.1], [-0.2, 0.2]])).expect("valid"),
            area04_spec: AreaSpec::from_rows(vec![0.25, 0.15], &rows(&[[0.2, -0.1], [0.3, 0.1]])).expect("valid"),
            sigma: 0.2,
            prop4_spec: AreaSpec::from_rows(vec![0.2, 0.3], &rows(&[[0.3, 0.1], [0.1, 0.3]])).expect("valid"),
            basis_seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KpsBlock {
    pub params: SolitonParams,
    /// Explicit points; when empty, `random_points` are drawn.
    pub points: Vec<PhasePoint>,
    pub random_points: usize,
    pub half_width: f64,
    pub seed: u64,
    /// Also estimate `E[exp Ŝ(i)]` where `Λ(x)` allows it.
    pub monte_carlo: bool,
}

impl Default for KpsBlock {
    fn default() -> Self {
        Self {
            params: SolitonParams::new(vec![1.0, 1.5], vec![1.5, 2.5], vec![-1.5, -2.0]).expect("valid"),
            points: vec![],
            random_points: 20,
            half_width: 1.0,
            seed: 0,
            monte_carlo: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub ensemble: PathEnsembleConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_eval: Option<TauEvalBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<ResidualBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_verify: Option<McBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kps_check: Option<KpsBlock>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Scalar overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub suite: Option<Suite>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            out: default_out(),
            tolerances: Tolerances::default(),
            ensemble: PathEnsembleConfig::default(),
            tau_eval: None,
            field: None,
            residual: None,
            mc_verify: None,
            kps_check: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid run configuration")
    }

    /// Loads `path` (or the defaults), checks it against `command`, fills in
    /// the command's block and applies the overrides.
    pub fn resolve(command: Command, path: Option<&std::path::Path>, o: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
                let cfg = Self::from_json(&text).with_context(|| format!("in {}", p.display()))?;
                if cfg.command != command {
                    bail!(
                        "config {} is for command {:?}, but {:?} was requested",
                        p.display(),
                        cfg.command,
                        command
                    );
                }
                cfg
            }
            None => Self::new(command),
        };
        cfg.check_blocks()?;
        match command {
            Command::TauEval => drop(cfg.tau_eval.get_or_insert_with(Default::default)),
            Command::Field => drop(cfg.field.get_or_insert_with(Default::default)),
            Command::Residual => drop(cfg.residual.get_or_insert_with(Default::default)),
            Command::McVerify => drop(cfg.mc_verify.get_or_insert_with(Default::default)),
            Command::KpsCheck => drop(cfg.kps_check.get_or_insert_with(Default::default)),
        }
        if let Some(seed) = o.seed {
            cfg.ensemble.seed = seed;
            if let Some(b) = cfg.residual.as_mut() {
                b.seed = seed;
            }
            if let Some(b) = cfg.kps_check.as_mut() {
                b.seed = seed;
            }
        }
        if let Some(samples) = o.samples {
            cfg.ensemble.samples = samples;
        }
        if let Some(steps) = o.steps {
            cfg.ensemble.steps = steps;
        }
        if let Some(out) = &o.out {
            cfg.out = out.clone();
        }
        if let Some(suite) = o.suite {
            match cfg.mc_verify.as_mut() {
                Some(b) => b.suite = suite,
                None => bail!("--suite only applies to mc-verify"),
            }
        }
        Ok(cfg)
    }

    /// Only the block of the selected command may be present.
    fn check_blocks(&self) -> Result<()> {
        let present = [
            (Command::TauEval, self.tau_eval.is_some(), "tau_eval"),
            (Command::Field, self.field.is_some(), "field"),
            (Command::Residual, self.residual.is_some(), "residual"),
            (Command::McVerify, self.mc_verify.is_some(), "mc_verify"),
            (Command::KpsCheck, self.kps_check.is_some(), "kps_check"),
        ];
        for (c, there, name) in present {
            if there && c != self.command {
                bail!("block {name:?} does not belong to command {:?}", self.command);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for c in [Command::TauEval, Command::Field, Command::Residual, Command::McVerify, Command::KpsCheck] {
            let cfg = RunConfig::resolve(c, None, &Overrides::default()).unwrap();
            let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
            assert_eq!(cfg, back);
        }
    }

    #[test]
    fn foreign_blocks_rejected() {
        let mut cfg = RunConfig::new(Command::TauEval);
        cfg.field = Some(FieldBlock::default());
        assert!(cfg.check_blocks().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(RunConfig::from_json(r#"{"command": "tau-eval", "bogus": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"command": "nope"}"#).is_err());
    }
}
