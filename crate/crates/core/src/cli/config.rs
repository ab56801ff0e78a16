//! Run configuration and the built-in scenarios.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifolds::ManifoldOptions;
use crate::odeflow::StepControl;
use crate::oracle::OracleOptions;
use crate::potentials::{CompositePotential, DecayParams, Operator, PotentialSpec};
use crate::spectrum::{CountOptions, GapOptions, OrderOneOptions, SolverOptions, Thresholds, DEFAULT_ALPHA};

pub const DEFAULT_EPSILON: f64 = 0.1;

/// The three two-scale examples: `(V₀, V₁)`.
pub fn scenario_potentials(id: u8) -> Result<(PotentialSpec, PotentialSpec)> {
    match id {
        // Gaussian well inside a wide Gaussian well.
        1 => Ok((PotentialSpec::Gaussian { a: -2.8, b: 1.0 }, PotentialSpec::Gaussian { a: -30.0, b: 1.0 })),
        // Rational quartic inside a hyperbolic secant.
        2 => Ok((PotentialSpec::RationalQuartic { a: -2.6, b: 2.0 }, PotentialSpec::Sech { a: -20.0, b: 1.0 })),
        // sech² inside an r⁻⁴ rational tail.
        3 => Ok((PotentialSpec::Sech2 { a: -3.0, b: 1.2 }, PotentialSpec::LorentzianSq { a: -30.0, b: 1.0 })),
        _ => Err(Error::InvalidArgument(format!("unknown scenario {id}; expected 1, 2 or 3"))),
    }
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_operator() -> Operator {
    Operator::Full
}

/// μ grid of the matching scan. `hi = None` uses `1.25 · sup V₁₋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MuGrid {
    pub lo: f64,
    pub hi: Option<f64>,
    pub n: usize,
}

impl Default for MuGrid {
    fn default() -> Self {
        Self { lo: 0.0, hi: None, n: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub enabled: bool,
    pub n: usize,
    /// Truncation radius; `None` picks 200 (400 for `Δ − V₁`).
    pub r: Option<f64>,
    /// How many of the largest eigenvalues the `oracle` command reports.
    pub top_k: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { enabled: true, n: 4000, r: None, top_k: 8 }
    }
}

impl OracleConfig {
    pub fn options(&self) -> OracleOptions {
        OracleOptions { n: self.n, radius: self.r }
    }
}

/// Decay-hypothesis audit: constants and the sample grid `r = 1..=r_max`
/// with `n` log-spaced points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub c0: f64,
    pub c1: f64,
    pub gamma: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_r_max() -> f64 {
    1000.0
}

fn default_samples() -> usize {
    200
}

impl DecayConfig {
    pub fn params(&self) -> Result<DecayParams> {
        DecayParams::new(self.c0, self.c1, self.gamma)
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.r_max >= 1.0 && self.samples >= 1) {
            return Err(Error::InvalidArgument("decay grid needs r_max >= 1 and samples >= 1".into()));
        }
        if self.samples == 1 {
            return Ok(vec![1.0]);
        }
        let n = self.samples - 1;
        Ok((0..=n).map(|i| self.r_max.powf(i as f64 / n as f64)).collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// JSON report path; stdout when absent.
    pub report: Option<PathBuf>,
    /// CSV path for the `match` command; stdout when absent.
    pub csv: Option<PathBuf>,
}

/// One JSON document drives every subcommand except `scenario`.
///
/// Either `scenario` (1–3) or both `v0` and `v1` must be given; explicit
/// potentials override the preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Option<u8>,
    #[serde(default)]
    pub v0: Option<PotentialSpec>,
    #[serde(default)]
    pub v1: Option<PotentialSpec>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Operator for `count` (and the eigenvalue list of `oracle`).
    #[serde(default = "default_operator")]
    pub operator: Operator,
    #[serde(default = "default_floor")]
    pub eigen_floor: f64,
    #[serde(default)]
    pub mu_grid: MuGrid,
    #[serde(default)]
    pub tolerances: StepControl,
    #[serde(default)]
    pub manifold: ManifoldOptions,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub decay: Option<DecayConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_floor() -> f64 {
    1e-6
}

impl RunConfig {
    /// Defaults around a preset.
    pub fn preset(id: u8, epsilon: f64) -> Self {
        Self {
            scenario: Some(id),
            v0: None,
            v1: None,
            epsilon,
            alpha: DEFAULT_ALPHA,
            operator: Operator::Full,
            eigen_floor: default_floor(),
            mu_grid: MuGrid::default(),
            tolerances: StepControl::default(),
            manifold: ManifoldOptions::default(),
            oracle: OracleConfig::default(),
            decay: None,
            output: OutputConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.potentials()?;
        Thresholds::new(self.epsilon, self.alpha)?;
        self.tolerances.validate()?;
        self.manifold.validate()?;
        if self.mu_grid.n < 2 || self.mu_grid.lo < 0.0 {
            return Err(Error::InvalidArgument("mu_grid needs lo >= 0 and n >= 2".into()));
        }
        if let Some(hi) = self.mu_grid.hi {
            if !(hi > self.mu_grid.lo) {
                return Err(Error::InvalidArgument("mu_grid.hi must exceed mu_grid.lo".into()));
            }
        }
        if !(self.eigen_floor > 0.0) {
            return Err(Error::InvalidArgument("eigen_floor must be positive".into()));
        }
        if let Some(d) = &self.decay {
            d.params()?;
            d.grid()?;
        }
        Ok(())
    }

    pub fn potentials(&self) -> Result<CompositePotential> {
        let (p0, p1) = match self.scenario {
            Some(id) => {
                let (a, b) = scenario_potentials(id)?;
                (Some(a), Some(b))
            }
            None => (None, None),
        };
        let v0 = self.v0.clone().or(p0);
        let v1 = self.v1.clone().or(p1);
        match (v0, v1) {
            (Some(v0), Some(v1)) => CompositePotential::new(v0, v1, self.epsilon),
            _ => Err(Error::InvalidArgument("config needs a scenario id or both v0 and v1".into())),
        }
    }

    pub fn thresholds(&self) -> Result<Thresholds> {
        Thresholds::new(self.epsilon, self.alpha)
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions { step: self.tolerances, manifold: self.manifold }
    }

    pub fn count_options(&self) -> CountOptions {
        CountOptions { eigen_floor: self.eigen_floor, solver: self.solver(), ..CountOptions::default() }
    }

    pub fn gap_options(&self) -> GapOptions {
        GapOptions { mu_lo: self.mu_grid.lo, mu_max: self.mu_grid.hi, n: self.mu_grid.n, solver: self.solver(), ..GapOptions::default() }
    }

    pub fn order_one_options(&self) -> OrderOneOptions {
        OrderOneOptions { solver: self.solver(), ..OrderOneOptions::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::from_json(r#"{"scenario": 2}"#).unwrap();
        assert_eq!(c.epsilon, 0.1);
        assert_eq!(c.alpha, -0.45);
        assert_eq!(c.mu_grid.n, 512);
        assert_eq!(c.tolerances, StepControl::default());
        assert_eq!(c.potentials().unwrap().v1, PotentialSpec::Sech { a: -20.0, b: 1.0 });
    }

    #[test]
    fn explicit_potentials_override_preset() {
        let c = RunConfig::from_json(
            r#"{"scenario": 1, "v0": {"form": "sech2", "a": -6, "b": 1}, "epsilon": 0.05, "operator": "v0_only"}"#,
        )
        .unwrap();
        let p = c.potentials().unwrap();
        assert_eq!(p.v0, PotentialSpec::Sech2 { a: -6.0, b: 1.0 });
        assert_eq!(p.v1, PotentialSpec::Gaussian { a: -30.0, b: 1.0 });
        assert_eq!(c.operator, Operator::V0Only);
    }

    #[test]
    fn bad_configs_rejected() {
        for text in [
            r#"{}"#,
            r#"{"scenario": 4}"#,
            r#"{"scenario": 1, "alpha": -0.7}"#,
            r#"{"scenario": 1, "epsilon": 0}"#,
            r#"{"scenario": 1, "unknown": 3}"#,
            r#"{"scenario": 1, "tolerances": {"rtol": -1}}"#,
            r#"{"v0": {"form": "zero"}}"#,
            r#"not json"#,
        ] {
            assert!(RunConfig::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn decay_grid_is_log_spaced() {
        let d = DecayConfig { c0: 1.0, c1: 1.0, gamma: 1.0, r_max: 100.0, samples: 3 };
        let g = d.grid().unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[1] - 10.0).abs() < 1e-12);
    }
}
