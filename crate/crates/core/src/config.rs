//! Run configuration: a strict, flat TOML file with one section per
//! concern. Unknown keys are rejected; every key has a documented
//! default, so a minimal file (or none at all) is a valid run.
//!
//! The `[params]`, `[grid]`, `[integrator]` and `[initial]` sections
//! drive `simulate` and `check`. The `wave` and `sobol` experiments
//! carry their own simulation settings in `[wave]` / `[sobol]` so that
//! their documented defaults stay independent of the single-run setup.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::sensitivity::{FactorRanges, Sampler, SensitivityConfig};
use crate::solver::Method;
use crate::wave::{WaveConfig, WaveRanges};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub params: ParamsSection,
    pub grid: GridSection,
    pub integrator: IntegratorSection,
    pub initial: InitialSection,
    pub simulate: SimulateSection,
    pub wave: WaveSection,
    pub sobol: SobolSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    pub n: f64,
    pub d1: f64,
    pub d2: f64,
    pub k: f64,
    pub eps: f64,
    pub r: f64,
    pub mu: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub m1: f64,
    pub m2: f64,
    pub a1: f64,
    pub a2: f64,
    pub n1: f64,
    pub n2: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        let p = ModelParams::baseline();
        Self {
            n: p.n,
            d1: p.d1,
            d2: p.d2,
            k: p.k,
            eps: p.eps,
            r: p.r,
            mu: p.mu,
            gamma: p.gamma,
            alpha: p.alpha,
            m1: p.m1,
            m2: p.m2,
            a1: p.a1,
            a2: p.a2,
            n1: p.n1,
            n2: p.n2,
        }
    }
}

impl ParamsSection {
    pub fn to_model_params(&self) -> ModelParams {
        ModelParams {
            n: self.n,
            d1: self.d1,
            d2: self.d2,
            k: self.k,
            eps: self.eps,
            r: self.r,
            mu: self.mu,
            gamma: self.gamma,
            alpha: self.alpha,
            m1: self.m1,
            m2: self.m2,
            a1: self.a1,
            a2: self.a2,
            n1: self.n1,
            n2: self.n2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub length: f64,
    pub n_cells: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { length: 1000.0, n_cells: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub method: String,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            method: "adams_pc".into(),
            dt: 0.1,
            t_end: 5.5,
            record_every: 0.5,
        }
    }
}

impl IntegratorSection {
    pub fn method(&self) -> Result<Method> {
        self.method.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    /// Seed mass placed in cell 0 (CFU).
    pub b_seed: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { b_seed: 1e6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// Times (days) at which snapshot plots are written.
    pub snapshot_times: Vec<f64>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self { snapshot_times: vec![4.0, 4.5, 5.0, 5.5] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveSection {
    pub n_samples: usize,
    pub n_cluster: f64,
    pub b_seed: f64,
    pub length: f64,
    pub n_cells: usize,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: f64,
    pub method: String,
    pub max_halfwidth: usize,
    pub ranges: RangesSection,
}

impl Default for WaveSection {
    fn default() -> Self {
        let c = WaveConfig::default();
        Self {
            n_samples: 100,
            n_cluster: c.n_cluster,
            b_seed: c.b_seed,
            length: c.grid_length,
            n_cells: c.n_cells,
            dt: c.dt,
            t_end: c.t_end,
            record_every: c.record_every,
            method: "adams_pc".into(),
            max_halfwidth: c.max_halfwidth,
            ranges: RangesSection::default(),
        }
    }
}

impl WaveSection {
    pub fn to_wave_config(&self) -> Result<WaveConfig> {
        Ok(WaveConfig {
            grid_length: self.length,
            n_cells: self.n_cells,
            dt: self.dt,
            t_end: self.t_end,
            record_every: self.record_every,
            method: self.method.parse()?,
            n_cluster: self.n_cluster,
            b_seed: self.b_seed,
            max_halfwidth: self.max_halfwidth,
            ..WaveConfig::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RangesSection {
    pub d1: (f64, f64),
    pub d2: (f64, f64),
    pub k: (f64, f64),
    pub eps: (f64, f64),
    pub r: (f64, f64),
    pub mu: (f64, f64),
    pub gamma: (f64, f64),
    pub m1: (f64, f64),
    pub m2: (f64, f64),
    pub alpha: (f64, f64),
    pub a1: (f64, f64),
    pub a2: (f64, f64),
    pub n1: (f64, f64),
    pub n2: (f64, f64),
}

impl Default for RangesSection {
    fn default() -> Self {
        let r = WaveRanges::default();
        Self {
            d1: r.d1,
            d2: r.d2,
            k: r.k,
            eps: r.eps,
            r: r.r,
            mu: r.mu,
            gamma: r.gamma,
            m1: r.m1,
            m2: r.m2,
            alpha: r.alpha,
            a1: r.a1,
            a2: r.a2,
            n1: r.n1,
            n2: r.n2,
        }
    }
}

impl RangesSection {
    pub fn to_wave_ranges(&self) -> WaveRanges {
        WaveRanges {
            d1: self.d1,
            d2: self.d2,
            k: self.k,
            eps: self.eps,
            r: self.r,
            mu: self.mu,
            gamma: self.gamma,
            m1: self.m1,
            m2: self.m2,
            alpha: self.alpha,
            a1: self.a1,
            a2: self.a2,
            n1: self.n1,
            n2: self.n2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SobolSection {
    pub n_base: usize,
    pub sampler: String,
    pub t_quantify: f64,
    pub b_seed: f64,
    pub length: f64,
    pub n_cells: usize,
    pub dt: f64,
    pub method: String,
    pub factors: FactorsSection,
}

impl Default for SobolSection {
    fn default() -> Self {
        let c = SensitivityConfig::default();
        Self {
            n_base: 300,
            sampler: "low_discrepancy".into(),
            t_quantify: c.t_quantify,
            b_seed: c.b_seed,
            length: c.grid_length,
            n_cells: c.n_cells,
            dt: c.dt,
            method: "adams_pc".into(),
            factors: FactorsSection::default(),
        }
    }
}

impl SobolSection {
    pub fn to_sensitivity_config(&self, fixed: ModelParams) -> Result<SensitivityConfig> {
        let sampler: Sampler = self.sampler.parse()?;
        Ok(SensitivityConfig {
            fixed,
            grid_length: self.length,
            n_cells: self.n_cells,
            dt: self.dt,
            t_quantify: self.t_quantify,
            b_seed: self.b_seed,
            method: self.method.parse()?,
            sampler,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FactorsSection {
    pub d2: (f64, f64),
    pub mu: (f64, f64),
    pub n: (f64, f64),
    pub r: (f64, f64),
}

impl Default for FactorsSection {
    fn default() -> Self {
        let f = FactorRanges::default();
        Self { d2: f.d2, mu: f.mu, n: f.n, r: f.r }
    }
}

impl FactorsSection {
    pub fn to_factor_ranges(&self) -> FactorRanges {
        FactorRanges { d2: self.d2, mu: self.mu, n: self.n, r: self.r }
    }
}

impl RunConfig {
    /// Strict parse: unknown keys anywhere are an error.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    /// Canonical serialized form: parsing and re-serializing a config is
    /// idempotent, and the hash below is taken over this text.
    pub fn canonical_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// SHA-256 of the canonical form, hex-encoded.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.params.to_model_params().validate()?;
        crate::solver::Grid::new(self.grid.length, self.grid.n_cells)?;
        self.integrator.method()?;
        for (name, v) in [
            ("integrator.dt", self.integrator.dt),
            ("integrator.t_end", self.integrator.t_end),
            ("integrator.record_every", self.integrator.record_every),
            ("wave.dt", self.wave.dt),
            ("wave.t_end", self.wave.t_end),
            ("sobol.dt", self.sobol.dt),
            ("sobol.t_quantify", self.sobol.t_quantify),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be finite and positive, got {v}")));
            }
        }
        if !self.initial.b_seed.is_finite() || self.initial.b_seed < 0.0 {
            return Err(Error::Config(format!(
                "initial.b_seed must be finite and non-negative, got {}",
                self.initial.b_seed
            )));
        }
        for &t in &self.simulate.snapshot_times {
            if !(0.0..=self.integrator.t_end).contains(&t) {
                return Err(Error::Config(format!(
                    "simulate.snapshot_times entry {t} is outside [0, {}]",
                    self.integrator.t_end
                )));
            }
        }
        if self.wave.n_samples == 0 {
            return Err(Error::Config("wave.n_samples must be at least 1".into()));
        }
        self.wave.ranges.to_wave_ranges().validate()?;
        self.wave.to_wave_config()?;
        if self.sobol.n_base < 2 {
            return Err(Error::Config("sobol.n_base must be at least 2".into()));
        }
        self.sobol.factors.to_factor_ranges().validate()?;
        self.sobol
            .to_sensitivity_config(self.params.to_model_params())?;
        Ok(())
    }
}
