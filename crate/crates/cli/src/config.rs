//! Experiment configuration: TOML with one table per section, every key
//! overridable from the command line as `--section.key value`.

use std::path::{Path, PathBuf};

use pawl_core::binning::{BinningConfig, RangePolicy};
use pawl_core::engine::WangLandauConfig;
use pawl_core::schedule::Schedule;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    #[default]
    Pawl,
    Pamh,
    TemperedMh,
    Smc,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Pawl => "pawl",
            Algorithm::Pamh => "pamh",
            Algorithm::TemperedMh => "tempered-mh",
            Algorithm::Smc => "smc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetName {
    #[default]
    Trimodal,
    Gprior,
    Mixture,
    Ising,
    Gaussian,
    Bimodal,
}

impl TargetName {
    pub fn as_str(&self) -> &'static str {
        match self {
            TargetName::Trimodal => "trimodal",
            TargetName::Gprior => "gprior",
            TargetName::Mixture => "mixture",
            TargetName::Ising => "ising",
            TargetName::Gaussian => "gaussian",
            TargetName::Bimodal => "bimodal",
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, TargetName::Gprior | TargetName::Ising)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSection {
    pub name: TargetName,
    /// Data file replacing the bundled one (pollution CSV, mixture values
    /// or 0/1 image, depending on the target).
    pub data: Option<PathBuf>,
    /// g-prior: `log g`.
    pub log_g: f64,
    /// Mixture: number of components.
    pub components: usize,
    /// Mixture: start from the prior with `kappa = 1`.
    pub concentrated_initial: bool,
    /// Ising: likelihood weight.
    pub alpha: f64,
    /// Ising: neighbour-agreement weight.
    pub beta: f64,
    /// Gaussian: dimension.
    pub dim: usize,
}

impl Default for TargetSection {
    fn default() -> Self {
        TargetSection {
            name: TargetName::default(),
            data: None,
            log_g: 20.0,
            components: 4,
            concentrated_initial: false,
            alpha: 1.0,
            beta: 0.7,
            dim: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub n_chains: usize,
    pub iterations: usize,
    pub prelim_iterations: usize,
    pub thin: usize,
    /// Flat-histogram tolerance `c`.
    pub flat_tolerance: f64,
    /// Bias updates every `comm_period` iterations.
    pub comm_period: usize,
    /// `gamma_k = gamma_scale / k^gamma_exponent`, `gamma_0 = gamma_scale`.
    pub gamma_scale: f64,
    pub gamma_exponent: f64,
    pub freeze_proposal_after_fh: bool,
    /// Tempered MH: sample `pi^(1/temperature)`.
    pub temperature: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            n_chains: 10,
            iterations: 10_000,
            prelim_iterations: 1000,
            thin: 10,
            flat_tolerance: 0.5,
            comm_period: 1,
            gamma_scale: 1.0,
            gamma_exponent: 1.0,
            freeze_proposal_after_fh: false,
            temperature: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProposalKind {
    /// `mixture` on continuous targets, `flip` on binary ones.
    #[default]
    Auto,
    Scaled,
    Mixture,
    Flip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProposalSection {
    pub kind: ProposalKind,
    /// Initial random-walk standard deviation `sigma_0`.
    pub sigma0: f64,
    /// Weight `w2` of the isotropic safety component.
    pub safety_weight: f64,
    /// `sigma_I`; defaults to `10 * sigma0`.
    pub safety_scale: Option<f64>,
    /// Acceptance rate targeted by the scaled random walk.
    pub target_rate: f64,
    /// `rho_t = rho_scale / t^rho_exponent`.
    pub rho_scale: f64,
    pub rho_exponent: f64,
    pub adapt: bool,
    pub flip_count: usize,
}

impl Default for ProposalSection {
    fn default() -> Self {
        ProposalSection {
            kind: ProposalKind::default(),
            sigma0: 1.0,
            safety_weight: 0.05,
            safety_scale: None,
            target_rate: 0.234,
            rho_scale: 1.0,
            rho_exponent: 1.0,
            adapt: true,
            flip_count: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeKind {
    #[default]
    Quantile,
    Minmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BinningSection {
    pub n_bins: usize,
    pub check_period: usize,
    pub split_threshold: f64,
    pub symmetric_split: bool,
    pub adaptive: bool,
    pub range: RangeKind,
    pub lower_quantile: f64,
    pub upper_quantile: f64,
    pub expansion: f64,
    /// `[lo, hi]`; skips the preliminary run.
    pub manual_range: Option<[f64; 2]>,
    pub min_occupancy: Option<u64>,
}

impl Default for BinningSection {
    fn default() -> Self {
        BinningSection {
            n_bins: 20,
            check_period: 100,
            split_threshold: 0.25,
            symmetric_split: false,
            adaptive: true,
            range: RangeKind::default(),
            lower_quantile: 0.1,
            upper_quantile: 0.9,
            expansion: 2.0,
            manual_range: None,
            min_occupancy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmcSection {
    pub particles: usize,
    pub steps: usize,
    pub ess_threshold: f64,
    pub moves: usize,
    pub move_scale: f64,
    /// Gaussian initial distribution for targets without a prior.
    pub initial_mean: Option<Vec<f64>>,
    pub initial_sd: f64,
}

impl Default for SmcSection {
    fn default() -> Self {
        SmcSection {
            particles: 10_000,
            steps: 100,
            ess_threshold: 0.9,
            moves: 5,
            move_scale: 0.1,
            initial_mean: None,
            initial_sd: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    /// Fraction of recorded samples dropped before computing metrics.
    pub burn_in: f64,
    /// Radius of the mode balls for occupancy metrics.
    pub mode_radius: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            burn_in: 0.1,
            mode_radius: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Required; there are no unseeded runs.
    pub seed: u64,
    #[serde(default)]
    pub algorithm: Algorithm,
    /// Parent of the run directory `<target>-<algorithm>-seed<seed>`;
    /// defaults to `$PAWL_OUTPUT_ROOT`, then `runs`.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for one run; 0 uses all cores.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub target: TargetSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub proposal: ProposalSection,
    #[serde(default)]
    pub binning: BinningSection,
    #[serde(default)]
    pub smc: SmcSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
}

impl ExperimentConfig {
    /// Defaults for every section with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        ExperimentConfig {
            seed,
            algorithm: Algorithm::default(),
            output_dir: None,
            threads: 0,
            target: TargetSection::default(),
            run: RunSection::default(),
            proposal: ProposalSection::default(),
            binning: BinningSection::default(),
            smc: SmcSection::default(),
            diagnostics: DiagnosticsSection::default(),
        }
    }

    /// Parse TOML text, apply `--key value` overrides, then validate.
    pub fn from_toml_with_overrides(
        text: &str,
        overrides: &[String],
    ) -> Result<Self, HarnessError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::Config(format!("invalid TOML: {e}")))?;
        for (key, value) in parse_overrides(overrides)? {
            set_dotted(&mut table, &key, value)?;
        }
        let config: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, HarnessError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serialises")
    }

    /// Rejects every invalid field by name before any computation.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |key: &str, why: String| Err(HarnessError::Config(format!("{key}: {why}")));
        let positive = [
            ("run.n_chains", self.run.n_chains),
            ("run.comm_period", self.run.comm_period),
            ("binning.n_bins", self.binning.n_bins),
            ("binning.check_period", self.binning.check_period),
            ("smc.particles", self.smc.particles),
            ("smc.steps", self.smc.steps),
            ("target.components", self.target.components),
            ("target.dim", self.target.dim),
            ("proposal.flip_count", self.proposal.flip_count),
        ];
        for (key, v) in positive {
            if v == 0 {
                return bad(key, "must be at least 1".into());
            }
        }
        let c = self.run.flat_tolerance;
        if !(c > 0.0 && c <= 1.0) {
            return bad("run.flat_tolerance", format!("must lie in (0, 1], got {c}"));
        }
        let t = self.binning.split_threshold;
        if !(t > 0.0 && t < 0.5) {
            return bad(
                "binning.split_threshold",
                format!("must lie in (0, 0.5), got {t}"),
            );
        }
        let (lq, uq) = (self.binning.lower_quantile, self.binning.upper_quantile);
        if !(0.0 <= lq && lq < uq && uq <= 1.0) {
            return bad(
                "binning.lower_quantile",
                format!("need 0 <= lower < upper <= 1, got {lq} and {uq}"),
            );
        }
        if !is_positive(self.binning.expansion) {
            return bad("binning.expansion", "must be positive".into());
        }
        if let Some([lo, hi]) = self.binning.manual_range {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(
                    "binning.manual_range",
                    format!("need lo < hi, got [{lo}, {hi}]"),
                );
            }
        }
        if !(1.0..).contains(&self.run.temperature) {
            return bad(
                "run.temperature",
                format!("must be at least 1, got {}", self.run.temperature),
            );
        }
        if !is_positive(self.proposal.sigma0) {
            return bad("proposal.sigma0", "must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.proposal.safety_weight) {
            return bad("proposal.safety_weight", "must lie in [0, 1]".into());
        }
        if let Some(s) = self.proposal.safety_scale {
            if !is_positive(s) {
                return bad("proposal.safety_scale", "must be positive".into());
            }
        }
        if !(self.proposal.target_rate > 0.0 && self.proposal.target_rate < 1.0) {
            return bad("proposal.target_rate", "must lie in (0, 1)".into());
        }
        if !(self.smc.ess_threshold > 0.0 && self.smc.ess_threshold <= 1.0) {
            return bad("smc.ess_threshold", "must lie in (0, 1]".into());
        }
        if !is_positive(self.smc.move_scale) {
            return bad("smc.move_scale", "must be positive".into());
        }
        if !is_positive(self.smc.initial_sd) {
            return bad("smc.initial_sd", "must be positive".into());
        }
        if !(0.0..1.0).contains(&self.diagnostics.burn_in) {
            return bad("diagnostics.burn_in", "must lie in [0, 1)".into());
        }
        let discrete = self.target.name.is_discrete();
        match (self.proposal.kind, discrete) {
            (ProposalKind::Flip, false) => {
                return bad("proposal.kind", "flip moves need a binary target".into())
            }
            (ProposalKind::Scaled | ProposalKind::Mixture, true) => {
                return bad(
                    "proposal.kind",
                    "random walks need a continuous target".into(),
                )
            }
            _ => {}
        }
        if self.algorithm == Algorithm::Smc && discrete {
            return bad("algorithm", "smc needs a continuous target".into());
        }
        Ok(())
    }

    pub fn gamma(&self) -> Schedule {
        Schedule::Power {
            scale: self.run.gamma_scale,
            exponent: self.run.gamma_exponent,
        }
    }

    pub fn wang_landau(&self) -> WangLandauConfig {
        let b = &self.binning;
        let range = match (b.manual_range, b.range) {
            (Some([lo, hi]), _) => RangePolicy::Manual { lo, hi },
            (None, RangeKind::Quantile) => RangePolicy::Quantile {
                lower: b.lower_quantile,
                upper: b.upper_quantile,
                factor: b.expansion,
            },
            (None, RangeKind::Minmax) => RangePolicy::MinMax,
        };
        WangLandauConfig {
            n_chains: self.run.n_chains,
            iterations: self.run.iterations,
            flat_tolerance: self.run.flat_tolerance,
            gamma: self.gamma(),
            comm_period: self.run.comm_period,
            thin: self.run.thin,
            adapt_proposal: self.proposal.adapt,
            freeze_proposal_after_fh: self.run.freeze_proposal_after_fh,
            prelim_iterations: self.run.prelim_iterations,
            binning: BinningConfig {
                n_bins: b.n_bins,
                range,
                check_period: b.check_period,
                split_threshold: b.split_threshold,
                symmetric_split: b.symmetric_split,
                adaptive: b.adaptive,
                min_occupancy: b.min_occupancy,
            },
        }
    }

    /// Default artifact directory name.
    pub fn run_name(&self) -> String {
        format!(
            "{}-{}-seed{}",
            self.target.name.as_str(),
            self.algorithm.as_str(),
            self.seed
        )
    }
}

/// Text for `--help`: every key with its default.
pub fn documented_defaults() -> String {
    let body = ExperimentConfig::with_seed(0).to_toml();
    format!(
        "Configuration keys and their defaults (seed is required). Any key can be\n\
         set in the --config file or on the command line as --section.key VALUE:\n\n{body}"
    )
}

/// Pairs `--a.b value` / `--a.b=value` into (key, TOML value).
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, toml::Value)>, HarnessError> {
    let mut out = Vec::new();
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return Err(HarnessError::Config(format!(
                "unexpected argument {arg:?}; overrides look like --section.key VALUE"
            )));
        };
        let (key, raw) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = iter
                    .next()
                    .ok_or_else(|| HarnessError::Config(format!("--{flag} needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(HarnessError::Config(format!("malformed key {key:?}")));
        }
        out.push((key.replace('-', "_"), parse_value(&raw)));
    }
    Ok(out)
}

/// Interpret a command-line value as TOML (numbers, booleans, arrays),
/// falling back to a plain string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), HarnessError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().expect("split yields at least one part");
    let mut cursor = table;
    for part in parts {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::Config(format!("{key}: {part} is not a section")))?;
    }
    cursor.insert(leaf.to_string(), value);
    Ok(())
}

/// False for NaN as well as for non-positive values.
fn is_positive(x: f64) -> bool {
    x > 0.0
}
