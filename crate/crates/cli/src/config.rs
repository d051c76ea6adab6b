//! Run configurations assembled from flags and an optional configuration file.
//!
//! Explicit flags take precedence over values from the file, which take
//! precedence over defaults.

use std::fs;
use std::path::{Path, PathBuf};

use horseshoe::elicitation::TauPrior;
use horseshoe::experiments::{CorrelatedConfig, SeparableConfig, ToyConfig};
use horseshoe::model::InterceptPrior;
use horseshoe::sampler::SamplerConfig;
use horseshoe::shrinkage::SlabSpec;
use serde::{Deserialize, Serialize};

use crate::args::{
    ElicitArgs, ExperimentArgs, ExperimentName, FamilyArg, FitArgs, OutputArgs, ParameterizationArg, SamplerArgs,
    SlabKind, TauArgs, TauKind,
};
use crate::error::{usage, CliError, CliResult};

const DEFAULT_OUT_DIR: &str = "horseshoe_out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Elicit(ElicitConfig),
    Fit(FitConfig),
    Experiment(ExperimentConfig),
}

impl RunConfig {
    pub fn seed(&self) -> u64 {
        match self {
            RunConfig::Elicit(c) => c.seed,
            RunConfig::Fit(c) => c.sampler.seed,
            RunConfig::Experiment(c) => c.seed,
        }
    }

    pub fn out_dir(&self) -> &Path {
        match self {
            RunConfig::Elicit(c) => &c.out_dir,
            RunConfig::Fit(c) => &c.out_dir,
            RunConfig::Experiment(c) => &c.out_dir,
        }
    }
}

/// Global-scale prior settings as given by the user; `τ₀` is computed from
/// `p0` once the design is known.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TauSettings {
    pub kind: Option<TauKind>,
    pub scale: Option<f64>,
    pub dof: Option<f64>,
    pub p0: Option<f64>,
}

impl TauSettings {
    fn merge(args: &TauArgs, base: Option<&TauSettings>) -> Self {
        let base = base.cloned().unwrap_or_default();
        Self {
            kind: args.tau_prior.or(base.kind),
            scale: args.tau_scale.or(base.scale),
            dof: args.tau_dof.or(base.dof),
            p0: args.p0.or(base.p0),
        }
    }

    /// The τ prior and, when `p0` is set, the reference value `τ₀`.
    ///
    /// Without an explicit scale the prior is centered on `τ₀`; a plain unit
    /// scale is used only when a half-* prior is requested without `p0`.
    pub fn resolve(&self, reference: impl FnOnce(f64) -> CliResult<f64>) -> CliResult<(TauPrior, Option<f64>)> {
        let kind = match (self.kind, self.p0) {
            (Some(k), _) => k,
            (None, Some(_)) => TauKind::HalfCauchy,
            (None, None) => return Err(usage("specify --p0 or --tau-prior")),
        };
        let tau0 = self.p0.map(reference).transpose()?;
        let scale = match (self.scale, tau0, kind) {
            (Some(s), _, _) => s,
            (None, Some(t), _) => t,
            (None, None, TauKind::Fixed) => return Err(usage("--tau-prior fixed needs --tau-scale or --p0")),
            (None, None, _) => 1.0,
        };
        let prior = match kind {
            TauKind::Fixed => TauPrior::Fixed { tau: scale },
            TauKind::HalfNormal => TauPrior::HalfNormal { scale },
            TauKind::HalfCauchy => TauPrior::HalfCauchy { scale },
            TauKind::HalfT => {
                let dof = self.dof.ok_or_else(|| usage("--tau-prior half-t needs --tau-dof"))?;
                TauPrior::HalfStudentT { dof, scale }
            }
        };
        prior.validate().map_err(usage)?;
        Ok((prior, tau0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElicitConfig {
    pub dim: usize,
    pub n: usize,
    pub sigma: f64,
    pub local_dof: f64,
    pub tau: TauSettings,
    pub draws: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub data: PathBuf,
    pub test: Option<PathBuf>,
    pub target: String,
    pub family: FamilyArg,
    pub standardize: bool,
    pub tau: TauSettings,
    pub local_dof: f64,
    pub slab: SlabKind,
    pub slab_scale: f64,
    pub slab_df: f64,
    /// `None` selects the family default.
    pub intercept: Option<InterceptPrior>,
    pub parameterization: ParameterizationArg,
    pub sampler: SamplerConfig,
    pub out_dir: PathBuf,
}

impl FitConfig {
    pub fn slab_spec(&self) -> CliResult<SlabSpec> {
        let slab = match self.slab {
            SlabKind::Infinite => SlabSpec::Infinite,
            SlabKind::Fixed => SlabSpec::FixedScale { c: self.slab_scale },
            SlabKind::StudentT => SlabSpec::student_t(self.slab_df, self.slab_scale),
        };
        slab.validate().map_err(usage)?;
        Ok(slab)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatedRun {
    pub data: CorrelatedConfig,
    /// Prior guess for the number of relevant coefficients.
    pub p0: f64,
    pub slab: SlabSpec,
    pub sampler: SamplerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    Toy(ToyConfig),
    ToyScaling { sampler: SamplerConfig },
    Separable(SeparableConfig),
    Correlated(CorrelatedRun),
}

impl ExperimentSpec {
    fn name(&self) -> ExperimentName {
        match self {
            ExperimentSpec::Toy(_) => ExperimentName::Toy,
            ExperimentSpec::ToyScaling { .. } => ExperimentName::ToyScaling,
            ExperimentSpec::Separable(_) => ExperimentName::Separable,
            ExperimentSpec::Correlated(_) => ExperimentName::Correlated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSpec,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// Reads a run configuration, accepting either a manifest (with the
/// configuration under `"config"`) or a bare configuration.
pub fn load(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn out_dir(args: &OutputArgs, base: Option<&Path>) -> PathBuf {
    args.out.clone().or_else(|| base.map(Path::to_path_buf)).unwrap_or_else(|| DEFAULT_OUT_DIR.into())
}

fn mismatch(expected: &str) -> CliError {
    usage(format!("configuration file does not describe a `{expected}` run"))
}

fn merge_sampler(args: &SamplerArgs, base: SamplerConfig) -> SamplerConfig {
    SamplerConfig {
        chains: args.chains.unwrap_or(base.chains),
        warmup: args.warmup.unwrap_or(base.warmup),
        samples: args.samples.unwrap_or(base.samples),
        target_accept: args.target_accept.unwrap_or(base.target_accept),
        max_depth: args.max_depth.unwrap_or(base.max_depth),
        seed: args.seed.unwrap_or(base.seed),
        ..base
    }
}

fn base_config(args: &OutputArgs) -> CliResult<Option<RunConfig>> {
    args.config.as_deref().map(load).transpose()
}

pub fn elicit(args: &ElicitArgs) -> CliResult<ElicitConfig> {
    let base = match base_config(&args.output)? {
        Some(RunConfig::Elicit(c)) => Some(c),
        Some(_) => return Err(mismatch("elicit")),
        None => None,
    };
    let b = base.as_ref();
    let config = ElicitConfig {
        dim: args.dim.or(b.map(|c| c.dim)).ok_or_else(|| usage("missing --D"))?,
        n: args.n.or(b.map(|c| c.n)).ok_or_else(|| usage("missing --n"))?,
        sigma: args.sigma.or(b.map(|c| c.sigma)).unwrap_or(1.0),
        local_dof: args.tau.local_dof.or(b.map(|c| c.local_dof)).unwrap_or(1.0),
        tau: TauSettings::merge(&args.tau, b.map(|c| &c.tau)),
        draws: args.draws.or(b.map(|c| c.draws)).unwrap_or(10_000),
        seed: args.seed.or(b.map(|c| c.seed)).unwrap_or(0),
        out_dir: out_dir(&args.output, b.map(|c| c.out_dir.as_path())),
    };
    if config.dim == 0 || config.n == 0 || config.draws == 0 {
        return Err(usage("--D, --n and --draws must be positive"));
    }
    if !(config.sigma > 0.0 && config.sigma.is_finite()) || !(config.local_dof > 0.0) {
        return Err(usage("--sigma and --local-dof must be positive"));
    }
    Ok(config)
}

pub fn fit(args: &FitArgs) -> CliResult<FitConfig> {
    let base = match base_config(&args.output)? {
        Some(RunConfig::Fit(c)) => Some(c),
        Some(_) => return Err(mismatch("fit")),
        None => None,
    };
    let b = base.as_ref();
    let intercept = if args.no_intercept {
        Some(InterceptPrior::Excluded)
    } else if args.flat_intercept {
        Some(InterceptPrior::Flat)
    } else if let Some(sd) = args.intercept_sd {
        Some(InterceptPrior::Normal { sd })
    } else {
        b.and_then(|c| c.intercept)
    };
    let config = FitConfig {
        data: args.data.clone().or(b.map(|c| c.data.clone())).ok_or_else(|| usage("missing --data"))?,
        test: args.test.clone().or(b.and_then(|c| c.test.clone())),
        target: args.target.clone().or(b.map(|c| c.target.clone())).unwrap_or_else(|| "y".into()),
        family: args.family.or(b.map(|c| c.family)).ok_or_else(|| usage("missing --family"))?,
        standardize: !args.no_standardize && b.is_none_or(|c| c.standardize),
        tau: TauSettings::merge(&args.tau, b.map(|c| &c.tau)),
        local_dof: args.tau.local_dof.or(b.map(|c| c.local_dof)).unwrap_or(1.0),
        slab: args.slab.or(b.map(|c| c.slab)).unwrap_or(SlabKind::StudentT),
        slab_scale: args.slab_scale.or(b.map(|c| c.slab_scale)).unwrap_or(2.0),
        slab_df: args.slab_df.or(b.map(|c| c.slab_df)).unwrap_or(4.0),
        intercept,
        parameterization: args
            .parameterization
            .or(b.map(|c| c.parameterization))
            .unwrap_or(ParameterizationArg::NonCentered),
        sampler: merge_sampler(&args.sampler, b.map(|c| c.sampler.clone()).unwrap_or_default()),
        out_dir: out_dir(&args.output, b.map(|c| c.out_dir.as_path())),
    };
    config.sampler.validate().map_err(usage)?;
    config.slab_spec()?;
    if !(config.local_dof > 0.0) {
        return Err(usage("--local-dof must be positive"));
    }
    Ok(config)
}

pub fn experiment(args: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let base = match base_config(&args.output)? {
        Some(RunConfig::Experiment(c)) => Some(c),
        Some(_) => return Err(mismatch("experiment")),
        None => None,
    };
    let (spec, seed, base_out) = match base {
        Some(c) if c.experiment.name() == args.name => (c.experiment, c.seed, Some(c.out_dir)),
        Some(_) => return Err(usage("configuration file describes a different experiment")),
        None => (default_spec(args.name), 0, None),
    };
    let spec = match spec {
        ExperimentSpec::Toy(mut c) => {
            if args.n.is_some() || args.relevant.is_some() {
                c.n = args.n.unwrap_or(c.n);
                c.p_star = args.relevant.unwrap_or(c.p_star);
                c.prior_variants = ToyConfig::default_priors(c.n, c.p_star).map_err(usage)?;
            }
            c.replications = args.reps.unwrap_or(c.replications);
            c.signals = args.signals.clone().unwrap_or(c.signals);
            c.sampler = merge_sampler(&args.sampler, c.sampler);
            c.validate().map_err(usage)?;
            ExperimentSpec::Toy(c)
        }
        ExperimentSpec::ToyScaling { sampler } => {
            let sampler = merge_sampler(&args.sampler, sampler);
            sampler.validate().map_err(usage)?;
            ExperimentSpec::ToyScaling { sampler }
        }
        ExperimentSpec::Separable(mut c) => {
            c.n = args.n.unwrap_or(c.n);
            c.dim = args.dim.unwrap_or(c.dim);
            c.relevant = args.relevant.unwrap_or(c.relevant);
            c.sampler = merge_sampler(&args.sampler, c.sampler);
            c.validate().map_err(usage)?;
            ExperimentSpec::Separable(c)
        }
        ExperimentSpec::Correlated(mut c) => {
            if let Some(n) = args.n {
                c.data.n_train = n;
                c.data.n_test = n;
            }
            c.data.dim = args.dim.unwrap_or(c.data.dim);
            if let Some(r) = args.relevant {
                c.data.n_relevant = r;
                c.p0 = r as f64;
            }
            c.sampler = merge_sampler(&args.sampler, c.sampler);
            c.data.validate().map_err(usage)?;
            c.slab.validate().map_err(usage)?;
            c.sampler.validate().map_err(usage)?;
            ExperimentSpec::Correlated(c)
        }
    };
    Ok(ExperimentConfig {
        experiment: spec,
        seed: args.sampler.seed.unwrap_or(seed),
        out_dir: out_dir(&args.output, base_out.as_deref()),
    })
}

fn default_spec(name: ExperimentName) -> ExperimentSpec {
    match name {
        ExperimentName::Toy => ExperimentSpec::Toy(ToyConfig::desk_scale()),
        ExperimentName::ToyScaling => ExperimentSpec::ToyScaling {
            sampler: SamplerConfig { chains: 2, warmup: 500, samples: 500, ..SamplerConfig::default() },
        },
        ExperimentName::Separable => ExperimentSpec::Separable(SeparableConfig::default()),
        ExperimentName::Correlated => ExperimentSpec::Correlated(CorrelatedRun {
            data: CorrelatedConfig::new(100, 200, 6, 10),
            p0: 6.0,
            slab: SlabSpec::student_t(4.0, 2.0),
            sampler: SamplerConfig::default(),
        }),
    }
}
