//! `fit`: posterior sampling for a CSV data set.

use horseshoe::elicitation::{solve_tau_for_meff, summarize_meff, MeffSummary};
use horseshoe::model::{
    fit, posterior_meff, predictive_metrics, Dataset, Design, Draw, GlmModel, Parameterization, PredictiveMetrics,
    PriorSpec, Standardizer,
};
use horseshoe::sampler::Diagnostics;
use horseshoe::shrinkage::{pseudo_variance, tau_reference, GlmFamily, SlabSpec};
use serde::Serialize;

use crate::args::{FamilyArg, ParameterizationArg};
use crate::config::{FitConfig, RunConfig};
use crate::error::{runtime, usage, CliResult};
use crate::io::{read_table, Output};

const FILES: [&str; 3] = ["draws.csv", "summary.json", "diagnostics.json"];

#[derive(Serialize)]
struct ParameterSummary {
    name: String,
    mean: f64,
    sd: f64,
    q05: f64,
    q50: f64,
    q95: f64,
}

#[derive(Serialize)]
struct Coefficient {
    name: String,
    value: f64,
}

#[derive(Serialize)]
struct RawScale {
    intercept: f64,
    coefficients: Vec<Coefficient>,
}

#[derive(Serialize)]
struct Summary {
    n: usize,
    predictors: Vec<String>,
    standardization: Option<Standardizer>,
    prior: PriorSpec,
    tau0: Option<f64>,
    parameters: Vec<ParameterSummary>,
    /// Posterior mean coefficients on the scale of the input predictors.
    raw_scale: RawScale,
    meff: MeffSummary,
    predictive: Option<PredictiveMetrics>,
}

#[derive(Serialize)]
struct ParameterDiagnostics {
    name: String,
    rhat: f64,
    ess_bulk: f64,
}

#[derive(Serialize)]
struct DiagnosticsFile {
    parameters: Vec<ParameterDiagnostics>,
    max_rhat: f64,
    divergence_fraction: f64,
    divergent_transitions: usize,
    warmup_divergences: Vec<usize>,
    step_sizes: Vec<f64>,
}

fn family(arg: FamilyArg) -> GlmFamily {
    match arg {
        FamilyArg::Gaussian => GlmFamily::Gaussian,
        FamilyArg::Bernoulli => GlmFamily::BinomialLogit,
    }
}

/// Reference `τ₀` for this design. For the Gaussian model the prior scale
/// multiplies `σ`, so `τ₀` is computed at unit noise; the logistic model uses
/// the pseudo standard deviation at the observed class frequency.
fn reference_tau(p0: f64, local_dof: f64, data: &Dataset) -> CliResult<f64> {
    let sigma = match data.family {
        GlmFamily::Gaussian => 1.0,
        family => {
            let mean = data.y.iter().sum::<f64>() / data.n() as f64;
            pseudo_variance(&family, mean, 1.0).map_err(usage)?.sqrt()
        }
    };
    let ctx = data.shrinkage_context(sigma).map_err(usage)?;
    if local_dof == 1.0 { tau_reference(p0, &ctx) } else { solve_tau_for_meff(p0, local_dof, &ctx) }.map_err(usage)
}

fn summarize(name: String, mut v: Vec<f64>) -> ParameterSummary {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let (i, f) = (pos.floor() as usize, pos.fract());
        if i + 1 < v.len() {
            v[i] + f * (v[i + 1] - v[i])
        } else {
            v[i]
        }
    };
    ParameterSummary { name, mean, sd, q05: q(0.05), q50: q(0.5), q95: q(0.95) }
}

/// Named scalar columns of a draw, in output order.
struct Columns {
    names: Vec<String>,
    intercept: bool,
    slab: bool,
    sigma: bool,
}

impl Columns {
    fn header(&self) -> Vec<String> {
        let mut h = Vec::new();
        if self.intercept {
            h.push("beta0".to_string());
        }
        h.extend(self.names.iter().map(|n| format!("beta[{n}]")));
        h.push("tau".into());
        if self.slab {
            h.push("c".into());
        }
        if self.sigma {
            h.push("sigma".into());
        }
        h
    }

    fn values(&self, d: &Draw) -> Vec<f64> {
        let mut v = Vec::new();
        if self.intercept {
            v.push(d.beta0.unwrap_or(0.0));
        }
        v.extend(&d.beta);
        v.push(d.tau);
        if self.slab {
            v.push(d.c);
        }
        if self.sigma {
            v.push(d.sigma.unwrap_or(f64::NAN));
        }
        v
    }
}

pub fn run(config: &FitConfig, run: &RunConfig) -> CliResult<()> {
    let family = family(config.family);
    let table = read_table(&config.data, &config.target)?;
    let raw = Dataset::new(Design::Dense(table.x), table.y, family).map_err(usage)?;
    let (data, standardizer) = if config.standardize {
        let (d, s) = raw.standardize().map_err(usage)?;
        (d, Some(s))
    } else {
        (raw, None)
    };
    let test = match &config.test {
        Some(path) => {
            let t = read_table(path, &config.target)?;
            if t.names != table.names {
                return Err(usage(format!("{}: predictor columns differ from the training data", path.display())));
            }
            let x = match &standardizer {
                Some(s) => s.transform(&t.x).map_err(usage)?,
                None => t.x,
            };
            Some(Dataset::new(Design::Dense(x), t.y, family).map_err(usage)?)
        }
        None => None,
    };

    let (tau_prior, tau0) = config.tau.resolve(|p0| reference_tau(p0, config.local_dof, &data))?;
    let mut prior = PriorSpec::new(tau_prior, config.local_dof, config.slab_spec()?, family);
    if let Some(intercept) = config.intercept {
        prior.intercept = intercept;
    }
    prior.parameterization = match config.parameterization {
        ParameterizationArg::NonCentered => Parameterization::NonCentered,
        ParameterizationArg::ScaleMixture => Parameterization::ScaleMixture,
    };
    let model = GlmModel::new(data.clone(), prior.clone()).map_err(usage)?;
    if let Some(t) = tau0 {
        println!("tau0 = {t:.6e}");
    }

    let out = Output::create(run, &FILES)?;
    let fitted = fit(&model, &config.sampler).map_err(runtime)?;
    let draws = &fitted.draws;
    let meff = posterior_meff(draws, &data).map_err(runtime)?;
    let layout = model.layout();
    let columns = Columns {
        names: table.names.clone(),
        intercept: layout.beta0.is_some(),
        slab: prior.slab != SlabSpec::Infinite,
        sigma: layout.sigma.is_some(),
    };

    let mut header: Vec<String> =
        ["chain", "iteration", "divergent", "tree_depth", "accept_stat"].iter().map(|s| s.to_string()).collect();
    header.extend(columns.header());
    header.push("meff".into());
    let mut meff_iter = meff.values.iter();
    let mut rows = Vec::with_capacity(draws.len());
    for (k, chain) in draws.chains.iter().enumerate() {
        for (s, d) in chain.iter().enumerate() {
            let mut row = vec![
                k.to_string(),
                s.to_string(),
                u8::from(draws.divergent[k][s]).to_string(),
                draws.tree_depth[k][s].to_string(),
                draws.accept_stat[k][s].to_string(),
            ];
            row.extend(columns.values(d).iter().map(f64::to_string));
            row.push(meff_iter.next().map_or(String::new(), f64::to_string));
            rows.push(row);
        }
    }
    out.csv("draws.csv", &header, rows)?;

    let all: Vec<Vec<f64>> = draws.iter().map(|d| columns.values(d)).collect();
    let parameters = columns
        .header()
        .into_iter()
        .enumerate()
        .map(|(i, name)| summarize(name, all.iter().map(|v| v[i]).collect()))
        .collect();
    let beta_mean = draws.beta_mean();
    let beta0_mean = draws.iter().map(|d| d.beta0.unwrap_or(0.0)).sum::<f64>() / draws.len() as f64;
    let (raw_beta, raw_b0) = match &standardizer {
        Some(s) => s.raw_coefficients(&beta_mean, beta0_mean),
        None => (beta_mean, beta0_mean),
    };
    let raw_scale = RawScale {
        intercept: raw_b0,
        coefficients: table
            .names
            .iter()
            .zip(raw_beta)
            .map(|(n, v)| Coefficient { name: n.clone(), value: v })
            .collect(),
    };
    let predictive = test.as_ref().map(|t| predictive_metrics(draws, t)).transpose().map_err(runtime)?;
    let summary = Summary {
        n: data.n(),
        predictors: table.names.clone(),
        standardization: standardizer,
        prior,
        tau0,
        parameters,
        raw_scale,
        meff: summarize_meff(&meff, &[0.05, 0.25, 0.5, 0.75, 0.95], None).map_err(runtime)?,
        predictive,
    };
    out.json("summary.json", run, &summary)?;
    out.json("diagnostics.json", run, &diagnostics_file(&fitted.diagnostics, &table.names, &fitted.output))?;

    println!(
        "{} draws, divergence fraction {:.4}, max R-hat {:.3}",
        draws.len(),
        fitted.diagnostics.divergence_fraction,
        fitted.diagnostics.max_rhat()
    );
    Ok(())
}

fn diagnostics_file(d: &Diagnostics, names: &[String], output: &horseshoe::sampler::SamplerOutput) -> DiagnosticsFile {
    let parameters = d
        .names
        .iter()
        .enumerate()
        .map(|(i, n)| ParameterDiagnostics {
            name: if i < names.len() { format!("beta[{}]", names[i]) } else { n.clone() },
            rhat: d.rhat[i],
            ess_bulk: d.ess_bulk[i],
        })
        .collect();
    DiagnosticsFile {
        parameters,
        max_rhat: d.max_rhat(),
        divergence_fraction: d.divergence_fraction,
        divergent_transitions: output.chains.iter().flat_map(|c| &c.divergent).filter(|&&x| x).count(),
        warmup_divergences: output.chains.iter().map(|c| c.warmup_divergences).collect(),
        step_sizes: output.chains.iter().map(|c| c.step_size).collect(),
    }
}
