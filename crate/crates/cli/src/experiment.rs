//! `experiment`: seeded synthetic benchmarks.

use horseshoe::elicitation::TauPrior;
use horseshoe::experiments::{
    generate_correlated_classification, job_seed, run_separable, run_toy, run_toy_scaling, ToyConfig,
};
use horseshoe::model::{fit, predictive_metrics, Dataset, GlmModel, PredictiveMetrics, PriorSpec};
use horseshoe::shrinkage::{pseudo_variance, tau_reference, GlmFamily};
use serde::Serialize;

use crate::config::{CorrelatedRun, ExperimentConfig, ExperimentSpec, RunConfig};
use crate::error::{runtime, CliResult};
use crate::io::{strings, Output};

pub fn run(config: &ExperimentConfig, run: &RunConfig) -> CliResult<()> {
    match &config.experiment {
        ExperimentSpec::Toy(c) => toy(c, config.seed, run),
        ExperimentSpec::ToyScaling { sampler } => {
            let out = Output::create(run, &["toy_scaling.csv", "toy_scaling.json"])?;
            let report = run_toy_scaling(config.seed, sampler).map_err(runtime)?;
            out.csv(
                "toy_scaling.csv",
                &strings(&["data_scale", "sigma_scaled", "meff_mean", "sigma_mean"]),
                report.rows.iter().map(|r| {
                    vec![
                        r.data_scale.to_string(),
                        r.sigma_scaled.to_string(),
                        r.meff_mean.to_string(),
                        r.sigma_mean.to_string(),
                    ]
                }),
            )?;
            println!(
                "scaled tau: relative m_eff change {:.4}; fixed tau: m_eff ratio {:.3}",
                report.scaled_relative_change, report.unscaled_ratio
            );
            out.json("toy_scaling.json", run, &report)
        }
        ExperimentSpec::Separable(c) => {
            let out = Output::create(run, &["separable.csv", "separable_quantiles.csv", "separable.json"])?;
            let report = run_separable(c, config.seed).map_err(runtime)?;
            out.csv(
                "separable.csv",
                &strings(&[
                    "variant",
                    "tau_scale",
                    "abs_beta2_q99",
                    "median_irrelevant_width",
                    "divergence_fraction",
                    "prob_beta2_positive",
                    "max_rhat",
                ]),
                report.variants.iter().map(|v| {
                    vec![
                        v.name.clone(),
                        v.tau_scale.to_string(),
                        v.abs_beta2_q99.to_string(),
                        v.median_irrelevant_width.to_string(),
                        v.divergence_fraction.to_string(),
                        v.prob_beta2_positive.to_string(),
                        v.max_rhat.to_string(),
                    ]
                }),
            )?;
            out.csv(
                "separable_quantiles.csv",
                &strings(&["variant", "level", "beta1", "beta2"]),
                report.variants.iter().flat_map(|v| {
                    v.beta12_quantiles
                        .iter()
                        .map(|(q, b1, b2)| vec![v.name.clone(), q.to_string(), b1.to_string(), b2.to_string()])
                }),
            )?;
            for v in &report.variants {
                println!(
                    "{:<14} q99|beta2| {:>8.3}  divergences {:.4}  median width {:.4}",
                    v.name, v.abs_beta2_q99, v.divergence_fraction, v.median_irrelevant_width
                );
            }
            out.json("separable.json", run, &report)
        }
        ExperimentSpec::Correlated(c) => correlated(c, config.seed, run),
    }
}

fn toy(config: &ToyConfig, seed: u64, run: &RunConfig) -> CliResult<()> {
    let out = Output::create(run, &["toy_mse.csv", "toy_cells.csv", "toy_report.json"])?;
    let report = run_toy(config, seed).map_err(runtime)?;
    let priors: Vec<&str> = config.prior_variants.iter().map(|p| p.name.as_str()).collect();
    let mut header = vec!["signal".to_string()];
    header.extend(priors.iter().map(|p| p.to_string()));
    let table: Vec<Vec<String>> = config
        .signals
        .iter()
        .map(|&a| {
            let mut row = vec![a.to_string()];
            row.extend(priors.iter().map(|p| report.row(a, p).map_or(String::new(), |r| r.mse_mean.to_string())));
            row
        })
        .collect();
    for row in &table {
        println!("{}", row.join("\t"));
    }
    out.csv("toy_mse.csv", &header, table)?;
    out.csv(
        "toy_cells.csv",
        &strings(&["signal", "prior", "mse_mean", "mse_se", "divergence_fraction"]),
        report.rows.iter().map(|r| {
            vec![
                r.signal.to_string(),
                r.prior.clone(),
                r.mse_mean.to_string(),
                r.mse_se.to_string(),
                r.divergence_fraction.to_string(),
            ]
        }),
    )?;
    out.json("toy_report.json", run, &report)
}

#[derive(Serialize)]
struct CorrelatedReport {
    tau0: f64,
    true_beta: Vec<f64>,
    beta_mean: Vec<f64>,
    mean_within_block_correlation: f64,
    mean_between_block_correlation: f64,
    divergence_fraction: f64,
    max_rhat: f64,
    predictive: Option<PredictiveMetrics>,
}

fn dataset_rows(data: &Dataset) -> Vec<Vec<String>> {
    let x = data.design.to_dense();
    (0..data.n())
        .map(|i| {
            let mut row: Vec<String> = x.row(i).iter().map(f64::to_string).collect();
            row.push(data.y[i].to_string());
            row
        })
        .collect()
}

/// Mean sample correlation over feature pairs within the same block and
/// between neighbouring blocks.
fn block_correlations(data: &Dataset, block: usize) -> (f64, f64) {
    let x = data.design.to_dense();
    let n = x.nrows() as f64;
    let dim = x.ncols();
    let cols: Vec<Vec<f64>> = (0..dim)
        .map(|j| {
            let c = x.column(j);
            let m = c.sum() / n;
            let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
            c.iter().map(|v| (v - m) / sd).collect()
        })
        .collect();
    let corr = |a: usize, b: usize| cols[a].iter().zip(&cols[b]).map(|(u, v)| u * v).sum::<f64>() / n;
    let (mut within, mut nw, mut between, mut nb) = (0.0, 0, 0.0, 0);
    for a in 0..dim {
        for b in a + 1..dim.min(a + 2 * block) {
            if a / block == b / block {
                within += corr(a, b);
                nw += 1;
            } else {
                between += corr(a, b);
                nb += 1;
            }
        }
    }
    (within / nw.max(1) as f64, between / nb.max(1) as f64)
}

fn correlated(config: &CorrelatedRun, seed: u64, run: &RunConfig) -> CliResult<()> {
    let out = Output::create(
        run,
        &["correlated_train.csv", "correlated_test.csv", "correlated_beta.csv", "correlated.json"],
    )?;
    let generated = generate_correlated_classification(&config.data, job_seed(seed, &[0])).map_err(runtime)?;
    let mut header: Vec<String> = (0..config.data.dim).map(|j| format!("x{}", j + 1)).collect();
    header.push("y".into());
    out.csv("correlated_train.csv", &header, dataset_rows(&generated.train))?;
    if let Some(test) = &generated.test {
        out.csv("correlated_test.csv", &header, dataset_rows(test))?;
    }
    out.csv(
        "correlated_beta.csv",
        &strings(&["j", "beta"]),
        generated.beta.iter().enumerate().map(|(j, b)| vec![(j + 1).to_string(), b.to_string()]),
    )?;

    let train = &generated.train;
    let ybar = train.y.iter().sum::<f64>() / train.n() as f64;
    let pseudo_sd = pseudo_variance(&GlmFamily::BinomialLogit, ybar, 1.0).map_err(runtime)?.sqrt();
    let ctx = train.shrinkage_context(pseudo_sd).map_err(runtime)?;
    let tau0 = tau_reference(config.p0, &ctx).map_err(runtime)?;
    let prior = PriorSpec::new(TauPrior::HalfCauchy { scale: tau0 }, 1.0, config.slab, GlmFamily::BinomialLogit);
    let model = GlmModel::new(train.clone(), prior).map_err(runtime)?;
    let sampler = horseshoe::sampler::SamplerConfig { seed: job_seed(seed, &[1]), ..config.sampler.clone() };
    let fitted = fit(&model, &sampler).map_err(runtime)?;
    let predictive =
        generated.test.as_ref().map(|t| predictive_metrics(&fitted.draws, t)).transpose().map_err(runtime)?;
    let (within, between) = block_correlations(train, config.data.block_size);
    let report = CorrelatedReport {
        tau0,
        true_beta: generated.beta.clone(),
        beta_mean: fitted.draws.beta_mean(),
        mean_within_block_correlation: within,
        mean_between_block_correlation: between,
        divergence_fraction: fitted.diagnostics.divergence_fraction,
        max_rhat: fitted.diagnostics.max_rhat(),
        predictive,
    };
    if let Some(p) = &report.predictive {
        println!("test MLPD {:.4}, accuracy {:.3}", p.mlpd, p.accuracy.unwrap_or(f64::NAN));
    }
    out.json("correlated.json", run, &report)
}
