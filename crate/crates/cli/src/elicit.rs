//! `elicit`: prior distribution of the effective number of nonzero coefficients.

use horseshoe::elicitation::{sample_meff_prior, solve_tau_for_meff, summarize_meff, MeffSummary, TauPrior};
use horseshoe::shrinkage::{tau_reference, ShrinkageContext};
use serde::Serialize;

use crate::config::{ElicitConfig, RunConfig};
use crate::error::{runtime, usage, CliResult};
use crate::io::{strings, Output};

const QUANTILES: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

#[derive(Serialize)]
struct Summary {
    tau0: Option<f64>,
    tau_prior: TauPrior,
    meff: MeffSummary,
}

pub fn run(config: &ElicitConfig, run: &RunConfig) -> CliResult<()> {
    let ctx = ShrinkageContext::new(config.n, config.dim, config.sigma).map_err(usage)?;
    let (tau_prior, tau0) = config.tau.resolve(|p0| {
        if config.local_dof == 1.0 { tau_reference(p0, &ctx) } else { solve_tau_for_meff(p0, config.local_dof, &ctx) }
            .map_err(usage)
    })?;
    if let Some(t) = tau0 {
        println!("tau0 = {t:.6e}");
    }

    let out = Output::create(run, &["meff_draws.csv", "meff_summary.json"])?;
    let draws = sample_meff_prior(&tau_prior, config.local_dof, &ctx, config.draws, config.seed).map_err(runtime)?;
    let meff = summarize_meff(&draws, &QUANTILES, None).map_err(runtime)?;
    out.csv(
        "meff_draws.csv",
        &strings(&["draw", "meff"]),
        draws.values.iter().enumerate().map(|(i, v)| vec![i.to_string(), v.to_string()]),
    )?;
    println!("m_eff prior mean {:.4}, sd {:.4}", meff.mean, meff.sd);
    out.json("meff_summary.json", run, &Summary { tau0, tau_prior, meff })
}
