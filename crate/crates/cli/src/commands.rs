use std::path::Path;
use std::process::ExitCode;

use leafdeg::equilibrium::{class_marginals, degree_marginal, equilibrium};
use leafdeg::fitting::{self, lnl_init_from_gbn, FitOptions};
use leafdeg::report::{self, fmt_num};
use leafdeg::ssa::{self, SimConfig};
use leafdeg::{enumerate_states, CapacityConfig, ModelKind, QueueModel, RateParams};

use crate::error::{CliError, Result};
use crate::io;
use crate::plot::{self, Series};
use crate::{CapsArgs, RateArgs};

fn model_kind(model: QueueModel, caps: &CapsArgs) -> Result<ModelKind> {
    let single = matches!(model, QueueModel::Simple | QueueModel::FiniteLife);
    let config = match (caps.cm, caps.cg, caps.cn) {
        (None, None, None) => CapacityConfig::DEFAULT,
        (Some(cm), None, None) if single => CapacityConfig::single_class(cm)?,
        (cm, cg, cn) => {
            let d = CapacityConfig::DEFAULT;
            CapacityConfig::new(
                cm.unwrap_or(d.c_m()),
                cg.unwrap_or(d.c_g()),
                cn.unwrap_or(d.c_n()),
            )?
        }
    };
    Ok(ModelKind::new(model, config))
}

fn inline_pairs(args: &RateArgs) -> Result<Vec<(String, String)>> {
    args.rate
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| CliError::Input(format!("--rate expects KEY=VALUE, got `{kv}`")))
        })
        .collect()
}

/// Rates file first, inline flags on top. `None` when nothing was given.
fn rate_pairs(args: &RateArgs) -> Result<Option<Vec<(String, String)>>> {
    let mut pairs = match &args.rates {
        Some(path) => report::parse_key_values(&io::read_to_string(path)?)?,
        None => Vec::new(),
    };
    pairs.extend(inline_pairs(args)?);
    Ok((!pairs.is_empty() || args.rates.is_some()).then_some(pairs))
}

fn require_rates(model: QueueModel, args: &RateArgs) -> Result<RateParams> {
    let pairs = rate_pairs(args)?.ok_or_else(|| {
        CliError::Input(format!(
            "no rates given; pass --rates FILE or -r KEY=VALUE for: {}",
            RateParams::keys(model).join(", ")
        ))
    })?;
    Ok(report::rates_from_pairs(model, &pairs)?)
}

fn published_rates(model: QueueModel) -> RateParams {
    match model {
        QueueModel::Simple => RateParams::Simple {
            lambda: 10.2476,
            mu: 0.21,
        },
        QueueModel::FiniteLife => RateParams::FITTED_FINITE_LIFE,
        QueueModel::Gbn => RateParams::FITTED_GBN,
        QueueModel::Lnl => RateParams::FITTED_LNL,
    }
}

pub fn states(model: QueueModel, caps: &CapsArgs, list: Option<&Path>) -> Result<ExitCode> {
    let space = enumerate_states(model_kind(model, caps)?);
    if let Some(path) = list {
        io::write(path, &report::states_csv(&space))?;
    }
    println!("{}", space.len());
    Ok(ExitCode::SUCCESS)
}

pub fn solve(
    model: QueueModel,
    caps: &CapsArgs,
    rates: &RateArgs,
    out_dir: &Path,
    plot_path: Option<&Path>,
) -> Result<ExitCode> {
    let kind = model_kind(model, caps)?;
    let params = require_rates(model, rates)?;
    let space = enumerate_states(kind);
    let q = equilibrium(&space, &params)?;
    let marginal = degree_marginal(&q, &space)?;
    io::write(
        &io::out_path(out_dir, "equilibrium.csv"),
        &report::state_distribution_csv(&space, &q),
    )?;
    io::write(
        &io::out_path(out_dir, "marginal.csv"),
        &report::degree_csv(&marginal),
    )?;
    println!("states={}", space.len());
    println!("mean_degree={}", fmt_num(marginal.mean_index()));
    if !matches!(model, QueueModel::Simple | QueueModel::FiniteLife) {
        let classes = class_marginals(&q, &space)?;
        io::write(
            &io::out_path(out_dir, "class_marginals.csv"),
            &report::class_marginals_csv(&classes),
        )?;
        println!("{}", report::means_line(&classes));
    }
    if let Some(path) = plot_path {
        plot::write_plot(
            path,
            &[Series {
                name: model.name(),
                values: marginal.probs(),
            }],
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

pub struct FitRequest<'a> {
    pub model: QueueModel,
    pub histogram: &'a Path,
    pub caps: &'a CapsArgs,
    pub rates: &'a RateArgs,
    pub init_from_gbn: Option<&'a Path>,
    pub opts: FitOptions,
    pub out_dir: &'a Path,
    pub plot: Option<&'a Path>,
}

pub fn fit(req: FitRequest) -> Result<ExitCode> {
    let kind = model_kind(req.model, req.caps)?;
    let empirical = io::read_histogram(req.histogram, kind.caps.c_m())?;
    let init = match req.init_from_gbn {
        Some(path) => {
            if req.model != QueueModel::Lnl {
                return Err(CliError::Input(
                    "--init-from-gbn applies to the lnl model only".into(),
                ));
            }
            let gbn = report::parse_rates(QueueModel::Gbn, &io::read_to_string(path)?)?;
            let mapped = lnl_init_from_gbn(&gbn)?;
            let mut pairs: Vec<(String, String)> = RateParams::keys(QueueModel::Lnl)
                .iter()
                .zip(mapped.values())
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect();
            pairs.extend(inline_pairs(req.rates)?);
            report::rates_from_pairs(QueueModel::Lnl, &pairs)?
        }
        None => match rate_pairs(req.rates)? {
            Some(pairs) => report::rates_from_pairs(req.model, &pairs)?,
            None => published_rates(req.model),
        },
    };
    let result = fitting::fit(kind, &empirical, &init, &req.opts)?;
    let text = report::fit_report(&result);
    io::write(&io::out_path(req.out_dir, "fit_report.txt"), &text)?;
    io::write(
        &io::out_path(req.out_dir, "fit_params.txt"),
        &report::rates_text(&result.params),
    )?;
    io::write(
        &io::out_path(req.out_dir, "fitted_marginal.csv"),
        &report::degree_csv(&result.fitted),
    )?;
    if let Some(path) = req.plot {
        plot::write_plot(
            path,
            &[
                Series {
                    name: "empirical",
                    values: empirical.distribution().probs(),
                },
                Series {
                    name: req.model.name(),
                    values: result.fitted.probs(),
                },
            ],
        )?;
    }
    print!("{text}");
    if !result.objective.is_finite() {
        return Err(CliError::Numerical(
            "no candidate rates could be solved".into(),
        ));
    }
    if !result.converged {
        eprintln!("warning: fit did not converge");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

pub struct SimRequest<'a> {
    pub model: QueueModel,
    pub caps: &'a CapsArgs,
    pub rates: &'a RateArgs,
    pub lives: u64,
    pub seed: u64,
    pub max_events: u64,
    pub time: Option<f64>,
    pub output: &'a Path,
    pub plot: Option<&'a Path>,
}

pub fn simulate(req: SimRequest) -> Result<ExitCode> {
    let kind = model_kind(req.model, req.caps)?;
    let params = require_rates(req.model, req.rates)?;
    let est = match req.time {
        Some(t) => ssa::simulate_infinite_life(kind, &params, t, req.seed, req.max_events)?,
        None => {
            if params.theta().is_none() {
                return Err(CliError::Input(
                    "theta missing for finite-life simulation; choose a finite-life model or pass --time".into(),
                ));
            }
            let cfg = SimConfig {
                lifetimes: req.lives,
                seed: req.seed,
                max_events_per_life: req.max_events,
            };
            ssa::simulate(kind, &params, &cfg)?
        }
    };
    io::write(req.output, &report::estimate_csv(&est))?;
    if let Some(path) = req.plot {
        plot::write_plot(
            path,
            &[Series {
                name: "simulated",
                values: est.dist.probs(),
            }],
        )?;
    }
    println!("events={}", est.events);
    println!("total_time={}", fmt_num(est.total_time));
    println!("mean_degree={}", fmt_num(est.dist.mean_index()));
    let means: Vec<String> = req
        .model
        .classes()
        .iter()
        .zip(&est.class_means)
        .map(|(c, m)| format!("{}={}", c.name(), fmt_num(*m)))
        .collect();
    println!("means {}", means.join(" "));
    Ok(ExitCode::SUCCESS)
}

pub fn compare(a: &Path, b: &Path) -> Result<ExitCode> {
    let (p, q) = (io::read_distribution(a)?, io::read_distribution(b)?);
    if !p.keys().eq(q.keys()) {
        return Err(CliError::Input(format!(
            "support mismatch: {} has {} entries, {} has {}",
            a.display(),
            p.len(),
            b.display(),
            q.len()
        )));
    }
    let d: f64 = p.values().zip(q.values()).map(|(x, y)| (x - y).abs()).sum();
    println!("{}", fmt_num(d));
    Ok(ExitCode::SUCCESS)
}
