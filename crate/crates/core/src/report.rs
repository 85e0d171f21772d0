//! Text formats: CSV tables, key=value rate files and fit reports.
//!
//! Numbers are printed with 10 significant digits and a `.` decimal point;
//! every table has a header row and every line ends in `\n`.

use std::fmt::Write as _;

use crate::equilibrium::{Distribution, MarginalReport};
use crate::error::{Error, Result};
use crate::fitting::FitResult;
use crate::model::{QueueModel, StateSpace};
use crate::ssa::SimEstimate;
use crate::RateParams;

/// Format with 10 significant digits, trailing zeros trimmed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim_fraction(format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.9e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        format!("{}e{e}", trim_fraction(mantissa.to_string()))
    }
}

fn trim_fraction(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// `degree,probability` table.
pub fn degree_csv(dist: &Distribution<f64>) -> String {
    let mut out = String::from("degree,probability\n");
    for (d, &p) in dist.probs().iter().enumerate() {
        let _ = writeln!(out, "{d},{}", fmt_num(p));
    }
    out
}

fn component_header(space: &StateSpace) -> String {
    space
        .kind()
        .model
        .classes()
        .iter()
        .map(|c| format!("k_{}", c.name()))
        .collect::<Vec<_>>()
        .join(",")
}

fn components(space: &StateSpace, i: usize) -> String {
    space
        .state(i)
        .components(space.arity())
        .iter()
        .map(|k| k.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// `index,k_...` listing of a state space.
pub fn states_csv(space: &StateSpace) -> String {
    let mut out = format!("index,{}\n", component_header(space));
    for i in 0..space.len() {
        let _ = writeln!(out, "{i},{}", components(space, i));
    }
    out
}

/// State-resolved distribution: `index,k_...,probability`.
pub fn state_distribution_csv(space: &StateSpace, dist: &Distribution<f64>) -> String {
    let mut out = format!("index,{},probability\n", component_header(space));
    for (i, &p) in dist.probs().iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", components(space, i), fmt_num(p));
    }
    out
}

/// Per-class marginals side by side: `count,<class>...`.
pub fn class_marginals_csv(report: &MarginalReport<f64>) -> String {
    let names: Vec<&str> = report.classes.iter().map(|c| c.class.name()).collect();
    let mut out = format!("count,{}\n", names.join(","));
    for k in 0..report.total.len() {
        let row: Vec<String> = report
            .classes
            .iter()
            .map(|c| fmt_num(c.dist.probs()[k]))
            .collect();
        let _ = writeln!(out, "{k},{}", row.join(","));
    }
    out
}

/// `means good=... bad=... non_limewire=... total=...`
pub fn means_line(report: &MarginalReport<f64>) -> String {
    let mut out = String::from("means");
    for c in &report.classes {
        let _ = write!(out, " {}={}", c.class.name(), fmt_num(c.mean));
    }
    let _ = write!(out, " total={}", fmt_num(report.total_mean));
    out
}

/// `degree,probability,std_error` table.
pub fn estimate_csv(est: &SimEstimate) -> String {
    let mut out = String::from("degree,probability,std_error\n");
    for (d, (&p, &se)) in est.dist.probs().iter().zip(&est.std_errors).enumerate() {
        let _ = writeln!(out, "{d},{},{}", fmt_num(p), fmt_num(se));
    }
    out
}

/// Rates file body: a `model=` line then one `key=value` per rate.
pub fn rates_text(params: &RateParams) -> String {
    let mut out = format!("model={}\n", params.model());
    for (k, v) in RateParams::keys(params.model()).iter().zip(params.values()) {
        let _ = writeln!(out, "{k}={}", fmt_num(v));
    }
    out
}

/// Parse `key=value` lines. Blank lines and `#` comments are skipped.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", n + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Assemble rates for `model` from `key=value` pairs; later pairs override
/// earlier ones. An optional `model` key must agree with `model`.
pub fn rates_from_pairs(model: QueueModel, pairs: &[(String, String)]) -> Result<RateParams> {
    let keys = RateParams::keys(model);
    let mut values: Vec<Option<f64>> = vec![None; keys.len()];
    for (k, v) in pairs {
        if k == "model" {
            let named: QueueModel = v.parse().map_err(Error::Parse)?;
            if named != model {
                return Err(Error::RateShapeMismatch {
                    expected: model,
                    got: named,
                });
            }
            continue;
        }
        let pos = keys
            .iter()
            .position(|key| key == k)
            .ok_or_else(|| Error::Parse(format!("`{k}` is not a rate of the {model} model")))?;
        let x: f64 = v
            .parse()
            .map_err(|_| Error::Parse(format!("`{k}`: `{v}` is not a number")))?;
        values[pos] = Some(x);
    }
    let missing: Vec<&str> = keys
        .iter()
        .zip(&values)
        .filter(|(_, v)| v.is_none())
        .map(|(k, _)| *k)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Parse(format!(
            "missing rates for the {model} model: {}",
            missing.join(", ")
        )));
    }
    let values: Vec<f64> = values.into_iter().map(|v| v.unwrap()).collect();
    let params = RateParams::from_values(model, &values)?;
    params.validate()?;
    Ok(params)
}

pub fn parse_rates(model: QueueModel, text: &str) -> Result<RateParams> {
    rates_from_pairs(model, &parse_key_values(text)?)
}

/// Fit report as `key=value` lines, best parameters first.
pub fn fit_report(result: &FitResult) -> String {
    let mut out = rates_text(&result.params);
    let _ = writeln!(out, "objective={}", fmt_num(result.objective));
    let _ = writeln!(out, "converged={}", result.converged);
    let _ = writeln!(out, "iterations={}", result.iterations);
    let _ = writeln!(out, "restarts={}", result.restarts.len());
    for (i, r) in result.restarts.iter().enumerate() {
        let _ = writeln!(out, "restart.{i}.objective={}", fmt_num(r.objective));
        let _ = writeln!(out, "restart.{i}.iterations={}", r.iterations);
        let _ = writeln!(out, "restart.{i}.evaluations={}", r.evaluations);
        let _ = writeln!(out, "restart.{i}.converged={}", r.converged);
        let start: Vec<String> = r.start.values().into_iter().map(fmt_num).collect();
        let _ = writeln!(out, "restart.{i}.start={}", start.join(","));
    }
    out
}
