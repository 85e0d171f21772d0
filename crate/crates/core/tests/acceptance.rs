//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use leafdeg::equilibrium::{
    class_marginals, closed_form_mmmm, degree_marginal, equilibrium, l1_distance,
    null_space_equilibrium,
};
use leafdeg::fitting::{
    fit, fitted_marginal, limewire_ratio, lnl_init_from_gbn, DegreeHistogram, FitOptions,
};
use leafdeg::report::{estimate_csv, fit_report};
use leafdeg::ssa::{simulate, SimConfig};
use leafdeg::{
    build_generator, enumerate_states, CapacityConfig, ModelKind, QueueModel, RateParams,
};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn kind(model: QueueModel) -> ModelKind {
    ModelKind::with_defaults(model)
}

fn synthetic_gbn() -> RateParams {
    RateParams::Gbn {
        lambda_g: 11.0926,
        lambda_b: 5.6722,
        lambda_n: 3.5248,
        mu_g: 0.1824,
        mu_b: 0.1828,
        mu_n: 0.2980,
        theta: 0.0714,
    }
}

fn ac1_cardinalities() -> Outcome {
    let t = Instant::now();
    let gbn = enumerate_states(kind(QueueModel::Gbn)).len();
    let lnl = enumerate_states(kind(QueueModel::Lnl)).len();
    let el = t.elapsed();
    check(
        gbn == 4000 && lnl == 370 && el < Duration::from_secs(1),
        format!("|GBN|={gbn} |LNL|={lnl} in {el:.2?}"),
    )
}

fn ac2_conservation() -> Outcome {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    let mut worst = 0.0f64;
    for model in QueueModel::ALL {
        let space = enumerate_states(kind(model));
        let width = RateParams::keys(model).len();
        for _ in 0..100 {
            let v: Vec<f64> = (0..width)
                .map(|_| 10f64.powf(rng.random_range(-2.0..2.0)))
                .collect();
            let rates = RateParams::from_values(model, &v).unwrap();
            let g = build_generator(&space, &rates).map_err(|e| e.to_string())?;
            for s in g.column_sums() {
                worst = worst.max(s.abs());
            }
        }
    }
    check(
        worst <= 1e-12,
        format!("max |column sum| = {worst:e} over 400 generators"),
    )
}

fn ac3_closed_form() -> Outcome {
    let space = enumerate_states(kind(QueueModel::Simple));
    let mut worst = 0.0f64;
    for rho in [0.1, 1.0, 48.7979] {
        let rates = RateParams::Simple {
            lambda: rho,
            mu: 1.0,
        };
        let g = build_generator(&space, &rates).unwrap();
        let null = null_space_equilibrium(&g).map_err(|e| e.to_string())?;
        let closed = closed_form_mmmm(rho, 1.0, 30).unwrap();
        worst = worst.max(l1_distance(&degree_marginal(&null, &space).unwrap(), &closed).unwrap());
    }
    check(
        worst <= 1e-10,
        format!("max L1(closed form, null space) = {worst:e}"),
    )
}

fn ac4_anchors() -> Outcome {
    let lambda: f64 = 48.7979 * 0.21;
    let ratio = limewire_ratio(&RateParams::FITTED_GBN).unwrap();
    let RateParams::Lnl { lambda_b, .. } = lnl_init_from_gbn(&RateParams::FITTED_GBN).unwrap()
    else {
        return Err("mapping returned a non-LNL shape".into());
    };
    check(
        (lambda - 10.2476).abs() <= 1e-3
            && (ratio - 0.2103).abs() <= 1e-3
            && lambda_b == 11.0926 + 5.6722,
        format!("48.7979*0.21={lambda:.6} ratio={ratio:.6} lambda_b={lambda_b}"),
    )
}

fn ac5_means() -> Outcome {
    let t = Instant::now();
    let space = enumerate_states(kind(QueueModel::Gbn));
    let q = equilibrium(&space, &RateParams::FITTED_GBN).map_err(|e| e.to_string())?;
    let report = class_marginals(&q, &space).unwrap();
    let el = t.elapsed();
    let means: Vec<f64> = report.classes.iter().map(|c| c.mean).collect();
    let ok = means
        .iter()
        .zip([23.03, 1.26, 2.66])
        .all(|(m, want)| (m - want).abs() <= 0.5);
    check(
        ok && el < Duration::from_secs(5),
        format!("class means {means:.4?} in {el:.2?}"),
    )
}

fn ac6_oracle() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (model, rates) in [
        (QueueModel::FiniteLife, RateParams::FITTED_FINITE_LIFE),
        (QueueModel::Gbn, RateParams::FITTED_GBN),
    ] {
        let k = kind(model);
        let t = Instant::now();
        let est = simulate(k, &rates, &SimConfig::new(100_000, 2007)).map_err(|e| e.to_string())?;
        let el = t.elapsed();
        let analytic = fitted_marginal(&enumerate_states(k), &rates).unwrap();
        let d = l1_distance(&est.dist, &analytic).unwrap();
        ok &= d <= 0.02 && el < Duration::from_secs(120);
        lines.push(format!("{model}: L1={d:.5} ({el:.2?})"));
    }
    check(ok, lines.join("; "))
}

fn ac7_recovery() -> Outcome {
    let t = Instant::now();
    let gbn = kind(QueueModel::Gbn);
    let target = fitted_marginal(&enumerate_states(gbn), &synthetic_gbn()).unwrap();
    let empirical = DegreeHistogram::from(target);
    let opts = FitOptions {
        restarts: 5,
        seed: 7,
        ..FitOptions::default()
    };
    let init = synthetic_gbn().scaled(1.5);
    let own = fit(gbn, &empirical, &init, &opts).map_err(|e| e.to_string())?;
    let fl = fit(
        kind(QueueModel::FiniteLife),
        &empirical,
        &RateParams::FITTED_FINITE_LIFE,
        &opts,
    )
    .map_err(|e| e.to_string())?;
    let el = t.elapsed();
    check(
        own.objective < 1e-3 && fl.objective > own.objective && el < Duration::from_secs(600),
        format!(
            "GBN self-fit delta={:.3e}, finite-life delta={:.4} ({el:.1?})",
            own.objective, fl.objective
        ),
    )
}

fn ac8_cross_model() -> Outcome {
    let gbn = fitted_marginal(
        &enumerate_states(kind(QueueModel::Gbn)),
        &RateParams::FITTED_GBN,
    )
    .unwrap();
    let init = lnl_init_from_gbn(&RateParams::FITTED_GBN).unwrap();
    let lnl = fitted_marginal(&enumerate_states(kind(QueueModel::Lnl)), &init).unwrap();
    let d = l1_distance(&gbn, &lnl).unwrap();
    check(d <= 0.07, format!("L1(GBN, LNL at mapped init) = {d:.3e}"))
}

fn ac9_determinism() -> Outcome {
    let lnl = kind(QueueModel::Lnl);
    let target = fitted_marginal(
        &enumerate_states(kind(QueueModel::Gbn)),
        &RateParams::FITTED_GBN,
    )
    .unwrap();
    let empirical = DegreeHistogram::from(target);
    let init = lnl_init_from_gbn(&RateParams::FITTED_GBN).unwrap();
    let opts = FitOptions {
        restarts: 3,
        max_iterations: 300,
        seed: 99,
        ..FitOptions::default()
    };
    let run_fit = || fit(lnl, &empirical, &init, &opts).map(|r| fit_report(&r));
    let a = run_fit().map_err(|e| e.to_string())?;
    let b = run_fit().map_err(|e| e.to_string())?;

    let cfg = SimConfig::new(5_000, 11);
    let gbn = kind(QueueModel::Gbn);
    let sim = || simulate(gbn, &RateParams::FITTED_GBN, &cfg).map(|e| estimate_csv(&e));
    let c = sim().map_err(|e| e.to_string())?;
    let d = sim().map_err(|e| e.to_string())?;
    check(
        a == b && c == d,
        format!(
            "fit report {} bytes, estimate {} bytes, identical={}",
            a.len(),
            c.len(),
            a == b && c == d
        ),
    )
}

fn main() -> ExitCode {
    // Keep the default capacities visible in the log.
    let caps = CapacityConfig::DEFAULT;
    println!(
        "acceptance: c_m={} c_g={} c_n={}",
        caps.c_m(),
        caps.c_g(),
        caps.c_n()
    );
    let criteria: [Criterion; 9] = [
        ("AC1 state-space cardinalities", ac1_cardinalities),
        ("AC2 generator conservation", ac2_conservation),
        ("AC3 closed-form equivalence", ac3_closed_form),
        ("AC4 arithmetic anchors", ac4_anchors),
        ("AC5 GBN marginal means", ac5_means),
        ("AC6 simulation oracle agreement", ac6_oracle),
        ("AC7 synthetic fit recovery", ac7_recovery),
        ("AC8 GBN/LNL cross-model closeness", ac8_cross_model),
        ("AC9 determinism", ac9_determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
