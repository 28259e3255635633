//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any fails.

// `!(x <= tol)` is deliberate: a NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use hermite_quad::gauss_hermite::{apply_product_rule, apply_rule, gaussian_moment, gh_rule, product_rule};
use hermite_quad::hermite::{hermite_eval, triple_product_integral};
use hermite_quad::hermite_space::{WeightSequence, WeightedSpace};
use hermite_quad::lower_bounds::{all_ones_bound, best_lower_bound, lower_bound};
use hermite_quad::rule_builder::{build_plan, rate_estimate, AConstant, SchedulePlan, Scheme};
use hermite_quad::testfns::{exp_sum_eval, exp_sum_norm_partial, exp_sum_norm_squared};
use hermite_quad::wce::{general_wce, one_dim_gh_wce, one_dim_upper_bound, product_gh_wce};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn power(alpha: f64, gamma: f64) -> WeightSequence {
    WeightSequence::Power { alpha, gamma }
}

fn quadrature_correctness() -> Outcome {
    let mut checks = 0;
    for n in 1..=25 {
        let rule = gh_rule(n).map_err(|e| e.to_string())?;
        let sum: f64 = rule.weights.iter().sum();
        ensure!((sum - 1.0).abs() <= 1e-12, "n = {n}: weights sum to {sum}");
        for i in 0..n {
            let gap = (rule.nodes[i] + rule.nodes[n - 1 - i]).abs();
            ensure!(gap <= 1e-14, "n = {n}: node {i} asymmetric by {gap:e}");
        }
        for d in 0..2 * n as u32 {
            let q = apply_rule(&rule, |x| x.powi(d as i32));
            let m = gaussian_moment(d);
            ensure!(
                (q - m).abs() <= 1e-10 * m.max(1.0),
                "n = {n}, degree {d}: {q} vs {m}"
            );
            checks += 1;
        }
    }
    Ok(format!("{checks} moments exact, weights and symmetry within tolerance"))
}

fn closed_form_error() -> Outcome {
    // err(H_k) = -H_k(0) for the one-point rule, and H_{2l}(0)^2 = binom(2l, l) / 4^l
    let omega = 0.5f64;
    let mut term = 1.0;
    let mut brute = 0.0;
    for l in 1..=100 {
        term *= (2 * l - 1) as f64 / (2 * l) as f64;
        brute += omega.powi(2 * l) * term;
    }
    let closed = 2.0 / 3f64.sqrt() - 1.0;
    ensure!((brute - closed).abs() <= 1e-15, "series oracle {brute} vs {closed}");
    let r = one_dim_gh_wce(1.0, 1.0, omega, 1, 1e-16).map_err(|e| e.to_string())?;
    ensure!(
        (r.e_squared - closed).abs() <= 1e-12,
        "e^2 = {} vs 2/sqrt(3) - 1 = {closed}",
        r.e_squared
    );
    Ok(format!("e^2 = {:.15}, oracle {closed:.15}", r.e_squared))
}

fn prop_sandwich() -> Outcome {
    let mut cases = 0;
    for &a in &[1.0, 2.0] {
        for &b in &[1.0, 2.0] {
            for &omega in &[0.3, 0.5, 0.8] {
                for n in 1..=12 {
                    let bound = one_dim_upper_bound(a, b, omega, n);
                    let tol = (bound * 1e-6).max(f64::MIN_POSITIVE);
                    let r = one_dim_gh_wce(a, b, omega, n, tol).map_err(|e| e.to_string())?;
                    ensure!(
                        r.e_squared <= bound,
                        "a={a}, b={b}, omega={omega}, n={n}: e^2 = {:e} > {bound:e}",
                        r.e_squared
                    );
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} cases, 0 violations"))
}

fn dual_path() -> Outcome {
    let spaces = [
        WeightedSpace::new(3, 0.5, power(1.0, 0.0), power(1.0, 0.0)),
        WeightedSpace::explicit(0.3, vec![1.0, 2.0, 3.0], vec![1.0, 1.0, 2.0]),
        WeightedSpace::explicit(0.8, vec![1.0, 1.0, 1.5], vec![1.0, 2.0, 2.0]),
    ];
    let tol = 1e-10;
    let mut cases = 0;
    let mut worst = 0.0f64;
    for full in spaces {
        let full = full.map_err(|e| e.to_string())?;
        for s in 1..=3 {
            let space = full.with_dimension(s).map_err(|e| e.to_string())?;
            let total = 4usize.pow(s as u32);
            for code in 0..total {
                let m: Vec<usize> = (0..s).map(|j| code / 4usize.pow(j as u32) % 4 + 1).collect();
                let rule = product_rule(&m).map_err(|e| e.to_string())?;
                let (nodes, weights) = rule.grid();
                let g = general_wce(&space, &nodes, &weights, tol).map_err(|e| e.to_string())?;
                let p = product_gh_wce(&space, &m, tol).map_err(|e| e.to_string())?;
                let diff = (g.e_squared - p.e_squared).abs();
                worst = worst.max(diff);
                ensure!(
                    diff <= 2.0 * (2.0 * tol),
                    "omega={}, m={m:?}: Gram {:e} vs product {:e}",
                    space.omega(),
                    g.e_squared,
                    p.e_squared
                );
                cases += 1;
            }
        }
    }
    ensure!(cases >= 100, "only {cases} cases");
    Ok(format!("{cases} cases, max |difference| {worst:.2e}"))
}

/// Spaces, schemes and constants of the certification grid.
fn certification_grid() -> Result<Vec<(WeightedSpace, Scheme, Option<AConstant>)>, String> {
    let mut out = Vec::new();
    for s in 1..=3 {
        let unit = WeightedSpace::new(s, 0.5, power(1.0, 0.0), power(1.0, 0.0)).map_err(|e| e.to_string())?;
        let quad = WeightedSpace::new(s, 0.5, power(1.0, 2.0), power(1.0, 0.0)).map_err(|e| e.to_string())?;
        let linear = WeightedSpace::new(s, 0.8, power(1.0, 1.0), power(1.0, 0.0)).map_err(|e| e.to_string())?;
        let mixed = WeightedSpace::new(s, 0.5, power(1.0, 0.0), power(1.0, 1.0)).map_err(|e| e.to_string())?;
        let prefix = |sp: &WeightedSpace| -> f64 { (1..=s).map(|j| 1.0 / sp.growth_at(j).unwrap()).sum() };
        for scheme in [Scheme::Uexp, Scheme::Ecspt] {
            out.push((unit.clone(), scheme, None));
            out.push((quad.clone(), scheme, None));
            out.push((linear.clone(), scheme, None));
            out.push((mixed.clone(), scheme, None));
        }
        out.push((unit.clone(), Scheme::Ecwt, Some(AConstant::Given(prefix(&unit)))));
        out.push((quad.clone(), Scheme::Ecwt, Some(AConstant::FromGrowth { beta: 2.0, eta: 1.0 })));
        out.push((linear.clone(), Scheme::Ecwt, Some(AConstant::Given(prefix(&linear)))));
        out.push((mixed.clone(), Scheme::Ecwt, Some(AConstant::Given(prefix(&mixed)))));
    }
    Ok(out)
}

fn certified_plans() -> Result<Vec<(WeightedSpace, SchedulePlan)>, String> {
    let mut plans = Vec::new();
    for (space, scheme, a_const) in certification_grid()? {
        for &eps in &[0.1, 0.01, 0.001] {
            let plan = build_plan(&space, scheme, eps, a_const).map_err(|e| {
                format!("{scheme} s={} omega={} eps={eps}: {e}", space.s(), space.omega())
            })?;
            plans.push((space.clone(), plan));
        }
    }
    Ok(plans)
}

fn schedules_certify(plans: &[(WeightedSpace, SchedulePlan)]) -> Outcome {
    for (space, plan) in plans {
        let eps = plan.epsilon;
        let r = product_gh_wce(space, &plan.m, eps / 100.0).map_err(|e| e.to_string())?;
        ensure!(
            r.e() <= eps,
            "{} s={} m={:?}: measured e = {:e} > {eps}",
            plan.scheme,
            space.s(),
            plan.m,
            r.e()
        );
        ensure!(plan.guaranteed_e <= eps, "guaranteed_e {} > {eps}", plan.guaranteed_e);
    }
    let space = WeightedSpace::explicit(0.5, vec![1.0], vec![1.0]).map_err(|e| e.to_string())?;
    let plan = build_plan(&space, Scheme::Uexp, 0.1, None).map_err(|e| e.to_string())?;
    ensure!(plan.n_total == 10, "uexp example gives n = {}, expected 10", plan.n_total);
    Ok(format!("{} plans certified; uexp example n = 10", plans.len()))
}

fn rate_recovery() -> Outcome {
    let tol = 1e-60;
    let one = WeightedSpace::explicit(0.5, vec![1.0], vec![1.0]).map_err(|e| e.to_string())?;
    let data1: Vec<(f64, f64)> = (1..=30)
        .map(|n| product_gh_wce(&one, &[n], tol).map(|r| (n as f64, r.e())))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let p1 = rate_estimate(&data1).map_err(|e| e.to_string())?.p_hat;
    ensure!((p1 - 1.0).abs() <= 0.2, "s=1: p_hat = {p1}, expected 1 +- 20%");

    let two = WeightedSpace::explicit(0.5, vec![1.0, 1.0], vec![1.0, 1.0]).map_err(|e| e.to_string())?;
    let data2: Vec<(f64, f64)> = (1..=8)
        .map(|k| product_gh_wce(&two, &[k, k], tol).map(|r| ((k * k) as f64, r.e())))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let p2 = rate_estimate(&data2).map_err(|e| e.to_string())?.p_hat;
    ensure!((p2 - 0.5).abs() <= 0.1, "s=2: p_hat = {p2}, expected 0.5 +- 20%");

    for &(p, q) in &[(1.0f64, 0.5f64), (0.5, 0.5), (0.75, 0.3), (2.0, 0.9)] {
        let data: Vec<(f64, f64)> = (1..=30).map(|n| (n as f64, 3.0 * q.powf((n as f64).powf(p)))).collect();
        let fit = rate_estimate(&data).map_err(|e| e.to_string())?;
        ensure!(
            (fit.p_hat - p).abs() <= 0.02 * p,
            "synthetic p = {p}, q = {q}: p_hat = {}",
            fit.p_hat
        );
    }
    Ok(format!("p_hat = {p1:.4} (s=1), {p2:.4} (s=2); synthetic fits within 2%"))
}

/// Smallest measured error over product rules with at most `n` points.
fn best_product_error(space: &WeightedSpace, n: usize) -> Result<f64, String> {
    let mut best = f64::INFINITY;
    let mut visit = |m: &[usize]| -> Result<(), String> {
        let r = product_gh_wce(space, m, 1e-14).map_err(|e| e.to_string())?;
        best = best.min(r.e());
        Ok(())
    };
    match space.s() {
        1 => {
            for m1 in 1..=n {
                visit(&[m1])?;
            }
        }
        2 => {
            for m1 in 1..=n {
                for m2 in 1..=n / m1 {
                    visit(&[m1, m2])?;
                }
            }
        }
        s => return Err(format!("unsupported dimension {s}")),
    }
    Ok(best)
}

fn lower_upper_sandwich() -> Outcome {
    let spaces = [
        WeightedSpace::explicit(0.5, vec![1.0], vec![1.0]),
        WeightedSpace::explicit(0.9, vec![1.0], vec![1.0]),
        WeightedSpace::explicit(0.7, vec![2.0], vec![2.0]),
        WeightedSpace::explicit(0.5, vec![1.0, 1.0], vec![1.0, 1.0]),
        WeightedSpace::explicit(0.9, vec![1.0, 2.0], vec![1.0, 1.0]),
        WeightedSpace::explicit(0.8, vec![1.0, 1.0], vec![1.0, 2.0]),
    ];
    let mut cases = 0;
    let mut min_gap = f64::INFINITY;
    for space in spaces {
        let space = space.map_err(|e| e.to_string())?;
        for n in 1..=16 {
            let lb = best_lower_bound(&space, n as u64, 20).map_err(|e| e.to_string())?;
            let ub = best_product_error(&space, n)?;
            ensure!(
                lb.bound <= ub + 1e-10,
                "omega={}, a={:?}, b={:?}, n={n}: lower {:e} > measured {:e}",
                space.omega(),
                space.a(),
                space.b(),
                lb.bound,
                ub
            );
            if ub > 0.0 {
                // the measured error underflows for fast-decaying weights
                ensure!(lb.log_bound <= ub.ln(), "log-space sandwich fails at n={n}");
                min_gap = min_gap.min(ub.ln() - lb.log_bound);
            }
            cases += 1;
        }
        let ones = all_ones_bound(&space);
        let exponent: f64 = space.a().iter().zip(space.b()).map(|(&a, &b)| a * b.exp2()).sum();
        let expected = exponent * space.omega().ln() - space.s() as f64 * 64f64.ln();
        ensure!(ones.log_bound == expected, "all-ones {} vs {expected}", ones.log_bound);
        let at_ones = lower_bound(&space, &vec![1; space.s()]).map_err(|e| e.to_string())?;
        ensure!(at_ones.log_bound >= ones.log_bound, "t = 1 bound below the all-ones form");
    }
    Ok(format!("{cases} cases, smallest log gap {min_gap:.3}"))
}

fn exp_sum_end_to_end(plans: &[(WeightedSpace, SchedulePlan)]) -> Outcome {
    let sqrt_e = 0.5f64.exp();
    let mut used = 0;
    for (space, plan) in plans {
        if space.b().iter().any(|&b| b != 1.0) {
            continue;
        }
        let s = space.s();
        let rule = product_rule(&plan.m).map_err(|e| e.to_string())?;
        let value = apply_product_rule(&rule, |x| exp_sum_eval(s, x).unwrap());
        let norm = exp_sum_norm_squared(space).map_err(|e| e.to_string())?.sqrt();
        let ln_norm: f64 = 0.5 * (1.0 + space.a().iter().map(|a| space.omega().powf(-a)).sum::<f64>() / s as f64);
        ensure!((norm.ln() - ln_norm).abs() <= 1e-12 * ln_norm, "norm mismatch");
        let err = (value - sqrt_e).abs();
        let allowed = plan.measured_e * ln_norm.exp();
        ensure!(
            err <= allowed,
            "{} s={s} m={:?}: |A(f) - sqrt(e)| = {err:e} > {allowed:e}",
            plan.scheme,
            plan.m
        );
        used += 1;
    }
    for s in 1..=3 {
        for &omega in &[0.3, 0.5, 0.7] {
            let space = WeightedSpace::new(s, omega, power(1.0, 1.0), power(1.0, 0.0)).map_err(|e| e.to_string())?;
            let closed = exp_sum_norm_squared(&space).map_err(|e| e.to_string())?;
            let partial = exp_sum_norm_partial(&space, 80);
            ensure!(
                (partial - closed).abs() <= 1e-8 * closed,
                "s={s}, omega={omega}: truncated {partial} vs closed {closed}"
            );
        }
    }
    Ok(format!("{used} plans with b = 1 within e * ||f||; norms converge"))
}

fn triple_products() -> Outcome {
    let rule = gh_rule(13).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for k in 0..=8 {
        for l in 0..=8 {
            for m in 0..=8 {
                let q = apply_rule(&rule, |x| hermite_eval(k, x) * hermite_eval(l, x) * hermite_eval(m, x));
                let v = triple_product_integral(k, l, m);
                worst = worst.max((q - v).abs());
                ensure!((q - v).abs() <= 1e-9, "({k},{l},{m}): {v} vs quadrature {q}");
            }
        }
    }
    for t in 1..=8usize {
        let cap = 4f64.powi(t as i32);
        for k in 0..=t {
            for l in 0..=t {
                for m in 0..=2 * t {
                    let v = triple_product_integral(k, l, m);
                    ensure!(v <= cap, "({k},{l},{m}) = {v} exceeds 4^{t}");
                }
            }
        }
    }
    Ok(format!("729 triples, max deviation {worst:.2e}; 4^t cap holds"))
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match outcome {
        Ok(detail) => {
            println!("PASS  {name}: {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL  {name}: {detail}");
            false
        }
    }
}

fn main() -> ExitCode {
    let plans = certified_plans();
    let results = [
        run("1 quadrature correctness", quadrature_correctness),
        run("2 closed-form error oracle", closed_form_error),
        run("3 one-dimensional error bound", prop_sandwich),
        run("4 Gram form vs product identity", dual_path),
        run("5 schedules certify", || schedules_certify(plans.as_ref().map_err(Clone::clone)?)),
        run("6 rate recovery", rate_recovery),
        run("7 lower/upper sandwich", lower_upper_sandwich),
        run("8 exponential test function end to end", || {
            exp_sum_end_to_end(plans.as_ref().map_err(Clone::clone)?)
        }),
        run("9 triple products", triple_products),
    ];
    let failed = results.iter().filter(|&&ok| !ok).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
