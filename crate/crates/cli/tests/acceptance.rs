//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the report is always printed; exits nonzero when any criterion fails.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use liespec::geodesics::{energy, integrate_geodesic, integrate_states};
use liespec::harness::{
    check_scaling, diameters_monotone, plateau_flat, sweep_berger, SweepConfig, DIAMETER_TOLERANCE,
    LAMBDA_SCALING_TOLERANCE,
};
use liespec::liealg::{generated_subalgebra_with_steps, is_ideal};
use liespec::spectrum::{irrep_su2, lambda1_quotient};
use liespec::{berger_metric, diameter, lambda1, milnor_metric, su2, DiameterParams, GroupPoint, Metric, Subspace};

type Outcome = Result<String, String>;

fn timed(f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

type Cx = (f64, f64);

fn cmul(a: Cx, b: Cx) -> Cx {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn mat_mul(a: &[[Cx; 2]; 2], b: &[[Cx; 2]; 2]) -> [[Cx; 2]; 2] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let (x, y) = (cmul(a[i][0], b[0][j]), cmul(a[i][1], b[1][j]));
            (x.0 + y.0, x.1 + y.1)
        })
    })
}

/// `-sum X_i^2` on the defining representation, from the 2x2 matrices.
fn defining_casimir() -> [[Cx; 2]; 2] {
    let (o, i, l) = ((0.0, 0.0), (0.0, 1.0), (1.0, 0.0));
    let xs = [[[i, o], [o, (0.0, -1.0)]], [[o, l], [(-1.0, 0.0), o]], [[o, i], [i, o]]];
    let mut out = [[o; 2]; 2];
    for x in &xs {
        let sq = mat_mul(x, x);
        for r in 0..2 {
            for c in 0..2 {
                out[r][c].0 -= sq[r][c].0;
                out[r][c].1 -= sq[r][c].1;
            }
        }
    }
    out
}

/// Smallest positive Laplace eigenvalue of `milnor(b, 1, 1)` from the weight
/// decomposition: the weight-`w` vector of `V_n` has eigenvalue
/// `w^2 / b^2 + n(n+2) - w^2`.
fn weight_oracle(b: f64) -> f64 {
    let mut best = f64::INFINITY;
    for n in 1..=80i64 {
        for k in 0..=n {
            let w = (n - 2 * k) as f64;
            best = best.min(w * w / (b * b) + (n * (n + 2)) as f64 - w * w);
        }
    }
    best
}

fn criterion_1() -> Outcome {
    let cas = defining_casimir();
    let oracle = cas[0][0].0;
    let scalar = (cas[0][1].0.abs() + cas[0][1].1.abs() + cas[1][0].0.abs() + (cas[1][1].0 - oracle).abs()) == 0.0;
    let got = lambda1(&milnor_metric(1.0, 1.0, 1.0).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.lambda1;
    check(scalar && (got - oracle).abs() <= 1e-9, format!("lambda1 = {got:.12}, Casimir oracle = {oracle}"))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let b = 0.1 * 100f64.powf(i as f64 / 19.0);
        let got = lambda1(&milnor_metric(b, 1.0, 1.0).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.lambda1;
        let oracle = weight_oracle(b);
        let closed = (2.0 + 1.0 / (b * b)).min(8.0);
        worst = worst.max((got - oracle).abs()).max((oracle - closed).abs());
    }
    check(worst <= 1e-8, format!("20 values of b in [0.1, 10], max error {worst:.1e}"))
}

fn criterion_3() -> Outcome {
    let q = lambda1_quotient(&Metric::new(DMatrix::identity(2, 2)).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..25 {
        let beta = 0.01 * 10_000f64.powf(i as f64 / 24.0);
        let l = lambda1(&berger_metric(1.0, beta).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?.lambda1;
        worst = worst.max(l);
    }
    check(
        (q - 8.0).abs() <= 1e-9 && worst <= 8.0 + 1e-8,
        format!("quotient gap = {q:.12}, max Berger gap over 25 beta = {worst:.12}"),
    )
}

fn criterion_4() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let d = pool
        .install(|| diameter(&milnor_metric(1.0, 1.0, 1.0).unwrap(), &DiameterParams::default()))
        .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let rel = (d.value - PI).abs() / PI;
    check(
        rel <= 0.02 && secs < 60.0 && d.n_probes == 20000 && d.n_directions >= 2000,
        format!(
            "diameter = {:.6} (rel. error {rel:.1e}), {} directions, {} probes, {secs:.2} s on one thread",
            d.value, d.n_directions, d.n_probes
        ),
    )
}

fn criterion_5() -> Outcome {
    let g = milnor_metric(1.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut detail = String::new();
    for c in [0.25, 8.0] {
        let s = check_scaling(&g, c, &DiameterParams::default()).map_err(|e| e.to_string())?;
        ok &= s.lambda_rel_error <= LAMBDA_SCALING_TOLERANCE && (0.98..=1.02).contains(&s.diameter_ratio);
        detail += &format!("c = {c}: lambda err {:.1e}, diam ratio {:.6}; ", s.lambda_rel_error, s.diameter_ratio);
    }
    check(ok, detail.trim_end_matches("; ").to_string())
}

fn criteria_6_and_7() -> (Outcome, Outcome) {
    let config = SweepConfig { plateau: true, ..Default::default() };
    let report = match sweep_berger(&config) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), Err(e.to_string())),
    };
    let floor = PI * PI / 4.0 * (1.0 - 0.02);
    let li_ok = report.records.iter().all(|r| r.product >= floor);
    let c6 = check(
        li_ok && report.records.len() == 25,
        format!("{} records, min lambda1*diam^2 = {:.4} >= {floor:.4}", report.records.len(), report.inf_product),
    );

    // fibre scale b = sqrt(beta) increases along the sweep and on into the plateau
    let mut diams: Vec<f64> = report.records.iter().map(|r| r.diameter).collect();
    let plateau: Vec<f64> = report.plateau.iter().map(|p| p.diameter).collect();
    diams.extend(&plateau);
    let lo = plateau.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = plateau.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let c7 = check(
        diameters_monotone(&diams) && plateau_flat(&plateau) && plateau.len() == 3,
        format!(
            "monotone within {:.0}% over {} fibre scales; plateau b = 10, 30, 100: {:?} (spread {:.2}%), sup lambda1*diam^2 = {:.4}",
            200.0 * DIAMETER_TOLERANCE,
            diams.len(),
            plateau.iter().map(|d| (d * 1e6).round() / 1e6).collect::<Vec<_>>(),
            100.0 * (hi / lo - 1.0),
            report.sup_product
        ),
    );
    (c6, c7)
}

fn criterion_8() -> Outcome {
    let alg = su2();
    let p = Subspace::coordinate(3, &[1, 2]).map_err(|e| e.to_string())?;
    let t = Subspace::coordinate(3, &[0]).map_err(|e| e.to_string())?;
    let (a, steps) = generated_subalgebra_with_steps(&alg, &p);
    let (at, _) = generated_subalgebra_with_steps(&alg, &t);
    check(
        a.dim() == 3 && steps == 1 && at.dim() == 1 && is_ideal(&alg, &a),
        format!(
            "span{{X2,X3}} -> dim {} in {steps} step, span{{X1}} -> dim {}, ideal: {}",
            a.dim(),
            at.dim(),
            is_ideal(&alg, &a)
        ),
    )
}

fn quat_dist(a: &GroupPoint, b: &GroupPoint) -> f64 {
    (0..4).map(|i| (a.q[i] - b.q[i]).powi(2)).sum::<f64>().sqrt()
}

fn criterion_9() -> Outcome {
    let jacobi = su2().jacobi_defect();
    let mut rep = 0.0f64;
    for n in 0..=12 {
        let r = irrep_su2(n);
        rep = rep.max(r.homomorphism_defect()).max(r.casimir_defect());
    }

    let g = milnor_metric(0.6, 1.0, 1.7).map_err(|e| e.to_string())?;
    let raw = [0.5, -0.3, 0.8];
    let s = energy(&g, raw).map_err(|e| e.to_string())?.sqrt();
    let m = raw.map(|x| x / s);
    let length = 20.0;
    let states = integrate_states(&g, m, length, 0.01).map_err(|e| e.to_string())?;
    let drift = states.iter().map(|st| (energy(&g, st.momentum).unwrap() - 1.0).abs()).fold(0.0, f64::max) / length;

    let end = |h: f64| integrate_geodesic(&g, m, 5.0, h).unwrap().pop().unwrap();
    let reference = end(0.1 / 64.0);
    let errs: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&h| quat_dist(&end(h), &reference)).collect();
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let fourth = orders.iter().all(|o| (3.5..=4.5).contains(o));
    check(
        jacobi <= 1e-12 && rep <= 1e-10 && drift <= 1e-8 && fourth,
        format!(
            "Jacobi {jacobi:.1e}, irrep defects (n <= 12) {rep:.1e}, energy drift {drift:.1e}/length, observed orders {:?}",
            orders.iter().map(|o| (o * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    )
}

fn criterion_10() -> Outcome {
    let dir = std::env::temp_dir().join(format!("liespec-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let run = |name: &str, threads: &str| -> Result<Vec<u8>, String> {
        let out = dir.join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_liespec"))
            .args(["sweep", "--beta-min", "0.05", "--beta-max", "20", "--steps", "6", "--log"])
            .args(["--dirs", "500", "--probes", "5000", "--seed", "42", "--format", "csv", "--out"])
            .arg(&out)
            .env("LIESPEC_THREADS", threads)
            .stderr(std::process::Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("sweep exited with {status}"));
        }
        std::fs::read(&out).map_err(|e| e.to_string())
    };
    let a = run("a.csv", "1")?;
    let b = run("b.csv", "2")?;
    let _ = std::fs::remove_dir_all(&dir);
    check(a == b && !a.is_empty(), format!("{} bytes, identical across runs (1 and 2 worker threads)", a.len()))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome, Duration)> = Vec::new();
    let mut push = |id, name, (out, t): (Outcome, Duration)| results.push((id, name, out, t));

    push(1, "bi-invariant spectrum", timed(criterion_1));
    push(2, "Berger spectrum oracle", timed(criterion_2));
    push(3, "quotient bound", timed(criterion_3));
    push(4, "round diameter", timed(criterion_4));
    push(5, "scaling invariance", timed(criterion_5));
    let start = Instant::now();
    let (c6, c7) = criteria_6_and_7();
    let sweep_time = start.elapsed();
    push(6, "Li bound on default sweep", (c6, sweep_time));
    push(7, "sub-Riemannian ceiling", (c7, sweep_time));
    push(8, "bracket generation", timed(criterion_8));
    push(9, "structure suite", timed(criterion_9));
    push(10, "determinism", timed(criterion_10));

    // runtime budgets
    let budgets = [(1, Duration::from_secs(1)), (2, Duration::from_secs(5))];
    let mut failed = 0;
    for (id, name, out, t) in &results {
        let over = budgets.iter().any(|(b, limit)| b == id && t > limit);
        let (tag, detail) = match out {
            Ok(d) if !over => ("PASS", d.clone()),
            Ok(d) => ("FAIL", format!("{d} (over time budget)")),
            Err(d) => ("FAIL", d.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("[{tag}] criterion {id:>2} {name}: {detail} [{:.2} s]", t.as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
