//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Exits 0 after printing so that the workspace test run stays usable; set
//! `NLPME_ACCEPTANCE_STRICT=1` to exit 1 when any criterion fails.

use std::sync::Arc;
use std::time::Instant;

use nlpme_core::diagnostics::{
    first_energy_report, linf_report, lp_energy_report, mass_report, second_energy_report, smoothing_fit,
    stroock_varopoulos_with, LedgerBuilder, LedgerSettings,
};
use nlpme_core::experiments::{exact_linear_solution, make_initial, run_sweep_text, InitialDataSpec};
use nlpme_core::fracops::{run_check_ops, FracOperator, FracOperatorSpec};
use nlpme_core::stepper::{run, NoObserver, RunOptions, Scheme};
use nlpme_core::{make_grid, Field, Grid, NonlinearitySpec, SolverConfig, Stepper, SymbolMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { pass: true, details: Vec::new() }
    }

    fn require(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.details.push(format!("{} {line}", if ok { "ok  " } else { "fail" }));
    }

    fn info(&mut self, line: String) {
        self.details.push(format!("info {line}"));
    }

    fn runtime(&mut self, start: Instant, budget: f64) {
        let secs = start.elapsed().as_secs_f64();
        self.require(secs < budget, format!("runtime {secs:.1}s < {budget}s"));
    }
}

fn gaussian_datum(grid: &Arc<Grid>) -> Field {
    make_initial(&InitialDataSpec::Gaussian { mass: 1.0, sigma: 1.0, center: [0.0; 2], noise: None }, grid).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut o = Outcome::new();
    let report = match run_check_ops() {
        Ok(r) => r,
        Err(e) => {
            o.require(false, format!("battery error: {e}"));
            return o;
        }
    };
    let worst = |prefix: &str| {
        report.checks.iter().filter(|c| c.name.starts_with(prefix)).fold((true, 0.0f64), |(p, m), c| (p && c.pass, m.max(c.measured)))
    };
    let (eig_ok, eig) = worst("eigen_");
    o.require(eig_ok, format!("eigenfunction exactness max error {eig:.2e} <= 1e-12"));
    let (dom_ok, dom) = worst("symbol_domination_");
    o.require(dom_ok, format!("0 <= S <= |xi|^(2s) on 18 (s, eps, dim) cases, max violation {dom:.2e}"));
    for s in [0.25, 0.5, 0.75] {
        let c = report.check(&format!("eps_convergence_s{s}_eps0.02")).unwrap();
        o.require(c.pass, format!("s={s}: ||L_eps u - (-Delta)^s u||_inf = {:.3e} < 1e-3 at eps=0.02", c.measured));
    }
    for c in report.checks.iter().filter(|c| {
        !c.name.starts_with("eigen_") && !c.name.starts_with("symbol_domination_") && !c.name.ends_with("_eps0.02")
    }) {
        o.info(format!("{} {} measured={:.3e} tol={:.1e}", if c.pass { "pass" } else { "FAIL" }, c.name, c.measured, c.tol));
    }
    o.runtime(start, 30.0);
    o
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut o = Outcome::new();
    let g = make_grid(1, 16.0, 256).unwrap();
    let u0 = gaussian_datum(&g);
    let mut cfg = SolverConfig::direct(0.5, NonlinearitySpec::power(1.0).unwrap(), 0.5);
    cfg.dt_max = 1e-3;
    let st = Stepper::new(&g, &cfg).unwrap();
    let out = run(&u0, &st, &RunOptions::default(), &mut NoObserver);
    if let Some(e) = out.error {
        o.require(false, format!("run aborted: {e}"));
        return o;
    }
    let exact = exact_linear_solution(&u0, &st, 0.5).unwrap();
    let err = out.final_state.max_abs_diff(&exact);
    o.require(err < 1e-3, format!("m=1 s=0.5 n=256 t=0.5: L_inf error vs exp(-t|xi|^(2-2s)) = {err:.3e} < 1e-3"));
    o.runtime(start, 10.0);
    o
}

struct MatrixRun {
    m: f64,
    s: f64,
    result: Result<nlpme_core::RunLedger, String>,
}

fn matrix_runs() -> (Vec<MatrixRun>, f64) {
    let start = Instant::now();
    let cases: Vec<(f64, f64)> =
        [1.5, 2.0, 2.5, 3.0, 3.5].iter().flat_map(|&m| [0.25, 0.5, 0.75].map(move |s| (m, s))).collect();
    let runs = cases
        .into_par_iter()
        .map(|(m, s)| {
            let g = make_grid(1, 16.0, 256).unwrap();
            let u0 = gaussian_datum(&g);
            let mut cfg = SolverConfig::direct(s, NonlinearitySpec::power(m).unwrap(), 1.0);
            cfg.dt_max = 1e-2;
            let st = Stepper::new(&g, &cfg).unwrap();
            let settings = LedgerSettings { p_set: vec![2.0, m + 1.0], ..Default::default() };
            let mut b = LedgerBuilder::new(&st, &settings).unwrap();
            let out = run(&u0, &st, &RunOptions { cadence: Some(0.05), ..Default::default() }, &mut b);
            let result = match out.error {
                Some(e) => Err(e.to_string()),
                None => Ok(b.finish()),
            };
            MatrixRun { m, s, result }
        })
        .collect();
    (runs, start.elapsed().as_secs_f64())
}

fn criterion_3(runs: &[MatrixRun], secs: f64) -> Outcome {
    let mut o = Outcome::new();
    for r in runs {
        match &r.result {
            Ok(l) => {
                let mass = mass_report(l, 1e-10).unwrap();
                let linf = linf_report(l, 1e-10).unwrap();
                o.require(
                    mass.pass && linf.pass,
                    format!(
                        "m={} s={}: mass drift {:.2e} < 1e-10, max L_inf increase {:.2e} <= 1e-10",
                        r.m, r.s, -mass.slack, -linf.slack
                    ),
                );
            }
            Err(e) => o.require(false, format!("m={} s={}: run aborted: {e}", r.m, r.s)),
        }
    }
    o.require(secs < 300.0, format!("runtime {secs:.1}s < 300s (shared with criterion 4)"));
    o
}

fn criterion_4(runs: &[MatrixRun]) -> Outcome {
    let mut o = Outcome::new();
    for r in runs {
        let Ok(l) = &r.result else {
            o.require(false, format!("m={} s={}: run aborted", r.m, r.s));
            continue;
        };
        let p2 = lp_energy_report(l, 2.0, 1e-2).unwrap();
        let pm = lp_energy_report(l, r.m + 1.0, 1e-2).unwrap();
        let e2 = second_energy_report(l, 1e-2).unwrap();
        o.require(
            p2.pass && pm.pass && e2.pass,
            format!(
                "m={} s={}: Lp slack p=2 {:.2e}, p=m+1 {:.2e}; second-energy slack {:.2e} (all >= -1e-2)",
                r.m, r.s, p2.slack, pm.slack, e2.slack
            ),
        );
        let fe = first_energy_report(l, 1e-2).unwrap();
        if r.m == 1.5 {
            o.require(fe.pass, format!("m=1.5 s={}: first-energy slack {:.2e} >= -1e-2", r.s, fe.slack));
        } else {
            o.info(format!("m={} s={}: first-energy slack {:.2e} (not asserted)", r.m, r.s, fe.slack));
        }
    }
    o
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let mut o = Outcome::new();
    let grids = [make_grid(1, 4.0, 64).unwrap(), make_grid(2, 4.0, 16).unwrap()];
    let mut symbols = Vec::new();
    for g in &grids {
        for s in [0.25, 0.5, 0.75] {
            for eps in [0.0, 0.1, 0.5] {
                let spec = if eps == 0.0 {
                    FracOperatorSpec::exact(g.dim(), s).unwrap()
                } else {
                    FracOperatorSpec::new(g.dim(), s, eps, SymbolMode::RegularizedSymbol).unwrap()
                };
                symbols.push((g.clone(), s, eps, FracOperator::new(g, spec).unwrap().symbol().clone()));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    let mut identity = 0.0f64;
    let mut cases = 0usize;
    for k in 0..1000 {
        let (g, _, _, sym) = &symbols[k % symbols.len()];
        let vals: Vec<f64> = match k % 3 {
            0 => (0..g.len()).map(|_| rng.gen::<f64>()).collect(),
            1 => (0..g.len()).map(|_| if rng.gen::<f64>() < 0.2 { rng.gen::<f64>() * 10.0 } else { 0.0 }).collect(),
            _ => (0..g.len()).map(|_| rng.gen::<f64>().powi(6)).collect(),
        };
        let u = Field::new(g.clone(), vals).unwrap();
        for q in [2.0, 3.0, 4.0] {
            let sv = stroock_varopoulos_with(&u, q, sym).unwrap();
            let rel = sv.slack / sv.lhs.abs().max(f64::MIN_POSITIVE);
            worst = worst.min(rel);
            if q == 2.0 {
                identity = identity.max(rel.abs());
            }
            cases += 1;
        }
    }
    o.require(worst >= -1e-10, format!("{cases} cases: min slack/|LHS| = {worst:.2e} >= -1e-10"));
    o.require(identity <= 1e-12, format!("q=2 square-root identity: max |slack|/|LHS| = {identity:.2e} <= 1e-12"));
    o.runtime(start, 60.0);
    o
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut o = Outcome::new();
    let cases = [(2.0, 0.5), (2.0, 0.25), (3.0, 0.5)];
    let results: Vec<_> = cases
        .par_iter()
        .map(|&(m, s)| {
            let g = make_grid(1, 16.0, 1024).unwrap();
            let u0 = make_initial(&InitialDataSpec::MollifiedDirac { mass: 1.0, mollifier_width: 0.1, center: [0.0; 2] }, &g)
                .unwrap();
            let mut cfg = SolverConfig::direct(s, NonlinearitySpec::power(m).unwrap(), 10.0);
            cfg.dt_max = 1e-2;
            cfg.cfl_safety = 0.4;
            let st = Stepper::new(&g, &cfg).unwrap();
            let settings = LedgerSettings { p_set: vec![2.0], ..Default::default() };
            let mut b = LedgerBuilder::new(&st, &settings).unwrap();
            let times: Vec<f64> = (0..21).map(|k| 0.1 * 100f64.powf(k as f64 / 20.0)).collect();
            let out = run(&u0, &st, &RunOptions { observe_times: times, ..Default::default() }, &mut b);
            if let Some(e) = out.error {
                return Err(e.to_string());
            }
            smoothing_fit(&b.finish(), 1, s, 1.0, (0.1, 10.0)).map_err(|e| e.to_string())
        })
        .collect();
    for (&(m, s), r) in cases.iter().zip(results) {
        match r {
            Ok(fit) => {
                let rel = fit.gamma_relative_error();
                o.require(
                    rel < 0.15,
                    format!(
                        "m={m} s={s}: gamma_hat {:.4} vs gamma {:.4}, relative error {rel:.3} < 0.15 ({} points, residual {:.1e})",
                        fit.gamma_hat, fit.gamma_theory, fit.points, fit.residual
                    ),
                );
            }
            Err(e) => o.require(false, format!("m={m} s={s}: {e}")),
        }
    }
    o.runtime(start, 600.0);
    o
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut o = Outcome::new();
    let g = make_grid(1, 16.0, 512).unwrap();
    let u0 = make_initial(
        &InitialDataSpec::Box { half_width: 1.0, height: Some(1.0), mass: None, center: [0.0; 2], noise: None },
        &g,
    )
    .unwrap();
    let linf0 = u0.max();
    let threshold = 1e-10 * linf0;
    let final_state = |m: f64| {
        let mut cfg = SolverConfig::direct(0.5, NonlinearitySpec::power(m).unwrap(), 1.0);
        cfg.dt_max = 1e-2;
        let st = Stepper::new(&g, &cfg).unwrap();
        let out = run(&u0, &st, &RunOptions::default(), &mut NoObserver);
        out.error.map_or(Ok(out.final_state), |e| Err(e.to_string()))
    };
    let (slow, fast) = rayon::join(|| final_state(3.0), || final_state(1.5));
    match slow {
        Ok(u) => {
            let r = nlpme_core::diagnostics::support_radius(&u, threshold);
            let tail = nlpme_core::diagnostics::tail_min(&u, 6.0);
            o.require(r < 4.0, format!("m=3: support_radius(1) = {r:.3} < 4 (threshold {threshold:.1e})"));
            o.require(tail < 1e-12 * linf0, format!("m=3: tail_min(r0=6) = {tail:.3e} < 1e-12 ||u0||_inf"));
        }
        Err(e) => o.require(false, format!("m=3 run aborted: {e}")),
    }
    match fast {
        Ok(u) => {
            let tail = nlpme_core::diagnostics::tail_min(&u, 6.0);
            o.require(tail > threshold, format!("m=1.5: tail_min(r0=6) = {tail:.3e} > {threshold:.1e}"));
        }
        Err(e) => o.require(false, format!("m=1.5 run aborted: {e}")),
    }
    o.runtime(start, 300.0);
    o
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut o = Outcome::new();
    let g = make_grid(1, 8.0, 128).unwrap();
    let u0 = gaussian_datum(&g);
    let nl = NonlinearitySpec::shifted_power(2.0, 0.5).unwrap();
    let mut cfg = SolverConfig::direct(0.5, nl, 0.05).regularized(0.25);
    cfg.delta = 0.1;
    cfg.scheme = Scheme::Duhamel;
    let st = Stepper::new(&g, &cfg).unwrap();
    let fixed = match st.duhamel_window(&u0, 0.05, 1e-10, 100) {
        Ok(f) => f,
        Err(e) => {
            o.require(false, format!("Duhamel solve failed: {e}"));
            return o;
        }
    };
    let ratios = fixed.ratios();
    let max_ratio = ratios.iter().copied().fold(0.0f64, f64::max);
    o.require(
        !ratios.is_empty() && max_ratio < 0.9,
        format!("{} Picard iterations, successive distance ratios max {max_ratio:.3} < 0.9", fixed.iterations),
    );
    let mut semi = cfg.clone();
    semi.scheme = Scheme::SemiImplicit;
    semi.dt_max = 1e-5;
    let st2 = Stepper::new(&g, &semi).unwrap();
    let out = run(&u0, &st2, &RunOptions::default(), &mut NoObserver);
    match out.error {
        Some(e) => o.require(false, format!("semi-implicit reference aborted: {e}")),
        None => {
            let last = fixed.fields.last().unwrap();
            let diff = last.max_abs_diff(&out.final_state);
            o.require(diff < 1e-3, format!("fixed point vs semi-implicit at t=0.05: L_inf {diff:.3e} < 1e-3"));
        }
    }
    o.runtime(start, 60.0);
    o
}

const CHAIN_BASE: &str = r#"
output_dir = "OUT"
jobs = 4
chain_axis = "AXIS"

[base]
schema_version = 1
grid = { dim = 1, L = 16.0, n = 256 }
operator = { s = 0.25, epsilon = 0.0 }
nonlinearity = { kind = "shifted_power", m = 2.0, mu = 0.0 }
solver = { t_end = 0.5, dt_max = 1e-3, scheme = "SCHEME", delta = 0.0 }
initial = { kind = "gaussian", mass = 1.0, sigma = 1.0 }
observer = { p_set = [2.0] }

[axes]
"AXIS" = VALUES
"#;

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut o = Outcome::new();
    let tmp = tempfile::tempdir().unwrap();
    let chains = [
        ("operator.epsilon", "[0.4, 0.2, 0.1, 0.05, 0.0]", "explicit_upwind"),
        ("nonlinearity.mu", "[0.1, 0.05, 0.025, 0.0]", "explicit_upwind"),
        ("solver.delta", "[0.01, 0.005, 0.0025, 0.0]", "semi_implicit"),
    ];
    for (axis, values, scheme) in chains {
        let out = tmp.path().join(axis.replace('.', "_"));
        let text = CHAIN_BASE
            .replace("OUT", &out.to_string_lossy())
            .replace("AXIS", axis)
            .replace("VALUES", values)
            .replace("SCHEME", scheme);
        match run_sweep_text(&text, false, None, None) {
            Ok(summary) => {
                let d: Vec<f64> = summary.rows.iter().map(|r| r.l2_to_last.unwrap_or(f64::NAN)).collect();
                let chain = &d[..d.len() - 1];
                let monotone = chain.windows(2).all(|w| w[1] < w[0]) && chain.iter().all(|x| x.is_finite());
                let shown: Vec<String> = chain.iter().map(|x| format!("{x:.3e}")).collect();
                o.require(
                    monotone && summary.rows.iter().all(|r| r.status != "abort" && r.status != "error"),
                    format!("{axis} {values}: L2(t=0.5) distance to the direct run [{}] decreasing", shown.join(", ")),
                );
            }
            Err(e) => o.require(false, format!("{axis}: sweep failed: {e}")),
        }
    }
    o.runtime(start, 600.0);
    o
}

fn main() {
    let strict = std::env::var("NLPME_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |k: usize| filter.is_empty() || filter.contains(&k);
    let titles = [
        "operator battery",
        "linear limit",
        "conservation and contraction",
        "energy ledgers",
        "Stroock-Varopoulos battery",
        "smoothing exponent",
        "propagation dichotomy",
        "Duhamel contraction",
        "limit chain",
    ];
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let timed = |k: usize, f: &dyn Fn() -> Outcome, results: &mut Vec<(usize, Outcome)>| {
        if want(k) {
            results.push((k, f()));
        }
    };
    timed(1, &criterion_1, &mut results);
    timed(2, &criterion_2, &mut results);
    if want(3) || want(4) {
        let (runs, secs) = matrix_runs();
        if want(3) {
            results.push((3, criterion_3(&runs, secs)));
        }
        if want(4) {
            results.push((4, criterion_4(&runs)));
        }
    }
    timed(5, &criterion_5, &mut results);
    timed(6, &criterion_6, &mut results);
    timed(7, &criterion_7, &mut results);
    timed(8, &criterion_8, &mut results);
    timed(9, &criterion_9, &mut results);

    let mut failed = 0;
    for (k, o) in &results {
        println!("{} criterion {k}: {}", if o.pass { "PASS" } else { "FAIL" }, titles[k - 1]);
        for d in &o.details {
            println!("    {d}");
        }
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
