//! The operator invariant battery behind `nlpme check-ops`.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::*;
use crate::grid::{inverse_transform, make_grid};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OpCheck {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub tol: f64,
    /// Informational entries do not affect the overall verdict.
    #[serde(default = "yes")]
    pub asserted: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BatteryReport {
    pub schema_version: u32,
    pub pass: bool,
    pub elapsed_seconds: f64,
    pub checks: Vec<OpCheck>,
}

impl BatteryReport {
    pub fn check(&self, name: &str) -> Option<&OpCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Battery {
    checks: Vec<OpCheck>,
}

impl Battery {
    /// Passes when `measured <= tol`.
    fn below(&mut self, name: impl Into<String>, measured: f64, tol: f64) {
        self.checks.push(OpCheck { name: name.into(), pass: measured <= tol, measured, tol, asserted: true });
    }

}

fn random_field(grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
    let values = (0..grid.len()).map(|_| rng.gen::<f64>()).collect();
    Field::new(grid.clone(), values).expect("finite samples")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// `sup |result - λ h| / (max(1,|λ|) sup |h|)`.
fn eigen_error(result: &Field, lambda: f64, h: &Field) -> f64 {
    let scale = lambda.abs().max(1.0) * h.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    result.values().iter().zip(h.values()).map(|(r, v)| (r - lambda * v).abs()).fold(0.0, f64::max) / scale
}

fn harmonics(grid: &Arc<Grid>) -> Vec<(Field, Field, [f64; 2])> {
    let n = grid.n();
    let picks: Vec<[usize; 2]> = if grid.dim() == 1 {
        vec![[1, 0], [7, 0], [n / 2 - 3, 0], [n - 5, 0]]
    } else {
        vec![[1, 0], [0, 3], [2, n - 1], [n / 2 - 2, 5]]
    };
    picks
        .into_iter()
        .map(|[a, b]| {
            let xi = if grid.dim() == 1 { [grid.freqs()[a], 0.0] } else { [grid.freqs()[a], grid.freqs()[b]] };
            let c = Field::from_fn(grid.clone(), |x| (xi[0] * x[0] + xi[1] * x[1]).cos()).unwrap();
            let s = Field::from_fn(grid.clone(), |x| (xi[0] * x[0] + xi[1] * x[1]).sin()).unwrap();
            (c, s, xi)
        })
        .collect()
}

fn eigen_checks(b: &mut Battery, grid: &Arc<Grid>) -> Result<()> {
    let tag = format!("{}d", grid.dim());
    let mut worst = std::collections::BTreeMap::<String, f64>::new();
    let mut record = |name: String, e: f64| {
        let w = worst.entry(name).or_insert(0.0);
        *w = w.max(e);
    };
    let reg = FracOperator::new(grid, FracOperatorSpec::new(grid.dim(), 0.5, 0.1, SymbolMode::RegularizedSymbol)?)?;
    for (c, sn, xi) in harmonics(grid) {
        let k = xi[0].hypot(xi[1]);
        for s in [0.25, 0.5, 0.75] {
            record(format!("eigen_frac_laplacian_{tag}"), eigen_error(&apply_frac_laplacian(&c, s)?, k.powf(2.0 * s), &c));
            for kind in [HalfPower::HalfS, HalfPower::MinusHalfS, HalfPower::HalfOneMinusS] {
                let l = k.powf(kind.exponent(s));
                record(format!("eigen_half_operators_{tag}"), eigen_error(&apply_half_operator(&c, kind, s)?, l, &c));
            }
            if grid.dim() == 2 || s < 0.5 {
                record(format!("eigen_inverse_frac_laplacian_{tag}"), eigen_error(&apply_inverse_frac_laplacian(&c, s)?, k.powf(-2.0 * s), &c));
            }
            // ∂_axis of sin(ξ·x) is ξ_axis cos(ξ·x)
            if xi[0].abs() * grid.half_length() / std::f64::consts::PI < grid.n() as f64 / 2.0 - 0.5 {
                let l = xi[0] * k.powf(-2.0 * s);
                record(format!("eigen_nonlocal_gradient_{tag}"), eigen_error(&apply_nonlocal_gradient(&sn, s, 0)?, l, &c));
            }
        }
        let l = regularized_symbol_value(k, 0.5, 0.1)?;
        record(format!("eigen_regularized_{tag}"), eigen_error(&reg.apply(&c)?, l, &c));
        record(format!("eigen_half_regularized_{tag}"), eigen_error(&reg.apply_half(&c)?, l.sqrt(), &c));
        let l = (-0.3 * 0.7 * k * k).exp();
        record(format!("eigen_heat_semigroup_{tag}"), eigen_error(&heat_semigroup(&c, 0.3, 0.7)?, l, &c));
    }
    for (name, e) in worst {
        b.below(name, e, 1e-12);
    }
    Ok(())
}

fn domination_checks(b: &mut Battery, grid: &Arc<Grid>) -> Result<()> {
    for s in [0.25, 0.5, 0.75] {
        for eps in [0.5, 0.1, 0.02] {
            let table = SymbolTable::regularized(grid, s, eps)?;
            let mut violation = 0.0f64;
            for (k, &v) in table.values().iter().enumerate() {
                let exact = grid.xi_norm(k).powf(2.0 * s);
                violation = violation.max(-v).max(v - exact);
            }
            b.below(format!("symbol_domination_{}d_s{s}_eps{eps}", grid.dim()), violation, 0.0);
        }
    }
    Ok(())
}

fn convergence_checks(b: &mut Battery) -> Result<()> {
    let grid = make_grid(1, 16.0, 512)?;
    let u = Field::from_fn(grid.clone(), |x| (-x[0] * x[0] / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt())?;
    for s in [0.25, 0.5, 0.75] {
        let exact = apply_frac_laplacian(&u, s)?;
        let err_at = |eps: f64| -> Result<f64> {
            let op = FracOperator::new(&grid, FracOperatorSpec::new(1, s, eps, SymbolMode::RegularizedSymbol)?)?;
            Ok(op.apply(&u)?.max_abs_diff(&exact))
        };
        let at_002 = err_at(0.02)?;
        b.below(format!("eps_convergence_s{s}_eps0.02"), at_002, 1e-3);
        let mut prev = f64::INFINITY;
        let mut rise = 0.0f64;
        let mut reached = f64::INFINITY;
        for j in 1..=20 {
            let e = err_at(0.5f64.powi(j))?;
            rise = rise.max(e - prev);
            prev = e;
            if e < 1e-3 && reached.is_infinite() {
                reached = 0.5f64.powi(j);
            }
        }
        b.below(format!("eps_convergence_s{s}_monotone"), rise, 0.0);
        // infinite when no tested ε reaches the bound
        b.below(format!("eps_convergence_s{s}_first_eps_below_1e-3"), reached, 0.5);
    }
    Ok(())
}

fn random_checks(b: &mut Battery, grid: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Result<()> {
    let tag = format!("{}d", grid.dim());
    let dim = grid.dim();
    let ops = [
        FracOperator::new(grid, FracOperatorSpec::exact(dim, 0.4)?)?,
        FracOperator::new(grid, FracOperatorSpec::new(dim, 0.3, 0.2, SymbolMode::RegularizedSymbol)?)?,
        FracOperator::new(grid, FracOperatorSpec::new(dim, 0.7, 0.5, SymbolMode::RegularizedKernel)?)?,
    ];
    let mut round_trip = 0.0f64;
    let mut parseval = 0.0f64;
    let mut symmetry = 0.0f64;
    let mut positivity = 0.0f64;
    let mut sqrt_identity = 0.0f64;
    let mut l1_ratio = 0.0f64;
    for trial in 0..100 {
        let u = random_field(grid, rng);
        let v = random_field(grid, rng);
        let spec = transform(&u);
        let back = inverse_transform(&spec, grid)?;
        round_trip = round_trip.max(back.max_abs_diff(&u) / u.max());
        parseval = parseval.max(rel(u.inner(&u), spec.energy()));
        for op in &ops {
            let lu = op.apply(&u)?;
            let lv = op.apply(&v)?;
            symmetry = symmetry.max(rel(v.inner(&lu), u.inner(&lv)));
            let q = u.inner(&lu);
            positivity = positivity.max(-q / u.inner(&u));
            let h = op.apply_half(&u)?;
            sqrt_identity = sqrt_identity.max(rel(q, h.inner(&h)));
            if op.spec().mode != SymbolMode::ExactSymbol && trial % 10 == 0 {
                let l1 = |f: &Field| f.values().iter().map(|x| x.abs()).sum::<f64>() * grid.cell_volume();
                let bound = 2.0 * l1(&u) * kernel_l1_norm(dim, op.spec().s, op.spec().epsilon);
                l1_ratio = l1_ratio.max(l1(&lu) / bound);
            }
        }
    }
    b.below(format!("round_trip_{tag}"), round_trip, 1e-12);
    b.below(format!("parseval_{tag}"), parseval, 1e-12);
    b.below(format!("symmetry_{tag}"), symmetry, 1e-10);
    b.below(format!("quadratic_form_positivity_{tag}"), positivity, 0.0);
    b.below(format!("square_root_identity_{tag}"), sqrt_identity, 1e-10);
    b.below(format!("l1_bound_ratio_{tag}"), l1_ratio, 1.0);
    Ok(())
}

fn kernel_agreement(b: &mut Battery, grid: &Arc<Grid>) -> Result<()> {
    let eps = 4.0 * grid.dx();
    let mut worst = 0.0f64;
    for s in [0.25, 0.5, 0.75] {
        let sym = SymbolTable::regularized(grid, s, eps)?;
        let ker = KernelTable::new(grid, s, eps)?.symbol();
        let scale = sym.values().iter().copied().fold(0.0, f64::max);
        let e = sym.values().iter().zip(ker.values()).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        worst = worst.max(e / scale);
    }
    b.below(format!("kernel_vs_symbol_{}d", grid.dim()), worst, 1e-3);
    Ok(())
}

/// Runs every operator check; the report passes iff every asserted entry passes.
pub fn run_check_ops() -> Result<BatteryReport> {
    let start = Instant::now();
    let mut b = Battery { checks: Vec::new() };
    let g1 = make_grid(1, 16.0, 512)?;
    let g2 = make_grid(2, 8.0, 32)?;
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    eigen_checks(&mut b, &g1)?;
    eigen_checks(&mut b, &g2)?;
    domination_checks(&mut b, &g1)?;
    domination_checks(&mut b, &make_grid(2, 16.0, 64)?)?;
    convergence_checks(&mut b)?;
    random_checks(&mut b, &make_grid(1, 8.0, 128)?, &mut rng)?;
    random_checks(&mut b, &make_grid(2, 8.0, 32)?, &mut rng)?;
    kernel_agreement(&mut b, &make_grid(1, 16.0, 256)?)?;
    kernel_agreement(&mut b, &make_grid(2, 16.0, 64)?)?;
    let pass = b.checks.iter().filter(|c| c.asserted).all(|c| c.pass);
    Ok(BatteryReport { schema_version: 1, pass, elapsed_seconds: start.elapsed().as_secs_f64(), checks: b.checks })
}
