//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every tolerance is pinned here.

use num_complex::Complex64;
use std::time::Instant;
use whitham_core::dispersion::{
    commutator_region_grid, commutator_scan, make_builtin, verify_m_bound, verify_multiplier_identities,
    verify_phi_bound, verify_phi_symmetries, SampleGrid, SymbolSpec,
};
use whitham_core::energy::quartic_rhs;
use whitham_core::evolve::{evolve, SolverConfig, Stepper};
use whitham_core::expr::Expr;
use whitham_core::pseudoproduct::{bilinear_b, BilinearKernel};
use whitham_core::scan::{energy_scan, quartic_rates, quartic_scan, rate_mismatch};
use whitham_core::spectral::{Field, Grid};

const IDENTITY_TOL: f64 = 1e-12;
const IDENTITY_SAMPLES: usize = 10_000;
const IDENTITY_SECONDS: f64 = 5.0;

const BOUND_DRIFT: f64 = 0.10;
const BOUND_SECONDS: f64 = 30.0;

const CANCEL_TOL: f64 = 1e-10;
const CANCEL_FIELDS: u64 = 20;

const QUARTIC_FD_TOL: f64 = 1e-3;
const QUARTIC_SHRINK: (f64, f64) = (3.5, 4.5);
const QUARTIC_SECONDS: f64 = 120.0;

const ENERGY_SLOPE: (f64, f64) = (0.7, 1.3);
const ENERGY_SECONDS: f64 = 60.0;
const LADDER: [f64; 4] = [0.4, 0.2, 0.1, 0.05];

const QUARTIC_EXPONENT: (f64, f64) = (3.5, 4.5);
const HOMOGENEITY_TOL: f64 = 1e-12;

const LINEAR_TOL: f64 = 1e-12;
const ORDER_RANGE: (f64, f64) = (3.7, 4.3);
const L2_DRIFT_TOL: f64 = 1e-8;

const KERNEL_TOL: f64 = 1e-12;

const COMMUTATOR_SAMPLES: usize = 10_000;
const COMMUTATOR_DRIFT: f64 = 0.10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn builtin(name: &str, params: &[f64]) -> SymbolSpec {
    make_builtin(name, params).expect("builtin symbol")
}

fn profile(grid: Grid, src: &str) -> Field {
    Field::from_expression(grid, &Expr::parse(src, "x").expect("profile")).expect("profile field")
}

fn in_range(x: f64, r: (f64, f64)) -> bool {
    x >= r.0 && x <= r.1
}

fn symbol_identities() -> Outcome {
    let t0 = Instant::now();
    let syms = [
        builtin("whitham", &[]),
        builtin("capillary_whitham", &[1.0]),
        builtin("bessel", &[]),
        builtin("smooth_fkdv", &[0.5]),
        builtin("smooth_fkdv", &[-0.5]),
    ];
    let mut worst = 0.0f64;
    for (i, s) in syms.iter().enumerate() {
        let sym = verify_phi_symmetries(s, IDENTITY_SAMPLES, 100 + i as u64).expect("symmetries");
        let ids = verify_multiplier_identities(s, IDENTITY_SAMPLES, 200 + i as u64).expect("identities");
        worst = worst.max(sym.max_residual).max(ids.m_exchange).max(ids.n_conjugation).max(ids.m_phi);
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst <= IDENTITY_TOL && secs < IDENTITY_SECONDS,
        format!("max residual {worst:.3e} (tol {IDENTITY_TOL:e}), {secs:.2} s (limit {IDENTITY_SECONDS} s)"),
    )
}

fn bound_suite() -> Outcome {
    let t0 = Instant::now();
    let syms = [
        builtin("whitham", &[]),
        builtin("capillary_whitham", &[1.0]),
        builtin("bessel", &[]),
        builtin("smooth_fkdv", &[0.5]),
        builtin("smooth_fkdv", &[-0.5]),
    ];
    let grid = SampleGrid::polar(1e-2, 1e2, 10, 16);
    let fine = grid.refined();
    let mut pass = true;
    let mut worst_drift = 0.0f64;
    let mut notes = Vec::new();
    for s in &syms {
        let phi = verify_phi_bound(s, &grid).expect("phi bound");
        let phi_f = verify_phi_bound(s, &fine).expect("phi bound");
        let m = verify_m_bound(s, &grid).expect("m bound");
        let m_f = verify_m_bound(s, &fine).expect("m bound");
        let d = phi.drift(&phi_f, true).max(m.drift(&m_f, false));
        worst_drift = worst_drift.max(d);
        let ok = phi.is_two_sided() && phi_f.is_two_sided() && m.c_max.is_finite() && m.c_max > 0.0 && d <= BOUND_DRIFT;
        if !ok {
            notes.push(format!("{}: phi [{:.3e}, {:.3e}] m max {:.3e} drift {:.3}", s.name, phi.c_min, phi.c_max, m.c_max, d));
        }
        pass &= ok;
    }
    let secs = t0.elapsed().as_secs_f64();
    pass &= secs < BOUND_SECONDS;
    outcome(
        pass,
        format!(
            "5 symbols two-sided, worst drift {worst_drift:.4} (tol {BOUND_DRIFT}), {secs:.2} s (limit {BOUND_SECONDS} s) {}",
            notes.join("; ")
        ),
    )
}

fn exact_cancellation() -> Outcome {
    let s = builtin("whitham", &[]);
    let grid = Grid::new(128, 1.0).unwrap();
    let kernel = BilinearKernel::new(&s, grid);
    let (mut id_worst, mut fg_worst) = (0.0f64, 0.0f64);
    for seed in 0..CANCEL_FIELDS {
        let u = Field::random(grid, grid.dealias_cutoff(), 1.0, seed);
        id_worst = id_worst.max(kernel.identity_residual(&u).expect("identity"));
        for k in 1..=3 {
            fg_worst = fg_worst.max(kernel.highest_order_cancellation(&u, k).expect("cancellation").relative);
        }
    }
    outcome(
        id_worst <= CANCEL_TOL && fg_worst <= CANCEL_TOL,
        format!("identity {id_worst:.3e}, F0+G0 {fg_worst:.3e} over {CANCEL_FIELDS} fields (tol {CANCEL_TOL:e})"),
    )
}

fn quartic_law() -> Outcome {
    let t0 = Instant::now();
    let s = builtin("whitham", &[]);
    let grid = Grid::new(256, 1.0).unwrap();
    let u0 = profile(grid, "cos(x)").scaled(0.1);
    let mismatch = |dt: f64, k: u32| {
        let cfg = SolverConfig { dt, t_end: 1.0, checkpoint_every: (0.1 / dt).round() as usize, ..Default::default() };
        rate_mismatch(&quartic_rates(&s, &u0, &cfg, &[k]).expect("rates"))
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for k in 1..=3 {
        let coarse = mismatch(1e-3, k);
        let fine = mismatch(5e-4, k);
        let shrink = coarse / fine;
        pass &= coarse < QUARTIC_FD_TOL && in_range(shrink, QUARTIC_SHRINK);
        parts.push(format!("k={k} rel {coarse:.3e} shrink {shrink:.2}"));
    }
    let secs = t0.elapsed().as_secs_f64();
    pass &= secs < QUARTIC_SECONDS;
    outcome(
        pass,
        format!(
            "{} (tol {QUARTIC_FD_TOL:e}, shrink in {QUARTIC_SHRINK:?}), {secs:.2} s (limit {QUARTIC_SECONDS} s)",
            parts.join(", ")
        ),
    )
}

fn norm_equivalence() -> Outcome {
    let t0 = Instant::now();
    let grid = Grid::new(256, 1.0).unwrap();
    let p = profile(grid, "cos(x)+0.5*cos(2*x)");
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["whitham", "bessel"] {
        let scan = energy_scan(&builtin(name, &[]), &p, &LADDER, 3).expect("energy scan");
        let slope = scan.slope.unwrap_or(f64::NAN);
        pass &= in_range(slope, ENERGY_SLOPE);
        parts.push(format!("{name} slope {slope:.4}"));
    }
    let secs = t0.elapsed().as_secs_f64();
    pass &= secs < ENERGY_SECONDS;
    outcome(pass, format!("{} (range {ENERGY_SLOPE:?}), {secs:.2} s (limit {ENERGY_SECONDS} s)", parts.join(", ")))
}

fn quartic_scaling() -> Outcome {
    let s = builtin("whitham", &[]);
    let grid = Grid::new(256, 1.0).unwrap();
    // three modes with unrelated phases: even or point-antisymmetric data
    // make the quartic rate vanish at t = 0
    let p = profile(grid, "cos(x)+0.5*cos(2*x+1)+0.25*cos(3*x+2)");
    let cfg = SolverConfig { dt: 1e-3, t_end: 0.02, checkpoint_every: 5, ..Default::default() };
    let scan = quartic_scan(&s, &p, &LADDER, &cfg, 3).expect("quartic scan");
    let exponent = scan.exponent.unwrap_or(f64::NAN);
    let u = p.scaled(0.1).dealias();
    let base = quartic_rhs(&s, &u, 3).expect("rhs");
    let mut homog = 0.0f64;
    for lambda in [0.5, 2.0, 3.0] {
        let v = quartic_rhs(&s, &u.scaled(lambda), 3).expect("rhs");
        homog = homog.max((v - lambda.powi(4) * base).abs() / (lambda.powi(4) * base).abs());
    }
    outcome(
        in_range(exponent, QUARTIC_EXPONENT) && homog <= HOMOGENEITY_TOL,
        format!(
            "exponent {exponent:.4} (range {QUARTIC_EXPONENT:?}), lambda^4 homogeneity {homog:.3e} (tol {HOMOGENEITY_TOL:e})"
        ),
    )
}

fn run(sym: &SymbolSpec, u0: &Field, dt: f64, t: f64) -> Field {
    let st = Stepper::new(sym, u0.grid(), dt, true);
    let mut u = u0.dealias();
    for _ in 0..(t / dt).round() as usize {
        u = st.step(&u).expect("step");
    }
    u
}

fn integrator() -> Outcome {
    // exact linear flow: cos x -> cos(x + t) for |xi| with nonlinearity off
    let lin = builtin("fkdv", &[1.0]);
    let g32 = Grid::new(32, 1.0).unwrap();
    let c = Field::from_modes(g32, &[(1, Complex64::new(0.5, 0.0))]).unwrap();
    let st = Stepper::new(&lin, g32, 0.01, true).linear_only();
    let mut u = c;
    for _ in 0..1000 {
        u = st.step(&u).expect("step");
    }
    let lin_err = g32.points().iter().zip(u.sample()).map(|(x, v)| (v - (x + 10.0).cos()).abs()).fold(0.0, f64::max);

    let w = builtin("whitham", &[]);
    let grid = Grid::new(256, 1.0).unwrap();
    let u0 = profile(grid, "cos(x)+0.5*cos(2*x+1)").scaled(0.3);
    let reference = run(&w, &u0, 0.01 / 8.0, 1.0);
    let e1 = run(&w, &u0, 0.02, 1.0).sub(&reference).unwrap().l2_norm();
    let e2 = run(&w, &u0, 0.01, 1.0).sub(&reference).unwrap().l2_norm();
    let order = (e1 / e2).log2();

    let small = profile(grid, "cos(x)").scaled(0.05);
    let cfg = SolverConfig { dt: 1e-3, t_end: 1.0, checkpoint_every: 1000, ..Default::default() };
    let tr = evolve(&w, &small, &cfg, 3).expect("evolve");
    let l0 = tr.checkpoints[0].l2;
    let drift = (tr.checkpoints.last().unwrap().l2 - l0).abs() / l0;

    outcome(
        lin_err <= LINEAR_TOL && in_range(order, ORDER_RANGE) && drift <= L2_DRIFT_TOL && tr.breakdown.is_none(),
        format!(
            "linear {lin_err:.3e} (tol {LINEAR_TOL:e}), order {order:.3} (range {ORDER_RANGE:?}), L2 drift {drift:.3e} (tol {L2_DRIFT_TOL:e})"
        ),
    )
}

fn naive_b(sym: &SymbolSpec, f: &Field, g: &Field) -> Vec<Complex64> {
    let grid = f.grid();
    let half = (grid.n_points() / 2) as i64;
    let cut = grid.dealias_cutoff() as i64;
    let mut out = vec![Complex64::new(0.0, 0.0); grid.n_points()];
    for k in -cut..=cut {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in -half..half {
            if (-half..half).contains(&(k - j)) {
                acc += sym.m(grid.wavenumber(k - j), grid.wavenumber(j)) * f.coeff(k - j) * g.coeff(j);
            }
        }
        out[grid.slot(k).unwrap()] = acc;
    }
    out
}

fn kernel_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for (i, n) in [32usize, 64, 128, 256].into_iter().enumerate() {
        for name in ["whitham", "bessel"] {
            let s = builtin(name, &[]);
            let grid = Grid::new(n, 1.0).unwrap();
            let f = Field::random(grid, grid.dealias_cutoff(), 1.0, 40 + i as u64);
            let g = Field::random(grid, grid.dealias_cutoff(), 0.5, 80 + i as u64);
            let fast = bilinear_b(&s, &f, &g).expect("kernel");
            let slow = naive_b(&s, &f, &g);
            let scale = slow.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let err = fast.coeffs().iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            worst = worst.max(err / scale);
        }
    }
    outcome(worst <= KERNEL_TOL, format!("max relative difference {worst:.3e} at n in 32..256 (tol {KERNEL_TOL:e})"))
}

fn commutator() -> Outcome {
    let s = builtin("whitham", &[]);
    let coarse = commutator_region_grid(1e3, 50, 20);
    let fine = commutator_region_grid(1e3, 100, 40);
    let a = commutator_scan(&s, &coarse).expect("commutator");
    let b = commutator_scan(&s, &fine).expect("commutator");
    let drift = a.n_bound.drift(&b.n_bound, false).max(a.u_bound.drift(&b.u_bound, false));
    let finite = [a.n_bound.c_max, a.u_bound.c_max, b.n_bound.c_max, b.u_bound.c_max].iter().all(|c| c.is_finite());
    outcome(
        finite && coarse.len() >= COMMUTATOR_SAMPLES && drift <= COMMUTATOR_DRIFT,
        format!(
            "{} samples, N sup {:.4e}, U sup {:.4e}, refinement drift {drift:.4} (tol {COMMUTATOR_DRIFT})",
            coarse.len(),
            a.n_bound.c_max,
            a.u_bound.c_max
        ),
    )
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 9] = [
        ("symbol identities", symbol_identities),
        ("bound suite", bound_suite),
        ("exact cancellation", exact_cancellation),
        ("quartic evolution law", quartic_law),
        ("norm equivalence scaling", norm_equivalence),
        ("quartic scaling", quartic_scaling),
        ("integrator", integrator),
        ("kernel oracle", kernel_oracle),
        ("commutator diagnostic", commutator),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let o = check();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
