//! One runner per experiment. Each writes its tables and returns the lines
//! printed on success.

use crate::config::{Experiment, ExperimentConfig};
use crate::failure::Failure;
use crate::output::{float, opt_float, Table, Writer};
use serde_json::{json, Value};
use whitham_core::dispersion::{
    check_assumptions, commutator_scan, verify_m_bound, verify_multiplier_identities, verify_phi_bound,
    verify_phi_symmetries, BoundReport, SymbolSpec,
};
use whitham_core::energy::EnergyReport;
use whitham_core::evolve::evolve;
use whitham_core::pseudoproduct::BilinearKernel;
use whitham_core::scan::{energy_scan, lifespan_scan, quartic_scan};
use whitham_core::spectral::Field;

pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> Result<Vec<String>, Failure> {
    let sym = cfg.symbol.build()?;
    let out = Writer::new(cfg)?;
    match experiment {
        Experiment::VerifySymbol => verify_symbol(&sym, cfg, &out),
        Experiment::IdentityCheck => identity_check(&sym, cfg, &out),
        Experiment::Simulate => simulate(&sym, cfg, &out),
        Experiment::EnergyScan => run_energy_scan(&sym, cfg, &out),
        Experiment::QuarticScan => run_quartic_scan(&sym, cfg, &out),
        Experiment::LifespanScan => run_lifespan_scan(&sym, cfg, &out),
        Experiment::CommutatorScan => run_commutator_scan(&sym, cfg, &out),
    }
}

struct Checks {
    table: Table,
    failed: Vec<String>,
}

impl Checks {
    fn new(name: &str) -> Self {
        Checks { table: Table::new(name, &["check", "value", "threshold", "passed"]), failed: Vec::new() }
    }

    fn add(&mut self, check: &str, value: Option<f64>, threshold: Option<f64>, passed: bool) {
        self.table.push(vec![check.into(), opt_float(value), opt_float(threshold), passed.to_string()]);
        if !passed {
            self.failed.push(check.into());
        }
    }

    /// `value <= threshold`, failing on NaN.
    fn at_most(&mut self, check: &str, value: f64, threshold: f64) {
        self.add(check, Some(value), Some(threshold), value <= threshold);
    }

    fn finish(self, out: &Writer, summary: Value, lines: Vec<String>) -> Result<Vec<String>, Failure> {
        let path = out.table(&self.table, json!({ "failed": self.failed, "details": summary }))?;
        if self.failed.is_empty() {
            let mut lines = lines;
            lines.push(format!("all checks passed, wrote {}", path.display()));
            Ok(lines)
        } else {
            Err(Failure::check(self.failed.join(", ")))
        }
    }
}

fn bound_row(table: &mut Table, sym: &SymbolSpec, r: &BoundReport, refinement: u32) {
    let mut row = vec![
        sym.name.clone(),
        r.model_name.clone(),
        refinement.to_string(),
        float(r.c_min),
        float(r.c_max),
        r.sample_count.to_string(),
    ];
    row.extend(r.worst_point.iter().map(|v| float(*v)));
    table.push(row);
}

fn bound_table(name: &str, point_columns: &[&str]) -> Table {
    let mut header = vec!["symbol", "model_name", "refinement", "c_min", "c_max", "sample_count"];
    header.extend_from_slice(point_columns);
    Table::new(name, &header)
}

fn core<T>(context: &str, r: whitham_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::core(context, e))
}

fn verify_symbol(sym: &SymbolSpec, cfg: &ExperimentConfig, out: &Writer) -> Result<Vec<String>, Failure> {
    let tol = &cfg.tolerances;
    let mut checks = Checks::new("verify_symbol");
    let assumptions = check_assumptions(sym, cfg.seed);
    checks.add("assumptions", Some(assumptions.evenness_residual), None, assumptions.passed);

    let sym_report = core("phi_symmetries", verify_phi_symmetries(sym, cfg.samples, cfg.seed))?;
    checks.at_most("phi_symmetries", sym_report.max_residual, tol.symbol_identity);
    let id = core("multiplier_identities", verify_multiplier_identities(sym, cfg.samples, cfg.seed))?;
    checks.at_most("m_exchange", id.m_exchange, tol.symbol_identity);
    checks.at_most("n_conjugation", id.n_conjugation, tol.symbol_identity);
    checks.at_most("m_phi", id.m_phi, tol.symbol_identity);

    let mut bounds = bound_table("bounds", &["worst_a", "worst_b"]);
    let mut details = json!({ "assumptions": assumptions, "symmetries": sym_report, "identities": id });
    checks.add("admissible", None, None, sym.admissible);
    if sym.admissible {
        let grid = cfg.bound_grid.grid();
        let finer = grid.refined();
        let phi = core("phi_bound", verify_phi_bound(sym, &grid))?;
        let phi2 = core("phi_bound", verify_phi_bound(sym, &finer))?;
        let m = core("m_bound", verify_m_bound(sym, &grid))?;
        let m2 = core("m_bound", verify_m_bound(sym, &finer))?;
        checks.add("phi_bound_two_sided", None, None, phi.is_two_sided() && phi2.is_two_sided());
        checks.at_most("phi_bound_drift", phi.drift(&phi2, true), tol.bound_drift);
        checks.add("m_bound_finite", Some(m.c_max), None, m.c_max.is_finite() && m2.c_max.is_finite());
        checks.at_most("m_bound_drift", m.drift(&m2, false), tol.bound_drift);
        for (r, refinement) in [(&phi, 1), (&phi2, 2), (&m, 1), (&m2, 2)] {
            bound_row(&mut bounds, sym, r, refinement);
        }
        details["bounds"] = json!([phi, phi2, m, m2]);
    }
    out.table(&bounds, json!({}))?;
    let line = format!("{}: {} checks", sym.name, checks.table.len());
    checks.finish(out, details, vec![line])
}

fn identity_check(sym: &SymbolSpec, cfg: &ExperimentConfig, out: &Writer) -> Result<Vec<String>, Failure> {
    if cfg.fields == 0 {
        return Err(Failure::validation("fields must be at least 1"));
    }
    let grid = cfg.grid()?;
    let kernel = BilinearKernel::new(sym, grid);
    let mut table = Table::new("identity_check", &["field", "seed", "order", "identity_residual", "f", "g", "cancellation"]);
    let (mut worst_id, mut worst_c) = (0.0f64, 0.0f64);
    for i in 0..cfg.fields {
        let seed = cfg.seed.wrapping_add(i as u64);
        let u = Field::random(grid, grid.dealias_cutoff(), cfg.decay, seed);
        let residual = core("bilinear_identity", kernel.identity_residual(&u))?;
        worst_id = worst_id.max(residual);
        for k in 1..=cfg.n_max {
            let c = core("cancellation", kernel.highest_order_cancellation(&u, k))?;
            worst_c = worst_c.max(c.relative);
            table.push(vec![i.to_string(), seed.to_string(), k.to_string(), float(residual), float(c.f), float(c.g), float(c.relative)]);
        }
    }
    out.table(&table, json!({ "max_identity_residual": worst_id, "max_cancellation": worst_c }))?;
    let mut checks = Checks::new("identity_summary");
    checks.at_most("bilinear_identity", worst_id, cfg.tolerances.bilinear_identity);
    checks.at_most("cancellation", worst_c, cfg.tolerances.cancellation);
    let line = format!("max identity residual {worst_id:.3e}, max cancellation {worst_c:.3e}");
    checks.finish(out, json!({}), vec![line])
}

fn energy_columns(e: &EnergyReport) -> Vec<String> {
    e.modified.keys().map(|k| format!("E_{k}")).collect()
}

fn simulate(sym: &SymbolSpec, cfg: &ExperimentConfig, out: &Writer) -> Result<Vec<String>, Failure> {
    let u0 = cfg.profile_field()?;
    let tr = core("evolve", evolve(sym, &u0, &cfg.solver, cfg.n_max))?;
    let first = &tr.checkpoints[0].energy;
    let ks = energy_columns(first);

    let mut header: Vec<String> = ["t", "sup_grad", "l2", "tail_fraction"].iter().map(|s| s.to_string()).collect();
    header.extend(ks.iter().cloned());
    header.push("ratio".into());
    let mut traj = Table::with_header("trajectory", header);
    let mut header = vec!["t".to_string()];
    header.extend(ks.iter().cloned());
    header.extend(["total_modified", "h_n_sq", "ratio"].iter().map(|s| s.to_string()));
    let mut energy = Table::with_header("energy", header);

    let mut finite = true;
    for c in &tr.checkpoints {
        let e = &c.energy;
        let mut row = vec![float(c.time), float(c.sup_grad), float(c.l2), float(c.tail_fraction)];
        row.extend(e.modified.values().map(|v| float(*v)));
        row.push(float(e.ratio));
        traj.push(row);
        let mut row = vec![float(c.time)];
        row.extend(e.modified.values().map(|v| float(*v)));
        row.extend([float(e.total_modified), float(e.h_n_sq), float(e.ratio)]);
        energy.push(row);
        finite &= c.sup_grad.is_finite() && c.l2.is_finite() && e.total_modified.is_finite() && e.ratio.is_finite();
    }
    let breakdown = match &tr.breakdown {
        Some(b) => json!({ "time": b.time, "reason": b.reason }),
        None => json!({ "time": null, "reason": null }),
    };
    let summary = json!({ "steps": tr.steps, "breakdown": breakdown, "mean_removed": u0.removed_mean() });
    out.table(&traj, summary.clone())?;
    out.table(&energy, summary)?;
    out.json("breakdown.json", &breakdown)?;

    let mut state = Table::new("final_state", &["x", "u"]);
    for (x, u) in tr.final_state.snapshot() {
        state.push(vec![float(x), float(u)]);
    }
    let t_final = tr.checkpoints.last().map(|c| c.time).unwrap_or(0.0);
    out.table(&state, json!({ "t": t_final }))?;
    let spectrum = tr.final_state.spectrum();
    out.json(
        "final_spectrum.json",
        &json!({
            "t": t_final,
            "k": spectrum.iter().map(|s| s.0).collect::<Vec<_>>(),
            "re": spectrum.iter().map(|s| s.1).collect::<Vec<_>>(),
            "im": spectrum.iter().map(|s| s.2).collect::<Vec<_>>(),
        }),
    )?;
    if !finite {
        return Err(Failure::numerical("trajectory diagnostics are not finite"));
    }
    let status = match &tr.breakdown {
        Some(b) => format!("breakdown ({}) at t = {}", b.reason.as_str(), b.time),
        None => format!("reached t = {t_final} without breakdown"),
    };
    Ok(vec![format!("{} steps, {} checkpoints, {status}", tr.steps, tr.checkpoints.len())])
}

fn require_finite(what: &str, values: impl IntoIterator<Item = f64>) -> Result<(), Failure> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Failure::numerical(format!("{what}: non-finite values in scan")))
    }
}

fn run_energy_scan(sym: &SymbolSpec, cfg: &ExperimentConfig, out: &Writer) -> Result<Vec<String>, Failure> {
    let profile = cfg.profile_field()?;
    let scan = core("energy_scan", energy_scan(sym, &profile, &cfg.amplitudes, cfg.n_max))?;
    let mut t = Table::new("energy_scan", &["epsilon", "ratio", "deviation", "h_n_sq", "cubic_constant", "slope"]);
    for r in &scan.rows {
        t.push(vec![float(r.epsilon), float(r.ratio), float(r.deviation), float(r.h_n_sq), float(r.cubic_constant), opt_float(scan.slope)]);
    }
    out.table(&t, json!({ "slope": scan.slope }))?;
    require_finite("energy_scan", scan.rows.iter().flat_map(|r| [r.ratio, r.h_n_sq, r.cubic_constant]))?;
    if scan.slope.is_none() {
        log::warn!("energy_scan: fewer than two deviations above rounding level, no slope fitted");
    }
    Ok(vec![format!("slope of log|ratio - 1| vs log epsilon: {}", opt_float(scan.slope))])
}

fn run_quartic_scan(sym: &SymbolSpec, cfg: &ExperimentConfig, out: &Writer) -> Result<Vec<String>, Failure> {
    let profile = cfg.profile_field()?;
    let scan = core("quartic_scan", quartic_scan(sym, &profile, &cfg.amplitudes, &cfg.solver, cfg.order))?;
    let mut t = Table::new("quartic_scan", &["epsilon", "order", "max_rate", "max_fd_rate", "fd_mismatch", "exponent"]);
    for r in &scan.rows {
        t.push(vec![
            float(r.epsilon),
            scan.order.to_string(),
            float(r.max_rate),
            float(r.max_fd_rate),
            float(r.fd_mismatch),
            opt_float(scan.exponent),
        ]);
    }
    out.table(&t, json!({ "order": scan.order, "exponent": scan.exponent }))?;
    require_finite("quartic_scan", scan.rows.iter().flat_map(|r| [r.max_rate, r.max_fd_rate, r.fd_mismatch]))?;
    Ok(vec![format!("quartic growth exponent at k = {}: {}", scan.order, opt_float(scan.exponent))])
}

fn run_lifespan_scan(sym: &SymbolSpec, cfg: &ExperimentConfig, out: &Writer) -> Result<Vec<String>, Failure> {
    let profile = cfg.profile_field()?;
    let scan = core("lifespan_scan", lifespan_scan(sym, &profile, &cfg.amplitudes, &cfg.solver, cfg.n_max))?;
    let mut t = Table::new("lifespan_scan", &["epsilon", "time", "censored", "reason", "exponent"]);
    for r in &scan.rows {
        t.push(vec![float(r.epsilon), float(r.time), r.censored.to_string(), r.reason.clone(), opt_float(scan.exponent)]);
    }
    let censored = scan.rows.iter().filter(|r| r.censored).count();
    if scan.exponent.is_none() {
        log::warn!("lifespan_scan: fewer than two uncensored runs, no exponent fitted");
    }
    out.table(&t, json!({ "exponent": scan.exponent, "censored": censored }))?;
    Ok(vec![format!(
        "lifespan exponent: {} ({censored} of {} runs censored)",
        opt_float(scan.exponent),
        scan.rows.len()
    )])
}

fn run_commutator_scan(sym: &SymbolSpec, cfg: &ExperimentConfig, out: &Writer) -> Result<Vec<String>, Failure> {
    let coarse = core("commutator_scan", commutator_scan(sym, &cfg.commutator.samples()?))?;
    let fine = core("commutator_scan", commutator_scan(sym, &cfg.commutator.refined().samples()?))?;
    let mut t = bound_table("commutator", &["worst_xi", "worst_eta", "worst_sigma"]);
    for (r, refinement) in [(&coarse.n_bound, 1), (&fine.n_bound, 2), (&coarse.u_bound, 1), (&fine.u_bound, 2)] {
        bound_row(&mut t, sym, r, refinement);
    }
    out.table(&t, json!({ "skipped": [coarse.skipped, fine.skipped] }))?;
    let mut checks = Checks::new("commutator_checks");
    for (name, a, b) in [("N", &coarse.n_bound, &fine.n_bound), ("U", &coarse.u_bound, &fine.u_bound)] {
        checks.add(&format!("{name}_finite"), Some(a.c_max), None, a.c_max.is_finite() && b.c_max.is_finite());
        checks.at_most(&format!("{name}_drift"), a.drift(b, false), cfg.tolerances.bound_drift);
    }
    let line = format!(
        "{} samples: sup N ratio {:.6e}, sup U ratio {:.6e}",
        coarse.n_bound.sample_count, coarse.n_bound.c_max, coarse.u_bound.c_max
    );
    checks.finish(out, json!({}), vec![line])
}
