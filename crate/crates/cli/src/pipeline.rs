//! One pipeline per subcommand.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nlfp_core::bernstein::{check_hypotheses, default_probe_grid, BernsteinSpec, HypothesisReport};
use nlfp_core::evolution::{
    evolve_with, refinement_study, solve_linearized_fp_with, sup_l1_distance, weak_form_residual_with,
    EvolveOptions, TestFunction, Trajectory,
};
use nlfp_core::particle::{control_budget, metrics_csv, run_mckean, McKeanOptions};
use nlfp_core::solver::{
    check_l1_contraction, check_resolvent_identity, BPreset, BetaPreset, CoefficientSet, ResolventSolver,
};
use nlfp_core::spectral::{write_field, Field};

use crate::config::ScenarioConfig;
use crate::report::{Check, Report, REPORT_VERSION};

/// Replicates of the direct-sampling control for the particle budget.
const CONTROL_REPLICATES: usize = 4;

pub struct Options {
    pub allow_hypothesis_fail: bool,
}

struct Setup {
    config: ScenarioConfig,
    hypotheses: HypothesisReport,
    coeffs: CoefficientSet,
    solver: ResolventSolver,
    u0: Field,
}

pub fn hypotheses_for(spec: &BernsteinSpec) -> Result<HypothesisReport> {
    Ok(check_hypotheses(spec, &default_probe_grid())?)
}

fn prepare(config: ScenarioConfig, opts: &Options, particles: bool) -> Result<Setup> {
    let hypotheses = hypotheses_for(&config.bernstein)?;
    if !opts.allow_hypothesis_fail {
        if !hypotheses.pde_hypotheses_pass() {
            bail!(
                "at `bernstein`: hypothesis check failed for s_lower = {} (in range: {}, lower bound: {}, \
                 sublinear: {}); pass --allow-hypothesis-fail to run anyway",
                hypotheses.s_lower,
                hypotheses.s_lower_in_range,
                hypotheses.lower_bound_pass,
                hypotheses.sublinear_pass
            );
        }
        if particles && !hypotheses.log_moment.is_finite() {
            bail!("at `bernstein.measure`: the particle pipeline needs a finite log-moment of the jump measure");
        }
    }
    let coeffs = CoefficientSet::from_descriptor(config.coefficients.clone(), config.grid)
        .context("at `coefficients`")?;
    let h = config.run.step;
    if !(h > 0.0) || !(config.run.horizon >= 0.0) {
        bail!("at `run`: need step > 0 and horizon >= 0");
    }
    if h >= coeffs.lambda0() {
        bail!(
            "at `run.step`: h = {h} must be below lambda0 = (|(div D)^- + |D||_inf^(1/2) |b|_inf)^(-1) = {} \
             (the step restriction of the resolvent lemma)",
            coeffs.lambda0()
        );
    }
    config.solver.validate().context("at `solver`")?;
    let solver = ResolventSolver::new(&config.bernstein, &coeffs, &config.solver)?;
    let u0 = config.initial.build(config.grid)?;
    Ok(Setup {
        config,
        hypotheses,
        coeffs,
        solver,
        u0,
    })
}

fn new_report(command: &str, setup: &Setup) -> Report {
    let lambda0 = setup.coeffs.lambda0();
    Report {
        version: REPORT_VERSION,
        command: command.into(),
        seed: setup.config.seed,
        grid: Some(setup.config.grid),
        horizon: Some(setup.config.run.horizon),
        step: Some(setup.config.run.step),
        lambda0: lambda0.is_finite().then_some(lambda0),
        gamma: Some(setup.coeffs.gamma()),
        hypotheses: setup.hypotheses.clone(),
        checks: Vec::new(),
        details: Default::default(),
        pass: false,
    }
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn evolve(setup: &Setup, dense: bool, out: &Path) -> Result<Trajectory> {
    let run = &setup.config.run;
    let every = if dense {
        1
    } else {
        run.snapshot_every
            .unwrap_or(EvolveOptions::for_dimension(setup.config.grid.dim()).snapshot_every)
    };
    match evolve_with(&setup.solver, &setup.u0, run.horizon, run.step, &EvolveOptions { snapshot_every: every }) {
        Ok(t) => Ok(t),
        Err(e) => {
            // keep what was computed before the failure
            let _ = e.partial.write(&out.join("trajectory_partial"));
            Err(anyhow::Error::new(e))
        }
    }
}

/// Test function centred on the initial centre of mass, supported in the
/// middle half of the box, switched off over the middle half of `[0, T]`.
fn default_test_function(setup: &Setup) -> TestFunction {
    let grid = setup.config.grid;
    let mass = setup.u0.mass();
    let center: Vec<f64> = (0..grid.dim())
        .map(|a| {
            (0..grid.len())
                .map(|i| setup.u0.values()[i] * grid.point(i)[a])
                .sum::<f64>()
                * grid.cell_volume()
                / mass
        })
        .collect();
    let half = 0.5 * grid.box_length();
    let radius = center.iter().map(|c| half - c.abs()).fold(0.5 * half, f64::min) * 0.9;
    let t = setup.config.run.horizon;
    TestFunction {
        amplitude: 1.0,
        center,
        radius,
        flat_until: 0.25 * t,
        vanish_at: 0.75 * t,
    }
}

fn trajectory_checks(setup: &Setup, traj: &Trajectory, report: &mut Report, out: &Path) -> Result<()> {
    let verify = &setup.config.verify;
    let tol = setup.solver.params().tolerance_for(setup.u0.l1_norm());
    if verify.mass {
        let rel = traj.mass_drift() / setup.u0.mass().abs().max(f64::MIN_POSITIVE);
        report.checks.push(Check::at_most("mass_drift_relative", rel, 1e-8));
    }
    if verify.positivity {
        report.checks.push(Check::at_least("min_value", traj.min_value(), -1e-10));
    }
    if verify.sup_bound {
        let slack = 1.0 + 1e-6 + tol / setup.u0.sup_norm();
        report.checks.push(Check::at_most("sup_growth_ratio", traj.sup_growth_ratio(setup.coeffs.gamma()), slack));
    }
    if verify.weak_form {
        let tf = default_test_function(setup);
        let r = weak_form_residual_with(setup.solver.operator(), traj, &tf, &setup.coeffs)?;
        let scale = Field::from_fn(setup.config.grid, |x| tf.space_profile(x)).inner(&setup.u0).abs();
        // first-order consistency: defect of order h relative to <φ(0), u0>
        report.checks.push(Check::at_most("weak_form_relative", r.abs() / scale, 10.0 * setup.config.run.step));
        report.detail("weak_form_test_function", &tf)?;
    }
    if verify.linearized {
        let run = &setup.config.run;
        let fine = evolve_with(
            &setup.solver,
            &setup.u0,
            run.horizon,
            0.5 * run.step,
            &EvolveOptions { snapshot_every: 2 },
        )?;
        let step_error = sup_l1_distance(traj, &fine)?;
        let v = solve_linearized_fp_with(&setup.solver, traj, &setup.u0)?;
        let dist = sup_l1_distance(traj, &v)?;
        report.checks.push(Check::at_most("linearized_sup_l1", dist, 5.0 * step_error));
        report.detail("step_error_h_vs_half_h", step_error)?;
        v.write(&out.join("linearized"))?;
    }
    Ok(())
}

fn particle_checks(setup: &Setup, traj: Option<&Trajectory>, report: &mut Report, out: &Path) -> Result<()> {
    let run = &setup.config.run;
    let options = McKeanOptions {
        particles: run.particles,
        seed: setup.config.seed,
        mode: run.mode,
        bandwidth: run.bandwidth,
        allow_hypothesis_fail: true,
    };
    let (mck, ens) = run_mckean(
        &setup.u0,
        traj,
        run.horizon,
        run.step,
        &setup.coeffs,
        &setup.config.bernstein,
        &options,
    )?;
    write_text(out, "metrics.csv", &metrics_csv(&mck.metrics))?;
    ens.write_checkpoint(&out.join("particles"))?;
    if let (Some(traj), Some(last)) = (traj, mck.final_metrics()) {
        let control = control_budget(
            traj.last(),
            run.particles,
            mck.final_bandwidth,
            CONTROL_REPLICATES,
            setup.config.seed.wrapping_add(1),
        )?;
        if setup.config.verify.particle_marginals {
            report.checks.push(Check::at_most("particle_final_l1", last.l1, 1.5 * control.budget));
        }
        report.detail("particle_control", &control)?;
        report.detail("particle_final", last)?;
    }
    report.detail("particle_mode", mck.mode)?;
    report.detail("particle_final_bandwidth", mck.final_bandwidth)?;
    Ok(())
}

pub fn run(config: ScenarioConfig, out: &Path, opts: &Options) -> Result<Report> {
    let particles = config.run.particles > 0;
    let setup = prepare(config, opts, particles)?;
    let mut report = new_report("run", &setup);
    let v = &setup.config.verify;
    let dense = v.weak_form || v.linearized || (particles && setup.config.run.mode == nlfp_core::particle::CouplingMode::PdeCoupled);
    fs::create_dir_all(out)?;
    write_field(&setup.u0, &out.join("initial"))?;
    let traj = evolve(&setup, dense, out)?;
    traj.write(&out.join("trajectory"))?;
    write_text(out, "ledger.csv", &nlfp_core::evolution::ledger_csv(traj.ledger()))?;
    trajectory_checks(&setup, &traj, &mut report, out)?;
    if v.contraction || v.resolvent_identity {
        resolvent_checks(&setup, &mut report)?;
    }
    if particles {
        particle_checks(&setup, Some(&traj), &mut report, out)?;
    }
    report.finish();
    Ok(report)
}

/// Second input for the contraction check: the initial density rolled by
/// `n/16` cells along the first axis.
fn rolled(u: &Field) -> Field {
    let grid = *u.grid();
    let n = grid.points_per_axis();
    let shift = (n / 16).max(1);
    let stride = grid.stride(0);
    let values = (0..grid.len())
        .map(|i| {
            let pos = (i / stride) % n;
            let src = i - pos * stride + ((pos + n - shift) % n) * stride;
            u.values()[src]
        })
        .collect();
    Field::new(grid, values).expect("same grid")
}

fn resolvent_checks(setup: &Setup, report: &mut Report) -> Result<()> {
    let h = setup.config.run.step;
    let lambda0 = setup.coeffs.lambda0();
    let f1 = &setup.u0;
    let f2 = rolled(f1);
    let verify = &setup.config.verify;
    if verify.contraction {
        let c = check_l1_contraction(&setup.solver, f1, &f2, h)?;
        report.checks.push(Check::at_least("contraction_margin", c.margin, -2.0 * c.tol));
        report.detail("contraction", &c)?;
    }
    if verify.resolvent_identity {
        let (l1, l2) = if 2.0 * h < lambda0 { (h, 2.0 * h) } else { (0.5 * h, h) };
        let id = check_resolvent_identity(&setup.solver, f1, l1, l2)?;
        report.checks.push(Check::at_most("resolvent_identity", id.discrepancy, 5.0 * id.tol));
        report.detail("resolvent_identity", &id)?;
    }
    Ok(())
}

pub fn resolvent_test(mut config: ScenarioConfig, out: &Path, opts: &Options) -> Result<Report> {
    config.verify.contraction = true;
    config.verify.resolvent_identity = true;
    let setup = prepare(config, opts, false)?;
    let mut report = new_report("resolvent-test", &setup);
    resolvent_checks(&setup, &mut report)?;
    let h = setup.config.run.step;
    let (y, solve) = setup.solver.solve(&setup.u0, h)?;
    let f = &setup.u0;
    report.checks.push(Check::at_most(
        "resolvent_mass_relative",
        (y.mass() - f.mass()).abs() / f.mass().abs().max(f64::MIN_POSITIVE),
        1e-8,
    ));
    report.checks.push(Check::at_least("resolvent_min_value", y.min(), -1e-10));
    report.checks.push(Check::at_most(
        "resolvent_sup",
        y.sup_norm(),
        setup.coeffs.gamma() * f.sup_norm() + solve.tol,
    ));
    report.checks.push(Check::at_most("resolvent_residual", solve.residual, solve.tol));
    report.detail("solver", &solve)?;
    fs::create_dir_all(out)?;
    write_field(&y, &out.join("resolvent"))?;
    report.finish();
    Ok(report)
}

pub fn particle_only(mut config: ScenarioConfig, out: &Path, opts: &Options) -> Result<Report> {
    if config.run.particles == 0 {
        bail!("at `run.particles`: particle-only needs at least one particle");
    }
    config.verify.particle_marginals = true;
    let setup = prepare(config, opts, true)?;
    let mut report = new_report("particle-only", &setup);
    fs::create_dir_all(out)?;
    let traj = evolve(&setup, true, out)?;
    particle_checks(&setup, Some(&traj), &mut report, out)?;
    report.finish();
    Ok(report)
}

pub fn convergence(config: ScenarioConfig, out: &Path, opts: &Options) -> Result<Report> {
    let setup = prepare(config, opts, false)?;
    let mut report = new_report("convergence", &setup);
    let h = setup.config.run.step;
    let h_list = setup.config.run.refinement.clone().unwrap_or_else(|| vec![4.0 * h, 2.0 * h, h]);
    if h_list.iter().any(|&s| s >= setup.coeffs.lambda0()) {
        bail!("at `run.refinement`: every step must be below lambda0 = {}", setup.coeffs.lambda0());
    }
    let desc = setup.coeffs.descriptor();
    let linear = desc.beta == BetaPreset::Linear && desc.b == BPreset::Zero;
    let op = setup.solver.operator().clone();
    let u0 = setup.u0.clone();
    let exact = move |t: f64| Field::new(*u0.grid(), op.apply_fn(u0.values(), |psi| (-t * psi).exp())).expect("grid");
    let exact_ref: Option<&dyn Fn(f64) -> Field> = if linear { Some(&exact) } else { None };
    let study = refinement_study(&setup.solver, &setup.u0, setup.config.run.horizon, &h_list, exact_ref)?;
    if study.pairs.len() >= 2 {
        report.checks.push(Check::holds("cauchy_decreasing", study.cauchy_decreasing));
    }
    if let Some(orders) = &study.orders_vs_exact {
        let worst = orders.iter().copied().fold(f64::INFINITY, f64::min);
        report.checks.push(Check::at_least("order_vs_exact", worst, 0.8));
    } else if let Some(&o) = study.empirical_orders.first() {
        report.detail("empirical_order_note", "self-convergence order; informational outside the linear case")?;
        report.detail("empirical_order", o)?;
    }
    let mut csv = String::from("h_coarse,h_fine,distance\n");
    for p in &study.pairs {
        csv.push_str(&format!("{},{},{:e}\n", p.h_coarse, p.h_fine, p.distance));
    }
    write_text(out, "convergence.csv", &csv)?;
    report.detail("refinement", &study)?;
    report.finish();
    Ok(report)
}

pub fn check_spec(spec: &BernsteinSpec, opts: &Options) -> Result<Report> {
    let hypotheses = hypotheses_for(spec)?;
    let mut report = Report {
        version: REPORT_VERSION,
        command: "check-spec".into(),
        seed: 0,
        grid: None,
        horizon: None,
        step: None,
        lambda0: None,
        gamma: None,
        hypotheses: hypotheses.clone(),
        checks: Vec::new(),
        details: Default::default(),
        pass: false,
    };
    report.checks.push(Check::holds("s_lower_in_range", hypotheses.s_lower_in_range));
    report.checks.push(Check::at_least(
        "lower_bound_min_ratio",
        hypotheses.lower_bound_min_ratio,
        hypotheses.c_lower * (1.0 - 1e-12),
    ));
    report.checks.push(Check::at_most("sublinear_max_ratio", hypotheses.sublinear_max_ratio, 1.0 + 1e-12));
    report.checks.push(Check::holds("log_moment_finite", hypotheses.log_moment.is_finite()));
    if opts.allow_hypothesis_fail {
        report.detail("allow_hypothesis_fail", true)?;
    }
    report.finish();
    Ok(report)
}
