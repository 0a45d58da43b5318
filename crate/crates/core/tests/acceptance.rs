//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the summary is always printed.

use std::time::Instant;

use nlfp_core::bernstein::{Atom, BernsteinSpec, MeasureDescriptor, SubordinatorSampler};
use nlfp_core::evolution::{
    evolve_with, refinement_study, solve_linearized_fp_with, sup_l1_distance, EvolveOptions, Trajectory,
};
use nlfp_core::particle::{
    control_budget, init_ensemble, run_mckean, step_ensemble, CouplingMode, McKeanOptions,
};
use nlfp_core::solver::{
    check_l1_contraction, check_resolvent_identity, BPreset, BetaPreset, CoefficientSet, DriftPreset,
    ResolventSolver, SolverParams,
};
use nlfp_core::spectral::{subordination_kernel_with, Field, Grid, KernelRoute};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn normalized(f: Field) -> Field {
    let m = f.mass();
    f.map(|v| v / m)
}

fn bump(grid: Grid, center: &[f64], width: f64) -> Field {
    normalized(Field::from_fn(grid, |x| {
        (-x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum::<f64>() / (2.0 * width * width)).exp()
    }))
}

fn fractional() -> BernsteinSpec {
    BernsteinSpec::fractional(0.75).unwrap()
}

fn grid_1d() -> Grid {
    Grid::new(1, 1024, 40.0).unwrap()
}

/// `β(r) = r + r²/(1+r)`, `b ≡ 1`, `D = -tanh`.
fn benchmark_1d() -> (ResolventSolver, Field) {
    let g = grid_1d();
    let coeffs = CoefficientSet::new(
        BetaPreset::Rational,
        BPreset::Constant { value: 1.0 },
        DriftPreset::ConfiningTanh { strength: 1.0 },
        g,
    )
    .unwrap();
    let solver = ResolventSolver::new(&fractional(), &coeffs, &SolverParams::default()).unwrap();
    (solver, bump(g, &[1.0], 1.0))
}

fn linear_1d() -> (ResolventSolver, Field) {
    let g = grid_1d();
    let coeffs = CoefficientSet::new(BetaPreset::Linear, BPreset::Zero, DriftPreset::Zero, g).unwrap();
    let solver = ResolventSolver::new(&fractional(), &coeffs, &SolverParams::default()).unwrap();
    (solver, bump(g, &[0.0], 1.0))
}

fn exact_linear(solver: &ResolventSolver, u0: &Field, t: f64) -> Field {
    Field::new(*u0.grid(), solver.operator().apply_fn(u0.values(), |psi| (-t * psi).exp())).unwrap()
}

fn linear_heat_oracle() -> Outcome {
    let (solver, u0) = linear_1d();
    let start = Instant::now();
    let traj = evolve_with(&solver, &u0, 0.5, 1e-3, &EvolveOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let err = traj.last().l1_distance(&exact_linear(&solver, &u0, 0.5));
    Outcome {
        pass: err <= 5e-3 && secs < 10.0,
        detail: format!("L1 error {err:.3e} (<= 5e-3), runtime {secs:.2}s (< 10s)"),
    }
}

fn random_density(grid: Grid, rng: &mut ChaCha8Rng) -> Field {
    let bumps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| (rng.random_range(0.1..1.0), rng.random_range(-8.0..8.0), rng.random_range(0.5..2.0)))
        .collect();
    Field::from_fn(grid, |x| {
        bumps.iter().map(|(a, c, w)| a * (-(x[0] - c).powi(2) / (2.0 * w * w)).exp()).sum()
    })
}

fn resolvent_properties() -> Outcome {
    let g = grid_1d();
    let coeffs = CoefficientSet::new(
        BetaPreset::ArctanPlus,
        BPreset::Constant { value: 1.0 },
        DriftPreset::ConfiningTanh { strength: 1.0 },
        g,
    )
    .unwrap();
    let gamma = coeffs.gamma();
    let solver = ResolventSolver::new(&fractional(), &coeffs, &SolverParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let (mut worst_margin, mut worst_identity, mut worst_mass, mut worst_min, mut worst_sup) =
        (f64::INFINITY, 0.0f64, 0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    let mut pass = true;
    for _ in 0..20 {
        let f1 = random_density(g, &mut rng);
        let f2 = random_density(g, &mut rng);
        let lambda = rng.random_range(1e-3..0.5);
        let c = check_l1_contraction(&solver, &f1, &f2, lambda).unwrap();
        pass &= c.pass;
        worst_margin = worst_margin.min(c.margin / c.tol);
        let id = check_resolvent_identity(&solver, &f1, lambda * rng.random_range(0.2..0.9), lambda).unwrap();
        pass &= id.pass;
        worst_identity = worst_identity.max(id.discrepancy / id.tol);
        for f in [&f1, &f2] {
            let (y, rep) = solver.solve(f, lambda).unwrap();
            let mass = (y.mass() - f.mass()).abs() / f.mass();
            let slack = y.sup_norm() - (gamma * f.sup_norm() + rep.tol);
            pass &= mass <= 1e-8 && y.min() >= -1e-10 && slack <= 0.0;
            worst_mass = worst_mass.max(mass);
            worst_min = worst_min.min(y.min());
            worst_sup = worst_sup.max(slack);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    Outcome {
        pass,
        detail: format!(
            "min margin/tol {worst_margin:.2} (>= -2), max identity/tol {worst_identity:.2} (<= 5), \
             max rel mass {worst_mass:.1e}, min value {worst_min:.1e}, max sup excess {worst_sup:.2e}, {secs:.1}s"
        ),
    }
}

fn evolution_invariants() -> Outcome {
    let g = Grid::new(2, 256, 20.0).unwrap();
    let coeffs = CoefficientSet::new(
        BetaPreset::SignedSquareClipped { radius: 4.0 },
        BPreset::Constant { value: 1.0 },
        DriftPreset::Rotation { omega: 1.0, sigma: 2.0 },
        g,
    )
    .unwrap();
    let solver = ResolventSolver::new(&fractional(), &coeffs, &SolverParams::default()).unwrap();
    let u0 = bump(g, &[1.5, 0.0], 1.0);
    let opts = EvolveOptions { snapshot_every: 10 };
    let full = evolve_with(&solver, &u0, 1.0, 1e-2, &opts).unwrap();
    let gamma = coeffs.gamma();
    let mass = full.mass_drift();
    let min = full.min_value();
    let growth = full.sup_growth_ratio(gamma);

    // restart from u(1/2) and compare at T = 1
    let half: &Field = full.state_at_step(50).unwrap();
    let second = evolve_with(&solver, half, 0.5, 1e-2, &opts).unwrap();
    let semigroup = second.last().l1_distance(full.last());

    let study = refinement_study(&solver, &u0, 1.0, &[4e-2, 2e-2, 1e-2], None).unwrap();
    let one_run_error = study.pairs.last().unwrap().distance;

    let (lin, v0) = linear_1d();
    let exact = |t: f64| exact_linear(&lin, &v0, t);
    let lin_study = refinement_study(&lin, &v0, 0.4, &[4e-2, 2e-2, 1e-2], Some(&exact)).unwrap();
    let order = lin_study.empirical_orders[0];

    let pass = mass <= 1e-8
        && min >= -1e-10
        && growth <= 1.0 + 1e-6
        && semigroup <= 2.0 * one_run_error
        && study.cauchy_decreasing
        && lin_study.cauchy_decreasing
        && order >= 0.8;
    Outcome {
        pass,
        detail: format!(
            "mass drift {mass:.1e}, min {min:.1e}, sup ratio {growth:.6}, semigroup {semigroup:.1e} vs one-run \
             error {one_run_error:.2e}, Cauchy {:?}, linear order {order:.3}",
            study.pairs.iter().map(|p| p.distance).collect::<Vec<_>>()
        ),
    }
}

fn linearized_cross_check() -> Outcome {
    let (solver, u0) = benchmark_1d();
    let coarse = evolve_with(&solver, &u0, 0.5, 1e-2, &EvolveOptions::default()).unwrap();
    let fine = evolve_with(&solver, &u0, 0.5, 5e-3, &EvolveOptions { snapshot_every: 2 }).unwrap();
    let step_error = sup_l1_distance(&coarse, &fine).unwrap();
    let v = solve_linearized_fp_with(&solver, &coarse, &u0).unwrap();
    let dist = sup_l1_distance(&coarse, &v).unwrap();
    Outcome {
        pass: dist <= 5.0 * step_error,
        detail: format!("sup_t L1(v, u) {dist:.2e} vs 5 x step error {:.2e}", 5.0 * step_error),
    }
}

fn kernel_checks() -> Outcome {
    let eps = 1.0;
    let spec = fractional();
    let mut worst_norm = 0.0f64;
    let mut worst_route = 0.0f64;
    for g in [grid_1d(), Grid::new(2, 256, 20.0).unwrap()] {
        let q = subordination_kernel_with(&spec, eps, g, KernelRoute::Quadrature).unwrap();
        let r = subordination_kernel_with(&spec, eps, g, KernelRoute::ResolventOfDelta).unwrap();
        worst_norm = worst_norm.max((eps * q.mass() - 1.0).abs());
        worst_route = worst_route.max(q.l1_distance(&r));
    }
    Outcome {
        pass: worst_norm <= 1e-3 && worst_route <= 1e-4,
        detail: format!("|eps * mass - 1| {worst_norm:.2e} (<= 1e-3), route L1 gap {worst_route:.2e} (<= 1e-4)"),
    }
}

fn sampler_panel() -> Outcome {
    let specs = [
        ("FractionalPower{0.5}", BernsteinSpec::fractional(0.5).unwrap()),
        ("FractionalPower{0.75}", fractional()),
        (
            "AtomicMix",
            BernsteinSpec::new(
                MeasureDescriptor::AtomicMix {
                    atoms: vec![Atom { t: 0.3, w: 2.0 }, Atom { t: 1.5, w: 0.7 }, Atom { t: 6.0, w: 0.2 }],
                },
                0.75,
                0.1,
            )
            .unwrap(),
        ),
    ];
    let panel = [(0.1, 1.0), (0.1, 10.0), (0.5, 5.0), (1.0, 0.5), (1.0, 2.0), (5.0, 0.2)];
    let n = 100_000;
    let mut worst = 0.0f64;
    for (i, (_, spec)) in specs.iter().enumerate() {
        let sampler = SubordinatorSampler::new(spec);
        for (j, &(t, lambda)) in panel.iter().enumerate() {
            let mut rng = nlfp_core::random::stream(77, (i * 16 + j) as u64);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let v = (-lambda * sampler.sample(t, &mut rng)).exp();
                s += v;
                s2 += v * v;
            }
            let mean = s / n as f64;
            let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt().max(1e-300);
            let exact = (-t * spec.eval_psi(lambda).unwrap()).exp();
            worst = worst.max((mean - exact).abs() / se);
        }
    }
    Outcome {
        pass: worst <= 3.0,
        detail: format!("worst |mean - exp(-t Psi)| / SE = {worst:.2} (<= 3) over 3 x 6 panel points"),
    }
}

fn superposition() -> Outcome {
    let (solver, u0) = benchmark_1d();
    let start = Instant::now();
    let traj: Trajectory = evolve_with(&solver, &u0, 0.5, 1e-2, &EvolveOptions::default()).unwrap();
    let n = 100_000;
    let opts = McKeanOptions {
        particles: n,
        seed: 20,
        mode: CouplingMode::PdeCoupled,
        bandwidth: None,
        allow_hypothesis_fail: false,
    };
    let (rep, _) = run_mckean(&u0, Some(&traj), 0.5, 1e-2, solver.coefficients(), &fractional(), &opts).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let last = rep.final_metrics().unwrap();
    let control = control_budget(traj.last(), n, rep.final_bandwidth, 8, 21).unwrap();
    Outcome {
        pass: last.l1 <= 1.5 * control.budget && secs < 300.0,
        detail: format!(
            "final L1 {:.3e} vs 1.5 x control budget {:.3e} (bandwidth {:.3}), W1 {:.2e}, {secs:.1}s",
            last.l1,
            1.5 * control.budget,
            rep.final_bandwidth,
            last.w1[0]
        ),
    }
}

fn characteristic_function() -> Outcome {
    let g = Grid::new(1, 256, 40.0).unwrap();
    let velocity = 0.5;
    let coeffs = CoefficientSet::new(
        BetaPreset::Linear,
        BPreset::Constant { value: 1.0 },
        DriftPreset::Constant { velocity: vec![velocity] },
        g,
    )
    .unwrap();
    let spec = fractional();
    let sampler = SubordinatorSampler::new(&spec);
    let u = bump(g, &[0.0], 2.0);
    let n = 100_000;
    let h = 0.1;
    let mut ens = init_ensemble(&u, n, 31).unwrap();
    let before = ens.positions().to_vec();
    step_ensemble(&mut ens, &u, h, &coeffs, &sampler, true).unwrap();
    let mut worst = 0.0f64;
    for k in [0.5f64, 1.0, 2.0] {
        let (mut re, mut im, mut re2, mut im2) = (0.0, 0.0, 0.0, 0.0);
        for (a, b) in before.iter().zip(ens.positions()) {
            let (s, c) = (k * (b - a)).sin_cos();
            re += c;
            im += s;
            re2 += c * c;
            im2 += s * s;
        }
        let nf = n as f64;
        let (re, im) = (re / nf, im / nf);
        let (se_re, se_im) = (((re2 / nf - re * re) / nf).sqrt(), ((im2 / nf - im * im) / nf).sqrt());
        let modulus = (-h * spec.eval_psi(k * k).unwrap()).exp();
        let phase = k * h * velocity;
        worst = worst
            .max((re - modulus * phase.cos()).abs() / se_re)
            .max((im - modulus * phase.sin()).abs() / se_im);
    }
    Outcome {
        pass: worst <= 3.0,
        detail: format!("worst CF deviation {worst:.2} SE (<= 3) at k in {{0.5, 1, 2}}"),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("linear fractional heat oracle", linear_heat_oracle),
        ("resolvent contraction, identity, mass, positivity, sup bound", resolvent_properties),
        ("evolution invariants, semigroup, self-convergence", evolution_invariants),
        ("linearized equation reproduces the nonlinear trajectory", linearized_cross_check),
        ("subordination kernel normalization and routes", kernel_checks),
        ("subordinator sampler Laplace transforms", sampler_panel),
        ("particle marginals match the PDE", superposition),
        ("one-step characteristic function", characteristic_function),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} [{verdict}] {name}: {} ({:.1}s)",
            i + 1,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!outcome.pass);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
