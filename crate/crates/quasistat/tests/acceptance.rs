//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with the measured quantities.
//!
//! Criterion 1 is known-red. Its two clauses are mutually inconsistent at
//! the shipped coupling constants: the slowest population mode of
//! lambda^2 L_R has rate ~1/412, so the populations cannot return to the
//! Gibbs values within 120 time units of pump shutoff, and speeding the
//! rates up enough to make that window (x19) suppresses the relative pump
//! weight in the balance condition (x361), destroying the inversion the
//! same criterion requires. The pump ripple also crosses the few-permille
//! d1 - d4 margin before t ~ 112. The test asserts the criterion verbatim
//! and reports the measured values.

use std::time::Instant;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quasistat::dynamics::{
    integrate_master, integrate_pauli, integrate_premaster, period_average, population_distance,
    state_distance, TimeGrid,
};
use quasistat::einstein::{bb_check, einstein_a, einstein_table, fluxes};
use quasistat::howland::{lambda_compression_error, semigroup_compare, spectral_report};
use quasistat::io::{trajectory_csv, ScenarioFile};
use quasistat::lindblad::{build_jumps, Generators, SuperOperator};
use quasistat::linalg::{eye, max_abs};
use quasistat::model::{gibbs_state, populations, Scenario};
use quasistat::scenarios::{
    diagonal_q_scenario, four_level_scenario, four_level_scenario_with, random_scenario,
    spohn_worked_scenario, with_beta, with_eta,
};
use quasistat::steady::{balance_solve, pump_operator, PumpMethod};
use quasistat::verify::{
    b_positivity_condition, positivity_counterexample, gkls_check, spohn_irreducibility, Witness,
};

struct Criterion {
    name: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: &str) {
        if !ok {
            self.failures.push(what.to_string());
        }
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    fn finish(self) {
        let verdict = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!(
            "criterion {}: {} [{}]{}",
            self.name,
            verdict,
            self.notes.join("; "),
            if self.failures.is_empty() {
                String::new()
            } else {
                format!(" failures: {}", self.failures.join(" | "))
            }
        );
        assert!(
            self.failures.is_empty(),
            "criterion {} failed: {}",
            self.name,
            self.failures.join(" | ")
        );
    }
}

fn four_level_with_generators() -> (Scenario, Generators) {
    let s = four_level_scenario();
    let gens = Generators::build(&s).expect("four-level generators");
    (s, gens)
}

#[test]
fn criterion_01_inversion_and_pump_off_relaxation() {
    let mut c = Criterion::new("1 (inversion + pump-off relaxation)");
    let start = Instant::now();
    let (s, gens) = four_level_with_generators();
    let rho0 = s.initial_state().unwrap();
    let traj = integrate_master(&s, &gens, &rho0, TimeGrid::new(300.0, s.run.dt)).unwrap();
    let pops = traj.populations(&s.atom);
    let mut min_margin = f64::INFINITY;
    let mut ordered = true;
    for (i, &t) in traj.times.iter().enumerate() {
        if !(100.0..=180.0).contains(&t) {
            continue;
        }
        let p = &pops[i];
        let m = (p[2] - p[0]).min(p[0] - p[3]).min(p[3] - p[1]);
        min_margin = min_margin.min(m);
        if m <= 0.0 {
            ordered = false;
        }
    }
    c.note(format!("min ordering margin on [100,180] = {min_margin:.2e}"));
    c.check(
        ordered,
        &format!("d3 > d1 > d4 > d2 violated on [100, 180] (min margin {min_margin:.2e})"),
    );
    let rho_g = gibbs_state(&s.atom, s.coupling.beta);
    let pg = populations(rho_g.matrix(), &s.atom);
    let p_end = populations(traj.final_state().matrix(), &s.atom);
    let dist = p_end
        .iter()
        .zip(pg.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    c.note(format!("|pop(300) - pop(gibbs)| = {dist:.3e}"));
    c.check(
        dist <= 1e-3,
        &format!(
            "pump-off relaxation reaches only {dist:.3e} by t = 300; the slowest population \
             mode of lambda^2 L_R at the shipped rates is ~1/412 (see the file header)"
        ),
    );
    let secs = start.elapsed().as_secs_f64();
    c.note(format!("runtime {secs:.1}s"));
    c.check(secs <= 10.0, &format!("runtime {secs:.1}s > 10s"));
    c.finish();
}

#[test]
fn criterion_02_premaster_matches_averaged_master() {
    let mut c = Criterion::new("2 (averaged master vs pre-master)");
    let start = Instant::now();
    let (mut s, _) = four_level_with_generators();
    s.run.pump_off_time = None;
    let gens = Generators::build(&s).unwrap();
    let rho0 = s.initial_state().unwrap();
    let period = 2.0 * std::f64::consts::PI / s.pump.omega;
    let master = integrate_master(
        &s,
        &gens,
        &rho0,
        TimeGrid::new(180.0 + period, s.run.dt),
    )
    .unwrap();
    let averaged = period_average(&master, s.pump.omega).unwrap();
    let pm = integrate_premaster(
        &s,
        &gens,
        &rho0,
        TimeGrid::new(180.0 + period, s.run.dt * 10.0),
    )
    .unwrap();
    let dist = population_distance(&averaged, &pm, &s.atom, period / 2.0, 180.0);
    c.note(format!("sup population distance = {dist:.4}"));
    c.check(dist <= 0.02, &format!("distance {dist:.4} > 0.02"));
    let secs = start.elapsed().as_secs_f64();
    c.note(format!("runtime {secs:.1}s"));
    c.check(secs <= 30.0, &format!("runtime {secs:.1}s > 30s"));
    c.finish();
}

#[test]
fn criterion_03_rabi_oscillations() {
    let mut c = Criterion::new("3 (undamped Rabi oscillations)");
    let mut s = four_level_scenario_with(0.0, 0.385 * 0.385, 0.5);
    s.run.pump_off_time = None;
    let gens = Generators::build(&s).unwrap();
    let rho0 = s.initial_state().unwrap();
    let traj = integrate_master(&s, &gens, &rho0, TimeGrid::new(300.0, s.run.dt)).unwrap();
    let pops = traj.populations(&s.atom);
    let p1: Vec<f64> = pops.iter().map(|p| p[0]).collect();
    let mut sign_changes = 0usize;
    for w in p1.windows(3) {
        if (w[1] - w[0]) * (w[2] - w[1]) < 0.0 {
            sign_changes += 1;
        }
    }
    c.note(format!("{sign_changes} derivative sign changes"));
    c.check(sign_changes >= 20, &format!("only {sign_changes} sign changes"));
    let trace_dev = traj.max_trace_dev();
    c.note(format!("max trace deviation {trace_dev:.2e}"));
    c.check(trace_dev <= 1e-10, &format!("trace deviation {trace_dev:.2e}"));
    let rho_g = gibbs_state(&s.atom, s.coupling.beta);
    let dist = state_distance(traj.final_state(), &rho_g);
    c.note(format!("distance from Gibbs at 300 = {dist:.3}"));
    c.check(dist >= 0.05, &format!("converged to Gibbs unexpectedly ({dist:.3})"));
    c.finish();
}

#[test]
fn criterion_04_inversion_grows_with_beta() {
    let mut c = Criterion::new("4 (inversion vs inverse temperature)");
    let (s, _) = four_level_with_generators();
    let n = 12;
    let (lo, hi): (f64, f64) = (0.2, 20.0);
    let mut last = f64::NEG_INFINITY;
    let mut monotone = true;
    let mut values = Vec::new();
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        let beta = (lo.ln() + t * (hi.ln() - lo.ln())).exp();
        let sb = with_beta(&s, beta).unwrap();
        let gens = Generators::build(&sb).unwrap();
        let report = balance_solve(&sb, &gens).unwrap();
        let p = populations(report.rho_infty.matrix(), &sb.atom);
        let inversion = p[2] - p[1];
        if inversion < last - 1e-12 {
            monotone = false;
        }
        last = inversion;
        values.push(inversion);
    }
    c.note(format!(
        "d3 - d2 from beta 0.2 to 20: {:.4} .. {:.4}",
        values.first().unwrap(),
        values.last().unwrap()
    ));
    c.check(monotone, &format!("inversion not monotone: {values:?}"));
    c.finish();
}

#[test]
fn criterion_05_balance_consistency() {
    let mut c = Criterion::new("5 (balance condition consistency)");
    let (mut s, _) = four_level_with_generators();
    s.run.pump_off_time = None;
    let gens = Generators::build(&s).unwrap();
    let report = balance_solve(&s, &gens).unwrap();
    c.note(format!("kernel dim {}", report.kernel_dim));
    c.check(report.kernel_dim == 1, "kernel dimension != 1");
    let projected = quasistat::model::block_diag_project(
        report.rho_tilde_infty.matrix(),
        &s.atom,
    );
    let d1 = max_abs(&(&projected - report.rho_infty.matrix()));
    c.note(format!("|P_D ker(Lambda~) - rho_inf| = {d1:.2e}"));
    c.check(d1 <= 1e-8, &format!("projection mismatch {d1:.2e}"));
    let rho0 = s.initial_state().unwrap();
    let pauli = integrate_pauli(&s, &gens, &rho0, TimeGrid::with_stride(10_000.0, 1.0, 100000))
        .unwrap();
    let d2 = state_distance(pauli.final_state(), &report.rho_infty);
    c.note(format!("|pauli(1e4) - rho_inf| = {d2:.2e}"));
    c.check(d2 <= 1e-8, &format!("Pauli end state off by {d2:.2e}"));
    c.finish();
}

#[test]
fn criterion_06_detailed_balance_on_random_scenarios() {
    let mut c = Criterion::new("6 (detailed balance on 20 random scenarios)");
    let mut rng = ChaCha8Rng::seed_from_u64(20260810);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let d = 3 + (i % 3);
        let s = random_scenario(&mut rng, d);
        let gens = Generators::build(&s).unwrap();
        let rho_g = gibbs_state(&s.atom, s.coupling.beta);
        let resid = max_abs(&gens.reservoir.apply(rho_g.matrix()));
        worst = worst.max(resid);
    }
    c.note(format!("worst |L_R(rho_g)| = {worst:.2e}"));
    c.check(worst <= 1e-10, &format!("detailed balance residual {worst:.2e}"));
    c.finish();
}

#[test]
fn criterion_07_pump_operator_identities() {
    let mut c = Criterion::new("7 (pump operator identities)");
    let (s, gens) = four_level_with_generators();
    let closed = pump_operator(&s, &gens, PumpMethod::ClosedForm).unwrap();
    let laplace = pump_operator(&s, &gens, PumpMethod::Laplace).unwrap();
    let d_methods = max_abs(&(&closed.on_diag - &laplace.on_diag));
    c.note(format!("closed vs Laplace {d_methods:.2e}"));
    c.check(d_methods <= 1e-10, &format!("methods differ by {d_methods:.2e}"));

    let mut s2 = s.clone();
    s2.lambda *= 2.0;
    let gens2 = Generators::build(&s2).unwrap();
    let closed2 = pump_operator(&s2, &gens2, PumpMethod::ClosedForm).unwrap();
    let d_lambda = max_abs(&(&closed.on_diag - &closed2.on_diag));
    c.note(format!("lambda independence {d_lambda:.2e}"));
    c.check(d_lambda <= 1e-12, &format!("lambda dependence {d_lambda:.2e}"));

    let table = einstein_table(&s, &gens).unwrap();
    let m_d = table.a_generator.nrows();
    let mut b_sum: Array2<C64> = Array2::zeros((m_d, m_d));
    let n = table.level_count();
    for j in 0..n {
        let rj = table.blocks.level_range(j, &table.degeneracies);
        for k in 0..n {
            let rk = table.blocks.level_range(k, &table.degeneracies);
            b_sum
                .slice_mut(ndarray::s![rj.clone(), rk.clone()])
                .assign(&table.b_raw[j][k]);
        }
    }
    let d_sum = max_abs(&(&b_sum - &closed.on_diag));
    c.note(format!("B-block reassembly {d_sum:.2e}"));
    c.check(d_sum <= 1e-10, &format!("B blocks reassemble with error {d_sum:.2e}"));

    let s_eta = with_eta(&s, 2.0 * s.pump.eta).unwrap();
    let gens_eta = Generators::build(&s_eta).unwrap();
    let table2 = einstein_table(&s_eta, &gens_eta).unwrap();
    let d_eta = max_abs(&(&table2.b_generator - &table.b_generator.mapv(|z| z * 4.0)));
    c.note(format!("eta^2 scaling residual {d_eta:.2e}"));
    c.check(d_eta == 0.0, &format!("B does not scale exactly as eta^2 ({d_eta:.2e})"));
    c.finish();
}

#[test]
fn criterion_08_einstein_identities() {
    let mut c = Criterion::new("8 (Einstein identities)");
    let (s, gens) = four_level_with_generators();
    // the A cross-check at 1e-12 is enforced inside einstein_a
    c.check(einstein_a(&s, &gens).is_ok(), "A-block cross-check failed");
    let table = einstein_table(&s, &gens).unwrap();
    let rho_g = gibbs_state(&s.atom, s.coupling.beta);
    let r = bb_check(rho_g.matrix(), &table).unwrap();
    let f = fluxes(rho_g.matrix(), &table);
    let scale = 1.0 + f.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
    let worst = r.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
    c.note(format!("BB residual on K0 = {worst:.2e}"));
    c.check(worst <= 1e-12 * scale, &format!("BB residual {worst:.2e}"));

    // weak pump: the steady-state flux-symmetry residual must drop at least
    // 30x when the pump drops 10x
    let steady_resid = |base: &Scenario, eta: f64, unchecked: bool| -> f64 {
        let se = with_eta(base, eta).unwrap();
        let ge = Generators::build(&se).unwrap();
        let report = balance_solve(&se, &ge).unwrap();
        let te = if unchecked {
            quasistat::einstein::einstein_table_unchecked(&se, &ge).unwrap()
        } else {
            einstein_table(&se, &ge).unwrap()
        };
        let rho = report.rho_infty.matrix();
        let fe = fluxes(rho, &te);
        let pops = populations(rho, &se.atom);
        let mut worst: f64 = 0.0;
        let n = te.level_count();
        for j in 0..n {
            for k in 0..n {
                let r = pops[j] * te.degeneracies[k] as f64 * fe[(j, k)]
                    - pops[k] * te.degeneracies[j] as f64 * fe[(k, j)];
                worst = worst.max(r.abs());
            }
        }
        worst
    };
    // with non-degenerate extreme levels the stimulated blocks are equal
    // scalars and the residual vanishes identically at every pump strength,
    // so the shrink inequality holds at zero
    let strong = steady_resid(&s, s.pump.eta, false);
    let weak = steady_resid(&s, s.pump.eta / 10.0, false);
    c.note(format!("non-degenerate residuals {strong:.2e} -> {weak:.2e}"));
    c.check(
        weak <= strong / 30.0 + 1e-15,
        &format!("non-degenerate weak-pump residual did not shrink ({strong:.2e} -> {weak:.2e})"),
    );
    // degenerate extreme levels make the check non-vacuous
    let sd = quasistat::scenarios::degenerate_endpoint_scenario();
    let strong_d = steady_resid(&sd, sd.pump.eta, true);
    let weak_d = steady_resid(&sd, sd.pump.eta / 10.0, true);
    let ratio = strong_d / weak_d.max(1e-300);
    c.note(format!(
        "degenerate residuals {strong_d:.2e} -> {weak_d:.2e} (ratio {ratio:.0})"
    ));
    c.check(strong_d > 1e-8, "degenerate residual unexpectedly zero");
    c.check(
        ratio >= 30.0,
        &format!("weak-pump residual only shrank {ratio:.1}x"),
    );
    c.finish();
}

#[test]
fn criterion_09_verifiers() {
    let mut c = Criterion::new("9 (structural verifiers)");
    // irreducibility
    let worked = spohn_worked_scenario();
    let jumps = build_jumps(&worked.atom, &worked.coupling).unwrap();
    c.check(spohn_irreducibility(&jumps).pass, "worked example not irreducible");
    let (s, gens) = four_level_with_generators();
    c.check(
        spohn_irreducibility(&gens.jumps).pass,
        "four-level scenario not irreducible",
    );
    let diag = diagonal_q_scenario();
    let jumps_diag = build_jumps(&diag.atom, &diag.coupling).unwrap();
    let rep = spohn_irreducibility(&jumps_diag);
    let dim_ok = matches!(rep.witness, Witness::CommutantDimension(d) if d == 4);
    c.check(!rep.pass && dim_ok, "diagonal coupling not flagged with dimension d");

    // GKLS
    c.check(gkls_check(&gens.reservoir).pass, "L_R fails GKLS");
    c.check(gkls_check(&gens.at_time(&s, 0.7)).pass, "frozen L_t fails GKLS");
    let d = 3;
    let mut transpose = Array2::zeros((d * d, d * d));
    for p in 0..d {
        for q in 0..d {
            transpose[(p * d + q, q * d + p)] = C64::new(1.0, 0.0);
        }
    }
    let bad = SuperOperator {
        mat: transpose - eye(d * d),
        dim: d,
    };
    c.check(!gkls_check(&bad).pass, "transpose generator passes GKLS");

    // positivity counterexample
    let rep = positivity_counterexample(C64::new(-1.0, 1.0), C64::new(-1.0, -1.0)).unwrap();
    let det_ok = matches!(rep.witness, Witness::Determinant(det) if (det + 4.0).abs() < 1e-9);
    c.note(format!("counterexample: {}", rep.describe()));
    c.check(!rep.pass && det_ok, "counterexample did not report D = -4 violation");

    // scalar coherence sector on non-degenerate endpoints
    c.check(
        b_positivity_condition(&s, &gens).unwrap().pass,
        "four-level scenario fails the scalar-coherence condition",
    );
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..3 {
        let r = random_scenario(&mut rng, 3);
        let g = Generators::build(&r).unwrap();
        let rep = b_positivity_condition(&r, &g).unwrap();
        c.check(
            rep.pass,
            &format!("non-degenerate random scenario fails: {}", rep.describe()),
        );
    }
    c.finish();
}

#[test]
fn criterion_10_howland_spectral_checks() {
    let mut c = Criterion::new("10 (Howland spectral checks at K = 8)");
    let start = Instant::now();
    let (s, gens) = four_level_with_generators();
    let report = spectral_report(&s, &gens, 8).unwrap();
    let nearest = report
        .eigenvalues
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min);
    c.note(format!("|z| nearest 0 = {nearest:.2e}, multiplicity {}", report.zero_multiplicity));
    c.check(
        nearest <= 1e-8 && report.zero_multiplicity == 1,
        "eigenvalue nearest 0 is not a simple near-zero eigenvalue",
    );

    let mut ratios = Vec::new();
    for &lam in &[0.4, 0.2, 0.1] {
        let sl = four_level_scenario_with(lam, lam * lam, 0.5);
        let gl = Generators::build(&sl).unwrap();
        let r = spectral_report(&sl, &gl, 8).unwrap();
        ratios.push(r.gap_over_lambda_sq);
    }
    let fitted_c = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    c.note(format!("gap/lambda^2 ratios {ratios:?}, fitted c = {fitted_c:.3}"));
    c.check(fitted_c > 0.0, "no positive gap constant");

    let compression = lambda_compression_error(&s, &gens, 8).unwrap();
    c.note(format!("compression error {compression:.2e}"));
    c.check(compression <= 1e-6, &format!("compression error {compression:.2e}"));

    let alphas = [0.0, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0];
    let mut sups = Vec::new();
    for &lam in &[0.4, 0.2, 0.1] {
        let sl = four_level_scenario_with(lam, lam * lam, 0.5);
        let gl = Generators::build(&sl).unwrap();
        let cmp = semigroup_compare(&sl, &gl, 8, &alphas).unwrap();
        sups.push(cmp.sup_distance);
    }
    c.note(format!("semigroup sup distances {sups:?}"));
    c.check(
        sups[0] > sups[1] && sups[1] > sups[2],
        &format!("semigroup distance not decreasing: {sups:?}"),
    );
    let secs = start.elapsed().as_secs_f64();
    c.note(format!("runtime {secs:.1}s"));
    c.check(secs <= 60.0, &format!("runtime {secs:.1}s > 60s"));
    c.finish();
}

#[test]
fn criterion_11_numerical_hygiene() {
    let mut c = Criterion::new("11 (numerical hygiene)");
    let (mut s, _) = four_level_with_generators();
    s.run.pump_off_time = None;
    let gens = Generators::build(&s).unwrap();
    let rho0 = s.initial_state().unwrap();

    // RK4 order: halving dt must cut the terminal error by >= 12x against a
    // quarter-step reference
    let run_master = |dt: f64| {
        integrate_master(&s, &gens, &rho0, TimeGrid::with_stride(8.0, dt, 1_000_000))
            .unwrap()
            .final_state()
            .clone()
    };
    let coarse = run_master(s.run.dt);
    let half = run_master(s.run.dt / 2.0);
    let reference = run_master(s.run.dt / 4.0);
    let e_coarse = state_distance(&coarse, &reference);
    let e_half = state_distance(&half, &reference);
    let factor = e_coarse / e_half;
    c.note(format!("RK4 error reduction {factor:.1}x"));
    c.check(factor >= 12.0, &format!("only {factor:.1}x on step halving"));

    // pre-master refinement self-consistency
    let base_dt = 2.0 * std::f64::consts::PI / s.pump.omega / 40.0;
    let run_pm = |dt: f64| {
        integrate_premaster(&s, &gens, &rho0, TimeGrid::with_stride(50.0, dt, 1_000_000))
            .unwrap()
            .final_state()
            .clone()
    };
    let a = run_pm(base_dt);
    let b = run_pm(base_dt / 2.0);
    let pa = populations(a.matrix(), &s.atom);
    let pb = populations(b.matrix(), &s.atom);
    let diff = pa
        .iter()
        .zip(pb.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    c.note(format!("pre-master refinement change {diff:.2e}"));
    c.check(diff <= 1e-5, &format!("refinement changed populations by {diff:.2e}"));

    // byte-reproducible outputs
    let grid = TimeGrid::with_stride(5.0, s.run.dt, 20);
    let t1 = integrate_master(&s, &gens, &rho0, grid).unwrap();
    let t2 = integrate_master(&s, &gens, &rho0, grid).unwrap();
    let csv1 = trajectory_csv(&t1, &s.atom);
    let csv2 = trajectory_csv(&t2, &s.atom);
    c.check(csv1 == csv2, "CSV not byte-reproducible");
    let f1 = ScenarioFile::from_scenario(&s).serialize();
    let f2 = ScenarioFile::from_scenario(&s).serialize();
    c.check(f1 == f2, "scenario JSON not byte-reproducible");
    let reparsed = ScenarioFile::parse(&f1).unwrap().serialize();
    c.check(reparsed == f1, "scenario JSON round-trip not exact");
    c.finish();
}
