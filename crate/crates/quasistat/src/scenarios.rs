//! Ready-made scenarios: the four-level optical pumping example, a
//! Rabi-only variant, irreducibility worked examples, a model with
//! degenerate extreme levels and the three-dimensional model where the
//! stimulated rates lose positivity.

use ndarray::{array, Array2};
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::Result;
use crate::linalg::random_hermitian;
use crate::model::{
    build_atom, default_level_tol, AtomSpec, CouplingSpec, PumpSpec, RunControls, Scenario,
    SpectralForm,
};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Four-level atom with energies (0, omega/5, 5 omega/6, omega).
pub fn four_level_atom(omega: f64) -> AtomSpec {
    let h = Array2::from_diag(&array![
        c(0.0, 0.0),
        c(omega / 5.0, 0.0),
        c(5.0 * omega / 6.0, 0.0),
        c(omega, 0.0)
    ]);
    build_atom(&h, default_level_tol(&h)).expect("four-level atom is valid")
}

/// Dense symmetric coupling operator of the four-level example.
pub fn four_level_q() -> Array2<C64> {
    array![
        [c(0.0, 0.0), c(5.0 / 6.0, 0.0), c(0.25, 0.0), c(0.2, 0.0)],
        [c(5.0 / 6.0, 0.0), c(0.0, 0.0), c(5.0 / 14.0, 0.0), c(5.0 / 19.0, 0.0)],
        [c(0.25, 0.0), c(5.0 / 14.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        [c(0.2, 0.0), c(5.0 / 19.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]
    ]
}

/// Radial coupling f(r) = e^{-r/2} / (2 pi r) at inverse temperature beta.
pub fn four_level_coupling(beta: f64) -> CouplingSpec {
    CouplingSpec::new(
        vec![four_level_q()],
        vec![SpectralForm::ExpRadial {
            c: 1.0 / (2.0 * std::f64::consts::PI),
            a: 0.5,
        }],
        beta,
    )
    .expect("four-level coupling is valid")
}

/// Pump lifting level 1 into level 4: h_p = e_41.
pub fn four_level_pump(eta: f64, omega: f64) -> PumpSpec {
    let mut h_p: Array2<C64> = Array2::zeros((4, 4));
    h_p[(3, 0)] = c(1.0, 0.0);
    PumpSpec::new(h_p, eta, omega).expect("four-level pump is valid")
}

/// The full optical pumping example: omega = 3, beta = 0.5, lambda = 0.385,
/// eta = lambda^2, Gibbs initial state, pump switched off at t = 180.
pub fn four_level_scenario() -> Scenario {
    four_level_scenario_with(0.385, 0.385 * 0.385, 0.5)
}

/// Same atom and couplings with adjustable strengths and temperature.
pub fn four_level_scenario_with(lambda: f64, eta: f64, beta: f64) -> Scenario {
    let omega = 3.0;
    let atom = four_level_atom(omega);
    let coupling = four_level_coupling(beta);
    let pump = four_level_pump(eta, omega);
    let run = RunControls {
        t_max: 300.0,
        dt: 2.0 * std::f64::consts::PI / omega / 200.0,
        pump_off_time: Some(180.0),
        ..RunControls::default()
    };
    Scenario::new(atom, coupling, pump, lambda, run).expect("four-level scenario is valid")
}

/// Pump-only variant: lambda = 0, eta = 0.385^2, no relaxation.
pub fn rabi_scenario() -> Scenario {
    let mut s = four_level_scenario_with(0.0, 0.385 * 0.385, 0.5);
    s.run.pump_off_time = Some(180.0);
    s
}

/// Worked irreducibility example: non-degenerate levels and a coupling that
/// connects every pair, Q phi_k = sum_j phi_j (the all-ones matrix).
pub fn spohn_worked_scenario() -> Scenario {
    let omega = 3.0;
    let atom = four_level_atom(omega);
    let ones = Array2::from_elem((4, 4), c(1.0, 0.0));
    let coupling = CouplingSpec::new(
        vec![ones],
        vec![SpectralForm::ExpRadial {
            c: 1.0 / (2.0 * std::f64::consts::PI),
            a: 0.5,
        }],
        0.5,
    )
    .unwrap();
    let pump = four_level_pump(0.1, omega);
    Scenario::new(atom, coupling, pump, 0.3, RunControls::default()).unwrap()
}

/// Reducible counterpart: a diagonal coupling operator whose jump family
/// leaves every diagonal matrix invariant.
pub fn diagonal_q_scenario() -> Scenario {
    let omega = 3.0;
    let atom = four_level_atom(omega);
    let q = Array2::from_diag(&array![c(1.0, 0.0), c(2.0, 0.0), c(-1.0, 0.0), c(0.5, 0.0)]);
    let coupling = CouplingSpec::new(
        vec![q],
        vec![SpectralForm::ExpRadial {
            c: 1.0 / (2.0 * std::f64::consts::PI),
            a: 0.5,
        }],
        0.5,
    )
    .unwrap();
    let pump = four_level_pump(0.1, omega);
    Scenario::new(atom, coupling, pump, 0.3, RunControls::default()).unwrap()
}

/// Three-dimensional model (d = 3, N = 2, the upper level twofold degenerate)
/// whose stimulated rates violate positivity. The reservoir acts through the
/// two coherence channels with prescribed eigenvalues gamma_1 and gamma_2,
/// realized by direct rate tables; `q3` and `c3` add a dephasing channel on
/// the ground state that shifts both coherence eigenvalues towards strong
/// decoherence without changing the populations' dynamics.
///
/// Inputs are the inverse eigenvalues gamma_i^{-1} (with negative real part).
pub fn positivity_counterexample_scenario(
    gamma1_inv: C64,
    gamma2_inv: C64,
    q3: f64,
    c3: f64,
) -> Result<Scenario> {
    let h = Array2::from_diag(&array![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
    let atom = build_atom(&h, default_level_tol(&h))?;
    let gamma1 = gamma1_inv.inv();
    let gamma2 = gamma2_inv.inv();
    // With absorption rates zero, the coherence eigenvalue of channel l at
    // q3 = 0 is gamma_l = -c_l/2 + i d_l/2 from the down-rate c_l and Lamb
    // coefficient d_l (each Q_l couples the ground state to one upper
    // sublevel). The dephasing channel q3 then shifts both coherence
    // eigenvalues by -q3^2 c3 / 2 while leaving the block-diagonal sector
    // untouched, which is how strong decoherence is reached.
    let c1 = -2.0 * gamma1.re;
    let c2 = -2.0 * gamma2.re;
    let d1 = 2.0 * gamma1.im;
    let d2 = 2.0 * gamma2.im;
    let q_1 = array![
        [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
    ];
    let q_2 = array![
        [c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
    ];
    let q_3 = Array2::from_diag(&array![c(q3, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    // rate tables per channel: rows = destination level j, cols = source k
    let rates = |c_down: f64, d_down: f64| SpectralForm::Rates {
        c: vec![vec![0.0, c_down], vec![0.0, 0.0]],
        d: vec![vec![0.0, d_down], vec![0.0, 0.0]],
    };
    let rates3 = SpectralForm::Rates {
        c: vec![vec![c3, 0.0], vec![0.0, 0.0]],
        d: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
    };
    let coupling = CouplingSpec::new(
        vec![q_1, q_2, q_3],
        vec![rates(c1, d1), rates(c2, d2), rates3],
        1.0,
    )?;
    let h_p = array![
        [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]
    ];
    let pump = PumpSpec::new(h_p, 0.04, 1.0)?;
    Scenario::new(atom, coupling, pump, 0.2, RunControls::default())
}

/// Two-level pure-dephasing model: the reservoir annihilates populations and
/// damps coherences at a single rate, so conjugating the pump term by the
/// reservoir flow acts trivially where it matters.
pub fn dephasing_scenario() -> Scenario {
    let h = Array2::from_diag(&array![c(0.0, 0.0), c(1.0, 0.0)]);
    let atom = build_atom(&h, default_level_tol(&h)).unwrap();
    let q = Array2::from_diag(&array![c(1.0, 0.0), c(-1.0, 0.0)]);
    let coupling = CouplingSpec::new(
        vec![q],
        vec![SpectralForm::Rates {
            c: vec![vec![0.4, 0.0], vec![0.0, 0.4]],
            d: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        }],
        1.0,
    )
    .unwrap();
    let mut h_p: Array2<C64> = Array2::zeros((2, 2));
    h_p[(1, 0)] = c(1.0, 0.0);
    let pump = PumpSpec::new(h_p, 0.02, 1.0).unwrap();
    Scenario::new(atom, coupling, pump, 0.15, RunControls::default()).unwrap()
}

/// Five-dimensional atom with twofold degenerate extreme levels
/// (energies 0, 0, 1, 2, 2) and an asymmetric pump block. Here the
/// stimulated blocks are genuine operators on the level eigenspaces rather
/// than scalars, so flux symmetries are exact only on scalar-block states.
pub fn degenerate_endpoint_scenario() -> Scenario {
    let h = Array2::from_diag(&array![
        c(0.0, 0.0),
        c(0.0, 0.0),
        c(1.0, 0.0),
        c(2.0, 0.0),
        c(2.0, 0.0)
    ]);
    let atom = build_atom(&h, default_level_tol(&h)).unwrap();
    let mut q: Array2<C64> = Array2::zeros((5, 5));
    for i in 0..5 {
        for j in 0..5 {
            if i != j {
                q[(i, j)] = c(1.0 / (1.0 + (i + j) as f64) + 0.1 * (i as f64 - j as f64).abs(), 0.0);
            }
        }
    }
    let q = crate::linalg::hermitize(&q);
    // a second channel with strongly different sublevel weights keeps the
    // intra-block coherence modes well damped
    let mut q2: Array2<C64> = Array2::zeros((5, 5));
    let weights = [1.0, -0.6, 0.4, 0.9, -1.1];
    for (i, &w) in weights.iter().enumerate() {
        q2[(i, i)] = c(w, 0.0);
    }
    q2[(0, 2)] = c(0.7, 0.2);
    q2[(2, 0)] = c(0.7, -0.2);
    q2[(1, 3)] = c(0.5, -0.3);
    q2[(3, 1)] = c(0.5, 0.3);
    q2[(2, 4)] = c(0.6, 0.0);
    q2[(4, 2)] = c(0.6, 0.0);
    let radial = SpectralForm::ExpRadial {
        c: 1.0 / (2.0 * std::f64::consts::PI),
        a: 0.5,
    };
    let coupling = CouplingSpec::new(vec![q, q2], vec![radial.clone(), radial], 0.7).unwrap();
    let mut h_p: Array2<C64> = Array2::zeros((5, 5));
    h_p[(3, 0)] = c(1.0, 0.0);
    h_p[(3, 1)] = c(0.3, 0.1);
    h_p[(4, 0)] = c(-0.2, 0.0);
    h_p[(4, 1)] = c(0.8, 0.0);
    let lambda = 0.3;
    let pump = PumpSpec::new(h_p, lambda * lambda, atom.omega()).unwrap();
    Scenario::new(atom, coupling, pump, lambda, RunControls::default()).unwrap()
}

/// Same scenario at a different inverse temperature.
pub fn with_beta(scenario: &Scenario, beta: f64) -> Result<Scenario> {
    let mut coupling = scenario.coupling.clone();
    coupling.beta = beta;
    Scenario::new(
        scenario.atom.clone(),
        coupling,
        scenario.pump.clone(),
        scenario.lambda,
        scenario.run.clone(),
    )
}

/// Same scenario at a different pump amplitude.
pub fn with_eta(scenario: &Scenario, eta: f64) -> Result<Scenario> {
    let mut pump = scenario.pump.clone();
    pump.eta = eta;
    Scenario::new(
        scenario.atom.clone(),
        scenario.coupling.clone(),
        pump,
        scenario.lambda,
        scenario.run.clone(),
    )
}

/// Same scenario with every level energy rescaled so the spectral width
/// becomes `omega`; the pump stays resonant by construction.
pub fn with_omega_scaled(scenario: &Scenario, omega: f64) -> Result<Scenario> {
    let old = scenario.atom.omega();
    if !(omega > 0.0) || old <= 0.0 {
        return Err(crate::error::Error::InvalidModel(format!(
            "cannot rescale spectral width from {old} to {omega}"
        )));
    }
    let factor = omega / old;
    let h = scenario
        .atom
        .hamiltonian()
        .mapv(|z| z * c(factor, 0.0));
    let atom = build_atom(&h, default_level_tol(&h))?;
    let mut pump = scenario.pump.clone();
    pump.omega = atom.omega();
    Scenario::new(
        atom,
        scenario.coupling.clone(),
        pump,
        scenario.lambda,
        scenario.run.clone(),
    )
}

/// Random scenario with a thermal reservoir coupling; used for the
/// detailed-balance sweeps. Levels are forced apart so grouping is stable.
pub fn random_scenario<R: Rng>(rng: &mut R, d: usize) -> Scenario {
    assert!(d >= 2);
    // well-separated random energies
    let mut energies: Vec<f64> = vec![0.0];
    for _ in 1..d {
        energies.push(energies.last().unwrap() + rng.gen_range(0.4..1.6));
    }
    let h = Array2::from_diag(
        &energies
            .iter()
            .map(|&e| c(e, 0.0))
            .collect::<ndarray::Array1<C64>>(),
    );
    let atom = build_atom(&h, default_level_tol(&h)).unwrap();
    let m = rng.gen_range(1..=2);
    let mut qs = Vec::new();
    let mut forms = Vec::new();
    for _ in 0..m {
        qs.push(random_hermitian(rng, d));
        forms.push(SpectralForm::ExpRadial {
            c: rng.gen_range(0.05..0.4),
            a: rng.gen_range(0.3..1.2),
        });
    }
    let beta = rng.gen_range(0.3..3.0);
    let coupling = CouplingSpec::new(qs, forms, beta).unwrap();
    let omega = atom.omega();
    let mut h_p: Array2<C64> = Array2::zeros((d, d));
    h_p[(d - 1, 0)] = c(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5));
    let lambda = rng.gen_range(0.1..0.5);
    let pump = PumpSpec::new(h_p, lambda * lambda, omega).unwrap();
    Scenario::new(atom, coupling, pump, lambda, RunControls::default()).unwrap()
}
