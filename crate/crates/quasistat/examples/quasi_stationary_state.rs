//! The balance condition: unique quasi-stationary populations, the kernel of
//! the effective generator on the enlarged block subspace, and agreement
//! with the long-time Pauli flow.

use quasistat::dynamics::{integrate_pauli, state_distance, TimeGrid};
use quasistat::lindblad::Generators;
use quasistat::model::populations;
use quasistat::scenarios::four_level_scenario;
use quasistat::steady::{balance_solve, pump_operator, PumpMethod};

fn main() -> quasistat::Result<()> {
    let mut scenario = four_level_scenario();
    scenario.run.pump_off_time = None;
    let gens = Generators::build(&scenario)?;

    let pump_closed = pump_operator(&scenario, &gens, PumpMethod::ClosedForm)?;
    let pump_laplace = pump_operator(&scenario, &gens, PumpMethod::Laplace)?;
    println!(
        "pump operator: closed form vs Laplace differ by {:.2e} (condition number {:.1})",
        quasistat::linalg::max_abs(&(&pump_closed.on_diag - &pump_laplace.on_diag)),
        pump_closed.condition_number
    );

    let report = balance_solve(&scenario, &gens)?;
    println!("kernel dimension: {}", report.kernel_dim);
    println!("spectral gap of the effective generator: {:.5}", report.gap);
    let p = populations(report.rho_infty.matrix(), &scenario.atom);
    println!("quasi-stationary populations: [{:.4}, {:.4}, {:.4}, {:.4}]", p[0], p[1], p[2], p[3]);
    println!("inversion d3 - d2 = {:.4}", p[2] - p[1]);

    let rho0 = scenario.initial_state()?;
    let pauli = integrate_pauli(
        &scenario,
        &gens,
        &rho0,
        TimeGrid::with_stride(10_000.0, 1.0, 100_000),
    )?;
    println!(
        "Pauli state at t = 1e4 agrees with the balance solution to {:.2e}",
        state_distance(pauli.final_state(), &report.rho_infty)
    );
    Ok(())
}
