//! Pump without reservoir (lambda = 0): populations Rabi-oscillate without
//! damping and never settle on the Gibbs state.

use quasistat::dynamics::{integrate_master, state_distance, TimeGrid};
use quasistat::io::populations_svg;
use quasistat::lindblad::Generators;
use quasistat::model::gibbs_state;
use quasistat::scenarios::rabi_scenario;

fn main() -> quasistat::Result<()> {
    let scenario = rabi_scenario();
    let gens = Generators::build(&scenario)?;
    let rho0 = scenario.initial_state()?;
    let traj = integrate_master(
        &scenario,
        &gens,
        &rho0,
        TimeGrid::with_stride(300.0, scenario.run.dt, 4),
    )?;
    let pops = traj.populations(&scenario.atom);
    let p1: Vec<f64> = pops.iter().map(|p| p[0]).collect();
    let flips = p1
        .windows(3)
        .filter(|w| (w[1] - w[0]) * (w[2] - w[1]) < 0.0)
        .count();
    println!("{flips} turning points of d_1 on [0, 300]");
    println!("max trace deviation {:.2e}", traj.max_trace_dev());
    let rho_g = gibbs_state(&scenario.atom, scenario.coupling.beta);
    println!(
        "distance from the Gibbs state at t = 300: {:.3}",
        state_distance(traj.final_state(), &rho_g)
    );
    std::fs::create_dir_all("out")?;
    std::fs::write("out/rabi_oscillations.svg", populations_svg(&traj, &scenario.atom))?;
    println!("wrote out/rabi_oscillations.svg");
    Ok(())
}
