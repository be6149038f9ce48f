//! Optical pumping of the four-level atom: integrates the master equation
//! with the pump switched off at t = 180, reports the inversion ordering and
//! the relaxation back towards the Gibbs state, and writes the population
//! curves as CSV and SVG.

use quasistat::dynamics::{integrate_master, TimeGrid};
use quasistat::io::{populations_svg, trajectory_csv};
use quasistat::lindblad::Generators;
use quasistat::model::{gibbs_state, populations};
use quasistat::scenarios::four_level_scenario;

fn main() -> quasistat::Result<()> {
    let scenario = four_level_scenario();
    let gens = Generators::build(&scenario)?;
    let rho0 = scenario.initial_state()?;
    let grid = TimeGrid::with_stride(300.0, scenario.run.dt, 20);
    let traj = integrate_master(&scenario, &gens, &rho0, grid)?;

    let pops = traj.populations(&scenario.atom);
    for target in [50.0, 120.0, 180.0, 300.0] {
        let i = traj
            .times
            .iter()
            .position(|&t| t >= target)
            .unwrap_or(traj.times.len() - 1);
        let p = &pops[i];
        println!(
            "t = {:6.1}: d = [{:.4}, {:.4}, {:.4}, {:.4}]",
            traj.times[i], p[0], p[1], p[2], p[3]
        );
    }
    let i = traj.times.iter().position(|&t| t >= 150.0).unwrap();
    let p = &pops[i];
    println!(
        "inversion at t = 150: d3 > d1 > d4 > d2 is {}",
        p[2] > p[0] && p[0] > p[3] && p[3] > p[1]
    );
    let rho_g = gibbs_state(&scenario.atom, scenario.coupling.beta);
    println!(
        "gibbs populations:    {:?}",
        populations(rho_g.matrix(), &scenario.atom)
            .iter()
            .map(|x| (x * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );
    println!(
        "max trace deviation {:.2e}, min eigenvalue {:.2e}",
        traj.max_trace_dev(),
        traj.min_eigenvalue()
    );

    std::fs::create_dir_all("out")?;
    std::fs::write("out/population_inversion.csv", trajectory_csv(&traj, &scenario.atom))?;
    std::fs::write("out/population_inversion.svg", populations_svg(&traj, &scenario.atom))?;
    println!("wrote out/population_inversion.csv and .svg");
    Ok(())
}
