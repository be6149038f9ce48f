//! The memory-kernel (pre-master) equation against the period-averaged
//! master equation: the two population sets agree to a couple of permille
//! over the whole pumped window.

use quasistat::dynamics::{
    integrate_master, integrate_premaster, period_average, population_distance, TimeGrid,
};
use quasistat::io::trajectory_csv;
use quasistat::lindblad::Generators;
use quasistat::scenarios::four_level_scenario;

fn main() -> quasistat::Result<()> {
    let mut scenario = four_level_scenario();
    scenario.run.pump_off_time = None;
    let gens = Generators::build(&scenario)?;
    let rho0 = scenario.initial_state()?;
    let period = 2.0 * std::f64::consts::PI / scenario.pump.omega;

    let master = integrate_master(
        &scenario,
        &gens,
        &rho0,
        TimeGrid::new(180.0 + period, scenario.run.dt),
    )?;
    let averaged = period_average(&master, scenario.pump.omega)?;
    let premaster = integrate_premaster(
        &scenario,
        &gens,
        &rho0,
        TimeGrid::new(180.0 + period, scenario.run.dt * 10.0),
    )?;
    if let Some(j) = premaster.kernel_truncation {
        println!("memory kernel truncated at index {j}");
    }
    let dist = population_distance(&averaged, &premaster, &scenario.atom, period / 2.0, 180.0);
    println!("sup |averaged master - premaster| populations = {dist:.5}");

    std::fs::create_dir_all("out")?;
    std::fs::write("out/master_averaged.csv", trajectory_csv(&averaged, &scenario.atom))?;
    std::fs::write("out/premaster.csv", trajectory_csv(&premaster, &scenario.atom))?;
    println!("wrote out/master_averaged.csv and out/premaster.csv");
    Ok(())
}
