//! Inversion of population d3 - d2 in the quasi-stationary state as a
//! function of the inverse temperature, from the balance condition.

use quasistat::lindblad::Generators;
use quasistat::model::populations;
use quasistat::scenarios::{four_level_scenario, with_beta};
use quasistat::steady::balance_solve;

fn main() -> quasistat::Result<()> {
    let base = four_level_scenario();
    let (lo, hi): (f64, f64) = (0.2, 20.0);
    let points = 12;
    println!("{:>8} {:>10} {:>10} {:>10} {:>10} {:>10}", "beta", "d1", "d2", "d3", "d4", "d3-d2");
    for i in 0..points {
        let t = i as f64 / (points - 1) as f64;
        let beta = (lo.ln() + t * (hi.ln() - lo.ln())).exp();
        let s = with_beta(&base, beta)?;
        let gens = Generators::build(&s)?;
        let report = balance_solve(&s, &gens)?;
        let p = populations(report.rho_infty.matrix(), &s.atom);
        println!(
            "{beta:8.3} {:10.5} {:10.5} {:10.5} {:10.5} {:10.5}",
            p[0], p[1], p[2], p[3], p[2] - p[1]
        );
    }
    Ok(())
}
