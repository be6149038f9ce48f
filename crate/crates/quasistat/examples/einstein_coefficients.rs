//! Generalized Einstein coefficients: spontaneous A blocks, stimulated B
//! blocks, fluxes and the flux symmetry on scalar-block states — for the
//! four-level example and for a model with degenerate extreme levels where
//! the B blocks are genuine operators.

use quasistat::einstein::{bb_check, einstein_table, einstein_table_unchecked, fluxes};
use quasistat::lindblad::Generators;
use quasistat::model::{gibbs_state, populations};
use quasistat::scenarios::{degenerate_endpoint_scenario, four_level_scenario};
use quasistat::steady::balance_solve;

fn main() -> quasistat::Result<()> {
    let scenario = four_level_scenario();
    let gens = Generators::build(&scenario)?;
    let table = einstein_table(&scenario, &gens)?;
    println!("four-level example (all levels simple):");
    for j in 0..4 {
        for k in 0..4 {
            let a = table.a_blocks[j][k][(0, 0)].re;
            if j != k && a.abs() > 1e-12 {
                println!("  A_{}{} = {a:.5}", j + 1, k + 1);
            }
        }
    }
    println!("  B_41 = {:.5}, B_14 = {:.5}", table.b_blocks[3][0][(0, 0)].re, table.b_blocks[0][3][(0, 0)].re);
    let rho_g = gibbs_state(&scenario.atom, scenario.coupling.beta);
    let f = fluxes(rho_g.matrix(), &table);
    println!("  stimulated fluxes at the Gibbs state: f_41 = {:.5}, f_14 = {:.5}", f[(3, 0)], f[(0, 3)]);
    let r = bb_check(rho_g.matrix(), &table)?;
    println!(
        "  flux-symmetry residual on the Gibbs state: {:.2e}",
        r.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()))
    );

    println!("degenerate extreme levels (operator-valued B blocks):");
    let s2 = degenerate_endpoint_scenario();
    let gens2 = Generators::build(&s2)?;
    let table2 = einstein_table_unchecked(&s2, &gens2)?;
    let rho_g2 = gibbs_state(&s2.atom, s2.coupling.beta);
    let r2 = bb_check(rho_g2.matrix(), &table2)?;
    println!(
        "  flux-symmetry residual on the Gibbs state (scalar blocks): {:.2e}",
        r2.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()))
    );
    let report = balance_solve(&s2, &gens2)?;
    let rho = report.rho_infty.matrix();
    let fe = fluxes(rho, &table2);
    let p = populations(rho, &s2.atom);
    let resid = p[2] * table2.degeneracies[0] as f64 * fe[(2, 0)]
        - p[0] * table2.degeneracies[2] as f64 * fe[(0, 2)];
    println!(
        "  flux-symmetry residual on the pumped steady state: {:.2e} (nonzero off the scalar cone)",
        resid.abs()
    );
    Ok(())
}
