//! Structural verifiers: irreducibility of the jump family, the GKLS test,
//! the scalar-coherence condition behind positive stimulated rates, its
//! three-level counterexample, and block localization.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use quasistat::lindblad::{build_jumps, Generators, SuperOperator};
use quasistat::linalg::eye;
use quasistat::scenarios::{diagonal_q_scenario, four_level_scenario, spohn_worked_scenario};
use quasistat::verify::{
    b_positivity_condition, block_localize, positivity_counterexample, gkls_check, localize_jumps,
    spohn_irreducibility,
};

fn main() -> quasistat::Result<()> {
    let worked = spohn_worked_scenario();
    let jumps = build_jumps(&worked.atom, &worked.coupling)?;
    println!("{}", spohn_irreducibility(&jumps).describe());

    let diag = diagonal_q_scenario();
    let jumps = build_jumps(&diag.atom, &diag.coupling)?;
    println!("{}", spohn_irreducibility(&jumps).describe());

    let scenario = four_level_scenario();
    let gens = Generators::build(&scenario)?;
    println!("{}", spohn_irreducibility(&gens.jumps).describe());
    println!("reservoir generator: {}", gkls_check(&gens.reservoir).describe());
    println!(
        "frozen-time generator: {}",
        gkls_check(&gens.at_time(&scenario, 0.37)).describe()
    );

    // the transpose map is positive but not completely positive
    let d = 3;
    let mut transpose: Array2<C64> = Array2::zeros((d * d, d * d));
    for p in 0..d {
        for q in 0..d {
            transpose[(p * d + q, q * d + p)] = C64::new(1.0, 0.0);
        }
    }
    let bad = SuperOperator {
        mat: transpose - eye(d * d),
        dim: d,
    };
    println!("transpose generator: {}", gkls_check(&bad).describe());

    println!("{}", b_positivity_condition(&scenario, &gens)?.describe());
    println!(
        "counterexample (gamma^-1 = -1 +/- i): {}",
        positivity_counterexample(C64::new(-1.0, 1.0), C64::new(-1.0, -1.0))?.describe()
    );

    // localization along the pump Hamiltonian preserves both structures
    let h_p = scenario.pump.h_pump();
    let localized = block_localize(&gens.reservoir, &h_p);
    println!("localized reservoir: {}", gkls_check(&localized).describe());
    let local_jumps = localize_jumps(&gens.jumps, &h_p);
    println!("localized jumps: {}", spohn_irreducibility(&local_jumps).describe());
    Ok(())
}
