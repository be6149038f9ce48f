//! Spectrum of the truncated Howland operator: the relaxation gap, the
//! simple eigenvalues on the imaginary axis, the compression onto the
//! zero-frequency cluster, and the semigroup distance to the effective
//! generator as the coupling shrinks.

use quasistat::howland::{
    build_howland, lambda_compression_error, riesz_subspace, semigroup_compare, spectral_report,
};
use quasistat::lindblad::Generators;
use quasistat::scenarios::{four_level_scenario, four_level_scenario_with};

fn main() -> quasistat::Result<()> {
    let scenario = four_level_scenario();
    let gens = Generators::build(&scenario)?;
    let report = spectral_report(&scenario, &gens, 8)?;
    println!(
        "K = {}: {} eigenvalues, gap = {:.5} ({:.3} lambda^2)",
        report.cutoff_used,
        report.eigenvalues.len(),
        report.gap,
        report.gap_over_lambda_sq
    );
    println!(
        "multiplicities at (0, +i omega, -i omega): ({}, {}, {})",
        report.zero_multiplicity, report.plus_omega_multiplicity, report.minus_omega_multiplicity
    );

    // the uncoupled zero-frequency cluster has dimension d + 2 n_1 n_N = 6
    let mut bare = scenario.clone();
    bare.lambda = 0.0;
    bare.pump.eta = 0.0;
    let bare_gens = Generators::build(&bare)?;
    let h = build_howland(&bare, &bare_gens, 4)?;
    let sub = riesz_subspace(&h, 0.0, None)?;
    println!("uncoupled zero-cluster dimension: {}", sub.basis.ncols());

    println!(
        "compression onto the embedded cluster matches the effective generator to {:.2e}",
        lambda_compression_error(&scenario, &gens, 8)?
    );

    let alphas = [0.0, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0];
    for &lam in &[0.4, 0.2, 0.1] {
        let s = four_level_scenario_with(lam, lam * lam, 0.5);
        let g = Generators::build(&s)?;
        let cmp = semigroup_compare(&s, &g, 8, &alphas)?;
        println!(
            "lambda = {lam}: sup_alpha |e^(a Lambda~) - e^(a P0 G P0)| = {:.5} (angle {:.3} rad)",
            cmp.sup_distance, cmp.max_principal_angle
        );
    }
    Ok(())
}
