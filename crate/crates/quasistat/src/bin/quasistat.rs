//! Command-line driver: simulate the master/pre-master/Pauli equations,
//! solve for the quasi-stationary state, dump Einstein coefficient tables,
//! run the structural verifiers, survey the Howland spectrum, and sweep a
//! parameter through the balance condition.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;

use quasistat::dynamics::{
    integrate_master, integrate_pauli, integrate_premaster, TimeGrid, Trajectory,
};
use quasistat::einstein;
use quasistat::howland;
use quasistat::io::{
    json_complex_matrix, json_real_vec, populations_svg, trajectory_csv, Json, JsonBuilder,
    ScenarioFile,
};
use quasistat::lindblad::Generators;
use quasistat::model::{populations, Scenario};
use quasistat::scenarios::{with_beta, with_eta, with_omega_scaled};
use quasistat::steady::balance_solve;
use quasistat::verify;
use quasistat::Result;

#[derive(Parser)]
#[command(name = "quasistat", about = "Optically pumped impurity dynamics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Equation {
    Master,
    Premaster,
    Pauli,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    Beta,
    Eta,
    Omega,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate one of the three evolution equations and write a CSV
    /// trajectory (optionally an SVG population plot).
    Simulate {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Equation::Master)]
        eq: Equation,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        plot: bool,
    },
    /// Solve the balance condition and write the steady-state report.
    Steady {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the generalized Einstein A/B tables, fluxes and flux-symmetry
    /// residuals.
    Einstein {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run all structural verifiers.
    Verify {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral survey of the truncated Howland operator.
    Howland {
        scenario: PathBuf,
        #[arg(long = "fourier-cutoff", default_value_t = 8)]
        fourier_cutoff: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep beta, eta or omega and tabulate the steady populations.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long)]
        min: f64,
        #[arg(long)]
        max: f64,
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long)]
        log: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn load(path: &Path) -> Result<(Scenario, String)> {
    let file = ScenarioFile::load(path)?;
    let scenario = file.to_scenario()?;
    if scenario.moderate_pump_exceeded {
        eprintln!(
            "warning: |eta| = {} exceeds lambda^2 = {}; outside the moderate-pump regime",
            scenario.pump.eta.abs(),
            scenario.lambda * scenario.lambda
        );
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "scenario".into());
    Ok((scenario, stem))
}

fn out_path(out: &Option<PathBuf>, name: &str) -> PathBuf {
    match out {
        Some(dir) => dir.join(name),
        None => PathBuf::from(name),
    }
}

fn write(out: &Option<PathBuf>, name: &str, content: &str) -> Result<()> {
    let path = out_path(out, name);
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&path, content)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate {
            scenario,
            eq,
            out,
            plot,
        } => {
            let (s, stem) = load(&scenario)?;
            let gens = Generators::build(&s)?;
            let rho0 = s.initial_state()?;
            let grid = TimeGrid::from_run(&s.run);
            let (traj, tag): (Trajectory, &str) = match eq {
                Equation::Master => (integrate_master(&s, &gens, &rho0, grid)?, "master"),
                Equation::Premaster => {
                    (integrate_premaster(&s, &gens, &rho0, grid)?, "premaster")
                }
                Equation::Pauli => (integrate_pauli(&s, &gens, &rho0, grid)?, "pauli"),
            };
            write(&out, &format!("{stem}_{tag}.csv"), &trajectory_csv(&traj, &s.atom))?;
            if plot {
                write(
                    &out,
                    &format!("{stem}_{tag}.svg"),
                    &populations_svg(&traj, &s.atom),
                )?;
            }
            if let Some(trunc) = traj.kernel_truncation {
                println!("memory kernel truncated at index {trunc}");
            }
            println!(
                "final populations: {:?}",
                populations(traj.final_state().matrix(), &s.atom)
            );
            Ok(())
        }
        Cmd::Steady { scenario, out } => {
            let (s, stem) = load(&scenario)?;
            let gens = Generators::build(&s)?;
            let report = balance_solve(&s, &gens)?;
            let mut j = JsonBuilder::object();
            j.push("rho_infty", json_complex_matrix(report.rho_infty.matrix()));
            j.push(
                "populations",
                json_real_vec(&populations(report.rho_infty.matrix(), &s.atom)),
            );
            j.push(
                "rho_tilde_infty",
                json_complex_matrix(report.rho_tilde_infty.matrix()),
            );
            j.push("kernel_dim", Json::Int(report.kernel_dim as i64));
            j.push("gap", Json::Num(report.gap));
            j.push("condition_number", Json::Num(report.condition_number));
            write(&out, &format!("{stem}_steady.json"), &j.build().render())?;
            Ok(())
        }
        Cmd::Einstein { scenario, out } => {
            let (s, stem) = load(&scenario)?;
            let gens = Generators::build(&s)?;
            let table = einstein::einstein_table(&s, &gens)?;
            let rho_g = quasistat::model::gibbs_state(&s.atom, s.coupling.beta);
            let flux = einstein::fluxes(rho_g.matrix(), &table);
            let residuals = einstein::bb_check(rho_g.matrix(), &table)?;
            let n = table.level_count();
            let blocks_json = |blocks: &Vec<Vec<ndarray::Array2<C64>>>| {
                Json::Arr(
                    (0..n)
                        .map(|j| {
                            Json::Arr((0..n).map(|k| json_complex_matrix(&blocks[j][k])).collect())
                        })
                        .collect(),
                )
            };
            let mut j = JsonBuilder::object();
            j.push("degeneracies", Json::Arr(
                table.degeneracies.iter().map(|&d| Json::Int(d as i64)).collect(),
            ));
            j.push("A_blocks", blocks_json(&table.a_blocks));
            j.push("B_blocks", blocks_json(&table.b_blocks));
            j.push("pump_weight", Json::Num(table.pump_weight));
            let flat: Vec<f64> = flux.iter().cloned().collect();
            j.push("gibbs_fluxes_rowmajor", json_real_vec(&flat));
            let flat_r: Vec<f64> = residuals.iter().cloned().collect();
            j.push("gibbs_bb_residuals_rowmajor", json_real_vec(&flat_r));
            write(&out, &format!("{stem}_einstein.json"), &j.build().render())?;
            Ok(())
        }
        Cmd::Verify { scenario, out } => {
            let (s, stem) = load(&scenario)?;
            let gens = Generators::build(&s)?;
            let mut reports = vec![
                verify::spohn_irreducibility(&gens.jumps),
                verify::gkls_check(&gens.reservoir),
                verify::gkls_check(&gens.at_time(&s, 0.37)),
                verify::b_positivity_condition(&s, &gens)?,
            ];
            reports.push(verify::positivity_counterexample(
                C64::new(-1.0, 1.0),
                C64::new(-1.0, -1.0),
            )?);
            let mut j = JsonBuilder::object();
            for r in &reports {
                println!("{}", r.describe());
                j.push(&r.check.clone(), Json::Obj(vec![
                    ("pass".into(), Json::Bool(r.pass)),
                    ("witness".into(), Json::Str(r.describe())),
                ]));
            }
            write(&out, &format!("{stem}_verify.json"), &j.build().render())?;
            Ok(())
        }
        Cmd::Howland {
            scenario,
            fourier_cutoff,
            out,
        } => {
            let (s, stem) = load(&scenario)?;
            let gens = Generators::build(&s)?;
            let report = howland::spectral_report(&s, &gens, fourier_cutoff)?;
            let compression = howland::lambda_compression_error(&s, &gens, fourier_cutoff)?;
            let alphas = [0.0, 1.0, 3.0, 10.0, 30.0, 100.0];
            let cmp = howland::semigroup_compare(&s, &gens, fourier_cutoff, &alphas)?;
            let mut j = JsonBuilder::object();
            j.push("cutoff", Json::Int(report.cutoff_used as i64));
            j.push("gap", Json::Num(report.gap));
            j.push("gap_over_lambda_sq", Json::Num(report.gap_over_lambda_sq));
            j.push("zero_multiplicity", Json::Int(report.zero_multiplicity as i64));
            j.push(
                "pm_omega_multiplicities",
                Json::Arr(vec![
                    Json::Int(report.minus_omega_multiplicity as i64),
                    Json::Int(report.plus_omega_multiplicity as i64),
                ]),
            );
            j.push("compression_error", Json::Num(compression));
            j.push("semigroup_sup_distance", Json::Num(cmp.sup_distance));
            j.push(
                "eigenvalues",
                Json::Arr(
                    report
                        .eigenvalues
                        .iter()
                        .map(|z| Json::Arr(vec![Json::Num(z.re), Json::Num(z.im)]))
                        .collect(),
                ),
            );
            write(&out, &format!("{stem}_howland.json"), &j.build().render())?;
            Ok(())
        }
        Cmd::Sweep {
            scenario,
            param,
            min,
            max,
            points,
            log,
            out,
        } => {
            let (s, stem) = load(&scenario)?;
            if points < 2 {
                return Err(quasistat::Error::Precondition(
                    "sweep needs at least 2 points".into(),
                ));
            }
            if !(max > min) || (log && min <= 0.0) {
                return Err(quasistat::Error::Precondition(
                    "sweep range must be increasing (and positive for log spacing)".into(),
                ));
            }
            let values: Vec<f64> = (0..points)
                .map(|i| {
                    let t = i as f64 / (points - 1) as f64;
                    if log {
                        (min.ln() + t * (max.ln() - min.ln())).exp()
                    } else {
                        min + t * (max - min)
                    }
                })
                .collect();
            let rows = sweep_rows(&s, param, &values);
            let n = s.atom.level_count();
            let mut csv = String::from(match param {
                SweepParam::Beta => "beta",
                SweepParam::Eta => "eta",
                SweepParam::Omega => "omega",
            });
            for k in 1..=n {
                csv.push_str(&format!(",d_{k}"));
            }
            csv.push_str(",inversion,status\n");
            for (value, row) in values.iter().zip(rows.iter()) {
                csv.push_str(&quasistat::io::format_float(*value));
                match row {
                    Ok(pops) => {
                        for p in pops {
                            csv.push(',');
                            csv.push_str(&quasistat::io::format_float(*p));
                        }
                        csv.push(',');
                        csv.push_str(&quasistat::io::format_float(pops[2] - pops[1]));
                        csv.push_str(",ok\n");
                    }
                    Err(msg) => {
                        for _ in 0..=n {
                            csv.push_str(",nan");
                        }
                        csv.push_str(&format!(",failed: {msg}\n"));
                    }
                }
            }
            write(&out, &format!("{stem}_sweep.csv"), &csv)?;
            Ok(())
        }
    }
}

/// Balance-solve per sweep point; points run concurrently.
fn sweep_rows(
    base: &Scenario,
    param: SweepParam,
    values: &[f64],
) -> Vec<std::result::Result<Vec<f64>, String>> {
    let mut rows: Vec<std::result::Result<Vec<f64>, String>> =
        vec![Err("not computed".into()); values.len()];
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for &v in values {
            handles.push(scope.spawn(move || -> std::result::Result<Vec<f64>, String> {
                let s = match param {
                    SweepParam::Beta => with_beta(base, v),
                    SweepParam::Eta => with_eta(base, v),
                    SweepParam::Omega => with_omega_scaled(base, v),
                }
                .map_err(|e| e.to_string())?;
                let gens = Generators::build(&s).map_err(|e| e.to_string())?;
                let report = balance_solve(&s, &gens).map_err(|e| e.to_string())?;
                Ok(populations(report.rho_infty.matrix(), &s.atom))
            }));
        }
        for (i, h) in handles.into_iter().enumerate() {
            rows[i] = h.join().unwrap_or_else(|_| Err("worker panicked".into()));
        }
    });
    rows
}
