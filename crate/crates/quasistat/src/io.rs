//! Scenario files, CSV trajectories, JSON summaries and SVG plots.
//!
//! Scenario files are JSON with complex matrices as nested arrays of
//! [re, im] pairs. The pump frequency is always derived from the atom
//! (resonant pump), never read from the file. Numeric output is written with
//! 17 significant digits so runs are byte-reproducible.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::model::{
    build_atom, default_level_tol, AtomSpec, CouplingSpec, DensityMatrix, InitialState, PumpSpec,
    RunControls, Scenario, SpectralForm,
};

type MatrixFile = Vec<Vec<[f64; 2]>>;

fn matrix_from_file(m: &MatrixFile) -> Result<Array2<C64>> {
    let rows = m.len();
    if rows == 0 || m.iter().any(|r| r.len() != rows) {
        return Err(Error::ScenarioFile("matrix must be square".into()));
    }
    let mut out = Array2::zeros((rows, rows));
    for (i, row) in m.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            out[(i, j)] = C64::new(re, im);
        }
    }
    Ok(out)
}

fn matrix_to_file(m: &Array2<C64>) -> MatrixFile {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingFormFile {
    Family { family: String, c: f64, a: f64 },
    Table { table: TableFile },
    Rates { rates: RatesFile },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableFile {
    pub x: Vec<f64>,
    pub f_beta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatesFile {
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingField {
    /// One form shared by every channel.
    One(CouplingFormFile),
    /// One form per channel.
    PerChannel(Vec<CouplingFormFile>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialField {
    Named(String),
    Matrix(MatrixFile),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunFile {
    pub t_max: f64,
    pub dt: f64,
    #[serde(default)]
    pub pump_off_time: Option<f64>,
    pub initial: InitialField,
}

/// On-disk scenario document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(rename = "H_at")]
    pub h_at: MatrixFile,
    #[serde(rename = "Q")]
    pub q: Vec<MatrixFile>,
    pub coupling: CouplingField,
    pub beta: f64,
    pub lambda: f64,
    pub eta: f64,
    pub h_p: MatrixFile,
    pub run: RunFile,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    7
}

fn form_from_file(f: &CouplingFormFile) -> Result<SpectralForm> {
    match f {
        CouplingFormFile::Family { family, c, a } => {
            if family != "exp_radial" {
                return Err(Error::ScenarioFile(format!(
                    "unknown spectral family '{family}' (only exp_radial is available)"
                )));
            }
            Ok(SpectralForm::ExpRadial { c: *c, a: *a })
        }
        CouplingFormFile::Table { table } => Ok(SpectralForm::Table {
            x: table.x.clone(),
            f_beta: table.f_beta.clone(),
        }),
        CouplingFormFile::Rates { rates } => Ok(SpectralForm::Rates {
            c: rates.c.clone(),
            d: rates.d.clone(),
        }),
    }
}

fn form_to_file(f: &SpectralForm) -> CouplingFormFile {
    match f {
        SpectralForm::ExpRadial { c, a } => CouplingFormFile::Family {
            family: "exp_radial".into(),
            c: *c,
            a: *a,
        },
        SpectralForm::Table { x, f_beta } => CouplingFormFile::Table {
            table: TableFile {
                x: x.clone(),
                f_beta: f_beta.clone(),
            },
        },
        SpectralForm::Rates { c, d } => CouplingFormFile::Rates {
            rates: RatesFile {
                c: c.clone(),
                d: d.clone(),
            },
        },
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ScenarioFile(format!("{e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let h = matrix_from_file(&self.h_at)?;
        let atom = build_atom(&h, default_level_tol(&h))?;
        let q: Vec<Array2<C64>> = self
            .q
            .iter()
            .map(matrix_from_file)
            .collect::<Result<Vec<_>>>()?;
        let forms: Vec<SpectralForm> = match &self.coupling {
            CouplingField::One(f) => {
                let form = form_from_file(f)?;
                vec![form; q.len()]
            }
            CouplingField::PerChannel(list) => {
                if list.len() != q.len() {
                    return Err(Error::ScenarioFile(format!(
                        "{} coupling forms for {} channels",
                        list.len(),
                        q.len()
                    )));
                }
                list.iter().map(form_from_file).collect::<Result<Vec<_>>>()?
            }
        };
        let coupling = CouplingSpec::new(q, forms, self.beta)?;
        let h_p = matrix_from_file(&self.h_p)?;
        // the pump frequency is always the atomic spectral width
        let pump = PumpSpec::new(h_p, self.eta, atom.omega())?;
        let initial = match &self.run.initial {
            InitialField::Named(name) if name == "gibbs" => InitialState::Gibbs,
            InitialField::Named(other) => {
                return Err(Error::ScenarioFile(format!(
                    "unknown initial state '{other}'"
                )))
            }
            InitialField::Matrix(m) => InitialState::Matrix(matrix_from_file(m)?),
        };
        let run = RunControls {
            t_max: self.run.t_max,
            dt: self.run.dt,
            pump_off_time: self.run.pump_off_time,
            initial,
            seed: self.seed,
        };
        Scenario::new(atom, coupling, pump, self.lambda, run)
    }

    /// Deterministic serialization with 17-significant-digit floats.
    pub fn serialize(&self) -> String {
        let mut j = JsonBuilder::object();
        j.push("H_at", json_matrix(&self.h_at));
        j.push(
            "Q",
            Json::Arr(self.q.iter().map(json_matrix).collect()),
        );
        let coupling = match &self.coupling {
            CouplingField::One(f) => json_form(f),
            CouplingField::PerChannel(list) => Json::Arr(list.iter().map(json_form).collect()),
        };
        j.push("coupling", coupling);
        j.push("beta", Json::Num(self.beta));
        j.push("lambda", Json::Num(self.lambda));
        j.push("eta", Json::Num(self.eta));
        j.push("h_p", json_matrix(&self.h_p));
        let mut run = JsonBuilder::object();
        run.push("t_max", Json::Num(self.run.t_max));
        run.push("dt", Json::Num(self.run.dt));
        run.push(
            "pump_off_time",
            match self.run.pump_off_time {
                Some(t) => Json::Num(t),
                None => Json::Null,
            },
        );
        run.push(
            "initial",
            match &self.run.initial {
                InitialField::Named(s) => Json::Str(s.clone()),
                InitialField::Matrix(m) => json_matrix(m),
            },
        );
        j.push("run", run.build());
        j.push("seed", Json::Int(self.seed as i64));
        j.build().render()
    }

    /// Rebuild a file document from an in-memory scenario.
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            h_at: matrix_to_file(&s.atom.hamiltonian()),
            q: s.coupling.q.iter().map(matrix_to_file).collect(),
            coupling: CouplingField::PerChannel(
                s.coupling.forms.iter().map(form_to_file).collect(),
            ),
            beta: s.coupling.beta,
            lambda: s.lambda,
            eta: s.pump.eta,
            h_p: matrix_to_file(&s.pump.h_p),
            run: RunFile {
                t_max: s.run.t_max,
                dt: s.run.dt,
                pump_off_time: s.run.pump_off_time,
                initial: match &s.run.initial {
                    InitialState::Gibbs => InitialField::Named("gibbs".into()),
                    InitialState::Matrix(m) => InitialField::Matrix(matrix_to_file(m)),
                },
            },
            seed: s.run.seed,
        }
    }
}

fn json_matrix(m: &MatrixFile) -> Json {
    Json::Arr(
        m.iter()
            .map(|row| {
                Json::Arr(
                    row.iter()
                        .map(|&[re, im]| Json::Arr(vec![Json::Num(re), Json::Num(im)]))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn json_form(f: &CouplingFormFile) -> Json {
    match f {
        CouplingFormFile::Family { family, c, a } => {
            let mut o = JsonBuilder::object();
            o.push("family", Json::Str(family.clone()));
            o.push("c", Json::Num(*c));
            o.push("a", Json::Num(*a));
            o.build()
        }
        CouplingFormFile::Table { table } => {
            let mut t = JsonBuilder::object();
            t.push(
                "x",
                Json::Arr(table.x.iter().map(|&v| Json::Num(v)).collect()),
            );
            t.push(
                "f_beta",
                Json::Arr(table.f_beta.iter().map(|&v| Json::Num(v)).collect()),
            );
            let mut o = JsonBuilder::object();
            o.push("table", t.build());
            o.build()
        }
        CouplingFormFile::Rates { rates } => {
            let arr = |m: &Vec<Vec<f64>>| {
                Json::Arr(
                    m.iter()
                        .map(|r| Json::Arr(r.iter().map(|&v| Json::Num(v)).collect()))
                        .collect(),
                )
            };
            let mut t = JsonBuilder::object();
            t.push("c", arr(&rates.c));
            t.push("d", arr(&rates.d));
            let mut o = JsonBuilder::object();
            o.push("rates", t.build());
            o.build()
        }
    }
}

/// Order-preserving JSON value with 17-significant-digit float formatting.
#[derive(Debug, Clone)]
pub enum Json {
    Null,
    Bool(bool),
    Num(f64),
    Int(i64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

pub struct JsonBuilder {
    fields: Vec<(String, Json)>,
}

impl JsonBuilder {
    pub fn object() -> Self {
        Self { fields: Vec::new() }
    }

    pub fn push(&mut self, key: &str, value: Json) -> &mut Self {
        self.fields.push((key.to_string(), value));
        self
    }

    pub fn build(self) -> Json {
        Json::Obj(self.fields)
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "null".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "1e400".into() } else { "-1e400".into() };
    }
    format!("{x:.16e}")
}

impl Json {
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Num(x) => out.push_str(&format_float(*x)),
            Json::Int(i) => out.push_str(&i.to_string()),
            Json::Str(s) => {
                out.push('"');
                for ch in s.chars() {
                    match ch {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            Json::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    item.write(out, indent);
                }
                out.push(']');
            }
            Json::Obj(fields) => {
                out.push('{');
                let pad = "  ".repeat(indent + 1);
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    out.push_str(&pad);
                    out.push('"');
                    out.push_str(k);
                    out.push_str("\": ");
                    v.write(out, indent + 1);
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent));
                out.push('}');
            }
        }
    }
}

/// Complex matrix as nested [re, im] JSON arrays.
pub fn json_complex_matrix(m: &Array2<C64>) -> Json {
    Json::Arr(
        (0..m.nrows())
            .map(|i| {
                Json::Arr(
                    (0..m.ncols())
                        .map(|j| {
                            Json::Arr(vec![Json::Num(m[(i, j)].re), Json::Num(m[(i, j)].im)])
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn json_real_vec(v: &[f64]) -> Json {
    Json::Arr(v.iter().map(|&x| Json::Num(x)).collect())
}

/// CSV trajectory: t, populations, trace deviation, minimum eigenvalue.
/// LF line endings, 17 significant digits.
pub fn trajectory_csv(traj: &Trajectory, atom: &AtomSpec) -> String {
    let n = atom.level_count();
    let mut out = String::from("t");
    for k in 1..=n {
        out.push_str(&format!(",p_{k}"));
    }
    out.push_str(",trace_dev,min_eig\n");
    let pops = traj.populations(atom);
    for (i, &t) in traj.times.iter().enumerate() {
        out.push_str(&format_float(t));
        for p in &pops[i] {
            out.push(',');
            out.push_str(&format_float(*p));
        }
        out.push(',');
        out.push_str(&format_float(traj.diagnostics[i].trace_dev));
        out.push(',');
        out.push_str(&format_float(traj.diagnostics[i].min_eig));
        out.push('\n');
    }
    out
}

const PALETTE: [&str; 8] = [
    "#1f6fb4", "#2ca02c", "#ff7f0e", "#d62728", "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
];

/// Minimal SVG line chart of the level populations: fixed 800x500 viewbox,
/// one polyline per level, legend by level index.
pub fn populations_svg(traj: &Trajectory, atom: &AtomSpec) -> String {
    let n = atom.level_count();
    let pops = traj.populations(atom);
    let (w, h) = (800.0, 500.0);
    let (ml, mr, mt, mb) = (60.0, 20.0, 20.0, 40.0);
    let t0 = *traj.times.first().unwrap_or(&0.0);
    let t1 = *traj.times.last().unwrap_or(&1.0);
    let p_max = pops
        .iter()
        .flat_map(|row| row.iter().cloned())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let x = |t: f64| ml + (t - t0) / (t1 - t0).max(1e-300) * (w - ml - mr);
    let y = |p: f64| h - mb - p / p_max * (h - mt - mb);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" width=\"{w}\" height=\"{h}\">\n"
    );
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">t = {:.1} .. {:.1}</text>\n",
        ml,
        h - mb + 24.0,
        t0,
        t1
    ));
    svg.push_str(&format!(
        "<text x=\"6\" y=\"{mt}\" font-size=\"12\">p max {p_max:.3}</text>\n"
    ));
    for k in 0..n {
        let color = PALETTE[k % PALETTE.len()];
        let mut points = String::new();
        for (i, &t) in traj.times.iter().enumerate() {
            points.push_str(&format!("{:.2},{:.2} ", x(t), y(pops[i][k])));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.trim_end()
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{color}\">level {}</text>\n",
            w - mr - 70.0,
            mt + 16.0 * (k as f64 + 1.0),
            k + 1
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Density-matrix summary snippet.
pub fn json_density(rho: &DensityMatrix) -> Json {
    json_complex_matrix(rho.matrix())
}
