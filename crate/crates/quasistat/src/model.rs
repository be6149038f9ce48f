//! Domain types for the atom, couplings, pump and states.
//!
//! An atom is a finite-dimensional quantum system whose Hamiltonian is kept
//! in spectrally decomposed form: ascending level energies `E_k`, orthogonal
//! level projectors and degeneracies. Density matrices, the Gibbs state, level
//! populations and the block-diagonal projection `P_D` all live here.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{
    dagger, eigh_decompose, eye, herm_residual, hermitize, max_abs, min_eigval, trace, vectorize,
};

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;

/// Spectrally decomposed atomic Hamiltonian.
#[derive(Debug, Clone)]
pub struct AtomSpec {
    /// Hilbert space dimension d.
    pub dim: usize,
    /// Ascending level energies, one per level.
    pub energies: Vec<f64>,
    /// Orthogonal projectors onto the level eigenspaces.
    pub projectors: Vec<Array2<C64>>,
    /// Level degeneracies n_k = rank of the k-th projector.
    pub degeneracies: Vec<usize>,
    /// Orthonormal eigenvectors, grouped level by level (columns).
    pub eigenvectors: Array2<C64>,
    /// Level index of each eigenvector column.
    pub level_of: Vec<usize>,
}

impl AtomSpec {
    pub fn level_count(&self) -> usize {
        self.energies.len()
    }

    /// Pump frequency, the full spectral width E_N - E_1.
    pub fn omega(&self) -> f64 {
        self.energies[self.level_count() - 1] - self.energies[0]
    }

    /// Reassembled Hamiltonian sum_k E_k Pi_k.
    pub fn hamiltonian(&self) -> Array2<C64> {
        let mut h = Array2::zeros((self.dim, self.dim));
        for (e, p) in self.energies.iter().zip(self.projectors.iter()) {
            h = h + p.mapv(|z| z * C64::new(*e, 0.0));
        }
        h
    }

    /// Column indices of the eigenvectors spanning level k.
    pub fn level_indices(&self, k: usize) -> Vec<usize> {
        (0..self.dim).filter(|&i| self.level_of[i] == k).collect()
    }

    /// Basis matrix |e_p><e_q| from eigenvector columns p and q.
    pub fn basis_matrix(&self, p: usize, q: usize) -> Array2<C64> {
        let up = self.eigenvectors.column(p);
        let uq = self.eigenvectors.column(q);
        let mut m = Array2::zeros((self.dim, self.dim));
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = up[i] * uq[j].conj();
            }
        }
        m
    }

    /// Distinct eigenvalue differences of `[H_at, .]`, i.e. all E_j - E_k,
    /// deduplicated with tolerance.
    pub fn bohr_frequencies(&self) -> Vec<f64> {
        let mut eps: Vec<f64> = Vec::new();
        for &ej in &self.energies {
            for &ek in &self.energies {
                let e = ej - ek;
                if !eps.iter().any(|&x| (x - e).abs() < 1e-9) {
                    eps.push(e);
                }
            }
        }
        eps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eps
    }

    /// Level pairs (j, k) with E_j - E_k = eps.
    pub fn transition_set(&self, eps: f64) -> Vec<(usize, usize)> {
        let n = self.level_count();
        let mut out = Vec::new();
        for j in 0..n {
            for k in 0..n {
                if (self.energies[j] - self.energies[k] - eps).abs() < 1e-9 {
                    out.push((j, k));
                }
            }
        }
        out
    }
}

/// Default level-grouping tolerance for [`build_atom`].
pub fn default_level_tol(h: &Array2<C64>) -> f64 {
    1e-9 * (1.0 + max_abs(h))
}

/// Spectrally decompose a Hermitian Hamiltonian, grouping eigenvalues within
/// `level_tol` of each other (chained) into a single level.
pub fn build_atom(h: &Array2<C64>, level_tol: f64) -> Result<AtomSpec> {
    let d = h.nrows();
    if d != h.ncols() || d < 2 {
        return Err(Error::InvalidModel(format!(
            "atomic Hamiltonian must be square with d >= 2, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let scale = 1.0 + max_abs(h);
    if herm_residual(h) > HERMITICITY_TOL * scale {
        return Err(Error::InvalidModel(format!(
            "atomic Hamiltonian is not Hermitian (residual {:.3e})",
            herm_residual(h)
        )));
    }
    let (vals, vecs) = eigh_decompose(h);

    // Eigenvalues come out ascending; chain-group within level_tol.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..d {
        match groups.last_mut() {
            Some(g) if vals[i] - vals[*g.last().unwrap()] <= level_tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    if groups.len() < 2 {
        return Err(Error::InvalidModel(
            "fewer than 2 atomic levels after grouping".into(),
        ));
    }

    let mut energies = Vec::with_capacity(groups.len());
    let mut projectors = Vec::with_capacity(groups.len());
    let mut degeneracies = Vec::with_capacity(groups.len());
    let mut level_of = vec![0usize; d];
    for (k, g) in groups.iter().enumerate() {
        let e = g.iter().map(|&i| vals[i]).sum::<f64>() / g.len() as f64;
        energies.push(e);
        degeneracies.push(g.len());
        let mut p: Array2<C64> = Array2::zeros((d, d));
        for &i in g {
            level_of[i] = k;
            let v = vecs.column(i);
            for a in 0..d {
                for b in 0..d {
                    p[(a, b)] += v[a] * v[b].conj();
                }
            }
        }
        projectors.push(p);
    }

    Ok(AtomSpec {
        dim: d,
        energies,
        projectors,
        degeneracies,
        eigenvectors: vecs,
        level_of,
    })
}

/// Spectral function specification for one coupling channel.
#[derive(Debug, Clone)]
pub enum SpectralForm {
    /// Radial family f(r) = c e^{-a r} / r, for which
    /// f^(beta)(x) = 4 pi c^2 e^{-2a|x|} / (1 + e^{-beta x}) in closed form.
    ExpRadial { c: f64, a: f64 },
    /// Sampled f^(beta) on an ascending grid, linearly interpolated.
    Table { x: Vec<f64>, f_beta: Vec<f64> },
    /// Direct per-level-pair coefficient tables, bypassing quadrature.
    /// `c[j][k]` and `d[j][k]` are indexed by 0-based level pairs.
    Rates { c: Vec<Vec<f64>>, d: Vec<Vec<f64>> },
}

/// Atom-reservoir coupling: Hermitian coupling operators plus per-channel
/// spectral data at a fixed inverse temperature.
#[derive(Debug, Clone)]
pub struct CouplingSpec {
    pub q: Vec<Array2<C64>>,
    pub forms: Vec<SpectralForm>,
    pub beta: f64,
}

impl CouplingSpec {
    pub fn new(q: Vec<Array2<C64>>, forms: Vec<SpectralForm>, beta: f64) -> Result<Self> {
        if q.len() != forms.len() {
            return Err(Error::InvalidModel(format!(
                "coupling has {} operators but {} spectral functions",
                q.len(),
                forms.len()
            )));
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidModel(format!(
                "inverse temperature must be positive, got {beta}"
            )));
        }
        for (l, m) in q.iter().enumerate() {
            let scale = 1.0 + max_abs(m);
            if herm_residual(m) > HERMITICITY_TOL * scale {
                return Err(Error::InvalidModel(format!(
                    "coupling operator Q_{} is not Hermitian",
                    l + 1
                )));
            }
        }
        for (l, f) in forms.iter().enumerate() {
            if let SpectralForm::Table { x, f_beta } = f {
                if x.len() != f_beta.len() || x.len() < 2 {
                    return Err(Error::InvalidModel(format!(
                        "spectral table {} needs matching x/f arrays of length >= 2",
                        l + 1
                    )));
                }
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidModel(format!(
                        "spectral table {} grid must be strictly ascending",
                        l + 1
                    )));
                }
                if f_beta.iter().any(|&v| v < 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "spectral table {} has negative values",
                        l + 1
                    )));
                }
            }
        }
        Ok(Self { q, forms, beta })
    }

    pub fn channel_count(&self) -> usize {
        self.q.len()
    }
}

/// Optical pump: h_p mapping the lowest level into the highest, coupling
/// strength eta and the resonant frequency.
#[derive(Debug, Clone)]
pub struct PumpSpec {
    pub h_p: Array2<C64>,
    pub eta: f64,
    pub omega: f64,
}

impl PumpSpec {
    pub fn new(h_p: Array2<C64>, eta: f64, omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::InvalidModel(format!(
                "pump frequency must be positive, got {omega}"
            )));
        }
        Ok(Self { h_p, eta, omega })
    }

    /// Full pump Hamiltonian H_p = h_p + h_p^dagger.
    pub fn h_pump(&self) -> Array2<C64> {
        &self.h_p + &dagger(&self.h_p)
    }

    /// Checks ran(h_p) within level N and ker(h_p)-perp within level 1, and
    /// the resonance condition omega = E_N - E_1.
    pub fn validate_against(&self, atom: &AtomSpec) -> Result<()> {
        let n = atom.level_count();
        let p1 = &atom.projectors[0];
        let pn = &atom.projectors[n - 1];
        let compressed = pn.dot(&self.h_p).dot(p1);
        let scale = 1.0 + max_abs(&self.h_p);
        if max_abs(&(&self.h_p - &compressed)) > 1e-12 * scale {
            return Err(Error::InvalidModel(
                "pump operator must map level 1 into level N (h_p = P_N h_p P_1)".into(),
            ));
        }
        if (self.omega - atom.omega()).abs() > 1e-10 * (1.0 + atom.omega()) {
            return Err(Error::InvalidModel(format!(
                "pump is not resonant: omega = {} but E_N - E_1 = {}",
                self.omega,
                atom.omega()
            )));
        }
        Ok(())
    }
}

/// Initial state selector for a run.
#[derive(Debug, Clone)]
pub enum InitialState {
    Gibbs,
    Matrix(Array2<C64>),
}

/// Run controls for the integrators.
#[derive(Debug, Clone)]
pub struct RunControls {
    pub t_max: f64,
    pub dt: f64,
    /// Pump switched off for t >= pump_off_time when set.
    pub pump_off_time: Option<f64>,
    pub initial: InitialState,
    /// Seed for the randomized structural checks.
    pub seed: u64,
}

impl Default for RunControls {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            dt: 0.01,
            pump_off_time: None,
            initial: InitialState::Gibbs,
            seed: 7,
        }
    }
}

/// Complete model specification plus run controls.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub atom: AtomSpec,
    pub coupling: CouplingSpec,
    pub pump: PumpSpec,
    pub lambda: f64,
    pub run: RunControls,
    /// Set when |eta| exceeds lambda^2, outside the moderate-pump regime.
    pub moderate_pump_exceeded: bool,
}

impl Scenario {
    pub fn new(
        atom: AtomSpec,
        coupling: CouplingSpec,
        pump: PumpSpec,
        lambda: f64,
        run: RunControls,
    ) -> Result<Self> {
        pump.validate_against(&atom)?;
        for (l, q) in coupling.q.iter().enumerate() {
            if q.nrows() != atom.dim || q.ncols() != atom.dim {
                return Err(Error::InvalidModel(format!(
                    "coupling operator Q_{} has wrong dimension",
                    l + 1
                )));
            }
        }
        for (l, f) in coupling.forms.iter().enumerate() {
            if let SpectralForm::Rates { c, d } = f {
                let n = atom.level_count();
                let ok = c.len() == n
                    && d.len() == n
                    && c.iter().all(|r| r.len() == n)
                    && d.iter().all(|r| r.len() == n);
                if !ok {
                    return Err(Error::InvalidModel(format!(
                        "rate tables of channel {} must be {n}x{n}",
                        l + 1
                    )));
                }
                if c.iter().flatten().any(|&v| v < 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "rate table c of channel {} has negative entries",
                        l + 1
                    )));
                }
            }
        }
        let moderate_pump_exceeded = pump.eta.abs() > lambda * lambda;
        Ok(Self {
            atom,
            coupling,
            pump,
            lambda,
            run,
            moderate_pump_exceeded,
        })
    }

    /// Pump-to-reservoir strength ratio eta / lambda^2.
    pub fn kappa(&self) -> f64 {
        self.pump.eta / (self.lambda * self.lambda)
    }

    /// Effective pump amplitude at time t (zero after pump_off_time).
    pub fn eta_at(&self, t: f64) -> f64 {
        match self.run.pump_off_time {
            Some(t_off) if t >= t_off => 0.0,
            _ => self.pump.eta,
        }
    }

    /// Initial density matrix for the configured run.
    pub fn initial_state(&self) -> Result<DensityMatrix> {
        match &self.run.initial {
            InitialState::Gibbs => Ok(gibbs_state(&self.atom, self.coupling.beta)),
            InitialState::Matrix(m) => DensityMatrix::new(m.clone()),
        }
    }
}

/// Validated d x d density matrix: Hermitian, unit trace, positive up to a
/// small integrator-drift allowance.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: Array2<C64>,
}

impl DensityMatrix {
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        let scale = 1.0 + max_abs(&mat);
        let hres = herm_residual(&mat);
        if hres > HERMITICITY_TOL * scale {
            return Err(Error::InvalidState(format!(
                "density matrix not Hermitian (residual {hres:.3e})"
            )));
        }
        let tr = trace(&mat);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix trace {} != 1",
                tr
            )));
        }
        let lam_min = min_eigval(&hermitize(&mat));
        if lam_min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix has negative eigenvalue {lam_min:.3e}"
            )));
        }
        Ok(Self { mat })
    }

    /// Wraps without validation; for intermediate integrator states.
    pub fn new_unchecked(mat: Array2<C64>) -> Self {
        Self { mat }
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn vectorized(&self) -> Array1<C64> {
        vectorize(&self.mat)
    }
}

/// Gibbs state e^{-beta H_at} / Tr(e^{-beta H_at}), assembled level by level
/// with the max energy shifted out for numerical stability.
pub fn gibbs_state(atom: &AtomSpec, beta: f64) -> DensityMatrix {
    let e_min = atom.energies[0];
    let weights: Vec<f64> = atom
        .energies
        .iter()
        .map(|&e| (-beta * (e - e_min)).exp())
        .collect();
    let z: f64 = weights
        .iter()
        .zip(atom.degeneracies.iter())
        .map(|(w, &n)| w * n as f64)
        .sum();
    let mut rho = Array2::zeros((atom.dim, atom.dim));
    for (k, p) in atom.projectors.iter().enumerate() {
        rho = rho + p.mapv(|x| x * C64::new(weights[k] / z, 0.0));
    }
    DensityMatrix::new_unchecked(rho)
}

/// Level populations p_k = Tr(Pi_k rho).
pub fn populations(rho: &Array2<C64>, atom: &AtomSpec) -> Vec<f64> {
    atom.projectors
        .iter()
        .map(|p| trace(&p.dot(rho)).re)
        .collect()
}

/// Block-diagonal projection P_D(rho) = sum_k Pi_k rho Pi_k.
pub fn block_diag_project(rho: &Array2<C64>, atom: &AtomSpec) -> Array2<C64> {
    let mut out = Array2::zeros(rho.dim());
    for p in &atom.projectors {
        out = out + p.dot(rho).dot(p);
    }
    out
}

/// Convenience: identity / d as a density matrix.
pub fn maximally_mixed(d: usize) -> DensityMatrix {
    DensityMatrix::new_unchecked(eye(d).mapv(|z| z / C64::new(d as f64, 0.0)))
}
