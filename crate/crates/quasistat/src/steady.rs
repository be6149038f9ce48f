//! Quasi-stationary state machinery.
//!
//! The enlarged invariant subspace is H0 = D + ran(P_{1,N}) + ran(P_{N,1}),
//! the block-diagonal matrices plus the two pump coherence corners. On it the
//! driven dynamics is generated by Lambda = (eta/2) L_p + lambda^2 L_R in the
//! rotated picture. The pump operator B describes the pump contribution to the
//! steady populations and exists in a closed form (through the restricted
//! inverse of the coherence-sector reservoir generator) and a Laplace form
//! (as an integral of the reservoir semigroup); the quasi-stationary state is
//! the unique trace-one solution of L_R(rho) + eta^2/(4 lambda^4) B(rho) = 0.

use ndarray::{Array1, Array2};
use ndarray_linalg::Eig;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lindblad::{Generators, SuperOperator};
use crate::linalg::{
    dagger, expm, fro_norm, hermitize, hs_inner, max_abs, nullspace, op_norm, solve_matrix,
    trace, vectorize,
};
use crate::model::{block_diag_project, AtomSpec, DensityMatrix, Scenario};
use crate::verify;

/// Orthonormal bases of the block-diagonal subspace and of the two pump
/// coherence corners, in the eigenbasis of the atom.
#[derive(Debug, Clone)]
pub struct BlockStructure {
    pub dim: usize,
    pub level_count: usize,
    /// Basis of D, grouped level by level (row-major within each block).
    pub diag_basis: Vec<Array2<C64>>,
    /// Level of each diagonal basis element.
    pub diag_levels: Vec<usize>,
    /// Offset of each level's block inside `diag_basis`.
    pub diag_offsets: Vec<usize>,
    /// Basis of ran(P_{N,1}): |e_p^(N)><e_q^(1)|.
    pub lower_basis: Vec<Array2<C64>>,
    /// Basis of ran(P_{1,N}): |e_p^(1)><e_q^(N)|.
    pub upper_basis: Vec<Array2<C64>>,
}

impl BlockStructure {
    pub fn new(atom: &AtomSpec) -> Self {
        let n = atom.level_count();
        let mut diag_basis = Vec::new();
        let mut diag_levels = Vec::new();
        let mut diag_offsets = Vec::new();
        for k in 0..n {
            diag_offsets.push(diag_basis.len());
            let idx = atom.level_indices(k);
            for &p in &idx {
                for &q in &idx {
                    diag_basis.push(atom.basis_matrix(p, q));
                    diag_levels.push(k);
                }
            }
        }
        let low = atom.level_indices(0);
        let high = atom.level_indices(n - 1);
        let mut lower_basis = Vec::new();
        for &p in &high {
            for &q in &low {
                lower_basis.push(atom.basis_matrix(p, q));
            }
        }
        let mut upper_basis = Vec::new();
        for &p in &low {
            for &q in &high {
                upper_basis.push(atom.basis_matrix(p, q));
            }
        }
        Self {
            dim: atom.dim,
            level_count: n,
            diag_basis,
            diag_levels,
            diag_offsets,
            lower_basis,
            upper_basis,
        }
    }

    pub fn diag_dim(&self) -> usize {
        self.diag_basis.len()
    }

    pub fn perp_dim(&self) -> usize {
        self.lower_basis.len() + self.upper_basis.len()
    }

    pub fn h0_dim(&self) -> usize {
        self.diag_dim() + self.perp_dim()
    }

    /// Combined coherence basis, lower then upper corner.
    pub fn perp_basis(&self) -> Vec<Array2<C64>> {
        let mut v = self.lower_basis.clone();
        v.extend(self.upper_basis.iter().cloned());
        v
    }

    /// Combined basis of H0: diagonal, lower corner, upper corner.
    pub fn h0_basis(&self) -> Vec<Array2<C64>> {
        let mut v = self.diag_basis.clone();
        v.extend(self.lower_basis.iter().cloned());
        v.extend(self.upper_basis.iter().cloned());
        v
    }

    /// Coordinate indices of level k inside the diagonal basis.
    pub fn level_range(&self, k: usize, degeneracies: &[usize]) -> std::ops::Range<usize> {
        let start = self.diag_offsets[k];
        start..start + degeneracies[k] * degeneracies[k]
    }

    /// Hilbert-Schmidt coordinates of `x` in an orthonormal basis.
    pub fn coords(basis: &[Array2<C64>], x: &Array2<C64>) -> Array1<C64> {
        Array1::from_iter(basis.iter().map(|b| hs_inner(b, x)))
    }

    /// Matrix from coordinates.
    pub fn assemble(basis: &[Array2<C64>], coords: &Array1<C64>) -> Array2<C64> {
        let d = basis[0].nrows();
        let mut out = Array2::zeros((d, d));
        for (b, &c) in basis.iter().zip(coords.iter()) {
            out = out + b.mapv(|z| z * c);
        }
        out
    }

    /// Compression of a superoperator between orthonormal bases:
    /// `M[i][j] = <out_i, L(in_j)>`.
    pub fn restrict(
        l: &SuperOperator,
        in_basis: &[Array2<C64>],
        out_basis: &[Array2<C64>],
    ) -> Array2<C64> {
        let mut m = Array2::zeros((out_basis.len(), in_basis.len()));
        for (j, b) in in_basis.iter().enumerate() {
            let img = l.apply(b);
            for (i, o) in out_basis.iter().enumerate() {
                m[(i, j)] = hs_inner(o, &img);
            }
        }
        m
    }

    /// Residual of `x` outside the span of `basis`, in Frobenius norm.
    pub fn out_of_span(basis: &[Array2<C64>], x: &Array2<C64>) -> f64 {
        let coords = Self::coords(basis, x);
        let back = Self::assemble(basis, &coords);
        fro_norm(&(x - &back))
    }

    /// Projection X -> Pi_j X Pi_k as a superoperator.
    pub fn p_jk_superop(atom: &AtomSpec, j: usize, k: usize) -> SuperOperator {
        let pj = &atom.projectors[j];
        let pk = &atom.projectors[k];
        SuperOperator {
            mat: crate::linalg::kron(&pk.mapv(|z| z.conj()), pj),
            dim: atom.dim,
        }
    }

    /// Block-diagonal projection P_D as a superoperator.
    pub fn p_d_superop(atom: &AtomSpec) -> SuperOperator {
        let mut s = SuperOperator::zero(atom.dim);
        for k in 0..atom.level_count() {
            s = s.add(&Self::p_jk_superop(atom, k, k));
        }
        s
    }

    /// Projection onto the two pump coherence corners as a superoperator.
    pub fn p_perp_superop(atom: &AtomSpec) -> SuperOperator {
        let n = atom.level_count();
        Self::p_jk_superop(atom, 0, n - 1).add(&Self::p_jk_superop(atom, n - 1, 0))
    }
}

/// The generator Lambda = (eta/2) L_p + lambda^2 L_R restricted to H0.
#[derive(Debug, Clone)]
pub struct EffectiveGenerator {
    pub blocks: BlockStructure,
    /// Matrix on the H0 basis (diagonal, lower, upper order).
    pub matrix: Array2<C64>,
    pub invariance_residual: f64,
}

impl EffectiveGenerator {
    /// Kernel of the restricted generator, normalized to a density matrix.
    pub fn kernel_state(&self) -> Result<(DensityMatrix, usize)> {
        let ns = nullspace(&self.matrix);
        let dim = ns.kernel_dim(1e-10);
        if dim == 0 {
            return Err(Error::Singular("effective generator has empty kernel".into()));
        }
        let kv = ns.kernel_vectors(1e-10);
        let coords = kv.column(kv.ncols() - 1).to_owned();
        let basis = self.blocks.h0_basis();
        let raw = BlockStructure::assemble(&basis, &coords);
        let rho = normalize_kernel_matrix(&raw)?;
        Ok((DensityMatrix::new_unchecked(rho), dim))
    }

    /// Spectral gap: smallest |Re| over eigenvalues away from the kernel.
    pub fn spectral_gap(&self) -> Result<f64> {
        let (eigs, _) = self
            .matrix
            .eig()
            .map_err(|e| Error::Linalg(format!("eig failed: {e}")))?;
        let scale = op_norm(&self.matrix);
        let gap = eigs
            .iter()
            .filter(|z| z.norm() > 1e-10 * (1.0 + scale))
            .map(|z| z.re.abs())
            .fold(f64::INFINITY, f64::min);
        if gap.is_infinite() {
            return Err(Error::Spectral("no nonzero eigenvalues".into()));
        }
        Ok(gap)
    }
}

/// Fix the phase of a kernel vector and normalize its trace to one.
fn normalize_kernel_matrix(raw: &Array2<C64>) -> Result<Array2<C64>> {
    let tr = trace(raw);
    if tr.norm() < 1e-12 * (1.0 + fro_norm(raw)) {
        return Err(Error::Singular(
            "kernel vector has vanishing trace; cannot normalize".into(),
        ));
    }
    let phased = raw.mapv(|z| z * tr.conj() / tr.norm());
    let herm = hermitize(&phased);
    let tr = trace(&herm).re;
    Ok(herm.mapv(|z| z / tr))
}

/// Builds Lambda restricted to H0 and verifies H0 is invariant.
pub fn effective_generator(scenario: &Scenario, gens: &Generators) -> Result<EffectiveGenerator> {
    if scenario.lambda == 0.0 && scenario.pump.eta == 0.0 {
        return Err(Error::Precondition(
            "effective generator needs lambda or eta nonzero".into(),
        ));
    }
    let blocks = BlockStructure::new(&scenario.atom);
    let lam2 = scenario.lambda * scenario.lambda;
    let lt = gens
        .pump
        .scale(scenario.pump.eta / 2.0)
        .add(&gens.reservoir.scale(lam2));
    let basis = blocks.h0_basis();
    let norm = lt.norm();
    let mut residual: f64 = 0.0;
    for b in &basis {
        let img = lt.apply(b);
        residual = residual.max(BlockStructure::out_of_span(&basis, &img));
    }
    let rel = residual / (1.0 + norm);
    if rel > 1e-12 {
        return Err(Error::InvalidModel(format!(
            "enlarged block subspace is not invariant (residual {rel:.3e})"
        )));
    }
    let matrix = BlockStructure::restrict(&lt, &basis, &basis);
    Ok(EffectiveGenerator {
        blocks,
        matrix,
        invariance_residual: rel,
    })
}

/// Construction route for the pump operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PumpMethod {
    ClosedForm,
    Laplace,
}

/// The lambda-independent pump operator B on the block-diagonal subspace.
#[derive(Debug, Clone)]
pub struct PumpOperator {
    pub blocks: BlockStructure,
    /// Matrix of B on the diagonal basis.
    pub on_diag: Array2<C64>,
    /// Condition number of the restricted coherence-sector generator.
    pub condition_number: f64,
}

impl PumpOperator {
    pub fn apply(&self, rho: &Array2<C64>, atom: &AtomSpec) -> Array2<C64> {
        let bd = block_diag_project(rho, atom);
        let coords = BlockStructure::coords(&self.blocks.diag_basis, &bd);
        let img = self.on_diag.dot(&coords);
        BlockStructure::assemble(&self.blocks.diag_basis, &img)
    }

    /// Full-space superoperator acting as B P_D.
    pub fn superop(&self) -> SuperOperator {
        let d = self.blocks.dim;
        let m = self.blocks.diag_dim();
        let mut w = Array2::zeros((d * d, m));
        for (i, b) in self.blocks.diag_basis.iter().enumerate() {
            w.column_mut(i).assign(&vectorize(b));
        }
        let mat = w.dot(&self.on_diag).dot(&dagger(&w));
        SuperOperator { mat, dim: d }
    }
}

fn condition_number(m: &Array2<C64>) -> f64 {
    let ns = nullspace(m);
    let smax = ns.singular_values.first().cloned().unwrap_or(0.0);
    let smin = ns.singular_values.last().cloned().unwrap_or(0.0);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Builds the pump operator by the requested method.
///
/// Closed form: B = -lambda^2 P_D L_p (E|_{ran P_perp})^{-1} L_p P_D with
/// E = lambda^2 P_perp L_R P_perp; the lambda factors cancel. Laplace form:
/// the integral of L_p e^{s L_R} L_p P_D over s >= 0, evaluated exactly via
/// the restricted inverse and cross-checked by quadrature.
pub fn pump_operator(
    scenario: &Scenario,
    gens: &Generators,
    method: PumpMethod,
) -> Result<PumpOperator> {
    if scenario.lambda == 0.0 {
        return Err(Error::Precondition("pump operator needs lambda != 0".into()));
    }
    let blocks = BlockStructure::new(&scenario.atom);
    let perp = blocks.perp_basis();
    let diag = &blocks.diag_basis;
    let lam2 = scenario.lambda * scenario.lambda;

    let lp_dp = BlockStructure::restrict(&gens.pump, diag, &perp);
    let lp_pd = BlockStructure::restrict(&gens.pump, &perp, diag);
    let r_perp = BlockStructure::restrict(&gens.reservoir, &perp, &perp);
    let cond = condition_number(&r_perp);
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::Singular(format!(
            "coherence-sector generator is numerically singular (condition {cond:.3e})"
        )));
    }

    let on_diag = match method {
        PumpMethod::ClosedForm => {
            let e_mat = r_perp.mapv(|z| z * lam2);
            let inv_lp = solve_matrix(&e_mat, &lp_dp)?;
            lp_pd.dot(&inv_lp).mapv(|z| z * (-lam2))
        }
        PumpMethod::Laplace => {
            let inv_lp = solve_matrix(&r_perp, &lp_dp)?;
            let exact = lp_pd.dot(&inv_lp).mapv(|z| -z);
            let quad = laplace_quadrature(&lp_pd, &r_perp, &lp_dp)?;
            let err = max_abs(&(&exact - &quad));
            if err > 1e-8 * (1.0 + max_abs(&exact)) {
                return Err(Error::Quadrature(format!(
                    "Laplace quadrature disagrees with the restricted inverse by {err:.3e}"
                )));
            }
            exact
        }
    };
    Ok(PumpOperator {
        blocks,
        on_diag,
        condition_number: cond,
    })
}

/// Composite-Simpson evaluation of `int_0^S Lp e^{s R} Lp ds` on the
/// coherence sector, with S set by the decay of e^{s R}.
fn laplace_quadrature(
    lp_pd: &Array2<C64>,
    r_perp: &Array2<C64>,
    lp_dp: &Array2<C64>,
) -> Result<Array2<C64>> {
    let (eigs, _) = r_perp
        .eig()
        .map_err(|e| Error::Linalg(format!("eig failed: {e}")))?;
    let rate = eigs.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min);
    if rate <= 0.0 {
        return Err(Error::Quadrature(
            "coherence sector does not decay; Laplace integral diverges".into(),
        ));
    }
    let s_max = (30.0 + (1.0 + op_norm(r_perp)).ln()) / rate;
    let mut n = 512usize;
    let mut prev: Option<Array2<C64>> = None;
    loop {
        let h = s_max / n as f64;
        let step = expm(&r_perp.mapv(|z| z * h));
        let mut acc: Array2<C64> = Array2::zeros(r_perp.dim());
        let mut cur = crate::linalg::eye(r_perp.nrows());
        for i in 0..=n {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc = acc + cur.mapv(|z| z * w);
            if i < n {
                cur = step.dot(&cur);
            }
        }
        let integral = acc.mapv(|z| z * (h / 3.0));
        let result = lp_pd.dot(&integral).dot(lp_dp);
        if let Some(p) = prev {
            if max_abs(&(&result - &p)) < 1e-10 * (1.0 + max_abs(&result)) {
                return Ok(result);
            }
        }
        prev = Some(result);
        n *= 2;
        if n > 1 << 16 {
            return Err(Error::Quadrature(
                "Laplace quadrature failed to converge".into(),
            ));
        }
    }
}

/// The weighted pump operator and the spectral data backing its existence.
#[derive(Debug, Clone)]
pub struct WeightedPumpOperator {
    pub blocks: BlockStructure,
    pub on_diag: Array2<C64>,
    /// Slowest decay among the population modes (min Re of the D sector).
    pub population_abscissa: f64,
    /// Fastest-living coherence mode (max Re of the perp sector).
    pub coherence_abscissa: f64,
}

/// Weighted pump operator `Bbar = int_0^inf e^{-s L_R} L_p e^{s L_R} L_p P_D ds`,
/// defined under strong decoherence: every coherence mode decays strictly
/// faster than every population mode.
pub fn pump_operator_bar(scenario: &Scenario, gens: &Generators) -> Result<WeightedPumpOperator> {
    let blocks = BlockStructure::new(&scenario.atom);
    let perp = blocks.perp_basis();
    let diag = &blocks.diag_basis;
    let r_diag = BlockStructure::restrict(&gens.reservoir, diag, diag);
    let r_perp = BlockStructure::restrict(&gens.reservoir, &perp, &perp);
    let (ev_d, _) = r_diag
        .eig()
        .map_err(|e| Error::Linalg(format!("eig failed: {e}")))?;
    let (ev_p, _) = r_perp
        .eig()
        .map_err(|e| Error::Linalg(format!("eig failed: {e}")))?;
    let min_re_d = ev_d.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let max_re_p = ev_p.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if !(min_re_d > max_re_p) {
        return Err(Error::Precondition(format!(
            "strong decoherence fails: population abscissa {min_re_d:.6} <= coherence abscissa {max_re_p:.6}"
        )));
    }
    let rate = min_re_d - max_re_p;
    let lp_dp = BlockStructure::restrict(&gens.pump, diag, &perp);
    let lp_pd = BlockStructure::restrict(&gens.pump, &perp, diag);

    let norm0 = op_norm(&lp_pd.dot(&lp_dp));
    let s_max = (30.0 + (1.0 + norm0).ln()) / rate;
    let mut n = 512usize;
    let mut prev: Option<Array2<C64>> = None;
    let on_diag = loop {
        let h = s_max / n as f64;
        let fwd = expm(&r_perp.mapv(|z| z * h));
        let bwd = expm(&r_diag.mapv(|z| z * (-h)));
        let mut acc: Array2<C64> = Array2::zeros((diag.len(), diag.len()));
        let mut cur_fwd = crate::linalg::eye(perp.len());
        let mut cur_bwd = crate::linalg::eye(diag.len());
        for i in 0..=n {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let term = cur_bwd.dot(&lp_pd).dot(&cur_fwd).dot(&lp_dp);
            acc = acc + term.mapv(|z| z * w);
            if i < n {
                cur_fwd = fwd.dot(&cur_fwd);
                cur_bwd = bwd.dot(&cur_bwd);
            }
        }
        let result = acc.mapv(|z| z * (h / 3.0));
        if let Some(p) = prev {
            if max_abs(&(&result - &p)) < 1e-9 * (1.0 + max_abs(&result)) {
                break result;
            }
        }
        prev = Some(result);
        n *= 2;
        if n > 1 << 16 {
            return Err(Error::Quadrature(
                "weighted pump quadrature failed to converge".into(),
            ));
        }
    };

    let out = WeightedPumpOperator {
        blocks,
        on_diag,
        population_abscissa: min_re_d,
        coherence_abscissa: max_re_p,
    };
    check_positivity_preservation(scenario, &out)?;
    Ok(out)
}

/// Samples e^{t Bbar} on random positive block-diagonal states.
fn check_positivity_preservation(
    scenario: &Scenario,
    op: &WeightedPumpOperator,
) -> Result<()> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(scenario.run.seed);
    let scale = 1.0 + op_norm(&op.on_diag);
    for &t in &[0.1, 0.5, 1.0, 3.0] {
        let prop = expm(&op.on_diag.mapv(|z| z * (t / scale)));
        for _ in 0..6 {
            let rho = random_positive_block_diag(&mut rng, &op.blocks, scenario);
            let coords = BlockStructure::coords(&op.blocks.diag_basis, &rho);
            let img = prop.dot(&coords);
            let back = BlockStructure::assemble(&op.blocks.diag_basis, &img);
            let lam_min = crate::linalg::min_eigval(&hermitize(&back));
            if lam_min < -1e-9 * (1.0 + fro_norm(&back)) {
                return Err(Error::InvalidState(format!(
                    "weighted pump operator failed the positivity sweep (min eig {lam_min:.3e})"
                )));
            }
        }
    }
    Ok(())
}

fn random_positive_block_diag<R: rand::Rng>(
    rng: &mut R,
    blocks: &BlockStructure,
    scenario: &Scenario,
) -> Array2<C64> {
    let d = blocks.dim;
    let mut out = Array2::zeros((d, d));
    for k in 0..blocks.level_count {
        let idx = scenario.atom.level_indices(k);
        let nk = idx.len();
        let mut g: Array2<C64> = Array2::zeros((nk, nk));
        for i in 0..nk {
            for j in 0..nk {
                g[(i, j)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let pos = g.dot(&dagger(&g));
        // embed through the eigenvectors of this level
        for (a, &p) in idx.iter().enumerate() {
            for (b, &q) in idx.iter().enumerate() {
                let up = scenario.atom.eigenvectors.column(p).to_owned();
                let uq = scenario.atom.eigenvectors.column(q).to_owned();
                for r in 0..d {
                    for s in 0..d {
                        out[(r, s)] += pos[(a, b)] * up[r] * uq[s].conj();
                    }
                }
            }
        }
    }
    out
}

/// Result of the balance-condition solve.
#[derive(Debug, Clone)]
pub struct SteadyReport {
    /// Kernel state of the effective generator on H0.
    pub rho_tilde_infty: DensityMatrix,
    /// Block-diagonal quasi-stationary populations.
    pub rho_infty: DensityMatrix,
    pub kernel_dim: usize,
    /// Spectral gap of the effective generator.
    pub gap: f64,
    pub condition_number: f64,
}

/// Solves the balance condition for the unique quasi-stationary populations,
/// gating on the irreducibility check.
pub fn balance_solve(scenario: &Scenario, gens: &Generators) -> Result<SteadyReport> {
    let spohn = verify::spohn_irreducibility(&gens.jumps);
    if !spohn.pass {
        return Err(Error::Precondition(format!(
            "irreducibility check failed ({})",
            spohn.describe()
        )));
    }
    balance_solve_unchecked(scenario, gens)
}

/// Balance solve without the irreducibility gate (for reducible test models).
pub fn balance_solve_unchecked(scenario: &Scenario, gens: &Generators) -> Result<SteadyReport> {
    if scenario.lambda == 0.0 {
        return Err(Error::Precondition("balance condition needs lambda != 0".into()));
    }
    let pump = pump_operator(scenario, gens, PumpMethod::ClosedForm)?;
    let blocks = &pump.blocks;
    let diag = &blocks.diag_basis;
    let r_diag = BlockStructure::restrict(&gens.reservoir, diag, diag);
    let lam = scenario.lambda;
    let weight = scenario.pump.eta * scenario.pump.eta / (4.0 * lam.powi(4));
    let m_bal = &r_diag + &pump.on_diag.mapv(|z| z * weight);

    let ns = nullspace(&m_bal);
    let smax = ns.singular_values.first().cloned().unwrap_or(0.0);
    let svals = &ns.singular_values;
    let smin = svals[svals.len() - 1];
    let ssecond = svals[svals.len() - 2];
    if smin > 1e-10 * smax || ssecond < 1e-6 * smax {
        let spohn = verify::spohn_irreducibility(&gens.jumps);
        return Err(Error::Singular(format!(
            "balance operator kernel is not one-dimensional \
             (s_min/s_max = {:.3e}, s_second/s_max = {:.3e}; {})",
            smin / smax,
            ssecond / smax,
            spohn.describe()
        )));
    }
    let coords = ns.right_vectors.column(svals.len() - 1).to_owned();
    let raw = BlockStructure::assemble(diag, &coords);
    let rho_infty = DensityMatrix::new_unchecked(normalize_kernel_matrix(&raw)?);

    let eff = effective_generator(scenario, gens)?;
    let (rho_tilde, kernel_dim) = eff.kernel_state()?;
    let gap = eff.spectral_gap()?;

    let projected = block_diag_project(rho_tilde.matrix(), &scenario.atom);
    let mismatch = max_abs(&(&projected - rho_infty.matrix()));
    if mismatch > 1e-10 {
        return Err(Error::Singular(format!(
            "kernel of the effective generator does not project onto the balance solution \
             (mismatch {mismatch:.3e})"
        )));
    }
    Ok(SteadyReport {
        rho_tilde_infty: rho_tilde,
        rho_infty,
        kernel_dim,
        gap,
        condition_number: pump.condition_number,
    })
}
