//! Generalized Einstein coefficients.
//!
//! The spontaneous blocks A_{j,k} are the level-block compressions of the
//! reservoir generator, cross-checked against their explicit jump-operator
//! form. The stimulated blocks B_{j,k} exist only between the pump-coupled
//! extreme levels and are assembled from the restricted inverse of the
//! coherence-sector reservoir generator; summed they reproduce the pump
//! operator. Fluxes, the flux symmetry on scalar-block states, and the
//! invariant-cone test for the generated semigroups live here too.

use ndarray::{Array1, Array2};
use ndarray_linalg::Solve;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lindblad::Generators;
use crate::linalg::{
    dagger, expm, fro_norm, hermitize, hs_inner, max_abs, min_eigval, op_norm,
    trace,
};
use crate::model::Scenario;
use crate::steady::{pump_operator, BlockStructure, PumpMethod};

/// Spontaneous and stimulated transition blocks plus the assembled
/// generators on the block-diagonal subspace.
#[derive(Debug, Clone)]
pub struct EinsteinTable {
    pub blocks: BlockStructure,
    pub degeneracies: Vec<usize>,
    /// a_blocks[j][k] maps level-k block coordinates to level-j ones,
    /// scaled by lambda^2.
    pub a_blocks: Vec<Vec<Array2<C64>>>,
    /// b_blocks[j][k], scaled by eta^2 / (4 lambda^2); zero away from the
    /// extreme levels.
    pub b_blocks: Vec<Vec<Array2<C64>>>,
    /// Unscaled stimulated blocks.
    pub b_raw: Vec<Vec<Array2<C64>>>,
    /// lambda^2 A on the diagonal basis.
    pub a_generator: Array2<C64>,
    /// eta^2/(4 lambda^2) B on the diagonal basis.
    pub b_generator: Array2<C64>,
    pub pump_weight: f64,
}

impl EinsteinTable {
    fn block_basis(&self, k: usize) -> &[Array2<C64>] {
        let r = self.blocks.level_range(k, &self.degeneracies);
        &self.blocks.diag_basis[r]
    }

    /// Apply a stored block map to a full-space matrix (its level-k block).
    fn apply_block(&self, map: &Array2<C64>, j: usize, k: usize, x: &Array2<C64>) -> Array2<C64> {
        let coords = BlockStructure::coords(self.block_basis(k), x);
        let img = map.dot(&coords);
        BlockStructure::assemble(self.block_basis(j), &img)
    }

    pub fn apply_a(&self, j: usize, k: usize, x: &Array2<C64>) -> Array2<C64> {
        self.apply_block(&self.a_blocks[j][k].clone(), j, k, x)
    }

    pub fn apply_b(&self, j: usize, k: usize, x: &Array2<C64>) -> Array2<C64> {
        self.apply_block(&self.b_blocks[j][k].clone(), j, k, x)
    }

    /// Unscaled stimulated block, used by the positivity counterexample.
    pub fn apply_b_raw(&self, j: usize, k: usize, x: &Array2<C64>) -> Array2<C64> {
        self.apply_block(&self.b_raw[j][k].clone(), j, k, x)
    }

    pub fn level_count(&self) -> usize {
        self.degeneracies.len()
    }

    /// Population of level k as read off block coordinates.
    pub fn population(&self, rho: &Array2<C64>, k: usize) -> f64 {
        let coords = BlockStructure::coords(self.block_basis(k), rho);
        let block = BlockStructure::assemble(self.block_basis(k), &coords);
        trace(&block).re
    }

    /// Level projector reassembled from the block basis.
    pub fn projector(&self, k: usize) -> Array2<C64> {
        let nk = self.degeneracies[k];
        let basis = self.block_basis(k);
        let d = self.blocks.dim;
        let mut p = Array2::zeros((d, d));
        for a in 0..nk {
            // diagonal elements sit at row-major positions a * nk + a
            p = p + &basis[a * nk + a];
        }
        p
    }
}

/// Spontaneous blocks by both routes; errors if the compression of the
/// reservoir generator disagrees with the explicit jump formula (which would
/// mean the Lamb shift leaks into the level blocks).
pub fn einstein_a(scenario: &Scenario, gens: &Generators) -> Result<Vec<Vec<Array2<C64>>>> {
    let blocks = BlockStructure::new(&scenario.atom);
    let degs = scenario.atom.degeneracies.clone();
    let n = degs.len();
    let lam2 = scenario.lambda * scenario.lambda;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = Vec::with_capacity(n);
        let bj = &blocks.diag_basis[blocks.level_range(j, &degs)];
        for k in 0..n {
            let bk = &blocks.diag_basis[blocks.level_range(k, &degs)];
            let projected =
                BlockStructure::restrict(&gens.reservoir, bk, bj).mapv(|z| z * lam2);
            let explicit = explicit_a_block(scenario, gens, j, k, bk, bj).mapv(|z| z * lam2);
            let err = max_abs(&(&projected - &explicit));
            let scale = 1.0 + max_abs(&projected);
            if err > 1e-12 * scale {
                return Err(Error::InvalidModel(format!(
                    "spontaneous block ({},{}) disagrees between compression and jump formula \
                     by {err:.3e}; the Lamb shift leaks into the level blocks",
                    j + 1,
                    k + 1
                )));
            }
            row.push(projected);
        }
        out.push(row);
    }
    Ok(out)
}

/// Explicit jump-operator form of one spontaneous block, on block bases.
fn explicit_a_block(
    scenario: &Scenario,
    gens: &Generators,
    j: usize,
    k: usize,
    basis_k: &[Array2<C64>],
    basis_j: &[Array2<C64>],
) -> Array2<C64> {
    let mut m = Array2::zeros((basis_j.len(), basis_k.len()));
    for (col, x) in basis_k.iter().enumerate() {
        let mut img: Array2<C64> = Array2::zeros((scenario.atom.dim, scenario.atom.dim));
        if j != k {
            for jump in &gens.jumps.jumps {
                if jump.j == j && jump.k == k {
                    img = img + jump.v.dot(x).dot(&dagger(&jump.v)).mapv(|z| z * jump.c);
                }
            }
        } else {
            for jump in &gens.jumps.jumps {
                if jump.j == k && jump.k == k {
                    img = img + jump.v.dot(x).dot(&dagger(&jump.v)).mapv(|z| z * jump.c);
                }
                if jump.k == k {
                    let vdv = dagger(&jump.v).dot(&jump.v);
                    let loss = vdv.dot(x) + x.dot(&vdv);
                    img = img - loss.mapv(|z| z * (0.5 * jump.c));
                }
            }
        }
        for (row, b) in basis_j.iter().enumerate() {
            m[(row, col)] = hs_inner(b, &img);
        }
    }
    m
}

/// Stimulated blocks between the extreme levels, via the restricted inverse
/// of the coherence-sector reservoir generator.
pub fn einstein_b(scenario: &Scenario, gens: &Generators) -> Result<EinsteinTable> {
    einstein_table(scenario, gens)
}

/// Builds the complete table: spontaneous and stimulated blocks plus the
/// assembled block-diagonal generators, with all cross-checks applied.
pub fn einstein_table(scenario: &Scenario, gens: &Generators) -> Result<EinsteinTable> {
    let a_blocks = einstein_a(scenario, gens)?;
    einstein_table_with_a(scenario, gens, a_blocks)
}

/// Same table with the spontaneous blocks taken from the compression alone.
/// Needed for models whose Lamb shift genuinely acts inside a degenerate
/// block, where the jump formula cannot reproduce the compression.
pub fn einstein_table_unchecked(scenario: &Scenario, gens: &Generators) -> Result<EinsteinTable> {
    let blocks = BlockStructure::new(&scenario.atom);
    let degs = scenario.atom.degeneracies.clone();
    let n = degs.len();
    let lam2 = scenario.lambda * scenario.lambda;
    let mut a_blocks = Vec::with_capacity(n);
    for j in 0..n {
        let bj = &blocks.diag_basis[blocks.level_range(j, &degs)];
        let mut row = Vec::with_capacity(n);
        for k in 0..n {
            let bk = &blocks.diag_basis[blocks.level_range(k, &degs)];
            row.push(BlockStructure::restrict(&gens.reservoir, bk, bj).mapv(|z| z * lam2));
        }
        a_blocks.push(row);
    }
    einstein_table_with_a(scenario, gens, a_blocks)
}

fn einstein_table_with_a(
    scenario: &Scenario,
    gens: &Generators,
    a_blocks: Vec<Vec<Array2<C64>>>,
) -> Result<EinsteinTable> {
    if scenario.lambda == 0.0 {
        return Err(Error::Precondition(
            "einstein coefficients need lambda != 0".into(),
        ));
    }
    let blocks = BlockStructure::new(&scenario.atom);
    let degs = scenario.atom.degeneracies.clone();
    let n = degs.len();
    let last = n - 1;
    let lam = scenario.lambda;
    let pump_weight = scenario.pump.eta * scenario.pump.eta / (4.0 * lam * lam);

    // restricted inverses on the two coherence corners
    let r_n1 = BlockStructure::restrict(&gens.reservoir, &blocks.lower_basis, &blocks.lower_basis);
    let r_1n = BlockStructure::restrict(&gens.reservoir, &blocks.upper_basis, &blocks.upper_basis);
    let inv_n1 = |x: &Array2<C64>| -> Result<Array2<C64>> {
        let coords = BlockStructure::coords(&blocks.lower_basis, x);
        let sol = r_n1
            .solve(&coords)
            .map_err(|e| Error::Singular(format!("coherence sector (N,1) is singular: {e}")))?;
        Ok(BlockStructure::assemble(&blocks.lower_basis, &sol))
    };
    let inv_1n = |x: &Array2<C64>| -> Result<Array2<C64>> {
        let coords = BlockStructure::coords(&blocks.upper_basis, x);
        let sol = r_1n
            .solve(&coords)
            .map_err(|e| Error::Singular(format!("coherence sector (1,N) is singular: {e}")))?;
        Ok(BlockStructure::assemble(&blocks.upper_basis, &sol))
    };

    let h_p = &scenario.pump.h_p;
    let hp_dag = dagger(h_p);
    let raw_map = |j: usize, k: usize, x: &Array2<C64>| -> Result<Array2<C64>> {
        // the four corner formulas; x is a level-k block
        if j == last && k == 0 {
            Ok(inv_n1(&h_p.dot(x))?.dot(&hp_dag).mapv(|z| -z)
                - h_p.dot(&inv_1n(&x.dot(&hp_dag))?))
        } else if j == 0 && k == last {
            Ok(inv_1n(&hp_dag.dot(x))?.dot(h_p).mapv(|z| -z)
                - hp_dag.dot(&inv_n1(&x.dot(h_p))?))
        } else if j == last && k == last {
            Ok(h_p.dot(&inv_1n(&hp_dag.dot(x))?) + inv_n1(&x.dot(h_p))?.dot(&hp_dag))
        } else if j == 0 && k == 0 {
            Ok(hp_dag.dot(&inv_n1(&h_p.dot(x))?) + inv_1n(&x.dot(&hp_dag))?.dot(h_p))
        } else {
            Ok(Array2::zeros((blocks.dim, blocks.dim)))
        }
    };

    let mut b_raw = Vec::with_capacity(n);
    let mut b_blocks = Vec::with_capacity(n);
    for j in 0..n {
        let bj = &blocks.diag_basis[blocks.level_range(j, &degs)];
        let mut raw_row = Vec::with_capacity(n);
        let mut scaled_row = Vec::with_capacity(n);
        for k in 0..n {
            let bk = &blocks.diag_basis[blocks.level_range(k, &degs)];
            let mut m = Array2::zeros((bj.len(), bk.len()));
            for (col, x) in bk.iter().enumerate() {
                let img = raw_map(j, k, x)?;
                for (row, b) in bj.iter().enumerate() {
                    m[(row, col)] = hs_inner(b, &img);
                }
            }
            scaled_row.push(m.mapv(|z| z * pump_weight));
            raw_row.push(m);
        }
        b_raw.push(raw_row);
        b_blocks.push(scaled_row);
    }

    // assemble the block-diagonal generators and check B against the pump
    // operator identity
    let m_d = blocks.diag_dim();
    let mut a_generator = Array2::zeros((m_d, m_d));
    let mut b_generator = Array2::zeros((m_d, m_d));
    let mut b_raw_full = Array2::zeros((m_d, m_d));
    for j in 0..n {
        let rj = blocks.level_range(j, &degs);
        for k in 0..n {
            let rk = blocks.level_range(k, &degs);
            a_generator
                .slice_mut(ndarray::s![rj.clone(), rk.clone()])
                .assign(&a_blocks[j][k]);
            b_generator
                .slice_mut(ndarray::s![rj.clone(), rk.clone()])
                .assign(&b_blocks[j][k]);
            b_raw_full
                .slice_mut(ndarray::s![rj.clone(), rk.clone()])
                .assign(&b_raw[j][k]);
        }
    }
    let pump = pump_operator(scenario, gens, PumpMethod::ClosedForm)?;
    let err = max_abs(&(&b_raw_full - &pump.on_diag));
    if err > 1e-10 * (1.0 + max_abs(&pump.on_diag)) {
        return Err(Error::InvalidModel(format!(
            "stimulated blocks do not reassemble the pump operator (error {err:.3e})"
        )));
    }

    Ok(EinsteinTable {
        blocks,
        degeneracies: degs,
        a_blocks,
        b_blocks,
        b_raw,
        a_generator,
        b_generator,
        pump_weight,
    })
}

/// Stimulated fluxes f_{j,k}(rho) = Tr(B_{j,k}(P_{k,k} rho)).
pub fn fluxes(rho: &Array2<C64>, table: &EinsteinTable) -> Array2<f64> {
    let n = table.level_count();
    let mut out = Array2::zeros((n, n));
    for j in 0..n {
        for k in 0..n {
            let img = table.apply_b(j, k, rho);
            out[(j, k)] = trace(&img).re;
        }
    }
    out
}

/// Flux-symmetry residuals r_{j,k} = p_j n_k f_{j,k} - p_k n_j f_{k,j} for
/// scalar-block states rho = sum_k (p_k/n_k) Pi_k; rejects other inputs.
pub fn bb_check(rho: &Array2<C64>, table: &EinsteinTable) -> Result<Array2<f64>> {
    let n = table.level_count();
    let mut candidate: Array2<C64> = Array2::zeros(rho.dim());
    let mut pops = Vec::with_capacity(n);
    for k in 0..n {
        let p = table.population(rho, k);
        pops.push(p);
        let nk = table.degeneracies[k] as f64;
        candidate = candidate + table.projector(k).mapv(|z| z * C64::new(p / nk, 0.0));
    }
    let dist = max_abs(&(rho - &candidate));
    if dist > 1e-10 * (1.0 + max_abs(rho)) {
        return Err(Error::Precondition(format!(
            "state is not in the scalar-block cone (distance {dist:.3e})"
        )));
    }
    let f = fluxes(rho, table);
    let mut r = Array2::zeros((n, n));
    for j in 0..n {
        for k in 0..n {
            r[(j, k)] = pops[j] * table.degeneracies[k] as f64 * f[(j, k)]
                - pops[k] * table.degeneracies[j] as f64 * f[(k, j)];
        }
    }
    Ok(r)
}

/// A candidate cone inside a level block.
#[derive(Debug, Clone)]
pub enum Cone {
    /// All positive operators of the block.
    Full,
    /// Conic hull of the given positive block-supported matrices.
    Rays(Vec<Array2<C64>>),
}

/// Tests whether the semigroups of the assembled spontaneous and stimulated
/// generators map the combined cone into itself, sampling a time grid and
/// the blocks' extreme rays.
pub fn invariant_cone_check(table: &EinsteinTable, cones: &[Cone]) -> bool {
    let n = table.level_count();
    assert_eq!(cones.len(), n, "one cone per level");
    let degs = &table.degeneracies;
    let rays = sample_rays(table, cones);
    for gen in [&table.a_generator, &table.b_generator] {
        let scale = 1.0 + op_norm(gen);
        for &t in &[0.1, 0.3, 1.0, 3.0] {
            let prop = expm(&gen.mapv(|z| z * (t / scale)));
            for ray in &rays {
                let img = prop.dot(ray);
                for k in 0..n {
                    let r = table.blocks.level_range(k, degs);
                    let block_coords = img.slice(ndarray::s![r]).to_owned();
                    if !block_in_cone(table, k, &block_coords, &cones[k]) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Extreme-ray samples per level, in diagonal-basis coordinates.
fn sample_rays(table: &EinsteinTable, cones: &[Cone]) -> Vec<Array1<C64>> {
    let m_d = table.blocks.diag_dim();
    let mut rays = Vec::new();
    for (k, cone) in cones.iter().enumerate() {
        let r = table.blocks.level_range(k, &table.degeneracies);
        match cone {
            Cone::Rays(list) => {
                for x in list {
                    let coords = BlockStructure::coords(table.block_basis(k), x);
                    let mut full = Array1::zeros(m_d);
                    full.slice_mut(ndarray::s![r.clone()]).assign(&coords);
                    rays.push(full);
                }
            }
            Cone::Full => {
                // rank-one projectors |v><v| over a small deterministic set
                let nk = table.degeneracies[k];
                let mut vs: Vec<Vec<C64>> = Vec::new();
                for a in 0..nk {
                    let mut v = vec![C64::new(0.0, 0.0); nk];
                    v[a] = C64::new(1.0, 0.0);
                    vs.push(v);
                }
                let s = 1.0 / 2.0_f64.sqrt();
                for a in 0..nk {
                    for b in (a + 1)..nk {
                        let mut v = vec![C64::new(0.0, 0.0); nk];
                        v[a] = C64::new(s, 0.0);
                        v[b] = C64::new(s, 0.0);
                        vs.push(v.clone());
                        v[b] = C64::new(0.0, s);
                        vs.push(v);
                    }
                }
                for v in vs {
                    let mut coords = Array1::zeros(nk * nk);
                    for a in 0..nk {
                        for b in 0..nk {
                            // basis element W_{ab} = |a><b| at row-major (a, b)
                            coords[a * nk + b] = v[a] * v[b].conj();
                        }
                    }
                    let mut full = Array1::zeros(m_d);
                    full.slice_mut(ndarray::s![r.clone()]).assign(&coords);
                    rays.push(full);
                }
            }
        }
    }
    rays
}

fn block_in_cone(table: &EinsteinTable, k: usize, coords: &Array1<C64>, cone: &Cone) -> bool {
    let nk = table.degeneracies[k];
    let mut block: Array2<C64> = Array2::zeros((nk, nk));
    for a in 0..nk {
        for b in 0..nk {
            block[(a, b)] = coords[a * nk + b];
        }
    }
    let block = hermitize(&block);
    let scale = 1.0 + fro_norm(&block);
    match cone {
        Cone::Full => min_eigval(&block) >= -1e-10 * scale,
        Cone::Rays(list) => {
            // real least-squares coordinates in the ray basis
            let m = list.len();
            let mut gram = Array2::zeros((m, m));
            let mut rhs = Array1::zeros(m);
            let ray_coords: Vec<Array1<C64>> = list
                .iter()
                .map(|x| BlockStructure::coords(table.block_basis(k), x))
                .collect();
            let flat = Array1::from_iter((0..nk * nk).map(|i| coords[i]));
            for i in 0..m {
                for l in 0..m {
                    gram[(i, l)] = ray_coords[i]
                        .iter()
                        .zip(ray_coords[l].iter())
                        .map(|(x, y)| (x.conj() * y).re)
                        .sum::<f64>();
                }
                rhs[i] = ray_coords[i]
                    .iter()
                    .zip(flat.iter())
                    .map(|(x, y)| (x.conj() * y).re)
                    .sum::<f64>();
            }
            let alpha: Array1<f64> = match solve_real(&gram, &rhs) {
                Some(a) => a,
                None => return false,
            };
            // reconstruct and check the residual and the coefficients
            let mut recon: Array1<C64> = Array1::zeros(nk * nk);
            for (i, rc) in ray_coords.iter().enumerate() {
                recon = recon + rc.mapv(|z| z * C64::new(alpha[i], 0.0));
            }
            let resid: f64 = recon
                .iter()
                .zip(flat.iter())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if resid > 1e-8 * scale {
                return false;
            }
            let amax = alpha.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
            alpha.iter().all(|&a| a >= -1e-10 * (1.0 + amax))
        }
    }
}

fn solve_real(gram: &Array2<f64>, rhs: &Array1<f64>) -> Option<Array1<f64>> {
    gram.solve(rhs).ok()
}
