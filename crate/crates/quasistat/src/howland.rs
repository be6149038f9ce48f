//! Finite Fourier truncation of the Howland operator of the driven dynamics.
//!
//! On coefficient vectors of e^{i k omega t} (modes -K..K) the generator is
//! block tridiagonal: diagonal blocks -i k omega + L_at + lambda^2 L_R and
//! off-diagonal blocks (eta/2) L_p from the pump cosine. Its spectrum carries
//! the relaxation gap; the spectral subspace continuing the unperturbed
//! zero-frequency cluster reproduces the effective generator on the enlarged
//! block subspace.

use ndarray::Array2;
use ndarray_linalg::Eig;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lindblad::Generators;
use crate::linalg::{
    dagger, expm, op_norm, orthonormalize, principal_angles, solve_matrix, vectorize,
};
use crate::model::Scenario;
use crate::steady::{effective_generator, BlockStructure};
use crate::verify;

/// Truncated Howland operator plus the bookkeeping needed for Riesz
/// subspace extraction.
#[derive(Debug, Clone)]
pub struct HowlandMatrix {
    pub cutoff: usize,
    pub mat: Array2<C64>,
    /// Atomic Hilbert-space dimension d (cells are d^2 wide).
    pub dim: usize,
    pub omega: f64,
    /// Unperturbed eigenvalues -i(k omega + E_l - E_j) with multiplicities.
    pub unperturbed: Vec<(C64, usize)>,
    /// Minimal spacing of the Bohr-frequency lattice.
    pub min_bohr_spacing: f64,
}

impl HowlandMatrix {
    pub fn size(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mode_count(&self) -> usize {
        2 * self.cutoff + 1
    }

    /// Index of the first row of the Fourier-mode cell (mode in -K..K).
    pub fn cell_offset(&self, mode: i64) -> usize {
        ((mode + self.cutoff as i64) as usize) * self.dim * self.dim
    }
}

/// Assembles the truncated Howland matrix.
pub fn build_howland(scenario: &Scenario, gens: &Generators, cutoff: usize) -> Result<HowlandMatrix> {
    if cutoff < 2 {
        return Err(Error::Precondition("Fourier cutoff must be at least 2".into()));
    }
    let d = scenario.atom.dim;
    let cell = d * d;
    let modes = 2 * cutoff + 1;
    let n = modes * cell;
    let omega = scenario.pump.omega;
    let lam2 = scenario.lambda * scenario.lambda;
    let diag_block = &gens.free.mat + &gens.reservoir.mat.mapv(|z| z * lam2);
    let pump_block = gens.pump.mat.mapv(|z| z * (scenario.pump.eta / 2.0));

    let mut mat = Array2::zeros((n, n));
    for a in 0..modes {
        let k = a as i64 - cutoff as i64;
        let r = a * cell..(a + 1) * cell;
        let mut block = diag_block.clone();
        let shift = C64::new(0.0, -(k as f64) * omega);
        for i in 0..cell {
            block[(i, i)] += shift;
        }
        mat.slice_mut(ndarray::s![r.clone(), r.clone()]).assign(&block);
        if a + 1 < modes {
            let rn = (a + 1) * cell..(a + 2) * cell;
            mat.slice_mut(ndarray::s![r.clone(), rn.clone()])
                .assign(&pump_block);
            mat.slice_mut(ndarray::s![rn, r]).assign(&pump_block);
        }
    }

    // unperturbed lattice -i(k omega + E_l - E_j)
    let energies = &scenario.atom.energies;
    let degs = &scenario.atom.degeneracies;
    let mut unperturbed: Vec<(C64, usize)> = Vec::new();
    for a in 0..modes {
        let k = a as i64 - cutoff as i64;
        for (j, &ej) in energies.iter().enumerate() {
            for (l, &el) in energies.iter().enumerate() {
                let z = C64::new(0.0, -((k as f64) * omega + el - ej));
                let mult = degs[j] * degs[l];
                if let Some(entry) = unperturbed.iter_mut().find(|(w, _)| (*w - z).norm() < 1e-9) {
                    entry.1 += mult;
                } else {
                    unperturbed.push((z, mult));
                }
            }
        }
    }

    let bohr = scenario.atom.bohr_frequencies();
    let mut spacing = f64::INFINITY;
    for (i, &a) in bohr.iter().enumerate() {
        for &b in bohr.iter().skip(i + 1) {
            if (a - b).abs() > 1e-12 {
                spacing = spacing.min((a - b).abs());
            }
        }
    }

    Ok(HowlandMatrix {
        cutoff,
        mat,
        dim: d,
        omega,
        unperturbed,
        min_bohr_spacing: spacing,
    })
}

/// Riesz spectral subspace around -i eps.
#[derive(Debug, Clone)]
pub struct RieszSubspace {
    /// Orthonormal basis of the subspace (columns).
    pub basis: Array2<C64>,
    pub eigenvalues: Vec<C64>,
}

/// Eigenvector span of the eigenvalues inside the circle |z + i eps| < radius
/// (default radius: a quarter of the Bohr lattice spacing). The dimension must
/// match the unperturbed count inside the same circle.
pub fn riesz_subspace(h: &HowlandMatrix, eps: f64, radius: Option<f64>) -> Result<RieszSubspace> {
    let radius = radius.unwrap_or(h.min_bohr_spacing / 4.0);
    let center = C64::new(0.0, -eps);
    let (vals, vecs) = h
        .mat
        .eig()
        .map_err(|e| Error::Linalg(format!("Howland eigendecomposition failed: {e}")))?;
    for z in vals.iter() {
        if ((z - center).norm() - radius).abs() < 1e-8 {
            return Err(Error::Spectral(format!(
                "eigenvalue {z} lies on the contour around {center} (radius {radius})"
            )));
        }
    }
    let expected: usize = h
        .unperturbed
        .iter()
        .filter(|(z, _)| (z - center).norm() < radius)
        .map(|(_, m)| m)
        .sum();
    let selected: Vec<usize> = (0..vals.len())
        .filter(|&i| (vals[i] - center).norm() < radius)
        .collect();
    if selected.len() != expected {
        return Err(Error::Spectral(format!(
            "Riesz subspace at eps = {eps} has dimension {} but the uncoupled count is {expected}",
            selected.len()
        )));
    }
    if selected.is_empty() {
        return Ok(RieszSubspace {
            basis: Array2::zeros((h.size(), 0)),
            eigenvalues: vec![],
        });
    }
    let mut cols = Array2::zeros((h.size(), selected.len()));
    for (c, &i) in selected.iter().enumerate() {
        cols.column_mut(c).assign(&vecs.column(i));
    }
    Ok(RieszSubspace {
        basis: orthonormalize(&cols),
        eigenvalues: selected.iter().map(|&i| vals[i]).collect(),
    })
}

/// Spectral survey of the truncated Howland operator.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub eigenvalues: Vec<C64>,
    /// min |Re| over eigenvalues off the imaginary axis; infinite when the
    /// spectrum is purely imaginary.
    pub gap: f64,
    pub gap_over_lambda_sq: f64,
    pub zero_multiplicity: usize,
    pub plus_omega_multiplicity: usize,
    pub minus_omega_multiplicity: usize,
    pub cutoff_used: usize,
}

/// Runs the spectral checks, doubling the cutoff once if they fail.
pub fn spectral_report(scenario: &Scenario, gens: &Generators, cutoff: usize) -> Result<SpectralReport> {
    let spohn = verify::spohn_irreducibility(&gens.jumps);
    if !spohn.pass {
        return Err(Error::Precondition(format!(
            "spectral report requires irreducibility ({})",
            spohn.describe()
        )));
    }
    match spectral_report_at(scenario, gens, cutoff) {
        Ok(r) => Ok(r),
        Err(first) => match spectral_report_at(scenario, gens, 2 * cutoff) {
            Ok(r) => Ok(r),
            Err(_) => Err(first),
        },
    }
}

fn spectral_report_at(
    scenario: &Scenario,
    gens: &Generators,
    cutoff: usize,
) -> Result<SpectralReport> {
    let h = build_howland(scenario, gens, cutoff)?;
    let (vals, _) = h
        .mat
        .eig()
        .map_err(|e| Error::Linalg(format!("Howland eigendecomposition failed: {e}")))?;
    let eigenvalues: Vec<C64> = vals.to_vec();
    let scale = eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let axis_tol = 1e-9 * scale;
    let gap = eigenvalues
        .iter()
        .filter(|z| z.re.abs() > axis_tol)
        .map(|z| z.re.abs())
        .fold(f64::INFINITY, f64::min);
    let lam2 = scenario.lambda * scenario.lambda;

    let near = |center: C64| -> usize {
        eigenvalues
            .iter()
            .filter(|z| (*z - center).norm() <= 1e-8 * scale)
            .count()
    };
    let zero_multiplicity = near(C64::new(0.0, 0.0));
    let plus = near(C64::new(0.0, h.omega));
    let minus = near(C64::new(0.0, -h.omega));
    if scenario.lambda != 0.0 {
        if !(zero_multiplicity == 1 && plus == 1 && minus == 1) {
            return Err(Error::Spectral(format!(
                "expected simple eigenvalues at 0 and +-i omega, found ({zero_multiplicity}, {plus}, {minus})"
            )));
        }
        if !gap.is_finite() || gap <= 0.0 {
            return Err(Error::Spectral("spectral gap collapsed".into()));
        }
        // every eigenvalue near -i eps for a Bohr frequency eps away from
        // {-omega, 0, omega} must decay
        let radius = h.min_bohr_spacing / 4.0;
        for &eps in scenario.atom.bohr_frequencies().iter() {
            if eps.abs() < 1e-9 || (eps.abs() - h.omega).abs() < 1e-9 {
                continue;
            }
            let center = C64::new(0.0, -eps);
            for z in &eigenvalues {
                if (z - center).norm() < radius && z.re >= 0.0 {
                    return Err(Error::Spectral(format!(
                        "eigenvalue {z} near -i{eps} has nonnegative real part"
                    )));
                }
            }
        }
    }
    Ok(SpectralReport {
        eigenvalues,
        gap,
        gap_over_lambda_sq: if lam2 > 0.0 { gap / lam2 } else { f64::INFINITY },
        zero_multiplicity,
        plus_omega_multiplicity: plus,
        minus_omega_multiplicity: minus,
        cutoff_used: cutoff,
    })
}

/// Embedded basis of the unperturbed cluster at -i m_shift omega:
/// block-diagonal matrices at mode m_shift, the (N,1) corner one mode below
/// and the (1,N) corner one mode above. Ordering matches the effective
/// generator's H0 basis; m_shift = 0 is the zero-frequency cluster.
fn embedded_cluster_basis_at(
    h: &HowlandMatrix,
    blocks: &BlockStructure,
    m_shift: i64,
) -> Array2<C64> {
    let cell = h.dim * h.dim;
    let m0 = blocks.h0_dim();
    let mut b = Array2::zeros((h.size(), m0));
    let mut col = 0;
    let put = |mode: i64, m: &Array2<C64>, col: usize, b: &mut Array2<C64>| {
        let off = h.cell_offset(mode);
        let v = vectorize(m);
        for i in 0..cell {
            b[(off + i, col)] = v[i];
        }
    };
    for m in &blocks.diag_basis {
        put(m_shift, m, col, &mut b);
        col += 1;
    }
    for m in &blocks.lower_basis {
        put(m_shift - 1, m, col, &mut b);
        col += 1;
    }
    for m in &blocks.upper_basis {
        put(m_shift + 1, m, col, &mut b);
        col += 1;
    }
    b
}

fn embedded_cluster_basis(h: &HowlandMatrix, blocks: &BlockStructure) -> Array2<C64> {
    embedded_cluster_basis_at(h, blocks, 0)
}

/// Operator-norm error between the compression of the truncated Howland
/// matrix onto the embedded unperturbed cluster and the effective generator.
pub fn lambda_compression_error(
    scenario: &Scenario,
    gens: &Generators,
    cutoff: usize,
) -> Result<f64> {
    let h = build_howland(scenario, gens, cutoff)?;
    let eff = effective_generator(scenario, gens)?;
    let b = embedded_cluster_basis(&h, &eff.blocks);
    let compressed = dagger(&b).dot(&h.mat).dot(&b);
    Ok(op_norm(&(&compressed - &eff.matrix)))
}

/// Semigroup distance between the effective generator and the compression of
/// the Howland operator onto the coupled zero-frequency Riesz subspace.
#[derive(Debug, Clone)]
pub struct SemigroupComparison {
    pub per_alpha: Vec<(f64, f64)>,
    pub sup_distance: f64,
    pub max_principal_angle: f64,
}

pub fn semigroup_compare(
    scenario: &Scenario,
    gens: &Generators,
    cutoff: usize,
    alphas: &[f64],
) -> Result<SemigroupComparison> {
    let h = build_howland(scenario, gens, cutoff)?;
    let eff = effective_generator(scenario, gens)?;
    let b = embedded_cluster_basis(&h, &eff.blocks);
    let m0 = b.ncols();

    let (vals, vecs) = h
        .mat
        .eig()
        .map_err(|e| Error::Linalg(format!("Howland eigendecomposition failed: {e}")))?;
    // continue the unperturbed cluster: take the m0 eigenvectors with the
    // largest overlap with the embedded basis
    let bt = dagger(&b);
    let mut overlaps: Vec<(usize, f64)> = (0..vals.len())
        .map(|i| {
            let v = vecs.column(i).to_owned();
            let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let proj = bt.dot(&v);
            let p = proj.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            (i, p / nrm)
        })
        .collect();
    overlaps.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let selected: Vec<usize> = overlaps[..m0].iter().map(|&(i, _)| i).collect();

    let mut riesz = Array2::zeros((h.size(), m0));
    for (c, &i) in selected.iter().enumerate() {
        riesz.column_mut(c).assign(&vecs.column(i));
    }
    let angles = principal_angles(&riesz, &b);
    let max_angle = angles.iter().cloned().fold(0.0, f64::max);
    if max_angle > 0.3 {
        return Err(Error::Spectral(format!(
            "Riesz subspace misaligned with the enlarged block subspace \
             (principal angle {max_angle:.3} rad)"
        )));
    }

    // oblique restriction onto H0 coordinates through the spectral projector:
    // columns of V = P0 B span the invariant subspace, G V = V C2
    let q_riesz = orthonormalize(&riesz);
    let proj_coords = dagger(&q_riesz).dot(&b);
    let v = q_riesz.dot(&proj_coords);
    let gv = h.mat.dot(&v);
    let vtv = dagger(&v).dot(&v);
    let vgv = dagger(&v).dot(&gv);
    let c2 = solve_matrix(&vtv, &vgv)?;

    let mut per_alpha = Vec::with_capacity(alphas.len());
    let mut sup: f64 = 0.0;
    for &alpha in alphas {
        let e1 = expm(&eff.matrix.mapv(|z| z * alpha));
        let e2 = expm(&c2.mapv(|z| z * alpha));
        let dist = op_norm(&(&e1 - &e2));
        sup = sup.max(dist);
        per_alpha.push((alpha, dist));
    }
    Ok(SemigroupComparison {
        per_alpha,
        sup_distance: sup,
        max_principal_angle: max_angle,
    })
}

/// Eigenvalues inside a disc, matched against another spectrum; used by the
/// truncation-stability checks.
pub fn spectrum_shift_in_disc(
    a: &[C64],
    b: &[C64],
    center: C64,
    radius: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for z in a.iter().filter(|z| (*z - center).norm() <= radius) {
        let nearest = b
            .iter()
            .map(|w| (z - w).norm())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest);
    }
    worst
}
