//! Dense complex linear algebra helpers shared by every module: vectorization
//! in the column-stacking convention, Hilbert-Schmidt norms, matrix
//! exponentials by scaling-and-squaring, SVD-based nullspaces and adaptive
//! Simpson quadrature.

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{Eigh, Norm, Solve, UPLO, SVD};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// `vec` of a matrix in the column-stacking convention: the (p,q) entry of
/// `a` lands at index `q*d + p`.
pub fn vectorize(a: &Array2<C64>) -> Array1<C64> {
    let d = a.nrows();
    let mut v = Array1::zeros(d * d);
    for q in 0..d {
        for p in 0..d {
            v[q * d + p] = a[(p, q)];
        }
    }
    v
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &Array1<C64>, d: usize) -> Array2<C64> {
    let mut a = Array2::zeros((d, d));
    for q in 0..d {
        for p in 0..d {
            a[(p, q)] = v[q * d + p];
        }
    }
    a
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Conjugate transpose.
pub fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Hermitian part `(a + a†)/2`.
pub fn hermitize(a: &Array2<C64>) -> Array2<C64> {
    let ad = dagger(a);
    (a + &ad).mapv(|z| z * 0.5)
}

/// Largest entrywise modulus; the scale-aware check norm used throughout.
pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Hermiticity residual `max |a - a†|` entrywise.
pub fn herm_residual(a: &Array2<C64>) -> f64 {
    let ad = dagger(a);
    max_abs(&(a - &ad))
}

/// Frobenius (Hilbert-Schmidt) norm.
pub fn fro_norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hilbert-Schmidt inner product `Tr(a† b)`.
pub fn hs_inner(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn trace(a: &Array2<C64>) -> C64 {
    a.diag().iter().sum()
}

/// Spectral norm (largest singular value).
pub fn op_norm(a: &Array2<C64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let (_, s, _) = a.svd(false, false).expect("svd failed");
    s.iter().cloned().fold(0.0, f64::max)
}

/// Hermitian eigendecomposition with eigenvectors as columns, ascending
/// eigenvalues. The LAPACK binding hands back the conjugated vectors for
/// row-major complex input, so they are conjugated here before returning.
pub fn eigh_decompose(a: &Array2<C64>) -> (Array1<f64>, Array2<C64>) {
    let (vals, vecs) = a
        .clone()
        .eigh(UPLO::Lower)
        .expect("hermitian eigendecomposition failed");
    (vals, vecs.mapv(|z| z.conj()))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(a: &Array2<C64>) -> Array1<f64> {
    eigh_decompose(a).0
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigval(a: &Array2<C64>) -> f64 {
    let vals = eigvalsh(a);
    vals.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Identity matrix of size `d`.
pub fn eye(d: usize) -> Array2<C64> {
    Array2::eye(d)
}

/// Matrix exponential by Pade-13 scaling and squaring (Higham 2005).
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let d = a.nrows();
    assert_eq!(d, a.ncols(), "expm requires a square matrix");
    if d == 0 {
        return Array2::zeros((0, 0));
    }
    let norm = a.map_axis(Axis(0), |col| col.iter().map(|z| z.norm()).sum::<f64>())
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    let theta13 = 5.371920351148152;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let scale = C64::new(0.5f64.powi(s), 0.0);
    let a = a.mapv(|z| z * scale);

    let b: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let id = eye(d);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let u_inner = &a6.mapv(|z| z * b[13])
        + &a4.mapv(|z| z * b[11])
        + &a2.mapv(|z| z * b[9]);
    let u = a.dot(
        &(a6.dot(&u_inner)
            + &a6.mapv(|z| z * b[7])
            + &a4.mapv(|z| z * b[5])
            + &a2.mapv(|z| z * b[3])
            + &id.mapv(|z| z * b[1])),
    );
    let v_inner = &a6.mapv(|z| z * b[12])
        + &a4.mapv(|z| z * b[10])
        + &a2.mapv(|z| z * b[8]);
    let v = a6.dot(&v_inner)
        + &a6.mapv(|z| z * b[6])
        + &a4.mapv(|z| z * b[4])
        + &a2.mapv(|z| z * b[2])
        + &id.mapv(|z| z * b[0]);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve_matrix(&q, &p).expect("expm Pade solve failed");
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

/// Solve `A X = B` column by column.
pub fn solve_matrix(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>> {
    let d = a.nrows();
    let mut x = Array2::zeros((d, b.ncols()));
    for j in 0..b.ncols() {
        let col = b.column(j).to_owned();
        let sol = a
            .solve(&col)
            .map_err(|e| Error::Linalg(format!("linear solve failed: {e}")))?;
        x.column_mut(j).assign(&sol);
    }
    Ok(x)
}

/// Nullspace report from an SVD: singular values (descending) and right
/// singular vectors.
pub struct NullspaceReport {
    pub singular_values: Vec<f64>,
    /// Right singular vectors paired with `singular_values`, as columns.
    pub right_vectors: Array2<C64>,
}

impl NullspaceReport {
    /// Number of singular values below `rel_tol * s_max`.
    pub fn kernel_dim(&self, rel_tol: f64) -> usize {
        let smax = self.singular_values.first().cloned().unwrap_or(0.0);
        self.singular_values
            .iter()
            .filter(|&&s| s <= rel_tol * smax)
            .count()
    }

    /// Kernel basis vectors (columns), by the same relative threshold.
    pub fn kernel_vectors(&self, rel_tol: f64) -> Array2<C64> {
        let smax = self.singular_values.first().cloned().unwrap_or(0.0);
        let idx: Vec<usize> = (0..self.singular_values.len())
            .filter(|&i| self.singular_values[i] <= rel_tol * smax)
            .collect();
        let n = self.right_vectors.nrows();
        let mut out = Array2::zeros((n, idx.len()));
        for (c, &i) in idx.iter().enumerate() {
            out.column_mut(c).assign(&self.right_vectors.column(i));
        }
        out
    }
}

/// Full SVD wrapped for nullspace queries. Works for rectangular `a`.
pub fn nullspace(a: &Array2<C64>) -> NullspaceReport {
    let (_, s, vt) = a.svd(false, true).expect("svd failed");
    let vt = vt.expect("svd did not return V^T");
    let v = dagger(&vt);
    let n = v.ncols();
    let mut svals: Vec<f64> = s.to_vec();
    // LAPACK returns singular values descending already; pad with zeros for
    // the nullspace directions a wide/tall matrix leaves unconstrained.
    while svals.len() < n {
        svals.push(0.0);
    }
    NullspaceReport {
        singular_values: svals,
        right_vectors: v,
    }
}

/// Gram-Schmidt orthonormalization of the columns of `a` (drops nothing;
/// caller guarantees independence).
pub fn orthonormalize(a: &Array2<C64>) -> Array2<C64> {
    let mut q = a.to_owned();
    let n = q.ncols();
    for j in 0..n {
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i).to_owned();
                let proj: C64 = qi.iter().zip(q.column(j).iter()).map(|(x, y)| x.conj() * y).sum();
                let update = qi.mapv(|z| z * proj);
                let mut col = q.column_mut(j);
                col.zip_mut_with(&update, |a, b| *a -= b);
            }
        }
        let nrm = q.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(nrm > 1e-14, "orthonormalize: dependent column {j}");
        q.column_mut(j).mapv_inplace(|z| z / nrm);
    }
    q
}

/// Principal angles (radians) between the column spans of `a` and `b`.
pub fn principal_angles(a: &Array2<C64>, b: &Array2<C64>) -> Vec<f64> {
    let qa = orthonormalize(a);
    let qb = orthonormalize(b);
    let m = dagger(&qa).dot(&qb);
    let (_, s, _) = m.svd(false, false).expect("svd failed");
    s.iter().map(|&x| x.min(1.0).acos()).collect()
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &Array1<C64>) -> f64 {
    v.norm_l2()
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<R: rand::Rng>(rng: &mut R, d: usize) -> Array2<C64> {
    let mut a = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            a[(i, j)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    hermitize(&a)
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`,
/// with a rounding-noise floor so the per-interval tolerance cannot chase
/// cancellation error below machine precision.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        noise: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || delta.abs() <= noise || (b - a) < 1e-13 {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Quadrature(
                "adaptive Simpson failed to converge".into(),
            ));
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, tol * 0.5, noise, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, tol * 0.5, noise, depth - 1)?)
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, b - a);
    let noise = f64::EPSILON * (1.0 + fa.abs().max(fm.abs()).max(fb.abs()) + whole.abs());
    recurse(f, a, b, fa, fm, fb, whole, tol, noise, 48)
}

/// Piece-wise adaptive Simpson with interior split points (for integrands
/// with kinks at known locations).
pub fn adaptive_simpson_split<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    splits: &[f64],
    tol: f64,
) -> Result<f64> {
    let mut pts: Vec<f64> = vec![a, b];
    pts.extend(splits.iter().cloned().filter(|&x| x > a && x < b));
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let n = pts.len() - 1;
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += adaptive_simpson(f, w[0], w[1], tol / n as f64)?;
    }
    Ok(total)
}
