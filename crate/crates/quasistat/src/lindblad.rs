//! Superoperators of the effective theory.
//!
//! Everything is represented on vectorized d x d matrices in the
//! column-stacking convention, so left multiplication by A lifts to
//! (1 kron A), right multiplication to (A^T kron 1) and vec(A X B) =
//! (B^T kron A) vec(X). The reservoir generator splits into a Lamb-shift
//! commutator and a dissipator built from the jump family
//! V_{j,k}^(l) = Pi_j Q_l Pi_k with rates c_{j,k}^(l) = pi f_l^(beta)(E_k - E_j)
//! and principal-value coefficients d_{j,k}^(l).

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{
    adaptive_simpson_split, dagger, expm, eye, kron, max_abs, op_norm, trace, unvectorize,
    vectorize,
};
use crate::model::{AtomSpec, CouplingSpec, PumpSpec, Scenario, SpectralForm};

/// A linear map on d x d matrices, stored densely as a d^2 x d^2 matrix.
#[derive(Debug, Clone)]
pub struct SuperOperator {
    pub mat: Array2<C64>,
    pub dim: usize,
}

impl SuperOperator {
    pub fn zero(dim: usize) -> Self {
        Self {
            mat: Array2::zeros((dim * dim, dim * dim)),
            dim,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: eye(dim * dim),
            dim,
        }
    }

    /// Lift of left multiplication: X -> A X.
    pub fn left_mul(a: &Array2<C64>) -> Self {
        let d = a.nrows();
        Self {
            mat: kron(&eye(d), a),
            dim: d,
        }
    }

    /// Lift of right multiplication: X -> X A.
    pub fn right_mul(a: &Array2<C64>) -> Self {
        let d = a.nrows();
        Self {
            mat: kron(&a.t().to_owned(), &eye(d)),
            dim: d,
        }
    }

    /// Hamiltonian generator X -> -i [h, X].
    pub fn hamiltonian(h: &Array2<C64>) -> Self {
        let mi = C64::new(0.0, -1.0);
        let mut s = Self::left_mul(h).sub(&Self::right_mul(h));
        s.mat.mapv_inplace(|z| z * mi);
        s
    }

    /// Sandwich map X -> V X V^dagger.
    pub fn sandwich(v: &Array2<C64>) -> Self {
        let d = v.nrows();
        Self {
            mat: kron(&v.mapv(|z| z.conj()), v),
            dim: d,
        }
    }

    /// Conjugation X -> U X U^dagger for unitary (or any) U.
    pub fn conjugation(u: &Array2<C64>) -> Self {
        Self::sandwich(u)
    }

    pub fn apply(&self, x: &Array2<C64>) -> Array2<C64> {
        unvectorize(&self.mat.dot(&vectorize(x)), self.dim)
    }

    pub fn apply_vec(&self, x: &Array1<C64>) -> Array1<C64> {
        self.mat.dot(x)
    }

    /// Composition self after other.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            mat: self.mat.dot(&other.mat),
            dim: self.dim,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat + &other.mat,
            dim: self.dim,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            mat: &self.mat - &other.mat,
            dim: self.dim,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mat: self.mat.mapv(|z| z * s),
            dim: self.dim,
        }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self {
            mat: self.mat.mapv(|z| z * s),
            dim: self.dim,
        }
    }

    /// Adjoint with respect to the Hilbert-Schmidt inner product.
    pub fn adjoint(&self) -> Self {
        Self {
            mat: dagger(&self.mat),
            dim: self.dim,
        }
    }

    /// Semigroup element e^{t L}.
    pub fn exp(&self, t: f64) -> Self {
        Self {
            mat: expm(&self.mat.mapv(|z| z * t)),
            dim: self.dim,
        }
    }

    pub fn norm(&self) -> f64 {
        op_norm(&self.mat)
    }

    /// Max-entry distance to another superoperator.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs(&(&self.mat - &other.mat))
    }

    /// Residual of Hermiticity preservation: max over matrix units e_pq of
    /// |L(e_pq)^dagger - L(e_qp)| relative to |L| |X|.
    pub fn hermiticity_preservation_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for p in 0..d {
            for q in 0..d {
                let mut epq: Array2<C64> = Array2::zeros((d, d));
                epq[(p, q)] = C64::new(1.0, 0.0);
                let mut eqp: Array2<C64> = Array2::zeros((d, d));
                eqp[(q, p)] = C64::new(1.0, 0.0);
                let diff = dagger(&self.apply(&epq)) - self.apply(&eqp);
                worst = worst.max(max_abs(&diff));
            }
        }
        worst
    }

    /// Residual of trace annihilation: |L^*(1)| relative to |L|.
    pub fn trace_annihilation_residual(&self) -> f64 {
        let one = vectorize(&eye(self.dim));
        let v = dagger(&self.mat).dot(&one);
        v.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// One jump operator with its transition data.
#[derive(Debug, Clone)]
pub struct Jump {
    /// Destination level (0-based).
    pub j: usize,
    /// Source level (0-based).
    pub k: usize,
    /// Coupling channel (0-based).
    pub ell: usize,
    /// V = Pi_j Q_l Pi_k.
    pub v: Array2<C64>,
    /// Transition rate pi f^(beta)(E_k - E_j), nonnegative.
    pub c: f64,
    /// Lamb-shift coefficient, the principal value of f^(beta) shifted by
    /// E_k - E_j against 1/x.
    pub d: f64,
    /// Bohr frequency E_j - E_k of this jump.
    pub eps: f64,
}

/// All jumps of a scenario, indexed by (level pair, channel).
#[derive(Debug, Clone)]
pub struct JumpFamily {
    pub jumps: Vec<Jump>,
    pub dim: usize,
    pub level_count: usize,
}

impl JumpFamily {
    /// Jumps whose rate is non-negligible relative to the largest rate.
    pub fn active(&self) -> Vec<&Jump> {
        let cmax = self.jumps.iter().map(|j| j.c).fold(0.0, f64::max);
        if cmax == 0.0 {
            return Vec::new();
        }
        self.jumps.iter().filter(|j| j.c > 1e-14 * cmax).collect()
    }
}

/// Evaluate f^(beta) for channel `ell` at `x`.
///
/// Closed form for the radial family, linear interpolation for tables.
/// Direct rate tables have no spectral function and are rejected.
pub fn spectral_density(coupling: &CouplingSpec, ell: usize, x: f64) -> Result<f64> {
    let form = coupling
        .forms
        .get(ell)
        .ok_or_else(|| Error::InvalidModel(format!("channel {ell} out of range")))?;
    match form {
        SpectralForm::ExpRadial { c, a } => Ok(exp_radial_density(*c, *a, coupling.beta, x)),
        SpectralForm::Table { x: xs, f_beta } => {
            if x < xs[0] || x > *xs.last().unwrap() {
                return Err(Error::InvalidModel(format!(
                    "x = {x} outside spectral table range [{}, {}]",
                    xs[0],
                    xs.last().unwrap()
                )));
            }
            Ok(interp_linear(xs, f_beta, x))
        }
        SpectralForm::Rates { .. } => Err(Error::InvalidModel(
            "direct rate tables have no spectral function".into(),
        )),
    }
}

fn exp_radial_density(c: f64, a: f64, beta: f64, x: f64) -> f64 {
    4.0 * std::f64::consts::PI * c * c * (-2.0 * a * x.abs()).exp() / (1.0 + (-beta * x).exp())
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => ys[i],
        Err(i) => {
            let (i0, i1) = (i - 1, i);
            let t = (x - xs[i0]) / (xs[i1] - xs[i0]);
            ys[i0] * (1.0 - t) + ys[i1] * t
        }
    }
}

/// Table lookup extended by zero outside the sampled range; quadrature only.
fn table_extended(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x < xs[0] || x > *xs.last().unwrap() {
        0.0
    } else {
        interp_linear(xs, ys, x)
    }
}

/// Principal value of `f(. + delta)` against `1/x`, computed as
/// `int_0^X [f(delta + x) - f(delta - x)] / x dx` with the integrand extended
/// by its limit at x -> 0 and the domain split at the kinks of f.
fn principal_value_shifted<F: Fn(f64) -> f64>(
    f: &F,
    delta: f64,
    kinks: &[f64],
    x_max: f64,
    tol: f64,
) -> Result<f64> {
    // below 1e-7 the integrand is its x -> 0 limit to working precision,
    // and clamping there avoids catastrophic cancellation in f(d+x) - f(d-x)
    let integrand = |x: f64| -> f64 {
        let x = if x < 1e-7 { 1e-7 } else { x };
        (f(delta + x) - f(delta - x)) / x
    };
    // f(delta + x) has a kink at x = kink - delta, f(delta - x) at delta - kink
    let mut splits: Vec<f64> = Vec::new();
    for &kappa in kinks {
        let s1 = kappa - delta;
        let s2 = delta - kappa;
        if s1 > 0.0 {
            splits.push(s1);
        }
        if s2 > 0.0 {
            splits.push(s2);
        }
    }
    adaptive_simpson_split(&integrand, 0.0, x_max, &splits, tol)
}

/// Lamb-shift coefficient for channel `ell` at level shift `delta = E_k - E_j`.
fn lamb_coefficient(coupling: &CouplingSpec, ell: usize, delta: f64) -> Result<f64> {
    match &coupling.forms[ell] {
        SpectralForm::ExpRadial { c, a } => {
            let beta = coupling.beta;
            let amp = 4.0 * std::f64::consts::PI * c * c;
            let f = |y: f64| exp_radial_density(*c, *a, beta, y);
            // integrand decays like e^{-2a x} past |delta|
            let x_max = delta.abs() + 30.0 / (2.0 * a) + 10.0;
            let tol = 1e-10 * (1.0 + amp);
            principal_value_shifted(&f, delta, &[0.0], x_max, tol)
        }
        SpectralForm::Table { x, f_beta } => {
            let f = |y: f64| table_extended(x, f_beta, y);
            let reach = x[0].abs().max(x.last().unwrap().abs());
            let x_max = reach + delta.abs() + 1.0;
            let peak = f_beta.iter().cloned().fold(0.0, f64::max);
            let tol = 1e-10 * (1.0 + peak);
            principal_value_shifted(&f, delta, x, x_max, tol)
        }
        SpectralForm::Rates { .. } => unreachable!("rates form bypasses quadrature"),
    }
}

/// Assemble the jump family of a scenario: V_{j,k}^(l) = Pi_j Q_l Pi_k with
/// rate and Lamb coefficients from the spectral data.
pub fn build_jumps(atom: &AtomSpec, coupling: &CouplingSpec) -> Result<JumpFamily> {
    let n = atom.level_count();
    let mut jumps = Vec::new();
    for ell in 0..coupling.channel_count() {
        for j in 0..n {
            for k in 0..n {
                let v = atom.projectors[j]
                    .dot(&coupling.q[ell])
                    .dot(&atom.projectors[k]);
                let delta = atom.energies[k] - atom.energies[j];
                let (c, d) = match &coupling.forms[ell] {
                    SpectralForm::Rates { c, d } => (c[j][k], d[j][k]),
                    SpectralForm::Table { x, f_beta } => {
                        // the sampled density vanishes outside its grid
                        let f = table_extended(x, f_beta, delta);
                        (std::f64::consts::PI * f, lamb_coefficient(coupling, ell, delta)?)
                    }
                    SpectralForm::ExpRadial { .. } => {
                        let f = spectral_density(coupling, ell, delta)?;
                        (std::f64::consts::PI * f, lamb_coefficient(coupling, ell, delta)?)
                    }
                };
                jumps.push(Jump {
                    j,
                    k,
                    ell,
                    v,
                    c,
                    d,
                    eps: -delta,
                });
            }
        }
    }
    Ok(JumpFamily {
        jumps,
        dim: atom.dim,
        level_count: n,
    })
}

/// Lamb-shift Hamiltonian: -1/2 sum over nonzero Bohr frequencies of
/// d_{j,k}^(l) V^dagger V.
pub fn build_lamb_shift(jumps: &JumpFamily) -> Array2<C64> {
    let d = jumps.dim;
    let mut h = Array2::zeros((d, d));
    for jump in &jumps.jumps {
        if jump.eps.abs() < 1e-12 {
            continue;
        }
        let vdv = dagger(&jump.v).dot(&jump.v);
        h = h + vdv.mapv(|z| z * C64::new(-0.5 * jump.d, 0.0));
    }
    h
}

/// Dissipator in Lindblad form, 1/2 sum over all transitions of
/// c (2 V rho V^dagger - V^dagger V rho - rho V^dagger V).
pub fn build_dissipator(jumps: &JumpFamily) -> SuperOperator {
    let d = jumps.dim;
    let mut s = SuperOperator::zero(d);
    for jump in &jumps.jumps {
        if jump.c == 0.0 {
            continue;
        }
        let vdv = dagger(&jump.v).dot(&jump.v);
        let gain = SuperOperator::sandwich(&jump.v).scale(2.0);
        let loss = SuperOperator::left_mul(&vdv).add(&SuperOperator::right_mul(&vdv));
        s = s.add(&gain.sub(&loss).scale(0.5 * jump.c));
    }
    s
}

/// Reservoir generator -i[H_Lamb, .] + dissipator.
pub fn build_reservoir_generator(atom: &AtomSpec, coupling: &CouplingSpec) -> Result<SuperOperator> {
    let jumps = build_jumps(atom, coupling)?;
    Ok(reservoir_from_jumps(&jumps))
}

/// Reservoir generator from an already-built jump family.
pub fn reservoir_from_jumps(jumps: &JumpFamily) -> SuperOperator {
    let lamb = build_lamb_shift(jumps);
    SuperOperator::hamiltonian(&lamb).add(&build_dissipator(jumps))
}

/// Pump generator -i[H_p, .] with H_p = h_p + h_p^dagger.
pub fn build_pump_generator(pump: &PumpSpec) -> SuperOperator {
    SuperOperator::hamiltonian(&pump.h_pump())
}

/// Free atomic generator -i[H_at, .].
pub fn build_free_generator(atom: &AtomSpec) -> SuperOperator {
    SuperOperator::hamiltonian(&atom.hamiltonian())
}

/// The cached generators of a scenario, built once and reused.
#[derive(Debug, Clone)]
pub struct Generators {
    pub jumps: JumpFamily,
    pub lamb: Array2<C64>,
    pub free: SuperOperator,
    pub pump: SuperOperator,
    pub reservoir: SuperOperator,
}

impl Generators {
    pub fn build(scenario: &Scenario) -> Result<Self> {
        let jumps = build_jumps(&scenario.atom, &scenario.coupling)?;
        let lamb = build_lamb_shift(&jumps);
        let reservoir = SuperOperator::hamiltonian(&lamb).add(&build_dissipator(&jumps));
        Ok(Self {
            jumps,
            lamb,
            free: build_free_generator(&scenario.atom),
            pump: build_pump_generator(&scenario.pump),
            reservoir,
        })
    }

    /// Full time-dependent generator L_at + eta cos(omega t) L_p + lambda^2 L_R.
    pub fn at_time(&self, scenario: &Scenario, t: f64) -> SuperOperator {
        let eta = scenario.eta_at(t);
        let cosine = (scenario.pump.omega * t).cos();
        self.free
            .add(&self.pump.scale(eta * cosine))
            .add(&self.reservoir.scale(scenario.lambda * scenario.lambda))
    }
}

/// Convenience wrapper matching the per-scenario cache.
pub fn generator_at_time(scenario: &Scenario, t: f64) -> Result<SuperOperator> {
    Ok(Generators::build(scenario)?.at_time(scenario, t))
}

/// Trace of L(x); used by tests and diagnostics.
pub fn trace_of_image(l: &SuperOperator, x: &Array2<C64>) -> C64 {
    trace(&l.apply(x))
}
