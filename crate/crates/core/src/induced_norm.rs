//! Trace-norm-induced superoperator norm `‖X‖ = sup_ρ ‖X(ρ)‖₁` and the
//! norms of measurement superoperators.
//!
//! The supremum is attained on pure states, so the optimizer alternates
//! between a state `ψ` and a sign observable `O`, each step maximizing the
//! bilinear objective `Tr[O · X(ψψ†)]` in closed form. Every restart
//! converges to a local maximum; the reported value is a lower bound that is
//! exact whenever one restart finds the global maximum.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::operator::{self, herm_eig_unchecked, hermitian_part, max_norm};
use crate::superop::{unvec, vec_op, Superoperator};
use crate::{CMat, CVec, Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct NormOptions {
    /// Random restarts; `None` means `max(16, 4·D)`.
    pub restarts: Option<usize>,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { restarts: None, max_iter: 200, rel_tol: 1e-10, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct InducedNormResult {
    pub value: f64,
    pub witness_state: CVec,
    /// `Π₊ − Π₋` of `X(ψψ†)` for the witness state.
    pub witness_observable: CMat,
    /// Iterations summed over restarts.
    pub iterations: usize,
    pub restarts_used: usize,
    /// Whether the winning restart met the tolerance.
    pub converged: bool,
    /// Best minus worst restart value.
    pub spread: f64,
    /// Restarts ending within `1e-8` (relative) of the best value.
    pub agreeing: usize,
}

/// Restart summary suitable for reports.
#[derive(Debug, Clone, Serialize)]
pub struct NormDiagnostics {
    pub value: f64,
    pub iterations: usize,
    pub restarts_used: usize,
    pub converged: bool,
    pub spread: f64,
    pub agreeing: usize,
}

impl From<&InducedNormResult> for NormDiagnostics {
    fn from(r: &InducedNormResult) -> Self {
        Self {
            value: r.value,
            iterations: r.iterations,
            restarts_used: r.restarts_used,
            converged: r.converged,
            spread: r.spread,
            agreeing: r.agreeing,
        }
    }
}

pub fn induced_trace_norm(x: &Superoperator, opts: &NormOptions) -> Result<InducedNormResult> {
    induced_trace_norm_warm(x, opts, None)
}

/// As [`induced_trace_norm`], additionally seeding the first restart with
/// `warm` (typically the witness of a neighbouring time point).
pub fn induced_trace_norm_warm(
    x: &Superoperator,
    opts: &NormOptions,
    warm: Option<&CVec>,
) -> Result<InducedNormResult> {
    if !x.hermiticity_preserving {
        return Err(Error::InvalidInput("induced norm needs a Hermiticity-preserving map".into()));
    }
    if let Some(w) = warm {
        if w.len() != x.dim {
            return Err(Error::DimensionMismatch("warm-start state has the wrong length".into()));
        }
    }
    Ok(optimize(&x.matrix, x.dim, opts, warm))
}

struct Local {
    value: f64,
    psi: CVec,
    iters: usize,
    converged: bool,
}

pub(crate) fn optimize(x: &CMat, d: usize, opts: &NormOptions, warm: Option<&CVec>) -> InducedNormResult {
    if x.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        let mut psi = CVec::zeros(d);
        psi[0] = C64::new(1.0, 0.0);
        return InducedNormResult {
            value: 0.0,
            witness_state: psi,
            witness_observable: CMat::zeros(d, d),
            iterations: 0,
            restarts_used: 0,
            converged: true,
            spread: 0.0,
            agreeing: 0,
        };
    }
    let starts = starting_states(d, opts, warm);
    let locals: Vec<Local> = match d {
        2 => fixed2::run(x, &starts, opts),
        3 => fixed3::run(x, &starts, opts),
        4 => fixed4::run(x, &starts, opts),
        _ => {
            let xa = x.adjoint();
            starts.par_iter().map(|s| ascend(x, &xa, d, s.clone(), opts)).collect()
        }
    };

    let mut best = 0;
    for (i, l) in locals.iter().enumerate() {
        if l.value > locals[best].value {
            best = i;
        }
    }
    let top = locals[best].value;
    let worst = locals.iter().map(|l| l.value).fold(f64::INFINITY, f64::min);
    let agreeing = locals.iter().filter(|l| top - l.value <= 1e-8 * top.max(1e-300)).count();
    let psi = locals[best].psi.clone();
    let m = apply_pure(x, &psi, d);
    InducedNormResult {
        value: top,
        witness_observable: operator::sign_operator(&m),
        witness_state: psi,
        iterations: locals.iter().map(|l| l.iters).sum(),
        restarts_used: locals.len(),
        converged: locals[best].converged,
        spread: top - worst,
        agreeing,
    }
}

fn ascend(x: &CMat, xa: &CMat, d: usize, mut psi: CVec, opts: &NormOptions) -> Local {
    let (mut value, mut o) = trace_norm_and_sign(&apply_pure(x, &psi, d));
    let mut iters = 0;
    let mut converged = false;
    while iters < opts.max_iter {
        iters += 1;
        let a = hermitian_part(&unvec(&(xa * vec_op(&o)), d));
        let next = top_eigenvector(&a);
        let m_next = apply_pure(x, &next, d);
        let (v_next, o_next) = trace_norm_and_sign(&m_next);
        debug_assert!(v_next >= value - 1e-9 * value.max(1.0), "ascent decreased: {value} -> {v_next}");
        if v_next < value {
            // round-off only; keep the better point
            converged = true;
            break;
        }
        let gain = v_next - value;
        psi = next;
        value = v_next;
        o = o_next;
        if gain <= opts.rel_tol * value.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Local { value, psi, iters, converged }
}

/// `X(ψψ†)` with `vec(ψψ†) = ψ̄ ⊗ ψ`.
fn apply_pure(x: &CMat, psi: &CVec, d: usize) -> CMat {
    let v = CVec::from_fn(d * d, |r, _| psi[r % d] * psi[r / d].conj());
    hermitian_part(&unvec(&(x * v), d))
}

fn trace_norm_and_sign(m: &CMat) -> (f64, CMat) {
    let d = m.nrows();
    if d == 2 {
        let (lo, hi, v_hi) = eig2(m);
        let tn = lo.abs() + hi.abs();
        let id = CMat::identity(2, 2);
        let o = if lo >= 0.0 {
            id
        } else if hi < 0.0 {
            -id
        } else {
            operator::projector(&v_hi) * C64::new(2.0, 0.0) - id
        };
        return (tn, o);
    }
    let (vals, vecs) = small_eig(m);
    let tn = vals.iter().map(|v| v.abs()).sum();
    let mut o = CMat::zeros(d, d);
    for (k, &v) in vals.iter().enumerate() {
        let s = if v >= 0.0 { 1.0 } else { -1.0 };
        let c = vecs.column(k);
        o.gerc(C64::new(s, 0.0), &c, &c, C64::new(1.0, 0.0));
    }
    (tn, o)
}

fn top_eigenvector(a: &CMat) -> CVec {
    if a.nrows() == 2 {
        return eig2(a).2;
    }
    let (vals, vecs) = small_eig(a);
    let mut best = 0;
    for k in 1..vals.len() {
        if vals[k] > vals[best] {
            best = k;
        }
    }
    vecs.column(best).into_owned()
}

/// Unsorted Hermitian eigensystem; statically sized for the common small
/// dimensions to keep the ascent loop off the heap.
fn small_eig(m: &CMat) -> (Vec<f64>, CMat) {
    macro_rules! fixed {
        ($n:literal) => {{
            let a = nalgebra::SMatrix::<C64, $n, $n>::from_fn(|i, j| m[(i, j)]);
            let e = nalgebra::linalg::SymmetricEigen::new(a);
            let vecs = CMat::from_fn($n, $n, |i, j| e.eigenvectors[(i, j)]);
            (e.eigenvalues.iter().copied().collect(), vecs)
        }};
    }
    match m.nrows() {
        3 => fixed!(3),
        4 => fixed!(4),
        _ => {
            let e = nalgebra::linalg::SymmetricEigen::new(m.clone());
            (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
        }
    }
}

/// Closed-form eigensystem of a Hermitian 2×2 matrix: `(λ₋, λ₊, v₊)`.
fn eig2(m: &CMat) -> (f64, f64, CVec) {
    let (lo, hi, v) = eig2_parts(m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)]);
    (lo, hi, CVec::from_vec(v.to_vec()))
}

/// Eigenvalues and the top eigenvector of `[[a, b], [b̄, d]]`.
fn eig2_parts(a: f64, d: f64, b: C64) -> (f64, f64, [C64; 2]) {
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = half.hypot(b.norm());
    let v = if half >= 0.0 { [C64::new(r + half, 0.0), b.conj()] } else { [b, C64::new(r - half, 0.0)] };
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let v = if n > 0.0 { [v[0] / n, v[1] / n] } else { [C64::new(1.0, 0.0), C64::new(0.0, 0.0)] };
    (mean - r, mean + r, v)
}

/// The ascent of [`ascend`] on stack-allocated matrices for small `D`.
macro_rules! fixed_ascent {
    ($name:ident, $d:literal, $dd:literal, $eig:path) => {
        mod $name {
            use super::*;
            use nalgebra::{SMatrix, SVector};

            type M = SMatrix<C64, $d, $d>;
            type V = SVector<C64, $d>;
            type X = SMatrix<C64, $dd, $dd>;

            fn unvec_herm(w: &SVector<C64, $dd>) -> M {
                let m = M::from_fn(|i, j| w[i + j * $d]);
                (m + m.adjoint()) * C64::new(0.5, 0.0)
            }

            fn apply(x: &X, psi: &V) -> M {
                let v = SVector::<C64, $dd>::from_fn(|r, _| psi[r % $d] * psi[r / $d].conj());
                unvec_herm(&(x * v))
            }

            fn apply_adjoint(xa: &X, o: &M) -> M {
                let v = SVector::<C64, $dd>::from_fn(|r, _| o[(r % $d, r / $d)]);
                unvec_herm(&(xa * v))
            }

            fn norm_and_sign(m: &M) -> (f64, M) {
                let (vals, vecs) = $eig(m);
                let mut o = M::zeros();
                let mut tn = 0.0;
                for k in 0..$d {
                    tn += vals[k].abs();
                    let s = if vals[k] >= 0.0 { 1.0 } else { -1.0 };
                    let c = vecs.column(k);
                    o += c * c.adjoint() * C64::new(s, 0.0);
                }
                (tn, o)
            }

            fn top(a: &M) -> V {
                let (vals, vecs) = $eig(a);
                let mut best = 0;
                for k in 1..$d {
                    if vals[k] > vals[best] {
                        best = k;
                    }
                }
                vecs.column(best).into_owned()
            }

            pub(super) fn run(x: &CMat, starts: &[CVec], opts: &NormOptions) -> Vec<Local> {
                let xs = X::from_fn(|i, j| x[(i, j)]);
                let xa = xs.adjoint();
                starts
                    .par_iter()
                    .map(|s| {
                        let mut psi = V::from_fn(|i, _| s[i]);
                        let (mut value, mut o) = norm_and_sign(&apply(&xs, &psi));
                        let mut iters = 0;
                        let mut converged = false;
                        while iters < opts.max_iter {
                            iters += 1;
                            let next = top(&apply_adjoint(&xa, &o));
                            let (v_next, o_next) = norm_and_sign(&apply(&xs, &next));
                            debug_assert!(v_next >= value - 1e-9 * value.max(1.0), "ascent decreased");
                            if v_next < value {
                                converged = true;
                                break;
                            }
                            let gain = v_next - value;
                            psi = next;
                            value = v_next;
                            o = o_next;
                            if gain <= opts.rel_tol * value.max(f64::MIN_POSITIVE) {
                                converged = true;
                                break;
                            }
                        }
                        Local { value, psi: CVec::from_fn($d, |i, _| psi[i]), iters, converged }
                    })
                    .collect()
            }
        }
    };
}

fn eig2_fixed(m: &nalgebra::Matrix2<C64>) -> ([f64; 2], nalgebra::Matrix2<C64>) {
    let (lo, hi, v) = eig2_parts(m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)]);
    let w = [-v[1].conj(), v[0].conj()];
    ([lo, hi], nalgebra::Matrix2::new(w[0], v[0], w[1], v[1]))
}

macro_rules! eig_fixed {
    ($name:ident, $n:literal) => {
        fn $name(
            m: &nalgebra::SMatrix<C64, $n, $n>,
        ) -> (nalgebra::SVector<f64, $n>, nalgebra::SMatrix<C64, $n, $n>) {
            let e = nalgebra::linalg::SymmetricEigen::new(*m);
            (e.eigenvalues, e.eigenvectors)
        }
    };
}

eig_fixed!(eig3_fixed, 3);
eig_fixed!(eig4_fixed, 4);

fixed_ascent!(fixed2, 2, 4, eig2_fixed);
fixed_ascent!(fixed3, 3, 9, eig3_fixed);
fixed_ascent!(fixed4, 4, 16, eig4_fixed);

fn random_state(rng: &mut ChaCha8Rng, d: usize) -> CVec {
    loop {
        let v = CVec::from_fn(d, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        });
        let n = v.norm();
        if n > 1e-12 {
            return v / C64::new(n, 0.0);
        }
    }
}

/// Seeded stream for restart `r`, independent of scheduling.
fn restart_rng(seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng
}

fn starting_states(d: usize, opts: &NormOptions, warm: Option<&CVec>) -> Vec<CVec> {
    let mut out = Vec::new();
    if let Some(w) = warm {
        let n = w.norm();
        if n > 0.0 {
            out.push(w / C64::new(n, 0.0));
        }
    }
    let basis = |i: usize| {
        let mut v = CVec::zeros(d);
        v[i] = C64::new(1.0, 0.0);
        v
    };
    out.extend((0..d).map(basis));
    if d == 2 {
        for theta in [0.25, 0.5, 0.75].map(|f| f * std::f64::consts::PI) {
            for k in 0..8 {
                let phi = k as f64 * std::f64::consts::FRAC_PI_4;
                let (s, c) = (0.5 * theta).sin_cos();
                out.push(CVec::from_vec(vec![C64::new(c, 0.0), C64::from_polar(s, phi)]));
            }
        }
    } else {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..d {
            for j in i + 1..d {
                for ph in [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)] {
                    let mut v = CVec::zeros(d);
                    v[i] = C64::new(h, 0.0);
                    v[j] = ph * h;
                    out.push(v);
                }
            }
        }
    }
    let n_random = opts.restarts.unwrap_or((4 * d).max(16));
    for r in 0..n_random {
        out.push(random_state(&mut restart_rng(opts.seed, r as u64), d));
    }
    out
}

/// Best of `n_samples` Haar-random pure states; a lower bound on `‖X‖`.
pub fn induced_norm_sampling_oracle(x: &Superoperator, n_samples: usize, seed: u64) -> f64 {
    let d = x.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..n_samples {
        let psi = random_state(&mut rng, d);
        let m = apply_pure(&x.matrix, &psi, d);
        best = best.max(trace_norm_and_sign(&m).0);
    }
    best
}

/// `sup_{‖O‖_max ≤ 1} ‖X†(O)‖_max`, optimized from observable starting points.
/// Equals the induced trace norm of `X` by duality.
pub fn adjoint_max_induced_norm(x: &Superoperator, opts: &NormOptions) -> Result<f64> {
    if !x.hermiticity_preserving {
        return Err(Error::InvalidInput("adjoint norm needs a Hermiticity-preserving map".into()));
    }
    let d = x.dim;
    let xa = x.matrix.adjoint();
    let n_random = opts.restarts.unwrap_or((4 * d).max(16));
    let mut starts: Vec<CMat> = vec![CMat::identity(d, d)];
    for i in 0..d {
        let mut o = CMat::identity(d, d);
        o[(i, i)] = C64::new(-1.0, 0.0);
        starts.push(o);
    }
    for r in 0..n_random {
        let mut rng = restart_rng(opts.seed ^ 0x5eed_0b5e, r as u64);
        let psi = random_state(&mut rng, d);
        starts.push(operator::projector(&psi) * C64::new(2.0, 0.0) - CMat::identity(d, d));
    }
    let best = starts
        .par_iter()
        .map(|o0| {
            let mut o = o0.clone();
            let mut value: f64 = 0.0;
            for _ in 0..opts.max_iter {
                let a = hermitian_part(&unvec(&(&xa * vec_op(&o)), d));
                let (vals, vecs) = herm_eig_unchecked(&a);
                let (lo, hi) = (vals[0], vals[d - 1]);
                let v = lo.abs().max(hi.abs());
                let psi = vecs.column(if hi >= -lo { d - 1 } else { 0 }).into_owned();
                let m = apply_pure(&x.matrix, &psi, d);
                o = trace_norm_and_sign(&m).1;
                if v - value <= opts.rel_tol * v.max(f64::MIN_POSITIVE) {
                    value = value.max(v);
                    break;
                }
                value = v;
            }
            value
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);
    Ok(best)
}

#[derive(Debug, Clone)]
pub enum Measurement {
    /// Observable `X` measured projectively.
    VonNeumann(CMat),
    /// Kraus operators `P_n` with outcome values `x_n`.
    Povm { kraus: Vec<CMat>, weights: Vec<f64> },
    /// Symmetrized correlator `ρ ↦ (Xρ + ρX)/2`.
    Correlator(CMat),
}

pub fn measurement_superop_norm(m: &Measurement) -> Result<f64> {
    match m {
        Measurement::VonNeumann(x) | Measurement::Correlator(x) => {
            if !operator::is_hermitian(x, operator::HERM_TOL) {
                return Err(Error::NonHermitian(operator::hermitian_deviation(x)));
            }
            max_norm(x)
        }
        Measurement::Povm { kraus, weights } => {
            if kraus.is_empty() || kraus.len() != weights.len() {
                return Err(Error::InvalidInput("POVM needs one weight per Kraus operator".into()));
            }
            let d = kraus[0].nrows();
            let mut completeness = CMat::zeros(d, d);
            let mut weighted = CMat::zeros(d, d);
            for (p, &x) in kraus.iter().zip(weights) {
                if p.shape() != (d, d) {
                    return Err(Error::DimensionMismatch("Kraus operators differ in size".into()));
                }
                let e = p.adjoint() * p;
                weighted += &e * C64::new(x.abs(), 0.0);
                completeness += e;
            }
            let dev = (completeness - CMat::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if dev > 1e-9 {
                return Err(Error::InvalidInput(format!("POVM is incomplete (deviation {dev:.2e})")));
            }
            max_norm(&weighted)
        }
    }
}

/// Superoperator `ρ ↦ (Oρ + ρO)/2`.
pub fn correlator_superop(o: &CMat) -> Superoperator {
    let d = o.nrows();
    let id = CMat::identity(d, d);
    let m = (id.kronecker(o) + o.transpose().kronecker(&id)) * C64::new(0.5, 0.0);
    Superoperator { dim: d, matrix: m, hermiticity_preserving: true, trace_preserving: false }
}
