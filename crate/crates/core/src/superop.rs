//! Liouvillians, evolution superoperators and their spectral decomposition.
//!
//! Vectorization stacks columns, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::linalg::SVD;
use serde::Serialize;

use crate::eig::{self, EigenSystem};
use crate::operator::{hermitian_deviation, is_hermitian};
use crate::{CMat, CVec, Error, Result, C64};

/// Condition number above which the eigenvector basis is treated as a
/// Jordan block.
pub const DEFECT_TOL: f64 = 1e8;

pub fn vec_op(a: &CMat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

pub fn unvec(v: &CVec, d: usize) -> CMat {
    CMat::from_column_slice(d, d, v.as_slice())
}

/// `vec(A) ↦ vec(A†)`, the antilinear map pairing conjugate modes.
pub(crate) fn dagger_vec(v: &CVec, d: usize) -> CVec {
    CVec::from_fn(d * d, |r, _| v[(r % d) * d + r / d].conj())
}

#[derive(Debug, Clone)]
pub struct QuantumModel {
    pub dim: usize,
    pub hamiltonian: CMat,
    pub jumps: Vec<CMat>,
}

impl QuantumModel {
    pub fn new(hamiltonian: CMat, jumps: Vec<CMat>) -> Result<Self> {
        let dim = hamiltonian.nrows();
        if dim == 0 || !hamiltonian.is_square() {
            return Err(Error::DimensionMismatch("Hamiltonian must be a nonempty square matrix".into()));
        }
        for (j, op) in jumps.iter().enumerate() {
            if op.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "jump {j} is {}x{}, expected {dim}x{dim}",
                    op.nrows(),
                    op.ncols()
                )));
            }
        }
        let all = std::iter::once(&hamiltonian).chain(jumps.iter());
        if all.flat_map(|m| m.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite model entry".into()));
        }
        if !is_hermitian(&hamiltonian, 1e-12) {
            return Err(Error::NonHermitian(hermitian_deviation(&hamiltonian)));
        }
        Ok(Self { dim, hamiltonian, jumps })
    }
}

#[derive(Debug, Clone)]
pub struct Superoperator {
    pub dim: usize,
    pub matrix: CMat,
    pub hermiticity_preserving: bool,
    pub trace_preserving: bool,
}

impl Superoperator {
    /// Wraps a `D²×D²` matrix, detecting both structural flags.
    pub fn new(dim: usize, matrix: CMat) -> Result<Self> {
        if matrix.shape() != (dim * dim, dim * dim) {
            return Err(Error::DimensionMismatch(format!(
                "superoperator must be {0}x{0}",
                dim * dim
            )));
        }
        let scale = matrix.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let tol = 1e-10 * scale;
        let hermiticity_preserving = preserves_hermiticity(&matrix, dim, tol);
        let trace_preserving = preserves_trace(&matrix, dim, tol);
        Ok(Self { dim, matrix, hermiticity_preserving, trace_preserving })
    }

    pub(crate) fn trusted(dim: usize, matrix: CMat, trace_preserving: bool) -> Self {
        Self { dim, matrix, hermiticity_preserving: true, trace_preserving }
    }

    pub fn identity(dim: usize) -> Self {
        Self::trusted(dim, CMat::identity(dim * dim, dim * dim), true)
    }

    pub fn zero(dim: usize) -> Self {
        Self::trusted(dim, CMat::zeros(dim * dim, dim * dim), false)
    }

    pub fn apply(&self, a: &CMat) -> CMat {
        unvec(&(&self.matrix * vec_op(a)), self.dim)
    }

    /// Hilbert-Schmidt adjoint, `Tr(A† X(B)) = Tr(X†(A)† B)`.
    pub fn adjoint(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), trace_preserving: false, ..self.clone() }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
            hermiticity_preserving: self.hermiticity_preserving && other.hermiticity_preserving,
            trace_preserving: self.trace_preserving && other.trace_preserving,
        }
    }

    /// `self − other`; a difference of trace-preserving maps annihilates traces
    /// and is flagged as not trace preserving.
    pub fn minus(&self, other: &Self) -> Self {
        Self {
            dim: self.dim,
            matrix: &self.matrix - &other.matrix,
            hermiticity_preserving: self.hermiticity_preserving && other.hermiticity_preserving,
            trace_preserving: false,
        }
    }

    /// Whether `Tr X(ρ) = 0` for all `ρ`, i.e. `X` generates a
    /// trace-preserving semigroup.
    pub fn annihilates_trace(&self) -> bool {
        let d = self.dim;
        let scale = self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        (0..d * d).all(|c| (0..d).map(|i| self.matrix[(i + i * d, c)]).sum::<C64>().norm() <= 1e-10 * scale)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * C64::new(s, 0.0),
            trace_preserving: self.trace_preserving && s == 1.0,
            ..self.clone()
        }
    }
}

fn preserves_hermiticity(m: &CMat, d: usize, tol: f64) -> bool {
    // X(E_ji) must equal X(E_ij)† for every matrix unit
    for i in 0..d {
        for j in 0..d {
            let a = m.column(i + j * d);
            let b = m.column(j + i * d);
            for r in 0..d * d {
                let (p, q) = (r % d, r / d);
                if (a[r] - b[q + p * d].conj()).norm() > tol {
                    return false;
                }
            }
        }
    }
    true
}

fn preserves_trace(m: &CMat, d: usize, tol: f64) -> bool {
    (0..d * d).all(|c| {
        let tr: C64 = (0..d).map(|i| m[(i + i * d, c)]).sum();
        let expect = if c % (d + 1) == 0 { 1.0 } else { 0.0 };
        (tr - C64::new(expect, 0.0)).norm() <= tol
    })
}

/// Lindblad generator in the column-stacking convention,
/// `−i(𝟙⊗H − Hᵀ⊗𝟙) + Σ_j [J̄_j⊗J_j − ½(𝟙⊗J_j†J_j + (J_j†J_j)ᵀ⊗𝟙)]`.
pub fn build_liouvillian(model: &QuantumModel) -> Superoperator {
    let d = model.dim;
    let id = CMat::identity(d, d);
    let h = &model.hamiltonian;
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * C64::new(0.0, -1.0);
    for j in &model.jumps {
        let k = j.adjoint() * j;
        l += j.conjugate().kronecker(j);
        l -= (id.kronecker(&k) + k.transpose().kronecker(&id)) * C64::new(0.5, 0.0);
    }
    Superoperator { dim: d, matrix: l, hermiticity_preserving: true, trace_preserving: false }
}

/// Eigen-decomposition `L = Σ_k λ_k |R_k⟫⟪L_k|` with `Tr(L_k R_l) = δ_kl`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub dim: usize,
    pub eigenvalues: Vec<C64>,
    pub right_modes: Vec<CMat>,
    pub left_modes: Vec<CMat>,
    pub m_ss: usize,
    pub zero_tol: f64,
    pub eigvec_condition: f64,
    /// `vec(R_k)` as columns.
    right: CMat,
    /// Row `k` is the functional `ρ ↦ Tr(L_k ρ)` on `vec(ρ)`.
    left: CMat,
}

/// Decomposes a Liouvillian. `zero_tol` defaults to `1e-9·max|λ|`.
pub fn spectral_decompose(l: &Superoperator, zero_tol: Option<f64>) -> Result<SpectralData> {
    if !l.hermiticity_preserving {
        return Err(Error::InvalidInput("Liouvillian must preserve Hermiticity".into()));
    }
    let d = l.dim;
    let partner = move |v: &CVec| dagger_vec(v, d);
    let es = eig::decompose(&l.matrix, zero_tol, DEFECT_TOL, Some(&partner))?;
    normalize(es, d)
}

fn normalize(es: EigenSystem, d: usize) -> Result<SpectralData> {
    let EigenSystem { values, mut right, condition, tol, .. } = es;
    let n = d * d;
    let m_ss = values.iter().filter(|v| v.norm() <= tol).count();

    let mut k = 0;
    while k < n {
        let paired = values[k].im > 0.0 && k + 1 < n;
        let mut v = right.column(k).into_owned();
        if k == 0 && m_ss == 1 {
            let rho = unvec(&v, d);
            let rho = (&rho + rho.adjoint()) * (C64::new(0.5, 0.0) / rho.trace());
            right.set_column(0, &vec_op(&rho));
            k += 1;
            continue;
        }
        let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let lead = *v.iter().find(|z| z.norm() >= big * (1.0 - 1e-9)).unwrap();
        let hermitian = !paired && (&v - dagger_vec(&v, d)).norm() <= 1e-10 * v.norm();
        let phase = if hermitian {
            let s = if lead.re.abs() > 1e-12 * big { lead.re } else { lead.im };
            C64::new(s.signum(), 0.0)
        } else {
            lead.conj() / lead.norm()
        };
        v *= phase;
        right.set_column(k, &v);
        if paired {
            right.set_column(k + 1, &dagger_vec(&v, d));
            k += 2;
        } else {
            k += 1;
        }
    }

    let mut left = right.clone().try_inverse().ok_or(Error::DefectiveLiouvillian(f64::INFINITY))?;
    if m_ss == 1 {
        for i in 0..d {
            for j in 0..d {
                left[(0, i + j * d)] = C64::new(if i == j { 1.0 } else { 0.0 }, 0.0);
            }
        }
    }

    // scale so that every left mode has unit max norm
    for k in 0..n {
        let lk = left_operator(&left, k, d);
        let s = SVD::new(lk, false, false).singular_values.max();
        if s > 0.0 {
            let mut col = right.column_mut(k);
            col *= C64::new(s, 0.0);
            let mut row = left.row_mut(k);
            row /= C64::new(s, 0.0);
        }
    }

    let right_modes = (0..n).map(|k| unvec(&right.column(k).into_owned(), d)).collect();
    let left_modes = (0..n).map(|k| left_operator(&left, k, d)).collect();
    Ok(SpectralData {
        dim: d,
        eigenvalues: values,
        right_modes,
        left_modes,
        m_ss,
        zero_tol: tol,
        eigvec_condition: condition,
        right,
        left,
    })
}

/// Operator `L_k` with `Tr(L_k ρ) = left[k, :] · vec(ρ)`.
fn left_operator(left: &CMat, k: usize, d: usize) -> CMat {
    CMat::from_fn(d, d, |a, b| left[(k, b + a * d)])
}

impl SpectralData {
    pub fn n_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max_{k,l} |Tr(L_k R_l) − δ_kl|`.
    pub fn biorthonormality_residual(&self) -> f64 {
        let g = &self.left * &self.right;
        let n = self.n_modes();
        (g - CMat::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Σ_k λ_k |R_k⟫⟪L_k|`.
    pub fn reconstruct(&self) -> CMat {
        self.spectral_sum(|k| self.eigenvalues[k], self.n_modes())
    }

    fn spectral_sum(&self, f: impl Fn(usize) -> C64, upto: usize) -> CMat {
        let mut scaled = self.right.columns(0, upto).into_owned();
        for k in 0..upto {
            let mut c = scaled.column_mut(k);
            c *= f(k);
        }
        scaled * self.left.rows(0, upto)
    }

    /// `e^{tL}` from the spectral form.
    pub fn evolution(&self, t: f64) -> Result<Superoperator> {
        if !(t >= 0.0) {
            return Err(Error::Domain { value: t, domain: "t >= 0" });
        }
        Ok(self.evolution_unchecked(t))
    }

    pub(crate) fn evolution_unchecked(&self, t: f64) -> Superoperator {
        let m = self.spectral_sum(|k| (self.eigenvalues[k] * t).exp(), self.n_modes());
        Superoperator::trusted(self.dim, m, true)
    }

    /// `e^{tL†}`, the Heisenberg-picture propagator.
    pub fn adjoint_evolution(&self, t: f64) -> Result<Superoperator> {
        Ok(self.evolution(t)?.adjoint())
    }

    pub fn stationary_projector(&self) -> Superoperator {
        let m = self.spectral_sum(|_| C64::new(1.0, 0.0), self.m_ss);
        Superoperator::trusted(self.dim, m, true)
    }

    /// Projector onto the first `m` modes; `m = D²` gives the identity exactly.
    pub fn slow_projector(&self, m: usize) -> Result<Superoperator> {
        self.check_cut(m)?;
        if m == self.n_modes() {
            return Ok(Superoperator::identity(self.dim));
        }
        let p = self.spectral_sum(|_| C64::new(1.0, 0.0), m);
        Ok(Superoperator::trusted(self.dim, p, true))
    }

    /// Whether `m` is a valid cut: within `[m_ss, D²]` and not between the
    /// two members of a conjugate pair.
    pub fn check_cut(&self, m: usize) -> Result<()> {
        if m < self.m_ss || m > self.n_modes() {
            return Err(Error::InvalidCut(m));
        }
        if m > 0 && m < self.n_modes() && self.eigenvalues[m - 1].im > 0.0 {
            return Err(Error::InvalidCut(m));
        }
        Ok(())
    }

    pub fn is_valid_cut(&self, m: usize) -> bool {
        self.check_cut(m).is_ok()
    }
}

/// JSON-friendly view of a spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub dim: usize,
    pub eigenvalues: Vec<[f64; 2]>,
    pub m_ss: usize,
    pub zero_tol: f64,
    pub eigvec_condition: f64,
    pub biorthonormality_residual: f64,
}

impl From<&SpectralData> for SpectrumSummary {
    fn from(s: &SpectralData) -> Self {
        Self {
            dim: s.dim,
            eigenvalues: s.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
            m_ss: s.m_ss,
            zero_tol: s.zero_tol,
            eigvec_condition: s.eigvec_condition,
            biorthonormality_residual: s.biorthonormality_residual(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{random_lindbladian, spin_half_dephasing, spin_ops};
    use crate::operator::{identity, projector};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn qubit_decay(a: f64) -> QuantumModel {
        let mut sm = CMat::zeros(2, 2);
        sm[(0, 1)] = c(a.sqrt());
        QuantumModel::new(CMat::zeros(2, 2), vec![sm]).unwrap()
    }

    fn direct_rhs(m: &QuantumModel, rho: &CMat) -> CMat {
        let i = C64::new(0.0, 1.0);
        let h = &m.hamiltonian;
        let mut out = (h * rho - rho * h) * (-i);
        for j in &m.jumps {
            let k = j.adjoint() * j;
            out += j * rho * j.adjoint() - (&k * rho + rho * &k) * c(0.5);
        }
        out
    }

    #[test]
    fn liouvillian_matches_master_equation() {
        let m = random_lindbladian(3, 2, 11).unwrap();
        let l = build_liouvillian(&m);
        let rho = CMat::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let err = (l.apply(&rho) - direct_rhs(&m, &rho)).norm();
        assert!(err < 1e-12, "{err}");
        let chk = Superoperator::new(3, l.matrix.clone()).unwrap();
        assert!(chk.hermiticity_preserving);
        // the generator annihilates traces rather than preserving them
        assert!(!chk.trace_preserving);
    }

    #[test]
    fn empty_model_gives_zero_generator() {
        let m = QuantumModel::new(CMat::zeros(2, 2), vec![]).unwrap();
        let l = build_liouvillian(&m);
        assert_eq!(l.matrix, CMat::zeros(4, 4));
        let s = spectral_decompose(&l, None).unwrap();
        assert_eq!(s.m_ss, 4);
        assert!(s.eigenvalues.iter().all(|z| z.norm() == 0.0));
        let p = s.stationary_projector();
        assert!((p.matrix - CMat::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn model_validation() {
        let bad = QuantumModel::new(CMat::zeros(2, 2), vec![CMat::zeros(3, 3)]);
        assert!(matches!(bad, Err(Error::DimensionMismatch(_))));
        let mut h = CMat::zeros(2, 2);
        h[(0, 1)] = c(1.0);
        assert!(matches!(QuantumModel::new(h, vec![]), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn spin_half_spectrum_and_modes() {
        let m = spin_half_dephasing(1.0, 0.005, 5.025).unwrap();
        let s = spectral_decompose(&build_liouvillian(&m), None).unwrap();
        let expect = [c(0.0), c(-0.005), C64::new(-0.5025, 5.025), C64::new(-0.5025, -5.025)];
        for (a, b) in s.eigenvalues.iter().zip(expect) {
            assert!((a - b).norm() <= 1e-10 * b.norm().max(1e-300) + 1e-15, "{a} vs {b}");
        }
        assert_eq!(s.m_ss, 1);
        let (_, _, sz) = spin_ops();
        assert!((&s.right_modes[0] - identity(2) * c(0.5)).norm() < 1e-12);
        assert!((&s.left_modes[0] - identity(2)).norm() < 1e-12);
        assert!((&s.right_modes[1] - &sz).norm() < 1e-10);
        assert!((&s.left_modes[1] - &sz * c(2.0)).norm() < 1e-10);
        assert!((&s.right_modes[3] - s.right_modes[2].adjoint()).norm() < 1e-12);
        assert!((&s.left_modes[3] - s.left_modes[2].adjoint()).norm() < 1e-10);
        assert!(s.biorthonormality_residual() < 1e-12);
    }

    #[test]
    fn qubit_decay_spectrum_and_stationary_state() {
        let a = 0.7;
        let s = spectral_decompose(&build_liouvillian(&qubit_decay(a)), None).unwrap();
        let re: Vec<f64> = s.eigenvalues.iter().map(|z| z.re).collect();
        for (x, y) in re.iter().zip([0.0, -a / 2.0, -a / 2.0, -a]) {
            assert!((x - y).abs() < 1e-12);
        }
        let p = s.stationary_projector();
        let rho = CMat::from_fn(2, 2, |i, j| C64::new(0.3 + i as f64 * 0.4, (i as f64 - j as f64) * 0.1));
        let mut ground = CMat::zeros(2, 2);
        ground[(0, 0)] = c(1.0);
        let out = p.apply(&rho);
        assert!((out - ground * rho.trace()).norm() < 1e-12);
        // also the brute-force long-time limit
        let far = (build_liouvillian(&qubit_decay(a)).matrix * c(80.0)).exp();
        assert!((far - &p.matrix).norm() < 1e-10);
    }

    #[test]
    fn reconstruction_of_random_generator() {
        let m = random_lindbladian(3, 2, 7).unwrap();
        let l = build_liouvillian(&m);
        let s = spectral_decompose(&l, None).unwrap();
        let err = (s.reconstruct() - &l.matrix).norm();
        assert!(err <= 1e-8 * l.matrix.norm(), "{err}");
        assert!(s.biorthonormality_residual() <= 1e-8);
        for k in s.m_ss..9 {
            assert!(s.eigenvalues[k].re < -s.zero_tol);
        }
    }

    #[test]
    fn evolution_semigroup_and_expm_agree() {
        let m = random_lindbladian(2, 2, 3).unwrap();
        let l = build_liouvillian(&m);
        let s = spectral_decompose(&l, None).unwrap();
        assert!((s.evolution(0.0).unwrap().matrix - CMat::identity(4, 4)).norm() < 1e-12);
        let (t1, t2) = (0.4, 1.3);
        let a = s.evolution(t1).unwrap().compose(&s.evolution(t2).unwrap());
        let b = s.evolution(t1 + t2).unwrap();
        assert!((a.matrix - &b.matrix).norm() < 1e-9);
        let e = (l.matrix.clone() * c(t1 + t2)).exp();
        assert!((e - &b.matrix).norm() < 1e-8);
        assert!(matches!(s.evolution(-1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn spin_half_evolution_of_sz() {
        let m = spin_half_dephasing(1.0, 0.005, 5.025).unwrap();
        let s = spectral_decompose(&build_liouvillian(&m), None).unwrap();
        let (_, _, sz) = spin_ops();
        let t = 37.0;
        let out = s.evolution(t).unwrap().apply(&sz);
        assert!((out - &sz * c((-0.005 * t).exp())).norm() < 1e-12);
    }

    #[test]
    fn projectors() {
        let m = spin_half_dephasing(1.0, 0.005, 5.025).unwrap();
        let l = build_liouvillian(&m);
        let s = spectral_decompose(&l, None).unwrap();
        let pss = s.stationary_projector();
        let rho = projector(&CVec::from_vec(vec![c(0.6), C64::new(0.0, 0.8)]));
        assert!((pss.apply(&rho) - identity(2) * c(0.5)).norm() < 1e-12);
        assert!((&pss.matrix * &pss.matrix - &pss.matrix).norm() < 1e-9);
        assert!((&pss.matrix * &l.matrix - &l.matrix * &pss.matrix).norm() < 1e-9);

        let (_, _, sz) = spin_ops();
        let p2 = s.slow_projector(2).unwrap();
        let expect = identity(2) * c(0.5) * rho.trace() + &sz * ((&sz * &rho).trace() * c(2.0));
        assert!((p2.apply(&rho) - expect).norm() < 1e-10);
        assert!((s.slow_projector(4).unwrap().matrix - CMat::identity(4, 4)).norm() < 1e-10);
        assert!((s.slow_projector(1).unwrap().matrix - &pss.matrix).norm() < 1e-14);
        assert!(matches!(s.slow_projector(3), Err(Error::InvalidCut(3))));
        assert!(matches!(s.slow_projector(0), Err(Error::InvalidCut(0))));
    }
}
