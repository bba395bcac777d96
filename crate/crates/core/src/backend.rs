//! The dynamics interface shared by the quantum and classical analyses.
//!
//! Propagators are dense matrices acting on vectorized states: `D²×D²` for
//! a quantum system, `n×n` for a Markov chain. The norm is the one induced by
//! the trace norm (resp. the l₁ norm) on states.

use std::sync::OnceLock;

use crate::induced_norm::{correlator_superop, optimize, NormOptions};
use crate::models::random_hermitian;
use crate::operator::{max_norm, trace_norm};
use crate::superop::{unvec, build_liouvillian, spectral_decompose, QuantumModel, SpectralData, Superoperator};
use crate::{CMat, CVec, Error, Result, C64};

/// A norm value plus the state that attains it, when the norm is computed
/// by optimization.
#[derive(Debug, Clone)]
pub struct NormEval {
    pub value: f64,
    pub witness: Option<CVec>,
}

pub trait DynamicsBackend: Sync {
    /// Dimension of the state space (`D` or `n`).
    fn dim(&self) -> usize;
    /// Generator eigenvalues, decreasing real part.
    fn eigenvalues(&self) -> &[C64];
    fn m_ss(&self) -> usize;
    fn generator(&self) -> &CMat;
    /// `e^{tL}` for `t >= 0`.
    fn propagator(&self, t: f64) -> CMat;
    fn identity(&self) -> CMat;
    fn stationary_projector(&self) -> CMat;
    fn slow_projector(&self, m: usize) -> Result<CMat>;
    fn is_valid_cut(&self, m: usize) -> bool;
    /// Induced norm of a Hermiticity-preserving map, optionally warm-started.
    fn norm_warm(&self, x: &CMat, warm: Option<&CVec>) -> NormEval;
    /// `‖L‖`, computed once.
    fn generator_norm(&self) -> f64;
    /// Whether `norm` is exact rather than an optimized lower bound.
    fn exact(&self) -> bool;
    /// Norm of a vectorized state difference (trace norm, resp. l₁).
    fn state_norm(&self, v: &CVec) -> f64;
    /// A seeded random observable as a map on states (`ρ ↦ (Oρ + ρO)/2`,
    /// resp. multiplication by a function), with the norm of that map.
    fn random_observable(&self, seed: u64) -> (CMat, f64);

    fn norm(&self, x: &CMat) -> f64 {
        self.norm_warm(x, None).value
    }

    fn distance(&self, t1: f64, t2: f64) -> f64 {
        if t1 == t2 {
            return 0.0;
        }
        self.norm(&(self.propagator(t1) - self.propagator(t2)))
    }

    /// `d_I(t) = ‖e^{tL} − I‖`.
    fn distance_to_identity(&self, t: f64) -> f64 {
        self.norm(&(self.propagator(t) - self.identity()))
    }

    /// `d_ss(t) = ‖e^{tL} − P_ss‖`.
    fn distance_to_stationary(&self, t: f64) -> f64 {
        self.norm(&(self.propagator(t) - self.stationary_projector()))
    }
}

/// Lindblad dynamics evaluated through the spectral decomposition.
pub struct QuantumBackend {
    spectral: SpectralData,
    liouvillian: Superoperator,
    p_ss: CMat,
    identity: CMat,
    opts: NormOptions,
    l_norm: OnceLock<f64>,
}

impl QuantumBackend {
    pub fn new(model: &QuantumModel, opts: NormOptions) -> Result<Self> {
        Self::from_liouvillian(build_liouvillian(model), opts)
    }

    pub fn from_liouvillian(l: Superoperator, opts: NormOptions) -> Result<Self> {
        if !(l.hermiticity_preserving && l.annihilates_trace()) {
            return Err(Error::InvalidGenerator("Liouvillian must preserve Hermiticity and trace".into()));
        }
        let spectral = spectral_decompose(&l, None)?;
        let n = spectral.n_modes();
        Ok(Self {
            p_ss: spectral.stationary_projector().matrix,
            identity: CMat::identity(n, n),
            spectral,
            liouvillian: l,
            opts,
            l_norm: OnceLock::new(),
        })
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    pub fn liouvillian(&self) -> &Superoperator {
        &self.liouvillian
    }

    pub fn options(&self) -> &NormOptions {
        &self.opts
    }
}

impl DynamicsBackend for QuantumBackend {
    fn dim(&self) -> usize {
        self.spectral.dim
    }

    fn eigenvalues(&self) -> &[C64] {
        &self.spectral.eigenvalues
    }

    fn m_ss(&self) -> usize {
        self.spectral.m_ss
    }

    fn generator(&self) -> &CMat {
        &self.liouvillian.matrix
    }

    fn propagator(&self, t: f64) -> CMat {
        self.spectral.evolution_unchecked(t).matrix
    }

    fn identity(&self) -> CMat {
        self.identity.clone()
    }

    fn stationary_projector(&self) -> CMat {
        self.p_ss.clone()
    }

    fn slow_projector(&self, m: usize) -> Result<CMat> {
        Ok(self.spectral.slow_projector(m)?.matrix)
    }

    fn is_valid_cut(&self, m: usize) -> bool {
        self.spectral.is_valid_cut(m)
    }

    fn norm_warm(&self, x: &CMat, warm: Option<&CVec>) -> NormEval {
        let r = optimize(x, self.spectral.dim, &self.opts, warm);
        NormEval { value: r.value, witness: Some(r.witness_state) }
    }

    fn generator_norm(&self) -> f64 {
        *self.l_norm.get_or_init(|| self.norm(&self.liouvillian.matrix))
    }

    fn exact(&self) -> bool {
        false
    }

    fn state_norm(&self, v: &CVec) -> f64 {
        let a = unvec(v, self.spectral.dim);
        trace_norm(&a).unwrap_or(f64::NAN)
    }

    fn random_observable(&self, seed: u64) -> (CMat, f64) {
        let o = random_hermitian(self.spectral.dim, seed);
        let n = max_norm(&o).unwrap_or(f64::NAN);
        (correlator_superop(&o).matrix, n)
    }
}
