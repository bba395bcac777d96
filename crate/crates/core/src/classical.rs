//! Continuous-time Markov chains with the exact l₁-induced norm.
//!
//! Probability vectors are columns; `Q[(to, from)]` is the rate of jumping
//! from `from` to `to`, and the columns of `Q` sum to zero. The induced
//! 1→1 norm of a matrix is its largest absolute column sum, so every
//! distance here is exact.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backend::{DynamicsBackend, NormEval};
use crate::eig::{decompose, EigenSystem};
use crate::superop::{QuantumModel, DEFECT_TOL};
use crate::{CMat, CVec, Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalGenerator {
    pub dim: usize,
    /// Dense rate matrix, `rates[(to, from)]`.
    pub rates: DMatrix<f64>,
}

impl ClassicalGenerator {
    /// Validates nonnegative off-diagonal rates and zero column sums.
    pub fn new(rates: DMatrix<f64>) -> Result<Self> {
        let n = rates.nrows();
        if n == 0 || !rates.is_square() {
            return Err(Error::InvalidGenerator("rate matrix must be square and nonempty".into()));
        }
        if rates.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGenerator("non-finite rate".into()));
        }
        for j in 0..n {
            for i in 0..n {
                if i != j && rates[(i, j)] < 0.0 {
                    return Err(Error::InvalidGenerator(format!("negative rate {} from {j} to {i}", rates[(i, j)])));
                }
            }
            let scale = rates.column(j).iter().map(|x| x.abs()).fold(1.0, f64::max);
            let sum: f64 = rates.column(j).sum();
            if sum.abs() > 1e-12 * scale {
                return Err(Error::InvalidGenerator(format!("column {j} sums to {sum:.3e}, not 0")));
            }
        }
        Ok(Self { dim: n, rates })
    }

    /// Builds `Q` from `(from, to, rate)` triples; repeated edges add up and
    /// the diagonal is set to minus the exit rates.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut q = DMatrix::zeros(n, n);
        for &(from, to, rate) in edges {
            if from >= n || to >= n {
                return Err(Error::InvalidGenerator(format!("edge {from} -> {to} outside 0..{n}")));
            }
            if from == to {
                return Err(Error::InvalidGenerator(format!("self loop at state {from}")));
            }
            if !(rate >= 0.0) || !rate.is_finite() {
                return Err(Error::InvalidGenerator(format!("rate {rate} on edge {from} -> {to}")));
            }
            q[(to, from)] += rate;
        }
        for j in 0..n {
            let exit: f64 = (0..n).filter(|&i| i != j).map(|i| q[(i, j)]).sum();
            q[(j, j)] = -exit;
        }
        Self::new(q)
    }

    pub fn complex_rates(&self) -> CMat {
        self.rates.map(|x| C64::new(x, 0.0))
    }
}

/// `e^{tQ}` by scaling and squaring; column-stochastic for `t >= 0`.
pub fn classical_evolution(q: &ClassicalGenerator, t: f64) -> Result<DMatrix<f64>> {
    if !(t >= 0.0) {
        return Err(Error::Domain { value: t, domain: "t >= 0" });
    }
    Ok((&q.rates * t).exp())
}

/// Largest absolute column sum: the norm induced by l₁ on columns.
pub fn l1_induced_norm(x: &CMat) -> f64 {
    x.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `‖e^{t₁Q} − e^{t₂Q}‖_{1→1}`.
pub fn l1_induced_distance(q: &ClassicalGenerator, t1: f64, t2: f64) -> Result<f64> {
    let d = classical_evolution(q, t1)? - classical_evolution(q, t2)?;
    Ok(d.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max))
}

/// The chain as a Lindbladian on the diagonal: jumps `√Q_ij |i⟩⟨j|`.
pub fn embed_as_lindbladian(q: &ClassicalGenerator) -> Result<QuantumModel> {
    let n = q.dim;
    let mut jumps = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if i != j && q.rates[(i, j)] > 0.0 {
                let mut op = CMat::zeros(n, n);
                op[(i, j)] = C64::new(q.rates[(i, j)].sqrt(), 0.0);
                jumps.push(op);
            }
        }
    }
    QuantumModel::new(CMat::zeros(n, n), jumps)
}

/// Markov-chain dynamics behind the shared regime analysis.
pub struct ClassicalBackend {
    generator: ClassicalGenerator,
    q: CMat,
    eig: EigenSystem,
    m_ss: usize,
    p_ss: CMat,
    q_norm: f64,
}

impl ClassicalBackend {
    pub fn new(generator: &ClassicalGenerator) -> Result<Self> {
        let q = generator.complex_rates();
        let conj = |v: &CVec| v.map(|z| z.conj());
        let eig = decompose(&q, None, DEFECT_TOL, Some(&conj))?;
        let m_ss = eig.values.iter().take_while(|v| v.norm() <= eig.tol).count();
        let mut b = Self {
            generator: generator.clone(),
            q_norm: l1_induced_norm(&q),
            q,
            eig,
            m_ss,
            p_ss: CMat::zeros(0, 0),
        };
        b.p_ss = b.spectral_sum(|_| C64::new(1.0, 0.0), m_ss);
        Ok(b)
    }

    pub fn generator_data(&self) -> &ClassicalGenerator {
        &self.generator
    }

    /// Stationary distributions: columns of `P_ss` span them.
    pub fn stationary_distribution(&self) -> Option<Vec<f64>> {
        (self.m_ss == 1).then(|| self.p_ss.column(0).iter().map(|z| z.re).collect())
    }

    fn spectral_sum(&self, f: impl Fn(usize) -> C64, upto: usize) -> CMat {
        let mut scaled = self.eig.right.columns(0, upto).into_owned();
        for k in 0..upto {
            let mut c = scaled.column_mut(k);
            c *= f(k);
        }
        let m = scaled * self.eig.left.rows(0, upto);
        // the exact result is real
        m.map(|z| C64::new(z.re, 0.0))
    }

    fn check_cut(&self, m: usize) -> Result<()> {
        let n = self.eig.values.len();
        if m < self.m_ss || m > n || (m > 0 && m < n && self.eig.values[m - 1].im > 0.0) {
            return Err(Error::InvalidCut(m));
        }
        Ok(())
    }
}

impl DynamicsBackend for ClassicalBackend {
    fn dim(&self) -> usize {
        self.generator.dim
    }

    fn eigenvalues(&self) -> &[C64] {
        &self.eig.values
    }

    fn m_ss(&self) -> usize {
        self.m_ss
    }

    fn generator(&self) -> &CMat {
        &self.q
    }

    fn propagator(&self, t: f64) -> CMat {
        self.spectral_sum(|k| (self.eig.values[k] * t).exp(), self.eig.values.len())
    }

    fn identity(&self) -> CMat {
        CMat::identity(self.generator.dim, self.generator.dim)
    }

    fn stationary_projector(&self) -> CMat {
        self.p_ss.clone()
    }

    fn slow_projector(&self, m: usize) -> Result<CMat> {
        self.check_cut(m)?;
        if m == self.eig.values.len() {
            return Ok(self.identity());
        }
        Ok(self.spectral_sum(|_| C64::new(1.0, 0.0), m))
    }

    fn is_valid_cut(&self, m: usize) -> bool {
        self.check_cut(m).is_ok()
    }

    fn norm_warm(&self, x: &CMat, _warm: Option<&CVec>) -> NormEval {
        NormEval { value: l1_induced_norm(x), witness: None }
    }

    fn generator_norm(&self) -> f64 {
        self.q_norm
    }

    fn exact(&self) -> bool {
        true
    }

    fn state_norm(&self, v: &CVec) -> f64 {
        v.iter().map(|z| z.norm()).sum()
    }

    fn random_observable(&self, seed: u64) -> (CMat, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..self.generator.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let big = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        (CMat::from_diagonal(&CVec::from_iterator(f.len(), f.iter().map(|&x| C64::new(x, 0.0)))), big)
    }
}
