//! Built-in models and seeded random instances.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classical::ClassicalGenerator;
use crate::induced_norm::{optimize, NormOptions};
use crate::superop::{build_liouvillian, QuantumModel};
use crate::{CMat, Error, Result, C64};

/// Spin-1/2 operators `(S_x, S_y, S_z)` with `S_i = σ_i/2`.
pub fn spin_ops() -> (CMat, CMat, CMat) {
    let h = C64::new(0.5, 0.0);
    let z = C64::new(0.0, 0.0);
    let sx = CMat::from_row_slice(2, 2, &[z, h, h, z]);
    let sy = CMat::from_row_slice(2, 2, &[z, C64::new(0.0, -0.5), C64::new(0.0, 0.5), z]);
    let sz = CMat::from_row_slice(2, 2, &[h, z, z, -h]);
    (sx, sy, sz)
}

/// Spin-1/2 in a field along z with dephasing `γ` and depolarizing-type
/// noise `κ`: `H = −ω S_z`, jumps `√γ S_z`, `√(κ/2) S₊`, `√(κ/2) S₋` where
/// `S_± = S_x ± S_y` (Hermitian combinations, not ladder operators).
/// The spectrum is `{0, −κ, −(γ+κ)/2 ± iω}`.
pub fn spin_half_dephasing(gamma: f64, kappa: f64, omega: f64) -> Result<QuantumModel> {
    if !(gamma >= 0.0 && kappa >= 0.0) {
        return Err(Error::InvalidInput("rates gamma and kappa must be nonnegative".into()));
    }
    if gamma == 0.0 && kappa == 0.0 {
        return Err(Error::InvalidInput("gamma and kappa cannot both vanish".into()));
    }
    if !omega.is_finite() {
        return Err(Error::InvalidInput("omega must be finite".into()));
    }
    let (sx, sy, sz) = spin_ops();
    let r = |x: f64| C64::new(x.sqrt(), 0.0);
    let jumps = vec![&sz * r(gamma), (&sx + &sy) * r(kappa / 2.0), (&sx - &sy) * r(kappa / 2.0)];
    QuantumModel::new(&sz * C64::new(-omega, 0.0), jumps)
}

/// Amplitude damping `J = √a |0⟩⟨1|` with no Hamiltonian.
pub fn qubit_decay(a: f64) -> Result<QuantumModel> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::InvalidInput("decay rate must be nonnegative".into()));
    }
    let mut j = CMat::zeros(2, 2);
    j[(0, 1)] = C64::new(a.sqrt(), 0.0);
    QuantumModel::new(CMat::zeros(2, 2), vec![j])
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Hermitian matrix with complex Gaussian entries, `(G + G†)/2`.
pub fn random_hermitian(d: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = CMat::from_fn(d, d, |_, _| gaussian(&mut rng));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// GUE-like Hamiltonian plus complex Gaussian jumps, rescaled so that the
/// induced norm of the generator is 1.
pub fn random_lindbladian(d: usize, n_jumps: usize, seed: u64) -> Result<QuantumModel> {
    if d < 2 || n_jumps < 1 {
        return Err(Error::InvalidInput("random model needs dim >= 2 and at least one jump".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = CMat::from_fn(d, d, |_, _| gaussian(&mut rng));
    let h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    let scale = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    let jumps: Vec<CMat> = (0..n_jumps).map(|_| CMat::from_fn(d, d, |_, _| gaussian(&mut rng) * scale)).collect();
    let raw = QuantumModel::new(h, jumps)?;
    let l = build_liouvillian(&raw);
    let norm = optimize(&l.matrix, d, &NormOptions { seed, ..NormOptions::default() }, None).value;
    let s = 1.0 / norm;
    let jumps = raw.jumps.iter().map(|j| j * C64::new(s.sqrt(), 0.0)).collect();
    QuantumModel::new(&raw.hamiltonian * C64::new(s, 0.0), jumps)
}

/// States 0 and 1 exchange at rate `fast`; state 2 exchanges with state 1
/// at rate `slow`.
pub fn three_state_double_well(fast: f64, slow: f64) -> Result<ClassicalGenerator> {
    if !(fast > slow && slow > 0.0) || !fast.is_finite() {
        return Err(Error::InvalidInput("double well needs fast > slow > 0".into()));
    }
    ClassicalGenerator::from_edges(3, &[(0, 1, fast), (1, 0, fast), (1, 2, slow), (2, 1, slow)])
}

/// Two states flipping at rate `a` in both directions.
pub fn two_state(a: f64) -> Result<ClassicalGenerator> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidInput("rate must be positive".into()));
    }
    ClassicalGenerator::from_edges(2, &[(0, 1, a), (1, 0, a)])
}

/// Complete graph on `n` states with every rate equal to `rate`.
pub fn uniform_chain(n: usize, rate: f64) -> Result<ClassicalGenerator> {
    if n < 2 || !(rate > 0.0) {
        return Err(Error::InvalidInput("uniform chain needs n >= 2 and a positive rate".into()));
    }
    let edges: Vec<_> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j, rate))).collect();
    ClassicalGenerator::from_edges(n, &edges)
}

#[derive(Debug, Clone)]
pub enum Model {
    Quantum(QuantumModel),
    Classical(ClassicalGenerator),
}

/// Named model with parameters, as accepted on the command line and in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpecifier {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

const SPIN_HALF: (f64, f64, f64) = (1.0, 0.005, 5.025);

impl ModelSpecifier {
    pub fn new(name: &str) -> Self {
        Self { name: name.to_string(), params: BTreeMap::new(), seed: None }
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn allow(&self, keys: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidInput(format!("model '{}' has no parameter '{k}'", self.name))),
            None => Ok(()),
        }
    }

    fn count(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.get(key, default as f64);
        if v < 0.0 || v.fract() != 0.0 || v > 64.0 {
            return Err(Error::InvalidInput(format!("parameter '{key}' must be a small nonnegative integer")));
        }
        Ok(v as usize)
    }

    pub fn build(&self) -> Result<Model> {
        match self.name.as_str() {
            "spin_half" => {
                self.allow(&["gamma", "kappa", "omega"])?;
                let (g, k, w) = SPIN_HALF;
                Ok(Model::Quantum(spin_half_dephasing(self.get("gamma", g), self.get("kappa", k), self.get("omega", w))?))
            }
            "qubit_decay" => {
                self.allow(&["a"])?;
                Ok(Model::Quantum(qubit_decay(self.get("a", 1.0))?))
            }
            "random" => {
                self.allow(&["dim", "jumps"])?;
                let d = self.count("dim", 2)?;
                let j = self.count("jumps", 2)?;
                Ok(Model::Quantum(random_lindbladian(d, j, self.seed.unwrap_or(0))?))
            }
            "double_well" => {
                self.allow(&["fast", "slow"])?;
                Ok(Model::Classical(three_state_double_well(self.get("fast", 1.0), self.get("slow", 1e-3))?))
            }
            "two_state" => {
                self.allow(&["a"])?;
                Ok(Model::Classical(two_state(self.get("a", 1.0))?))
            }
            "uniform" => {
                self.allow(&["n", "rate"])?;
                Ok(Model::Classical(uniform_chain(self.count("n", 3)?, self.get("rate", 1.0))?))
            }
            other => Err(Error::InvalidInput(format!("unknown model '{other}'"))),
        }
    }
}
