//! Observables in the Heisenberg picture: `O_t = e^{tL†}(O)`, their change
//! over a window in the max norm, and quasi-conserved witnesses.
//!
//! With column stacking, `Tr(O ρ) = vec(O)† vec(ρ)` for Hermitian `O`, so
//! the adjoint map is the conjugate transpose of the propagator matrix.

use serde::Serialize;

use crate::backend::{DynamicsBackend, NormEval, QuantumBackend};
use crate::induced_norm::optimize;
use crate::mode::e_pm;
use crate::operator::{
    hermitian_deviation, hermitian_part, is_hermitian, max_norm, serialize_pairs, serialize_pairs_vec,
};
use crate::regimes::{classify_regime, sup_on_window, GridOptions, WindowSup};
use crate::superop::{unvec, vec_op, SpectralData};
use crate::{CMat, Error, Result};

/// Relative anti-Hermitian part tolerated in input observables.
const HERMITIAN_TOL: f64 = 1e-10;

fn check_observable(spec: &SpectralData, o: &CMat) -> Result<()> {
    if o.nrows() != spec.dim || o.ncols() != spec.dim {
        return Err(Error::DimensionMismatch(format!(
            "observable is {}x{}, model has dimension {}",
            o.nrows(),
            o.ncols(),
            spec.dim
        )));
    }
    if !is_hermitian(o, HERMITIAN_TOL) {
        return Err(Error::NonHermitian(hermitian_deviation(o)));
    }
    Ok(())
}

fn adjoint_apply(x: &CMat, o: &CMat, d: usize) -> CMat {
    hermitian_part(&unvec(&(x.ad_mul(&vec_op(o))), d))
}

/// `O_t = e^{tL†}(O)`.
pub fn evolve_observable(spec: &SpectralData, o: &CMat, t: f64) -> Result<CMat> {
    check_observable(spec, o)?;
    let e = spec.evolution(t)?;
    Ok(adjoint_apply(&e.matrix, o, spec.dim))
}

/// `O_ss = P_ss†(O)`, the long-time limit of `O_t`.
pub fn asymptotic_observable(spec: &SpectralData, o: &CMat) -> Result<CMat> {
    check_observable(spec, o)?;
    Ok(adjoint_apply(&spec.stationary_projector().matrix, o, spec.dim))
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableTrajectory {
    #[serde(serialize_with = "serialize_pairs")]
    pub initial: CMat,
    pub times: Vec<f64>,
    #[serde(serialize_with = "serialize_pairs_vec")]
    pub values: Vec<CMat>,
    #[serde(serialize_with = "serialize_pairs")]
    pub asymptotic: CMat,
}

impl ObservableTrajectory {
    /// `‖O_t‖_max` along the trajectory.
    pub fn max_norms(&self) -> Vec<f64> {
        self.values.iter().map(|v| max_norm(v).unwrap_or(f64::NAN)).collect()
    }
}

pub fn trajectory(spec: &SpectralData, o: &CMat, times: &[f64]) -> Result<ObservableTrajectory> {
    check_observable(spec, o)?;
    let values = times.iter().map(|&t| evolve_observable(spec, o, t)).collect::<Result<_>>()?;
    Ok(ObservableTrajectory {
        initial: o.clone(),
        times: times.to_vec(),
        values,
        asymptotic: asymptotic_observable(spec, o)?,
    })
}

fn nonzero_max_norm(o: &CMat) -> Result<f64> {
    let n = max_norm(o)?;
    if n <= f64::MIN_POSITIVE {
        return Err(Error::InvalidInput("observable is zero".into()));
    }
    Ok(n)
}

/// `sup_{t'' <= t <= t'} ‖O_{t''} − O_t‖_max / ‖O‖_max`.
pub fn observable_change(spec: &SpectralData, o: &CMat, t2: f64, t1: f64, opts: &GridOptions) -> Result<WindowSup> {
    check_observable(spec, o)?;
    if !(t2 >= 0.0 && t1.is_finite() && t1 >= t2) {
        return Err(Error::InvalidInput(format!("window ({t2}, {t1}) needs 0 <= t'' <= t'")));
    }
    let scale = nonzero_max_norm(o)?;
    let base = evolve_observable(spec, o, t2)?;
    Ok(sup_on_window(t2, t1, opts, |t, _| {
        let ot = adjoint_apply(&spec.evolution_unchecked(t).matrix, o, spec.dim);
        NormEval { value: max_norm(&(&base - ot)).unwrap_or(f64::NAN) / scale, witness: None }
    }))
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiConservedWitness {
    pub window: [f64; 2],
    pub t0: f64,
    /// `O₀ = O'_{t₀} − O'_ss`.
    #[serde(serialize_with = "serialize_pairs")]
    pub observable: CMat,
    pub c_delta: f64,
    pub e_plus: f64,
    /// `sup_{0 <= t <= t'} ‖O_t − O₀‖_max / ‖O₀‖_max`.
    pub drift: f64,
    pub drift_argmax: f64,
    /// `3 C_Δ / E₊ + 10⁻⁶`.
    pub bound: f64,
    pub within_bound: bool,
}

/// Builds an observable that barely moves up to `t'` from the witness of
/// `‖e^{t₀L} − P_ss‖`: if `O'` attains that norm, `O₀ = (e^{t₀L} − P_ss)†(O')`
/// carries the metastable populations.
pub fn quasi_conserved_witness(
    b: &QuantumBackend,
    t2: f64,
    t1: f64,
    t0: f64,
    opts: &GridOptions,
) -> Result<QuasiConservedWitness> {
    if !(t0 >= t2 && t0 <= 0.5 * t1) {
        return Err(Error::InvalidInput(format!("t0 = {t0} must lie in [t'', t'/2] = [{t2}, {}]", 0.5 * t1)));
    }
    let v = classify_regime(b, t2, t1, opts)?;
    if !v.is_metastable() {
        return Err(Error::NotMetastable { t2, t1 });
    }
    let c = v.c_delta;
    let (_, e_plus) = e_pm(c)?;
    let spec = b.spectral();
    let d = spec.dim;
    let x = b.propagator(t0) - b.stationary_projector();
    let best = optimize(&x, d, b.options(), None);
    let o0 = adjoint_apply(&x, &best.witness_observable, d);
    let scale = max_norm(&o0)?;
    if !(scale > 1e-12) {
        return Err(Error::TrivialDynamics("witness observable vanishes; e^{t0 L} equals P_ss".into()));
    }
    let drift = sup_on_window(0.0, t1, opts, |t, _| {
        let ot = adjoint_apply(&spec.evolution_unchecked(t).matrix, &o0, d);
        NormEval { value: max_norm(&(&ot - &o0)).unwrap_or(f64::NAN) / scale, witness: None }
    });
    let bound = 3.0 * c / e_plus + 1e-6;
    Ok(QuasiConservedWitness {
        window: [t2, t1],
        t0,
        observable: o0,
        c_delta: c,
        e_plus,
        drift: drift.value,
        drift_argmax: drift.argmax,
        bound,
        within_bound: drift.value <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::induced_norm::adjoint_max_induced_norm;
    use crate::models::{qubit_decay, random_hermitian, random_lindbladian, spin_half_dephasing, spin_ops};
    use crate::superop::{build_liouvillian, spectral_decompose};
    use crate::{NormOptions, C64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spin() -> QuantumBackend {
        QuantumBackend::new(&spin_half_dephasing(1.0, 0.005, 5.025).unwrap(), NormOptions::default()).unwrap()
    }

    fn dist(a: &CMat, b: &CMat) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn spin_observables() {
        let b = spin();
        let s = b.spectral();
        let (sx, _, sz) = spin_ops();
        let oz = evolve_observable(s, &sz, 200.0).unwrap();
        assert!(dist(&oz, &(&sz * C64::new((-1.0f64).exp(), 0.0))) < 1e-12);
        let one = CMat::identity(2, 2);
        for t in [0.0, 0.3, 7.0, 1e4] {
            assert!(dist(&evolve_observable(s, &one, t).unwrap(), &one) < 1e-12);
        }
        assert!(max_norm(&asymptotic_observable(s, &sx).unwrap()).unwrap() < 1e-12);
        assert!(max_norm(&evolve_observable(s, &sx, 1e3).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_bad_observables() {
        let b = spin();
        let mut o = CMat::zeros(2, 2);
        o[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(evolve_observable(b.spectral(), &o, 1.0), Err(Error::NonHermitian(_))));
        assert!(matches!(evolve_observable(b.spectral(), &CMat::zeros(3, 3), 1.0), Err(Error::DimensionMismatch(_))));
        let z = CMat::zeros(2, 2);
        assert!(observable_change(b.spectral(), &z, 1.0, 2.0, &GridOptions::default()).is_err());
    }

    #[test]
    fn duality_with_state_picture() {
        let m = random_lindbladian(3, 2, 11).unwrap();
        let s = spectral_decompose(&build_liouvillian(&m), None).unwrap();
        let o = random_hermitian(3, 1);
        let rho = {
            let g = random_hermitian(3, 2);
            let p = &g * g.adjoint() + CMat::identity(3, 3) * C64::new(0.1, 0.0);
            let tr = p.trace();
            p / tr
        };
        for t in [0.1, 1.0, 5.0] {
            let ot = evolve_observable(&s, &o, t).unwrap();
            let rt = s.evolution(t).unwrap().apply(&rho);
            let lhs = (&ot * &rho).trace();
            let rhs = (&o * rt).trace();
            assert!((lhs - rhs).norm() < 1e-9, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn spin_observable_change_window() {
        let b = spin();
        let (_, _, sz) = spin_ops();
        let g = GridOptions::default();
        let c = observable_change(b.spectral(), &sz, 20.0, 40.0, &g).unwrap();
        let want = (-0.1f64).exp() - (-0.2f64).exp();
        assert!((c.value - want).abs() < 1e-9, "{}", c.value);
        let one = CMat::identity(2, 2);
        assert!(observable_change(b.spectral(), &one, 20.0, 40.0, &g).unwrap().value < 1e-14);
    }

    #[test]
    fn spin_witness_is_magnetization() {
        let b = spin();
        let w = quasi_conserved_witness(&b, 20.0, 40.0, 20.0, &GridOptions::default()).unwrap();
        let (_, _, sz) = spin_ops();
        // proportional to S_z up to sign
        let scale = w.observable[(0, 0)].re / 0.5;
        assert!(dist(&w.observable, &(&sz * C64::new(scale, 0.0))) < 1e-6 * scale.abs());
        assert!((scale.abs() - 2.0 * (-0.1f64).exp()).abs() < 1e-6);
        assert!(w.within_bound, "{} > {}", w.drift, w.bound);
        assert!((w.drift - (1.0 - (-0.2f64).exp())).abs() < 1e-6);
        assert!((w.bound - 3.0 * 0.0861 / 0.904).abs() < 2e-3);
    }

    #[test]
    fn witness_needs_metastable_window() {
        let b = spin();
        let g = GridOptions::default();
        assert!(matches!(quasi_conserved_witness(&b, 0.1, 0.2, 0.1, &g), Err(Error::NotMetastable { .. })));
        assert!(matches!(quasi_conserved_witness(&b, 20.0, 40.0, 30.0, &g), Err(Error::InvalidInput(_))));
        let trivial = QuantumBackend::new(&qubit_decay(0.0).unwrap(), NormOptions::default());
        if let Ok(t) = trivial {
            assert!(quasi_conserved_witness(&t, 1.0, 2.0, 1.0, &g).is_err());
        }
    }

    #[test]
    fn adjoint_propagator_is_max_norm_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..4 {
            let m = random_lindbladian(2 + seed % 2, 2, seed as u64).unwrap();
            let s = spectral_decompose(&build_liouvillian(&m), None).unwrap();
            let t: f64 = rng.gen_range(0.01..5.0);
            let n = adjoint_max_induced_norm(&s.evolution(t).unwrap(), &NormOptions::default()).unwrap();
            assert!((n - 1.0).abs() < 1e-9, "seed {seed} t {t}: {n}");
        }
    }

    #[test]
    fn eigenmode_change_bound() {
        let b = QuantumBackend::new(&random_lindbladian(2, 2, 8).unwrap(), NormOptions::default()).unwrap();
        let s = b.spectral();
        let o = random_hermitian(2, 3);
        let on = max_norm(&o).unwrap();
        for (t1, t2) in [(0.2, 0.5), (1.0, 3.0), (0.05, 2.0)] {
            let rhs = b.distance(t1, t2);
            for (k, r) in s.right_modes.iter().enumerate() {
                let rn = crate::operator::trace_norm(r).unwrap();
                let l = s.eigenvalues[k];
                let lhs = (&o * r).trace().norm() / (on * rn) * ((l * t1).exp() - (l * t2).exp()).norm();
                assert!(lhs <= rhs + 1e-8, "mode {k}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn generic_observable_keeps_moving() {
        let b = QuantumBackend::new(&random_lindbladian(3, 2, 21).unwrap(), NormOptions::default()).unwrap();
        let s = b.spectral();
        let o = random_hermitian(3, 9);
        let h = 10.0 / b.generator_norm();
        for (a, c) in [(0.0, h), (0.1 * h, 0.2 * h), (0.5 * h, 0.51 * h)] {
            let d = max_norm(&(evolve_observable(s, &o, a).unwrap() - evolve_observable(s, &o, c).unwrap())).unwrap();
            assert!(d > 1e-12);
        }
    }

    #[test]
    fn trajectory_is_hermitian_and_contracts() {
        let b = QuantumBackend::new(&random_lindbladian(3, 3, 2).unwrap(), NormOptions::default()).unwrap();
        let o = random_hermitian(3, 5);
        let tr = trajectory(b.spectral(), &o, &[0.0, 0.5, 2.0, 10.0]).unwrap();
        let n0 = max_norm(&o).unwrap();
        for (v, n) in tr.values.iter().zip(tr.max_norms()) {
            assert!(hermitian_deviation(v) < 1e-12);
            assert!(n <= n0 + 1e-9);
        }
    }
}
