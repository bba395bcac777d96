//! Spectral side of metastability: eigenvalue changes bounded by the
//! dynamics, the split of the spectrum into slow and fast modes, and the
//! slow-mode projection `P` with its approximation error `C_P`.

use rayon::prelude::*;
use serde::Serialize;

use crate::backend::DynamicsBackend;
use crate::battery::BoundRow;
use crate::constants::{self, GUARD_BAND};
use crate::mode::{e_pm, inverse_bound, InverseBound};
use crate::regimes::{change_measure, classify_regime, relaxation_times, GridOptions, RelaxationReport, WindowSup};
use crate::search::log_grid;
use crate::{CMat, CVec, Error, Result, C64};

/// `‖e^{t₁L} − e^{t₂L}‖ − |e^{t₁λ_k} − e^{t₂λ_k}|` for every eigenvalue.
pub fn spectrum_change_bound_check<B: DynamicsBackend + ?Sized>(b: &B, t1: f64, t2: f64) -> Result<Vec<f64>> {
    for t in [t1, t2] {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain { value: t, domain: "t >= 0" });
        }
    }
    let norm = b.distance(t1, t2);
    Ok(b.eigenvalues().iter().map(|&l| norm - ((l * t1).exp() - (l * t2).exp()).norm()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Initial,
    Final,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationReport {
    pub window: [f64; 2],
    pub c_delta: f64,
    pub e_minus: f64,
    pub e_plus: f64,
    /// Number of modes on the initial branch.
    pub m: usize,
    pub m_ss: usize,
    pub n_modes: usize,
    pub branches: Vec<Branch>,
    /// `λ_m^R / λ_{m+1}^R`.
    pub real_ratio: Option<f64>,
    /// `max_{k<=m} |λ_k^I| / (−λ_{m+1}^R)`.
    pub imag_ratio: Option<f64>,
    /// `arcsin(C/E₊)/(t' − t'')`: largest `|λ^I|` allowed on the initial branch.
    pub imag_bound: f64,
    /// `min_{k<=m} [−ln E₊² − t'(−λ_k^R)]`.
    pub slow_slack: Option<f64>,
    /// `min_{k>m} [t''(−λ_k^R) + ln E₋]`.
    pub fast_slack: Option<f64>,
    /// `min_{k<=m} [arcsin(C/E₊) − (t' − t'')|λ_k^I|]`.
    pub imag_slack: Option<f64>,
}

impl SeparationReport {
    /// A split strictly between the stationary modes and the full spectrum.
    pub fn nontrivial(&self) -> bool {
        self.m_ss < self.m && self.m < self.n_modes
    }
}

/// Assigns every eigenvalue to the initial branch (`e^{t'λ^R} >= E₊²`) or
/// the final branch (`e^{t''λ^R} <= E₋`), both up to the guard band.
pub fn detect_separation<B: DynamicsBackend + ?Sized>(b: &B, t2: f64, t1: f64, c_delta: f64) -> Result<SeparationReport> {
    if !(t2 > 0.0 && t1.is_finite() && t1 >= 2.0 * t2) {
        return Err(Error::InvalidWindow { t2, t1 });
    }
    if !(0.0..0.25).contains(&c_delta) {
        return Err(Error::Domain { value: c_delta, domain: "0 <= C_Δ < 1/4" });
    }
    let (em, ep) = e_pm(c_delta)?;
    let g = GUARD_BAND;
    let ev = b.eigenvalues();
    let n = ev.len();
    let mut branches = Vec::with_capacity(n);
    for (k, l) in ev.iter().enumerate() {
        if (t1 * l.re).exp() >= ep * ep - g {
            branches.push(Branch::Initial);
        } else if (t2 * l.re).exp() <= em + g {
            branches.push(Branch::Final);
        } else {
            return Err(Error::SeparationInconsistency(k + 1));
        }
    }
    let m = branches.iter().take_while(|&&x| x == Branch::Initial).count();
    if branches[m..].iter().any(|&x| x == Branch::Initial) || !b.is_valid_cut(m) {
        return Err(Error::SeparationInconsistency(m + 1));
    }

    let asin = (c_delta / ep).asin();
    let span = t1 - t2;
    let slow = &ev[..m];
    let fast = &ev[m..];
    let min = |it: &mut dyn Iterator<Item = f64>| it.reduce(f64::min);
    Ok(SeparationReport {
        window: [t2, t1],
        c_delta,
        e_minus: em,
        e_plus: ep,
        m,
        m_ss: b.m_ss(),
        n_modes: n,
        branches,
        real_ratio: (m > 0 && m < n).then(|| ev[m - 1].re / ev[m].re),
        imag_ratio: (m < n && m > 0)
            .then(|| slow.iter().map(|l| l.im.abs()).fold(0.0, f64::max) / (-ev[m].re)),
        imag_bound: asin / span,
        slow_slack: min(&mut slow.iter().map(|l| -2.0 * ep.ln() + t1 * l.re)),
        fast_slack: min(&mut fast.iter().map(|l| -t2 * l.re + em.ln())),
        imag_slack: min(&mut slow.iter().map(|l| asin - span * l.im.abs())),
    })
}

/// Distances at one time `t`, with `P` the projector onto the slow modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionSample {
    pub t: f64,
    pub d_identity: f64,
    pub d_stationary: f64,
    /// `‖e^{tL} − P‖`.
    pub d_projection: f64,
    /// `‖P(e^{tL} − I)‖`.
    pub slow: f64,
    /// `‖(I − P)e^{tL}‖`.
    pub fast: f64,
}

/// The operators a projection sample is built from.
pub(crate) struct Projectors {
    pub p: CMat,
    pub q: CMat,
    pub id: CMat,
    pub pss: CMat,
}

impl Projectors {
    pub fn new<B: DynamicsBackend + ?Sized>(b: &B, m: usize) -> Result<Self> {
        let p = b.slow_projector(m)?;
        let id = b.identity();
        Ok(Self { q: &id - &p, p, id, pss: b.stationary_projector() })
    }

    /// `[e − I, e − P_ss, e − P, P(e − I), (I − P)e]` for `e = e^{tL}`.
    pub fn family(&self, e: &CMat) -> [CMat; 5] {
        let slow = &self.p * e - &self.p;
        [e - &self.id, e - &self.pss, e - &self.p, slow, &self.q * e]
    }
}

pub(crate) fn sample<B: DynamicsBackend + ?Sized>(
    b: &B,
    pr: &Projectors,
    t: f64,
    warm: &mut [Option<CVec>; 5],
) -> ProjectionSample {
    let e = b.propagator(t);
    let mut v = [0.0; 5];
    for (i, x) in pr.family(&e).iter().enumerate() {
        let r = crate::battery::norm_of(b, x, warm[i].as_ref());
        v[i] = r.value;
        warm[i] = r.witness;
    }
    ProjectionSample { t, d_identity: v[0], d_stationary: v[1], d_projection: v[2], slow: v[3], fast: v[4] }
}

/// Projection distances along `times`, warm-started point to point.
pub fn projection_curves<B: DynamicsBackend + ?Sized>(b: &B, m: usize, times: &[f64]) -> Result<Vec<ProjectionSample>> {
    if times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput("times must be finite and nonnegative".into()));
    }
    let pr = Projectors::new(b, m)?;
    let mut warm: [Option<CVec>; 5] = Default::default();
    Ok(times.iter().map(|&t| sample(b, &pr, t, &mut warm)).collect())
}

/// Everything the projection inequalities are evaluated from.
pub(crate) struct ProjectionInputs<'a> {
    pub window: [f64; 2],
    pub c_delta: f64,
    pub c_argmax: f64,
    pub m: usize,
    pub m_ss: usize,
    pub eigenvalues: &'a [C64],
    /// Sorted by time, inside the window; must contain both window ends.
    pub samples: &'a [ProjectionSample],
    pub p_norm: f64,
    /// `‖I − P‖`.
    pub complement_norm: f64,
    /// `‖P − P_ss‖`.
    pub gap_norm: f64,
    /// `‖PL‖`.
    pub slow_generator_norm: f64,
}

fn find(samples: &[ProjectionSample], t: f64) -> Option<&ProjectionSample> {
    samples.iter().find(|s| (s.t - t).abs() <= 1e-12 * t.abs().max(1e-300))
}

/// The inequalities relating `P` to the dynamics on one window. Rows whose
/// hypotheses fail on this window are left out.
pub(crate) fn projection_rows(x: &ProjectionInputs) -> Vec<BoundRow> {
    let [t2, t1] = x.window;
    let (m, n, c) = (x.m, x.eigenvalues.len(), x.c_delta);
    let id = |name: &str| format!("{name}/m{m}");
    let mut rows = Vec::new();
    let pl = x.slow_generator_norm;

    for s in x.samples {
        let dp = s.d_projection;
        rows.push(BoundRow::le(id("projection_triangle"), s.t, dp, s.slow + s.fast));
        rows.push(BoundRow::le(id("slow_drift_bound"), s.t, s.slow, (1.0 + dp) * dp));
        rows.push(BoundRow::le(id("fast_residual_bound"), s.t, s.fast, (2.0 + dp) * dp));
        if m < n {
            rows.push(BoundRow::le(id("projection_identity_distance"), s.t, 1.0 - dp, s.d_identity));
        }
        if m > x.m_ss {
            rows.push(BoundRow::le(id("projection_stationary_distance"), s.t, 1.0 - dp, s.d_stationary));
        }
        rows.push(BoundRow::le(id("slow_exp_upper"), s.t, s.slow, (s.t * pl).exp_m1()));
        rows.push(BoundRow::le(id("slow_exp_lower"), s.t, 2.0 * s.t * pl - (s.t * pl).exp_m1(), s.slow));
        if let Some(d) = find(x.samples, 2.0 * s.t) {
            rows.push(BoundRow::le(id("fast_exp_decay"), s.t, d.fast, s.fast * s.fast));
        }
    }
    let Some(first) = find(x.samples, t2) else { return rows };
    let Some(last) = find(x.samples, t1) else { return rows };
    let closest = x.samples.iter().min_by(|a, b| a.d_projection.total_cmp(&b.d_projection)).unwrap_or(first);
    rows.push(BoundRow::le(id("projection_norm"), closest.t, x.p_norm, 1.0 + closest.d_projection));
    if let Some(at) = find(x.samples, x.c_argmax) {
        rows.push(BoundRow::le(id("projection_change"), at.t, c, first.d_projection + at.d_projection));
    }
    if m < n {
        rows.push(BoundRow::le(id("complement_norm"), t2, 1.0, x.complement_norm));
        let lhs = (t2 * x.eigenvalues[m].re).exp();
        rows.push(BoundRow::le(id("projection_spectral_fast"), t2, lhs, first.d_projection));
    }
    if m > x.m_ss {
        rows.push(BoundRow::le(id("projection_stationary_gap"), t2, 1.0, x.gap_norm));
    }
    if m > 0 {
        let lhs = x.eigenvalues[..m].iter().map(|&l| ((l * t1).exp() - 1.0).norm()).fold(0.0, f64::max);
        rows.push(BoundRow::le(id("projection_spectral_slow"), t1, lhs, last.d_projection));
    }

    // dichotomies at t'' and 2t'', needing 4t'' inside the window
    let Some(at2) = find(x.samples, 2.0 * t2) else { return rows };
    if find(x.samples, 4.0 * t2).is_none() {
        return rows;
    }
    let g = GUARD_BAND;
    let fx = first.fast;
    let fy = at2.fast;
    let c_fast = fx * c;
    let mut fast_low = false;
    if let Ok((em, ep)) = e_pm(c_fast) {
        rows.push(BoundRow::either(id("fast_dichotomy"), 2.0 * t2, (fy, em), (ep, fy)));
        fast_low = fy <= em;
    }
    let c_slow = c * (1.0 + fx);
    let mut slow_low = false;
    if let Ok((em, ep)) = e_pm(c_slow) {
        let s2 = at2.slow;
        rows.push(BoundRow::either(id("slow_dichotomy"), 2.0 * t2, (s2, em), (ep, s2)));
        slow_low = s2 <= em;
    }
    if !(fast_low && slow_low) {
        return rows;
    }

    let em_of = |v: f64| e_pm(v).ok().map(|p| p.0);
    let below = |cut: constants::Cutoff| c <= cut.value - g;
    if below(constants::PROJ_DOUBLE) {
        if let (Some(a), Some(b2)) = (em_of(c), em_of(2.0 * c)) {
            rows.push(BoundRow::le(id("projection_norm_tight"), t2, x.p_norm, 1.0 + a + b2));
        }
    }
    let pc = x.p_norm * c;
    let qc = x.complement_norm * c;
    if below(constants::PROJ_DRIFT) {
        if let Some(a) = em_of(pc) {
            for s in x.samples {
                let rhs = if s.t <= 0.5 * t1 { a } else { a + pc };
                rows.push(BoundRow::le(id("slow_drift_tight"), s.t, s.slow, rhs));
            }
        }
    }
    if below(constants::PROJ_WINDOW) {
        if let (Some(a), Some(q)) = (em_of(pc), em_of(qc)) {
            for s in x.samples {
                rows.push(BoundRow::le(id("fast_residual_tight"), s.t, s.fast, q));
                rows.push(BoundRow::le(id("projection_error_tight"), s.t, s.d_projection, a + q + c));
            }
        }
    }
    if below(constants::PROJ_LINEAR) && pc <= constants::E2_DOMAIN.value {
        if let Ok(e2) = inverse_bound(InverseBound::E2, pc) {
            rows.push(BoundRow::le(id("slow_generator"), t2, (t1 - t2) * pl, e2));
        }
    }
    rows
}

/// The cut-level norms `‖P‖`, `‖I − P‖`, `‖P − P_ss‖`, `‖PL‖`.
pub(crate) fn cut_norms<B: DynamicsBackend + ?Sized>(b: &B, pr: &Projectors) -> [f64; 4] {
    let pl = &pr.p * b.generator();
    [&pr.p, &pr.q, &(&pr.p - &pr.pss), &pl].map(|x| crate::battery::norm_of(b, x, None).value)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralProjectionReport {
    pub m: usize,
    pub window: [f64; 2],
    /// Window the bounds are evaluated on, stretched to `t' >= 4t''` when
    /// needed by repeating the window length.
    pub analysis_window: [f64; 2],
    /// `C_Δ` measured on the analysis window.
    pub c_delta: f64,
    /// `n·C_Δ(t'', t')` when the window was stretched `n` times.
    pub c_delta_stretch_bound: Option<f64>,
    pub c_p: WindowSup,
    pub p_norm: f64,
    pub complement_norm: f64,
    pub slow_generator_norm: f64,
    pub slow_drift: WindowSup,
    pub fast_residual: WindowSup,
    /// `‖P(e^{2t''L} − I)‖ <= E₊(2C_Δ)` and `‖(I − P)e^{t''L}‖ <= E₊(C_Δ)`.
    pub condition_checks: Vec<ConditionCheck>,
    pub relaxation: Option<RelaxationReport>,
    pub bound_slacks: Vec<BoundRow>,
}

impl SpectralProjectionReport {
    /// Whether the triangle split `C_P <= slow + fast` holds within `tol`.
    pub fn triangle_holds(&self, tol: f64) -> bool {
        self.c_p.value <= self.slow_drift.value + self.fast_residual.value + tol
    }
}

pub fn spectral_projection_report<B: DynamicsBackend + ?Sized>(
    b: &B,
    m: usize,
    t2: f64,
    t1: f64,
    opts: &GridOptions,
) -> Result<SpectralProjectionReport> {
    if !(t2 > 0.0 && t1.is_finite() && t1 >= 2.0 * t2) {
        return Err(Error::InvalidWindow { t2, t1 });
    }
    let pr = Projectors::new(b, m)?;
    let stretch = ((3.0 * t2 / (t1 - t2)).ceil() as usize).max(1);
    let t1x = t2 + stretch as f64 * (t1 - t2);
    let base = change_measure(b, t2, t1, opts)?;
    let cw = if stretch == 1 { base } else { change_measure(b, t2, t1x, opts)? };

    let family = |i: usize| {
        let pr = &pr;
        move |t: f64, w: Option<&CVec>| {
            let e = b.propagator(t);
            let x = match i {
                0 => &e - &pr.p,
                1 => &pr.p * &e - &pr.p,
                _ => &pr.q * &e,
            };
            crate::battery::norm_of(b, &x, w)
        }
    };
    let sups: Vec<WindowSup> = (0..3usize)
        .into_par_iter()
        .map(|i| crate::regimes::sup_on_window(t2, t1x, opts, family(i)))
        .collect();
    let (c_p, slow_drift, fast_residual) = (sups[0], sups[1], sups[2]);

    let mut times = log_grid(t2, t1x, opts.points.max(3));
    times.extend([2.0 * t2, 4.0 * t2, cw.argmax, c_p.argmax, slow_drift.argmax, fast_residual.argmax]);
    let doubled: Vec<f64> = times.iter().map(|t| 2.0 * t).filter(|&t| t <= t1x).collect();
    times.extend(doubled);
    times.retain(|&t| t >= t2 && t <= t1x);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let samples: Vec<ProjectionSample> =
        times.par_iter().map(|&t| sample(b, &pr, t, &mut Default::default())).collect();

    let [p_norm, complement_norm, gap_norm, slow_generator_norm] = cut_norms(b, &pr);
    let c = cw.value;
    let mut rows = projection_rows(&ProjectionInputs {
        window: [t2, t1x],
        c_delta: c,
        c_argmax: cw.argmax,
        m,
        m_ss: b.m_ss(),
        eigenvalues: b.eigenvalues(),
        samples: &samples,
        p_norm,
        complement_norm,
        gap_norm,
        slow_generator_norm,
    });

    let at = |t: f64| find(&samples, t).copied();
    let mut condition_checks = Vec::new();
    if let (Some(s2), Ok((_, ep)), Ok((_, ep2))) = (at(2.0 * t2), e_pm(c), e_pm((2.0 * c).min(0.25))) {
        let f = at(t2).map_or(f64::NAN, |s| s.fast);
        let ok2 = 2.0 * c <= 0.25;
        condition_checks.push(ConditionCheck { name: "slow_condition", lhs: s2.slow, rhs: ep2, holds: ok2 && s2.slow <= ep2 });
        condition_checks.push(ConditionCheck { name: "fast_condition", lhs: f, rhs: ep, holds: f <= ep });
    }

    let mut relaxation = None;
    let verdict = classify_regime(b, t2, t1, opts)?;
    if verdict.is_metastable() && verdict.c_delta <= constants::RELAX.value {
        let r = relaxation_times(b, &verdict, None)?;
        rows.extend(relaxation_spectral_rows(b.eigenvalues(), m, b.m_ss(), &r));
        relaxation = Some(r);
    }

    Ok(SpectralProjectionReport {
        m,
        window: [t2, t1],
        analysis_window: [t2, t1x],
        c_delta: c,
        c_delta_stretch_bound: (stretch > 1).then(|| stretch as f64 * base.value),
        c_p,
        p_norm,
        complement_norm,
        slow_generator_norm,
        slow_drift,
        fast_residual,
        condition_checks,
        relaxation,
        bound_slacks: rows,
    })
}

/// `τ''(−λ_{m+1}^R) >= 1` when mode `m+1` has decayed to `E₋` by `t''`, and
/// `τ'(−λ_m^R) <= 1` when mode `m` is within `E₋` of 1 at `t''`.
pub(crate) fn relaxation_spectral_rows(ev: &[C64], m: usize, m_ss: usize, r: &RelaxationReport) -> Vec<BoundRow> {
    let t2 = r.window[0];
    let mut rows = Vec::new();
    if m < ev.len() {
        if let Some(tau) = r.tau_dprime {
            let z = (ev[m] * t2).exp();
            if z.norm() <= r.e_minus {
                rows.push(BoundRow::le(format!("relaxation_spectral_fast/m{m}"), tau.time, 1.0, tau.time * -ev[m].re));
            }
        }
    }
    if m > m_ss {
        if let Some(tau) = r.tau_prime {
            let z = (ev[m - 1] * t2).exp();
            if (z - 1.0).norm() <= r.e_minus {
                rows.push(BoundRow::le(format!("relaxation_spectral_slow/m{m}"), tau.time, tau.time * -ev[m - 1].re, 1.0));
            }
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::QuantumBackend;
    use crate::models::{random_lindbladian, spin_half_dephasing};
    use crate::NormOptions;

    fn spin() -> QuantumBackend {
        QuantumBackend::new(&spin_half_dephasing(1.0, 0.005, 5.025).unwrap(), NormOptions::default()).unwrap()
    }

    #[test]
    fn change_margins_nonnegative() {
        let b = spin();
        for (t1, t2) in [(0.0, 3.0), (20.0, 40.0), (0.1, 0.11), (5.0, 5.0)] {
            let m = spectrum_change_bound_check(&b, t1, t2).unwrap();
            assert!(m.iter().all(|&x| x >= -1e-8), "{t1} {t2}: {m:?}");
        }
        let same = spectrum_change_bound_check(&b, 2.0, 2.0).unwrap();
        assert!(same.iter().all(|&x| x == 0.0));
        assert!(spectrum_change_bound_check(&b, -1.0, 2.0).is_err());
    }

    #[test]
    fn spin_separation_at_reference_window() {
        let b = spin();
        let r = detect_separation(&b, 20.0, 40.0, 0.0861).unwrap();
        assert_eq!(r.m, 2);
        assert!(r.nontrivial());
        assert!(r.slow_slack.unwrap() > -GUARD_BAND && r.fast_slack.unwrap() > 0.0);
        // λ₂/λ₃ = 0.005/0.5025
        assert!((r.real_ratio.unwrap() - 0.005 / 0.5025).abs() < 1e-9);
        assert_eq!(r.imag_ratio, Some(0.0));
    }

    #[test]
    fn separation_in_initial_and_final_regimes() {
        let b = spin();
        let c = change_measure(&b, 1e-3, 2e-3, &GridOptions::default()).unwrap().value;
        assert_eq!(detect_separation(&b, 1e-3, 2e-3, c).unwrap().m, 4);
        let c = change_measure(&b, 1000.0, 2000.0, &GridOptions::default()).unwrap().value;
        assert_eq!(detect_separation(&b, 1000.0, 2000.0, c).unwrap().m, 1);
    }

    #[test]
    fn separation_rejects_underestimated_change() {
        let b = spin();
        // at t'' = 100 the slow mode is neither near 1 nor near 0
        match detect_separation(&b, 100.0, 200.0, 0.01) {
            Err(Error::SeparationInconsistency(k)) => assert_eq!(k, 2),
            other => panic!("{other:?}"),
        }
        assert!(detect_separation(&b, 10.0, 15.0, 0.01).is_err());
        assert!(detect_separation(&b, 10.0, 25.0, 0.3).is_err());
    }

    #[test]
    fn spin_projection_curves_match_mode_formulas() {
        let b = spin();
        let times = log_grid(1e-2, 1e3, 15);
        for s in projection_curves(&b, 2, &times).unwrap() {
            assert!((s.slow - (-(-0.005 * s.t).exp_m1())).abs() < 1e-6, "{s:?}");
            assert!((s.fast - (-0.5025 * s.t).exp()).abs() < 1e-6, "{s:?}");
        }
    }

    #[test]
    fn spin_projection_report() {
        let b = spin();
        let r = spectral_projection_report(&b, 2, 20.0, 40.0, &GridOptions::default()).unwrap();
        assert_eq!(r.analysis_window, [20.0, 80.0]);
        // P projects onto span{𝟙, S_z}: a unital positive map of norm one
        assert!((r.p_norm - 1.0).abs() < 1e-8);
        assert!(r.triangle_holds(1e-8));
        assert!(r.bound_slacks.iter().all(|row| row.passes(1e-8)), "{:?}", r.bound_slacks.iter().find(|x| !x.passes(1e-8)));
        let want = (-(-0.005f64 * 80.0).exp_m1()).max((-0.5025f64 * 20.0).exp());
        assert!((r.c_p.value - want).abs() < 1e-5, "{} {want}", r.c_p.value);
        assert!((r.c_delta_stretch_bound.unwrap() - 3.0 * 0.0861).abs() < 0.01);
        assert!(r.relaxation.as_ref().unwrap().tau_dprime.is_some());
        assert!(r.bound_slacks.iter().any(|x| x.id.starts_with("relaxation_spectral_fast")));
    }

    #[test]
    fn projection_conditions_single_out_the_slow_cut() {
        let b = spin();
        let opts = GridOptions::default();
        let r = spectral_projection_report(&b, 2, 6.0, 24.0, &opts).unwrap();
        assert!(r.c_delta < 0.0997, "{}", r.c_delta);
        assert!(r.condition_checks.len() == 2 && r.condition_checks.iter().all(|c| c.holds));
        assert!(r.bound_slacks.iter().any(|x| x.id.starts_with("fast_residual_tight")));
        assert!(r.bound_slacks.iter().all(|row| row.passes(1e-8)), "{:?}", r.bound_slacks.iter().find(|x| !x.passes(1e-8)));
        // P = I cannot satisfy the slow condition on a window far from the identity
        let full = spectral_projection_report(&b, 4, 6.0, 24.0, &opts).unwrap();
        assert!(!full.condition_checks.iter().find(|c| c.name == "slow_condition").unwrap().holds);
        assert!(full.c_p.value > 0.9);
        assert!(matches!(spectral_projection_report(&b, 3, 20.0, 40.0, &opts), Err(Error::InvalidCut(3))));
    }

    #[test]
    fn random_projection_rows_hold() {
        let b = QuantumBackend::new(&random_lindbladian(2, 2, 5).unwrap(), NormOptions::default()).unwrap();
        for m in [1, 2, 4] {
            if !b.is_valid_cut(m) {
                continue;
            }
            let r = spectral_projection_report(&b, m, 0.5, 1.0, &GridOptions { points: 9, rel_tol: 1e-6 }).unwrap();
            for row in &r.bound_slacks {
                assert!(row.passes(1e-8), "{row:?}");
            }
        }
    }
}
