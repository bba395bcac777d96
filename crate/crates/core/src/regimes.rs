//! Distances to the initial and asymptotic limits, the change measure
//! `C_Δ`, timescales, regime verdicts and relaxation times.
//!
//! Everything here goes through [`DynamicsBackend`], so the same code runs
//! on Lindbladians (optimized induced norms) and Markov chains (exact norms).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{DynamicsBackend, NormEval};
use crate::constants::{self, GUARD_BAND, VERDICT_TOL};
use crate::mode::e_pm;
use crate::search::{bisect, golden_max, linear_grid, log_grid};
use crate::{CVec, Error, Result};

const E: f64 = std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    pub spacing: Spacing,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, n_points: usize, spacing: Spacing) -> Result<Self> {
        let ok = t_min.is_finite()
            && t_max.is_finite()
            && t_min >= 0.0
            && n_points >= 1
            && (t_max > t_min || (n_points == 1 && t_max == t_min))
            && (spacing == Spacing::Linear || t_min > 0.0);
        if !ok {
            return Err(Error::InvalidInput(format!(
                "bad time grid [{t_min}, {t_max}] with {n_points} {spacing:?} points"
            )));
        }
        Ok(Self { t_min, t_max, n_points, spacing })
    }

    pub fn log(t_min: f64, t_max: f64, n_points: usize) -> Result<Self> {
        Self::new(t_min, t_max, n_points, Spacing::Log)
    }

    pub fn points(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Log => log_grid(self.t_min, self.t_max, self.n_points),
            Spacing::Linear => linear_grid(self.t_min, self.t_max, self.n_points),
        }
    }
}

/// Discretization of suprema over a time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub points: usize,
    /// Relative width at which golden-section refinement stops.
    pub rel_tol: f64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { points: 33, rel_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowSup {
    pub value: f64,
    pub argmax: f64,
}

/// Supremum of `f` over `[a, b]`: a sequential warm-started sweep (log
/// spacing when `a > 0`) followed by golden-section refinement around the
/// best grid point.
pub(crate) fn sup_on_window(
    a: f64,
    b: f64,
    opts: &GridOptions,
    mut f: impl FnMut(f64, Option<&CVec>) -> NormEval,
) -> WindowSup {
    if b <= a {
        let v = f(a, None).value;
        return WindowSup { value: v, argmax: a };
    }
    let n = opts.points.max(3);
    let pts = if a > 0.0 { log_grid(a, b, n) } else { linear_grid(a, b, n) };
    let mut vals = Vec::with_capacity(n);
    let mut wits: Vec<Option<CVec>> = Vec::with_capacity(n);
    let mut warm: Option<CVec> = None;
    for &t in &pts {
        let e = f(t, warm.as_ref());
        vals.push(e.value);
        warm = e.witness.clone();
        wits.push(e.witness);
    }
    let mut i = 0;
    for k in 1..n {
        if vals[k] > vals[i] {
            i = k;
        }
    }
    let lo = pts[i.saturating_sub(1)];
    let hi = pts[(i + 1).min(n - 1)];
    let seed = wits[i].clone();
    let (x, fx) = golden_max(|t| f(t, seed.as_ref()).value, lo, hi, opts.rel_tol);
    if fx > vals[i] {
        WindowSup { value: fx, argmax: x }
    } else {
        WindowSup { value: vals[i], argmax: pts[i] }
    }
}

fn check_window(t2: f64, t1: f64) -> Result<()> {
    if !(t2 >= 0.0 && t1.is_finite() && t1 >= t2) {
        return Err(Error::InvalidInput(format!("window ({t2}, {t1}) needs 0 <= t'' <= t'")));
    }
    Ok(())
}

/// `C_Δ(t'', t') = sup_{t'' <= t <= t'} ‖e^{t''L} − e^{tL}‖`. By
/// contractivity this equals the supremum over all pairs in the window.
pub fn change_measure<B: DynamicsBackend + ?Sized>(b: &B, t2: f64, t1: f64, opts: &GridOptions) -> Result<WindowSup> {
    check_window(t2, t1)?;
    if t1 == t2 {
        return Ok(WindowSup { value: 0.0, argmax: t2 });
    }
    let base = b.propagator(t2);
    Ok(sup_on_window(t2, t1, opts, |t, w| b.norm_warm(&(&base - b.propagator(t)), w)))
}

/// `sup_{a <= t <= b} ‖e^{tL} − e^{2tL}‖`.
pub fn change2_measure<B: DynamicsBackend + ?Sized>(b: &B, a: f64, bb: f64, opts: &GridOptions) -> Result<WindowSup> {
    check_window(a, bb)?;
    Ok(sup_on_window(a, bb, opts, |t, w| b.norm_warm(&(b.propagator(t) - b.propagator(2.0 * t)), w)))
}

/// `sup_{t'' <= t <= t'} ‖(e^{t''L} − e^{tL})ρ₀‖` for one vectorized state.
pub fn state_change<B: DynamicsBackend + ?Sized>(
    b: &B,
    rho0: &CVec,
    t2: f64,
    t1: f64,
    opts: &GridOptions,
) -> Result<WindowSup> {
    check_window(t2, t1)?;
    if rho0.len() != b.generator().nrows() {
        return Err(Error::DimensionMismatch("state vector has the wrong length".into()));
    }
    let base = b.propagator(t2) * rho0;
    Ok(sup_on_window(t2, t1, opts, |t, _| NormEval {
        value: b.state_norm(&(&base - b.propagator(t) * rho0)),
        witness: None,
    }))
}

/// `sup_t |⟨o, (e^{t''L} − e^{tL})ρ₀⟩|`, the change of one average.
pub fn observable_average_change<B: DynamicsBackend + ?Sized>(
    b: &B,
    rho0: &CVec,
    o: &CVec,
    t2: f64,
    t1: f64,
    opts: &GridOptions,
) -> Result<WindowSup> {
    check_window(t2, t1)?;
    let n = b.generator().nrows();
    if rho0.len() != n || o.len() != n {
        return Err(Error::DimensionMismatch("state or observable vector has the wrong length".into()));
    }
    let base = b.propagator(t2) * rho0;
    Ok(sup_on_window(t2, t1, opts, |t, _| NormEval {
        value: o.dotc(&(&base - b.propagator(t) * rho0)).norm(),
        witness: None,
    }))
}

/// A located level crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub time: f64,
    /// `time · ‖L‖`.
    pub time_scaled: f64,
    pub bracket: [f64; 2],
    /// `|f(time) − level|`.
    pub residual: f64,
}

const MAX_SCAN_STEPS: usize = 200_000;

/// Finds the first `t >= t0` at which `f` reaches `level`, coming from the
/// side `f(t0)` is on, then bisects the bracket. Each step is the larger of
/// the step the Lipschitz bound `|f(t+h) − f(t)| <= e^{h‖L‖} − 1` proves
/// safe and a step that resolves the oscillation and decay of every mode
/// still present at `t`.
fn first_crossing<B: DynamicsBackend + ?Sized>(
    b: &B,
    f: &dyn Fn(f64, Option<&CVec>) -> NormEval,
    level: f64,
    t0: f64,
    t_max: f64,
) -> Option<Crossing> {
    let ln = b.generator_norm();
    let start = f(t0, None);
    let below = start.value < level;
    let reached = |v: f64| if below { v >= level } else { v <= level };
    if reached(start.value) {
        return Some(Crossing { time: t0, time_scaled: t0 * ln, bracket: [t0, t0], residual: (start.value - level).abs() });
    }
    let (mut t, mut v, mut warm) = (t0, start.value, start.witness);
    let mut steps = 0;
    let hit = loop {
        if t >= t_max || steps >= MAX_SCAN_STEPS {
            return None;
        }
        let safe = (level - v).abs().ln_1p() / ln;
        let h = safe.max(oscillation_step(b, t)).max(f64::EPSILON * t.max(1.0));
        let tn = (t + h).min(t_max);
        let e = f(tn, warm.as_ref());
        steps += 1;
        if reached(e.value) {
            break tn;
        }
        t = tn;
        v = e.value;
        warm = e.witness;
    };
    let seed = warm.clone();
    let g = |s: f64| {
        let val = f(s, seed.as_ref()).value - level;
        if below {
            val
        } else {
            -val
        }
    };
    let (lo, hi) = bisect(g, t, hit, 1e-13 * hit.max(1e-300));
    let mid = 0.5 * (lo + hi);
    let residual = (f(mid, seed.as_ref()).value - level).abs();
    Some(Crossing { time: mid, time_scaled: mid * ln, bracket: [lo, hi], residual })
}

/// Step short enough to resolve the oscillation and decay of every mode
/// whose amplitude at `t` is still above `1e-8`.
fn oscillation_step<B: DynamicsBackend + ?Sized>(b: &B, t: f64) -> f64 {
    let mut w: f64 = 0.0;
    let mut r: f64 = 0.0;
    for l in b.eigenvalues() {
        if (l.re * t).exp() >= 1e-8 {
            w = w.max(l.im.abs());
            r = r.max(-l.re);
        }
    }
    let mut h = f64::INFINITY;
    if w > 0.0 {
        h = h.min(std::f64::consts::PI / (8.0 * w));
    }
    if r > 0.0 {
        h = h.min(0.1 / r);
    }
    if h.is_finite() {
        h
    } else {
        0.05 / b.generator_norm()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TimescaleReport {
    /// First crossing of `d_I(t) = 1 − 1/e`.
    pub tau_0: Option<Crossing>,
    /// Crossing of `d_ss(t) = 1/e`.
    pub tau_ss: Option<Crossing>,
    pub tau_dprime: Option<Crossing>,
    pub tau_prime: Option<Crossing>,
    pub generator_norm: f64,
    pub diagnostics: Vec<String>,
}

fn nontrivial<B: DynamicsBackend + ?Sized>(b: &B) -> Result<f64> {
    let ln = b.generator_norm();
    if !(ln > 0.0) || b.m_ss() == b.eigenvalues().len() {
        return Err(Error::TrivialDynamics("generator is zero or every mode is stationary".into()));
    }
    Ok(ln)
}

/// Slowest decay rate among the non-stationary modes, if any decays.
fn slowest_rate<B: DynamicsBackend + ?Sized>(b: &B) -> Option<f64> {
    b.eigenvalues()[b.m_ss()..].iter().map(|l| -l.re).filter(|&r| r > 0.0).reduce(f64::min)
}

fn fastest_rate<B: DynamicsBackend + ?Sized>(b: &B) -> Option<f64> {
    b.eigenvalues().iter().map(|l| -l.re).filter(|&r| r > 0.0).reduce(f64::max)
}

pub fn timescales<B: DynamicsBackend + ?Sized>(b: &B) -> Result<TimescaleReport> {
    let ln = nontrivial(b)?;
    let mut diagnostics = Vec::new();
    let id = b.identity();
    let pss = b.stationary_projector();

    let d_i = |t: f64, w: Option<&CVec>| b.norm_warm(&(b.propagator(t) - &id), w);
    // d_I reaches 1 − 1/e no later than 1/|λ^R| of the fastest mode
    let t_max0 = match fastest_rate(b) {
        Some(r) => 1.5 / r,
        None => 1e4 / ln,
    };
    let tau_0 = first_crossing(b, &d_i, 1.0 - 1.0 / E, 0.0, t_max0);
    if tau_0.is_none() {
        diagnostics.push(format!("d_I stays below 1-1/e up to t = {t_max0:.6e}"));
    }

    let d_ss = |t: f64, w: Option<&CVec>| b.norm_warm(&(b.propagator(t) - &pss), w);
    let level = 1.0 / E;
    let tau_ss = if slowest_rate(b).is_none() {
        diagnostics.push("some non-stationary mode does not decay; d_ss never reaches 1/e".into());
        None
    } else {
        // d_ss is nonincreasing: bracket by doubling, then bisect
        let mut lo = 0.0;
        let mut hi = 1.0 / ln;
        let mut found = false;
        for _ in 0..400 {
            if d_ss(hi, None).value <= level {
                found = true;
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        if found {
            let (a, c) = bisect(|t| level - d_ss(t, None).value, lo, hi, 1e-13 * hi);
            let mid = 0.5 * (a + c);
            Some(Crossing {
                time: mid,
                time_scaled: mid * ln,
                bracket: [a, c],
                residual: (d_ss(mid, None).value - level).abs(),
            })
        } else {
            diagnostics.push(format!("d_ss stays above 1/e up to t = {hi:.6e}"));
            None
        }
    };

    Ok(TimescaleReport { tau_0, tau_ss, tau_dprime: None, tau_prime: None, generator_norm: ln, diagnostics })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Initial,
    Final,
    Metastable,
    Indeterminate,
}

/// Which cutoffs on `C_Δ` (minus the guard band) the window satisfies.
#[derive(Debug, Clone, Serialize)]
pub struct ValidityFlags {
    pub below_quarter: bool,
    pub below_sqrt2: bool,
    pub below_sqrt5: bool,
    pub below_relax: bool,
    /// Cutoff the verdict relied on, or the one that was exceeded.
    pub cutoff: Option<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeVerdict {
    pub window: [f64; 2],
    pub c_delta: f64,
    pub c_delta_argmax: f64,
    pub d_initial_at_start: f64,
    pub d_initial_at_end: f64,
    pub d_stationary_at_start: f64,
    pub d_stationary_at_end: f64,
    pub e_minus: Option<f64>,
    pub e_plus: Option<f64>,
    pub verdict: Verdict,
    pub validity_flags: ValidityFlags,
    /// `sup_{t'' <= t <= t'/2} ‖e^{tL} − e^{2tL}‖`, for metastable windows.
    pub c_delta2: Option<f64>,
    /// `(E₋, E₊)` of `c_delta2`.
    pub tight_thresholds: Option<[f64; 2]>,
}

impl RegimeVerdict {
    pub fn is_metastable(&self) -> bool {
        self.verdict == Verdict::Metastable
    }
}

fn check_meta_window(t2: f64, t1: f64) -> Result<()> {
    if !(t2 > 0.0 && t1.is_finite() && t1 >= 2.0 * t2) {
        return Err(Error::InvalidWindow { t2, t1 });
    }
    Ok(())
}

pub fn classify_regime<B: DynamicsBackend + ?Sized>(b: &B, t2: f64, t1: f64, opts: &GridOptions) -> Result<RegimeVerdict> {
    check_meta_window(t2, t1)?;
    let c = change_measure(b, t2, t1, opts)?;
    Ok(verdict_from(b, t2, t1, c, opts))
}

pub(crate) fn verdict_from<B: DynamicsBackend + ?Sized>(b: &B, t2: f64, t1: f64, c: WindowSup, opts: &GridOptions) -> RegimeVerdict {
    let cd = c.value;
    let g = GUARD_BAND;
    let d_i0 = b.distance_to_identity(t2);
    let d_i1 = b.distance_to_identity(t1);
    let d_s0 = b.distance_to_stationary(t2);
    let d_s1 = b.distance_to_stationary(t1);
    let below = |cut: constants::Cutoff| cd < cut.value - g;
    let mut flags = ValidityFlags {
        below_quarter: below(constants::QUARTER),
        below_sqrt2: below(constants::SQRT2),
        below_sqrt5: below(constants::SQRT5),
        below_relax: below(constants::RELAX),
        cutoff: None,
    };
    let mut v = RegimeVerdict {
        window: [t2, t1],
        c_delta: cd,
        c_delta_argmax: c.argmax,
        d_initial_at_start: d_i0,
        d_initial_at_end: d_i1,
        d_stationary_at_start: d_s0,
        d_stationary_at_end: d_s1,
        e_minus: None,
        e_plus: None,
        verdict: Verdict::Indeterminate,
        validity_flags: flags.clone(),
        c_delta2: None,
        tight_thresholds: None,
    };
    if !flags.below_quarter {
        v.validity_flags.cutoff = Some(constants::QUARTER.name);
        return v;
    }
    let (em, ep) = e_pm(cd).expect("checked against 1/4");
    v.e_minus = Some(em);
    v.e_plus = Some(ep);
    let tol = VERDICT_TOL;
    let verdict = if flags.below_sqrt2 && d_i0 >= ep - tol && d_s1 >= ep - cd - tol {
        flags.cutoff = Some(constants::SQRT2.name);
        Verdict::Metastable
    } else if flags.below_sqrt2 && d_i1 <= em + cd + tol {
        flags.cutoff = Some(constants::SQRT2.name);
        Verdict::Initial
    } else if flags.below_sqrt5 && d_s0 <= em + tol {
        flags.cutoff = Some(constants::SQRT5.name);
        Verdict::Final
    } else {
        flags.cutoff = Some(if flags.below_sqrt2 { "none" } else { constants::SQRT2.name });
        Verdict::Indeterminate
    };
    v.verdict = verdict;
    v.validity_flags = flags;
    if verdict == Verdict::Metastable {
        if let Ok(c2) = change2_measure(b, t2, 0.5 * t1, opts) {
            v.c_delta2 = Some(c2.value);
            if let Ok((m2, p2)) = e_pm(c2.value.min(cd)) {
                v.tight_thresholds = Some([m2, p2]);
            }
        }
    }
    v
}

/// Metastable windows plus the spans obtained by merging overlapping ones.
#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub windows: Vec<RegimeVerdict>,
    pub merged: Vec<[f64; 2]>,
}

/// Classifies `(t'', ratio·t'')` for every grid point `t''` and keeps the
/// metastable windows with `C_Δ <= c_delta_max`, ordered by `t''`.
pub fn scan_metastable<B: DynamicsBackend + ?Sized>(
    b: &B,
    c_delta_max: f64,
    ratio: f64,
    grid: &[f64],
    opts: &GridOptions,
) -> Result<ScanResult> {
    if !(ratio >= 2.0) {
        return Err(Error::Domain { value: ratio, domain: "ratio >= 2" });
    }
    if !(c_delta_max > 0.0 && c_delta_max < 0.25) {
        return Err(Error::Domain { value: c_delta_max, domain: "0 < c_delta_max < 1/4" });
    }
    nontrivial(b)?;
    if grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput("scan grid must hold positive times".into()));
    }
    let (_, ep_max) = e_pm(c_delta_max)?;
    let found: Vec<Option<RegimeVerdict>> = grid
        .par_iter()
        .map(|&t2| {
            let t1 = ratio * t2;
            // a window with C <= c_delta_max needs d_I(t'') >= E₊(c_delta_max)
            // and d_ss(t') >= E₊(c_delta_max) − c_delta_max
            if b.distance_to_identity(t2) < ep_max - VERDICT_TOL
                || b.distance_to_stationary(t1) < ep_max - c_delta_max - VERDICT_TOL
            {
                return None;
            }
            let c = change_measure(b, t2, t1, opts).ok()?;
            if c.value > c_delta_max {
                return None;
            }
            let v = verdict_from(b, t2, t1, c, opts);
            v.is_metastable().then_some(v)
        })
        .collect();
    let mut windows: Vec<RegimeVerdict> = found.into_iter().flatten().collect();
    windows.sort_by(|a, b| a.window[0].total_cmp(&b.window[0]));
    let mut merged: Vec<[f64; 2]> = Vec::new();
    for w in &windows {
        match merged.last_mut() {
            Some(m) if w.window[0] <= m[1] => m[1] = m[1].max(w.window[1]),
            _ => merged.push(w.window),
        }
    }
    Ok(ScanResult { windows, merged })
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxationReport {
    pub window: [f64; 2],
    pub c_delta: f64,
    pub e_minus: f64,
    /// First `t` with `‖e^{tL} − e^{t''L}‖ = 1/e − E₋`.
    pub tau_dprime: Option<Crossing>,
    /// First `t >= t''` with `‖e^{tL} − e^{t''L}‖ = 1 − 1/e − E₋`.
    pub tau_prime: Option<Crossing>,
    /// `⌊(1 − 1/e − E₋)/C_Δ⌋ + 1`, the guaranteed ratio `τ'/t''`.
    pub ratio_bound: Option<f64>,
    pub tau_0_le_tau_dprime: Option<bool>,
    pub tau_dprime_lt_t2: Option<bool>,
    pub t1_lt_tau_prime: Option<bool>,
    pub tau_prime_le_tau_ss: Option<bool>,
    pub ratio_bound_holds: Option<bool>,
}

pub fn relaxation_times<B: DynamicsBackend + ?Sized>(
    b: &B,
    verdict: &RegimeVerdict,
    scales: Option<&TimescaleReport>,
) -> Result<RelaxationReport> {
    let [t2, t1] = verdict.window;
    if !verdict.is_metastable() {
        return Err(Error::NotMetastable { t2, t1 });
    }
    let cd = verdict.c_delta;
    if cd > constants::RELAX.value {
        return Err(Error::Domain { value: cd, domain: "C_Δ <= (1-1/e)/e" });
    }
    let (em, _) = e_pm(cd)?;
    let base = b.propagator(t2);
    let f = |t: f64, w: Option<&CVec>| b.norm_warm(&(b.propagator(t) - &base), w);

    let tau_dprime = first_crossing(b, &f, 1.0 / E - em, 0.0, t2);
    let t_far = match (scales.and_then(|s| s.tau_ss), slowest_rate(b)) {
        (Some(c), _) => 1.5 * c.time,
        (None, Some(r)) => t2 + 10.0 / r,
        (None, None) => t1 * 1e3,
    };
    let tau_prime = first_crossing(b, &f, 1.0 - 1.0 / E - em, t2, t_far.max(t1));
    let ratio_bound = (cd > 0.0).then(|| ((1.0 - 1.0 / E - em) / cd).floor() + 1.0);
    let tau_0 = scales.and_then(|s| s.tau_0);
    let tau_ss = scales.and_then(|s| s.tau_ss);
    let tol = VERDICT_TOL;
    Ok(RelaxationReport {
        window: [t2, t1],
        c_delta: cd,
        e_minus: em,
        tau_0_le_tau_dprime: tau_0.zip(tau_dprime).map(|(a, d)| a.time <= d.time * (1.0 + tol)),
        tau_dprime_lt_t2: tau_dprime.map(|d| d.time < t2),
        t1_lt_tau_prime: tau_prime.map(|p| t1 < p.time),
        tau_prime_le_tau_ss: tau_prime.zip(tau_ss).map(|(p, s)| p.time <= s.time * (1.0 + tol)),
        ratio_bound_holds: tau_prime.zip(ratio_bound).map(|(p, r)| p.time >= r * t2 * (1.0 - tol)),
        tau_dprime,
        tau_prime,
        ratio_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distinguishability {
    /// Minimal average error of telling `ρ_{t''}` from `ρ_t` in the window.
    pub min_error: f64,
    pub fidelity_low: f64,
    pub fidelity_high: f64,
}

pub fn distinguishability_bounds(c_delta: f64) -> Result<Distinguishability> {
    if !(0.0..=2.0).contains(&c_delta) {
        return Err(Error::Domain { value: c_delta, domain: "0 <= C_Δ <= 2" });
    }
    let h = c_delta / 2.0;
    Ok(Distinguishability { min_error: 0.5 - c_delta / 4.0, fidelity_low: 1.0 - h, fidelity_high: 1.0 - h * h })
}

/// `d_I(t)` and `d_ss(t)` along a grid, warm-started point to point.
pub fn distance_curves<B: DynamicsBackend + ?Sized>(b: &B, times: &[f64]) -> Vec<(f64, f64, f64)> {
    let id = b.identity();
    let pss = b.stationary_projector();
    let (mut wi, mut ws): (Option<CVec>, Option<CVec>) = (None, None);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let p = b.propagator(t);
        let ei = b.norm_warm(&(&p - &id), wi.as_ref());
        let es = b.norm_warm(&(&p - &pss), ws.as_ref());
        wi = ei.witness;
        ws = es.witness;
        out.push((t, ei.value, es.value));
    }
    out
}
