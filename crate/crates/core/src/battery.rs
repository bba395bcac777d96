//! The inequality battery: every bound tying the distances `d_I`, `d_ss`,
//! the change measure and the spectrum together, evaluated on a time grid
//! and on a set of windows. Each row is `lhs <= rhs`; failures are data.
//!
//! The grid has ratio `√2`, so `2t` and `4t` of a grid point are grid
//! points and their distances are shared between rows.

use std::collections::BTreeSet;
use std::f64::consts::SQRT_2;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{DynamicsBackend, NormEval};
use crate::constants::{self, GUARD_BAND};
use crate::mode::e_pm;
use crate::regimes::{change_measure, relaxation_times, timescales, verdict_from, GridOptions, TimescaleReport};
use crate::spectral_meta::{
    cut_norms, detect_separation, projection_rows, relaxation_spectral_rows, ProjectionInputs, ProjectionSample,
    Projectors,
};
use crate::{CMat, CVec, Error, Result, C64};

pub const DEFAULT_TOL: f64 = 1e-8;

/// One evaluated inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub id: String,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl BoundRow {
    pub fn le(id: impl Into<String>, t: f64, lhs: f64, rhs: f64) -> Self {
        Self { id: id.into(), t, lhs, rhs, slack: rhs - lhs }
    }

    /// `a` or `b`, each a pair `(lhs, rhs)`; keeps the branch with more slack.
    pub fn either(id: impl Into<String>, t: f64, a: (f64, f64), b: (f64, f64)) -> Self {
        let (sa, sb) = (a.1 - a.0, b.1 - b.0);
        let (lhs, rhs) = if sa >= sb || sb.is_nan() { a } else { b };
        Self { id: id.into(), t, lhs, rhs, slack: sa.max(sb) }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.slack >= -tol
    }

    /// Row name without the `/…` qualifier.
    pub fn base_id(&self) -> &str {
        self.id.split('/').next().unwrap_or(&self.id)
    }
}

/// Rows that read the stationary projector, directly or through the
/// metastable verdict that gates them.
pub const STATIONARY_ROWS: [&str; 16] = [
    "change_vs_stationary",
    "stationary_exp_decay",
    "spectrum_vs_stationary",
    "stationary_gap_lower",
    "stationary_gap_upper",
    "timescale_final",
    "dichotomy_stationary",
    "projection_stationary_distance",
    "projection_stationary_gap",
    "relaxation_ratio",
    "relaxation_initial_order",
    "relaxation_before_window",
    "relaxation_after_window",
    "relaxation_final_order",
    "relaxation_spectral_fast",
    "relaxation_spectral_slow",
];

/// Induced norm with a shortcut for maps whose entries are all at round-off
/// level: `√D·‖X‖_F` bounds the norm from above and costs nothing.
pub(crate) fn norm_of<B: DynamicsBackend + ?Sized>(b: &B, x: &CMat, warm: Option<&CVec>) -> NormEval {
    let big = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if big <= 1e-14 && !b.exact() {
        return NormEval { value: (b.dim() as f64).sqrt() * x.norm(), witness: warm.cloned() };
    }
    b.norm_warm(x, warm)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryOptions {
    pub tol: f64,
    /// First grid point; defaults to `10⁻³/‖L‖`.
    pub t_min: Option<f64>,
    pub points: usize,
    /// Number of window starts taken from the grid.
    pub windows: usize,
    /// Extra window starts `t''`.
    pub window_starts: Vec<f64>,
    pub grid: GridOptions,
    /// Seed of the random observables in the correlation rows.
    pub seed: u64,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            t_min: None,
            points: 50,
            windows: 6,
            window_starts: Vec::new(),
            grid: GridOptions::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundBatteryReport {
    pub tol: f64,
    pub grid: Vec<f64>,
    pub windows: Vec<[f64; 2]>,
    pub rows: Vec<BoundRow>,
    pub failures: usize,
    pub pass: bool,
}

impl BoundBatteryReport {
    pub fn failing(&self) -> impl Iterator<Item = &BoundRow> {
        self.rows.iter().filter(|r| !r.passes(self.tol))
    }

    pub fn failing_ids(&self) -> BTreeSet<String> {
        self.failing().map(|r| r.base_id().to_string()).collect()
    }

    pub fn distinct_ids(&self) -> BTreeSet<String> {
        self.rows.iter().map(|r| r.base_id().to_string()).collect()
    }

    /// Lowest slack and the row it belongs to.
    pub fn worst(&self) -> Option<&BoundRow> {
        self.rows.iter().min_by(|a, b| a.slack.total_cmp(&b.slack))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("id,t,lhs,rhs,slack,pass\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{},{}\n", r.id, r.t, r.lhs, r.rhs, r.slack, r.passes(self.tol)));
        }
        out
    }
}

/// `t_min·2^{k/2}` built from exact doublings, so that `2t_k = t_{k+2}`.
fn sqrt2_grid(t_min: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let (mut even, mut odd) = (t_min, t_min * SQRT_2);
    for k in 0..n {
        if k % 2 == 0 {
            out.push(even);
            even *= 2.0;
        } else {
            out.push(odd);
            odd *= 2.0;
        }
    }
    out
}

/// `d_I` and `d_ss` at a fixed set of times.
struct DistCache {
    times: Vec<f64>,
    d_i: Vec<f64>,
    d_s: Vec<f64>,
}

impl DistCache {
    fn build<B: DynamicsBackend + ?Sized>(b: &B, mut times: Vec<f64>) -> Self {
        times.sort_by(f64::total_cmp);
        times.dedup();
        let id = b.identity();
        let pss = b.stationary_projector();
        let vals: Vec<(f64, f64)> = times
            .par_iter()
            .map(|&t| {
                let e = b.propagator(t);
                (norm_of(b, &(&e - &id), None).value, norm_of(b, &(&e - &pss), None).value)
            })
            .collect();
        let (d_i, d_s) = vals.into_iter().unzip();
        Self { times, d_i, d_s }
    }

    fn index(&self, t: f64) -> Option<usize> {
        let i = self.times.partition_point(|&x| x < t * (1.0 - 1e-12));
        (i < self.times.len() && (self.times[i] - t).abs() <= 1e-12 * t).then_some(i)
    }

    fn get(&self, t: f64) -> (f64, f64) {
        let i = self.index(t).expect("time was cached");
        (self.d_i[i], self.d_s[i])
    }
}

fn max_over(ev: &[C64], f: impl Fn(C64) -> f64) -> f64 {
    ev.iter().map(|&l| f(l)).fold(0.0, f64::max)
}

pub fn bound_battery<B: DynamicsBackend + ?Sized>(b: &B, opts: &BatteryOptions) -> Result<BoundBatteryReport> {
    let ln = b.generator_norm();
    if !(ln > 0.0) || b.m_ss() == b.eigenvalues().len() {
        return Err(Error::TrivialDynamics("generator is zero or every mode is stationary".into()));
    }
    if !(opts.tol > 0.0) || opts.points < 5 {
        return Err(Error::InvalidInput("battery needs tol > 0 and at least 5 grid points".into()));
    }
    if opts.window_starts.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput("window starts must be positive".into()));
    }
    let t_min = opts.t_min.unwrap_or(1e-3 / ln);
    if !(t_min > 0.0 && t_min.is_finite()) {
        return Err(Error::InvalidInput("t_min must be positive".into()));
    }
    let grid = sqrt2_grid(t_min, opts.points);
    let np = grid.len();

    let mut starts: Vec<f64> = Vec::new();
    let last = np - 5;
    let nw = opts.windows.min(last + 1);
    for j in 0..nw {
        let k = if nw == 1 { 0 } else { (j * last + (nw - 1) / 2) / (nw - 1) };
        starts.push(grid[k]);
    }
    starts.extend(&opts.window_starts);

    // every time at which d_I and d_ss are read
    let mut times = grid.clone();
    times.extend(grid.iter().map(|t| 3.0 * t));
    for &s in &starts {
        let r = s * SQRT_2;
        times.extend([s, r, 2.0 * s, 2.0 * r, 4.0 * s]);
    }
    let cache = DistCache::build(b, times);

    let mut rows = pointwise_rows(b, &grid, &cache);
    let scales = timescales(b)?;
    rows.extend(global_rows(b, &scales));

    let cut_cache: Vec<OnceLock<[f64; 4]>> = (0..=b.eigenvalues().len()).map(|_| OnceLock::new()).collect();
    let mut windows = Vec::new();
    for &s in &starts {
        windows.push([s, 2.0 * s]);
        windows.push([s, 4.0 * s]);
    }
    let per_window: Vec<Vec<BoundRow>> = windows
        .par_iter()
        .map(|&[t2, t1]| window_rows(b, t2, t1, &cache, &scales, &cut_cache, opts))
        .collect::<Result<_>>()?;
    rows.extend(per_window.into_iter().flatten());

    let failures = rows.iter().filter(|r| !r.passes(opts.tol)).count();
    Ok(BoundBatteryReport { tol: opts.tol, grid, windows, rows, failures, pass: failures == 0 })
}

fn pointwise_rows<B: DynamicsBackend + ?Sized>(b: &B, grid: &[f64], cache: &DistCache) -> Vec<BoundRow> {
    let ln = b.generator_norm();
    let delta = 0.25 / ln;
    let ev = b.eigenvalues();
    let decaying = &ev[b.m_ss()..];
    // ‖e^{tL} − e^{2tL}‖ and ‖e^{tL} − e^{(t+δ)L}‖
    let pairs: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&t| {
            let e = b.propagator(t);
            let c2 = norm_of(b, &(&e - b.propagator(2.0 * t)), None).value;
            let inc = norm_of(b, &(&e - b.propagator(t + delta)), None).value;
            (c2, inc)
        })
        .collect();

    let mut rows = Vec::new();
    for (k, &t) in grid.iter().enumerate() {
        let (di, ds) = cache.get(t);
        let (c2, inc) = pairs[k];
        rows.push(BoundRow::le("change_vs_identity", t, di * (1.0 - di), c2));
        rows.push(BoundRow::le("change_vs_stationary", t, ds * (1.0 - ds), c2));
        for n in [2.0, 3.0, 4.0] {
            if let Some(i) = cache.index(n * t) {
                rows.push(BoundRow::le(format!("identity_subadditive/n{n}"), t, cache.d_i[i], n * di));
            }
        }
        let x = t * ln;
        rows.push(BoundRow::le("identity_exp_upper", t, di, x.exp_m1()));
        rows.push(BoundRow::le("identity_exp_lower", t, 2.0 * x - x.exp_m1(), di));
        for n in [2, 3] {
            if let Some(i) = cache.index(n as f64 * t) {
                rows.push(BoundRow::le(format!("stationary_exp_decay/n{n}"), t, cache.d_s[i], ds.powi(n)));
            }
        }
        rows.push(BoundRow::le("increment_lower/double", t, (2.0 - di) * x - x.exp_m1(), c2));
        let y = delta * ln;
        rows.push(BoundRow::le("increment_lower/short", t, (2.0 - di) * y - y.exp_m1(), inc));
        rows.push(BoundRow::le("spectrum_vs_identity", t, max_over(ev, |l| ((l * t).exp() - 1.0).norm()), di));
        if !decaying.is_empty() {
            rows.push(BoundRow::le("spectrum_vs_stationary", t, max_over(decaying, |l| (l * t).exp().norm()), ds));
        }
        let spec_change = max_over(ev, |l| ((l * t).exp() - (l * 2.0 * t).exp()).norm());
        rows.push(BoundRow::le("spectrum_vs_change", t, spec_change, c2));
    }
    rows
}

fn global_rows<B: DynamicsBackend + ?Sized>(b: &B, scales: &TimescaleReport) -> Vec<BoundRow> {
    let ev = b.eigenvalues();
    let gap = norm_of(b, &(b.identity() - b.stationary_projector()), None).value;
    let mut rows = vec![
        BoundRow::le("stationary_gap_lower", 0.0, 1.0, gap),
        BoundRow::le("stationary_gap_upper", 0.0, gap, 2.0),
    ];
    let fastest = ev.iter().map(|l| -l.re).fold(0.0, f64::max);
    rows.push(BoundRow::le("generator_vs_spectrum", 0.0, fastest, b.generator_norm()));
    if let Some(c) = scales.tau_0 {
        rows.push(BoundRow::le("timescale_initial", c.time, c.time * fastest, 1.0));
    }
    if let (Some(c), Some(l)) = (scales.tau_ss, ev.get(b.m_ss())) {
        rows.push(BoundRow::le("timescale_final", c.time, 1.0, c.time * -l.re));
    }
    rows
}

/// Cuts whose projection rows are evaluated: all of them for `n <= 4`,
/// otherwise the trivial ones, the widest real gap and the detected split.
fn cuts<B: DynamicsBackend + ?Sized>(b: &B, separation: Option<usize>) -> Vec<usize> {
    let ev = b.eigenvalues();
    let n = ev.len();
    let ms = b.m_ss();
    if n <= 4 {
        return (ms..=n).filter(|&m| b.is_valid_cut(m)).collect();
    }
    let mut out = vec![ms, n];
    let widest = (ms + 1..n)
        .filter(|&m| b.is_valid_cut(m))
        .max_by(|&i, &j| (ev[i].re / ev[i - 1].re).total_cmp(&(ev[j].re / ev[j - 1].re)));
    out.extend(widest);
    out.extend(separation);
    out.sort_unstable();
    out.dedup();
    out
}

fn window_rows<B: DynamicsBackend + ?Sized>(
    b: &B,
    t2: f64,
    t1: f64,
    cache: &DistCache,
    scales: &TimescaleReport,
    cut_cache: &[OnceLock<[f64; 4]>],
    opts: &BatteryOptions,
) -> Result<Vec<BoundRow>> {
    let ratio = (t1 / t2).round();
    let tag = |name: &str| format!("{name}/r{ratio}");
    let cw = change_measure(b, t2, t1, &opts.grid)?;
    let c = cw.value;
    let span = t1 - t2;
    let ev = b.eigenvalues();
    let mut rows = Vec::new();

    // distances ‖e^{sL} − e^{t''L}‖ at multiples of t''
    let base = b.propagator(t2);
    let mults = [0.5, 1.5, 2.0, 3.0, 4.0, 6.0];
    let dist: Vec<f64> =
        mults.iter().map(|&f| norm_of(b, &(b.propagator(f * t2) - &base), None).value).collect();
    let at = |f: f64| if f == 1.0 { 0.0 } else { dist[mults.iter().position(|&x| x == f).expect("multiple")] };

    for n in [2.0, 3.0, 4.0] {
        if n * t2 <= 4.0 * t2 {
            rows.push(BoundRow::le(tag(&format!("window_lattice/n{n}")), t2, at(n), (n - 1.0) * c));
        }
    }
    // C over the stretched window (t'', t'' + n(t' − t'')) is at most nC
    for n in [2.0, 3.0] {
        let t = t2 + n * span;
        let d = norm_of(b, &(b.propagator(t) - &base), None).value;
        rows.push(BoundRow::le(tag(&format!("window_stretch/n{n}")), t, d, n * c));
    }
    for (s, n) in [(2.0, 2.0), (2.0, 3.0)] {
        rows.push(BoundRow::le(tag(&format!("longtime_linear/n{n}")), s * t2, at(s * n) + c, n * (at(s) + c)));
    }
    for (s, n) in [(0.5, 2.0), (0.5, 3.0), (1.0, 2.0), (1.0, 3.0)] {
        let x = at(s);
        if x < 1.0 && (n - 1.0) * s * t2 <= t1 {
            let rhs = x.powf(n) + 2.0 * c / (1.0 - x);
            rows.push(BoundRow::le(tag(&format!("initial_decay/s{s}n{n}")), s * t2, at(s * n), rhs));
        }
    }

    // two-point correlations at t'' against later times
    let (o1, n1) = b.random_observable(opts.seed);
    let (o2, n2) = b.random_observable(opts.seed.wrapping_add(1));
    let chain = |ta: f64, tb: f64| &o2 * b.propagator(tb) * &o1 * b.propagator(ta);
    let early = chain(t2, t2);
    for (na, nb) in [(1.0, 1.0), (2.0, 1.0), (1.0, 2.0)] {
        let late = chain(t2 + na * span, t2 + nb * span);
        let lhs = norm_of(b, &(&early - late), None).value / (n1 * n2);
        rows.push(BoundRow::le(tag(&format!("correlator_change/n{na}{nb}")), t2, lhs, (na + nb) * c));
    }

    let (di, _) = cache.get(t2);
    let shift = (t2 / span).ceil();
    rows.push(BoundRow::le(tag("inherited_stationarity"), t2, di * (1.0 - di) - c * (1.0 - c), shift * c));

    let Ok((em, ep)) = e_pm(c) else { return Ok(rows) };

    // initial/final dichotomy on the grid points inside the window
    let k0 = cache.index(t2).expect("window start cached");
    for (&t, (&d_i, &d_s)) in cache.times[k0..].iter().zip(cache.d_i[k0..].iter().zip(&cache.d_s[k0..])) {
        if t > t1 * (1.0 + 1e-12) {
            break;
        }
        let (lo, hi) = if t <= 0.5 * t1 * (1.0 + 1e-12) { (em, ep) } else { (em + c, ep - c) };
        rows.push(BoundRow::either(tag("dichotomy_identity"), t, (d_i, lo), (hi, d_i)));
        rows.push(BoundRow::either(tag("dichotomy_stationary"), t, (d_s, lo), (hi, d_s)));
    }
    let branch = ev
        .iter()
        .map(|&l| BoundRow::either(tag("eigenvalue_branch"), t2, (ep * ep, (l.re * t1).exp()), ((l.re * t2).exp(), em)))
        .min_by(|a, b| a.slack.total_cmp(&b.slack));
    rows.extend(branch);

    let verdict = verdict_from(b, t2, t1, cw, &opts.grid);
    let separation = detect_separation(b, t2, t1, c).ok().map(|s| s.m);
    if verdict.is_metastable() && c <= constants::RELAX.value - GUARD_BAND {
        let r = relaxation_times(b, &verdict, Some(scales))?;
        if let (Some(tp), Some(bound)) = (r.tau_prime, r.ratio_bound) {
            rows.push(BoundRow::le(tag("relaxation_ratio"), tp.time, bound * t2, tp.time));
            rows.push(BoundRow::le(tag("relaxation_after_window"), tp.time, t1, tp.time));
            if let Some(ss) = scales.tau_ss {
                rows.push(BoundRow::le(tag("relaxation_final_order"), tp.time, tp.time, ss.time));
            }
        }
        if let Some(td) = r.tau_dprime {
            rows.push(BoundRow::le(tag("relaxation_before_window"), td.time, td.time, t2));
            if let Some(t0) = scales.tau_0 {
                rows.push(BoundRow::le(tag("relaxation_initial_order"), td.time, t0.time, td.time));
            }
        }
        if let Some(m) = separation {
            rows.extend(relaxation_spectral_rows(ev, m, b.m_ss(), &r));
        }
    }

    if t1 >= 4.0 * t2 {
        rows.extend(window_projection_rows(b, t2, t1, cw.value, cw.argmax, cache, cut_cache, separation));
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn window_projection_rows<B: DynamicsBackend + ?Sized>(
    b: &B,
    t2: f64,
    t1: f64,
    c: f64,
    argmax: f64,
    cache: &DistCache,
    cut_cache: &[OnceLock<[f64; 4]>],
    separation: Option<usize>,
) -> Vec<BoundRow> {
    let r = t2 * SQRT_2;
    let mut times = vec![t2, r, 2.0 * t2, 2.0 * r, t1];
    if !times.iter().any(|&t| (t - argmax).abs() <= 1e-12 * t) {
        times.push(argmax);
        times.sort_by(f64::total_cmp);
    }
    let dists: Vec<(f64, f64)> = times
        .iter()
        .map(|&t| match cache.index(t) {
            Some(i) => (cache.d_i[i], cache.d_s[i]),
            None => {
                let e = b.propagator(t);
                (
                    norm_of(b, &(&e - b.identity()), None).value,
                    norm_of(b, &(&e - b.stationary_projector()), None).value,
                )
            }
        })
        .collect();

    let mut rows = Vec::new();
    for m in cuts(b, separation) {
        let Ok(pr) = Projectors::new(b, m) else { continue };
        let norms = *cut_cache[m].get_or_init(|| cut_norms(b, &pr));
        let is_id = pr.p == pr.id;
        let is_ss = pr.p == pr.pss;
        let samples: Vec<ProjectionSample> = times
            .iter()
            .zip(&dists)
            .map(|(&t, &(d_identity, d_stationary))| {
                let e = b.propagator(t);
                let d_projection = if is_id {
                    d_identity
                } else if is_ss {
                    d_stationary
                } else {
                    norm_of(b, &(&e - &pr.p), None).value
                };
                let slow = if is_id { d_identity } else { norm_of(b, &(&pr.p * &e - &pr.p), None).value };
                let fast = norm_of(b, &(&pr.q * &e), None).value;
                ProjectionSample { t, d_identity, d_stationary, d_projection, slow, fast }
            })
            .collect();
        rows.extend(projection_rows(&ProjectionInputs {
            window: [t2, t1],
            c_delta: c,
            c_argmax: argmax,
            m,
            m_ss: b.m_ss(),
            eigenvalues: b.eigenvalues(),
            samples: &samples,
            p_norm: norms[0],
            complement_norm: norms[1],
            gap_norm: norms[2],
            slow_generator_norm: norms[3],
        }));
    }
    rows
}

/// Test fixture: the stationary projector scaled by `scale`, everything
/// else passed through. Only rows that read `P_ss` can notice.
pub struct ScaledStationary<'a, B: ?Sized> {
    pub inner: &'a B,
    pub scale: f64,
}

impl<B: DynamicsBackend + ?Sized> DynamicsBackend for ScaledStationary<'_, B> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eigenvalues(&self) -> &[C64] {
        self.inner.eigenvalues()
    }
    fn m_ss(&self) -> usize {
        self.inner.m_ss()
    }
    fn generator(&self) -> &CMat {
        self.inner.generator()
    }
    fn propagator(&self, t: f64) -> CMat {
        self.inner.propagator(t)
    }
    fn identity(&self) -> CMat {
        self.inner.identity()
    }
    fn stationary_projector(&self) -> CMat {
        self.inner.stationary_projector() * C64::new(self.scale, 0.0)
    }
    fn slow_projector(&self, m: usize) -> Result<CMat> {
        self.inner.slow_projector(m)
    }
    fn is_valid_cut(&self, m: usize) -> bool {
        self.inner.is_valid_cut(m)
    }
    fn norm_warm(&self, x: &CMat, warm: Option<&CVec>) -> NormEval {
        self.inner.norm_warm(x, warm)
    }
    fn generator_norm(&self) -> f64 {
        self.inner.generator_norm()
    }
    fn exact(&self) -> bool {
        self.inner.exact()
    }
    fn state_norm(&self, v: &CVec) -> f64 {
        self.inner.state_norm(v)
    }
    fn random_observable(&self, seed: u64) -> (CMat, f64) {
        self.inner.random_observable(seed)
    }
}
