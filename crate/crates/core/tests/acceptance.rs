//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the lines always reach stdout.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use metastab::battery::{bound_battery, BatteryOptions, ScaledStationary, STATIONARY_ROWS};
use metastab::classical::ClassicalBackend;
use metastab::induced_norm::{induced_norm_sampling_oracle, induced_trace_norm};
use metastab::mode::{e_pm, inverse_bound, InverseBound};
use metastab::models::{random_lindbladian, spin_half_dephasing, two_state};
use metastab::regimes::{change_measure, classify_regime, distance_curves, scan_metastable, timescales, GridOptions, TimeGrid};
use metastab::spectral_meta::projection_curves;
use metastab::superop::{build_liouvillian, spectral_decompose};
use metastab::{DynamicsBackend, NormOptions, QuantumBackend, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GAMMA: f64 = 1.0;
const KAPPA: f64 = 0.005;
const OMEGA: f64 = 5.025;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn spin(kappa: f64) -> QuantumBackend {
    QuantumBackend::new(&spin_half_dephasing(GAMMA, kappa, OMEGA).unwrap(), NormOptions::default()).unwrap()
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn spectral_ground_truth() -> Outcome {
    let start = Instant::now();
    let s = spectral_decompose(&build_liouvillian(&spin_half_dephasing(GAMMA, KAPPA, OMEGA).unwrap()), None).unwrap();
    let g = 0.5 * (GAMMA + KAPPA);
    let want = [C64::new(0.0, 0.0), C64::new(-KAPPA, 0.0), C64::new(-g, OMEGA), C64::new(-g, -OMEGA)];
    // relative to the largest eigenvalue modulus, so the zero mode is measurable
    let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    let mut matched = true;
    for w in want {
        let e = s.eigenvalues.iter().map(|z| (z - w).norm()).fold(f64::INFINITY, f64::min);
        let rel = if w.norm() > 0.0 { e / w.norm() } else { e / scale };
        worst = worst.max(rel);
        matched &= rel <= 1e-10;
    }
    let el = start.elapsed();
    let pass = matched && s.eigenvalues.len() == 4 && within(el, 1.0);
    outcome(pass, format!("max relative error {worst:.2e}, {:.3} s", el.as_secs_f64()))
}

fn norm_curves() -> Outcome {
    let start = Instant::now();
    let b = spin(KAPPA);
    let g = 0.5 * (GAMMA + KAPPA);
    let times = TimeGrid::log(1e-3, 1e3, 50).unwrap().points();
    let (mut e_ss, mut e_i) = (0.0f64, 0.0f64);
    for (t, di, ds) in distance_curves(&b, &times) {
        e_ss = e_ss.max((ds - (-KAPPA * t).exp()).abs());
        let bloch = (1.0 - 2.0 * (-g * t).exp() * (OMEGA * t).cos() + (-2.0 * g * t).exp()).sqrt();
        e_i = e_i.max((di - (1.0 - (-KAPPA * t).exp()).max(bloch)).abs());
    }
    let (mut e_slow, mut e_fast) = (0.0f64, 0.0f64);
    for s in projection_curves(&b, 2, &times).unwrap() {
        e_slow = e_slow.max((s.slow - (1.0 - (-KAPPA * s.t).exp())).abs());
        e_fast = e_fast.max((s.fast - (-g * s.t).exp()).abs());
    }
    let el = start.elapsed();
    let pass = e_ss <= 1e-6 && e_i <= 1e-4 && e_slow <= 1e-4 && e_fast <= 1e-4 && within(el, 60.0);
    outcome(
        pass,
        format!(
            "d_ss err {e_ss:.2e}, d_I err {e_i:.2e}, slow err {e_slow:.2e}, fast err {e_fast:.2e}, {:.2} s",
            el.as_secs_f64()
        ),
    )
}

fn default_scan(b: &QuantumBackend) -> metastab::regimes::ScanResult {
    let ln = b.generator_norm();
    let grid = TimeGrid::log(1e-2 / ln, 2.0 / KAPPA, 60).unwrap().points();
    scan_metastable(b, 0.1, 2.0, &grid, &GridOptions::default()).unwrap()
}

fn metastability_detection() -> Outcome {
    let b = spin(KAPPA);
    let scales = timescales(&b).unwrap();
    let (tau0, tauss) = (scales.tau_0.unwrap().time, scales.tau_ss.unwrap().time);
    let scan = default_scan(&b);
    let mut ok = !scan.windows.is_empty();
    for w in &scan.windows {
        let [t2, t1] = w.window;
        let (_, ep) = e_pm(w.c_delta).unwrap();
        ok &= t2 > tau0 && t1 < tauss && t1 >= 2.0 * t2;
        ok &= b.distance_to_identity(t2) >= ep - 1e-6;
        ok &= b.distance_to_stationary(t1) >= ep - w.c_delta - 1e-6;
    }
    let v = classify_regime(&b, 20.0, 40.0, &GridOptions::default()).unwrap();
    let reference_window = v.is_metastable() && (v.c_delta - 0.0861).abs() <= 0.002;
    let control = [OMEGA, 5.0 * 2.0 * GAMMA].iter().all(|&w| {
        let c = QuantumBackend::new(&spin_half_dephasing(GAMMA, GAMMA, w).unwrap(), NormOptions::default()).unwrap();
        default_scan(&c).windows.is_empty()
    });
    outcome(
        ok && reference_window && control,
        format!(
            "{} windows (all valid: {ok}), (20,40): {:?} C={:.5}, equal-rate control empty: {control}",
            scan.windows.len(),
            v.verdict,
            v.c_delta
        ),
    )
}

fn bound_battery_rows() -> Outcome {
    let start = Instant::now();
    let opts = BatteryOptions::default();
    let b = spin(KAPPA);
    let r = bound_battery(&b, &opts).unwrap();
    let mut ids: BTreeSet<String> = r.distinct_ids();
    let mut failures = r.failures;
    let mut worst = r.worst().map_or(0.0, |w| w.slack);
    let mut rows = r.rows.len();
    for k in 0..50u64 {
        let d = if k < 25 { 2 } else { 3 };
        let m = random_lindbladian(d, 2, 1000 + k).unwrap();
        let q = QuantumBackend::new(&m, NormOptions::default()).unwrap();
        let r = bound_battery(&q, &BatteryOptions { seed: k, ..opts.clone() }).unwrap();
        failures += r.failures;
        rows += r.rows.len();
        worst = worst.min(r.worst().map_or(0.0, |w| w.slack));
        ids.extend(r.distinct_ids());
    }
    let bad = ScaledStationary { inner: &b, scale: 0.9 };
    let control = bound_battery(&bad, &opts).unwrap().failing_ids();
    let targeted = !control.is_empty()
        && control.contains("change_vs_stationary")
        && control.iter().all(|id| STATIONARY_ROWS.contains(&id.as_str()));
    let el = start.elapsed();
    let pass = failures == 0 && targeted && ids.len() >= 25 && within(el, 300.0);
    outcome(
        pass,
        format!(
            "{rows} rows, {} distinct bounds, {failures} failures, worst slack {worst:.2e}, control fails {} targeted rows (only targeted: {targeted}), {:.1} s",
            ids.len(),
            control.len(),
            el.as_secs_f64()
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut above, mut rel_gap) = (f64::NEG_INFINITY, 0.0f64);
    let mut ok = true;
    for seed in 0..20u64 {
        let s = spectral_decompose(&build_liouvillian(&random_lindbladian(2, 2, 500 + seed).unwrap()), None).unwrap();
        for k in 0..10u64 {
            let t1: f64 = rng.gen_range(0.0..4.0);
            let t2: f64 = rng.gen_range(0.0..4.0);
            let x = s.evolution(t1).unwrap().minus(&s.evolution(t2).unwrap());
            let opt = induced_trace_norm(&x, &NormOptions::default()).unwrap().value;
            let samp = induced_norm_sampling_oracle(&x, 100_000, seed * 100 + k);
            above = above.max(samp - opt);
            let gap = if opt > 0.0 { (opt - samp) / opt } else { 0.0 };
            rel_gap = rel_gap.max(gap);
            ok &= samp <= opt + 1e-9 && gap <= 5e-3;
        }
    }
    let mut classical_err = 0.0f64;
    for a in [0.3, 1.0, 2.5] {
        let b = ClassicalBackend::new(&two_state(a).unwrap()).unwrap();
        let decay = |t: f64| (-2.0 * a * t).exp();
        for (t1, t2) in [(0.1, 0.7), (1.0, 3.0), (0.0, 2.0)] {
            classical_err = classical_err.max((b.distance(t1, t2) - (decay(t1) - decay(t2)).abs()).abs());
            classical_err = classical_err.max((b.distance_to_identity(t2) - (1.0 - decay(t2))).abs());
            classical_err = classical_err.max((b.distance_to_stationary(t2) - decay(t2)).abs());
            let c = change_measure(&b, t1, t2, &GridOptions::default()).unwrap().value;
            classical_err = classical_err.max((c - (decay(t1) - decay(t2))).abs());
        }
        let s = timescales(&b).unwrap();
        let tau = 1.0 / (2.0 * a);
        classical_err = classical_err.max((s.tau_0.unwrap().time - tau).abs());
        classical_err = classical_err.max((s.tau_ss.unwrap().time - tau).abs());
    }
    let pass = ok && classical_err <= 1e-10;
    outcome(
        pass,
        format!(
            "sampling above optimizer by at most {above:.2e}, relative gap at most {rel_gap:.2e}, classical error {classical_err:.2e}"
        ),
    )
}

fn exact_thresholds() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut sum_err, mut prod_err) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let c: f64 = rng.gen_range(0.0..=0.25);
        let (m, p) = e_pm(c).unwrap();
        sum_err = sum_err.max((m + p - 1.0).abs());
        prod_err = prod_err.max((m * p - c).abs());
    }
    let mut round_trip = 0.0f64;
    for which in [InverseBound::E1, InverseBound::E2] {
        for k in 0..=100 {
            let c = which.domain_max() * k as f64 / 100.0;
            let x = inverse_bound(which, c).unwrap();
            round_trip = round_trip.max((which.forward(x) - c).abs());
        }
    }
    let pass = sum_err <= 1e-14 && prod_err <= 1e-14 && round_trip <= 1e-10;
    outcome(pass, format!("sum err {sum_err:.1e}, product err {prod_err:.1e}, inverse round trip {round_trip:.1e}"))
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_metastab")).args(args).env_remove("METASTAB_SEED").output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn determinism() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for cmd in [
        vec!["detect", "--cdelta-max", "0.1"],
        vec!["verify-bounds", "--tol", "1e-8"],
        vec!["--model", "builtin:random", "--param", "dim=2", "verify-bounds"],
    ] {
        let mut outs = Vec::new();
        for threads in [None, None, Some("1"), Some("8")] {
            let mut args = vec!["--seed", "7"];
            if let Some(n) = threads {
                args.extend(["--threads", n]);
            }
            args.extend(cmd.iter().copied());
            outs.push(run_cli(&args));
        }
        let same = outs.windows(2).all(|w| w[0] == w[1]);
        ok &= same && outs[0].0 == 0 && !outs[0].1.is_empty();
        notes.push(format!("'{}' {}", cmd.join(" "), if same { "identical" } else { "differs" }));
    }
    outcome(ok, notes.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("spectral ground truth", spectral_ground_truth),
        ("norm-curve reproduction", norm_curves),
        ("metastability detection", metastability_detection),
        ("bound battery", bound_battery_rows),
        ("oracle equivalence", oracle_equivalence),
        ("exact-threshold algebra", exact_thresholds),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| outcome(false, "panicked".into()));
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {tag} ({}) [{:.2} s]", k + 1, o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
