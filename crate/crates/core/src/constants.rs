//! Cutoffs on the change measure `C_Δ` under which the threshold arguments
//! hold, with the condition each one encodes.

/// A named cutoff on `C_Δ`.
#[derive(Debug, Clone, Copy)]
pub struct Cutoff {
    pub name: &'static str,
    pub value: f64,
    pub condition: &'static str,
}

/// Real roots `E±(c)` exist: `c <= 1/4`.
pub const QUARTER: Cutoff = Cutoff { name: "1/4", value: 0.25, condition: "E±(C) real; initial/final dichotomy exists" };

/// `E₋ + C < E₊ − C`, needed to carry the initial-regime bound to `(t'/2, t']`.
pub const SQRT2: Cutoff = Cutoff {
    name: "(-1+sqrt2)/2",
    value: 0.207_106_781_186_547_5,
    condition: "E-(C)+C < E+(C)-C; distance to identity bound extends to the second half of the window",
};

/// `E₋ < E₊ − C`, needed to carry the stationary bound to `(t'/2, t']`.
pub const SQRT5: Cutoff = Cutoff {
    name: "-2+sqrt5",
    value: 0.236_067_977_499_789_7,
    condition: "E-(C) < E+(C)-C; distance to stationarity bound extends to the second half of the window",
};

/// `1/e − E₋(C) > 0` and `1 − 1/e − E₋(C) > C`: relaxation times exist.
pub const RELAX: Cutoff = Cutoff {
    name: "(1-1/e)/e",
    value: 0.232_544_157_934_829_6,
    condition: "initial and long-time relaxation times are defined",
};

/// Domain of `E₂`: `(3 ln(3/2) − 1)/2`.
pub const E2_DOMAIN: Cutoff = Cutoff {
    name: "(3ln(3/2)-1)/2",
    value: 0.108_197_662_162_246_57,
    condition: "inverse function E2 is defined",
};

/// Domain of `E₁`: `2 ln 2 − 1`.
pub const E1_DOMAIN: Cutoff = Cutoff {
    name: "2ln2-1",
    value: 0.386_294_361_119_890_6,
    condition: "inverse function E1 is defined",
};

/// Slow-projection bounds on a window with `t' >= 4t''`; below it the two
/// branches for `‖(I−P)e^{tL}‖` are distinct.
pub const PROJ_WINDOW: Cutoff = Cutoff {
    name: "0.0997",
    value: 0.0997,
    condition: "projection norm and fast-residual bounds on a window with t' >= 4t''",
};

/// `‖P‖C_Δ` stays inside the domain of `E₂`, giving the linear bound on the slow generator.
pub const PROJ_LINEAR: Cutoff = Cutoff {
    name: "0.0837",
    value: 0.0837,
    condition: "slow-generator bound (t'-t'')||PL|| <= E2(||P||C)",
};

/// The two branches for `‖P(e^{tL}−I)‖` are distinct.
pub const PROJ_DRIFT: Cutoff = Cutoff { name: "0.129", value: 0.129, condition: "slow-drift branches distinct" };

/// Dichotomy for `‖P(e^{2t''L}−I)‖`.
pub const PROJ_DOUBLE: Cutoff =
    Cutoff { name: "0.130", value: 0.130, condition: "slow-drift dichotomy at 2t''" };

/// Guard band subtracted from every cutoff before a verdict relies on it.
pub const GUARD_BAND: f64 = 1e-4;

/// Absolute slack allowed when comparing measured distances with thresholds;
/// the stationary-distance condition is saturated exactly by a single
/// dominant real mode, so an exact comparison would flip on round-off.
pub const VERDICT_TOL: f64 = 1e-6;

pub const ALL: [Cutoff; 10] =
    [QUARTER, SQRT2, SQRT5, RELAX, E2_DOMAIN, E1_DOMAIN, PROJ_WINDOW, PROJ_LINEAR, PROJ_DRIFT, PROJ_DOUBLE];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert!((SQRT2.value - (2f64.sqrt() - 1.0) / 2.0).abs() < 1e-16);
        assert!((SQRT5.value - (5f64.sqrt() - 2.0)).abs() < 1e-15);
        let e = std::f64::consts::E;
        assert!((RELAX.value - (1.0 - 1.0 / e) / e).abs() < 1e-16);
        assert!((E2_DOMAIN.value - (3.0 * 1.5f64.ln() - 1.0) / 2.0).abs() < 1e-16);
        assert!((E1_DOMAIN.value - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-16);
    }
}
