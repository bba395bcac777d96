//! Single-mode theory: the thresholds `E±`, the inverse bound functions
//! `E₁`, `E₂`, and the initial/final regime boundaries of one eigenvalue.

use serde::Serialize;

use crate::search::bisect;
use crate::{Error, Result, C64};

/// `E±(c) = (1 ± √(1−4c))/2` for `0 <= c <= 1/4`, returned as `(E₋, E₊)`.
pub fn e_pm(c: f64) -> Result<(f64, f64)> {
    if !(0.0..=0.25).contains(&c) {
        return Err(Error::Domain { value: c, domain: "0 <= c <= 1/4" });
    }
    let s = (1.0 - 4.0 * c).max(0.0).sqrt();
    let plus = 0.5 * (1.0 + s);
    // c / E₊ avoids cancellation for small c
    Ok((c / plus, plus))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InverseBound {
    /// Inverse of `2x − eˣ + 1` on `[0, ln 2]`.
    E1,
    /// Inverse of `(3/2)x − eˣ + 1` on `[0, ln(3/2)]`.
    E2,
}

impl InverseBound {
    fn slope(self) -> f64 {
        match self {
            InverseBound::E1 => 2.0,
            InverseBound::E2 => 1.5,
        }
    }

    /// The forward function.
    pub fn forward(self, x: f64) -> f64 {
        self.slope() * x - x.exp_m1()
    }

    /// Upper end of the domain of the inverse.
    pub fn domain_max(self) -> f64 {
        self.forward(self.slope().ln())
    }
}

pub fn inverse_bound(which: InverseBound, c: f64) -> Result<f64> {
    let top = which.domain_max();
    if !(c >= 0.0 && c <= top * (1.0 + 1e-15)) {
        let domain = match which {
            InverseBound::E1 => "0 <= C <= 2ln2 - 1",
            InverseBound::E2 => "0 <= C <= (3ln(3/2) - 1)/2",
        };
        return Err(Error::Domain { value: c, domain });
    }
    let xmax = which.slope().ln();
    if c == 0.0 {
        return Ok(0.0);
    }
    if c >= top {
        return Ok(xmax);
    }
    let (lo, hi) = bisect(|x| which.forward(x) - c, 0.0, xmax, 1e-15);
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeRegimes {
    pub lambda: [f64; 2],
    pub c: f64,
    /// End of the initial regime: first `t` with `|e^{tλ} − 1| = c`.
    pub t_initial: f64,
    /// Start of the final regime: `|e^{tλ}| = c`.
    pub t_final: f64,
    /// `arcsin(c/(1−c))/|λ^I|` for complex modes with `c <= 1/2`.
    pub imag_bound: Option<f64>,
}

pub fn mode_regimes(lambda: C64, c: f64) -> Result<ModeRegimes> {
    if !(lambda.re < 0.0) {
        return Err(Error::Domain { value: lambda.re, domain: "Re λ < 0 (decaying mode)" });
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain { value: c, domain: "0 < c < 1" });
    }
    let rate = -lambda.re;
    let t_final = -c.ln() / rate;
    let (t_initial, imag_bound) = if lambda.im == 0.0 {
        (-(-c).ln_1p() / rate, None)
    } else {
        let g = |t: f64| ((lambda * t).exp() - 1.0).norm() - c;
        let step = (0.01 / lambda.norm()).min(0.1 / lambda.im.abs());
        let mut lo = 0.0;
        let mut hi = step;
        while g(hi) < 0.0 {
            lo = hi;
            hi += step;
        }
        let (a, b) = bisect(g, lo, hi, 1e-15 * hi.max(1.0));
        let bound = (c <= 0.5).then(|| (c / (1.0 - c)).asin() / lambda.im.abs());
        (0.5 * (a + b), bound)
    };
    Ok(ModeRegimes { lambda: [lambda.re, lambda.im], c, t_initial, t_final, imag_bound })
}
