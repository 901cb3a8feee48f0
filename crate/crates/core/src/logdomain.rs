//! Log-domain arithmetic: the `LogValue` result type, stable `log(e^a + e^b)`
//! and running trapezoid integrals of `exp`-integrands.
//!
//! Every free energy in this crate is the log of a positive integral, so all
//! accumulation happens on logs. `-∞` is the log of an empty/zero integral
//! and is a legal value throughout; `NaN` never is.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// A real carried in log domain; `-∞` encodes the log of zero.
///
/// Invariant: never NaN.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogValue(f64);

impl LogValue {
    /// Wraps a log-domain value. Panics on NaN — a NaN here always means an
    /// upstream bug, not a data condition.
    pub fn new(value: f64) -> Self {
        assert!(!value.is_nan(), "LogValue must not be NaN");
        LogValue(value)
    }

    pub fn neg_infinity() -> Self {
        LogValue(f64::NEG_INFINITY)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_neg_infinity(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

impl From<LogValue> for f64 {
    fn from(v: LogValue) -> f64 {
        v.0
    }
}

/// log(e^a + e^b), stable for widely separated magnitudes.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a >= b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Neumaier-compensated sum; order-stable and accurate for long reductions.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Running trapezoid integral of `exp(g)` on a uniform grid, in log domain.
///
/// Returns `c` with `c[j] = log ∫_{t_0}^{t_j} exp(g(s)) ds`; `c[0] = -∞`.
/// A `-∞` integrand value contributes nothing to its cells.
pub fn log_trapezoid_running(g: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.len());
    out.push(f64::NEG_INFINITY);
    if g.is_empty() {
        return out;
    }
    let log_half_h = (0.5 * h).ln();
    let mut acc = f64::NEG_INFINITY;
    for j in 1..g.len() {
        let cell = log_half_h + log_add_exp(g[j - 1], g[j]);
        acc = log_add_exp(acc, cell);
        out.push(acc);
    }
    out
}

/// Full trapezoid integral of `exp(g)` in log domain: max shift followed by a
/// compensated linear-domain sum. `-∞` on an empty or all-`-∞` input.
pub fn log_trapezoid(g: &[f64], h: f64) -> f64 {
    if g.len() < 2 {
        return f64::NEG_INFINITY;
    }
    let m = g.iter().fold(f64::NEG_INFINITY, |a, &x| a.max(x));
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let n = g.len();
    let sum = compensated_sum(g.iter().enumerate().map(|(j, &x)| {
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        w * (x - m).exp()
    }));
    if sum <= 0.0 {
        f64::NEG_INFINITY
    } else {
        m + sum.ln() + h.ln()
    }
}

/// Running maximum of `g`: the (max,+) analogue of `log_trapezoid_running`.
/// `c[j] = max(g[0..=j])`, so the degenerate interval at `j = 0` is included.
pub fn running_max(g: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.len());
    let mut acc = f64::NEG_INFINITY;
    for &v in g {
        acc = acc.max(v);
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_add_exp_basics() {
        assert_relative_eq!(log_add_exp(0.0, 0.0), core::f64::consts::LN_2);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
        assert_eq!(log_add_exp(3.0, f64::NEG_INFINITY), 3.0);
        assert_eq!(
            log_add_exp(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
        // Large arguments must not overflow.
        assert_relative_eq!(log_add_exp(1000.0, 1000.0), 1000.0 + core::f64::consts::LN_2);
    }

    #[test]
    fn trapezoid_constant_integrand_is_exact() {
        // ∫_0^t 1 ds = t, and trapezoid is exact on constants.
        let g = [0.0; 9];
        let h = 0.125;
        let c = log_trapezoid_running(&g, h);
        for j in 1..9 {
            assert_relative_eq!(c[j], (j as f64 * h).ln(), max_relative = 1e-14);
        }
        assert_relative_eq!(log_trapezoid(&g, h), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn trapezoid_matches_closed_form_exp() {
        // ∫_0^1 e^s ds = e - 1 at O(h²).
        let n = 4096;
        let h = 1.0 / n as f64;
        let g: Vec<f64> = (0..=n).map(|j| j as f64 * h).collect();
        let v = log_trapezoid(&g, h);
        assert_relative_eq!(v.exp(), core::f64::consts::E - 1.0, max_relative = 1e-7);
    }

    #[test]
    fn neg_infinity_cells_drop_out() {
        let g = [f64::NEG_INFINITY, 0.0, 0.0];
        let c = log_trapezoid_running(&g, 1.0);
        // First cell contributes h/2·e^0, second h/2·(1+1).
        assert_relative_eq!(c[1].exp(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(c[2].exp(), 1.5, max_relative = 1e-14);
    }

    #[test]
    fn running_max_includes_left_endpoint() {
        let g = [2.0, 1.0, 3.0];
        assert_eq!(running_max(&g), alloc::vec![2.0, 2.0, 3.0]);
    }

    #[test]
    #[should_panic]
    fn log_value_rejects_nan() {
        let _ = LogValue::new(f64::NAN);
    }
}
