//! Multi-curve environments: `n` curves sampled on a uniform grid over a
//! closed interval, interpolated linearly between nodes.
//!
//! Curves and levels are 1-based throughout the public API, matching the
//! usual indexing `i ∈ ⟦1,n⟧` for semi-discrete polymers.
//!
//! Geometric-RSK outputs are singular at the left edge of the domain: curve
//! `i` behaves like `αᵢ·log t + rᵢ(t)` with `rᵢ` continuous at `0`. Such a
//! curve stores `αᵢ` in `log_slope` and keeps the *regular part* `rᵢ(0)` in
//! the node-0 slot, so every stored sample stays finite.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::rng::ReplicaRng;

/// Seed-free closed-form curve families used by tests and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFamily {
    /// All curves identically zero.
    Zero,
    /// A fixed mix of a sine wave, a quadratic and a linear drift per curve;
    /// coefficients depend only on the curve index, so re-evaluation is
    /// byte-identical across runs.
    SinPoly,
}

impl TestFamily {
    pub fn eval(self, curve: usize, t: f64) -> f64 {
        match self {
            TestFamily::Zero => 0.0,
            TestFamily::SinPoly => {
                let i = curve as f64;
                0.5 * ((1.0 + 0.35 * i) * t + 0.8 * i).sin() + (0.25 - 0.04 * i) * t * t
                    + 0.1 * i * t
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestFamily::Zero => "zero",
            TestFamily::SinPoly => "sin-poly",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "zero" => Some(TestFamily::Zero),
            "sin-poly" => Some(TestFamily::SinPoly),
            _ => None,
        }
    }
}

/// Where curve samples come from in [`Environment::build`].
pub enum CurveSource<'a> {
    /// Explicit per-curve sample rows, each of length `cells + 1`.
    Samples(&'a [Vec<f64>]),
    /// A callable family: `(curve index 1-based, t) -> value`.
    Callable(&'a dyn Fn(usize, f64) -> f64),
    /// A named deterministic family.
    Family(TestFamily),
}

/// `n` curves on `[a,b]`, sampled every `h`, linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    a: f64,
    b: f64,
    h: f64,
    n: usize,
    nodes: usize,
    /// Row-major `n × nodes` sample matrix.
    values: Vec<f64>,
    /// Coefficient of `log t` at the left edge, per curve (0 for plain data).
    log_slope: Vec<f64>,
}

impl Environment {
    /// Builds an environment from a source, optionally shifting every curve
    /// so its value at the left endpoint is exactly zero.
    pub fn build(
        n: usize,
        domain: (f64, f64),
        h: f64,
        source: CurveSource<'_>,
        normalize: bool,
    ) -> Result<Self> {
        let (a, b) = domain;
        let cells = Self::check_grid(a, b, h)?;
        if n == 0 {
            return Err(Error::Config(String::from("curve count must be >= 1")));
        }
        let nodes = cells + 1;
        let mut values = Vec::with_capacity(n * nodes);
        match source {
            CurveSource::Samples(rows) => {
                if rows.len() != n {
                    return Err(Error::Config(format!(
                        "expected {n} sample rows, got {}",
                        rows.len()
                    )));
                }
                for row in rows {
                    if row.len() != nodes {
                        return Err(Error::Config(format!(
                            "expected {nodes} samples per curve, got {}",
                            row.len()
                        )));
                    }
                    values.extend_from_slice(row);
                }
            }
            CurveSource::Callable(f) => {
                for i in 1..=n {
                    for j in 0..nodes {
                        values.push(f(i, a + j as f64 * h));
                    }
                }
            }
            CurveSource::Family(fam) => {
                for i in 1..=n {
                    for j in 0..nodes {
                        values.push(fam.eval(i, a + j as f64 * h));
                    }
                }
            }
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite sample at curve {}, node {}",
                bad / nodes + 1,
                bad % nodes
            )));
        }
        let mut env = Environment {
            a,
            b,
            h,
            n,
            nodes,
            values,
            log_slope: vec![0.0; n],
        };
        if normalize {
            env = env.normalized();
        }
        Ok(env)
    }

    /// Random smooth curves (a few harmonics plus drift), deterministic in
    /// `seed`. Used as the randomized smooth test family.
    pub fn random_smooth(n: usize, domain: (f64, f64), h: f64, seed: u64) -> Result<Self> {
        let mut rng = ReplicaRng::new(seed, 0);
        let mut coeffs = Vec::new();
        for _ in 0..n {
            let mut c = [0.0; 7];
            for slot in c.iter_mut() {
                *slot = rng.uniform();
            }
            coeffs.push(c);
        }
        let (a, _) = domain;
        let f = |i: usize, t: f64| {
            let c = &coeffs[i - 1];
            let u = t - a;
            (0.9 * c[0] - 0.45) * ((0.5 + 3.5 * c[1]) * u + 6.28 * c[2]).sin()
                + (0.9 * c[3] - 0.45) * ((0.5 + 3.5 * c[4]) * u + 6.28 * c[5]).sin()
                + (0.8 * c[6] - 0.4) * u
        };
        Self::build(n, domain, h, CurveSource::Callable(&f), true)
    }

    fn check_grid(a: f64, b: f64, h: f64) -> Result<usize> {
        if !(h > 0.0) || !a.is_finite() || !b.is_finite() || b <= a {
            return Err(Error::Config(format!("invalid domain [{a}, {b}] / step {h}")));
        }
        let ratio = (b - a) / h;
        let cells = ratio.round();
        if (ratio - cells).abs() > 1e-9 * ratio.max(1.0) || cells < 1.0 {
            return Err(Error::Config(format!(
                "step {h} does not divide the domain length {}",
                b - a
            )));
        }
        Ok(cells as usize)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn left(&self) -> f64 {
        self.a
    }

    pub fn right(&self) -> f64 {
        self.b
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// Number of grid nodes (`cells + 1`).
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Position of node `j`.
    pub fn pos(&self, j: usize) -> f64 {
        self.a + j as f64 * self.h
    }

    /// Nearest grid node to `t`; errors when `t` falls outside the domain by
    /// more than half a cell.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let r = (t - self.a) / self.h;
        let j = r.round();
        if j < 0.0 || j > (self.nodes - 1) as f64 {
            return Err(Error::Range(format!(
                "position {t} outside domain [{}, {}]",
                self.a, self.b
            )));
        }
        Ok(j as usize)
    }

    /// Sample of curve `i` (1-based) at node `j`. For a singular curve
    /// (`log_slope != 0`) node 0 holds the regular part.
    #[inline]
    pub fn node(&self, i: usize, j: usize) -> f64 {
        self.values[(i - 1) * self.nodes + j]
    }

    /// Full sample row of curve `i` (1-based).
    #[inline]
    pub fn curve(&self, i: usize) -> &[f64] {
        &self.values[(i - 1) * self.nodes..i * self.nodes]
    }

    pub fn log_slope(&self, i: usize) -> f64 {
        self.log_slope[i - 1]
    }

    pub fn is_singular(&self) -> bool {
        self.log_slope.iter().any(|&s| s != 0.0)
    }

    /// True when every curve value at the left endpoint is exactly zero (and
    /// no curve is singular there).
    pub fn normalized_at_origin(&self) -> bool {
        !self.is_singular() && (1..=self.n).all(|i| self.node(i, 0) == 0.0)
    }

    /// Piecewise-linear evaluation of curve `i` at `t`.
    pub fn value(&self, i: usize, t: f64) -> Result<f64> {
        if i < 1 || i > self.n {
            return Err(Error::Range(format!("curve {i} outside 1..={}", self.n)));
        }
        let r = (t - self.a) / self.h;
        if r < -1e-9 || r > (self.nodes - 1) as f64 + 1e-9 {
            return Err(Error::Range(format!(
                "position {t} outside domain [{}, {}]",
                self.a, self.b
            )));
        }
        let r = r.clamp(0.0, (self.nodes - 1) as f64);
        let j = (r.floor() as usize).min(self.nodes - 2);
        let frac = r - j as f64;
        if self.log_slope[i - 1] != 0.0 && r < 1.0 {
            return Err(Error::Range(format!(
                "curve {i} is singular at the left edge; cannot evaluate at {t}"
            )));
        }
        Ok(self.node(i, j) * (1.0 - frac) + self.node(i, j + 1) * frac)
    }

    /// Shifts every curve so its left-endpoint value is exactly zero.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            let base = out.values[i * self.nodes];
            for j in 0..self.nodes {
                out.values[i * self.nodes + j] -= base;
            }
            // Guard against -0.0 at the origin so the flag test stays exact.
            out.values[i * self.nodes] = 0.0;
        }
        out
    }

    /// The reversal `(R_z f)_i(t) = -f_{n+1-i}(z - t)` on `[0, z]`.
    ///
    /// `z` snaps to the nearest grid node; the snapped value is returned
    /// alongside the reversed environment. Applying the map twice returns the
    /// restriction of the input to `[0, z]` exactly.
    pub fn reverse(&self, z: f64) -> Result<(Self, f64)> {
        if self.a != 0.0 {
            return Err(Error::Range(String::from(
                "reversal is defined for environments on [0, T')",
            )));
        }
        if self.is_singular() {
            return Err(Error::Range(String::from(
                "cannot reverse an environment singular at the origin",
            )));
        }
        if !(z > 0.0 && z <= self.b) {
            return Err(Error::Range(format!(
                "reversal point {z} outside (0, {}]",
                self.b
            )));
        }
        let jz = self.index_of(z)?;
        if jz == 0 {
            return Err(Error::Range(format!("reversal point {z} snaps to 0")));
        }
        let z_snapped = self.pos(jz);
        let nodes = jz + 1;
        let mut values = Vec::with_capacity(self.n * nodes);
        for i in 1..=self.n {
            let src = self.curve(self.n + 1 - i);
            for j in 0..nodes {
                values.push(-src[jz - j]);
            }
        }
        Ok((
            Environment {
                a: 0.0,
                b: z_snapped,
                h: self.h,
                n: self.n,
                nodes,
                values,
                log_slope: vec![0.0; self.n],
            },
            z_snapped,
        ))
    }

    /// The change of variables `gᵢ(x) = a1·fᵢ(a2·x + a3) + a4·x + a5ᵢ`.
    ///
    /// The output grid is the exact preimage of the input grid (`step h/a2`),
    /// so no interpolation is involved.
    pub fn affine(&self, a1: f64, a2: f64, a3: f64, a4: f64, a5: &[f64]) -> Result<Self> {
        if !(a1 > 0.0) || !(a2 > 0.0) {
            return Err(Error::Config(format!("a1 = {a1}, a2 = {a2} must be > 0")));
        }
        if a5.len() != self.n {
            return Err(Error::Config(format!(
                "expected {} per-curve offsets, got {}",
                self.n,
                a5.len()
            )));
        }
        if self.is_singular() {
            return Err(Error::Config(String::from(
                "affine map of a singular environment is not supported",
            )));
        }
        let c = (self.a - a3) / a2;
        let hg = self.h / a2;
        if !c.is_finite() || !hg.is_finite() || hg <= 0.0 {
            return Err(Error::Config(String::from("transformed domain is empty")));
        }
        let mut values = Vec::with_capacity(self.n * self.nodes);
        for i in 1..=self.n {
            let src = self.curve(i);
            for (j, &v) in src.iter().enumerate() {
                values.push(a1 * v + a4 * (c + j as f64 * hg) + a5[i - 1]);
            }
        }
        Ok(Environment {
            a: c,
            b: c + (self.nodes - 1) as f64 * hg,
            h: hg,
            n: self.n,
            nodes: self.nodes,
            values,
            log_slope: vec![0.0; self.n],
        })
    }

    /// Pointwise sum of all curves at node `j` (regular parts at node 0).
    pub fn curve_sum(&self, j: usize) -> f64 {
        (1..=self.n).map(|i| self.node(i, j)).sum()
    }

    pub(crate) fn log_slope_mut(&mut self) -> &mut [f64] {
        &mut self.log_slope
    }

    /// Mutable access to curves `i` and `i+1` (1-based) at once.
    pub(crate) fn rows_pair_mut(&mut self, i: usize) -> (&mut [f64], &mut [f64]) {
        let nodes = self.nodes;
        let (lo, hi) = self.values.split_at_mut(i * nodes);
        (&mut lo[(i - 1) * nodes..], &mut hi[..nodes])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn zero_env(n: usize) -> Environment {
        Environment::build(n, (0.0, 1.0), 0.5, CurveSource::Family(TestFamily::Zero), false)
            .unwrap()
    }

    #[test]
    fn zero_curve_samples() {
        let env = zero_env(1);
        assert_eq!(env.nodes(), 3);
        assert_eq!(env.curve(1), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_shifts_left_endpoint() {
        // f = (t, 1 + t) normalizes to (t, t).
        let f = |i: usize, t: f64| if i == 1 { t } else { 1.0 + t };
        let env =
            Environment::build(2, (0.0, 1.0), 0.25, CurveSource::Callable(&f), true).unwrap();
        assert!(env.normalized_at_origin());
        for j in 0..env.nodes() {
            assert_relative_eq!(env.node(1, j), env.node(2, j));
        }
    }

    #[test]
    fn sin_poly_is_reproducible() {
        let e1 = Environment::build(
            3,
            (0.0, 1.0),
            1.0 / 64.0,
            CurveSource::Family(TestFamily::SinPoly),
            true,
        )
        .unwrap();
        let e2 = Environment::build(
            3,
            (0.0, 1.0),
            1.0 / 64.0,
            CurveSource::Family(TestFamily::SinPoly),
            true,
        )
        .unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn non_divisible_step_is_a_config_error() {
        let r = Environment::build(1, (0.0, 1.0), 0.3, CurveSource::Family(TestFamily::Zero), false);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn non_finite_sample_is_a_data_error() {
        let f = |_: usize, t: f64| if t > 0.5 { f64::NAN } else { 0.0 };
        let r = Environment::build(1, (0.0, 1.0), 0.25, CurveSource::Callable(&f), false);
        assert!(matches!(r, Err(Error::Data(_))));
    }

    #[test]
    fn reverse_linear_curve() {
        // n=1, f(t) = t, z = 1: (R₁f)(t) = -f(1-t) = t - 1.
        let f = |_: usize, t: f64| t;
        let env =
            Environment::build(1, (0.0, 2.0), 0.125, CurveSource::Callable(&f), false).unwrap();
        let (rev, z) = env.reverse(1.0).unwrap();
        assert_eq!(z, 1.0);
        for j in 0..rev.nodes() {
            assert_relative_eq!(rev.node(1, j), rev.pos(j) - 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reverse_is_an_involution() {
        let env = Environment::random_smooth(3, (0.0, 2.0), 0.0625, 11).unwrap();
        let (rev, z) = env.reverse(1.5).unwrap();
        let (back, _) = rev.reverse(z).unwrap();
        for i in 1..=3 {
            for j in 0..back.nodes() {
                assert_relative_eq!(back.node(i, j), env.node(i, j), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn reverse_snaps_and_reports() {
        let env = zero_env(1);
        let (_, z) = env.reverse(0.6).unwrap();
        assert_eq!(z, 0.5);
    }

    #[test]
    fn affine_identity_and_shift() {
        let env = Environment::random_smooth(2, (0.0, 1.0), 0.25, 3).unwrap();
        let same = env.affine(1.0, 1.0, 0.0, 0.0, &[0.0, 0.0]).unwrap();
        assert_eq!(env, same);

        // a1 = 2 on f ≡ 0 with offsets gives the constant offsets.
        let zero = zero_env(2);
        let shifted = zero.affine(2.0, 1.0, 0.0, 0.0, &[1.0, -2.0]).unwrap();
        assert!(shifted.curve(1).iter().all(|&v| v == 1.0));
        assert!(shifted.curve(2).iter().all(|&v| v == -2.0));
    }

    #[test]
    fn affine_a2_halves_the_domain() {
        let env = zero_env(1);
        let g = env.affine(1.0, 2.0, 0.0, 0.0, &[0.0]).unwrap();
        assert_relative_eq!(g.right() - g.left(), 0.5);
        assert_eq!(g.nodes(), env.nodes());
    }

    #[test]
    fn interpolation_between_nodes() {
        let f = |_: usize, t: f64| 2.0 * t;
        let env =
            Environment::build(1, (0.0, 1.0), 0.5, CurveSource::Callable(&f), false).unwrap();
        assert_relative_eq!(env.value(1, 0.25).unwrap(), 0.5);
        assert!(env.value(1, 1.5).is_err());
    }
}
