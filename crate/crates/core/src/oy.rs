//! The O'Connell-Yor semi-discrete polymer: Brownian environments, the
//! diffusion `Yⁿ = 𝒲Bⁿ`, the KPZ line/sheet prelimit fields, the midpoint
//! decomposition `F`/`G`, polymer marginals and the Busemann/quantile
//! inequality suite.
//!
//! Coordinate conventions follow the field definitions: the sheet argument
//! `x` is an absolute position on the sampled grid `[0, L]`, while line and
//! crossing arguments (`y`, `z`) are measured relative to the reference
//! position `s = n^{1/2}T^{1/2}` (snapped once per sample to the grid).
//! Every query snaps to the grid and the snapped value feeds the affine
//! terms, so recomputing any derived field from the sample is exact.
//!
//! The quantile machinery evaluates the sheet through the polymer free
//! energy on `Y` (the `x > 0` representation). This keeps the entire
//! inequality suite a theorem of the discretization itself: all sides are
//! assembled from the same sweeps, so slacks are non-negative up to
//! floating-point roundoff rather than up to quadrature error.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::env::{CurveSource, Environment};
use crate::error::{Error, Result};
use crate::free_energy::{
    back_sweep, down_right_free_energy, single_free_energy, up_sweep, BackSweep, Beta, UpSweep,
};
use crate::grsk::w_transform;
use crate::logdomain::{log_trapezoid, log_trapezoid_running};
use crate::rng::ReplicaRng;

/// Geometry and seeding of one O'Connell-Yor sampling run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OyParams {
    pub n: usize,
    /// The polymer time parameter `T`.
    pub t: f64,
    /// Grid step.
    pub h: f64,
    /// Right cutoff of the sampled interval `[0, L_max]`.
    pub l_max: f64,
    /// Master seed; replica `r` derives its stream from `(seed, r)`.
    pub seed: u64,
}

impl OyParams {
    /// Default cutoff `n^{1/2}T^{1/2} + |y|_max + 4`, so the support of every
    /// crossing integral fits on the grid.
    pub fn new(n: usize, t: f64, h: f64, y_abs_max: f64, seed: u64) -> Self {
        let s = (n as f64 * t).sqrt();
        OyParams { n, t, h, l_max: s + y_abs_max + 4.0, seed }
    }

    pub fn reference_position(&self) -> f64 {
        (self.n as f64 * self.t).sqrt()
    }
}

/// The constants `C₁(T,n)`, `C₂(T,n)`, `C₃ᵢ(T)` of the prelimit fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingConstants {
    pub c1: f64,
    pub c2: f64,
    c3: Vec<f64>,
}

impl ScalingConstants {
    pub fn new(n: usize, t: f64) -> Self {
        let nf = n as f64;
        let root = (nf / t).sqrt(); // n^{1/2} T^{-1/2}
        let c1 = root + 0.5;
        let c2 = nf + 0.5 * (nf * t).sqrt() - 0.5 * (nf - 1.0) * root.ln();
        let c3 = (1..=n)
            .map(|i| -((i - 1) as f64) * t.ln() + ln_factorial(i - 1))
            .collect();
        ScalingConstants { c1, c2, c3 }
    }

    /// `C₃ᵢ = -(i-1)·log T + log (i-1)!` (1-based).
    pub fn c3(&self, i: usize) -> f64 {
        self.c3[i - 1]
    }
}

/// `log k!` via the log-gamma function.
pub fn ln_factorial(k: usize) -> f64 {
    libm::lgamma(k as f64 + 1.0)
}

/// One realization of `(Bⁿ, Yⁿ)` with its derived fields.
#[derive(Debug, Clone)]
pub struct OYSample {
    pub params: OyParams,
    pub replica: u64,
    s_index: usize,
    constants: ScalingConstants,
    b: Environment,
    y: Option<Environment>,
}

/// Draws `Bⁿ` on the grid: independent curves with exact `N(0, h)` increments,
/// `Bᵢ(0) = 0`. `Y` is computed lazily ([`OYSample::ensure_y`]).
pub fn sample_brownian_field(params: &OyParams, replica: u64) -> Result<OYSample> {
    let s = params.reference_position();
    if !(params.l_max > s) {
        return Err(Error::Range(format!(
            "cutoff {} must exceed the reference position {s}",
            params.l_max
        )));
    }
    let cells = (params.l_max / params.h).round() as usize;
    let nodes = cells + 1;
    let mut rng = ReplicaRng::new(params.seed, replica);
    let sd = params.h.sqrt();
    let mut rows = Vec::with_capacity(params.n);
    for _ in 0..params.n {
        let mut row = Vec::with_capacity(nodes);
        let mut acc = 0.0;
        row.push(acc);
        for _ in 1..nodes {
            acc += sd * rng.standard_normal();
            row.push(acc);
        }
        rows.push(row);
    }
    let b = Environment::build(
        params.n,
        (0.0, cells as f64 * params.h),
        params.h,
        CurveSource::Samples(&rows),
        false,
    )?;
    let s_index = b.index_of(s)?;
    if s_index == 0 {
        return Err(Error::Range(String::from("reference position snaps to 0")));
    }
    Ok(OYSample {
        params: *params,
        replica,
        s_index,
        constants: ScalingConstants::new(params.n, params.t),
        b,
        y: None,
    })
}

impl OYSample {
    pub fn b(&self) -> &Environment {
        &self.b
    }

    /// `Yⁿ = 𝒲 Bⁿ`; call [`OYSample::ensure_y`] first.
    pub fn y(&self) -> Result<&Environment> {
        self.y
            .as_ref()
            .ok_or_else(|| Error::Usage(String::from("Y not computed; call ensure_y() first")))
    }

    pub fn ensure_y(&mut self) -> Result<()> {
        if self.y.is_none() {
            self.y = Some(w_transform(&self.b)?);
        }
        Ok(())
    }

    pub fn with_y(mut self) -> Result<Self> {
        self.ensure_y()?;
        Ok(self)
    }

    pub fn constants(&self) -> &ScalingConstants {
        &self.constants
    }

    /// The snapped reference position `s ≈ n^{1/2}T^{1/2}`.
    pub fn s(&self) -> f64 {
        self.b.pos(self.s_index)
    }

    pub fn s_index(&self) -> usize {
        self.s_index
    }

    /// Grid index of the absolute position `s + rel`.
    pub fn abs_index(&self, rel: f64) -> Result<usize> {
        self.b.index_of(self.s() + rel)
    }

    /// Relative coordinate of node `j`.
    pub fn rel_pos(&self, j: usize) -> f64 {
        self.b.pos(j) - self.s()
    }
}

/// `𝒳ᵢ^{T,n}(x) = Yᵢⁿ(s+x) − C₁x − C₂ − C₃ᵢ` (`x` relative).
pub fn kpz_line_prelimit(sample: &OYSample, i: usize, x: f64) -> Result<f64> {
    let n = sample.params.n;
    if i < 1 || i > n {
        return Err(Error::Range(format!("line index {i} outside 1..={n}")));
    }
    let y = sample.y()?;
    let j = sample.abs_index(x)?;
    if j == 0 {
        return Err(Error::Range(format!("line readout at x={x} hits the origin")));
    }
    let xe = sample.rel_pos(j);
    let c = sample.constants();
    Ok(y.node(i, j) - c.c1 * xe - c.c2 - c.c3(i))
}

/// The KPZ sheet prelimit `H^{T,n}(x,y) = Bⁿ[(x,n)→(s+y,1)] − C₁(y−x) − C₂`
/// (`x` absolute, `y` relative).
pub fn kpz_sheet_prelimit(sample: &OYSample, x: f64, y: f64) -> Result<f64> {
    let jx = sample.b.index_of(x)?;
    let jy = sample.abs_index(y)?;
    let (xe, ye) = (sample.b.pos(jx), sample.rel_pos(jy));
    let c = sample.constants();
    let v = single_free_energy(&sample.b, xe, sample.params.n, sample.b.pos(jy), 1, Beta::one())?;
    Ok(v.value() - c.c1 * (ye - xe) - c.c2)
}

/// The sheet through the polymer free energy on `Y` (needs `x > 0`).
pub fn kpz_sheet_prelimit_y(sample: &OYSample, x: f64, y: f64) -> Result<f64> {
    let fwd = ForwardField::new(sample, x)?;
    fwd.sheet(sample, y)
}

/// Cached forward sweep on `Y` from `(x, n)`: yields `F_k(x, ·)` for every
/// `k` and the sheet `H(x, ·)`.
pub struct ForwardField {
    pub jx: usize,
    sweep: UpSweep,
}

impl ForwardField {
    pub fn new(sample: &OYSample, x: f64) -> Result<Self> {
        let y_env = sample.y()?;
        let jx = y_env.index_of(x)?;
        if jx == 0 {
            return Err(Error::Range(String::from("forward field needs x > 0")));
        }
        Ok(ForwardField { jx, sweep: up_sweep(y_env, jx, sample.params.n, 1, 1.0) })
    }

    /// `F^{T,n}_k(x,z) = Yⁿ[(x,n)→(s+z,k+1)] − Yⁿ_{k+1}(s+z) + C₁x`.
    ///
    /// `-∞` at and left of the start, where no path exists.
    pub fn f_at(&self, sample: &OYSample, k: usize, z: f64) -> Result<f64> {
        let n = sample.params.n;
        if k < 1 || k >= n {
            return Err(Error::Range(format!("field level {k} outside 1..={}", n - 1)));
        }
        let j = sample.abs_index(z)?;
        let y_env = sample.y()?;
        let xe = y_env.pos(self.jx);
        Ok(self.sweep.row(k + 1)[j] - y_env.node(k + 1, j) + sample.constants().c1 * xe)
    }

    /// `H^{T,n}(x,y)` in the `Y`-form (eq. of the `x > 0` representation).
    pub fn sheet(&self, sample: &OYSample, y: f64) -> Result<f64> {
        let j = sample.abs_index(y)?;
        if j <= self.jx {
            return Err(Error::Range(format!("sheet endpoint y={y} left of the start")));
        }
        let y_env = sample.y()?;
        let xe = y_env.pos(self.jx);
        let ye = sample.rel_pos(j);
        let c = sample.constants();
        Ok(self.sweep.row(1)[j] - c.c1 * (ye - xe) - c.c2)
    }
}

/// Cached backward sweep on `Y` into `(s+y, 1)`: yields `G_k(·, y)` and the
/// line free energies `𝒳[(z,k)→(y,1)]`.
pub struct BackwardField {
    pub jy: usize,
    sweep: BackSweep,
}

impl BackwardField {
    pub fn new(sample: &OYSample, y: f64) -> Result<Self> {
        let y_env = sample.y()?;
        let jy = sample.abs_index(y)?;
        let top = (sample.params.n - 1).max(1);
        Ok(BackwardField { jy, sweep: back_sweep(y_env, jy, top) })
    }

    /// `G^{T,n}_k(z,y) = Yⁿ[(s+z,k)→(s+y,1)] + Yⁿ_{k+1}(s+z) − C₁y − C₂`.
    pub fn g_at(&self, sample: &OYSample, k: usize, z: f64) -> Result<f64> {
        let n = sample.params.n;
        if k < 1 || k >= n {
            return Err(Error::Range(format!("field level {k} outside 1..={}", n - 1)));
        }
        let j = sample.abs_index(z)?;
        if j > self.jy {
            return Err(Error::Range(format!("crossing z={z} right of the endpoint")));
        }
        let y_env = sample.y()?;
        let ye = sample.rel_pos(self.jy);
        let c = sample.constants();
        Ok(self.sweep.row(k)[j] + y_env.node(k + 1, j) - c.c1 * ye - c.c2)
    }

    /// `𝒳^{T,n}[(z,k)→(y,1)] = Yⁿ[(s+z,k)→(s+y,1)] − C₁(y−z)`.
    pub fn line_free_energy(&self, sample: &OYSample, k: usize, z: f64) -> Result<f64> {
        let j = sample.abs_index(z)?;
        if j > self.jy {
            return Err(Error::Range(format!("start z={z} right of the endpoint")));
        }
        let ye = sample.rel_pos(self.jy);
        let ze = sample.rel_pos(j);
        Ok(self.sweep.row(k)[j] - sample.constants().c1 * (ye - ze))
    }
}

/// `F^{T,n}_k(x,z)` (one-shot; use [`ForwardField`] for sweeps over `z`).
pub fn f_field(sample: &OYSample, k: usize, x: f64, z: f64) -> Result<f64> {
    ForwardField::new(sample, x)?.f_at(sample, k, z)
}

/// `G^{T,n}_k(z,y)` (one-shot; use [`BackwardField`] for sweeps over `z`).
pub fn g_field(sample: &OYSample, k: usize, z: f64, y: f64) -> Result<f64> {
    BackwardField::new(sample, y)?.g_at(sample, k, z)
}

/// The polymer marginal `μ^{T,n}_{k,x,y}`: density, cumulative tables and
/// the tails `A(z) = μ[z,∞)`, `B(z) = μ(-∞,z]`.
pub struct PolymerMarginal {
    pub k: usize,
    /// Snapped absolute start.
    pub x: f64,
    /// Snapped relative endpoint.
    pub y: f64,
    /// Absolute node range of the support `z' = s + z ∈ (x, s+y)`.
    pub j_lo: usize,
    pub j_hi: usize,
    /// `log dμ/dz` per node of the support.
    pub log_density: Vec<f64>,
    /// Running `log ∫_{lo}^{z}` and `log ∫_{z}^{hi}` of the unnormalized density.
    fwd_cum: Vec<f64>,
    back_cum: Vec<f64>,
    log_total: f64,
    /// The sweep-computed sheet value used in the density.
    log_h_sweep: f64,
}

impl PolymerMarginal {
    /// `|∫ dμ − 1|`.
    pub fn normalization_gap(&self) -> f64 {
        (self.log_total.exp() - 1.0).abs()
    }

    /// The sheet value in its reassembled form `log ∫ exp(F+G) dz`.
    ///
    /// Differs from the sweep value only by the trapezoid corner cells of
    /// the support, an `O(h²)` effect. The inequality evaluators use this
    /// form so every slack is an exact inequality of the tabulated measure.
    pub fn log_sheet_reassembled(&self) -> f64 {
        self.log_h_sweep + self.log_total
    }

    fn offset_of(&self, sample: &OYSample, z: f64) -> Result<usize> {
        let j = sample.abs_index(z)?;
        if j < self.j_lo || j > self.j_hi {
            return Err(Error::Range(format!(
                "z={z} outside the marginal support",
            )));
        }
        Ok(j - self.j_lo)
    }

    /// Upper tail `A(z) = μ[z, ∞)`.
    pub fn a(&self, sample: &OYSample, z: f64) -> Result<f64> {
        Ok(self.log_a(sample, z)?.exp())
    }

    /// Lower tail `B(z) = μ(-∞, z]`.
    pub fn b(&self, sample: &OYSample, z: f64) -> Result<f64> {
        Ok(self.log_b(sample, z)?.exp())
    }

    pub fn log_a(&self, sample: &OYSample, z: f64) -> Result<f64> {
        let o = self.offset_of(sample, z)?;
        Ok(self.back_cum[o] - self.log_total)
    }

    pub fn log_b(&self, sample: &OYSample, z: f64) -> Result<f64> {
        let o = self.offset_of(sample, z)?;
        Ok(self.fwd_cum[o] - self.log_total)
    }

    /// `log(1 − B(z))`, computed as the complementary tail so the identity
    /// `A + B = 1` is used exactly.
    pub fn log_one_minus_b(&self, sample: &OYSample, z: f64) -> Result<f64> {
        self.log_a(sample, z)
    }

    pub fn log_one_minus_a(&self, sample: &OYSample, z: f64) -> Result<f64> {
        self.log_b(sample, z)
    }
}

/// Builds the polymer marginal from one forward and one backward sweep.
pub fn polymer_marginal(sample: &OYSample, k: usize, x: f64, y: f64) -> Result<PolymerMarginal> {
    let fwd = ForwardField::new(sample, x)?;
    let back = BackwardField::new(sample, y)?;
    polymer_marginal_from(sample, k, &fwd, &back)
}

/// Marginal from cached sweeps; `fwd` and `back` fix `x` and `y`.
pub fn polymer_marginal_from(
    sample: &OYSample,
    k: usize,
    fwd: &ForwardField,
    back: &BackwardField,
) -> Result<PolymerMarginal> {
    let n = sample.params.n;
    if k < 1 || k >= n {
        return Err(Error::Range(format!("marginal level {k} outside 1..={}", n - 1)));
    }
    let j_lo = fwd.jx;
    let j_hi = back.jy;
    if j_lo >= j_hi {
        return Err(Error::Range(String::from("empty marginal support")));
    }
    let h_val = fwd.sheet(sample, sample.rel_pos(j_hi))?;
    let c = sample.constants();
    let y_env = sample.y()?;
    let xe = y_env.pos(j_lo);
    let ye = sample.rel_pos(j_hi);
    let mut log_density = Vec::with_capacity(j_hi - j_lo + 1);
    for j in j_lo..=j_hi {
        // -H + F_k(x,z) + G_k(z,y); the Y_{k+1} readouts cancel here.
        let f = fwd.sweep.row(k + 1)[j] - y_env.node(k + 1, j) + c.c1 * xe;
        let g = back.sweep.row(k)[j] + y_env.node(k + 1, j) - c.c1 * ye - c.c2;
        log_density.push(-h_val + f + g);
    }
    let h = sample.params.h;
    let fwd_cum = log_trapezoid_running(&log_density, h);
    let rev: Vec<f64> = log_density.iter().rev().copied().collect();
    let mut back_cum = log_trapezoid_running(&rev, h);
    back_cum.reverse();
    let log_total = log_trapezoid(&log_density, h);
    let marginal = PolymerMarginal {
        k,
        x: xe,
        y: ye,
        j_lo,
        j_hi,
        log_density,
        fwd_cum,
        back_cum,
        log_total,
        log_h_sweep: h_val,
    };
    if marginal.normalization_gap() > 1e-2 {
        return Err(Error::Numerical(format!(
            "marginal does not normalize: ∫dμ = {}, H = {h_val}, k = {k}, x = {xe}, y = {ye}",
            marginal.log_total.exp()
        )));
    }
    Ok(marginal)
}

/// Signed slacks (`RHS − LHS ≥ 0` when the inequality holds) of the quantile
/// inequality suite at one design point.
#[derive(Debug, Clone, Copy)]
pub struct QuantileSlacks {
    /// `F`-difference vs upper tail at `(x₁, x₂, y₂)`.
    pub ff_a: f64,
    /// `F`-difference vs lower tail at `(x₁, x₂, y₂)`.
    pub ff_b: f64,
    /// `G`-difference vs upper tail at `(x₁, y₁, y₂)`.
    pub gg_a: f64,
    /// `G`-difference vs lower tail at `(x₁, y₁, y₂)`.
    pub gg_b: f64,
    /// Line-ensemble sandwich, lower-tail side, at `(x₁, y₁, y₂)`.
    pub hh_b0: f64,
    /// Line-ensemble sandwich, upper-tail side, at `(x₁, y₁, y₂)`.
    pub hh_a0: f64,
}

impl QuantileSlacks {
    pub fn min(&self) -> f64 {
        self.ff_a
            .min(self.ff_b)
            .min(self.gg_a)
            .min(self.gg_b)
            .min(self.hh_b0)
            .min(self.hh_a0)
    }
}

/// Per-sample cache of forward/backward sweeps keyed by snapped node, plus
/// the slack evaluators built on top of them.
pub struct InequalityLab<'a> {
    pub sample: &'a OYSample,
    fwd: Vec<(usize, ForwardField)>,
    back: Vec<(usize, BackwardField)>,
}

impl<'a> InequalityLab<'a> {
    pub fn new(sample: &'a OYSample) -> Result<Self> {
        sample.y()?;
        Ok(InequalityLab { sample, fwd: Vec::new(), back: Vec::new() })
    }

    pub fn forward(&mut self, x: f64) -> Result<&ForwardField> {
        let j = self.sample.y()?.index_of(x)?;
        if let Some(pos) = self.fwd.iter().position(|(jx, _)| *jx == j) {
            return Ok(&self.fwd[pos].1);
        }
        let field = ForwardField::new(self.sample, x)?;
        self.fwd.push((j, field));
        Ok(&self.fwd.last().unwrap().1)
    }

    pub fn backward(&mut self, y: f64) -> Result<&BackwardField> {
        let j = self.sample.abs_index(y)?;
        if let Some(pos) = self.back.iter().position(|(jy, _)| *jy == j) {
            return Ok(&self.back[pos].1);
        }
        let field = BackwardField::new(self.sample, y)?;
        self.back.push((j, field));
        Ok(&self.back.last().unwrap().1)
    }

    pub fn marginal(&mut self, k: usize, x: f64, y: f64) -> Result<PolymerMarginal> {
        self.forward(x)?;
        self.backward(y)?;
        let jx = self.sample.y()?.index_of(x)?;
        let jy = self.sample.abs_index(y)?;
        let fwd = &self.fwd.iter().find(|(j, _)| *j == jx).unwrap().1;
        let back = &self.back.iter().find(|(j, _)| *j == jy).unwrap().1;
        polymer_marginal_from(self.sample, k, fwd, back)
    }

    /// `H(x, y)` in the `Y`-form, through the sweep cache.
    pub fn sheet(&mut self, x: f64, y: f64) -> Result<f64> {
        let sample = self.sample;
        self.forward(x)?.sheet(sample, y)
    }

    /// `F_k(x, z)` through the sweep cache.
    pub fn f_at(&mut self, k: usize, x: f64, z: f64) -> Result<f64> {
        let sample = self.sample;
        self.forward(x)?.f_at(sample, k, z)
    }

    /// `𝒳[(z,k)→(y,1)]` through the sweep cache.
    pub fn line_free_energy(&mut self, k: usize, z: f64, y: f64) -> Result<f64> {
        let sample = self.sample;
        self.backward(y)?.line_free_energy(sample, k, z)
    }

    /// The six quantile inequalities at `(k, x₁ ≤ x₂, y₁ ≤ y₂, z)`.
    ///
    /// The `F`-pair inequalities read the sheet at `y₂`; the `G`-pair and
    /// sandwich inequalities use the ray start `x₁` with the endpoint pair
    /// `(y₁, y₂)`.
    pub fn quantile_slacks(
        &mut self,
        k: usize,
        x1: f64,
        x2: f64,
        y1: f64,
        y2: f64,
        z: f64,
    ) -> Result<QuantileSlacks> {
        if !(0.0 < x1 && x1 <= x2) || !(y1 <= y2) {
            return Err(Error::Range(String::from(
                "need 0 < x1 <= x2 and y1 <= y2",
            )));
        }
        let sample = self.sample;
        // F-pair at y2; the sheet differences come from the marginal totals
        // (the reassembled form), so each slack is an exact inequality of
        // the tabulated measure.
        let (f1, f2) = {
            let fwd1 = self.forward(x1)?;
            let f1 = fwd1.f_at(sample, k, z)?;
            let fwd2 = self.forward(x2)?;
            let f2 = fwd2.f_at(sample, k, z)?;
            (f1, f2)
        };
        let m_x1_y2 = self.marginal(k, x1, y2)?;
        let m_x2_y2 = self.marginal(k, x2, y2)?;
        let h1 = m_x1_y2.log_sheet_reassembled();
        let h2 = m_x2_y2.log_sheet_reassembled();
        let ff_a = (h2 - h1 - m_x1_y2.log_a(sample, z)?) - (f2 - f1);
        let ff_b = (f2 - f1) - (h2 - h1 + m_x2_y2.log_b(sample, z)?);

        // G-pair and sandwich at (x1, y1, y2).
        let (g1, g2, x_y1, x_y2) = {
            let b1 = self.backward(y1)?;
            let g1 = b1.g_at(sample, k, z)?;
            let x_y1 = b1.line_free_energy(sample, k, z)?;
            let b2 = self.backward(y2)?;
            let g2 = b2.g_at(sample, k, z)?;
            let x_y2 = b2.line_free_energy(sample, k, z)?;
            (g1, g2, x_y1, x_y2)
        };
        let m_x1_y1 = self.marginal(k, x1, y1)?;
        let h_diff = h1 - m_x1_y1.log_sheet_reassembled(); // H(x1,y2) − H(x1,y1)
        let gg_a = (h_diff - m_x1_y1.log_a(sample, z)?) - (g2 - g1);
        let gg_b = (g2 - g1) - (h_diff + m_x1_y2.log_b(sample, z)?);
        let x_diff = x_y2 - x_y1;
        let hh_b0 = -m_x1_y1.log_one_minus_b(sample, z)? - (x_diff - h_diff);
        let hh_a0 = (x_diff - h_diff) - m_x1_y2.log_one_minus_a(sample, z)?;
        Ok(QuantileSlacks { ff_a, ff_b, gg_a, gg_b, hh_b0, hh_a0 })
    }
}

/// Record of the six signed slacks via a fresh lab (one-shot API).
pub fn busemann_quantile_bounds(
    sample: &OYSample,
    k: usize,
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
    z: f64,
) -> Result<QuantileSlacks> {
    InequalityLab::new(sample)?.quantile_slacks(k, x1, x2, y1, y2, z)
}

/// `(H^{B}(x,y), 𝒳₁(y−x))`: equal in law under the shift invariance of the
/// Brownian field.
pub fn sheet_shift_pair(sample: &OYSample, x: f64, y: f64) -> Result<(f64, f64)> {
    let a = kpz_sheet_prelimit(sample, x, y)?;
    let jx = sample.b().index_of(x)?;
    let xe = sample.b().pos(jx);
    let b = kpz_line_prelimit(sample, 1, y - xe)?;
    Ok((a, b))
}

/// `(F_k(x,z), −𝒳[(z−x,1)↘(z,k+1)])`: the two sides of the down/right
/// distributional identity.
pub fn f_downright_pair(sample: &OYSample, k: usize, x: f64, z: f64) -> Result<(f64, f64)> {
    let f = f_field(sample, k, x, z)?;
    let y_env = sample.y()?;
    let jz = sample.abs_index(z)?;
    let jx_rel = y_env.index_of(sample.b().pos(sample.b().index_of(x)?))?;
    let xe = y_env.pos(jx_rel);
    let zp = y_env.pos(jz);
    let down = down_right_free_energy(y_env, zp - xe, 1, zp, k + 1)?;
    // 𝒳[(z−x,1)↘(z,k+1)] = Y[(z'−x,1)↘(z',k+1)] − C₁x.
    let other = -(down.value() - sample.constants().c1 * xe);
    Ok((f, other))
}

/// `((𝒲R_{z'}Bⁿ)₁(t'), Y₁ⁿ(t'))` at the absolute position `t'`; the two
/// coincide in law because the reversed field is again Brownian.
pub fn wrz_pair(sample: &OYSample, z: f64, t_abs: f64) -> Result<(f64, f64)> {
    let zp = sample.s() + z;
    let (rev, _) = sample.b().reverse(zp)?;
    let w = w_transform(&rev.normalized())?;
    let jt = w.index_of(t_abs)?;
    if jt == 0 {
        return Err(Error::Range(String::from("readout hits the origin")));
    }
    let y_env = sample.y()?;
    Ok((w.node(1, jt), y_env.node(1, jt)))
}

/// `log ∫ exp(F_k(x,z) + G_k(z,y)) dz` over the support; equals
/// `H^{T,n}(x,y)` (the midpoint reassembly identity).
pub fn hfg_reassembled(sample: &OYSample, k: usize, x: f64, y: f64) -> Result<f64> {
    let fwd = ForwardField::new(sample, x)?;
    let back = BackwardField::new(sample, y)?;
    let (j_lo, j_hi) = (fwd.jx, back.jy);
    let vals: Vec<f64> = (j_lo..=j_hi)
        .map(|j| {
            let z = sample.rel_pos(j);
            let f = fwd.f_at(sample, k, z).unwrap_or(f64::NEG_INFINITY);
            let g = back.g_at(sample, k, z).unwrap_or(f64::NEG_INFINITY);
            f + g
        })
        .collect();
    Ok(log_trapezoid(&vals, sample.params.h))
}
