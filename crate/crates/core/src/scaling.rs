//! 1:2:3 rescaling of the prelimit fields, the scaled and unscaled remainder
//! fields, the elementary concavity gap, and the finite-k Busemann-ray
//! experiment.
//!
//! Height rescales by `2^{1/3}T^{-1/3}`, space by `2^{1/3}T^{2/3}`, and the
//! parabolic shift is `2^{1/3}T^{2/3}/24`. The scaled inequality suite is
//! assembled from the same `Y`-sweeps as the unscaled one, so its slacks
//! inherit the roundoff-level guarantees.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::oy::{
    f_field, kpz_line_prelimit, kpz_sheet_prelimit, ln_factorial, InequalityLab, OYSample,
};

/// Scale factors attached to one sample's `T`.
pub struct ScaledQuery<'a> {
    pub sample: &'a OYSample,
    /// `2^{1/3} T^{-1/3}`
    pub height: f64,
    /// `2^{1/3} T^{2/3}`
    pub space: f64,
    /// `2^{1/3} T^{2/3} / 24`
    pub shift: f64,
}

impl<'a> ScaledQuery<'a> {
    pub fn new(sample: &'a OYSample) -> Self {
        let t = sample.params.t;
        let cbrt2 = 2.0f64.cbrt();
        let height = cbrt2 / t.cbrt();
        let space = cbrt2 * (t * t).cbrt();
        ScaledQuery { sample, height, space, shift: space / 24.0 }
    }

    /// `𝔥^{T,n}(x,y) = 2^{1/3}T^{-1/3}·H^{T,n}(2^{1/3}T^{2/3}x, 2^{1/3}T^{2/3}y) + 2^{1/3}T^{2/3}/24`.
    pub fn rescale_sheet(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.height * kpz_sheet_prelimit(self.sample, self.space * x, self.space * y)?
            + self.shift)
    }

    /// `𝔛ᵢ^{T,n}(x)`, the same rescaling of the line readout.
    pub fn rescale_line(&self, i: usize, x: f64) -> Result<f64> {
        Ok(self.height * kpz_line_prelimit(self.sample, i, self.space * x)? + self.shift)
    }

    /// Undoes [`ScaledQuery::rescale_sheet`].
    pub fn unscale_sheet(&self, value: f64) -> f64 {
        (value - self.shift) / self.height
    }

    /// `𝔯^{T,n}_k(x,z) = 2^{1/3}T^{-1/3}·F_k(2^{1/3}T^{2/3}x, 2^{1/3}T^{2/3}z) − 2^{3/2}k^{1/2}x^{1/2} − 2zx`.
    pub fn frak_r(&self, k: usize, x: f64, z: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Range(format!("ray parameter x={x} must be positive")));
        }
        let f = f_field(self.sample, k, self.space * x, self.space * z)?;
        Ok(self.height * f - 2.0f64.sqrt() * 2.0 * (k as f64).sqrt() * x.sqrt() - 2.0 * z * x)
    }
}

/// `R^{T,n}_k(x,z) = F^{T,n}_k(x,z) − k·log x − T⁻¹zx + log k!`.
pub fn remainder_r(sample: &OYSample, k: usize, x: f64, z: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Range(format!("remainder field needs x > 0, got {x}")));
    }
    let f = f_field(sample, k, x, z)?;
    Ok(f - k as f64 * x.ln() - z * x / sample.params.t + ln_factorial(k))
}

/// The elementary concavity gap at the ray point `z̄ = −kT/x̄`:
/// `gap = k·log x̄ + T⁻¹z̄x̄ − k·log x − T⁻¹z̄x` (equal to `k(u − 1 − log u)`
/// with `u = x/x̄`), and the quadratic floor `D⁻¹k|x−x̄|²` with `D = 2ε⁻⁴`
/// on the box `[ε, ε⁻¹]`. Callers assert `gap ≥ floor`.
pub fn kconcave_gap(k: usize, t: f64, x: f64, x_bar: f64, eps: f64) -> (f64, f64) {
    let kf = k as f64;
    let z_bar = -kf * t / x_bar;
    let gap = kf * x_bar.ln() + z_bar * x_bar / t - kf * x.ln() - z_bar * x / t;
    let d_inv = eps.powi(4) / 2.0;
    let floor = d_inv * kf * (x - x_bar) * (x - x_bar);
    (gap, floor)
}

/// Which tail a one-sided bound constrains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailSide {
    UpperA,
    LowerB,
}

/// One-sided quantile-decay bound of the unscaled suite at `z̄ = −kT/x̄`:
/// for `x̄ ≥ x` it bounds `log A_k(x,y;z̄)`, otherwise `log B_k(x,y;z̄)`.
/// Returns `(bound, tail, side)` — the RHS value and the tail it dominates.
pub fn ray_decay_bound(
    lab: &mut InequalityLab<'_>,
    k: usize,
    x: f64,
    x_bar: f64,
    y: f64,
    eps: f64,
) -> Result<(f64, f64, TailSide)> {
    let t = lab.sample.params.t;
    let z_bar = -(k as f64) * t / x_bar;
    // Sheet differences through the marginal totals keep the bound an exact
    // inequality of the tabulated measure.
    let m = lab.marginal(k, x, y)?;
    let m_bar = lab.marginal(k, x_bar, y)?;
    let h_x = m.log_sheet_reassembled();
    let h_xbar = m_bar.log_sheet_reassembled();
    let r_x = remainder_of(lab, k, x, z_bar)?;
    let r_xbar = remainder_of(lab, k, x_bar, z_bar)?;
    let d_inv = eps.powi(4) / 2.0;
    let rhs = -d_inv * k as f64 * (x - x_bar) * (x - x_bar) + h_xbar - h_x - r_xbar + r_x;
    if x_bar >= x {
        let lhs = m.log_a(lab.sample, z_bar)?;
        Ok((rhs, lhs, TailSide::UpperA))
    } else {
        let lhs = m.log_b(lab.sample, z_bar)?;
        Ok((rhs, lhs, TailSide::LowerB))
    }
}

/// Signed slack `RHS − LHS` of [`ray_decay_bound`].
pub fn ray_decay_slack(
    lab: &mut InequalityLab<'_>,
    k: usize,
    x: f64,
    x_bar: f64,
    y: f64,
    eps: f64,
) -> Result<(f64, TailSide)> {
    let (rhs, lhs, side) = ray_decay_bound(lab, k, x, x_bar, y, eps)?;
    Ok((rhs - lhs, side))
}

fn remainder_of(lab: &mut InequalityLab<'_>, k: usize, x: f64, z: f64) -> Result<f64> {
    let t = lab.sample.params.t;
    let f = lab.f_at(k, x, z)?;
    Ok(f - k as f64 * x.ln() - z * x / t + ln_factorial(k))
}

/// Scaled ray bound at `z̄ = −2^{-1/2}k^{1/2}x̄^{-1/2}` (the scaled analogue
/// of [`ray_decay_slack`]); arguments are in scaled coordinates.
pub fn scaled_ray_slack(
    lab: &mut InequalityLab<'_>,
    k: usize,
    x: f64,
    x_bar: f64,
    y: f64,
) -> Result<(f64, TailSide)> {
    let sample = lab.sample;
    let q = ScaledQuery::new(sample);
    let kf = k as f64;
    let z_bar = -kf.sqrt() / (2.0f64.sqrt() * x_bar.sqrt());
    let (xu, xbu, yu, zu) = (q.space * x, q.space * x_bar, q.space * y, q.space * z_bar);
    let m = lab.marginal(k, xu, yu)?;
    let m_bar = lab.marginal(k, xbu, yu)?;
    let h_x = q.height * m.log_sheet_reassembled();
    let h_xbar = q.height * m_bar.log_sheet_reassembled();
    let frak_of = |lab: &mut InequalityLab<'_>, xs: f64, xu_: f64| -> Result<f64> {
        let f = lab.f_at(k, xu_, zu)?;
        Ok(q.height * f - 2.0f64.sqrt() * 2.0 * kf.sqrt() * xs.sqrt() - 2.0 * z_bar * xs)
    };
    let r_x = frak_of(lab, x, xu)?;
    let r_xbar = frak_of(lab, x_bar, xbu)?;
    let quad = 2.0f64.sqrt() * kf.sqrt() * x_bar.sqrt() * {
        let r = 1.0 - (x / x_bar).sqrt();
        r * r
    };
    let rhs = h_xbar - h_x - r_xbar + r_x;
    if x_bar >= x {
        let lhs = m.log_a(sample, zu)? + quad;
        Ok((rhs - lhs, TailSide::UpperA))
    } else {
        let lhs = m.log_b(sample, zu)? + quad;
        Ok((rhs - lhs, TailSide::LowerB))
    }
}

/// The scaled sandwich slacks at `(k, x, y₁ ≤ y₂, z)` in scaled coordinates:
/// `(lower-tail side, upper-tail side)`, both `≥ 0` when the bounds hold.
/// The scaled line free-energy difference uses `β = (T/2)^{1/3}`, which is
/// exactly the unscaled difference times the height factor.
pub fn scaled_sandwich_slacks(
    lab: &mut InequalityLab<'_>,
    k: usize,
    x: f64,
    y1: f64,
    y2: f64,
    z: f64,
) -> Result<(f64, f64)> {
    let sample = lab.sample;
    let q = ScaledQuery::new(sample);
    let (xu, y1u, y2u, zu) = (q.space * x, q.space * y1, q.space * y2, q.space * z);
    let x1 = lab.line_free_energy(k, zu, y1u)?;
    let x2 = lab.line_free_energy(k, zu, y2u)?;
    let m_y1 = lab.marginal(k, xu, y1u)?;
    let m_y2 = lab.marginal(k, xu, y2u)?;
    let h_diff = m_y2.log_sheet_reassembled() - m_y1.log_sheet_reassembled();
    let scaled_gap = q.height * (h_diff - (x2 - x1));
    let slack_b = scaled_gap - m_y1.log_one_minus_b(sample, zu)?;
    let slack_a = -m_y2.log_one_minus_a(sample, zu)? - scaled_gap;
    Ok((slack_b, slack_a))
}

/// One row of the Busemann-ray experiment at level `k`.
#[derive(Debug, Clone, Copy)]
pub struct BusemannRow {
    pub k: usize,
    /// Ray position `z_k = −kT/x` (snapped).
    pub z: f64,
    /// `𝒳[(z_k,k)→(y₂,1)] − 𝒳[(z_k,k)→(y₁,1)]`.
    pub delta: f64,
    /// `H(x,y₂) − H(x,y₁)`.
    pub target: f64,
    /// `target + log(1−A_k(x,y₂;z_k))`.
    pub lower: f64,
    /// `target − log(1−B_k(x,y₁;z_k))`.
    pub upper: f64,
    pub log_a: f64,
    pub log_b: f64,
    /// Quantile-decay upper bounds on the tails along the ray, from the
    /// one-sided bound at the offset pairs `(3x/4, x)` and `(5x/4, x)`.
    pub decay_bound_a: f64,
    pub decay_bound_b: f64,
}

/// Largest admissible `k` for the ray `z_k = −kT/x`: the crossing must stay
/// one grid cell inside the marginal support `(−s+x, y₁)` and the sampled
/// domain.
pub fn admissible_k_max(sample: &OYSample, x: f64, y1: f64) -> usize {
    let t = sample.params.t;
    let s = sample.s();
    let h = sample.params.h;
    let mut k = 0usize;
    loop {
        let kn = k + 1;
        let z = -(kn as f64) * t / x;
        if s + z <= x + h || z >= y1 - h || s + z <= h || kn >= sample.params.n {
            return k;
        }
        k = kn;
    }
}

/// The finite-k Busemann-ray experiment: per admissible `k`, the free-energy
/// difference along the ray, the sheet-difference target, and the sandwich
/// bounds around it. No convergence in `k` is asserted.
pub fn busemann_ray_experiment(
    sample: &OYSample,
    x: f64,
    y1: f64,
    y2: f64,
    k_max: Option<usize>,
    eps_box: f64,
) -> Result<Vec<BusemannRow>> {
    if !(x > 0.0) || !(y1 <= y2) {
        return Err(Error::Range(String::from("need x > 0 and y1 <= y2")));
    }
    let adm = admissible_k_max(sample, x, y1);
    let k_top = match k_max {
        Some(k) if k > adm => {
            return Err(Error::Capability {
                what: format!("Busemann ray up to k = {k}"),
                admissible: format!("k_max = {adm} for n = {}, T = {}, x = {x}", sample.params.n,
                    sample.params.t),
            });
        }
        Some(k) => k,
        None => adm,
    };
    if k_top == 0 {
        return Err(Error::Capability {
            what: String::from("Busemann ray experiment"),
            admissible: String::from("no admissible k for these parameters"),
        });
    }
    let t = sample.params.t;
    let mut lab = InequalityLab::new(sample)?;
    let mut rows = Vec::with_capacity(k_top);
    for k in 1..=k_top {
        let z = -(k as f64) * t / x;
        let delta = {
            let b2 = lab.backward(y2)?.line_free_energy(sample, k, z)?;
            let b1 = lab.backward(y1)?.line_free_energy(sample, k, z)?;
            b2 - b1
        };
        let m_y2 = lab.marginal(k, x, y2)?;
        let m_y1 = lab.marginal(k, x, y1)?;
        // Sheet target through the marginal totals, consistent with the tails.
        let target = m_y2.log_sheet_reassembled() - m_y1.log_sheet_reassembled();
        let log_a = m_y2.log_a(sample, z)?;
        let log_b = m_y1.log_b(sample, z)?;
        let lower = target + m_y2.log_one_minus_a(sample, z)?;
        let upper = target - m_y1.log_one_minus_b(sample, z)?;
        let decay_bound_a = ray_decay_bound(&mut lab, k, 0.75 * x, x, y2, eps_box)
            .map(|(rhs, _, _)| rhs)
            .unwrap_or(f64::INFINITY);
        let decay_bound_b = ray_decay_bound(&mut lab, k, 1.25 * x, x, y1, eps_box)
            .map(|(rhs, _, _)| rhs)
            .unwrap_or(f64::INFINITY);
        rows.push(BusemannRow {
            k,
            z: sample.rel_pos(sample.abs_index(z)?),
            delta,
            target,
            lower,
            upper,
            log_a,
            log_b,
            decay_bound_a,
            decay_bound_b,
        });
    }
    Ok(rows)
}
