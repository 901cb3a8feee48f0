//! Geometric RSK transforms and residual evaluators for the deterministic
//! identities they satisfy.
//!
//! `𝒯ᵢ` adds `L(t) = log ∫₀ᵗ exp(f_{i+1} − f_i) ds` to curve `i` and
//! subtracts it from curve `i+1`; `𝒦ᵣ = 𝒯ᵣ⋯𝒯_{n-1}` and
//! `𝒲 = 𝒦_{n-1}⋯𝒦₁`. Transformed curves pick up `log t` singularities at
//! the origin; each curve tracks its log-slope `α` so that the integrand of
//! a later transform behaves like `s^a` with `a = α_{num} − α_{den}` known
//! exactly. The first grid cell is then integrated by the matching closed
//! form instead of poisoning the sweep with `-∞`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::free_energy::{
    down_right_free_energy, multi_free_energy, single_free_energy, slice_reassembled, Beta,
};
use crate::logdomain::{log_add_exp, log_trapezoid_running};
use crate::path::{special_endpoints, Endpoint, EndpointPair, SpecialEndpoints};

/// Applies `𝒯ᵢ` in place. `scratch` must be two node-length buffers.
fn t_apply(env: &mut Environment, i: usize, g: &mut Vec<f64>, l: &mut Vec<f64>) -> Result<()> {
    let n = env.n();
    if i < 1 || i >= n {
        return Err(Error::Range(format!("transform level {i} outside 1..={}", n - 1)));
    }
    if env.left() != 0.0 {
        return Err(Error::Range(String::from("𝒯ᵢ expects a domain starting at 0")));
    }
    let nodes = env.nodes();
    let h = env.step();
    let alpha_den = env.log_slope(i);
    let alpha_num = env.log_slope(i + 1);
    let a = alpha_num - alpha_den;
    if a <= -1.0 + 1e-9 {
        return Err(Error::Numerical(format!(
            "integrand power {a} at the origin is not integrable"
        )));
    }

    g.clear();
    g.resize(nodes, f64::NEG_INFINITY);
    {
        let top = env.curve(i + 1);
        let bot = env.curve(i);
        for j in 1..nodes {
            g[j] = top[j] - bot[j];
        }
        g[0] = if a == 0.0 {
            top[0] - bot[0] // regular parts: the finite limit of the integrand
        } else {
            f64::NEG_INFINITY // a > 0: integrand vanishes; a < 0: handled below
        };
    }

    l.clear();
    if a < 0.0 {
        // ∫₀ʰ C s^a ds = h·g(h)/(a+1), then ordinary trapezoid cells.
        l.resize(nodes, f64::NEG_INFINITY);
        l[1] = h.ln() + g[1] - a.ln_1p();
        let log_half_h = (0.5 * h).ln();
        for j in 1..nodes - 1 {
            l[j + 1] = log_add_exp(l[j], log_half_h + log_add_exp(g[j], g[j + 1]));
        }
    } else {
        *l = log_trapezoid_running(g, h);
    }

    // L(t) ~ (a+1)·log t + Δr(0) − log(a+1) near the origin.
    let reg_l = (env.node(i + 1, 0) - env.node(i, 0)) - a.ln_1p();
    let (row_i, row_i1) = env.rows_pair_mut(i);
    for j in 1..nodes {
        row_i[j] += l[j];
        row_i1[j] -= l[j];
    }
    row_i[0] += reg_l;
    row_i1[0] -= reg_l;
    let slopes = env.log_slope_mut();
    slopes[i - 1] += a + 1.0;
    slopes[i] -= a + 1.0;
    Ok(())
}

/// `𝒯ᵢ f`: curve `i` gains `L`, curve `i+1` loses it, all others unchanged.
pub fn t_transform(env: &Environment, i: usize) -> Result<Environment> {
    let mut out = env.clone();
    let mut g = Vec::new();
    let mut l = Vec::new();
    t_apply(&mut out, i, &mut g, &mut l)?;
    Ok(out)
}

/// `𝒲 f = 𝒦_{n-1} ⋯ 𝒦₁ f` with `𝒦ᵣ = 𝒯ᵣ ⋯ 𝒯_{n-1}`; identity for n = 1.
pub fn w_transform(env: &Environment) -> Result<Environment> {
    if !env.normalized_at_origin() {
        return Err(Error::Config(String::from(
            "𝒲 expects an environment normalized at the origin",
        )));
    }
    let n = env.n();
    let mut out = env.clone();
    let mut g = Vec::new();
    let mut l = Vec::new();
    for r in 1..n {
        for i in (r..n).rev() {
            t_apply(&mut out, i, &mut g, &mut l)?;
        }
    }
    Ok(out)
}

/// The deterministic identities this module can score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityId {
    Greene,
    Invariance,
    WfWrf,
    Searrow,
    ZReverse,
    Pileup,
    ChangeOfVariables,
    SliceReassembly,
}

impl IdentityId {
    pub const ALL: [IdentityId; 8] = [
        IdentityId::Greene,
        IdentityId::Invariance,
        IdentityId::WfWrf,
        IdentityId::Searrow,
        IdentityId::ZReverse,
        IdentityId::Pileup,
        IdentityId::ChangeOfVariables,
        IdentityId::SliceReassembly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IdentityId::Greene => "greene",
            IdentityId::Invariance => "invariance",
            IdentityId::WfWrf => "wf-wrf",
            IdentityId::Searrow => "searrow",
            IdentityId::ZReverse => "z-reverse",
            IdentityId::Pileup => "pileup",
            IdentityId::ChangeOfVariables => "change-of-variables",
            IdentityId::SliceReassembly => "slice-reassembly",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|id| id.name() == name)
    }
}

/// Identity-specific parameters for [`identity_residual`].
#[derive(Debug, Clone)]
pub enum IdentityParams {
    /// `|Σ_{i<=k} (𝒲f)_i(t) − f[U_{n,k}(0) → V_k(t)]|`
    Greene { k: usize, t: f64 },
    /// `|f[U→V] − (𝒲f)[U→V]|` for `U = ((x_i, n))`, `V = ((y_i, 1))`.
    Invariance { starts: Vec<f64>, ends: Vec<f64> },
    /// `|(𝒲f)[(x,n)→(z,k+1)] + (𝒲R_z f)[(z−x,1)↘(z,k+1)] − (𝒲f)_{k+1}(z)|`
    WfWrf { k: usize, x: f64, z: f64 },
    /// `|f[V'_k(x)→V_k(y)] + f[(x,1)↘(y,k+1)] − f[V_{k+1}(x)→V_{k+1}(y)]|`
    Searrow { k: usize, x: f64, y: f64 },
    /// `|f[U→V] − (R_z f)[Ũ→Ṽ]|`
    ZReverse { z: f64, pair: EndpointPair },
    /// `|f[(x,n)^{k+1}→(y,1)^{k+1}] − f[U_{n,k+1}(x)→V_{k+1}(y)]|`
    Pileup { k: usize, x: f64, y: f64 },
    /// Gap in the affine change-of-variables formula.
    ChangeOfVariables {
        a1: f64,
        a2: f64,
        a3: f64,
        a4: f64,
        a5: Vec<f64>,
        x: f64,
        ell: usize,
        y: f64,
        m: usize,
        beta: Beta,
    },
    /// `|f[(x,ℓ)→(y,m)] − log ∫ exp(slice) dz|`
    SliceReassembly { x: f64, ell: usize, y: f64, m: usize, k: usize },
}

impl IdentityParams {
    pub fn id(&self) -> IdentityId {
        match self {
            IdentityParams::Greene { .. } => IdentityId::Greene,
            IdentityParams::Invariance { .. } => IdentityId::Invariance,
            IdentityParams::WfWrf { .. } => IdentityId::WfWrf,
            IdentityParams::Searrow { .. } => IdentityId::Searrow,
            IdentityParams::ZReverse { .. } => IdentityId::ZReverse,
            IdentityParams::Pileup { .. } => IdentityId::Pileup,
            IdentityParams::ChangeOfVariables { .. } => IdentityId::ChangeOfVariables,
            IdentityParams::SliceReassembly { .. } => IdentityId::SliceReassembly,
        }
    }
}

/// The reversed endpoint pair `(Ũ, Ṽ)` matching `R_z`: endpoints map by
/// `(pos, level) ↦ (z − pos, n+1−level)` with the path order reversed and
/// start/end roles swapped.
pub fn reversed_pair(pair: &EndpointPair, n: usize, z: f64) -> Result<EndpointPair> {
    let k = pair.k();
    let mut starts = Vec::with_capacity(k);
    let mut ends = Vec::with_capacity(k);
    for i in 0..k {
        let v = pair.ends[k - 1 - i];
        let u = pair.starts[k - 1 - i];
        starts.push(Endpoint::new(z - v.pos, n + 1 - v.level));
        ends.push(Endpoint::new(z - u.pos, n + 1 - u.level));
    }
    EndpointPair::new(starts, ends)
}

/// Evaluates `|LHS − RHS|` of the named identity on `env` (which must be
/// normalized at the origin wherever `𝒲` is involved).
pub fn identity_residual(
    env: &Environment,
    id: IdentityId,
    params: &IdentityParams,
    d_max: usize,
) -> Result<f64> {
    if params.id() != id {
        return Err(Error::Usage(format!(
            "parameters are for {:?}, not {:?}",
            params.id(),
            id
        )));
    }
    let n = env.n();
    match params {
        IdentityParams::Greene { k, t } => {
            let k = *k;
            if k < 1 || k > n {
                return Err(Error::Range(format!("need 1 <= k <= n, got k={k}")));
            }
            let w = w_transform(env)?;
            let jt = env.index_of(*t)?;
            if jt == 0 {
                return Err(Error::Range(String::from("Greene readout needs t > 0")));
            }
            let lhs: f64 = (1..=k).map(|i| w.node(i, jt)).sum();
            let pair = EndpointPair::new(
                special_endpoints(SpecialEndpoints::Unk, 0.0, k, n)?,
                special_endpoints(SpecialEndpoints::Vk, env.pos(jt), k, n)?,
            )?;
            let rhs = multi_free_energy(env, &pair, d_max)?;
            Ok((lhs - rhs.value()).abs())
        }
        IdentityParams::Invariance { starts, ends } => {
            if starts.iter().chain(ends).any(|&p| p <= 0.0) {
                return Err(Error::Range(String::from(
                    "invariance endpoints must be strictly positive",
                )));
            }
            let pair = EndpointPair::new(
                starts.iter().map(|&x| Endpoint::new(x, n)).collect(),
                ends.iter().map(|&y| Endpoint::new(y, 1)).collect(),
            )?;
            let w = w_transform(env)?;
            let lhs = multi_free_energy(env, &pair, d_max)?;
            let rhs = multi_free_energy(&w, &pair, d_max)?;
            Ok((lhs.value() - rhs.value()).abs())
        }
        IdentityParams::WfWrf { k, x, z } => {
            let k = *k;
            if k < 1 || k >= n {
                return Err(Error::Range(format!("need 1 <= k <= n-1, got k={k}")));
            }
            let w = w_transform(env)?;
            let jx = env.index_of(*x)?;
            let jz = env.index_of(*z)?;
            if !(0 < jx && jx < jz) {
                return Err(Error::Range(String::from("need 0 < x < z on the grid")));
            }
            let (x_s, z_s) = (env.pos(jx), env.pos(jz));
            let up = single_free_energy(&w, x_s, n, z_s, k + 1, Beta::one())?;
            let (rz, z_rep) = env.reverse(z_s)?;
            let wrz = w_transform(&rz.normalized())?;
            let down = down_right_free_energy(&wrz, z_rep - x_s, 1, z_rep, k + 1)?;
            let rhs = w.node(k + 1, jz);
            Ok((up.value() + down.value() - rhs).abs())
        }
        IdentityParams::Searrow { k, x, y } => {
            let k = *k;
            if k < 1 || k >= n {
                return Err(Error::Range(format!("need 1 <= k <= n-1, got k={k}")));
            }
            let prime = multi_free_energy(
                env,
                &EndpointPair::new(
                    special_endpoints(SpecialEndpoints::Vpk, *x, k, n)?,
                    special_endpoints(SpecialEndpoints::Vk, *y, k, n)?,
                )?,
                d_max,
            )?;
            let down = down_right_free_energy(env, *x, 1, *y, k + 1)?;
            let full = multi_free_energy(
                env,
                &EndpointPair::new(
                    special_endpoints(SpecialEndpoints::Vk, *x, k + 1, n)?,
                    special_endpoints(SpecialEndpoints::Vk, *y, k + 1, n)?,
                )?,
                d_max,
            )?;
            Ok((prime.value() + down.value() - full.value()).abs())
        }
        IdentityParams::ZReverse { z, pair } => {
            let (rz, z_s) = env.reverse(*z)?;
            let tilde = reversed_pair(pair, n, z_s)?;
            let lhs = multi_free_energy(env, pair, d_max)?;
            let rhs = multi_free_energy(&rz, &tilde, d_max)?;
            Ok((lhs.value() - rhs.value()).abs())
        }
        IdentityParams::Pileup { k, x, y } => {
            let k = *k;
            if k + 1 > n {
                return Err(Error::Range(format!("need k+1 <= n, got k={k}")));
            }
            let repeated = EndpointPair::new(
                vec![Endpoint::new(*x, n); k + 1],
                vec![Endpoint::new(*y, 1); k + 1],
            )?;
            let packed = EndpointPair::new(
                special_endpoints(SpecialEndpoints::Unk, *x, k + 1, n)?,
                special_endpoints(SpecialEndpoints::Vk, *y, k + 1, n)?,
            )?;
            let lhs = multi_free_energy(env, &repeated, d_max)?;
            let rhs = multi_free_energy(env, &packed, d_max)?;
            Ok((lhs.value() - rhs.value()).abs())
        }
        IdentityParams::ChangeOfVariables { a1, a2, a3, a4, a5, x, ell, y, m, beta } => {
            let g = env.affine(*a1, *a2, *a3, *a4, a5)?;
            // g's grid is the exact preimage of env's: node j of g maps onto
            // node j of env, so evaluate the right-hand side there.
            let jx = g.index_of(*x)?;
            let jy = g.index_of(*y)?;
            let (xg, yg) = (g.pos(jx), g.pos(jy));
            let lhs = single_free_energy(&g, xg, *ell, yg, *m, *beta)?;
            let rhs = match *beta {
                Beta::Finite(b) => {
                    let scaled = Beta::finite(a1 * b)?;
                    let inner =
                        single_free_energy(env, env.pos(jx), *ell, env.pos(jy), *m, scaled)?;
                    a1 * inner.value() + a4 * (yg - xg)
                        - (*ell as f64 - *m as f64) * a2.ln() / b
                }
                Beta::Infinite => {
                    let inner =
                        single_free_energy(env, env.pos(jx), *ell, env.pos(jy), *m, Beta::Infinite)?;
                    a1 * inner.value() + a4 * (yg - xg)
                }
            };
            Ok((lhs.value() - rhs).abs())
        }
        IdentityParams::SliceReassembly { x, ell, y, m, k } => {
            let direct = single_free_energy(env, *x, *ell, *y, *m, Beta::one())?;
            let glued = slice_reassembled(env, *x, *ell, *y, *m, *k)?;
            Ok((direct.value() - glued).abs())
        }
    }
}
