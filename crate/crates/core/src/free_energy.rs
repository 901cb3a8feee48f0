//! β-free energies of single paths, non-crossing families and down/right
//! paths, plus an independent brute-force oracle.
//!
//! The single-path value `f[(x,ℓ)→^β(y,m)] = β⁻¹ log ∫ exp(β f(π)) dπ` is
//! computed by a level sweep: with `W_j(t) = log ∫ exp(β f(π))` over paths
//! `(x,ℓ)→(t,j)`,
//!
//! ```text
//! W_ℓ(t) = β(f_ℓ(t) − f_ℓ(x)),
//! W_j(t) = β f_j(t) + log ∫_x^t exp(W_{j+1}(s) − β f_j(s)) ds,
//! ```
//!
//! with the running integral in log domain. `β = ∞` replaces
//! (log-sum-exp, +) by (max, +); for piecewise-linear curves the within-cell
//! maximum sits on a node, so the max-plus sweep is exact. Down/right paths
//! use the sign-flipped sweep, and non-crossing families integrate over the
//! order polytope chamber by chamber.
//!
//! Query positions snap to the nearest grid node; levels are 1-based.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::logdomain::{log_add_exp, log_trapezoid, log_trapezoid_running, running_max, LogValue};
use crate::path::{polytope_bounds, EndpointPair, PathCoords};

/// Inverse temperature: a finite positive real or `∞` (last passage).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn finite(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Beta::Finite(value))
        } else {
            Err(Error::Config(format!("β must be finite and positive, got {value}")))
        }
    }

    pub fn one() -> Self {
        Beta::Finite(1.0)
    }
}

/// Rows of a forward (up/right) sweep from `(x, ℓ)` down to level `m`:
/// `row(j)[t] = log ∫ exp(β f(π)) dπ` over paths `(x,ℓ) → (t,j)`.
///
/// Values are in the β-scaled log domain; divide by β for the free energy.
pub struct UpSweep {
    pub jx: usize,
    pub ell: usize,
    pub m: usize,
    rows: Vec<Vec<f64>>,
}

impl UpSweep {
    pub fn row(&self, level: usize) -> &[f64] {
        &self.rows[self.ell - level]
    }
}

/// Forward sweep with finite β (`beta` is the multiplier applied to curves).
pub fn up_sweep(env: &Environment, jx: usize, ell: usize, m: usize, beta: f64) -> UpSweep {
    let nodes = env.nodes();
    let h = env.step();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(ell - m + 1);
    let base_curve = env.curve(ell);
    let mut base = vec![f64::NEG_INFINITY; nodes];
    for j in jx..nodes {
        base[j] = beta * (base_curve[j] - base_curve[jx]);
    }
    rows.push(base);
    let mut scratch = vec![f64::NEG_INFINITY; nodes];
    for level in (m..ell).rev() {
        let curve = env.curve(level);
        {
            let prev = rows.last().unwrap();
            for j in jx..nodes {
                scratch[j] = prev[j] - beta * curve[j];
            }
        }
        let cum = log_trapezoid_running(&scratch[jx..], h);
        let mut row = vec![f64::NEG_INFINITY; nodes];
        for j in jx..nodes {
            row[j] = beta * curve[j] + cum[j - jx];
        }
        rows.push(row);
    }
    UpSweep { jx, ell, m, rows }
}

/// Forward sweep at β = ∞: `row(j)[t]` is the maximal path energy.
pub fn up_sweep_maxplus(env: &Environment, jx: usize, ell: usize, m: usize) -> UpSweep {
    let nodes = env.nodes();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(ell - m + 1);
    let base_curve = env.curve(ell);
    let mut base = vec![f64::NEG_INFINITY; nodes];
    for j in jx..nodes {
        base[j] = base_curve[j] - base_curve[jx];
    }
    rows.push(base);
    let mut scratch = vec![f64::NEG_INFINITY; nodes];
    for level in (m..ell).rev() {
        let curve = env.curve(level);
        {
            let prev = rows.last().unwrap();
            for j in jx..nodes {
                scratch[j] = prev[j] - curve[j];
            }
        }
        let cum = running_max(&scratch[jx..]);
        let mut row = vec![f64::NEG_INFINITY; nodes];
        for j in jx..nodes {
            row[j] = curve[j] + cum[j - jx];
        }
        rows.push(row);
    }
    UpSweep { jx, ell, m, rows }
}

/// Rows of a backward sweep into `(y, 1)`:
/// `row(j)[t] = log ∫ exp(f(π)) dπ` over paths `(t,j) → (y,1)` (β = 1).
pub struct BackSweep {
    pub jy: usize,
    pub top: usize,
    rows: Vec<Vec<f64>>,
}

impl BackSweep {
    pub fn row(&self, level: usize) -> &[f64] {
        &self.rows[level - 1]
    }
}

pub fn back_sweep(env: &Environment, jy: usize, top: usize) -> BackSweep {
    let h = env.step();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(top);
    let base_curve = env.curve(1);
    let mut base = vec![f64::NEG_INFINITY; jy + 1];
    for j in 0..=jy {
        base[j] = base_curve[jy] - base_curve[j];
    }
    rows.push(base);
    let mut scratch = vec![f64::NEG_INFINITY; jy + 1];
    for level in 2..=top {
        let curve = env.curve(level);
        // exp(Q_j(t)) = ∫_t^y exp(Q_{j-1}(z) + f_j(z)) dz · e^{-f_j(t)}.
        {
            let prev = rows.last().unwrap();
            for j in 0..=jy {
                scratch[j] = prev[j] + curve[j];
            }
        }
        // Reversed running trapezoid: cum[j] = log ∫_{t_j}^{t_jy} ...
        let rev: Vec<f64> = scratch[..=jy].iter().rev().copied().collect();
        let cum = log_trapezoid_running(&rev, h);
        let mut row = vec![f64::NEG_INFINITY; jy + 1];
        for j in 0..=jy {
            row[j] = cum[jy - j] - curve[j];
        }
        rows.push(row);
    }
    BackSweep { jy, top, rows }
}

/// The β-free energy `f[(x,ℓ) →^β (y,m)]`.
pub fn single_free_energy(
    env: &Environment,
    x: f64,
    ell: usize,
    y: f64,
    m: usize,
    beta: Beta,
) -> Result<LogValue> {
    check_levels(env, ell, m)?;
    let (jx, jy) = snap_interval(env, x, y)?;
    if ell == m {
        return Ok(LogValue::new(env.node(m, jy) - env.node(m, jx)));
    }
    match beta {
        Beta::Finite(b) => {
            let sweep = up_sweep(env, jx, ell, m, b);
            Ok(LogValue::new(sweep.row(m)[jy] / b))
        }
        Beta::Infinite => {
            let sweep = up_sweep_maxplus(env, jx, ell, m);
            Ok(LogValue::new(sweep.row(m)[jy]))
        }
    }
}

/// Down/right free energy `f[(x,m) ↘ (y,ℓ)] = −log ∫ exp(−f(ρ)) dρ`.
pub fn down_right_free_energy(
    env: &Environment,
    x: f64,
    m: usize,
    y: f64,
    ell: usize,
) -> Result<LogValue> {
    check_levels(env, ell, m)?;
    let (jx, jy) = snap_interval(env, x, y)?;
    if ell == m {
        return Ok(LogValue::new(env.node(m, jy) - env.node(m, jx)));
    }
    let h = env.step();
    let nodes = env.nodes();
    // w̃_m ≡ exp(f_m(x)); w̃_j(t) = ∫_x^t w̃_{j-1} exp(f_j - f_{j-1}) ds.
    let mut prev = vec![f64::NEG_INFINITY; nodes];
    for j in jx..nodes {
        prev[j] = env.node(m, jx);
    }
    let mut scratch = vec![f64::NEG_INFINITY; nodes];
    for level in m + 1..=ell {
        let curve = env.curve(level);
        let below = env.curve(level - 1);
        for j in jx..nodes {
            scratch[j] = prev[j] + curve[j] - below[j];
        }
        let cum = log_trapezoid_running(&scratch[jx..], h);
        for j in jx..nodes {
            prev[j] = cum[j - jx];
        }
    }
    Ok(LogValue::new(env.node(ell, jy) - prev[jy]))
}

/// The log-integrand of the midpoint decomposition at level `k`, crossing
/// position `z`: `f[(x,ℓ)→(z,k+1)] + f[(z,k)→(y,m)]`. Integrating its
/// exponential over `z ∈ (x,y)` recovers `exp(f[(x,ℓ)→(y,m)])`.
pub fn free_energy_slice(
    env: &Environment,
    x: f64,
    ell: usize,
    y: f64,
    m: usize,
    k: usize,
    z: f64,
) -> Result<f64> {
    if k < m || k + 1 > ell {
        return Err(Error::Range(format!("need m <= k <= ℓ-1, got k={k}, ℓ={ell}, m={m}")));
    }
    let left = single_free_energy(env, x, ell, z, k + 1, Beta::one())?;
    let right = single_free_energy(env, z, k, y, m, Beta::one())?;
    Ok(left.value() + right.value())
}

/// Independent oracle for [`single_free_energy`]: direct nested quadrature
/// (finite β) or grid search with node refinement (β = ∞) over the ordered
/// simplex. Dimension is capped at 4.
pub fn brute_force_single(
    env: &Environment,
    x: f64,
    ell: usize,
    y: f64,
    m: usize,
    beta: Beta,
    points_per_dim: usize,
) -> Result<LogValue> {
    check_levels(env, ell, m)?;
    let dim = ell - m;
    if dim > 4 {
        return Err(Error::Capability {
            what: format!("brute force over dimension {dim}"),
            admissible: String::from("ℓ - m <= 4"),
        });
    }
    let (jx, jy) = snap_interval(env, x, y)?;
    let (x, y) = (env.pos(jx), env.pos(jy));
    if dim == 0 {
        return Ok(LogValue::new(env.node(m, jy) - env.node(m, jx)));
    }
    if points_per_dim < 2 {
        return Err(Error::Config(String::from("points_per_dim must be >= 2")));
    }
    let q = points_per_dim;
    let delta = (y - x) / q as f64;
    let mut times = vec![0.0; dim];
    match beta {
        Beta::Finite(b) => {
            // Iterated trapezoid over x <= t_ℓ <= … <= t_{m+1} <= y; the
            // times vector is (t_ℓ, …, t_{m+1}), filled innermost-first.
            fn nest(
                env: &Environment,
                b: f64,
                x: f64,
                y: f64,
                ell: usize,
                m: usize,
                delta: f64,
                upper: usize,
                depth: usize,
                times: &mut [f64],
            ) -> f64 {
                let dim = ell - m;
                let mut acc = 0.0;
                for i in 0..=upper {
                    let w = if i == 0 || i == upper { 0.5 } else { 1.0 };
                    times[dim - 1 - depth] = x + i as f64 * delta;
                    let inner = if depth + 1 == dim {
                        let p = PathCoords {
                            x,
                            y,
                            ell,
                            m,
                            times: times.to_vec(),
                        };
                        (b * crate::path::path_energy(env, &p).unwrap()).exp()
                    } else {
                        nest(env, b, x, y, ell, m, delta, i, depth + 1, times)
                    };
                    acc += w * inner;
                }
                acc * delta
            }
            // Outermost coordinate is t_{m+1} over the full interval.
            let v = nest(env, b, x, y, ell, m, delta, q, 0, &mut times);
            Ok(LogValue::new(if v > 0.0 { v.ln() / b } else { f64::NEG_INFINITY }))
        }
        Beta::Infinite => {
            // Coarse grid search keeping several leading candidates...
            const STARTS: usize = 8;
            let mut leaders: Vec<(f64, Vec<f64>)> = Vec::new();
            let mut idx = vec![0usize; dim];
            loop {
                let ok = idx.windows(2).all(|w| w[0] <= w[1]);
                if ok {
                    for (d, &i) in idx.iter().enumerate() {
                        times[d] = x + i as f64 * delta;
                    }
                    let p = PathCoords { x, y, ell, m, times: times.clone() };
                    let e = crate::path::path_energy(env, &p)?;
                    if leaders.len() < STARTS {
                        leaders.push((e, times.clone()));
                    } else if let Some(worst) = leaders
                        .iter()
                        .enumerate()
                        .min_by(|a, b| a.1 .0.partial_cmp(&b.1 .0).unwrap())
                        .map(|(i, _)| i)
                    {
                        if e > leaders[worst].0 {
                            leaders[worst] = (e, times.clone());
                        }
                    }
                }
                // Odometer over [0, q]^dim.
                let mut d = 0;
                loop {
                    if d == dim {
                        break;
                    }
                    idx[d] += 1;
                    if idx[d] <= q {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
                if d == dim {
                    break;
                }
            }
            // ...then coordinate ascent on the environment grid from each
            // candidate; a piecewise-linear energy peaks on a node.
            let energy_of = |nodes_idx: &[usize]| -> f64 {
                let p = PathCoords {
                    x,
                    y,
                    ell,
                    m,
                    times: nodes_idx.iter().map(|&j| env.pos(j)).collect(),
                };
                crate::path::path_energy(env, &p).unwrap()
            };
            let mut best = f64::NEG_INFINITY;
            for (_, start) in &leaders {
                let mut cur: Vec<usize> =
                    start.iter().map(|&t| env.index_of(t).unwrap().clamp(jx, jy)).collect();
                let mut cur_best = energy_of(&cur);
                for _round in 0..16 {
                    let mut improved = false;
                    for d in 0..dim {
                        let lo = if d == 0 { jx } else { cur[d - 1] };
                        let hi = if d + 1 == dim { jy } else { cur[d + 1] };
                        let mut local_best = (cur_best, cur[d]);
                        for j in lo..=hi {
                            cur[d] = j;
                            let e = energy_of(&cur);
                            if e > local_best.0 {
                                local_best = (e, j);
                            }
                        }
                        cur[d] = local_best.1;
                        if local_best.0 > cur_best {
                            cur_best = local_best.0;
                            improved = true;
                        }
                    }
                    if !improved {
                        break;
                    }
                }
                best = best.max(cur_best);
            }
            Ok(LogValue::new(best))
        }
    }
}

/// Free energy of a non-crossing family, `f[U → V]` (β = 1), integrated with
/// the Hausdorff measure on the affine hull of the polytope: coordinates
/// pinned by the constraints contribute point factors, the free ones are
/// integrated chamber by chamber (one chamber per linear extension of the
/// coordinate partial order).
pub fn multi_free_energy(env: &Environment, pair: &EndpointPair, d_max: usize) -> Result<LogValue> {
    if pair.max_level() > env.n() {
        return Err(Error::Range(format!(
            "endpoint level {} exceeds curve count {}",
            pair.max_level(),
            env.n()
        )));
    }
    let bounds = polytope_bounds(pair);
    if !bounds.feasible {
        return Ok(LogValue::neg_infinity());
    }
    let coords = pair.coords();

    // Boundary constants Σ_i f_{m_i}(y_i) − f_{ℓ_i}(x_i).
    let mut constant = 0.0;
    for (u, v) in pair.starts.iter().zip(&pair.ends) {
        let ju = env.index_of(u.pos)?;
        let jv = env.index_of(v.pos)?;
        constant += env.node(v.level, jv) - env.node(u.level, ju);
    }
    // Pinned coordinates contribute their integrand factor at the pin.
    let mut free = Vec::new();
    for (v, info) in coords.iter().enumerate() {
        if bounds.pinned(v) {
            let j = env.index_of(bounds.lower[v])?;
            constant += env.node(info.level, j) - env.node(info.level - 1, j);
        } else {
            free.push(v);
        }
    }
    let p = free.len();
    if p == 0 {
        return Ok(LogValue::new(constant));
    }
    if p > d_max {
        return Err(Error::Capability {
            what: format!("polytope quadrature over dimension {p}"),
            admissible: format!("free dimension <= {d_max}"),
        });
    }

    // Window and per-variable node ranges.
    let rank: Vec<usize> = free.clone();
    let lo_idx: Vec<usize> = rank.iter().map(|&v| env.index_of(bounds.lower[v]).unwrap()).collect();
    let hi_idx: Vec<usize> = rank.iter().map(|&v| env.index_of(bounds.upper[v]).unwrap()).collect();
    let j0 = *lo_idx.iter().min().unwrap();
    let j1 = *hi_idx.iter().max().unwrap();
    let w = j1 - j0 + 1;
    // Integrand factors g_v[t] = f_j(t) − f_{j-1}(t) per free coordinate.
    let g: Vec<Vec<f64>> = rank
        .iter()
        .map(|&v| {
            let lvl = coords[v].level;
            let top = env.curve(lvl);
            let bot = env.curve(lvl - 1);
            (j0..=j1).map(|j| top[j] - bot[j]).collect()
        })
        .collect();
    // Partial order restricted to free coordinates.
    let pos_of = |v: usize| rank.iter().position(|&r| r == v);
    let mut succ = vec![Vec::new(); p];
    let mut indeg = vec![0usize; p];
    for &(u, v) in &bounds.edges {
        if let (Some(a), Some(b)) = (pos_of(u), pos_of(v)) {
            succ[a].push(b);
            indeg[b] += 1;
        }
    }

    // Backtracking over linear extensions; integrate each chamber.
    let h = env.step();
    let mut total = f64::NEG_INFINITY;
    let mut order = Vec::with_capacity(p);
    let mut used = vec![false; p];
    let mut indeg_now = indeg.clone();
    fn extend(
        order: &mut Vec<usize>,
        used: &mut [bool],
        indeg_now: &mut [usize],
        succ: &[Vec<usize>],
        p: usize,
        chamber: &mut dyn FnMut(&[usize]),
    ) {
        if order.len() == p {
            chamber(order);
            return;
        }
        for c in 0..p {
            if !used[c] && indeg_now[c] == 0 {
                used[c] = true;
                order.push(c);
                for &s in &succ[c] {
                    indeg_now[s] -= 1;
                }
                extend(order, used, indeg_now, succ, p, chamber);
                for &s in &succ[c] {
                    indeg_now[s] += 1;
                }
                order.pop();
                used[c] = false;
            }
        }
    }
    {
        let mut chamber = |order: &[usize]| {
            // Iterated running integral with per-variable node windows:
            // acc is -∞ below the window, frozen above it.
            let mut acc: Vec<f64> = vec![0.0; w];
            for (step, &c) in order.iter().enumerate() {
                let lo = lo_idx[c] - j0;
                let hi = hi_idx[c] - j0;
                let mut integrand = Vec::with_capacity(hi - lo + 1);
                for j in lo..=hi {
                    let prev = if step == 0 { 0.0 } else { acc[j] };
                    integrand.push(g[c][j] + prev);
                }
                let cum = log_trapezoid_running(&integrand, h);
                let mut next = vec![f64::NEG_INFINITY; w];
                for j in lo..=hi {
                    next[j] = cum[j - lo];
                }
                for j in hi + 1..w {
                    next[j] = next[hi];
                }
                acc = next;
            }
            total = log_add_exp(total, acc[w - 1]);
        };
        extend(&mut order, &mut used, &mut indeg_now, &succ, p, &mut chamber);
    }
    Ok(LogValue::new(constant + total))
}

fn check_levels(env: &Environment, ell: usize, m: usize) -> Result<()> {
    if m < 1 || ell < m {
        return Err(Error::Range(format!("need ℓ >= m >= 1, got ℓ={ell}, m={m}")));
    }
    if ell > env.n() {
        return Err(Error::Range(format!(
            "level {} exceeds curve count {}",
            ell,
            env.n()
        )));
    }
    Ok(())
}

fn snap_interval(env: &Environment, x: f64, y: f64) -> Result<(usize, usize)> {
    if !(x < y) {
        return Err(Error::Range(format!("need x < y, got {x} >= {y}")));
    }
    let jx = env.index_of(x)?;
    let jy = env.index_of(y)?;
    if jx >= jy {
        return Err(Error::Range(format!(
            "interval [{x}, {y}] collapses on the grid (step {})",
            env.step()
        )));
    }
    Ok((jx, jy))
}

/// Trapezoid reassembly of `exp(single_free_energy)` from the slice
/// integrand; used by the slice identity and its tests.
pub fn slice_reassembled(
    env: &Environment,
    x: f64,
    ell: usize,
    y: f64,
    m: usize,
    k: usize,
) -> Result<f64> {
    let (jx, jy) = snap_interval(env, x, y)?;
    let up = up_sweep(env, jx, ell, k + 1, 1.0);
    let back_rows = up_sweep_reverse_target(env, jy, k, m);
    let vals: Vec<f64> = (jx..=jy).map(|j| up.row(k + 1)[j] + back_rows[j]).collect();
    Ok(log_trapezoid(&vals, env.step()))
}

/// `f[(t,k) → (y,m)]` for every node `t <= y`, via one backward sweep.
fn up_sweep_reverse_target(env: &Environment, jy: usize, k: usize, m: usize) -> Vec<f64> {
    let h = env.step();
    // ṽ_m(t) = exp(f_m(y)); ṽ_j(t) = ∫_t^y ṽ_{j-1} exp(f_j − f_{j-1}) ds.
    let mut prev = vec![env.node(m, jy); jy + 1];
    for level in m + 1..=k {
        let curve = env.curve(level);
        let below = env.curve(level - 1);
        let rev: Vec<f64> = (0..=jy)
            .rev()
            .map(|j| prev[j] + curve[j] - below[j])
            .collect();
        let cum = log_trapezoid_running(&rev, h);
        for j in 0..=jy {
            prev[j] = cum[jy - j];
        }
    }
    // Q_k(t) = log ṽ_k(t) − f_k(t).
    let curve = env.curve(k);
    (0..=jy).map(|j| prev[j] - curve[j]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::CurveSource;
    use crate::path::{special_endpoints, SpecialEndpoints};
    use approx::assert_relative_eq;

    fn grid_env(f: impl Fn(usize, f64) -> f64, n: usize, cells: usize) -> Environment {
        Environment::build(n, (0.0, 1.0), 1.0 / cells as f64, CurveSource::Callable(&f), false)
            .unwrap()
    }

    fn zero_env(n: usize, cells: usize) -> Environment {
        grid_env(|_, _| 0.0, n, cells)
    }

    #[test]
    fn simplex_volume_for_zero_environment() {
        // f ≡ 0, (0,3)→(1,1): log((y-x)²/2!) = -log 2 (trapezoid exact on
        // polynomials of degree <= 1 per level).
        let env = zero_env(3, 256);
        let v = single_free_energy(&env, 0.0, 3, 1.0, 1, Beta::one()).unwrap();
        assert_relative_eq!(v.value(), -(2.0f64.ln()), epsilon = 1e-12);
    }

    #[test]
    fn closed_form_exponential_case() {
        // f = (t, 0): log ∫₀¹ e^{1-s} ds = log(e-1).
        let env = grid_env(|i, t| if i == 1 { t } else { 0.0 }, 2, 4096);
        let v = single_free_energy(&env, 0.0, 2, 1.0, 1, Beta::one()).unwrap();
        assert_relative_eq!(v.value(), (core::f64::consts::E - 1.0).ln(), epsilon = 1e-7);
    }

    #[test]
    fn degenerate_level_for_every_beta() {
        let env = grid_env(|i, t| if i == 2 { t * t } else { 0.0 }, 2, 64);
        for beta in [Beta::one(), Beta::finite(2.5).unwrap(), Beta::Infinite] {
            let v = single_free_energy(&env, 0.0, 2, 1.0, 2, beta).unwrap();
            assert_relative_eq!(v.value(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn maxplus_on_zero_environment_is_zero() {
        let env = zero_env(4, 64);
        let v = single_free_energy(&env, 0.0, 4, 1.0, 1, Beta::Infinite).unwrap();
        assert_eq!(v.value(), 0.0);
    }

    #[test]
    fn range_errors() {
        let env = zero_env(2, 8);
        assert!(single_free_energy(&env, 0.5, 2, 0.25, 1, Beta::one()).is_err());
        assert!(single_free_energy(&env, 0.0, 3, 1.0, 1, Beta::one()).is_err());
    }

    #[test]
    fn brute_force_dimension_zero_and_volume() {
        let env = zero_env(3, 64);
        let v = brute_force_single(&env, 0.0, 1, 1.0, 1, Beta::one(), 8).unwrap();
        assert_eq!(v.value(), 0.0);
        let v2 = brute_force_single(&env, 0.0, 3, 1.0, 1, Beta::one(), 400).unwrap();
        assert_relative_eq!(v2.value(), -(2.0f64.ln()), epsilon = 1e-4);
    }

    #[test]
    fn brute_force_agrees_with_sweep() {
        let env = grid_env(|i, t| if i == 1 { t } else { 0.0 }, 2, 2048);
        let a = single_free_energy(&env, 0.0, 2, 1.0, 1, Beta::one()).unwrap();
        let b = brute_force_single(&env, 0.0, 2, 1.0, 1, Beta::one(), 4000).unwrap();
        assert_relative_eq!(a.value(), b.value(), epsilon = 1e-4);
    }

    #[test]
    fn brute_force_rejects_high_dimension() {
        let env = zero_env(6, 8);
        let r = brute_force_single(&env, 0.0, 6, 1.0, 1, Beta::one(), 8);
        assert!(matches!(r, Err(Error::Capability { .. })));
    }

    #[test]
    fn maxplus_oracle_agreement_on_smooth_env() {
        let env = Environment::random_smooth(3, (0.0, 1.0), 1.0 / 1024.0, 5).unwrap();
        let a = single_free_energy(&env, 0.0, 3, 1.0, 1, Beta::Infinite).unwrap();
        let b = brute_force_single(&env, 0.0, 3, 1.0, 1, Beta::Infinite, 64).unwrap();
        let tol = 1e-4 * a.value().abs().max(1.0);
        assert!((a.value() - b.value()).abs() <= tol, "{} vs {}", a.value(), b.value());
        // The sweep can never lose to a feasible path the oracle found.
        assert!(a.value() >= b.value() - 1e-12);
    }

    #[test]
    fn beta_to_infinity_consistency() {
        let env = Environment::random_smooth(3, (0.0, 1.0), 1.0 / 1024.0, 9).unwrap();
        let hot = single_free_energy(&env, 0.0, 3, 1.0, 1, Beta::finite(1000.0).unwrap()).unwrap();
        let cold = single_free_energy(&env, 0.0, 3, 1.0, 1, Beta::Infinite).unwrap();
        assert!((hot.value() - cold.value()).abs() < 0.03);
    }

    #[test]
    fn multi_reduces_to_single_at_k1() {
        let env = Environment::random_smooth(3, (0.0, 1.0), 1.0 / 512.0, 2).unwrap();
        let pair = EndpointPair::new(
            alloc::vec![crate::path::Endpoint::new(0.0, 3)],
            alloc::vec![crate::path::Endpoint::new(1.0, 1)],
        )
        .unwrap();
        let a = multi_free_energy(&env, &pair, 6).unwrap();
        let b = single_free_energy(&env, 0.0, 3, 1.0, 1, Beta::one()).unwrap();
        assert_relative_eq!(a.value(), b.value(), epsilon = 1e-10);
    }

    #[test]
    fn fully_packed_family_telescopes() {
        let env = Environment::random_smooth(3, (0.0, 1.0), 1.0 / 256.0, 4).unwrap();
        let pair = EndpointPair::new(
            special_endpoints(SpecialEndpoints::Unk, 0.0, 3, 3).unwrap(),
            special_endpoints(SpecialEndpoints::Vk, 1.0, 3, 3).unwrap(),
        )
        .unwrap();
        let v = multi_free_energy(&env, &pair, 6).unwrap();
        let jy = env.index_of(1.0).unwrap();
        let expect: f64 = (1..=3).map(|i| env.node(i, jy) - env.node(i, 0)).sum();
        assert_relative_eq!(v.value(), expect, epsilon = 1e-12);
    }

    #[test]
    fn multi_matches_rejection_sampling_oracle() {
        // f[U_{3,2}(0) → V₂(1)]: 2-dimensional polytope {t₁ ≤ t₂} with
        // integrand exp((f₂-f₁)(t₁) + (f₃-f₂)(t₂)); Monte Carlo oracle.
        let env = Environment::random_smooth(3, (0.0, 1.0), 1.0 / 2048.0, 6).unwrap();
        let pair = EndpointPair::new(
            special_endpoints(SpecialEndpoints::Unk, 0.0, 2, 3).unwrap(),
            special_endpoints(SpecialEndpoints::Vk, 1.0, 2, 3).unwrap(),
        )
        .unwrap();
        let v = multi_free_energy(&env, &pair, 6).unwrap();

        let mut rng = crate::rng::ReplicaRng::new(123, 0);
        let n = 6_000_000usize;
        let mut acc = 0.0f64;
        for _ in 0..n {
            let t1 = rng.uniform();
            let t2 = rng.uniform();
            if t1 <= t2 {
                let g1 = env.value(2, t1).unwrap() - env.value(1, t1).unwrap();
                let g2 = env.value(3, t2).unwrap() - env.value(2, t2).unwrap();
                acc += (g1 + g2).exp();
            }
        }
        let jy = env.index_of(1.0).unwrap();
        let constant = env.node(1, jy) - env.node(2, 0) + env.node(2, jy) - env.node(3, 0);
        let oracle = constant + (acc / n as f64).ln();
        assert_relative_eq!(v.value(), oracle, epsilon = 1e-3);
    }

    #[test]
    fn down_right_sign_convention() {
        // f ≡ 0, (0,1)↘(1,3): -log(1/2!) = +log 2.
        let env = zero_env(3, 256);
        let v = down_right_free_energy(&env, 0.0, 1, 1.0, 3).unwrap();
        assert_relative_eq!(v.value(), 2.0f64.ln(), epsilon = 1e-12);
        // m = ℓ: plain increment.
        let env2 = grid_env(|i, t| if i == 2 { t } else { 0.0 }, 2, 16);
        let v2 = down_right_free_energy(&env2, 0.0, 2, 1.0, 2).unwrap();
        assert_relative_eq!(v2.value(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn searrow_complement_at_k1() {
        // f[V'₁(x)→V₁(y)] + f[(x,1)↘(y,2)] = f[V₂(x)→V₂(y)].
        let env = Environment::random_smooth(3, (0.0, 1.0), 1.0 / 512.0, 8).unwrap();
        let a = single_free_energy(&env, 0.25, 2, 0.75, 1, Beta::one()).unwrap();
        let b = down_right_free_energy(&env, 0.25, 1, 0.75, 2).unwrap();
        let pair = EndpointPair::new(
            special_endpoints(SpecialEndpoints::Vk, 0.25, 2, 3).unwrap(),
            special_endpoints(SpecialEndpoints::Vk, 0.75, 2, 3).unwrap(),
        )
        .unwrap();
        let c = multi_free_energy(&env, &pair, 6).unwrap();
        assert_relative_eq!(a.value() + b.value(), c.value(), epsilon = 1e-10);
    }

    #[test]
    fn slice_zero_env_consistency() {
        let env = zero_env(2, 512);
        let s = free_energy_slice(&env, 0.0, 2, 1.0, 1, 1, 0.5).unwrap();
        assert_relative_eq!(s, 0.0, epsilon = 1e-12);
        let whole = slice_reassembled(&env, 0.0, 2, 1.0, 1, 1).unwrap();
        assert_relative_eq!(whole.exp(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn slice_reassembly_matches_to_corner_cells() {
        // The gluing reproduces the sweep's nested trapezoids except for the
        // two O(h²) corner cells of the z-integral.
        let env = Environment::random_smooth(4, (0.0, 1.0), 1.0 / 512.0, 13).unwrap();
        for k in 1..=2 {
            let direct = single_free_energy(&env, 0.0, 3, 1.0, 1, Beta::one()).unwrap();
            let glued = slice_reassembled(&env, 0.0, 3, 1.0, 1, k).unwrap();
            assert_relative_eq!(direct.value(), glued, epsilon = 1e-5);
        }
    }

    #[test]
    fn busemann_monotonicity_on_the_grid() {
        // y ↦ f[(x₂,ℓ)→(y,m)] − f[(x₁,ℓ)→(y,m)] never decreases.
        let env = Environment::random_smooth(3, (0.0, 1.0), 1.0 / 512.0, 21).unwrap();
        let j1 = env.index_of(0.125).unwrap();
        let j2 = env.index_of(0.25).unwrap();
        let s1 = up_sweep(&env, j1, 3, 1, 1.0);
        let s2 = up_sweep(&env, j2, 3, 1, 1.0);
        let r1 = s1.row(1);
        let r2 = s2.row(1);
        let mut prev = f64::NEG_INFINITY;
        for j in j2 + 1..env.nodes() {
            let d = r2[j] - r1[j];
            assert!(d >= prev - 1e-9, "decrease at node {j}: {d} < {prev}");
            prev = d;
        }
    }

    #[test]
    fn shift_bound_holds_with_slack() {
        let env = Environment::random_smooth(3, (0.0, 1.0), 1.0 / 512.0, 22).unwrap();
        let f1 = single_free_energy(&env, 0.0, 3, 0.5, 1, Beta::one()).unwrap();
        let f2 = single_free_energy(&env, 0.0, 3, 0.875, 1, Beta::one()).unwrap();
        let fy1 = env.value(1, 0.5).unwrap();
        let fy2 = env.value(1, 0.875).unwrap();
        assert!(f1.value() <= f2.value() - fy1 + fy2 + 1e-9);
    }

    #[test]
    fn empty_polytope_returns_neg_infinity() {
        // Feasibility is checked by EndpointPair::new, so hand-build a pair
        // that only fails the polytope test.
        let pair = EndpointPair {
            starts: alloc::vec![
                crate::path::Endpoint::new(0.0, 1),
                crate::path::Endpoint::new(0.0, 1)
            ],
            ends: alloc::vec![
                crate::path::Endpoint::new(1.0, 1),
                crate::path::Endpoint::new(1.0, 1)
            ],
        };
        let env = zero_env(2, 16);
        let v = multi_free_energy(&env, &pair, 6).unwrap();
        assert!(v.is_neg_infinity());
    }
}
