//! Path coordinates and endpoint geometry.
//!
//! An up/right path from `(x,ℓ)` to `(y,m)` is a non-increasing càdlàg level
//! function; it is identified with its jump times `x ≤ t_ℓ ≤ … ≤ t_{m+1} ≤ y`
//! (`t_j` = time the path drops below level `j`), with convention slots
//! `t_{ℓ+1} = x`, `t_m = y`. Down/right paths are the non-decreasing
//! analogue. Families of mutually non-crossing paths are cut out by the
//! linear inequalities `t_{i,j₁} ≤ t_{i+1,j₂+1}` for `j₁ ≥ j₂`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::env::Environment;
use crate::error::{Error, Result};

/// A point `(pos, level)` in `ℝ × ⟦1,n⟧`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub pos: f64,
    pub level: usize,
}

impl Endpoint {
    pub fn new(pos: f64, level: usize) -> Self {
        Endpoint { pos, level }
    }
}

/// Simplex coordinates of one up/right path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCoords {
    pub x: f64,
    pub y: f64,
    pub ell: usize,
    pub m: usize,
    /// `(t_ℓ, …, t_{m+1})`, non-decreasing, inside `[x, y]`.
    pub times: Vec<f64>,
}

impl PathCoords {
    pub fn new(x: f64, y: f64, ell: usize, m: usize, times: Vec<f64>) -> Result<Self> {
        if !(x < y) {
            return Err(Error::Range(format!("need x < y, got {x} >= {y}")));
        }
        if m < 1 || ell < m {
            return Err(Error::Range(format!("need ℓ >= m >= 1, got ℓ={ell}, m={m}")));
        }
        if times.len() != ell - m {
            return Err(Error::Range(format!(
                "expected {} jump times, got {}",
                ell - m,
                times.len()
            )));
        }
        let mut prev = x;
        for &t in &times {
            if !(t >= prev) || t > y {
                return Err(Error::Range(format!(
                    "jump times must satisfy x <= t_ℓ <= … <= t_(m+1) <= y (violated at {t})"
                )));
            }
            prev = t;
        }
        Ok(PathCoords { x, y, ell, m, times })
    }

    /// `t_j` with the convention slots `t_{ℓ+1} = x`, `t_m = y`.
    pub fn time(&self, j: usize) -> f64 {
        if j == self.m {
            self.y
        } else if j == self.ell + 1 {
            self.x
        } else {
            self.times[self.ell - j]
        }
    }

    /// The càdlàg level function: `π(t) = j` on `(t_{j+1}, t_j)`.
    pub fn level_at(&self, t: f64) -> usize {
        self.m + self.times.iter().filter(|&&tj| t < tj).count()
    }
}

/// Simplex coordinates of one down/right path from `(x, m)` to `(y, ℓ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DownRightPathCoords {
    pub x: f64,
    pub y: f64,
    pub m: usize,
    pub ell: usize,
    /// `(t_m, …, t_{ℓ-1})`, non-decreasing, inside `[x, y]`.
    pub times: Vec<f64>,
}

impl DownRightPathCoords {
    pub fn new(x: f64, y: f64, m: usize, ell: usize, times: Vec<f64>) -> Result<Self> {
        if !(x < y) {
            return Err(Error::Range(format!("need x < y, got {x} >= {y}")));
        }
        if m < 1 || ell < m {
            return Err(Error::Range(format!("need ℓ >= m >= 1, got ℓ={ell}, m={m}")));
        }
        if times.len() != ell - m {
            return Err(Error::Range(format!(
                "expected {} jump times, got {}",
                ell - m,
                times.len()
            )));
        }
        let mut prev = x;
        for &t in &times {
            if !(t >= prev) || t > y {
                return Err(Error::Range(String::from(
                    "jump times must be non-decreasing inside [x, y]",
                )));
            }
            prev = t;
        }
        Ok(DownRightPathCoords { x, y, m, ell, times })
    }

    /// `t_j` with the convention slots `t_{m-1} = x`, `t_ℓ = y`.
    pub fn time(&self, j: usize) -> f64 {
        if j + 1 == self.m {
            self.x
        } else if j == self.ell {
            self.y
        } else {
            self.times[j - self.m]
        }
    }
}

/// Energy `f(π) = Σ_{j=m}^{ℓ} f_j(t_j) − f_j(t_{j+1})` of an up/right path.
pub fn path_energy(env: &Environment, path: &PathCoords) -> Result<f64> {
    if path.ell > env.n() {
        return Err(Error::Range(format!(
            "path level {} exceeds curve count {}",
            path.ell,
            env.n()
        )));
    }
    let mut total = 0.0;
    for j in path.m..=path.ell {
        total += env.value(j, path.time(j))? - env.value(j, path.time(j + 1))?;
    }
    Ok(total)
}

/// Energy `f(ρ) = Σ_{j=m}^{ℓ} f_j(t_j) − f_j(t_{j-1})` of a down/right path.
pub fn down_path_energy(env: &Environment, path: &DownRightPathCoords) -> Result<f64> {
    if path.ell > env.n() {
        return Err(Error::Range(format!(
            "path level {} exceeds curve count {}",
            path.ell,
            env.n()
        )));
    }
    let mut total = 0.0;
    for j in path.m..=path.ell {
        total += env.value(j, path.time(j))? - env.value(j, path.time(j - 1))?;
    }
    Ok(total)
}

/// The named endpoint families `V_k(x)`, `V'_k(x)`, `U_{n,k}(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialEndpoints {
    /// `V_k(x) = ((x,1), …, (x,k))`
    Vk,
    /// `V'_k(x) = ((x,2), …, (x,k+1))`
    Vpk,
    /// `U_{n,k}(x) = ((x,n-k+1), …, (x,n))`
    Unk,
}

pub fn special_endpoints(kind: SpecialEndpoints, x: f64, k: usize, n: usize) -> Result<Vec<Endpoint>> {
    if k < 1 || k > n {
        return Err(Error::Range(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    let levels: Vec<usize> = match kind {
        SpecialEndpoints::Vk => (1..=k).collect(),
        SpecialEndpoints::Vpk => {
            if k + 1 > n {
                return Err(Error::Range(format!("V'_{k} needs k+1 <= n = {n}")));
            }
            (2..=k + 1).collect()
        }
        SpecialEndpoints::Unk => (n - k + 1..=n).collect(),
    };
    Ok(levels.into_iter().map(|l| Endpoint::new(x, l)).collect())
}

/// One side of a linear constraint over the stacked jump-time coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoordRef {
    Var(usize),
    Const(f64),
}

/// The inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub lhs: CoordRef,
    pub rhs: CoordRef,
}

/// Which path and which paper subscript `j` a stacked coordinate carries;
/// the coordinate is the time the path drops below level `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoordInfo {
    pub path: usize,
    pub level: usize,
}

/// Start/end sequences connectable by non-crossing up/right paths.
///
/// `starts[i]` is `(x_i, ℓ_i)` and `ends[i]` is `(y_i, m_i)`; path `i` runs
/// strictly below path `i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointPair {
    pub starts: Vec<Endpoint>,
    pub ends: Vec<Endpoint>,
}

impl EndpointPair {
    pub fn new(starts: Vec<Endpoint>, ends: Vec<Endpoint>) -> Result<Self> {
        if starts.is_empty() || starts.len() != ends.len() {
            return Err(Error::Range(String::from(
                "endpoint pair needs equally many non-empty starts and ends",
            )));
        }
        for (u, v) in starts.iter().zip(&ends) {
            if !(u.pos < v.pos) {
                return Err(Error::Range(format!("need x_i < y_i, got {} >= {}", u.pos, v.pos)));
            }
            if u.level < v.level || v.level < 1 {
                return Err(Error::Range(format!(
                    "need ℓ_i >= m_i >= 1, got ℓ={}, m={}",
                    u.level, v.level
                )));
            }
        }
        for w in [&starts, &ends] {
            for pair in w.windows(2) {
                if !(pair[0].pos <= pair[1].pos) {
                    return Err(Error::Range(String::from(
                        "endpoint positions must be non-decreasing across paths",
                    )));
                }
            }
        }
        let pair = EndpointPair { starts, ends };
        if !polytope_bounds(&pair).feasible {
            return Err(Error::Range(String::from(
                "endpoint pair admits no non-crossing path family",
            )));
        }
        Ok(pair)
    }

    pub fn k(&self) -> usize {
        self.starts.len()
    }

    /// Largest level referenced by the pair.
    pub fn max_level(&self) -> usize {
        self.starts.iter().map(|e| e.level).max().unwrap_or(0)
    }

    /// Stacked coordinates: path `i` contributes `t_{i,ℓ_i}, …, t_{i,m_i+1}`
    /// in that (time-increasing) order.
    pub fn coords(&self) -> Vec<CoordInfo> {
        let mut out = Vec::new();
        for (i, (u, v)) in self.starts.iter().zip(&self.ends).enumerate() {
            for j in (v.level + 1..=u.level).rev() {
                out.push(CoordInfo { path: i, level: j });
            }
        }
        out
    }

    /// Offset of path `i`'s coordinate block in the stacked vector.
    fn offset(&self, i: usize) -> usize {
        (0..i)
            .map(|p| self.starts[p].level - self.ends[p].level)
            .sum()
    }

    /// Coordinate slot `t_{i,j}`: a variable for `m_i+1 ≤ j ≤ ℓ_i`, the
    /// convention constants `y_i` at `j = m_i` and `x_i` at `j = ℓ_i + 1`.
    fn slot(&self, i: usize, j: usize) -> CoordRef {
        let (ell, m) = (self.starts[i].level, self.ends[i].level);
        if j == m {
            CoordRef::Const(self.ends[i].pos)
        } else if j == ell + 1 {
            CoordRef::Const(self.starts[i].pos)
        } else {
            debug_assert!(j > m && j <= ell);
            CoordRef::Var(self.offset(i) + (ell - j))
        }
    }
}

/// The full constraint list of `Q[U → V]` over the stacked coordinates:
/// per-path simplex ordering plus, for each adjacent pair `(i, i+1)` and all
/// `j₁ ∈ ⟦m_i, ℓ_i⟧`, `j₂ ∈ ⟦m_{i+1}, ℓ_{i+1}⟧` with `j₁ ≥ j₂`, the
/// non-crossing inequality `t_{i,j₁} ≤ t_{i+1,j₂+1}`.
pub fn noncrossing_inequalities(pair: &EndpointPair) -> Vec<Constraint> {
    let mut out = Vec::new();
    for i in 0..pair.k() {
        let (ell, m) = (pair.starts[i].level, pair.ends[i].level);
        if ell > m {
            // x_i ≤ t_ℓ ≤ … ≤ t_{m+1} ≤ y_i
            out.push(Constraint {
                lhs: CoordRef::Const(pair.starts[i].pos),
                rhs: pair.slot(i, ell),
            });
            for j in (m + 2..=ell).rev() {
                out.push(Constraint { lhs: pair.slot(i, j), rhs: pair.slot(i, j - 1) });
            }
            out.push(Constraint {
                lhs: pair.slot(i, m + 1),
                rhs: CoordRef::Const(pair.ends[i].pos),
            });
        }
    }
    for i in 0..pair.k().saturating_sub(1) {
        let (ell1, m1) = (pair.starts[i].level, pair.ends[i].level);
        let (ell2, m2) = (pair.starts[i + 1].level, pair.ends[i + 1].level);
        for j1 in m1..=ell1 {
            for j2 in m2..=ell2 {
                if j1 >= j2 {
                    out.push(Constraint {
                        lhs: pair.slot(i, j1),
                        rhs: pair.slot(i + 1, j2 + 1),
                    });
                }
            }
        }
    }
    out
}

/// Per-coordinate bounds of the non-crossing polytope after propagating the
/// constraint list to a fixpoint, plus the surviving var-var edges.
#[derive(Debug, Clone)]
pub struct PolytopeBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// `(u, v)` encodes `t_u ≤ t_v`.
    pub edges: Vec<(usize, usize)>,
    pub feasible: bool,
}

const PIN_TOL: f64 = 1e-12;

impl PolytopeBounds {
    /// Coordinates forced to a single value.
    pub fn pinned(&self, v: usize) -> bool {
        self.upper[v] - self.lower[v] <= PIN_TOL
    }

    pub fn free_dim(&self) -> usize {
        (0..self.lower.len()).filter(|&v| !self.pinned(v)).count()
    }
}

/// Propagates the constraint list of `pair` into box bounds per coordinate.
///
/// The constraints are differences with zero offsets, so the polytope is
/// non-empty exactly when every propagated lower bound stays below the
/// corresponding upper bound.
pub fn polytope_bounds(pair: &EndpointPair) -> PolytopeBounds {
    let coords = pair.coords();
    let nv = coords.len();
    let mut lower = Vec::with_capacity(nv);
    let mut upper = Vec::with_capacity(nv);
    for c in &coords {
        lower.push(pair.starts[c.path].pos);
        upper.push(pair.ends[c.path].pos);
    }
    let mut edges = Vec::new();
    let mut feasible = true;
    for c in noncrossing_inequalities(pair) {
        match (c.lhs, c.rhs) {
            (CoordRef::Var(u), CoordRef::Var(v)) => edges.push((u, v)),
            (CoordRef::Var(u), CoordRef::Const(b)) => upper[u] = upper[u].min(b),
            (CoordRef::Const(a), CoordRef::Var(v)) => lower[v] = lower[v].max(a),
            (CoordRef::Const(a), CoordRef::Const(b)) => feasible &= a <= b + PIN_TOL,
        }
    }
    // Relax to fixpoint; the edge set is acyclic so |V| rounds suffice.
    for _ in 0..=nv {
        let mut changed = false;
        for &(u, v) in &edges {
            if lower[u] > lower[v] {
                lower[v] = lower[u];
                changed = true;
            }
            if upper[v] < upper[u] {
                upper[u] = upper[v];
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    feasible &= (0..nv).all(|v| lower[v] <= upper[v] + PIN_TOL);
    PolytopeBounds { lower, upper, edges, feasible }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{CurveSource, Environment, TestFamily};
    use approx::assert_relative_eq;

    fn env_from(f: impl Fn(usize, f64) -> f64, n: usize) -> Environment {
        Environment::build(n, (0.0, 1.0), 1.0 / 64.0, CurveSource::Callable(&f), false).unwrap()
    }

    #[test]
    fn energy_of_zero_environment_vanishes() {
        let env = Environment::build(
            2,
            (0.0, 1.0),
            0.25,
            CurveSource::Family(TestFamily::Zero),
            false,
        )
        .unwrap();
        let p = PathCoords::new(0.0, 1.0, 2, 1, alloc::vec![0.5]).unwrap();
        assert_eq!(path_energy(&env, &p).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_path_is_a_curve_increment() {
        // ℓ = m on f₂(t) = t²: energy f₂(1) − f₂(0) = 1.
        let env = env_from(|i, t| if i == 2 { t * t } else { 0.0 }, 2);
        let p = PathCoords::new(0.0, 1.0, 2, 2, Vec::new()).unwrap();
        assert_relative_eq!(path_energy(&env, &p).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn one_jump_energy_by_direct_substitution() {
        // f = (t, 0), jump at 0.5: f₂(0.5)−f₂(0) + f₁(1)−f₁(0.5) = 0.5.
        let env = env_from(|i, t| if i == 1 { t } else { 0.0 }, 2);
        let p = PathCoords::new(0.0, 1.0, 2, 1, alloc::vec![0.5]).unwrap();
        assert_relative_eq!(path_energy(&env, &p).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn down_path_energy_cases() {
        let env = env_from(|i, t| if i == 2 { t } else { 0.0 }, 2);
        // m = ℓ: f_m(y) − f_m(x).
        let flat = DownRightPathCoords::new(0.0, 1.0, 2, 2, Vec::new()).unwrap();
        assert_relative_eq!(down_path_energy(&env, &flat).unwrap(), 1.0, epsilon = 1e-12);
        // f = (0, t), jump at 0.25: f₁(0.25)−f₁(0) + f₂(1)−f₂(0.25) = 0.75.
        let p = DownRightPathCoords::new(0.0, 1.0, 1, 2, alloc::vec![0.25]).unwrap();
        assert_relative_eq!(down_path_energy(&env, &p).unwrap(), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn path_coords_round_trip_through_levels() {
        let p = PathCoords::new(0.0, 1.0, 4, 1, alloc::vec![0.2, 0.5, 0.9]).unwrap();
        // Recover each t_j as inf{t : π(t) ≤ j−1} on a fine sweep.
        for j in 2..=4 {
            let tj = p.time(j);
            assert!(p.level_at(tj) <= j - 1);
            assert!(p.level_at(tj - 1e-9) >= j);
        }
        assert_eq!(p.level_at(1.0), 1);
        assert_eq!(p.level_at(0.0), 4);
    }

    #[test]
    fn special_endpoint_families() {
        let v1 = special_endpoints(SpecialEndpoints::Vk, 0.3, 1, 3).unwrap();
        assert_eq!(v1, alloc::vec![Endpoint::new(0.3, 1)]);
        let u = special_endpoints(SpecialEndpoints::Unk, 0.0, 2, 3).unwrap();
        assert_eq!(u, alloc::vec![Endpoint::new(0.0, 2), Endpoint::new(0.0, 3)]);
        let vp = special_endpoints(SpecialEndpoints::Vpk, 0.0, 2, 4).unwrap();
        assert_eq!(vp, alloc::vec![Endpoint::new(0.0, 2), Endpoint::new(0.0, 3)]);
        assert!(special_endpoints(SpecialEndpoints::Vk, 0.0, 4, 3).is_err());
    }

    #[test]
    fn single_path_constraints_are_the_simplex_ordering() {
        let pair = EndpointPair::new(
            alloc::vec![Endpoint::new(0.0, 3)],
            alloc::vec![Endpoint::new(1.0, 1)],
        )
        .unwrap();
        let cs = noncrossing_inequalities(&pair);
        // x ≤ t₃, t₃ ≤ t₂, t₂ ≤ y.
        assert_eq!(cs.len(), 3);
        assert!(cs.iter().all(|c| matches!(
            (c.lhs, c.rhs),
            (CoordRef::Const(_), CoordRef::Var(_))
                | (CoordRef::Var(_), CoordRef::Var(_))
                | (CoordRef::Var(_), CoordRef::Const(_))
        )));
    }

    #[test]
    fn packed_pair_is_zero_dimensional() {
        // U_{2,2}(0) → V₂(1) with n = 2 pins every coordinate.
        let pair = EndpointPair::new(
            special_endpoints(SpecialEndpoints::Unk, 0.0, 2, 2).unwrap(),
            special_endpoints(SpecialEndpoints::Vk, 1.0, 2, 2).unwrap(),
        )
        .unwrap();
        let b = polytope_bounds(&pair);
        assert!(b.feasible);
        assert_eq!(b.free_dim(), 0);
    }

    #[test]
    fn two_one_jump_paths_order_their_jumps() {
        // U_{3,2}(0) → V₂(1): the only cross constraint is t_{1,2} ≤ t_{2,3}.
        let pair = EndpointPair::new(
            special_endpoints(SpecialEndpoints::Unk, 0.0, 2, 3).unwrap(),
            special_endpoints(SpecialEndpoints::Vk, 1.0, 2, 3).unwrap(),
        )
        .unwrap();
        let cs = noncrossing_inequalities(&pair);
        let cross: Vec<_> = cs
            .iter()
            .filter(|c| matches!((c.lhs, c.rhs), (CoordRef::Var(0), CoordRef::Var(1))))
            .collect();
        assert_eq!(cross.len(), 1);
        assert_eq!(polytope_bounds(&pair).free_dim(), 2);
    }

    #[test]
    fn membership_matches_brute_force_noncrossing() {
        // Rejection sampling: the constraint list and the direct step-path
        // comparison must agree on membership.
        let pair = EndpointPair::new(
            alloc::vec![Endpoint::new(0.0, 3), Endpoint::new(0.1, 3)],
            alloc::vec![Endpoint::new(0.9, 1), Endpoint::new(1.0, 2)],
        )
        .unwrap();
        let cs = noncrossing_inequalities(&pair);
        let mut rng = crate::rng::ReplicaRng::new(99, 0);
        let mut agreements = 0usize;
        let mut members = 0usize;
        for _ in 0..10_000 {
            // Draw per-path sorted time vectors inside [x_i, y_i].
            let mut t1 = [0.0; 2];
            let mut t2 = [0.0; 1];
            for v in t1.iter_mut() {
                *v = 0.9 * rng.uniform();
            }
            t1.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            t2[0] = 0.1 + 0.9 * rng.uniform();
            let stacked = [t1[0], t1[1], t2[0]];
            let sat = cs.iter().all(|c| {
                let val = |r: CoordRef| match r {
                    CoordRef::Var(v) => stacked[v],
                    CoordRef::Const(c) => c,
                };
                val(c.lhs) <= val(c.rhs)
            });
            let p1 = PathCoords::new(0.0, 0.9, 3, 1, alloc::vec![t1[0], t1[1]]).unwrap();
            let p2 = PathCoords::new(0.1, 1.0, 3, 2, alloc::vec![t2[0]]).unwrap();
            let direct = noncrossing_direct(&p1, &p2);
            if sat == direct {
                agreements += 1;
            }
            if direct {
                members += 1;
            }
        }
        assert_eq!(agreements, 10_000);
        assert!(members > 100, "degenerate sampling: {members}");
    }

    /// π₁ ≺ π₂ checked on every constancy interval of the pair.
    fn noncrossing_direct(p1: &PathCoords, p2: &PathCoords) -> bool {
        let lo = p1.x.max(p2.x);
        let hi = p1.y.min(p2.y);
        if !(lo < hi) {
            return true;
        }
        let mut brk = alloc::vec![lo, hi];
        brk.extend(p1.times.iter().chain(&p2.times).copied().filter(|&t| t > lo && t < hi));
        brk.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        brk.windows(2).all(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            p1.level_at(mid) < p2.level_at(mid)
        }) && p1.level_at(lo) < p2.level_at(lo)
    }

    #[test]
    fn infeasible_pair_is_rejected() {
        // Two paths forced through the same fully packed corridor at
        // incompatible levels: start (0,1),(0,1) ends (1,1),(1,1) cannot be
        // strictly ordered on a single level.
        let r = EndpointPair::new(
            alloc::vec![Endpoint::new(0.0, 1), Endpoint::new(0.0, 1)],
            alloc::vec![Endpoint::new(1.0, 1), Endpoint::new(1.0, 1)],
        );
        assert!(r.is_err());
    }
}
