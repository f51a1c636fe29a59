//! The suspension space under the constant height function, the
//! Bowen-Walters metric, and exact evaluation of the suspension flow.
//!
//! Points are pairs (base point, height in [0,1)) under the quotient
//! identification of (x, 1) with (f(x), 0). Distances are computed as the
//! minimum length over a structured family of chains of horizontal segments
//! (within a level, cost affine in the level) and vertical segments (along a
//! flow orbit, cost equal to elapsed time). Interior levels of a chain are
//! optimized in closed form: the objective is convex piecewise-linear in the
//! level vector, so optima occur at the endpoint heights or the seam levels
//! {0, 1}, which are enumerated exactly.

use serde::{Deserialize, Serialize};

use crate::space::{Point, System};
use crate::{Error, Result};

/// Canonicalization band at the 0/1 seam of the quotient.
pub const SEAM_EPS: f64 = 1e-12;

/// A point of the suspension space: base point plus height in [0, 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuspensionPoint {
    pub base: Point,
    pub height: f64,
}

impl SuspensionPoint {
    pub fn new(base: Point, height: f64) -> Self {
        Self { base, height }
    }

    /// Canonical representative: integer parts of the height are folded into
    /// base iterates, and heights within [`SEAM_EPS`] of 1 snap to
    /// (f(base), 0). Idempotent.
    pub fn canonicalize(&self, sys: &System) -> SuspensionPoint {
        let mut h = self.height;
        let mut base = self.base.clone();
        let n = h.floor();
        if n != 0.0 {
            base = sys.iterate_raw(&base, n as i64);
            h -= n;
        }
        if h >= 1.0 - SEAM_EPS {
            base = sys.iterate_raw(&base, 1);
            h = 0.0;
        }
        if h < 0.0 {
            h = 0.0;
        }
        SuspensionPoint { base, height: h }
    }

    /// Equality up to `tol` height slack, seam-aware.
    pub fn approx_eq(&self, sys: &System, other: &SuspensionPoint, tol: f64) -> bool {
        let p = self.canonicalize(sys);
        let q = other.canonicalize(sys);
        if sys.point_eq(&p.base, &q.base) && (p.height - q.height).abs() <= tol {
            return true;
        }
        // seam cases: (x, 1 - d) vs (f(x), d')
        if sys.point_eq(&sys.iterate_raw(&p.base, 1), &q.base)
            && ((1.0 - p.height) + q.height) <= tol
        {
            return true;
        }
        if sys.point_eq(&sys.iterate_raw(&q.base, 1), &p.base)
            && ((1.0 - q.height) + p.height) <= tol
        {
            return true;
        }
        false
    }

    pub fn display(&self, sys: &System) -> String {
        format!("({}, {:.6})", sys.point_id(&self.base), self.height)
    }
}

/// The level metric on the slice X x {t}:
/// `(1 - t) d(x, y) + t d(f(x), f(y))`.
pub fn level_metric(sys: &System, x: &Point, y: &Point, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidPseudoOrbit(format!(
            "level {t} outside [0, 1]"
        )));
    }
    let d0 = sys.dist(x, y);
    let d1 = sys.dist(&sys.iterate_raw(x, 1), &sys.iterate_raw(y, 1));
    Ok((1.0 - t) * d0 + t * d1)
}

/// Exact evaluation of the suspension flow with height function 1:
/// `phi_t(x, s) = (f^n(x), s + t - n)` with `n = floor(s + t)`.
pub fn suspension_eval(sys: &System, p: &SuspensionPoint, t: f64) -> SuspensionPoint {
    let raw = p.height + t;
    let n = raw.floor();
    SuspensionPoint {
        base: sys.iterate_raw(&p.base, n as i64),
        height: raw - n,
    }
    .canonicalize(sys)
}

/// One segment of a chain: horizontal within a level, or vertical along a
/// suspension orbit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChainSegment {
    Horizontal { level: f64, from: Point, to: Point },
    Vertical { from: SuspensionPoint, delta: f64 },
}

/// A chain between two suspension points; consecutive segments must share
/// endpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Chain {
    pub segments: Vec<ChainSegment>,
}

impl Chain {
    pub fn length(&self, sys: &System) -> Result<f64> {
        let mut total = 0.0;
        for seg in &self.segments {
            total += match seg {
                ChainSegment::Horizontal { level, from, to } => {
                    level_metric(sys, from, to, *level)?
                }
                ChainSegment::Vertical { delta, .. } => delta.abs(),
            };
        }
        Ok(total)
    }

    /// Checks that the chain really connects `start` to `end`, each segment
    /// departing where the previous one arrived.
    pub fn validate(&self, sys: &System, start: &SuspensionPoint, end: &SuspensionPoint) -> bool {
        let mut at = start.canonicalize(sys);
        for seg in &self.segments {
            match seg {
                ChainSegment::Horizontal { level, from, to } => {
                    let here = SuspensionPoint::new(from.clone(), *level).canonicalize(sys);
                    if !at.approx_eq(sys, &here, 1e-9) {
                        return false;
                    }
                    at = SuspensionPoint::new(to.clone(), *level).canonicalize(sys);
                }
                ChainSegment::Vertical { from, delta } => {
                    if !at.approx_eq(sys, &from.canonicalize(sys), 1e-9) {
                        return false;
                    }
                    at = suspension_eval(sys, from, *delta);
                }
            }
        }
        at.approx_eq(sys, &end.canonicalize(sys), 1e-9)
    }
}

/// Upper-bound evaluation of the Bowen-Walters metric by minimizing over the
/// structured chain family with at most `depth` segments. Non-increasing in
/// `depth`; vanishes exactly on canonically equal points. Symmetrized over
/// both search directions.
pub fn bw_distance(sys: &System, p: &SuspensionPoint, q: &SuspensionPoint, depth: usize) -> f64 {
    debug_assert!(depth >= 1, "chain depth must be at least 1");
    let p = p.canonicalize(sys);
    let q = q.canonicalize(sys);
    let a = bw_search(sys, &p, &q, depth);
    let b = bw_search(sys, &q, &p, depth);
    a.min(b)
}

fn bw_search(sys: &System, p: &SuspensionPoint, q: &SuspensionPoint, depth: usize) -> f64 {
    let t = p.height;
    let s = q.height;
    if sys.point_eq(&p.base, &q.base) && t == s {
        return 0.0;
    }
    let mut best = f64::INFINITY;

    // Pure vertical chains: flow time between points on the same orbit.
    let wrange = depth as i64 + 2;
    for w in -wrange..=wrange {
        if sys.point_eq(&sys.iterate_raw(&p.base, w), &q.base) {
            best = best.min((s + w as f64 - t).abs());
        }
    }

    // Chains with k horizontal hops (k + verticals <= depth, zero-length
    // verticals dropped).
    let kmax = (depth + 1) / 2;
    if kmax == 0 {
        return best;
    }
    let mut levels = vec![0.0, 1.0];
    for v in [t, s] {
        if !levels.iter().any(|l| (*l - v).abs() < 1e-15) {
            levels.push(v);
        }
    }
    let cands = hop_candidates(sys, p, q, depth);
    for k in 1..=kmax {
        for w0 in -1i64..=1 {
            let a1 = sys.iterate_raw(&p.base, w0);
            for &u1 in &levels {
                let cost0 = (u1 + w0 as f64 - t).abs();
                if cost0 < best {
                    hop_rec(sys, q, s, &cands, &levels, k, 1, &a1, u1, cost0, &mut best);
                }
            }
        }
    }
    best
}

/// Recursive enumeration over hop j..k: choose the arriving base of each
/// horizontal segment and the wrap count of the following vertical one.
#[allow(clippy::too_many_arguments)]
fn hop_rec(
    sys: &System,
    q: &SuspensionPoint,
    s: f64,
    cands: &[Point],
    levels: &[f64],
    k: usize,
    j: usize,
    a_j: &Point,
    u_j: f64,
    cost: f64,
    best: &mut f64,
) {
    if j == k {
        // final hop: the landing base is pinned by the closing wrap count
        for wk in -1i64..=1 {
            let b_k = sys.iterate_raw(&q.base, -wk);
            let c = cost + horizontal_cost(sys, a_j, &b_k, u_j) + (s + wk as f64 - u_j).abs();
            if c < *best {
                *best = c;
            }
        }
        return;
    }
    for b in cands {
        let h = horizontal_cost(sys, a_j, b, u_j);
        if cost + h >= *best {
            continue;
        }
        for w in -1i64..=1 {
            let a_next = sys.iterate_raw(b, w);
            for &u_next in levels {
                let c = cost + h + (u_next + w as f64 - u_j).abs();
                if c < *best {
                    hop_rec(sys, q, s, cands, levels, k, j + 1, &a_next, u_next, c, best);
                }
            }
        }
    }
}

fn horizontal_cost(sys: &System, a: &Point, b: &Point, u: f64) -> f64 {
    if sys.point_eq(a, b) {
        return 0.0;
    }
    (1.0 - u) * sys.dist(a, b) + u * sys.dist(&sys.iterate_raw(a, 1), &sys.iterate_raw(b, 1))
}

/// Intermediate bases available to chains: every point for finite spaces,
/// orbit segments of both endpoints for subshifts.
fn hop_candidates(
    sys: &System,
    p: &SuspensionPoint,
    q: &SuspensionPoint,
    depth: usize,
) -> Vec<Point> {
    match &sys.space {
        crate::space::Space::Finite(_) => sys.enumerate_candidates(),
        crate::space::Space::Subshift(_) => {
            let reach = depth as i64 + 1;
            let mut out: Vec<Point> = Vec::new();
            for anchor in [&p.base, &q.base] {
                for j in -reach..=reach {
                    let c = sys.iterate_raw(anchor, j);
                    if !out.iter().any(|o| sys.point_eq(o, &c)) {
                        out.push(c);
                    }
                }
            }
            out
        }
    }
}

/// The outcome of the three-case time alignment used when two suspension
/// points are within a quarter of each other: which integer correction to
/// the naive wrap count `w_k` aligns the times.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimeAlignment {
    /// 1, 2 or 3, in the order the cases are stated.
    pub case: u8,
    /// Correction added to the wrap count: 0, -1 or +1.
    pub correction: i64,
    /// The aligned integer `n_k = w_k + correction`.
    pub n: i64,
    /// The achieved deviation `|s_k + t_k - n_k - s_{k+1}|`.
    pub deviation: f64,
}

/// Decides which of the three time-alignment cases holds for a pseudo-orbit
/// step with entry height `s_k`, duration `t_k`, next height `s_next` and
/// wrap count `w_k = floor(s_k + t_k)`. The cases are mutually exclusive;
/// if none holds the quarter-closeness precondition was violated.
pub fn near_level_decompose(s_k: f64, t_k: f64, s_next: f64, w_k: i64) -> Result<TimeAlignment> {
    let w = w_k as f64;
    let d1 = (s_k + t_k - w - s_next).abs();
    let d2 = (1.0 + s_k + t_k - w - s_next).abs();
    let d3 = (1.0 + s_next - s_k - t_k + w).abs();
    if d1 < 0.25 {
        Ok(TimeAlignment {
            case: 1,
            correction: 0,
            n: w_k,
            deviation: d1,
        })
    } else if d2 < 0.25 {
        Ok(TimeAlignment {
            case: 2,
            correction: -1,
            n: w_k - 1,
            deviation: d2,
        })
    } else if d3 < 0.25 {
        Ok(TimeAlignment {
            case: 3,
            correction: 1,
            n: w_k + 1,
            deviation: d3,
        })
    } else {
        Err(Error::AlignmentFailed(format!(
            "deviations {d1:.4}, {d2:.4}, {d3:.4}"
        )))
    }
}

/// A flow on a suspension space: the plain suspension flow or the singular
/// one. All values are immutable; evaluation is pure.
pub trait Flow {
    fn system(&self) -> &System;
    fn evolve(&self, p: &SuspensionPoint, t: f64) -> SuspensionPoint;
    /// Distance in the Bowen-Walters metric at this flow's working depth.
    fn distance(&self, p: &SuspensionPoint, q: &SuspensionPoint) -> f64;
    fn distance_at_depth(&self, p: &SuspensionPoint, q: &SuspensionPoint, depth: usize) -> f64 {
        bw_distance(self.system(), p, q, depth)
    }
}

/// The suspension flow of a base system under height function 1.
#[derive(Debug, Clone)]
pub struct SuspensionFlow<'a> {
    sys: &'a System,
    depth: usize,
}

impl<'a> SuspensionFlow<'a> {
    pub fn new(sys: &'a System) -> Self {
        Self { sys, depth: 3 }
    }

    pub fn with_depth(sys: &'a System, depth: usize) -> Self {
        Self { sys, depth }
    }
}

impl Flow for SuspensionFlow<'_> {
    fn system(&self) -> &System {
        self.sys
    }

    fn evolve(&self, p: &SuspensionPoint, t: f64) -> SuspensionPoint {
        suspension_eval(self.sys, p, t)
    }

    fn distance(&self, p: &SuspensionPoint, q: &SuspensionPoint) -> f64 {
        bw_distance(self.sys, p, q, self.depth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Point, System, Word};

    fn swap() -> System {
        System::swap()
    }

    #[test]
    fn level_metric_endpoints() {
        let sys = swap();
        let a = Point::finite(0);
        let b = Point::finite(1);
        assert_eq!(level_metric(&sys, &a, &b, 0.0).unwrap(), 1.0);
        assert_eq!(level_metric(&sys, &a, &b, 1.0).unwrap(), 1.0);
        assert_eq!(level_metric(&sys, &a, &b, 0.25).unwrap(), 1.0);
        assert!(level_metric(&sys, &a, &b, 1.5).is_err());
    }

    #[test]
    fn eval_basics() {
        let sys = swap();
        let a = Point::finite(0);
        let p = SuspensionPoint::new(a.clone(), 0.5);
        let same = suspension_eval(&sys, &p, 0.0);
        assert!(same.approx_eq(&sys, &p, 0.0));
        // one unit of time at height 1/2 applies the base map exactly
        let q = suspension_eval(&sys, &p, 1.0);
        assert!(sys.point_eq(&q.base, &Point::finite(1)));
        assert_eq!(q.height, 0.5);
        // floor(0.5 + 1.7) = 2
        let r = suspension_eval(&sys, &p, 1.7);
        assert!(sys.point_eq(&r.base, &a));
        assert!((r.height - 0.2).abs() < 1e-12);
    }

    #[test]
    fn canonicalization_idempotent_and_seam() {
        let sys = swap();
        let p = SuspensionPoint::new(Point::finite(0), 1.0 - 1e-13);
        let c = p.canonicalize(&sys);
        assert!(sys.point_eq(&c.base, &Point::finite(1)));
        assert_eq!(c.height, 0.0);
        let cc = c.canonicalize(&sys);
        assert!(sys.point_eq(&c.base, &cc.base));
        assert_eq!(c.height, cc.height);
    }

    #[test]
    fn quotient_identification_has_distance_zero() {
        let sys = swap();
        let p = SuspensionPoint::new(Point::finite(0), 1.0);
        let q = SuspensionPoint::new(Point::finite(1), 0.0);
        assert_eq!(bw_distance(&sys, &p, &q, 4), 0.0);
    }

    #[test]
    fn swap_suspension_antipodal_distance() {
        let sys = swap();
        let p = SuspensionPoint::new(Point::finite(0), 0.0);
        let q = SuspensionPoint::new(Point::finite(1), 0.0);
        let d = bw_distance(&sys, &p, &q, 4);
        assert!((d - 1.0).abs() < 1e-9, "got {d}");
    }

    #[test]
    fn bw_distance_monotone_and_stable_in_depth() {
        let sys = swap();
        let mut heights = Vec::new();
        for i in 0..10 {
            heights.push(i as f64 * 0.1);
        }
        for &hp in &heights {
            for &hq in &heights {
                for bp in 0..2 {
                    for bq in 0..2 {
                        let p = SuspensionPoint::new(Point::finite(bp), hp);
                        let q = SuspensionPoint::new(Point::finite(bq), hq);
                        let d4 = bw_distance(&sys, &p, &q, 4);
                        let d5 = bw_distance(&sys, &p, &q, 5);
                        let d8 = bw_distance(&sys, &p, &q, 8);
                        assert!(d5 <= d4 + 1e-12);
                        assert!(d8 <= d5 + 1e-12);
                        assert!((d8 - d4).abs() < 1e-9, "depth instability at {hp},{hq}");
                    }
                }
            }
        }
    }

    #[test]
    fn bw_upper_bound_sound_for_explicit_chains() {
        let sys = swap();
        let p = SuspensionPoint::new(Point::finite(0), 0.2);
        let q = SuspensionPoint::new(Point::finite(1), 0.6);
        let chain = Chain {
            segments: vec![
                ChainSegment::Vertical {
                    from: p.clone(),
                    delta: 0.4,
                },
                ChainSegment::Horizontal {
                    level: 0.6,
                    from: Point::finite(0),
                    to: Point::finite(1),
                },
            ],
        };
        assert!(chain.validate(&sys, &p, &q));
        let len = chain.length(&sys).unwrap();
        let d = bw_distance(&sys, &p, &q, 4);
        assert!(d <= len + 1e-12, "{d} > {len}");
    }

    #[test]
    fn bw_distance_on_shift_words() {
        let sys = System::full_2_shift(12, 4);
        let x = Point::word(Word::periodic(&[0]).unwrap());
        let y = Point::word(Word::periodic(&[0, 1]).unwrap());
        let p = SuspensionPoint::new(x.clone(), 0.5);
        let q = SuspensionPoint::new(y.clone(), 0.5);
        // level-1/2 horizontal: (d(x,y) + d(fx, fy)) / 2
        let expect = 0.5 * sys.dist(&x, &y)
            + 0.5
                * sys.dist(
                    &sys.iterate(&x, 1).unwrap(),
                    &sys.iterate(&y, 1).unwrap(),
                );
        let d = bw_distance(&sys, &p, &q, 4);
        assert!(d <= expect + 1e-12);
        assert!(d > 0.0);
    }

    #[test]
    fn group_law_random_triples() {
        let sys = System::full_2_shift(10, 3);
        let cands = sys.enumerate_candidates();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rand01 = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for i in 0..200 {
            let p = SuspensionPoint::new(cands[i % cands.len()].clone(), rand01());
            let s = (rand01() - 0.5) * 40.0;
            let t = (rand01() - 0.5) * 40.0;
            let a = suspension_eval(&sys, &suspension_eval(&sys, &p, s), t);
            let b = suspension_eval(&sys, &p, s + t);
            assert!(a.approx_eq(&sys, &b, 1e-12));
        }
    }

    #[test]
    fn alignment_cases() {
        // aligned times: case 1, correction 0
        let a = near_level_decompose(0.1, 2.0, 0.1, 2).unwrap();
        assert_eq!((a.case, a.correction), (1, 0));
        assert!(a.deviation < 1e-15);
        // wrap deficit: case 3, correction +1
        let c = near_level_decompose(0.9, 2.0, 0.0, 2).unwrap();
        assert_eq!((c.case, c.correction), (3, 1));
        assert!((c.deviation - 0.1).abs() < 1e-12);
        // wrap excess: case 2, correction -1
        let b = near_level_decompose(0.05, 2.0, 0.9, 2).unwrap();
        assert_eq!((b.case, b.correction), (2, -1));
        assert!((b.deviation - 0.15).abs() < 1e-12);
        // none holds
        assert!(near_level_decompose(0.5, 2.5, 0.5, 3).is_err());
    }

    #[test]
    fn bw_symmetry_and_triangle_on_grid() {
        let sys = swap();
        let mut pts = Vec::new();
        for b in 0..2 {
            for i in 0..5 {
                pts.push(SuspensionPoint::new(Point::finite(b), i as f64 * 0.2));
            }
        }
        let n = pts.len();
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                d[i][j] = bw_distance(&sys, &pts[i], &pts[j], 4);
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!((d[i][j] - d[j][i]).abs() < 1e-9);
                for k in 0..n {
                    assert!(d[i][k] <= d[i][j] + d[j][k] + 1e-9);
                }
            }
        }
    }
}
