//! Shadowing verdicts and the constructive shadowing pipelines: brute-force
//! two-sided limit shadowing searches for maps, the lift of base shadowing to
//! the suspension flow, the projection back to the base, gap elimination,
//! finite shadowing and the transitivity machinery.
//!
//! All asymptotic claims are verified as finite-horizon tail bounds: the
//! maximum error over the last quarter of the realized horizon must stay
//! below the tolerance and below half the maximum over the second quarter
//! (decay evidence). Verdicts record the search domain so that negative
//! results are statements about the searched family.

use serde::{Deserialize, Serialize};

use crate::pseudo_orbit::{FlowPseudoOrbit, MapPseudoOrbit, Segment};
use crate::reparam::{remove_gap, GapSpec, Reparam};
use crate::space::{LimitKind, Point, Space, System};
use crate::suspension::{near_level_decompose, Flow, SuspensionPoint};
use crate::{Error, Result};

/// Outcome kind of a shadowing search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowStatus {
    Shadowed,
    ShadowedWithGap,
    NotShadowedWithinSearch,
}

/// Witness point of a shadowing verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Map(Point),
    Flow(SuspensionPoint),
}

/// Per-candidate floor recorded during a search; supports negative verdicts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub candidate: String,
    pub gap: f64,
    pub tail_error: f64,
}

/// Description of what was searched: candidate count, gap bound, and the
/// per-candidate floors when the verdict is negative.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchDomain {
    pub description: String,
    pub candidates: usize,
    pub gap_bound: f64,
    pub records: Vec<CandidateRecord>,
}

/// Outcome of a shadowing search: the witness, its reparametrization (flows),
/// the gap, and the tail-error trace supporting the verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShadowVerdict {
    pub status: ShadowStatus,
    pub witness: Option<Witness>,
    pub reparam: Option<Reparam>,
    pub gap: Option<GapSpec>,
    /// Samples (signed index or time, error).
    pub trace: Vec<(f64, f64)>,
    pub tol: f64,
    pub search_domain: SearchDomain,
}

/// Tail statistics of one verdict trace.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailStats {
    pub q2_max: f64,
    pub q4_max: f64,
    pub ok: bool,
}

fn branch_tail(mut samples: Vec<(f64, f64)>, tol: f64) -> TailStats {
    if samples.is_empty() {
        return TailStats {
            q2_max: 0.0,
            q4_max: 0.0,
            ok: true,
        };
    }
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let range = samples.last().unwrap().0;
    if range <= 0.0 {
        let worst = samples.iter().map(|(_, e)| *e).fold(0.0_f64, f64::max);
        return TailStats {
            q2_max: worst,
            q4_max: worst,
            ok: worst <= tol,
        };
    }
    let max_in = |lo: f64, hi: f64| -> Option<f64> {
        let mut m: Option<f64> = None;
        for (p, e) in &samples {
            if *p >= lo && *p <= hi {
                m = Some(m.map_or(*e, |v: f64| v.max(*e)));
            }
        }
        m
    };
    let q4 = max_in(0.75 * range, range).unwrap_or(0.0);
    let q2 = max_in(0.25 * range, 0.5 * range)
        .or_else(|| max_in(0.0, 0.5 * range))
        .unwrap_or(0.0);
    TailStats {
        q2_max: q2,
        q4_max: q4,
        ok: q4 <= tol && q4 <= 0.5 * q2 + 1e-12,
    }
}

/// Two-sided tail criterion over a signed trace: both branches must show the
/// last-quarter bound and the quarter-over-quarter decay.
pub fn tail_criterion(trace: &[(f64, f64)], tol: f64) -> TailStats {
    let past: Vec<(f64, f64)> = trace
        .iter()
        .filter(|(p, _)| *p <= 0.0)
        .map(|(p, e)| (-p, *e))
        .collect();
    let future: Vec<(f64, f64)> = trace.iter().filter(|(p, _)| *p >= 0.0).cloned().collect();
    let a = branch_tail(past, tol);
    let b = branch_tail(future, tol);
    TailStats {
        q2_max: a.q2_max.max(b.q2_max),
        q4_max: a.q4_max.max(b.q4_max),
        ok: a.ok && b.ok,
    }
}

/// One-sided (future) tail criterion.
pub fn tail_criterion_one_sided(trace: &[(f64, f64)], tol: f64) -> TailStats {
    let future: Vec<(f64, f64)> = trace.iter().filter(|(p, _)| *p >= 0.0).cloned().collect();
    branch_tail(future, tol)
}

// ---------------------------------------------------------------------------
// Map-level two-sided limit shadowing with gap
// ---------------------------------------------------------------------------

/// Parameters of the brute-force map search.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MapSearchParams {
    pub gap_bound: i64,
    pub tol: f64,
    pub horizon: i64,
}

impl Default for MapSearchParams {
    fn default() -> Self {
        Self {
            gap_bound: 4,
            tol: 0.1,
            horizon: 64,
        }
    }
}

/// Candidate witnesses for a map search: the enumerated points plus, on
/// subshifts, words synthesized from the pseudo-orbit's own tails (the past
/// tail pulled to index 0, the future tail pulled back through the gap, and
/// splices of the two around the center).
fn map_candidates(sys: &System, mpo: &MapPseudoOrbit, gap: i64, horizon: i64) -> Vec<Point> {
    let mut out = sys.enumerate_candidates();
    if let Space::Subshift(_) = &sys.space {
        let past_anchor = sys.iterate_raw(mpo.point(-horizon), horizon);
        let future_anchor = sys.iterate_raw(mpo.point(horizon), -horizon - gap);
        let push = |p: Point, out: &mut Vec<Point>| {
            if !out.iter().any(|q| sys.point_eq(q, &p)) {
                out.push(p);
            }
        };
        push(past_anchor.clone(), &mut out);
        push(future_anchor.clone(), &mut out);
        if let (Point::Word(pw), Point::Word(fw)) = (&past_anchor, &future_anchor) {
            for cut in -4..=4 {
                push(
                    Point::word(crate::space::Word::splice(pw, fw, cut)),
                    &mut out,
                );
            }
        }
    }
    out
}

/// Brute-force two-sided limit shadowing search with gap for the base
/// homeomorphism: finds a witness `y` and integer gap `|K| <= gap_bound`
/// with `d(f^i(y), x_i) -> 0` backward and `d(f^{K+i}(y), x_i) -> 0`
/// forward, verified as tail bounds. Gaps are scanned outward from 0, so a
/// gap-0 verdict downgrades to plain two-sided limit shadowing whenever
/// possible; ties prefer the earliest candidate in canonical order.
pub fn map_tsls_gap_search(
    sys: &System,
    mpo: &MapPseudoOrbit,
    params: MapSearchParams,
) -> Result<ShadowVerdict> {
    let horizon = params.horizon.min(mpo.two_sided_horizon());
    if horizon < 4 {
        return Err(Error::SearchFailed(format!(
            "horizon {horizon} too small for quartered tails"
        )));
    }
    let mut gaps: Vec<i64> = vec![0];
    for k in 1..=params.gap_bound {
        gaps.push(k);
        gaps.push(-k);
    }
    let mut records = Vec::new();
    let mut total_candidates = 0usize;
    for &gap in &gaps {
        let cands = map_candidates(sys, mpo, gap, horizon);
        total_candidates = total_candidates.max(cands.len());
        for y in &cands {
            let trace = map_error_trace(sys, mpo, y, gap, horizon);
            let stats = tail_criterion(&trace, params.tol);
            if stats.ok {
                let status = if gap == 0 {
                    ShadowStatus::Shadowed
                } else {
                    ShadowStatus::ShadowedWithGap
                };
                return Ok(ShadowVerdict {
                    status,
                    witness: Some(Witness::Map(y.clone())),
                    reparam: None,
                    gap: Some(GapSpec::new(gap as f64, params.gap_bound as f64)?),
                    trace,
                    tol: params.tol,
                    search_domain: SearchDomain {
                        description: format!(
                            "exhaustive candidates x integer gaps |K| <= {}, horizon {}",
                            params.gap_bound, horizon
                        ),
                        candidates: cands.len(),
                        gap_bound: params.gap_bound as f64,
                        records,
                    },
                });
            }
            records.push(CandidateRecord {
                candidate: sys.point_id(y),
                gap: gap as f64,
                tail_error: stats.q4_max,
            });
        }
    }
    Ok(ShadowVerdict {
        status: ShadowStatus::NotShadowedWithinSearch,
        witness: None,
        reparam: None,
        gap: None,
        trace: Vec::new(),
        tol: params.tol,
        search_domain: SearchDomain {
            description: format!(
                "exhaustive candidates x integer gaps |K| <= {}, horizon {}",
                params.gap_bound, horizon
            ),
            candidates: total_candidates,
            gap_bound: params.gap_bound as f64,
            records,
        },
    })
}

/// Signed error trace of a candidate against a map pseudo-orbit: past branch
/// compares `f^i(y)`, future branch `f^{K+i}(y)`.
pub fn map_error_trace(
    sys: &System,
    mpo: &MapPseudoOrbit,
    y: &Point,
    gap: i64,
    horizon: i64,
) -> Vec<(f64, f64)> {
    let mut trace = Vec::with_capacity(2 * horizon as usize + 2);
    let mut cur = sys.iterate_raw(y, -horizon);
    for i in -horizon..=0 {
        trace.push((i as f64, sys.dist(&cur, mpo.point(i))));
        cur = sys.iterate_raw(&cur, 1);
    }
    let mut cur = sys.iterate_raw(y, gap);
    for i in 0..=horizon {
        trace.push((i as f64, sys.dist(&cur, mpo.point(i))));
        cur = sys.iterate_raw(&cur, 1);
    }
    trace
}

// ---------------------------------------------------------------------------
// Constructive lift of base shadowing to the suspension flow
// ---------------------------------------------------------------------------

/// Data computed while reducing a flow pseudo-orbit (durations in [2, 4)) to
/// a base pseudo-orbit: wrap counts, aligned integers, their sums, and the
/// quarter-closeness threshold index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiftData {
    pub lo: i64,
    pub hi: i64,
    pub wraps: Vec<i64>,
    pub aligned: Vec<i64>,
    pub block_sums: Vec<i64>,
    pub time_sums: Vec<f64>,
    pub threshold: i64,
}

impl LiftData {
    pub fn wrap(&self, k: i64) -> i64 {
        self.wraps[(k - self.lo) as usize]
    }
    pub fn n(&self, k: i64) -> i64 {
        self.aligned[(k - self.lo) as usize]
    }
    /// `N_k`, the sums sequence of the aligned integers (`N_0 = 0`).
    pub fn big_n(&self, k: i64) -> i64 {
        self.block_sums[(k - self.lo) as usize]
    }
    /// `T_k`, the sums sequence of the durations.
    pub fn big_t(&self, k: i64) -> f64 {
        self.time_sums[(k - self.lo) as usize]
    }
}

/// Reduces a flow pseudo-orbit with durations in [2, 4) to the derived base
/// pseudo-orbit built from blocks `f^{i - N_k}(x_k)`. Verifies the defining
/// alignment inequality and the quarter-closeness of block seams beyond the
/// threshold index.
pub fn derive_base_pseudo_orbit(
    sys: &System,
    fpo: &FlowPseudoOrbit,
) -> Result<(MapPseudoOrbit, LiftData)> {
    for i in fpo.lo..=fpo.hi() {
        let t = fpo.entry(i).1;
        if !(2.0..4.0).contains(&t) {
            return Err(Error::InvalidPseudoOrbit(format!(
                "lift requires durations in [2, 4), got {t} at index {i}"
            )));
        }
    }
    let lo = fpo.lo;
    let hi = fpo.hi();
    // threshold index: jump errors strictly below 1/4 beyond it
    let mut worst = 0i64;
    for k in lo..hi {
        if fpo.jump(k) >= 0.25 {
            worst = worst.max(k.abs() + 1);
        }
    }
    let threshold = worst.max(1);
    if threshold > hi.min(-lo) {
        return Err(Error::InvalidPseudoOrbit(
            "jumps never fall below 1/4 within the realized range".into(),
        ));
    }

    let mut wraps = Vec::new();
    let mut aligned = Vec::new();
    for k in lo..=hi {
        let (p, t) = fpo.entry(k);
        let w = (p.height + t).floor() as i64;
        wraps.push(w);
        let n = if k.abs() < threshold || k == hi {
            1
        } else {
            let s_next = fpo.entry(k + 1).0.height;
            near_level_decompose(p.height, *t, s_next, w)?.n
        };
        if n < 1 {
            return Err(Error::InvalidPseudoOrbit(format!(
                "aligned integer {n} below 1 at index {k}"
            )));
        }
        aligned.push(n);
    }

    // slope positivity everywhere, seam quarter-closeness where asserted
    for k in lo..hi {
        let s_k = fpo.entry(k).0.height;
        let s_next = fpo.entry(k + 1).0.height;
        let nk = aligned[(k - lo) as usize];
        if s_next + nk as f64 - s_k <= 0.0 {
            return Err(Error::InvalidPseudoOrbit(format!(
                "slope numerator not positive at index {k}"
            )));
        }
        if k.abs() >= threshold {
            let dev = (s_k + fpo.entry(k).1 - nk as f64 - s_next).abs();
            if dev >= 0.25 {
                return Err(Error::AlignmentFailed(format!(
                    "time deviation {dev} at index {k}"
                )));
            }
            let hop = sys.dist(
                &sys.iterate_raw(&fpo.entry(k).0.base, nk),
                &fpo.entry(k + 1).0.base,
            );
            if hop >= 0.25 {
                return Err(Error::AlignmentFailed(format!(
                    "block seam distance {hop} at index {k}"
                )));
            }
        }
    }

    // sums N_k with N_0 = 0
    let len = (hi - lo + 1) as usize;
    let zero = (-lo) as usize;
    let mut block_sums = vec![0i64; len];
    for idx in zero..len - 1 {
        block_sums[idx + 1] = block_sums[idx] + aligned[idx];
    }
    for idx in (0..zero).rev() {
        block_sums[idx] = block_sums[idx + 1] - aligned[idx];
    }
    let sums = fpo.sums();
    let time_sums: Vec<f64> = (lo..=hi).map(|k| sums.at(k)).collect();

    // derived points y_i = f^{i - N_k}(x_k) over [N_lo, N_hi)
    let n_lo = block_sums[0];
    let n_hi = block_sums[len - 1];
    let mut points = Vec::with_capacity((n_hi - n_lo) as usize);
    let mut k = lo;
    for i in n_lo..n_hi {
        while k < hi && i >= block_sums[(k - lo) as usize + 1] {
            k += 1;
        }
        let base = &fpo.entry(k).0.base;
        points.push(sys.iterate_raw(base, i - block_sums[(k - lo) as usize]));
    }
    let max_jump = {
        let mut m = 0.0_f64;
        for w in points.windows(2) {
            m = m.max(sys.dist(&sys.iterate_raw(&w[0], 1), &w[1]));
        }
        m
    };
    let mpo = MapPseudoOrbit::new(
        sys,
        n_lo,
        points,
        crate::pseudo_orbit::ErrorSchedule::Uniform { delta: max_jump },
    )?;
    let lift = LiftData {
        lo,
        hi,
        wraps,
        aligned,
        block_sums,
        time_sums,
        threshold,
    };
    Ok((mpo, lift))
}

/// Options of the constructive lift.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LiftParams {
    pub tol: f64,
    pub trace_step: f64,
}

impl Default for LiftParams {
    fn default() -> Self {
        Self {
            tol: 0.1,
            trace_step: 0.5,
        }
    }
}

/// Lifts a base shadowing verdict to the suspension flow: assembles the
/// piecewise-linear reparametrization over the duration sums, takes the base
/// witness at the starting height, removes any base gap, and re-verifies the
/// tracking distance along a time grid.
pub fn lift_shadow_to_suspension<F: Flow>(
    flow: &F,
    fpo: &FlowPseudoOrbit,
    lift: &LiftData,
    base_verdict: &ShadowVerdict,
    params: LiftParams,
) -> Result<ShadowVerdict> {
    if base_verdict.status == ShadowStatus::NotShadowedWithinSearch {
        return Err(Error::SearchFailed(
            "base verdict is not shadowed; nothing to lift".into(),
        ));
    }
    let base_witness = match &base_verdict.witness {
        Some(Witness::Map(p)) => p.clone(),
        _ => {
            return Err(Error::SearchFailed(
                "base verdict carries no map witness".into(),
            ))
        }
    };
    let gap = base_verdict.gap.map(|g| g.gap).unwrap_or(0.0);

    // alpha through (T_k, s_k + N_k - s_0) for realized k
    let s0 = fpo.entry(0).0.height;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in lift.lo..=lift.hi {
        xs.push(lift.big_t(k));
        ys.push(fpo.entry(k).0.height + lift.big_n(k) as f64 - s0);
    }
    let alpha = Reparam::piecewise(xs, ys)?;
    let witness = SuspensionPoint::new(base_witness, s0);
    let final_reparam = if gap != 0.0 {
        remove_gap(&alpha, gap, flow, &witness)?
    } else {
        alpha
    };

    let t_lo = lift.big_t(lift.lo);
    let t_hi = lift.big_t(lift.hi);
    let mut trace = Vec::new();
    let mut t = t_lo;
    while t < t_hi - 1e-9 {
        let target = fpo.star(flow, t)?;
        let got = flow.evolve(&witness, final_reparam.evaluate(t));
        trace.push((t, flow.distance(&target, &got)));
        t += params.trace_step;
    }
    let stats = tail_criterion(&trace, params.tol);
    let status = if stats.ok {
        ShadowStatus::Shadowed
    } else {
        ShadowStatus::NotShadowedWithinSearch
    };
    Ok(ShadowVerdict {
        status,
        witness: Some(Witness::Flow(witness)),
        reparam: Some(final_reparam),
        gap: Some(GapSpec::new(
            0.0,
            base_verdict
                .gap
                .map(|g| g.bound)
                .unwrap_or(0.0)
                .max(gap.abs()),
        )?),
        trace,
        tol: params.tol,
        search_domain: SearchDomain {
            description: format!(
                "constructive lift of base witness; base gap {gap} removed by reparametrization"
            ),
            candidates: 1,
            gap_bound: gap.abs(),
            records: Vec::new(),
        },
    })
}

/// Full pipeline for a flow pseudo-orbit with durations in [2, 4): derive the
/// base pseudo-orbit, run the base gap search, lift, remove the gap.
pub fn suspension_lift_pipeline<F: Flow>(
    flow: &F,
    fpo: &FlowPseudoOrbit,
    map_params: MapSearchParams,
    lift_params: LiftParams,
) -> Result<(ShadowVerdict, ShadowVerdict, LiftData)> {
    let sys = flow.system();
    let (mpo, lift) = derive_base_pseudo_orbit(sys, fpo)?;
    let base_verdict = map_tsls_gap_search(sys, &mpo, map_params)?;
    let flow_verdict = lift_shadow_to_suspension(flow, fpo, &lift, &base_verdict, lift_params)?;
    Ok((base_verdict, flow_verdict, lift))
}

// ---------------------------------------------------------------------------
// Projection of a suspension verdict back to the base
// ---------------------------------------------------------------------------

/// Projects a shadowed verdict for the lifted pseudo-orbit `((x_n, 1/2), 1)`
/// back to the base homeomorphism. The quarter-threshold time of the trace
/// fixes `M`, the reparametrization evaluated at `±M` fixes the split
/// indices `N1, N2`, and the recovered witness is `f^{N2 + M}(x)` with gap
/// `N1 - 2M - N2`, tail-verified against the original base pseudo-orbit.
pub fn project_shadow_to_base(
    sys: &System,
    flow_verdict: &ShadowVerdict,
    mpo: &MapPseudoOrbit,
    tol: f64,
) -> Result<ShadowVerdict> {
    if flow_verdict.status == ShadowStatus::NotShadowedWithinSearch {
        return Err(Error::SearchFailed("flow verdict is not shadowed".into()));
    }
    let (x, s) = match &flow_verdict.witness {
        Some(Witness::Flow(p)) => (p.base.clone(), p.height),
        _ => {
            return Err(Error::SearchFailed(
                "flow verdict carries no flow witness".into(),
            ))
        }
    };
    let h = flow_verdict
        .reparam
        .as_ref()
        .ok_or_else(|| Error::SearchFailed("flow verdict carries no reparametrization".into()))?;

    let mut threshold_time = 1.0_f64;
    for (t, e) in &flow_verdict.trace {
        if *e >= 0.25 {
            threshold_time = threshold_time.max(t.abs() + 1.0);
        }
    }
    let m = (threshold_time + 1.0).floor() as i64;
    let n1 = (h.evaluate(m as f64) + s).floor() as i64;
    let n2 = (h.evaluate(-(m as f64)) + s).floor() as i64;
    let witness = sys.iterate_raw(&x, n2 + m);
    let gap = n1 - 2 * m - n2;

    let horizon = mpo.two_sided_horizon();
    let trace = map_error_trace(sys, mpo, &witness, gap, horizon);
    let stats = tail_criterion(&trace, tol);
    let status = if !stats.ok {
        ShadowStatus::NotShadowedWithinSearch
    } else if gap == 0 {
        ShadowStatus::Shadowed
    } else {
        ShadowStatus::ShadowedWithGap
    };
    Ok(ShadowVerdict {
        status,
        witness: Some(Witness::Map(witness)),
        reparam: None,
        gap: Some(GapSpec::new(gap as f64, gap.unsigned_abs().max(1) as f64)?),
        trace,
        tol,
        search_domain: SearchDomain {
            description: format!(
                "projection of suspension witness: M = {m}, split indices ({n1}, {n2})"
            ),
            candidates: 1,
            gap_bound: gap.unsigned_abs() as f64,
            records: Vec::new(),
        },
    })
}

// ---------------------------------------------------------------------------
// Greedy flow-level search (positive witnesses)
// ---------------------------------------------------------------------------

/// Parameters of the greedy flow search.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FlowSearchParams {
    pub tol: f64,
    /// Slope band of the piecewise-linear reparametrizations searched.
    pub slope_min: f64,
    pub slope_max: f64,
    /// Alignment grid refinement per segment.
    pub grid: usize,
    /// Candidate heights per enumerated base.
    pub height_grid: usize,
    /// One-sided searches only check the future branch.
    pub one_sided: bool,
}

impl Default for FlowSearchParams {
    fn default() -> Self {
        Self {
            tol: 0.1,
            slope_min: 0.5,
            slope_max: 2.0,
            grid: 32,
            height_grid: 4,
            one_sided: false,
        }
    }
}

fn flow_candidates<F: Flow>(
    flow: &F,
    fpo: &FlowPseudoOrbit,
    params: &FlowSearchParams,
) -> Vec<SuspensionPoint> {
    let sys = flow.system();
    let mut out: Vec<SuspensionPoint> = Vec::new();
    let push = |p: SuspensionPoint, out: &mut Vec<SuspensionPoint>| {
        let p = p.canonicalize(sys);
        if !out.iter().any(|q| q.approx_eq(sys, &p, 1e-12)) {
            out.push(p);
        }
    };
    push(fpo.entry(0).0.clone(), &mut out);
    push(fpo.entry(fpo.lo).0.clone(), &mut out);
    push(fpo.entry(fpo.hi()).0.clone(), &mut out);
    for c in sys.enumerate_candidates() {
        for j in 0..params.height_grid {
            let h = j as f64 / params.height_grid as f64;
            push(SuspensionPoint::new(c.clone(), h), &mut out);
        }
    }
    out
}

/// Greedy monotone-alignment shadowing search for flows: for each candidate,
/// alignment times are chosen per entry within the slope band minimizing the
/// pointwise distance; the piecewise-linear map through the alignments is the
/// searched reparametrization. Time drift is absorbed by the
/// reparametrization, so positive verdicts come out gap-free.
pub fn flow_shadow_search<F: Flow>(
    flow: &F,
    fpo: &FlowPseudoOrbit,
    params: FlowSearchParams,
) -> Result<ShadowVerdict> {
    let sys = flow.system();
    let cands = flow_candidates(flow, fpo, &params);
    let sums = fpo.sums();
    let mut records = Vec::new();
    let mut best: Option<(f64, ShadowVerdict)> = None;

    for y in &cands {
        let lo = fpo.lo;
        let hi = fpo.hi();
        let len = (hi - lo + 1) as usize;
        let mut sigma = vec![0.0_f64; len];
        // initial alignment near time 0
        let mut best_d = f64::INFINITY;
        let steps = (params.grid * 8).max(64);
        for j in 0..=steps {
            let tau = -4.0 + 8.0 * j as f64 / steps as f64;
            let d = flow.distance(&fpo.entry(0).0, &flow.evolve(y, tau));
            if d < best_d - 1e-12 {
                best_d = d;
                sigma[(-lo) as usize] = tau;
            }
        }
        // forward sweep
        for i in 0..hi {
            let t_i = fpo.entry(i).1;
            let here = sigma[(i - lo) as usize];
            let (lo_s, hi_s) = (here + params.slope_min * t_i, here + params.slope_max * t_i);
            let mut pick = here + t_i;
            let mut pick_d = f64::INFINITY;
            for j in 0..=params.grid {
                let tau = lo_s + (hi_s - lo_s) * j as f64 / params.grid as f64;
                let d = flow.distance(&fpo.entry(i + 1).0, &flow.evolve(y, tau));
                if d < pick_d - 1e-12 {
                    pick_d = d;
                    pick = tau;
                }
            }
            sigma[(i + 1 - lo) as usize] = pick;
        }
        // backward sweep
        for i in (lo + 1..=0).rev() {
            let t_prev = fpo.entry(i - 1).1;
            let here = sigma[(i - lo) as usize];
            let (lo_s, hi_s) = (
                here - params.slope_max * t_prev,
                here - params.slope_min * t_prev,
            );
            let mut pick = here - t_prev;
            let mut pick_d = f64::INFINITY;
            for j in 0..=params.grid {
                let tau = lo_s + (hi_s - lo_s) * j as f64 / params.grid as f64;
                let d = flow.distance(&fpo.entry(i - 1).0, &flow.evolve(y, tau));
                if d < pick_d - 1e-12 {
                    pick_d = d;
                    pick = tau;
                }
            }
            sigma[(i - 1 - lo) as usize] = pick;
        }

        // piecewise-linear reparametrization through the alignments, shifted
        // so it fixes 0 exactly; the witness absorbs the offset
        let offset = interp_alignment(&sums, lo, hi, &sigma, 0.0);
        let xs: Vec<f64> = (lo..=hi).map(|k| sums.at(k)).collect();
        let ys: Vec<f64> = sigma.iter().map(|v| v - offset).collect();
        let (xs, ys) = insert_origin(xs, ys);
        let reparam = match Reparam::piecewise(xs, ys) {
            Ok(r) => r,
            Err(_) => continue, // alignment collapsed; not increasing
        };
        let shifted = flow.evolve(y, offset);

        // error trace: entries plus mid-segment samples
        let mut trace = Vec::new();
        for k in lo..=hi {
            for frac in [0.0, 0.25, 0.5, 0.75] {
                let t = sums.at(k) + frac * fpo.entry(k).1;
                if t >= sums.last() {
                    break;
                }
                let target = fpo.star(flow, t)?;
                let got = flow.evolve(&shifted, reparam.evaluate(t));
                trace.push((t, flow.distance(&target, &got)));
            }
        }
        let stats = if params.one_sided {
            tail_criterion_one_sided(&trace, params.tol)
        } else {
            tail_criterion(&trace, params.tol)
        };
        if stats.ok {
            return Ok(ShadowVerdict {
                status: ShadowStatus::Shadowed,
                witness: Some(Witness::Flow(shifted)),
                reparam: Some(reparam),
                gap: Some(GapSpec::new(0.0, 0.0)?),
                trace,
                tol: params.tol,
                search_domain: SearchDomain {
                    description: format!(
                        "greedy monotone alignment over {} candidates, slopes in [{}, {}]; drift absorbed by the reparametrization",
                        cands.len(),
                        params.slope_min,
                        params.slope_max
                    ),
                    candidates: cands.len(),
                    gap_bound: 0.0,
                    records,
                },
            });
        }
        records.push(CandidateRecord {
            candidate: y.display(sys),
            gap: 0.0,
            tail_error: stats.q4_max,
        });
        if best.as_ref().map_or(true, |(b, _)| stats.q4_max < *b) {
            best = Some((
                stats.q4_max,
                ShadowVerdict {
                    status: ShadowStatus::NotShadowedWithinSearch,
                    witness: None,
                    reparam: None,
                    gap: None,
                    trace,
                    tol: params.tol,
                    search_domain: SearchDomain {
                        description: String::new(),
                        candidates: cands.len(),
                        gap_bound: 0.0,
                        records: Vec::new(),
                    },
                },
            ));
        }
    }
    let mut verdict = best
        .map(|(_, v)| v)
        .ok_or_else(|| Error::SearchFailed("empty candidate set".into()))?;
    verdict.search_domain = SearchDomain {
        description: format!(
            "greedy monotone alignment over {} candidates, slopes in [{}, {}]",
            cands.len(),
            params.slope_min,
            params.slope_max
        ),
        candidates: cands.len(),
        gap_bound: 0.0,
        records,
    };
    Ok(verdict)
}

/// Value of the alignment polyline at time `t`.
fn interp_alignment(
    sums: &crate::pseudo_orbit::Sums,
    lo: i64,
    hi: i64,
    sigma: &[f64],
    t: f64,
) -> f64 {
    for k in lo..hi {
        let (a, b) = (sums.at(k), sums.at(k + 1));
        if a <= t && t < b {
            let f = (t - a) / (b - a);
            return sigma[(k - lo) as usize] * (1.0 - f) + sigma[(k + 1 - lo) as usize] * f;
        }
    }
    if t < sums.at(lo) {
        sigma[0]
    } else {
        *sigma.last().unwrap()
    }
}

fn insert_origin(xs: Vec<f64>, ys: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    if let Some(pos) = xs.iter().position(|x| *x == 0.0) {
        let mut ys = ys;
        ys[pos] = 0.0;
        return (xs, ys);
    }
    let mut nxs = Vec::with_capacity(xs.len() + 1);
    let mut nys = Vec::with_capacity(ys.len() + 1);
    let mut inserted = false;
    for (x, y) in xs.iter().zip(ys.iter()) {
        if !inserted && *x > 0.0 {
            nxs.push(0.0);
            nys.push(0.0);
            inserted = true;
        }
        nxs.push(*x);
        nys.push(*y);
    }
    if !inserted {
        nxs.push(0.0);
        nys.push(0.0);
    }
    (nxs, nys)
}

// ---------------------------------------------------------------------------
// Monotone-alignment floor: lower bound over every reparametrization
// ---------------------------------------------------------------------------

/// A candidate orbit discretized by position. `circular` tracks close up
/// (periodic orbits); linear tracks are traversed once (orbits truncated at
/// a fixed point).
#[derive(Debug, Clone)]
pub struct OrbitTrack {
    pub label: String,
    pub points: Vec<SuspensionPoint>,
    pub circular: bool,
}

/// Lower bound, over every increasing reparametrization and every gap, of the
/// maximum tracking error of `track` against the time-ordered samples.
/// Positions may only advance (full wraps are free on circular tracks), which
/// relaxes every timing constraint; the result therefore underestimates the
/// error of any actual reparametrized orbit, making it a sound negative
/// certificate.
pub fn monotone_alignment_floor<F: Flow>(
    flow: &F,
    samples: &[(f64, SuspensionPoint)],
    track: &OrbitTrack,
) -> f64 {
    if samples.is_empty() || track.points.is_empty() {
        return 0.0;
    }
    let np = track.points.len();
    let dist_row =
        |p: &SuspensionPoint| -> Vec<f64> { track.points.iter().map(|q| flow.distance(p, q)).collect() };
    if track.circular {
        // wraps are unconstrained, so only the distance to the orbit set binds
        let mut worst = 0.0_f64;
        for (_, p) in samples {
            let m = dist_row(p).into_iter().fold(f64::INFINITY, f64::min);
            worst = worst.max(m);
        }
        return worst;
    }
    let mut val = dist_row(&samples[0].1);
    for (_, p) in &samples[1..] {
        let d = dist_row(p);
        let mut prefix = f64::INFINITY;
        let mut next = vec![0.0_f64; np];
        for j in 0..np {
            prefix = prefix.min(val[j]);
            next[j] = d[j].max(prefix);
        }
        val = next;
    }
    val.into_iter().fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// Flow limit sets, chain transitivity, transitivity probe
// ---------------------------------------------------------------------------

/// Clusters flow samples `phi_t(p)` over the second half of the horizon into
/// tol-separated representatives.
pub fn flow_limit_sample<F: Flow>(
    flow: &F,
    p: &SuspensionPoint,
    horizon: f64,
    tol: f64,
    kind: LimitKind,
) -> Vec<SuspensionPoint> {
    let mut reps: Vec<SuspensionPoint> = Vec::new();
    let mut t = horizon / 2.0;
    while t <= horizon {
        let s = match kind {
            LimitKind::Omega => t,
            LimitKind::Alpha => -t,
        };
        let q = flow.evolve(p, s);
        if reps.iter().all(|r| flow.distance(r, &q) >= tol) {
            reps.push(q);
        }
        t += 0.25;
    }
    reps
}

/// Parameters of the chain-transitivity witness construction.
#[derive(Debug, Clone, Copy)]
pub struct ChainWitnessParams {
    pub horizon: f64,
    pub central_range: i64,
    pub recurrence_horizon: f64,
}

impl Default for ChainWitnessParams {
    fn default() -> Self {
        Self {
            horizon: 32.0,
            central_range: 12,
            recurrence_horizon: 64.0,
        }
    }
}

/// Builds a finite eps-pseudo-orbit from `x` to `y`: the orbit of `x` out to
/// a recurrence time, a shadowing orbit bridging an omega-limit point of `x`
/// to an alpha-limit point of `y`, and the orbit into `y`. All jumps are
/// validated against `eps` by the concatenation.
pub fn chain_transitivity_witness<F: Flow>(
    flow: &F,
    x: &SuspensionPoint,
    y: &SuspensionPoint,
    eps: f64,
    params: ChainWitnessParams,
) -> Result<FlowPseudoOrbit> {
    let omega = flow_limit_sample(flow, x, params.horizon, eps / 4.0, LimitKind::Omega);
    let alpha = flow_limit_sample(flow, y, params.horizon, eps / 4.0, LimitKind::Alpha);
    let z1 = omega
        .first()
        .ok_or_else(|| Error::SearchFailed("empty omega sample".into()))?
        .clone();
    let z2 = alpha
        .first()
        .ok_or_else(|| Error::SearchFailed("empty alpha sample".into()))?
        .clone();

    // central spliced pseudo-orbit: past orbit of z1, future orbit of z2
    let range = params.central_range;
    let mut entries = Vec::new();
    for n in -range..0 {
        entries.push((flow.evolve(&z1, n as f64), 1.0));
    }
    for n in 0..=range {
        entries.push((flow.evolve(&z2, n as f64), 1.0));
    }
    let central = FlowPseudoOrbit::new(
        flow,
        -range,
        entries,
        crate::pseudo_orbit::ErrorSchedule::Limit { c: 1.0 },
    )?;
    let verdict = flow_shadow_search(
        flow,
        &central,
        FlowSearchParams {
            tol: (eps / 2.0).min(0.1),
            ..Default::default()
        },
    )?;
    if verdict.status == ShadowStatus::NotShadowedWithinSearch {
        return Err(Error::SearchFailed(
            "central spliced pseudo-orbit is not shadowed".into(),
        ));
    }
    let z = match &verdict.witness {
        Some(Witness::Flow(p)) => p.clone(),
        _ => unreachable!("shadowed flow verdict carries a flow witness"),
    };
    let h = verdict.reparam.as_ref().unwrap();

    // T with tail errors below eps/2 and h(T) - h(-T) >= 1
    let mut big_t = 1.0_f64;
    for (t, e) in &verdict.trace {
        if *e >= eps / 2.0 {
            big_t = big_t.max(t.abs() + 1.0);
        }
    }
    while h.evaluate(big_t) - h.evaluate(-big_t) < 1.0 {
        big_t += 1.0;
    }
    if big_t > range as f64 - 1.0 {
        return Err(Error::SearchFailed(format!(
            "tail errors exceed eps/2 through the whole central range (T = {big_t})"
        )));
    }

    // recurrence times: forward orbit of x near phi_{-T}(z1), backward orbit
    // of y near phi_{T}(z2)
    let target_in = flow.evolve(&z1, -big_t);
    let target_out = flow.evolve(&z2, big_t);
    let t1 = search_recurrence(flow, x, &target_in, eps / 2.0, params.recurrence_horizon, false)?;
    let t2 = search_recurrence(flow, y, &target_out, eps / 2.0, params.recurrence_horizon, true)?;

    let seg_a = orbit_segment(flow, x, 0.0, t1, eps);
    let seg_b = orbit_segment(flow, &z, h.evaluate(-big_t), h.evaluate(big_t), eps);
    let seg_c = orbit_segment(flow, y, -t2, 0.0, eps);
    crate::pseudo_orbit::concatenate(flow, &[seg_a, seg_b, seg_c], &[])
}

/// Finds `t' >= 1` on a grid with `phi_{±t'}(anchor)` within `eps` of the
/// target.
fn search_recurrence<F: Flow>(
    flow: &F,
    anchor: &SuspensionPoint,
    target: &SuspensionPoint,
    eps: f64,
    horizon: f64,
    backward: bool,
) -> Result<f64> {
    let step = 0.125;
    let mut t = 1.0;
    while t <= horizon {
        let probe = flow.evolve(anchor, if backward { -t } else { t });
        if flow.distance(&probe, target) < eps {
            return Ok(t);
        }
        t += step;
    }
    Err(Error::SearchFailed(format!(
        "no recurrence within horizon {horizon} at eps {eps}"
    )))
}

/// True-orbit segment from `phi_{from}(anchor)` to `phi_{to}(anchor)` as
/// unit-duration entries; the final entry absorbs the fractional remainder so
/// every duration stays in [1, 2).
fn orbit_segment<F: Flow>(
    flow: &F,
    anchor: &SuspensionPoint,
    from: f64,
    to: f64,
    delta: f64,
) -> Segment {
    let span = to - from;
    debug_assert!(span >= 1.0);
    let whole = span.floor() as usize;
    let count = whole.saturating_sub(1);
    let mut entries = Vec::new();
    let mut cursor = from;
    for _ in 0..count {
        entries.push((flow.evolve(anchor, cursor), 1.0));
        cursor += 1.0;
    }
    entries.push((flow.evolve(anchor, cursor), to - cursor));
    Segment { entries, delta }
}

/// Report of the transitivity probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitivityReport {
    pub transitive: bool,
    pub witness: Option<SuspensionPoint>,
    pub missing_connector: Option<(String, String, f64)>,
    /// Per resolution level: (eps, worst distance from a net point to the
    /// sampled witness orbit).
    pub density: Vec<(f64, f64)>,
}

/// Probes transitivity through chain transitivity: nets of shrinking
/// resolution are connected by eps-pseudo-orbits, the concatenation is limit
/// shadowed (one-sided), and the witness orbit's density against every net is
/// measured. A missing connector is reported as such.
pub fn transitivity_probe<F: Flow>(flow: &F, levels: u32) -> Result<TransitivityReport> {
    let sys = flow.system();
    let mut segments: Vec<Segment> = Vec::new();
    let mut nets: Vec<(f64, Vec<SuspensionPoint>)> = Vec::new();
    let mut prev_last: Option<SuspensionPoint> = None;

    for k in 1..=levels {
        let eps = 0.5_f64.powi(k as i32);
        let mut net = Vec::new();
        let steps = 1u32 << k;
        for c in sys.enumerate_candidates() {
            for j in 0..steps {
                net.push(SuspensionPoint::new(c.clone(), j as f64 / steps as f64));
            }
        }
        let mut anchors: Vec<SuspensionPoint> = Vec::new();
        if let Some(p) = prev_last.take() {
            anchors.push(p);
        }
        anchors.extend(net.iter().cloned());
        for w in anchors.windows(2) {
            match chain_transitivity_witness(flow, &w[0], &w[1], eps, ChainWitnessParams::default())
            {
                Ok(po) => segments.push(Segment {
                    entries: po.entries,
                    delta: eps,
                }),
                Err(_) => {
                    return Ok(TransitivityReport {
                        transitive: false,
                        witness: None,
                        missing_connector: Some((w[0].display(sys), w[1].display(sys), eps)),
                        density: Vec::new(),
                    });
                }
            }
        }
        prev_last = net.last().cloned();
        nets.push((eps, net));
    }

    let concatenated = crate::pseudo_orbit::concatenate(flow, &segments, &[])?;
    let extended = crate::pseudo_orbit::extend_past_with_true_orbit(flow, &concatenated, 8)?;
    let verdict = flow_shadow_search(
        flow,
        &extended,
        FlowSearchParams {
            tol: 0.25,
            one_sided: true,
            ..Default::default()
        },
    )?;
    if verdict.status == ShadowStatus::NotShadowedWithinSearch {
        return Ok(TransitivityReport {
            transitive: false,
            witness: None,
            missing_connector: None,
            density: Vec::new(),
        });
    }
    let witness = match &verdict.witness {
        Some(Witness::Flow(p)) => p.clone(),
        _ => unreachable!(),
    };

    // density of the sampled forward orbit against each net
    let total: f64 = extended.entries.iter().map(|(_, t)| *t).sum();
    let mut density = Vec::new();
    let mut ok = true;
    for (eps, net) in &nets {
        let mut worst = 0.0_f64;
        for q in net {
            let mut nearest = f64::INFINITY;
            let mut t = 0.0;
            while t <= total {
                let p = flow.evolve(&witness, t);
                nearest = nearest.min(flow.distance(&p, q));
                if nearest <= eps / 2.0 {
                    break;
                }
                t += eps / 4.0;
            }
            worst = worst.max(nearest);
        }
        density.push((*eps, worst));
        if worst > *eps {
            ok = false;
        }
    }
    Ok(TransitivityReport {
        transitive: ok,
        witness: Some(witness),
        missing_connector: None,
        density,
    })
}

// ---------------------------------------------------------------------------
// Finite shadowing
// ---------------------------------------------------------------------------

/// Report of the finite-shadowing scan: for each eps, the largest dyadic
/// delta whose sampled finite pseudo-orbits were all eps-shadowed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiniteShadowingReport {
    pub per_eps: Vec<(f64, Option<f64>)>,
    pub orbit_length: usize,
    pub orbits_per_delta: usize,
}

/// For each eps in the ladder, scans a dyadic delta ladder downward and
/// reports the largest delta for which every sampled finite
/// delta-pseudo-orbit of the given length is eps-shadowed by some candidate
/// with a piecewise-linear reparametrization with slopes in [1/2, 2].
pub fn finite_shadowing_check<F: Flow>(
    flow: &F,
    eps_ladder: &[f64],
    orbit_length: usize,
    orbits_per_delta: usize,
    seed: u64,
) -> Result<FiniteShadowingReport> {
    let mut per_eps = Vec::new();
    for &eps in eps_ladder {
        let mut found: Option<f64> = None;
        let mut delta = eps;
        for _ in 0..6 {
            if all_sampled_orbits_shadowed(flow, eps, delta, orbit_length, orbits_per_delta, seed)? {
                found = Some(delta);
                break;
            }
            delta /= 2.0;
        }
        per_eps.push((eps, found));
    }
    Ok(FiniteShadowingReport {
        per_eps,
        orbit_length,
        orbits_per_delta,
    })
}

fn all_sampled_orbits_shadowed<F: Flow>(
    flow: &F,
    eps: f64,
    delta: f64,
    orbit_length: usize,
    orbits: usize,
    seed: u64,
) -> Result<bool> {
    use rand::Rng;
    use rand::SeedableRng;
    let sys = flow.system();
    let starts: Vec<SuspensionPoint> = sys
        .enumerate_candidates()
        .into_iter()
        .map(|p| SuspensionPoint::new(p, 0.0))
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..orbits {
        let start = starts[(trial + rng.gen_range(0..starts.len())) % starts.len()].clone();
        // finite delta-pseudo-orbit: true flow with bounded time slides
        let mut entries = Vec::new();
        let mut cur = start;
        for _ in 0..orbit_length {
            let dur = 1.0 + rng.gen_range(0.0..1.0);
            entries.push((cur.clone(), dur));
            let reached = flow.evolve(&cur, dur);
            let slide = rng.gen_range(-delta / 2.0..delta / 2.0);
            cur = flow.evolve(&reached, slide);
        }
        let po = FlowPseudoOrbit::new(
            flow,
            0,
            entries,
            crate::pseudo_orbit::ErrorSchedule::Uniform { delta },
        )?;
        if !finite_orbit_eps_shadowed(flow, &po, eps)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Uniform (not tail) criterion: some candidate plus banded reparametrization
/// keeps every sampled error at or below eps.
pub fn finite_orbit_eps_shadowed<F: Flow>(
    flow: &F,
    po: &FlowPseudoOrbit,
    eps: f64,
) -> Result<bool> {
    let params = FlowSearchParams::default();
    let cands = flow_candidates(flow, po, &params);
    let sums = po.sums();
    let lo = po.lo;
    let hi = po.hi();
    for y in &cands {
        let len = (hi - lo + 1) as usize;
        let mut sigma = vec![0.0_f64; len];
        let mut best_d = f64::INFINITY;
        for j in 0..=256 {
            let tau = -4.0 + 8.0 * j as f64 / 256.0;
            let d = flow.distance(&po.entry(lo).0, &flow.evolve(y, tau));
            if d < best_d - 1e-12 {
                best_d = d;
                sigma[0] = tau;
            }
        }
        for i in lo..hi {
            let t_i = po.entry(i).1;
            let here = sigma[(i - lo) as usize];
            let mut pick = here + t_i;
            let mut pick_d = f64::INFINITY;
            for j in 0..=params.grid {
                let tau = here + (0.5 + 1.5 * j as f64 / params.grid as f64) * t_i;
                let d = flow.distance(&po.entry(i + 1).0, &flow.evolve(y, tau));
                if d < pick_d - 1e-12 {
                    pick_d = d;
                    pick = tau;
                }
            }
            sigma[(i + 1 - lo) as usize] = pick;
        }
        let mut worst = 0.0_f64;
        'scan: for i in lo..=hi {
            for frac in [0.0, 0.3, 0.6, 0.9] {
                let t = sums.at(i) + frac * po.entry(i).1;
                if t >= sums.last() {
                    break 'scan;
                }
                let tau = interp_alignment(&sums, lo, hi, &sigma, t);
                let target = po.star(flow, t)?;
                let got = flow.evolve(y, tau);
                worst = worst.max(flow.distance(&target, &got));
                if worst > eps {
                    break 'scan;
                }
            }
        }
        if worst <= eps {
            return Ok(true);
        }
    }
    Ok(false)
}
