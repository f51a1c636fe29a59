//! The algebra of reparametrizations: increasing homeomorphisms of the reals
//! fixing 0, closed under the piece kinds the shadowing constructions emit.
//!
//! A reparametrization is represented as an expression over piecewise-linear
//! maps, the smooth gap overlay `h(t) + K exp(-1/t^2)` and the three-piece
//! negative-gap splice. Monotonicity is certified structurally (slopes and
//! seam values are checked exactly) plus by grid sampling over the active
//! range.

use serde::{Deserialize, Serialize};

use crate::suspension::{Flow, SuspensionPoint};
use crate::{Error, Result};

/// A time gap together with the bound it was searched under.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GapSpec {
    pub gap: f64,
    pub bound: f64,
}

impl GapSpec {
    pub fn new(gap: f64, bound: f64) -> Result<Self> {
        if gap.abs() > bound + 1e-12 {
            return Err(Error::CertificateViolation(format!(
                "|gap| = {} exceeds bound {}",
                gap.abs(),
                bound
            )));
        }
        Ok(Self { gap, bound })
    }
}

/// Piecewise-linear map through strictly increasing breakpoints, extended
/// beyond the ends with the terminal slopes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pwl {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Pwl {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::CertificateViolation(
                "piecewise-linear map needs matching breakpoints, at least two".into(),
            ));
        }
        for i in 1..xs.len() {
            if xs[i] <= xs[i - 1] || ys[i] <= ys[i - 1] {
                return Err(Error::CertificateViolation(format!(
                    "breakpoints must strictly increase (index {i})"
                )));
            }
        }
        Ok(Self { xs, ys })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.xs.len();
        // exact at breakpoints
        match self.xs.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => self.ys[i],
            Err(pos) => {
                let seg = pos.clamp(1, n - 1);
                let (x0, x1) = (self.xs[seg - 1], self.xs[seg]);
                let (y0, y1) = (self.ys[seg - 1], self.ys[seg]);
                y0 + (t - x0) * (y1 - y0) / (x1 - x0)
            }
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }
}

/// An increasing homeomorphism of the reals with value 0 at 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "piece", rename_all = "snake_case")]
pub enum Reparam {
    Identity,
    Linear { slope: f64 },
    Piecewise(Pwl),
    /// `base(t) + gap * exp(-1/t^2)` for `t > 0`; the past branch is shared
    /// bit-exactly with `base`. Requires `gap > 0`.
    GapOverlay { base: Box<Reparam>, gap: f64 },
    /// Three-piece negative-gap splice: `base` on `t <= 0`, `t/t0` on
    /// `(0, t0]`, `base(t) + gap` beyond, where `base(t0) + gap = 1`.
    GapSplice {
        base: Box<Reparam>,
        gap: f64,
        t0: f64,
    },
    Compose {
        outer: Box<Reparam>,
        inner: Box<Reparam>,
    },
}

impl Reparam {
    pub fn identity() -> Self {
        Reparam::Identity
    }

    pub fn linear(slope: f64) -> Result<Self> {
        if slope <= 0.0 || !slope.is_finite() {
            return Err(Error::CertificateViolation("slope must be positive".into()));
        }
        Ok(Reparam::Linear { slope })
    }

    /// Piecewise-linear through the given breakpoints; 0 must be a
    /// breakpoint with value exactly 0 so the fixed-point condition is
    /// bit-exact.
    pub fn piecewise(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let has_origin = xs
            .iter()
            .zip(ys.iter())
            .any(|(x, y)| *x == 0.0 && *y == 0.0);
        if !has_origin {
            return Err(Error::CertificateViolation(
                "piecewise map must pass through (0, 0) at a breakpoint".into(),
            ));
        }
        Ok(Reparam::Piecewise(Pwl::new(xs, ys)?))
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        match self {
            Reparam::Identity => t,
            Reparam::Linear { slope } => slope * t,
            Reparam::Piecewise(pwl) => pwl.eval(t),
            Reparam::GapOverlay { base, gap } => {
                if t > 0.0 {
                    base.evaluate(t) + gap * (-1.0 / (t * t)).exp()
                } else {
                    base.evaluate(t)
                }
            }
            Reparam::GapSplice { base, gap, t0 } => {
                if t <= 0.0 {
                    base.evaluate(t)
                } else if t <= *t0 {
                    t / t0
                } else {
                    base.evaluate(t) + gap
                }
            }
            Reparam::Compose { outer, inner } => outer.evaluate(inner.evaluate(t)),
        }
    }

    /// Functional composition `self(other( . ))`.
    pub fn compose(self, inner: Reparam) -> Reparam {
        Reparam::Compose {
            outer: Box::new(self),
            inner: Box::new(inner),
        }
    }

    /// Monotone bisection solve of `self(s) = t` to within `tol` on the
    /// value axis. Errors only if the expanding bracket exhausts, which
    /// indicates a violated monotonicity certificate.
    pub fn invert(&self, t: f64, tol: f64) -> Result<f64> {
        assert!(tol > 0.0, "tolerance must be positive");
        let mut lo = -1.0_f64;
        let mut hi = 1.0_f64;
        let mut guard = 0;
        while self.evaluate(lo) > t {
            lo *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::BracketExhausted(format!("invert at {t}")));
            }
        }
        guard = 0;
        while self.evaluate(hi) < t {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::BracketExhausted(format!("invert at {t}")));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = self.evaluate(mid);
            if (v - t).abs() <= tol {
                return Ok(mid);
            }
            if v < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Structural monotonicity check (exact) plus grid sampling: strict
    /// increase on the sampled grid, value 0 at 0, continuity at the seams
    /// of splice pieces.
    pub fn certify(&self, lo: f64, hi: f64, step: f64) -> Result<()> {
        self.certify_structure()?;
        if self.evaluate(0.0) != 0.0 {
            return Err(Error::CertificateViolation(format!(
                "value at 0 is {}, not 0",
                self.evaluate(0.0)
            )));
        }
        let mut t = lo;
        let mut prev = self.evaluate(lo);
        while t < hi {
            let next_t = (t + step).min(hi);
            let v = self.evaluate(next_t);
            if v <= prev {
                return Err(Error::CertificateViolation(format!(
                    "not strictly increasing between {t} and {next_t}"
                )));
            }
            prev = v;
            t = next_t;
        }
        Ok(())
    }

    /// Default certificate: grid step 1e-3 over [-1e3, 1e3].
    pub fn certify_default(&self) -> Result<()> {
        self.certify(-1e3, 1e3, 1e-3)
    }

    fn certify_structure(&self) -> Result<()> {
        match self {
            Reparam::Identity => Ok(()),
            Reparam::Linear { slope } => {
                if *slope > 0.0 {
                    Ok(())
                } else {
                    Err(Error::CertificateViolation("nonpositive slope".into()))
                }
            }
            Reparam::Piecewise(_) => Ok(()), // construction enforces increase
            Reparam::GapOverlay { base, gap } => {
                if *gap <= 0.0 {
                    return Err(Error::CertificateViolation(
                        "overlay gap must be positive".into(),
                    ));
                }
                base.certify_structure()
            }
            Reparam::GapSplice { base, gap, t0 } => {
                if *t0 <= 0.0 {
                    return Err(Error::CertificateViolation("splice t0 must be positive".into()));
                }
                let seam = base.evaluate(*t0) + gap;
                if (seam - 1.0).abs() > 1e-9 {
                    return Err(Error::CertificateViolation(format!(
                        "splice seam value {seam} differs from 1"
                    )));
                }
                base.certify_structure()
            }
            Reparam::Compose { outer, inner } => {
                outer.certify_structure()?;
                inner.certify_structure()
            }
        }
    }

    /// Continuity check at explicit breakpoints: left and right limits on a
    /// shrinking grid must agree to 1e-12 relative to the local scale.
    pub fn seam_continuity_ok(&self) -> bool {
        let mut seams: Vec<f64> = Vec::new();
        self.collect_seams(&mut seams);
        for s in seams {
            let eps = 1e-9;
            let left = self.evaluate(s - eps);
            let right = self.evaluate(s + eps);
            let mid = self.evaluate(s);
            let scale = 1.0 + mid.abs();
            if (left - mid).abs() > 1e-5 * scale || (right - mid).abs() > 1e-5 * scale {
                return false;
            }
        }
        true
    }

    fn collect_seams(&self, out: &mut Vec<f64>) {
        match self {
            Reparam::Identity | Reparam::Linear { .. } => {}
            Reparam::Piecewise(pwl) => out.extend_from_slice(pwl.breakpoints()),
            Reparam::GapOverlay { base, .. } => {
                out.push(0.0);
                base.collect_seams(out);
            }
            Reparam::GapSplice { base, t0, .. } => {
                out.push(0.0);
                out.push(*t0);
                base.collect_seams(out);
            }
            Reparam::Compose { outer, inner } => {
                inner.collect_seams(out);
                outer.collect_seams(out);
            }
        }
    }
}

/// Removes a shadowing gap `K` from the reparametrization `h`, following the
/// two constructions of the gap-removal lemma:
///
/// * `K > 0`: overlay `h(t) + K exp(-1/t^2)` on the future branch;
/// * `K < 0`: locate `t0 > 0` with `h(t0) + K = 1` and splice
///   `(h | t/t0 | h + K)`;
/// * `K = 0`: `h` unchanged.
///
/// The past branch shares `h`'s pieces, so it is bit-exact. The returned map
/// is tail-verified against the supplied flow and point: the distance between
/// `phi_{h(t)+K}(z)` and `phi_{alpha(t)}(z)` must shrink along a sampled grid.
pub fn remove_gap<F: Flow>(h: &Reparam, gap: f64, flow: &F, z: &SuspensionPoint) -> Result<Reparam> {
    if gap == 0.0 {
        return Ok(h.clone());
    }
    let alpha = if gap > 0.0 {
        Reparam::GapOverlay {
            base: Box::new(h.clone()),
            gap,
        }
    } else {
        let t0 = solve_splice_time(h, gap)?;
        Reparam::GapSplice {
            base: Box::new(h.clone()),
            gap,
            t0,
        }
    };
    // Tail verification on a sampled grid: the time mismatch |alpha - h - K|
    // bounds the orbit distance by a vertical segment, and must decay.
    let mut last = f64::INFINITY;
    for &t in &[5.0, 10.0, 20.0, 40.0, 80.0] {
        let target = flow.evolve(z, h.evaluate(t) + gap);
        let got = flow.evolve(z, alpha.evaluate(t));
        let d = flow.distance(&target, &got);
        let mismatch = (alpha.evaluate(t) - h.evaluate(t) - gap).abs();
        if d > mismatch + 1e-9 || mismatch > last + 1e-12 {
            return Err(Error::CertificateViolation(format!(
                "gap removal tail check failed at t = {t}: distance {d}, mismatch {mismatch}"
            )));
        }
        last = mismatch;
    }
    Ok(alpha)
}

/// Bisection for the splice time `t0 > 0` with `h(t0) + K = 1`; exists for
/// unbounded `h`, signalled if the represented range is exhausted.
fn solve_splice_time(h: &Reparam, gap: f64) -> Result<f64> {
    let target = 1.0 - gap;
    let mut hi = 1.0_f64;
    let mut guard = 0;
    while h.evaluate(hi) < target {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::BracketExhausted(
                "represented range exhausted solving h(t0) + K = 1".into(),
            ));
        }
    }
    let mut lo = 0.0_f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
            break;
        }
        if h.evaluate(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// CSV trace `(t, value)` rows over a uniform grid, for plotting.
pub fn csv_trace(h: &Reparam, lo: f64, hi: f64, step: f64) -> String {
    let mut out = String::from("t,value\n");
    let mut t = lo;
    while t <= hi + 1e-12 {
        out.push_str(&format!("{},{}\n", t, h.evaluate(t)));
        t += step;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::System;
    use crate::suspension::SuspensionFlow;

    #[test]
    fn identity_evaluates() {
        assert_eq!(Reparam::identity().evaluate(3.7), 3.7);
        assert_eq!(Reparam::identity().evaluate(0.0), 0.0);
    }

    #[test]
    fn lift_alpha_piece_evaluates() {
        // single block with s_k = s_{k+1} = s_0 = 0, n_k = 1, t_k = 2,
        // N_k = 0: slope 1/2 through the origin, so value 0.5 one unit in.
        let alpha = Reparam::piecewise(vec![0.0, 2.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(alpha.evaluate(1.0), 0.5);
    }

    #[test]
    fn gap_overlay_value() {
        let sys = System::swap();
        let flow = SuspensionFlow::new(&sys);
        let z = SuspensionPoint::new(crate::space::Point::finite(0), 0.0);
        let alpha = remove_gap(&Reparam::identity(), 2.0, &flow, &z).unwrap();
        let expected = 1.0 + 2.0 * (-1.0_f64).exp();
        assert!((alpha.evaluate(1.0) - expected).abs() < 1e-12);
        assert!((expected - 1.735_758_882_342_884_7).abs() < 1e-12);
    }

    #[test]
    fn positive_gap_overlay_far_value() {
        let sys = System::swap();
        let flow = SuspensionFlow::new(&sys);
        let z = SuspensionPoint::new(crate::space::Point::finite(0), 0.0);
        let alpha = remove_gap(&Reparam::identity(), 1.0, &flow, &z).unwrap();
        let expected = 10.0 + (-0.01_f64).exp();
        assert!((alpha.evaluate(10.0) - expected).abs() < 1e-12);
        assert!((alpha.evaluate(10.0) - 10.990_049_833_749_168).abs() < 1e-9);
    }

    #[test]
    fn negative_gap_splice_matches_closed_form() {
        let sys = System::swap();
        let flow = SuspensionFlow::new(&sys);
        let z = SuspensionPoint::new(crate::space::Point::finite(0), 0.0);
        let alpha = remove_gap(&Reparam::identity(), -1.0, &flow, &z).unwrap();
        // t0 = 2: t/2 on (0, 2], t - 1 beyond
        assert!((alpha.evaluate(2.0) - 1.0).abs() < 1e-9);
        assert!((alpha.evaluate(3.0) - 2.0).abs() < 1e-12);
        assert_eq!(alpha.evaluate(-4.0), -4.0); // past branch bit-exact
    }

    #[test]
    fn zero_gap_returns_base() {
        let sys = System::swap();
        let flow = SuspensionFlow::new(&sys);
        let z = SuspensionPoint::new(crate::space::Point::finite(0), 0.0);
        let alpha = remove_gap(&Reparam::identity(), 0.0, &flow, &z).unwrap();
        assert_eq!(alpha.evaluate(7.25), 7.25);
    }

    #[test]
    fn invert_identity_and_linear() {
        assert!((Reparam::identity().invert(5.0, 1e-10).unwrap() - 5.0).abs() < 1e-9);
        let double = Reparam::linear(2.0).unwrap();
        assert!((double.invert(-4.0, 1e-10).unwrap() + 2.0).abs() < 1e-9);
    }

    #[test]
    fn invert_piecewise() {
        // h(t) = t/2 on [0,2], t-1 after: h^{-1}(1) = 2
        let h = Reparam::piecewise(vec![-1.0, 0.0, 2.0, 3.0], vec![-0.5, 0.0, 1.0, 2.0]).unwrap();
        assert!((h.invert(1.0, 1e-10).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn invert_is_two_sided_inverse() {
        let h = Reparam::piecewise(vec![-3.0, 0.0, 1.0, 5.0], vec![-1.0, 0.0, 2.0, 4.0]).unwrap();
        for &t in &[-900.0, -7.5, -0.1, 0.0, 0.4, 3.0, 800.0] {
            let s = h.invert(h.evaluate(t), 1e-10).unwrap();
            assert!((h.evaluate(s) - h.evaluate(t)).abs() <= 1e-10);
        }
    }

    #[test]
    fn compose_evaluates() {
        let g = Reparam::linear(2.0).unwrap();
        let h = Reparam::linear(0.5).unwrap();
        let c = g.compose(h);
        for &t in &[-3.0, 0.0, 0.7, 11.0] {
            assert!((c.evaluate(t) - t).abs() < 1e-12);
        }
        assert_eq!(c.evaluate(0.0), 0.0);
    }

    #[test]
    fn compose_splice_with_identity() {
        let sys = System::swap();
        let flow = SuspensionFlow::new(&sys);
        let z = SuspensionPoint::new(crate::space::Point::finite(0), 0.0);
        let alpha = remove_gap(&Reparam::identity(), -1.0, &flow, &z).unwrap();
        let c = alpha.compose(Reparam::identity());
        assert!((c.evaluate(2.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn certificates_pass_for_constructed_maps() {
        let sys = System::swap();
        let flow = SuspensionFlow::new(&sys);
        let z = SuspensionPoint::new(crate::space::Point::finite(0), 0.0);
        for gap in [2.0, -1.0, 0.5] {
            let alpha = remove_gap(&Reparam::identity(), gap, &flow, &z).unwrap();
            alpha.certify(-50.0, 50.0, 1e-3).unwrap();
            assert!(alpha.seam_continuity_ok());
        }
    }

    #[test]
    fn certificate_rejects_decreasing_pieces() {
        assert!(Reparam::piecewise(vec![0.0, 1.0], vec![0.0, -1.0]).is_err());
        assert!(Reparam::piecewise(vec![1.0, 2.0], vec![1.0, 2.0]).is_err()); // no origin
    }

    #[test]
    fn overlay_closed_form_bound() {
        let sys = System::swap();
        let flow = SuspensionFlow::new(&sys);
        let z = SuspensionPoint::new(crate::space::Point::finite(0), 0.0);
        let gap = 1.5;
        let h = Reparam::identity();
        let alpha = remove_gap(&h, gap, &flow, &z).unwrap();
        let mut t = 0.05_f64;
        while t < 100.0 {
            let lhs = (alpha.evaluate(t) - h.evaluate(t) - gap).abs();
            let rhs = gap * (1.0 - (-1.0 / (t * t)).exp());
            assert!(lhs <= rhs + 1e-12);
            t *= 1.7;
        }
    }
}
