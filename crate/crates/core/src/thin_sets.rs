//! Thin subsets of the circle, handled in angle coordinates on the line, and
//! the Lebesgue measure of their closed `t`-neighborhoods.
//!
//! Three concrete families plus finite unions:
//! * `Atoms`: a finite list of angles.
//! * `GeometricCluster`: `base + scale * ratio^k` for `k >= 0`, together with
//!   the accumulation point `base` itself.
//! * `SelfSimilarCantor`: the attractor of the two maps that keep the left
//!   and right `ratio`-fraction of the carrier interval.
//!
//! The cluster is truncated for measurement: points with `|scale| * ratio^k <
//! tolerance / 4` are dropped, which undercounts any neighborhood measure by
//! at most `tolerance / 4` because every dropped point lies that close to
//! `base`. The Cantor measure is computed by the exact self-similarity
//! recursion, not by covers, so it stays `O(log(len/t))` for arbitrarily
//! small `t`.

use crate::interval::{self, Iv};
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Hard cap on materialized fattening components (union sweeps, windows).
const MAX_COMPONENTS: usize = 1 << 22;

/// Deepest cover generation before interval lengths drown in rounding.
const MAX_COVER_DEPTH: u32 = 26;

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

#[derive(Debug, thiserror::Error)]
pub enum ThinSetError {
    #[error("fattening radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("invalid set description: {0}")]
    Invalid(String),
    #[error("cover depth {0} exceeds precision (max {MAX_COVER_DEPTH})")]
    DepthExceedsPrecision(u32),
    #[error("tolerance unattainable at t = {t}: fattening needs more than {cap} components")]
    ToleranceUnattainable { t: f64, cap: usize },
    #[error("descriptor parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A thin set given by one of the built-in descriptions. `tolerance` bounds
/// the error the measurement code may commit for that set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum ThinSet {
    #[serde(rename = "atoms")]
    Atoms {
        angles: Vec<f64>,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    #[serde(rename = "cluster")]
    GeometricCluster {
        base: f64,
        ratio: f64,
        scale: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    #[serde(rename = "cantor")]
    SelfSimilarCantor {
        carrier: [f64; 2],
        ratio: f64,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    #[serde(rename = "union")]
    Union {
        members: Vec<ThinSet>,
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
}

impl ThinSet {
    pub fn atoms(angles: Vec<f64>) -> Result<Self, ThinSetError> {
        let s = ThinSet::Atoms { angles, tolerance: DEFAULT_TOLERANCE };
        s.validate()?;
        Ok(s)
    }

    pub fn cluster(base: f64, ratio: f64, scale: f64) -> Result<Self, ThinSetError> {
        let s = ThinSet::GeometricCluster { base, ratio, scale, tolerance: DEFAULT_TOLERANCE };
        s.validate()?;
        Ok(s)
    }

    pub fn cantor(a: f64, b: f64, ratio: f64) -> Result<Self, ThinSetError> {
        let s = ThinSet::SelfSimilarCantor { carrier: [a, b], ratio, tolerance: DEFAULT_TOLERANCE };
        s.validate()?;
        Ok(s)
    }

    pub fn union(members: Vec<ThinSet>) -> Result<Self, ThinSetError> {
        let s = ThinSet::Union { members, tolerance: DEFAULT_TOLERANCE };
        s.validate()?;
        Ok(s)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Result<Self, ThinSetError> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(ThinSetError::Invalid(format!("tolerance must be positive, got {tol}")));
        }
        match &mut self {
            ThinSet::Atoms { tolerance, .. }
            | ThinSet::GeometricCluster { tolerance, .. }
            | ThinSet::SelfSimilarCantor { tolerance, .. }
            | ThinSet::Union { tolerance, .. } => *tolerance = tol,
        }
        Ok(self)
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            ThinSet::Atoms { tolerance, .. }
            | ThinSet::GeometricCluster { tolerance, .. }
            | ThinSet::SelfSimilarCantor { tolerance, .. }
            | ThinSet::Union { tolerance, .. } => *tolerance,
        }
    }

    pub fn validate(&self) -> Result<(), ThinSetError> {
        let bad = |msg: String| Err(ThinSetError::Invalid(msg));
        if !(self.tolerance().is_finite() && self.tolerance() > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance()));
        }
        match self {
            ThinSet::Atoms { angles, .. } => {
                if angles.is_empty() {
                    return bad("atoms need at least one angle".into());
                }
                if let Some(a) = angles.iter().find(|a| !a.is_finite()) {
                    return bad(format!("non-finite angle {a}"));
                }
            }
            ThinSet::GeometricCluster { base, ratio, scale, .. } => {
                if !base.is_finite() || !scale.is_finite() || !ratio.is_finite() {
                    return bad("cluster parameters must be finite".into());
                }
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return bad(format!("cluster ratio must lie in (0, 1), got {ratio}"));
                }
                if *scale == 0.0 {
                    return bad("cluster scale must be nonzero".into());
                }
            }
            ThinSet::SelfSimilarCantor { carrier, ratio, .. } => {
                let [a, b] = *carrier;
                if !a.is_finite() || !b.is_finite() || !(a < b) {
                    return bad(format!("carrier must be a nondegenerate interval, got [{a}, {b}]"));
                }
                if !(*ratio > 0.0 && *ratio < 0.5) {
                    return bad(format!("dissection ratio must lie in (0, 1/2), got {ratio}"));
                }
            }
            ThinSet::Union { members, .. } => {
                if members.is_empty() {
                    return bad("union needs at least one member".into());
                }
                for m in members {
                    m.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Smallest and largest point of the set.
    pub fn carrier(&self) -> (f64, f64) {
        match self {
            ThinSet::Atoms { angles, .. } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &a in angles {
                    lo = lo.min(a);
                    hi = hi.max(a);
                }
                (lo, hi)
            }
            ThinSet::GeometricCluster { base, scale, .. } => {
                if *scale > 0.0 {
                    (*base, base + scale)
                } else {
                    (base + scale, *base)
                }
            }
            ThinSet::SelfSimilarCantor { carrier, .. } => (carrier[0], carrier[1]),
            ThinSet::Union { members, .. } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for m in members {
                    let (a, b) = m.carrier();
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
                (lo, hi)
            }
        }
    }

    /// The isolated points of the set (atoms and truncated cluster); `None`
    /// for descriptions with a continuum of points.
    fn points(&self) -> Option<Vec<f64>> {
        match self {
            ThinSet::Atoms { angles, .. } => {
                let mut p = angles.clone();
                p.sort_by(f64::total_cmp);
                p.dedup();
                Some(p)
            }
            ThinSet::GeometricCluster { base, ratio, scale, tolerance } => {
                Some(cluster_points(*base, *ratio, *scale, *tolerance))
            }
            _ => None,
        }
    }

    /// `|E_t \cap R|`: the measure of the closed `t`-fattening.
    ///
    /// Computed from runs of raw pieces: pieces whose mutual gaps are at most
    /// `2t` chain into one component of length `(hi - lo) + 2t`. That algebra
    /// never subtracts nearly-equal endpoint sums, so the result stays exact
    /// to rounding even when `t` is many orders below the point positions,
    /// which keeps `rho = t / measure` monotone at extreme probe depths.
    pub fn neighborhood_measure(&self, t: f64) -> Result<f64, ThinSetError> {
        check_radius(t)?;
        self.validate()?;
        match self {
            ThinSet::SelfSimilarCantor { carrier, ratio, .. } => {
                Ok(cantor_measure(carrier[1] - carrier[0], *ratio, t))
            }
            _ => {
                let mut pieces = Vec::new();
                self.raw_pieces(t, &mut pieces)?;
                pieces.sort_by(|x, y| x.lo.total_cmp(&y.lo).then(x.hi.total_cmp(&y.hi)));
                Ok(run_length_sum(&pieces, t))
            }
        }
    }

    /// Un-fattened closed pieces underlying the `t`-fattening: degenerate
    /// intervals for point families, stop-generation intervals (all of whose
    /// internal gaps are at most `2t`) for the self-similar family.
    fn raw_pieces(&self, t: f64, out: &mut Vec<Iv>) -> Result<(), ThinSetError> {
        match self {
            ThinSet::Atoms { .. } | ThinSet::GeometricCluster { .. } => {
                let pts = self.points().expect("point families have points");
                out.reserve(pts.len());
                out.extend(pts.iter().map(|&p| Iv::new(p, p)));
                Ok(())
            }
            ThinSet::SelfSimilarCantor { carrier, ratio, .. } => {
                cantor_raw_pieces(carrier[0], carrier[1], *ratio, t, out)
            }
            ThinSet::Union { members, .. } => {
                for m in members {
                    m.raw_pieces(t, out)?;
                }
                Ok(())
            }
        }
    }

    /// Disjoint, sorted components of the closed `t`-fattening.
    pub fn components(&self, t: f64) -> Result<Vec<Iv>, ThinSetError> {
        check_radius(t)?;
        self.validate()?;
        self.components_impl(t, None)
    }

    /// Components of the `t`-fattening clipped to `window`, still disjoint
    /// and sorted. Pieces outside the window are pruned before they are
    /// generated, so small windows stay cheap even at tiny `t`.
    pub fn components_in_window(&self, t: f64, window: Iv) -> Result<Vec<Iv>, ThinSetError> {
        check_radius(t)?;
        self.validate()?;
        self.components_impl(t, Some(window))
    }

    /// Measure of `E_t` intersected with `window`.
    pub fn measure_in_window(&self, t: f64, window: Iv) -> Result<f64, ThinSetError> {
        Ok(interval::total_length(&self.components_in_window(t, window)?))
    }

    /// Like [`components_in_window`](Self::components_in_window), but gives
    /// up with `None` as soon as more than `cap` clipped components show up.
    /// The overflow is detected without generating the rest, so probing a
    /// window that holds millions of slivers costs `O(cap)`, not millions.
    /// For unions the cap is checked against the pre-merge piece count, so a
    /// `None` can be conservative there.
    pub fn components_in_window_capped(
        &self,
        t: f64,
        window: Iv,
        cap: usize,
    ) -> Result<Option<Vec<Iv>>, ThinSetError> {
        check_radius(t)?;
        self.validate()?;
        let mut out = Vec::new();
        if self.capped_impl(t, window, cap, &mut out)? {
            Ok(Some(out))
        } else {
            Ok(None)
        }
    }

    fn capped_impl(
        &self,
        t: f64,
        window: Iv,
        cap: usize,
        out: &mut Vec<Iv>,
    ) -> Result<bool, ThinSetError> {
        match self {
            ThinSet::Atoms { .. } | ThinSet::GeometricCluster { .. } => {
                let part = self.components_impl(t, Some(window))?;
                if out.len() + part.len() > cap {
                    return Ok(false);
                }
                out.extend(part);
                Ok(true)
            }
            ThinSet::SelfSimilarCantor { carrier, ratio, .. } => {
                Ok(cantor_components_capped(carrier[0], carrier[1], *ratio, t, window, cap, out))
            }
            ThinSet::Union { members, .. } => {
                for m in members {
                    if !m.capped_impl(t, window, cap, out)? {
                        return Ok(false);
                    }
                }
                *out = interval::merge(std::mem::take(out));
                Ok(true)
            }
        }
    }

    fn components_impl(&self, t: f64, window: Option<Iv>) -> Result<Vec<Iv>, ThinSetError> {
        match self {
            ThinSet::Atoms { .. } | ThinSet::GeometricCluster { .. } => {
                let pts = self.points().expect("point families have points");
                let fattened: Vec<Iv> = pts.iter().map(|&p| Iv::new(p - t, p + t)).collect();
                let merged = interval::merge(fattened);
                Ok(match window {
                    Some(w) => merged.iter().filter_map(|iv| iv.clip(w)).collect(),
                    None => merged,
                })
            }
            ThinSet::SelfSimilarCantor { carrier, ratio, .. } => {
                let mut out = Vec::new();
                cantor_components(carrier[0], carrier[1], *ratio, t, window, &mut out)?;
                Ok(out)
            }
            ThinSet::Union { members, .. } => {
                let mut all = Vec::new();
                for m in members {
                    let mut part = m.components_impl(t, window)?;
                    if all.len() + part.len() > MAX_COMPONENTS {
                        return Err(ThinSetError::ToleranceUnattainable { t, cap: MAX_COMPONENTS });
                    }
                    all.append(&mut part);
                }
                Ok(interval::merge(all))
            }
        }
    }

    /// A cover of the set by `2^depth`-style generation intervals: exact for
    /// the Cantor family, points plus one tail interval for the cluster, the
    /// points themselves for atoms.
    pub fn cover_intervals(&self, depth: u32) -> Result<Vec<Iv>, ThinSetError> {
        self.validate()?;
        if depth > MAX_COVER_DEPTH {
            return Err(ThinSetError::DepthExceedsPrecision(depth));
        }
        match self {
            ThinSet::Atoms { .. } => {
                Ok(self.points().unwrap().iter().map(|&p| Iv::new(p, p)).collect())
            }
            ThinSet::GeometricCluster { base, ratio, scale, .. } => {
                let tail_reach = scale * ratio.powi(depth as i32);
                let (lo, hi) = if *scale > 0.0 {
                    (*base, base + tail_reach)
                } else {
                    (base + tail_reach, *base)
                };
                let mut out = vec![Iv::new(lo, hi)];
                for k in 0..depth {
                    let p = base + scale * ratio.powi(k as i32);
                    out.push(Iv::new(p, p));
                }
                Ok(interval::merge(out))
            }
            ThinSet::SelfSimilarCantor { carrier, ratio, .. } => {
                let mut cur = vec![Iv::new(carrier[0], carrier[1])];
                for _ in 0..depth {
                    let mut next = Vec::with_capacity(cur.len() * 2);
                    for iv in &cur {
                        let l = iv.len() * ratio;
                        if l <= 0.0 {
                            return Err(ThinSetError::DepthExceedsPrecision(depth));
                        }
                        next.push(Iv::new(iv.lo, iv.lo + l));
                        next.push(Iv::new(iv.hi - l, iv.hi));
                    }
                    cur = next;
                }
                Ok(cur)
            }
            ThinSet::Union { members, .. } => {
                let mut all = Vec::new();
                for m in members {
                    all.extend(m.cover_intervals(depth)?);
                }
                Ok(interval::merge(all))
            }
        }
    }

    /// Distance from `x` to the set, exact up to `tolerance / 4`.
    pub fn dist(&self, x: f64) -> f64 {
        match self {
            ThinSet::Atoms { .. } | ThinSet::GeometricCluster { .. } => {
                let pts = self.points().expect("point families have points");
                dist_to_sorted(&pts, x)
            }
            ThinSet::SelfSimilarCantor { carrier, ratio, tolerance } => {
                cantor_dist(carrier[0], carrier[1], *ratio, x, *tolerance)
            }
            ThinSet::Union { members, .. } => {
                members.iter().map(|m| m.dist(x)).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Whether the set meets the closed window, to the same `tolerance / 4`
    /// resolution as `dist`. Never materializes components, so it stays cheap
    /// at any scale.
    pub fn intersects(&self, w: Iv) -> bool {
        match self {
            ThinSet::Atoms { .. } | ThinSet::GeometricCluster { .. } => {
                let pts = self.points().expect("point families have points");
                let i = pts.partition_point(|&p| p < w.lo);
                i < pts.len() && pts[i] <= w.hi
            }
            ThinSet::SelfSimilarCantor { carrier, ratio, tolerance } => {
                cantor_intersects(carrier[0], carrier[1], *ratio, w, *tolerance)
            }
            ThinSet::Union { members, .. } => members.iter().any(|m| m.intersects(w)),
        }
    }

    /// `m` deterministic points of the set, spread over its extent.
    pub fn sample_points(&self, m: usize) -> Vec<f64> {
        if m == 0 {
            return Vec::new();
        }
        match self {
            ThinSet::Atoms { .. } | ThinSet::GeometricCluster { .. } => {
                let pts = self.points().expect("point families have points");
                stride_select(&pts, m)
            }
            ThinSet::SelfSimilarCantor { carrier, ratio, .. } => {
                let mut depth = 0u32;
                while (1usize << depth) < m && depth < MAX_COVER_DEPTH {
                    depth += 1;
                }
                let mut lefts = vec![(carrier[0], carrier[1] - carrier[0])];
                for _ in 0..depth {
                    let mut next = Vec::with_capacity(lefts.len() * 2);
                    for &(a, l) in &lefts {
                        let child = l * ratio;
                        next.push((a, child));
                        next.push((a + l - child, child));
                    }
                    lefts = next;
                }
                let pts: Vec<f64> = lefts.iter().map(|&(a, _)| a).collect();
                stride_select(&pts, m)
            }
            ThinSet::Union { members, .. } => {
                let per = m.div_ceil(members.len());
                let mut all: Vec<f64> =
                    members.iter().flat_map(|mem| mem.sample_points(per)).collect();
                all.sort_by(f64::total_cmp);
                all.dedup();
                stride_select(&all, m)
            }
        }
    }

    pub fn from_json(s: &str) -> Result<Self, ThinSetError> {
        let set: ThinSet = serde_json::from_str(s)?;
        set.validate()?;
        Ok(set)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serialization cannot fail")
    }
}

fn check_radius(t: f64) -> Result<(), ThinSetError> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(ThinSetError::BadRadius(t))
    }
}

fn stride_select(pts: &[f64], m: usize) -> Vec<f64> {
    if pts.is_empty() {
        return Vec::new();
    }
    (0..m).map(|i| pts[i * pts.len() / m.max(1)]).collect()
}

fn dist_to_sorted(pts: &[f64], x: f64) -> f64 {
    let i = pts.partition_point(|&p| p < x);
    let mut d = f64::INFINITY;
    if i < pts.len() {
        d = d.min(pts[i] - x);
    }
    if i > 0 {
        d = d.min(x - pts[i - 1]);
    }
    d
}

/// Truncated cluster support: `base + scale * ratio^k` while the offset stays
/// at least `tolerance / 4`, plus `base`, sorted ascending.
pub(crate) fn cluster_points(base: f64, ratio: f64, scale: f64, tolerance: f64) -> Vec<f64> {
    let cut = tolerance * 0.25;
    let mut pts = vec![base];
    let mut offset = scale;
    while offset.abs() >= cut {
        pts.push(base + offset);
        let next = offset * ratio;
        if next == offset {
            break;
        }
        offset = next;
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Exact fattening measure for the self-similar set on an interval of length
/// `l`: once every internal gap is at most `2t` the fattening is one interval
/// of length `l + 2t`; otherwise both halves contribute independently.
fn cantor_measure(l: f64, ratio: f64, t: f64) -> f64 {
    let mut l = l;
    let mut scale = 1.0f64;
    loop {
        if (1.0 - 2.0 * ratio) * l <= 2.0 * t {
            return scale * (l + 2.0 * t);
        }
        scale *= 2.0;
        l *= ratio;
    }
}

/// Sums `(hi - lo) + 2t` over maximal runs of sorted pieces whose gaps are at
/// most `2t`. Equivalent to fattening, merging and measuring, minus the
/// endpoint cancellation.
fn run_length_sum(pieces: &[Iv], t: f64) -> f64 {
    let two_t = 2.0 * t;
    let mut total = 0.0;
    let mut run: Option<(f64, f64)> = None;
    for p in pieces {
        run = match run {
            Some((lo, hi)) if p.lo - hi <= two_t => Some((lo, hi.max(p.hi))),
            Some((lo, hi)) => {
                total += (hi - lo) + two_t;
                Some((p.lo, p.hi))
            }
            None => Some((p.lo, p.hi)),
        };
    }
    if let Some((lo, hi)) = run {
        total += (hi - lo) + two_t;
    }
    total
}

fn cantor_raw_pieces(
    a: f64,
    b: f64,
    ratio: f64,
    t: f64,
    out: &mut Vec<Iv>,
) -> Result<(), ThinSetError> {
    let l = b - a;
    if (1.0 - 2.0 * ratio) * l <= 2.0 * t {
        if out.len() >= MAX_COMPONENTS {
            return Err(ThinSetError::ToleranceUnattainable { t, cap: MAX_COMPONENTS });
        }
        out.push(Iv::new(a, b));
        return Ok(());
    }
    let child = ratio * l;
    cantor_raw_pieces(a, a + child, ratio, t, out)?;
    cantor_raw_pieces(b - child, b, ratio, t, out)
}

fn cantor_components(
    a: f64,
    b: f64,
    ratio: f64,
    t: f64,
    window: Option<Iv>,
    out: &mut Vec<Iv>,
) -> Result<(), ThinSetError> {
    if let Some(w) = window {
        if a - t > w.hi || b + t < w.lo {
            return Ok(());
        }
    }
    let l = b - a;
    if (1.0 - 2.0 * ratio) * l <= 2.0 * t {
        let iv = Iv::new(a - t, b + t);
        let clipped = match window {
            Some(w) => iv.clip(w),
            None => Some(iv),
        };
        if let Some(c) = clipped {
            if out.len() >= MAX_COMPONENTS {
                return Err(ThinSetError::ToleranceUnattainable { t, cap: MAX_COMPONENTS });
            }
            out.push(c);
        }
        return Ok(());
    }
    let child = ratio * l;
    cantor_components(a, a + child, ratio, t, window, out)?;
    cantor_components(b - child, b, ratio, t, window, out)
}

/// Same descent as [`cantor_components`] with an output cap instead of the
/// global ceiling; `false` means the window holds more than `cap` pieces.
/// Stopped intervals at one level are separated by gaps wider than `2t`, so
/// the pushed pieces are disjoint and in order without a merge pass.
fn cantor_components_capped(
    a: f64,
    b: f64,
    ratio: f64,
    t: f64,
    w: Iv,
    cap: usize,
    out: &mut Vec<Iv>,
) -> bool {
    if a - t > w.hi || b + t < w.lo {
        return true;
    }
    let l = b - a;
    if (1.0 - 2.0 * ratio) * l <= 2.0 * t {
        if let Some(c) = Iv::new(a - t, b + t).clip(w) {
            if out.len() >= cap {
                return false;
            }
            out.push(c);
        }
        return true;
    }
    let child = ratio * l;
    cantor_components_capped(a, a + child, ratio, t, w, cap, out)
        && cantor_components_capped(b - child, b, ratio, t, w, cap, out)
}

/// Distance to the self-similar set by descending generation intervals.
/// Both endpoints of every generation interval belong to the set, and a point
/// inside a child interval is always closer to that child's portion of the
/// set than to the rest, so the descent is exact until the interval length
/// falls below the resolution cutoff.
fn cantor_dist(mut a: f64, mut b: f64, ratio: f64, x: f64, tolerance: f64) -> f64 {
    if x <= a {
        return a - x;
    }
    if x >= b {
        return x - b;
    }
    loop {
        let l = b - a;
        if l <= tolerance * 0.25 {
            return 0.0;
        }
        let child = ratio * l;
        let left_end = a + child;
        let right_start = b - child;
        if x <= left_end {
            b = left_end;
        } else if x >= right_start {
            a = right_start;
        } else {
            return (x - left_end).min(right_start - x);
        }
    }
}

/// Window intersection by descending generation intervals. Both endpoints of
/// every generation interval belong to the set, so a window that contains
/// either endpoint meets the set; a window strictly inside one interval
/// descends, and one straddling the middle gap resolves against both
/// children in O(1) because it then contains a child endpoint.
fn cantor_intersects(a: f64, b: f64, ratio: f64, w: Iv, tolerance: f64) -> bool {
    if w.hi < a || w.lo > b {
        return false;
    }
    if w.lo <= a || w.hi >= b {
        return true;
    }
    let l = b - a;
    if l <= tolerance * 0.25 {
        return true;
    }
    let child = ratio * l;
    cantor_intersects(a, a + child, ratio, w, tolerance)
        || cantor_intersects(b - child, b, ratio, w, tolerance)
}

/// Left endpoints of the `2^depth` generation intervals; all of them belong
/// to the set. Used to place atoms of a discrete approximating measure.
pub fn cantor_generation_left_endpoints(
    carrier: [f64; 2],
    ratio: f64,
    depth: u32,
) -> Result<Vec<f64>, ThinSetError> {
    if depth > MAX_COVER_DEPTH {
        return Err(ThinSetError::DepthExceedsPrecision(depth));
    }
    if !(ratio > 0.0 && ratio < 0.5) || !(carrier[0] < carrier[1]) {
        return Err(ThinSetError::Invalid("bad carrier or ratio".into()));
    }
    let mut cur = vec![(carrier[0], carrier[1] - carrier[0])];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(cur.len() * 2);
        for &(a, l) in &cur {
            let child = l * ratio;
            next.push((a, child));
            next.push((a + l - child, child));
        }
        cur = next;
    }
    Ok(cur.into_iter().map(|(a, _)| a).collect())
}

/// Writes a `t,measure` CSV for the given grid of radii.
pub fn write_measure_curve_csv<W: Write>(
    set: &ThinSet,
    ts: &[f64],
    mut out: W,
) -> Result<(), ThinSetError> {
    writeln!(out, "t,measure")?;
    for &t in ts {
        let m = set.neighborhood_measure(t)?;
        writeln!(out, "{t},{m}")?;
    }
    Ok(())
}
