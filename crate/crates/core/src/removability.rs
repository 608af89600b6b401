//! Removability experiments: the criterion integral `(1/eta) int_{E_eta} |f| dm`
//! over planar neighborhoods of a thin set on the real axis, Cauchy-integral
//! reconstruction over a circular contour, and a verdict combining both with
//! a growth check against a constructed majorant.
//!
//! `E_eta` is the true planar neighborhood `{x + iy : dist(x, E)^2 + y^2 <= eta^2}`.
//! Quadrature paves it with dyadic squares; inside each square the region is
//! resolved exactly in `x` through the set's interval components at the level
//! `sqrt(eta^2 - y^2)`, so only smoothness error remains and the boundary
//! strip costs nothing extra. Squares that reach a singular point of `f` are
//! finished by closed-form bounds, or declare divergence when `|f|` is not
//! integrable there.

use crate::inner_lab::{InnerError, InnerEval, MeasureDescriptor};
use crate::interval::Iv;
use crate::majorant::{MajorantError, MajorantOmega};
use crate::thin_sets::{ThinSet, ThinSetError};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

#[derive(Debug, thiserror::Error)]
pub enum RemovError {
    #[error("point at distance {dist} from the contour, margin is {margin}")]
    MarginViolated { dist: f64, margin: f64 },
    #[error("invalid contour: {0}")]
    BadContour(String),
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error(transparent)]
    Set(#[from] ThinSetError),
    #[error(transparent)]
    Majorant(#[from] MajorantError),
    #[error(transparent)]
    Inner(#[from] InnerError),
    #[error("descriptor parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Serializable catalog of test functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum FnDescriptor {
    #[serde(rename = "exp")]
    Exp,
    /// `c_0 + c_1 z + ... + c_k z^k`.
    #[serde(rename = "polynomial")]
    Polynomial { coeffs: Vec<f64> },
    /// `1 / (z - p)` with a real pole location.
    #[serde(rename = "pole")]
    Pole { p: f64 },
    /// `Theta(e^{iz})`: the circle pulls back to the real axis, the support
    /// of the measure to real points, and the exterior of the disk to the
    /// lower half-plane.
    #[serde(rename = "reflected_inner")]
    ReflectedInner { measure: MeasureDescriptor },
    /// `log((z - a)/(z - b))`, principal branch: bounded jump across `[a, b]`.
    #[serde(rename = "jump")]
    Jump { a: f64, b: f64 },
}

impl FnDescriptor {
    pub fn from_json(s: &str) -> Result<Self, RemovError> {
        Ok(serde_json::from_str(s)?)
    }
}

pub enum TestFn {
    Exp,
    Polynomial(Vec<f64>),
    Pole(f64),
    ReflectedInner(InnerEval),
    Jump(f64, f64),
}

impl TestFn {
    pub fn from_descriptor(d: &FnDescriptor) -> Result<Self, RemovError> {
        Ok(match d {
            FnDescriptor::Exp => TestFn::Exp,
            FnDescriptor::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err(RemovError::BadParam("polynomial needs coefficients".into()));
                }
                TestFn::Polynomial(coeffs.clone())
            }
            FnDescriptor::Pole { p } => TestFn::Pole(*p),
            FnDescriptor::ReflectedInner { measure } => {
                TestFn::ReflectedInner(InnerEval::new(measure.realize()?))
            }
            FnDescriptor::Jump { a, b } => {
                if a == b {
                    return Err(RemovError::BadParam("jump endpoints must differ".into()));
                }
                TestFn::Jump(*a, *b)
            }
        })
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            TestFn::Exp => z.exp(),
            TestFn::Polynomial(c) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for &ck in c.iter().rev() {
                    acc = acc * z + ck;
                }
                acc
            }
            TestFn::Pole(p) => (z - p).inv(),
            TestFn::ReflectedInner(ie) => {
                let mu = (Complex64::i() * z).exp();
                match ie.log_theta(mu) {
                    Ok(lt) if lt.re <= 700.0 => lt.exp(),
                    _ => Complex64::new(f64::INFINITY, 0.0),
                }
            }
            TestFn::Jump(a, b) => ((z - a) / (z - b)).ln(),
        }
    }

    /// `log |f(z)|`; stays finite where `f` itself would overflow.
    pub fn log_abs(&self, z: Complex64) -> f64 {
        match self {
            TestFn::Exp => z.re,
            TestFn::Polynomial(_) | TestFn::Jump(..) => self.eval(z).norm().ln(),
            TestFn::Pole(p) => -(z - p).norm().ln(),
            TestFn::ReflectedInner(ie) => {
                let mu = (Complex64::i() * z).exp();
                ie.log_abs_theta(mu).unwrap_or(f64::INFINITY)
            }
        }
    }

    /// Real-axis singular locations (all catalog singularities are real).
    pub fn singular_points(&self) -> Vec<f64> {
        match self {
            TestFn::Exp | TestFn::Polynomial(_) => Vec::new(),
            TestFn::Pole(p) => vec![*p],
            TestFn::ReflectedInner(ie) => {
                ie.measure().atoms().iter().map(|&(a, _)| a).collect()
            }
            TestFn::Jump(a, b) => vec![*a, *b],
        }
    }
}

/// Positively oriented circle, trapezoid-discretized.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Contour {
    pub center: f64,
    pub radius: f64,
    pub nodes: usize,
    pub margin: f64,
}

/// The ambient domain is the open disk of radius 2 around the carrier center.
pub const OMEGA_RADIUS: f64 = 2.0;

impl Contour {
    pub fn new(center: f64, radius: f64, nodes: usize, margin: f64) -> Result<Self, RemovError> {
        if !(radius > 0.0 && radius.is_finite()) || nodes < 8 {
            return Err(RemovError::BadContour(format!(
                "need positive radius and at least 8 nodes, got radius {radius}, {nodes} nodes"
            )));
        }
        if !(margin > 0.0 && margin < radius) {
            return Err(RemovError::BadContour(format!(
                "margin must lie in (0, radius), got {margin}"
            )));
        }
        Ok(Contour { center, radius, nodes, margin })
    }

    /// Circle around the carrier center with radius `1.5 * span + 0.5`,
    /// sized to wind once around all of `E` while staying inside the domain.
    pub fn default_for(set: &ThinSet) -> Result<Self, RemovError> {
        let (a, b) = set.carrier();
        let span = b - a;
        let margin = 0.05;
        // Wide carriers would push 1.5 span + 0.5 onto the domain boundary;
        // cap the radius two margins inside it.
        let radius = (1.5 * span + 0.5).min(OMEGA_RADIUS - 2.0 * margin);
        let c = Contour::new(0.5 * (a + b), radius, 512, margin)?;
        c.check_winding(set)?;
        Ok(c)
    }

    /// Winding 1 around `E` (all of the carrier strictly inside, by at least
    /// the margin) and 0 around the complement of the domain (the circle
    /// stays strictly inside the radius-2 disk).
    pub fn check_winding(&self, set: &ThinSet) -> Result<(), RemovError> {
        let (a, b) = set.carrier();
        let c = 0.5 * (a + b);
        let reach = (self.center - a).abs().max((self.center - b).abs());
        if reach > self.radius - self.margin {
            return Err(RemovError::BadContour(format!(
                "set reaches {reach} from the contour center, radius {} margin {}",
                self.radius, self.margin
            )));
        }
        if (self.center - c).abs() + self.radius >= OMEGA_RADIUS {
            return Err(RemovError::BadContour(format!(
                "contour of radius {} at offset {} leaves the domain",
                self.radius,
                (self.center - c).abs()
            )));
        }
        Ok(())
    }

    pub fn point(&self, j: usize) -> Complex64 {
        let th = TAU * j as f64 / self.nodes as f64;
        Complex64::new(self.center, 0.0) + Complex64::from_polar(self.radius, th)
    }

    /// Probe ring at 0.45 radius, rotated off the real axis so probes avoid
    /// the set.
    pub fn default_probes(&self, count: usize) -> Vec<Complex64> {
        (0..count)
            .map(|j| {
                let th = TAU * (j as f64 + 0.5) / count as f64;
                Complex64::new(self.center, 0.0) + Complex64::from_polar(0.45 * self.radius, th)
            })
            .collect()
    }
}

/// `(1/2 pi i) oint f(z)/(z - zeta) dz` by the trapezoid rule; exponentially
/// accurate in the node count for `f` holomorphic in a neighborhood of the
/// contour.
pub fn cauchy_reconstruct(
    f: &TestFn,
    contour: &Contour,
    zeta: Complex64,
) -> Result<Complex64, RemovError> {
    let c = Complex64::new(contour.center, 0.0);
    let dist = contour.radius - (zeta - c).norm();
    if dist < contour.margin {
        return Err(RemovError::MarginViolated { dist, margin: contour.margin });
    }
    let m = contour.nodes;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let th = TAU * j as f64 / m as f64;
        let e = Complex64::from_polar(contour.radius, th);
        let z = c + e;
        acc += f.eval(z) * e / (z - zeta);
    }
    Ok(acc / m as f64)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadParams {
    /// Target width of the criterion enclosure (after dividing by eta).
    pub tol: f64,
    /// Squares are not subdivided below this side length; what remains
    /// contributes its honest enclosure width.
    pub min_square: f64,
    /// Subdivision budget.
    pub max_cells: usize,
    /// `log |f|` at or above this level is treated as divergence.
    pub cap_log: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        QuadParams { tol: 1e-8, min_square: 1e-7, max_cells: 400_000, cap_log: 50.0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub enum CriterionOutcome {
    Enclosure {
        value: f64,
        lo: f64,
        hi: f64,
        cells: usize,
        /// Budget ran out before the width target; the width is still honest.
        flagged: bool,
    },
    Diverges {
        /// Where `log |f|` crossed the cap.
        at: [f64; 2],
        log_abs: f64,
    },
}

const G5_NODES: [f64; 5] =
    [-0.906_179_845_938_664, -0.538_469_310_105_683_1, 0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
const G5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];
const G3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const G3_WEIGHTS: [f64; 3] =
    [0.555_555_555_555_555_6, 0.888_888_888_888_888_8, 0.555_555_555_555_555_6];

/// Safety factor on the embedded-rule error estimate.
const ERR_SAFETY: f64 = 4.0;

/// Rows whose slice holds more components than this are bracketed instead of
/// integrated piece by piece; enumerating a window at level `u` costs about
/// `(width / u)^dim` pieces for the self-similar family, which passes any
/// fixed budget as `u -> 0` at the rim of the neighborhood.
const SLICE_CAP: usize = 256;

/// Saturation point for the evenness probe; far lower than [`SLICE_CAP`]
/// because only the comparison matters, not the pieces.
const COUNT_CAP: usize = 64;

#[derive(Clone, Copy, Debug)]
struct Cell {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Cell {
    fn side(&self) -> f64 {
        self.x1 - self.x0
    }

    fn split(&self) -> [Cell; 4] {
        let xm = 0.5 * (self.x0 + self.x1);
        let ym = 0.5 * (self.y0 + self.y1);
        [
            Cell { x0: self.x0, x1: xm, y0: self.y0, y1: ym },
            Cell { x0: xm, x1: self.x1, y0: self.y0, y1: ym },
            Cell { x0: self.x0, x1: xm, y0: ym, y1: self.y1 },
            Cell { x0: xm, x1: self.x1, y0: ym, y1: self.y1 },
        ]
    }
}

enum Abort {
    Div([f64; 2], f64),
    Set(ThinSetError),
}

enum Assessed {
    Outside,
    /// value, half-width
    Plain(f64, f64),
    /// enclosure [lo, hi] that subdivision cannot improve
    SingularFrozen(f64, f64),
    SingularSplit,
    Diverged([f64; 2], f64),
    Failed(ThinSetError),
}

struct HeapEntry {
    width: f64,
    id: u64,
    cell: Cell,
    value: f64,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.id == other.id
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // widest first; ties resolved by creation order for determinism
        self.width.total_cmp(&other.width).then_with(|| other.id.cmp(&self.id))
    }
}

struct Quadrature<'a> {
    f: &'a TestFn,
    set: &'a ThinSet,
    eta: f64,
    params: &'a QuadParams,
    singular: Vec<f64>,
}

impl<'a> Quadrature<'a> {
    /// Distance bounds for `dist(x, E)` over `[x0, x1]` from three samples
    /// and the 1-Lipschitz property.
    fn dist_bounds(&self, x0: f64, x1: f64) -> (f64, f64) {
        let w4 = 0.25 * (x1 - x0);
        let s = [self.set.dist(x0), self.set.dist(0.5 * (x0 + x1)), self.set.dist(x1)];
        let lo = s.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let hi = s.iter().fold(0.0f64, |a, &b| a.max(b));
        ((lo - w4).max(0.0), hi + w4)
    }

    fn classify(&self, cell: &Cell) -> Region {
        let (d_lo, d_hi) = self.dist_bounds(cell.x0, cell.x1);
        let y2_lo = if cell.y0 <= 0.0 && cell.y1 >= 0.0 {
            0.0
        } else {
            cell.y0.abs().min(cell.y1.abs()).powi(2)
        };
        let y2_hi = cell.y0.abs().max(cell.y1.abs()).powi(2);
        let e2 = self.eta * self.eta;
        if d_lo * d_lo + y2_lo > e2 {
            Region::Outside
        } else if d_hi * d_hi + y2_hi <= e2 {
            Region::Inside
        } else {
            Region::Straddle
        }
    }

    fn singular_in(&self, cell: &Cell) -> Option<f64> {
        let pad = 1e-3 * cell.side();
        self.singular
            .iter()
            .copied()
            .find(|&s| {
                s >= cell.x0 - pad
                    && s <= cell.x1 + pad
                    && cell.y0 - pad <= 0.0
                    && cell.y1 + pad >= 0.0
            })
    }

    /// Exact `int_{cell} dm / |z - p|` for a real `p`. With
    /// `F(A, B) = A asinh(B/A) + B asinh(A/B)` over the corner rectangle
    /// `[0,A] x [0,B]`, the signed antiderivative `G(a, b) = sgn(a) sgn(b)
    /// F(|a|, |b|)` turns any rectangle into an inclusion-exclusion of four
    /// corner values because the integrand is even in each coordinate.
    fn pole_cell_integral(cell: &Cell, p: f64) -> f64 {
        fn f0(a: f64, b: f64) -> f64 {
            if a == 0.0 || b == 0.0 {
                return 0.0;
            }
            a * (b / a).asinh() + b * (a / b).asinh()
        }
        fn g(a: f64, b: f64) -> f64 {
            a.signum() * b.signum() * f0(a.abs(), b.abs())
        }
        let (a0, a1) = (cell.x0 - p, cell.x1 - p);
        let (b0, b1) = (cell.y0, cell.y1);
        g(a1, b1) - g(a0, b1) - g(a1, b0) + g(a0, b0)
    }

    /// Upper bound on `int_{cell} |ln|z - s|| dm` for `s` in or near the cell,
    /// through the covering disk: `int_{|w|<=R} |ln|w|| dm = pi R^2 (ln(1/R) + 1/2)`
    /// for `R <= 1`.
    fn log_cell_bound(cell: &Cell, s: f64) -> f64 {
        let dx = (cell.x0 - s).abs().max((cell.x1 - s).abs());
        let dy = cell.y0.abs().max(cell.y1.abs());
        let r = dx.hypot(dy).min(1.0);
        if r <= 0.0 {
            return 0.0;
        }
        PI * r * r * ((1.0 / r).ln() + 0.5)
    }

    fn assess(&self, cell: &Cell) -> Assessed {
        match self.classify(cell) {
            Region::Outside => Assessed::Outside,
            region => {
                if let Some(s) = self.singular_in(cell) {
                    if cell.side() > self.params.min_square {
                        return Assessed::SingularSplit;
                    }
                    return self.singular_terminal(cell, s, region);
                }
                if let (TestFn::Pole(p), Region::Inside) = (self.f, region) {
                    return Assessed::Plain(Self::pole_cell_integral(cell, *p), 0.0);
                }
                match self.plain_value(cell) {
                    Ok((v, e)) => Assessed::Plain(v, e),
                    Err(Abort::Div(at, la)) => Assessed::Diverged(at, la),
                    Err(Abort::Set(e)) => Assessed::Failed(e),
                }
            }
        }
    }

    fn singular_terminal(&self, cell: &Cell, s: f64, region: Region) -> Assessed {
        match self.f {
            TestFn::Pole(p) => {
                let v = Self::pole_cell_integral(cell, *p);
                match region {
                    Region::Inside => Assessed::SingularFrozen(v, v),
                    _ => Assessed::SingularFrozen(0.0, v),
                }
            }
            TestFn::Jump(a, b) => {
                let area = cell.side() * (cell.y1 - cell.y0);
                let bound = Self::log_cell_bound(cell, *a).min(area * 700.0)
                    + Self::log_cell_bound(cell, *b).min(area * 700.0)
                    + area * PI;
                Assessed::SingularFrozen(0.0, bound)
            }
            TestFn::ReflectedInner(_) => {
                // |Theta(e^{iz})| grows like exp(c / dist) below the axis:
                // not integrable across the support
                let la = self.f.log_abs(Complex64::new(s, cell.y0.min(-1e-3 * self.eta)));
                Assessed::Diverged([s, cell.y0], la.max(self.params.cap_log))
            }
            // entire functions never reach this arm
            _ => match self.plain_value(cell) {
                Ok((v, e)) => Assessed::Plain(v, e),
                Err(Abort::Div(at, la)) => Assessed::Diverged(at, la),
                Err(Abort::Set(e)) => Assessed::Failed(e),
            },
        }
    }

    /// Per-square value with an honest error estimate. The `y` direction is
    /// parametrized as `y = eta sin(phi)` so the slice level
    /// `u = sqrt(eta^2 - y^2) = eta cos(phi)` is analytic in `phi` up to the
    /// rim of the neighborhood; the slice geometry still has isolated kinks
    /// in `phi` where component endpoints cross the square's walls, and the
    /// adaptive `phi` subdivision resolves those inside the square instead of
    /// forcing a spatial split of every rim cell.
    fn plain_value(&self, cell: &Cell) -> Result<(f64, f64), Abort> {
        let p0 = (cell.y0 / self.eta).clamp(-1.0, 1.0).asin();
        let p1 = (cell.y1 / self.eta).clamp(-1.0, 1.0).asin();
        if p1 <= p0 {
            return Ok((0.0, 0.0));
        }
        // u = eta cos(phi) is monotone on the cell (rows never straddle
        // y = 0) and slice occupancy is monotone in u, so the occupied phi
        // range is a single interval anchored at the small-|y| end. Bisecting
        // for its far edge keeps corner slivers that miss every Gauss node
        // from being frozen as exact zeros.
        let (near, far) = if cell.y0.abs() <= cell.y1.abs() {
            (p0, p1)
        } else {
            (p1, p0)
        };
        if !self.slice_occupied(near, cell) {
            return Ok((0.0, 0.0));
        }
        let mut edge = far;
        if !self.slice_occupied(far, cell) {
            let (mut occ, mut emp) = (near, far);
            for _ in 0..60 {
                let m = 0.5 * (occ + emp);
                if self.slice_occupied(m, cell) {
                    occ = m;
                } else {
                    emp = m;
                }
            }
            edge = occ;
        }
        let (lo, hi) = if near <= edge { (near, edge) } else { (edge, near) };
        if hi <= lo {
            return Ok((0.0, 0.0));
        }
        // The slice geometry kinks where a component endpoint crosses a cell
        // wall, which happens exactly at u = dist(wall); cut the phi range
        // there so no kink hides in the node-free gap next to an endpoint.
        let mut cuts: Vec<f64> = Vec::new();
        for d in [self.set.dist(cell.x0), self.set.dist(cell.x1)] {
            if d > 0.0 && d < self.eta {
                let p = (d / self.eta).acos();
                for cand in [p, -p] {
                    if cand > lo && cand < hi {
                        cuts.push(cand);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        let (mut v, mut e, mut a) = (0.0, 0.0, lo);
        for c in cuts {
            let (dv, de) = self.adaptive_phi(cell, a, c, 0)?;
            v += dv;
            e += de;
            a = c;
        }
        let (dv, de) = self.adaptive_phi(cell, a, hi, 0)?;
        Ok((v + dv, ERR_SAFETY * (e + de)))
    }

    /// Whether the slice at `phi` meets the cell's x-window: the minimum of
    /// the distance function over the window is zero when the set itself
    /// meets it and is attained at a wall otherwise (the distance is
    /// piecewise linear with interior minima only on the set).
    fn slice_occupied(&self, phi: f64, cell: &Cell) -> bool {
        let u = self.eta * phi.cos();
        if u <= 0.0 {
            return false;
        }
        self.set.intersects(Iv::new(cell.x0, cell.x1))
            || self.set.dist(cell.x0).min(self.set.dist(cell.x1)) <= u
    }

    /// Component count of the slice, saturating once it passes [`COUNT_CAP`].
    /// Two saturated counts compare equal: where both ends of a range are
    /// that fragmented, piece-level bookkeeping is meaningless and the
    /// bracket fallback in [`phi_rule`](Self::phi_rule) owns the error.
    fn slice_count(&self, phi: f64, cell: &Cell) -> Result<usize, Abort> {
        let u = self.eta * phi.cos();
        if u <= 0.0 {
            return Ok(0);
        }
        match self
            .set
            .components_in_window_capped(u, Iv::new(cell.x0, cell.x1), COUNT_CAP)
            .map_err(Abort::Set)?
        {
            Some(c) => Ok(c.len()),
            None => Ok(usize::MAX),
        }
    }

    /// Splits in `phi` while that is what reduces the error; once the
    /// `x`-direction estimate dominates, returns and lets the square itself
    /// be subdivided.
    fn adaptive_phi(&self, cell: &Cell, p0: f64, p1: f64, depth: u32) -> Result<(f64, f64), Abort> {
        let (v55, s55) = self.phi_rule(cell, p0, p1, true, true)?;
        let (v35, _) = self.phi_rule(cell, p0, p1, false, true)?;
        let (v53, _) = self.phi_rule(cell, p0, p1, true, false)?;
        let phi_err = (v55 - v35).abs();
        let x_err = (v55 - v53).abs();
        // A component count that differs across the range means a piece
        // appears somewhere inside it; keep splitting until the breakpoint is
        // isolated, or a new piece can slip between the nodes unseen.
        let uneven = self.slice_count(p0, cell)? != self.slice_count(p1, cell)?;
        if depth >= 24
            || (!uneven && (phi_err <= 1e-13 * (1.0 + v55.abs()) || x_err > phi_err))
        {
            return Ok((v55, phi_err + x_err + s55));
        }
        let mid = 0.5 * (p0 + p1);
        let (a, ea) = self.adaptive_phi(cell, p0, mid, depth + 1)?;
        let (b, eb) = self.adaptive_phi(cell, mid, p1, depth + 1)?;
        Ok((a + b, ea + eb))
    }

    /// Node sum plus the slack of any bracketed rows. A row whose slice is
    /// too fragmented to enumerate is integrated as if half the window were
    /// occupied, with the other half carried as slack: the truth lies
    /// between an empty row and a full one. That only happens as `u -> 0`,
    /// where the `u` weight already crushes the row, so the slack stays far
    /// below the rule-difference errors it joins.
    fn phi_rule(
        &self,
        cell: &Cell,
        p0: f64,
        p1: f64,
        fine_phi: bool,
        fine_x: bool,
    ) -> Result<(f64, f64), Abort> {
        let (nodes, weights): (&[f64], &[f64]) =
            if fine_phi { (&G5_NODES, &G5_WEIGHTS) } else { (&G3_NODES, &G3_WEIGHTS) };
        let half = 0.5 * (p1 - p0);
        let mid = 0.5 * (p0 + p1);
        let mut acc = 0.0;
        let mut slack = 0.0;
        for (n, w) in nodes.iter().zip(weights) {
            let phi = mid + half * n;
            let (s, c) = phi.sin_cos();
            let y = self.eta * s;
            let u = self.eta * c;
            if u <= 0.0 {
                continue;
            }
            let comps = self
                .set
                .components_in_window_capped(u, Iv::new(cell.x0, cell.x1), SLICE_CAP)
                .map_err(Abort::Set)?;
            match comps {
                Some(comps) => {
                    let mut row = 0.0;
                    for iv in comps {
                        row += self.x_rule(iv.lo.max(cell.x0), iv.hi.min(cell.x1), y, fine_x)?;
                    }
                    acc += w * half * row * u;
                }
                None => {
                    let full = self.x_rule(cell.x0, cell.x1, y, fine_x)?;
                    let half_row = 0.5 * w * half * full * u;
                    acc += half_row;
                    slack += half_row;
                }
            }
        }
        Ok((acc, slack))
    }

    fn x_rule(&self, a: f64, b: f64, y: f64, fine: bool) -> Result<f64, Abort> {
        if b <= a {
            return Ok(0.0);
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let (nodes, weights): (&[f64], &[f64]) =
            if fine { (&G5_NODES, &G5_WEIGHTS) } else { (&G3_NODES, &G3_WEIGHTS) };
        let mut acc = 0.0;
        for (n, w) in nodes.iter().zip(weights) {
            let x = mid + half * n;
            let la = self.f.log_abs(Complex64::new(x, y));
            if la >= self.params.cap_log {
                return Err(Abort::Div([x, y], la));
            }
            acc += w * half * la.exp();
        }
        Ok(acc)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Region {
    Outside,
    Inside,
    Straddle,
}

/// `(1/eta) int_{E_eta} |f| dm` by adaptive dyadic squares.
pub fn criterion_integral(
    f: &TestFn,
    set: &ThinSet,
    eta: f64,
    params: &QuadParams,
) -> Result<CriterionOutcome, RemovError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(RemovError::BadParam(format!("eta must lie in (0, 1], got {eta}")));
    }
    if params.min_square <= 0.0 || params.tol <= 0.0 {
        return Err(RemovError::BadParam("tol and min_square must be positive".into()));
    }
    let quad = Quadrature { f, set, eta, params, singular: f.singular_points() };

    // root squares of side eta, two rows per fattened component
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let mut next_id = 0u64;
    let mut frozen = 0.0f64;
    let mut frozen_width = 0.0f64;
    let mut cells = 0usize;
    let mut pending: Vec<Cell> = Vec::new();
    for comp in set.components(eta)? {
        let mut x = comp.lo;
        while x < comp.hi {
            pending.push(Cell { x0: x, x1: x + eta, y0: -eta, y1: 0.0 });
            pending.push(Cell { x0: x, x1: x + eta, y0: 0.0, y1: eta });
            x += eta;
        }
    }

    let scale = 1.0 / eta;
    let mut active_width = 0.0f64;
    let mut unresolved = 0usize;
    loop {
        // assess this wave in parallel, fold in creation order
        let assessed: Vec<(Cell, Assessed)> = pending
            .par_iter()
            .map(|c| (*c, quad.assess(c)))
            .collect();
        pending = Vec::new();
        for (cell, a) in assessed {
            cells += 1;
            match a {
                Assessed::Outside => {}
                Assessed::Plain(v, e) => {
                    if e <= 0.0 || cell.side() <= params.min_square {
                        frozen += v;
                        frozen_width += e;
                    } else {
                        active_width += e;
                        heap.push(HeapEntry { width: e, id: next_id, cell, value: v });
                        next_id += 1;
                    }
                }
                Assessed::SingularFrozen(lo, hi) => {
                    frozen += 0.5 * (lo + hi);
                    frozen_width += 0.5 * (hi - lo);
                }
                Assessed::SingularSplit => {
                    unresolved += 1;
                    heap.push(HeapEntry { width: f64::INFINITY, id: next_id, cell, value: 0.0 });
                    next_id += 1;
                }
                Assessed::Diverged(at, log_abs) => {
                    return Ok(CriterionOutcome::Diverges { at, log_abs });
                }
                Assessed::Failed(e) => return Err(e.into()),
            }
        }
        active_width = active_width.max(0.0);
        if heap.is_empty()
            || (unresolved == 0 && (active_width + frozen_width) * scale <= params.tol)
            || cells >= params.max_cells
        {
            let value: f64 = frozen + heap.iter().map(|e| e.value).sum::<f64>();
            // pad for the roundoff of summing one term per cell
            let width =
                frozen_width + active_width + cells as f64 * f64::EPSILON * value.abs();
            return Ok(CriterionOutcome::Enclosure {
                value: value * scale,
                lo: (value - width) * scale,
                hi: (value + width) * scale,
                cells,
                flagged: cells >= params.max_cells,
            });
        }
        // split the widest wave
        let wave = 64.min(heap.len());
        for _ in 0..wave {
            let e = heap.pop().unwrap();
            if e.width.is_finite() {
                active_width -= e.width;
            } else {
                unresolved -= 1;
            }
            pending.extend_from_slice(&e.cell.split());
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Removable,
    NotRemovable,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionRow {
    pub eta: f64,
    pub diverged: bool,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
    pub flagged: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GrowthRow {
    pub x: f64,
    pub t: f64,
    pub below_axis: bool,
    pub log_f: f64,
    pub log_omega: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthCheck {
    pub ok: bool,
    pub worst_margin: f64,
    pub rows: Vec<GrowthRow>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProbeRow {
    pub zeta: [f64; 2],
    pub f_value: [f64; 2],
    pub reconstructed: [f64; 2],
    pub mismatch: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RemovabilityReport {
    pub function: FnDescriptor,
    pub verdict: Verdict,
    pub criterion: Vec<CriterionRow>,
    pub growth: GrowthCheck,
    pub probes: Vec<ProbeRow>,
    pub max_mismatch: f64,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RemovabilityParams {
    /// Reconstruction agreement needed to call a function removable.
    pub mismatch_tol: f64,
    /// Mismatch at or above this level is treated as bounded away from zero.
    pub mismatch_floor: f64,
    pub quad: QuadParams,
    /// Growth cloud `t` range (log-spaced) and level count.
    pub growth_t_min: f64,
    pub growth_t_max: f64,
    pub growth_levels: usize,
    pub cloud_points: usize,
}

impl Default for RemovabilityParams {
    fn default() -> Self {
        RemovabilityParams {
            mismatch_tol: 1e-8,
            mismatch_floor: 1e-4,
            quad: QuadParams::default(),
            growth_t_min: 1e-4,
            growth_t_max: 3e-3,
            growth_levels: 6,
            cloud_points: 6,
        }
    }
}

/// Default halving schedule `0.1 * 2^{-k}`, `k = 0..5`.
pub fn default_eta_schedule() -> Vec<f64> {
    (0..5).map(|k| 0.1 * 0.5f64.powi(k)).collect()
}

/// Runs the full experiment: growth cloud against the majorant, criterion
/// trace over the schedule, and reconstruction mismatch at the probes.
///
/// Removable: criterion trace strictly decreasing to below half its start,
/// with reconstruction agreeing at every probe. Not removable: divergence,
/// or mismatch bounded away from zero. Anything else is inconclusive.
pub fn removability_test(
    f: &TestFn,
    descriptor: &FnDescriptor,
    set: &ThinSet,
    contour: &Contour,
    omega: &mut MajorantOmega,
    etas: &[f64],
    probes: &[Complex64],
    params: &RemovabilityParams,
) -> Result<RemovabilityReport, RemovError> {
    contour.check_winding(set)?;
    if etas.is_empty() || probes.is_empty() {
        return Err(RemovError::BadParam("need at least one eta and one probe".into()));
    }
    let mut notes = Vec::new();

    // growth cloud: both sides of the axis over set points
    let mut rows = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let xs = set.sample_points(params.cloud_points);
    let levels = params.growth_levels.max(2);
    for i in 0..levels {
        let frac = i as f64 / (levels - 1) as f64;
        let t = params.growth_t_min * (params.growth_t_max / params.growth_t_min).powf(frac);
        let log_omega = omega.eval_extending(t)?.ln();
        for &x in &xs {
            for below in [false, true] {
                let z = Complex64::new(x, if below { -t } else { t });
                let log_f = f.log_abs(z);
                let margin = log_f - log_omega;
                worst = worst.max(margin);
                rows.push(GrowthRow {
                    x,
                    t,
                    below_axis: below,
                    log_f,
                    log_omega,
                    ok: margin <= 1e-12,
                });
            }
        }
    }
    let growth = GrowthCheck { ok: rows.iter().all(|r| r.ok), worst_margin: worst, rows };
    if !growth.ok {
        notes.push(format!(
            "growth bound violated: log|f| exceeds log omega by {:.6e} at worst",
            growth.worst_margin
        ));
    }

    // criterion trace
    let mut criterion = Vec::new();
    let mut diverged = false;
    for &eta in etas {
        match criterion_integral(f, set, eta, &params.quad)? {
            CriterionOutcome::Enclosure { value, lo, hi, cells, flagged } => {
                if flagged {
                    notes.push(format!("quadrature budget exhausted at eta = {eta}"));
                }
                criterion.push(CriterionRow { eta, diverged: false, value, lo, hi, cells, flagged });
            }
            CriterionOutcome::Diverges { at, log_abs } => {
                diverged = true;
                notes.push(format!(
                    "criterion diverges at eta = {eta}: log|f| = {log_abs:.3e} near ({}, {})",
                    at[0], at[1]
                ));
                criterion.push(CriterionRow {
                    eta,
                    diverged: true,
                    value: f64::INFINITY,
                    lo: f64::INFINITY,
                    hi: f64::INFINITY,
                    cells: 0,
                    flagged: false,
                });
                break;
            }
        }
    }

    // reconstruction probes
    let mut probe_rows = Vec::with_capacity(probes.len());
    let mut max_mismatch = 0.0f64;
    for &zeta in probes {
        let fv = f.eval(zeta);
        let rec = cauchy_reconstruct(f, contour, zeta)?;
        let mismatch = (fv - rec).norm();
        max_mismatch = max_mismatch.max(mismatch);
        probe_rows.push(ProbeRow {
            zeta: [zeta.re, zeta.im],
            f_value: [fv.re, fv.im],
            reconstructed: [rec.re, rec.im],
            mismatch,
        });
    }

    let criterion_ok = !diverged
        && criterion.len() == etas.len()
        && criterion.windows(2).all(|w| w[1].value < w[0].value)
        && criterion.last().is_some_and(|last| last.value <= 0.5 * criterion[0].value);
    let verdict = if diverged || max_mismatch >= params.mismatch_floor {
        Verdict::NotRemovable
    } else if criterion_ok && max_mismatch <= params.mismatch_tol {
        Verdict::Removable
    } else {
        Verdict::Inconclusive
    };
    Ok(RemovabilityReport {
        function: descriptor.clone(),
        verdict,
        criterion,
        growth,
        probes: probe_rows,
        max_mismatch,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorant::{RhoCurve, RuleParams};

    fn atom_set() -> ThinSet {
        ThinSet::atoms(vec![0.0]).unwrap()
    }

    #[test]
    fn cauchy_closed_forms() {
        let gamma = Contour::new(0.0, 2.0, 256, 0.1).unwrap();
        let z = Complex64::new(0.5, 0.0);
        let rec = cauchy_reconstruct(&TestFn::Exp, &gamma, z).unwrap();
        assert!((rec - z.exp()).norm() < 1e-10, "exp: {rec}");
        // pole at 0: residues at 0 and zeta cancel, the true value is 2
        let rec = cauchy_reconstruct(&TestFn::Pole(0.0), &gamma, z).unwrap();
        assert!(rec.norm() < 1e-10, "pole: {rec}");
        let sq = TestFn::Polynomial(vec![0.0, 0.0, 1.0]);
        let rec = cauchy_reconstruct(&sq, &gamma, Complex64::new(0.3, 0.0)).unwrap();
        assert!((rec - 0.09).norm() < 1e-12, "square: {rec}");
    }

    #[test]
    fn cauchy_error_halves_geometrically() {
        for f in [TestFn::Exp, TestFn::Polynomial(vec![1.0, 0.0, 0.0, 2.0])] {
            let z = Complex64::new(0.4, 0.3);
            let mut prev = f64::INFINITY;
            let mut shrunk = 0;
            for m in [16usize, 32, 64, 128] {
                let gamma = Contour::new(0.0, 2.0, m, 0.1).unwrap();
                let err = (cauchy_reconstruct(&f, &gamma, z).unwrap() - f.eval(z)).norm();
                if prev.is_finite() && err > 1e-14 {
                    assert!(err < 0.5 * prev, "m = {m}: {err} after {prev}");
                }
                if err < 0.5 * prev {
                    shrunk += 1;
                }
                prev = err;
            }
            assert!(shrunk >= 2);
        }
    }

    #[test]
    fn cauchy_margin_guard() {
        let gamma = Contour::new(0.0, 2.0, 64, 0.1).unwrap();
        let e = cauchy_reconstruct(&TestFn::Exp, &gamma, Complex64::new(1.95, 0.0));
        assert!(matches!(e, Err(RemovError::MarginViolated { .. })));
    }

    #[test]
    fn criterion_constant_is_disk_area() {
        // f = c: criterion = c * pi * eta for a single atom
        let f = TestFn::Polynomial(vec![2.5]);
        let eta = 0.1;
        match criterion_integral(&f, &atom_set(), eta, &QuadParams::default()).unwrap() {
            CriterionOutcome::Enclosure { value, lo, hi, .. } => {
                let want = 2.5 * PI * eta;
                assert!(lo <= want && want <= hi, "[{lo}, {hi}] misses {want}");
                assert!((value - want).abs() < 1e-7, "value {value} vs {want}");
            }
            CriterionOutcome::Diverges { .. } => panic!("constant cannot diverge"),
        }
    }

    #[test]
    fn criterion_pole_is_two_pi() {
        let f = TestFn::Pole(0.0);
        for eta in [0.1, 0.0125] {
            match criterion_integral(&f, &atom_set(), eta, &QuadParams::default()).unwrap() {
                CriterionOutcome::Enclosure { value, .. } => {
                    assert!(
                        (value - TAU).abs() < 1e-6,
                        "eta = {eta}: {value} vs {TAU}, err {:.3e}",
                        (value - TAU).abs()
                    );
                }
                CriterionOutcome::Diverges { .. } => panic!("1/z is integrable"),
            }
        }
    }

    #[test]
    fn criterion_entire_shrinks_linearly() {
        let f = TestFn::Exp;
        let v = |eta: f64| match criterion_integral(&f, &atom_set(), eta, &QuadParams::default())
            .unwrap()
        {
            CriterionOutcome::Enclosure { value, .. } => value,
            CriterionOutcome::Diverges { .. } => panic!("entire"),
        };
        let (a, b) = (v(0.1), v(0.05));
        assert!((b / a - 0.5).abs() < 0.02, "ratio {}", b / a);
    }

    #[test]
    fn criterion_reflected_inner_diverges() {
        let d = FnDescriptor::ReflectedInner {
            measure: MeasureDescriptor::Atomic { atoms: vec![(0.0, 1.0)] },
        };
        let f = TestFn::from_descriptor(&d).unwrap();
        match criterion_integral(&f, &atom_set(), 0.05, &QuadParams::default()).unwrap() {
            CriterionOutcome::Diverges { log_abs, .. } => {
                assert!(log_abs >= 50.0);
            }
            CriterionOutcome::Enclosure { value, .. } => {
                panic!("expected divergence, got {value}")
            }
        }
    }

    #[test]
    fn criterion_over_cantor_set() {
        let set = ThinSet::cantor(0.0, 1.0, 1.0 / 3.0).unwrap();
        let f = TestFn::Polynomial(vec![1.0]);
        match criterion_integral(&f, &set, 0.05, &QuadParams::default()).unwrap() {
            CriterionOutcome::Enclosure { value, lo, hi, .. } => {
                // area of E_eta: strip integral of the 1-D measure at
                // sqrt(eta^2 - y^2); sanity bounds from |E_eta| * 2 eta / eta
                // and the measure at level eta
                let m = set.neighborhood_measure(0.05).unwrap();
                assert!(value > 0.0 && value < 2.0 * m, "value {value}, measure {m}");
                assert!(lo <= value && value <= hi);
            }
            CriterionOutcome::Diverges { .. } => panic!("constant cannot diverge"),
        }
    }

    fn build_omega(set: ThinSet) -> MajorantOmega {
        MajorantOmega::build(RhoCurve::new(set), RuleParams::default()).unwrap()
    }

    #[test]
    fn verdict_exp_removable() {
        let set = atom_set();
        let gamma = Contour::default_for(&set).unwrap();
        let mut omega = build_omega(set.clone());
        let d = FnDescriptor::Exp;
        let f = TestFn::from_descriptor(&d).unwrap();
        let probes = gamma.default_probes(8);
        let report = removability_test(
            &f,
            &d,
            &set,
            &gamma,
            &mut omega,
            &default_eta_schedule(),
            &probes,
            &RemovabilityParams::default(),
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Removable, "notes: {:?}", report.notes);
        assert!(report.max_mismatch <= 1e-8, "mismatch {}", report.max_mismatch);
        assert!(report.growth.ok, "worst margin {}", report.growth.worst_margin);
        assert!(report.criterion.windows(2).all(|w| w[1].value < w[0].value));
    }

    #[test]
    fn verdict_pole_not_removable() {
        let set = atom_set();
        let gamma = Contour::default_for(&set).unwrap();
        let mut omega = build_omega(set.clone());
        let d = FnDescriptor::Pole { p: 0.0 };
        let f = TestFn::from_descriptor(&d).unwrap();
        let probes = gamma.default_probes(8);
        let report = removability_test(
            &f,
            &d,
            &set,
            &gamma,
            &mut omega,
            &default_eta_schedule(),
            &probes,
            &RemovabilityParams::default(),
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::NotRemovable);
        // reconstruction gives 0 inside, so the mismatch at each probe is
        // exactly |1/zeta|
        for row in &report.probes {
            let zeta = Complex64::new(row.zeta[0], row.zeta[1]);
            let want = zeta.norm().recip();
            assert!(
                (row.mismatch - want).abs() < 1e-8,
                "probe {zeta}: {} vs {want}",
                row.mismatch
            );
        }
        // criterion stays pinned at 2 pi across the whole schedule
        for row in &report.criterion {
            assert!((row.value - TAU).abs() < 1e-6, "eta {}: {}", row.eta, row.value);
        }
    }

    #[test]
    fn verdict_reflected_inner_diverges_and_breaks_growth() {
        let set = atom_set();
        let gamma = Contour::default_for(&set).unwrap();
        let mut omega = build_omega(set.clone());
        let d = FnDescriptor::ReflectedInner {
            measure: MeasureDescriptor::Atomic { atoms: vec![(0.0, 1.0)] },
        };
        let f = TestFn::from_descriptor(&d).unwrap();
        let probes = gamma.default_probes(8);
        let report = removability_test(
            &f,
            &d,
            &set,
            &gamma,
            &mut omega,
            &default_eta_schedule(),
            &probes,
            &RemovabilityParams::default(),
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::NotRemovable);
        assert!(report.criterion.iter().any(|r| r.diverged));
        assert!(!report.growth.ok, "reflected inner must violate the growth bound");
        assert!(report
            .growth
            .rows
            .iter()
            .any(|r| r.below_axis && !r.ok), "violation must come from outside the disk");
    }

    #[test]
    fn descriptor_json_matches_cli_shape() {
        let d = FnDescriptor::from_json(r#"{"tag":"pole","p":0.0}"#).unwrap();
        assert_eq!(d, FnDescriptor::Pole { p: 0.0 });
        let d = FnDescriptor::from_json(r#"{"tag":"exp"}"#).unwrap();
        assert_eq!(d, FnDescriptor::Exp);
        let js = serde_json::to_string(&FnDescriptor::Jump { a: 0.0, b: 0.25 }).unwrap();
        assert_eq!(FnDescriptor::from_json(&js).unwrap(), FnDescriptor::Jump { a: 0.0, b: 0.25 });
        assert!(FnDescriptor::from_json(r#"{"tag":"nope"}"#).is_err());
        assert!(TestFn::from_descriptor(&FnDescriptor::Jump { a: 1.0, b: 1.0 }).is_err());
    }

    #[test]
    fn pole_cell_closed_form() {
        // int over [-h,h]^2 of 1/|z| = 8 h asinh(1)
        let h = 0.25;
        let cell = Cell { x0: -h, x1: h, y0: -h, y1: h };
        let v = Quadrature::pole_cell_integral(&cell, 0.0);
        let want = 8.0 * h * 1.0f64.asinh();
        assert!((v - want).abs() < 1e-12, "{v} vs {want}");
        // off-center pole still exact: compare against a fine Riemann sum
        let cell = Cell { x0: 0.0, x1: 0.5, y0: -0.25, y1: 0.25 };
        let v = Quadrature::pole_cell_integral(&cell, 0.125);
        let mut sum = 0.0;
        let n = 4000;
        for i in 0..n {
            for j in 0..n {
                let x = 0.0 + (i as f64 + 0.5) * 0.5 / n as f64;
                let y = -0.25 + (j as f64 + 0.5) * 0.5 / n as f64;
                sum += (0.5 / n as f64) * (0.5 / n as f64) / (x - 0.125).hypot(y);
            }
        }
        assert!((v - sum).abs() < 1e-3, "{v} vs {sum}");
    }
}
