//! Singular inner functions from discrete measures on the circle, the
//! quantities `delta_n = inf_D max(|lambda|^n, |Theta(lambda)|)` (in logs),
//! outside-the-disk witness points, and the combined theorem check
//! `u_n^2 * delta_n <= 1 + slack`.
//!
//! `Theta(lambda) = exp(-sum_j w_j (zeta_j + lambda)/(zeta_j - lambda))` is
//! evaluated through that Moebius sum directly on both sides of the circle;
//! under `lambda -> 1 / conj(lambda)` the real part flips sign exactly, so
//! `log|Theta|` inside and outside are honest mirror values computed by the
//! same kernel, and the reflection identity test exercises real rounding.
//! Everything stays in logs; `|Theta|` itself overflows a few thousandths
//! away from the support on the outside.

use crate::esterle_seq::EsterleSequence;
use crate::majorant::{MajorantError, MajorantOmega};
use crate::thin_sets::{self, ThinSetError};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum InnerError {
    #[error("evaluation point within {eps} of the singular support (distance {dist})")]
    TooClose { dist: f64, eps: f64 },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("|Theta| overflows: log|Theta| = {0}")]
    Overflow(f64),
    #[error(transparent)]
    Majorant(#[from] MajorantError),
    #[error(transparent)]
    Set(#[from] ThinSetError),
    #[error("descriptor parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn default_mass() -> f64 {
    1.0
}

/// Serializable description of a discrete singular measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum MeasureDescriptor {
    /// Point masses `[(angle, weight), ...]`.
    #[serde(rename = "atomic")]
    Atomic { atoms: Vec<(f64, f64)> },
    /// `2^depth` equal atoms snapped to the left endpoints of the depth-th
    /// generation intervals of a self-similar set, so every atom angle lies
    /// in the set itself.
    #[serde(rename = "cantor")]
    Cantor {
        carrier: [f64; 2],
        ratio: f64,
        depth: u32,
        #[serde(default = "default_mass")]
        total_mass: f64,
    },
}

impl MeasureDescriptor {
    pub fn realize(&self) -> Result<SingularMeasure, InnerError> {
        match self {
            MeasureDescriptor::Atomic { atoms } => SingularMeasure::atomic(atoms.clone()),
            MeasureDescriptor::Cantor { carrier, ratio, depth, total_mass } => {
                SingularMeasure::cantor_snapped(*carrier, *ratio, *depth, *total_mass)
            }
        }
    }

    pub fn from_json(s: &str) -> Result<Self, InnerError> {
        let d: MeasureDescriptor = serde_json::from_str(s)?;
        d.realize()?;
        Ok(d)
    }
}

/// A finite positive atomic measure on the circle, angles in the same
/// coordinates as the thin sets.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularMeasure {
    atoms: Vec<(f64, f64)>,
    total: f64,
}

impl SingularMeasure {
    pub fn atomic(mut atoms: Vec<(f64, f64)>) -> Result<Self, InnerError> {
        if atoms.is_empty() {
            return Err(InnerError::InvalidMeasure("need at least one atom".into()));
        }
        for &(a, w) in &atoms {
            if !a.is_finite() {
                return Err(InnerError::InvalidMeasure(format!("non-finite angle {a}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(InnerError::InvalidMeasure(format!("weight must be positive, got {w}")));
            }
        }
        atoms.sort_by(|x, y| x.0.total_cmp(&y.0));
        let total = atoms.iter().map(|&(_, w)| w).sum();
        Ok(SingularMeasure { atoms, total })
    }

    pub fn cantor_snapped(
        carrier: [f64; 2],
        ratio: f64,
        depth: u32,
        total_mass: f64,
    ) -> Result<Self, InnerError> {
        if !(total_mass.is_finite() && total_mass > 0.0) {
            return Err(InnerError::InvalidMeasure(format!(
                "total mass must be positive, got {total_mass}"
            )));
        }
        let lefts = thin_sets::cantor_generation_left_endpoints(carrier, ratio, depth)?;
        let w = total_mass / lefts.len() as f64;
        SingularMeasure::atomic(lefts.into_iter().map(|a| (a, w)).collect())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total
    }
}

/// Evaluator for the singular inner function of a measure. Points closer to
/// the support than `eps_excl` (chord distance) are refused rather than
/// returning garbage.
#[derive(Clone, Debug)]
pub struct InnerEval {
    measure: SingularMeasure,
    units: Vec<(Complex64, f64)>,
    eps_excl: f64,
}

pub const DEFAULT_EPS_EXCL: f64 = 1e-12;

impl InnerEval {
    pub fn new(measure: SingularMeasure) -> Self {
        Self::with_exclusion(measure, DEFAULT_EPS_EXCL)
    }

    pub fn with_exclusion(measure: SingularMeasure, eps_excl: f64) -> Self {
        let units = measure
            .atoms()
            .iter()
            .map(|&(a, w)| (Complex64::from_polar(1.0, a), w))
            .collect();
        InnerEval { measure, units, eps_excl }
    }

    pub fn measure(&self) -> &SingularMeasure {
        &self.measure
    }

    /// Chord distance from `lam` to the closest atom.
    pub fn min_dist(&self, lam: Complex64) -> f64 {
        self.units
            .iter()
            .map(|&(z, _)| (z - lam).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// `log Theta(lambda)` as a complex number (real part `log|Theta|`,
    /// imaginary part the unwrapped argument of the Moebius sum). Valid on
    /// both sides of the circle away from the atoms.
    pub fn log_theta(&self, lam: Complex64) -> Result<Complex64, InnerError> {
        let eps2 = self.eps_excl * self.eps_excl;
        let mut acc = Complex64::new(0.0, 0.0);
        for &(zeta, w) in &self.units {
            let den = zeta - lam;
            let d2 = den.norm_sqr();
            if d2 < eps2 {
                return Err(InnerError::TooClose { dist: d2.sqrt(), eps: self.eps_excl });
            }
            acc += ((zeta + lam) * den.conj()) * (w / d2);
        }
        Ok(-acc)
    }

    /// `log|Theta(lambda)|`, the workhorse: negative inside the disk,
    /// positive outside.
    pub fn log_abs_theta(&self, lam: Complex64) -> Result<f64, InnerError> {
        let eps2 = self.eps_excl * self.eps_excl;
        let num = 1.0 - lam.norm_sqr();
        let mut acc = 0.0;
        for &(zeta, w) in &self.units {
            let d2 = (zeta - lam).norm_sqr();
            if d2 < eps2 {
                return Err(InnerError::TooClose { dist: d2.sqrt(), eps: self.eps_excl });
            }
            acc += w / d2;
        }
        Ok(-num * acc)
    }

    /// `Theta(lambda)` itself; errors out instead of overflowing.
    pub fn theta(&self, lam: Complex64) -> Result<Complex64, InnerError> {
        let lt = self.log_theta(lam)?;
        if lt.re > 700.0 {
            return Err(InnerError::Overflow(lt.re));
        }
        Ok(lt.exp())
    }
}

/// Grid parameters for the `delta_n` search. Radii are `1 - t` with `t`
/// log-spaced down to `t_floor`; angles combine a uniform coarse ring with
/// per-atom offsets proportional to `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeltaGrid {
    pub radial_points: usize,
    pub t_floor: f64,
    pub coarse_angles: usize,
    pub atom_offsets: Vec<f64>,
    pub golden_iters: u32,
    pub refine_rounds: u32,
}

impl Default for DeltaGrid {
    fn default() -> Self {
        DeltaGrid {
            radial_points: 64,
            t_floor: 1e-9,
            coarse_angles: 96,
            atom_offsets: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            golden_iters: 80,
            refine_rounds: 2,
        }
    }
}

impl DeltaGrid {
    fn validate(&self) -> Result<(), InnerError> {
        if self.radial_points < 2 || self.coarse_angles < 4 {
            return Err(InnerError::InvalidMeasure("delta grid too small".into()));
        }
        if !(self.t_floor > 0.0 && self.t_floor < 0.5) {
            return Err(InnerError::InvalidMeasure(format!(
                "t_floor must lie in (0, 1/2), got {}",
                self.t_floor
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaReport {
    pub n: u32,
    /// `log delta_n` from the interior search (grid + refinement).
    pub log_delta: f64,
    pub argmin_r: f64,
    pub argmin_theta: f64,
    /// Best grid value before refinement.
    pub log_delta_grid: f64,
    /// Independent exterior estimate `-sup min(n log|mu|, log|Theta(mu)|)`.
    pub log_delta_exterior: f64,
    /// `log_delta_exterior - log_delta`; zero in exact arithmetic.
    pub duality_gap: f64,
    pub grid_points: usize,
    /// Set when the argmin hugs the grid boundary or the two branches of the
    /// max are far from crossing at the optimum.
    pub crossing_warn: bool,
}

struct GridRow {
    t: f64,
    r: f64,
    angles: Vec<f64>,
    /// `log|Theta|` at `(1-t) e^{i theta}` per angle.
    inside: Vec<f64>,
    /// `log|Theta|` at `e^{i theta} / (1-t)` per angle, negated so the
    /// exterior objective is `max(n log r, outside[k])`.
    outside_neg: Vec<f64>,
}

/// Precomputed `log|Theta|` grid shared by every `n`; building it costs one
/// pass over atoms x gridpoints, after which each `delta_n` is a cheap scan
/// plus local refinement.
pub struct DeltaSolver<'a> {
    ie: &'a InnerEval,
    grid: DeltaGrid,
    rows: Vec<GridRow>,
    points: usize,
    ln_step: f64,
}

/// Shallow end of the radial grid: `r = 1 - T_MAX` nearly at the center, so
/// small-`n` optima (which sit at moderate radii) stay inside the lattice.
const T_MAX: f64 = 0.999;

impl<'a> DeltaSolver<'a> {
    pub fn new(ie: &'a InnerEval, grid: &DeltaGrid) -> Result<Self, InnerError> {
        grid.validate()?;
        let rp = grid.radial_points;
        let ln_step = (T_MAX.ln() - grid.t_floor.ln()) / (rp - 1) as f64;
        let ts: Vec<f64> = (0..rp)
            .map(|j| (T_MAX.ln() - ln_step * j as f64).exp())
            .collect();
        let rows: Vec<GridRow> = ts
            .par_iter()
            .map(|&t| {
                let r = 1.0 - t;
                let mut angles: Vec<f64> =
                    (0..grid.coarse_angles).map(|i| TAU * i as f64 / grid.coarse_angles as f64).collect();
                for &(a, _) in ie.measure().atoms() {
                    angles.push(a);
                    for &c in &grid.atom_offsets {
                        angles.push(a + c * t);
                        angles.push(a - c * t);
                    }
                }
                angles.sort_by(f64::total_cmp);
                angles.dedup();
                let inside: Result<Vec<f64>, InnerError> = angles
                    .iter()
                    .map(|&th| ie.log_abs_theta(Complex64::from_polar(r, th)))
                    .collect();
                let outside_neg: Result<Vec<f64>, InnerError> = angles
                    .iter()
                    .map(|&th| Ok(-ie.log_abs_theta(Complex64::from_polar(1.0 / r, th))?))
                    .collect();
                Ok(GridRow { t, r, angles, inside: inside?, outside_neg: outside_neg? })
            })
            .collect::<Result<Vec<_>, InnerError>>()?;
        let points = rows.iter().map(|row| row.angles.len()).sum();
        Ok(DeltaSolver { ie, grid: grid.clone(), rows, points, ln_step })
    }

    fn objective_inside(&self, n: f64, t: f64, th: f64) -> f64 {
        let r = (1.0 - t).max(1e-15);
        let a = n * r.ln();
        let b = self.ie.log_abs_theta(Complex64::from_polar(r, th)).unwrap_or(f64::INFINITY);
        a.max(b)
    }

    fn objective_outside(&self, n: f64, t: f64, th: f64) -> f64 {
        let r = (1.0 - t).max(1e-15);
        let a = n * r.ln();
        let b = -self.ie.log_abs_theta(Complex64::from_polar(1.0 / r, th)).unwrap_or(f64::NEG_INFINITY);
        a.max(b)
    }

    /// Raw `log|Theta|` branch of the objective, without the `n log r` cap.
    fn branch(&self, t: f64, th: f64, exterior: bool) -> f64 {
        let r = (1.0 - t).max(1e-15);
        if exterior {
            -self.ie.log_abs_theta(Complex64::from_polar(1.0 / r, th)).unwrap_or(f64::NEG_INFINITY)
        } else {
            self.ie.log_abs_theta(Complex64::from_polar(r, th)).unwrap_or(f64::INFINITY)
        }
    }

    /// One refined search over a (start row, start angle index) seed.
    ///
    /// Coordinate descent, but the angle step minimizes `log|Theta|` alone:
    /// the full objective is flat in the angle wherever `n log r` is the
    /// active branch, while `log|Theta|` is strictly curved, and lowering it
    /// pointwise can only lower the ray's eventual min-of-max. The radius
    /// step then solves the 1-D V-shaped problem on the chosen ray.
    fn refine(&self, n: f64, row_idx: usize, ang_idx: usize, exterior: bool) -> (f64, f64, f64) {
        let obj = |t: f64, th: f64| {
            if exterior {
                self.objective_outside(n, t, th)
            } else {
                self.objective_inside(n, t, th)
            }
        };
        let row = &self.rows[row_idx];
        let mut t_best = row.t;
        let mut th_best = row.angles[ang_idx];
        // local angle window: out to the neighboring candidates
        let coarse_step = TAU / self.grid.coarse_angles as f64;
        let w_lo = if ang_idx > 0 { th_best - row.angles[ang_idx - 1] } else { coarse_step };
        let w_hi = if ang_idx + 1 < row.angles.len() {
            row.angles[ang_idx + 1] - th_best
        } else {
            coarse_step
        };
        let ln_step = self.ln_step;
        let mut best = obj(t_best, th_best);
        for _ in 0..self.grid.refine_rounds {
            let (th, _) = golden_min(
                |x| self.branch(t_best, x, exterior),
                th_best - w_lo,
                th_best + w_hi,
                self.grid.golden_iters,
            );
            let v = obj(t_best, th);
            if v <= best {
                best = v;
                th_best = th;
            }
            let lt = t_best.ln();
            let (lt_new, v) = golden_min(
                |x| obj(x.exp().min(1.0 - 1e-12), th_best),
                lt - ln_step,
                (lt + ln_step).min(0.0),
                self.grid.golden_iters,
            );
            if v < best {
                best = v;
                t_best = lt_new.exp().min(1.0 - 1e-12);
            }
        }
        (best, t_best, th_best)
    }

    /// Scans the shared grid for one `n` and refines around the best cell.
    pub fn delta_for(&self, n: u32) -> DeltaReport {
        let nf = f64::from(n);
        // lambda = 0 is always a candidate: the objective degenerates to
        // log|Theta(0)| = -total mass
        let center = -self.ie.measure().total_mass();
        // seeds track (objective, Theta branch): ties along the flat
        // n log r branch resolve toward the deepest Theta dip
        let mut best_in = (center, f64::INFINITY, usize::MAX, usize::MAX);
        let mut best_out = (center, f64::INFINITY, usize::MAX, usize::MAX);
        for (j, row) in self.rows.iter().enumerate() {
            let a = nf * row.r.ln();
            for (k, (&bi, &bo)) in row.inside.iter().zip(&row.outside_neg).enumerate() {
                let vi = a.max(bi);
                if vi < best_in.0 || (vi == best_in.0 && bi < best_in.1) {
                    best_in = (vi, bi, j, k);
                }
                let vo = a.max(bo);
                if vo < best_out.0 || (vo == best_out.0 && bo < best_out.1) {
                    best_out = (vo, bo, j, k);
                }
            }
        }
        let grid_val = best_in.0;
        let (mut log_delta, mut argmin_r, mut argmin_theta, mut warn) = (center, 0.0, 0.0, false);
        if best_in.2 != usize::MAX {
            let (v, t, th) = self.refine(nf, best_in.2, best_in.3, false);
            if v <= grid_val {
                log_delta = v;
                argmin_r = 1.0 - t;
                argmin_theta = th;
            } else {
                let row = &self.rows[best_in.2];
                log_delta = grid_val;
                argmin_r = row.r;
                argmin_theta = row.angles[best_in.3];
            }
            // deepest row or unbalanced branches: flag for inspection
            let r = argmin_r.max(1e-15);
            let gap = (nf * r.ln()
                - self
                    .ie
                    .log_abs_theta(Complex64::from_polar(r, argmin_theta))
                    .unwrap_or(f64::INFINITY))
            .abs();
            warn = best_in.2 + 1 == self.rows.len() || gap > 1.0;
        }
        let log_delta_exterior = if best_out.2 != usize::MAX {
            let (v, _, _) = self.refine(nf, best_out.2, best_out.3, true);
            v.min(best_out.0)
        } else {
            center
        };
        DeltaReport {
            n,
            log_delta,
            argmin_r,
            argmin_theta,
            log_delta_grid: grid_val.min(center),
            log_delta_exterior,
            duality_gap: log_delta_exterior - log_delta,
            grid_points: self.points,
            crossing_warn: warn,
        }
    }

    pub fn delta_batch(&self, ns: &[u32]) -> Vec<DeltaReport> {
        ns.par_iter().map(|&n| self.delta_for(n)).collect()
    }
}

/// Golden-section minimum of `f` on `[a, b]`.
fn golden_min(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, iters: u32) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    if b < a {
        std::mem::swap(&mut a, &mut b);
    }
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// One-shot convenience wrappers.
pub fn delta_n(ie: &InnerEval, n: u32, grid: &DeltaGrid) -> Result<DeltaReport, InnerError> {
    Ok(DeltaSolver::new(ie, grid)?.delta_for(n))
}

pub fn delta_batch(
    ie: &InnerEval,
    ns: &[u32],
    grid: &DeltaGrid,
) -> Result<Vec<DeltaReport>, InnerError> {
    Ok(DeltaSolver::new(ie, grid)?.delta_batch(ns))
}

/// 1-D oracle for a single atom of weight `c`: on the ray toward the atom the
/// objective is `max(n log r, -c (1+r)/(1-r))`, minimized where
/// `phi(r) = n log r + c (1+r)/(1-r)` vanishes; `phi` is strictly increasing,
/// so bisection is exact. Returns `log delta_n`.
pub fn delta_n_atomic_ray(c: f64, n: u32) -> f64 {
    let nf = f64::from(n);
    let phi = |r: f64| nf * r.ln() + c * (1.0 + r) / (1.0 - r);
    let (mut lo, mut hi) = (1e-15, 1.0 - 1e-15);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m == lo || m == hi {
            break;
        }
        if phi(m) < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let r = 0.5 * (lo + hi);
    nf * r.ln()
}

/// A point outside the disk where `|Theta|` beats the majorant: evidence that
/// `Theta` grows faster than `omega` allows for analytic continuation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WitnessEntry {
    pub t: f64,
    pub found: bool,
    pub theta_angle: f64,
    pub log_abs_theta: f64,
    pub log_omega: f64,
}

/// Scans `|lambda| = 1 + t` for each scheduled `t`: atom angles, per-atom
/// offsets, and a coarse ring; records the best exceedance of `log omega(t)`.
pub fn witness_points(
    ie: &InnerEval,
    omega: &mut MajorantOmega,
    schedule: &[f64],
) -> Result<Vec<WitnessEntry>, InnerError> {
    let mut out = Vec::with_capacity(schedule.len());
    for &t in schedule {
        let log_omega = omega.eval_extending(t)?.ln();
        let mut angles: Vec<f64> = (0..64).map(|i| TAU * i as f64 / 64.0).collect();
        for &(a, _) in ie.measure().atoms() {
            for c in [0.0, 1.0, -1.0, 3.0, -3.0, 10.0, -10.0] {
                angles.push(a + c * t);
            }
        }
        angles.sort_by(f64::total_cmp);
        angles.dedup();
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &th in &angles {
            let v = ie.log_abs_theta(Complex64::from_polar(1.0 + t, th))?;
            if v > best.0 {
                best = (v, th);
            }
        }
        out.push(WitnessEntry {
            t,
            found: best.0 > log_omega,
            theta_angle: best.1,
            log_abs_theta: best.0,
            log_omega,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VerifyRow {
    pub n: u32,
    pub log_delta: f64,
    pub log_u: f64,
    /// `log(u_n * delta_n)`.
    pub log_u_delta: f64,
    /// `log(u_n^2 * delta_n) <= 0`: the theorem's inequality holds strictly.
    pub witness_strict: bool,
    /// `log(u_n^2 * delta_n) <= log(slack)`.
    pub witness_slack: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub n_max: u32,
    pub slack: f64,
    pub rows: Vec<VerifyRow>,
    pub witnesses_strict: Vec<u32>,
    pub witnesses_slack: Vec<u32>,
    /// Strict improvements of the running minimum of `log(u_n * delta_n)`.
    pub improvements: u32,
    pub min_log_u_delta: f64,
    pub succeeded: bool,
}

/// Joins a computed `u_n` sequence with `delta_n` estimates and checks
/// `u_n^2 * delta_n <= slack` over `n = 1..n_max`.
pub fn verify_theorem(
    ie: &InnerEval,
    seq: &EsterleSequence,
    grid: &DeltaGrid,
    slack: f64,
) -> Result<VerifyReport, InnerError> {
    let solver = DeltaSolver::new(ie, grid)?;
    let ns: Vec<u32> = (1..=seq.n_max).collect();
    let reports = solver.delta_batch(&ns);
    let slack_log = slack.ln();
    let mut rows = Vec::with_capacity(reports.len());
    let mut strict = Vec::new();
    let mut slacky = Vec::new();
    let mut run_min = f64::INFINITY;
    let mut improvements = 0u32;
    for rep in &reports {
        let log_u = seq.log_u_n(rep.n);
        let v = log_u + rep.log_delta;
        let decisive = 2.0 * log_u + rep.log_delta;
        let ws = decisive <= 0.0;
        let wk = decisive <= slack_log;
        if ws {
            strict.push(rep.n);
        }
        if wk {
            slacky.push(rep.n);
        }
        if v < run_min {
            if run_min.is_finite() {
                improvements += 1;
            }
            run_min = v;
        }
        rows.push(VerifyRow {
            n: rep.n,
            log_delta: rep.log_delta,
            log_u,
            log_u_delta: v,
            witness_strict: ws,
            witness_slack: wk,
        });
    }
    let succeeded = !strict.is_empty() && improvements >= 3;
    Ok(VerifyReport {
        n_max: seq.n_max,
        slack,
        rows,
        witnesses_strict: strict,
        witnesses_slack: slacky,
        improvements,
        min_log_u_delta: run_min,
        succeeded,
    })
}

pub fn write_verify_csv<W: Write>(report: &VerifyReport, mut out: W) -> Result<(), InnerError> {
    writeln!(out, "n,log_delta,log_u,log_u_delta,witness_flag")?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.n,
            r.log_delta,
            r.log_u,
            r.log_u_delta,
            u8::from(r.witness_slack)
        )?;
    }
    Ok(())
}

/// Lower bound `||S_Theta^{-n}|| >= (1/delta_n - 1) / 2` in logs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SnormBound {
    /// `log` of the bound.
    Lower(f64),
    /// `delta >= 1` carries no information.
    Vacuous,
}

pub fn snorm_lower_bound(log_delta: f64) -> SnormBound {
    if log_delta >= 0.0 {
        return SnormBound::Vacuous;
    }
    let a = -log_delta;
    SnormBound::Lower(a + (-(-a).exp()).ln_1p() - std::f64::consts::LN_2)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct UnitarySanity {
    pub points: usize,
    pub n_max: u32,
    pub max_deviation: f64,
}

/// Control experiment: for a diagonal unitary with spectrum sampled from the
/// set, every inverse power has norm exactly 1; reports the worst numerical
/// deviation over `n <= n_max`.
pub fn unitary_sanity(set: &crate::thin_sets::ThinSet, m: usize, n_max: u32) -> UnitarySanity {
    let pts = set.sample_points(m);
    let mut worst = 0.0f64;
    for n in 1..=n_max {
        let mut norm = 0.0f64;
        for &x in &pts {
            let lam = Complex64::from_polar(1.0, x);
            let inv_pow = lam.powi(-(n as i32)).norm();
            norm = norm.max(inv_pow);
        }
        worst = worst.max((norm - 1.0).abs());
    }
    UnitarySanity { points: pts.len(), n_max, max_deviation: worst }
}
