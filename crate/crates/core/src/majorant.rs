//! Piecewise-linear decreasing majorants built from chord slopes of
//! `rho1(t) = sqrt(t * rho(t))`, where `rho(t) = t / |E_t|`.
//!
//! A majorant is a list of knots `(t_k, d_k)` with strictly decreasing `t`
//! and strictly increasing `d > 1`, plus a plateau of height `d_0` on
//! `[t_0, seed_base]`. Each `d_k` is the chord slope of `rho1` between the
//! previous abscissa and `t_k`, so the products `d_k * (t_{k-1} - t_k)`
//! telescope to differences of `rho1`. That telescoping is what makes the
//! integral of the majorant collapse below `rho1(t)` and is checked by
//! `validate`.

use crate::thin_sets::{ThinSet, ThinSetError};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum MajorantError {
    #[error(transparent)]
    Set(#[from] ThinSetError),
    #[error("rho is not nondecreasing: rho({t_lo}) = {rho_lo} > rho({t_hi}) = {rho_hi}")]
    RhoNotMonotone { t_lo: f64, t_hi: f64, rho_lo: f64, rho_hi: f64 },
    #[error("rule stalled at t = {t}: no chord within {j_max} halvings reaches the required slope")]
    RuleStalled { t: f64, j_max: u32 },
    #[error("rule ran out of precision near t = {t}")]
    PrecisionExhausted { t: f64 },
    #[error("t = {t} lies above the majorant domain (seed base {seed_base})")]
    OutOfDomain { t: f64, seed_base: f64 },
    #[error("t = {t} lies below the deepest knot {deepest}; extend the majorant first")]
    NotCovered { t: f64, deepest: f64 },
    #[error("majorant invariant violated: {0}")]
    Invariant(String),
    #[error("dump parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Memoizing view of `rho(t) = t / |E_t|`. Every fresh value is checked for
/// monotonicity against its cached neighbors; a decrease beyond ten times the
/// set tolerance is reported as an error rather than silently accepted.
#[derive(Clone, Debug)]
pub struct RhoCurve {
    set: ThinSet,
    cache: RefCell<BTreeMap<u64, f64>>,
}

impl RhoCurve {
    pub fn new(set: ThinSet) -> Self {
        RhoCurve { set, cache: RefCell::new(BTreeMap::new()) }
    }

    pub fn set(&self) -> &ThinSet {
        &self.set
    }

    pub fn rho(&self, t: f64) -> Result<f64, MajorantError> {
        if let Some(&r) = self.cache.borrow().get(&t.to_bits()) {
            return Ok(r);
        }
        let m = self.set.neighborhood_measure(t)?;
        let rho = t / m;
        if !(rho > 0.0) || rho > 0.5 + 1e-9 {
            return Err(MajorantError::Invariant(format!(
                "rho({t}) = {rho} outside (0, 1/2]"
            )));
        }
        let slack = 10.0 * self.set.tolerance();
        {
            let cache = self.cache.borrow();
            if let Some((&b, &r_lo)) = cache.range(..t.to_bits()).next_back() {
                if r_lo > rho + slack {
                    return Err(MajorantError::RhoNotMonotone {
                        t_lo: f64::from_bits(b),
                        t_hi: t,
                        rho_lo: r_lo,
                        rho_hi: rho,
                    });
                }
            }
            if let Some((&b, &r_hi)) = cache.range(t.to_bits() + 1..).next() {
                if rho > r_hi + slack {
                    return Err(MajorantError::RhoNotMonotone {
                        t_lo: t,
                        t_hi: f64::from_bits(b),
                        rho_lo: rho,
                        rho_hi: r_hi,
                    });
                }
            }
        }
        self.cache.borrow_mut().insert(t.to_bits(), rho);
        Ok(rho)
    }

    pub fn rho1(&self, t: f64) -> Result<f64, MajorantError> {
        Ok((t * self.rho(t)?).sqrt())
    }

    /// Chord slope of `rho1` between `t_hi` and `t_lo < t_hi`.
    pub fn chord(&self, t_hi: f64, t_lo: f64) -> Result<f64, MajorantError> {
        Ok((self.rho1(t_hi)? - self.rho1(t_lo)?) / (t_hi - t_lo))
    }
}

/// Knot acceptance rule: starting from the previous knot, halve the abscissa
/// until the chord slope clears `max(d_prev * (1 + gamma), d_prev + delta_min)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleParams {
    pub t_start: f64,
    pub gamma: f64,
    pub delta_min: f64,
    pub j_max: u32,
}

impl Default for RuleParams {
    fn default() -> Self {
        RuleParams { t_start: 0.4, gamma: 0.25, delta_min: 1e-3, j_max: 60 }
    }
}

impl RuleParams {
    fn validate(&self) -> Result<(), MajorantError> {
        if !(self.t_start.is_finite() && self.t_start > 0.0) {
            return Err(MajorantError::Invariant(format!("t_start must be positive, got {}", self.t_start)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(MajorantError::Invariant(format!("gamma must be nonnegative, got {}", self.gamma)));
        }
        if !(self.delta_min > 0.0 && self.delta_min.is_finite()) {
            return Err(MajorantError::Invariant(format!("delta_min must be positive, got {}", self.delta_min)));
        }
        if self.j_max == 0 {
            return Err(MajorantError::Invariant("j_max must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub t: f64,
    pub d: f64,
}

/// Two-sided bracket for an integral value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Enclosure {
    pub lo: f64,
    pub hi: f64,
}

/// Serializable state of a majorant; `from_dump` revalidates every chord
/// against a fresh measure computation, so a tampered dump will not load.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaDump {
    pub schema: u32,
    pub set: ThinSet,
    pub rule: RuleParams,
    pub seed_base: f64,
    pub knots: Vec<Knot>,
}

#[derive(Clone, Debug)]
pub struct MajorantOmega {
    curve: RhoCurve,
    rule: RuleParams,
    seed_base: f64,
    /// Knots in decreasing-`t` order; `knots[0]` carries the plateau height.
    knots: Vec<Knot>,
}

impl MajorantOmega {
    /// Seeds the majorant: scan halvings of `t_start` for the first chord
    /// slope exceeding 1; if the whole scan fails, halve the anchor and retry.
    pub fn build(curve: RhoCurve, rule: RuleParams) -> Result<Self, MajorantError> {
        rule.validate()?;
        let mut base = rule.t_start;
        loop {
            if base < 1e-300 {
                return Err(MajorantError::PrecisionExhausted { t: base });
            }
            for j in 1..=rule.j_max {
                let cand = base / (1u64 << j.min(62)) as f64;
                if cand <= 0.0 || cand == base {
                    return Err(MajorantError::PrecisionExhausted { t: cand });
                }
                let d = curve.chord(base, cand)?;
                if d > 1.0 {
                    return Ok(MajorantOmega {
                        curve,
                        rule,
                        seed_base: base,
                        knots: vec![Knot { t: cand, d }],
                    });
                }
            }
            base *= 0.5;
        }
    }

    pub fn curve(&self) -> &RhoCurve {
        &self.curve
    }

    pub fn set(&self) -> &ThinSet {
        self.curve.set()
    }

    pub fn rule(&self) -> RuleParams {
        self.rule
    }

    pub fn seed_base(&self) -> f64 {
        self.seed_base
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn deepest_t(&self) -> f64 {
        self.knots.last().unwrap().t
    }

    /// Plateau `(t_0, d_0)`: the majorant equals `d_0` on `[t_0, seed_base]`.
    pub fn plateau(&self) -> (f64, f64) {
        (self.knots[0].t, self.knots[0].d)
    }

    /// Accepts one more knot below the current deepest one.
    pub fn extend_once(&mut self) -> Result<&Knot, MajorantError> {
        let prev = *self.knots.last().unwrap();
        let threshold = (prev.d * (1.0 + self.rule.gamma)).max(prev.d + self.rule.delta_min);
        for j in 1..=self.rule.j_max {
            let cand = prev.t / (1u64 << j.min(62)) as f64;
            if cand < 1e-300 || cand == prev.t {
                return Err(MajorantError::PrecisionExhausted { t: cand });
            }
            let d = self.curve.chord(prev.t, cand)?;
            if d >= threshold {
                self.knots.push(Knot { t: cand, d });
                return Ok(self.knots.last().unwrap());
            }
        }
        Err(MajorantError::RuleStalled { t: prev.t, j_max: self.rule.j_max })
    }

    /// Extends until the deepest knot abscissa is at most `t_target`.
    pub fn extend_to(&mut self, t_target: f64) -> Result<(), MajorantError> {
        if !(t_target > 0.0) {
            return Err(MajorantError::Invariant(format!("extension target must be positive, got {t_target}")));
        }
        while self.deepest_t() > t_target {
            self.extend_once()?;
        }
        Ok(())
    }

    /// Majorant value at `t` in `[deepest knot, seed_base]`.
    pub fn eval(&self, t: f64) -> Result<f64, MajorantError> {
        if t > self.seed_base * (1.0 + 1e-12) {
            return Err(MajorantError::OutOfDomain { t, seed_base: self.seed_base });
        }
        let (t0, d0) = self.plateau();
        if t >= t0 {
            return Ok(d0);
        }
        let deepest = self.deepest_t();
        if t < deepest {
            return Err(MajorantError::NotCovered { t, deepest });
        }
        // knots are sorted by decreasing t; find the segment containing t
        let i = self.knots.partition_point(|k| k.t > t);
        let hi = self.knots[i - 1];
        let lo = self.knots[i];
        debug_assert!(lo.t <= t && t <= hi.t);
        let frac = (t - lo.t) / (hi.t - lo.t);
        Ok(lo.d + frac * (hi.d - lo.d))
    }

    /// Like `eval`, but grows the knot list when `t` is below the deepest knot.
    pub fn eval_extending(&mut self, t: f64) -> Result<f64, MajorantError> {
        if t < self.deepest_t() {
            self.extend_to(t)?;
        }
        self.eval(t)
    }

    pub fn log_eval(&self, t: f64) -> Result<f64, MajorantError> {
        Ok(self.eval(t)?.ln())
    }

    /// Enclosure of `int_0^t omega(s) ds` for `t` in the covered range. The
    /// trapezoid part over known segments is exact; the unknown tail below
    /// the deepest knot contributes `[0, rho1(t_N)]`.
    pub fn integral_enclosure(&self, t: f64) -> Result<Enclosure, MajorantError> {
        if t > self.seed_base * (1.0 + 1e-12) {
            return Err(MajorantError::OutOfDomain { t, seed_base: self.seed_base });
        }
        let deepest = self.deepest_t();
        if t < deepest {
            return Err(MajorantError::NotCovered { t, deepest });
        }
        let mut trap = 0.0;
        // walk segments upward from the deepest knot
        for w in self.knots.windows(2).rev() {
            let (hi, lo) = (w[0], w[1]);
            if t <= lo.t {
                break;
            }
            let upper = t.min(hi.t);
            let d_at_upper = self.eval(upper)?;
            trap += 0.5 * (lo.d + d_at_upper) * (upper - lo.t);
        }
        let (t0, d0) = self.plateau();
        if t > t0 {
            trap += d0 * (t - t0);
        }
        let tail = self.curve.rho1(deepest)?;
        Ok(Enclosure { lo: trap, hi: trap + tail })
    }

    /// Per-knot rows `(t_k, integral upper bound at t_k, rho(t_k), bound)`
    /// where `bound = upper / rho(t_k)`; the bounds shrink along the knots
    /// and certify that `int_0^t omega / rho(t)` has vanishing lower limit.
    pub fn liminf_bounds(&self) -> Result<Vec<LiminfRow>, MajorantError> {
        let deepest = self.deepest_t();
        let tail = self.curve.rho1(deepest)?;
        let mut rows = Vec::with_capacity(self.knots.len());
        let mut trap = 0.0;
        // ascending t: deepest knot first
        for (i, k) in self.knots.iter().enumerate().rev() {
            if i + 1 < self.knots.len() {
                let lo = self.knots[i + 1];
                trap += 0.5 * (lo.d + k.d) * (k.t - lo.t);
            }
            let upper = trap + tail;
            let rho = self.curve.rho(k.t)?;
            rows.push(LiminfRow { t: k.t, integral_upper: upper, rho, bound: upper / rho });
        }
        rows.reverse();
        Ok(rows)
    }

    /// Checks every structural invariant, recomputing chords from the measure:
    /// strictly decreasing `t`, strictly increasing `d > 1`, chord consistency
    /// with `rho1`, and the telescoping identity for the knot sum.
    pub fn validate(&self) -> Result<(), MajorantError> {
        if self.knots.is_empty() {
            return Err(MajorantError::Invariant("no knots".into()));
        }
        let (_, d0) = self.plateau();
        if !(d0 > 1.0) {
            return Err(MajorantError::Invariant(format!("plateau slope {d0} must exceed 1")));
        }
        if !(self.seed_base > self.knots[0].t) {
            return Err(MajorantError::Invariant("seed base must lie above the first knot".into()));
        }
        let mut prev_t = self.seed_base;
        let mut prev_d = 1.0;
        let mut telescoped = 0.0;
        for k in &self.knots {
            if !(k.t < prev_t) {
                return Err(MajorantError::Invariant(format!("knot abscissas not decreasing at t = {}", k.t)));
            }
            if !(k.d > prev_d) {
                return Err(MajorantError::Invariant(format!("knot slopes not increasing at t = {}", k.t)));
            }
            let chord = self.curve.chord(prev_t, k.t)?;
            let err = (chord - k.d).abs();
            if err > 1e-9 * k.d.max(1.0) {
                return Err(MajorantError::Invariant(format!(
                    "knot (t = {}, d = {}) disagrees with recomputed chord {chord}",
                    k.t, k.d
                )));
            }
            telescoped += k.d * (prev_t - k.t);
            prev_t = k.t;
            prev_d = k.d;
        }
        let cap = self.curve.rho1(self.seed_base)?;
        if telescoped > cap * (1.0 + 1e-9) {
            return Err(MajorantError::Invariant(format!(
                "telescoped knot sum {telescoped} exceeds rho1(seed base) = {cap}"
            )));
        }
        Ok(())
    }

    pub fn dump(&self) -> OmegaDump {
        OmegaDump {
            schema: 1,
            set: self.set().clone(),
            rule: self.rule,
            seed_base: self.seed_base,
            knots: self.knots.clone(),
        }
    }

    pub fn from_dump(d: OmegaDump) -> Result<Self, MajorantError> {
        if d.schema != 1 {
            return Err(MajorantError::Invariant(format!("unsupported dump schema {}", d.schema)));
        }
        d.set.validate()?;
        d.rule.validate()?;
        let m = MajorantOmega {
            curve: RhoCurve::new(d.set),
            rule: d.rule,
            seed_base: d.seed_base,
            knots: d.knots,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.dump()).expect("dump serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, MajorantError> {
        Self::from_dump(serde_json::from_str(s)?)
    }

    pub fn write_knots_csv<W: Write>(&self, mut out: W) -> Result<(), MajorantError> {
        writeln!(out, "k,t_k,d_k")?;
        for (k, knot) in self.knots.iter().enumerate() {
            writeln!(out, "{k},{},{}", knot.t, knot.d)?;
        }
        Ok(())
    }

    pub fn write_liminf_csv<W: Write>(&self, mut out: W) -> Result<(), MajorantError> {
        let rows = self.liminf_bounds()?;
        writeln!(out, "t_k,integral_upper,rho,bound")?;
        for r in &rows {
            writeln!(out, "{},{},{},{}", r.t, r.integral_upper, r.rho, r.bound)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LiminfRow {
    pub t: f64,
    pub integral_upper: f64,
    pub rho: f64,
    pub bound: f64,
}

/// Keeps the measure/rho relationship visible for debugging: `t, measure,
/// rho, rho1` for a grid of radii.
pub fn write_rho_curve_csv<W: Write>(
    curve: &RhoCurve,
    ts: &[f64],
    mut out: W,
) -> Result<(), MajorantError> {
    writeln!(out, "t,measure,rho,rho1")?;
    for &t in ts {
        let m = curve.set().neighborhood_measure(t)?;
        let rho = curve.rho(t)?;
        let rho1 = curve.rho1(t)?;
        writeln!(out, "{t},{m},{rho},{rho1}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom_omega() -> MajorantOmega {
        let set = ThinSet::atoms(vec![0.0]).unwrap();
        MajorantOmega::build(RhoCurve::new(set), RuleParams::default()).unwrap()
    }

    #[test]
    fn seeding_pins() {
        let om = atom_omega();
        assert_eq!(om.seed_base(), 0.4);
        let k = om.knots()[0];
        assert_eq!(k.t, 0.003125);
        assert!((k.d - 1.0272381096008898).abs() < 1e-14, "got {}", k.d);

        let cl = ThinSet::cluster(0.0, 0.5, 0.5).unwrap();
        let om = MajorantOmega::build(RhoCurve::new(cl), RuleParams::default()).unwrap();
        assert_eq!(om.seed_base(), 0.2);
        assert_eq!(om.knots()[0].t, 0.003125);
        assert!((om.knots()[0].d - 1.0009217199431744).abs() < 1e-13);

        let ca = ThinSet::cantor(0.0, 1.0, 1.0 / 3.0).unwrap();
        let om = MajorantOmega::build(RhoCurve::new(ca), RuleParams::default()).unwrap();
        assert_eq!(om.seed_base(), 0.05);
        assert_eq!(om.knots()[0].t, 0.00625);
        assert!((om.knots()[0].d - 1.0167435506684532).abs() < 1e-13);
    }

    #[test]
    fn extension_pins_at_1e6() {
        let mut om = atom_omega();
        om.extend_to(1e-6).unwrap();
        assert_eq!(om.knots().len(), 13);
        let last = *om.knots().last().unwrap();
        assert_eq!(last.t, 7.62939453125e-07);
        assert!((last.d - 335.32372347678717).abs() < 1e-9, "got {}", last.d);
        om.validate().unwrap();

        let cl = ThinSet::cluster(0.0, 0.5, 0.5).unwrap();
        let mut om = MajorantOmega::build(RhoCurve::new(cl), RuleParams::default()).unwrap();
        om.extend_to(1e-6).unwrap();
        assert_eq!(om.knots().len(), 13);
        assert!((om.knots().last().unwrap().d - 81.04089957092981).abs() < 1e-9);
        om.validate().unwrap();

        let ca = ThinSet::cantor(0.0, 1.0, 1.0 / 3.0).unwrap();
        let mut om = MajorantOmega::build(RhoCurve::new(ca), RuleParams::default()).unwrap();
        om.extend_to(1e-6).unwrap();
        assert_eq!(om.knots().len(), 7);
        let last = *om.knots().last().unwrap();
        assert_eq!(last.t, 4.76837158203125e-08);
        assert!((last.d - 6.389208581700283).abs() < 1e-12);
        om.validate().unwrap();
    }

    #[test]
    fn eval_piecewise_shape() {
        let mut om = atom_omega();
        om.extend_to(1e-4).unwrap();
        let (t0, d0) = om.plateau();
        assert_eq!(om.eval(om.seed_base()).unwrap(), d0);
        assert_eq!(om.eval(t0).unwrap(), d0);
        assert_eq!(om.eval(0.1).unwrap(), d0);
        // omega grows as t shrinks below the plateau
        let mut prev = 0.0;
        let deepest = om.deepest_t();
        for i in 0..50 {
            let t = t0 * (deepest / t0).powf(i as f64 / 49.0);
            let v = om.eval(t).unwrap();
            assert!(v >= prev - 1e-12, "omega must grow toward t = 0, broken at t = {t}");
            prev = v;
        }
        assert!(matches!(om.eval(1.0), Err(MajorantError::OutOfDomain { .. })));
        assert!(matches!(om.eval(deepest / 2.0), Err(MajorantError::NotCovered { .. })));
        let v = om.eval_extending(deepest / 2.0).unwrap();
        assert!(v >= om.knots().last().unwrap().d - 1e-12);
    }

    #[test]
    fn integral_upper_stays_below_rho1_at_knots() {
        for set in [
            ThinSet::atoms(vec![0.0]).unwrap(),
            ThinSet::cluster(0.0, 0.5, 0.5).unwrap(),
            ThinSet::cantor(0.0, 1.0, 1.0 / 3.0).unwrap(),
        ] {
            let mut om = MajorantOmega::build(RhoCurve::new(set), RuleParams::default()).unwrap();
            om.extend_to(1e-6).unwrap();
            let knots: Vec<Knot> = om.knots().to_vec();
            for k in &knots {
                let enc = om.integral_enclosure(k.t).unwrap();
                let cap = om.curve().rho1(k.t).unwrap();
                assert!(enc.hi <= cap * (1.0 + 1e-9), "t = {}: {} vs {}", k.t, enc.hi, cap);
                assert!(enc.lo >= 0.0 && enc.lo <= enc.hi);
            }
        }
    }

    #[test]
    fn liminf_bounds_shrink() {
        let mut om = atom_omega();
        om.extend_to(1e-6).unwrap();
        let rows = om.liminf_bounds().unwrap();
        assert_eq!(rows.len(), om.knots().len());
        // the bound at the deepest knot is sqrt(measure) for a single atom
        let deepest = rows.last().unwrap();
        let m = om.set().neighborhood_measure(deepest.t).unwrap();
        assert!((deepest.bound - m.sqrt()).abs() < 1e-12 * m.sqrt());
        for w in rows.windows(2) {
            assert!(w[1].bound < w[0].bound, "bounds must shrink with depth");
        }
    }

    #[test]
    fn rule_stalls_when_unreachable() {
        let set = ThinSet::atoms(vec![0.0]).unwrap();
        let rule = RuleParams { gamma: 1e9, j_max: 3, ..RuleParams::default() };
        let mut om = MajorantOmega::build(RhoCurve::new(set), rule).unwrap();
        match om.extend_once() {
            Err(MajorantError::RuleStalled { .. }) => {}
            other => panic!("expected stall, got {other:?}"),
        }
    }

    #[test]
    fn dump_roundtrip_is_exact_and_validated() {
        let mut om = atom_omega();
        om.extend_to(1e-5).unwrap();
        let js = om.to_json();
        let back = MajorantOmega::from_json(&js).unwrap();
        assert_eq!(back.knots(), om.knots());
        assert_eq!(back.seed_base(), om.seed_base());
        for t in [0.01, 0.001, 1e-4, 5e-5] {
            assert_eq!(back.eval(t).unwrap(), om.eval(t).unwrap());
        }
        // tampering with a knot slope must be caught on load
        let mut dump = om.dump();
        dump.knots[2].d *= 1.5;
        assert!(matches!(MajorantOmega::from_dump(dump), Err(MajorantError::Invariant(_))));
    }

    #[test]
    fn rho_cache_is_consistent() {
        let set = ThinSet::cantor(0.0, 1.0, 1.0 / 3.0).unwrap();
        let curve = RhoCurve::new(set);
        let a = curve.rho(0.01).unwrap();
        let b = curve.rho(0.01).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        // pin: rho(1/18) = (1/18) / (8/9) = 1/16
        let r = curve.rho(1.0 / 18.0).unwrap();
        assert!((r - 0.0625).abs() < 1e-12);
        let r1 = curve.rho1(1.0 / 18.0).unwrap();
        assert!((r1 - (1.0f64 / 288.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn knot_csv_has_header_and_rows() {
        let om = atom_omega();
        let mut buf = Vec::new();
        om.write_knots_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k,t_k,d_k"));
        assert_eq!(lines.count(), om.knots().len());
    }
}
