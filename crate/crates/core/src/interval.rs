//! Closed intervals on the line and the sweep that merges them.
//!
//! The measure code never works with open sets: a fattening `E_t` is a union
//! of closed intervals, so two pieces whose endpoints touch form a single
//! component and a gap of exactly `2t` between points counts as filled.

/// Closed interval `[lo, hi]`. Degenerate intervals (`lo == hi`) are allowed;
/// they carry no length but still merge with neighbors they touch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Iv {
    pub lo: f64,
    pub hi: f64,
}

impl Iv {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Iv { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    /// Intersection with `w`, or `None` if the closed intervals are disjoint.
    pub fn clip(&self, w: Iv) -> Option<Iv> {
        let lo = self.lo.max(w.lo);
        let hi = self.hi.min(w.hi);
        if lo <= hi {
            Some(Iv { lo, hi })
        } else {
            None
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Sorts by left endpoint and merges every pair of touching or overlapping
/// intervals, returning the components of the closed union in order.
pub fn merge(mut ivs: Vec<Iv>) -> Vec<Iv> {
    ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
    let mut out: Vec<Iv> = Vec::with_capacity(ivs.len());
    for iv in ivs {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => {
                if iv.hi > last.hi {
                    last.hi = iv.hi;
                }
            }
            _ => out.push(iv),
        }
    }
    out
}

/// Total length of pairwise-disjoint sorted intervals, summed left to right.
pub fn total_length(ivs: &[Iv]) -> f64 {
    let mut acc = 0.0;
    for iv in ivs {
        acc += iv.hi - iv.lo;
    }
    acc
}

/// Length of the union of `ivs` clipped to the window `w`.
pub fn length_in_window(ivs: &[Iv], w: Iv) -> f64 {
    let mut acc = 0.0;
    for iv in ivs {
        if let Some(c) = iv.clip(w) {
            acc += c.hi - c.lo;
        }
    }
    acc
}
