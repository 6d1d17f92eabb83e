//! Smooth invertible maps between bounded parameters and the unbounded
//! internal coordinates the optimisers work in.
//!
//! * `[lo, hi]`: `p = lo + (hi − lo)(sin u + 1)/2`
//! * `[lo, ∞)`: `p = lo − 1 + √(u² + 1)`
//! * `(−∞, hi]`: `p = hi + 1 − √(u² + 1)`
//! * unbounded: `p = u`

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn free() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.lo && p <= self.hi
    }

    pub fn to_external(&self, u: f64) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => {
                let p = self.lo + (self.hi - self.lo) * (u.sin() + 1.0) / 2.0;
                p.clamp(self.lo, self.hi)
            }
            (true, false) => self.lo - 1.0 + (u * u + 1.0).sqrt(),
            (false, true) => self.hi + 1.0 - (u * u + 1.0).sqrt(),
            (false, false) => u,
        }
    }

    pub fn to_internal(&self, p: f64) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => {
                if self.hi == self.lo {
                    return 0.0;
                }
                let s = (2.0 * (p - self.lo) / (self.hi - self.lo) - 1.0).clamp(-1.0, 1.0);
                s.asin()
            }
            (true, false) => {
                let a = p - self.lo + 1.0;
                (a * a - 1.0).max(0.0).sqrt()
            }
            (false, true) => {
                let a = self.hi - p + 1.0;
                (a * a - 1.0).max(0.0).sqrt()
            }
            (false, false) => p,
        }
    }

    /// Moves a point sitting exactly on a bound slightly inside, where the
    /// transform has zero slope.
    pub fn nudge_inside(&self, p: f64) -> f64 {
        let width = if self.lo.is_finite() && self.hi.is_finite() {
            self.hi - self.lo
        } else {
            p.abs().max(1.0)
        };
        let eps = 1e-6 * width;
        if self.lo.is_finite() && p <= self.lo {
            (self.lo + eps).min(self.hi)
        } else if self.hi.is_finite() && p >= self.hi {
            (self.hi - eps).max(self.lo)
        } else {
            p
        }
    }
}
