//! Compensated (Kahan) summation.
//!
//! The harmonic and Brun ledgers accumulate hundreds of millions of terms of
//! magnitude 1/p and must stay accurate to ~1e-12 relative; a plain f64
//! accumulator drifts well past that.

/// Kahan compensated accumulator.
///
/// The running compensation term captures the low-order bits lost by each
/// addition, keeping the total error independent of the number of terms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuild an accumulator from persisted parts so a resumed run continues
    /// bit-for-bit where the original left off.
    pub fn from_parts(sum: f64, compensation: f64) -> Self {
        Self { sum, compensation }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }

    /// `(sum, compensation)`, for persistence.
    pub fn parts(&self) -> (f64, f64) {
        (self.sum, self.compensation)
    }

    /// Compensated sum of an iterator.
    pub fn sum_iter<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
        let mut k = Self::new();
        for v in iter {
            k.add(v);
        }
        k.value()
    }
}
