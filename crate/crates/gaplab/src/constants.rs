//! Number-theoretic constants and the elementary functions every gap model
//! needs: the twin constant, the singular series, Mertens' constant, and the
//! offset logarithmic integral Li₂.
//!
//! The constants are stored as high-precision literals and cross-checked by
//! the finite products and sums in the test suite; direct products converge
//! far too slowly to recompute them at full precision at runtime.

use std::sync::LazyLock;

use thiserror::Error;

use crate::sieve::{self, stream_primes};

/// c₂ = ∏_{p>2} (1 − 1/(p−1)²) ≈ 0.6601618.
pub const C2_HALF: f64 = 0.660_161_815_846_869_6;
/// Twin constant C₂ = 2·c₂ ≈ 1.3203236 (doubling is exact in binary).
pub const C2: f64 = 2.0 * C2_HALF;
/// Mertens constant M from Σ_{p≤x} 1/p = ln ln x + M + o(1).
pub const MERTENS_M: f64 = 0.261_497_212_847_642_77;
/// Euler–Mascheroni constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Singular-series values are memoized for gaps up to this bound.
const SINGULAR_MEMO_LIMIT: u64 = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum ConstantsError {
    #[error("singular series is defined for positive even gaps, got {0}")]
    OddGap(u64),
    #[error("twin product cutoff must be at least 3, got {0}")]
    CutoffTooSmall(u64),
    #[error("li2 is defined for x >= 2, got {0}")]
    Li2Domain(f64),
}

/// The shared constant table. `log_c2` is computed from `c2` at first use so
/// the two can never drift apart.
#[derive(Debug, Clone, Copy)]
pub struct ConstantTable {
    /// Twin constant C₂ = 2 c₂.
    pub c2: f64,
    /// c₂ = C₂ / 2.
    pub c2_half: f64,
    /// Mertens constant M.
    pub mertens_m: f64,
    /// Euler–Mascheroni constant γ.
    pub euler_gamma: f64,
    /// c = ln C₂, the additive constant in the maximal-gap estimate.
    pub log_c2: f64,
}

static TABLE: LazyLock<ConstantTable> = LazyLock::new(|| ConstantTable {
    c2: C2,
    c2_half: C2_HALF,
    mertens_m: MERTENS_M,
    euler_gamma: EULER_GAMMA,
    log_c2: C2.ln(),
});

pub fn table() -> &'static ConstantTable {
    &TABLE
}

/// Distinct odd primes dividing `d`, ascending. Trial division; gaps in
/// practice stay far below 10^5.
pub fn odd_prime_divisors(mut d: u64) -> Vec<u64> {
    let mut out = Vec::new();
    while d > 0 && d.is_multiple_of(2) {
        d /= 2;
    }
    let mut p = 3u64;
    while p * p <= d {
        if d.is_multiple_of(p) {
            out.push(p);
            while d.is_multiple_of(p) {
                d /= p;
            }
        }
        p += 2;
    }
    if d > 1 {
        out.push(d);
    }
    out
}

fn singular_series_direct(d: u64) -> f64 {
    odd_prime_divisors(d)
        .into_iter()
        .map(|p| (p - 1) as f64 / (p - 2) as f64)
        .product()
}

// One pass of a multiplicative sieve fills the whole memo: for each odd prime
// p, every even d divisible by p picks up the factor (p-1)/(p-2).
static SINGULAR_MEMO: LazyLock<Vec<f64>> = LazyLock::new(|| {
    let n = (SINGULAR_MEMO_LIMIT / 2) as usize;
    let mut memo = vec![1.0f64; n + 1]; // index i holds S(2i)
    let primes = sieve::base_primes(SINGULAR_MEMO_LIMIT / 2).expect("memo bound in range");
    for &p in primes.iter().skip(1) {
        let factor = (p - 1) as f64 / (p - 2) as f64;
        let mut i = p as usize; // d = 2p, 4p, ... have index p, 2p, ...
        while i <= n {
            memo[i] *= factor;
            i += p as usize;
        }
    }
    memo
});

/// 𝔖(d) = ∏_{p|d, p>2} (p−1)/(p−2) for even d ≥ 2; exactly 1 when d is a
/// power of two. Memoized for d ≤ 10^5 (it is evaluated per gap at every
/// checkpoint).
pub fn singular_series(d: u64) -> Result<f64, ConstantsError> {
    if d < 2 || !d.is_multiple_of(2) {
        return Err(ConstantsError::OddGap(d));
    }
    if d <= SINGULAR_MEMO_LIMIT {
        Ok(SINGULAR_MEMO[(d / 2) as usize])
    } else {
        Ok(singular_series_direct(d))
    }
}

/// Finite twin-constant product 2·∏_{2<p≤cutoff} (1 − 1/(p−1)²), the
/// self-test companion of the stored [`C2`]. Monotonically decreasing in the
/// cutoff.
pub fn twin_constant_product(cutoff: u64) -> Result<f64, ConstantsError> {
    if cutoff < 3 {
        return Err(ConstantsError::CutoffTooSmall(cutoff));
    }
    let mut product = 1.0f64;
    stream_primes(3, cutoff + 1, |p| {
        let q = (p - 1) as f64;
        product *= 1.0 - 1.0 / (q * q);
    })
    .expect("cutoff validated");
    Ok(2.0 * product)
}

/// Li₂(x) = ∫_2^x du / ln²(u), by adaptive Simpson quadrature to ~1e-10
/// relative; Li₂(2) = 0.
pub fn li2(x: f64) -> Result<f64, ConstantsError> {
    if x.is_nan() || x < 2.0 || !x.is_finite() {
        return Err(ConstantsError::Li2Domain(x));
    }
    if x == 2.0 {
        return Ok(0.0);
    }
    let f = |u: f64| {
        let l = u.ln();
        1.0 / (l * l)
    };
    // Rough whole-interval estimate sets the absolute budget.
    let rough = simpson(&f, 2.0, x).max(f64::MIN_POSITIVE);
    Ok(adaptive_simpson(&f, 2.0, x, rough * 1e-11, 64))
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let whole = simpson(f, a, b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, eps * 0.5, depth - 1)
        + adaptive_simpson(f, m, b, eps * 0.5, depth - 1)
}
