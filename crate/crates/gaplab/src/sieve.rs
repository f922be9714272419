//! Bit-packed segmented sieve of Eratosthenes over 64-bit ranges.
//!
//! Only odd numbers are represented: within a segment, bit `j` stands for the
//! odd number `base + 2j + 1` and a set bit marks a composite. Segments are
//! sized to stay cache-resident (the default of 2^23 odd slots is a 1 MiB
//! bitmap) and may be sieved by a worker pool, but primes are always handed to
//! the consumer in strictly ascending order: segment k is emitted only after
//! segment k-1 has been fully emitted.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc;

use thiserror::Error;

/// Default odd-slot count per segment: 2^23 bits = 1 MiB, sized for L2.
pub const DEFAULT_SEGMENT_BITS: u64 = 1 << 23;
/// Smallest supported segment, in odd slots.
pub const MIN_SEGMENT_BITS: u64 = 1 << 16;
/// `base_primes` upper bound.
pub const MAX_BASE_PRIME_BOUND: u64 = 1 << 32;

#[derive(Debug, Error)]
pub enum SieveError {
    #[error("sieve limit {0} out of range (need 3 <= limit < 2^63)")]
    LimitOutOfRange(u64),
    #[error("segment size {0} invalid (need a power of two >= 2^16 odd slots)")]
    InvalidSegmentBits(u64),
    #[error("base prime bound {0} out of range (need 2 <= n <= 2^32)")]
    BoundOutOfRange(u64),
    #[error("bad prime range [{lo}, {hi})")]
    BadRange { lo: u64, hi: u64 },
}

/// Error from [`try_stream_primes`]: either the sieve itself failed or the
/// consumer asked to stop.
#[derive(Debug, Error)]
pub enum StreamError<E> {
    #[error(transparent)]
    Sieve(#[from] SieveError),
    #[error("prime consumer failed: {0}")]
    Sink(E),
}

/// Sizing for a sieve run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    segment_bits: u64,
    limit: u64,
}

impl SieveConfig {
    /// Config with the default segment size. `limit` is the exclusive upper
    /// bound of the run.
    pub fn new(limit: u64) -> Result<Self, SieveError> {
        Self::with_segment_bits(limit, DEFAULT_SEGMENT_BITS)
    }

    pub fn with_segment_bits(limit: u64, segment_bits: u64) -> Result<Self, SieveError> {
        if !(3..1 << 63).contains(&limit) {
            return Err(SieveError::LimitOutOfRange(limit));
        }
        if !segment_bits.is_power_of_two() || segment_bits < MIN_SEGMENT_BITS {
            return Err(SieveError::InvalidSegmentBits(segment_bits));
        }
        Ok(Self {
            segment_bits,
            limit,
        })
    }

    /// Odd numbers represented per segment.
    pub fn segment_bits(&self) -> u64 {
        self.segment_bits
    }

    /// Exclusive upper bound of the run.
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Integers spanned by one segment (twice the odd-slot count).
    pub fn segment_span(&self) -> u64 {
        2 * self.segment_bits
    }
}

/// One sieved segment: a bitmap with one bit per odd number in
/// `[base, base + 2 * segment_bits)`. After sieving, the bit for odd `n` is
/// clear iff `n` is prime (for `n >= 3`; the slot for 1 is forced composite).
#[derive(Debug, Clone)]
pub struct Segment {
    base: u64,
    bitmap: Vec<u64>,
}

impl Segment {
    fn blank(base: u64, segment_bits: u64) -> Self {
        debug_assert!(base.is_multiple_of(2));
        debug_assert!(segment_bits.is_multiple_of(64));
        Segment {
            base,
            bitmap: vec![0u64; (segment_bits / 64) as usize],
        }
    }

    /// First integer represented (always even here; segment k starts at
    /// `k * 2 * segment_bits`).
    pub fn base(&self) -> u64 {
        self.base
    }

    /// Odd slots in this segment.
    pub fn len_bits(&self) -> u64 {
        self.bitmap.len() as u64 * 64
    }

    /// Is the odd number `n` (with `base <= n < base + 2*len_bits`) prime?
    pub fn is_prime(&self, n: u64) -> bool {
        debug_assert!(n % 2 == 1 && n >= self.base);
        let j = (n - self.base - 1) / 2;
        debug_assert!(j < self.len_bits());
        self.bitmap[(j / 64) as usize] & (1u64 << (j % 64)) == 0
    }

    /// Invoke `f` for every prime in `[lo, hi)` held by this segment,
    /// ascending. The number 2 is never represented here.
    pub fn for_each_prime<F: FnMut(u64)>(&self, lo: u64, hi: u64, f: &mut F) {
        let base = self.base;
        for (wi, &word) in self.bitmap.iter().enumerate() {
            let mut primes = !word;
            while primes != 0 {
                let bit = primes.trailing_zeros() as u64;
                primes &= primes - 1;
                let n = base + 2 * (wi as u64 * 64 + bit) + 1;
                if n >= hi {
                    return;
                }
                if n >= lo && n >= 3 {
                    f(n);
                }
            }
        }
    }
}

/// Mark composites in `seg` using the given ascending odd base primes.
fn sieve_segment(seg: &mut Segment, odd_primes: &[u64]) {
    let base = seg.base;
    let bits = seg.len_bits();
    let end = base + 2 * bits; // exclusive integer bound
    if base == 0 {
        seg.bitmap[0] |= 1; // the slot for 1 is not prime
    }
    for &p in odd_primes {
        let p_sq = p * p;
        if p_sq >= end {
            break;
        }
        // First odd multiple of p inside the segment, at least p^2.
        let m = if p_sq > base {
            p_sq
        } else {
            let mut m0 = (base / p + 1) * p; // smallest multiple of p > base
            if m0.is_multiple_of(2) {
                m0 += p;
            }
            m0
        };
        if m >= end {
            continue;
        }
        let mut j = ((m - base - 1) / 2) as usize;
        let step = p as usize;
        let n_bits = bits as usize;
        while j < n_bits {
            seg.bitmap[j >> 6] |= 1u64 << (j & 63);
            j += step;
        }
    }
}

/// All primes `<= n`, ascending, by a classical flat (but still bit-packed)
/// sieve. Intended for base primes up to `sqrt(limit)`.
pub fn base_primes(n: u64) -> Result<Vec<u64>, SieveError> {
    if !(2..=MAX_BASE_PRIME_BOUND).contains(&n) {
        return Err(SieveError::BoundOutOfRange(n));
    }
    let mut primes = vec![2u64];
    if n < 3 {
        return Ok(primes);
    }
    // Bit j represents the odd number 2j + 1; bit 0 (the number 1) stays out
    // of the scan below.
    let n_bits = ((n - 1) / 2 + 1) as usize;
    let mut composite = vec![0u64; n_bits.div_ceil(64)];
    let mut p = 3u64;
    while p * p <= n {
        let j = ((p - 1) / 2) as usize;
        if composite[j >> 6] & (1 << (j & 63)) == 0 {
            let mut m = ((p * p - 1) / 2) as usize;
            while m < n_bits {
                composite[m >> 6] |= 1 << (m & 63);
                m += p as usize;
            }
        }
        p += 2;
    }
    for j in 1..n_bits {
        if composite[j >> 6] & (1 << (j & 63)) == 0 {
            primes.push(2 * j as u64 + 1);
        }
    }
    Ok(primes)
}

fn odd_base_primes_for(hi: u64) -> Result<Vec<u64>, SieveError> {
    let root = (hi.saturating_sub(1)).isqrt().max(2);
    let mut primes = base_primes(root)?;
    if !primes.is_empty() && primes[0] == 2 {
        primes.remove(0);
    }
    Ok(primes)
}

/// Stream every prime `p` with `lo <= p < hi` to `sink`, strictly ascending,
/// each exactly once; 2 is delivered iff `lo <= 2`. Fallible-sink variant with
/// an optional worker pool: segments are sieved concurrently, emission stays
/// ordered.
pub fn try_stream_primes<E, F>(
    cfg: &SieveConfig,
    lo: u64,
    hi: u64,
    workers: usize,
    mut sink: F,
) -> Result<(), StreamError<E>>
where
    F: FnMut(u64) -> Result<(), E>,
{
    if lo >= hi || hi > cfg.limit.saturating_add(1) {
        return Err(SieveError::BadRange { lo, hi }.into());
    }
    if lo <= 2 && hi > 2 {
        sink(2).map_err(StreamError::Sink)?;
    }
    if hi <= 3 {
        return Ok(());
    }

    let first_odd = lo.max(3) | 1;
    if first_odd >= hi {
        return Ok(());
    }
    let span = cfg.segment_span();
    let seg_lo = (first_odd - 1) / 2 / cfg.segment_bits;
    let seg_hi = (hi - 1) / 2 / cfg.segment_bits; // segment of the last odd < hi
    let odd_primes = odd_base_primes_for(hi).map_err(StreamError::Sieve)?;

    if workers <= 1 {
        let mut seg = Segment::blank(seg_lo * span, cfg.segment_bits);
        for k in seg_lo..=seg_hi {
            seg.base = k * span;
            seg.bitmap.fill(0);
            sieve_segment(&mut seg, &odd_primes);
            let mut err = None;
            seg.for_each_prime(lo, hi, &mut |p| {
                if err.is_none() {
                    if let Err(e) = sink(p) {
                        err = Some(e);
                    }
                }
            });
            if let Some(e) = err {
                return Err(StreamError::Sink(e));
            }
        }
        return Ok(());
    }

    // Ordered parallel reduction: workers pull segment indices from a shared
    // counter and send sieved segments back; the consumer reorders and emits.
    let next_seg = AtomicU64::new(seg_lo);
    let (tx, rx) = mpsc::sync_channel::<Segment>(workers * 2);
    let mut sink_err = None;
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next_seg = &next_seg;
            let odd_primes = &odd_primes;
            scope.spawn(move || loop {
                let k = next_seg.fetch_add(1, Ordering::Relaxed);
                if k > seg_hi {
                    return;
                }
                let mut seg = Segment::blank(k * span, cfg.segment_bits);
                sieve_segment(&mut seg, odd_primes);
                if tx.send(seg).is_err() {
                    return; // consumer stopped early
                }
            });
        }
        drop(tx);

        let mut pending: BTreeMap<u64, Segment> = BTreeMap::new();
        let mut want = seg_lo;
        'outer: while want <= seg_hi {
            let seg = loop {
                if let Some(seg) = pending.remove(&want) {
                    break seg;
                }
                match rx.recv() {
                    Ok(seg) => {
                        let k = seg.base / span;
                        pending.insert(k, seg);
                    }
                    Err(_) => break 'outer, // workers gone; nothing more to wait for
                }
            };
            let mut err = None;
            seg.for_each_prime(lo, hi, &mut |p| {
                if err.is_none() {
                    if let Err(e) = sink(p) {
                        err = Some(e);
                    }
                }
            });
            if let Some(e) = err {
                sink_err = Some(e);
                // Dropping the receiver unblocks any worker mid-send.
                break;
            }
            want += 1;
        }
        drop(rx);
    });
    match sink_err {
        Some(e) => Err(StreamError::Sink(e)),
        None => Ok(()),
    }
}

/// Infallible single-threaded convenience wrapper around
/// [`try_stream_primes`] with a default-sized config.
pub fn stream_primes<F: FnMut(u64)>(lo: u64, hi: u64, mut sink: F) -> Result<(), SieveError> {
    let cfg = SieveConfig::new(hi.max(4))?;
    match try_stream_primes(&cfg, lo, hi, 1, |p| {
        sink(p);
        Ok::<(), Infallible>(())
    }) {
        Ok(()) => Ok(()),
        Err(StreamError::Sieve(e)) => Err(e),
        Err(StreamError::Sink(i)) => match i {},
    }
}

/// Number of primes `p <= x`.
pub fn prime_count(x: u64) -> u64 {
    if x < 2 {
        return 0;
    }
    let mut count = 0u64;
    stream_primes(2, x + 1, |_| count += 1).expect("valid range for prime_count");
    count
}
