//! Streaming gap statistics over the ordered prime stream.
//!
//! A single writer ingests primes in ascending order and maintains, in one
//! pass: the histogram of consecutive gaps, the sum of squared gaps, the
//! generalized Brun reciprocal sums per gap, the prime harmonic sum,
//! maximal-gap records, first occurrences, and (optionally) counts of prime
//! pairs at every even distance up to a window width. Snapshots freeze the
//! whole state at a threshold.
//!
//! Convention: the (2,3) pair is the single odd gap and is excluded from the
//! gap ledgers, so Σ_d τ_d = π(x) − 2 and Σ_d d·τ_d = p_last − 3 hold as
//! integer identities. The pair only advances the harmonic sum and counters.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

use crate::kahan::KahanSum;

/// Largest supported pair-count window, in gap width.
pub const MAX_PAIR_WINDOW: u64 = 1 << 16;

#[derive(Debug, Error, PartialEq)]
pub enum CollectError {
    #[error("primes must arrive in ascending order: got {got} after {prev}")]
    OutOfOrder { prev: u64, got: u64 },
    #[error("snapshot at {x} is stale: primes up to {last_prime} already ingested")]
    SnapshotBehindStream { x: u64, last_prime: u64 },
    #[error("pair window of {0} exceeds the supported maximum (even, <= 2^16)")]
    PairWindowTooWide(u64),
    #[error("pair window width {0} must be even")]
    PairWindowOdd(u64),
}

/// Exact integer counts τ_d of consecutive-prime pairs per even gap d.
/// Indexed storage: slot i holds the count for d = 2(i+1).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GapHistogram {
    counts: Vec<u64>,
}

impl GapHistogram {
    /// Record one occurrence of even gap `d`; returns true if this is its
    /// first occurrence.
    pub(crate) fn record(&mut self, d: u64) -> bool {
        let i = (d / 2 - 1) as usize;
        if i >= self.counts.len() {
            self.counts.resize(i + 1, 0);
        }
        self.counts[i] += 1;
        self.counts[i] == 1
    }

    pub fn count(&self, d: u64) -> u64 {
        if d < 2 || !d.is_multiple_of(2) {
            return 0;
        }
        let i = (d / 2 - 1) as usize;
        self.counts.get(i).copied().unwrap_or(0)
    }

    /// `(d, τ_d)` for every gap observed so far, ascending in d.
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (2 * (i as u64 + 1), c))
    }

    /// Σ_d τ_d.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Σ_d d·τ_d.
    pub fn weighted_total(&self) -> u64 {
        self.iter().map(|(d, c)| d * c).sum()
    }

    /// Σ_d d²·τ_d, for cross-checking the running accumulator.
    pub fn sum_sq(&self) -> u128 {
        self.iter()
            .map(|(d, c)| u128::from(d) * u128::from(d) * u128::from(c))
            .sum()
    }

    pub fn max_gap(&self) -> Option<u64> {
        self.counts
            .iter()
            .rposition(|&c| c > 0)
            .map(|i| 2 * (i as u64 + 1))
    }

    /// Overwrite the count for `d`; deserialization only.
    pub(crate) fn set(&mut self, d: u64, count: u64) {
        let i = (d / 2 - 1) as usize;
        if i >= self.counts.len() {
            self.counts.resize(i + 1, 0);
        }
        self.counts[i] = count;
    }
}

/// Partial generalized Brun sums ℬ_d(x) = Σ 1/p over both endpoints of every
/// consecutive pair with gap d, compensated. A prime that closes one gap-d
/// pair and opens the next is counted twice, once per pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BrunLedger {
    sums: Vec<KahanSum>,
}

impl BrunLedger {
    fn add_pair(&mut self, d: u64, inv_lower: f64, inv_upper: f64) {
        let i = (d / 2 - 1) as usize;
        if i >= self.sums.len() {
            self.sums.resize(i + 1, KahanSum::new());
        }
        self.sums[i].add(inv_lower);
        self.sums[i].add(inv_upper);
    }

    pub fn sum(&self, d: u64) -> f64 {
        let i = (d / 2 - 1) as usize;
        self.sums.get(i).map(|k| k.value()).unwrap_or(0.0)
    }

    /// `(d, accumulator)` for every gap with a nonzero sum, ascending in d.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &KahanSum)> + '_ {
        self.sums
            .iter()
            .enumerate()
            .filter(|(_, k)| k.value() != 0.0)
            .map(|(i, k)| (2 * (i as u64 + 1), k))
    }

    /// Compensated Σ_d ℬ_d(x).
    pub fn total(&self) -> f64 {
        KahanSum::sum_iter(self.sums.iter().map(|k| k.value()))
    }

    /// Overwrite the accumulator for `d`; deserialization only.
    pub(crate) fn set(&mut self, d: u64, sum: KahanSum) {
        let i = (d / 2 - 1) as usize;
        if i >= self.sums.len() {
            self.sums.resize(i + 1, KahanSum::new());
        }
        self.sums[i] = sum;
    }
}

/// Counts π_d(x) of prime pairs (p, p+d), not necessarily consecutive, for
/// every even d up to the window width.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCounts {
    window: u64,
    counts: Vec<u64>,
}

impl PairCounts {
    fn new(window: u64) -> Self {
        PairCounts {
            window,
            counts: vec![0; (window / 2) as usize],
        }
    }

    /// Empty counts for a known window; deserialization only.
    pub(crate) fn with_window(window: u64) -> Self {
        Self::new(window)
    }

    /// Overwrite the count for `d`; deserialization only.
    pub(crate) fn set(&mut self, d: u64, count: u64) {
        self.counts[(d / 2 - 1) as usize] = count;
    }

    /// Window width: pairs are tracked for even d ≤ this.
    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn count(&self, d: u64) -> u64 {
        if d < 2 || !d.is_multiple_of(2) || d > self.window {
            return 0;
        }
        self.counts[(d / 2 - 1) as usize]
    }

    /// `(d, π_d)` over the whole window, ascending (zeros included: a zero
    /// count inside the window is data, not absence).
    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (2 * (i as u64 + 1), c))
    }
}

/// A new record gap: `upper_prime - lower_prime = gap` strictly exceeds every
/// earlier gap. `pi_upper` is the exact prime count at `upper_prime`, kept so
/// the maximal-gap models can be evaluated at the record position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxGapRecord {
    pub gap: u64,
    pub lower_prime: u64,
    pub upper_prime: u64,
    pub pi_upper: u64,
}

/// Everything the collector maintains, snapshot-able as a value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunState {
    pub last_prime: u64,
    pub primes_seen: u64,
    /// Σ_{p≤last} 1/p, compensated.
    pub harmonic_sum: KahanSum,
    /// Σ_d d²·τ_d; 128 bits so full-range runs cannot overflow.
    pub sum_sq_gaps: u128,
    pub histogram: GapHistogram,
    pub brun: BrunLedger,
    pub max_gap_records: Vec<MaxGapRecord>,
    /// d → smallest lower prime ever seen opening a gap of exactly d.
    pub first_occurrences: BTreeMap<u64, u64>,
    /// Present iff pair counting was enabled for the run.
    pub pairs: Option<PairCounts>,
}

impl RunState {
    /// G(x): largest gap with both endpoints ≤ x, if any even gap closed yet.
    pub fn largest_gap(&self, x: u64) -> Option<u64> {
        self.max_gap_records
            .iter()
            .rev()
            .find(|r| r.upper_prime <= x)
            .map(|r| r.gap)
    }

    /// p_f(d), or None while no pair with gap d has been seen (the "no pair"
    /// case other conventions write as infinity).
    pub fn first_occurrence(&self, d: u64) -> Option<u64> {
        self.first_occurrences.get(&d).copied()
    }
}

/// A full statistics snapshot at threshold `x`; `pi` = π(x).
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub x: u64,
    pub pi: u64,
    pub state: RunState,
}

impl Checkpoint {
    pub fn tau(&self, d: u64) -> u64 {
        self.state.histogram.count(d)
    }

    pub fn pair_count(&self, d: u64) -> Option<u64> {
        self.state.pairs.as_ref().map(|p| p.count(d))
    }

    /// Reconstructed Σ_{p≤x} 1/p from the pair ledger plus the boundary
    /// terms: 1/2 + 1/6 + 1/(2·p_last) + ½·Σ_d ℬ_d(x). Every prime except 2
    /// and 3 sits at the ends of exactly two adjacent pairs, 3 and p_last at
    /// the end of one.
    pub fn harmonic_from_brun(&self) -> f64 {
        let mut acc = KahanSum::new();
        acc.add(0.5);
        acc.add(1.0 / 6.0);
        acc.add(0.5 / self.state.last_prime as f64);
        acc.add(0.5 * self.state.brun.total());
        acc.value()
    }
}

/// Single-writer statistics collector. Feed it every prime, in order,
/// starting from 2.
#[derive(Debug, Clone)]
pub struct Collector {
    state: RunState,
    /// Trailing primes within the pair window, oldest first.
    window: VecDeque<u64>,
    pair_window: u64,
    inv_last: f64,
}

impl Collector {
    /// `pair_window` is the largest pair distance to count (0 disables pair
    /// counting). Must be even and at most 2^16.
    pub fn new(pair_window: u64) -> Result<Self, CollectError> {
        if pair_window > MAX_PAIR_WINDOW {
            return Err(CollectError::PairWindowTooWide(pair_window));
        }
        if !pair_window.is_multiple_of(2) {
            return Err(CollectError::PairWindowOdd(pair_window));
        }
        let mut state = RunState::default();
        if pair_window > 0 {
            state.pairs = Some(PairCounts::new(pair_window));
        }
        Ok(Collector {
            state,
            window: VecDeque::new(),
            pair_window,
            inv_last: 0.0,
        })
    }

    /// Rebuild a collector from a persisted snapshot. The pair window must be
    /// rehydrated afterwards via [`Collector::rehydrate_window`] when pair
    /// counting is enabled.
    pub fn from_state(state: RunState) -> Self {
        let pair_window = state.pairs.as_ref().map(|p| p.window()).unwrap_or(0);
        let inv_last = if state.last_prime > 0 {
            1.0 / state.last_prime as f64
        } else {
            0.0
        };
        Collector {
            state,
            window: VecDeque::new(),
            pair_window,
            inv_last,
        }
    }

    /// Provide the trailing primes in `[last_prime - pair_window, last_prime]`
    /// (ascending, odd primes only) after a resume.
    pub fn rehydrate_window(&mut self, trailing: impl IntoIterator<Item = u64>) {
        self.window.clear();
        for p in trailing {
            debug_assert!(p >= 3 && p <= self.state.last_prime);
            self.window.push_back(p);
        }
    }

    pub fn state(&self) -> &RunState {
        &self.state
    }

    pub fn ingest(&mut self, p: u64) -> Result<(), CollectError> {
        let last = self.state.last_prime;
        if p <= last {
            return Err(CollectError::OutOfOrder { prev: last, got: p });
        }
        let inv_p = 1.0 / p as f64;
        if last >= 3 {
            let d = p - last;
            debug_assert!(d.is_multiple_of(2));
            if self.state.histogram.record(d) {
                self.state.first_occurrences.insert(d, last);
            }
            self.state.sum_sq_gaps += u128::from(d) * u128::from(d);
            self.state.brun.add_pair(d, self.inv_last, inv_p);
            let record = match self.state.max_gap_records.last() {
                Some(r) => d > r.gap,
                None => true,
            };
            if record {
                self.state.max_gap_records.push(MaxGapRecord {
                    gap: d,
                    lower_prime: last,
                    upper_prime: p,
                    pi_upper: self.state.primes_seen + 1,
                });
            }
        }
        if self.pair_window > 0 && p >= 3 {
            let floor = p.saturating_sub(self.pair_window);
            while let Some(&front) = self.window.front() {
                if front < floor {
                    self.window.pop_front();
                } else {
                    break;
                }
            }
            let counts = &mut self.state.pairs.as_mut().expect("enabled").counts;
            for &q in self.window.iter() {
                counts[((p - q) / 2 - 1) as usize] += 1;
            }
            self.window.push_back(p);
        }
        self.state.harmonic_sum.add(inv_p);
        self.state.last_prime = p;
        self.state.primes_seen += 1;
        self.inv_last = inv_p;
        Ok(())
    }

    /// Freeze the state at threshold `x`. The caller guarantees every prime
    /// ≤ x has been ingested; the collector rejects the call if the stream
    /// has already moved past x.
    pub fn snapshot(&self, x: u64) -> Result<Checkpoint, CollectError> {
        if self.state.last_prime > x {
            return Err(CollectError::SnapshotBehindStream {
                x,
                last_prime: self.state.last_prime,
            });
        }
        Ok(Checkpoint {
            x,
            pi: self.state.primes_seen,
            state: self.state.clone(),
        })
    }
}
