//! The collection pipeline: sieve → collector → checkpoints, with
//! persistence, resumption, and identity verification.
//!
//! One sieving pool feeds the single-writer collector through the ordered
//! prime stream. Whenever the stream crosses a grid threshold the state is
//! snapshotted and handed to the sink (a run directory or memory).

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::collector::{Checkpoint, CollectError, Collector};
use crate::sieve::{self, SieveConfig, SieveError, StreamError};
use crate::store::{self, CheckpointGrid, ResumePoint, RunManifest, StoreError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sieve(#[from] SieveError),
    #[error(transparent)]
    Collect(#[from] CollectError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("nothing to resume in {0}")]
    NothingToResume(PathBuf),
    #[error("existing run in {dir} is incompatible: {what}")]
    IncompatibleResume { dir: PathBuf, what: String },
}

/// Parameters of a collection run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Inclusive upper bound: every prime ≤ limit is ingested.
    pub limit: u64,
    pub grid: CheckpointGrid,
    /// Odd numbers per sieve segment (power of two ≥ 2^16).
    pub segment_bits: u64,
    /// Track pair counts for even distances up to this width; 0 disables.
    pub pair_window: u64,
    /// Sieving worker threads; 1 keeps everything on the calling thread.
    pub workers: usize,
    /// Stop (as if killed) right after persisting this checkpoint.
    pub stop_after: Option<u64>,
    /// Report progress to standard error once per segment block.
    pub progress: bool,
}

impl RunConfig {
    pub fn new(limit: u64) -> Self {
        RunConfig {
            limit,
            grid: CheckpointGrid::PowersOfTwo,
            segment_bits: sieve::DEFAULT_SEGMENT_BITS,
            pair_window: 512,
            workers: 1,
            stop_after: None,
            progress: false,
        }
    }
}

/// What a collect/resume call accomplished.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    /// Checkpoints written by this call.
    pub checkpoints_written: usize,
    /// Newest persisted threshold.
    pub completed_up_to: u64,
    /// π at the newest checkpoint when the call ends.
    pub pi: u64,
    /// Whether the run has reached its limit.
    pub completed: bool,
}

/// Grid thresholds plus the limit itself, so a finished run always ends on a
/// persisted snapshot.
fn thresholds_for(grid: &CheckpointGrid, limit: u64) -> Vec<u64> {
    let mut t = grid.thresholds(limit);
    if t.last() != Some(&limit) {
        t.push(limit);
    }
    t
}

enum SinkStop {
    Failed(PipelineError),
    StopRequested,
}

struct Drive<'a> {
    collector: Collector,
    pending: VecDeque<u64>,
    written: usize,
    sink: &'a mut dyn FnMut(&Checkpoint) -> Result<(), PipelineError>,
    stop_after: Option<u64>,
    progress: bool,
    progress_shift: u32,
    last_block: u64,
    limit: u64,
}

impl Drive<'_> {
    fn flush_thresholds(&mut self, up_to_exclusive: u64) -> Result<(), SinkStop> {
        while let Some(&t) = self.pending.front() {
            if t >= up_to_exclusive {
                break;
            }
            self.pending.pop_front();
            let ck = self
                .collector
                .snapshot(t)
                .map_err(|e| SinkStop::Failed(e.into()))?;
            (self.sink)(&ck).map_err(SinkStop::Failed)?;
            self.written += 1;
            if self.stop_after == Some(t) {
                return Err(SinkStop::StopRequested);
            }
        }
        Ok(())
    }

    fn accept(&mut self, p: u64) -> Result<(), SinkStop> {
        self.flush_thresholds(p)?;
        if self.progress {
            let block = p >> self.progress_shift;
            if block > self.last_block {
                self.last_block = block;
                eprintln!(
                    "gaplab: sieved past {p} ({:.1}%)",
                    100.0 * p as f64 / self.limit as f64
                );
            }
        }
        self.collector
            .ingest(p)
            .map_err(|e| SinkStop::Failed(e.into()))
    }
}

/// Run the stream from `lo` to the limit, snapshotting on every pending
/// threshold. Returns (collector, checkpoints written, completed).
fn drive_stream(
    cfg: &RunConfig,
    collector: Collector,
    lo: u64,
    thresholds: VecDeque<u64>,
    sink: &mut dyn FnMut(&Checkpoint) -> Result<(), PipelineError>,
) -> Result<(Collector, usize, bool), PipelineError> {
    let sieve_cfg = SieveConfig::with_segment_bits(cfg.limit + 1, cfg.segment_bits)?;
    let mut drive = Drive {
        collector,
        pending: thresholds,
        written: 0,
        sink,
        stop_after: cfg.stop_after,
        progress: cfg.progress,
        progress_shift: (2 * cfg.segment_bits).trailing_zeros(),
        last_block: lo >> (2 * cfg.segment_bits).trailing_zeros(),
        limit: cfg.limit,
    };
    let hi = cfg.limit + 1;
    let streamed = sieve::try_stream_primes(&sieve_cfg, lo, hi, cfg.workers, |p| drive.accept(p));
    let interrupted = match streamed {
        Ok(()) => false,
        Err(StreamError::Sink(SinkStop::StopRequested)) => true,
        Err(StreamError::Sink(SinkStop::Failed(e))) => return Err(e),
        Err(StreamError::Sieve(e)) => return Err(e.into()),
    };
    if !interrupted {
        // Stream exhausted: every remaining threshold ≤ limit is complete.
        match drive.flush_thresholds(u64::MAX) {
            Ok(()) => {}
            Err(SinkStop::StopRequested) => {
                return Ok((drive.collector, drive.written, false));
            }
            Err(SinkStop::Failed(e)) => return Err(e),
        }
    }
    let done = !interrupted;
    Ok((drive.collector, drive.written, done))
}

/// Collect into a run directory, creating it fresh or continuing an
/// existing compatible run (including extending its limit).
pub fn collect(cfg: &RunConfig, dir: &Path) -> Result<RunSummary, PipelineError> {
    std::fs::create_dir_all(dir).map_err(|source| StoreError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    match store::resume(dir)? {
        ResumePoint::Fresh => {
            let manifest = RunManifest::new(cfg.limit, cfg.grid, cfg.segment_bits, cfg.pair_window);
            store::write_manifest(&manifest, dir)?;
            let collector = Collector::new(cfg.pair_window)?;
            let thresholds: VecDeque<u64> = thresholds_for(&cfg.grid, cfg.limit).into();
            run_to_dir(cfg, dir, manifest, collector, 2, thresholds)
        }
        ResumePoint::Completed {
            manifest,
            checkpoint,
        } if cfg.limit <= manifest.limit => Ok(RunSummary {
            checkpoints_written: 0,
            completed_up_to: manifest.completed_up_to,
            pi: checkpoint.pi,
            completed: true,
        }),
        ResumePoint::Completed {
            manifest,
            checkpoint,
        } => continue_run(cfg, dir, manifest, checkpoint, cfg.limit),
        ResumePoint::At {
            manifest,
            checkpoint,
        } => {
            let limit = cfg.limit.max(manifest.limit);
            continue_run(cfg, dir, manifest, checkpoint, limit)
        }
    }
}

/// Continue an interrupted run to the limit recorded in its manifest.
pub fn resume(dir: &Path, workers: usize, progress: bool) -> Result<RunSummary, PipelineError> {
    match store::resume(dir)? {
        ResumePoint::Fresh => Err(PipelineError::NothingToResume(dir.to_path_buf())),
        ResumePoint::Completed {
            manifest,
            checkpoint,
        } => Ok(RunSummary {
            checkpoints_written: 0,
            completed_up_to: manifest.completed_up_to,
            pi: checkpoint.pi,
            completed: true,
        }),
        ResumePoint::At {
            manifest,
            checkpoint,
        } => {
            let mut cfg = RunConfig::new(manifest.limit);
            cfg.grid = manifest.grid;
            cfg.segment_bits = manifest.segment_bits;
            cfg.pair_window = manifest.pair_window;
            cfg.workers = workers;
            cfg.progress = progress;
            let limit = manifest.limit;
            continue_run(&cfg, dir, manifest, checkpoint, limit)
        }
    }
}

fn continue_run(
    cfg: &RunConfig,
    dir: &Path,
    mut manifest: RunManifest,
    checkpoint: Checkpoint,
    limit: u64,
) -> Result<RunSummary, PipelineError> {
    let incompatible = |what: String| PipelineError::IncompatibleResume {
        dir: dir.to_path_buf(),
        what,
    };
    if manifest.segment_bits != cfg.segment_bits {
        return Err(incompatible(format!(
            "segment_bits {} on disk vs {} requested",
            manifest.segment_bits, cfg.segment_bits
        )));
    }
    if manifest.pair_window != cfg.pair_window {
        return Err(incompatible(format!(
            "pair_window {} on disk vs {} requested",
            manifest.pair_window, cfg.pair_window
        )));
    }
    if manifest.grid != cfg.grid {
        return Err(incompatible("checkpoint grid differs".into()));
    }
    if limit < checkpoint.x {
        return Err(incompatible(format!(
            "limit {} below already-completed {}",
            limit, checkpoint.x
        )));
    }
    // Trust the checkpoint actually on disk: if newer ones were lost, the
    // grid below re-creates them deterministically.
    manifest.completed_up_to = checkpoint.x;
    manifest.limit = limit;
    store::write_manifest(&manifest, dir)?;

    let mut collector = Collector::from_state(checkpoint.state);
    let last = collector.state().last_prime;
    if cfg.pair_window > 0 && last >= 3 {
        let lo = last.saturating_sub(cfg.pair_window).max(3);
        let mut trailing = Vec::new();
        sieve::stream_primes(lo, last + 1, |p| trailing.push(p))?;
        collector.rehydrate_window(trailing);
    }
    let thresholds: VecDeque<u64> = thresholds_for(&cfg.grid, limit)
        .into_iter()
        .filter(|&t| t > manifest.completed_up_to)
        .collect();
    let mut run_cfg = cfg.clone();
    run_cfg.limit = limit;
    run_to_dir(&run_cfg, dir, manifest, collector, last + 1, thresholds)
}

fn run_to_dir(
    cfg: &RunConfig,
    dir: &Path,
    mut manifest: RunManifest,
    collector: Collector,
    lo: u64,
    thresholds: VecDeque<u64>,
) -> Result<RunSummary, PipelineError> {
    let (collector, written, completed) = {
        let mut sink = |ck: &Checkpoint| -> Result<(), PipelineError> {
            store::write_checkpoint(ck, dir)?;
            manifest.completed_up_to = ck.x;
            manifest.updated_unix = std::cmp::max(manifest.updated_unix, unix_now_secs());
            store::write_manifest(&manifest, dir)?;
            Ok(())
        };
        drive_stream(cfg, collector, lo, thresholds, &mut sink)?
    };
    Ok(RunSummary {
        checkpoints_written: written,
        completed_up_to: manifest.completed_up_to,
        pi: collector.state().primes_seen,
        completed,
    })
}

fn unix_now_secs() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Run entirely in memory and return every checkpoint, the limit included.
pub fn collect_in_memory(cfg: &RunConfig) -> Result<Vec<Checkpoint>, PipelineError> {
    let collector = Collector::new(cfg.pair_window)?;
    let thresholds: VecDeque<u64> = thresholds_for(&cfg.grid, cfg.limit).into();
    let mut out = Vec::new();
    let mut sink = |ck: &Checkpoint| -> Result<(), PipelineError> {
        out.push(ck.clone());
        Ok(())
    };
    drive_stream(cfg, collector, 2, thresholds, &mut sink)?;
    Ok(out)
}

// ---- identity verification ----

/// Verification outcome for one checkpoint: empty `failures` means every
/// identity held exactly.
#[derive(Debug, Clone)]
pub struct CheckpointVerification {
    pub x: u64,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub checkpoints: Vec<CheckpointVerification>,
}

impl VerifyReport {
    pub fn total(&self) -> usize {
        self.checkpoints.len()
    }

    pub fn passed(&self) -> usize {
        self.checkpoints
            .iter()
            .filter(|c| c.failures.is_empty())
            .count()
    }

    pub fn all_ok(&self) -> bool {
        self.passed() == self.total()
    }
}

/// Relative tolerance for the pair-ledger accounting identity; everything
/// else is integer-exact.
pub const BRUN_ACCOUNTING_RTOL: f64 = 1e-12;

/// Replay the exact identities against one checkpoint.
pub fn verify_checkpoint(ck: &Checkpoint) -> Vec<String> {
    let mut failures = Vec::new();
    let s = &ck.state;
    if ck.pi != s.primes_seen {
        failures.push(format!("pi {} != primes_seen {}", ck.pi, s.primes_seen));
    }
    if ck.x >= 5 && s.primes_seen >= 3 {
        let total = s.histogram.total();
        if total != s.primes_seen - 2 {
            failures.push(format!(
                "gap count {} != pi - 2 = {}",
                total,
                s.primes_seen - 2
            ));
        }
    }
    if s.primes_seen >= 2 {
        let weighted = s.histogram.weighted_total();
        if weighted != s.last_prime - 3 {
            failures.push(format!(
                "sum of d*tau_d {} != last prime - 3 = {}",
                weighted,
                s.last_prime - 3
            ));
        }
        let direct = s.harmonic_sum.value();
        let via_pairs = ck.harmonic_from_brun();
        let err = (direct - via_pairs).abs();
        if err > BRUN_ACCOUNTING_RTOL * direct.abs() {
            failures.push(format!(
                "pair-ledger accounting off by {err:.3e} (harmonic {direct}, via pairs {via_pairs})"
            ));
        }
    }
    if s.histogram.sum_sq() != s.sum_sq_gaps {
        failures.push(format!(
            "sum of d^2*tau_d {} != accumulator {}",
            s.histogram.sum_sq(),
            s.sum_sq_gaps
        ));
    }
    let mut prev_gap = 0u64;
    let mut prev_pos = 0u64;
    for r in &s.max_gap_records {
        if r.upper_prime - r.lower_prime != r.gap || r.gap <= prev_gap || r.lower_prime <= prev_pos
        {
            failures.push(format!("record table broken at gap {}", r.gap));
            break;
        }
        prev_gap = r.gap;
        prev_pos = r.lower_prime;
    }
    failures
}

/// Replay the identities over every stored checkpoint.
pub fn verify_dir(dir: &Path) -> Result<VerifyReport, PipelineError> {
    let mut checkpoints = Vec::new();
    for x in store::list_checkpoints(dir)? {
        let ck = store::read_checkpoint(dir, x)?;
        checkpoints.push(CheckpointVerification {
            x,
            failures: verify_checkpoint(&ck),
        });
    }
    Ok(VerifyReport { checkpoints })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::load_checkpoints;

    fn base_cfg(limit: u64) -> RunConfig {
        let mut cfg = RunConfig::new(limit);
        cfg.segment_bits = 1 << 16; // small segments exercise stitching
        cfg.pair_window = 64;
        cfg
    }

    #[test]
    fn in_memory_run_checkpoints() {
        let cks = collect_in_memory(&base_cfg(1 << 17)).unwrap();
        // 2^15, 2^16, 2^17 (limit coincides with the last grid point).
        assert_eq!(
            cks.iter().map(|c| c.x).collect::<Vec<_>>(),
            vec![1 << 15, 1 << 16, 1 << 17]
        );
        for ck in &cks {
            assert!(verify_checkpoint(ck).is_empty(), "x = {}", ck.x);
        }
        assert_eq!(cks[0].pi, 3512); // pi(2^15)
        assert_eq!(cks[2].pi, 12251); // pi(2^17)
    }

    #[test]
    fn off_grid_limit_gets_final_checkpoint() {
        let cks = collect_in_memory(&base_cfg(100_000)).unwrap();
        assert_eq!(
            cks.iter().map(|c| c.x).collect::<Vec<_>>(),
            vec![1 << 15, 65536, 100_000]
        );
        assert_eq!(cks.last().unwrap().pi, 9592);
    }

    #[test]
    fn collect_writes_and_verifies() {
        let dir = tempfile::tempdir().unwrap();
        let summary = collect(&base_cfg(1 << 17), dir.path()).unwrap();
        assert!(summary.completed);
        assert_eq!(summary.checkpoints_written, 3);
        assert_eq!(summary.completed_up_to, 1 << 17);
        let report = verify_dir(dir.path()).unwrap();
        assert!(report.all_ok());
        assert_eq!(report.total(), 3);

        // Collecting again is a no-op.
        let again = collect(&base_cfg(1 << 17), dir.path()).unwrap();
        assert_eq!(again.checkpoints_written, 0);
        assert!(again.completed);
    }

    #[test]
    fn kill_and_resume_equals_single_shot() {
        let limit = 1u64 << 18;
        let single = {
            let dir = tempfile::tempdir().unwrap();
            collect(&base_cfg(limit), dir.path()).unwrap();
            load_checkpoints(dir.path()).unwrap()
        };
        for stop_at in [1u64 << 15, 1 << 16, 1 << 17] {
            let dir = tempfile::tempdir().unwrap();
            let mut cfg = base_cfg(limit);
            cfg.stop_after = Some(stop_at);
            let summary = collect(&cfg, dir.path()).unwrap();
            assert!(!summary.completed);
            assert_eq!(summary.completed_up_to, stop_at);

            let resumed = resume(dir.path(), 1, false).unwrap();
            assert!(resumed.completed);
            assert_eq!(resumed.completed_up_to, limit);

            let got = load_checkpoints(dir.path()).unwrap();
            assert_eq!(got.len(), single.len(), "stop at {stop_at}");
            for (a, b) in got.iter().zip(single.iter()) {
                assert_eq!(a, b, "mismatch at x = {} after stop {stop_at}", b.x);
            }
        }
    }

    #[test]
    fn collect_extends_a_completed_run() {
        let dir = tempfile::tempdir().unwrap();
        collect(&base_cfg(1 << 16), dir.path()).unwrap();
        let extended = collect(&base_cfg(1 << 17), dir.path()).unwrap();
        assert!(extended.completed);
        assert_eq!(extended.completed_up_to, 1 << 17);

        let single = {
            let d2 = tempfile::tempdir().unwrap();
            collect(&base_cfg(1 << 17), d2.path()).unwrap();
            load_checkpoints(d2.path()).unwrap()
        };
        assert_eq!(load_checkpoints(dir.path()).unwrap(), single);
    }

    #[test]
    fn resume_guards() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            resume(dir.path(), 1, false),
            Err(PipelineError::NothingToResume(_))
        ));

        let mut cfg = base_cfg(1 << 17);
        cfg.stop_after = Some(1 << 15);
        collect(&cfg, dir.path()).unwrap();
        // Different pair window cannot continue the same directory.
        let mut other = base_cfg(1 << 17);
        other.pair_window = 32;
        assert!(matches!(
            collect(&other, dir.path()),
            Err(PipelineError::IncompatibleResume { .. })
        ));
    }

    #[test]
    fn resume_heals_a_lost_newest_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_cfg(1 << 17);
        cfg.stop_after = Some(1 << 16);
        collect(&cfg, dir.path()).unwrap();
        // Lose the newest checkpoint; the run resumes from 2^15 and
        // re-creates everything deterministically.
        std::fs::remove_file(dir.path().join(crate::store::checkpoint_file_name(1 << 16))).unwrap();
        let summary = resume(dir.path(), 1, false).unwrap();
        assert!(summary.completed);
        let single = {
            let d2 = tempfile::tempdir().unwrap();
            collect(&base_cfg(1 << 17), d2.path()).unwrap();
            load_checkpoints(d2.path()).unwrap()
        };
        assert_eq!(load_checkpoints(dir.path()).unwrap(), single);
    }

    #[test]
    fn geometric_grid_thresholds() {
        let grid = CheckpointGrid::Geometric {
            base: 1000.0,
            ratio: 1.03,
        };
        let t = grid.thresholds(2000);
        assert_eq!(t.first(), Some(&1000));
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert!(t.last().unwrap() <= &2000);
        // ~ log(2)/log(1.03) steps per doubling.
        assert!(t.len() >= 20 && t.len() <= 25, "{}", t.len());

        let cks = collect_in_memory(&RunConfig {
            grid,
            ..base_cfg(2000)
        })
        .unwrap();
        assert_eq!(cks.last().unwrap().x, 2000);
        for ck in &cks {
            assert!(verify_checkpoint(ck).is_empty());
        }
    }

    #[test]
    fn parallel_run_equals_sequential() {
        let mut cfg = base_cfg(1 << 18);
        let seq = collect_in_memory(&cfg).unwrap();
        cfg.workers = 4;
        let par = collect_in_memory(&cfg).unwrap();
        assert_eq!(seq, par);
    }
}
