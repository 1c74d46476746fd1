//! Software cost counters.
//!
//! The detectors and kernels report their work through the [`Tally`] trait:
//! data-dependent two-way decisions, pixel fetches from the image buffer,
//! tile-local scratch traffic, and multiply-accumulates. [`NoTally`] is a
//! zero-sized sink for uncounted runs; [`Counters`] records everything.
//! Counts are deterministic for a fixed input and configuration, and totals
//! are plain sums, so they do not depend on tile ordering or worker count.

/// Sink for per-operation cost events.
pub trait Tally {
    fn branch(&mut self, n: u64);
    fn image_read(&mut self, n: u64);
    fn scratch_read(&mut self, n: u64);
    fn scratch_write(&mut self, n: u64);
    fn mac(&mut self, n: u64);
    /// Folds another tally of the same kind into this one. Addition is
    /// associative and commutative, so merge order never matters.
    fn absorb(&mut self, other: Self)
    where
        Self: Sized;
}

/// Discards every event; optimizes away entirely.
#[derive(Default)]
pub struct NoTally;

impl Tally for NoTally {
    #[inline(always)]
    fn branch(&mut self, _: u64) {}
    #[inline(always)]
    fn image_read(&mut self, _: u64) {}
    #[inline(always)]
    fn scratch_read(&mut self, _: u64) {}
    #[inline(always)]
    fn scratch_write(&mut self, _: u64) {}
    #[inline(always)]
    fn mac(&mut self, _: u64) {}
    #[inline(always)]
    fn absorb(&mut self, _: Self) {}
}

/// One bucket of counted work.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Counters {
    pub branch_evals: u64,
    pub image_reads: u64,
    pub scratch_reads: u64,
    pub scratch_writes: u64,
    pub mac_ops: u64,
}

impl Counters {
    pub fn add(&mut self, other: &Counters) {
        self.branch_evals += other.branch_evals;
        self.image_reads += other.image_reads;
        self.scratch_reads += other.scratch_reads;
        self.scratch_writes += other.scratch_writes;
        self.mac_ops += other.mac_ops;
    }
}

impl Tally for Counters {
    #[inline(always)]
    fn branch(&mut self, n: u64) {
        self.branch_evals += n;
    }
    #[inline(always)]
    fn image_read(&mut self, n: u64) {
        self.image_reads += n;
    }
    #[inline(always)]
    fn scratch_read(&mut self, n: u64) {
        self.scratch_reads += n;
    }
    #[inline(always)]
    fn scratch_write(&mut self, n: u64) {
        self.scratch_writes += n;
    }
    #[inline(always)]
    fn mac(&mut self, n: u64) {
        self.mac_ops += n;
    }
    #[inline(always)]
    fn absorb(&mut self, other: Self) {
        self.add(&other);
    }
}

/// Per-stage counters for one pipeline run.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CountReport {
    pub fast: Counters,
    pub harris: Counters,
    pub nms: Counters,
    pub centroid: Counters,
}

impl CountReport {
    pub fn add(&mut self, other: &CountReport) {
        self.fast.add(&other.fast);
        self.harris.add(&other.harris);
        self.nms.add(&other.nms);
        self.centroid.add(&other.centroid);
    }

    /// Sum over all stages.
    pub fn total(&self) -> Counters {
        let mut total = Counters::default();
        for stage in [&self.fast, &self.harris, &self.nms, &self.centroid] {
            total.add(stage);
        }
        total
    }

    /// Flat `key=value` text block, one counter per line.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let stages = [
            ("fast", &self.fast),
            ("harris", &self.harris),
            ("nms", &self.nms),
            ("centroid", &self.centroid),
        ];
        let total = self.total();
        for (name, c) in stages.iter().chain([("total", &total)].iter()) {
            out.push_str(&format!("{name}.branch_evals={}\n", c.branch_evals));
            out.push_str(&format!("{name}.image_reads={}\n", c.image_reads));
            out.push_str(&format!("{name}.scratch_reads={}\n", c.scratch_reads));
            out.push_str(&format!("{name}.scratch_writes={}\n", c.scratch_writes));
            out.push_str(&format!("{name}.mac_ops={}\n", c.mac_ops));
        }
        out
    }
}
