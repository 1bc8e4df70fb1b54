//! Per-trace statistics and their aggregation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::env::{Catalog, RunTrace};

/// What one trace did, measured against a catalog.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub steps: usize,
    /// Steps that touched at least one cataloged element.
    pub interactions: usize,
    /// Interactions that touched an element changed by some update.
    pub update_related: usize,
    /// Update elements touched anywhere in the trace.
    pub covered: BTreeSet<String>,
    pub bugs: BTreeSet<String>,
}

impl TraceStats {
    pub fn of(trace: &RunTrace, catalog: &Catalog) -> Self {
        let updated = catalog.all_update_elements();
        let mut s = TraceStats {
            steps: trace.len(),
            bugs: trace.bug_flags.clone(),
            ..Default::default()
        };
        for step in &trace.steps {
            if !step.elements.iter().any(|e| catalog.is_element(e)) {
                continue;
            }
            s.interactions += 1;
            let hit: Vec<&String> = step.elements.iter().filter(|e| updated.contains(*e)).collect();
            if !hit.is_empty() {
                s.update_related += 1;
                s.covered.extend(hit.into_iter().cloned());
            }
        }
        s
    }

    pub fn absorb(&mut self, other: &TraceStats) {
        self.steps += other.steps;
        self.interactions += other.interactions;
        self.update_related += other.update_related;
        self.covered.extend(other.covered.iter().cloned());
        self.bugs.extend(other.bugs.iter().cloned());
    }

    /// Update-related share of interactions; 0 when nothing was touched.
    pub fn ratio(&self) -> f64 {
        if self.interactions == 0 {
            0.0
        } else {
            self.update_related as f64 / self.interactions as f64
        }
    }
}

/// One method's result on one seed: every trace it ran, summed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub runs: usize,
    pub totals: TraceStats,
}

impl SeedMetrics {
    pub fn new(seed: u64, stats: &[TraceStats]) -> Self {
        let mut totals = TraceStats::default();
        stats.iter().for_each(|s| totals.absorb(s));
        Self {
            seed,
            runs: stats.len(),
            totals,
        }
    }

    pub fn coverage(&self) -> usize {
        self.totals.covered.len()
    }

    pub fn detected(&self) -> usize {
        self.totals.bugs.len()
    }

    pub fn steps_per_run(&self) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            self.totals.steps as f64 / self.runs as f64
        }
    }
}

/// Means over seeds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seeds: usize,
    pub coverage: f64,
    pub coverage_of: usize,
    pub detection: f64,
    pub detection_of: usize,
    pub ratio: f64,
    pub avg_steps: f64,
}

impl Summary {
    pub fn over(per_seed: &[SeedMetrics], catalog: &Catalog) -> Self {
        let n = per_seed.len();
        let mean = |f: &dyn Fn(&SeedMetrics) -> f64| {
            if n == 0 {
                0.0
            } else {
                per_seed.iter().map(f).sum::<f64>() / n as f64
            }
        };
        Summary {
            seeds: n,
            coverage: mean(&|s| s.coverage() as f64),
            coverage_of: catalog.all_update_elements().len(),
            detection: mean(&|s| s.detected() as f64),
            detection_of: catalog.bugs.len(),
            ratio: mean(&|s| s.totals.ratio()),
            avg_steps: mean(&|s| s.steps_per_run()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(steps: usize, inter: usize, rel: usize, cov: &[&str], bugs: &[&str]) -> TraceStats {
        TraceStats {
            steps,
            interactions: inter,
            update_related: rel,
            covered: cov.iter().map(|s| s.to_string()).collect(),
            bugs: bugs.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn seed_totals_pool_counts_before_dividing() {
        let m = SeedMetrics::new(0, &[stats(4, 4, 4, &["a"], &["b1"]), stats(6, 2, 0, &["a", "b"], &["b1", "b2"])]);
        assert_eq!(m.totals.ratio(), 4.0 / 6.0);
        assert_eq!((m.coverage(), m.detected()), (2, 2));
        assert_eq!(m.steps_per_run(), 5.0);
        assert_eq!(TraceStats::default().ratio(), 0.0);
        assert_eq!(SeedMetrics::new(1, &[]).steps_per_run(), 0.0);
    }
}
