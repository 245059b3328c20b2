//! Serializable experiment reports.
//!
//! A [`Report`] records one experiment end to end: configuration, seed,
//! per-step metrics, and aggregate numbers. Timing fields are carried for
//! humans but excluded from [`Report::replay_equal`], so two runs with the
//! same seed and configuration compare equal even on different machines.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::Result;

/// Bumped whenever the serialized layout changes shape.
pub const SCHEMA_VERSION: u32 = 1;

/// Metrics captured at one stream step.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StepMetrics {
    /// Arrival index (0-based).
    pub t: u64,
    /// Scalar error for this step; meaning depends on the algorithm.
    pub error: f64,
    /// Rows currently held by the sketch.
    pub rows_stored: u64,
    /// Whether this step's accuracy check passed.
    pub ok: bool,
    /// Wall-clock nanoseconds spent on this step (timing; not replayed).
    pub wall_ns: u64,
}

/// Full record of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Report {
    /// Layout version; readers should reject unknown versions.
    pub schema: u32,
    /// Algorithm name as given on the command line.
    pub algorithm: String,
    /// Echo of the resolved configuration.
    pub config: serde_json::Value,
    /// Base seed of the run.
    pub seed: u64,
    /// Per-step metrics for the first trial.
    pub steps: Vec<StepMetrics>,
    /// Aggregates across all trials (success_rate, worst_error, …).
    pub aggregate: BTreeMap<String, f64>,
    /// Overall verdict.
    pub passed: bool,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Report = serde_json::from_str(s)?;
        if r.schema != SCHEMA_VERSION {
            return Err(crate::Error::invalid(format!(
                "unsupported report schema {} (expected {SCHEMA_VERSION})",
                r.schema
            )));
        }
        Ok(r)
    }

    /// Equality up to timing: wall-clock step fields and any aggregate key
    /// starting with `wall` are ignored.
    pub fn replay_equal(&self, other: &Report) -> bool {
        let strip = |r: &Report| {
            let mut c = r.clone();
            for s in &mut c.steps {
                s.wall_ns = 0;
            }
            c.aggregate.retain(|k, _| !k.starts_with("wall"));
            serde_json::to_value(&c).expect("report serializes")
        };
        strip(self) == strip(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        Report {
            schema: SCHEMA_VERSION,
            algorithm: "spectral-det".into(),
            config: serde_json::json!({"eps": 0.25}),
            seed: 7,
            steps: vec![StepMetrics { t: 0, error: 0.01, rows_stored: 3, ok: true, wall_ns: 1234 }],
            aggregate: BTreeMap::from([
                ("success_rate".into(), 1.0),
                ("wall_ms_total".into(), 5.0),
            ]),
            passed: true,
        }
    }

    #[test]
    fn json_round_trip_preserves_everything() {
        let r = sample();
        let back = Report::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(r, back);
    }

    #[test]
    fn unknown_schema_versions_are_rejected() {
        let mut r = sample();
        r.schema = 2;
        let s = serde_json::to_string(&r).unwrap();
        assert!(Report::from_json(&s).is_err());
    }

    #[test]
    fn replay_equality_ignores_timing_only() {
        let a = sample();
        let mut b = sample();
        b.steps[0].wall_ns = 999_999;
        b.aggregate.insert("wall_ms_total".into(), 80.0);
        assert!(a.replay_equal(&b));

        let mut c = sample();
        c.steps[0].error = 0.5;
        assert!(!a.replay_equal(&c));
        let mut d = sample();
        d.aggregate.insert("success_rate".into(), 0.5);
        assert!(!a.replay_equal(&d));
    }
}
