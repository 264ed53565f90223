use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::protocol::EntryId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub name: String,
    pub outcome: StepOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub elapsed_ms: f64,
    /// Indices into the scenario transcript of messages this step sent or read.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transcript_refs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub scenario: String,
    pub success: bool,
    pub steps: Vec<StepRecord>,
    pub recovered_values: BTreeMap<String, String>,
    #[serde(default)]
    pub counters: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<String>,
}

impl AttackReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// JSON with timing removed, for reproducibility checks.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        for s in &mut r.steps {
            s.elapsed_ms = 0.0;
        }
        serde_json::to_string(&r).expect("report serializes")
    }

    pub fn step(&self, name: &str) -> Option<&StepRecord> {
        self.steps.iter().find(|s| s.name == name)
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "{}: {}\n",
            self.scenario,
            if self.success { "SUCCESS" } else { "FAILED" }
        );
        for s in &self.steps {
            out.push_str(&format!(
                "  {:<18} {:<7} {:>10.3} ms  {}\n",
                s.name,
                match s.outcome {
                    StepOutcome::Success => "ok",
                    StepOutcome::Failure => "FAIL",
                },
                s.elapsed_ms,
                s.detail.as_deref().unwrap_or("")
            ));
        }
        for (k, v) in &self.counters {
            out.push_str(&format!("  {k} = {v}\n"));
        }
        for a in &self.anomalies {
            out.push_str(&format!("  anomaly: {a}\n"));
        }
        out
    }
}

#[derive(Debug, Default)]
struct Tally {
    name: String,
    ok: u64,
    failed: u64,
    elapsed: Duration,
    refs: Vec<usize>,
    first_failure: Option<String>,
    detail: Option<String>,
}

/// Accumulates per-trial step outcomes into one report. Steps keep the order
/// in which they were first seen.
#[derive(Debug)]
pub struct ReportBuilder {
    scenario: String,
    tallies: Vec<Tally>,
    trials: u64,
    recovered: BTreeMap<String, String>,
    counters: BTreeMap<String, u64>,
    anomalies: Vec<String>,
}

impl ReportBuilder {
    pub fn new(scenario: &str) -> Self {
        ReportBuilder {
            scenario: scenario.to_string(),
            tallies: Vec::new(),
            trials: 0,
            recovered: BTreeMap::new(),
            counters: BTreeMap::new(),
            anomalies: Vec::new(),
        }
    }

    fn tally(&mut self, name: &str) -> &mut Tally {
        if let Some(i) = self.tallies.iter().position(|t| t.name == name) {
            return &mut self.tallies[i];
        }
        self.tallies.push(Tally {
            name: name.to_string(),
            ..Tally::default()
        });
        self.tallies.last_mut().unwrap()
    }

    pub fn begin_trial(&mut self) {
        self.trials += 1;
    }

    pub fn record(
        &mut self,
        name: &str,
        ok: bool,
        elapsed: Duration,
        refs: &[EntryId],
        detail: Option<String>,
    ) {
        let t = self.tally(name);
        if ok {
            t.ok += 1;
        } else {
            t.failed += 1;
            if t.first_failure.is_none() {
                t.first_failure = detail.clone();
            }
        }
        if t.detail.is_none() {
            t.detail = detail;
        }
        t.elapsed += elapsed;
        t.refs.extend(refs.iter().map(|r| r.0));
    }

    /// Keeps the first value recorded under `name`.
    pub fn recovered(&mut self, name: &str, value: impl AsRef<[u8]>) {
        self.recovered
            .entry(name.to_string())
            .or_insert_with(|| hex::encode(value.as_ref()));
    }

    pub fn count(&mut self, name: &str, by: u64) {
        *self.counters.entry(name.to_string()).or_insert(0) += by;
    }

    pub fn set_counter(&mut self, name: &str, value: u64) {
        self.counters.insert(name.to_string(), value);
    }

    pub fn anomaly(&mut self, text: String) {
        self.anomalies.push(text);
    }

    pub fn finish(mut self) -> AttackReport {
        self.counters.insert("trials".into(), self.trials);
        let multi = self.trials > 1;
        let steps: Vec<StepRecord> = self
            .tallies
            .into_iter()
            .map(|t| {
                let total = t.ok + t.failed;
                let outcome = if t.failed == 0 {
                    StepOutcome::Success
                } else {
                    StepOutcome::Failure
                };
                let detail = match (multi, outcome) {
                    (true, StepOutcome::Success) => Some(format!("{}/{} trials", t.ok, total)),
                    (true, StepOutcome::Failure) => Some(format!(
                        "{}/{} trials; first failure: {}",
                        t.ok,
                        total,
                        t.first_failure.as_deref().unwrap_or("-")
                    )),
                    (false, StepOutcome::Failure) => t.first_failure,
                    (false, StepOutcome::Success) => t.detail,
                };
                StepRecord {
                    name: t.name,
                    outcome,
                    detail,
                    elapsed_ms: t.elapsed.as_secs_f64() * 1e3,
                    transcript_refs: t.refs,
                }
            })
            .collect();
        let success = !steps.is_empty() && steps.iter().all(|s| s.outcome == StepOutcome::Success);
        AttackReport {
            scenario: self.scenario,
            success,
            steps,
            recovered_values: self.recovered,
            counters: self.counters,
            anomalies: self.anomalies,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn success_requires_every_step() {
        let mut b = ReportBuilder::new("x");
        b.begin_trial();
        b.record("a", true, Duration::ZERO, &[], None);
        b.record("b", false, Duration::ZERO, &[], Some("nope".into()));
        let r = b.finish();
        assert!(!r.success);
        assert_eq!(r.step("b").unwrap().detail.as_deref(), Some("nope"));

        let mut b = ReportBuilder::new("x");
        b.begin_trial();
        b.record("a", true, Duration::ZERO, &[EntryId(0)], None);
        let r = b.finish();
        assert!(r.success);
        assert_eq!(r.step("a").unwrap().transcript_refs, vec![0]);
    }

    #[test]
    fn empty_report_is_not_success() {
        assert!(!ReportBuilder::new("x").finish().success);
    }

    #[test]
    fn multi_trial_details_count() {
        let mut b = ReportBuilder::new("x");
        for i in 0..3 {
            b.begin_trial();
            b.record(
                "a",
                i != 1,
                Duration::from_millis(1),
                &[],
                Some(format!("t{i}")),
            );
        }
        let r = b.finish();
        assert_eq!(r.counters["trials"], 3);
        assert_eq!(
            r.step("a").unwrap().detail.as_deref(),
            Some("2/3 trials; first failure: t1")
        );
    }

    #[test]
    fn canonical_json_ignores_timing() {
        let mut a = ReportBuilder::new("x");
        a.begin_trial();
        a.record("s", true, Duration::from_millis(3), &[], None);
        let mut b = ReportBuilder::new("x");
        b.begin_trial();
        b.record("s", true, Duration::from_millis(9), &[], None);
        assert_eq!(a.finish().canonical_json(), b.finish().canonical_json());
    }
}
