//! Machine-readable reports.

use std::collections::BTreeMap;

use lagbonnet_core::chart::{ConformalChart, Norms};
use lagbonnet_core::integrability::{Tolerance, ToleranceClass};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEntry {
    pub linf: f64,
    pub l2: f64,
}

impl From<Norms> for NormEntry {
    fn from(n: Norms) -> Self {
        Self { linf: n.linf, l2: n.l2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceEntry {
    pub class: String,
    pub value: f64,
    pub constant: f64,
    /// The threshold on the input chart.
    pub threshold: Option<f64>,
}

impl ToleranceEntry {
    pub fn new(tol: &Tolerance, chart: Option<&ConformalChart>) -> Self {
        let class = match tol.class {
            ToleranceClass::Exact => "exact",
            ToleranceClass::H2 => "h2",
            ToleranceClass::H4 => "h4",
        };
        Self {
            class: class.into(),
            value: tol.value,
            constant: tol.constant,
            threshold: chart.map(|c| tol.threshold(c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub input: Value,
    pub tolerance: Option<ToleranceEntry>,
    pub norms: BTreeMap<String, NormEntry>,
    pub verdicts: BTreeMap<String, bool>,
    pub exit: i32,
    /// Command-specific findings that are not pass/fail.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, Value>,
}

impl Report {
    pub fn new(command: &str, input: Value, tolerance: Option<ToleranceEntry>) -> Self {
        Self {
            command: command.into(),
            input,
            tolerance,
            norms: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            exit: 0,
            details: BTreeMap::new(),
        }
    }

    pub fn norm(&mut self, name: &str, n: impl Into<NormEntry>) -> &mut Self {
        self.norms.insert(name.into(), n.into());
        self
    }

    /// A single number reported as both norms.
    pub fn scalar(&mut self, name: &str, v: f64) -> &mut Self {
        self.norm(name, NormEntry { linf: v, l2: v })
    }

    pub fn verdict(&mut self, name: &str, pass: bool) -> &mut Self {
        self.verdicts.insert(name.into(), pass);
        self
    }

    pub fn detail(&mut self, name: &str, v: impl Into<Value>) -> &mut Self {
        self.details.insert(name.into(), v.into());
        self
    }

    /// 0 when every verdict passes, 1 otherwise.
    pub fn finish(mut self) -> Self {
        self.exit = if self.verdicts.values().all(|&v| v) { 0 } else { 1 };
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Merges reports; keys are prefixed with the position and command of
/// their source, and the exit code is the largest one.
pub fn merge(reports: &[(String, Report)]) -> Report {
    let inputs: Vec<Value> = reports.iter().map(|(name, _)| Value::String(name.clone())).collect();
    let mut out = Report::new("report", Value::Array(inputs), None);
    for (k, (_, r)) in reports.iter().enumerate() {
        let prefix = format!("{k}.{}", r.command);
        for (name, n) in &r.norms {
            out.norms.insert(format!("{prefix}.{name}"), *n);
        }
        for (name, v) in &r.verdicts {
            out.verdicts.insert(format!("{prefix}.{name}"), *v);
        }
    }
    out.exit = reports.iter().map(|(_, r)| r.exit).max().unwrap_or(0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_follows_verdicts_and_merge_keeps_the_worst() {
        let mut a = Report::new("check", "a.json".into(), None);
        a.verdict("integrable", true).scalar("gauss", 0.0);
        let a = a.finish();
        assert_eq!(a.exit, 0);
        let mut b = Report::new("bonnet", "b.json".into(), None);
        b.verdict("admissible", false);
        let b = b.finish();
        assert_eq!(b.exit, 1);
        let m = merge(&[("a".into(), a.clone()), ("b".into(), b)]);
        assert_eq!(m.exit, 1);
        assert!(m.verdicts["0.check.integrable"]);
        assert!(!m.verdicts["1.bonnet.admissible"]);
        let back: Report = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }
}
