use std::collections::BTreeMap;

use gradcert::critical::CriticalPoint;
use gradcert::gradlike::{Certificate, DecayProfile, Region, Status, Verdict};
use gradcert::weinstein::DeformationDiagnostics;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct CertificateSummary {
    pub residual: f64,
    pub residual_scale: f64,
    pub positivity_margin: f64,
    pub samples: usize,
    pub region: Region,
}

impl From<&Certificate> for CertificateSummary {
    fn from(c: &Certificate) -> Self {
        CertificateSummary {
            residual: c.residual(),
            residual_scale: c.residual_scale(),
            positivity_margin: c.positivity_margin(),
            samples: c.samples(),
            region: c.region().clone(),
        }
    }
}

/// JSON report of one invocation. Keys are ordered and the body carries no
/// timestamps, so identical input gives identical bytes.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub task: String,
    pub verdicts: BTreeMap<String, Verdict>,
    pub critical_points: Vec<CriticalPoint>,
    pub certificate: Option<CertificateSummary>,
    pub deformation: Vec<DeformationDiagnostics>,
    pub decay_profiles: Vec<DecayProfile>,
}

impl Report {
    pub fn new(task: &str) -> Self {
        Report {
            task: task.to_string(),
            verdicts: BTreeMap::new(),
            critical_points: Vec::new(),
            certificate: None,
            deformation: Vec::new(),
            decay_profiles: Vec::new(),
        }
    }

    pub fn put(&mut self, name: impl Into<String>, v: Verdict) {
        self.verdicts.insert(name.into(), v);
    }

    pub fn status(&self) -> Status {
        self.verdicts
            .values()
            .fold(Status::Pass, |s, v| s.worst(v.status))
    }

    /// 0 when everything passes, 1 on any failure, 3 when something is
    /// inconclusive and nothing fails.
    pub fn exit_code(&self) -> i32 {
        match self.status() {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Inconclusive => 3,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gradcert::gradlike::Witness;

    #[test]
    fn exit_code_follows_worst_verdict() {
        let mut r = Report::new("t");
        assert_eq!(r.exit_code(), 0);
        r.put("a", Verdict::pass(1.0));
        assert_eq!(r.exit_code(), 0);
        r.put("b", Verdict::inconclusive("?"));
        assert_eq!(r.exit_code(), 3);
        r.put("c", Verdict::fail(Witness::new(&[0.0], &[])));
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn top_level_keys() {
        let v: serde_json::Value = serde_json::from_str(&Report::new("check").to_json()).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(
            keys,
            [
                "certificate",
                "critical_points",
                "decay_profiles",
                "deformation",
                "task",
                "verdicts"
            ]
        );
    }
}
