//! Residual aggregation shared by the checkers and the command-line harness.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not-applicable",
        }
    }
}

/// Summary of one residual over a sample set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub name: String,
    /// The identity being checked, written out as a formula.
    pub paper_ref: String,
    pub samples: usize,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub max_rel: f64,
    pub tol: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ResidualReport {
    pub fn not_applicable(name: &str, formula: &str, tol: f64, why: impl Into<String>) -> Self {
        ResidualReport {
            name: name.to_string(),
            paper_ref: formula.to_string(),
            samples: 0,
            max_abs: 0.0,
            mean_abs: 0.0,
            max_rel: 0.0,
            tol,
            verdict: Verdict::NotApplicable,
            note: Some(why.into()),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn prefixed(mut self, prefix: &str) -> Self {
        self.name = format!("{prefix}/{}", self.name);
        self
    }
}

/// One run of the harness: what was checked and how it went.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<ResidualReport>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        all_pass(&self.checks)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ResidualReport> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Fail)
    }
}

/// Running max/mean of residuals; `push` takes the residual and a scale for the relative error.
#[derive(Clone, Debug)]
pub struct Accumulator {
    name: String,
    formula: String,
    tol: f64,
    count: usize,
    sum: f64,
    max_abs: f64,
    max_rel: f64,
    non_finite: bool,
}

impl Accumulator {
    pub fn new(name: &str, formula: &str, tol: f64) -> Self {
        Accumulator {
            name: name.to_string(),
            formula: formula.to_string(),
            tol,
            count: 0,
            sum: 0.0,
            max_abs: 0.0,
            max_rel: 0.0,
            non_finite: false,
        }
    }

    pub fn push(&mut self, residual: f64, scale: f64) {
        self.count += 1;
        if !residual.is_finite() {
            self.non_finite = true;
            return;
        }
        let r = residual.abs();
        self.sum += r;
        self.max_abs = self.max_abs.max(r);
        self.max_rel = self.max_rel.max(r / scale.abs().max(f64::MIN_POSITIVE));
    }

    pub fn merge(mut self, other: &Accumulator) -> Self {
        self.count += other.count;
        self.sum += other.sum;
        self.max_abs = self.max_abs.max(other.max_abs);
        self.max_rel = self.max_rel.max(other.max_rel);
        self.non_finite |= other.non_finite;
        self
    }

    pub fn finish(&self) -> ResidualReport {
        let mean = if self.count == 0 { 0.0 } else { self.sum / self.count as f64 };
        let verdict = if self.count == 0 {
            Verdict::NotApplicable
        } else if self.non_finite || self.max_abs > self.tol {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
        ResidualReport {
            name: self.name.clone(),
            paper_ref: self.formula.clone(),
            samples: self.count,
            max_abs: if self.non_finite { f64::INFINITY } else { self.max_abs },
            mean_abs: mean,
            max_rel: self.max_rel,
            tol: self.tol,
            verdict,
            note: self.non_finite.then(|| "non-finite residual encountered".to_string()),
        }
    }
}

/// Summarise a slice of `(residual, scale)` pairs.
pub fn summarize(name: &str, formula: &str, tol: f64, rows: impl IntoIterator<Item = (f64, f64)>) -> ResidualReport {
    let mut acc = Accumulator::new(name, formula, tol);
    for (r, s) in rows {
        acc.push(r, s);
    }
    acc.finish()
}

/// True when no report in the set failed.
pub fn all_pass(reports: &[ResidualReport]) -> bool {
    reports.iter().all(ResidualReport::passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_below_max() {
        let r = summarize("x", "a = b", 1e-3, [(1e-4, 1.0), (-3e-4, 2.0), (0.0, 1.0)]);
        assert_eq!(r.samples, 3);
        assert!(r.max_abs >= r.mean_abs && r.mean_abs >= 0.0);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.max_rel - 1.5e-4).abs() < 1e-18);
    }

    #[test]
    fn nan_fails_and_empty_is_not_applicable() {
        assert_eq!(summarize("x", "", 1.0, [(f64::NAN, 1.0)]).verdict, Verdict::Fail);
        assert_eq!(summarize("x", "", 1.0, []).verdict, Verdict::NotApplicable);
    }

    #[test]
    fn merge_is_associative_on_extremes() {
        let mut a = Accumulator::new("x", "", 1.0);
        a.push(0.5, 1.0);
        let mut b = Accumulator::new("x", "", 1.0);
        b.push(2.0, 1.0);
        let r = a.merge(&b).finish();
        assert_eq!(r.max_abs, 2.0);
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(serde_json::to_value(r.verdict).unwrap(), "fail");
    }
}
