//! Finite-sample verdicts with a reproducible worst-case witness.

use serde::{Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

fn finite_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&x.is_finite().then_some(*x))?;
    }
    seq.end()
}

/// The sample that came closest to (or furthest past) the inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    /// Point of the sample; empty for level-only checks.
    #[serde(serialize_with = "finite_vec")]
    pub x: Vec<f64>,
    /// Level, index or step parameter of the sample.
    #[serde(serialize_with = "finite_or_null")]
    pub r: f64,
    /// `rhs − lhs` of the checked inequality; negative means violated.
    #[serde(serialize_with = "finite_or_null")]
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub verdict: Verdict,
    pub witness: Witness,
    #[serde(serialize_with = "finite_or_null")]
    pub tol: f64,
}

impl CheckReport {
    /// PASS iff the worst margin is at least `−tol`.
    pub fn from_margin(name: &str, witness: Witness, tol: f64) -> Self {
        let verdict = if witness.margin >= -tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        CheckReport {
            name: name.to_string(),
            verdict,
            witness,
            tol,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Tracks the sample with the smallest margin.
#[derive(Clone, Debug)]
pub struct WorstCase {
    best: Option<Witness>,
}

impl Default for WorstCase {
    fn default() -> Self {
        WorstCase::new()
    }
}

impl WorstCase {
    pub fn new() -> Self {
        WorstCase { best: None }
    }

    /// Records a sample; the first of equal margins is kept. NaN margins
    /// count as violations.
    pub fn offer(&mut self, x: &[f64], r: f64, margin: f64) {
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        let better = match &self.best {
            None => true,
            Some(w) => margin < w.margin,
        };
        if better {
            self.best = Some(Witness {
                x: x.to_vec(),
                r,
                margin,
            });
        }
    }

    pub fn merge(&mut self, other: WorstCase) {
        if let Some(w) = other.best {
            self.offer(&w.x, w.r, w.margin);
        }
    }

    pub fn witness(self) -> Witness {
        self.best.unwrap_or(Witness {
            x: Vec::new(),
            r: f64::NAN,
            margin: f64::INFINITY,
        })
    }

    pub fn report(self, name: &str, tol: f64) -> CheckReport {
        CheckReport::from_margin(name, self.witness(), tol)
    }
}
