use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Info => "info",
        }
    }

    fn of(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// How a statistic is judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rule {
    Info,
    /// `|value − target| ≤ k · se`.
    WithinSe { target: f64, k: f64 },
    /// `value < cap`.
    Below { cap: f64 },
    /// `value ≤ cap`.
    AtMost { cap: f64 },
    /// `|value / target − 1| ≤ tolerance`.
    Relative { target: f64, tolerance: f64 },
    /// A sequence judged elsewhere; `value` is last/first.
    Decreasing,
}

impl Rule {
    pub fn threshold(&self) -> String {
        match *self {
            Rule::Info => String::new(),
            Rule::WithinSe { target, k } => format!("|value-{target}|<={k}se"),
            Rule::Below { cap } => format!("<{cap}"),
            Rule::AtMost { cap } => format!("<={cap}"),
            Rule::Relative { target, tolerance } => format!("|value/{target}-1|<={tolerance}"),
            Rule::Decreasing => "strictly decreasing".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub name: String,
    pub n: Option<usize>,
    /// Non-finite values are written as `null` and read back as NaN.
    #[serde(with = "nullable")]
    pub value: f64,
    pub se: Option<f64>,
    pub rule: Rule,
    pub verdict: Verdict,
}

impl Statistic {
    pub fn info(name: impl Into<String>, n: Option<usize>, value: f64, se: Option<f64>) -> Self {
        Self {
            name: name.into(),
            n,
            value,
            se,
            rule: Rule::Info,
            verdict: Verdict::Info,
        }
    }

    pub fn check(name: impl Into<String>, n: Option<usize>, value: f64, se: Option<f64>, rule: Rule) -> Self {
        let ok = value.is_finite()
            && match rule {
                Rule::Info => true,
                Rule::WithinSe { target, k } => se.is_some_and(|se| (value - target).abs() <= k * se),
                Rule::Below { cap } => value < cap,
                Rule::AtMost { cap } => value <= cap,
                Rule::Relative { target, tolerance } => (value / target - 1.0).abs() <= tolerance,
                Rule::Decreasing => true,
            };
        let verdict = if rule == Rule::Info { Verdict::Info } else { Verdict::of(ok) };
        Self {
            name: name.into(),
            n,
            value,
            se,
            rule,
            verdict,
        }
    }

    /// Strict decrease of `values`; sequences already at rounding level (≤ `floor`) also pass.
    pub fn decreasing(name: impl Into<String>, values: &[f64], floor: f64) -> Self {
        let ok = values.windows(2).all(|w| w[1] < w[0]) || values.iter().all(|v| v.abs() <= floor);
        let first = values.first().copied().unwrap_or(0.0);
        let last = values.last().copied().unwrap_or(0.0);
        let value = if first != 0.0 { last / first } else { 0.0 };
        Self {
            name: name.into(),
            n: None,
            value,
            se: None,
            rule: Rule::Decreasing,
            verdict: Verdict::of(ok && values.iter().all(|v| v.is_finite())),
        }
    }
}

mod nullable {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub anchor: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub statistics: Vec<Statistic>,
    pub notes: Vec<String>,
    pub error: Option<ErrorRecord>,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.statistics.iter().all(|s| s.verdict != Verdict::Fail)
    }

    pub fn statistic(&self, name: &str, n: Option<usize>) -> Option<&Statistic> {
        self.statistics.iter().find(|s| s.name == name && s.n == n)
    }

    /// Everything except the wall clock, for reproducibility comparisons.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(&(&self.config, &self.statistics, &self.notes, &self.error))
            .expect("report serializes")
    }

    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            1
        } else if self.passed() {
            0
        } else {
            2
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        let m = self.config.paths.to_string();
        let h = self.config.hurst.to_string();
        for s in &self.statistics {
            w.write_record([
                self.experiment.as_str(),
                &s.n.map(|n| n.to_string()).unwrap_or_default(),
                &m,
                &h,
                &s.name,
                &s.value.to_string(),
                &s.se.map(|v| v.to_string()).unwrap_or_default(),
                &s.rule.threshold(),
                s.verdict.as_str(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub const CSV_HEADER: [&str; 9] = ["experiment", "n", "M", "H", "statistic", "value", "se", "threshold", "verdict"];

/// Aligned text table of a report's statistics.
pub fn summarize(report: &ExperimentReport) -> String {
    let header = ["statistic", "n", "value", "se", "threshold", "verdict"];
    let rows: Vec<[String; 6]> = report
        .statistics
        .iter()
        .map(|s| {
            [
                s.name.clone(),
                s.n.map(|n| n.to_string()).unwrap_or_default(),
                format!("{:.6e}", s.value),
                s.se.map(|v| format!("{v:.3e}")).unwrap_or_default(),
                s.rule.threshold(),
                s.verdict.as_str().to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: &[&str], out: &mut String| {
        let parts: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&header, &mut out);
    for r in &rows {
        let cells: Vec<&str> = r.iter().map(String::as_str).collect();
        line(&cells, &mut out);
    }
    out
}
