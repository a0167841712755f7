use serde::Serialize;

use super::{Verdict, VerificationReport};
use crate::numeric::HighPrecision;

/// Verdict counts of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub error: usize,
}

impl Summary {
    pub fn of(reports: &[VerificationReport]) -> Summary {
        let mut s = Summary::default();
        for r in reports {
            match r.verdict {
                Verdict::Pass => s.pass += 1,
                Verdict::Fail => s.fail += 1,
                Verdict::Error => s.error += 1,
            }
        }
        s
    }

    pub fn all_pass(&self) -> bool {
        self.fail == 0 && self.error == 0
    }
}

fn sci(x: &Option<HighPrecision>) -> Option<String> {
    x.as_ref().map(|v| if v.is_zero() { "0".to_string() } else { v.to_decimal(3) })
}

#[derive(Serialize)]
struct Line<'a> {
    id: &'a str,
    mode: &'a str,
    verdict: &'a str,
    residual: Option<String>,
    tolerance: Option<String>,
    terms: u64,
    samples: &'a [String],
    #[serde(rename = "elapsed-ms")]
    elapsed_ms: Option<u128>,
}

/// One JSON object per line. Elapsed time is `null` unless `timings`, so the
/// output is reproducible byte for byte.
pub fn format_json(r: &VerificationReport, timings: bool) -> String {
    let line = Line {
        id: &r.id,
        mode: &r.mode,
        verdict: r.verdict.name(),
        residual: sci(&r.residual),
        tolerance: if r.residual.is_some() {
            Some(sci(&r.tolerance).unwrap_or_else(|| "0".into()))
        } else {
            None
        },
        terms: r.terms,
        samples: &r.samples,
        elapsed_ms: timings.then_some(r.elapsed.as_millis()),
    };
    serde_json::to_string(&line).expect("plain data serializes")
}

/// Human-readable single line.
pub fn format_text(r: &VerificationReport, timings: bool) -> String {
    let mut s = format!("{:<5} {:<14} {}", r.verdict.name(), r.id, r.mode);
    if let Some(res) = sci(&r.residual) {
        s.push_str(&format!("  residual {res}"));
        match sci(&r.tolerance) {
            Some(t) => s.push_str(&format!(" (tolerance {t})")),
            None => s.push_str(" (exact)"),
        }
    }
    s.push_str(&format!("  samples {}  terms {}", r.samples.len(), r.terms));
    if timings {
        s.push_str(&format!("  {} ms", r.elapsed.as_millis()));
    }
    if let Some(d) = &r.detail {
        s.push_str(&format!("  [{d}]"));
    }
    s
}
