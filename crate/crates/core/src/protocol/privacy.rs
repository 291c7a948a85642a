//! Syntactic scan of a published transcript against the private values of
//! the session that produced it.

use std::collections::BTreeSet;

use serde_json::Value;

use crate::angle::RationalAngle;

use super::engine::ReconstructionReport;
use super::transcript::{MessageBody, Transcript};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PrivacyViolation {
    /// A line whose keys or kind fall outside the public schema.
    Schema { seq: u64, detail: String },
    /// A masked angle equal (mod 2π) to a private `δ` of the same secret.
    SigmaEqualsDelta { seq: u64, angle: RationalAngle },
    /// A masked angle equal (mod 2π) to a user's `γ` of the same secret.
    SigmaEqualsGamma { seq: u64, angle: RationalAngle },
    /// A bit that is neither 0 nor 1, or a `w` that is not the announced one.
    BadValue { seq: u64, detail: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrivacyScan {
    pub messages: usize,
    pub violations: Vec<PrivacyViolation>,
}

impl PrivacyScan {
    pub fn clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn payload_keys(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "w_announce" => &["secret", "w"],
        "measurement_bit" => &["bit", "secret"],
        "sigma_angle" => &["angle", "secret"],
        "abort_notice" => &["errors", "reason"],
        "secret_recovered" => &["secret"],
        _ => return None,
    })
}

fn keys(v: &Value) -> BTreeSet<&str> {
    v.as_object().map(|o| o.keys().map(String::as_str).collect()).unwrap_or_default()
}

fn check_schema(line: &str, seq: u64, out: &mut Vec<PrivacyViolation>) {
    let schema = |detail: String| PrivacyViolation::Schema { seq, detail };
    let v: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return out.push(schema(e.to_string())),
    };
    let top: BTreeSet<&str> = ["actor", "kind", "payload", "phase", "seq"].into();
    if keys(&v) != top {
        return out.push(schema(format!("top-level keys {:?}", keys(&v))));
    }
    let kind = v["kind"].as_str().unwrap_or("");
    match payload_keys(kind) {
        None => out.push(schema(format!("unknown kind `{kind}`"))),
        Some(allowed) => {
            let want: BTreeSet<&str> = allowed.iter().copied().collect();
            if keys(&v["payload"]) != want {
                out.push(schema(format!("{kind} payload keys {:?}", keys(&v["payload"]))));
            }
        }
    }
    if let Some(angle) = v["payload"].get("angle") {
        if keys(angle) != BTreeSet::from(["den", "num"]) {
            out.push(schema("angle is not {num, den}".into()));
        }
    }
}

/// Checks the serialized transcript against the schema, and every masked
/// angle against the private `δ` and `γ` values of its secret.
pub fn scan_transcript_privacy(transcript: &Transcript, report: &ReconstructionReport, w: &[u64]) -> PrivacyScan {
    let mut violations = Vec::new();
    for (line, msg) in transcript.to_jsonl().lines().zip(transcript.messages()) {
        check_schema(line, msg.seq, &mut violations);
    }
    let users = || report.contexts.iter().skip(1);
    for msg in transcript.messages() {
        let seq = msg.seq;
        match &msg.body {
            MessageBody::SigmaAngle { secret, angle } => {
                let a = angle.rem_turn();
                if users().any(|c| c.deltas.get(*secret).is_some_and(|d| d.rem_turn() == a)) {
                    violations.push(PrivacyViolation::SigmaEqualsDelta { seq, angle: *angle });
                }
                if users().any(|c| c.gammas.get(*secret).is_some_and(|g| g.rem_turn() == a)) {
                    violations.push(PrivacyViolation::SigmaEqualsGamma { seq, angle: *angle });
                }
            }
            MessageBody::MeasurementBit { bit, .. } if *bit > 1 => {
                violations.push(PrivacyViolation::BadValue { seq, detail: format!("bit {bit}") });
            }
            MessageBody::WAnnounce { secret, w: announced } if w.get(*secret) != Some(announced) => {
                violations.push(PrivacyViolation::BadValue { seq, detail: format!("w {announced} for secret {secret}") });
            }
            _ => {}
        }
    }
    PrivacyScan { messages: transcript.len(), violations }
}

/// Scans a raw JSONL transcript for the schema only; usable without the
/// private side of the session.
pub fn scan_jsonl_schema(text: &str) -> Vec<PrivacyViolation> {
    let mut out = Vec::new();
    for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        check_schema(line, i as u64, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::engine::run_seeded;
    use crate::protocol::session::{DeltaChoice, SessionPlan};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn honest_demo_is_clean() {
        let plan = SessionPlan::demo(3);
        let report = run_seeded(&plan).unwrap();
        let scan = scan_transcript_privacy(&report.transcript, &report, &plan.config.w);
        assert!(scan.clean(), "{:?}", scan.violations);
        assert!(scan_jsonl_schema(&report.transcript.to_jsonl()).is_empty());
    }

    #[test]
    fn random_sessions_are_clean() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let plan = SessionPlan::random(&mut rng);
            let report = run_seeded(&plan).unwrap();
            let scan = scan_transcript_privacy(&report.transcript, &report, &plan.config.w);
            assert!(scan.clean(), "{:?}", scan.violations);
        }
    }

    #[test]
    fn zero_delta_is_flagged() {
        let mut plan = SessionPlan::demo(0);
        plan.config.deltas = DeltaChoice::Fixed(vec![vec![RationalAngle::ZERO; 2]; 2]);
        let report = run_seeded(&plan).unwrap();
        let scan = scan_transcript_privacy(&report.transcript, &report, &plan.config.w);
        assert!(scan.violations.iter().any(|v| matches!(v, PrivacyViolation::SigmaEqualsGamma { .. })));
    }

    #[test]
    fn schema_rejects_extra_fields() {
        let line = r#"{"seq":0,"phase":"split","actor":"Dealer","kind":"w_announce","payload":{"secret":0,"w":1,"share":6}}"#;
        assert_eq!(scan_jsonl_schema(line).len(), 1);
        let line = r#"{"seq":0,"phase":"split","actor":"Dealer","kind":"share","payload":{"value":6}}"#;
        assert_eq!(scan_jsonl_schema(line).len(), 1);
    }
}
