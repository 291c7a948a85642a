//! Ordered log of every public classical message in a session.
//!
//! Persisted as line-delimited JSON, one message per line with the keys
//! `seq`, `phase`, `actor`, `kind`, `payload` in that order. Angles are
//! `{"num": n, "den": d}` meaning `(n/d)·2π`.

use serde::{Deserialize, Serialize};

use crate::angle::RationalAngle;
use crate::error::TranscriptError;
use crate::field::ParticipantId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Split,
    Teleport,
    Correct,
    Finalize,
    Abort,
}

/// Message kind together with its payload. There is deliberately no variant
/// able to carry a share, a Lagrange weight or a private angle `δ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "payload")]
pub enum MessageBody {
    /// Public weight `w_j` for secret `j`.
    WAnnounce { secret: usize, w: u64 },
    /// A published measurement result.
    MeasurementBit { secret: usize, bit: u8 },
    /// A user's masked angle `σ`.
    SigmaAngle { secret: usize, angle: RationalAngle },
    AbortNotice { reason: String, errors: Option<usize> },
    /// The reconstructor applied the final rotation for a secret.
    SecretRecovered { secret: usize },
}

impl MessageBody {
    pub fn secret(&self) -> Option<usize> {
        match *self {
            MessageBody::WAnnounce { secret, .. }
            | MessageBody::MeasurementBit { secret, .. }
            | MessageBody::SigmaAngle { secret, .. }
            | MessageBody::SecretRecovered { secret } => Some(secret),
            MessageBody::AbortNotice { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptMessage {
    pub seq: u64,
    pub phase: Phase,
    pub actor: ParticipantId,
    #[serde(flatten)]
    pub body: MessageBody,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    messages: Vec<TranscriptMessage>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, phase: Phase, actor: &ParticipantId, body: MessageBody) {
        let seq = self.messages.last().map_or(0, |m| m.seq + 1);
        self.messages.push(TranscriptMessage { seq, phase, actor: actor.clone(), body });
    }

    pub fn messages(&self) -> &[TranscriptMessage] {
        &self.messages
    }

    pub fn messages_mut(&mut self) -> &mut [TranscriptMessage] {
        &mut self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        self.messages
            .iter()
            .map(|m| serde_json::to_string(m).expect("transcript messages serialize") + "\n")
            .collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TranscriptError> {
        let mut messages: Vec<TranscriptMessage> = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let msg: TranscriptMessage = serde_json::from_str(line)
                .map_err(|e| TranscriptError::Decode { line: i + 1, msg: e.to_string() })?;
            if messages.last().is_some_and(|prev| prev.seq >= msg.seq) {
                return Err(TranscriptError::Sequence(msg.seq));
            }
            messages.push(msg);
        }
        Ok(Transcript { messages })
    }

    /// Phases of the messages that concern secret `j`, in order.
    pub fn phases_for_secret(&self, j: usize) -> Vec<Phase> {
        self.messages.iter().filter(|m| m.body.secret() == Some(j)).map(|m| m.phase).collect()
    }

    /// Per-secret message shape: `(teleport bits, correction bits, σ angles, finalizations)`.
    pub fn shape_for_secret(&self, j: usize) -> (usize, usize, usize, usize) {
        let mut shape = (0, 0, 0, 0);
        for m in self.messages.iter().filter(|m| m.body.secret() == Some(j)) {
            match (m.phase, &m.body) {
                (Phase::Teleport, MessageBody::MeasurementBit { .. }) => shape.0 += 1,
                (Phase::Correct, MessageBody::MeasurementBit { .. }) => shape.1 += 1,
                (Phase::Correct, MessageBody::SigmaAngle { .. }) => shape.2 += 1,
                (Phase::Finalize, _) => shape.3 += 1,
                _ => {}
            }
        }
        shape
    }

    /// Checks that, for every secret, the phase sequence is
    /// `split*, teleport*, correct*, finalize` with nothing after finalize.
    pub fn phase_order_ok(&self, secrets: usize) -> bool {
        (0..secrets).all(|j| {
            let phases = self.phases_for_secret(j);
            let rank = |p: &Phase| match p {
                Phase::Split => 0,
                Phase::Teleport => 1,
                Phase::Correct => 2,
                Phase::Finalize => 3,
                Phase::Abort => 4,
            };
            phases.windows(2).all(|w| rank(&w[0]) <= rank(&w[1]))
                && phases.iter().filter(|p| **p == Phase::Finalize).count() <= 1
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Transcript {
        let dealer = ParticipantId::new("Dealer");
        let alice = ParticipantId::new("Alice");
        let mut t = Transcript::new();
        t.push(Phase::Split, &dealer, MessageBody::WAnnounce { secret: 0, w: 1 });
        t.push(Phase::Teleport, &alice, MessageBody::MeasurementBit { secret: 0, bit: 1 });
        t.push(
            Phase::Correct,
            &alice,
            MessageBody::SigmaAngle { secret: 0, angle: RationalAngle::from_pi_fraction(10, 7).unwrap() },
        );
        t.push(Phase::Finalize, &alice, MessageBody::SecretRecovered { secret: 0 });
        t
    }

    #[test]
    fn wire_format_is_exact() {
        let t = sample();
        let text = t.to_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"{"seq":0,"phase":"split","actor":"Dealer","kind":"w_announce","payload":{"secret":0,"w":1}}"#);
        assert_eq!(
            lines[2],
            r#"{"seq":2,"phase":"correct","actor":"Alice","kind":"sigma_angle","payload":{"secret":0,"angle":{"num":5,"den":7}}}"#
        );
    }

    #[test]
    fn jsonl_round_trip_and_sequence_check() {
        let t = sample();
        assert_eq!(Transcript::from_jsonl(&t.to_jsonl()).unwrap(), t);
        let mut lines: Vec<String> = t.to_jsonl().lines().map(String::from).collect();
        lines.swap(1, 2);
        assert!(matches!(Transcript::from_jsonl(&lines.join("\n")), Err(TranscriptError::Sequence(_))));
        assert!(matches!(Transcript::from_jsonl("{not json}"), Err(TranscriptError::Decode { line: 1, .. })));
    }

    #[test]
    fn phase_order() {
        let t = sample();
        assert!(t.phase_order_ok(1));
        assert_eq!(t.shape_for_secret(0), (1, 0, 1, 1));
        let mut bad = sample();
        bad.push(Phase::Teleport, &ParticipantId::new("Bob"), MessageBody::MeasurementBit { secret: 0, bit: 0 });
        assert!(!bad.phase_order_ok(1));
    }
}
