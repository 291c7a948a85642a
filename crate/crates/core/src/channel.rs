//! Quantum channel with BB84 decoy particles and an optional interceptor.
//!
//! A transfer pads the payload particles with `d1` X-basis and `d2` Z-basis
//! decoys at uniformly random positions. After delivery the sender discloses
//! positions and bases, the receiver measures each decoy in the disclosed
//! basis and announces the bits, and the sender counts mismatches.

use rand::seq::{index::sample, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exec;
use crate::field::ParticipantId;
use crate::statevector::{Basis, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Decoys prepared in the X basis.
    pub d1: usize,
    /// Decoys prepared in the Z basis.
    pub d2: usize,
    /// Largest tolerated number of decoy mismatches.
    pub abort_threshold: usize,
}

impl ChannelConfig {
    pub fn new(d1: usize, d2: usize) -> Self {
        ChannelConfig { d1, d2, abort_threshold: 0 }
    }

    pub fn decoys(&self) -> usize {
        self.d1 + self.d2
    }

    /// Probability that an intercept-resend attack on every particle stays
    /// within the abort threshold: `Σ_{e ≤ k} C(d, e) (1/4)^e (3/4)^{d−e}`,
    /// which is `(3/4)^d` at the default threshold 0.
    pub fn intercept_pass_probability(&self) -> f64 {
        let d = self.decoys();
        let mut binom = 1.0f64;
        let mut total = 0.0;
        for e in 0..=self.abort_threshold.min(d) {
            if e > 0 {
                binom *= (d - e + 1) as f64 / e as f64;
            }
            total += binom * 0.25f64.powi(e as i32) * 0.75f64.powi((d - e) as i32);
        }
        total
    }
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig::new(4, 4)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecoyBasis {
    X,
    Z,
}

impl DecoyBasis {
    fn measurement(self) -> Basis {
        match self {
            DecoyBasis::X => Basis::PlusMinus,
            DecoyBasis::Z => Basis::Computational,
        }
    }

    fn prepare(self, bit: u8) -> StateVector {
        match (self, bit) {
            (DecoyBasis::Z, b) => StateVector::basis_state(b),
            (DecoyBasis::X, 0) => StateVector::plus(),
            (DecoyBasis::X, _) => StateVector::minus(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decoy {
    pub position: usize,
    pub basis: DecoyBasis,
    pub bit: u8,
}

/// Sender-side record of where the decoys sit; disclosed only for verification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecoyRecord {
    pub sequence_len: usize,
    /// Sorted by position.
    pub decoys: Vec<Decoy>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "members")]
pub enum AdversaryModel {
    None,
    /// Measures every particle in a fair-coin X or Z basis and resends the
    /// eigenstate it found.
    InterceptResend,
    /// Dishonest reconstructor publishing forged bits. Passive on the channel.
    FakeMeasurementReconstructor,
    /// Colluding users; on a transfer they intercept like [`AdversaryModel::InterceptResend`].
    ColludingUsers(Vec<ParticipantId>),
}

impl AdversaryModel {
    pub fn intercepts(&self) -> bool {
        matches!(self, AdversaryModel::InterceptResend | AdversaryModel::ColludingUsers(_))
    }
}

/// One transmitted qubit, possibly half of an entangled register that the
/// sender keeps.
#[derive(Clone, Debug, PartialEq)]
pub struct Particle {
    pub register: StateVector,
    pub qubit: usize,
}

impl Particle {
    pub fn single(state: StateVector) -> Self {
        Particle { register: state, qubit: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Slot {
    Payload(Particle),
    Decoy(StateVector),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReceivedSequence {
    pub slots: Vec<Slot>,
}

impl ReceivedSequence {
    /// Receiver measures each disclosed decoy in its disclosed basis.
    pub fn measure_decoys<R: Rng + ?Sized>(&mut self, record: &DecoyRecord, rng: &mut R) -> Vec<u8> {
        record
            .decoys
            .iter()
            .map(|d| match &mut self.slots[d.position] {
                Slot::Decoy(sv) => sv.measure(0, d.basis.measurement(), rng).expect("decoy is one qubit").bit,
                Slot::Payload(_) => panic!("decoy record points at a payload slot"),
            })
            .collect()
    }

    /// Payload particles in their original order.
    pub fn into_payload(self) -> Vec<Particle> {
        self.slots
            .into_iter()
            .filter_map(|s| match s {
                Slot::Payload(p) => Some(p),
                Slot::Decoy(_) => None,
            })
            .collect()
    }
}

fn intercept_resend<R: Rng + ?Sized>(slot: &mut Slot, rng: &mut R) {
    let basis = if rng.gen::<bool>() { Basis::PlusMinus } else { Basis::Computational };
    // the measured qubit is left in the eigenstate Eve found, which is what she resends
    match slot {
        Slot::Decoy(sv) => {
            sv.measure(0, basis, rng).expect("decoy is one qubit");
        }
        Slot::Payload(p) => {
            p.register.measure(p.qubit, basis, rng).expect("particle index valid");
        }
    }
}

/// Pads the payload with decoys and passes the sequence through the adversary.
pub fn transmit_with_decoys<R: Rng + ?Sized>(
    payload: Vec<Particle>,
    config: &ChannelConfig,
    adversary: &AdversaryModel,
    rng: &mut R,
) -> (ReceivedSequence, DecoyRecord) {
    let d = config.decoys();
    let total = payload.len() + d;
    let mut positions = sample(rng, total, d).into_vec();
    positions.sort_unstable();
    let mut bases: Vec<DecoyBasis> =
        std::iter::repeat_n(DecoyBasis::X, config.d1).chain(std::iter::repeat_n(DecoyBasis::Z, config.d2)).collect();
    bases.shuffle(rng);
    let decoys: Vec<Decoy> = positions
        .iter()
        .zip(bases)
        .map(|(&position, basis)| Decoy { position, basis, bit: rng.gen_range(0..2) })
        .collect();

    let mut payload = payload.into_iter();
    let mut next_decoy = decoys.iter().peekable();
    let mut slots = Vec::with_capacity(total);
    for pos in 0..total {
        match next_decoy.peek() {
            Some(dec) if dec.position == pos => {
                slots.push(Slot::Decoy(dec.basis.prepare(dec.bit)));
                next_decoy.next();
            }
            _ => slots.push(Slot::Payload(payload.next().expect("payload count matches"))),
        }
    }

    if adversary.intercepts() {
        slots.iter_mut().for_each(|s| intercept_resend(s, rng));
    }
    (ReceivedSequence { slots }, DecoyRecord { sequence_len: total, decoys })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict")]
pub enum DecoyVerdict {
    Pass { errors: usize },
    Abort { errors: usize, positions: Vec<usize> },
}

impl DecoyVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, DecoyVerdict::Pass { .. })
    }

    pub fn errors(&self) -> usize {
        match self {
            DecoyVerdict::Pass { errors } | DecoyVerdict::Abort { errors, .. } => *errors,
        }
    }
}

/// Compares the receiver's announced bits against the prepared ones.
pub fn verify_decoys(record: &DecoyRecord, announced: &[u8], config: &ChannelConfig) -> DecoyVerdict {
    assert_eq!(announced.len(), record.decoys.len(), "one announcement per decoy");
    let positions: Vec<usize> = record
        .decoys
        .iter()
        .zip(announced)
        .filter(|(d, &b)| d.bit != b)
        .map(|(d, _)| d.position)
        .collect();
    let errors = positions.len();
    if errors <= config.abort_threshold {
        DecoyVerdict::Pass { errors }
    } else {
        DecoyVerdict::Abort { errors, positions }
    }
}

/// Full transfer: transmit, disclose, measure, verify. On success the
/// payload is returned in order.
pub fn transfer<R: Rng + ?Sized>(
    payload: Vec<Particle>,
    config: &ChannelConfig,
    adversary: &AdversaryModel,
    rng: &mut R,
) -> Result<Vec<Particle>, DecoyVerdict> {
    let (mut received, record) = transmit_with_decoys(payload, config, adversary, rng);
    let announced = received.measure_decoys(&record, rng);
    match verify_decoys(&record, &announced, config) {
        DecoyVerdict::Pass { .. } => Ok(received.into_payload()),
        abort => Err(abort),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionEstimate {
    pub trials: usize,
    pub passes: usize,
    pub rate: f64,
    pub expected: f64,
    /// Binomial z-score of the observed pass count against `expected`.
    pub z_score: f64,
}

/// Binomial z-score; 0 when the expectation is degenerate and matched.
pub fn binomial_z(successes: usize, trials: usize, p: f64) -> f64 {
    let n = trials as f64;
    let sd = (n * p * (1.0 - p)).sqrt();
    let diff = successes as f64 - n * p;
    if sd == 0.0 {
        if diff.abs() < 1e-9 { 0.0 } else { f64::INFINITY.copysign(diff) }
    } else {
        diff / sd
    }
}

/// Monte Carlo pass rate of decoy verification when every particle of an
/// empty-payload transfer is intercepted and resent.
pub fn estimate_detection_probability(config: &ChannelConfig, trials: usize, seed: u64) -> DetectionEstimate {
    assert!(trials >= 1, "need at least one trial");
    let outcomes = exec::map_trials(trials, seed, |_, rng| {
        transfer(Vec::new(), config, &AdversaryModel::InterceptResend, rng).is_ok()
    });
    let passes = outcomes.into_iter().filter(|&p| p).count();
    let expected = config.intercept_pass_probability();
    DetectionEstimate {
        trials,
        passes,
        rate: passes as f64 / trials as f64,
        expected,
        z_score: binomial_z(passes, trials, expected),
    }
}
