//! Dealer split, teleported rotation shares, the entangle–measure–correct
//! chain and end-to-end session execution.
//!
//! Register convention for a correction step: carrier on qubit 0, the
//! teleported `|+_δ⟩` on qubit 1.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::angle::RationalAngle;
use crate::channel::{transfer, AdversaryModel, ChannelConfig, DecoyVerdict, Particle};
use crate::error::{ConfigError, StateError};
use crate::field::{
    check_angle_sum, lagrange_weights, rotation_angle, DealerPolynomial, LagrangeWeight,
    ParticipantId, ShareRecord,
};
use crate::statevector::{fidelity_up_to_phase, Basis, Gate, StateVector};

use super::session::{DealerChoice, DeltaChoice, SessionConfig, SessionPlan};
use super::transcript::{MessageBody, Phase, Transcript};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Dealer,
    User,
    Reconstructor,
}

/// Private view of one party. Only the harness ever holds all of them.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticipantContext {
    pub id: ParticipantId,
    pub role: Role,
    pub share: Option<ShareRecord>,
    pub weight: Option<LagrangeWeight>,
    /// `γ_j` per secret.
    pub gammas: Vec<RationalAngle>,
    /// `δ_j` per secret; empty except for non-reconstructor users.
    pub deltas: Vec<RationalAngle>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitOutput {
    pub polynomial: DealerPolynomial,
    /// One share per configured user, in config order.
    pub shares: Vec<ShareRecord>,
    /// `R_X(γ_D^j)|ψ⟩_j`.
    pub encrypted: Vec<StateVector>,
    pub dealer_gammas: Vec<RationalAngle>,
}

fn draw_polynomial<R: Rng + ?Sized>(config: &SessionConfig, rng: &mut R) -> Result<DealerPolynomial, ConfigError> {
    match &config.dealer {
        DealerChoice::Fixed { dealer_secret, high_coeffs } => {
            Ok(DealerPolynomial::new(*dealer_secret, high_coeffs, config.modulus)?)
        }
        // a zero share gives a zero weight, and then σ = ±δ
        DealerChoice::Random => loop {
            let poly = DealerPolynomial::random(config.t, config.modulus, rng);
            if config.x.iter().all(|&x| poly.eval(x).value() != 0) {
                return Ok(poly);
            }
        },
    }
}

/// Dealer steps: polynomial, shares for all `n` users, and encryption of
/// every secret by `R_X(γ_D^j)`.
pub fn split_phase<R: Rng + ?Sized>(
    config: &SessionConfig,
    secrets: &[StateVector],
    rng: &mut R,
) -> Result<SplitOutput, ConfigError> {
    config.validate()?;
    if secrets.len() != config.secrets() {
        return Err(ConfigError::invalid("secrets", format!("{} secrets for {} w values", secrets.len(), config.w.len())));
    }
    if let Some(i) = secrets.iter().position(|s| s.num_qubits() != 1 || (s.norm() - 1.0).abs() > 1e-9) {
        return Err(ConfigError::BadSecret { index: i });
    }
    let polynomial = draw_polynomial(config, rng)?;
    let shares = config
        .names
        .iter()
        .zip(&config.x)
        .map(|(name, &x)| ShareRecord { participant: name.clone(), x, share: polynomial.eval(x) })
        .collect();
    let dealer_gammas: Vec<RationalAngle> = config
        .w
        .iter()
        .map(|&w| rotation_angle(w, polynomial.dealer_secret(), config.modulus))
        .collect::<Result<_, _>>()?;
    let encrypted = secrets
        .iter()
        .zip(&dealer_gammas)
        .map(|(s, &g)| {
            let mut e = s.clone();
            e.apply(Gate::Rx(g), 0).expect("single qubit");
            e
        })
        .collect();
    Ok(SplitOutput { polynomial, shares, encrypted, dealer_gammas })
}

/// `CZ|+⟩|+⟩`, the two-particle cluster state.
pub fn two_particle_cluster() -> StateVector {
    let mut pair = StateVector::plus().tensor(&StateVector::plus()).expect("two qubits");
    pair.apply_cz(0, 1).expect("distinct qubits");
    pair
}

/// User-side half of the teleport: measure qubit 0 of the pair in the
/// rotated basis, then the partner gets `Z^m`. Forced-outcome variant.
pub fn steer_forced(pair: StateVector, delta: RationalAngle, bit: u8) -> Result<(f64, StateVector), StateError> {
    let (p, mut partner) = pair.project_and_discard(0, Basis::Rotated(delta), bit)?;
    if bit == 1 {
        partner.apply(Gate::Z, 0)?;
    }
    Ok((p, partner))
}

/// Reconstructor sends one particle of a fresh cluster pair to the user over
/// the decoy channel; the user measures it in `{|0_{−δ}⟩, |1_{−δ}⟩}` and
/// publishes the bit; the reconstructor applies `Z^m` to its half, leaving
/// `|+_δ⟩`.
pub fn teleport_delta<R: Rng + ?Sized>(
    delta: RationalAngle,
    channel: &ChannelConfig,
    adversary: &AdversaryModel,
    rng: &mut R,
) -> Result<(u8, StateVector), DecoyVerdict> {
    let sent = Particle { register: two_particle_cluster(), qubit: 0 };
    let mut delivered = transfer(vec![sent], channel, adversary, rng)?;
    let particle = delivered.pop().expect("one payload particle");
    let (out, mut partner) =
        particle.register.measure_and_discard(particle.qubit, Basis::Rotated(delta), rng).expect("two-qubit register");
    if out.bit == 1 {
        partner.apply(Gate::Z, 0).expect("single qubit");
    }
    Ok((out.bit, partner))
}

/// `σ = (−1)^{m+1} δ + γ`.
pub fn user_sigma(m: u8, delta: RationalAngle, gamma: RationalAngle) -> RationalAngle {
    if m & 1 == 0 {
        gamma - delta
    } else {
        gamma + delta
    }
}

fn entangle(carrier: &StateVector, delta_state: &StateVector) -> Result<StateVector, StateError> {
    if carrier.num_qubits() != 1 || delta_state.num_qubits() != 1 {
        return Err(StateError::DimensionMismatch(carrier.num_qubits(), delta_state.num_qubits()));
    }
    let mut joint = carrier.tensor(delta_state)?;
    joint.apply_cz(0, 1)?;
    Ok(joint)
}

/// `R_X(σ) H X^m` on the surviving qubit.
pub fn apply_correction(mut state: StateVector, m: u8, sigma: RationalAngle) -> Result<StateVector, StateError> {
    if m & 1 == 1 {
        state.apply(Gate::X, 0)?;
    }
    state.apply(Gate::H, 0)?;
    state.apply(Gate::Rx(sigma), 0)?;
    Ok(state)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrectionOutcome {
    pub bit: u8,
    pub sigma: RationalAngle,
    pub state: StateVector,
}

/// Entangle carrier with `|+_δ⟩`, measure the carrier in `{|+⟩, |−⟩}`, take
/// `σ` from the user and correct. The output equals `R_X(γ)·carrier` up to
/// global phase.
pub fn correction_step<R: Rng + ?Sized>(
    carrier: &StateVector,
    delta_state: &StateVector,
    delta: RationalAngle,
    gamma: RationalAngle,
    rng: &mut R,
) -> Result<CorrectionOutcome, StateError> {
    let (out, rest) = entangle(carrier, delta_state)?.measure_and_discard(0, Basis::PlusMinus, rng)?;
    let sigma = user_sigma(out.bit, delta, gamma);
    let state = apply_correction(rest, out.bit, sigma)?;
    Ok(CorrectionOutcome { bit: out.bit, sigma, state })
}

/// [`correction_step`] with the measurement outcome fixed to `m`. Returns the
/// branch probability alongside the result.
pub fn correction_step_forced(
    carrier: &StateVector,
    delta_state: &StateVector,
    delta: RationalAngle,
    gamma: RationalAngle,
    m: u8,
) -> Result<(f64, StateVector), StateError> {
    let (p, rest) = entangle(carrier, delta_state)?.project_and_discard(0, Basis::PlusMinus, m)?;
    Ok((p, apply_correction(rest, m, user_sigma(m, delta, gamma))?))
}

/// Last step: `R_X(γ_t)` by the reconstructor.
pub fn finalize(mut working: StateVector, gamma: RationalAngle) -> Result<StateVector, StateError> {
    working.apply(Gate::Rx(gamma), 0)?;
    Ok(working)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum AbortReason {
    ChannelAbort { link: String, errors: usize },
    MissingShare { index: usize },
    AngleSumMismatch { secret: usize, total: String },
    SigmaWithheld { participant: ParticipantId, secret: usize },
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbortReason::ChannelAbort { link, errors } => write!(f, "decoy check failed on {link} ({errors} errors)"),
            AbortReason::MissingShare { index } => write!(f, "participant #{index} holds no share"),
            AbortReason::AngleSumMismatch { secret, total } => {
                write!(f, "secret {secret}: angle sum {total} is not a whole number of turns")
            }
            AbortReason::SigmaWithheld { participant, secret } => {
                write!(f, "{participant} withheld the masked angle for secret {secret}")
            }
        }
    }
}

/// One line of the omniscient state trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub secret: usize,
    pub holder: ParticipantId,
    pub label: String,
    pub state: StateVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionReport {
    /// Per completed secret, against the original.
    pub fidelities: Vec<f64>,
    pub recovered: Vec<StateVector>,
    pub transcript: Transcript,
    pub abort: Option<AbortReason>,
    /// `r` with `γ_D + Σ γ_l = 2πr`, per checked secret.
    pub angle_turns: Vec<i64>,
    /// Dealer first, then the participating set in order.
    pub contexts: Vec<ParticipantContext>,
    pub polynomial: Option<DealerPolynomial>,
    pub trace: Vec<TraceStep>,
}

impl ReconstructionReport {
    pub fn aborted(&self) -> bool {
        self.abort.is_some()
    }

    pub fn min_fidelity(&self) -> Option<f64> {
        self.fidelities.iter().copied().reduce(f64::min)
    }

    /// Public summary written next to the transcript.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "fidelities": self.fidelities,
            "aborted": self.aborted(),
            "abort": self.abort,
            "abort_message": self.abort.as_ref().map(|a| a.to_string()),
            "angle_turns": self.angle_turns,
            "messages": self.transcript.len(),
        })
    }

    pub fn context(&self, id: &ParticipantId) -> Option<&ParticipantContext> {
        self.contexts.iter().find(|c| &c.id == id)
    }
}

fn dealer_id() -> ParticipantId {
    ParticipantId::new("Dealer")
}

fn draw_delta<R: Rng + ?Sized>(config: &SessionConfig, user: usize, secret: usize, rng: &mut R) -> RationalAngle {
    match &config.deltas {
        DeltaChoice::Fixed(table) => table[user][secret],
        DeltaChoice::Grid { .. } => {
            let den = config.delta_denominator();
            RationalAngle::new(rng.gen_range(1..den), den).expect("den ≥ 2")
        }
    }
}

struct Run {
    transcript: Transcript,
    report: ReconstructionReport,
}

impl Run {
    fn abort(mut self, actor: &ParticipantId, reason: AbortReason) -> ReconstructionReport {
        let errors = match &reason {
            AbortReason::ChannelAbort { errors, .. } => Some(*errors),
            _ => None,
        };
        self.transcript.push(Phase::Abort, actor, MessageBody::AbortNotice { reason: reason.to_string(), errors });
        self.report.abort = Some(reason);
        self.finish()
    }

    fn finish(mut self) -> ReconstructionReport {
        self.report.transcript = self.transcript;
        self.report
    }
}

/// Runs the dealer phase and then every secret in turn: all teleports for
/// secret `j`, the correction chain in participating order, and the final
/// rotation, before secret `j + 1` starts.
pub fn run_full_session<R: Rng + ?Sized>(plan: &SessionPlan, rng: &mut R) -> Result<ReconstructionReport, SessionError> {
    plan.validate()?;
    let config = &plan.config;
    let threats = &plan.threats;
    let honest = AdversaryModel::None;
    let dealer = dealer_id();
    let mut run = Run {
        transcript: Transcript::new(),
        report: ReconstructionReport {
            fidelities: Vec::new(),
            recovered: Vec::new(),
            transcript: Transcript::new(),
            abort: None,
            angle_turns: Vec::new(),
            contexts: Vec::new(),
            polynomial: None,
            trace: Vec::new(),
        },
    };

    let split = split_phase(config, &plan.secrets, rng)?;
    for (j, &w) in config.w.iter().enumerate() {
        run.transcript.push(Phase::Split, &dealer, MessageBody::WAnnounce { secret: j, w });
    }
    run.report.polynomial = Some(split.polynomial.clone());
    run.report.contexts.push(ParticipantContext {
        id: dealer.clone(),
        role: Role::Dealer,
        share: None,
        weight: None,
        gammas: split.dealer_gammas.clone(),
        deltas: Vec::new(),
    });

    let mut records = Vec::with_capacity(config.t);
    for &idx in &plan.participating {
        match split.shares.get(idx) {
            Some(r) => records.push(r.clone()),
            None => return Ok(run.abort(&dealer, AbortReason::MissingShare { index: idx })),
        }
    }
    let mut weights = lagrange_weights(&records, config.modulus).map_err(ConfigError::from)?;
    if let Some(target) = &threats.corrupt_weight {
        for w in weights.iter_mut().filter(|w| &w.participant == target) {
            w.c = config.modulus.add(w.c, config.modulus.reduce(1));
        }
    }
    let users = config.t - 1;
    let reconstructor = records[users].participant.clone();
    for (k, (rec, weight)) in records.iter().zip(&weights).enumerate() {
        let gammas = config
            .w
            .iter()
            .map(|&w| rotation_angle(w, weight.c, config.modulus))
            .collect::<Result<_, _>>()
            .map_err(ConfigError::from)?;
        run.report.contexts.push(ParticipantContext {
            id: rec.participant.clone(),
            role: if k == users { Role::Reconstructor } else { Role::User },
            share: Some(rec.clone()),
            weight: Some(weight.clone()),
            gammas,
            deltas: Vec::new(),
        });
    }

    let payload = split.encrypted.iter().cloned().map(Particle::single).collect();
    let received = match transfer(payload, &config.channel, threats.dealer_link.as_ref().unwrap_or(&honest), rng) {
        Ok(p) => p,
        Err(v) => {
            let reason = AbortReason::ChannelAbort { link: format!("Dealer->{reconstructor}"), errors: v.errors() };
            return Ok(run.abort(&dealer, reason));
        }
    };
    let encrypted: Vec<StateVector> = received.into_iter().map(|p| p.register).collect();

    for (j, secret) in plan.secrets.iter().enumerate() {
        let gamma_d = split.dealer_gammas[j];
        let user_gammas: Vec<RationalAngle> = run.report.contexts[1..].iter().map(|c| c.gammas[j]).collect();
        match check_angle_sum(gamma_d, &user_gammas) {
            Ok(r) => run.report.angle_turns.push(r),
            Err(_) => {
                let total = gamma_d + user_gammas.iter().copied().sum::<RationalAngle>();
                let reason = AbortReason::AngleSumMismatch { secret: j, total: total.to_string() };
                return Ok(run.abort(&reconstructor, reason));
            }
        }

        let mut carrier = encrypted[j].clone();
        let mut applied = gamma_d;
        run.report.trace.push(TraceStep {
            secret: j,
            holder: reconstructor.clone(),
            label: format!("R_X({applied})|ψ{}⟩", j + 1),
            state: carrier.clone(),
        });

        let mut delta_states = Vec::with_capacity(users);
        for (u, record) in records.iter().enumerate().take(users) {
            let delta = draw_delta(config, u, j, rng);
            run.report.contexts[1 + u].deltas.push(delta);
            let user = record.participant.clone();
            let link = threats.teleport_link.as_ref().unwrap_or(&honest);
            match teleport_delta(delta, &config.channel, link, rng) {
                Ok((bit, state)) => {
                    run.transcript.push(Phase::Teleport, &user, MessageBody::MeasurementBit { secret: j, bit });
                    run.report.trace.push(TraceStep {
                        secret: j,
                        holder: reconstructor.clone(),
                        label: format!("|+_({delta})⟩ from {user}"),
                        state: state.clone(),
                    });
                    delta_states.push(state);
                }
                Err(v) => {
                    let reason = AbortReason::ChannelAbort { link: format!("{reconstructor}->{user}"), errors: v.errors() };
                    return Ok(run.abort(&reconstructor, reason));
                }
            }
        }

        for (u, delta_state) in delta_states.iter().enumerate() {
            let ctx = &run.report.contexts[1 + u];
            let (user, delta, gamma) = (ctx.id.clone(), ctx.deltas[j], ctx.gammas[j]);
            let (out, rest) = entangle(&carrier, delta_state)?.measure_and_discard(0, Basis::PlusMinus, rng)?;
            let published = threats.forged_bits.map_or(out.bit, |f| f.apply(out.bit));
            run.transcript.push(Phase::Correct, &reconstructor, MessageBody::MeasurementBit { secret: j, bit: published });
            if threats.withhold_sigma.as_ref() == Some(&user) {
                return Ok(run.abort(&reconstructor, AbortReason::SigmaWithheld { participant: user, secret: j }));
            }
            let sigma = user_sigma(published, delta, gamma);
            run.transcript.push(Phase::Correct, &user, MessageBody::SigmaAngle { secret: j, angle: sigma });
            carrier = apply_correction(rest, out.bit, sigma)?;
            applied = applied + gamma;
            run.report.trace.push(TraceStep {
                secret: j,
                holder: reconstructor.clone(),
                label: format!("R_X({applied})|ψ{}⟩", j + 1),
                state: carrier.clone(),
            });
        }

        let gamma_t = run.report.contexts[config.t].gammas[j];
        carrier = finalize(carrier, gamma_t)?;
        applied = applied + gamma_t;
        run.transcript.push(Phase::Finalize, &reconstructor, MessageBody::SecretRecovered { secret: j });
        run.report.trace.push(TraceStep {
            secret: j,
            holder: reconstructor.clone(),
            label: format!("R_X({applied})|ψ{}⟩", j + 1),
            state: carrier.clone(),
        });
        run.report.fidelities.push(fidelity_up_to_phase(&carrier, secret)?);
        run.report.recovered.push(carrier);
    }
    Ok(run.finish())
}

/// [`run_full_session`] driven by `ChaCha8Rng::seed_from_u64(config.seed)`.
pub fn run_seeded(plan: &SessionPlan) -> Result<ReconstructionReport, SessionError> {
    run_full_session(plan, &mut ChaCha8Rng::seed_from_u64(plan.config.seed))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplayOutcome {
    Match,
    /// First sequence number whose message differs, or where one side ends.
    Diverged { seq: u64 },
}

impl ReplayOutcome {
    pub fn matched(self) -> bool {
        self == ReplayOutcome::Match
    }
}

/// Re-executes the plan from its seed and compares message by message.
pub fn replay_transcript(plan: &SessionPlan, transcript: &Transcript) -> Result<ReplayOutcome, SessionError> {
    let fresh = run_seeded(plan)?.transcript;
    let (a, b) = (fresh.messages(), transcript.messages());
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return Ok(ReplayOutcome::Diverged { seq: y.seq.min(x.seq) });
        }
    }
    Ok(match a.len().cmp(&b.len()) {
        std::cmp::Ordering::Equal => ReplayOutcome::Match,
        std::cmp::Ordering::Less => ReplayOutcome::Diverged { seq: b[a.len()].seq },
        std::cmp::Ordering::Greater => ReplayOutcome::Diverged { seq: a[b.len()].seq },
    })
}
