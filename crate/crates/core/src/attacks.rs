//! Internal attacks: a reconstructor that forges measurement results, and
//! coalitions of participants pooling what they know.

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::angle::RationalAngle;
use crate::channel::{binomial_z, AdversaryModel};
use crate::exec;
use crate::field::{FieldElement, ParticipantId};
use crate::protocol::engine::{run_full_session, ReconstructionReport, Role, SessionError};
use crate::protocol::privacy::scan_transcript_privacy;
use crate::protocol::session::{DealerChoice, DeltaChoice, ForgedBits, SessionPlan};
use crate::protocol::transcript::{MessageBody, Phase};

/// Published `σ'` values seen by a reconstructor that forged the bits.
#[derive(Clone, Debug, PartialEq)]
pub struct FakeResultView {
    /// `(user, secret, forged bit, σ')` in publication order.
    pub sigmas: Vec<(ParticipantId, usize, u8, RationalAngle)>,
    /// Fidelities the forger ends up with; forging also ruins recovery.
    pub fidelities: Vec<f64>,
}

/// Runs the plan with the reconstructor publishing forged correction bits.
pub fn fake_result_attack<R: Rng + ?Sized>(
    plan: &SessionPlan,
    forged: ForgedBits,
    rng: &mut R,
) -> Result<FakeResultView, SessionError> {
    let mut plan = plan.clone();
    plan.threats.forged_bits = Some(forged);
    Ok(fake_result_view_from(&run_full_session(&plan, rng)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquaredTest {
    pub statistic: f64,
    pub df: usize,
    pub critical: f64,
    pub p_value: f64,
    pub alpha: f64,
}

impl ChiSquaredTest {
    pub fn rejected(&self) -> bool {
        self.statistic > self.critical
    }
}

/// Pearson test of angles (mod 2π) against the uniform law on `bins` equal arcs.
pub fn chi_squared_uniform(angles: &[RationalAngle], bins: usize, alpha: f64) -> ChiSquaredTest {
    assert!(bins >= 2 && !angles.is_empty());
    let mut counts = vec![0usize; bins];
    for a in angles {
        let r = a.rem_turn();
        let idx = (r.numerator() as i128 * bins as i128 / r.denominator() as i128) as usize;
        counts[idx.min(bins - 1)] += 1;
    }
    let expected = angles.len() as f64 / bins as f64;
    let statistic = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let df = bins - 1;
    let dist = ChiSquared::new(df as f64).expect("df > 0");
    ChiSquaredTest { statistic, df, critical: dist.inverse_cdf(1.0 - alpha), p_value: dist.sf(statistic), alpha }
}

/// Exact law of `σ·den mod den` when `δ` runs once over every point
/// `k/den`, `k ∈ [0, den)`. `None` when `γ` is off the grid, in which case
/// `σ` lands on a shifted coset of it.
pub fn sigma_grid_counts(gamma: RationalAngle, m: u8, den: i64) -> Option<Vec<u32>> {
    if den % gamma.denominator() != 0 {
        return None;
    }
    let g = (gamma.rem_turn().numerator() * (den / gamma.denominator())).rem_euclid(den);
    let sign = if m & 1 == 0 { -1 } else { 1 };
    let mut counts = vec![0u32; den as usize];
    for k in 0..den {
        counts[(g + sign * k).rem_euclid(den) as usize] += 1;
    }
    Some(counts)
}

/// What the forger believes about each user's `δ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaSupport {
    /// Nonzero multiples of `1/den` turn.
    Grid(i64),
    /// `δ = 0` always.
    Zero,
}

/// Weights `c ∈ [1, q−1]` consistent with one observed `σ'`, given public
/// `w`, `q` and the forged bit.
pub fn consistent_weights(sigma: RationalAngle, forged_bit: u8, w: u64, q: u64, support: DeltaSupport) -> Vec<u64> {
    (1..q)
        .filter(|&c| {
            let gamma = RationalAngle::new((w * c) as i64, q as i64).expect("q > 0");
            let diff = sigma - gamma;
            let delta = if forged_bit & 1 == 0 { -diff } else { diff }.rem_turn();
            match support {
                DeltaSupport::Zero => delta.is_zero(),
                DeltaSupport::Grid(den) => den % delta.denominator() == 0 && !delta.is_zero(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GuessCampaign {
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    /// `1/(q−1)`.
    pub expected: f64,
    pub z_score: f64,
    /// Mean size of the consistent candidate set.
    pub mean_candidates: f64,
}

/// Plan used by the forgery campaigns: the (3, 4) layout over GF(7) with a
/// fresh dealer polynomial per trial and `δ` on the given grid.
pub fn forgery_plan(seed: u64, delta: DeltaChoice) -> SessionPlan {
    let mut plan = SessionPlan::demo(seed);
    plan.config.dealer = DealerChoice::Random;
    plan.config.deltas = delta;
    plan
}

/// Forger guesses the first user's weight from one `σ'` per session,
/// uniformly among consistent candidates.
pub fn guess_weight_campaign(trials: usize, seed: u64, delta: DeltaChoice) -> GuessCampaign {
    let outcomes = exec::map_trials(trials, seed, |i, rng| {
        let plan = forgery_plan(i as u64, delta.clone());
        let q = plan.config.modulus.q();
        let support = match &plan.config.deltas {
            DeltaChoice::Grid { .. } => DeltaSupport::Grid(plan.config.delta_denominator()),
            DeltaChoice::Fixed(_) => DeltaSupport::Zero,
        };
        let forged = ForgedBits::Constant(rng.gen_range(0..2));
        let mut forging = plan.clone();
        forging.threats.forged_bits = Some(forged);
        let view = run_full_session(&forging, rng).expect("valid plan");
        let target = view.contexts.iter().find(|c| c.role == Role::User).expect("t ≥ 2");
        let truth = target.weight.as_ref().expect("user weight").c.value();
        let attack = fake_result_view_from(&view);
        let &(_, _, bit, sigma) = attack.sigmas.iter().find(|s| s.0 == target.id && s.1 == 0).expect("σ published");
        let candidates = consistent_weights(sigma, bit, plan.config.w[0], q, support);
        let guess = candidates[rng.gen_range(0..candidates.len())];
        (guess == truth, candidates.len())
    });
    let successes = outcomes.iter().filter(|o| o.0).count();
    let q = forgery_plan(0, delta).config.modulus.q();
    let expected = 1.0 / (q - 1) as f64;
    GuessCampaign {
        trials,
        successes,
        rate: successes as f64 / trials as f64,
        expected,
        z_score: binomial_z(successes, trials, expected),
        mean_candidates: outcomes.iter().map(|o| o.1 as f64).sum::<f64>() / trials as f64,
    }
}

fn fake_result_view_from(report: &ReconstructionReport) -> FakeResultView {
    let mut sigmas = Vec::new();
    let mut pending = None;
    for msg in report.transcript.messages() {
        match msg.body {
            MessageBody::MeasurementBit { bit, .. } if msg.phase == Phase::Correct => pending = Some(bit),
            MessageBody::SigmaAngle { secret, angle } => {
                sigmas.push((msg.actor.clone(), secret, pending.take().expect("bit first"), angle))
            }
            _ => {}
        }
    }
    FakeResultView { sigmas, fidelities: report.fidelities.clone() }
}

/// `σ'` samples per user, one per forged session, for secret 0.
pub fn collect_forged_sigmas(trials: usize, seed: u64) -> Vec<(ParticipantId, Vec<RationalAngle>)> {
    let views = exec::map_trials(trials, seed, |i, rng| {
        let plan = forgery_plan(i as u64, DeltaChoice::Grid { den: None });
        fake_result_attack(&plan, ForgedBits::Constant(rng.gen_range(0..2)), rng).expect("valid plan")
    });
    let users: BTreeSet<ParticipantId> = views[0].sigmas.iter().map(|s| s.0.clone()).collect();
    users
        .into_iter()
        .map(|u| {
            let samples = views
                .iter()
                .flat_map(|v| v.sigmas.iter().filter(|s| s.0 == u && s.1 == 0).map(|s| s.3))
                .collect();
            (u, samples)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "value")]
pub enum ViewValue {
    Field(u64),
    Angle(RationalAngle),
    Bit(u8),
}

/// One datum available to the coalition, tagged with who it came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ViewItem {
    pub source: ParticipantId,
    /// Secret index the datum belongs to, when it belongs to one.
    pub secret: Option<usize>,
    pub label: String,
    pub value: ViewValue,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollusionReport {
    pub colluders: Vec<ParticipantId>,
    pub honest: Vec<ParticipantId>,
    pub view: Vec<ViewItem>,
    /// Descriptions of any honest-party private value found in the view.
    pub leaks: Vec<String>,
    pub transcript_clean: bool,
    pub fidelities: Vec<f64>,
}

impl CollusionReport {
    pub fn private_to_honest_absent(&self) -> bool {
        self.leaks.is_empty()
    }
}

/// Runs an honest session and assembles what the coalition jointly holds:
/// the public transcript plus every colluder's own share, weight, `γ` and
/// `δ`. Then checks that nothing private to an honest participant is in it.
pub fn collusion_scenario<R: Rng + ?Sized>(
    plan: &SessionPlan,
    colluders: &[ParticipantId],
    rng: &mut R,
) -> Result<CollusionReport, SessionError> {
    let report = run_full_session(plan, rng)?;
    let mut view = Vec::new();
    for msg in report.transcript.messages() {
        let value = match msg.body {
            MessageBody::WAnnounce { w, .. } => ViewValue::Field(w),
            MessageBody::MeasurementBit { bit, .. } => ViewValue::Bit(bit),
            MessageBody::SigmaAngle { angle, .. } => ViewValue::Angle(angle),
            _ => continue,
        };
        view.push(ViewItem {
            source: msg.actor.clone(),
            secret: msg.body.secret(),
            label: format!("published #{}", msg.seq),
            value,
        });
    }
    let field = |v: FieldElement| ViewValue::Field(v.value());
    for ctx in report.contexts.iter().filter(|c| colluders.contains(&c.id)) {
        let own = |label: &str, secret, value| ViewItem { source: ctx.id.clone(), secret, label: label.to_string(), value };
        if let Some(s) = &ctx.share {
            view.push(own("share", None, field(s.share)));
        }
        if let Some(w) = &ctx.weight {
            view.push(own("weight", None, field(w.c)));
        }
        view.extend(ctx.gammas.iter().enumerate().map(|(j, &g)| own("gamma", Some(j), ViewValue::Angle(g))));
        view.extend(ctx.deltas.iter().enumerate().map(|(j, &d)| own("delta", Some(j), ViewValue::Angle(d))));
    }

    let honest: Vec<ParticipantId> = report
        .contexts
        .iter()
        .filter(|c| c.role != Role::Dealer && !colluders.contains(&c.id))
        .map(|c| c.id.clone())
        .collect();
    let mut leaks = Vec::new();
    for ctx in report.contexts.iter().filter(|c| honest.contains(&c.id)) {
        for item in view.iter().filter(|i| i.source == ctx.id && !i.label.starts_with("published")) {
            leaks.push(format!("{} of {} in coalition view", item.label, ctx.id));
        }
        for item in view.iter().filter(|i| i.label.starts_with("published")) {
            if let (&ViewValue::Angle(a), Some(j)) = (&item.value, item.secret) {
                let a = a.rem_turn();
                if ctx.deltas.get(j).into_iter().chain(ctx.gammas.get(j)).any(|p| p.rem_turn() == a) {
                    leaks.push(format!("{} equals a private angle of {}", item.label, ctx.id));
                }
            }
        }
    }
    let transcript_clean = scan_transcript_privacy(&report.transcript, &report, &plan.config.w).clean();
    Ok(CollusionReport {
        colluders: colluders.to_vec(),
        honest,
        view,
        leaks,
        transcript_clean,
        fidelities: report.fidelities,
    })
}

/// Participating users other than the reconstructor.
pub fn all_but_reconstructor(plan: &SessionPlan) -> Vec<ParticipantId> {
    let names = &plan.config.names;
    plan.participating[..plan.participating.len() - 1].iter().map(|&i| names[i].clone()).collect()
}

/// The reconstructor together with every participating user except the one
/// at position `honest` in the participating set.
pub fn reconstructor_and_all_but(plan: &SessionPlan, honest: usize) -> Vec<ParticipantId> {
    let names = &plan.config.names;
    plan.participating
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != honest)
        .map(|(_, &i)| names[i].clone())
        .collect()
}

/// Colluders measuring what passes through a link are modelled as an
/// intercept-resend adversary on it.
pub fn colluding_interceptor(colluders: &[ParticipantId]) -> AdversaryModel {
    AdversaryModel::ColludingUsers(colluders.to_vec())
}
