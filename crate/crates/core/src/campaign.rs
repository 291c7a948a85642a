//! Monte Carlo attack campaigns and their report format.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::attacks::{
    all_but_reconstructor, chi_squared_uniform, collect_forged_sigmas, collusion_scenario, colluding_interceptor,
    guess_weight_campaign, reconstructor_and_all_but,
};
use crate::channel::{binomial_z, estimate_detection_probability, ChannelConfig};
use crate::exec;
use crate::protocol::engine::run_full_session;
use crate::protocol::session::{DealerChoice, DeltaChoice, SessionPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    InterceptResend,
    FakeResults,
    CollusionNoReconstructor,
    CollusionWithReconstructor,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::InterceptResend,
        Scenario::FakeResults,
        Scenario::CollusionNoReconstructor,
        Scenario::CollusionWithReconstructor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::InterceptResend => "intercept_resend",
            Scenario::FakeResults => "fake_results",
            Scenario::CollusionNoReconstructor => "collusion_no_reconstructor",
            Scenario::CollusionWithReconstructor => "collusion_with_reconstructor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown scenario `{0}` (expected intercept_resend, fake_results, collusion_no_reconstructor or collusion_with_reconstructor)")]
pub struct UnknownScenario(pub String);

impl FromStr for Scenario {
    type Err = UnknownScenario;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| UnknownScenario(s.to_string()))
    }
}

/// One row of a campaign report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignRow {
    pub scenario: Scenario,
    /// What `observed` and `expected` measure.
    pub metric: &'static str,
    pub trials: usize,
    pub passes: usize,
    pub aborts: usize,
    pub observed: f64,
    pub expected: f64,
    pub z_score: f64,
    /// Sessions whose transcript and coalition view passed the privacy scan.
    pub privacy_clean: Option<usize>,
    /// Chi-squared statistic and critical value for `σ'` uniformity.
    pub chi_squared: Option<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CampaignReport {
    pub seed: u64,
    pub d1: usize,
    pub d2: usize,
    pub rows: Vec<CampaignRow>,
}

impl CampaignReport {
    pub fn to_table(&self) -> String {
        let mut out = format!("# seed {}  decoys d1={} d2={}\n", self.seed, self.d1, self.d2);
        writeln!(
            out,
            "{:<30} {:<14} {:>7} {:>7} {:>7} {:>9} {:>9} {:>8} {:>8}",
            "scenario", "metric", "trials", "pass", "abort", "observed", "expected", "z", "private"
        )
        .unwrap();
        for r in &self.rows {
            let private = r.privacy_clean.map_or("-".to_string(), |c| format!("{c}/{}", r.trials));
            writeln!(
                out,
                "{:<30} {:<14} {:>7} {:>7} {:>7} {:>9.5} {:>9.5} {:>8.3} {:>8}",
                r.scenario.name(),
                r.metric,
                r.trials,
                r.passes,
                r.aborts,
                r.observed,
                r.expected,
                r.z_score,
                private
            )
            .unwrap();
            if let Some((stat, crit)) = r.chi_squared {
                writeln!(out, "  sigma uniformity chi2 = {stat:.2} (critical {crit:.2} at alpha 0.01, 36 bins)").unwrap();
            }
        }
        out
    }

    pub fn to_jsonl(&self) -> String {
        self.rows.iter().map(|r| serde_json::to_string(r).expect("rows serialize") + "\n").collect()
    }
}

/// The (3, 4) layout over GF(7) with a fresh dealer and fresh `δ` per trial.
fn campaign_plan(seed: u64, channel: ChannelConfig) -> SessionPlan {
    let mut plan = SessionPlan::demo(seed);
    plan.config.dealer = DealerChoice::Random;
    plan.config.deltas = DeltaChoice::Grid { den: None };
    plan.config.channel = channel;
    plan
}

fn intercept_resend(trials: usize, seed: u64, channel: ChannelConfig) -> CampaignRow {
    let est = estimate_detection_probability(&channel, trials, seed);
    CampaignRow {
        scenario: Scenario::InterceptResend,
        metric: "pass_rate",
        trials,
        passes: est.passes,
        aborts: trials - est.passes,
        observed: est.rate,
        expected: est.expected,
        z_score: est.z_score,
        privacy_clean: None,
        chi_squared: None,
    }
}

fn fake_results(trials: usize, seed: u64) -> CampaignRow {
    let guess = guess_weight_campaign(trials, seed, DeltaChoice::Grid { den: None });
    let chi = collect_forged_sigmas(trials, seed ^ 0x5eed)
        .iter()
        .map(|(_, s)| chi_squared_uniform(s, 36, 0.01))
        .max_by(|a, b| a.statistic.total_cmp(&b.statistic))
        .expect("at least one user");
    CampaignRow {
        scenario: Scenario::FakeResults,
        metric: "guess_rate",
        trials,
        passes: trials,
        aborts: 0,
        observed: guess.rate,
        expected: guess.expected,
        z_score: guess.z_score,
        privacy_clean: None,
        chi_squared: Some((chi.statistic, chi.critical)),
    }
}

/// Each trial runs the coalition's honest-channel view through the privacy
/// checks, then a second session in which the coalition intercepts the
/// link it can reach.
fn collusion(scenario: Scenario, trials: usize, seed: u64, channel: ChannelConfig) -> CampaignRow {
    let with_reconstructor = scenario == Scenario::CollusionWithReconstructor;
    let outcomes = exec::map_trials(trials, seed, |i, rng| {
        let plan = campaign_plan(i as u64, channel);
        let colluders =
            if with_reconstructor { reconstructor_and_all_but(&plan, 1) } else { all_but_reconstructor(&plan) };
        let view = collusion_scenario(&plan, &colluders, rng).expect("valid plan");
        let clean = view.private_to_honest_absent() && view.transcript_clean;
        let mut attacked = plan.clone();
        if with_reconstructor {
            attacked.threats.teleport_link = Some(colluding_interceptor(&colluders));
        } else {
            attacked.threats.dealer_link = Some(colluding_interceptor(&colluders));
        }
        let passed = !run_full_session(&attacked, rng).expect("valid plan").aborted();
        (clean, passed)
    });
    let passes = outcomes.iter().filter(|o| o.1).count();
    let per_transfer = channel.intercept_pass_probability();
    // with the reconstructor inside, every teleport of the (3, 4) layout is exposed: 2 users × 2 secrets
    let expected = if with_reconstructor { per_transfer.powi(4) } else { per_transfer };
    CampaignRow {
        scenario,
        metric: "pass_rate",
        trials,
        passes,
        aborts: trials - passes,
        observed: passes as f64 / trials as f64,
        expected,
        z_score: binomial_z(passes, trials, expected),
        privacy_clean: Some(outcomes.iter().filter(|o| o.0).count()),
        chi_squared: None,
    }
}

pub fn run_scenario(scenario: Scenario, trials: usize, seed: u64, channel: ChannelConfig) -> CampaignRow {
    assert!(trials >= 1, "a campaign needs at least one trial");
    match scenario {
        Scenario::InterceptResend => intercept_resend(trials, seed, channel),
        Scenario::FakeResults => fake_results(trials, seed),
        Scenario::CollusionNoReconstructor | Scenario::CollusionWithReconstructor => {
            collusion(scenario, trials, seed, channel)
        }
    }
}

pub fn run_campaign(scenarios: &[Scenario], trials: usize, seed: u64, channel: ChannelConfig) -> CampaignReport {
    CampaignReport {
        seed,
        d1: channel.d1,
        d2: channel.d2,
        rows: scenarios.iter().map(|&s| run_scenario(s, trials, seed, channel)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("tap_the_wire".parse::<Scenario>().is_err());
    }

    #[test]
    fn small_campaign_report() {
        let report = run_campaign(&Scenario::ALL, 400, 2, ChannelConfig::new(1, 1));
        assert_eq!(report.rows.len(), 4);
        for row in &report.rows {
            assert!(row.z_score.abs() < 4.0, "{row:?}");
            assert_eq!(row.passes + row.aborts, row.trials);
            if let Some(clean) = row.privacy_clean {
                assert_eq!(clean, row.trials);
            }
        }
        let (stat, crit) = report.rows[1].chi_squared.unwrap();
        assert!(stat < crit);
        let table = report.to_table();
        assert!(table.contains("collusion_with_reconstructor"));
        assert_eq!(report.to_jsonl().lines().count(), 4);
        let first: serde_json::Value = serde_json::from_str(report.to_jsonl().lines().next().unwrap()).unwrap();
        assert_eq!(first["scenario"], "intercept_resend");
    }
}
