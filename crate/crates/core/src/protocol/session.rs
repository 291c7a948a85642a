//! Public session parameters and the JSON config file that describes them.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::RationalAngle;
use crate::channel::{AdversaryModel, ChannelConfig};
use crate::error::ConfigError;
use crate::field::{FieldElement, ParticipantId, PrimeModulus};
use crate::statevector::StateVector;

/// `δ` grid numerators are drawn from `1..DELTA_GRID_BASE·q`; the grid
/// denominator is a multiple of `q` so that `γ = w·c/q` shifts it onto itself.
pub const DELTA_GRID_BASE: i64 = 360_000;

/// How the dealer picks `s_D` and `a_1..a_{t-1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DealerChoice {
    /// Uniform draws from the session RNG; `s_D ≠ 0` and redrawn until no
    /// share is zero.
    Random,
    Fixed { dealer_secret: FieldElement, high_coeffs: Vec<FieldElement> },
}

/// Where each user's `δ` comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeltaChoice {
    /// Uniform nonzero numerator over `1..den`, `den = DELTA_GRID_BASE·q` unless overridden.
    Grid { den: Option<i64> },
    /// `angles[u][j]` for the `u`-th non-reconstructor participant and secret `j`.
    Fixed(Vec<Vec<RationalAngle>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionConfig {
    pub modulus: PrimeModulus,
    pub t: usize,
    pub n: usize,
    pub names: Vec<ParticipantId>,
    pub x: Vec<FieldElement>,
    /// Public `w_j`, one per secret.
    pub w: Vec<u64>,
    pub seed: u64,
    pub channel: ChannelConfig,
    pub dealer: DealerChoice,
    pub deltas: DeltaChoice,
}

impl SessionConfig {
    /// Defaults: `x_i = i`, names `P1..Pn`, random dealer and `δ`, 4+4 decoys.
    pub fn new(q: u64, t: usize, n: usize, w: Vec<u64>) -> Result<Self, ConfigError> {
        let modulus = PrimeModulus::new(q)?;
        let x = (1..=n as u64).map(|i| modulus.reduce(i as i64)).collect();
        let names = (1..=n).map(|i| ParticipantId(format!("P{i}"))).collect();
        let cfg = SessionConfig {
            modulus,
            t,
            n,
            names,
            x,
            w,
            seed: 0,
            channel: ChannelConfig::default(),
            dealer: DealerChoice::Random,
            deltas: DeltaChoice::Grid { den: None },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn secrets(&self) -> usize {
        self.w.len()
    }

    pub fn delta_denominator(&self) -> i64 {
        match self.deltas {
            DeltaChoice::Grid { den: Some(d) } => d,
            _ => DELTA_GRID_BASE * self.modulus.q() as i64,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let q = self.modulus.q();
        if self.t < 1 {
            return Err(ConfigError::invalid("t", "threshold must be at least 1"));
        }
        if self.n < self.t {
            return Err(ConfigError::invalid("n", format!("n = {} is below t = {}", self.n, self.t)));
        }
        if self.n as u64 >= q {
            return Err(ConfigError::invalid("q", format!("q = {q} must exceed n = {}", self.n)));
        }
        if self.x.len() != self.n {
            return Err(ConfigError::invalid("x", format!("expected {} abscissas, got {}", self.n, self.x.len())));
        }
        if self.names.len() != self.n {
            return Err(ConfigError::invalid("names", format!("expected {} names, got {}", self.n, self.names.len())));
        }
        let mut seen = HashSet::new();
        for x in &self.x {
            if x.value() == 0 || x.value() >= q {
                return Err(ConfigError::invalid("x", format!("abscissa {x} outside [1, {}]", q - 1)));
            }
            if !seen.insert(*x) {
                return Err(ConfigError::invalid("x", format!("duplicate abscissa {x}")));
            }
        }
        let mut names = HashSet::new();
        for name in &self.names {
            if name.0 == "Dealer" || !names.insert(name) {
                return Err(ConfigError::invalid("names", format!("name `{name}` is reserved or repeated")));
            }
        }
        if self.w.is_empty() {
            return Err(ConfigError::invalid("w", "need at least one secret"));
        }
        if let Some(&w) = self.w.iter().find(|&&w| w == 0 || w >= q) {
            return Err(ConfigError::invalid("w", format!("w = {w} outside [1, {}]", q - 1)));
        }
        if let DealerChoice::Fixed { dealer_secret, high_coeffs } = &self.dealer {
            if high_coeffs.len() + 1 != self.t {
                return Err(ConfigError::invalid(
                    "coefficients",
                    format!("expected {} higher coefficients, got {}", self.t - 1, high_coeffs.len()),
                ));
            }
            for v in std::iter::once(dealer_secret).chain(high_coeffs) {
                self.modulus.element(v.value())?;
            }
        }
        match &self.deltas {
            DeltaChoice::Fixed(angles) => {
                if angles.len() != self.t - 1 || angles.iter().any(|row| row.len() != self.w.len()) {
                    return Err(ConfigError::invalid(
                        "deltas",
                        format!("expected {} rows of {} angles", self.t - 1, self.w.len()),
                    ));
                }
            }
            DeltaChoice::Grid { den: Some(d) } if *d < 2 => {
                return Err(ConfigError::invalid("delta_den", "grid denominator must be at least 2"));
            }
            DeltaChoice::Grid { .. } => {}
        }
        Ok(())
    }
}

/// Deviations from honest behaviour injected into a session.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Threats {
    /// Acts on the dealer → reconstructor transfer.
    pub dealer_link: Option<AdversaryModel>,
    /// Acts on every reconstructor → user teleport transfer.
    pub teleport_link: Option<AdversaryModel>,
    /// Dishonest reconstructor: replaces every published correction bit.
    pub forged_bits: Option<ForgedBits>,
    /// This user never publishes `σ`.
    pub withhold_sigma: Option<ParticipantId>,
    /// This user's Lagrange weight is off by one.
    pub corrupt_weight: Option<ParticipantId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ForgedBits {
    /// Publish the complement of the true bit.
    Flip,
    /// Always publish this bit.
    Constant(u8),
}

impl ForgedBits {
    pub fn apply(self, true_bit: u8) -> u8 {
        match self {
            ForgedBits::Flip => true_bit ^ 1,
            ForgedBits::Constant(b) => b & 1,
        }
    }
}

/// Everything needed to run (and replay) one session.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionPlan {
    pub config: SessionConfig,
    pub secrets: Vec<StateVector>,
    /// Indices into the config's participants; the last one reconstructs.
    pub participating: Vec<usize>,
    pub threats: Threats,
}

impl SessionPlan {
    /// Honest plan in which the first `t` users take part.
    pub fn new(config: SessionConfig, secrets: Vec<StateVector>) -> Result<Self, ConfigError> {
        let participating = (0..config.t).collect();
        let plan = SessionPlan { config, secrets, participating, threats: Threats::default() };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.config.validate()?;
        if self.secrets.len() != self.config.secrets() {
            return Err(ConfigError::invalid(
                "secrets",
                format!("{} secrets for {} public w values", self.secrets.len(), self.config.secrets()),
            ));
        }
        for (i, s) in self.secrets.iter().enumerate() {
            if s.num_qubits() != 1 || (s.norm() - 1.0).abs() > 1e-9 {
                return Err(ConfigError::BadSecret { index: i });
            }
        }
        if self.participating.len() != self.config.t {
            return Err(ConfigError::invalid(
                "participants",
                format!("{} participants for threshold {}", self.participating.len(), self.config.t),
            ));
        }
        let distinct: HashSet<_> = self.participating.iter().collect();
        if distinct.len() != self.participating.len() {
            return Err(ConfigError::invalid("participants", "participant listed twice"));
        }
        Ok(())
    }

    pub fn reconstructor(&self) -> Option<&ParticipantId> {
        self.participating.last().and_then(|&i| self.config.names.get(i))
    }
}

impl SessionPlan {
    /// The (3, 4) example over GF(7): users Alice, Bob, Charlie, Felix at
    /// `x = 1, 3, 5, 6`, `f(x) = 3 + 2x + x²` (so `s_D = 4`), `w = (1, 2)`,
    /// secrets `1/2|0⟩ + √3/2|1⟩` and `|0⟩`, Charlie reconstructing.
    pub fn demo(seed: u64) -> Self {
        let modulus = PrimeModulus::new(7).expect("7 is prime");
        let el = |v| modulus.element(v).expect("reduced");
        let pi = |n| RationalAngle::from_pi_fraction(n, 7).expect("nonzero denominator");
        let config = SessionConfig {
            modulus,
            t: 3,
            n: 4,
            names: ["Alice", "Bob", "Charlie", "Felix"].into_iter().map(ParticipantId::new).collect(),
            x: [1, 3, 5, 6].into_iter().map(el).collect(),
            w: vec![1, 2],
            seed,
            channel: ChannelConfig::default(),
            dealer: DealerChoice::Fixed { dealer_secret: el(4), high_coeffs: vec![el(2), el(1)] },
            deltas: DeltaChoice::Fixed(vec![vec![pi(2), pi(1)], vec![pi(4), pi(3)]]),
        };
        let secrets = vec![
            StateVector::from_bloch(RationalAngle::new(1, 3).expect("valid"), RationalAngle::ZERO),
            StateVector::basis_state(0),
        ];
        SessionPlan::new(config, secrets).expect("demo parameters are valid")
    }

    /// Honest plan with `t ∈ [1, 5]`, `n ∈ [t, 8]`, prime `q ∈ [11, 101]`,
    /// `m ∈ [1, 4]`, random participating set and random secrets.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        const PRIMES: [u64; 22] = [11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101];
        let q = *PRIMES.choose(rng).expect("nonempty");
        let t = rng.gen_range(1..=5);
        let n = rng.gen_range(t..=8);
        let m = rng.gen_range(1..=4);
        let w = (0..m).map(|_| rng.gen_range(1..q)).collect();
        let mut config = SessionConfig::new(q, t, n, w).expect("ranges respect the invariants");
        config.seed = rng.gen();
        let modulus = config.modulus;
        let mut xs: Vec<u64> = (1..q).collect();
        xs.shuffle(rng);
        config.x = xs[..n].iter().map(|&v| modulus.element(v).expect("reduced")).collect();
        let secrets = (0..m).map(|_| random_secret(rng)).collect();
        let mut participating: Vec<usize> = (0..n).collect();
        participating.shuffle(rng);
        participating.truncate(t);
        let plan = SessionPlan { config, secrets, participating, threats: Threats::default() };
        plan.validate().expect("random plan is valid");
        plan
    }
}

/// Single-qubit state with Bloch angles on a fine rational grid.
pub fn random_secret<R: Rng + ?Sized>(rng: &mut R) -> StateVector {
    const GRID: i64 = 1 << 20;
    let theta = RationalAngle::new(rng.gen_range(0..GRID / 2), GRID).expect("nonzero denominator");
    let phi = RationalAngle::new(rng.gen_range(0..GRID), GRID).expect("nonzero denominator");
    StateVector::from_bloch(theta, phi)
}

/// Flat JSON session description.
///
/// Secrets are Bloch pairs `[theta_num, theta_den, phi_num, phi_den]`, each a
/// fraction of a full turn, giving `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub q: u64,
    pub t: usize,
    pub n: usize,
    #[serde(default)]
    pub x: Option<Vec<u64>>,
    #[serde(default)]
    pub names: Option<Vec<String>>,
    pub w: Vec<u64>,
    pub secrets: Vec<[i64; 4]>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_decoys")]
    pub d1: usize,
    #[serde(default = "default_decoys")]
    pub d2: usize,
    #[serde(default)]
    pub threshold: usize,
    /// Participating indices (0-based); the last reconstructs. Defaults to the first `t`.
    #[serde(default)]
    pub participants: Option<Vec<usize>>,
    #[serde(default)]
    pub dealer_secret: Option<u64>,
    #[serde(default)]
    pub coefficients: Option<Vec<u64>>,
    #[serde(default)]
    pub deltas: Option<Vec<Vec<RationalAngle>>>,
    #[serde(default)]
    pub delta_den: Option<i64>,
}

fn default_decoys() -> usize {
    4
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("syntax at line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigFileError> {
        serde_json::from_str(text).map_err(|e| ConfigFileError::Syntax {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })
    }

    pub fn into_plan(self) -> Result<SessionPlan, ConfigError> {
        let modulus = PrimeModulus::new(self.q)?;
        let mut config = SessionConfig {
            modulus,
            t: self.t,
            n: self.n,
            names: (1..=self.n).map(|i| ParticipantId(format!("P{i}"))).collect(),
            x: (1..=self.n as u64).map(|i| modulus.reduce(i as i64)).collect(),
            w: self.w,
            seed: self.seed,
            channel: ChannelConfig { d1: self.d1, d2: self.d2, abort_threshold: self.threshold },
            dealer: DealerChoice::Random,
            deltas: DeltaChoice::Grid { den: self.delta_den },
        };
        if let Some(x) = self.x {
            config.x = x
                .into_iter()
                .map(|v| modulus.element(v).map_err(|e| ConfigError::invalid("x", e.to_string())))
                .collect::<Result<_, _>>()?;
        }
        if let Some(names) = self.names {
            config.names = names.into_iter().map(ParticipantId).collect();
        }
        match (self.dealer_secret, self.coefficients) {
            (Some(s), coeffs) => {
                let el = |v: u64, field| modulus.element(v).map_err(|e| ConfigError::invalid(field, e.to_string()));
                config.dealer = DealerChoice::Fixed {
                    dealer_secret: el(s, "dealer_secret")?,
                    high_coeffs: coeffs
                        .unwrap_or_default()
                        .into_iter()
                        .map(|v| el(v, "coefficients"))
                        .collect::<Result<_, _>>()?,
                };
            }
            (None, Some(_)) => {
                return Err(ConfigError::invalid("coefficients", "given without dealer_secret"));
            }
            (None, None) => {}
        }
        if let Some(d) = self.deltas {
            config.deltas = DeltaChoice::Fixed(d);
        }
        let secrets = self
            .secrets
            .iter()
            .enumerate()
            .map(|(i, &[tn, td, pn, pd])| {
                let theta = RationalAngle::new(tn, td).map_err(|_| ConfigError::BadSecret { index: i })?;
                let phi = RationalAngle::new(pn, pd).map_err(|_| ConfigError::BadSecret { index: i })?;
                Ok(StateVector::from_bloch(theta, phi))
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let participating = self.participants.unwrap_or_else(|| (0..config.t).collect());
        if let Some(&bad) = participating.iter().find(|&&i| i >= config.n) {
            return Err(ConfigError::invalid("participants", format!("index {bad} has no share (n = {})", config.n)));
        }
        let plan = SessionPlan { config, secrets, participating, threats: Threats::default() };
        plan.validate()?;
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::FieldError;

    const DEMO: &str = r#"{
        "q": 7, "t": 3, "n": 4, "x": [1, 3, 5, 6],
        "names": ["Alice", "Bob", "Charlie", "Felix"],
        "w": [1, 2], "secrets": [[1, 3, 0, 1], [0, 1, 0, 1]],
        "seed": 0, "d1": 4, "d2": 4, "threshold": 0,
        "dealer_secret": 4, "coefficients": [2, 1]
    }"#;

    #[test]
    fn parses_demo_config() {
        let plan = ConfigFile::parse(DEMO).unwrap().into_plan().unwrap();
        assert_eq!(plan.config.t, 3);
        assert_eq!(plan.participating, vec![0, 1, 2]);
        assert_eq!(plan.reconstructor().unwrap().0, "Charlie");
        let amps = plan.secrets[0].amplitudes();
        assert!((amps[0].re - 0.5).abs() < 1e-15 && (amps[1].re - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configs_with_attribution() {
        let non_prime = DEMO.replace("\"q\": 7", "\"q\": 6");
        let err = ConfigFile::parse(&non_prime).unwrap().into_plan().unwrap_err();
        assert_eq!(err, ConfigError::Field(FieldError::NotPrime { q: 6, factor: 2 }));
        assert_eq!(err.to_string(), "modulus not prime: 6 has factor 2");

        let dup = DEMO.replace("[1, 3, 5, 6]", "[1, 3, 3, 6]");
        assert!(matches!(ConfigFile::parse(&dup).unwrap().into_plan(), Err(ConfigError::Invalid { field: "x", .. })));

        let bad_w = DEMO.replace("\"w\": [1, 2]", "\"w\": [1, 7]");
        assert!(matches!(ConfigFile::parse(&bad_w).unwrap().into_plan(), Err(ConfigError::Invalid { field: "w", .. })));

        let small_q = r#"{"q": 3, "t": 2, "n": 4, "w": [1], "secrets": [[0, 1, 0, 1]]}"#;
        assert!(matches!(ConfigFile::parse(small_q).unwrap().into_plan(), Err(ConfigError::Invalid { field: "q", .. })));

        let t_gt_n = DEMO.replace("\"t\": 3", "\"t\": 5");
        assert!(ConfigFile::parse(&t_gt_n).unwrap().into_plan().is_err());

        let syntax = DEMO.replace("\"n\": 4,", "\"n\": 4");
        match ConfigFile::parse(&syntax) {
            Err(ConfigFileError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }

        let unknown = DEMO.replace("\"seed\"", "\"sed\"");
        assert!(matches!(ConfigFile::parse(&unknown), Err(ConfigFileError::Syntax { .. })));
    }

    #[test]
    fn session_config_defaults() {
        let cfg = SessionConfig::new(11, 2, 5, vec![3]).unwrap();
        assert_eq!(cfg.x.iter().map(|x| x.value()).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
        assert_eq!(cfg.delta_denominator(), 11 * DELTA_GRID_BASE);
        assert!(SessionConfig::new(5, 2, 5, vec![1]).is_err());
        assert!(SessionConfig::new(11, 0, 5, vec![1]).is_err());
        assert!(SessionConfig::new(11, 2, 5, vec![]).is_err());
    }

    #[test]
    fn forged_bits() {
        assert_eq!(ForgedBits::Flip.apply(0), 1);
        assert_eq!(ForgedBits::Constant(1).apply(0), 1);
    }
}
