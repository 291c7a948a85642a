//! Invariant suite behind `cqss selftest`.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;

use crate::angle::RationalAngle;
use crate::exec::trial_rng;
use crate::identities::{cluster_decomposition_residual, commutation_residuals, plus_omega_residual};
use crate::protocol::engine::{correction_step_forced, run_seeded};
use crate::protocol::session::{random_secret, SessionPlan};
use crate::statevector::{fidelity_up_to_phase, stabilizer_residual, ClusterGraph, Gate, StateVector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SelftestOptions {
    pub seed: u64,
    /// Builds clusters with a controlled-Z whose sign sits on `|10⟩`
    /// instead of `|11⟩`. Used to check that the suite notices.
    pub mutate_cz: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub millis: u128,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<28} {:<6} {:>8}  detail\n", "check", "result", "ms");
        for c in &self.checks {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            writeln!(out, "{:<28} {:<6} {:>8}  {}", c.name, verdict, c.millis, c.detail).unwrap();
        }
        out
    }
}

fn cluster(n: usize, mutate: bool) -> (ClusterGraph, StateVector) {
    let graph = ClusterGraph::path(n).expect("small path");
    let mut sv = StateVector::new(n).expect("small register");
    for v in 0..n {
        sv.apply(Gate::H, v).expect("vertex in range");
    }
    for (a, b) in graph.edges() {
        sv.apply_cz(a, b).expect("edge in range");
        if mutate {
            sv.apply(Gate::Z, a).expect("vertex in range");
        }
    }
    (graph, sv)
}

fn stabilizers(mutate: bool) -> (bool, String) {
    let mut worst = 0.0f64;
    for n in [2, 3] {
        let (graph, state) = cluster(n, mutate);
        for a in 0..n {
            worst = worst.max(stabilizer_residual(&state, &graph, a).expect("vertex in range"));
        }
    }
    (worst < 1e-12, format!("max ‖K_a|C⟩ − |C⟩‖ = {worst:.2e} over 2- and 3-vertex paths"))
}

fn random_angle<R: Rng>(rng: &mut R) -> RationalAngle {
    RationalAngle::new(rng.gen_range(-5000..5000), rng.gen_range(1..2000)).expect("nonzero denominator")
}

fn commutation(seed: u64) -> (bool, String) {
    let mut rng = trial_rng(seed, 1);
    let worst = (0..32).flat_map(|_| commutation_residuals(random_angle(&mut rng))).fold(0.0f64, f64::max);
    (worst < 1e-12, format!("max residual {worst:.2e} over 32 angles"))
}

fn decomposition(seed: u64) -> (bool, String) {
    let mut rng = trial_rng(seed, 2);
    let worst = (0..32)
        .map(|_| {
            let a = random_angle(&mut rng);
            cluster_decomposition_residual(a).max(plus_omega_residual(a))
        })
        .fold(0.0f64, f64::max);
    (worst < 1e-12, format!("max residual {worst:.2e} over 32 angles"))
}

fn corrections(seed: u64) -> (bool, String) {
    let mut rng = trial_rng(seed, 3);
    let mut worst = 1.0f64;
    for _ in 0..100 {
        let carrier = random_secret(&mut rng);
        let (delta, gamma) = (random_angle(&mut rng), random_angle(&mut rng));
        let mut expect = carrier.clone();
        expect.apply(Gate::Rx(gamma), 0).expect("single qubit");
        for m in 0..2 {
            let (_, out) = correction_step_forced(&carrier, &StateVector::plus_omega(delta, 0), delta, gamma, m)
                .expect("both branches are possible");
            worst = worst.min(fidelity_up_to_phase(&out, &expect).expect("same size"));
        }
    }
    (worst > 1.0 - 1e-10, format!("min fidelity {worst:.12} over 100 cases × 2 branches"))
}

fn demo() -> (bool, String) {
    let report = match run_seeded(&SessionPlan::demo(0)) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let shares: Vec<u64> = report.contexts[1..].iter().filter_map(|c| c.share.as_ref()).map(|s| s.share.value()).collect();
    let weights: Vec<u64> = report.contexts[1..].iter().filter_map(|c| c.weight.as_ref()).map(|w| w.c.value()).collect();
    let fid = report.min_fidelity().unwrap_or(0.0);
    let ok = shares == [6, 4, 3] && weights == [6, 2, 2] && report.angle_turns == [2, 4] && fid > 1.0 - 1e-9;
    (ok, format!("shares {shares:?}, weights {weights:?}, turns {:?}, min fidelity {fid:.12}", report.angle_turns))
}

fn random_sessions(seed: u64) -> (bool, String) {
    let mut rng = trial_rng(seed, 4);
    let mut worst = 1.0f64;
    for _ in 0..50 {
        let plan = SessionPlan::random(&mut rng);
        match run_seeded(&plan) {
            Ok(r) if !r.aborted() => worst = worst.min(r.min_fidelity().unwrap_or(0.0)),
            Ok(r) => return (false, format!("aborted: {}", r.abort.expect("aborted"))),
            Err(e) => return (false, e.to_string()),
        }
    }
    (worst > 1.0 - 1e-9, format!("min fidelity {worst:.12} over 50 sessions"))
}

pub fn run_selftest(opts: SelftestOptions) -> SelftestReport {
    type Check = Box<dyn Fn() -> (bool, String)>;
    let seed = opts.seed;
    let checks: Vec<(&'static str, Check)> = vec![
        ("cluster stabilizers", Box::new(move || stabilizers(opts.mutate_cz))),
        ("commutation identities", Box::new(move || commutation(seed))),
        ("rotated-basis decomposition", Box::new(move || decomposition(seed))),
        ("correction branches", Box::new(move || corrections(seed))),
        ("worked example", Box::new(demo)),
        ("random sessions", Box::new(move || random_sessions(seed))),
    ];
    let checks = checks
        .into_iter()
        .map(|(name, f)| {
            let start = Instant::now();
            let (passed, detail) = f();
            CheckResult { name, passed, detail, millis: start.elapsed().as_millis() }
        })
        .collect();
    SelftestReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_build_passes() {
        let report = run_selftest(SelftestOptions::default());
        assert!(report.passed(), "{}", report.to_table());
        assert_eq!(report.checks.len(), 6);
    }

    #[test]
    fn cz_mutation_fails_stabilizers_first() {
        let report = run_selftest(SelftestOptions { mutate_cz: true, ..Default::default() });
        assert_eq!(report.first_failure().unwrap().name, "cluster stabilizers");
    }
}
