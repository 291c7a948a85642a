//! End-to-end acceptance criteria, run without the libtest harness so the
//! PASS/FAIL line for each criterion is always printed. Exits 1 if any fails.

use std::time::{Duration, Instant};

use num_complex::Complex64 as C;
use rand::Rng;

use cluster_qss::angle::RationalAngle;
use cluster_qss::attacks::{chi_squared_uniform, collect_forged_sigmas};
use cluster_qss::channel::{estimate_detection_probability, ChannelConfig};
use cluster_qss::circuit::{check_branches, experiment_circuit, experiment_secret};
use cluster_qss::exec::trial_rng;
use cluster_qss::identities::commutation_residuals;
use cluster_qss::protocol::engine::correction_step_forced;
use cluster_qss::protocol::privacy::scan_transcript_privacy;
use cluster_qss::protocol::session::random_secret;
use cluster_qss::protocol::{run_seeded, MessageBody, SessionPlan};
use cluster_qss::statevector::{build_cluster, stabilizer_residual, ClusterGraph, StateVector};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn demo_values() -> Outcome {
    let start = Instant::now();
    let plan = SessionPlan::demo(0);
    let report = run_seeded(&plan).expect("demo plan is valid");
    let elapsed = start.elapsed();
    let poly = report.polynomial.as_ref().expect("split ran");
    let shares: Vec<u64> = plan.config.x.iter().map(|&x| poly.eval(x).value()).collect();
    let gammas: Vec<Vec<(i64, i64)>> =
        report.contexts.iter().map(|c| c.gammas.iter().map(|g| g.pi_fraction()).collect()).collect();
    let expected_gammas = vec![
        vec![(8, 7), (16, 7)],
        vec![(12, 7), (24, 7)],
        vec![(4, 7), (8, 7)],
        vec![(4, 7), (8, 7)],
    ];
    let weights: Vec<u64> =
        report.contexts[1..].iter().filter_map(|c| c.weight.as_ref()).map(|w| w.c.value()).collect();
    let sigmas: Vec<(i64, i64)> = report
        .transcript
        .messages()
        .iter()
        .filter_map(|m| match m.body {
            MessageBody::SigmaAngle { angle, .. } => Some(angle.pi_fraction()),
            _ => None,
        })
        .collect();
    let fid = report.min_fidelity().unwrap_or(0.0);
    let ok = shares == [6, 4, 3, 2]
        && gammas == expected_gammas
        && weights == [6, 2, 2]
        && report.angle_turns == [2, 4]
        && sigmas == [(10, 7), (8, 7), (25, 7), (11, 7)]
        && fid >= 1.0 - 1e-9
        && elapsed < Duration::from_secs(1);
    outcome(ok, format!("shares {shares:?}, weights {weights:?}, gamma/π {gammas:?}, sigma/π {sigmas:?}, fidelity {fid:.12}, {elapsed:?}"))
}

fn random_sessions() -> Outcome {
    let start = Instant::now();
    let mut rng = trial_rng(2024, 0);
    let mut worst = 1.0f64;
    let mut aborted = 0;
    for _ in 0..200 {
        let plan = SessionPlan::random(&mut rng);
        let report = run_seeded(&plan).expect("random plans are valid");
        if report.aborted() {
            aborted += 1;
        }
        worst = worst.min(report.min_fidelity().unwrap_or(0.0));
    }
    let elapsed = start.elapsed();
    let ok = aborted == 0 && worst >= 1.0 - 1e-9 && elapsed < Duration::from_secs(30);
    outcome(ok, format!("200 sessions, {aborted} aborted, min fidelity {worst:.12}, {elapsed:?}"))
}

type M2 = [[C; 2]; 2];
type Criterion = (&'static str, fn() -> Outcome);

fn apply2(m: &M2, v: [C; 2]) -> [C; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Dense reference for one correction: `|ψ⟩ ⊗ |+_δ⟩` as a 4-vector indexed
/// `2·carrier + delta`, CZ as a 4×4 diagonal, projection of the carrier onto
/// `|±⟩`, then `H · X^m` followed by `R_X(σ)` with `σ = (−1)^{m+1} δ + γ`.
fn dense_correction(psi: [C; 2], delta: f64, gamma: f64, m: u8) -> [C; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let plus_delta = [C::from_polar(r, -delta / 2.0), C::from_polar(r, delta / 2.0)];
    let mut joint = [C::new(0.0, 0.0); 4];
    for c in 0..2 {
        for d in 0..2 {
            joint[2 * c + d] = psi[c] * plus_delta[d];
        }
    }
    let mut cz = [[C::new(0.0, 0.0); 4]; 4];
    for (i, row) in cz.iter_mut().enumerate() {
        row[i] = C::new(if i == 3 { -1.0 } else { 1.0 }, 0.0);
    }
    let joint: Vec<C> = (0..4).map(|i| (0..4).map(|k| cz[i][k] * joint[k]).sum()).collect();
    let sign = if m == 0 { 1.0 } else { -1.0 };
    let mut rest = [C::new(0.0, 0.0); 2];
    for (d, slot) in rest.iter_mut().enumerate() {
        *slot = r * joint[d] + sign * r * joint[2 + d];
    }
    let norm = (rest[0].norm_sqr() + rest[1].norm_sqr()).sqrt();
    rest = [rest[0] / norm, rest[1] / norm];
    let zero = C::new(0.0, 0.0);
    let one = C::new(1.0, 0.0);
    if m == 1 {
        rest = apply2(&[[zero, one], [one, zero]], rest);
    }
    let h = C::new(r, 0.0);
    rest = apply2(&[[h, h], [h, -h]], rest);
    let sigma = if m == 1 { delta } else { -delta } + gamma;
    let (c, s) = ((sigma / 2.0).cos(), (sigma / 2.0).sin());
    apply2(&[[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]], rest)
}

fn dense_fidelity(a: [C; 2], b: &[C]) -> f64 {
    (a[0].conj() * b[0] + a[1].conj() * b[1]).norm_sqr()
}

fn correction_oracle() -> Outcome {
    let mut rng = trial_rng(99, 3);
    let mut worst_engine = 1.0f64;
    let mut worst_target = 1.0f64;
    for _ in 0..100 {
        let carrier = random_secret(&mut rng);
        let delta = RationalAngle::new(rng.gen_range(-720..720), rng.gen_range(1..97)).unwrap();
        let gamma = RationalAngle::new(rng.gen_range(-720..720), rng.gen_range(1..97)).unwrap();
        let psi = [carrier.amplitudes()[0], carrier.amplitudes()[1]];
        let (c, s) = ((gamma.radians() / 2.0).cos(), (gamma.radians() / 2.0).sin());
        let target = apply2(&[[C::new(c, 0.0), C::new(0.0, -s)], [C::new(0.0, -s), C::new(c, 0.0)]], psi);
        for m in 0..2 {
            let dense = dense_correction(psi, delta.radians(), gamma.radians(), m);
            let (_, engine) =
                correction_step_forced(&carrier, &StateVector::plus_omega(delta, 0), delta, gamma, m).unwrap();
            worst_engine = worst_engine.min(dense_fidelity(dense, engine.amplitudes()));
            worst_target = worst_target.min(dense_fidelity(dense, &target));
        }
    }
    let ok = worst_engine >= 1.0 - 1e-10 && worst_target >= 1.0 - 1e-10;
    outcome(ok, format!("engine vs dense {worst_engine:.12}, dense vs R_X(γ)|ψ⟩ {worst_target:.12}"))
}

fn stabilizers() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2, 3] {
        let graph = ClusterGraph::path(n).unwrap();
        let state = build_cluster(&graph);
        for a in 0..n {
            worst = worst.max(stabilizer_residual(&state, &graph, a).unwrap());
        }
    }
    outcome(worst < 1e-12, format!("max residual {worst:.2e}"))
}

fn commutation() -> Outcome {
    let mut rng = trial_rng(5, 5);
    let worst = (0..32)
        .flat_map(|_| {
            commutation_residuals(RationalAngle::new(rng.gen_range(-10_000..10_000), rng.gen_range(1..5000)).unwrap())
        })
        .fold(0.0f64, f64::max);
    outcome(worst < 1e-12, format!("max residual {worst:.2e} over 32 angles"))
}

fn detection() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for d in [1usize, 4, 16] {
        let config = ChannelConfig::new(d.div_ceil(2), d / 2);
        let est = estimate_detection_probability(&config, 10_000, 11);
        ok &= est.z_score.abs() <= 3.0 && (est.expected - 0.75f64.powi(d as i32)).abs() < 1e-12;
        parts.push(format!("d={d} pass {:.4} vs {:.4} (z {:+.2})", est.rate, est.expected, est.z_score));
    }
    outcome(ok, parts.join(", "))
}

fn circuits() -> Outcome {
    let c1 = experiment_circuit(1);
    let check1 = check_branches(&c1, &experiment_secret(1)).unwrap();
    let hist = c1.sample(10_000, 3).unwrap().final_bit();
    let ones = hist.counts.get("1").copied().unwrap_or(0) as f64 / 10_000.0;
    let check2 = check_branches(&experiment_circuit(2), &experiment_secret(2)).unwrap();
    let ok = (ones - 0.75).abs() <= 0.02
        && check1.min_fidelity >= 1.0 - 1e-10
        && (check1.exact_one - 0.75).abs() < 1e-12
        && check2.exact_one.abs() < 1e-12;
    outcome(
        ok,
        format!(
            "circuit 1 sampled P(1) {ones:.4}, exact {:.6}, {} branches at fidelity ≥ {:.12}; circuit 2 P(0) {:.12}",
            check1.exact_one,
            check1.branches,
            check1.min_fidelity,
            1.0 - check2.exact_one
        ),
    )
}

fn privacy() -> Outcome {
    let mut rng = trial_rng(8, 8);
    let mut dirty = 0;
    for _ in 0..100 {
        let plan = SessionPlan::random(&mut rng);
        let report = run_seeded(&plan).unwrap();
        if !scan_transcript_privacy(&report.transcript, &report, &plan.config.w).clean() {
            dirty += 1;
        }
    }
    let tests: Vec<_> =
        collect_forged_sigmas(5000, 17).iter().map(|(id, s)| (id.clone(), chi_squared_uniform(s, 36, 0.01))).collect();
    let rejected = tests.iter().filter(|(_, t)| t.rejected()).count();
    let stats: Vec<String> =
        tests.iter().map(|(id, t)| format!("{id} χ² {:.1}/{:.1}", t.statistic, t.critical)).collect();
    outcome(dirty == 0 && rejected == 0, format!("{dirty}/100 sessions flagged; {}", stats.join(", ")))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("worked example", demo_values),
        ("random sessions", random_sessions),
        ("correction oracle", correction_oracle),
        ("cluster stabilizers", stabilizers),
        ("commutation identities", commutation),
        ("intercept-resend detection", detection),
        ("experiment circuits", circuits),
        ("transcript privacy", privacy),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!("{} {}. {name}: {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
        if !o.passed {
            failed.push(*name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed: {failed:?}");
        std::process::exit(1);
    }
}
