//! Five-qubit reconstruction circuits, a small OpenQASM 2.0 subset, shot
//! sampling and exact branch enumeration.
//!
//! Layout for `k` non-reconstructor users: `q[0]` carries the encrypted
//! secret, `q[1..=k]` are the users' particles and `q[k+1..=2k]` their
//! cluster partners. Teleport bits go to `c0..c{k-1}`, correction bits to
//! `c{k}..c{2k-1}` and the final readout to `c{2k}`; every register has one bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;

use crate::angle::RationalAngle;
use crate::error::{CircuitError, StateError};
use crate::exec;
use crate::field::{lagrange_weights, rotation_angle, ShareRecord};
use crate::protocol::engine::user_sigma;
use crate::protocol::session::{DealerChoice, DeltaChoice, SessionPlan};
use crate::statevector::{fidelity_up_to_phase, Gate, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Gate { gate: Gate, qubit: usize },
    Cz { a: usize, b: usize },
    Measure { qubit: usize, creg: usize },
    /// Applied only when single-bit register `creg` holds `value`.
    Conditional { creg: usize, value: u8, gate: Gate, qubit: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub num_cregs: usize,
    pub ops: Vec<Op>,
}

fn qasm_angle(a: RationalAngle) -> String {
    match a.pi_fraction() {
        (0, _) => "0".into(),
        (1, 1) => "pi".into(),
        (-1, 1) => "-pi".into(),
        (n, 1) => format!("{n}*pi"),
        (1, d) => format!("pi/{d}"),
        (-1, d) => format!("-pi/{d}"),
        (n, d) => format!("{n}*pi/{d}"),
    }
}

fn qasm_gate(gate: Gate, qubit: usize) -> String {
    match gate.angle() {
        Some(a) => format!("{}({}) q[{qubit}];", gate.name(), qasm_angle(a)),
        None => format!("{} q[{qubit}];", gate.name()),
    }
}

impl Circuit {
    pub fn new(num_qubits: usize, num_cregs: usize) -> Self {
        Circuit { num_qubits, num_cregs, ops: Vec::new() }
    }

    pub fn gate(&mut self, gate: Gate, qubit: usize) -> &mut Self {
        self.ops.push(Op::Gate { gate, qubit });
        self
    }

    pub fn cz(&mut self, a: usize, b: usize) -> &mut Self {
        self.ops.push(Op::Cz { a, b });
        self
    }

    pub fn measure(&mut self, qubit: usize, creg: usize) -> &mut Self {
        self.ops.push(Op::Measure { qubit, creg });
        self
    }

    pub fn conditional(&mut self, creg: usize, value: u8, gate: Gate, qubit: usize) -> &mut Self {
        self.ops.push(Op::Conditional { creg, value, gate, qubit });
        self
    }

    pub fn to_qasm(&self) -> String {
        let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
        writeln!(out, "qreg q[{}];", self.num_qubits).unwrap();
        for c in 0..self.num_cregs {
            writeln!(out, "creg c{c}[1];").unwrap();
        }
        for op in &self.ops {
            let line = match *op {
                Op::Gate { gate, qubit } => qasm_gate(gate, qubit),
                Op::Cz { a, b } => format!("cz q[{a}],q[{b}];"),
                Op::Measure { qubit, creg } => format!("measure q[{qubit}] -> c{creg}[0];"),
                Op::Conditional { creg, value, gate, qubit } => format!("if(c{creg}=={value}) {}", qasm_gate(gate, qubit)),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// Reads back the subset written by [`Circuit::to_qasm`].
    pub fn parse_qasm(text: &str) -> Result<Circuit, CircuitError> {
        let mut qubits = None;
        let mut cregs = 0usize;
        let mut ops = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| CircuitError::Parse { line: line_no, msg };
            let line = raw.split("//").next().unwrap_or("").trim();
            if line.is_empty() || line == "OPENQASM 2.0;" || line == "include \"qelib1.inc\";" {
                continue;
            }
            let stmt = line.strip_suffix(';').ok_or_else(|| err("missing `;`".into()))?.trim();
            if let Some(rest) = stmt.strip_prefix("qreg ") {
                qubits = Some(parse_index(rest.trim(), "q").map_err(err)?);
            } else if let Some(rest) = stmt.strip_prefix("creg ") {
                let (name, size) = rest.trim().split_once('[').ok_or_else(|| err("malformed creg".into()))?;
                let idx = parse_creg_name(name).map_err(err)?;
                if size != "1]" || idx != cregs {
                    return Err(err(format!("expected creg c{cregs}[1]")));
                }
                cregs += 1;
            } else if let Some(rest) = stmt.strip_prefix("measure ") {
                let (q, c) = rest.split_once("->").ok_or_else(|| err("measure needs `->`".into()))?;
                let qubit = parse_index(q.trim(), "q").map_err(err)?;
                let (name, bit) = c.trim().split_once('[').ok_or_else(|| err("malformed classical target".into()))?;
                if bit != "0]" {
                    return Err(err("only bit 0 of a register can be written".into()));
                }
                ops.push(Op::Measure { qubit, creg: parse_creg_name(name).map_err(err)? });
            } else if let Some(rest) = stmt.strip_prefix("if(") {
                let (cond, body) = rest.split_once(')').ok_or_else(|| err("unclosed condition".into()))?;
                let (name, value) = cond.split_once("==").ok_or_else(|| err("condition needs `==`".into()))?;
                let creg = parse_creg_name(name.trim()).map_err(err)?;
                let value: u8 = value.trim().parse().map_err(|_| err(format!("bad condition value `{value}`")))?;
                if value > 1 {
                    return Err(err("single-bit registers hold 0 or 1".into()));
                }
                match parse_gate_stmt(body.trim()).map_err(err)? {
                    Op::Gate { gate, qubit } => ops.push(Op::Conditional { creg, value, gate, qubit }),
                    _ => return Err(err("only single-qubit gates can be conditioned".into())),
                }
            } else {
                ops.push(parse_gate_stmt(stmt).map_err(err)?);
            }
        }
        let num_qubits = qubits.ok_or(CircuitError::Parse { line: 0, msg: "no qreg declared".into() })?;
        let circuit = Circuit { num_qubits, num_cregs: cregs, ops };
        circuit.check()?;
        Ok(circuit)
    }

    fn check(&self) -> Result<(), CircuitError> {
        let bad = |msg: String| CircuitError::Parse { line: 0, msg };
        for op in &self.ops {
            let (qs, creg): (Vec<usize>, Option<usize>) = match *op {
                Op::Gate { qubit, .. } => (vec![qubit], None),
                Op::Cz { a, b } => (vec![a, b], None),
                Op::Measure { qubit, creg } | Op::Conditional { creg, qubit, .. } => (vec![qubit], Some(creg)),
            };
            if let Some(&q) = qs.iter().find(|&&q| q >= self.num_qubits) {
                return Err(bad(format!("qubit {q} outside q[{}]", self.num_qubits)));
            }
            if creg.is_some_and(|c| c >= self.num_cregs) {
                return Err(bad(format!("register c{} undeclared", creg.unwrap())));
            }
        }
        Ok(())
    }

    /// Index of the last measurement, which the branch enumeration leaves out.
    fn final_measure(&self) -> Option<usize> {
        self.ops.iter().rposition(|op| matches!(op, Op::Measure { .. }))
    }

    /// One shot with Born-rule mid-circuit measurements. Returns the
    /// classical registers and the post-measurement state.
    pub fn run_shot<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(Vec<u8>, StateVector), StateError> {
        let mut state = StateVector::new(self.num_qubits)?;
        let mut cregs = vec![0u8; self.num_cregs];
        for op in &self.ops {
            match *op {
                Op::Gate { gate, qubit } => state.apply(gate, qubit)?,
                Op::Cz { a, b } => state.apply_cz(a, b)?,
                Op::Measure { qubit, creg } => cregs[creg] = state.measure_computational(qubit, rng)?.bit,
                Op::Conditional { creg, value, gate, qubit } => {
                    if cregs[creg] == value {
                        state.apply(gate, qubit)?
                    }
                }
            }
        }
        Ok((cregs, state))
    }

    /// Counts of full classical bitstrings, written `c{last}…c0`.
    pub fn sample(&self, shots: usize, seed: u64) -> Result<Histogram, StateError> {
        let results = exec::map_trials(shots, seed, |_, rng| self.run_shot(rng).map(|(bits, _)| bits));
        let mut counts = BTreeMap::new();
        for bits in results {
            let key: String = bits?.iter().rev().map(|b| if *b == 1 { '1' } else { '0' }).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
        Ok(Histogram { counts })
    }

    /// Every assignment of the mid-circuit measurements, with its probability
    /// and the state just before the final measurement.
    pub fn enumerate_branches(&self) -> Result<Vec<Branch>, StateError> {
        let stop = self.final_measure().unwrap_or(self.ops.len());
        let mut frontier = vec![Branch {
            bits: vec![None; self.num_cregs],
            probability: 1.0,
            state: StateVector::new(self.num_qubits)?,
        }];
        for op in &self.ops[..stop] {
            let mut next = Vec::with_capacity(frontier.len() * 2);
            for mut b in frontier {
                match *op {
                    Op::Gate { gate, qubit } => {
                        b.state.apply(gate, qubit)?;
                        next.push(b);
                    }
                    Op::Cz { a, b: c } => {
                        b.state.apply_cz(a, c)?;
                        next.push(b);
                    }
                    Op::Conditional { creg, value, gate, qubit } => {
                        if b.bits[creg].unwrap_or(0) == value {
                            b.state.apply(gate, qubit)?;
                        }
                        next.push(b);
                    }
                    Op::Measure { qubit, creg } => {
                        for bit in 0..2u8 {
                            let mut child = b.clone();
                            match child.state.project(qubit, bit) {
                                Ok(p) => {
                                    child.probability *= p;
                                    child.bits[creg] = Some(bit);
                                    next.push(child);
                                }
                                Err(StateError::ImpossibleBranch) => {}
                                Err(e) => return Err(e),
                            }
                        }
                    }
                }
            }
            frontier = next;
        }
        Ok(frontier)
    }

    /// Exact probability that the final measurement reads 1.
    pub fn exact_final_one(&self) -> Result<f64, StateError> {
        let Some(Op::Measure { qubit, .. }) = self.final_measure().map(|i| self.ops[i]) else {
            return Ok(0.0);
        };
        self.enumerate_branches()?
            .iter()
            .map(|b| Ok(b.probability * b.state.probability_one(qubit)?))
            .sum()
    }

    /// Qubit read out by the final measurement.
    pub fn readout_qubit(&self) -> Option<usize> {
        match self.final_measure().map(|i| self.ops[i]) {
            Some(Op::Measure { qubit, .. }) => Some(qubit),
            _ => None,
        }
    }
}

fn parse_index(s: &str, reg: &str) -> Result<usize, String> {
    s.strip_prefix(reg)
        .and_then(|r| r.strip_prefix('['))
        .and_then(|r| r.strip_suffix(']'))
        .and_then(|r| r.parse().ok())
        .ok_or_else(|| format!("expected {reg}[i], got `{s}`"))
}

fn parse_creg_name(s: &str) -> Result<usize, String> {
    s.trim().strip_prefix('c').and_then(|r| r.parse().ok()).ok_or_else(|| format!("expected register cK, got `{s}`"))
}

fn parse_gate_stmt(stmt: &str) -> Result<Op, String> {
    let (head, args) = stmt.split_once(' ').ok_or_else(|| format!("cannot parse `{stmt}`"))?;
    let args = args.trim();
    if head == "cz" {
        let (a, b) = args.split_once(',').ok_or("cz needs two qubits")?;
        return Ok(Op::Cz { a: parse_index(a.trim(), "q")?, b: parse_index(b.trim(), "q")? });
    }
    let qubit = parse_index(args, "q")?;
    let (name, angle) = match head.split_once('(') {
        Some((n, rest)) => {
            let expr = rest.strip_suffix(')').ok_or("unclosed angle")?;
            (n, Some(RationalAngle::parse_pi_expr(expr).map_err(|e| e.to_string())?))
        }
        None => (head, None),
    };
    let gate = match (name, angle) {
        ("h", None) => Gate::H,
        ("x", None) => Gate::X,
        ("z", None) => Gate::Z,
        ("id", None) => Gate::I,
        ("rx", Some(a)) => Gate::Rx(a),
        ("ry", Some(a)) => Gate::Ry(a),
        ("rz", Some(a)) => Gate::Rz(a),
        _ => return Err(format!("unsupported gate `{head}`")),
    };
    Ok(Op::Gate { gate, qubit })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    /// Outcome per register; `None` for registers not yet written.
    pub bits: Vec<Option<u8>>,
    pub probability: f64,
    pub state: StateVector,
}

impl Branch {
    /// The readout qubit alone, once every other qubit has collapsed.
    pub fn reduced(&self, keep: usize) -> Result<StateVector, StateError> {
        let mut state = self.state.clone();
        for q in (0..state.num_qubits()).rev().filter(|&q| q != keep) {
            state = state.discard_qubit(q)?;
        }
        Ok(state)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Histogram {
    pub counts: BTreeMap<String, usize>,
}

impl Histogram {
    pub fn shots(&self) -> usize {
        self.counts.values().sum()
    }

    /// Counts of the leading bit, i.e. the highest-numbered register.
    pub fn final_bit(&self) -> Histogram {
        let mut counts = BTreeMap::new();
        for (k, &v) in &self.counts {
            *counts.entry(k[..1].to_string()).or_insert(0) += v;
        }
        Histogram { counts }
    }

    /// `bitstring count` lines sorted by bitstring.
    pub fn to_text(&self) -> String {
        self.counts.iter().map(|(k, v)| format!("{k} {v}\n")).collect()
    }
}

/// Angles that fix one reconstruction circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitAngles {
    /// Gates preparing the secret from `|0⟩`.
    pub prepare: Vec<Gate>,
    pub gamma_dealer: RationalAngle,
    /// `(δ_u, γ_u)` in correction order.
    pub users: Vec<(RationalAngle, RationalAngle)>,
    pub gamma_final: RationalAngle,
}

/// Builds the circuit: prepare and encrypt, cluster pairs, rotated-basis
/// teleports with `Z` corrections, then one entangle–measure–correct round
/// per user and the final rotation and readout.
pub fn reconstruction_circuit(angles: &CircuitAngles) -> Circuit {
    let k = angles.users.len();
    let mut c = Circuit::new(1 + 2 * k, 1 + 2 * k);
    for &g in &angles.prepare {
        c.gate(g, 0);
    }
    c.gate(Gate::Rx(angles.gamma_dealer), 0);
    for q in 1..=2 * k {
        c.gate(Gate::H, q);
    }
    for u in 0..k {
        c.cz(1 + u, 1 + k + u);
    }
    for (u, &(delta, _)) in angles.users.iter().enumerate() {
        c.gate(Gate::Rx(delta), 1 + u);
    }
    for u in 0..k {
        c.measure(1 + u, u);
    }
    for u in 0..k {
        c.conditional(u, 1, Gate::Z, 1 + k + u);
    }
    let mut carrier = 0;
    for (u, &(delta, gamma)) in angles.users.iter().enumerate() {
        let target = 1 + k + u;
        let creg = k + u;
        c.cz(carrier, target).gate(Gate::H, carrier).measure(carrier, creg);
        c.conditional(creg, 1, Gate::X, target).gate(Gate::H, target);
        for m in 0..2 {
            c.conditional(creg, m, Gate::Rx(user_sigma(m, delta, gamma)), target);
        }
        carrier = target;
    }
    c.gate(Gate::Rx(angles.gamma_final), carrier).measure(carrier, 2 * k);
    c
}

/// Angles of the (3, 4) worked example for secret `which` (1 or 2), derived
/// from its polynomial, weights and fixed `δ` values.
pub fn experiment_angles(which: usize) -> CircuitAngles {
    assert!(which == 1 || which == 2, "two experiment circuits");
    let plan = SessionPlan::demo(0);
    let cfg = &plan.config;
    let j = which - 1;
    let DealerChoice::Fixed { dealer_secret, high_coeffs } = &cfg.dealer else { unreachable!("demo dealer is fixed") };
    let poly = crate::field::DealerPolynomial::new(*dealer_secret, high_coeffs, cfg.modulus).expect("valid");
    let records: Vec<ShareRecord> = plan
        .participating
        .iter()
        .map(|&i| ShareRecord { participant: cfg.names[i].clone(), x: cfg.x[i], share: poly.eval(cfg.x[i]) })
        .collect();
    let gammas: Vec<RationalAngle> = lagrange_weights(&records, cfg.modulus)
        .expect("distinct abscissas")
        .iter()
        .map(|w| rotation_angle(cfg.w[j], w.c, cfg.modulus).expect("w in range"))
        .collect();
    let DeltaChoice::Fixed(deltas) = &cfg.deltas else { unreachable!("demo deltas are fixed") };
    let prepare = if which == 1 { vec![Gate::Ry(RationalAngle::new(1, 3).expect("valid"))] } else { vec![] };
    CircuitAngles {
        prepare,
        gamma_dealer: rotation_angle(cfg.w[j], poly.dealer_secret(), cfg.modulus).expect("w in range"),
        users: deltas.iter().zip(&gammas).map(|(row, &g)| (row[j], g)).collect(),
        gamma_final: *gammas.last().expect("t ≥ 1"),
    }
}

pub fn experiment_circuit(which: usize) -> Circuit {
    reconstruction_circuit(&experiment_angles(which))
}

/// The secret each experiment circuit should deliver to its readout qubit.
pub fn experiment_secret(which: usize) -> StateVector {
    SessionPlan::demo(0).secrets[which - 1].clone()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchCheck {
    pub branches: usize,
    pub min_fidelity: f64,
    pub probability_total: f64,
    pub exact_one: f64,
}

/// Fidelity of the readout qubit with `target` on every branch.
pub fn check_branches(circuit: &Circuit, target: &StateVector) -> Result<BranchCheck, StateError> {
    let keep = circuit.readout_qubit().ok_or(StateError::QubitCount(0))?;
    let branches = circuit.enumerate_branches()?;
    let mut min_fidelity = f64::INFINITY;
    for b in &branches {
        min_fidelity = min_fidelity.min(fidelity_up_to_phase(&b.reduced(keep)?, target)?);
    }
    Ok(BranchCheck {
        branches: branches.len(),
        min_fidelity,
        probability_total: branches.iter().map(|b| b.probability).sum(),
        exact_one: circuit.exact_final_one()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pi7(n: i64) -> RationalAngle {
        RationalAngle::from_pi_fraction(n, 7).unwrap()
    }

    const CIRCUIT_1: &str = "OPENQASM 2.0;
include \"qelib1.inc\";
qreg q[5];
creg c0[1];
creg c1[1];
creg c2[1];
creg c3[1];
creg c4[1];
ry(2*pi/3) q[0];
rx(8*pi/7) q[0];
h q[1];
h q[2];
h q[3];
h q[4];
cz q[1],q[3];
cz q[2],q[4];
rx(2*pi/7) q[1];
rx(4*pi/7) q[2];
measure q[1] -> c0[0];
measure q[2] -> c1[0];
if(c0==1) z q[3];
if(c1==1) z q[4];
cz q[0],q[3];
h q[0];
measure q[0] -> c2[0];
if(c2==1) x q[3];
h q[3];
if(c2==0) rx(10*pi/7) q[3];
if(c2==1) rx(2*pi) q[3];
cz q[3],q[4];
h q[3];
measure q[3] -> c3[0];
if(c3==1) x q[4];
h q[4];
if(c3==0) rx(0) q[4];
if(c3==1) rx(8*pi/7) q[4];
rx(4*pi/7) q[4];
measure q[4] -> c4[0];
";

    #[test]
    fn circuit_one_text_is_exact() {
        assert_eq!(experiment_circuit(1).to_qasm(), CIRCUIT_1);
    }

    #[test]
    fn circuit_two_angles() {
        let a = experiment_angles(2);
        assert!(a.prepare.is_empty());
        assert_eq!(a.gamma_dealer, pi7(16));
        assert_eq!(a.users, vec![(pi7(1), pi7(24)), (pi7(3), pi7(8))]);
        assert_eq!(a.gamma_final, pi7(8));
        let text = experiment_circuit(2).to_qasm();
        for line in ["if(c2==0) rx(23*pi/7) q[3];", "if(c2==1) rx(25*pi/7) q[3];", "if(c3==0) rx(5*pi/7) q[4];"] {
            assert!(text.contains(line), "{line}");
        }
        assert!(text.contains("if(c3==1) rx(11*pi/7) q[4];\nrx(8*pi/7) q[4];"));
    }

    #[test]
    fn qasm_round_trip() {
        for which in 1..=2 {
            let c = experiment_circuit(which);
            let back = Circuit::parse_qasm(&c.to_qasm()).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.sample(500, 3).unwrap(), c.sample(500, 3).unwrap());
        }
        let mut c = Circuit::new(2, 1);
        c.gate(Gate::Rz(RationalAngle::from_pi_fraction(-1, 3).unwrap()), 1).gate(Gate::I, 0).gate(Gate::Rx(RationalAngle::from_pi_fraction(1, 1).unwrap()), 0);
        assert_eq!(Circuit::parse_qasm(&c.to_qasm()).unwrap(), c);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = CIRCUIT_1.replace("cz q[1],q[3];", "ccx q[1],q[3];");
        assert!(matches!(Circuit::parse_qasm(&bad), Err(CircuitError::Parse { line: 15, .. })));
        let bad = CIRCUIT_1.replace("h q[1];", "h q[1]");
        assert!(matches!(Circuit::parse_qasm(&bad), Err(CircuitError::Parse { line: 11, .. })));
        let bad = CIRCUIT_1.replace("h q[4];", "h q[7];");
        assert!(Circuit::parse_qasm(&bad).is_err());
    }

    #[test]
    fn circuit_one_every_branch_recovers_secret() {
        let check = check_branches(&experiment_circuit(1), &experiment_secret(1)).unwrap();
        assert_eq!(check.branches, 16);
        assert!((check.probability_total - 1.0).abs() < 1e-12);
        assert!(check.min_fidelity > 1.0 - 1e-12, "{check:?}");
        assert!((check.exact_one - 0.75).abs() < 1e-12);
    }

    #[test]
    fn circuit_two_reads_zero() {
        let c = experiment_circuit(2);
        let check = check_branches(&c, &experiment_secret(2)).unwrap();
        assert!(check.min_fidelity > 1.0 - 1e-12);
        assert!(check.exact_one < 1e-12);
        let hist = c.sample(2000, 1).unwrap().final_bit();
        assert_eq!(hist.counts.get("0"), Some(&2000));
    }

    #[test]
    fn circuit_one_histogram() {
        let hist = experiment_circuit(1).sample(4000, 7).unwrap();
        assert_eq!(hist.shots(), 4000);
        let ones = hist.final_bit().counts.get("1").copied().unwrap_or(0) as f64 / 4000.0;
        assert!((ones - 0.75).abs() < 0.03, "{ones}");
        assert!(hist.to_text().lines().all(|l| l.split(' ').next().unwrap().len() == 5));
    }

    #[test]
    fn random_angles_build_working_circuits() {
        use crate::exec::trial_rng;
        let mut rng = trial_rng(8, 0);
        for k in 1..=3 {
            for _ in 0..5 {
                let mut r = |n| RationalAngle::new(rng.gen_range(0..n), n).unwrap();
                let users: Vec<_> = (0..k).map(|_| (r(97), r(13))).collect();
                let gamma_dealer = r(13);
                let partial: RationalAngle = gamma_dealer + users.iter().map(|u| u.1).sum::<RationalAngle>();
                let angles = CircuitAngles {
                    prepare: vec![Gate::Ry(r(50)), Gate::Rz(r(50))],
                    gamma_dealer,
                    users,
                    gamma_final: RationalAngle::turns(3) - partial,
                };
                let mut target = StateVector::new(1).unwrap();
                for &g in &angles.prepare {
                    target.apply(g, 0).unwrap();
                }
                let check = check_branches(&reconstruction_circuit(&angles), &target).unwrap();
                assert_eq!(check.branches, 1 << (2 * k));
                assert!(check.min_fidelity > 1.0 - 1e-10);
            }
        }
    }
}
