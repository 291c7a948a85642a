//! Dense statevector engine for the handful of live qubits the protocol
//! touches at once.
//!
//! Qubit 0 is the least significant bit of the amplitude index. Global phase
//! is never normalized away; compare states with [`fidelity_up_to_phase`].

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::RationalAngle;
use crate::error::StateError;

pub type C64 = Complex64;
pub type Matrix2 = [[C64; 2]; 2];

pub const MAX_QUBITS: usize = 12;

/// Norm tolerance for the unitarity invariant.
pub const NORM_TOL: f64 = 1e-12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    H,
    X,
    Z,
    I,
    Rx(RationalAngle),
    Ry(RationalAngle),
    Rz(RationalAngle),
    Cz,
}

impl Gate {
    /// The 2×2 unitary, or `None` for the two-qubit CZ.
    pub fn matrix(&self) -> Option<Matrix2> {
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let m = match *self {
            Gate::H => [[C64::new(s2, 0.0), C64::new(s2, 0.0)], [C64::new(s2, 0.0), C64::new(-s2, 0.0)]],
            Gate::X => [[ZERO, ONE], [ONE, ZERO]],
            Gate::Z => [[ONE, ZERO], [ZERO, -ONE]],
            Gate::I => [[ONE, ZERO], [ZERO, ONE]],
            Gate::Rx(theta) => rx_matrix(theta.radians()),
            Gate::Ry(theta) => {
                let (s, c) = (theta.radians() / 2.0).sin_cos();
                [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
            }
            Gate::Rz(theta) => rz_matrix(theta.radians()),
            Gate::Cz => return None,
        };
        Some(m)
    }

    /// Lowercase QASM mnemonic.
    pub fn name(&self) -> &'static str {
        match self {
            Gate::H => "h",
            Gate::X => "x",
            Gate::Z => "z",
            Gate::I => "id",
            Gate::Rx(_) => "rx",
            Gate::Ry(_) => "ry",
            Gate::Rz(_) => "rz",
            Gate::Cz => "cz",
        }
    }

    pub fn angle(&self) -> Option<RationalAngle> {
        match *self {
            Gate::Rx(a) | Gate::Ry(a) | Gate::Rz(a) => Some(a),
            _ => None,
        }
    }
}

pub fn rx_matrix(theta: f64) -> Matrix2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
}

pub fn rz_matrix(theta: f64) -> Matrix2 {
    let h = theta / 2.0;
    [[C64::from_polar(1.0, -h), ZERO], [ZERO, C64::from_polar(1.0, h)]]
}

/// Measurement bases used by the protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "basis", content = "omega")]
pub enum Basis {
    /// `{|0⟩, |1⟩}`.
    Computational,
    /// `{|+⟩, |−⟩}`; bit 0 is `|+⟩`.
    PlusMinus,
    /// `{R_X(−ω)|0⟩, R_X(−ω)|1⟩}`.
    Rotated(RationalAngle),
}

impl Basis {
    /// Gate that maps this basis onto the computational one.
    fn pre_rotation(&self) -> Option<Gate> {
        match *self {
            Basis::Computational => None,
            Basis::PlusMinus => Some(Gate::H),
            Basis::Rotated(omega) => Some(Gate::Rx(omega)),
        }
    }

    fn post_rotation(&self) -> Option<Gate> {
        match *self {
            Basis::Computational => None,
            Basis::PlusMinus => Some(Gate::H),
            Basis::Rotated(omega) => Some(Gate::Rx(-omega)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub bit: u8,
    pub basis: Basis,
    pub qubit: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩` on `n` qubits.
    pub fn new(n: usize) -> Result<Self, StateError> {
        if !(1..=MAX_QUBITS).contains(&n) {
            return Err(StateError::QubitCount(n));
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Ok(StateVector { num_qubits: n, amps })
    }

    /// Takes ownership of an amplitude vector; it must already be normalized.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self, StateError> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(StateError::BadLength(len));
        }
        let n = len.trailing_zeros() as usize;
        if n > MAX_QUBITS {
            return Err(StateError::QubitCount(n));
        }
        let sv = StateVector { num_qubits: n, amps };
        let norm = sv.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(StateError::NotNormalized(norm));
        }
        Ok(sv)
    }

    /// Normalizes the given vector first.
    pub fn from_unnormalized(mut amps: Vec<C64>) -> Result<Self, StateError> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(StateError::NotNormalized(norm));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::from_amplitudes(amps)
    }

    /// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    pub fn from_bloch(theta: RationalAngle, phi: RationalAngle) -> Self {
        let (s, c) = (theta.radians() / 2.0).sin_cos();
        StateVector { num_qubits: 1, amps: vec![C64::new(c, 0.0), C64::from_polar(s, phi.radians())] }
    }

    /// Single-qubit computational basis state.
    pub fn basis_state(bit: u8) -> Self {
        let mut amps = vec![ZERO; 2];
        amps[(bit & 1) as usize] = ONE;
        StateVector { num_qubits: 1, amps }
    }

    pub fn plus() -> Self {
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        StateVector { num_qubits: 1, amps: vec![C64::new(s2, 0.0); 2] }
    }

    pub fn minus() -> Self {
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        StateVector { num_qubits: 1, amps: vec![C64::new(s2, 0.0), C64::new(-s2, 0.0)] }
    }

    /// `|±_ω⟩ = R_Z(ω)|±⟩`; `sign` 0 gives `+`.
    pub fn plus_omega(omega: RationalAngle, sign: u8) -> Self {
        let mut sv = if sign == 0 { Self::plus() } else { Self::minus() };
        sv.apply(Gate::Rz(omega), 0).expect("single qubit");
        sv
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_qubit(&self, qubit: usize) -> Result<(), StateError> {
        if qubit < self.num_qubits {
            Ok(())
        } else {
            Err(StateError::QubitIndex { qubit, n: self.num_qubits })
        }
    }

    /// Applies an arbitrary 2×2 matrix to one qubit.
    pub fn apply_matrix(&mut self, m: &Matrix2, qubit: usize) -> Result<(), StateError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let j = i | bit;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    /// Single-qubit gate; CZ is rejected here.
    pub fn apply(&mut self, gate: Gate, qubit: usize) -> Result<(), StateError> {
        let m = gate.matrix().ok_or(StateError::NotSingleQubit)?;
        self.apply_matrix(&m, qubit)
    }

    /// Negates every amplitude whose index has both bits set.
    pub fn apply_cz(&mut self, q1: usize, q2: usize) -> Result<(), StateError> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(StateError::SameQubit(q1));
        }
        let mask = (1usize << q1) | (1usize << q2);
        self.amps.iter_mut().enumerate().filter(|(i, _)| i & mask == mask).for_each(|(_, a)| *a = -*a);
        Ok(())
    }

    /// `self ⊗ other`, with `self` on the low qubit indices.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector, StateError> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(StateError::QubitCount(n));
        }
        let lo = self.amps.len();
        let mut amps = vec![ZERO; lo * other.amps.len()];
        for (h, b) in other.amps.iter().enumerate() {
            for (l, a) in self.amps.iter().enumerate() {
                amps[h * lo + l] = a * b;
            }
        }
        Ok(StateVector { num_qubits: n, amps })
    }

    /// Born probability of reading 1 on `qubit` in the computational basis.
    pub fn probability_one(&self, qubit: usize) -> Result<f64, StateError> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        Ok(self.amps.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum())
    }

    /// Keeps only the `bit` branch of `qubit` and renormalizes. Returns the
    /// branch probability.
    pub fn project(&mut self, qubit: usize, bit: u8) -> Result<f64, StateError> {
        let p1 = self.probability_one(qubit)?;
        let p = if bit == 1 { p1 } else { 1.0 - p1 };
        if p <= 1e-300 {
            return Err(StateError::ImpossibleBranch);
        }
        let mask = 1usize << qubit;
        let keep = if bit == 1 { mask } else { 0 };
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & mask == keep {
                *a *= scale;
            } else {
                *a = ZERO;
            }
        }
        Ok(p)
    }

    /// Born-rule measurement in the computational basis: outcome 1 iff a
    /// uniform draw `u < P(1)`.
    pub fn measure_computational<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        rng: &mut R,
    ) -> Result<MeasurementOutcome, StateError> {
        let p1 = self.probability_one(qubit)?;
        let u: f64 = rng.gen();
        let bit = u8::from(u < p1);
        self.project(qubit, bit)?;
        Ok(MeasurementOutcome { bit, basis: Basis::Computational, qubit })
    }

    /// Measurement in any protocol basis. The measured qubit is left in the
    /// corresponding basis state (pre-rotation, computational measurement,
    /// inverse rotation).
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<MeasurementOutcome, StateError> {
        if let Some(g) = basis.pre_rotation() {
            self.apply(g, qubit)?;
        }
        let out = self.measure_computational(qubit, rng)?;
        if let Some(g) = basis.post_rotation() {
            self.apply(g, qubit)?;
        }
        Ok(MeasurementOutcome { basis, ..out })
    }

    /// Measurement onto `{|0_{−ω}⟩, |1_{−ω}⟩}`.
    pub fn measure_rotated<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        omega: RationalAngle,
        rng: &mut R,
    ) -> Result<MeasurementOutcome, StateError> {
        self.measure(qubit, Basis::Rotated(omega), rng)
    }

    /// Measurement onto `{|+⟩, |−⟩}`; bit 0 is `|+⟩`.
    pub fn measure_plus_minus<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        rng: &mut R,
    ) -> Result<MeasurementOutcome, StateError> {
        self.measure(qubit, Basis::PlusMinus, rng)
    }

    /// Forces the `bit` outcome of a measurement in `basis`, like
    /// [`StateVector::measure`] but post-selected. Returns the branch
    /// probability.
    pub fn project_in_basis(&mut self, qubit: usize, basis: Basis, bit: u8) -> Result<f64, StateError> {
        if let Some(g) = basis.pre_rotation() {
            self.apply(g, qubit)?;
        }
        let p = self.project(qubit, bit)?;
        if let Some(g) = basis.post_rotation() {
            self.apply(g, qubit)?;
        }
        Ok(p)
    }

    /// Measures `qubit` in `basis` and removes it from the register.
    pub fn measure_and_discard<R: Rng + ?Sized>(
        mut self,
        qubit: usize,
        basis: Basis,
        rng: &mut R,
    ) -> Result<(MeasurementOutcome, StateVector), StateError> {
        if let Some(g) = basis.pre_rotation() {
            self.apply(g, qubit)?;
        }
        let out = self.measure_computational(qubit, rng)?;
        let rest = self.discard_qubit(qubit)?;
        Ok((MeasurementOutcome { basis, ..out }, rest))
    }

    /// Post-selected counterpart of [`StateVector::measure_and_discard`].
    pub fn project_and_discard(
        mut self,
        qubit: usize,
        basis: Basis,
        bit: u8,
    ) -> Result<(f64, StateVector), StateError> {
        if let Some(g) = basis.pre_rotation() {
            self.apply(g, qubit)?;
        }
        let p = self.project(qubit, bit)?;
        Ok((p, self.discard_qubit(qubit)?))
    }

    /// Drops a qubit that sits in a computational basis state, product with
    /// the rest of the register.
    pub fn discard_qubit(&self, qubit: usize) -> Result<StateVector, StateError> {
        self.check_qubit(qubit)?;
        if self.num_qubits == 1 {
            return Err(StateError::QubitCount(0));
        }
        let mask = 1usize << qubit;
        let weight = |b: usize| -> f64 {
            self.amps.iter().enumerate().filter(|(i, _)| i & mask == b).map(|(_, a)| a.norm_sqr()).sum()
        };
        let (w0, w1) = (weight(0), weight(mask));
        let (keep, residual) = if w0 >= w1 { (0, w1) } else { (mask, w0) };
        if residual.sqrt() > 1e-10 {
            return Err(StateError::Entangled { qubit, residual: residual.sqrt() });
        }
        let kept: Vec<C64> = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == keep)
            .map(|(_, a)| *a)
            .collect();
        let norm = kept.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        Ok(StateVector { num_qubits: self.num_qubits - 1, amps: kept.into_iter().map(|a| a / norm).collect() })
    }

    /// Text dump, one `index re im` line per amplitude, 15 significant digits.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, a) in self.amps.iter().enumerate() {
            writeln!(out, "{i} {:.14e} {:.14e}", a.re, a.im).expect("writing to a String");
        }
        out
    }

    /// Parses the [`StateVector::dump`] format.
    pub fn parse_dump(text: &str) -> Result<StateVector, StateError> {
        let mut amps = Vec::new();
        for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let err = |msg: &str| StateError::Dump { line: lineno + 1, msg: msg.to_string() };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err("expected `index re im`"));
            }
            let idx: usize = fields[0].parse().map_err(|_| err("bad index"))?;
            if idx != amps.len() {
                return Err(err("indices must be consecutive from 0"));
            }
            let re: f64 = fields[1].parse().map_err(|_| err("bad real part"))?;
            let im: f64 = fields[2].parse().map_err(|_| err("bad imaginary part"))?;
            amps.push(C64::new(re, im));
        }
        StateVector::from_amplitudes(amps)
    }
}

/// `|⟨a|b⟩|`, blind to global phase.
pub fn fidelity_up_to_phase(a: &StateVector, b: &StateVector) -> Result<f64, StateError> {
    if a.num_qubits != b.num_qubits {
        return Err(StateError::DimensionMismatch(a.num_qubits, b.num_qubits));
    }
    let overlap: C64 = a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum();
    Ok(overlap.norm().min(1.0))
}

/// Simple undirected graph on vertices `0..n`, one qubit per vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl ClusterGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, StateError> {
        if !(1..=MAX_QUBITS).contains(&n) {
            return Err(StateError::QubitCount(n));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(StateError::BadVertex { vertex: v, n });
                }
            }
            if a == b {
                return Err(StateError::SameQubit(a));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(ClusterGraph { n, edges: set })
    }

    /// Path `0 - 1 - … - (n−1)`.
    pub fn path(n: usize) -> Result<Self, StateError> {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        Self::new(n, &edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbors(&self, a: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(x, y)| if x == a { Some(y) } else if y == a { Some(x) } else { None })
            .collect()
    }
}

/// `H` on every vertex, then `CZ` per edge, starting from `|0…0⟩`.
pub fn build_cluster(graph: &ClusterGraph) -> StateVector {
    let mut sv = StateVector::new(graph.num_vertices()).expect("graph size validated");
    for v in 0..graph.num_vertices() {
        sv.apply(Gate::H, v).expect("vertex in range");
    }
    for (a, b) in graph.edges() {
        sv.apply_cz(a, b).expect("edge validated");
    }
    sv
}

/// `‖K_a|C⟩ − |C⟩‖` with `K_a = X_a ⊗ Z_{N(a)}`.
pub fn stabilizer_residual(state: &StateVector, graph: &ClusterGraph, a: usize) -> Result<f64, StateError> {
    if a >= graph.num_vertices() {
        return Err(StateError::BadVertex { vertex: a, n: graph.num_vertices() });
    }
    if state.num_qubits() != graph.num_vertices() {
        return Err(StateError::DimensionMismatch(state.num_qubits(), graph.num_vertices()));
    }
    let mut k = state.clone();
    k.apply(Gate::X, a)?;
    for b in graph.neighbors(a) {
        k.apply(Gate::Z, b)?;
    }
    Ok(k.amps.iter().zip(&state.amps).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt())
}

pub fn stabilizer_check(state: &StateVector, graph: &ClusterGraph, a: usize) -> bool {
    stabilizer_residual(state, graph, a).is_ok_and(|r| r < 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pi(n: i64, d: i64) -> RationalAngle {
        RationalAngle::from_pi_fraction(n, d).unwrap()
    }

    fn close(a: &StateVector, b: &[C64], tol: f64) -> bool {
        a.amplitudes().iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn new_state_is_all_zero() {
        assert_eq!(StateVector::new(2).unwrap().amplitudes(), &[ONE, ZERO, ZERO, ZERO]);
        assert_eq!(StateVector::new(1).unwrap().amplitudes(), &[ONE, ZERO]);
        let s5 = StateVector::new(5).unwrap();
        assert_eq!(s5.amplitudes()[0], ONE);
        assert!(s5.amplitudes()[1..].iter().all(|a| *a == ZERO));
        assert!(StateVector::new(0).is_err());
        assert!(StateVector::new(13).is_err());
    }

    #[test]
    fn hadamard_and_ry_on_zero() {
        let mut s = StateVector::new(1).unwrap();
        s.apply(Gate::H, 0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(&s, &[c(h), c(h)], 1e-15));

        let mut s = StateVector::new(1).unwrap();
        s.apply(Gate::Ry(pi(2, 3)), 0).unwrap();
        assert!(close(&s, &[c(0.5), c(3f64.sqrt() / 2.0)], 1e-15));
    }

    #[test]
    fn rx_full_turn_is_minus_identity() {
        let phi = StateVector::from_bloch(pi(3, 5), pi(1, 3));
        let mut s = phi.clone();
        s.apply(Gate::Rx(RationalAngle::TURN), 0).unwrap();
        let neg: Vec<C64> = phi.amplitudes().iter().map(|a| -a).collect();
        assert!(close(&s, &neg, 1e-15));
    }

    #[test]
    fn cz_is_rejected_as_single_qubit_gate() {
        let mut s = StateVector::new(2).unwrap();
        assert_eq!(s.apply(Gate::Cz, 0), Err(StateError::NotSingleQubit));
        assert_eq!(s.apply_cz(1, 1), Err(StateError::SameQubit(1)));
        assert!(s.apply(Gate::H, 2).is_err());
    }

    #[test]
    fn cz_on_plus_plus_and_symmetry() {
        let mut s = StateVector::plus().tensor(&StateVector::plus()).unwrap();
        s.apply_cz(0, 1).unwrap();
        assert!(close(&s, &[c(0.5), c(0.5), c(0.5), c(-0.5)], 1e-15));

        let mut z = StateVector::new(2).unwrap();
        z.apply_cz(0, 1).unwrap();
        assert_eq!(z.amplitudes(), StateVector::new(2).unwrap().amplitudes());

        let base = StateVector::from_bloch(pi(1, 3), pi(1, 5)).tensor(&StateVector::from_bloch(pi(2, 7), pi(0, 1))).unwrap();
        let (mut a, mut b) = (base.clone(), base);
        a.apply_cz(0, 1).unwrap();
        b.apply_cz(1, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cluster_builds_and_satisfies_stabilizers() {
        let two = build_cluster(&ClusterGraph::path(2).unwrap());
        assert!(close(&two, &[c(0.5), c(0.5), c(0.5), c(-0.5)], 1e-15));
        let one = build_cluster(&ClusterGraph::new(1, &[]).unwrap());
        assert!(fidelity_up_to_phase(&one, &StateVector::plus()).unwrap() > 1.0 - 1e-15);
        for n in 2..=4 {
            let g = ClusterGraph::path(n).unwrap();
            let s = build_cluster(&g);
            for a in 0..n {
                assert!(stabilizer_check(&s, &g, a), "n={n} a={a}");
            }
        }
        let g = ClusterGraph::path(2).unwrap();
        assert!(!stabilizer_check(&StateVector::new(2).unwrap(), &g, 0));
        assert!(!stabilizer_check(&StateVector::new(2).unwrap(), &g, 1));

        let empty = ClusterGraph::new(3, &[]).unwrap();
        let plus3 = build_cluster(&empty);
        assert!((0..3).all(|a| stabilizer_check(&plus3, &empty, a)));
    }

    #[test]
    fn graph_validation() {
        assert!(ClusterGraph::new(2, &[(0, 2)]).is_err());
        assert!(ClusterGraph::new(2, &[(1, 1)]).is_err());
        let g = ClusterGraph::new(3, &[(0, 1), (1, 0), (2, 1)]).unwrap();
        assert_eq!(g.edges().count(), 2);
        assert_eq!(g.neighbors(1), vec![0, 2]);
    }

    #[test]
    fn computational_measurement_of_basis_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let mut z = StateVector::basis_state(0);
            assert_eq!(z.measure_computational(0, &mut rng).unwrap().bit, 0);
            let mut o = StateVector::basis_state(1);
            assert_eq!(o.measure_computational(0, &mut rng).unwrap().bit, 1);
        }
    }

    #[test]
    fn computational_measurement_of_plus_is_fair() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ones: u32 = (0..10_000)
            .map(|_| StateVector::plus().measure_computational(0, &mut rng).unwrap().bit as u32)
            .sum();
        let freq = ones as f64 / 10_000.0;
        assert!((freq - 0.5).abs() < 0.02, "{freq}");
    }

    #[test]
    fn plus_minus_measurement() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            assert_eq!(StateVector::plus().measure_plus_minus(0, &mut rng).unwrap().bit, 0);
            assert_eq!(StateVector::minus().measure_plus_minus(0, &mut rng).unwrap().bit, 1);
        }
        let mut s = StateVector::minus();
        s.measure_plus_minus(0, &mut rng).unwrap();
        assert!(fidelity_up_to_phase(&s, &StateVector::minus()).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn rotated_measurement_with_zero_angle_is_computational() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut s = StateVector::basis_state(0);
            assert_eq!(s.measure_rotated(0, RationalAngle::ZERO, &mut rng).unwrap().bit, 0);
        }
    }

    #[test]
    fn rotated_measurement_leaves_basis_state() {
        let omega = pi(2, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = StateVector::plus();
        let out = s.measure_rotated(0, omega, &mut rng).unwrap();
        let mut expect = StateVector::basis_state(out.bit);
        expect.apply(Gate::Rx(-omega), 0).unwrap();
        assert!(fidelity_up_to_phase(&s, &expect).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn rotated_measurement_on_cluster_teleports_plus_omega() {
        let omega = pi(2, 7);
        for bit in 0..2u8 {
            let c = build_cluster(&ClusterGraph::path(2).unwrap());
            let (p, rest) = c.project_and_discard(0, Basis::Rotated(omega), bit).unwrap();
            assert!((p - 0.5).abs() < 1e-12);
            let expect = StateVector::plus_omega(omega, bit);
            assert!(fidelity_up_to_phase(&rest, &expect).unwrap() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn fidelity_is_phase_blind() {
        let phi = StateVector::from_bloch(pi(2, 5), pi(1, 9));
        let rotated: Vec<C64> = phi.amplitudes().iter().map(|a| a * C64::from_polar(1.0, 0.7)).collect();
        let other = StateVector::from_amplitudes(rotated).unwrap();
        assert!((fidelity_up_to_phase(&phi, &other).unwrap() - 1.0).abs() < 1e-14);
        let f = fidelity_up_to_phase(&StateVector::basis_state(0), &StateVector::basis_state(1)).unwrap();
        assert_eq!(f, 0.0);
        assert!(fidelity_up_to_phase(&phi, &StateVector::new(2).unwrap()).is_err());
    }

    #[test]
    fn discard_product_qubits() {
        let phi = StateVector::from_bloch(pi(3, 4), pi(1, 6));
        for bit in 0..2u8 {
            let joined = StateVector::basis_state(bit).tensor(&phi).unwrap();
            let rest = joined.discard_qubit(0).unwrap();
            assert!(fidelity_up_to_phase(&rest, &phi).unwrap() > 1.0 - 1e-14);
        }
        let cluster = build_cluster(&ClusterGraph::path(2).unwrap());
        assert!(matches!(cluster.discard_qubit(0), Err(StateError::Entangled { .. })));
    }

    #[test]
    fn discard_after_measurement_gives_branch_state() {
        // computational measurement of qubit 0 of CZ|+>|+> leaves |+> or |->
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut c = build_cluster(&ClusterGraph::path(2).unwrap());
        let out = c.measure_computational(0, &mut rng).unwrap();
        let rest = c.discard_qubit(0).unwrap();
        let expect = if out.bit == 0 { StateVector::plus() } else { StateVector::minus() };
        assert!(fidelity_up_to_phase(&rest, &expect).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn dump_round_trips() {
        let s = build_cluster(&ClusterGraph::path(3).unwrap());
        let text = s.dump();
        assert_eq!(text.lines().count(), 8);
        assert!(text.starts_with("0 3.53553390593274e-1 0.00000000000000e0\n"));
        let back = StateVector::parse_dump(&text).unwrap();
        assert!(close(&back, s.amplitudes(), 1e-14));
        assert!(StateVector::parse_dump("0 1 0\n2 0 0\n").is_err());
    }

    #[test]
    fn same_seed_same_outcomes() {
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64)
                .map(|_| StateVector::plus().measure_computational(0, &mut rng).unwrap().bit)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
    }

    proptest! {
        #[test]
        fn norm_is_preserved(ops in proptest::collection::vec((0u8..8, 0usize..3, -50i64..50, 1i64..40, 0usize..3), 1..40)) {
            let mut s = StateVector::new(3).unwrap();
            for (kind, q, n, d, q2) in ops {
                let a = RationalAngle::new(n, d).unwrap();
                let g = match kind { 0 => Gate::H, 1 => Gate::X, 2 => Gate::Z, 3 => Gate::I, 4 => Gate::Rx(a), 5 => Gate::Ry(a), 6 => Gate::Rz(a), _ => Gate::Cz };
                if g == Gate::Cz {
                    if q != q2 { s.apply_cz(q, q2).unwrap(); }
                } else {
                    s.apply(g, q).unwrap();
                }
                prop_assert!((s.norm() - 1.0).abs() < NORM_TOL);
            }
        }
    }
}
