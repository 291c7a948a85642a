//! Operator identities the reconstruction chain relies on, evaluated
//! numerically. Each function returns the largest entry-wise deviation.

use crate::angle::RationalAngle;
use crate::statevector::{build_cluster, ClusterGraph, Gate, Matrix2, StateVector, C64};

pub fn mat_mul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn max_entry_diff(a: &Matrix2, b: &Matrix2) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn m(g: Gate) -> Matrix2 {
    g.matrix().expect("single-qubit gate")
}

/// Residuals of `ZH = HX`, `XH = HZ`, `R_Z(φ)H = H R_X(φ)`, `R_Z(φ)X = X R_Z(−φ)`.
pub fn commutation_residuals(phi: RationalAngle) -> [f64; 4] {
    let (h, x, z) = (m(Gate::H), m(Gate::X), m(Gate::Z));
    [
        max_entry_diff(&mat_mul(&z, &h), &mat_mul(&h, &x)),
        max_entry_diff(&mat_mul(&x, &h), &mat_mul(&h, &z)),
        max_entry_diff(&mat_mul(&m(Gate::Rz(phi)), &h), &mat_mul(&h, &m(Gate::Rx(phi)))),
        max_entry_diff(&mat_mul(&m(Gate::Rz(phi)), &x), &mat_mul(&x, &m(Gate::Rz(-phi)))),
    ]
}

/// `R_Z(ω)|±⟩` against `(e^{−iω/2}|0⟩ ± e^{iω/2}|1⟩)/√2`.
pub fn plus_omega_residual(omega: RationalAngle) -> f64 {
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let h = omega.radians() / 2.0;
    (0..2u8)
        .map(|sign| {
            let sv = StateVector::plus_omega(omega, sign);
            let pm = if sign == 0 { 1.0 } else { -1.0 };
            let expect = [C64::from_polar(s2, -h), C64::from_polar(pm * s2, h)];
            sv.amplitudes().iter().zip(expect).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// `CZ|+⟩|+⟩` against `(|0_{−δ}⟩|+_δ⟩ + |1_{−δ}⟩|−_δ⟩)/√2`, with the first
/// particle on qubit 0.
pub fn cluster_decomposition_residual(delta: RationalAngle) -> f64 {
    let cluster = build_cluster(&ClusterGraph::path(2).expect("two vertices"));
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut sum = vec![C64::new(0.0, 0.0); 4];
    for k in 0..2u8 {
        let mut first = StateVector::basis_state(k);
        first.apply(Gate::Rx(-delta), 0).expect("single qubit");
        let term = first.tensor(&StateVector::plus_omega(delta, k)).expect("two qubits");
        sum.iter_mut().zip(term.amplitudes()).for_each(|(s, a)| *s += a * s2);
    }
    cluster.amplitudes().iter().zip(&sum).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_hold_for_example_angles() {
        for (n, d) in [(2, 7), (8, 7), (24, 7), (0, 1), (-3, 5)] {
            let a = RationalAngle::from_pi_fraction(n, d).unwrap();
            assert!(commutation_residuals(a).iter().all(|r| *r < 1e-12));
            assert!(plus_omega_residual(a) < 1e-12);
            assert!(cluster_decomposition_residual(a) < 1e-12);
        }
    }

    #[test]
    fn residuals_detect_a_wrong_identity() {
        // R_Z(φ)X = X R_Z(φ) is false for generic φ
        let phi = RationalAngle::from_pi_fraction(1, 3).unwrap();
        let x = m(Gate::X);
        let wrong = max_entry_diff(&mat_mul(&m(Gate::Rz(phi)), &x), &mat_mul(&x, &m(Gate::Rz(phi))));
        assert!(wrong > 0.1);
    }
}
