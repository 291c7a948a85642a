//! Prime-field share arithmetic: the dealer polynomial, share evaluation,
//! Lagrange recombination weights and the rotation angles derived from them.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::RationalAngle;
use crate::error::FieldError;

/// Element of GF(q), always stored reduced into `[0, q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement(u64);

impl FieldElement {
    pub fn value(self) -> u64 {
        self.0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A verified prime modulus `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeModulus {
    q: u64,
}

/// Smallest nontrivial factor of `q` by trial division, `None` when prime.
fn smallest_factor(q: u64) -> Option<u64> {
    let mut d = 2u64;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return Some(d);
        }
        d += 1;
    }
    None
}

impl PrimeModulus {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        if q < 2 {
            return Err(FieldError::ModulusTooSmall(q));
        }
        // q stays tiny (desk-scale n), products of two residues fit in u64
        if q >= 1 << 31 {
            return Err(FieldError::NotReduced { value: q, q: 1 << 31 });
        }
        match smallest_factor(q) {
            Some(factor) => Err(FieldError::NotPrime { q, factor }),
            None => Ok(PrimeModulus { q }),
        }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// Reduce any integer into the field.
    pub fn reduce(&self, v: i64) -> FieldElement {
        FieldElement(v.rem_euclid(self.q as i64) as u64)
    }

    /// Accept `v` only if it is already in `[0, q)`.
    pub fn element(&self, v: u64) -> Result<FieldElement, FieldError> {
        if v < self.q {
            Ok(FieldElement(v))
        } else {
            Err(FieldError::NotReduced { value: v, q: self.q })
        }
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement(0)
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement((a.0 + b.0) % self.q)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement((a.0 + self.q - b.0) % self.q)
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        FieldElement((self.q - a.0) % self.q)
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(a.0 * b.0 % self.q)
    }

    pub fn pow(&self, base: FieldElement, mut exp: u64) -> FieldElement {
        let (mut acc, mut b) = (1u64 % self.q, base.0);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * b % self.q;
            }
            b = b * b % self.q;
            exp >>= 1;
        }
        FieldElement(acc)
    }

    /// Multiplicative inverse by Fermat; `None` for zero.
    pub fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        (a.0 != 0).then(|| self.pow(a, self.q - 2))
    }

    /// Uniform element of `[0, q)`.
    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement(rng.gen_range(0..self.q))
    }

    /// Uniform element of `[1, q)`.
    pub fn random_nonzero<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement(rng.gen_range(1..self.q))
    }
}

/// Shorthand for [`PrimeModulus::new`].
pub fn validate_prime(q: u64) -> Result<PrimeModulus, FieldError> {
    PrimeModulus::new(q)
}

/// `f(x) = a_0 + a_1 x + … + a_{t-1} x^{t-1}` with `a_0 = q − s_D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DealerPolynomial {
    modulus: PrimeModulus,
    dealer_secret: FieldElement,
    coefficients: Vec<FieldElement>,
}

impl DealerPolynomial {
    /// Builds the polynomial from the dealer number `s_D` and the `t − 1`
    /// higher coefficients. The threshold is `high_coeffs.len() + 1`.
    pub fn new(
        dealer_secret: FieldElement,
        high_coeffs: &[FieldElement],
        modulus: PrimeModulus,
    ) -> Result<Self, FieldError> {
        for v in std::iter::once(&dealer_secret).chain(high_coeffs) {
            modulus.element(v.value())?;
        }
        let mut coefficients = Vec::with_capacity(high_coeffs.len() + 1);
        coefficients.push(modulus.neg(dealer_secret));
        coefficients.extend_from_slice(high_coeffs);
        Ok(DealerPolynomial { modulus, dealer_secret, coefficients })
    }

    /// Draws `s_D` and `a_1..a_{t-1}` uniformly. `s_D = 0` would leave the
    /// secrets unencrypted, so it is excluded here.
    pub fn random<R: Rng + ?Sized>(threshold: usize, modulus: PrimeModulus, rng: &mut R) -> Self {
        let s = modulus.random_nonzero(rng);
        let high: Vec<_> = (1..threshold).map(|_| modulus.random(rng)).collect();
        DealerPolynomial::new(s, &high, modulus).expect("sampled values are reduced")
    }

    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    pub fn dealer_secret(&self) -> FieldElement {
        self.dealer_secret
    }

    pub fn coefficients(&self) -> &[FieldElement] {
        &self.coefficients
    }

    pub fn threshold(&self) -> usize {
        self.coefficients.len()
    }

    /// Horner evaluation mod q.
    pub fn eval(&self, x: FieldElement) -> FieldElement {
        let m = self.modulus;
        self.coefficients
            .iter()
            .rev()
            .fold(m.zero(), |acc, &a| m.add(m.mul(acc, x), a))
    }
}

impl fmt::Display for DealerPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coefficients
            .iter()
            .enumerate()
            .filter(|(i, a)| *i == 0 || a.value() != 0)
            .map(|(i, a)| match (i, a.value()) {
                (0, v) => v.to_string(),
                (1, 1) => "x".to_string(),
                (1, v) => format!("{v}x"),
                (i, 1) => format!("x^{i}"),
                (i, v) => format!("{v}x^{i}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

pub fn make_polynomial(
    dealer_secret: FieldElement,
    high_coeffs: &[FieldElement],
    modulus: PrimeModulus,
) -> Result<DealerPolynomial, FieldError> {
    DealerPolynomial::new(dealer_secret, high_coeffs, modulus)
}

pub fn eval_share(poly: &DealerPolynomial, x: FieldElement) -> FieldElement {
    poly.eval(x)
}

/// Participant label, e.g. `Alice` or `P3`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParticipantId(pub String);

impl ParticipantId {
    pub fn new(name: impl Into<String>) -> Self {
        ParticipantId(name.into())
    }
}

impl fmt::Display for ParticipantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One user's public abscissa and private share `f(x_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareRecord {
    pub participant: ParticipantId,
    pub x: FieldElement,
    pub share: FieldElement,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LagrangeWeight {
    pub participant: ParticipantId,
    pub c: FieldElement,
}

fn check_abscissas(records: &[ShareRecord]) -> Result<(), FieldError> {
    let mut seen = HashSet::new();
    for r in records {
        if r.x.value() == 0 {
            return Err(FieldError::ZeroAbscissa);
        }
        if !seen.insert(r.x) {
            return Err(FieldError::DuplicateAbscissa(r.x.value()));
        }
    }
    Ok(())
}

/// `c_l = f(x_l) · Π_{v≠l} (−x_v)/(x_l − x_v) mod q` over the participating set.
pub fn lagrange_weight(
    participating: &[ShareRecord],
    l: usize,
    modulus: PrimeModulus,
) -> Result<LagrangeWeight, FieldError> {
    check_abscissas(participating)?;
    let me = participating
        .get(l)
        .ok_or(FieldError::IndexOutOfRange { index: l, len: participating.len() })?;
    let m = modulus;
    let c = participating
        .iter()
        .enumerate()
        .filter(|(v, _)| *v != l)
        .fold(me.share, |acc, (_, other)| {
            let diff = m.sub(me.x, other.x);
            let inv = m.inv(diff).expect("distinct abscissas in a prime field");
            m.mul(acc, m.mul(m.neg(other.x), inv))
        });
    Ok(LagrangeWeight { participant: me.participant.clone(), c })
}

/// Weights for every member of the participating set, in order.
pub fn lagrange_weights(
    participating: &[ShareRecord],
    modulus: PrimeModulus,
) -> Result<Vec<LagrangeWeight>, FieldError> {
    (0..participating.len()).map(|l| lagrange_weight(participating, l, modulus)).collect()
}

/// `(s_D + Σ c_l) mod q == 0`.
pub fn verify_zero_sum(
    dealer_secret: FieldElement,
    weights: &[LagrangeWeight],
    modulus: PrimeModulus,
) -> bool {
    weights.iter().fold(dealer_secret, |acc, w| modulus.add(acc, w.c)).value() == 0
}

/// `w · (value / q) · 2π`, kept exact.
pub fn rotation_angle(
    w: u64,
    value: FieldElement,
    modulus: PrimeModulus,
) -> Result<RationalAngle, FieldError> {
    let q = modulus.q();
    if w == 0 || w >= q {
        return Err(FieldError::WeightOutOfRange { w, q });
    }
    modulus.element(value.value())?;
    Ok(RationalAngle::new((w * value.value()) as i64, q as i64).expect("q > 0"))
}

/// Returns `r` with `γ_D + Σ γ_l = 2πr`, or an error when the exact sum is
/// not a whole number of turns.
pub fn check_angle_sum(
    gamma_dealer: RationalAngle,
    gammas: &[RationalAngle],
) -> Result<i64, FieldError> {
    let total = gamma_dealer + gammas.iter().copied().sum::<RationalAngle>();
    total.whole_turns().ok_or(FieldError::NotWholeTurns(total))
}
