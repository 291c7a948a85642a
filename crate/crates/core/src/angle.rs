//! Exact rotation angles stored as rational multiples of a full turn.
//!
//! A [`RationalAngle`] with numerator `n` and denominator `d` denotes the
//! angle `(n / d) · 2π`. Values are never reduced modulo 2π: `R_X` has period
//! 4π, so `2π` and `0` are different operators (they differ by a global phase
//! of −1) and the integer-turn check on the summed angles needs the raw value.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::AngleError;

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Angle `(num / den) · 2π` in lowest terms, `den > 0`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawAngle", into = "RawAngle")]
pub struct RationalAngle {
    num: i64,
    den: i64,
}

#[derive(Serialize, Deserialize)]
struct RawAngle {
    num: i64,
    den: i64,
}

impl TryFrom<RawAngle> for RationalAngle {
    type Error = AngleError;
    fn try_from(raw: RawAngle) -> Result<Self, Self::Error> {
        RationalAngle::new(raw.num, raw.den)
    }
}

impl From<RationalAngle> for RawAngle {
    fn from(a: RationalAngle) -> Self {
        RawAngle { num: a.num, den: a.den }
    }
}

impl RationalAngle {
    pub const ZERO: RationalAngle = RationalAngle { num: 0, den: 1 };
    /// One full turn, 2π.
    pub const TURN: RationalAngle = RationalAngle { num: 1, den: 1 };

    /// `(num / den) · 2π`, reduced. Fails on a zero denominator.
    pub fn new(num: i64, den: i64) -> Result<Self, AngleError> {
        if den == 0 {
            return Err(AngleError::ZeroDenominator);
        }
        Self::from_i128(num as i128, den as i128)
    }

    /// `(num / den) · π`. Convenient for writing angles the way they are
    /// usually quoted, e.g. `from_pi_fraction(8, 7)` for 8π/7.
    pub fn from_pi_fraction(num: i64, den: i64) -> Result<Self, AngleError> {
        if den == 0 {
            return Err(AngleError::ZeroDenominator);
        }
        Self::from_i128(num as i128, 2 * den as i128)
    }

    /// A whole number of turns, `k · 2π`.
    pub fn turns(k: i64) -> Self {
        RationalAngle { num: k, den: 1 }
    }

    fn from_i128(num: i128, den: i128) -> Result<Self, AngleError> {
        let (mut num, mut den) = (num, den);
        if den < 0 {
            num = -num;
            den = -den;
        }
        let g = gcd(num, den);
        let (num, den) = if g == 0 { (0, 1) } else { (num / g, den / g) };
        match (i64::try_from(num), i64::try_from(den)) {
            (Ok(num), Ok(den)) => Ok(RationalAngle { num, den }),
            _ => Err(AngleError::Overflow),
        }
    }

    fn checked(num: i128, den: i128) -> Self {
        Self::from_i128(num, den).expect("rational angle overflow")
    }

    /// Numerator of the turn fraction.
    pub fn numerator(&self) -> i64 {
        self.num
    }

    /// Denominator of the turn fraction (always positive).
    pub fn denominator(&self) -> i64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// `Some(k)` when the angle is exactly `k · 2π`.
    pub fn whole_turns(&self) -> Option<i64> {
        (self.den == 1).then_some(self.num)
    }

    /// Representative in `[0, 2π)`.
    pub fn rem_turn(&self) -> Self {
        RationalAngle { num: self.num.rem_euclid(self.den), den: self.den }
    }

    /// Floating-point value in radians. Only gate construction should need this.
    pub fn radians(&self) -> f64 {
        std::f64::consts::TAU * (self.num as f64 / self.den as f64)
    }

    /// The angle as a multiple of π, `(num, den)` reduced, for display and QASM.
    pub fn pi_fraction(&self) -> (i64, i64) {
        let a = Self::checked(2 * self.num as i128, self.den as i128);
        (a.num, a.den)
    }

    /// Parse `"8π/7"`, `"-pi/7"`, `"2*pi"`, `"0"` style angle expressions.
    pub fn parse_pi_expr(s: &str) -> Result<Self, AngleError> {
        let bad = || AngleError::Parse(s.to_string());
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let compact = compact.replace('π', "pi");
        if compact.is_empty() {
            return Err(bad());
        }
        let (body, den) = match compact.rsplit_once('/') {
            Some((b, d)) => (b.to_string(), d.parse::<i64>().map_err(|_| bad())?),
            None => (compact.clone(), 1),
        };
        let num = if let Some(coeff) = body.strip_suffix("pi") {
            let coeff = coeff.strip_suffix('*').unwrap_or(coeff);
            match coeff {
                "" | "+" => 1,
                "-" => -1,
                c => c.parse::<i64>().map_err(|_| bad())?,
            }
        } else {
            // bare integer: only zero is meaningful without a π factor
            let v = body.parse::<i64>().map_err(|_| bad())?;
            if v != 0 {
                return Err(bad());
            }
            0
        };
        Self::from_pi_fraction(num, den)
    }
}

impl Default for RationalAngle {
    fn default() -> Self {
        Self::ZERO
    }
}

impl Add for RationalAngle {
    type Output = RationalAngle;
    fn add(self, rhs: Self) -> Self {
        let (a, b, c, d) = (self.num as i128, self.den as i128, rhs.num as i128, rhs.den as i128);
        Self::checked(a * d + c * b, b * d)
    }
}

impl Sub for RationalAngle {
    type Output = RationalAngle;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for RationalAngle {
    type Output = RationalAngle;
    fn neg(self) -> Self {
        RationalAngle { num: -self.num, den: self.den }
    }
}

impl Mul<i64> for RationalAngle {
    type Output = RationalAngle;
    fn mul(self, k: i64) -> Self {
        Self::checked(self.num as i128 * k as i128, self.den as i128)
    }
}

impl std::iter::Sum for RationalAngle {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |acc, a| acc + a)
    }
}

impl PartialOrd for RationalAngle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RationalAngle {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl fmt::Display for RationalAngle {
    /// Multiples of π: `8π/7`, `-π/7`, `2π`, `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = self.pi_fraction();
        let head = match n {
            0 => return write!(f, "0"),
            1 => "π".to_string(),
            -1 => "-π".to_string(),
            n => format!("{n}π"),
        };
        if d == 1 {
            write!(f, "{head}")
        } else {
            write!(f, "{head}/{d}")
        }
    }
}

impl fmt::Debug for RationalAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalAngle({}/{} turn = {})", self.num, self.den, self)
    }
}
