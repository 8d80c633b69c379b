//! Arithmetic in the field extension Q(√2).
//!
//! The normalization factors |I|^{-1/2} of Walsh wave packets are powers
//! 2^{k/2}, so every inner product computed by this crate stays inside
//! Q(√2). Elements are kept as a pair of arbitrary-precision rationals and
//! compared by integer sign analysis; no floating point enters equality or
//! ordering.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// An element a + b√2 with rational a, b. The representation is canonical:
/// two elements are equal iff their coordinate pairs are equal, because √2
/// is irrational.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ExactScalar {
    a: BigRational,
    b: BigRational,
}

impl ExactScalar {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        ExactScalar { a, b }
    }

    pub fn zero() -> Self {
        ExactScalar::default()
    }

    pub fn one() -> Self {
        ExactScalar::from_int(1)
    }

    pub fn sqrt2() -> Self {
        ExactScalar::new(BigRational::zero(), BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        ExactScalar::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        ExactScalar::new(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }

    pub fn from_rational(r: BigRational) -> Self {
        ExactScalar::new(r, BigRational::zero())
    }

    /// Exact 2^k as a rational.
    pub fn two_pow(k: i32) -> BigRational {
        let one = BigInt::one();
        if k >= 0 {
            BigRational::from_integer(one << k as usize)
        } else {
            BigRational::new(one.clone(), one << (-k) as usize)
        }
    }

    /// Exact 2^{h/2}: rational for even h, a multiple of √2 for odd h.
    pub fn two_pow_half(h: i64) -> Self {
        let q = h.div_euclid(2);
        let r = h.rem_euclid(2);
        let base = Self::two_pow(q as i32);
        if r == 0 {
            ExactScalar::from_rational(base)
        } else {
            // 2^{q + 1/2} = 2^q * sqrt(2)
            ExactScalar::new(BigRational::zero(), base)
        }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn sqrt2_part(&self) -> &BigRational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// Sign of a + b√2, decided by comparing a² with 2b² when a and b have
    /// opposite signs. a² = 2b² is impossible for nonzero rationals.
    pub fn signum(&self) -> i32 {
        let sa = rational_sign(&self.a);
        let sb = rational_sign(&self.b);
        match (sa, sb) {
            (0, 0) => 0,
            (s, 0) | (0, s) => s,
            (1, 1) => 1,
            (-1, -1) => -1,
            (1, -1) => cmp_sq(&self.a, &self.b),
            (-1, 1) => -cmp_sq(&self.a, &self.b),
            _ => unreachable!(),
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// (a + b√2)² = (a² + 2b²) + (2ab)√2.
    pub fn square(&self) -> Self {
        let two = BigRational::from_integer(BigInt::from(2));
        ExactScalar::new(
            &self.a * &self.a + &two * &self.b * &self.b,
            &two * &self.a * &self.b,
        )
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        ExactScalar::new(&self.a * r, &self.b * r)
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        a + b * std::f64::consts::SQRT_2
    }
}

fn rational_sign(r: &BigRational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

/// Sign of a² − 2b², i.e. of |a| − |b|√2 for a, b of opposite signs.
fn cmp_sq(a: &BigRational, b: &BigRational) -> i32 {
    let two = BigRational::from_integer(BigInt::from(2));
    rational_sign(&(a * a - two * b * b))
}

impl PartialOrd for ExactScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        let d = self.clone() - other.clone();
        match d.signum() {
            0 => Ordering::Equal,
            s if s < 0 => Ordering::Less,
            _ => Ordering::Greater,
        }
    }
}

impl Add for ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: Self) -> Self {
        ExactScalar::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl<'a> Add<&'a ExactScalar> for ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: &'a ExactScalar) -> Self {
        ExactScalar::new(self.a + &rhs.a, self.b + &rhs.b)
    }
}

impl AddAssign for ExactScalar {
    fn add_assign(&mut self, rhs: Self) {
        self.a += rhs.a;
        self.b += rhs.b;
    }
}

impl<'a> AddAssign<&'a ExactScalar> for ExactScalar {
    fn add_assign(&mut self, rhs: &'a ExactScalar) {
        self.a += &rhs.a;
        self.b += &rhs.b;
    }
}

impl Sub for ExactScalar {
    type Output = ExactScalar;
    fn sub(self, rhs: Self) -> Self {
        ExactScalar::new(self.a - rhs.a, self.b - rhs.b)
    }
}

impl SubAssign for ExactScalar {
    fn sub_assign(&mut self, rhs: Self) {
        self.a -= rhs.a;
        self.b -= rhs.b;
    }
}

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> Self {
        ExactScalar::new(-self.a, -self.b)
    }
}

impl Mul for ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl Mul<&ExactScalar> for &ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: &ExactScalar) -> ExactScalar {
        // (a + b√2)(c + d√2) = (ac + 2bd) + (ad + bc)√2
        let two = BigRational::from_integer(BigInt::from(2));
        ExactScalar::new(
            &self.a * &rhs.a + two * &self.b * &rhs.b,
            &self.a * &rhs.b + &self.b * &rhs.a,
        )
    }
}

impl MulAssign for ExactScalar {
    fn mul_assign(&mut self, rhs: Self) {
        *self = &*self * &rhs;
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}\u{221a}2", self.a, self.b)
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else if self.a.is_zero() {
            write!(f, "{}\u{221a}2", self.b)
        } else {
            write!(f, "{} + {}\u{221a}2", self.a, self.b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn es(an: i64, ad: i64, bn: i64, bd: i64) -> ExactScalar {
        ExactScalar::new(
            BigRational::new(BigInt::from(an), BigInt::from(ad)),
            BigRational::new(BigInt::from(bn), BigInt::from(bd)),
        )
    }

    #[test]
    fn square_identity() {
        // (a + b√2)² = (a² + 2b²) + 2ab√2
        let x = es(3, 2, -1, 5);
        let sq = x.square();
        assert_eq!(sq, &x * &x);
        assert_eq!(sq.rational_part(), &BigRational::new(233.into(), 100.into()));
    }

    #[test]
    fn sign_analysis_mixed() {
        // 3 - 2√2 > 0 since 9 > 8
        assert_eq!(es(3, 1, -2, 1).signum(), 1);
        // 1 - √2 < 0
        assert_eq!(es(1, 1, -1, 1).signum(), -1);
        // -3 + 2√2 < 0
        assert_eq!(es(-3, 1, 2, 1).signum(), -1);
        // -1 + √2 > 0
        assert_eq!(es(-1, 1, 1, 1).signum(), 1);
        assert_eq!(ExactScalar::zero().signum(), 0);
    }

    #[test]
    fn half_powers() {
        assert_eq!(ExactScalar::two_pow_half(2), ExactScalar::from_int(2));
        assert_eq!(ExactScalar::two_pow_half(1), ExactScalar::sqrt2());
        // 2^{-1/2} = (1/2)√2
        assert_eq!(ExactScalar::two_pow_half(-1), es(0, 1, 1, 2));
        let x = ExactScalar::two_pow_half(-3);
        assert_eq!(x.square(), ExactScalar::from_ratio(1, 8));
    }

    #[test]
    fn ordering_total() {
        let mut v = [es(1, 1, -1, 1), ExactScalar::zero(), es(0, 1, 1, 2), es(3, 1, -2, 1)];
        v.sort();
        let signs: Vec<i32> = v.iter().map(|x| x.signum()).collect();
        assert_eq!(signs, vec![-1, 0, 1, 1]);
    }
}
