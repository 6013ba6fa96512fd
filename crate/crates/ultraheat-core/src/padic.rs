//! Finite-precision p-adic numbers, balls, Haar volumes and the vertex
//! embedding.
//!
//! A value is a digit expansion `d_v p^v + d_{v+1} p^{v+1} + ...` truncated at
//! a precision position: digits at positions `>= precision` are unknown and
//! all arithmetic truncates there. Negative integers are represented through
//! their p-complement expansion, which keeps subtraction a single digit-wise
//! borrow chain.

use num_complex::Complex64;
use num_rational::Ratio;
use rand::Rng;

use crate::error::{Error, Result};

/// Trial-division primality check; weights and levels stay at desk scale.
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// A p-adic number with finitely many known digits.
///
/// Invariants: the first stored digit is nonzero unless the value is exactly
/// zero, all digits lie in `[0, p)`, trailing zero digits are trimmed, and
/// `precision > valuation` for nonzero values.
#[derive(Clone, Debug)]
pub struct PAdicNumber {
    prime: u64,
    valuation: i32,
    digits: Vec<u32>,
    precision: i32,
    is_zero: bool,
}

impl PartialEq for PAdicNumber {
    fn eq(&self, other: &Self) -> bool {
        // Equality of the represented value; precision is metadata.
        self.prime == other.prime
            && self.is_zero == other.is_zero
            && (self.is_zero || (self.valuation == other.valuation && self.digits == other.digits))
    }
}

impl Eq for PAdicNumber {}

impl PAdicNumber {
    /// Canonical constructor: trims leading and trailing zero digits and
    /// collapses the all-zero expansion to the exact zero.
    pub fn new(prime: u64, valuation: i32, digits: Vec<u32>, precision: i32) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::NotPrime(prime));
        }
        if digits.iter().any(|&d| d as u64 >= prime) {
            return Err(Error::InvalidArgument(format!(
                "digit out of range for prime {prime}"
            )));
        }
        let mut valuation = valuation;
        let mut digits = digits;
        while digits.first() == Some(&0) {
            digits.remove(0);
            valuation += 1;
        }
        while digits.last() == Some(&0) {
            digits.pop();
        }
        if digits.len() as i64 > (precision as i64 - valuation as i64).max(0) {
            digits.truncate((precision as i64 - valuation as i64).max(0) as usize);
            while digits.last() == Some(&0) {
                digits.pop();
            }
        }
        if digits.is_empty() {
            return Ok(Self::zero(prime, precision));
        }
        if precision <= valuation {
            return Ok(Self::zero(prime, precision));
        }
        Ok(PAdicNumber {
            prime,
            valuation,
            digits,
            precision,
            is_zero: false,
        })
    }

    /// The exact zero, known up to `precision`.
    pub fn zero(prime: u64, precision: i32) -> Self {
        PAdicNumber {
            prime,
            valuation: 0,
            digits: Vec::new(),
            precision,
            is_zero: true,
        }
    }

    /// Digit expansion of an integer, truncated at `precision` positions.
    /// Negative inputs use the p-complement expansion.
    pub fn from_integer(m: i64, prime: u64, precision: i32) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::NotPrime(prime));
        }
        if precision < 1 {
            return Err(Error::InvalidArgument(
                "precision must be at least 1".into(),
            ));
        }
        if m == 0 {
            return Ok(Self::zero(prime, precision));
        }
        let mut mag = m.unsigned_abs();
        let mut digits = Vec::new();
        while mag > 0 && (digits.len() as i32) < precision {
            digits.push((mag % prime) as u32);
            mag /= prime;
        }
        if m < 0 {
            // p-complement: first nonzero digit k maps to p - d, later ones to
            // p - 1 - d, and the expansion continues with p - 1 up to precision.
            let first_nonzero = digits.iter().position(|&d| d != 0).expect("m != 0");
            for (i, d) in digits.iter_mut().enumerate() {
                if i == first_nonzero {
                    *d = (prime as u32) - *d;
                } else if i > first_nonzero {
                    *d = (prime as u32) - 1 - *d;
                }
            }
            while (digits.len() as i32) < precision {
                digits.push(prime as u32 - 1);
            }
        }
        Self::new(prime, 0, digits, precision)
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn is_zero(&self) -> bool {
        self.is_zero
    }

    /// Exponent of the lowest nonzero digit. Meaningless for zero.
    pub fn valuation(&self) -> Option<i32> {
        if self.is_zero {
            None
        } else {
            Some(self.valuation)
        }
    }

    pub fn precision(&self) -> i32 {
        self.precision
    }

    /// Known digits starting at the valuation position.
    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// The digit at an arbitrary position (zero outside the stored range).
    pub fn digit_at(&self, position: i32) -> u32 {
        if self.is_zero {
            return 0;
        }
        let idx = position as i64 - self.valuation as i64;
        if idx < 0 || idx >= self.digits.len() as i64 {
            0
        } else {
            self.digits[idx as usize]
        }
    }

    /// The usual p-adic absolute value, `p^-valuation`, as an exact power.
    pub fn abs(&self) -> PadicAbs {
        if self.is_zero {
            PadicAbs::Zero
        } else {
            PadicAbs::Power {
                prime: self.prime,
                exponent: -self.valuation,
            }
        }
    }

    /// Digit-wise subtraction with borrow; the result is known up to the
    /// smaller of the two precisions.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        let precision = self.precision.min(other.precision);
        let lo = match (self.is_zero, other.is_zero) {
            (true, true) => return Ok(Self::zero(self.prime, precision)),
            (true, false) => other.valuation,
            (false, true) => self.valuation,
            (false, false) => self.valuation.min(other.valuation),
        };
        if precision <= lo {
            // Nothing overlaps below the shared precision.
            return Err(Error::InvalidArgument(
                "operands have no overlapping known digits".into(),
            ));
        }
        let p = self.prime as i64;
        let mut digits = Vec::with_capacity((precision - lo) as usize);
        let mut borrow = 0i64;
        for pos in lo..precision {
            let mut d = self.digit_at(pos) as i64 - other.digit_at(pos) as i64 - borrow;
            if d < 0 {
                d += p;
                borrow = 1;
            } else {
                borrow = 0;
            }
            digits.push(d as u32);
        }
        Self::new(self.prime, lo, digits, precision)
    }

    /// Digit-wise addition with carry, truncated at the shared precision.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        let precision = self.precision.min(other.precision);
        let lo = match (self.is_zero, other.is_zero) {
            (true, true) => return Ok(Self::zero(self.prime, precision)),
            (true, false) => other.valuation,
            (false, true) => self.valuation,
            (false, false) => self.valuation.min(other.valuation),
        };
        if precision <= lo {
            return Err(Error::InvalidArgument(
                "operands have no overlapping known digits".into(),
            ));
        }
        let p = self.prime as i64;
        let mut digits = Vec::with_capacity((precision - lo) as usize);
        let mut carry = 0i64;
        for pos in lo..precision {
            let mut d = self.digit_at(pos) as i64 + other.digit_at(pos) as i64 + carry;
            if d >= p {
                d -= p;
                carry = 1;
            } else {
                carry = 0;
            }
            digits.push(d as u32);
        }
        Self::new(self.prime, lo, digits, precision)
    }

    /// Multiplication by `p^k`: shifts every digit position by `k`.
    pub fn shifted(&self, k: i32) -> Self {
        let mut out = self.clone();
        out.precision += k;
        if !out.is_zero {
            out.valuation += k;
        }
        out
    }

    /// Multiplication by a small nonnegative integer, digit-wise with carry.
    pub fn mul_small(&self, factor: u64) -> Self {
        if self.is_zero || factor == 0 {
            return Self::zero(self.prime, self.precision);
        }
        let p = self.prime;
        let mut digits = Vec::new();
        let mut carry = 0u64;
        let mut pos = self.valuation;
        while pos < self.precision {
            let d = self.digit_at(pos) as u64 * factor + carry;
            digits.push((d % p) as u32);
            carry = d / p;
            pos += 1;
        }
        Self::new(self.prime, self.valuation, digits, self.precision)
            .expect("digits from carry arithmetic are in range")
    }

    /// The fractional part `sum_{k < 0} d_k p^k` as an exact rational in [0,1).
    pub fn fractional_part(&self) -> Ratio<i128> {
        if self.is_zero || self.valuation >= 0 {
            return Ratio::new(0, 1);
        }
        let p = self.prime as i128;
        let mut numerator: i128 = 0;
        let mut scale: i128 = 1;
        for pos in self.valuation..0 {
            numerator += self.digit_at(pos) as i128 * scale;
            scale *= p;
        }
        let denominator = p
            .checked_pow((-self.valuation) as u32)
            .expect("fractional denominators stay within i128 at supported precisions");
        Ratio::new(numerator, denominator)
    }

    /// The standard additive character `exp(2 pi i {x})`, a complex unit.
    pub fn additive_character(&self) -> Complex64 {
        let frac = self.fractional_part();
        character_of_fraction(frac)
    }

    /// Zeroes every digit at positions `>= position`. The result is still
    /// known to the same precision; this is the canonicalization used for
    /// ball centers.
    pub fn truncated(&self, position: i32) -> Self {
        if self.is_zero || position <= self.valuation {
            return Self::zero(self.prime, self.precision);
        }
        let keep = ((position - self.valuation) as usize).min(self.digits.len());
        Self::new(
            self.prime,
            self.valuation,
            self.digits[..keep].to_vec(),
            self.precision,
        )
        .expect("truncation preserves digit range")
    }

    /// Value of the digits at positions `[0, upto)` as an ordinary integer.
    /// Positions below zero are ignored.
    pub fn integer_window(&self, upto: i32) -> u64 {
        let mut value = 0u64;
        for pos in (0..upto).rev() {
            value = value * self.prime + self.digit_at(pos) as u64;
        }
        value
    }
}

/// Exact unit-circle evaluation of `exp(2 pi i q)`, with the four exactly
/// representable quarter turns special-cased so that dyadic characters are
/// free of rounding dust.
pub fn character_of_fraction(q: Ratio<i128>) -> Complex64 {
    let q = q.fract();
    let (num, den) = (*q.numer(), *q.denom());
    if num == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if den == 2 {
        return Complex64::new(-1.0, 0.0);
    }
    if den == 4 {
        return if num.rem_euclid(4) == 1 {
            Complex64::new(0.0, 1.0)
        } else {
            Complex64::new(0.0, -1.0)
        };
    }
    let angle = 2.0 * std::f64::consts::PI * (num as f64 / den as f64);
    Complex64::new(angle.cos(), angle.sin())
}

/// The exact value of a p-adic absolute value: either zero or a signed power
/// of the prime. Ordering compares the represented rationals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PadicAbs {
    Zero,
    Power { prime: u64, exponent: i32 },
}

impl PadicAbs {
    pub fn as_f64(&self) -> f64 {
        match *self {
            PadicAbs::Zero => 0.0,
            PadicAbs::Power { prime, exponent } => (prime as f64).powi(exponent),
        }
    }
}

impl PartialOrd for PadicAbs {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use PadicAbs::*;
        match (self, other) {
            (Zero, Zero) => Some(std::cmp::Ordering::Equal),
            (Zero, Power { .. }) => Some(std::cmp::Ordering::Less),
            (Power { .. }, Zero) => Some(std::cmp::Ordering::Greater),
            (
                Power {
                    prime: p,
                    exponent: a,
                },
                Power {
                    prime: q,
                    exponent: b,
                },
            ) => {
                if p == q {
                    a.partial_cmp(b)
                } else {
                    self.as_f64().partial_cmp(&other.as_f64())
                }
            }
        }
    }
}

/// A p-adic ball `{x : |x - center| <= p^-r}` with canonical center (digits
/// at positions `>= r` zeroed). Haar volume is `p^-r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ball {
    center: PAdicNumber,
    radius_exponent: i32,
}

impl Ball {
    pub fn new(center: PAdicNumber, radius_exponent: i32) -> Self {
        Ball {
            center: center.truncated(radius_exponent),
            radius_exponent,
        }
    }

    pub fn center(&self) -> &PAdicNumber {
        &self.center
    }

    pub fn radius_exponent(&self) -> i32 {
        self.radius_exponent
    }

    pub fn haar_volume(&self) -> f64 {
        (self.center.prime() as f64).powi(-self.radius_exponent)
    }

    pub fn contains(&self, x: &PAdicNumber) -> bool {
        match x.sub(&self.center) {
            Ok(d) => d.is_zero() || d.valuation().unwrap() >= self.radius_exponent,
            Err(_) => false,
        }
    }

    /// Haar-uniform sample at the given digit depth: the center's digits below
    /// the radius exponent plus independent uniform digits up to `depth`.
    pub fn sample<R: Rng>(&self, depth: i32, rng: &mut R) -> PAdicNumber {
        assert!(
            depth > self.radius_exponent,
            "depth must exceed the radius exponent"
        );
        let p = self.center.prime();
        let lo = if self.center.is_zero() {
            self.radius_exponent.min(0)
        } else {
            self.center.valuation().unwrap().min(self.radius_exponent)
        };
        let mut digits = Vec::with_capacity((depth - lo) as usize);
        for pos in lo..depth {
            if pos < self.radius_exponent {
                digits.push(self.center.digit_at(pos));
            } else {
                digits.push(rng.gen_range(0..p) as u32);
            }
        }
        PAdicNumber::new(p, lo, digits, depth).expect("sampled digits are in range")
    }
}

/// The fixed embedding of `n` vertices into disjoint balls of radius `p^-N`:
/// vertex `k` sits at the canonical p-adic integer with base-p digits of `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Embedding {
    vertices: usize,
    prime: u64,
    level: i32,
    precision: i32,
}

impl Embedding {
    /// Chooses the smallest level `N` with `p^N >= n` unless overridden.
    pub fn new(
        vertices: usize,
        prime: u64,
        level_override: Option<i32>,
        precision: i32,
    ) -> Result<Self> {
        if !is_prime(prime) {
            return Err(Error::NotPrime(prime));
        }
        if vertices == 0 {
            return Err(Error::InvalidArgument("need at least one vertex".into()));
        }
        let mut level = 0i32;
        let mut capacity = 1u128;
        while capacity < vertices as u128 {
            capacity *= prime as u128;
            level += 1;
        }
        if let Some(requested) = level_override {
            let cap = (prime as u128).checked_pow(requested.max(0) as u32);
            if requested < level || cap.is_none_or(|c| c < vertices as u128) {
                return Err(Error::InvalidArgument(format!(
                    "level {requested} gives fewer than {vertices} disjoint balls"
                )));
            }
            level = requested;
        }
        if precision <= level {
            return Err(Error::InvalidArgument(
                "padic precision must exceed the embedding level".into(),
            ));
        }
        Ok(Embedding {
            vertices,
            prime,
            level,
            precision,
        })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    /// The level `N`: vertex balls have radius `p^-N`.
    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn precision(&self) -> i32 {
        self.precision
    }

    /// Total Haar volume of the state space, `n p^-N`.
    pub fn state_space_volume(&self) -> f64 {
        self.vertices as f64 * (self.prime as f64).powi(-self.level)
    }

    pub fn center(&self, vertex: usize) -> PAdicNumber {
        PAdicNumber::from_integer(vertex as i64, self.prime, self.precision)
            .expect("vertex centers are valid integers")
    }

    pub fn centers(&self) -> Vec<PAdicNumber> {
        (0..self.vertices).map(|k| self.center(k)).collect()
    }

    pub fn vertex_ball(&self, vertex: usize) -> Ball {
        Ball::new(self.center(vertex), self.level)
    }

    /// The vertex whose ball contains `x`, if any.
    pub fn locate(&self, x: &PAdicNumber) -> Option<usize> {
        if x.prime() != self.prime {
            return None;
        }
        if !x.is_zero() && x.valuation().unwrap() < 0 {
            return None;
        }
        let window = x.integer_window(self.level) as usize;
        (window < self.vertices).then_some(window)
    }

    /// Number of resolution-`r` sub-balls per vertex ball.
    pub fn cells_per_vertex(&self, r: i32) -> usize {
        (self.prime as u128).pow((r - self.level).max(0) as u32) as usize
    }

    /// The canonical centers of the `p^(r-N)` sub-balls of a vertex ball,
    /// ordered by ascending offset (digit at position N varying fastest).
    pub fn subball_centers(&self, vertex: usize, r: i32) -> Result<Vec<PAdicNumber>> {
        subball_centers(&self.center(vertex), self.level, r)
    }

    /// Center of the sub-ball `offset` of `vertex` (any scale with
    /// `offset < p^(r-N)` shares this center).
    pub fn subball_center(&self, vertex: usize, offset: u64) -> PAdicNumber {
        let value = vertex as i64 + offset as i64 * (self.prime as i64).pow(self.level as u32);
        PAdicNumber::from_integer(value, self.prime, self.precision)
            .expect("sub-ball centers are valid integers")
    }

    /// The containing resolution-`r` cell of `x` as `(vertex, offset)`.
    pub fn locate_cell(&self, x: &PAdicNumber, r: i32) -> Option<(usize, u64)> {
        let vertex = self.locate(x)?;
        let mut offset = 0u64;
        for pos in (self.level..r).rev() {
            offset = offset * self.prime + x.digit_at(pos) as u64;
        }
        Some((vertex, offset))
    }
}

/// The canonical centers `I + sum_{k=N}^{r-1} a_k p^k`, enumerated with the
/// digit at position `N` varying fastest, i.e. by ascending offset.
pub fn subball_centers(center: &PAdicNumber, level: i32, r: i32) -> Result<Vec<PAdicNumber>> {
    if r < level {
        return Err(Error::InvalidArgument(format!(
            "sub-ball scale {r} is coarser than the level {level}"
        )));
    }
    let p = center.prime();
    let count = (p as u128).pow((r - level) as u32);
    if count > 1 << 30 {
        return Err(Error::InvalidArgument(
            "sub-ball enumeration too large".into(),
        ));
    }
    let mut out = Vec::with_capacity(count as usize);
    for k in 0..count as u64 {
        let mut digits: Vec<u32> = Vec::new();
        let lo = if center.is_zero() {
            0
        } else {
            center.valuation().unwrap().min(0)
        };
        for pos in lo..r {
            if pos < level {
                digits.push(center.digit_at(pos));
            } else {
                let idx = (pos - level) as u32;
                digits.push(((k / (p.pow(idx))) % p) as u32);
            }
        }
        out.push(PAdicNumber::new(p, lo, digits, center.precision())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Oracle: base-p digits of a nonnegative integer by repeated division.
    fn division_digits(mut m: u64, p: u64, precision: usize) -> Vec<u32> {
        let mut out = Vec::new();
        while m > 0 && out.len() < precision {
            out.push((m % p) as u32);
            m /= p;
        }
        out
    }

    #[test]
    fn from_integer_zero() {
        let x = PAdicNumber::from_integer(0, 2, 8).unwrap();
        assert!(x.is_zero());
        assert_eq!(x.abs(), PadicAbs::Zero);
    }

    #[test]
    fn from_integer_matches_division_oracle() {
        // 12 = 2^2 * 3 -> valuation 2, digits 1,1.
        let x = PAdicNumber::from_integer(12, 2, 8).unwrap();
        assert_eq!(x.valuation(), Some(2));
        assert_eq!(x.digits(), &[1, 1]);
        let oracle = division_digits(12, 2, 8);
        let rebuilt: Vec<u32> = (0..8).map(|k| x.digit_at(k)).collect();
        let mut padded = oracle.clone();
        padded.resize(8, 0);
        assert_eq!(rebuilt, padded);
    }

    #[test]
    fn negative_one_is_all_p_minus_one() {
        // p-complement oracle: -1 = sum (p-1) p^k.
        let x = PAdicNumber::from_integer(-1, 3, 4).unwrap();
        assert_eq!(x.valuation(), Some(0));
        assert_eq!(x.digits(), &[2, 2, 2, 2]);
    }

    #[test]
    fn negative_complement_round_trips_through_add() {
        for m in 1..40i64 {
            let pos = PAdicNumber::from_integer(m, 5, 10).unwrap();
            let neg = PAdicNumber::from_integer(-m, 5, 10).unwrap();
            assert!(pos.add(&neg).unwrap().is_zero(), "m = {m}");
        }
    }

    #[test]
    fn rejects_non_prime() {
        assert!(matches!(
            PAdicNumber::from_integer(3, 4, 8),
            Err(Error::NotPrime(4))
        ));
    }

    #[test]
    fn abs_examples() {
        let twelve = PAdicNumber::from_integer(12, 2, 8).unwrap();
        assert_eq!(twelve.abs().as_f64(), 0.25);
        let inv = PAdicNumber::new(3, -1, vec![1], 4).unwrap();
        assert_eq!(inv.abs().as_f64(), 3.0);
    }

    #[test]
    fn sub_equal_is_zero() {
        let x = PAdicNumber::from_integer(7, 3, 6).unwrap();
        assert!(x.sub(&x).unwrap().is_zero());
    }

    #[test]
    fn sub_borrow_chain() {
        // 1 - 2 over p = 3 at precision 4: the complement of 1, digits 2,2,2,2.
        let one = PAdicNumber::from_integer(1, 3, 4).unwrap();
        let two = PAdicNumber::from_integer(2, 3, 4).unwrap();
        let d = one.sub(&two).unwrap();
        assert_eq!(d.valuation(), Some(0));
        assert_eq!(d.digits(), &[2, 2, 2, 2]);
        assert_eq!(d.abs().as_f64(), 1.0);
    }

    #[test]
    fn sub_matches_integer_arithmetic() {
        let twelve = PAdicNumber::from_integer(12, 2, 8).unwrap();
        let four = PAdicNumber::from_integer(4, 2, 8).unwrap();
        let eight = PAdicNumber::from_integer(8, 2, 8).unwrap();
        let d = twelve.sub(&four).unwrap();
        assert_eq!(d, eight);
        assert_eq!(d.valuation(), Some(3));
    }

    #[test]
    fn fractional_part_cases() {
        let x = PAdicNumber::from_integer(9, 2, 8).unwrap();
        assert_eq!(x.fractional_part(), Ratio::new(0, 1));
        let half = PAdicNumber::new(2, -1, vec![1], 4).unwrap();
        assert_eq!(half.fractional_part(), Ratio::new(1, 2));
        // digits 1 at -2 and 1 at -1: 1/4 + 1/2 = 3/4.
        let q = PAdicNumber::new(2, -2, vec![1, 1], 4).unwrap();
        assert_eq!(q.fractional_part(), Ratio::new(3, 4));
    }

    #[test]
    fn character_cases() {
        let x = PAdicNumber::from_integer(5, 2, 8).unwrap();
        assert_eq!(x.additive_character(), Complex64::new(1.0, 0.0));
        let half = PAdicNumber::new(2, -1, vec![1], 4).unwrap();
        assert_eq!(half.additive_character(), Complex64::new(-1.0, 0.0));
        let third = PAdicNumber::new(3, -1, vec![1], 4).unwrap();
        let c = third.additive_character();
        assert!((c.re + 0.5).abs() < 1e-15);
        assert!((c.im - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((c.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn character_is_homomorphic_at_shared_precision() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [2u64, 3, 5] {
            let ball = Ball::new(PAdicNumber::new(p, -3, vec![1], 12).unwrap(), -3);
            for _ in 0..50 {
                let x = ball.sample(9, &mut rng);
                let y = ball.sample(9, &mut rng);
                let lhs = x.additive_character() * y.additive_character();
                let rhs = x.add(&y).unwrap().additive_character();
                assert!((lhs - rhs).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn vertex_embedding_levels() {
        let e = Embedding::new(2, 2, None, 32).unwrap();
        assert_eq!(e.level(), 1);
        assert_eq!(
            e.centers(),
            vec![
                PAdicNumber::zero(2, 32),
                PAdicNumber::from_integer(1, 2, 32).unwrap()
            ]
        );
        let e = Embedding::new(3, 2, None, 32).unwrap();
        assert_eq!(e.level(), 2);
        let e = Embedding::new(3, 5, None, 32).unwrap();
        assert_eq!(e.level(), 1);
        assert!(Embedding::new(3, 2, Some(1), 32).is_err());
    }

    #[test]
    fn embedding_balls_are_disjoint() {
        for (n, p) in [(2usize, 2u64), (3, 2), (3, 5), (6, 3)] {
            let e = Embedding::new(n, p, None, 32).unwrap();
            let centers = e.centers();
            for i in 0..n {
                for j in 0..i {
                    let d = centers[i].sub(&centers[j]).unwrap();
                    let gap = PadicAbs::Power {
                        prime: p,
                        exponent: -e.level(),
                    };
                    assert!(d.abs() > gap, "balls {i} and {j} overlap");
                }
            }
        }
    }

    #[test]
    fn subball_center_enumeration() {
        let e = Embedding::new(2, 2, None, 32).unwrap();
        let at_level = e.subball_centers(0, 1).unwrap();
        assert_eq!(at_level, vec![PAdicNumber::zero(2, 32)]);
        let split = e.subball_centers(0, 2).unwrap();
        let values: Vec<i64> = split.iter().map(|c| c.integer_window(8) as i64).collect();
        assert_eq!(values, vec![0, 2]);
        let deeper = e.subball_centers(1, 3).unwrap();
        let values: Vec<i64> = deeper.iter().map(|c| c.integer_window(8) as i64).collect();
        assert_eq!(values, vec![1, 3, 5, 7]);
    }

    #[test]
    fn subball_centers_tile_the_vertex_ball() {
        let e = Embedding::new(3, 3, None, 32).unwrap();
        let r = e.level() + 2;
        for vertex in 0..3 {
            let centers = e.subball_centers(vertex, r).unwrap();
            // Pairwise distinct canonical centers.
            for i in 0..centers.len() {
                for j in 0..i {
                    assert_ne!(centers[i], centers[j]);
                }
            }
            // Each lies in the vertex ball and volumes sum to p^-N.
            let ball = e.vertex_ball(vertex);
            let mut total = 0.0;
            for c in &centers {
                assert!(ball.contains(c));
                total += Ball::new(c.clone(), r).haar_volume();
            }
            assert!((total - ball.haar_volume()).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_is_uniform_over_children() {
        let ball = Ball::new(PAdicNumber::zero(2, 32), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 10_000;
        let mut first_child = 0usize;
        for _ in 0..draws {
            let x = ball.sample(2, &mut rng);
            assert!(ball.contains(&x));
            if x.digit_at(1) == 0 {
                first_child += 1;
            }
        }
        // Binomial(10^4, 1/2): three sigma is 150.
        let sigma3 = 3.0 * (draws as f64 * 0.25).sqrt();
        assert!((first_child as f64 - draws as f64 / 2.0).abs() < sigma3);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let ball = Ball::new(PAdicNumber::from_integer(1, 3, 32).unwrap(), 1);
        let a = ball.sample(12, &mut ChaCha8Rng::seed_from_u64(3));
        let b = ball.sample(12, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert_eq!(a.precision(), 12);
    }

    #[test]
    fn ultrametric_inequality_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ball = Ball::new(PAdicNumber::zero(3, 32), 0);
        for _ in 0..200 {
            let x = ball.sample(10, &mut rng);
            let y = ball.sample(10, &mut rng);
            let z = ball.sample(10, &mut rng);
            let xz = x.sub(&z).unwrap().abs();
            let xy = x.sub(&y).unwrap().abs();
            let yz = y.sub(&z).unwrap().abs();
            let max = if xy > yz { xy } else { yz };
            assert!(xz <= max);
        }
    }
}
