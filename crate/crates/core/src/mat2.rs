//! Exact rational scalars, 2-vectors, and 2×2 matrices.
//!
//! Everything here is arbitrary precision and never rounds. `Rational`
//! values are kept in lowest terms with a positive denominator (that is
//! the `num-rational` storage invariant). Matrices are row-major:
//! `[[a, b], [c, d]]`.
//!
//! Two matrix conventions appear in this crate and are worth spelling out
//! once. A matrix can act on a *column vector* (`mul_vec`), which is how
//! plane maps transform points. Monodromy results are instead stored as
//! the coefficient matrix acting from the left on the column stack
//! `(e_v; e_h)` of basis vectors, i.e. row `i` lists the coefficients of
//! the image of basis vector `i` over the original basis.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

pub type Rational = BigRational;

/// `rat(n, d)` is the exact fraction n/d. Panics if `d == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Integer as a rational.
pub fn rat_int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ParseNumberError {
    #[error("empty numeric field")]
    Empty,
    #[error("invalid rational literal {0:?}")]
    Invalid(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Parses `"-3"`, `"5/6"`, `"-5/6"`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseNumberError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseNumberError::Empty);
    }
    let bad = || ParseNumberError::Invalid(s.to_string());
    match s.split_once('/') {
        None => {
            let n: BigInt = s.parse().map_err(|_| bad())?;
            Ok(BigRational::from_integer(n))
        }
        Some((num, den)) => {
            let n: BigInt = num.trim().parse().map_err(|_| bad())?;
            let d: BigInt = den.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(ParseNumberError::ZeroDenominator(s.to_string()));
            }
            Ok(BigRational::new(n, d))
        }
    }
}

/// `"n"` for integers, `"n/d"` otherwise.
pub fn rational_to_string(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back through a quotient of f64-sized chunks; good enough for
        // rendering, which is the only consumer.
        let n = r.numer().to_f64().unwrap_or(f64::MAX);
        let d = r.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// Serde representation: exact integers small enough for JSON stay plain
/// numbers, everything else becomes a `"num/den"` string.
fn serialize_rational<S: Serializer>(r: &Rational, ser: S) -> Result<S::Ok, S::Error> {
    if r.is_integer() {
        if let Some(i) = r.numer().to_i64() {
            if i.abs() <= (1 << 53) {
                return ser.serialize_i64(i);
            }
        }
    }
    ser.serialize_str(&rational_to_string(r))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RationalRepr {
    Int(i64),
    Str(String),
}

/// Exact 2-vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Vec2 {
    pub x: Rational,
    pub y: Rational,
}

impl Vec2 {
    pub fn new(x: Rational, y: Rational) -> Vec2 {
        Vec2 { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Vec2 {
        Vec2::new(rat_int(x), rat_int(y))
    }

    pub fn zero() -> Vec2 {
        Vec2::from_ints(0, 0)
    }

    pub fn add(&self, o: &Vec2) -> Vec2 {
        Vec2::new(&self.x + &o.x, &self.y + &o.y)
    }

    pub fn sub(&self, o: &Vec2) -> Vec2 {
        Vec2::new(&self.x - &o.x, &self.y - &o.y)
    }

    pub fn neg(&self) -> Vec2 {
        Vec2::new(-&self.x, -&self.y)
    }

    pub fn scale(&self, k: &Rational) -> Vec2 {
        Vec2::new(&self.x * k, &self.y * k)
    }

    /// z-component of the cross product; positive when `o` is
    /// counterclockwise from `self`.
    pub fn cross(&self, o: &Vec2) -> Rational {
        &self.x * &o.y - &self.y * &o.x
    }

    pub fn dot(&self, o: &Vec2) -> Rational {
        &self.x * &o.x + &self.y * &o.y
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.x.is_integer() && self.y.is_integer()
    }

    /// Integer coordinates, if both components are integers.
    pub fn integer_parts(&self) -> Option<(BigInt, BigInt)> {
        if self.is_integer() {
            Some((self.x.numer().clone(), self.y.numer().clone()))
        } else {
            None
        }
    }

    /// Integer vector with coprime coordinates (and not zero).
    pub fn is_primitive(&self) -> bool {
        match self.integer_parts() {
            Some((x, y)) => !(x.is_zero() && y.is_zero()) && x.gcd(&y).is_one(),
            None => false,
        }
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [rational_to_f64(&self.x), rational_to_f64(&self.y)]
    }
}

impl fmt::Debug for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {})",
            rational_to_string(&self.x),
            rational_to_string(&self.y)
        )
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for Vec2 {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = ser.serialize_seq(Some(2))?;
        struct Wrap<'a>(&'a Rational);
        impl Serialize for Wrap<'_> {
            fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
                serialize_rational(self.0, ser)
            }
        }
        seq.serialize_element(&Wrap(&self.x))?;
        seq.serialize_element(&Wrap(&self.y))?;
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Vec2 {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Vec2, D::Error> {
        let parts: Vec<RationalRepr> = Vec::deserialize(de)?;
        if parts.len() != 2 {
            return Err(D::Error::custom("expected a 2-element array"));
        }
        let conv = |r: &RationalRepr| -> Result<Rational, D::Error> {
            match r {
                RationalRepr::Int(i) => Ok(rat_int(*i)),
                RationalRepr::Str(s) => parse_rational(s).map_err(D::Error::custom),
            }
        };
        Ok(Vec2::new(conv(&parts[0])?, conv(&parts[1])?))
    }
}

/// Exact 2×2 matrix, row-major: top row `a b`, bottom row `c d`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMat2 {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub d: Rational,
}

impl RatMat2 {
    pub fn new(a: Rational, b: Rational, c: Rational, d: Rational) -> RatMat2 {
        RatMat2 { a, b, c, d }
    }

    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> RatMat2 {
        RatMat2::new(rat_int(a), rat_int(b), rat_int(c), rat_int(d))
    }

    pub fn identity() -> RatMat2 {
        RatMat2::from_ints(1, 0, 0, 1)
    }

    /// Matrix whose columns are `c1` and `c2`.
    pub fn from_columns(c1: &Vec2, c2: &Vec2) -> RatMat2 {
        RatMat2::new(c1.x.clone(), c2.x.clone(), c1.y.clone(), c2.y.clone())
    }

    pub fn col1(&self) -> Vec2 {
        Vec2::new(self.a.clone(), self.c.clone())
    }

    pub fn col2(&self) -> Vec2 {
        Vec2::new(self.b.clone(), self.d.clone())
    }

    pub fn det(&self) -> Rational {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn trace(&self) -> Rational {
        &self.a + &self.d
    }

    pub fn transpose(&self) -> RatMat2 {
        RatMat2::new(
            self.a.clone(),
            self.c.clone(),
            self.b.clone(),
            self.d.clone(),
        )
    }

    pub fn neg(&self) -> RatMat2 {
        RatMat2::new(-&self.a, -&self.b, -&self.c, -&self.d)
    }

    pub fn mul(&self, o: &RatMat2) -> RatMat2 {
        RatMat2::new(
            &self.a * &o.a + &self.b * &o.c,
            &self.a * &o.b + &self.b * &o.d,
            &self.c * &o.a + &self.d * &o.c,
            &self.c * &o.b + &self.d * &o.d,
        )
    }

    /// Column action on a point or vector.
    pub fn mul_vec(&self, v: &Vec2) -> Vec2 {
        Vec2::new(&self.a * &v.x + &self.b * &v.y, &self.c * &v.x + &self.d * &v.y)
    }

    pub fn inverse(&self) -> Option<RatMat2> {
        let det = self.det();
        if det.is_zero() {
            return None;
        }
        Some(RatMat2::new(
            &self.d / &det,
            -&self.b / &det,
            -&self.c / &det,
            &self.a / &det,
        ))
    }

    /// `A · self · A⁻¹`. `None` when `A` is singular.
    pub fn conjugated_by(&self, a: &RatMat2) -> Option<RatMat2> {
        Some(a.mul(self).mul(&a.inverse()?))
    }

    pub fn pow(&self, e: i64) -> Option<RatMat2> {
        let mut base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = RatMat2::identity();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            n >>= 1;
        }
        Some(acc)
    }

    pub fn is_integer(&self) -> bool {
        self.a.is_integer() && self.b.is_integer() && self.c.is_integer() && self.d.is_integer()
    }

    pub fn is_identity(&self) -> bool {
        self == &RatMat2::identity()
    }

    /// Integer entries with determinant exactly 1.
    pub fn is_sl2z(&self) -> bool {
        self.is_integer() && self.det().is_one()
    }

    /// Entrywise lexicographic order `(a, b, c, d)`; used to pick canonical
    /// representatives, it is not a mathematical order on matrices.
    pub fn cmp_entrywise(&self, o: &RatMat2) -> Ordering {
        self.a
            .cmp(&o.a)
            .then_with(|| self.b.cmp(&o.b))
            .then_with(|| self.c.cmp(&o.c))
            .then_with(|| self.d.cmp(&o.d))
    }
}

impl fmt::Debug for RatMat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            rational_to_string(&self.a),
            rational_to_string(&self.b),
            rational_to_string(&self.c),
            rational_to_string(&self.d)
        )
    }
}

impl fmt::Display for RatMat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for RatMat2 {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        struct Row<'a>(&'a Rational, &'a Rational);
        impl Serialize for Row<'_> {
            fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
                use serde::ser::SerializeSeq;
                struct Wrap<'a>(&'a Rational);
                impl Serialize for Wrap<'_> {
                    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
                        serialize_rational(self.0, ser)
                    }
                }
                let mut seq = ser.serialize_seq(Some(2))?;
                seq.serialize_element(&Wrap(self.0))?;
                seq.serialize_element(&Wrap(self.1))?;
                seq.end()
            }
        }
        let mut seq = ser.serialize_seq(Some(2))?;
        seq.serialize_element(&Row(&self.a, &self.b))?;
        seq.serialize_element(&Row(&self.c, &self.d))?;
        seq.end()
    }
}

impl<'de> Deserialize<'de> for RatMat2 {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<RatMat2, D::Error> {
        let rows: Vec<Vec<RationalRepr>> = Vec::deserialize(de)?;
        if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
            return Err(D::Error::custom("expected a 2×2 array"));
        }
        let conv = |r: &RationalRepr| -> Result<Rational, D::Error> {
            match r {
                RationalRepr::Int(i) => Ok(rat_int(*i)),
                RationalRepr::Str(s) => parse_rational(s).map_err(D::Error::custom),
            }
        };
        Ok(RatMat2::new(
            conv(&rows[0][0])?,
            conv(&rows[0][1])?,
            conv(&rows[1][0])?,
            conv(&rows[1][1])?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_rat() -> impl Strategy<Value = Rational> {
        (-20i64..=20, 1i64..=12).prop_map(|(n, d)| rat(n, d))
    }

    fn small_mat() -> impl Strategy<Value = RatMat2> {
        (small_rat(), small_rat(), small_rat(), small_rat())
            .prop_map(|(a, b, c, d)| RatMat2::new(a, b, c, d))
    }

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["0", "-3", "5/6", "-5/6", "12/8"] {
            let r = parse_rational(s).unwrap();
            let back = parse_rational(&rational_to_string(&r)).unwrap();
            assert_eq!(r, back);
        }
        assert_eq!(rational_to_string(&parse_rational("12/8").unwrap()), "3/2");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn inverse_and_identity() {
        let m = RatMat2::from_ints(2, 1, 1, 1);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).is_identity());
        assert!(RatMat2::from_ints(1, 2, 2, 4).inverse().is_none());
    }

    proptest! {
        #[test]
        fn det_is_multiplicative(m in small_mat(), n in small_mat()) {
            prop_assert_eq!(m.mul(&n).det(), m.det() * n.det());
        }

        #[test]
        fn transpose_reverses_products(m in small_mat(), n in small_mat()) {
            prop_assert_eq!(m.mul(&n).transpose(), n.transpose().mul(&m.transpose()));
        }

        #[test]
        fn json_round_trip_is_exact(m in small_mat()) {
            let text = serde_json::to_string(&m).unwrap();
            let back: RatMat2 = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(m, back);
        }

        #[test]
        fn vec_json_round_trip(x in small_rat(), y in small_rat()) {
            let v = Vec2::new(x, y);
            let text = serde_json::to_string(&v).unwrap();
            let back: Vec2 = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(v, back);
        }
    }

    #[test]
    fn matrix_json_uses_fraction_strings() {
        let m = RatMat2::new(rat_int(1), rat(5, 6), rat_int(0), rat_int(1));
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"[[1,"5/6"],[0,1]]"#);
    }
}
