//! Scalar field elements: exact rationals or big floats behind one type.
//!
//! Every coefficient in the crate is a [`Scalar`]. Rational values are kept
//! gcd-reduced with positive denominator (GMP canonical form). Float values
//! carry their precision; mixed rational/float arithmetic promotes the
//! rational side to the float side's precision, so a computation seeded with
//! floats of one precision stays at that precision throughout.

use crate::error::{Error, Result};
use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use std::cmp::Ordering;
use std::fmt;

/// Which scalar backend a configuration runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithMode {
    Rational,
    Float,
}

impl fmt::Display for ArithMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithMode::Rational => write!(f, "rational"),
            ArithMode::Float => write!(f, "float"),
        }
    }
}

/// A field element: exact rational or correctly rounded big float.
#[derive(Clone, Debug)]
pub enum Scalar {
    Rat(Rational),
    Big(Float),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Rat(Rational::new())
    }

    pub fn one() -> Self {
        Scalar::from_i64(1)
    }

    pub fn from_i64(v: i64) -> Self {
        Scalar::Rat(Rational::from(v))
    }

    pub fn from_usize(v: usize) -> Self {
        Scalar::Rat(Rational::from(v as u64))
    }

    pub fn rational(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Scalar::Rat(Rational::from((num, den)))
    }

    pub fn from_rug_rational(r: Rational) -> Self {
        Scalar::Rat(r)
    }

    pub fn from_rug_float(f: Float) -> Self {
        Scalar::Big(f)
    }

    /// n! as an exact rational.
    pub fn factorial(n: usize) -> Self {
        Scalar::Rat(Rational::from(Integer::from(Integer::factorial(n as u32))))
    }

    /// 2^exp at the given precision (exp may be negative).
    pub fn pow2(exp: i32, precision_bits: u32) -> Self {
        Scalar::Big(Float::with_val(precision_bits, Float::i_exp(1, exp)))
    }

    pub fn mode(&self) -> ArithMode {
        match self {
            Scalar::Rat(_) => ArithMode::Rational,
            Scalar::Big(_) => ArithMode::Float,
        }
    }

    pub fn precision(&self) -> Option<u32> {
        match self {
            Scalar::Rat(_) => None,
            Scalar::Big(f) => Some(f.prec()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rat(r) => r.cmp0() == Ordering::Equal,
            Scalar::Big(f) => f.is_zero(),
        }
    }

    pub fn is_negative(&self) -> bool {
        self.cmp0() == Ordering::Less
    }

    pub fn is_positive(&self) -> bool {
        self.cmp0() == Ordering::Greater
    }

    pub fn cmp0(&self) -> Ordering {
        match self {
            Scalar::Rat(r) => r.cmp0(),
            Scalar::Big(f) => f.cmp0().expect("NaN scalar"),
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Rat(r) => Scalar::Rat(r.clone().abs()),
            Scalar::Big(f) => Scalar::Big(f.clone().abs()),
        }
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Rat(r) => Scalar::Rat(Rational::from(-r)),
            Scalar::Big(f) => Scalar::Big(Float::with_val(f.prec(), -f)),
        }
    }

    pub fn recip(&self) -> Scalar {
        assert!(!self.is_zero(), "reciprocal of zero");
        match self {
            Scalar::Rat(r) => Scalar::Rat(r.clone().recip()),
            Scalar::Big(f) => Scalar::Big(f.clone().recip()),
        }
    }

    pub fn pow_i(&self, exp: i32) -> Scalar {
        match self {
            Scalar::Rat(r) => Scalar::Rat(Rational::from(r.pow(exp))),
            Scalar::Big(f) => Scalar::Big(Float::with_val(f.prec(), f.pow(exp))),
        }
    }

    /// Round into a float of the given precision (identity on floats of the
    /// same precision; floats of other precisions are re-rounded).
    pub fn to_float(&self, precision_bits: u32) -> Scalar {
        match self {
            Scalar::Rat(r) => Scalar::Big(Float::with_val(precision_bits, r)),
            Scalar::Big(f) => Scalar::Big(Float::with_val(precision_bits, f)),
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Scalar::Rat(r) => Some(r),
            Scalar::Big(_) => None,
        }
    }

    pub fn as_float(&self) -> Option<&Float> {
        match self {
            Scalar::Big(f) => Some(f),
            Scalar::Rat(_) => None,
        }
    }

    /// Exact nonnegative-integer view, when the value is one.
    pub fn as_nonneg_integer(&self) -> Option<u32> {
        match self {
            Scalar::Rat(r) => {
                if *r.denom() == 1 && r.cmp0() != Ordering::Less {
                    r.numer().to_u32()
                } else {
                    None
                }
            }
            Scalar::Big(f) => {
                if f.is_integer() && !f.is_sign_negative() {
                    f.to_integer().and_then(|i| i.to_u32())
                } else {
                    None
                }
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rat(r) => r.to_f64(),
            Scalar::Big(f) => f.to_f64(),
        }
    }

    fn require_float(&self, what: &'static str) -> &Float {
        match self {
            Scalar::Big(f) => f,
            Scalar::Rat(_) => panic!("{what} requires a float scalar; convert with to_float first"),
        }
    }

    /// Natural logarithm (float scalars only; argument must be positive).
    pub fn ln(&self) -> Scalar {
        let f = self.require_float("ln");
        assert!(f.cmp0() == Some(Ordering::Greater), "ln of non-positive value");
        Scalar::Big(f.clone().ln())
    }

    pub fn exp(&self) -> Scalar {
        Scalar::Big(self.require_float("exp").clone().exp())
    }

    pub fn sqrt(&self) -> Scalar {
        let f = self.require_float("sqrt");
        assert!(f.cmp0() != Some(Ordering::Less), "sqrt of negative value");
        Scalar::Big(f.clone().sqrt())
    }

    /// Gamma function (float scalars only; MPFR, correctly rounded).
    pub fn gamma(&self) -> Scalar {
        Scalar::Big(self.require_float("gamma").clone().gamma())
    }

    pub fn hypot(&self, other: &Scalar) -> Scalar {
        let a = self.require_float("hypot");
        let b = other.require_float("hypot");
        Scalar::Big(a.clone().hypot(b))
    }

    pub fn min(&self, other: &Scalar) -> Scalar {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn max(&self, other: &Scalar) -> Scalar {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Exact decimal string for rationals ("p/q"), rounded decimal for floats.
    pub fn to_decimal_string(&self, digits: usize) -> String {
        match self {
            Scalar::Rat(r) => r.to_string(),
            Scalar::Big(f) => format_float(f, digits),
        }
    }

    /// Rational mode requires exact comparison; float mode compares within
    /// `2^-bits * scale`.
    pub fn approx_eq(&self, other: &Scalar, bits: u32, scale: &Scalar) -> bool {
        match (self.mode(), other.mode()) {
            (ArithMode::Rational, ArithMode::Rational) => self == other,
            _ => {
                let prec = self
                    .precision()
                    .or_else(|| other.precision())
                    .unwrap_or(bits);
                let diff = (self - other).abs();
                let tol = &Scalar::pow2(-(bits as i32), prec) * &scale.abs().max(&Scalar::one());
                diff <= tol
            }
        }
    }
}

/// Deterministic decimal rendering without trailing noise digits.
fn format_float(f: &Float, digits: usize) -> String {
    if f.is_zero() {
        return "0".to_string();
    }
    let (sign, mantissa, exp) = split_decimal(f, digits);
    // exp is the position of the decimal point relative to the mantissa string
    let mut out = String::new();
    if sign {
        out.push('-');
    }
    out.push_str(&mantissa[..1]);
    out.push('.');
    out.push_str(&mantissa[1..]);
    out.push('e');
    out.push_str(&(exp - 1).to_string());
    out
}

fn split_decimal(f: &Float, digits: usize) -> (bool, String, i64) {
    let (s, exp) = f.to_string_radix_round(10, Some(digits.max(2)), Round::Nearest)
        .split_once('e')
        .map(|(m, e)| (m.to_string(), e.parse::<i64>().unwrap_or(0)))
        .unwrap_or_else(|| {
            let raw = f.to_string_radix_round(10, Some(digits.max(2)), Round::Nearest);
            (raw, 0)
        });
    let neg = s.starts_with('-');
    let mantissa: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
    (neg, mantissa, exp)
}

fn lift(a: &Scalar, b: &Scalar) -> (Scalar, Scalar) {
    match (a, b) {
        (Scalar::Rat(_), Scalar::Rat(_)) => (a.clone(), b.clone()),
        (Scalar::Big(x), Scalar::Big(y)) => {
            let p = x.prec().max(y.prec());
            (a.to_float(p), b.to_float(p))
        }
        (Scalar::Rat(_), Scalar::Big(y)) => (a.to_float(y.prec()), b.clone()),
        (Scalar::Big(x), Scalar::Rat(_)) => (a.clone(), b.to_float(x.prec())),
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $ratop:tt) => {
        impl std::ops::$trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                let (a, b) = lift(self, rhs);
                match (a, b) {
                    (Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(Rational::from(&x $ratop &y)),
                    (Scalar::Big(x), Scalar::Big(y)) => {
                        let p = x.prec().max(y.prec());
                        Scalar::Big(Float::with_val(p, &x $ratop &y))
                    }
                    _ => unreachable!("lift returns matching modes"),
                }
            }
        }
        impl std::ops::$trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
    };
}

scalar_binop!(Add, add, +);
scalar_binop!(Sub, sub, -);
scalar_binop!(Mul, mul, *);

impl std::ops::Div<&Scalar> for &Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        assert!(!rhs.is_zero(), "scalar division by zero");
        let (a, b) = lift(self, rhs);
        match (a, b) {
            (Scalar::Rat(x), Scalar::Rat(y)) => Scalar::Rat(Rational::from(&x / &y)),
            (Scalar::Big(x), Scalar::Big(y)) => {
                let p = x.prec().max(y.prec());
                Scalar::Big(Float::with_val(p, &x / &y))
            }
            _ => unreachable!(),
        }
    }
}

impl std::ops::Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        (&self) / (&rhs)
    }
}

impl std::ops::Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::neg(self)
    }
}

impl std::ops::Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::neg(&self)
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Rat(a), Scalar::Rat(b)) => a.partial_cmp(b),
            (Scalar::Big(a), Scalar::Big(b)) => a.partial_cmp(b),
            // float/rational comparison is exact in rug
            (Scalar::Rat(a), Scalar::Big(b)) => b.partial_cmp(a).map(Ordering::reverse),
            (Scalar::Big(a), Scalar::Rat(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rat(r) => write!(f, "{r}"),
            Scalar::Big(x) => write!(f, "{}", format_float(x, 25)),
        }
    }
}

/// Parse "p/q", integer, or plain decimal strings into an exact rational.
pub fn parse_exact_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Config("empty scalar string".into()));
    }
    if let Ok(r) = s.parse::<Rational>() {
        return Ok(r);
    }
    // decimal form like "-1.25": scale by a power of ten
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1i32, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    if let Some((int_part, frac_part)) = body.split_once('.') {
        if (int_part.is_empty() && frac_part.is_empty())
            || !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(Error::Config(format!("cannot parse scalar '{s}'")));
        }
        let digits = format!("{int_part}{frac_part}");
        let numer = digits
            .parse::<Integer>()
            .map_err(|_| Error::Config(format!("cannot parse scalar '{s}'")))?;
        let denom = Integer::from(10).pow(frac_part.len() as u32);
        let mut r = Rational::from((numer, denom));
        if sign < 0 {
            r = -r;
        }
        return Ok(r);
    }
    Err(Error::Config(format!("cannot parse scalar '{s}'")))
}

/// Parse a scalar string in the requested mode ("p/q", integer, decimal;
/// float mode additionally accepts exponent notation).
pub fn parse_scalar(s: &str, mode: ArithMode, precision_bits: u32) -> Result<Scalar> {
    match mode {
        ArithMode::Rational => parse_exact_rational(s).map(Scalar::Rat),
        ArithMode::Float => {
            if let Ok(r) = parse_exact_rational(s) {
                return Ok(Scalar::Big(Float::with_val(precision_bits, r)));
            }
            Float::parse(s)
                .map(|p| Scalar::Big(Float::with_val(precision_bits, p)))
                .map_err(|_| Error::Config(format!("cannot parse scalar '{s}'")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_canonical_form() {
        let a = Scalar::rational(6, -4);
        match &a {
            Scalar::Rat(r) => {
                assert_eq!(r.numer().to_i32(), Some(-3));
                assert_eq!(r.denom().to_i32(), Some(2));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn mixed_mode_promotes_to_float_precision() {
        let a = Scalar::rational(1, 3);
        let b = Scalar::from_i64(2).to_float(192);
        let c = &a + &b;
        assert_eq!(c.precision(), Some(192));
        assert_eq!(c.mode(), ArithMode::Float);
    }

    #[test]
    fn exact_ops() {
        let a = Scalar::rational(1, 3);
        let b = Scalar::rational(1, 6);
        assert_eq!(&a + &b, Scalar::rational(1, 2));
        assert_eq!(&a - &b, Scalar::rational(1, 6));
        assert_eq!(&a * &b, Scalar::rational(1, 18));
        assert_eq!(&a / &b, Scalar::from_i64(2));
        assert_eq!(a.pow_i(3), Scalar::rational(1, 27));
    }

    #[test]
    fn float_transcendentals() {
        let two = Scalar::from_i64(2).to_float(256);
        let r = two.sqrt();
        let back = &r * &r;
        assert!(back.approx_eq(&Scalar::from_i64(2).to_float(256), 250, &Scalar::one()));
        let g = Scalar::from_i64(12).to_float(256).gamma();
        assert_eq!(g.to_f64(), 39916800.0);
    }

    #[test]
    fn float_rational_comparison_is_exact() {
        let f = Scalar::rational(1, 3).to_float(64);
        // rounded value of 1/3 at 64 bits is not exactly 1/3
        assert_ne!(f, Scalar::rational(1, 3));
        let half = Scalar::rational(1, 2).to_float(64);
        assert_eq!(half, Scalar::rational(1, 2));
    }

    #[test]
    fn parse_scalars() {
        assert_eq!(
            parse_exact_rational("-1.25").unwrap(),
            Rational::from((-5, 4))
        );
        assert_eq!(parse_exact_rational("3/4").unwrap(), Rational::from((3, 4)));
        assert_eq!(parse_exact_rational("7").unwrap(), Rational::from(7));
        assert!(parse_exact_rational("abc").is_err());
        let f = parse_scalar("1.5e-3", ArithMode::Float, 128).unwrap();
        assert!((f.to_f64() - 0.0015).abs() < 1e-18);
    }

    #[test]
    fn factorial_and_pow2() {
        assert_eq!(Scalar::factorial(11), Scalar::from_i64(39916800));
        let t = Scalar::pow2(-10, 64);
        assert_eq!(t.to_f64(), 1.0 / 1024.0);
    }
}
