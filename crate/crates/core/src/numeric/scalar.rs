use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use rug::ops::Pow;
use rug::{Complex, Float, Integer, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::Error;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Extra binary digits carried above the requested decimal precision.
pub const GUARD_BITS: u32 = 160;

/// Extra significant digits written when serializing approximate values.
const PRINT_EXTRA_DIGITS: u32 = 12;

pub fn bits_for_digits(digits: u32) -> u32 {
    (digits as f64 * LOG2_10).ceil() as u32 + GUARD_BITS
}

pub fn digits_for_bits(bits: u32) -> u32 {
    (bits.saturating_sub(GUARD_BITS) as f64 / LOG2_10).floor() as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarMode {
    Exact,
    Complex { digits: u32 },
}

impl ScalarMode {
    pub fn is_exact(self) -> bool {
        matches!(self, ScalarMode::Exact)
    }

    pub fn bits(self) -> u32 {
        match self {
            ScalarMode::Exact => 0,
            ScalarMode::Complex { digits } => bits_for_digits(digits),
        }
    }

    pub fn zero(self) -> Scalar {
        self.from_int(0)
    }

    pub fn one(self) -> Scalar {
        self.from_int(1)
    }

    pub fn from_int(self, v: i64) -> Scalar {
        match self {
            ScalarMode::Exact => Scalar::Exact(Rational::from(v)),
            ScalarMode::Complex { .. } => Scalar::Approx(Complex::with_val(self.bits(), v)),
        }
    }

    pub fn from_ratio(self, num: i64, den: i64) -> Scalar {
        assert!(den != 0, "zero denominator");
        match self {
            ScalarMode::Exact => Scalar::Exact(Rational::from((num, den))),
            ScalarMode::Complex { .. } => {
                let q = Rational::from((num, den));
                Scalar::Approx(Complex::with_val(self.bits(), &q))
            }
        }
    }

    pub fn from_rational(self, q: &Rational) -> Scalar {
        match self {
            ScalarMode::Exact => Scalar::Exact(q.clone()),
            ScalarMode::Complex { .. } => Scalar::Approx(Complex::with_val(self.bits(), q)),
        }
    }

    /// Lifts a complex number into this mode; only valid for approximate modes.
    pub fn from_complex(self, z: &Complex) -> Result<Scalar, Error> {
        match self {
            ScalarMode::Exact => Err(Error::ModeMismatch),
            ScalarMode::Complex { .. } => Ok(Scalar::Approx(Complex::with_val(self.bits(), z))),
        }
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            ScalarMode::Exact => 0.0,
            ScalarMode::Complex { digits } => 10f64.powf(-(digits as f64) / 2.0),
        }
    }
}

/// Either an exact rational or a complex number at fixed binary precision.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Approx(Complex),
}

impl Scalar {
    pub fn mode(&self) -> ScalarMode {
        match self {
            Scalar::Exact(_) => ScalarMode::Exact,
            Scalar::Approx(z) => ScalarMode::Complex {
                digits: digits_for_bits(z.prec().0),
            },
        }
    }

    pub fn same_kind(&self, other: &Scalar) -> bool {
        matches!(
            (self, other),
            (Scalar::Exact(_), Scalar::Exact(_)) | (Scalar::Approx(_), Scalar::Approx(_))
        )
    }

    pub fn zero_like(&self) -> Scalar {
        self.mode().zero()
    }

    pub fn is_exact_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.cmp0() == Ordering::Equal,
            Scalar::Approx(z) => z.real().is_zero() && z.imag().is_zero(),
        }
    }

    /// Absolute value as a double; exact values are rounded.
    pub fn magnitude(&self) -> f64 {
        match self {
            Scalar::Exact(q) => q.to_f64().abs(),
            Scalar::Approx(z) => {
                let a = Float::with_val(z.prec().0, z.abs_ref());
                a.to_f64()
            }
        }
    }

    /// Zero test used throughout the checks: exact zero, or magnitude at most `tol`.
    pub fn is_negligible(&self, tol: f64) -> bool {
        match self {
            Scalar::Exact(_) => self.is_exact_zero(),
            Scalar::Approx(_) => self.magnitude() <= tol,
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Approx(_) => None,
        }
    }

    pub fn as_complex(&self) -> Option<&Complex> {
        match self {
            Scalar::Exact(_) => None,
            Scalar::Approx(z) => Some(z),
        }
    }

    pub fn recip(&self) -> Result<Scalar, Error> {
        if self.is_exact_zero() {
            return Err(Error::Singular("division by zero".into()));
        }
        Ok(match self {
            Scalar::Exact(q) => Scalar::Exact(q.clone().recip()),
            Scalar::Approx(z) => Scalar::Approx(z.clone().recip()),
        })
    }

    pub fn pow_u32(&self, k: u32) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.clone().pow(k)),
            Scalar::Approx(z) => Scalar::Approx(z.clone().pow(k)),
        }
    }

    pub fn scale_int(&self, k: i64) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.clone() * Integer::from(k)),
            Scalar::Approx(z) => Scalar::Approx(z.clone() * Integer::from(k)),
        }
    }

    pub fn scale_ratio(&self, num: i64, den: i64) -> Scalar {
        let r = Rational::from((num, den));
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.clone() * r),
            Scalar::Approx(z) => Scalar::Approx(z.clone() * r),
        }
    }

    /// Returns the working precision in decimal digits (None for exact values).
    pub fn digits(&self) -> Option<u32> {
        match self.mode() {
            ScalarMode::Exact => None,
            ScalarMode::Complex { digits } => Some(digits),
        }
    }
}

fn mismatch() -> ! {
    panic!("{}", Error::ModeMismatch)
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(Rational::from(a $op b)),
                    (Scalar::Approx(a), Scalar::Approx(b)) => {
                        let prec = a.prec().0.max(b.prec().0);
                        Scalar::Approx(Complex::with_val(prec, a $op b))
                    }
                    _ => mismatch(),
                }
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Div<&Scalar> for &Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        if rhs.is_exact_zero() {
            panic!("division by zero scalar");
        }
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(Rational::from(a / b)),
            (Scalar::Approx(a), Scalar::Approx(b)) => {
                let prec = a.prec().0.max(b.prec().0);
                Scalar::Approx(Complex::with_val(prec, a / b))
            }
            _ => mismatch(),
        }
    }
}

impl Div<Scalar> for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        &self / &rhs
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(a) => Scalar::Exact(Rational::from(-a)),
            Scalar::Approx(a) => Scalar::Approx(Complex::with_val(a.prec(), -a)),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => *a += b,
            (Scalar::Approx(a), Scalar::Approx(b)) => *a += b,
            _ => mismatch(),
        }
    }
}

impl SubAssign<&Scalar> for Scalar {
    fn sub_assign(&mut self, rhs: &Scalar) {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => *a -= b,
            (Scalar::Approx(a), Scalar::Approx(b)) => *a -= b,
            _ => mismatch(),
        }
    }
}

impl MulAssign<&Scalar> for Scalar {
    fn mul_assign(&mut self, rhs: &Scalar) {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => *a *= b,
            (Scalar::Approx(a), Scalar::Approx(b)) => *a *= b,
            _ => mismatch(),
        }
    }
}

/// `acc += a * b` without an intermediate allocation in the approximate case.
pub fn fma_into(acc: &mut Scalar, a: &Scalar, b: &Scalar) {
    match (acc, a, b) {
        (Scalar::Exact(s), Scalar::Exact(x), Scalar::Exact(y)) => {
            if x.cmp0() != Ordering::Equal && y.cmp0() != Ordering::Equal {
                *s += Rational::from(x * y);
            }
        }
        (Scalar::Approx(s), Scalar::Approx(x), Scalar::Approx(y)) => {
            *s += x * y;
        }
        _ => mismatch(),
    }
}

fn float_to_string(f: &Float, sig: usize) -> String {
    if f.is_zero() {
        return "0".to_string();
    }
    f.to_string_radix(10, Some(sig))
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Scalar::Approx(z) => {
                let digits = digits_for_bits(z.prec().0);
                let sig = (digits + PRINT_EXTRA_DIGITS) as usize;
                write!(
                    f,
                    "({},{})@{}",
                    float_to_string(z.real(), sig),
                    float_to_string(z.imag(), sig),
                    digits
                )
            }
        }
    }
}

impl FromStr for Scalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Scalar, Error> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('(') {
            let (body, digits) = rest
                .split_once(")@")
                .ok_or_else(|| Error::Parse(format!("bad complex scalar '{s}'")))?;
            let digits: u32 = digits
                .parse()
                .map_err(|_| Error::Parse(format!("bad precision in '{s}'")))?;
            let (re, im) = body
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("bad complex scalar '{s}'")))?;
            let bits = bits_for_digits(digits);
            let parse = |t: &str| -> Result<Float, Error> {
                let p = Float::parse(t.trim())
                    .map_err(|e| Error::Parse(format!("bad mantissa '{t}': {e}")))?;
                Ok(Float::with_val(bits, p))
            };
            return Ok(Scalar::Approx(Complex::with_val(bits, (parse(re)?, parse(im)?))));
        }
        let q: Rational = match s.split_once('/') {
            Some((n, d)) => {
                let n: Integer = n
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad numerator in '{s}'")))?;
                let d: Integer = d
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad denominator in '{s}'")))?;
                if d.cmp0() == Ordering::Equal {
                    return Err(Error::Parse(format!("zero denominator in '{s}'")));
                }
                Rational::from((n, d))
            }
            None => Rational::from(
                s.parse::<Integer>()
                    .map_err(|_| Error::Parse(format!("bad scalar '{s}'")))?,
            ),
        };
        Ok(Scalar::Exact(q))
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Scalar, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
