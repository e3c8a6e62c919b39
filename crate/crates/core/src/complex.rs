//! Complex values built from scalar pairs.

use crate::scalar::Scalar;
use std::fmt;

/// A complex number with [`Scalar`] real and imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexScalar {
    pub re: Scalar,
    pub im: Scalar,
}

impl ComplexScalar {
    pub fn new(re: Scalar, im: Scalar) -> Self {
        ComplexScalar { re, im }
    }

    pub fn from_real(re: Scalar) -> Self {
        let im = match &re {
            Scalar::Big(f) => Scalar::zero().to_float(f.prec()),
            Scalar::Rat(_) => Scalar::zero(),
        };
        ComplexScalar { re, im }
    }

    pub fn zero() -> Self {
        ComplexScalar::new(Scalar::zero(), Scalar::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        ComplexScalar::new(self.re.clone(), -&self.im)
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        ComplexScalar::new(&self.re * s, &self.im * s)
    }

    /// |z|^2, exact in rational mode.
    pub fn abs_sq(&self) -> Scalar {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    /// |z| via hypot (float scalars).
    pub fn abs(&self) -> Scalar {
        self.re.hypot(&self.im)
    }

    pub fn recip(&self) -> Self {
        let d = self.abs_sq();
        assert!(!d.is_zero(), "complex reciprocal of zero");
        ComplexScalar::new(&self.re / &d, &(-&self.im) / &d)
    }
}

impl std::ops::Add<&ComplexScalar> for &ComplexScalar {
    type Output = ComplexScalar;
    fn add(self, rhs: &ComplexScalar) -> ComplexScalar {
        ComplexScalar::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl std::ops::Sub<&ComplexScalar> for &ComplexScalar {
    type Output = ComplexScalar;
    fn sub(self, rhs: &ComplexScalar) -> ComplexScalar {
        ComplexScalar::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl std::ops::Mul<&ComplexScalar> for &ComplexScalar {
    type Output = ComplexScalar;
    fn mul(self, rhs: &ComplexScalar) -> ComplexScalar {
        let re = &(&self.re * &rhs.re) - &(&self.im * &rhs.im);
        let im = &(&self.re * &rhs.im) + &(&self.im * &rhs.re);
        ComplexScalar::new(re, im)
    }
}

impl std::ops::Div<&ComplexScalar> for &ComplexScalar {
    type Output = ComplexScalar;
    fn div(self, rhs: &ComplexScalar) -> ComplexScalar {
        self * &rhs.recip()
    }
}

impl std::ops::Neg for &ComplexScalar {
    type Output = ComplexScalar;
    fn neg(self) -> ComplexScalar {
        ComplexScalar::new(-&self.re, -&self.im)
    }
}

impl fmt::Display for ComplexScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.im.is_negative() {
            write!(f, "{} - {}i", self.re, self.im.abs())
        } else {
            write!(f, "{} + {}i", self.re, self.im)
        }
    }
}
