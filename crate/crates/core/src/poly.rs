//! Dense univariate polynomials over [`Scalar`] coefficients.
//!
//! Coefficients are stored in ascending degree order; the zero polynomial is
//! the empty vector with degree -1 by convention. Construction trims trailing
//! zeros and, if any coefficient is a float, promotes the whole coefficient
//! vector to floats of the largest precision present, so a polynomial never
//! mixes scalar modes.

use crate::complex::ComplexScalar;
use crate::error::{Error, Result};
use crate::scalar::{ArithMode, Scalar};
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Scalar>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<Scalar>) -> Self {
        let float_prec = coeffs
            .iter()
            .filter_map(|c| c.precision())
            .max();
        if let Some(p) = float_prec {
            for c in coeffs.iter_mut() {
                if c.mode() == ArithMode::Rational || c.precision() != Some(p) {
                    *c = c.to_float(p);
                }
            }
        }
        let mut p = Polynomial { coeffs };
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial::constant(Scalar::one())
    }

    pub fn constant(c: Scalar) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn x() -> Self {
        Polynomial::new(vec![Scalar::zero(), Scalar::one()])
    }

    /// The monic linear factor x - c.
    pub fn x_minus(c: &Scalar) -> Self {
        Polynomial::new(vec![-c, Scalar::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree with the zero polynomial at -1.
    pub fn degree(&self) -> isize {
        self.coeffs.len() as isize - 1
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    /// Coefficient of x^k (zero beyond the degree).
    pub fn coef(&self, k: usize) -> Scalar {
        self.coeffs.get(k).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn leading(&self) -> Option<&Scalar> {
        self.coeffs.last()
    }

    /// (degree, leading coefficient); (-1, 0) for the zero polynomial.
    pub fn lcoef(&self) -> (isize, Scalar) {
        match self.coeffs.last() {
            Some(c) => (self.degree(), c.clone()),
            None => (-1, Scalar::zero()),
        }
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_some_and(|c| *c == Scalar::one())
    }

    pub fn mode(&self) -> ArithMode {
        self.coeffs
            .first()
            .map(Scalar::mode)
            .unwrap_or(ArithMode::Rational)
    }

    pub fn precision(&self) -> Option<u32> {
        self.coeffs.first().and_then(Scalar::precision)
    }

    pub fn to_float(&self, precision_bits: u32) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .map(|c| c.to_float(precision_bits))
                .collect(),
        )
    }

    pub fn scale(&self, s: &Scalar) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Largest coefficient magnitude (sup norm); zero for the zero polynomial.
    pub fn sup_norm(&self) -> Scalar {
        self.coeffs
            .iter()
            .map(Scalar::abs)
            .fold(Scalar::zero(), |acc, c| acc.max(&c))
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * &Scalar::from_usize(i))
                .collect(),
        )
    }

    /// k-fold formal derivative.
    pub fn derivative_k(&self, k: usize) -> Polynomial {
        let mut p = self.clone();
        for _ in 0..k {
            if p.is_zero() {
                break;
            }
            p = p.derivative();
        }
        p
    }

    /// Horner evaluation.
    pub fn eval(&self, x: &Scalar) -> Scalar {
        let mut acc = Scalar::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn eval_complex(&self, z: &ComplexScalar) -> ComplexScalar {
        let mut acc = ComplexScalar::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * z) + &ComplexScalar::from_real(c.clone());
        }
        acc
    }

    /// Taylor polynomial of degree <= k of `self` centered at y:
    /// sum_{v=0}^{k} f^(v)(y)/v! (x-y)^v.
    pub fn taylor_at(&self, y: &Scalar, k: usize) -> Polynomial {
        let mut out = Polynomial::zero();
        let mut base = Polynomial::one();
        let x_minus_y = Polynomial::x_minus(y);
        let mut deriv = self.clone();
        let mut fact = Scalar::one();
        for v in 0..=k {
            if v > 0 {
                fact = &fact * &Scalar::from_usize(v);
                deriv = deriv.derivative();
                base = &base * &x_minus_y;
            }
            let coeff = &deriv.eval(y) / &fact;
            out = &out + &base.scale(&coeff);
        }
        out
    }

    /// Quotient and remainder of polynomial long division.
    pub fn divrem(&self, den: &Polynomial) -> (Polynomial, Polynomial) {
        assert!(!den.is_zero(), "polynomial division by zero");
        if self.degree() < den.degree() {
            return (Polynomial::zero(), self.clone());
        }
        let dlc = den.leading().unwrap().clone();
        let dd = den.coeffs.len() - 1;
        let mut rem = self.coeffs.clone();
        let mut quo = vec![Scalar::zero(); rem.len() - dd];
        while rem.len() > dd && !rem.is_empty() {
            let k = rem.len() - 1 - dd;
            let c = &rem[rem.len() - 1] / &dlc;
            for (i, dc) in den.coeffs.iter().enumerate() {
                let t = &rem[k + i] - &(&c * dc);
                rem[k + i] = t;
            }
            quo[k] = c;
            while rem.last().is_some_and(|c| c.is_zero()) {
                rem.pop();
            }
            if rem.len() <= dd {
                break;
            }
        }
        (Polynomial::new(quo), Polynomial::new(rem))
    }

    /// Division that must be exact: zero remainder in rational mode, or
    /// remainder sup-norm below `2^(-precision/2) * sup_norm(self)` in float
    /// mode. The remainder is reported in the error for diagnostics.
    pub fn exact_divide(&self, den: &Polynomial, context: &str) -> Result<Polynomial> {
        let (q, r) = self.divrem(den);
        let ok = match self.mode() {
            ArithMode::Rational if den.mode() == ArithMode::Rational => r.is_zero(),
            _ => {
                let bits = self.precision().or(den.precision()).unwrap_or(256);
                let tol = &Scalar::pow2(-(bits as i32) / 2, bits)
                    * &self.sup_norm().max(&Scalar::one());
                r.sup_norm() <= tol
            }
        };
        if ok {
            Ok(q)
        } else {
            Err(Error::InexactDivision {
                context: context.to_string(),
                remainder_norm: r.sup_norm().to_string(),
            })
        }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// True when the residual is exactly zero (rational mode) or its sup-norm
    /// is below 2^-bits relative to `scale` (float mode).
    pub fn is_negligible(&self, bits: u32, scale: &Scalar) -> bool {
        match self.mode() {
            ArithMode::Rational => self.is_zero(),
            ArithMode::Float => {
                let prec = self.precision().unwrap_or(bits);
                let tol = &Scalar::pow2(-(bits as i32), prec) * &scale.abs().max(&Scalar::one());
                self.sup_norm() <= tol
            }
        }
    }
}

impl std::ops::Add<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(&self.coef(i) + &rhs.coef(i));
        }
        Polynomial::new(out)
    }
}

impl std::ops::Sub<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(&self.coef(i) - &rhs.coef(i));
        }
        Polynomial::new(out)
    }
}

impl std::ops::Mul<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![Scalar::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                let t = &out[i + j] + &(a * b);
                out[i + j] = t;
            }
        }
        Polynomial::new(out)
    }
}

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})*x")?,
                _ => write!(f, "({c})*x^{i}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(coeffs: &[i64]) -> Polynomial {
        Polynomial::new(coeffs.iter().map(|&c| Scalar::from_i64(c)).collect())
    }

    #[test]
    fn difference_of_squares() {
        let a = p(&[1, 1]); // x + 1
        let b = p(&[-1, 1]); // x - 1
        assert_eq!(&a * &b, p(&[-1, 0, 1]));
    }

    #[test]
    fn additive_identity_and_zero_degree() {
        let a = p(&[3, 0, 2]);
        assert_eq!(&a + &Polynomial::zero(), a);
        assert_eq!(Polynomial::zero().degree(), -1);
        assert_eq!(p(&[5]).degree(), 0);
    }

    #[test]
    fn derivative_power_rule_and_exhaustion() {
        let a = p(&[-2, 0, 1]); // x^2 - 2
        assert_eq!(a.derivative(), p(&[0, 2]));
        let lin = p(&[7, 3]);
        assert!(lin.derivative_k(2).is_zero());
        assert!(lin.derivative_k(5).is_zero());
    }

    #[test]
    fn eval_constant_and_complex() {
        let a = p(&[4, -1, 2]);
        assert_eq!(a.eval(&Scalar::zero()), Scalar::from_i64(4));
        let z = ComplexScalar::new(Scalar::zero(), Scalar::one());
        // 2i^2 - i + 4 = 2 - i... careful: 2*(-1) - i + 4 = 2 - i
        let v = a.eval_complex(&z);
        assert_eq!(v.re, Scalar::from_i64(2));
        assert_eq!(v.im, Scalar::from_i64(-1));
    }

    #[test]
    fn taylor_truncation() {
        // T_1(x, -2; x^2-4x+2) = 14 - 8(x+2) = -8x - 2
        let f = p(&[2, -4, 1]);
        let t1 = f.taylor_at(&Scalar::from_i64(-2), 1);
        assert_eq!(t1, p(&[-2, -8]));
        // zeroth Taylor term is the constant f(c)
        let t0 = f.taylor_at(&Scalar::from_i64(-2), 0);
        assert_eq!(t0, p(&[14]));
        // k >= deg f reproduces f
        assert_eq!(f.taylor_at(&Scalar::from_i64(5), 2), f);
        assert_eq!(f.taylor_at(&Scalar::from_i64(5), 9), f);
    }

    #[test]
    fn taylor_matches_derivatives() {
        let f = p(&[3, 1, -4, 2, 5]);
        let y = Scalar::rational(-3, 2);
        for k in 0..=4 {
            let t = f.taylor_at(&y, k);
            for v in 0..=k {
                assert_eq!(t.derivative_k(v).eval(&y), f.derivative_k(v).eval(&y));
            }
            assert!(t.degree() <= k as isize);
        }
    }

    #[test]
    fn exact_division() {
        let num = p(&[-1, 0, 1]);
        let den = p(&[-1, 1]);
        assert_eq!(num.exact_divide(&den, "test").unwrap(), p(&[1, 1]));
        let bad = p(&[1, 0, 1]);
        assert!(matches!(
            bad.exact_divide(&den, "test"),
            Err(Error::InexactDivision { .. })
        ));
    }

    #[test]
    fn divrem_reconstructs() {
        let num = p(&[7, -3, 0, 2, 1]);
        let den = p(&[1, 2, 1]);
        let (q, r) = num.divrem(&den);
        assert_eq!(&(&q * &den) + &r, num);
        assert!(r.degree() < den.degree());
    }

    #[test]
    fn float_promotion_in_constructor() {
        let mixed = Polynomial::new(vec![
            Scalar::rational(1, 3),
            Scalar::from_i64(1).to_float(128),
        ]);
        assert_eq!(mixed.mode(), ArithMode::Float);
        assert_eq!(mixed.precision(), Some(128));
    }
}
