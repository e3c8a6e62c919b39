//! Monic Laguerre family: recurrence cache, norms, ladder operators, ODE.

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::{ArithMode, Scalar};
use std::sync::Mutex;

/// Direction of a first-order ladder operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadderDirection {
    Down,
    Up,
}

struct Cache {
    polys: Vec<Polynomial>,
    gamma_alpha_plus_1: Option<Scalar>,
}

/// The monic family for one alpha > -1, with a grow-only recurrence cache.
///
/// Cache growth is synchronized, so a family can be shared across threads;
/// all returned values are owned and immutable.
pub struct LaguerreFamily {
    alpha: Scalar,
    cache: Mutex<Cache>,
}

impl LaguerreFamily {
    pub fn new(alpha: Scalar) -> Result<Self> {
        if alpha <= Scalar::from_i64(-1) {
            return Err(Error::Config(format!("alpha must exceed -1, got {alpha}")));
        }
        Ok(LaguerreFamily {
            alpha,
            cache: Mutex::new(Cache {
                polys: vec![Polynomial::one()],
                gamma_alpha_plus_1: None,
            }),
        })
    }

    pub fn alpha(&self) -> &Scalar {
        &self.alpha
    }

    pub fn mode(&self) -> ArithMode {
        self.alpha.mode()
    }

    /// alpha as a nonnegative integer, when it is one.
    pub fn alpha_nonneg_integer(&self) -> Option<u32> {
        self.alpha.as_nonneg_integer()
    }

    /// Recurrence coefficient beta_k = 2k + alpha + 1.
    pub fn beta(&self, k: usize) -> Scalar {
        &Scalar::from_usize(2 * k + 1) + &self.alpha
    }

    /// Recurrence coefficient gamma_k = k (k + alpha).
    pub fn gamma_rec(&self, k: usize) -> Scalar {
        &Scalar::from_usize(k) * &(&Scalar::from_usize(k) + &self.alpha)
    }

    /// The monic polynomial of degree n, built by the three-term recurrence
    /// and cross-checked against the explicit binomial sum.
    pub fn monic(&self, n: usize) -> Polynomial {
        let mut cache = self.cache.lock().unwrap();
        while cache.polys.len() <= n {
            let k = cache.polys.len() - 1; // highest cached degree
            let next = if k == 0 {
                Polynomial::new(vec![-&(&self.alpha + &Scalar::one()), Scalar::one()])
            } else {
                let x_minus_beta = Polynomial::x_minus(&self.beta(k));
                &(&x_minus_beta * &cache.polys[k]) - &cache.polys[k - 1].scale(&self.gamma_rec(k))
            };
            let explicit = self.explicit_binomial(k + 1);
            let residual = &next - &explicit;
            let bits = self.alpha.precision().map(|p| p / 2).unwrap_or(0);
            if !residual.is_negligible(bits.max(1), &next.sup_norm()) {
                panic!(
                    "Laguerre recurrence disagrees with the binomial form at degree {} (alpha = {})",
                    k + 1,
                    self.alpha
                );
            }
            cache.polys.push(next);
        }
        cache.polys[n].clone()
    }

    /// The explicit coefficient formula: the x^k coefficient of the monic
    /// degree-n member is (-1)^(n+k) (n!/k!) prod_{j=k+1}^{n} (alpha+j)/(n-k)!.
    pub fn explicit_binomial(&self, n: usize) -> Polynomial {
        let mut coeffs = Vec::with_capacity(n + 1);
        for k in 0..=n {
            // n!/k! and the generalized binomial prod_{j=k+1}^n (alpha+j)/(n-k)!
            let mut c = Scalar::one();
            for j in (k + 1)..=n {
                c = &c * &Scalar::from_usize(j); // n!/k!
            }
            let mut b = Scalar::one();
            for j in (k + 1)..=n {
                b = &b * &(&self.alpha + &Scalar::from_usize(j));
            }
            b = &b / &Scalar::factorial(n - k);
            let mut v = &c * &b;
            if (n + k) % 2 == 1 {
                v = -&v;
            }
            coeffs.push(v);
        }
        Polynomial::new(coeffs)
    }

    /// Gamma(alpha + 1): exact factorial for nonnegative integer alpha,
    /// MPFR gamma in float mode.
    fn gamma_alpha_plus_1(&self) -> Result<Scalar> {
        if let Some(a) = self.alpha_nonneg_integer() {
            let v = Scalar::factorial(a as usize);
            return Ok(match self.mode() {
                ArithMode::Rational => v,
                ArithMode::Float => v.to_float(self.alpha.precision().unwrap()),
            });
        }
        if self.mode() == ArithMode::Rational {
            return Err(Error::GammaUnavailable {
                alpha: self.alpha.to_string(),
            });
        }
        let mut cache = self.cache.lock().unwrap();
        if cache.gamma_alpha_plus_1.is_none() {
            let one = Scalar::one().to_float(self.alpha.precision().unwrap());
            cache.gamma_alpha_plus_1 = Some((&self.alpha + &one).gamma());
        }
        Ok(cache.gamma_alpha_plus_1.clone().unwrap())
    }

    /// Moment of the measure: Gamma(alpha + k + 1), advanced from
    /// Gamma(alpha + 1) by the functional equation.
    pub fn moment(&self, k: usize) -> Result<Scalar> {
        let mut m = self.gamma_alpha_plus_1()?;
        for i in 1..=k {
            m = &m * &(&self.alpha + &Scalar::from_usize(i));
        }
        Ok(m)
    }

    /// Squared norm h_n = n! Gamma(n + alpha + 1); strictly positive.
    pub fn norm_sq(&self, n: usize) -> Result<Scalar> {
        let v = &Scalar::factorial(n) * &self.moment(n)?;
        debug_assert!(v.is_positive());
        Ok(v)
    }

    /// Apply the classical ladder operator at index n (n >= 1) to p:
    /// down is (x/gamma_n) d/dx - (n/gamma_n) I, up is -x d/dx + (x-n-alpha) I.
    pub fn ladder(&self, n: usize, direction: LadderDirection, p: &Polynomial) -> Polynomial {
        assert!(n >= 1, "ladder index must be positive");
        let x = Polynomial::x();
        match direction {
            LadderDirection::Down => {
                let g = self.gamma_rec(n);
                let t = &(&x * &p.derivative()) - &p.scale(&Scalar::from_usize(n));
                t.scale(&g.recip())
            }
            LadderDirection::Up => {
                let shift = &Scalar::from_usize(n) + &self.alpha;
                let lin = Polynomial::x_minus(&shift);
                &(&lin * p) - &(&x * &p.derivative())
            }
        }
    }

    /// Residual of the classical differential equation applied to the
    /// degree-n member: x Y'' + (alpha + 1 - x) Y' + n Y.
    pub fn ode_residual(&self, n: usize) -> Polynomial {
        let y = self.monic(n);
        let x = Polynomial::x();
        let mut lin = Polynomial::new(vec![&self.alpha + &Scalar::one(), Scalar::from_i64(-1)]);
        if self.mode() == ArithMode::Float {
            lin = lin.to_float(self.alpha.precision().unwrap());
        }
        let t2 = &x * &y.derivative_k(2);
        let t1 = &lin * &y.derivative();
        let t0 = y.scale(&Scalar::from_usize(n));
        &(&t2 + &t1) + &t0
    }
}
