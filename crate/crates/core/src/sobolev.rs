//! Discrete Sobolev inner product and the Sobolev orthogonal family.
//!
//! The inner product is the Laguerre measure x^alpha e^-x dx on (0, inf)
//! plus point terms lambda_{j,k} f^(k)(c_j) g^(k)(c_j) at mass points
//! c_j < 0. The continuous part is evaluated exactly through the moments
//! Gamma(alpha + k + 1), never by quadrature, so every identity test in
//! rational mode is an exact-zero test.

use crate::error::{Error, Result};
use crate::laguerre::LaguerreFamily;
use crate::poly::Polynomial;
use crate::scalar::{ArithMode, Scalar};
use rug::{Integer, Rational};
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

/// One mass point: location c < 0, top derivative order, and one weight per
/// derivative order 0..=order (zeros allowed below the top order).
#[derive(Clone, Debug)]
pub struct MassPoint {
    pub c: Scalar,
    pub order: usize,
    pub lambdas: Vec<Scalar>,
}

/// A validated Sobolev configuration.
///
/// Masses are kept sorted by (order, location); the index pairs (j, k) with
/// lambda_{j,k} > 0 are frozen in lexicographic order and index every
/// kernel matrix row/column and derivative vector in the crate.
#[derive(Clone, Debug)]
pub struct SobolevConfig {
    alpha: Scalar,
    masses: Vec<MassPoint>,
    mode: ArithMode,
    precision_bits: u32,
    iplus: Vec<(usize, usize)>,
}

impl SobolevConfig {
    pub fn new(
        alpha: Scalar,
        mut masses: Vec<MassPoint>,
        mode: ArithMode,
        precision_bits: u32,
    ) -> Result<Self> {
        if precision_bits < 16 {
            return Err(Error::Config("precision_bits must be at least 16".into()));
        }
        if alpha <= Scalar::from_i64(-1) {
            return Err(Error::Config(format!("alpha must exceed -1, got {alpha}")));
        }
        for m in &masses {
            if !m.c.is_negative() {
                return Err(Error::Config(format!(
                    "mass point {} must be strictly negative",
                    m.c
                )));
            }
            if m.lambdas.len() != m.order + 1 {
                return Err(Error::Config(format!(
                    "mass at {} declares order {} but {} weights",
                    m.c,
                    m.order,
                    m.lambdas.len()
                )));
            }
            if m.lambdas.iter().any(Scalar::is_negative) {
                return Err(Error::Config(format!(
                    "negative lambda at mass point {}",
                    m.c
                )));
            }
            if m.lambdas[m.order].is_zero() {
                return Err(Error::Config(format!(
                    "top-order lambda at mass point {} must be positive",
                    m.c
                )));
            }
        }
        for i in 0..masses.len() {
            for j in (i + 1)..masses.len() {
                if masses[i].c == masses[j].c {
                    return Err(Error::Config(format!(
                        "duplicate mass point {}",
                        masses[i].c
                    )));
                }
            }
        }
        // canonical order: ascending top derivative order, then location
        masses.sort_by(|a, b| {
            a.order
                .cmp(&b.order)
                .then_with(|| a.c.partial_cmp(&b.c).unwrap())
        });
        let (alpha, masses) = match mode {
            ArithMode::Rational => {
                let all_rat = alpha.mode() == ArithMode::Rational
                    && masses.iter().all(|m| {
                        m.c.mode() == ArithMode::Rational
                            && m.lambdas.iter().all(|l| l.mode() == ArithMode::Rational)
                    });
                if !all_rat {
                    return Err(Error::Config(
                        "rational mode requires rational alpha, c, lambda".into(),
                    ));
                }
                (alpha, masses)
            }
            ArithMode::Float => {
                let alpha = alpha.to_float(precision_bits);
                let masses = masses
                    .into_iter()
                    .map(|m| MassPoint {
                        c: m.c.to_float(precision_bits),
                        order: m.order,
                        lambdas: m
                            .lambdas
                            .iter()
                            .map(|l| l.to_float(precision_bits))
                            .collect(),
                    })
                    .collect();
                (alpha, masses)
            }
        };
        let mut iplus = Vec::new();
        for (j, m) in masses.iter().enumerate() {
            for (k, l) in m.lambdas.iter().enumerate() {
                if l.is_positive() {
                    iplus.push((j, k));
                }
            }
        }
        Ok(SobolevConfig {
            alpha,
            masses,
            mode,
            precision_bits,
            iplus,
        })
    }

    /// Convenience constructor for single-order masses (one derivative order
    /// per point, as in all the worked examples).
    pub fn single_order(
        alpha: Scalar,
        masses: &[(Scalar, usize, Scalar)],
        mode: ArithMode,
        precision_bits: u32,
    ) -> Result<Self> {
        let masses = masses
            .iter()
            .map(|(c, order, lambda)| {
                let mut lambdas = vec![Scalar::zero(); order + 1];
                lambdas[*order] = lambda.clone();
                MassPoint {
                    c: c.clone(),
                    order: *order,
                    lambdas,
                }
            })
            .collect();
        SobolevConfig::new(alpha, masses, mode, precision_bits)
    }

    /// The classical configuration: no mass points at all.
    pub fn classical(alpha: Scalar, mode: ArithMode, precision_bits: u32) -> Result<Self> {
        SobolevConfig::new(alpha, Vec::new(), mode, precision_bits)
    }

    pub fn alpha(&self) -> &Scalar {
        &self.alpha
    }

    pub fn mode(&self) -> ArithMode {
        self.mode
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn masses(&self) -> &[MassPoint] {
        &self.masses
    }

    /// Number of mass points N.
    pub fn n_masses(&self) -> usize {
        self.masses.len()
    }

    /// d = sum of (d_j + 1).
    pub fn total_d(&self) -> usize {
        self.masses.iter().map(|m| m.order + 1).sum()
    }

    /// d* = number of strictly positive weights.
    pub fn d_star(&self) -> usize {
        self.iplus.len()
    }

    /// Index pairs (j, k) with lambda_{j,k} > 0, lexicographic.
    pub fn iplus(&self) -> &[(usize, usize)] {
        &self.iplus
    }

    pub fn lambda(&self, j: usize, k: usize) -> &Scalar {
        &self.masses[j].lambdas[k]
    }

    pub fn is_classical(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn laguerre_family(&self) -> Result<LaguerreFamily> {
        LaguerreFamily::new(self.alpha.clone())
    }

    /// Half the working precision, the identity tolerance in float mode.
    pub fn identity_bits(&self) -> u32 {
        (self.precision_bits / 2).max(1)
    }
}

/// Hull-nesting check on the derivative-order levels.
///
/// Level 0 is the convex hull of the measure support [0, inf) together with
/// any order-0 mass points; level k >= 1 holds the mass points with a
/// positive weight at derivative order k. The product is sequentially
/// ordered when no level meets the interior of the hull of all lower levels.
#[derive(Clone, Debug)]
pub struct SeqOrderedReport {
    pub ordered: bool,
    pub failing_level: Option<usize>,
}

pub fn is_sequentially_ordered(cfg: &SobolevConfig) -> SeqOrderedReport {
    let mut low = Scalar::zero();
    for m in cfg.masses() {
        if m.lambdas[0].is_positive() && m.c < low {
            low = m.c.clone();
        }
    }
    let d_max = cfg.masses().iter().map(|m| m.order).max().unwrap_or(0);
    for k in 1..=d_max {
        let level: Vec<&Scalar> = cfg
            .masses()
            .iter()
            .filter(|m| k <= m.order && m.lambdas[k].is_positive())
            .map(|m| &m.c)
            .collect();
        if level.is_empty() {
            continue;
        }
        // hull so far is [low, inf); interior is (low, inf)
        if level.iter().any(|c| **c > low) {
            return SeqOrderedReport {
                ordered: false,
                failing_level: Some(k),
            };
        }
        for c in level {
            if *c < low {
                low = c.clone();
            }
        }
    }
    SeqOrderedReport {
        ordered: true,
        failing_level: None,
    }
}

/// The Sobolev inner product of two polynomials.
pub fn sobolev_inner(
    cfg: &SobolevConfig,
    lag: &LaguerreFamily,
    f: &Polynomial,
    g: &Polynomial,
) -> Result<Scalar> {
    if f.is_zero() || g.is_zero() {
        return Ok(Scalar::zero());
    }
    let top = (f.degree() + g.degree()) as usize;
    let mut moments = Vec::with_capacity(top + 1);
    let mut m = lag.moment(0)?;
    moments.push(m.clone());
    for k in 1..=top {
        m = &m * &(cfg.alpha() + &Scalar::from_usize(k));
        moments.push(m.clone());
    }
    let mut acc = Scalar::zero();
    for (i, a) in f.coeffs().iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        for (j, b) in g.coeffs().iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            acc = &acc + &(&(a * b) * &moments[i + j]);
        }
    }
    for &(j, k) in cfg.iplus() {
        let c = &cfg.masses()[j].c;
        let fv = f.derivative_k(k).eval(c);
        let gv = g.derivative_k(k).eval(c);
        acc = &acc + &(&(cfg.lambda(j, k) * &fv) * &gv);
    }
    Ok(acc)
}

/// Kernel data at index n: the d*-by-d* matrix of mixed partial kernel
/// values at the mass points, and the kernel polynomials in x.
#[derive(Clone, Debug)]
pub struct KernelSet {
    pub n: usize,
    /// Entry (row (i,l), col (j,k)) = K_{n-1}^{(l,k)}(c_i, c_j), iplus order.
    pub values: Vec<Vec<Scalar>>,
    /// K_{n-1}^{(0,k)}(x, c_j) per iplus entry.
    pub polys: Vec<Polynomial>,
}

pub fn kernel_set(cfg: &SobolevConfig, lag: &LaguerreFamily, n: usize) -> Result<KernelSet> {
    assert!(n >= 1, "kernel index must be positive");
    let iplus = cfg.iplus();
    let dstar = iplus.len();
    // derivative values dv[m][j][k] = (L_m)^(k)(c_j) for k <= d_j
    let mut dv: Vec<Vec<Vec<Scalar>>> = Vec::with_capacity(n);
    let mut inv_h: Vec<Scalar> = Vec::with_capacity(n);
    for m in 0..n {
        let lm = lag.monic(m);
        let mut per_mass = Vec::with_capacity(cfg.n_masses());
        for mass in cfg.masses() {
            let mut vals = Vec::with_capacity(mass.order + 1);
            let mut d = lm.clone();
            for k in 0..=mass.order {
                if k > 0 {
                    d = d.derivative();
                }
                vals.push(d.eval(&mass.c));
            }
            per_mass.push(vals);
        }
        dv.push(per_mass);
        inv_h.push(lag.norm_sq(m)?.recip());
    }
    let mut values = vec![vec![Scalar::zero(); dstar]; dstar];
    for (row, &(i, l)) in iplus.iter().enumerate() {
        for (col, &(j, k)) in iplus.iter().enumerate() {
            let mut s = Scalar::zero();
            for m in 0..n {
                s = &s + &(&(&dv[m][i][l] * &dv[m][j][k]) * &inv_h[m]);
            }
            values[row][col] = s;
        }
    }
    let mut polys = Vec::with_capacity(dstar);
    for &(j, k) in iplus {
        let mut acc = Polynomial::zero();
        for m in 0..n {
            acc = &acc + &lag.monic(m).scale(&(&dv[m][j][k] * &inv_h[m]));
        }
        polys.push(acc);
    }
    if cfg.mode() == ArithMode::Rational {
        crosscheck_closed_form(cfg, lag, n, &polys)?;
    }
    if n >= cfg.total_d() && dstar > 0 {
        check_positive_definite(cfg, n, &values)?;
    }
    Ok(KernelSet { n, values, polys })
}

/// In rational mode, recompute each kernel polynomial from the closed
/// Christoffel-Darboux form and require exact agreement with the sum form.
fn crosscheck_closed_form(
    cfg: &SobolevConfig,
    lag: &LaguerreFamily,
    n: usize,
    polys: &[Polynomial],
) -> Result<()> {
    let ln = lag.monic(n);
    let lnm1 = lag.monic(n - 1);
    let h = lag.norm_sq(n - 1)?;
    for (idx, &(j, k)) in cfg.iplus().iter().enumerate() {
        let c = &cfg.masses()[j].c;
        let t_prev = lnm1.taylor_at(c, k);
        let t_curr = ln.taylor_at(c, k);
        let numer = (&(&t_prev * &ln) - &(&t_curr * &lnm1))
            .scale(&(&Scalar::factorial(k) / &h));
        let den = Polynomial::x_minus(c).pow(k as u32 + 1);
        let closed = numer.exact_divide(&den, "Christoffel-Darboux closed form")?;
        if closed != polys[idx] {
            return Err(Error::IdentityViolation {
                name: format!("kernel closed form (j,k)=({j},{k})"),
                n,
                residual: (&closed - &polys[idx]).sup_norm().to_string(),
            });
        }
    }
    Ok(())
}

/// Leading principal minors must all be positive once n >= d.
fn check_positive_definite(cfg: &SobolevConfig, n: usize, values: &[Vec<Scalar>]) -> Result<()> {
    let dstar = values.len();
    for size in 1..=dstar {
        let sub: Vec<Vec<Scalar>> = (0..size)
            .map(|r| values[r][..size].to_vec())
            .collect();
        let det = determinant(&sub);
        if !det.is_positive() {
            return Err(Error::PositiveDefiniteViolation {
                n,
                d: cfg.total_d(),
                minor: size,
                value: det.to_string(),
            });
        }
    }
    Ok(())
}

fn determinant(a: &[Vec<Scalar>]) -> Scalar {
    let n = a.len();
    let mut m: Vec<Vec<Scalar>> = a.to_vec();
    let mut det = Scalar::one();
    for col in 0..n {
        let piv = match (col..n).find(|&r| !m[r][col].is_zero()) {
            Some(p) => p,
            None => return Scalar::zero(),
        };
        if piv != col {
            m.swap(piv, col);
            det = -&det;
        }
        let pv = m[col][col].clone();
        det = &det * &pv;
        for r in (col + 1)..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &pv;
            for c in col..n {
                let t = &m[r][c] - &(&f * &m[col][c]);
                m[r][c] = t;
            }
        }
    }
    det
}

/// Solve A x = b. Rational mode clears denominators and runs fraction-free
/// (Bareiss) elimination over the integers; float mode uses partial pivoting.
fn solve_linear_system(
    a: &[Vec<Scalar>],
    b: &[Scalar],
    mode: ArithMode,
    n_label: usize,
) -> Result<Vec<Scalar>> {
    let n = b.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    match mode {
        ArithMode::Rational => {
            // clear denominators row by row
            let mut m: Vec<Vec<Integer>> = Vec::with_capacity(n);
            for (row, rhs) in a.iter().zip(b.iter()) {
                let mut lcm = Integer::from(1);
                for v in row.iter().chain(std::iter::once(rhs)) {
                    let r = v.as_rational().expect("rational mode");
                    lcm.lcm_mut(r.denom());
                }
                let mut int_row = Vec::with_capacity(n + 1);
                for v in row.iter().chain(std::iter::once(rhs)) {
                    let r = v.as_rational().unwrap();
                    let scaled = Rational::from((
                        Integer::from(r.numer() * &lcm),
                        r.denom().clone(),
                    ));
                    debug_assert_eq!(*scaled.denom(), 1);
                    int_row.push(scaled.numer().clone());
                }
                m.push(int_row);
            }
            // Bareiss fraction-free elimination
            let mut prev = Integer::from(1);
            for col in 0..n {
                let piv = (col..n)
                    .find(|&r| m[r][col] != 0)
                    .ok_or(Error::SingularSystem { n: n_label })?;
                m.swap(piv, col);
                for r in (col + 1)..n {
                    for c in (col + 1)..=n {
                        let t = Integer::from(&m[r][c] * &m[col][col])
                            - Integer::from(&m[r][col] * &m[col][c]);
                        let (q, rem) = t.div_rem(prev.clone());
                        debug_assert_eq!(rem, 0);
                        m[r][c] = q;
                    }
                    m[r][col] = Integer::new();
                }
                prev = m[col][col].clone();
            }
            // back substitution in rationals
            let mut x = vec![Rational::new(); n];
            for row in (0..n).rev() {
                let mut acc = Rational::from(&m[row][n]);
                for c in (row + 1)..n {
                    acc -= Rational::from(&m[row][c]) * &x[c];
                }
                x[row] = acc / Rational::from(&m[row][row]);
            }
            Ok(x.into_iter().map(Scalar::Rat).collect())
        }
        ArithMode::Float => {
            let mut m: Vec<Vec<Scalar>> = a
                .iter()
                .zip(b.iter())
                .map(|(row, rhs)| {
                    row.iter()
                        .cloned()
                        .chain(std::iter::once(rhs.clone()))
                        .collect()
                })
                .collect();
            for col in 0..n {
                let piv = (col..n)
                    .max_by(|&r1, &r2| {
                        m[r1][col]
                            .abs()
                            .partial_cmp(&m[r2][col].abs())
                            .unwrap()
                    })
                    .unwrap();
                if m[piv][col].is_zero() {
                    return Err(Error::SingularSystem { n: n_label });
                }
                m.swap(piv, col);
                let pv = m[col][col].clone();
                for r in (col + 1)..n {
                    if m[r][col].is_zero() {
                        continue;
                    }
                    let f = &m[r][col] / &pv;
                    for c in col..=n {
                        let t = &m[r][c] - &(&f * &m[col][c]);
                        m[r][c] = t;
                    }
                }
            }
            let mut x = vec![Scalar::zero(); n];
            for row in (0..n).rev() {
                let mut acc = m[row][n].clone();
                for c in (row + 1)..n {
                    acc = &acc - &(&m[row][c] * &x[c]);
                }
                x[row] = &acc / &m[row][row];
            }
            Ok(x)
        }
    }
}

/// A monic Sobolev orthogonal polynomial with the derivative values at the
/// mass points that were solved for along the way.
#[derive(Clone, Debug)]
pub struct SobolevPolynomial {
    pub n: usize,
    pub poly: Polynomial,
    /// S_n^(k)(c_j) per iplus entry.
    pub derivs: Vec<Scalar>,
}

/// The Sobolev family: configuration, Laguerre base family, and grow-only
/// caches for kernels and polynomials. Cache access is synchronized.
pub struct SobolevFamily {
    cfg: SobolevConfig,
    lag: LaguerreFamily,
    kernels: Mutex<BTreeMap<usize, Arc<KernelSet>>>,
    polys: Mutex<BTreeMap<usize, Arc<SobolevPolynomial>>>,
}

impl SobolevFamily {
    pub fn new(cfg: SobolevConfig) -> Result<Self> {
        let lag = cfg.laguerre_family()?;
        Ok(SobolevFamily {
            cfg,
            lag,
            kernels: Mutex::new(BTreeMap::new()),
            polys: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn config(&self) -> &SobolevConfig {
        &self.cfg
    }

    pub fn laguerre(&self) -> &LaguerreFamily {
        &self.lag
    }

    pub fn inner(&self, f: &Polynomial, g: &Polynomial) -> Result<Scalar> {
        sobolev_inner(&self.cfg, &self.lag, f, g)
    }

    pub fn kernel_set(&self, n: usize) -> Result<Arc<KernelSet>> {
        if let Some(k) = self.kernels.lock().unwrap().get(&n) {
            return Ok(k.clone());
        }
        let built = Arc::new(kernel_set(&self.cfg, &self.lag, n)?);
        Ok(self
            .kernels
            .lock()
            .unwrap()
            .entry(n)
            .or_insert(built)
            .clone())
    }

    /// Solve the d*-by-d* system for the derivative values S_n^(k)(c_j).
    pub fn solve_mass_derivatives(&self, n: usize) -> Result<Vec<Scalar>> {
        assert!(n >= 1);
        let iplus = self.cfg.iplus();
        if iplus.is_empty() {
            return Ok(Vec::new());
        }
        let kernel = self.kernel_set(n)?;
        let ln = self.lag.monic(n);
        let dstar = iplus.len();
        let mut a = vec![vec![Scalar::zero(); dstar]; dstar];
        let mut b = vec![Scalar::zero(); dstar];
        for (row, &(i, l)) in iplus.iter().enumerate() {
            for (col, &(j, k)) in iplus.iter().enumerate() {
                let mut v = &kernel.values[row][col] * self.cfg.lambda(j, k);
                if row == col {
                    v = &v + &Scalar::one();
                }
                a[row][col] = v;
            }
            b[row] = ln.derivative_k(l).eval(&self.cfg.masses()[i].c);
        }
        solve_linear_system(&a, &b, self.cfg.mode(), n)
    }

    /// The monic Sobolev polynomial of degree n with its derivative data.
    pub fn poly(&self, n: usize) -> Result<Arc<SobolevPolynomial>> {
        if let Some(p) = self.polys.lock().unwrap().get(&n) {
            return Ok(p.clone());
        }
        let built = Arc::new(self.build_poly(n)?);
        Ok(self
            .polys
            .lock()
            .unwrap()
            .entry(n)
            .or_insert(built)
            .clone())
    }

    fn build_poly(&self, n: usize) -> Result<SobolevPolynomial> {
        if n == 0 {
            let derivs = self
                .cfg
                .iplus()
                .iter()
                .map(|&(_, k)| if k == 0 { Scalar::one() } else { Scalar::zero() })
                .collect();
            return Ok(SobolevPolynomial {
                n: 0,
                poly: Polynomial::one(),
                derivs,
            });
        }
        let derivs = self.solve_mass_derivatives(n)?;
        let mut poly = self.lag.monic(n);
        if !self.cfg.iplus().is_empty() {
            let kernel = self.kernel_set(n)?;
            for (idx, &(j, k)) in self.cfg.iplus().iter().enumerate() {
                let w = &(self.cfg.lambda(j, k).clone()) * &derivs[idx];
                poly = &poly - &kernel.polys[idx].scale(&w);
            }
        }
        assert_eq!(poly.degree(), n as isize);
        assert!(
            poly.is_monic() || self.cfg.mode() == ArithMode::Float,
            "Sobolev polynomial must be monic"
        );
        // orthogonality against all lower monomials
        let scale = self.lag.norm_sq(n)?;
        for m in 0..n {
            let xm = Polynomial::new(
                (0..=m)
                    .map(|i| {
                        if i == m {
                            Scalar::one()
                        } else {
                            Scalar::zero()
                        }
                    })
                    .collect(),
            );
            let ip = self.inner(&poly, &xm)?;
            if !ip.approx_eq(&Scalar::zero(), self.cfg.identity_bits(), &scale) {
                return Err(Error::IdentityViolation {
                    name: format!("orthogonality <S_n, x^{m}>"),
                    n,
                    residual: ip.to_string(),
                });
            }
        }
        Ok(SobolevPolynomial { n, poly, derivs })
    }

    /// Independent oracle: monic Gram-Schmidt on the monomial basis under
    /// the same inner product. Rational mode only; must equal `poly(n)`.
    pub fn gram_schmidt_oracle(&self, n: usize) -> Result<Polynomial> {
        if self.cfg.mode() != ArithMode::Rational {
            return Err(Error::UnsupportedMode {
                required: "rational",
            });
        }
        let mut basis: Vec<(Polynomial, Scalar)> = Vec::with_capacity(n + 1);
        for m in 0..=n {
            let mut coeffs = vec![Scalar::zero(); m + 1];
            coeffs[m] = Scalar::one();
            let xm = Polynomial::new(coeffs);
            let mut p = xm.clone();
            for (q, qq) in &basis {
                let c = &self.inner(&xm, q)? / qq;
                p = &p - &q.scale(&c);
            }
            let norm = self.inner(&p, &p)?;
            basis.push((p, norm));
        }
        Ok(basis.pop().unwrap().0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intro_cfg() -> SobolevConfig {
        // alpha = 0, one order-1 mass at -2 with lambda = 1
        SobolevConfig::single_order(
            Scalar::zero(),
            &[(Scalar::from_i64(-2), 1, Scalar::one())],
            ArithMode::Rational,
            256,
        )
        .unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SobolevConfig::single_order(
            Scalar::zero(),
            &[(Scalar::from_i64(2), 1, Scalar::one())],
            ArithMode::Rational,
            256,
        )
        .is_err());
        assert!(SobolevConfig::single_order(
            Scalar::from_i64(-2),
            &[],
            ArithMode::Rational,
            256,
        )
        .is_err());
        let dup = SobolevConfig::single_order(
            Scalar::zero(),
            &[
                (Scalar::from_i64(-1), 1, Scalar::one()),
                (Scalar::from_i64(-1), 2, Scalar::one()),
            ],
            ArithMode::Rational,
            256,
        );
        assert!(dup.is_err());
        let neg_lambda = SobolevConfig::single_order(
            Scalar::zero(),
            &[(Scalar::from_i64(-1), 1, Scalar::from_i64(-3))],
            ArithMode::Rational,
            256,
        );
        assert!(neg_lambda.is_err());
    }

    #[test]
    fn derived_counts() {
        let cfg = SobolevConfig::single_order(
            Scalar::zero(),
            &[
                (Scalar::from_i64(-2), 2, Scalar::one()),
                (Scalar::from_i64(-1), 1, Scalar::one()),
            ],
            ArithMode::Rational,
            256,
        )
        .unwrap();
        // sorted ascending by order: (-1, order 1) first
        assert_eq!(cfg.n_masses(), 2);
        assert_eq!(cfg.total_d(), 5);
        assert_eq!(cfg.d_star(), 2);
        assert_eq!(cfg.iplus(), &[(0, 1), (1, 2)]);
        assert_eq!(cfg.masses()[0].c, Scalar::from_i64(-1));
    }

    #[test]
    fn inner_product_values() {
        // <1,1> with an order-1 mass: the discrete part sees only derivatives
        let cfg = intro_cfg();
        let lag = cfg.laguerre_family().unwrap();
        let one = Polynomial::one();
        assert_eq!(
            sobolev_inner(&cfg, &lag, &one, &one).unwrap(),
            Scalar::one()
        );
        // order-0 mass at -2: <x, 1> = m_1 + (-2)(1) = -1
        let cfg0 = SobolevConfig::single_order(
            Scalar::zero(),
            &[(Scalar::from_i64(-2), 0, Scalar::one())],
            ArithMode::Rational,
            256,
        )
        .unwrap();
        let x = Polynomial::x();
        assert_eq!(
            sobolev_inner(&cfg0, &lag, &x, &one).unwrap(),
            Scalar::from_i64(-1)
        );
        // no masses: <L_2, L_2> = h_2 = 4
        let cl = SobolevConfig::classical(Scalar::zero(), ArithMode::Rational, 256).unwrap();
        let l2 = lag.monic(2);
        assert_eq!(
            sobolev_inner(&cl, &lag, &l2, &l2).unwrap(),
            Scalar::from_i64(4)
        );
    }

    #[test]
    fn kernel_low_order() {
        // K_0(x, y) = 1/h_0 = 1 for alpha = 0
        let cfg0 = SobolevConfig::single_order(
            Scalar::zero(),
            &[(Scalar::from_i64(-2), 0, Scalar::one())],
            ArithMode::Rational,
            256,
        )
        .unwrap();
        let lag = cfg0.laguerre_family().unwrap();
        let ks = kernel_set(&cfg0, &lag, 1).unwrap();
        assert_eq!(ks.polys[0], Polynomial::one());
        // K_1^(0,1)(x, -2) for alpha = 0 equals x - 1
        let cfg1 = intro_cfg();
        let ks1 = kernel_set(&cfg1, &lag, 2).unwrap();
        assert_eq!(
            ks1.polys[0],
            Polynomial::new(vec![Scalar::from_i64(-1), Scalar::one()])
        );
    }

    #[test]
    fn kernel_symmetry_multi_mass() {
        let cfg = SobolevConfig::single_order(
            Scalar::zero(),
            &[
                (Scalar::from_i64(-1), 1, Scalar::one()),
                (Scalar::from_i64(-2), 2, Scalar::one()),
            ],
            ArithMode::Rational,
            256,
        )
        .unwrap();
        let lag = cfg.laguerre_family().unwrap();
        let ks = kernel_set(&cfg, &lag, 12).unwrap();
        for r in 0..cfg.d_star() {
            for c in 0..cfg.d_star() {
                assert_eq!(ks.values[r][c], ks.values[c][r]);
            }
        }
    }

    #[test]
    fn intro_s2_is_z_squared_minus_2() {
        let fam = SobolevFamily::new(intro_cfg()).unwrap();
        let s2 = fam.poly(2).unwrap();
        assert_eq!(
            s2.poly,
            Polynomial::new(vec![Scalar::from_i64(-2), Scalar::zero(), Scalar::one()])
        );
        // S_2'(-2) = -4, consistent with the solved derivative value
        assert_eq!(s2.derivs[0], Scalar::from_i64(-4));
    }

    #[test]
    fn s1_with_active_order_zero_mass() {
        // alpha = 0, order-0 mass at -2: S_1 = x + 1/2
        let cfg = SobolevConfig::single_order(
            Scalar::zero(),
            &[(Scalar::from_i64(-2), 0, Scalar::one())],
            ArithMode::Rational,
            256,
        )
        .unwrap();
        let fam = SobolevFamily::new(cfg).unwrap();
        assert_eq!(
            fam.poly(1).unwrap().poly,
            Polynomial::new(vec![Scalar::rational(1, 2), Scalar::one()])
        );
    }

    #[test]
    fn s1_reduces_to_laguerre_when_orders_positive() {
        let fam = SobolevFamily::new(intro_cfg()).unwrap();
        assert_eq!(fam.poly(1).unwrap().poly, fam.laguerre().monic(1));
    }

    #[test]
    fn mass_derivatives_identity_system_when_lambda_zero() {
        // classical config: no unknowns at all; S_n = L_n
        let cfg = SobolevConfig::classical(Scalar::from_i64(11), ArithMode::Rational, 256).unwrap();
        let fam = SobolevFamily::new(cfg).unwrap();
        for n in 0..6 {
            assert_eq!(fam.poly(n).unwrap().poly, fam.laguerre().monic(n));
        }
    }

    #[test]
    fn gram_schmidt_matches_connection_route() {
        let fam = SobolevFamily::new(intro_cfg()).unwrap();
        for n in 0..=6 {
            assert_eq!(
                fam.gram_schmidt_oracle(n).unwrap(),
                fam.poly(n).unwrap().poly,
                "n = {n}"
            );
        }
    }

    #[test]
    fn norm_minimality() {
        let fam = SobolevFamily::new(intro_cfg()).unwrap();
        for n in 1..=8 {
            let s = fam.poly(n).unwrap();
            let l = fam.laguerre().monic(n);
            let ns = fam.inner(&s.poly, &s.poly).unwrap();
            let nl = fam.inner(&l, &l).unwrap();
            assert!(ns <= nl, "n = {n}");
        }
    }

    #[test]
    fn sequentially_ordered_examples() {
        // order-1 at -1 plus order-2 at -2: ordered
        let cfg = SobolevConfig::single_order(
            Scalar::zero(),
            &[
                (Scalar::from_i64(-1), 1, Scalar::one()),
                (Scalar::from_i64(-2), 2, Scalar::one()),
            ],
            ArithMode::Rational,
            256,
        )
        .unwrap();
        assert!(is_sequentially_ordered(&cfg).ordered);
        // a single mass of any order is ordered
        let single = SobolevConfig::single_order(
            Scalar::zero(),
            &[(Scalar::from_i64(-3), 4, Scalar::one())],
            ArithMode::Rational,
            256,
        )
        .unwrap();
        assert!(is_sequentially_ordered(&single).ordered);
        // two order-1 masses at -1 and -2: level 1 hull [-2,-1] misses the
        // interior (0, inf) of level 0, so the definition evaluates to true
        let two = SobolevConfig::single_order(
            Scalar::zero(),
            &[
                (Scalar::from_i64(-1), 1, Scalar::one()),
                (Scalar::from_i64(-2), 1, Scalar::one()),
            ],
            ArithMode::Rational,
            256,
        )
        .unwrap();
        let rep = is_sequentially_ordered(&two);
        assert!(rep.ordered);
        // order-0 mass at -1 widens level 0 to [-1, inf); an order-1 mass
        // at -1/2 then lands inside the interior
        let bad = SobolevConfig::new(
            Scalar::zero(),
            vec![
                MassPoint {
                    c: Scalar::from_i64(-1),
                    order: 0,
                    lambdas: vec![Scalar::one()],
                },
                MassPoint {
                    c: Scalar::rational(-1, 2),
                    order: 1,
                    lambdas: vec![Scalar::zero(), Scalar::one()],
                },
            ],
            ArithMode::Rational,
            256,
        )
        .unwrap();
        let rep = is_sequentially_ordered(&bad);
        assert!(!rep.ordered);
        assert_eq!(rep.failing_level, Some(1));
    }

    #[test]
    fn float_mode_pipeline_matches_rational() {
        let rat = SobolevFamily::new(intro_cfg()).unwrap();
        let flt = SobolevFamily::new(
            SobolevConfig::single_order(
                Scalar::zero(),
                &[(Scalar::from_i64(-2), 1, Scalar::one())],
                ArithMode::Float,
                256,
            )
            .unwrap(),
        )
        .unwrap();
        for n in 1..=6 {
            let a = rat.poly(n).unwrap().poly.to_float(256);
            let b = flt.poly(n).unwrap().poly.clone();
            let diff = &a - &b;
            assert!(
                diff.is_negligible(200, &a.sup_norm()),
                "n = {n}: {}",
                diff.sup_norm()
            );
        }
    }
}
