//! Structure algebra connecting the Sobolev family to the Laguerre family.
//!
//! For each degree n this module builds the connection multipliers
//! (f2, g2) with rho S_n = f2 L_n + g2 L_{n-1} and their x-derivative
//! companions (f3, g3), the shifted pair (v2, w2, v3, w3) expressing
//! rho S_{n-1} in the same basis, the determinants delta = f2 w2 - v2 g2
//! (divisible by rho) and delta_i (divisible by rho_{d-N}), the five ladder
//! polynomials q0..q4, and the second-order ODE coefficients p2, p1, p0.
//! Every defining identity is asserted during construction: exactly in
//! rational mode, within 2^-(precision/2) relative sup-norm in float mode.

use crate::error::{Error, Result};
use crate::laguerre::LaguerreFamily;
use crate::poly::Polynomial;
use crate::scalar::{ArithMode, Scalar};
use crate::sobolev::{SobolevConfig, SobolevFamily, SobolevPolynomial};
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

/// The mass-point polynomial rho and its standard factors.
#[derive(Clone, Debug)]
pub struct RhoSet {
    /// rho = prod (x - c_j)^(d_j + 1), degree d.
    pub rho: Polynomial,
    /// rho_N = prod (x - c_j), one factor per mass point.
    pub rho_n: Polynomial,
    /// rho_{d-N} = rho / rho_N = prod (x - c_j)^(d_j).
    pub rho_dn: Polynomial,
    /// rho_{j,k} = rho / (x - c_j)^(k+1), one entry per iplus pair.
    pub per_iplus: Vec<Polynomial>,
}

pub fn build_rho(cfg: &SobolevConfig) -> RhoSet {
    let mut rho = Polynomial::one();
    let mut rho_n = Polynomial::one();
    let mut rho_dn = Polynomial::one();
    for m in cfg.masses() {
        let lin = Polynomial::x_minus(&m.c);
        rho = &rho * &lin.pow(m.order as u32 + 1);
        rho_n = &rho_n * &lin;
        rho_dn = &rho_dn * &lin.pow(m.order as u32);
    }
    let mut per_iplus = Vec::with_capacity(cfg.d_star());
    for &(j, k) in cfg.iplus() {
        let mut p = Polynomial::one();
        for (j2, m) in cfg.masses().iter().enumerate() {
            let e = if j2 == j {
                m.order - k
            } else {
                m.order + 1
            };
            p = &p * &Polynomial::x_minus(&m.c).pow(e as u32);
        }
        per_iplus.push(p);
    }
    RhoSet {
        rho,
        rho_n,
        rho_dn,
        per_iplus,
    }
}

/// Connection multipliers of one level n >= 1 together with the leading
/// Fourier-tail coefficient sigma_n.
#[derive(Clone, Debug)]
pub struct ConnectionCoeffs {
    pub n: usize,
    pub f2: Polynomial,
    pub g2: Polynomial,
    pub f3: Polynomial,
    pub g3: Polynomial,
    pub sigma: Scalar,
}

fn ensure_identity(
    name: &str,
    n: usize,
    residual: &Polynomial,
    bits: u32,
    scale: &Scalar,
) -> Result<()> {
    if residual.is_negligible(bits, scale) {
        Ok(())
    } else {
        Err(Error::IdentityViolation {
            name: name.to_string(),
            n,
            residual: residual.sup_norm().to_string(),
        })
    }
}

/// Build (f2, g2, f3, g3, sigma) for level n from the solved derivative
/// values of S_n. Asserts the defining connection identities.
pub fn connection_coeffs(
    cfg: &SobolevConfig,
    lag: &LaguerreFamily,
    rho: &RhoSet,
    sp: &SobolevPolynomial,
) -> Result<ConnectionCoeffs> {
    let n = sp.n;
    assert!(n >= 1, "connection coefficients exist for n >= 1");
    let ln = lag.monic(n);
    let lnm1 = lag.monic(n - 1);
    let h_prev = lag.norm_sq(n - 1)?;
    let mut f2 = rho.rho.clone();
    let mut g2 = Polynomial::zero();
    let mut sigma = Scalar::zero();
    for (idx, &(j, k)) in cfg.iplus().iter().enumerate() {
        let c = &cfg.masses()[j].c;
        let lambda = cfg.lambda(j, k);
        let weight = &(&Scalar::factorial(k) * &(lambda * &sp.derivs[idx])) / &h_prev;
        f2 = &f2 - &(&lnm1.taylor_at(c, k) * &rho.per_iplus[idx]).scale(&weight);
        g2 = &g2 + &(&ln.taylor_at(c, k) * &rho.per_iplus[idx]).scale(&weight);
        let ln_deriv = ln.derivative_k(k).eval(c);
        sigma = &sigma + &(&(lambda * &sp.derivs[idx]) * &ln_deriv);
    }
    sigma = &sigma / &h_prev;

    let gamma_n = lag.gamma_rec(n);
    let x = Polynomial::x();
    let f3 = &(&(&x * &f2.derivative()) + &f2.scale(&Scalar::from_usize(n))) - &g2;
    let shift = Polynomial::new(vec![
        -&(&Scalar::from_usize(n) + lag.alpha()),
        Scalar::one(),
    ]);
    let g3 = &(&x * &g2.derivative()) + &(&f2.scale(&gamma_n) + &(&shift * &g2));

    let bits = cfg.identity_bits();
    let scale = (&rho.rho * &sp.poly).sup_norm();
    let lhs = &rho.rho * &sp.poly;
    let res1 = &lhs - &(&(&f2 * &ln) + &(&g2 * &lnm1));
    ensure_identity("connection rho*S_n", n, &res1, bits, &scale)?;
    let lhs_dx = &x * &lhs.derivative();
    let res2 = &lhs_dx - &(&(&f3 * &ln) + &(&g3 * &lnm1));
    ensure_identity("connection x(rho*S_n)'", n, &res2, bits, &scale)?;

    // sigma both ways: from the defining sum and from the x^(d-1) slot of g2
    let d = cfg.total_d();
    if d >= 1 {
        let slot = g2.coef(d - 1);
        if !slot.approx_eq(&sigma, bits, &Scalar::one().max(&sigma.abs())) {
            return Err(Error::IdentityViolation {
                name: "sigma cross-check (g2 leading slot vs defining sum)".into(),
                n,
                residual: (&slot - &sigma).abs().to_string(),
            });
        }
    }
    // sigma must be positive once the discrete part acts on degree-n polys
    let k_min = cfg.iplus().iter().map(|&(_, k)| k).min();
    if let Some(k_min) = k_min {
        if n >= k_min && !sigma.is_positive() {
            return Err(Error::IdentityViolation {
                name: "sigma_n positivity".into(),
                n,
                residual: sigma.to_string(),
            });
        }
    }
    Ok(ConnectionCoeffs {
        n,
        f2,
        g2,
        f3,
        g3,
        sigma,
    })
}

/// One ledger row: a structural degree / leading-coefficient assertion.
#[derive(Clone, Debug)]
pub struct LcoefEntry {
    pub name: &'static str,
    pub expected_degree: isize,
    pub expected_leading: Scalar,
    pub actual_degree: isize,
    pub actual_leading: Scalar,
    pub pass: bool,
}

/// The full structure bundle of one level n >= 1.
#[derive(Clone, Debug)]
pub struct StructureBundle {
    pub n: usize,
    pub rho: RhoSet,
    pub f2: Polynomial,
    pub g2: Polynomial,
    pub f3: Polynomial,
    pub g3: Polynomial,
    pub v2: Polynomial,
    pub w2: Polynomial,
    pub v3: Polynomial,
    pub w3: Polynomial,
    /// delta = f2 w2 - v2 g2, the connection determinant.
    pub delta: Polynomial,
    /// small_delta = delta / rho, exact.
    pub small_delta: Polynomial,
    pub delta1: Polynomial,
    pub delta2: Polynomial,
    pub delta3: Polynomial,
    /// delta_i / rho_{d-N}; available for n >= 2 (and at n = 1 when the
    /// divisions happen to be exact).
    pub phi: Option<[Polynomial; 3]>,
    pub q0: Polynomial,
    pub q1: Polynomial,
    pub q2: Polynomial,
    pub q3: Polynomial,
    pub q4: Polynomial,
    pub p2: Polynomial,
    pub p1: Polynomial,
    pub p0: Polynomial,
    pub sigma: Scalar,
    /// sigma_{n-1}; absent at n = 1.
    pub sigma_prev: Option<Scalar>,
    pub gamma_n: Scalar,
    pub gamma_prev: Scalar,
    bits: u32,
    mode: ArithMode,
}

impl StructureBundle {
    /// 1 + sigma_{n-1} / gamma_{n-1}, defined for n >= 2.
    pub fn lead_ratio(&self) -> Option<Scalar> {
        self.sigma_prev
            .as_ref()
            .map(|s| &Scalar::one() + &(s / &self.gamma_prev))
    }

    /// Apply a ladder operator as cleared polynomial algebra:
    /// down maps degree n to n-1 via (q2 p + q0 p') / q1, up maps degree
    /// n-1 to n via (q3 p + q0 p') / q4. Errors when the division is
    /// inexact, which means p was not the expected family member.
    pub fn ladder_apply(
        &self,
        direction: crate::laguerre::LadderDirection,
        p: &Polynomial,
    ) -> Result<Polynomial> {
        use crate::laguerre::LadderDirection::*;
        let numer_tail = &self.q0 * &p.derivative();
        let (numer, den, what) = match direction {
            Down => (&(&self.q2 * p) + &numer_tail, &self.q1, "lowering"),
            Up => (&(&self.q3 * p) + &numer_tail, &self.q4, "raising"),
        };
        numer.exact_divide(den, what).map_err(|e| match e {
            Error::InexactDivision {
                context,
                remainder_norm,
            } => Error::NonPolynomialResult {
                context: format!("{context} ladder at n = {}", self.n),
                remainder_norm,
            },
            other => other,
        })
    }

    /// Residual of the second-order ODE applied to S_n; zero when sp is the
    /// family member of this level.
    pub fn ode_residual(&self, sp: &SobolevPolynomial) -> Polynomial {
        assert_eq!(sp.n, self.n, "bundle and polynomial level must agree");
        let t2 = &self.p2 * &sp.poly.derivative_k(2);
        let t1 = &self.p1 * &sp.poly.derivative();
        let t0 = &self.p0 * &sp.poly;
        &(&t2 + &t1) + &t0
    }

    /// The degree / leading-coefficient ledger. Each expected value is
    /// checked as: coefficient at the expected degree equals the expected
    /// leading value, and no higher-degree coefficient exists. Entries that
    /// need sigma_{n-1} are skipped at n = 1.
    pub fn lcoef_ledger(&self, cfg: &SobolevConfig) -> Vec<LcoefEntry> {
        let d = cfg.total_d() as isize;
        let nn = cfg.n_masses() as isize;
        let n = self.n as isize;
        let gs = &self.gamma_n + &self.sigma;
        let mut rows: Vec<(&'static str, &Polynomial, isize, Scalar)> = vec![
            ("f2", &self.f2, d, Scalar::one()),
            ("g2", &self.g2, d - 1, self.sigma.clone()),
            ("f3", &self.f3, d, Scalar::from_i64((d + n) as i64)),
            ("g3", &self.g3, d, gs.clone()),
            ("q1", &self.q1, 2 * d, gs.clone()),
            ("delta1", &self.delta1, 2 * d, gs.clone()),
        ];
        if let Some(t) = self.lead_ratio() {
            let sp = self.sigma_prev.clone().unwrap();
            let neg_ratio = -&(&sp / &self.gamma_prev);
            let nt = -&(&Scalar::from_i64(n as i64) * &t);
            let dnt = -&(&Scalar::from_i64((d + n) as i64) * &t);
            let gst2 = &gs * &(&t * &t);
            rows.extend([
                ("v2", &self.v2, d - 1, neg_ratio),
                ("w2", &self.w2, d, t.clone()),
                ("v3", &self.v3, d, -&t),
                ("w3", &self.w3, d + 1, t.clone()),
                ("delta", &self.delta, 2 * d, t.clone()),
                ("small_delta", &self.small_delta, d, t.clone()),
                ("q0", &self.q0, 2 * d + 1, t.clone()),
                ("q2", &self.q2, 2 * d, nt),
                ("q3", &self.q3, 2 * d + 1, -&t),
                ("q4", &self.q4, 2 * d, -&t),
                ("delta2", &self.delta2, 2 * d, dnt.clone()),
                ("delta3", &self.delta3, 2 * d + 1, -&t),
                ("p2", &self.p2, 6 * d + 2, gst2.clone()),
                ("p1", &self.p1, 6 * d + 2, -&gst2),
                (
                    "p0",
                    &self.p0,
                    6 * d + 1,
                    &Scalar::from_i64(n as i64) * &gst2,
                ),
            ]);
            if let Some(phi) = &self.phi {
                rows.extend([
                    ("phi1", &phi[0], d + nn, gs.clone()),
                    ("phi2", &phi[1], d + nn, dnt),
                    ("phi3", &phi[2], d + nn + 1, -&t),
                ]);
            }
        } else if let Some(phi) = &self.phi {
            rows.push(("phi1", &phi[0], d + nn, gs.clone()));
        }
        rows.into_iter()
            .map(|(name, poly, exp_deg, exp_lc)| {
                let (actual_degree, actual_leading) = poly.lcoef();
                let slot = if exp_deg >= 0 {
                    poly.coef(exp_deg as usize)
                } else {
                    Scalar::zero()
                };
                let pass = match self.mode {
                    ArithMode::Rational => slot == exp_lc && actual_degree <= exp_deg,
                    ArithMode::Float => {
                        slot.approx_eq(&exp_lc, self.bits, &exp_lc.abs().max(&Scalar::one()))
                            && (actual_degree <= exp_deg
                                || poly
                                    .coeffs()
                                    .iter()
                                    .skip(exp_deg.max(0) as usize + 1)
                                    .all(|c| {
                                        c.abs()
                                            <= &Scalar::pow2(
                                                -(self.bits as i32),
                                                c.precision().unwrap_or(64),
                                            ) * &poly.sup_norm()
                                    }))
                    }
                };
                LcoefEntry {
                    name,
                    expected_degree: exp_deg,
                    expected_leading: exp_lc,
                    actual_degree,
                    actual_leading,
                    pass,
                }
            })
            .collect()
    }
}

/// Build the full bundle for level n, asserting every identity along the
/// way. `conn_prev` must be the level n-1 coefficients for n >= 2 and
/// `None` exactly when n = 1.
pub fn build_bundle(
    cfg: &SobolevConfig,
    lag: &LaguerreFamily,
    rho: &RhoSet,
    conn_prev: Option<&ConnectionCoeffs>,
    conn: &ConnectionCoeffs,
    sp_prev: &SobolevPolynomial,
    sp: &SobolevPolynomial,
) -> Result<StructureBundle> {
    let n = conn.n;
    assert_eq!(sp.n, n);
    assert_eq!(sp_prev.n + 1, n);
    assert_eq!(conn_prev.is_none(), n == 1);
    let bits = cfg.identity_bits();
    let x = Polynomial::x();

    // shifted connection pair for S_{n-1} in the (L_n, L_{n-1}) basis
    let (v2, w2, v3, w3, sigma_prev) = match conn_prev {
        Some(prev) => {
            let gamma_prev = lag.gamma_rec(n - 1);
            let shift = Polynomial::x_minus(&lag.beta(n - 1)).scale(&gamma_prev.recip());
            let v2 = prev.g2.scale(&-&gamma_prev.recip());
            let w2 = &prev.f2 + &(&prev.g2 * &shift);
            let v3 = prev.g3.scale(&-&gamma_prev.recip());
            let w3 = &prev.f3 + &(&prev.g3 * &shift);
            (v2, w2, v3, w3, Some(prev.sigma.clone()))
        }
        None => {
            // first level: rho S_0 = 0 * L_1 + rho * L_0 and
            // x (rho S_0)' = -1 * L_1 + (x rho' + L_1) * L_0, the unique
            // constant-v3 choice that matches the classical reduction
            let w3 = &(&x * &rho.rho.derivative()) + &lag.monic(1);
            (
                Polynomial::zero(),
                rho.rho.clone(),
                Polynomial::constant(-&Scalar::one()),
                w3,
                None,
            )
        }
    };

    let ln = lag.monic(n);
    let lnm1 = lag.monic(n - 1);
    let scale = (&rho.rho * &sp_prev.poly).sup_norm().max(&Scalar::one());
    let lhs = &rho.rho * &sp_prev.poly;
    let res = &lhs - &(&(&v2 * &ln) + &(&w2 * &lnm1));
    ensure_identity("connection rho*S_{n-1}", n, &res, bits, &scale)?;
    let lhs_dx = &x * &lhs.derivative();
    let res = &lhs_dx - &(&(&v3 * &ln) + &(&w3 * &lnm1));
    ensure_identity("connection x(rho*S_{n-1})'", n, &res, bits, &scale)?;

    // determinant and its rho-reduction
    let delta = &(&conn.f2 * &w2) - &(&v2 * &conn.g2);
    let small_delta = delta.exact_divide(&rho.rho, "delta / rho")?;

    // reconstruction of the Laguerre pair from the Sobolev pair
    let recon_scale = delta.sup_norm().max(&Scalar::one());
    let lhs = (&(&w2 * &sp.poly) - &(&conn.g2 * &sp_prev.poly)).scale(&Scalar::one());
    let res = &(&rho.rho * &lhs) - &(&delta * &ln);
    ensure_identity("reconstruction of L_n", n, &res, bits, &recon_scale)?;
    let lhs = &(&conn.f2 * &sp_prev.poly) - &(&v2 * &sp.poly);
    let res = &(&rho.rho * &lhs) - &(&delta * &lnm1);
    ensure_identity("reconstruction of L_{n-1}", n, &res, bits, &recon_scale)?;

    // ladder determinants and their rho_{d-N} reductions
    let delta1 = &(&conn.g3 * &conn.f2) - &(&conn.f3 * &conn.g2);
    let delta2 = &(&conn.g3 * &v2) - &(&conn.f3 * &w2);
    let delta3 = &(&conn.g2 * &v3) - &(&conn.f2 * &w3);
    let phi = if n >= 2 {
        Some([
            delta1.exact_divide(&rho.rho_dn, "delta1 / rho_{d-N}")?,
            delta2.exact_divide(&rho.rho_dn, "delta2 / rho_{d-N}")?,
            delta3.exact_divide(&rho.rho_dn, "delta3 / rho_{d-N}")?,
        ])
    } else {
        // the custom first-level w3 need not keep delta3 divisible
        let d1 = delta1.exact_divide(&rho.rho_dn, "delta1 / rho_{d-N}");
        let d2 = delta2.exact_divide(&rho.rho_dn, "delta2 / rho_{d-N}");
        let d3 = delta3.exact_divide(&rho.rho_dn, "delta3 / rho_{d-N}");
        match (d1, d2, d3) {
            (Ok(a), Ok(b), Ok(c)) => Some([a, b, c]),
            _ => None,
        }
    };

    // ladder polynomials
    let x_rho_prime_delta = &(&x * &rho.rho.derivative()) * &small_delta;
    let q0 = &x * &delta;
    let q1 = delta1.clone();
    let q2 = &x_rho_prime_delta + &delta2;
    let q3 = &x_rho_prime_delta + &delta3;
    let q4 = &(&v3 * &w2) - &(&w3 * &v2);

    // the two ladder identities, cleared of denominators
    let ladder_scale = (&q1 * &sp_prev.poly).sup_norm().max(&Scalar::one());
    let res = &(&(&q2 * &sp.poly) + &(&q0 * &sp.poly.derivative())) - &(&q1 * &sp_prev.poly);
    ensure_identity("lowering ladder", n, &res, bits, &ladder_scale)?;
    let res =
        &(&(&q3 * &sp_prev.poly) + &(&q0 * &sp_prev.poly.derivative())) - &(&q4 * &sp.poly);
    ensure_identity("raising ladder", n, &res, bits, &ladder_scale)?;

    // second-order ODE coefficients
    let p2 = &q1 * &(&q0 * &q0);
    let inner = &(&(&q1 * &q2) + &(&q1 * &q3))
        + &(&(&q0.derivative() * &q1) - &(&q0 * &q1.derivative()));
    let p1 = &q0 * &inner;
    let p0 = &(&(&(&q1 * &q2) * &q3)
        + &(&q0 * &(&(&q2.derivative() * &q1) - &(&q2 * &q1.derivative()))))
        - &(&q4 * &(&q1 * &q1));

    let bundle = StructureBundle {
        n,
        rho: rho.clone(),
        f2: conn.f2.clone(),
        g2: conn.g2.clone(),
        f3: conn.f3.clone(),
        g3: conn.g3.clone(),
        v2,
        w2,
        v3,
        w3,
        delta,
        small_delta,
        delta1,
        delta2,
        delta3,
        phi,
        q0,
        q1,
        q2,
        q3,
        q4,
        p2,
        p1,
        p0,
        sigma: conn.sigma.clone(),
        sigma_prev,
        gamma_n: lag.gamma_rec(n),
        gamma_prev: lag.gamma_rec(n.saturating_sub(1)),
        bits,
        mode: cfg.mode(),
    };

    let ode = bundle.ode_residual(sp);
    let ode_scale = (&bundle.p2 * &sp.poly.derivative_k(2))
        .sup_norm()
        .max(&Scalar::one());
    ensure_identity("second-order ODE", n, &ode, bits, &ode_scale)?;
    Ok(bundle)
}

/// Residual of the polynomial three-term recurrence joining levels
/// n-1, n, n+1: q4@(n+1) q0@(n) S_{n+1} - [q3@(n+1) q0@(n) - q2@(n) q0@(n+1)] S_n
/// - q1@(n) q0@(n+1) S_{n-1}.
pub fn ttrr_residual(
    bundle_n: &StructureBundle,
    bundle_np1: &StructureBundle,
    sp_nm1: &SobolevPolynomial,
    sp_n: &SobolevPolynomial,
    sp_np1: &SobolevPolynomial,
) -> Polynomial {
    assert_eq!(bundle_np1.n, bundle_n.n + 1);
    assert_eq!(sp_n.n, bundle_n.n);
    assert_eq!(sp_nm1.n + 1, sp_n.n);
    assert_eq!(sp_np1.n, sp_n.n + 1);
    let lead = &(&bundle_np1.q4 * &bundle_n.q0) * &sp_np1.poly;
    let mid_coeff = &(&bundle_np1.q3 * &bundle_n.q0) - &(&bundle_n.q2 * &bundle_np1.q0);
    let mid = &mid_coeff * &sp_n.poly;
    let tail = &(&bundle_n.q1 * &bundle_np1.q0) * &sp_nm1.poly;
    &(&lead - &mid) - &tail
}

/// Memoizing facade over a [`SobolevFamily`] for connection coefficients
/// and structure bundles.
pub struct StructureEngine<'a> {
    fam: &'a SobolevFamily,
    rho: RhoSet,
    conns: Mutex<BTreeMap<usize, Arc<ConnectionCoeffs>>>,
    bundles: Mutex<BTreeMap<usize, Arc<StructureBundle>>>,
}

impl<'a> StructureEngine<'a> {
    pub fn new(fam: &'a SobolevFamily) -> Self {
        StructureEngine {
            fam,
            rho: build_rho(fam.config()),
            conns: Mutex::new(BTreeMap::new()),
            bundles: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn family(&self) -> &SobolevFamily {
        self.fam
    }

    pub fn rho(&self) -> &RhoSet {
        &self.rho
    }

    pub fn connection(&self, n: usize) -> Result<Arc<ConnectionCoeffs>> {
        if let Some(c) = self.conns.lock().unwrap().get(&n) {
            return Ok(c.clone());
        }
        let sp = self.fam.poly(n)?;
        let built = Arc::new(connection_coeffs(
            self.fam.config(),
            self.fam.laguerre(),
            &self.rho,
            &sp,
        )?);
        Ok(self
            .conns
            .lock()
            .unwrap()
            .entry(n)
            .or_insert(built)
            .clone())
    }

    pub fn bundle(&self, n: usize) -> Result<Arc<StructureBundle>> {
        assert!(n >= 1, "bundles exist for n >= 1");
        if let Some(b) = self.bundles.lock().unwrap().get(&n) {
            return Ok(b.clone());
        }
        let conn = self.connection(n)?;
        let conn_prev = if n >= 2 {
            Some(self.connection(n - 1)?)
        } else {
            None
        };
        let sp = self.fam.poly(n)?;
        let sp_prev = self.fam.poly(n - 1)?;
        let built = Arc::new(build_bundle(
            self.fam.config(),
            self.fam.laguerre(),
            &self.rho,
            conn_prev.as_deref(),
            &conn,
            &sp_prev,
            &sp,
        )?);
        Ok(self
            .bundles
            .lock()
            .unwrap()
            .entry(n)
            .or_insert(built)
            .clone())
    }

    /// Residual of the three-term recurrence centered at level n.
    pub fn ttrr_residual(&self, n: usize) -> Result<Polynomial> {
        assert!(n >= 1);
        let b_n = self.bundle(n)?;
        let b_np1 = self.bundle(n + 1)?;
        let sp_nm1 = self.fam.poly(n - 1)?;
        let sp_n = self.fam.poly(n)?;
        let sp_np1 = self.fam.poly(n + 1)?;
        Ok(ttrr_residual(&b_n, &b_np1, &sp_nm1, &sp_n, &sp_np1))
    }

    /// Repeated raising from the constant polynomial: applies the level-k
    /// raising operator for k = 1..=n, checking each intermediate against
    /// the directly constructed family member.
    pub fn raise_from_constant(&self, n: usize) -> Result<Polynomial> {
        let mut current = Polynomial::one();
        for k in 1..=n {
            let bundle = self.bundle(k)?;
            current = bundle.ladder_apply(crate::laguerre::LadderDirection::Up, &current)?;
            let expected = self.fam.poly(k)?;
            let res = &current - &expected.poly;
            ensure_identity(
                "raising chain stage",
                k,
                &res,
                self.fam.config().identity_bits(),
                &expected.poly.sup_norm().max(&Scalar::one()),
            )?;
        }
        Ok(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laguerre::LadderDirection;
    use crate::scalar::ArithMode;

    fn intro_family() -> SobolevFamily {
        SobolevFamily::new(
            SobolevConfig::single_order(
                Scalar::zero(),
                &[(Scalar::from_i64(-2), 1, Scalar::one())],
                ArithMode::Rational,
                256,
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn example1_family() -> SobolevFamily {
        SobolevFamily::new(
            SobolevConfig::single_order(
                Scalar::from_i64(11),
                &[(Scalar::from_i64(-2), 1, Scalar::one())],
                ArithMode::Rational,
                256,
            )
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn rho_factorizations() {
        // single order-1 mass at -2: rho = (x+2)^2, both factors x+2
        let fam = example1_family();
        let rho = build_rho(fam.config());
        let lin = Polynomial::x_minus(&Scalar::from_i64(-2));
        assert_eq!(rho.rho, lin.pow(2));
        assert_eq!(rho.rho_n, lin);
        assert_eq!(rho.rho_dn, lin);
        assert_eq!(rho.per_iplus[0], Polynomial::one());
        assert_eq!(&rho.rho_n * &rho.rho_dn, rho.rho);

        // order-0 mass: rho = x - c, rho_{d-N} = 1
        let cfg0 = SobolevConfig::single_order(
            Scalar::zero(),
            &[(Scalar::from_i64(-3), 0, Scalar::one())],
            ArithMode::Rational,
            128,
        )
        .unwrap();
        let rho0 = build_rho(&cfg0);
        assert_eq!(rho0.rho, Polynomial::x_minus(&Scalar::from_i64(-3)));
        assert_eq!(rho0.rho_dn, Polynomial::one());

        // orders 1 and 2: rho = (x+1)^2 (x+2)^3, d = 5, N = 2
        let cfg5 = SobolevConfig::single_order(
            Scalar::zero(),
            &[
                (Scalar::from_i64(-1), 1, Scalar::one()),
                (Scalar::from_i64(-2), 2, Scalar::one()),
            ],
            ArithMode::Rational,
            128,
        )
        .unwrap();
        let rho5 = build_rho(&cfg5);
        assert_eq!(rho5.rho.degree(), 5);
        assert_eq!(
            rho5.rho,
            &Polynomial::x_minus(&Scalar::from_i64(-1)).pow(2)
                * &Polynomial::x_minus(&Scalar::from_i64(-2)).pow(3)
        );
    }

    #[test]
    fn classical_reduction_tables() {
        for alpha in [0i64, 11, 14] {
            let fam = SobolevFamily::new(
                SobolevConfig::classical(Scalar::from_i64(alpha), ArithMode::Rational, 128)
                    .unwrap(),
            )
            .unwrap();
            let eng = StructureEngine::new(&fam);
            for n in 1..=12usize {
                let b = eng.bundle(n).unwrap();
                let gamma_n = fam.laguerre().gamma_rec(n);
                // connection multipliers collapse
                assert_eq!(b.f2, Polynomial::one());
                assert!(b.g2.is_zero());
                assert!(b.v2.is_zero());
                assert_eq!(b.w2, Polynomial::one());
                assert_eq!(b.delta, Polynomial::one());
                assert_eq!(b.small_delta, Polynomial::one());
                // ladder table: (x, gamma_n, -n, n + alpha - x, -1)
                assert_eq!(b.q0, Polynomial::x());
                assert_eq!(b.q1, Polynomial::constant(gamma_n.clone()));
                assert_eq!(
                    b.q2,
                    Polynomial::constant(Scalar::from_i64(-(n as i64)))
                );
                assert_eq!(
                    b.q3,
                    Polynomial::new(vec![
                        &Scalar::from_usize(n) + &Scalar::from_i64(alpha),
                        Scalar::from_i64(-1)
                    ])
                );
                assert_eq!(b.q4, Polynomial::constant(Scalar::from_i64(-1)));
                // delta1 = gamma_n constant
                assert_eq!(b.delta1, Polynomial::constant(gamma_n.clone()));
                // ODE table: gamma_n x^2, gamma_n x (alpha + 1 - x), n gamma_n x
                assert_eq!(b.p2, Polynomial::x().pow(2).scale(&gamma_n));
                let lin = Polynomial::new(vec![
                    Scalar::from_i64(alpha + 1),
                    Scalar::from_i64(-1),
                ]);
                assert_eq!(b.p1, (&Polynomial::x() * &lin).scale(&gamma_n));
                assert_eq!(
                    b.p0,
                    Polynomial::x().scale(&(&gamma_n * &Scalar::from_usize(n)))
                );
            }
            // classical three-term recurrence ratios
            let eng2 = StructureEngine::new(&fam);
            for n in 1..=11usize {
                let b_n = eng2.bundle(n).unwrap();
                let b_np1 = eng2.bundle(n + 1).unwrap();
                // q3@(n+1) q0@n - q2@n q0@(n+1) over q4@(n+1) q0@n = x - 2n - alpha - 1
                let numer = &(&b_np1.q3 * &b_n.q0) - &(&b_n.q2 * &b_np1.q0);
                let denom = &b_np1.q4 * &b_n.q0;
                let ratio = numer.exact_divide(&denom, "ttrr mid").unwrap();
                assert_eq!(
                    ratio,
                    Polynomial::new(vec![
                        Scalar::from_i64(-(2 * n as i64 + alpha + 1)),
                        Scalar::one()
                    ])
                );
                let tail = &b_n.q1 * &b_np1.q0;
                let ratio = tail.exact_divide(&denom, "ttrr tail").unwrap();
                assert_eq!(
                    ratio,
                    Polynomial::constant(-&fam.laguerre().gamma_rec(n))
                );
            }
        }
    }

    #[test]
    fn classical_ladder_matches_closed_form() {
        let fam = SobolevFamily::new(
            SobolevConfig::classical(Scalar::from_i64(11), ArithMode::Rational, 128).unwrap(),
        )
        .unwrap();
        let eng = StructureEngine::new(&fam);
        for n in 1..=8usize {
            let b = eng.bundle(n).unwrap();
            let down = b
                .ladder_apply(LadderDirection::Down, &fam.laguerre().monic(n))
                .unwrap();
            let closed = fam
                .laguerre()
                .ladder(n, LadderDirection::Down, &fam.laguerre().monic(n));
            assert_eq!(down, closed);
        }
    }

    #[test]
    fn intro_bundle_identities_and_ladders() {
        let fam = intro_family();
        let eng = StructureEngine::new(&fam);
        for n in 1..=8usize {
            let b = eng.bundle(n).unwrap();
            let down = b
                .ladder_apply(LadderDirection::Down, &fam.poly(n).unwrap().poly)
                .unwrap();
            assert_eq!(down, fam.poly(n - 1).unwrap().poly, "down at n = {n}");
            let up = b
                .ladder_apply(LadderDirection::Up, &fam.poly(n - 1).unwrap().poly)
                .unwrap();
            assert_eq!(up, fam.poly(n).unwrap().poly, "up at n = {n}");
            // wrong input is rejected
            if n >= 2 {
                let err = b.ladder_apply(LadderDirection::Down, &fam.poly(n - 1).unwrap().poly);
                assert!(matches!(err, Err(Error::NonPolynomialResult { .. })));
            }
        }
    }

    #[test]
    fn up_down_round_trip() {
        let fam = intro_family();
        let eng = StructureEngine::new(&fam);
        let b5 = eng.bundle(5).unwrap();
        let s5 = fam.poly(5).unwrap();
        let down = b5.ladder_apply(LadderDirection::Down, &s5.poly).unwrap();
        let back = b5.ladder_apply(LadderDirection::Up, &down).unwrap();
        assert_eq!(back, s5.poly);
    }

    #[test]
    fn ttrr_exact_for_intro() {
        let fam = intro_family();
        let eng = StructureEngine::new(&fam);
        for n in 1..=7 {
            assert!(eng.ttrr_residual(n).unwrap().is_zero(), "n = {n}");
        }
    }

    #[test]
    fn raising_chain_reconstructs_family() {
        let fam = intro_family();
        let eng = StructureEngine::new(&fam);
        let s2 = eng.raise_from_constant(2).unwrap();
        assert_eq!(
            s2,
            Polynomial::new(vec![Scalar::from_i64(-2), Scalar::zero(), Scalar::one()])
        );
        let fam1 = example1_family();
        let eng1 = StructureEngine::new(&fam1);
        let s5 = eng1.raise_from_constant(5).unwrap();
        assert_eq!(s5, fam1.poly(5).unwrap().poly);
        // n = 1 with all orders >= 1: S_1 = x - (alpha + 1)
        let s1 = eng1.raise_from_constant(1).unwrap();
        assert_eq!(
            s1,
            Polynomial::new(vec![Scalar::from_i64(-12), Scalar::one()])
        );
    }

    #[test]
    fn ledger_passes_example1() {
        let fam = example1_family();
        let eng = StructureEngine::new(&fam);
        for n in 2..=12usize {
            let b = eng.bundle(n).unwrap();
            let ledger = b.lcoef_ledger(fam.config());
            assert!(n < 2 || ledger.len() >= 24, "n = {n}: {}", ledger.len());
            for row in &ledger {
                assert!(
                    row.pass,
                    "n = {n}, entry {} expected ({}, {}), got ({}, {})",
                    row.name,
                    row.expected_degree,
                    row.expected_leading,
                    row.actual_degree,
                    row.actual_leading
                );
            }
            assert!(b.sigma.is_positive());
        }
    }

    #[test]
    fn ledger_handles_degenerate_sigma_prev() {
        // order-2 single mass: at n = 2 the previous sigma vanishes, so v2
        // degenerates to the zero polynomial and the slot rule must pass
        let fam = SobolevFamily::new(
            SobolevConfig::single_order(
                Scalar::from_i64(11),
                &[(Scalar::from_i64(-2), 2, Scalar::one())],
                ArithMode::Rational,
                256,
            )
            .unwrap(),
        )
        .unwrap();
        let eng = StructureEngine::new(&fam);
        let b2 = eng.bundle(2).unwrap();
        assert_eq!(b2.sigma_prev, Some(Scalar::zero()));
        assert!(b2.v2.is_zero());
        for row in b2.lcoef_ledger(fam.config()) {
            assert!(row.pass, "entry {}", row.name);
        }
    }

    #[test]
    fn classical_ledger_when_d_zero() {
        let fam = SobolevFamily::new(
            SobolevConfig::classical(Scalar::zero(), ArithMode::Rational, 128).unwrap(),
        )
        .unwrap();
        let eng = StructureEngine::new(&fam);
        let b = eng.bundle(4).unwrap();
        let ledger = b.lcoef_ledger(fam.config());
        let f2_row = ledger.iter().find(|r| r.name == "f2").unwrap();
        assert_eq!(f2_row.expected_degree, 0);
        assert_eq!(f2_row.expected_leading, Scalar::one());
        assert!(ledger.iter().all(|r| r.pass));
    }

    #[test]
    fn sigma_matches_frozen_value_example1() {
        // sigma_12 for the alpha = 11 single-mass configuration
        let fam = example1_family();
        let eng = StructureEngine::new(&fam);
        let b = eng.bundle(12).unwrap();
        let expected = Scalar::Rat(
            "16401375208060150252840200/114457024409685372361507"
                .parse()
                .unwrap(),
        );
        assert_eq!(b.sigma, expected);
    }

    #[test]
    fn float_mode_bundle_consistent_with_rational() {
        let rat = example1_family();
        let flt = SobolevFamily::new(
            SobolevConfig::single_order(
                Scalar::from_i64(11),
                &[(Scalar::from_i64(-2), 1, Scalar::one())],
                ArithMode::Float,
                320,
            )
            .unwrap(),
        )
        .unwrap();
        let er = StructureEngine::new(&rat);
        let ef = StructureEngine::new(&flt);
        let br = er.bundle(6).unwrap();
        let bf = ef.bundle(6).unwrap();
        let diff = &br.p2.to_float(320) - &bf.p2;
        assert!(diff.is_negligible(140, &br.p2.to_float(320).sup_norm()));
    }
}
