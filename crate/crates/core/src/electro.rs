//! Electrostatic model for the zero configuration of S_n.
//!
//! The logarithmic-derivative ratio p1/p2 of the second-order ODE is
//! decomposed into simple-pole terms: a fixed charge at the origin, one at
//! each mass point, one at each root of small_delta (the "u" poles), and
//! attractive terms at the roots of phi1 (the "e" poles, complex allowed).
//! The energy of n unit charges in that external field has the zeros of
//! S_n as a critical point; the Hessian spectrum classifies it.
//!
//! Conventions resolved here and verified against the direct rational
//! function -1/2 (p1/p2)': the per-charge linear term is omega/2 with
//! constant slope 1/2 on both orthants, and the phi1 poles enter the
//! potential attractively (+ ell4 log |omega - e|).

use crate::complex::ComplexScalar;
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::roots::{find_roots, ZeroSet};
use crate::scalar::Scalar;
use crate::sobolev::{SobolevConfig, SobolevPolynomial};
use crate::structure::StructureBundle;

/// Where a field pole came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PoleKind {
    Origin,
    Mass(usize),
    DeltaRoot(usize),
    PhiRoot(usize),
}

/// One pole of the external field: either a real location or a conjugate
/// pair stored through its real quadratic tau(x) = x^2 + t1 x + t0.
/// `exponent` is the signed coefficient of 1/(x - pole) in p1/p2; positive
/// exponents repel the movable charges, negative ones attract.
#[derive(Clone, Debug)]
pub struct PoleGroup {
    pub kind: PoleKind,
    pub location: ComplexScalar,
    pub exponent: Scalar,
    /// Present exactly when the group is a conjugate pair.
    pub tau: Option<(Scalar, Scalar)>,
}

impl PoleGroup {
    pub fn is_pair(&self) -> bool {
        self.tau.is_some()
    }
}

/// Assumption diagnostics. Failures never abort model construction.
#[derive(Clone, Debug, Default)]
pub struct AssumptionReport {
    /// Roots of small_delta are real, simple, and distinct from the zeros,
    /// the mass points, and the origin.
    pub delta_roots_admissible: bool,
    /// Roots of phi1 avoid [0, inf) and the mass points.
    pub phi_roots_admissible: bool,
    /// Residue bounds r(0) > -1, r(u_i) > -1, r(c_j) > -2 d_j - 3, strictly.
    pub residue_bounds_met: bool,
    /// Some residue sits numerically on its bound (the strict inequality is
    /// undecidable at working precision; the pole drops out of the field).
    pub residue_on_boundary: bool,
    pub diagnostics: Vec<String>,
}

impl AssumptionReport {
    pub fn all_met(&self) -> bool {
        self.delta_roots_admissible && self.phi_roots_admissible && self.residue_bounds_met
    }
}

/// The assembled external-field model for one level n.
#[derive(Clone, Debug)]
pub struct ElectrostaticModel {
    pub n: usize,
    pub precision_bits: u32,
    pub zeros: ZeroSet,
    pub u_roots: ZeroSet,
    pub e_roots: ZeroSet,
    /// Exponent of the origin pole, 1 + r(0); absent on a non-simple pole.
    pub ell1: Option<Scalar>,
    /// Exponent per mass point, 2 d_j + 3 + r(c_j).
    pub ell2: Vec<Option<Scalar>>,
    /// Exponent per u cluster, 1 + Re r(u_i).
    pub ell3: Vec<Scalar>,
    /// Multiplicity per e cluster.
    pub ell4: Vec<usize>,
    pub r_origin: Option<Scalar>,
    pub r_masses: Vec<Option<Scalar>>,
    /// Complex residues at the u poles (imaginary parts are diagnostics).
    pub r_u: Vec<ComplexScalar>,
    pub psi1: Polynomial,
    pub psi2: Polynomial,
    pub groups: Vec<PoleGroup>,
    pub assumptions: AssumptionReport,
    /// All residues were computable and the pair exponents are real; the
    /// pole-sum field is then a faithful rewrite of -1/2 p1/p2.
    pub field_decomposition_valid: bool,
    p1f: Polynomial,
    p2f: Polynomial,
}

fn empty_zero_set(label: &str, precision_bits: u32) -> ZeroSet {
    use rug::float::Special;
    use rug::Float;
    ZeroSet {
        label: label.to_string(),
        roots: Vec::new(),
        residuals: Vec::new(),
        residual_bound: Scalar::zero().to_float(precision_bits),
        simple: Vec::new(),
        converged: Vec::new(),
        min_separation: Scalar::Big(Float::with_val(precision_bits, Special::Infinity)),
        precision_bits,
    }
}

fn roots_of(p: &Polynomial, precision_bits: u32, label: &str) -> Result<ZeroSet> {
    if p.degree() < 1 {
        Ok(empty_zero_set(label, precision_bits))
    } else {
        find_roots(p, precision_bits, label)
    }
}

/// Build the model from a complete bundle (phi parts reduced) and its
/// Sobolev polynomial. Assumption failures are recorded, not raised.
pub fn build_model(
    cfg: &SobolevConfig,
    bundle: &StructureBundle,
    sp: &SobolevPolynomial,
) -> Result<ElectrostaticModel> {
    assert_eq!(bundle.n, sp.n, "bundle and polynomial level must agree");
    let pb = cfg.precision_bits();
    let phi = bundle.phi.as_ref().ok_or_else(|| Error::Config(
        "electrostatic model needs the reduced determinant decomposition (n >= 2)".into(),
    ))?;
    let d = cfg.total_d() as isize;
    let n_masses = cfg.n_masses() as isize;

    // psi2 = x rho_N small_delta; psi1 = phi2 + phi3 + psi2 of degree <= d+N
    let psi2 = &(&Polynomial::x() * &bundle.rho.rho_n) * &bundle.small_delta;
    let psi1 = &(&phi[1] + &phi[2]) + &psi2;
    if psi1.degree() > d + n_masses {
        return Err(Error::IdentityViolation {
            name: "degree bound of the field numerator psi1".into(),
            n: bundle.n,
            residual: format!("deg psi1 = {}", psi1.degree()),
        });
    }
    let dpsi2 = psi2.derivative();

    let mut assumptions = AssumptionReport::default();
    let mut field_ok = true;

    // residues at the exact poles (origin and mass points), in config mode
    let boundary_tol = Scalar::pow2(-(pb as i32) / 4, pb);
    let mut residue_at = |p: &Scalar, label: String| -> Option<Scalar> {
        let den = dpsi2.eval(p);
        let bad = match cfg.mode() {
            crate::scalar::ArithMode::Rational => den.is_zero(),
            crate::scalar::ArithMode::Float => {
                den.abs() <= &boundary_tol * &dpsi2.sup_norm().max(&Scalar::one())
            }
        };
        if bad {
            assumptions
                .diagnostics
                .push(format!("non-simple field pole at {label}"));
            field_ok = false;
            None
        } else {
            Some(&psi1.eval(p) / &den)
        }
    };
    let r_origin = residue_at(&Scalar::zero(), "the origin".into());
    let r_masses: Vec<Option<Scalar>> = cfg
        .masses()
        .iter()
        .map(|m| residue_at(&m.c, format!("mass point {}", m.c)))
        .collect();
    let non_simple_pole = r_origin.is_none() || r_masses.iter().any(Option::is_none);

    // numeric root sets
    let zeros = find_roots(&sp.poly, pb, "S_n")?;
    let u_roots = roots_of(&bundle.small_delta, pb, "small_delta")?;
    let e_roots = roots_of(&phi[0], pb, "phi1")?;

    // u poles: one group per cluster, residues from the float quotient
    let psi1f = psi1.to_float(pb * 2);
    let dpsi2f = dpsi2.to_float(pb * 2);
    let u_clusters = u_roots.clusters();
    let mut r_u = Vec::with_capacity(u_clusters.len());
    let mut ell3 = Vec::with_capacity(u_clusters.len());
    for (u, mult) in &u_clusters {
        let uw = ComplexScalar::new(u.re.to_float(pb * 2), u.im.to_float(pb * 2));
        let den = dpsi2f.eval_complex(&uw);
        if den.is_zero() || *mult > 1 {
            assumptions
                .diagnostics
                .push(format!("non-simple field pole at u = {u}"));
            field_ok = false;
            r_u.push(ComplexScalar::from_real(Scalar::zero().to_float(pb)));
            ell3.push(Scalar::zero().to_float(pb));
            continue;
        }
        let r = &psi1f.eval_complex(&uw) / &den;
        let r = ComplexScalar::new(r.re.to_float(pb), r.im.to_float(pb));
        if !r.im.abs().approx_eq(&Scalar::zero(), pb / 4, &Scalar::one()) {
            assumptions
                .diagnostics
                .push(format!("complex residue at u = {u}: Im r = {}", r.im));
            field_ok = false;
        }
        ell3.push(&Scalar::one().to_float(pb) + &r.re);
        r_u.push(r);
    }
    let e_clusters = e_roots.clusters();
    let ell4: Vec<usize> = e_clusters.iter().map(|(_, m)| *m).collect();

    // assumption 1: u poles real simple, away from zeros, masses, origin
    let sep_tol = Scalar::pow2(-(pb as i32) / 4, pb);
    let mut a1 = u_roots.all_real() && u_roots.all_simple() && !non_simple_pole;
    if !u_roots.all_real() {
        assumptions
            .diagnostics
            .push("small_delta has non-real roots".into());
    }
    if !u_roots.all_simple() {
        assumptions
            .diagnostics
            .push("small_delta has a repeated root".into());
    }
    for (u, _) in &u_clusters {
        let mut near = |p: &ComplexScalar, what: &str| {
            if (u - p).abs() <= &sep_tol * &(&Scalar::one() + &u.abs()) {
                assumptions
                    .diagnostics
                    .push(format!("u = {u} coincides with {what}"));
                a1 = false;
            }
        };
        near(
            &ComplexScalar::from_real(Scalar::zero().to_float(pb)),
            "the origin",
        );
        for m in cfg.masses() {
            near(
                &ComplexScalar::from_real(m.c.to_float(pb)),
                "a mass point",
            );
        }
        for z in &zeros.roots {
            near(z, "a zero of S_n");
        }
    }
    assumptions.delta_roots_admissible = a1;

    // assumption 2: e poles off [0, inf) and off the mass points
    let mut a2 = true;
    for (e, _) in &e_clusters {
        let on_support = e.im.is_zero() && !e.re.is_negative();
        if on_support {
            assumptions
                .diagnostics
                .push(format!("e = {e} lies on [0, inf)"));
            a2 = false;
        }
        for m in cfg.masses() {
            if (e - &ComplexScalar::from_real(m.c.to_float(pb))).abs()
                <= &sep_tol * &(&Scalar::one() + &e.abs())
            {
                assumptions
                    .diagnostics
                    .push(format!("e = {e} coincides with mass point {}", m.c));
                a2 = false;
            }
        }
    }
    assumptions.phi_roots_admissible = a2;

    // assumption 3: strict residue bounds
    let mut a3 = true;
    let mut boundary = false;
    let mut check_bound = |value: Option<&Scalar>, threshold: Scalar, label: String| {
        let Some(v) = value else {
            a3 = false;
            return;
        };
        let dist = (v - &threshold).abs();
        if dist <= boundary_tol {
            boundary = true;
            a3 = false;
            assumptions.diagnostics.push(format!(
                "residue at {label} sits on its bound ({v} vs {threshold}); the pole exponent vanishes"
            ));
        } else if *v <= threshold {
            a3 = false;
            assumptions
                .diagnostics
                .push(format!("residue bound violated at {label}: {v} <= {threshold}"));
        }
    };
    check_bound(r_origin.as_ref(), Scalar::from_i64(-1), "the origin".into());
    for (m, r) in cfg.masses().iter().zip(&r_masses) {
        check_bound(
            r.as_ref(),
            Scalar::from_i64(-(2 * m.order as i64) - 3),
            format!("mass point {}", m.c),
        );
    }
    for ((u, _), r) in u_clusters.iter().zip(&r_u) {
        check_bound(Some(&r.re), Scalar::from_i64(-1), format!("u = {u}"));
    }
    assumptions.residue_bounds_met = a3;
    assumptions.residue_on_boundary = boundary;

    // exponents
    let ell1 = r_origin
        .as_ref()
        .map(|r| (&Scalar::one() + r).to_float(pb));
    let ell2: Vec<Option<Scalar>> = cfg
        .masses()
        .iter()
        .zip(&r_masses)
        .map(|(m, r)| {
            r.as_ref()
                .map(|r| (&Scalar::from_usize(2 * m.order + 3) + r).to_float(pb))
        })
        .collect();

    // pole groups; conjugate pairs keep only their upper-half representative
    let mut groups = Vec::new();
    if let Some(l1) = &ell1 {
        groups.push(PoleGroup {
            kind: PoleKind::Origin,
            location: ComplexScalar::from_real(Scalar::zero().to_float(pb)),
            exponent: l1.clone(),
            tau: None,
        });
    }
    for (j, (m, l2)) in cfg.masses().iter().zip(&ell2).enumerate() {
        if let Some(l2) = l2 {
            groups.push(PoleGroup {
                kind: PoleKind::Mass(j),
                location: ComplexScalar::from_real(m.c.to_float(pb)),
                exponent: l2.clone(),
                tau: None,
            });
        }
    }
    let mut push_root_groups =
        |clusters: &[(ComplexScalar, usize)], exps: Vec<Scalar>, kind: fn(usize) -> PoleKind| {
            for (i, ((z, _), exp)) in clusters.iter().zip(exps).enumerate() {
                if z.im.is_negative() {
                    continue; // conjugate partner carries the pair
                }
                let tau = if z.im.is_zero() {
                    None
                } else {
                    // (x - z)(x - conj z) = x^2 - 2 Re z x + |z|^2
                    Some((z.abs_sq(), -&(&z.re + &z.re)))
                };
                groups.push(PoleGroup {
                    kind: kind(i),
                    location: z.clone(),
                    exponent: exp,
                    tau,
                });
            }
        };
    push_root_groups(&u_clusters, ell3.clone(), PoleKind::DeltaRoot);
    push_root_groups(
        &e_clusters,
        ell4.iter()
            .map(|&m| -&Scalar::from_usize(m).to_float(pb))
            .collect(),
        PoleKind::PhiRoot,
    );

    Ok(ElectrostaticModel {
        n: bundle.n,
        precision_bits: pb,
        zeros,
        u_roots,
        e_roots,
        ell1,
        ell2,
        ell3,
        ell4,
        r_origin,
        r_masses,
        r_u,
        psi1,
        psi2,
        groups,
        assumptions,
        field_decomposition_valid: field_ok,
        p1f: bundle.p1.to_float(pb),
        p2f: bundle.p2.to_float(pb),
    })
}

impl ElectrostaticModel {
    fn collision_tol(&self) -> Scalar {
        Scalar::pow2(-(self.precision_bits as i32) / 2, self.precision_bits)
    }

    fn significant(&self, exponent: &Scalar) -> bool {
        exponent.abs() > Scalar::pow2(-(self.precision_bits as i32) / 4, self.precision_bits)
    }

    fn check_admissible(&self, omega: &[Scalar]) -> Result<()> {
        let tol = self.collision_tol();
        for (i, a) in omega.iter().enumerate() {
            for b in omega.iter().skip(i + 1) {
                if (a - b).abs() <= tol {
                    return Err(Error::PoleCollision {
                        point: a.to_string(),
                        pole: b.to_string(),
                    });
                }
            }
            for g in &self.groups {
                if !self.significant(&g.exponent) {
                    continue;
                }
                let dist = match &g.tau {
                    None => (a - &g.location.re).abs(),
                    Some((t0, t1)) => (&(&(a * a) + &(t1 * a)) + t0).abs(),
                };
                if dist <= tol {
                    return Err(Error::PoleCollision {
                        point: a.to_string(),
                        pole: g.location.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Total energy: pairwise log repulsion plus the external field
    /// omega/2 - 1/2 sum_g beta_g log-term(omega).
    pub fn energy(&self, omega: &[Scalar]) -> Result<Scalar> {
        if !self.field_decomposition_valid {
            return Err(Error::NonSimplePole {
                pole: "field decomposition unavailable; see assumption diagnostics".into(),
            });
        }
        self.check_admissible(omega)?;
        let pb = self.precision_bits;
        let mut e = Scalar::zero().to_float(pb);
        for (i, a) in omega.iter().enumerate() {
            for b in omega.iter().skip(i + 1) {
                e = &e - &(a - b).abs().ln();
            }
        }
        let half = Scalar::rational(1, 2);
        for w in omega {
            let mut h = w.to_float(pb);
            for g in &self.groups {
                let log_term = match &g.tau {
                    None => (w - &g.location.re).abs().ln(),
                    Some((t0, t1)) => (&(&(w * w) + &(t1 * w)) + t0).abs().ln(),
                };
                h = &h - &(&g.exponent * &log_term);
            }
            e = &e + &(&half * &h);
        }
        Ok(e)
    }

    /// Slope of the per-charge external potential, -1/2 (p1/p2) in its
    /// pole-sum form.
    fn external_slope(&self, w: &Scalar) -> Scalar {
        let pb = self.precision_bits;
        let mut s = Scalar::rational(1, 2).to_float(pb);
        let half = Scalar::rational(1, 2);
        for g in &self.groups {
            let term = match &g.tau {
                None => (w - &g.location.re).recip(),
                Some((t0, t1)) => {
                    let tau = &(&(w * w) + &(t1 * w)) + t0;
                    let dtau = &(w + w) + t1;
                    &dtau / &tau
                }
            };
            s = &s - &(&(&half * &g.exponent) * &term);
        }
        s
    }

    /// Curvature of the per-charge external potential from the pole sum.
    pub fn external_curvature(&self, w: &Scalar) -> Scalar {
        let pb = self.precision_bits;
        let mut c = Scalar::zero().to_float(pb);
        let half = Scalar::rational(1, 2);
        for g in &self.groups {
            let term = match &g.tau {
                None => (w - &g.location.re).recip().pow_i(2),
                Some((t0, t1)) => {
                    // d^2/dw^2 log tau = (tau'' tau - tau'^2) / tau^2, tau'' = 2
                    let tau = &(&(w * w) + &(t1 * w)) + t0;
                    let dtau = &(w + w) + t1;
                    let num = &(&Scalar::from_i64(2) * &tau) - &(&dtau * &dtau);
                    -&(&num / &(&tau * &tau))
                }
            };
            c = &c + &(&(&half * &g.exponent) * &term);
        }
        c
    }

    /// The same curvature from the ODE coefficients directly:
    /// -1/2 d/dw (p1/p2). Reference route for validating the pole sum.
    pub fn external_curvature_direct(&self, w: &Scalar) -> Scalar {
        let p1 = self.p1f.eval(w);
        let p2 = self.p2f.eval(w);
        let dp1 = self.p1f.derivative().eval(w);
        let dp2 = self.p2f.derivative().eval(w);
        let num = &(&dp1 * &p2) - &(&p1 * &dp2);
        let ratio = &num / &(&p2 * &p2);
        -&(&ratio / &Scalar::from_i64(2))
    }

    /// Slope from the ODE coefficients directly: -1/2 p1/p2.
    pub fn external_slope_direct(&self, w: &Scalar) -> Scalar {
        let p1 = self.p1f.eval(w);
        let p2 = self.p2f.eval(w);
        -&(&(&p1 / &p2) / &Scalar::from_i64(2))
    }

    /// Analytic gradient of the energy. Falls back to the direct ODE-ratio
    /// slope when the pole decomposition is not valid.
    pub fn gradient(&self, omega: &[Scalar]) -> Result<Vec<Scalar>> {
        self.check_admissible(omega)?;
        let mut out = Vec::with_capacity(omega.len());
        for (k, w) in omega.iter().enumerate() {
            let mut g = Scalar::zero().to_float(self.precision_bits);
            for (i, v) in omega.iter().enumerate() {
                if i != k {
                    g = &g - &(w - v).recip();
                }
            }
            let slope = if self.field_decomposition_valid {
                self.external_slope(w)
            } else {
                self.external_slope_direct(w)
            };
            out.push(&g + &slope);
        }
        Ok(out)
    }

    /// Analytic Hessian of the energy: -1/(w_k - w_j)^2 off the diagonal,
    /// pair repulsion plus external curvature on it.
    pub fn hessian(&self, omega: &[Scalar]) -> Result<Vec<Vec<Scalar>>> {
        self.check_admissible(omega)?;
        let n = omega.len();
        let pb = self.precision_bits;
        let mut h = vec![vec![Scalar::zero().to_float(pb); n]; n];
        for k in 0..n {
            let mut diag = if self.field_decomposition_valid {
                self.external_curvature(&omega[k])
            } else {
                self.external_curvature_direct(&omega[k])
            };
            for j in 0..n {
                if j == k {
                    continue;
                }
                let inv_sq = (&omega[k] - &omega[j]).recip().pow_i(2);
                h[k][j] = -&inv_sq;
                diag = &diag + &inv_sq;
            }
            h[k][k] = diag;
        }
        Ok(h)
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// ascending. Converges when the off-diagonal Frobenius norm drops below
/// 2^-(precision/2) relative to the matrix norm.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<Scalar>>, precision_bits: u32) -> Vec<Scalar> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let one = Scalar::one().to_float(precision_bits);
    let frob = |m: &Vec<Vec<Scalar>>, off_only: bool| -> Scalar {
        let mut s = Scalar::zero().to_float(precision_bits);
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !off_only || i != j {
                    s = &s + &(v * v);
                }
            }
        }
        s.sqrt()
    };
    let norm = frob(&a, false).max(&one);
    let tol = &Scalar::pow2(-(precision_bits as i32) / 2, precision_bits) * &norm;
    for _sweep in 0..100 {
        if frob(&a, true) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].is_zero() {
                    continue;
                }
                let theta = &(&a[q][q] - &a[p][p]) / &(&Scalar::from_i64(2) * &a[p][q]);
                let t = if theta.is_zero() {
                    one.clone()
                } else {
                    let root = (&(&theta * &theta) + &one).sqrt();
                    let denom = &theta.abs() + &root;
                    if theta.is_negative() {
                        -&denom.recip()
                    } else {
                        denom.recip()
                    }
                };
                let c = (&(&t * &t) + &one).sqrt().recip();
                let s = &t * &c;
                for i in 0..n {
                    let aip = a[i][p].clone();
                    let aiq = a[i][q].clone();
                    a[i][p] = &(&c * &aip) - &(&s * &aiq);
                    a[i][q] = &(&s * &aip) + &(&c * &aiq);
                }
                for j in 0..n {
                    let apj = a[p][j].clone();
                    let aqj = a[q][j].clone();
                    a[p][j] = &(&c * &apj) - &(&s * &aqj);
                    a[q][j] = &(&s * &apj) + &(&c * &aqj);
                }
            }
        }
    }
    let mut eig: Vec<Scalar> = (0..n).map(|i| a[i][i].clone()).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

/// Sign pattern of the Hessian spectrum at the zero configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classification {
    LocalMin,
    /// 1-based positions (in the ascending eigenvalue list) of the
    /// negative eigenvalues.
    Saddle(Vec<usize>),
    Degenerate,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Classification::LocalMin => write!(f, "LocalMin"),
            Classification::Saddle(idx) => write!(f, "Saddle{idx:?}"),
            Classification::Degenerate => write!(f, "Degenerate"),
        }
    }
}

/// Positive-definiteness verdict for the truncated problem with a subset of
/// charges pinned.
#[derive(Clone, Debug)]
pub struct ConditionalResult {
    /// 1-based indices of the pinned charges (ascending zero order).
    pub fixed: Vec<usize>,
    pub eigenvalues: Vec<Scalar>,
    pub positive_definite: bool,
}

/// Full classification report at the zeros of S_n.
#[derive(Clone, Debug)]
pub struct ElectrostaticReport {
    pub model: ElectrostaticModel,
    /// Largest gradient component magnitude at the zeros; absent when the
    /// zeros are not all real.
    pub gradient_residual: Option<Scalar>,
    pub eigenvalues: Vec<Scalar>,
    pub classification: Classification,
    /// Per-zero verdict of the sufficient condition: external curvature
    /// positive at that zero.
    pub sufficient_condition: Vec<bool>,
}

/// Classify the zero configuration of the model's polynomial.
pub fn classify(model: ElectrostaticModel) -> Result<ElectrostaticReport> {
    let pb = model.precision_bits;
    if !model.zeros.all_real() || !model.zeros.all_simple() {
        return Ok(ElectrostaticReport {
            model,
            gradient_residual: None,
            eigenvalues: Vec::new(),
            classification: Classification::Degenerate,
            sufficient_condition: Vec::new(),
        });
    }
    let omega = model.zeros.real_roots();
    let grad = model.gradient(&omega)?;
    let gradient_residual = grad
        .iter()
        .map(Scalar::abs)
        .fold(Scalar::zero().to_float(pb), |acc, g| acc.max(&g));
    let hess = model.hessian(&omega)?;
    let eigenvalues = jacobi_eigenvalues(hess, pb);
    let degenerate_tol = Scalar::pow2(-(pb as i32) / 4, pb);
    let classification = if eigenvalues.iter().any(|l| l.abs() <= degenerate_tol) {
        Classification::Degenerate
    } else if eigenvalues.iter().all(Scalar::is_positive) {
        Classification::LocalMin
    } else {
        Classification::Saddle(
            eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, l)| l.is_negative())
                .map(|(i, _)| i + 1)
                .collect(),
        )
    };
    let sufficient_condition = omega
        .iter()
        .map(|w| {
            let c = if model.field_decomposition_valid {
                model.external_curvature(w)
            } else {
                model.external_curvature_direct(w)
            };
            c.is_positive()
        })
        .collect();
    Ok(ElectrostaticReport {
        model,
        gradient_residual: Some(gradient_residual),
        eigenvalues,
        classification,
        sufficient_condition,
    })
}

/// Truncated problem: pin the charges at the 1-based `fixed` positions of
/// the ascending zero list and test the remaining Hessian block for
/// positive definiteness. An empty remainder is vacuously definite.
pub fn conditional_equilibrium(
    report: &ElectrostaticReport,
    fixed: &[usize],
) -> Result<ConditionalResult> {
    let model = &report.model;
    let omega = model.zeros.real_roots();
    let n = omega.len();
    for &f in fixed {
        if f == 0 || f > n {
            return Err(Error::Config(format!(
                "fixed index {f} outside 1..={n}"
            )));
        }
    }
    let keep: Vec<usize> = (1..=n).filter(|i| !fixed.contains(i)).collect();
    let hess = model.hessian(&omega)?;
    let sub: Vec<Vec<Scalar>> = keep
        .iter()
        .map(|&r| keep.iter().map(|&c| hess[r - 1][c - 1].clone()).collect())
        .collect();
    let eigenvalues = jacobi_eigenvalues(sub, model.precision_bits);
    let positive_definite = eigenvalues.iter().all(Scalar::is_positive);
    Ok(ConditionalResult {
        fixed: fixed.to_vec(),
        eigenvalues,
        positive_definite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ArithMode;
    use crate::sobolev::SobolevFamily;
    use crate::structure::StructureEngine;

    fn model_for(alpha: i64, masses: &[(i64, usize)], n: usize) -> ElectrostaticModel {
        let spec: Vec<(Scalar, usize, Scalar)> = masses
            .iter()
            .map(|&(c, d)| (Scalar::from_i64(c), d, Scalar::one()))
            .collect();
        let cfg = SobolevConfig::single_order(
            Scalar::from_i64(alpha),
            &spec,
            ArithMode::Rational,
            256,
        )
        .unwrap();
        let fam = SobolevFamily::new(cfg).unwrap();
        let eng = StructureEngine::new(&fam);
        let bundle = eng.bundle(n).unwrap();
        let sp = fam.poly(n).unwrap();
        build_model(fam.config(), &bundle, &sp).unwrap()
    }

    #[test]
    fn classical_field_reduces_to_origin_pole() {
        let m = model_for(11, &[], 6);
        // single pole at the origin with exponent alpha + 1
        assert_eq!(m.groups.len(), 1);
        assert_eq!(m.groups[0].kind, PoleKind::Origin);
        assert_eq!(
            m.ell1.clone().unwrap(),
            Scalar::from_i64(12).to_float(256)
        );
        assert!(m.u_roots.roots.is_empty());
        assert!(m.e_roots.roots.is_empty());
        // r(0) = alpha exactly in rational mode
        assert_eq!(m.r_origin.unwrap(), Scalar::from_i64(11));
    }

    #[test]
    fn classical_curvature_matches_half_alpha_plus_one_over_x_sq() {
        let m = model_for(11, &[], 6);
        let w = Scalar::from_i64(3).to_float(256);
        let expect = Scalar::rational(12, 2 * 9).to_float(256);
        let got = m.external_curvature(&w);
        assert!(got.approx_eq(&expect, 200, &Scalar::one()));
        let direct = m.external_curvature_direct(&w);
        assert!(direct.approx_eq(&expect, 200, &Scalar::one()));
    }

    #[test]
    fn classical_n1_minimum_at_one() {
        // alpha = 0, n = 1: E(w) = w/2 + (1/2) log(1/w), minimized at w = 1
        let m = model_for(0, &[], 2);
        // use the n=1 field shape through the slope: 1/2 - 1/(2w)
        let w = Scalar::one().to_float(256);
        // at the minimum the classical slope for ell1 = 1 vanishes
        let slope = m.external_slope(&w); // 1/2 - ell1/(2*1), ell1 = 1
        assert!(slope.approx_eq(&Scalar::zero(), 200, &Scalar::one()));
    }

    #[test]
    fn energy_is_permutation_invariant_and_finite() {
        let m = model_for(11, &[(-2, 1)], 4);
        let pts: Vec<Scalar> = [3i64, 7, 12, 20]
            .iter()
            .map(|&v| Scalar::from_i64(v).to_float(256))
            .collect();
        let e1 = m.energy(&pts).unwrap();
        let mut permuted = pts.clone();
        permuted.swap(0, 3);
        permuted.swap(1, 2);
        let e2 = m.energy(&permuted).unwrap();
        assert!(e1.approx_eq(&e2, 220, &e1.abs()));
    }

    #[test]
    fn pole_collision_detected() {
        let m = model_for(11, &[(-2, 1)], 4);
        let pts = vec![
            Scalar::from_i64(-2).to_float(256),
            Scalar::from_i64(5).to_float(256),
        ];
        assert!(matches!(
            m.energy(&pts),
            Err(Error::PoleCollision { .. })
        ));
        let dup = vec![
            Scalar::from_i64(3).to_float(256),
            Scalar::from_i64(3).to_float(256),
        ];
        assert!(matches!(m.energy(&dup), Err(Error::PoleCollision { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = model_for(11, &[(-2, 1)], 4);
        let pts: Vec<Scalar> = [2i64, 6, 11, 19]
            .iter()
            .map(|&v| Scalar::from_i64(v).to_float(256))
            .collect();
        let grad = m.gradient(&pts).unwrap();
        let h = Scalar::pow2(-40, 256);
        for k in 0..pts.len() {
            let mut up = pts.clone();
            up[k] = &up[k] + &h;
            let mut dn = pts.clone();
            dn[k] = &dn[k] - &h;
            let fd = &(&m.energy(&up).unwrap() - &m.energy(&dn).unwrap())
                / &(&h + &h);
            let diff = (&fd - &grad[k]).abs();
            let tol = &Scalar::pow2(-33, 256) * &grad[k].abs().max(&Scalar::one());
            assert!(diff <= tol, "k = {k}: fd {fd} vs analytic {}", grad[k]);
        }
    }

    #[test]
    fn hessian_matches_gradient_differences_and_is_symmetric() {
        let m = model_for(11, &[(-2, 1)], 4);
        let pts: Vec<Scalar> = [2i64, 6, 11, 19]
            .iter()
            .map(|&v| Scalar::from_i64(v).to_float(256))
            .collect();
        let hess = m.hessian(&pts).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(hess[r][c], hess[c][r]);
            }
        }
        let h = Scalar::pow2(-40, 256);
        for k in 0..4 {
            let mut up = pts.clone();
            up[k] = &up[k] + &h;
            let mut dn = pts.clone();
            dn[k] = &dn[k] - &h;
            let gu = m.gradient(&up).unwrap();
            let gd = m.gradient(&dn).unwrap();
            for j in 0..4 {
                let fd = &(&gu[j] - &gd[j]) / &(&h + &h);
                let tol = &Scalar::pow2(-33, 256) * &hess[j][k].abs().max(&Scalar::one());
                assert!((&fd - &hess[j][k]).abs() <= tol, "({j},{k})");
            }
        }
    }

    #[test]
    fn pole_and_direct_curvature_agree() {
        let m = model_for(11, &[(-2, 1)], 6);
        assert!(m.field_decomposition_valid);
        for v in [1i64, 3, 8, 17, 40] {
            let w = Scalar::from_i64(v).to_float(256);
            let a = m.external_curvature(&w);
            let b = m.external_curvature_direct(&w);
            assert!(
                a.approx_eq(&b, 128, &a.abs().max(&Scalar::one())),
                "w = {v}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn jacobi_small_matrices() {
        let s = |v: i64| Scalar::from_i64(v).to_float(192);
        let eig = jacobi_eigenvalues(
            vec![vec![s(2), s(1)], vec![s(1), s(2)]],
            192,
        );
        assert!(eig[0].approx_eq(&s(1), 150, &Scalar::one()));
        assert!(eig[1].approx_eq(&s(3), 150, &Scalar::one()));
        // trace and determinant invariants on a 3x3
        let m = vec![
            vec![s(4), s(-1), s(2)],
            vec![s(-1), s(3), s(0)],
            vec![s(2), s(0), s(5)],
        ];
        let eig = jacobi_eigenvalues(m, 192);
        let trace = &(&eig[0] + &eig[1]) + &eig[2];
        assert!(trace.approx_eq(&s(12), 140, &Scalar::one()));
        let det = &(&eig[0] * &eig[1]) * &eig[2];
        // det = 4(15) - (-1)(-5) + 2(-6) = 60 - 5 - 12 = 43
        assert!(det.approx_eq(&s(43), 130, &Scalar::one()));
        assert!(jacobi_eigenvalues(Vec::new(), 64).is_empty());
    }

    #[test]
    fn classify_classical_local_min() {
        let m = model_for(11, &[], 12);
        let rep = classify(m).unwrap();
        assert_eq!(rep.classification, Classification::LocalMin);
        assert_eq!(rep.eigenvalues.len(), 12);
        assert!(rep.sufficient_condition.iter().all(|&b| b));
        let bound = Scalar::pow2(-80, 256);
        assert!(rep.gradient_residual.unwrap() <= bound);
    }

    #[test]
    fn conditional_with_empty_and_full_fixed_sets() {
        let m = model_for(11, &[], 5);
        let rep = classify(m).unwrap();
        let free = conditional_equilibrium(&rep, &[]).unwrap();
        assert_eq!(free.eigenvalues.len(), 5);
        assert_eq!(
            free.positive_definite,
            rep.classification == Classification::LocalMin
        );
        let all = conditional_equilibrium(&rep, &[1, 2, 3, 4, 5]).unwrap();
        assert!(all.positive_definite);
        assert!(all.eigenvalues.is_empty());
        assert!(conditional_equilibrium(&rep, &[9]).is_err());
    }
}
