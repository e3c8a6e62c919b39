//! High-precision computation of all complex roots of a real polynomial.
//!
//! Simultaneous Aberth-Ehrlich iteration at twice the working precision,
//! followed by Newton polishing, real-axis snapping, conjugate-pair
//! enforcement, and deterministic ordering by (real part, imaginary part).

use crate::complex::ComplexScalar;
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::scalar::Scalar;
use crate::sobolev::SobolevConfig;
use rug::float::Special;
use rug::Float;

const MAX_SWEEPS: usize = 200;
const POLISH_STEPS: usize = 3;

/// All roots of one polynomial with certification data.
#[derive(Clone, Debug)]
pub struct ZeroSet {
    pub label: String,
    /// Roots sorted ascending by (re, im), at `precision_bits`.
    pub roots: Vec<ComplexScalar>,
    /// |p(r)| for each root, p normalized monic.
    pub residuals: Vec<Scalar>,
    /// Largest admissible residual over all roots.
    pub residual_bound: Scalar,
    /// Root is simple: separated from its neighbours and |p'(r)| above the
    /// residual bound.
    pub simple: Vec<bool>,
    /// Residual met its per-root bound.
    pub converged: Vec<bool>,
    pub min_separation: Scalar,
    pub precision_bits: u32,
}

impl ZeroSet {
    pub fn all_simple(&self) -> bool {
        self.simple.iter().all(|&s| s)
    }

    pub fn all_real(&self) -> bool {
        self.roots.iter().all(|r| r.im.is_zero())
    }

    /// Real parts of the real roots, ascending.
    pub fn real_roots(&self) -> Vec<Scalar> {
        self.roots
            .iter()
            .filter(|r| r.im.is_zero())
            .map(|r| r.re.clone())
            .collect()
    }

    /// Group numerically coincident roots into (representative, multiplicity)
    /// clusters; conjugate symmetry is preserved by the sort order.
    pub fn clusters(&self) -> Vec<(ComplexScalar, usize)> {
        let tol_bits = (self.precision_bits / 4) as i32;
        let mut out: Vec<(ComplexScalar, usize)> = Vec::new();
        for r in &self.roots {
            let tol = &Scalar::pow2(-tol_bits, self.precision_bits)
                * &(&Scalar::one() + &r.abs());
            match out.last_mut() {
                Some((rep, count)) if (&r.clone() - &rep.clone()).abs() <= tol => {
                    *count += 1;
                }
                _ => out.push((r.clone(), 1)),
            }
        }
        out
    }
}

fn float_c(re: f64, im: f64, prec: u32) -> ComplexScalar {
    ComplexScalar::new(
        Scalar::Big(Float::with_val(prec, re)),
        Scalar::Big(Float::with_val(prec, im)),
    )
}

/// Compute every root of `p` (degree >= 1). Iteration runs at
/// 2 * `precision_bits`; results are rounded back to `precision_bits`.
pub fn find_roots(p: &Polynomial, precision_bits: u32, label: &str) -> Result<ZeroSet> {
    assert!(p.degree() >= 1, "find_roots needs degree >= 1");
    let wp = precision_bits * 2;
    let pf = p.to_float(wp);
    let lead = pf.leading().unwrap().clone();
    let monic = pf.scale(&lead.recip());

    // factor out exact roots at the origin
    let mut coeffs = monic.coeffs().to_vec();
    let mut origin_roots = 0usize;
    while coeffs.first().is_some_and(Scalar::is_zero) && coeffs.len() > 1 {
        coeffs.remove(0);
        origin_roots += 1;
    }
    let reduced = Polynomial::new(coeffs);
    let deg = reduced.degree() as usize;

    let mut z: Vec<ComplexScalar> = Vec::with_capacity(deg);
    if deg > 0 {
        // Cauchy bound on a circle with an irrational angular offset
        let radius = 1.0 + reduced.sup_norm().to_f64().min(1e12);
        for k in 0..deg {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.356_241) / deg as f64;
            z.push(float_c(
                radius * theta.cos(),
                radius * theta.sin(),
                wp,
            ));
        }
        let dreduced = reduced.derivative();
        let eps_break = Scalar::pow2(-(3 * wp as i32 / 4), wp);
        for _sweep in 0..MAX_SWEEPS {
            let mut max_rel = Scalar::zero().to_float(wp);
            for i in 0..deg {
                let pv = reduced.eval_complex(&z[i]);
                if pv.is_zero() {
                    continue;
                }
                let mut dv = dreduced.eval_complex(&z[i]);
                if dv.is_zero() {
                    // nudge off a critical point
                    dv = ComplexScalar::new(Scalar::pow2(-(wp as i32) / 2, wp), Scalar::zero());
                }
                let newton = &pv / &dv;
                let mut repel = ComplexScalar::new(
                    Scalar::zero().to_float(wp),
                    Scalar::zero().to_float(wp),
                );
                for j in 0..deg {
                    if i == j {
                        continue;
                    }
                    let diff = &z[i] - &z[j];
                    if diff.is_zero() {
                        continue;
                    }
                    repel = &repel + &diff.recip();
                }
                let denom = &ComplexScalar::new(Scalar::one().to_float(wp), Scalar::zero())
                    - &(&newton * &repel);
                let w = if denom.is_zero() {
                    newton
                } else {
                    &newton / &denom
                };
                z[i] = &z[i] - &w;
                let rel = &w.abs() / &(&Scalar::one() + &z[i].abs());
                if rel > max_rel {
                    max_rel = rel;
                }
            }
            if max_rel <= eps_break {
                break;
            }
        }
        // Newton polish at full iteration precision
        for zi in z.iter_mut() {
            for _ in 0..POLISH_STEPS {
                let pv = reduced.eval_complex(zi);
                let dv = dreduced.eval_complex(zi);
                if dv.is_zero() || pv.is_zero() {
                    break;
                }
                *zi = &*zi - &(&pv / &dv);
            }
        }
    }
    for _ in 0..origin_roots {
        z.push(float_c(0.0, 0.0, wp));
    }

    // snap near-real roots onto the axis, then enforce conjugate pairs
    let snap_bits = (precision_bits / 4) as i32;
    for zi in z.iter_mut() {
        let tol = &Scalar::pow2(-snap_bits, wp) * &(&Scalar::one() + &zi.re.abs());
        if zi.im.abs() <= tol {
            *zi = ComplexScalar::new(zi.re.clone(), Scalar::zero().to_float(wp));
        }
    }
    enforce_conjugate_pairs(&mut z);

    // round to the target precision and order deterministically
    let mut roots: Vec<ComplexScalar> = z
        .iter()
        .map(|zi| {
            ComplexScalar::new(
                zi.re.to_float(precision_bits),
                zi.im.to_float(precision_bits),
            )
        })
        .collect();
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });

    // residuals and certification against the monic normalization
    let norm = monic.sup_norm();
    let tol_half = Scalar::pow2(-(precision_bits as i32) / 2, wp);
    let dmonic = monic.derivative();
    let total_deg = monic.degree() as i32;
    let mut residuals = Vec::with_capacity(roots.len());
    let mut bounds = Vec::with_capacity(roots.len());
    let mut converged = Vec::with_capacity(roots.len());
    for r in &roots {
        let residual = monic.eval_complex(&r.clone().into_prec(wp)).abs();
        let growth = Scalar::one().max(&r.abs()).pow_i(total_deg);
        let bound = &(&tol_half * &norm.max(&Scalar::one())) * &growth;
        converged.push(residual <= bound);
        residuals.push(residual.to_float(precision_bits));
        bounds.push(bound);
    }
    let residual_bound = bounds
        .iter()
        .fold(Scalar::zero(), |acc, b| acc.max(b))
        .to_float(precision_bits);

    let mut min_separation = Scalar::Big(Float::with_val(precision_bits, Special::Infinity));
    for i in 0..roots.len() {
        for j in (i + 1)..roots.len() {
            let d = (&roots[i] - &roots[j]).abs();
            min_separation = min_separation.min(&d);
        }
    }
    let sep_tol = Scalar::pow2(-(precision_bits as i32) / 4, precision_bits);
    let mut simple = Vec::with_capacity(roots.len());
    for (i, r) in roots.iter().enumerate() {
        let mut sep = Scalar::Big(Float::with_val(precision_bits, Special::Infinity));
        for (j, s) in roots.iter().enumerate() {
            if i != j {
                sep = sep.min(&(r - s).abs());
            }
        }
        let dval = dmonic.eval_complex(&r.clone().into_prec(wp)).abs();
        simple.push(sep > sep_tol && dval > residual_bound);
    }

    let zs = ZeroSet {
        label: label.to_string(),
        roots,
        residuals,
        residual_bound,
        simple,
        converged: converged.clone(),
        min_separation,
        precision_bits,
    };
    if converged.iter().all(|&c| c) {
        Ok(zs)
    } else {
        Err(Error::NoConvergence {
            label: label.to_string(),
            sweeps: MAX_SWEEPS,
            partial: Box::new(zs),
        })
    }
}

impl ComplexScalar {
    fn into_prec(self, prec: u32) -> ComplexScalar {
        ComplexScalar::new(self.re.to_float(prec), self.im.to_float(prec))
    }
}

/// Replace near-conjugate root pairs by exact conjugates.
fn enforce_conjugate_pairs(z: &mut [ComplexScalar]) {
    let n = z.len();
    let mut unpaired: Vec<usize> = (0..n).filter(|&i| !z[i].im.is_zero()).collect();
    while unpaired.len() >= 2 {
        let i = unpaired[0];
        let conj = z[i].conj();
        // closest remaining candidate to the conjugate
        let (pos, &j) = unpaired[1..]
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| {
                (&z[a] - &conj)
                    .abs()
                    .partial_cmp(&(&z[b] - &conj).abs())
                    .unwrap()
            })
            .unwrap();
        let mean = ComplexScalar::new(
            &(&z[i].re + &z[j].re) / &Scalar::from_i64(2),
            &(&z[i].im - &z[j].im) / &Scalar::from_i64(2),
        );
        z[i] = mean.clone();
        z[j] = mean.conj();
        unpaired.remove(pos + 1);
        unpaired.remove(0);
    }
}

/// Count real roots strictly inside (a, b); `None` bounds are infinite.
pub fn real_roots_in(
    p: &Polynomial,
    a: Option<&Scalar>,
    b: Option<&Scalar>,
    precision_bits: u32,
) -> Result<usize> {
    let zs = find_roots(p, precision_bits, "real_roots_in")?;
    Ok(zs
        .roots
        .iter()
        .filter(|r| r.im.is_zero())
        .filter(|r| a.is_none_or(|a| r.re > *a) && b.is_none_or(|b| r.re < *b))
        .count())
}

/// Per-mass-point attraction report for a zero set.
#[derive(Clone, Debug)]
pub struct ZeroLocationReport {
    /// For each mass point: roots strictly nearer to c_j than to [0, inf).
    pub attracted_counts: Vec<usize>,
    /// Whether each mass point attracts exactly one root.
    pub exactly_one: Vec<bool>,
    /// Roots attracted to no mass point that are real and positive.
    pub free_positive: usize,
    /// Roots attracted to no mass point in total.
    pub free_total: usize,
    pub all_free_positive: bool,
}

/// Distance from z to the half line [0, inf).
fn dist_to_support(z: &ComplexScalar) -> Scalar {
    if z.re.is_negative() {
        z.abs()
    } else {
        z.im.abs()
    }
}

/// For each mass point, count the roots it attracts (closer to the point
/// than to the support half line). Informational: the attraction pattern is
/// only guaranteed for large n.
pub fn zero_location_check(cfg: &SobolevConfig, zs: &ZeroSet) -> ZeroLocationReport {
    let n_masses = cfg.n_masses();
    let mut attracted_counts = vec![0usize; n_masses];
    let mut free_total = 0usize;
    let mut free_positive = 0usize;
    for r in &zs.roots {
        let d_supp = dist_to_support(r);
        let mut attracted = false;
        for (j, m) in cfg.masses().iter().enumerate() {
            let c = ComplexScalar::from_real(m.c.to_float(zs.precision_bits));
            if (r - &c).abs() < d_supp {
                attracted_counts[j] += 1;
                attracted = true;
            }
        }
        if !attracted {
            free_total += 1;
            if r.im.is_zero() && r.re.is_positive() {
                free_positive += 1;
            }
        }
    }
    let exactly_one = attracted_counts.iter().map(|&c| c == 1).collect();
    ZeroLocationReport {
        attracted_counts,
        exactly_one,
        free_positive,
        free_total,
        all_free_positive: free_positive == free_total,
    }
}
