//! Observables on the modular surface, Monte Carlo integration and the
//! character projections `pi(chi_n)`.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::actions::modular::ActionPoint;
use crate::actions::sampling::{sample, SampleSet};
use crate::error::{Error, Result};
use crate::quadrature::adaptive_gk_real;

/// Largest tolerated fraction of non-finite evaluations in [`integrate`].
pub const MAX_EXCLUDED_FRACTION: f64 = 1e-3;
pub const MIN_K_NODES: usize = 64;
pub const DEFAULT_K_NODES: usize = 256;
/// Reconstruction tolerance of [`kfinite_decompose`].
pub const RECONSTRUCTION_TOL: f64 = 1e-7;
const CHECK_SEED: u64 = 0x5eed;
const CHECK_POINTS: usize = 100;

/// Exponents `p` for which `||f||_p` is finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Integrability {
    /// Every `p`, including `p = infinity`.
    Bounded,
    /// `p < limit`.
    Below(f64),
}

impl Integrability {
    pub fn contains(&self, p: f64) -> bool {
        match self {
            Integrability::Bounded => true,
            Integrability::Below(limit) => p < *limit,
        }
    }

    fn meet(self, other: Integrability) -> Integrability {
        match (self, other) {
            (Integrability::Bounded, o) | (o, Integrability::Bounded) => o,
            (Integrability::Below(a), Integrability::Below(b)) => Integrability::Below(a.min(b)),
        }
    }
}

type EvalFn = dyn Fn(&ActionPoint) -> Complex64 + Send + Sync;

/// A point-evaluable function on `X`.
#[derive(Clone)]
pub struct Observable {
    eval: Arc<EvalFn>,
    /// The K-characters present in `f`, when known.
    pub k_support: Option<BTreeSet<i32>>,
    pub integrability: Integrability,
    pub description: String,
    /// `int_X f dmu`, when known independently of sampling.
    pub exact_mean: Option<Complex64>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("description", &self.description)
            .field("k_support", &self.k_support)
            .field("integrability", &self.integrability)
            .field("exact_mean", &self.exact_mean)
            .finish()
    }
}

impl Observable {
    pub fn new<F>(
        eval: F,
        k_support: Option<BTreeSet<i32>>,
        integrability: Integrability,
        description: impl Into<String>,
    ) -> Result<Self>
    where
        F: Fn(&ActionPoint) -> Complex64 + Send + Sync + 'static,
    {
        if let Some(ks) = &k_support {
            if let Some(n) = ks.iter().find(|n| *n % 2 != 0) {
                return Err(Error::InvalidParameter(format!(
                    "odd K-type {n} cannot occur on the modular surface"
                )));
            }
        }
        Ok(Observable {
            eval: Arc::new(eval),
            k_support,
            integrability,
            description: description.into(),
            exact_mean: None,
        })
    }

    pub fn with_mean(mut self, mean: Complex64) -> Self {
        self.exact_mean = Some(mean);
        self
    }

    pub fn eval(&self, x: &ActionPoint) -> Complex64 {
        (self.eval)(x)
    }

    pub fn is_k_invariant(&self) -> bool {
        matches!(&self.k_support, Some(ks) if ks.len() == 1 && ks.contains(&0))
    }

    /// The single K-type of a pure K-type observable.
    pub fn pure_k_type(&self) -> Option<i32> {
        match &self.k_support {
            Some(ks) if ks.len() == 1 => ks.iter().next().copied(),
            _ => None,
        }
    }

    pub fn add(&self, other: &Observable) -> Observable {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let k_support = match (&self.k_support, &other.k_support) {
            (Some(a), Some(b)) => Some(a.union(b).copied().collect()),
            _ => None,
        };
        Observable {
            eval: Arc::new(move |x| f(x) + g(x)),
            k_support,
            integrability: self.integrability.meet(other.integrability),
            description: format!("({}) + ({})", self.description, other.description),
            exact_mean: self.exact_mean.zip(other.exact_mean).map(|(a, b)| a + b),
        }
    }

    /// `|f|`. Its K-support is not tracked.
    pub fn abs(&self) -> Observable {
        let f = self.eval.clone();
        Observable {
            eval: Arc::new(move |x| Complex64::new(f(x).norm(), 0.0)),
            k_support: None,
            integrability: self.integrability,
            description: format!("|{}|", self.description),
            exact_mean: None,
        }
    }

    /// `x -> f(g . x)`.
    pub fn compose_action(&self, g: crate::group::GroupElement) -> Observable {
        let f = self.eval.clone();
        Observable {
            eval: Arc::new(move |x| match crate::actions::modular::act(&g, x) {
                Ok(y) => f(&y),
                Err(_) => Complex64::new(f64::NAN, f64::NAN),
            }),
            k_support: None,
            integrability: self.integrability,
            description: format!("{} after {g}", self.description),
            exact_mean: self.exact_mean,
        }
    }
}

fn singleton(n: i32) -> Option<BTreeSet<i32>> {
    Some(BTreeSet::from([n]))
}

/// The constant function `c`.
pub fn constant(c: f64) -> Observable {
    Observable::new(
        move |_| Complex64::new(c, 0.0),
        singleton(0),
        Integrability::Bounded,
        format!("constant {c}"),
    )
    .expect("K-type 0 is even")
    .with_mean(Complex64::new(c, 0.0))
}

/// `exp(-1/(1-u^2))` on `(-1, 1)`.
fn smooth_profile(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// A smooth bump in the height `Im z`, supported on `[lo, hi]` with `lo > 1`.
///
/// Above height one the canonical representative is the unique orbit point
/// of maximal height, so the bump is a smooth compactly supported function
/// on `X`.
pub fn height_bump(lo: f64, hi: f64) -> Result<Observable> {
    if !(lo > 1.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "height bump needs 1 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let psi = move |y: f64| smooth_profile((y - mid) / half);
    // above height one the x-range of the domain is the full [-1/2, 1/2]
    let (m, _) = adaptive_gk_real(|y| psi(y) / (y * y), &[lo, mid, hi], 1e-13, 0.0, 1 << 16);
    Ok(Observable::new(
        move |x| Complex64::new(psi(x.z().im), 0.0),
        singleton(0),
        Integrability::Bounded,
        format!("height bump on [{lo}, {hi}]"),
    )?
    .with_mean(Complex64::new(3.0 / PI * m, 0.0)))
}

/// Hyperbolic distance between points of the upper half plane.
pub fn hyperbolic_distance(z: Complex64, w: Complex64) -> f64 {
    (1.0 + (z - w).norm_sqr() / (2.0 * z.im * w.im)).acosh()
}

/// A smooth bump of hyperbolic radius `radius` around `center`; the disk must
/// lie inside the open fundamental domain.
pub fn disk_bump(center: Complex64, radius: f64) -> Result<Observable> {
    if !(radius > 0.0) || !(center.im > 0.0) {
        return Err(Error::InvalidParameter(
            "disk bump needs radius > 0, Im center > 0".into(),
        ));
    }
    let to_sides = ((0.5 - center.re.abs()) / center.im).asinh();
    let to_circle = ((center.norm_sqr() - 1.0) / (2.0 * center.im)).asinh();
    if center.re.abs() >= 0.5 || center.norm_sqr() <= 1.0 || radius >= to_sides.min(to_circle) {
        return Err(Error::InvalidParameter(format!(
            "disk of radius {radius} around {center} leaves the fundamental domain"
        )));
    }
    let (m, _) = adaptive_gk_real(
        |rho| smooth_profile(rho / radius) * rho.sinh(),
        &[0.0, 0.5 * radius, radius],
        1e-13,
        0.0,
        1 << 16,
    );
    Ok(Observable::new(
        move |x| {
            Complex64::new(
                smooth_profile(hyperbolic_distance(x.z(), center) / radius),
                0.0,
            )
        },
        singleton(0),
        Integrability::Bounded,
        format!("disk bump at {center} radius {radius}"),
    )?
    // hyperbolic area element in polar form is sinh(rho) d rho d phi
    .with_mean(Complex64::new(3.0 / PI * 2.0 * PI * m, 0.0)))
}

/// `(Im z)^a`, unbounded in the cusp for `a > 0` and in `L^p` for `p < 1/a`.
pub fn power(a: f64) -> Result<Observable> {
    if !(a < 1.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "(Im z)^a is integrable only for a < 1, got {a}"
        )));
    }
    let integrability = if a <= 0.0 {
        Integrability::Bounded
    } else {
        Integrability::Below(1.0 / a)
    };
    // int_{sqrt(1-x^2)}^inf y^{a-2} dy = (1-x^2)^{(a-1)/2} / (1-a)
    let (m, _) = adaptive_gk_real(
        |x| (1.0 - x * x).powf(0.5 * (a - 1.0)) / (1.0 - a),
        &[-0.5, 0.0, 0.5],
        1e-14,
        0.0,
        1 << 16,
    );
    Ok(Observable::new(
        move |x| Complex64::new(x.z().im.powf(a), 0.0),
        singleton(0),
        integrability,
        format!("(Im z)^{a}"),
    )?
    .with_mean(Complex64::new(3.0 / PI * m, 0.0)))
}

/// `h(z) e^{i n theta}` for a K-invariant `h` and even `n`.
pub fn k_twist(base: &Observable, n: i32) -> Result<Observable> {
    if n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "K-twist by odd n = {n} is not defined on the modular surface"
        )));
    }
    if !base.is_k_invariant() {
        return Err(Error::InvalidParameter(
            "K-twist needs a K-invariant base observable".into(),
        ));
    }
    let h = base.eval.clone();
    let mean = if n == 0 {
        base.exact_mean
    } else {
        Some(Complex64::new(0.0, 0.0))
    };
    let mut out = Observable::new(
        move |x| h(x) * Complex64::from_polar(1.0, n as f64 * x.theta()),
        singleton(n),
        base.integrability,
        format!("{} * e^({n} i theta)", base.description),
    )?;
    out.exact_mean = mean;
    Ok(out)
}

/// Default library: bounded bumps, the unbounded power observable and a
/// K-twist, each with an independently known mean.
pub fn library() -> Vec<Observable> {
    let bump = height_bump(1.2, 4.0).expect("valid bump");
    vec![
        constant(1.0),
        bump.clone(),
        disk_bump(Complex64::new(0.0, 1.42), 0.3).expect("disk inside the domain"),
        power(0.25).expect("a < 1"),
        power(0.5).expect("a < 1"),
        k_twist(&bump, 2).expect("even twist"),
    ]
}

/// Monte Carlo estimate of `int_X f dmu`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Integral {
    pub mean: Complex64,
    pub std_err: f64,
    pub used: usize,
    pub excluded: usize,
    /// Whether `f` is in `L^p` for some `p > 2`, so the error bar is a CLT one.
    pub clt_valid: bool,
}

pub fn integrate(f: &Observable, s: &SampleSet) -> Result<Integral> {
    let values: Vec<Complex64> = s.points.par_iter().map(|x| f.eval(x)).collect();
    integrate_values(&values, f.integrability.contains(2.0 + 1e-9))
}

/// Mean and standard error of precomputed evaluations.
pub fn integrate_values(values: &[Complex64], clt_valid: bool) -> Result<Integral> {
    let total = values.len();
    let finite: Vec<Complex64> = values
        .iter()
        .copied()
        .filter(|v| v.re.is_finite() && v.im.is_finite())
        .collect();
    let excluded = total - finite.len();
    if total == 0 || excluded as f64 > MAX_EXCLUDED_FRACTION * total as f64 {
        return Err(Error::TooManyExcluded { excluded, total });
    }
    let n = finite.len() as f64;
    let mean = finite.iter().sum::<Complex64>() / n;
    let var = if finite.len() > 1 {
        finite.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(Integral {
        mean,
        std_err: (var / n).sqrt(),
        used: finite.len(),
        excluded,
        clt_valid,
    })
}

/// `(pi(chi_n) f)(x) = int_K conj(psi_n(k)) f(k^{-1} x) dk` by the periodic
/// trapezoid rule with `k_nodes` nodes on the half circle (`f` is
/// `pi`-periodic along the fiber).
pub fn chi_project(n: i32, f: &Observable, k_nodes: usize) -> Result<Observable> {
    if n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "odd K-character {n} annihilates every function on the modular surface"
        )));
    }
    if k_nodes < MIN_K_NODES {
        return Err(Error::InvalidParameter(format!(
            "chi_project needs at least {MIN_K_NODES} nodes, got {k_nodes}"
        )));
    }
    let g = f.eval.clone();
    let weights: Vec<(f64, Complex64)> = (0..k_nodes)
        .map(|j| {
            let phi = PI * j as f64 / k_nodes as f64;
            (
                phi,
                Complex64::from_polar(1.0 / k_nodes as f64, -(n as f64) * phi),
            )
        })
        .collect();
    let mean = match f.exact_mean {
        Some(m) if n == 0 => Some(m),
        _ if n != 0 => Some(Complex64::new(0.0, 0.0)),
        _ => None,
    };
    let mut out = Observable::new(
        move |x| {
            weights
                .iter()
                .map(|(phi, w)| w * g(&x.rotate_fiber(*phi)))
                .sum()
        },
        singleton(n),
        f.integrability,
        format!("chi_{n}[{}] (trapezoid, {k_nodes} nodes)", f.description),
    )?;
    out.exact_mean = mean;
    Ok(out)
}

/// Fixed check points used to validate K-type bookkeeping.
pub fn check_points() -> SampleSet {
    sample(CHECK_SEED, CHECK_POINTS).expect("positive count")
}

/// Splits a K-finite `f` into its declared components and verifies that they
/// sum back to `f` at the check points.
pub fn kfinite_decompose(f: &Observable, n_max: i32) -> Result<Vec<(i32, Observable)>> {
    kfinite_decompose_at(f, n_max, DEFAULT_K_NODES, &check_points())
}

pub fn kfinite_decompose_at(
    f: &Observable,
    n_max: i32,
    k_nodes: usize,
    points: &SampleSet,
) -> Result<Vec<(i32, Observable)>> {
    let ks = f.k_support.as_ref().ok_or_else(|| {
        Error::InvalidParameter(format!("{} has no declared K-support", f.description))
    })?;
    if let Some(n) = ks.iter().find(|n| n.abs() > n_max) {
        return Err(Error::InvalidParameter(format!(
            "declared K-type {n} exceeds n_max = {n_max}"
        )));
    }
    let parts: Vec<(i32, Observable)> = ks
        .iter()
        .map(|n| Ok((*n, chi_project(*n, f, k_nodes)?)))
        .collect::<Result<_>>()?;
    let residual = reconstruction_residual(f, &parts, points);
    if !(residual <= RECONSTRUCTION_TOL) {
        return Err(Error::InvalidParameter(format!(
            "components of {} miss {residual:e} of f: undeclared K-types present",
            f.description
        )));
    }
    Ok(parts)
}

/// `max_x |f(x) - sum_n f_n(x)|` over `points`.
pub fn reconstruction_residual(
    f: &Observable,
    parts: &[(i32, Observable)],
    points: &SampleSet,
) -> f64 {
    points
        .points
        .par_iter()
        .map(|x| {
            let sum: Complex64 = parts.iter().map(|(_, p)| p.eval(x)).sum();
            (f.eval(x) - sum).norm()
        })
        .reduce(|| 0.0, f64::max)
}

/// Largest `|pi(chi_n) f|` at `points` over even `|n| <= n_max` outside the
/// declared support: zero up to quadrature error when the declaration is right.
pub fn undeclared_mass(
    f: &Observable,
    n_max: i32,
    k_nodes: usize,
    points: &SampleSet,
) -> Result<f64> {
    let declared = f.k_support.clone().unwrap_or_default();
    let mut worst: f64 = 0.0;
    for n in (-n_max..=n_max).filter(|n| n % 2 == 0 && !declared.contains(n)) {
        let p = chi_project(n, f, k_nodes)?;
        let m = points
            .points
            .par_iter()
            .map(|x| p.eval(x).norm())
            .reduce(|| 0.0, f64::max);
        worst = worst.max(m);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::domain_average;

    #[test]
    fn library_means_match_domain_quadrature() {
        let bump = height_bump(1.2, 4.0).unwrap();
        let psi = |y: f64| smooth_profile((y - 2.6) / 1.4);
        let q = domain_average(|_, y| psi(y), 1e-11);
        assert!((bump.exact_mean.unwrap().re - q).abs() < 1e-9);

        let c = Complex64::new(0.0, 1.42);
        let disk = disk_bump(c, 0.3).unwrap();
        let q = domain_average(
            |x, y| smooth_profile(hyperbolic_distance(Complex64::new(x, y), c) / 0.3),
            1e-11,
        );
        assert!((disk.exact_mean.unwrap().re - q).abs() < 1e-9);

        let p = power(0.5).unwrap();
        let q = domain_average(|_, y| y.sqrt(), 1e-11);
        assert!((p.exact_mean.unwrap().re - q).abs() < 1e-8);
        assert!(disk_bump(c, 0.4).is_err());
        assert!(power(1.0).is_err());
    }

    #[test]
    fn integrate_examples() {
        let s = sample(3, 20_000).unwrap();
        let r = integrate(&constant(1.0), &s).unwrap();
        assert_eq!((r.mean, r.std_err), (Complex64::new(1.0, 0.0), 0.0));
        let twist = k_twist(&constant(1.0), 2).unwrap();
        let r = integrate(&twist, &s).unwrap();
        assert!(r.mean.norm() < 4.0 * r.std_err);
        let p = power(0.5).unwrap();
        let r = integrate(&p, &s).unwrap();
        assert!(!r.clt_valid);
        assert!((r.mean - p.exact_mean.unwrap()).norm() < 3.0 * r.std_err);
    }

    #[test]
    fn non_finite_evaluations_are_counted() {
        let s = sample(1, 2000).unwrap();
        let bad = Observable::new(
            |x| Complex64::new(if x.theta() < 0.01 { f64::NAN } else { 1.0 }, 0.0),
            None,
            Integrability::Bounded,
            "nan near theta = 0",
        )
        .unwrap();
        assert!(matches!(
            integrate(&bad, &s),
            Err(Error::TooManyExcluded { .. })
        ));
        let rare = Observable::new(
            |x| Complex64::new(if x.theta() < 1e-5 { f64::NAN } else { 1.0 }, 0.0),
            None,
            Integrability::Bounded,
            "rare nan",
        )
        .unwrap();
        assert!(integrate(&rare, &s).is_ok());
    }

    #[test]
    fn projections_form_an_orthogonal_family() {
        let pts = check_points();
        let bump = height_bump(1.2, 4.0).unwrap();
        let f = bump.add(&k_twist(&bump, -4).unwrap());
        let p0 = chi_project(0, &f, 64).unwrap();
        let p00 = chi_project(0, &p0, 64).unwrap();
        let p4 = chi_project(-4, &p0, 64).unwrap();
        for x in &pts.points {
            assert!((p00.eval(x) - p0.eval(x)).norm() < 1e-7);
            assert!(p4.eval(x).norm() < 1e-7);
        }
        assert!(chi_project(1, &f, 64).is_err());
        assert!(chi_project(0, &f, 32).is_err());
        let one = chi_project(0, &constant(1.0), 64).unwrap();
        assert!((one.eval(&pts.points[0]) - 1.0).norm() < 1e-14);
    }

    #[test]
    fn decomposition_examples() {
        let bump = height_bump(1.2, 4.0).unwrap();
        let twisted = k_twist(&bump, 2).unwrap();
        let parts = kfinite_decompose(&twisted, 8).unwrap();
        assert_eq!(parts.iter().map(|p| p.0).collect::<Vec<_>>(), vec![2]);
        let f = bump.add(&k_twist(&bump, -4).unwrap());
        let parts = kfinite_decompose(&f, 8).unwrap();
        assert_eq!(parts.iter().map(|p| p.0).collect::<Vec<_>>(), vec![-4, 0]);
        let c = kfinite_decompose(&constant(2.0), 0).unwrap();
        assert_eq!(c.len(), 1);

        // a wrong declaration is caught
        let mut lying = f.clone();
        lying.k_support = Some(BTreeSet::from([0]));
        assert!(kfinite_decompose(&lying, 8).is_err());
        assert!(undeclared_mass(&lying, 8, 64, &check_points()).unwrap() > 1e-3);
        assert!(undeclared_mass(&f, 8, 64, &check_points()).unwrap() < 1e-12);
    }
}
