//! The operators `tau(sigma_t(n, m))` on truncated circle models, the
//! derivative multiplier, spectral-set membership and the tail estimate.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spherical::{
    intertwining_weight, phi, phi_derivative, Parity, QuadratureSpec, RepParam,
};

/// Largest supported truncation `max |k|`.
pub const MAX_TRUNCATION: u32 = 512;
pub const DEFAULT_TRUNCATION: u32 = 128;
/// Fraction of the image energy beyond the truncation above which
/// [`apply_at_direct`] flags leakage.
pub const LEAKAGE_TOL: f64 = 1e-6;

/// A vector of the circle model given by its K-type amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircleModelVector {
    coeffs: BTreeMap<i32, Complex64>,
    parity: Parity,
    truncation: u32,
}

impl CircleModelVector {
    pub fn zero(parity: Parity, truncation: u32) -> Result<Self> {
        if parity == Parity::None {
            return Err(Error::InvalidParameter(
                "circle model vectors are even or odd".into(),
            ));
        }
        if truncation > MAX_TRUNCATION {
            return Err(Error::InvalidParameter(format!(
                "truncation {truncation} exceeds {MAX_TRUNCATION}"
            )));
        }
        Ok(CircleModelVector {
            coeffs: BTreeMap::new(),
            parity,
            truncation,
        })
    }

    /// The unit vector `e^{i k theta}`.
    pub fn basis(k: i32, parity: Parity, truncation: u32) -> Result<Self> {
        let mut v = Self::zero(parity, truncation)?;
        v.set(k, Complex64::new(1.0, 0.0))?;
        Ok(v)
    }

    pub fn from_coeffs(
        parity: Parity,
        truncation: u32,
        coeffs: impl IntoIterator<Item = (i32, Complex64)>,
    ) -> Result<Self> {
        let mut v = Self::zero(parity, truncation)?;
        for (k, c) in coeffs {
            v.set(k, c)?;
        }
        Ok(v)
    }

    pub fn set(&mut self, k: i32, c: Complex64) -> Result<()> {
        if k.unsigned_abs() > self.truncation {
            return Err(Error::InvalidParameter(format!(
                "K-type {k} beyond truncation {}",
                self.truncation
            )));
        }
        if !parity_admits(self.parity, k) {
            return Err(Error::InvalidParameter(format!(
                "K-type {k} has the wrong parity for a {:?} vector",
                self.parity
            )));
        }
        if c == Complex64::new(0.0, 0.0) {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, c);
        }
        Ok(())
    }

    /// `<v, v_k>`.
    pub fn coeff(&self, k: i32) -> Complex64 {
        self.coeffs.get(&k).copied().unwrap_or_default()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn support(&self) -> impl Iterator<Item = (&i32, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `<self, other>`, linear in the first slot.
    pub fn inner(&self, other: &CircleModelVector) -> Complex64 {
        self.coeffs
            .iter()
            .map(|(k, c)| c * other.coeff(*k).conj())
            .sum()
    }

    pub fn sub(&self, other: &CircleModelVector) -> Result<CircleModelVector> {
        let mut out = self.clone();
        out.truncation = self.truncation.max(other.truncation);
        for (k, c) in other.coeffs.iter() {
            let v = out.coeff(*k) - c;
            out.set(*k, v)?;
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> CircleModelVector {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c *= s;
        }
        out
    }
}

fn parity_admits(p: Parity, k: i32) -> bool {
    match p {
        Parity::Even => k % 2 == 0,
        Parity::Odd => k % 2 != 0,
        Parity::None => false,
    }
}

fn check_compatible(rep: &RepParam, v: &CircleModelVector) -> Result<()> {
    if rep.parity() != v.parity() {
        return Err(Error::InvalidParameter(format!(
            "{:?} vector is not in the model of {}",
            v.parity(),
            rep.label()
        )));
    }
    Ok(())
}

/// `tau(sigma_t(n, m)) v = <v, v_m> Phi_{m,n}(a_t) v_n`.
pub fn apply_sigma_model(
    rep: &RepParam,
    t: f64,
    n: i32,
    m: i32,
    v: &CircleModelVector,
    q: &QuadratureSpec,
) -> Result<CircleModelVector> {
    check_compatible(rep, v)?;
    let mut out = CircleModelVector::zero(v.parity(), v.truncation().max(n.unsigned_abs()))?;
    let vm = v.coeff(m);
    if vm == Complex64::new(0.0, 0.0) || !rep.admits(n) || !rep.admits(m) {
        return Ok(out);
    }
    let p = phi(m, n, rep, t, q)?;
    out.set(n, vm * p.value)?;
    Ok(out)
}

/// Result of applying `rho(a_t)` on a circle grid.
#[derive(Debug, Clone, Serialize)]
pub struct DirectImage {
    pub vector: CircleModelVector,
    /// `||tail beyond truncation||^2 / ||image||^2`.
    pub leakage: f64,
    pub leakage_flagged: bool,
}

/// Applies `rho(a_t)` by sampling the model function on `nodes` equally
/// spaced angles, multiplying by the homogeneity weight, and re-projecting
/// onto Fourier modes up to the truncation. Coefficients are plain Fourier
/// coefficients of the circle restriction; for the complementary series they
/// relate to [`crate::spherical::phi`] through
/// [`crate::spherical::intertwining_weight`].
pub fn apply_at_direct(
    rep: &RepParam,
    t: f64,
    v: &CircleModelVector,
    nodes: usize,
) -> Result<DirectImage> {
    check_compatible(rep, v)?;
    let trunc = v.truncation() as usize;
    if nodes < 8 * trunc.max(1) {
        return Err(Error::InvalidParameter(format!(
            "need at least {} nodes for truncation {trunc}, got {nodes}",
            8 * trunc.max(1)
        )));
    }
    match rep {
        RepParam::PrincipalEven { .. }
        | RepParam::PrincipalOdd { .. }
        | RepParam::Complementary { .. } => {}
        _ => {
            return Err(Error::InvalidParameter(format!(
                "no circle model for {}",
                rep.label()
            )))
        }
    }
    let c = (rep.alpha().conj() - 1.0) * 0.5;
    let ep = t.exp();
    let em = ep.recip();
    let support: Vec<(i32, Complex64)> = v.support().map(|(k, c)| (*k, *c)).collect();
    let mut buf: Vec<Complex64> = (0..nodes)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
            let (s, co) = th.sin_cos();
            let w = em * em * co * co + ep * ep * s * s;
            let beta = (ep * s).atan2(em * co);
            let f: Complex64 = support
                .iter()
                .map(|(k, a)| a * Complex64::from_polar(1.0, *k as f64 * beta))
                .sum();
            (c * w.ln()).exp() * f
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(nodes).process(&mut buf);
    let scale = 1.0 / nodes as f64;
    let mut out = CircleModelVector::zero(v.parity(), v.truncation())?;
    let mut total = 0.0;
    let mut kept = 0.0;
    for (j, b) in buf.iter().enumerate() {
        let k = if j <= nodes / 2 {
            j as i64
        } else {
            j as i64 - nodes as i64
        };
        let coef = b * scale;
        let e = coef.norm_sqr();
        total += e;
        if k.unsigned_abs() as usize <= trunc && parity_admits(v.parity(), k as i32) {
            kept += e;
            if coef.norm() > 0.0 {
                out.set(k as i32, coef)?;
            }
        }
    }
    let leakage = if total > 0.0 {
        (total - kept).max(0.0) / total
    } else {
        0.0
    };
    Ok(DirectImage {
        vector: out,
        leakage,
        leakage_flagged: leakage > LEAKAGE_TOL,
    })
}

/// Residuals of the Bessel identity
/// `||tau(sigma_t(n,m)) v||^2 = |<v, v_m>|^2 |Phi_{m,n}(a_t)|^2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BesselCheck {
    /// `|<v, v_m>|^2 |Phi_{m,n}(a_t)|^2`
    pub predicted: f64,
    /// `||apply_sigma_model(v)||^2`
    pub model: f64,
    /// `||chi_n rho(a_t) chi_m v||^2` from the sampled action, rescaled by the
    /// intertwining weight of `m`.
    pub direct: f64,
    pub residual: f64,
    pub leakage: f64,
}

/// Nodes needed for the sampled action to resolve the peak of width `e^{-2|t|}`.
pub fn direct_nodes(t: f64, truncation: u32) -> usize {
    let need = (64.0 * (2.0 * t.abs()).exp()).ceil() as usize;
    need.max(8 * truncation.max(1) as usize).next_power_of_two()
}

pub fn bessel_check(
    rep: &RepParam,
    t: f64,
    n: i32,
    m: i32,
    v: &CircleModelVector,
    q: &QuadratureSpec,
) -> Result<BesselCheck> {
    let image = apply_sigma_model(rep, t, n, m, v, q)?;
    let model = image.norm_sq();
    let p = if rep.admits(m) && rep.admits(n) {
        phi(m, n, rep, t, q)?.value
    } else {
        Complex64::new(0.0, 0.0)
    };
    let predicted = v.coeff(m).norm_sqr() * p.norm_sqr();
    // chi_m v, then rho(a_t), then chi_n
    let trunc = v.truncation().max(n.unsigned_abs()).max(m.unsigned_abs());
    let mut projected = CircleModelVector::zero(v.parity(), trunc)?;
    if rep.admits(m) {
        projected.set(m, v.coeff(m))?;
    }
    let d = apply_at_direct(rep, t, &projected, direct_nodes(t, trunc))?;
    let w = intertwining_weight(rep, m);
    let direct = d.vector.coeff(n).norm_sqr() / (w * w);
    let residual = (model - predicted).abs().max((direct - predicted).abs());
    Ok(BesselCheck {
        predicted,
        model,
        direct,
        residual,
        leakage: d.leakage,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MultiplierCheck {
    /// `||d/dt tau(sigma_t(n,m)) v||^2` by Richardson-extrapolated centered
    /// differences.
    pub finite_difference: f64,
    /// `|<v, v_m> d/dt Phi_{m,n}(a_t)|^2`
    pub multiplier: f64,
    /// `|finite_difference - multiplier| / max(multiplier, 1)`.
    pub residual: f64,
}

/// Step used by [`derivative_multiplier_check`].
pub const FD_STEP: f64 = 1e-3;

/// Compares the derivative multiplier with centered differences of
/// [`apply_sigma_model`]. Use a tight `rel_tol` (1e-12) since quadrature error
/// is divided by the step.
pub fn derivative_multiplier_check(
    rep: &RepParam,
    t: f64,
    n: i32,
    m: i32,
    v: &CircleModelVector,
    q: &QuadratureSpec,
) -> Result<MultiplierCheck> {
    let h = FD_STEP;
    let centered = |h: f64| -> Result<CircleModelVector> {
        let plus = apply_sigma_model(rep, t + h, n, m, v, q)?;
        let minus = apply_sigma_model(rep, t - h, n, m, v, q)?;
        Ok(plus.sub(&minus)?.scale(0.5 / h))
    };
    let coarse = centered(h)?;
    let fine = centered(0.5 * h)?;
    // (4 D(h/2) - D(h)) / 3 cancels the h^2 term
    let finite_difference = fine
        .scale(4.0 / 3.0)
        .sub(&coarse.scale(1.0 / 3.0))?
        .norm_sq();
    let multiplier = if rep.admits(m) && rep.admits(n) {
        (v.coeff(m) * phi_derivative(m, n, rep, t, q)?.value).norm_sqr()
    } else {
        0.0
    };
    Ok(MultiplierCheck {
        finite_difference,
        multiplier,
        residual: (finite_difference - multiplier).abs() / multiplier.max(1.0),
    })
}

/// Parameters of the spectral set `Sigma_eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralSetParams {
    pub eps: f64,
    pub b: f64,
}

impl SpectralSetParams {
    pub fn new(eps: f64, b: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0,1), got {eps}"
            )));
        }
        if !(b > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "B must be positive, got {b}"
            )));
        }
        Ok(SpectralSetParams { eps, b })
    }
}

/// `C(tau) = B (1 + |alpha|)`.
pub fn c_tau(rep: &RepParam, b: f64) -> f64 {
    b * (1.0 + rep.alpha().norm())
}

/// `eps_tau > eps` and `C(tau) < 1/eps`.
pub fn in_sigma_eps(rep: &RepParam, p: &SpectralSetParams) -> bool {
    if matches!(rep, RepParam::Trivial) {
        return false;
    }
    rep.eps_tau() > p.eps && c_tau(rep, p.b) < 1.0 / p.eps
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    /// `(1/delta) int_N^inf (1/eps)(1+u) e^{-eps u} du ||f||`
    pub exact: f64,
    /// `(1/delta)(1/eps^3)(1+N) e^{-eps N} ||f||`
    pub coarse_bound: f64,
}

impl TailBound {
    /// The coarse form dominates exactly when `eps (1 + N) <= N`.
    pub fn exact_within_coarse(&self) -> bool {
        self.exact <= self.coarse_bound
    }
}

/// Measure estimate for the set where `sigma_t(0,n) f` oscillates by at least
/// `delta` beyond time `N`.
pub fn tail_bound(n_time: f64, eps: f64, delta: f64, f_norm: f64) -> Result<TailBound> {
    if !(n_time >= 0.0) || !(eps > 0.0 && eps < 1.0) || !(delta > 0.0) || !(f_norm >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tail bound needs N >= 0, 0 < eps < 1, delta > 0, |f| >= 0; got N={n_time}, eps={eps}, delta={delta}, f_norm={f_norm}"
        )));
    }
    let decay = (-eps * n_time).exp();
    let exact = f_norm / delta / eps * decay * ((1.0 + n_time) / eps + 1.0 / (eps * eps));
    let coarse_bound = f_norm / delta / eps.powi(3) * (1.0 + n_time) * decay;
    Ok(TailBound {
        exact,
        coarse_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_gk_real;
    use proptest::prelude::*;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn sigma_model_examples() {
        let rep = RepParam::PrincipalEven { lambda: 1.0 };
        let v = CircleModelVector::basis(0, Parity::Even, 16).unwrap();
        let out = apply_sigma_model(&rep, 0.0, 0, 0, &v, &q()).unwrap();
        assert!((out.coeff(0) - 1.0).norm() < 1e-14);
        let v2 = CircleModelVector::basis(2, Parity::Even, 16).unwrap();
        assert!(apply_sigma_model(&rep, 1.0, 0, 0, &v2, &q())
            .unwrap()
            .is_zero());
        let odd = CircleModelVector::basis(1, Parity::Odd, 16).unwrap();
        assert!(apply_sigma_model(&rep, 1.0, 0, 1, &odd, &q()).is_err());
    }

    #[test]
    fn vector_invariants() {
        let mut v = CircleModelVector::zero(Parity::Even, 8).unwrap();
        assert!(v.set(3, Complex64::new(1.0, 0.0)).is_err());
        assert!(v.set(10, Complex64::new(1.0, 0.0)).is_err());
        assert!(CircleModelVector::zero(Parity::Even, 513).is_err());
        v.set(-2, Complex64::new(3.0, 4.0)).unwrap();
        assert_eq!(v.norm(), 5.0);
    }

    #[test]
    fn direct_action_identity_and_coefficient() {
        let rep = RepParam::PrincipalEven { lambda: 1.0 };
        let v = CircleModelVector::from_coeffs(
            Parity::Even,
            16,
            [
                (0, Complex64::new(0.3, 0.1)),
                (-4, Complex64::new(0.0, 2.0)),
            ],
        )
        .unwrap();
        let d = apply_at_direct(&rep, 0.0, &v, 128).unwrap();
        assert!(d.vector.sub(&v).unwrap().norm() < 1e-12);
        let e0 = CircleModelVector::basis(0, Parity::Even, 128).unwrap();
        let d = apply_at_direct(&rep, 1.0, &e0, 1024).unwrap();
        let p = phi(0, 2, &rep, 1.0, &q()).unwrap().value;
        assert!((d.vector.coeff(2) - p).norm() < 1e-6);
        assert!(apply_at_direct(&rep, 1.0, &e0, 512).is_err());
    }

    #[test]
    fn direct_action_preserves_principal_norm() {
        let rep = RepParam::PrincipalEven { lambda: 2.0 };
        let v = CircleModelVector::from_coeffs(
            Parity::Even,
            512,
            [
                (0, Complex64::new(1.0, 0.0)),
                (2, Complex64::new(0.0, -0.5)),
                (-2, Complex64::new(0.25, 0.25)),
            ],
        )
        .unwrap();
        for t in [0.5, 1.0, 2.0] {
            let d = apply_at_direct(&rep, t, &v, 8192).unwrap();
            assert!((d.vector.norm() - v.norm()).abs() < 1e-6, "t={t}");
            assert!(!d.leakage_flagged);
        }
        // higher K-types spread further: e_6 at t = 2 overflows 512 modes
        let e6 = CircleModelVector::basis(6, Parity::Even, 512).unwrap();
        let d = apply_at_direct(&rep, 1.5, &e6, 8192).unwrap();
        assert!((d.vector.norm() - 1.0).abs() < 1e-6);
        assert!(
            apply_at_direct(&rep, 2.0, &e6, 8192)
                .unwrap()
                .leakage_flagged
        );
        // truncation at 16 cannot hold the image: leakage is reported
        let small = CircleModelVector::basis(0, Parity::Even, 16).unwrap();
        assert!(
            apply_at_direct(&rep, 2.0, &small, 1024)
                .unwrap()
                .leakage_flagged
        );
    }

    #[test]
    fn multiplier_examples() {
        let tight = QuadratureSpec::with_tol(1e-12);
        let v = CircleModelVector::basis(2, Parity::Even, 16).unwrap();
        let rep = RepParam::PrincipalEven { lambda: 0.0 };
        let r = derivative_multiplier_check(&rep, 1.0, 0, 0, &v, &tight).unwrap();
        assert_eq!((r.finite_difference, r.multiplier), (0.0, 0.0));
        let e0 = CircleModelVector::basis(0, Parity::Even, 16).unwrap();
        let r = derivative_multiplier_check(&rep, 1.0, 0, 0, &e0, &tight).unwrap();
        assert!(r.residual <= 1e-5);
        let c = RepParam::Complementary { s: 0.5 };
        let r = derivative_multiplier_check(&c, 2.0, 2, 0, &e0, &tight).unwrap();
        assert!(r.residual <= 1e-5);
        assert!(r.multiplier > 1e-4);
    }

    #[test]
    fn sigma_eps_examples() {
        let p = SpectralSetParams::new(0.5, 1.0).unwrap();
        assert!(in_sigma_eps(&RepParam::PrincipalEven { lambda: 0.0 }, &p));
        assert!(!in_sigma_eps(&RepParam::Complementary { s: 0.9 }, &p));
        assert!(!in_sigma_eps(&RepParam::PrincipalEven { lambda: 10.0 }, &p));
        assert!(!in_sigma_eps(&RepParam::Trivial, &p));
        assert!(SpectralSetParams::new(1.0, 1.0).is_err());
    }

    #[test]
    fn tail_bound_matches_numeric_integral() {
        let z = tail_bound(3.0, 0.5, 1.0, 0.0).unwrap();
        assert_eq!((z.exact, z.coarse_bound), (0.0, 0.0));
        let (n, eps, delta) = (2.0, 0.5, 0.1);
        let tb = tail_bound(n, eps, delta, 1.0).unwrap();
        // int_N^inf via u = N + x / (1 - x) on [0, 1)
        let g = |x: f64| {
            if x >= 1.0 {
                return 0.0;
            }
            let u = n + x / (1.0 - x);
            (1.0 / eps) * (1.0 + u) * (-eps * u).exp() / ((1.0 - x) * (1.0 - x))
        };
        let (v, _) = adaptive_gk_real(g, &[0.0, 0.5, 0.9, 1.0], 1e-14, 0.0, 1 << 20);
        assert!((tb.exact - v / delta).abs() < 1e-10 * tb.exact);
    }

    fn rep_strategy() -> impl Strategy<Value = RepParam> {
        prop_oneof![
            (0.0..20.0f64).prop_map(|lambda| RepParam::PrincipalEven { lambda }),
            (0.0..20.0f64).prop_map(|lambda| RepParam::PrincipalOdd { lambda }),
            (0.05..0.95f64).prop_map(|s| RepParam::Complementary { s }),
        ]
    }

    fn random_vector(parity: Parity, amps: &[(f64, f64)]) -> CircleModelVector {
        let first = if parity == Parity::Even { -8 } else { -7 };
        let coeffs = amps
            .iter()
            .enumerate()
            .map(|(i, (re, im))| (first + 2 * i as i32, Complex64::new(*re, *im)));
        CircleModelVector::from_coeffs(parity, DEFAULT_TRUNCATION, coeffs).unwrap()
    }

    fn k_type(parity: Parity, i: i32) -> i32 {
        if parity == Parity::Even {
            2 * i
        } else {
            2 * i + 1
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn bessel_identity_holds(
            rep in rep_strategy(),
            t in 0.0..3.0f64,
            ni in -4..4i32,
            mi in -4..4i32,
            amps in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 9),
        ) {
            let v = random_vector(rep.parity(), &amps);
            let (n, m) = (k_type(rep.parity(), ni), k_type(rep.parity(), mi));
            let r = bessel_check(&rep, t, n, m, &v, &q()).unwrap();
            prop_assert!(r.residual <= 1e-6, "{:?}", r);
            prop_assert!(r.model <= v.norm_sq() * (1.0 + 1e-9));
        }

        #[test]
        fn composition_law(
            rep in rep_strategy(),
            t in 0.0..4.0f64,
            s in 0.0..4.0f64,
            idx in proptest::collection::vec(-4..4i32, 4),
            amps in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 9),
        ) {
            let p = rep.parity();
            let v = random_vector(p, &amps);
            let (n, m) = (k_type(p, idx[0]), k_type(p, idx[1]));
            let (n2, m2) = (k_type(p, idx[2]), k_type(p, idx[3]));
            let first = apply_sigma_model(&rep, t, n, m, &v, &q()).unwrap();
            let second = apply_sigma_model(&rep, s, n2, m2, &first, &q()).unwrap();
            if m2 != n {
                prop_assert!(second.is_zero());
            }
            prop_assert!(first.norm() <= v.norm() * (1.0 + 1e-9));
        }

        #[test]
        fn sigma_eps_monotone(
            rep in rep_strategy(),
            e1 in 0.01..0.99f64,
            e2 in 0.01..0.99f64,
            b in 0.1..3.0f64,
        ) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let small = SpectralSetParams::new(lo, b).unwrap();
            let large = SpectralSetParams::new(hi, b).unwrap();
            prop_assert!(!in_sigma_eps(&rep, &large) || in_sigma_eps(&rep, &small));
        }

        #[test]
        fn tail_bound_decreases_in_n(n in 0.0..50.0f64, dn in 0.01..10.0f64, eps in 0.01..0.99f64) {
            let a = tail_bound(n, eps, 1.0, 1.0).unwrap();
            let b = tail_bound(n + dn, eps, 1.0, 1.0).unwrap();
            prop_assert!(b.exact < a.exact);
            let margin = eps * (1.0 + n) - n;
            if margin.abs() > 1e-9 {
                prop_assert_eq!(a.exact_within_coarse(), margin < 0.0);
            }
        }
    }
}
