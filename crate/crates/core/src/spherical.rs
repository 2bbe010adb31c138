//! Character-spherical matrix coefficients `Phi_{m,n}(a_t)` of the principal
//! and complementary series, evaluated in the circle model.
//!
//! A representation with parameter `alpha` acts on functions on the unit
//! circle that extend homogeneously to `R^2 \ {0}`; along `A` the action is
//!
//! ```text
//! rho(a_t) h (theta) = w_t(theta)^((-1 + conj(alpha)) / 2) h(beta_t(theta))
//! w_t(theta)    = e^{-2t} cos^2 theta + e^{2t} sin^2 theta
//! beta_t(theta) = atan2(e^t sin theta, e^{-t} cos theta)
//! ```
//!
//! and the coefficient against `e^{i n theta}` is taken with the normalized
//! circle measure `d theta / 2 pi`. For the complementary series the
//! K-types `e^{i m theta}` are not orthonormal for the invariant inner
//! product; the row index is divided by the intertwining weight
//! `a_m / a_0` (see [`intertwining_weight`]) so that `Phi_{0,n}` is exactly the
//! circle integral and `Phi_{m,n}(a_t) = conj(Phi_{n,m}(a_{-t}))` holds.
//!
//! The integrand is peaked at `theta = 0` with width `e^{-2t}`. Integration
//! runs over `[0, pi/2]` (the full circle folds onto it by parity) on panels
//! graded geometrically towards the peak, refined adaptively with
//! Gauss-Kronrod 7/15. Negative `t` is mapped to positive `t` by
//! `theta -> pi/2 - theta`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gk;

/// Largest |t| accepted by the coefficient evaluators.
pub const T_MAX: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Irreducible unitary representation parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RepParam {
    /// `pi_lambda^+`, realized on homogeneity degree `-1 + i lambda`.
    PrincipalEven {
        lambda: f64,
    },
    /// `pi_lambda^-`, `lambda != 0`.
    PrincipalOdd {
        lambda: f64,
    },
    /// `pi_s`, `0 < s < 1`.
    Complementary {
        s: f64,
    },
    /// Discrete series (`k >= 2`) and limits of discrete series (`k = 1`).
    DiscreteOrLimit {
        k: u32,
        sign: Sign,
    },
    Trivial,
}

impl RepParam {
    pub fn principal_even(lambda: f64) -> Result<Self> {
        let r = RepParam::PrincipalEven { lambda };
        r.validate()?;
        Ok(r)
    }

    pub fn principal_odd(lambda: f64) -> Result<Self> {
        let r = RepParam::PrincipalOdd { lambda };
        r.validate()?;
        Ok(r)
    }

    pub fn complementary(s: f64) -> Result<Self> {
        let r = RepParam::Complementary { s };
        r.validate()?;
        Ok(r)
    }

    pub fn discrete(k: u32, sign: Sign) -> Result<Self> {
        let r = RepParam::DiscreteOrLimit { k, sign };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RepParam::PrincipalEven { lambda } if !lambda.is_finite() => Err(
                Error::InvalidParameter(format!("principal series lambda {lambda} not finite")),
            ),
            RepParam::PrincipalOdd { lambda } if !lambda.is_finite() || lambda == 0.0 => {
                Err(Error::InvalidParameter(format!(
                    "odd principal series needs finite nonzero lambda, got {lambda}"
                )))
            }
            RepParam::Complementary { s } if !(s > 0.0 && s < 1.0) => Err(Error::InvalidParameter(
                format!("complementary series needs 0 < s < 1, got {s}"),
            )),
            RepParam::DiscreteOrLimit { k: 0, .. } => Err(Error::InvalidParameter(
                "discrete series needs k >= 1".into(),
            )),
            _ => Ok(()),
        }
    }

    /// `alpha` with `z = -1 - conj(alpha)` the homogeneity degree.
    ///
    /// Discrete series carry no such parameter; they are given `alpha = 0`
    /// since every coefficient this crate evaluates for them vanishes.
    pub fn alpha(&self) -> Complex64 {
        match *self {
            RepParam::PrincipalEven { lambda } | RepParam::PrincipalOdd { lambda } => {
                Complex64::new(0.0, lambda)
            }
            RepParam::Complementary { s } => Complex64::new(s, 0.0),
            RepParam::DiscreteOrLimit { .. } => Complex64::new(0.0, 0.0),
            RepParam::Trivial => Complex64::new(1.0, 0.0),
        }
    }

    /// Decay exponent `eps_tau`.
    pub fn eps_tau(&self) -> f64 {
        match *self {
            RepParam::PrincipalEven { .. } | RepParam::PrincipalOdd { .. } => 1.0,
            RepParam::Complementary { s } => 1.0 - s,
            RepParam::DiscreteOrLimit { .. } => 1.0,
            RepParam::Trivial => 0.0,
        }
    }

    pub fn parity(&self) -> Parity {
        match *self {
            RepParam::PrincipalEven { .. } | RepParam::Complementary { .. } => Parity::Even,
            RepParam::PrincipalOdd { .. } => Parity::Odd,
            RepParam::DiscreteOrLimit { k, .. } => {
                if k % 2 == 0 {
                    Parity::Even
                } else {
                    Parity::Odd
                }
            }
            RepParam::Trivial => Parity::None,
        }
    }

    /// Whether the K-type `n` can occur in the circle model of this rep.
    pub fn admits(&self, n: i32) -> bool {
        match self.parity() {
            Parity::Even => n % 2 == 0,
            Parity::Odd => n % 2 != 0,
            Parity::None => n == 0,
        }
    }

    /// The same family with `alpha` replaced by `Re alpha` (used by the
    /// derivative bound).
    pub fn real_part(&self) -> RepParam {
        match *self {
            RepParam::PrincipalEven { .. } | RepParam::PrincipalOdd { .. } => {
                RepParam::PrincipalEven { lambda: 0.0 }
            }
            other => other,
        }
    }

    fn exponent(&self) -> Complex64 {
        // (-1 + conj(alpha)) / 2
        (self.alpha().conj() - 1.0) * 0.5
    }

    pub fn label(&self) -> String {
        match *self {
            RepParam::PrincipalEven { lambda } => format!("principal_even(lambda={lambda})"),
            RepParam::PrincipalOdd { lambda } => format!("principal_odd(lambda={lambda})"),
            RepParam::Complementary { s } => format!("complementary(s={s})"),
            RepParam::DiscreteOrLimit { k, sign } => format!(
                "discrete(k={k},{})",
                if sign == Sign::Plus { "+" } else { "-" }
            ),
            RepParam::Trivial => "trivial".into(),
        }
    }
}

/// Quadrature controls for coefficient evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub max_nodes: usize,
    /// Geometric ratio between consecutive panel widths near the peak.
    pub grading: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-8,
            max_nodes: 1 << 20,
            grading: 0.5,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(rel_tol: f64) -> Self {
        QuadratureSpec {
            rel_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.max_nodes < 64 {
            return Err(Error::InvalidParameter(format!(
                "max_nodes must be >= 64, got {}",
                self.max_nodes
            )));
        }
        if !(self.grading > 0.0 && self.grading < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "grading must lie in (0, 1), got {}",
                self.grading
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphericalValue {
    pub value: Complex64,
    pub err_estimate: f64,
    pub nodes_used: usize,
    /// Quadrature met `rel_tol` (always true for short-circuited zeros).
    pub converged: bool,
    /// Index parity incompatible with the representation; value is zero.
    pub parity_violation: bool,
}

impl SphericalValue {
    fn exact(value: Complex64) -> Self {
        SphericalValue {
            value,
            err_estimate: 0.0,
            nodes_used: 0,
            converged: true,
            parity_violation: false,
        }
    }
}

/// Ratio `a_m / a_0` of invariant norms of the K-types `e^{i m theta}`.
///
/// Invariance of the hermitian form under the infinitesimal action of `A`
/// forces `a_{k+2} / a_k = (k + 1 + s) / (k + 1 - s)` on the complementary
/// series; on the principal series all weights are 1.
pub fn intertwining_weight(rep: &RepParam, m: i32) -> f64 {
    match *rep {
        RepParam::Complementary { s } => {
            let mut w = 1.0;
            let mut k = 0;
            while k < m.abs() {
                let kf = k as f64;
                w *= (kf + 1.0 + s) / (kf + 1.0 - s);
                k += 2;
            }
            w
        }
        _ => 1.0,
    }
}

fn check_t(t: f64) -> Result<()> {
    if !t.is_finite() || t.abs() > T_MAX {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            range: "|t| <= 12",
        });
    }
    Ok(())
}

/// Breakpoints on `[0, pi/2]` graded towards 0 down to the peak width.
fn graded_breaks(t: f64, grading: f64) -> Vec<f64> {
    let floor = (-2.0 * t).exp() * 1e-3;
    let mut pts = vec![FRAC_PI_2, FRAC_PI_4];
    let mut h = FRAC_PI_4;
    while t > 0.0 && h > floor {
        h *= grading;
        pts.push(h);
    }
    pts.push(0.0);
    pts.reverse();
    pts
}

#[derive(Clone, Copy)]
enum Kind {
    Value,
    Derivative,
}

/// The circle integral `(1/2pi) int e^{-i n theta} w^c e^{i m beta} dtheta`
/// (or its t-derivative) for `t >= 0`, folded onto `[0, pi/2]`.
fn circle_integral(
    m: i32,
    n: i32,
    c: Complex64,
    t: f64,
    kind: Kind,
    q: &QuadratureSpec,
) -> crate::quadrature::QuadResult {
    debug_assert!(t >= 0.0);
    let ep = t.exp();
    let em = ep.recip();
    let e2p = ep * ep;
    let e2m = em * em;
    let (mf, nf) = (m as f64, n as f64);
    let two_c = c * 2.0;
    let f = move |th: f64| -> Complex64 {
        let (s, co) = th.sin_cos();
        let a = e2m * co * co;
        let b = e2p * s * s;
        let w = a + b;
        let beta = (ep * s).atan2(em * co);
        let phase = mf * beta - nf * th;
        let wc = (c * w.ln()).exp();
        let v = match kind {
            Kind::Value => wc * phase.cos(),
            Kind::Derivative => {
                // d/dt w^c = w^c * 2c (b - a) / w ; d/dt beta = sin(2 theta) / w
                let dlog = two_c * ((b - a) / w);
                let dbeta = 2.0 * s * co / w;
                wc * (dlog * phase.cos() - mf * dbeta * phase.sin())
            }
        };
        v * (2.0 / PI)
    };
    let breaks = graded_breaks(t, q.grading);
    adaptive_gk(f, &breaks, q.rel_tol, 0.0, q.max_nodes)
}

enum Shortcut {
    Zero { parity_violation: bool },
    Compute,
}

fn classify(m: i32, n: i32, rep: &RepParam) -> Result<Shortcut> {
    rep.validate()?;
    match *rep {
        RepParam::Trivial => Err(Error::InvalidParameter(
            "matrix coefficients of the trivial representation are not evaluated".into(),
        )),
        RepParam::DiscreteOrLimit { .. } => Ok(Shortcut::Zero {
            parity_violation: false,
        }),
        _ if !rep.admits(m) || !rep.admits(n) => Ok(Shortcut::Zero {
            parity_violation: true,
        }),
        RepParam::PrincipalOdd { .. } if m == 0 || n == 0 => Ok(Shortcut::Zero {
            parity_violation: false,
        }),
        _ => Ok(Shortcut::Compute),
    }
}

fn evaluate(
    m: i32,
    n: i32,
    rep: &RepParam,
    t: f64,
    q: &QuadratureSpec,
    kind: Kind,
) -> Result<SphericalValue> {
    check_t(t)?;
    q.validate()?;
    match classify(m, n, rep)? {
        Shortcut::Zero { parity_violation } => Ok(SphericalValue {
            parity_violation,
            ..SphericalValue::exact(Complex64::new(0.0, 0.0))
        }),
        Shortcut::Compute => {
            let r = circle_integral(m, n, rep.exponent(), t.abs(), kind, q);
            // theta -> pi/2 - theta maps t to -t up to (-1)^{(m-n)/2}
            let mut sign = if ((m - n) / 2) % 2 == 0 { 1.0 } else { -1.0 };
            if t < 0.0 && matches!(kind, Kind::Derivative) {
                sign = -sign;
            }
            let sign = if t < 0.0 { sign } else { 1.0 };
            let w = intertwining_weight(rep, m);
            Ok(SphericalValue {
                value: r.value * (sign / w),
                err_estimate: r.error / w,
                nodes_used: r.evaluations,
                converged: r.converged,
                parity_violation: false,
            })
        }
    }
}

/// `Phi_{m,n}(a_t)` for `|t| <= 12`.
pub fn phi(m: i32, n: i32, rep: &RepParam, t: f64, q: &QuadratureSpec) -> Result<SphericalValue> {
    evaluate(m, n, rep, t, q, Kind::Value)
}

/// `d/dt Phi_{m,n}(a_t)`, by differentiating under the integral sign.
pub fn phi_derivative(
    m: i32,
    n: i32,
    rep: &RepParam,
    t: f64,
    q: &QuadratureSpec,
) -> Result<SphericalValue> {
    evaluate(m, n, rep, t, q, Kind::Derivative)
}

/// Harish-Chandra's `Xi(t) = Phi_{0,0}(a_t)` for `pi_0^+`.
pub fn xi(t: f64, q: &QuadratureSpec) -> Result<f64> {
    Ok(phi(0, 0, &RepParam::PrincipalEven { lambda: 0.0 }, t, q)?
        .value
        .re)
}

/// `B (1 + |t|) exp(-eps_tau |t|)`.
pub fn decay_bound(rep: &RepParam, t: f64, b: f64) -> f64 {
    b * (1.0 + t.abs()) * (-rep.eps_tau() * t.abs()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryResidual {
    pub residual: f64,
    /// Combined quadrature error estimates plus 1e-9.
    pub allowed: f64,
}

/// `|Phi_{m,n}(a_t) - conj(Phi_{n,m}(a_{-t}))|`.
pub fn symmetry_check(
    m: i32,
    n: i32,
    rep: &RepParam,
    t: f64,
    q: &QuadratureSpec,
) -> Result<SymmetryResidual> {
    let a = phi(m, n, rep, t, q)?;
    let b = phi(n, m, rep, -t, q)?;
    Ok(SymmetryResidual {
        residual: (a.value - b.value.conj()).norm(),
        allowed: a.err_estimate + b.err_estimate + 1e-9,
    })
}

/// `(1/2pi) int (e^{-2t} cos^2 + e^{2t} sin^2)^{(-1 + Re alpha)/2} dtheta`,
/// which dominates `|Phi_{m,n}(a_t)|`.
pub fn zonal_bound(rep: &RepParam, t: f64, q: &QuadratureSpec) -> Result<f64> {
    check_t(t)?;
    q.validate()?;
    rep.validate()?;
    match rep {
        RepParam::PrincipalEven { .. }
        | RepParam::PrincipalOdd { .. }
        | RepParam::Complementary { .. } => {}
        _ => {
            return Err(Error::InvalidParameter(format!(
                "zonal bound needs a principal or complementary series, got {}",
                rep.label()
            )))
        }
    }
    let c = Complex64::new((rep.alpha().re - 1.0) * 0.5, 0.0);
    Ok(circle_integral(0, 0, c, t.abs(), Kind::Value, q).value.re)
}

/// One row of a decay certification sweep.
#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub rep: RepParam,
    pub n: i32,
    pub t: f64,
    pub phi: Complex64,
    pub phi_err: f64,
    pub dphi: Complex64,
    pub dphi_err: f64,
    /// `(1 + |t|) exp(-eps_tau |t|)`
    pub envelope: f64,
    /// `|Phi| / envelope`
    pub ratio: f64,
    /// `|Phi'| / ((1 + |alpha|) envelope)`
    pub derivative_ratio: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecaySweep {
    pub rows: Vec<DecayRow>,
    /// Grid supremum of `ratio`.
    pub empirical_b: f64,
    /// Grid supremum of `derivative_ratio`.
    pub empirical_b_derivative: f64,
    /// Parameter combinations skipped for parity reasons.
    pub skipped: Vec<(RepParam, i32)>,
}

/// Evaluates `Phi_{0,n}` and its derivative over `reps x ns x ts` and
/// reports the empirical constant `B` of the decay envelope.
pub fn decay_sweep(
    reps: &[RepParam],
    ns: &[i32],
    ts: &[f64],
    q: &QuadratureSpec,
) -> Result<DecaySweep> {
    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    for rep in reps {
        for &n in ns {
            if !rep.admits(n) {
                skipped.push((*rep, n));
                continue;
            }
            for &t in ts {
                jobs.push((*rep, n, t));
            }
        }
    }
    let rows: Result<Vec<DecayRow>> = jobs
        .par_iter()
        .map(|&(rep, n, t)| {
            let v = phi(0, n, &rep, t, q)?;
            let d = phi_derivative(0, n, &rep, t, q)?;
            let envelope = decay_bound(&rep, t, 1.0);
            Ok(DecayRow {
                rep,
                n,
                t,
                phi: v.value,
                phi_err: v.err_estimate,
                dphi: d.value,
                dphi_err: d.err_estimate,
                envelope,
                ratio: v.value.norm() / envelope,
                derivative_ratio: d.value.norm() / ((1.0 + rep.alpha().norm()) * envelope),
                converged: v.converged && d.converged,
            })
        })
        .collect();
    let rows = rows?;
    let empirical_b = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let empirical_b_derivative = rows.iter().map(|r| r.derivative_ratio).fold(0.0, f64::max);
    Ok(DecaySweep {
        rows,
        empirical_b,
        empirical_b_derivative,
        skipped,
    })
}
