//! Floating-point arithmetic on SL2(R).
//!
//! Elements are stored as plain 2x2 matrices. Every product is renormalized
//! by `1/sqrt(det)` whenever the determinant has drifted beyond the rounding
//! level of `ad - bc`, so long chains of compositions (orbit computations on
//! the modular surface) stay on the group.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::Mul;

use crate::error::{Error, Result};

/// Entries beyond this magnitude are treated as overflow.
pub const ENTRY_LIMIT: f64 = 1e150;
/// Largest |t| accepted by [`geodesic`].
pub const GEODESIC_T_MAX: f64 = 350.0;
/// Determinant tolerance for validated constructors.
pub const DET_TOL: f64 = 1e-10;

/// A real unimodular 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GroupElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub const MINUS_IDENTITY: GroupElement = GroupElement {
        a: -1.0,
        b: 0.0,
        c: 0.0,
        d: -1.0,
    };

    /// Validated constructor: entries must be finite and `|det - 1| <= 1e-10`.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let g = GroupElement { a, b, c, d };
        g.check_entries()?;
        let det = g.det();
        if (det - 1.0).abs() > DET_TOL {
            return Err(Error::Determinant { det, tol: DET_TOL });
        }
        Ok(g)
    }

    /// Builds an element from any matrix with positive determinant by
    /// scaling with `1/sqrt(det)`.
    pub fn normalized(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let g = GroupElement { a, b, c, d };
        g.check_entries()?;
        let det = g.det();
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::Determinant { det, tol: DET_TOL });
        }
        let s = det.sqrt().recip();
        Ok(GroupElement {
            a: a * s,
            b: b * s,
            c: c * s,
            d: d * s,
        })
    }

    /// Unchecked constructor for closed-form matrices known to be unimodular.
    pub(crate) const fn raw(a: f64, b: f64, c: f64, d: f64) -> Self {
        GroupElement { a, b, c, d }
    }

    fn check_entries(&self) -> Result<()> {
        let e = [self.a, self.b, self.c, self.d];
        if e.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if e.iter().any(|x| x.abs() > ENTRY_LIMIT) {
            return Err(Error::Overflow { limit: ENTRY_LIMIT });
        }
        Ok(())
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn inverse(&self) -> Self {
        GroupElement::raw(self.d, -self.b, -self.c, self.a)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &GroupElement) -> f64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs())
    }

    /// Möbius action on the upper half plane, returned as `(re, im)`.
    pub fn mobius(&self, x: f64, y: f64) -> (f64, f64) {
        // (a z + b) / (c z + d)
        let nr = self.a * x + self.b;
        let ni = self.a * y;
        let dr = self.c * x + self.d;
        let di = self.c * y;
        let den = dr * dr + di * di;
        ((nr * dr + ni * di) / den, (ni * dr - nr * di) / den)
    }

    /// Product without the overflow check, renormalized.
    pub(crate) fn mul_unchecked(&self, h: &GroupElement) -> GroupElement {
        let a = self.a * h.a + self.b * h.c;
        let b = self.a * h.b + self.b * h.d;
        let c = self.c * h.a + self.d * h.c;
        let d = self.c * h.b + self.d * h.d;
        let det = a * d - b * c;
        // only drift beyond the rounding level of ad - bc is corrected
        let noise = 8.0 * f64::EPSILON * ((a * d).abs() + (b * c).abs());
        if det > 0.0 && (det - 1.0).abs() > noise {
            let s = det.sqrt().recip();
            GroupElement::raw(a * s, b * s, c * s, d * s)
        } else {
            GroupElement::raw(a, b, c, d)
        }
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;

    fn mul(self, rhs: GroupElement) -> GroupElement {
        self.mul_unchecked(&rhs)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Matrix product `g h`, renormalized to determinant one.
pub fn compose(g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    let p = g.mul_unchecked(h);
    p.check_entries()?;
    Ok(p)
}

/// `a_t = diag(e^t, e^-t)`.
pub fn geodesic(t: f64) -> Result<GroupElement> {
    if !t.is_finite() || t.abs() > GEODESIC_T_MAX {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            range: "|t| <= 350",
        });
    }
    Ok(geodesic_unchecked(t))
}

pub(crate) fn geodesic_unchecked(t: f64) -> GroupElement {
    let e = t.exp();
    GroupElement::raw(e, 0.0, 0.0, e.recip())
}

/// `k_theta = [[cos, -sin], [sin, cos]]`.
pub fn rotation(theta: f64) -> GroupElement {
    let (s, c) = theta.sin_cos();
    GroupElement::raw(c, -s, s, c)
}

/// `n_x = [[1, x], [0, 1]]`.
pub fn unipotent(x: f64) -> GroupElement {
    GroupElement::raw(1.0, x, 0.0, 1.0)
}

/// `g = k_{theta1} a_t k_{theta2}` with `t >= 0` and `theta1` in `[0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartanKAK {
    pub theta1: f64,
    pub t: f64,
    pub theta2: f64,
}

impl CartanKAK {
    pub fn reconstruct(&self) -> GroupElement {
        rotation(self.theta1) * geodesic_unchecked(self.t) * rotation(self.theta2)
    }
}

/// `g = n_x a_t k_theta` with `theta` in `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IwasawaNAK {
    pub x: f64,
    pub t: f64,
    pub theta: f64,
}

impl IwasawaNAK {
    pub fn reconstruct(&self) -> GroupElement {
        nak(self.x, self.t, self.theta)
    }

    /// Upper half plane coordinate `g . i = x + i e^{2t}`.
    pub fn z(&self) -> (f64, f64) {
        (self.x, (2.0 * self.t).exp())
    }
}

/// Closed form of `n_x a_t k_theta`.
pub(crate) fn nak(x: f64, t: f64, theta: f64) -> GroupElement {
    let (s, c) = theta.sin_cos();
    let e = t.exp();
    let ei = e.recip();
    // a_t k_theta = [[e c, -e s], [s/e, c/e]]
    let (a, b, cc, d) = (e * c, -e * s, ei * s, ei * c);
    GroupElement::raw(a + x * cc, b + x * d, cc, d)
}

pub(crate) fn wrap_angle(theta: f64, period: f64) -> f64 {
    let r = theta.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Cartan decomposition. The `(theta1, theta2) -> (theta1 + pi, theta2 + pi)`
/// ambiguity is resolved by `theta1` in `[0, pi)`; for `t = 0` we put
/// `theta1 = 0`.
pub fn cartan(g: &GroupElement) -> CartanKAK {
    let e = 0.5 * (g.a + g.d);
    let f = 0.5 * (g.a - g.d);
    let gg = 0.5 * (g.c + g.b);
    let h = 0.5 * (g.c - g.b);
    // e = cosh t cos(th1 + th2), h = cosh t sin(th1 + th2)
    // f = sinh t cos(th1 - th2), gg = sinh t sin(th1 - th2)
    let r = f.hypot(gg);
    let t = r.asinh();
    let sum = h.atan2(e);
    if r <= 1e-300 || t == 0.0 {
        return CartanKAK {
            theta1: 0.0,
            t: 0.0,
            theta2: wrap_angle(sum, TAU),
        };
    }
    let diff = gg.atan2(f);
    let mut theta1 = 0.5 * (sum + diff);
    let mut theta2 = 0.5 * (sum - diff);
    theta1 = theta1.rem_euclid(TAU);
    if theta1 >= PI {
        theta1 -= PI;
        theta2 += PI;
    }
    CartanKAK {
        theta1: wrap_angle(theta1, PI),
        t,
        theta2: wrap_angle(theta2, TAU),
    }
}

/// Iwasawa decomposition `g = n_x a_t k_theta`.
pub fn iwasawa(g: &GroupElement) -> IwasawaNAK {
    // bottom row of g is e^{-t} (sin theta, cos theta)
    let r2 = g.c * g.c + g.d * g.d;
    let t = -0.5 * r2.ln();
    let theta = wrap_angle(g.c.atan2(g.d), TAU);
    let x = (g.a * g.c + g.b * g.d) / r2;
    IwasawaNAK { x, t, theta }
}
