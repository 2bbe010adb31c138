//! Points of the modular surface `SL2(Z)\SL2(R)` and the right-translation
//! action on them.
//!
//! A point is the coset `Gamma g`. Its canonical representative is
//! `n_x a_t k_theta` with `z = x + i e^{2t}` in the closed fundamental domain
//! `|x| <= 1/2, |z| >= 1` and `theta` in `[0, pi)` (the element `-I` of
//! `Gamma` shifts `theta` by `pi`).
//!
//! The left action of `G` on `X` is `g . (Gamma h) = Gamma h g^{-1}`. With
//! this convention `f(a_s k x)` is `f(act(a_s k, x))`, and rotating by
//! `k_phi^{-1}` moves the fiber angle forward by `phi`.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{compose, iwasawa, nak, GroupElement};

/// Step guard for [`reduce`].
pub const MAX_REDUCTION_STEPS: usize = 10_000;
/// Slack used to resolve points on the boundary of the fundamental domain.
const BOUNDARY_TOL: f64 = 1e-13;

/// An integer matrix of determinant one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Unimodular {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Unimodular {
    pub const IDENTITY: Unimodular = Unimodular {
        a: 1,
        b: 0,
        c: 0,
        d: 1,
    };
    /// `z -> -1/z`
    pub const S: Unimodular = Unimodular {
        a: 0,
        b: -1,
        c: 1,
        d: 0,
    };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let g = Unimodular { a, b, c, d };
        if g.det() != 1 {
            return Err(Error::InvalidParameter(format!(
                "integer matrix {g} has determinant {}",
                g.det()
            )));
        }
        Ok(g)
    }

    /// `z -> z + k`
    pub fn translation(k: i64) -> Self {
        Unimodular {
            a: 1,
            b: k,
            c: 0,
            d: 1,
        }
    }

    pub fn det(&self) -> i128 {
        self.a as i128 * self.d as i128 - self.b as i128 * self.c as i128
    }

    pub fn neg(&self) -> Self {
        Unimodular {
            a: -self.a,
            b: -self.b,
            c: -self.c,
            d: -self.d,
        }
    }

    pub fn checked_mul(&self, o: &Unimodular) -> Result<Unimodular> {
        let e = |x: i64, y: i64, u: i64, v: i64| {
            x.checked_mul(y)
                .and_then(|p| u.checked_mul(v).and_then(|q| p.checked_add(q)))
                .ok_or(Error::Overflow {
                    limit: i64::MAX as f64,
                })
        };
        Ok(Unimodular {
            a: e(self.a, o.a, self.b, o.c)?,
            b: e(self.a, o.b, self.b, o.d)?,
            c: e(self.c, o.a, self.d, o.c)?,
            d: e(self.c, o.b, self.d, o.d)?,
        })
    }

    pub fn to_group(&self) -> GroupElement {
        GroupElement {
            a: self.a as f64,
            b: self.b as f64,
            c: self.c as f64,
            d: self.d as f64,
        }
    }
}

impl fmt::Display for Unimodular {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// A point of `X = SL2(Z)\SL2(R)` in canonical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ActionPoint {
    rep: GroupElement,
    z: Complex64,
    theta: f64,
}

impl ActionPoint {
    /// Builds the point with coordinates `(z, theta)`. `z` must lie in the
    /// closed fundamental domain (up to `1e-9`); `theta` is taken mod `pi`.
    pub fn from_coords(z: Complex64, theta: f64) -> Result<Self> {
        if !z.re.is_finite() || !z.im.is_finite() || !theta.is_finite() {
            return Err(Error::NonFinite);
        }
        if !in_domain(z, 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "{z} is not in the fundamental domain"
            )));
        }
        Ok(Self::canonical(z.re, z.im, theta))
    }

    fn canonical(x: f64, y: f64, theta: f64) -> Self {
        let theta = theta.rem_euclid(std::f64::consts::PI);
        let theta = if theta >= std::f64::consts::PI {
            0.0
        } else {
            theta
        };
        ActionPoint {
            rep: nak(x, 0.5 * y.ln(), theta),
            z: Complex64::new(x, y),
            theta,
        }
    }

    pub fn rep(&self) -> &GroupElement {
        &self.rep
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `k_phi^{-1} . x`: the same `z` with fiber angle `theta + phi`.
    pub fn rotate_fiber(&self, phi: f64) -> Self {
        Self::canonical(self.z.re, self.z.im, self.theta + phi)
    }

    /// Distance in `(z, theta)` with `theta` compared mod `pi`.
    pub fn coord_distance(&self, other: &ActionPoint) -> f64 {
        let pi = std::f64::consts::PI;
        let dt = (self.theta - other.theta).rem_euclid(pi);
        let dt = dt.min(pi - dt);
        (self.z - other.z).norm().max(dt)
    }
}

/// Whether `z` lies in `{|Re z| <= 1/2, |z| >= 1}` up to `tol`.
pub fn in_domain(z: Complex64, tol: f64) -> bool {
    z.im > 0.0 && z.re.abs() <= 0.5 + tol && z.norm_sqr() >= 1.0 - tol
}

/// Gauss reduction: finds an integer `gamma` with `gamma g . i` in the
/// fundamental domain and returns it with the canonical point of `Gamma g`.
///
/// Boundary ties: `Re z = 1/2` is sent to `-1/2`, and points on `|z| = 1`
/// with `Re z > 0` are inverted.
pub fn reduce(g: &GroupElement) -> Result<(Unimodular, ActionPoint)> {
    let mut h = *g;
    let mut gamma = Unimodular::IDENTITY;
    for _ in 0..MAX_REDUCTION_STEPS {
        let (x, y) = h.mobius(0.0, 1.0);
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite);
        }
        if y <= 0.0 {
            return Err(Error::ReductionDiverged { steps: 0 });
        }
        let k = (x + 0.5).floor();
        if k != 0.0 {
            if k.abs() > 1e15 {
                return Err(Error::Overflow { limit: 1e15 });
            }
            let k = k as i64;
            gamma = Unimodular::translation(-k).checked_mul(&gamma)?;
            h = GroupElement {
                a: h.a - k as f64 * h.c,
                b: h.b - k as f64 * h.d,
                c: h.c,
                d: h.d,
            };
            continue;
        }
        let r2 = x * x + y * y;
        if r2 < 1.0 - BOUNDARY_TOL || ((r2 - 1.0).abs() <= BOUNDARY_TOL && x > BOUNDARY_TOL) {
            gamma = Unimodular::S.checked_mul(&gamma)?;
            h = GroupElement {
                a: -h.c,
                b: -h.d,
                c: h.a,
                d: h.b,
            };
            continue;
        }
        let nak = iwasawa(&h);
        let mut theta = nak.theta;
        if theta >= std::f64::consts::PI {
            theta -= std::f64::consts::PI;
            gamma = gamma.neg();
        }
        let (x, y) = nak.z();
        return Ok((gamma, ActionPoint::canonical(x, y, theta)));
    }
    Err(Error::ReductionDiverged {
        steps: MAX_REDUCTION_STEPS,
    })
}

/// `g . x`, the coset of `rep(x) g^{-1}`.
pub fn act(g: &GroupElement, x: &ActionPoint) -> Result<ActionPoint> {
    let h = compose(&x.rep, &g.inverse())?;
    Ok(reduce(&h)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{geodesic, rotation, unipotent};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_element(rng: &mut ChaCha8Rng) -> GroupElement {
        let x = rng.gen_range(-2.0..2.0);
        let t = rng.gen_range(-1.5..1.5);
        let th = rng.gen_range(0.0..2.0 * PI);
        nak(x, t, th)
    }

    fn random_point(rng: &mut ChaCha8Rng) -> ActionPoint {
        reduce(&random_element(rng)).unwrap().1
    }

    #[test]
    fn reduce_examples() {
        let p = ActionPoint::from_coords(Complex64::new(0.2, 1.3), 0.4).unwrap();
        let (gamma, q) = reduce(p.rep()).unwrap();
        assert_eq!(gamma, Unimodular::IDENTITY);
        assert!(q.coord_distance(&p) < 1e-14);

        let g = nak(5.0, 0.0, 0.0);
        let (gamma, q) = reduce(&g).unwrap();
        assert_eq!(gamma, Unimodular::translation(-5));
        assert!((q.z() - Complex64::new(0.0, 1.0)).norm() < 1e-14);

        let g = nak(0.3, 0.5 * 0.1f64.ln(), 0.0);
        let (gamma, q) = reduce(&g).unwrap();
        assert!(in_domain(q.z(), 1e-12));
        assert_eq!(gamma.det(), 1);
        let (x, y) = gamma.to_group().mobius(0.3, 0.1);
        assert!((Complex64::new(x, y) - q.z()).norm() < 1e-12);
    }

    #[test]
    fn boundary_ties() {
        let g = nak(0.5, 0.5 * 2f64.ln(), 0.0);
        assert!((reduce(&g).unwrap().1.z().re + 0.5).abs() < 1e-14);
        let z = Complex64::from_polar(1.0, 1.2);
        let g = nak(z.re, 0.5 * z.im.ln(), 0.0);
        let q = reduce(&g).unwrap().1;
        assert!((q.z().re + z.re).abs() < 1e-12 && (q.z().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduction_is_a_coset_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let g = random_element(&mut rng);
            let (a, b) = (rng.gen_range(-6i64..6), rng.gen_range(-6i64..6));
            // [[1, a], [0, 1]] [[1, 0], [b, 1]]
            let g0 = Unimodular::new(1 + a * b, a, b, 1).unwrap();
            let moved = compose(&g0.to_group(), &g).unwrap();
            let p = reduce(&g).unwrap().1;
            let q = reduce(&moved).unwrap().1;
            assert!(p.coord_distance(&q) < 1e-9, "{p:?} {q:?}");
            assert!((p.rep().det() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn action_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = random_point(&mut rng);
            let g = random_element(&mut rng);
            let h = random_element(&mut rng);
            assert!(act(&GroupElement::IDENTITY, &x).unwrap().coord_distance(&x) < 1e-12);
            let lhs = act(&g, &act(&h, &x).unwrap()).unwrap();
            let rhs = act(&compose(&g, &h).unwrap(), &x).unwrap();
            assert!(lhs.coord_distance(&rhs) < 1e-8);
        }
    }

    #[test]
    fn fiber_rotation_matches_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = random_point(&mut rng);
            let phi = rng.gen_range(-4.0..4.0);
            let a = act(&rotation(-phi), &x).unwrap();
            assert!(a.coord_distance(&x.rotate_fiber(phi)) < 1e-12);
        }
    }

    #[test]
    fn deep_points_reduce() {
        let x = ActionPoint::from_coords(Complex64::new(0.1, 1.1), 0.3).unwrap();
        let g = compose(&geodesic(9.0).unwrap(), &unipotent(0.37)).unwrap();
        let p = act(&g, &x).unwrap();
        assert!(in_domain(p.z(), 1e-12));
        assert!((p.rep().det() - 1.0).abs() < 1e-12);
    }
}
