//! Reference values computed by routes independent of the production code
//! paths: closed forms and nested deterministic quadrature.

use crate::quadrature::adaptive_gk_real;

/// Arithmetic-geometric mean.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a.abs() {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind, modulus `k`.
pub fn elliptic_k(k: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 / agm(1.0, (1.0 - k * k).sqrt())
}

/// `Xi(t) = (2/pi) e^{-|t|} K(sqrt(1 - e^{-4|t|}))`.
///
/// The complementary modulus is `e^{-2|t|}`, so this is evaluated as
/// `e^{-|t|} / agm(1, e^{-2|t|})` to avoid cancellation in `1 - k^2`.
pub fn xi_agm(t: f64) -> f64 {
    let t = t.abs();
    (-t).exp() / agm(1.0, (-2.0 * t).exp())
}

/// `(3/pi) int int_F g(x, y) dx dy / y^2` over the fundamental domain
/// `|x| <= 1/2, x^2 + y^2 >= 1`, by nested adaptive quadrature.
///
/// The inner integral uses `y = sqrt(1 - x^2) / v^2`, which maps the cusp to
/// `v -> 0` and turns `dy / y^2` into `2 v dv / sqrt(1 - x^2)`.
pub fn domain_average<G: Fn(f64, f64) -> f64>(g: G, rel_tol: f64) -> f64 {
    let inner = |x: f64| {
        let r = (1.0 - x * x).sqrt();
        let h = |v: f64| {
            if v <= 0.0 {
                return 0.0;
            }
            g(x, r / (v * v)) * 2.0 * v / r
        };
        let breaks = [0.0, 1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0];
        adaptive_gk_real(h, &breaks, rel_tol, 0.0, 1 << 18).0
    };
    let (v, _) = adaptive_gk_real(inner, &[-0.5, 0.0, 0.5], rel_tol, 0.0, 1 << 14);
    3.0 / std::f64::consts::PI * v
}
