//! Averaging operators on the modular surface: `sigma_t(n, m)`,
//! `gamma^eta_t(n, m)`, the semi-radial averages `M^eta_t`, the maximal
//! function on a time grid, and the pointwise convergence study.
//!
//! With `pi_X(g) f(x) = f(g^{-1} x)`,
//!
//! ```text
//! pi(sigma_t(n, m)) f(x) = int_K int_K conj(psi_n(k1)) conj(psi_m(k2))
//!                            f(k2^{-1} a_{-t} k1^{-1} x) dk1 dk2
//! M^eta_t f(x)           = int eta(t - s) int_K f(a_s k x) dk ds
//! ```
//!
//! K-integrals use the periodic trapezoid rule on the half circle (every
//! function on `X` is `pi`-periodic along the fiber). With an even node count
//! the node set is invariant under a quarter turn, which makes
//! `sigma_t = sigma_{-t}` hold exactly at the discrete level.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::actions::modular::{reduce, ActionPoint};
use crate::actions::observable::{integrate_values, Observable, MIN_K_NODES};
use crate::actions::sampling::SampleSet;
use crate::error::{Error, Result};
use crate::group::geodesic;
use crate::quadrature::gauss_legendre_on;

/// Largest `|t|` for orbit evaluation.
pub const T_CAP: f64 = 12.0;
pub const DEFAULT_K_NODES: usize = 256;
pub const DEFAULT_S_NODES: usize = 64;
/// Deviations at or below this are treated as exact convergence.
pub const CONVERGED_FLOOR: f64 = 1e-12;
pub const MIN_S_NODES: usize = 32;
const MAX_SUPPORT: f64 = 10.0;

/// A nonnegative piecewise-polynomial profile of unit integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpFunction {
    /// `(lo, hi, c)` with value `sum_k c[k] (u - lo)^k` on `[lo, hi)`.
    pieces: Vec<(f64, f64, Vec<f64>)>,
}

impl BumpFunction {
    /// Normalizes the given pieces to unit integral after checking that they
    /// are ordered, non-overlapping, nonnegative and supported on an interval
    /// of length at most 10.
    pub fn from_pieces(pieces: Vec<(f64, f64, Vec<f64>)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidParameter(
                "bump needs at least one piece".into(),
            ));
        }
        for (i, (lo, hi, c)) in pieces.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) || c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("bad bump piece {i}")));
            }
            if i > 0 && *lo < pieces[i - 1].1 {
                return Err(Error::InvalidParameter("bump pieces overlap".into()));
            }
        }
        let support = pieces.last().map(|p| p.1).unwrap_or(0.0) - pieces[0].0;
        if support > MAX_SUPPORT {
            return Err(Error::InvalidParameter(format!(
                "bump support length {support} exceeds {MAX_SUPPORT}"
            )));
        }
        let mut bump = BumpFunction { pieces };
        for (lo, hi, _) in &bump.pieces {
            for j in 0..=64 {
                let u = lo + (hi - lo) * j as f64 / 64.0;
                if bump.piece_value(u).is_some_and(|v| v < -1e-14) {
                    return Err(Error::InvalidParameter(format!("bump is negative at {u}")));
                }
            }
        }
        let total: f64 = bump
            .pieces
            .iter()
            .map(|(lo, hi, c)| {
                let h = hi - lo;
                c.iter()
                    .enumerate()
                    .map(|(k, ck)| ck * h.powi(k as i32 + 1) / (k as f64 + 1.0))
                    .sum::<f64>()
            })
            .sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("bump has zero integral".into()));
        }
        for (_, _, c) in bump.pieces.iter_mut() {
            for v in c.iter_mut() {
                *v /= total;
            }
        }
        Ok(bump)
    }

    /// The C^2 cubic B-spline centred at `center`, supported on
    /// `[center - half_width, center + half_width]`.
    pub fn cubic_bspline(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !center.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cubic bump needs half_width > 0, got {half_width}"
            )));
        }
        let h = half_width / 2.0;
        let lo = center - half_width;
        // uniform B-spline segments in the local variable w in [0, 1]
        let segments: [[f64; 4]; 4] = [
            [0.0, 0.0, 0.0, 1.0],
            [1.0, 3.0, 3.0, -3.0],
            [4.0, 0.0, -6.0, 3.0],
            [1.0, -3.0, 3.0, -1.0],
        ];
        let pieces = segments
            .iter()
            .enumerate()
            .map(|(i, seg)| {
                let a = lo + i as f64 * h;
                let c = (0..4).map(|k| seg[k] / 6.0 / h.powi(k as i32)).collect();
                (a, a + h, c)
            })
            .collect();
        Self::from_pieces(pieces)
    }

    fn piece_value(&self, u: f64) -> Option<f64> {
        let last = self.pieces.len() - 1;
        self.pieces
            .iter()
            .enumerate()
            .find(|(i, (lo, hi, _))| u >= *lo && (u < *hi || (*i == last && u <= *hi)))
            .map(|(_, (lo, _, c))| c.iter().rev().fold(0.0, |acc, ck| acc * (u - lo) + ck))
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.piece_value(u).unwrap_or(0.0)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.pieces[0].0, self.pieces[self.pieces.len() - 1].1)
    }

    /// `u -> eta(-u)`.
    pub fn reflected(&self) -> BumpFunction {
        let pieces = self
            .pieces
            .iter()
            .rev()
            .map(|(lo, hi, c)| {
                // p(u) = sum c_k (u - lo)^k; q(v) = p(-v) expanded at v = -hi
                let h = hi - lo;
                let n = c.len();
                let mut q = vec![0.0; n];
                // p(-v) with -v - lo = h - (v + hi)
                for (k, ck) in c.iter().enumerate() {
                    let mut binom = 1.0;
                    for (j, qj) in q.iter_mut().enumerate().take(k + 1) {
                        // (h - w)^k = sum_j C(k, j) h^{k-j} (-w)^j
                        *qj += ck
                            * binom
                            * h.powi((k - j) as i32)
                            * if j % 2 == 0 { 1.0 } else { -1.0 };
                        binom = binom * (k - j) as f64 / (j + 1) as f64;
                    }
                }
                (-hi, -lo, q)
            })
            .collect();
        BumpFunction { pieces }
    }

    /// Composite Gauss-Legendre rule `(u, w eta(u))` with about `nodes` nodes.
    pub fn quadrature(&self, nodes: usize) -> Vec<(f64, f64)> {
        let per = nodes.div_ceil(self.pieces.len()).max(2);
        self.pieces
            .iter()
            .flat_map(|(lo, hi, _)| gauss_legendre_on(per, *lo, *hi))
            .map(|(u, w)| (u, w * self.eval(u)))
            .collect()
    }
}

impl Default for BumpFunction {
    fn default() -> Self {
        Self::cubic_bspline(0.0, 0.5).expect("valid default bump")
    }
}

/// A strictly increasing finite set of times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    values: Vec<f64>,
    pub description: String,
}

impl TimeGrid {
    pub fn new(values: Vec<f64>, description: impl Into<String>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "time grid must be finite and nonempty".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "time grid must be strictly increasing".into(),
            ));
        }
        Ok(TimeGrid {
            values,
            description: description.into(),
        })
    }

    /// `lo, lo + step, ...` up to `hi` (inclusive within rounding).
    pub fn uniform(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(hi >= lo) {
            return Err(Error::InvalidParameter(format!(
                "uniform grid needs step > 0 and hi >= lo, got [{lo}, {hi}] step {step}"
            )));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        Self::new(
            (0..=n).map(|i| lo + i as f64 * step).collect(),
            format!("uniform [{lo}, {hi}] step {step}"),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// An average together with the difference between the full trapezoid rule
/// and its half-density subrule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AverageValue {
    pub value: Complex64,
    pub err_estimate: f64,
}

fn check_t(t: f64) -> Result<()> {
    if !t.is_finite() || t.abs() > T_CAP + 1.0 {
        return Err(Error::OutOfRange {
            name: "t",
            value: t,
            range: "|t| <= 12 (plus the bump support)",
        });
    }
    Ok(())
}

fn check_even(n: i32, name: &str) -> Result<()> {
    if n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "{name} = {n}: odd K-characters vanish on the modular surface"
        )));
    }
    Ok(())
}

fn check_k_nodes(k_nodes: usize) -> Result<()> {
    if k_nodes < MIN_K_NODES || !k_nodes.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "need an even number of at least {MIN_K_NODES} K-nodes, got {k_nodes}"
        )));
    }
    Ok(())
}

/// `a_s k_phi^{-1} x`, i.e. the coset of `rep(x) k_phi a_{-s}`.
pub fn translate(x: &ActionPoint, phi: f64, s: f64) -> Result<ActionPoint> {
    let y = x.rotate_fiber(phi);
    let h = *y.rep() * geodesic(-s)?;
    Ok(reduce(&h)?.1)
}

fn half_circle(k_nodes: usize) -> impl Iterator<Item = f64> {
    (0..k_nodes).map(move |j| PI * j as f64 / k_nodes as f64)
}

/// `(pi(chi_m) f)(y)`, collapsed when the declared K-support decides it.
fn projected(f: &Observable, m: i32, y: &ActionPoint, k_nodes: usize) -> Complex64 {
    match &f.k_support {
        Some(ks) if !ks.contains(&m) => Complex64::new(0.0, 0.0),
        Some(ks) if ks.len() == 1 => f.eval(y),
        _ => {
            let w = 1.0 / k_nodes as f64;
            half_circle(k_nodes)
                .map(|phi| {
                    Complex64::from_polar(w, -(m as f64) * phi) * f.eval(&y.rotate_fiber(phi))
                })
                .sum()
        }
    }
}

/// Sum over the half circle with the weights `conj(psi_n)`, plus the
/// half-density estimate.
fn circle_sum<F>(n: i32, k_nodes: usize, mut term: F) -> Result<AverageValue>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let mut full = Complex64::new(0.0, 0.0);
    let mut half = Complex64::new(0.0, 0.0);
    for (j, phi) in half_circle(k_nodes).enumerate() {
        let v = Complex64::from_polar(1.0, -(n as f64) * phi) * term(phi)?;
        full += v;
        if j % 2 == 0 {
            half += v;
        }
    }
    let full = full / k_nodes as f64;
    let half = half / (k_nodes / 2) as f64;
    Ok(AverageValue {
        value: full,
        err_estimate: (full - half).norm(),
    })
}

/// `pi(sigma_t(n, m)) f(x)` by double trapezoid quadrature on K. The inner
/// projection is skipped when the declared K-support of `f` decides it.
pub fn sigma_nm_estimate(
    t: f64,
    n: i32,
    m: i32,
    f: &Observable,
    x: &ActionPoint,
    k_nodes: usize,
) -> Result<AverageValue> {
    check_t(t)?;
    check_even(n, "n")?;
    check_even(m, "m")?;
    check_k_nodes(k_nodes)?;
    if matches!(&f.k_support, Some(ks) if !ks.contains(&m)) {
        return Ok(AverageValue {
            value: Complex64::new(0.0, 0.0),
            err_estimate: 0.0,
        });
    }
    // k1^{-1} x, then a_{-t}, then pi(chi_m)
    circle_sum(n, k_nodes, |phi| {
        let y = translate(x, phi, -t)?;
        Ok(projected(f, m, &y, k_nodes))
    })
}

pub fn sigma_nm_apply(
    t: f64,
    n: i32,
    m: i32,
    f: &Observable,
    x: &ActionPoint,
    k_nodes: usize,
) -> Result<Complex64> {
    Ok(sigma_nm_estimate(t, n, m, f, x, k_nodes)?.value)
}

/// `pi(sigma_t) f(x)`, the bi-K-invariant average.
pub fn sigma_apply(t: f64, f: &Observable, x: &ActionPoint, k_nodes: usize) -> Result<Complex64> {
    sigma_nm_apply(t, 0, 0, f, x, k_nodes)
}

/// Quadrature settings for the `s`-integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Nodes {
    pub k_nodes: usize,
    pub s_nodes: usize,
}

impl Default for Nodes {
    fn default() -> Self {
        Nodes {
            k_nodes: DEFAULT_K_NODES,
            s_nodes: DEFAULT_S_NODES,
        }
    }
}

impl Nodes {
    fn validate(&self) -> Result<()> {
        check_k_nodes(self.k_nodes)?;
        if self.s_nodes < MIN_S_NODES {
            return Err(Error::InvalidParameter(format!(
                "need at least {MIN_S_NODES} s-nodes, got {}",
                self.s_nodes
            )));
        }
        Ok(())
    }
}

/// `pi(gamma^eta_t(n, m)) f(x) = int eta(t - s) pi(sigma_s(n, m)) f(x) ds`.
/// The error estimate is the eta-weighted sum of the K-stage estimates.
pub fn gamma_eta_estimate(
    t: f64,
    n: i32,
    m: i32,
    f: &Observable,
    x: &ActionPoint,
    eta: &BumpFunction,
    nodes: Nodes,
) -> Result<AverageValue> {
    nodes.validate()?;
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for (u, w) in eta.quadrature(nodes.s_nodes) {
        if w == 0.0 {
            continue;
        }
        let s = sigma_nm_estimate(t - u, n, m, f, x, nodes.k_nodes)?;
        value += w * s.value;
        err += w * s.err_estimate;
    }
    Ok(AverageValue {
        value,
        err_estimate: err,
    })
}

pub fn gamma_eta_apply(
    t: f64,
    n: i32,
    m: i32,
    f: &Observable,
    x: &ActionPoint,
    eta: &BumpFunction,
    nodes: Nodes,
) -> Result<Complex64> {
    Ok(gamma_eta_estimate(t, n, m, f, x, eta, nodes)?.value)
}

/// `M^eta_t f(x) = int eta(t - s) int_K f(a_s k x) dk ds`.
pub fn semi_radial_estimate(
    t: f64,
    f: &Observable,
    x: &ActionPoint,
    eta: &BumpFunction,
    nodes: Nodes,
) -> Result<AverageValue> {
    nodes.validate()?;
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for (u, w) in eta.quadrature(nodes.s_nodes) {
        if w == 0.0 {
            continue;
        }
        let s = t - u;
        check_t(s)?;
        let c = circle_sum(0, nodes.k_nodes, |phi| Ok(f.eval(&translate(x, phi, s)?)))?;
        value += w * c.value;
        err += w * c.err_estimate;
    }
    Ok(AverageValue {
        value,
        err_estimate: err,
    })
}

pub fn semi_radial_apply(
    t: f64,
    f: &Observable,
    x: &ActionPoint,
    eta: &BumpFunction,
    nodes: Nodes,
) -> Result<Complex64> {
    Ok(semi_radial_estimate(t, f, x, eta, nodes)?.value)
}

/// `sum_{n in F_f} pi(gamma^{eta reflected}_{-t}(0, n)) f(x)`, the K-type
/// expansion of `M^eta_t f(x)`.
pub fn semi_radial_by_k_types(
    t: f64,
    f: &Observable,
    x: &ActionPoint,
    eta: &BumpFunction,
    nodes: Nodes,
) -> Result<Complex64> {
    let ks = f.k_support.as_ref().ok_or_else(|| {
        Error::InvalidParameter(format!("{} has no declared K-support", f.description))
    })?;
    let reflected = eta.reflected();
    ks.iter()
        .map(|n| gamma_eta_apply(-t, 0, *n, f, x, &reflected, nodes))
        .sum()
}

/// `max_{t in grid} |pi(gamma^eta_t(n, m)) f(x)|`, evaluated directly.
#[allow(clippy::too_many_arguments)]
pub fn maximal_function(
    f: &Observable,
    x: &ActionPoint,
    grid: &TimeGrid,
    n: i32,
    m: i32,
    eta: &BumpFunction,
    nodes: Nodes,
) -> Result<f64> {
    let mut best: f64 = 0.0;
    for t in grid.values() {
        best = best.max(gamma_eta_apply(*t, n, m, f, x, eta, nodes)?.norm());
    }
    Ok(best)
}

/// `sigma_s(n, m) f(x)` tabulated on a uniform `s`-lattice, from which
/// `gamma^eta_t` is recovered for any `t` by the trapezoid rule. Each orbit
/// node moves at unit speed in `s`, so the table is smooth on the scale of
/// the observable.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaLattice {
    pub start: f64,
    pub step: f64,
    pub values: Vec<Complex64>,
}

impl SigmaLattice {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        f: &Observable,
        x: &ActionPoint,
        n: i32,
        m: i32,
        range: (f64, f64),
        step: f64,
        k_nodes: usize,
    ) -> Result<Self> {
        if !(step > 0.0) || !(range.1 > range.0) {
            return Err(Error::InvalidParameter(
                "lattice needs step > 0 and a nonempty range".into(),
            ));
        }
        let count = ((range.1 - range.0) / step).ceil() as usize + 1;
        let values = (0..count)
            .map(|j| sigma_nm_apply(range.0 + j as f64 * step, n, m, f, x, k_nodes))
            .collect::<Result<Vec<_>>>()?;
        Ok(SigmaLattice {
            start: range.0,
            step,
            values,
        })
    }

    /// `sum_j step eta(t - s_j) sigma_{s_j}`.
    pub fn gamma(&self, t: f64, eta: &BumpFunction) -> Result<Complex64> {
        let (lo, hi) = eta.support();
        let (a, b) = (t - hi, t - lo);
        let end = self.start + (self.values.len() - 1) as f64 * self.step;
        if a < self.start - 1e-12 || b > end + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "t = {t} needs the lattice to cover [{a}, {b}]"
            )));
        }
        let j0 = ((a - self.start) / self.step).floor().max(0.0) as usize;
        let j1 = (((b - self.start) / self.step).ceil() as usize).min(self.values.len() - 1);
        Ok((j0..=j1)
            .map(|j| {
                let s = self.start + j as f64 * self.step;
                self.values[j] * (self.step * eta.eval(t - s))
            })
            .sum())
    }
}

/// The lattice needed to evaluate `gamma^eta_t` for every `t` in `grid`.
pub fn lattice_range(grid: &TimeGrid, eta: &BumpFunction) -> (f64, f64) {
    let (lo, hi) = eta.support();
    let v = grid.values();
    (v[0] - hi, v[v.len() - 1] - lo)
}

/// `max_{t in grid} |gamma^eta_t f(x)|` through a [`SigmaLattice`].
#[allow(clippy::too_many_arguments)]
pub fn maximal_function_lattice(
    f: &Observable,
    x: &ActionPoint,
    grid: &TimeGrid,
    n: i32,
    m: i32,
    eta: &BumpFunction,
    step: f64,
    k_nodes: usize,
) -> Result<f64> {
    let lattice = SigmaLattice::build(f, x, n, m, lattice_range(grid, eta), step, k_nodes)?;
    let mut best: f64 = 0.0;
    for t in grid.values() {
        best = best.max(lattice.gamma(*t, eta)?.norm());
    }
    Ok(best)
}

/// Empirical `||sup_t |gamma^eta_t f| ||_2 / ||f||_2`.
#[derive(Debug, Clone, Serialize)]
pub struct MaximalRatio {
    pub description: String,
    pub points: usize,
    pub grid_points: usize,
    pub lattice_step: f64,
    pub k_nodes: usize,
    pub sup_l2: f64,
    pub f_l2: f64,
    pub ratio: f64,
}

pub fn maximal_ratio(
    f: &Observable,
    s: &SampleSet,
    grid: &TimeGrid,
    eta: &BumpFunction,
    step: f64,
    k_nodes: usize,
) -> Result<MaximalRatio> {
    let sups = s
        .points
        .par_iter()
        .map(|x| maximal_function_lattice(f, x, grid, 0, 0, eta, step, k_nodes))
        .collect::<Result<Vec<f64>>>()?;
    let n = sups.len() as f64;
    let sup_l2 = (sups.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let f_sq: Vec<f64> = s.points.par_iter().map(|x| f.eval(x).norm_sqr()).collect();
    let f_l2 = (f_sq.iter().sum::<f64>() / n).sqrt();
    if !(f_l2 > 0.0) {
        return Err(Error::InvalidParameter(
            "observable vanishes on the sample".into(),
        ));
    }
    Ok(MaximalRatio {
        description: f.description.clone(),
        points: s.points.len(),
        grid_points: grid.values().len(),
        lattice_step: step,
        k_nodes,
        sup_l2,
        f_l2,
        ratio: sup_l2 / f_l2,
    })
}

/// K-node count as a function of `|t|`: the orbit circle of radius `2|t|` has
/// length about `pi e^{2|t|}`, so the count doubles every `doubling` units of
/// time up to `max_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeSchedule {
    pub base_k: usize,
    pub doubling: f64,
    pub max_k: usize,
    pub s_nodes: usize,
}

impl Default for NodeSchedule {
    fn default() -> Self {
        NodeSchedule {
            base_k: 64,
            doubling: 1.0,
            max_k: 8192,
            s_nodes: DEFAULT_S_NODES,
        }
    }
}

impl NodeSchedule {
    pub fn fixed(nodes: Nodes) -> Self {
        NodeSchedule {
            base_k: nodes.k_nodes,
            doubling: f64::INFINITY,
            max_k: nodes.k_nodes,
            s_nodes: nodes.s_nodes,
        }
    }

    pub fn at(&self, t: f64) -> Nodes {
        let doublings = if self.doubling.is_finite() {
            (t.abs() / self.doubling).floor() as u32
        } else {
            0
        };
        let k = self
            .base_k
            .saturating_mul(1usize.checked_shl(doublings.min(40)).unwrap_or(usize::MAX))
            .min(self.max_k);
        Nodes {
            k_nodes: k.max(MIN_K_NODES) & !1,
            s_nodes: self.s_nodes,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub point_index: usize,
    pub value: Complex64,
    pub abs_deviation: f64,
    pub err_estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSummary {
    pub t: f64,
    pub max_deviation: f64,
    /// Root mean square deviation over the points.
    pub l2_deviation: f64,
    pub k_nodes: usize,
    pub s_nodes: usize,
    /// Mean square deviation divided by `(1 + |t|)^2 e^{-2|t|}`.
    pub shape_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub observable: String,
    pub limit: Complex64,
    pub seed: u64,
    pub points: usize,
    pub schedule: NodeSchedule,
    pub eta_support: (f64, f64),
    pub rows: Vec<ConvergenceRow>,
    pub summary: Vec<ConvergenceSummary>,
}

impl ConvergenceReport {
    /// Max deviation strictly decreasing along the study's time order.
    /// Strict decrease between consecutive times; a pair already at roundoff
    /// level (both below [`CONVERGED_FLOOR`]) counts as decreasing.
    pub fn max_deviation_strictly_decreasing(&self) -> bool {
        self.summary.windows(2).all(|w| {
            w[1].max_deviation < w[0].max_deviation
                || w[0].max_deviation.max(w[1].max_deviation) <= CONVERGED_FLOOR
        })
    }

    pub fn final_max_deviation(&self) -> f64 {
        self.summary.last().map(|s| s.max_deviation).unwrap_or(0.0)
    }

    /// CSV with columns `t, point_index, re_value, im_value, abs_deviation`.
    pub fn to_csv(&self, header_comments: &[String]) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        for c in header_comments {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str("t,point_index,re_value,im_value,abs_deviation\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.16e},{},{:.16e},{:.16e},{:.16e}",
                r.t, r.point_index, r.value.re, r.value.im, r.abs_deviation
            );
        }
        out
    }
}

/// Tabulates `|M^eta_t f(x_i) - int f dmu|` over the sample for each `t`.
/// Negative times run the study towards `t -> -infinity`.
pub fn convergence_study(
    f: &Observable,
    s: &SampleSet,
    t_list: &[f64],
    eta: &BumpFunction,
    schedule: NodeSchedule,
) -> Result<ConvergenceReport> {
    let limit = f
        .exact_mean
        .ok_or_else(|| Error::InvalidParameter(format!("{} has no known mean", f.description)))?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &t in t_list {
        let nodes = schedule.at(t);
        let estimates = s
            .points
            .par_iter()
            .map(|x| semi_radial_estimate(t, f, x, eta, nodes))
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<Complex64> = estimates.iter().map(|e| e.value).collect();
        // propagate the exclusion rule for non-finite averages
        integrate_values(&values, true)?;
        let mut max_dev: f64 = 0.0;
        let mut sq = 0.0;
        for (i, e) in estimates.iter().enumerate() {
            let dev = (e.value - limit).norm();
            max_dev = max_dev.max(dev);
            sq += dev * dev;
            rows.push(ConvergenceRow {
                t,
                point_index: i,
                value: e.value,
                abs_deviation: dev,
                err_estimate: e.err_estimate,
            });
        }
        let ms = sq / estimates.len() as f64;
        let shape = (1.0 + t.abs()).powi(2) * (-2.0 * t.abs()).exp();
        summary.push(ConvergenceSummary {
            t,
            max_deviation: max_dev,
            l2_deviation: ms.sqrt(),
            k_nodes: nodes.k_nodes,
            s_nodes: nodes.s_nodes,
            shape_ratio: ms / shape,
        });
    }
    Ok(ConvergenceReport {
        observable: f.description.clone(),
        limit,
        seed: s.seed,
        points: s.points.len(),
        schedule,
        eta_support: eta.support(),
        rows,
        summary,
    })
}
