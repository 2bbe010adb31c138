//! Quadrature rules: globally adaptive Gauss-Kronrod (7/15) over caller-supplied
//! breakpoints, Gauss-Legendre nodes, and the periodic trapezoid rule.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    /// Sum over panels of |Kronrod - Gauss|.
    pub error: f64,
    /// Integral of |f| at the Kronrod level.
    pub abs_integral: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    abs: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kr = fc * WGK[7];
    let mut ga = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        kr += (f1 + f2) * WGK[j];
        abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            ga += (f1 + f2) * WG[j / 2];
        }
    }
    let value = kr * h;
    let error = ((kr - ga) * h).norm();
    Panel {
        a,
        b,
        value,
        error,
        abs: abs * h.abs(),
    }
}

/// Globally adaptive Gauss-Kronrod integration of a complex integrand.
///
/// `breaks` must be sorted and contain the endpoints. The panel with the
/// largest error is bisected until the summed error drops below
/// `max(abs_tol, rel_tol * integral of |f|)` or the evaluation budget runs out.
pub fn adaptive_gk<F: Fn(f64) -> Complex64>(
    f: F,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_evals: usize,
) -> QuadResult {
    let mut heap = BinaryHeap::new();
    let mut evals = 0usize;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(gk15(&f, w[0], w[1]));
            evals += 15;
        }
    }
    let totals = |heap: &BinaryHeap<Panel>| {
        let mut v = Complex64::new(0.0, 0.0);
        let mut e = 0.0;
        let mut s = 0.0;
        for p in heap.iter() {
            v += p.value;
            e += p.error;
            s += p.abs;
        }
        (v, e, s)
    };
    let (mut value, mut error, mut abs) = totals(&heap);
    let mut converged = error <= abs_tol.max(rel_tol * abs);
    while !converged && evals + 30 <= max_evals {
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot split further in floating point
            heap.push(worst);
            break;
        }
        let l = gk15(&f, worst.a, mid);
        let r = gk15(&f, mid, worst.b);
        evals += 30;
        value += l.value + r.value - worst.value;
        error += l.error + r.error - worst.error;
        abs += l.abs + r.abs - worst.abs;
        heap.push(l);
        heap.push(r);
        if heap.len() % 64 == 0 {
            // resum to keep the running totals honest
            let t = totals(&heap);
            value = t.0;
            error = t.1;
            abs = t.2;
        }
        converged = error <= abs_tol.max(rel_tol * abs);
    }
    let (value, error, abs) = totals(&heap);
    QuadResult {
        value,
        error,
        abs_integral: abs,
        evaluations: evals,
        converged: error <= abs_tol.max(rel_tol * abs),
    }
}

/// Real-valued convenience wrapper around [`adaptive_gk`].
pub fn adaptive_gk_real<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_evals: usize,
) -> (f64, f64) {
    let r = adaptive_gk(
        |x| Complex64::new(f(x), 0.0),
        breaks,
        rel_tol,
        abs_tol,
        max_evals,
    );
    (r.value.re, r.error)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss-Legendre nodes mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    x.into_iter()
        .zip(w)
        .map(|(x, w)| (c + h * x, h * w))
        .collect()
}

/// Equally spaced angles `2 pi j / n`, the periodic trapezoid nodes with
/// weight `1/n` each for the normalized circle measure.
pub fn circle_nodes(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}
