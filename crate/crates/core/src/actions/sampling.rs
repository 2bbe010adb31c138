//! Exact Haar sampling on the modular surface, CSV persistence of sample
//! sets, and a two-sample Kolmogorov-Smirnov test.

use std::f64::consts::{FRAC_PI_6, PI};
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::actions::modular::ActionPoint;
use crate::error::{Error, Result};

/// Seeded i.i.d. points of `(X, mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<ActionPoint>,
    pub seed: u64,
}

impl SampleSet {
    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Writes `re_z,im_z,theta,seed_index` rows with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * self.points.len() + 64);
        let _ = writeln!(out, "# seed={} size={}", self.seed, self.points.len());
        out.push_str("re_z,im_z,theta,seed_index\n");
        for (i, p) in self.points.iter().enumerate() {
            let z = p.z();
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{}", z.re, z.im, p.theta(), i);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut seed = None;
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                for field in comment.split_whitespace() {
                    if let Some(v) = field.strip_prefix("seed=") {
                        seed = Some(v.parse::<u64>().map_err(|e| {
                            Error::Parse(format!("line {}: seed: {e}", lineno + 1))
                        })?);
                    }
                }
                continue;
            }
            if line.starts_with("re_z") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Parse(format!(
                    "line {}: expected 4 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let z = Complex64::new(num(cols[0])?, num(cols[1])?);
            points.push(ActionPoint::from_coords(z, num(cols[2])?)?);
        }
        if points.is_empty() {
            return Err(Error::Parse("sample file has no points".into()));
        }
        Ok(SampleSet {
            points,
            seed: seed.unwrap_or(0),
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Draws one point of `mu`: `Re z = sin(phi)` with `phi` uniform on
/// `(-pi/6, pi/6)`, `Im z = sqrt(1 - Re z^2) / u` with `u` uniform on
/// `(0, 1]`, and `theta` uniform on `[0, pi)`.
pub fn sample_point<R: Rng>(rng: &mut R) -> ActionPoint {
    let phi: f64 = rng.gen_range(-FRAC_PI_6..FRAC_PI_6);
    let x = phi.sin();
    let u: f64 = 1.0 - rng.gen::<f64>();
    let y = (1.0 - x * x).sqrt() / u;
    let theta = rng.gen_range(0.0..PI);
    ActionPoint::from_coords(Complex64::new(x, y), theta)
        .expect("sampler stays inside the fundamental domain")
}

pub fn sample(seed: u64, count: usize) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..count).map(|_| sample_point(&mut rng)).collect();
    Ok(SampleSet { points, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidParameter("empty sample in KS test".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::NonFinite);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    })
}

/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
