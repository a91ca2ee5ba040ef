//! Validation statistics: Pearson correlation with a two-tailed p-value,
//! Bland-Altman agreement, pairwise correlation matrices, grouped summaries,
//! and seeded k-fold index splits.
//!
//! The p-value uses the exact Student-t relationship
//! p = I_{df/(df+t²)}(df/2, 1/2) with the regularized incomplete beta
//! evaluated by Lentz's continued fraction, good to well below 1e-8 for the
//! sample sizes seen here.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Arithmetic mean.
pub fn mean<F: Real>(xs: &[F]) -> Result<F> {
    if xs.is_empty() {
        return Err(Error::InsufficientData { got: 0, need: 1 });
    }
    Ok(xs.iter().copied().sum::<F>() / F::from_count(xs.len()))
}

/// Sample standard deviation (n − 1 denominator).
pub fn sample_sd<F: Real>(xs: &[F]) -> Result<F> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData {
            got: xs.len(),
            need: 2,
        });
    }
    let m = mean(xs)?;
    let ss = xs.iter().map(|&x| (x - m) * (x - m)).sum::<F>();
    Ok((ss / F::from_count(xs.len() - 1)).sqrt())
}

// Lanczos approximation, g = 7, nine coefficients. The published digits are
// kept verbatim even where they exceed f64 precision.
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps small arguments accurate.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Lentz-style continued fraction for the incomplete beta.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0, 1].
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Two-tailed p-value of a Student-t statistic with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
}

/// Pearson correlation with its two-tailed significance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

impl Correlation {
    pub fn significant_at(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Pearson r between two equally long samples, accumulated in f64.
///
/// Needs at least three points (the p-value needs df = n − 2 ≥ 1) and
/// non-constant inputs.
pub fn pearson<F: Real>(x: &[F], y: &[F]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::Validation(format!(
            "sample lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData { got: n, need: 3 });
    }
    let r = pearson_r_f64(x, y)?;
    let df = (n - 2) as f64;
    let p_value = if r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        student_t_two_tailed(t, df)
    };
    Ok(Correlation { r, p_value, n })
}

/// Bare Pearson r via centered sums; needs n ≥ 2 and non-constant inputs.
fn pearson_r_f64<F: Real>(x: &[F], y: &[F]) -> Result<f64> {
    // Constantness is decided by exact comparison, not by a zero centered
    // sum: accumulation error can leave a nonzero residue on a constant
    // column and fake a defined correlation.
    if x.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::UndefinedCorrelation(
            "first sample is constant".into(),
        ));
    }
    if y.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::UndefinedCorrelation(
            "second sample is constant".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().map(|v| v.widen()).sum::<f64>() / n;
    let my = y.iter().map(|v| v.widen()).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xv, yv) in x.iter().zip(y) {
        let dx = xv.widen() - mx;
        let dy = yv.widen() - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "first sample is constant".into(),
        ));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "second sample is constant".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Bland-Altman agreement between a measurement and a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct BlandAltman {
    /// Mean of measured − reference.
    pub bias: f64,
    /// Sample standard deviation of the differences.
    pub sd: f64,
    /// bias − 1.96 sd.
    pub lower_limit: f64,
    /// bias + 1.96 sd.
    pub upper_limit: f64,
    pub n: usize,
    /// Pairs strictly beyond either limit.
    pub outside_limits: usize,
    /// ((measured + reference) / 2, measured − reference) per pair, for plots.
    pub points: Vec<(f64, f64)>,
}

pub fn bland_altman<F: Real>(measured: &[F], reference: &[F]) -> Result<BlandAltman> {
    if measured.len() != reference.len() {
        return Err(Error::Validation(format!(
            "sample lengths differ: {} vs {}",
            measured.len(),
            reference.len()
        )));
    }
    if measured.len() < 2 {
        return Err(Error::InsufficientData {
            got: measured.len(),
            need: 2,
        });
    }
    let points: Vec<(f64, f64)> = measured
        .iter()
        .zip(reference)
        .map(|(m, r)| {
            let (m, r) = (m.widen(), r.widen());
            ((m + r) / 2.0, m - r)
        })
        .collect();
    let diffs: Vec<f64> = points.iter().map(|&(_, d)| d).collect();
    let bias = mean(&diffs)?;
    let sd = sample_sd(&diffs)?;
    let lower_limit = bias - 1.96 * sd;
    let upper_limit = bias + 1.96 * sd;
    let outside_limits = diffs
        .iter()
        .filter(|&&d| d < lower_limit || d > upper_limit)
        .count();
    Ok(BlandAltman {
        bias,
        sd,
        lower_limit,
        upper_limit,
        n: diffs.len(),
        outside_limits,
        points,
    })
}

/// Pairwise Pearson r between columns. The diagonal is exactly 1, the matrix
/// is exactly symmetric, and entries involving a constant column are `None`.
pub fn correlation_matrix<F: Real>(columns: &[Vec<F>]) -> Result<Vec<Vec<Option<f64>>>> {
    let k = columns.len();
    if let Some(first) = columns.first() {
        for c in columns {
            if c.len() != first.len() {
                return Err(Error::Validation("columns differ in length".into()));
            }
        }
    }
    let mut m = vec![vec![None; k]; k];
    for i in 0..k {
        m[i][i] = Some(1.0);
        for j in (i + 1)..k {
            let r = match pearson_r_f64(&columns[i], &columns[j]) {
                Ok(r) => Some(r),
                Err(Error::UndefinedCorrelation(_)) => None,
                Err(e) => return Err(e),
            };
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    Ok(m)
}

/// Count, mean, and sample sd of one group; sd is `None` for singletons.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
}

/// Summarizes values per key, e.g. NDVI per (species, condition).
pub fn group_summaries<K: Ord>(pairs: Vec<(K, f64)>) -> BTreeMap<K, GroupSummary> {
    let mut grouped: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for (k, v) in pairs {
        grouped.entry(k).or_default().push(v);
    }
    grouped
        .into_iter()
        .map(|(k, vs)| {
            let summary = GroupSummary {
                n: vs.len(),
                mean: mean(&vs).expect("group is non-empty"),
                sd: sample_sd(&vs).ok(),
            };
            (k, summary)
        })
        .collect()
}

/// Splits indices 0..n into k disjoint test folds with a seeded shuffle.
///
/// Fold sizes differ by at most one (the first n mod k folds are larger).
/// Each fold is sorted ascending. The same (n, k, seed) always produces the
/// same folds.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Validation(format!("k = {k} must be at least 2")));
    }
    if k > n {
        return Err(Error::Validation(format!(
            "cannot split {n} items into {k} folds"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}
