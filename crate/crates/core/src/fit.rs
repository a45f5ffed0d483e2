//! Small regression and rank-statistics helpers.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Ordinary least squares `y ≈ slope * x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    weighted_linear_fit(x, y, &vec![1.0; x.len()])
}

/// Weighted least squares with nonnegative weights.
pub fn weighted_linear_fit(x: &[f64], y: &[f64], w: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() != w.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} abscissae, {} ordinates, {} weights",
            x.len(),
            y.len(),
            w.len()
        )));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientSamples(format!("{n} points for a line fit")));
    }
    let sw: f64 = w.iter().sum();
    if !(sw > 0.0) {
        return Err(Error::InsufficientSamples("weights sum to zero".into()));
    }
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for ((a, b), c) in x.iter().zip(y).zip(w) {
        sxx += c * (a - mx) * (a - mx);
        sxy += c * (a - mx) * (b - my);
        syy += c * (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientSamples("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        samples: n,
    })
}

/// Fits `log y ≈ slope * log x + c`; nonpositive entries are skipped.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    linear_fit(&lx, &ly)
}

/// Log-log fit where each point carries weight `x^{-power}`, so that samples
/// whose density grows like `x^power` count equally per logarithmic scale.
pub fn density_weighted_loglog_fit(x: &[f64], y: &[f64], power: f64) -> Result<LinearFit> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    let mut w = Vec::new();
    for (a, b) in x.iter().zip(y) {
        if *a > 0.0 && *b > 0.0 {
            lx.push(a.ln());
            ly.push(b.ln());
            w.push(a.powf(-power));
        }
    }
    weighted_linear_fit(&lx, &ly, &w)
}

/// Ranks starting at 1, ties share their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("{} vs {} samples", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientSamples("rank correlation needs two samples".into()));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let fit = linear_fit(&rx, &ry)?;
    let sign = fit.slope.signum();
    Ok(sign * fit.r_squared.sqrt())
}
