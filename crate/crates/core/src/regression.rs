//! Ordinary least squares of a metric against log spatial resolution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    Natural,
    /// Default: reproduces the published intercept/slope scale.
    #[default]
    Base10,
}

impl LogBase {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Base10 => x.log10(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LogBase::Natural => "natural",
            LogBase::Base10 => "base10",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "natural" | "ln" | "e" => Ok(LogBase::Natural),
            "base10" | "log10" | "10" => Ok(LogBase::Base10),
            other => Err(Error::InvalidParameter(format!(
                "unknown log base {other:?}, expected natural or base10"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub intercept: f64,
    pub slope: f64,
    pub slope_std_error: f64,
    /// Fraction in `[0, 1]`.
    pub r_squared: f64,
    /// Overall F-test p-value.
    pub p_value: f64,
    pub n: usize,
    pub log_base: LogBase,
}

/// Fits `metric = β₀ + β₁·log(resolution)`.
pub fn loglinear_fit(resolutions: &[f64], metrics: &[f64], log_base: LogBase) -> Result<RegressionResult> {
    let n = resolutions.len();
    if n != metrics.len() {
        return Err(Error::ShapeMismatch(format!(
            "{n} resolutions but {} metric values",
            metrics.len()
        )));
    }
    if n < 3 {
        return Err(Error::DegenerateRegression(format!("need at least 3 points, got {n}")));
    }
    if let Some(r) = resolutions.iter().find(|&&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::DegenerateRegression(format!("resolution {r} is not positive")));
    }
    if let Some(y) = metrics.iter().find(|y| !y.is_finite()) {
        return Err(Error::DegenerateRegression(format!("metric value {y} is not finite")));
    }

    // Sort pairs so the fit does not depend on input order.
    let mut pairs: Vec<(f64, f64)> = resolutions
        .iter()
        .map(|&r| log_base.apply(r))
        .zip(metrics.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();

    let nf = n as f64;
    let x_mean = pairwise_sum(&xs) / nf;
    let y_mean = pairwise_sum(&ys) / nf;
    let dx: Vec<f64> = xs.iter().map(|x| x - x_mean).collect();
    let sxx = pairwise_sum(&dx.iter().map(|d| d * d).collect::<Vec<_>>());
    if !(sxx > 0.0) {
        return Err(Error::DegenerateRegression("all log-resolutions are equal".into()));
    }
    let sxy = pairwise_sum(&dx.iter().zip(&ys).map(|(d, y)| d * (y - y_mean)).collect::<Vec<_>>());
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;

    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    let rss = pairwise_sum(&residuals.iter().map(|e| e * e).collect::<Vec<_>>());
    let tss = pairwise_sum(&ys.iter().map(|y| (y - y_mean) * (y - y_mean)).collect::<Vec<_>>());
    let dof = nf - 2.0;
    let sigma2 = rss / dof;
    let slope_std_error = (sigma2 / sxx).sqrt();

    let (r_squared, p_value) = if tss == 0.0 {
        // constant response: nothing to explain, no evidence of a slope
        (0.0, 1.0)
    } else {
        let r2 = (1.0 - rss / tss).clamp(0.0, 1.0);
        let p = if rss == 0.0 {
            0.0
        } else {
            let f = (tss - rss) / sigma2;
            f_cdf_complement(f.max(0.0), 1.0, dof)?
        };
        (r2, p)
    };

    Ok(RegressionResult {
        intercept,
        slope,
        slope_std_error,
        r_squared,
        p_value,
        n,
        log_base,
    })
}

/// `P(X > f)` for `X ~ F(d1, d2)`.
pub fn f_cdf_complement(f: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(d1 > 0.0 && d2 > 0.0 && d1.is_finite() && d2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "invalid degrees of freedom ({d1}, {d2})"
        )));
    }
    if f.is_nan() || f < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "F statistic must be nonnegative, got {f}"
        )));
    }
    if f == 0.0 {
        return Ok(1.0);
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    // P(X > f) = I_x(d2/2, d1/2) with x = d2 / (d2 + d1·f)
    let x = d2 / (d2 + d1 * f);
    let one_minus_x = d1 * f / (d2 + d1 * f);
    Ok(beta_reg(0.5 * d2, 0.5 * d1, x, one_minus_x))
}

/// Regularized incomplete beta `I_x(a, b)`; `y` must equal `1 − x` and is
/// passed separately to avoid cancellation.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    beta_reg(a, b, x, 1.0 - x)
}

fn beta_reg(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        return 1.0 - beta_reg(b, a, y, x);
    }
    let ln_front = a * x.ln() + b * y.ln() - ln_beta(a, b);
    ln_front.exp() * beta_continued_fraction(a, b, x) / a
}

/// Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
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
    for m in 1..=10_000 {
        let m = f64::from(m);
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

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (k, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
