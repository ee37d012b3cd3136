//! Sample sizes, the one-sample t-test and the witness deviation bound.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("{name} = {value} is outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

fn open_unit(name: &'static str, value: f64) -> Result<(), StatsError> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(StatsError::Domain {
            name,
            value,
            range: "(0, 1)",
        })
    }
}

/// Number of Bernoulli samples so that the empirical mean is within `eps`
/// of the truth with probability at least `1 - delta`.
pub fn chernoff_sample_size(eps: f64, delta: f64) -> Result<usize, StatsError> {
    open_unit("eps", eps)?;
    open_unit("delta", delta)?;
    let n = ((2f64.ln() - delta.ln()) / (2.0 * eps * eps)).ceil();
    Ok(n as usize)
}

/// Deviation above which an observed conditional frequency over `n`
/// samples is taken as evidence against the model.
pub fn witness_bound(delta: f64, n: u64) -> Result<f64, StatsError> {
    open_unit("delta", delta)?;
    if n == 0 {
        return Err(StatsError::Domain {
            name: "n",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    Ok(((2f64.ln() - delta.ln()) / (2.0 * n as f64)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Two-sided one-sample t-test of `H0: mean = p_hat` given a sample of size
/// `n` with mean `p_bar` and standard deviation `std`.
///
/// A zero standard deviation leaves the statistic undefined; the test then
/// rejects exactly when `p_bar != p_hat`.
pub fn t_test_one_sample(
    p_hat: f64,
    p_bar: f64,
    std: f64,
    n: usize,
    significance: f64,
) -> Result<TestOutcome, StatsError> {
    open_unit("significance", significance)?;
    if n < 2 {
        return Err(StatsError::Domain {
            name: "N",
            value: n as f64,
            range: "[2, inf)",
        });
    }
    if std.is_nan() || std < 0.0 {
        return Err(StatsError::Domain {
            name: "std",
            value: std,
            range: "[0, inf)",
        });
    }
    if std == 0.0 {
        let differ = p_bar != p_hat;
        return Ok(TestOutcome {
            statistic: if differ {
                f64::INFINITY.copysign(p_bar - p_hat)
            } else {
                0.0
            },
            p_value: if differ { 0.0 } else { 1.0 },
            reject: differ,
        });
    }
    let t = (p_bar - p_hat) * (n as f64).sqrt() / std;
    let p = student_t_two_sided(t, (n - 1) as f64);
    Ok(TestOutcome {
        statistic: t,
        p_value: p,
        reject: p < significance,
    })
}

/// Sample mean and standard deviation (denominator `n - 1`) of `k`
/// successes among `n` Bernoulli trials.
pub fn bernoulli_mean_std(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = k as f64 / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = (k as f64) * ((n - k) as f64) / ((n as f64) * ((n - 1) as f64));
    (mean, var.max(0.0).sqrt())
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(x, df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// `P(T <= t)` for Student's t with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_sided(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Natural log of the gamma function (Lanczos, g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
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
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// `I_x(a, b)` via the modified Lentz continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // the fraction converges fast only on this side of the mean
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_fraction(1.0 - x, b, a) / b
    }
}

fn beta_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
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
    for m in 1..10_000 {
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
