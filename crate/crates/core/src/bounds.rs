//! Numeric tail and expectation bounds, each paired with an exact or
//! empirical comparator so tests can record that the inequality holds
//! rather than assume it.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("hypothesis violated: {0}")]
    Refused(String),
    #[error("invalid input: {0}")]
    BadInput(String),
}

/// Lanczos approximation (g = 7, 9 coefficients); |rel err| < 1e-13 on
/// the positive reals we use.
pub fn ln_gamma(x: f64) -> f64 {
    // published digits kept verbatim even past f64 resolution
    #[allow(clippy::excessive_precision)]
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().abs().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn ln_choose(n: u64, t: u64) -> f64 {
    if t > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(t as f64 + 1.0) - ln_gamma((n - t) as f64 + 1.0)
}

/// P(Bin(n, p) = t) via log-space evaluation; stable for n up to 1e6.
pub fn binomial_pmf(n: u64, p: f64, t: u64) -> f64 {
    if t > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if t == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if t == n { 1.0 } else { 0.0 };
    }
    let ln = ln_choose(n, t) + t as f64 * p.ln() + (n - t) as f64 * (1.0 - p).ln();
    ln.exp()
}

/// Lower bound np - cap*2^{-cap} on E[min(Bin(n,p), cap)], paired with
/// the exact expectation. Requires 2enp < cap, matching the bound's
/// proof obligation; anything else is refused.
#[derive(Clone, Copy, Debug)]
pub struct BoundReport {
    pub n: u64,
    pub p: f64,
    pub cap: u32,
    pub bound: f64,
    pub exact: f64,
    /// exact - bound; nonnegative exactly when the bound holds
    pub slack: f64,
}

pub fn restricted_binomial_lower(n: u64, p: f64, cap: u32) -> Result<BoundReport, BoundsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(BoundsError::BadInput(format!("p = {p} outside [0,1]")));
    }
    if cap == 0 {
        return Err(BoundsError::BadInput("cap must be positive".into()));
    }
    let np = n as f64 * p;
    let threshold = 2.0 * std::f64::consts::E * np;
    if threshold >= cap as f64 {
        return Err(BoundsError::Refused(format!(
            "need 2*e*n*p < cap, got {threshold:.6} >= {cap}"
        )));
    }
    let bound = np - cap as f64 * 2f64.powi(-(cap as i32));
    // E[min(X, cap)] = cap - sum_{t < cap} (cap - t) P(X = t)
    let mut shortfall = 0.0;
    for t in 0..cap.min(n as u32 + 1) {
        shortfall += (cap - t) as f64 * binomial_pmf(n, p, t as u64);
    }
    if n < cap as u64 {
        // Bin(n,p) never reaches cap; the capped mean is just the mean,
        // but the shortfall sum above already accounts for that because
        // pmf(t) = 0 for t > n
    }
    let exact = cap as f64 - shortfall;
    Ok(BoundReport {
        n,
        p,
        cap,
        bound,
        exact,
        slack: exact - bound,
    })
}

/// Raw bound value alongside its clamp into [0,1].
#[derive(Clone, Copy, Debug)]
pub struct TailBound {
    pub raw: f64,
    pub as_probability: f64,
}

impl TailBound {
    fn from_raw(raw: f64) -> TailBound {
        TailBound {
            raw,
            as_probability: raw.clamp(0.0, 1.0),
        }
    }
}

/// Deviation bound 2 exp(-t^2 / (n*cap^2)) for a sum of n independent
/// summands each confined to [0, cap].
pub fn hoeffding_tail(n: u64, cap: f64, t: f64) -> TailBound {
    assert!(n >= 1 && cap > 0.0 && t >= 0.0);
    TailBound::from_raw(2.0 * (-(t * t) / (n as f64 * cap * cap)).exp())
}

/// Deviation bound mu^{-1/3} for |X - mu| >= mu^{2/3} when Var X <= mu.
pub fn chebyshev_eh(mu: f64) -> TailBound {
    assert!(mu > 0.0);
    TailBound::from_raw(mu.powf(-1.0 / 3.0))
}

/// Chance that a fresh vertex sees fewer than two present neighbors
/// among floor((1-eps)k) first-round candidates, exactly and via the
/// k-free bound 2 e^{eps-1}.
#[derive(Clone, Copy, Debug)]
pub struct TrialFailure {
    pub exact: f64,
    pub bound_raw: f64,
    pub bound: f64,
}

pub fn trial_failure_rate(epsilon: f64, k: u32) -> Result<TrialFailure, BoundsError> {
    if !(0.0 < epsilon && epsilon < 1.0) {
        return Err(BoundsError::BadInput(format!(
            "epsilon must be in (0,1), got {epsilon}"
        )));
    }
    if k == 0 {
        return Err(BoundsError::BadInput("k must be positive".into()));
    }
    let p1 = (1.0 + epsilon / 2.0) / k as f64;
    let m = ((1.0 - epsilon) * k as f64).floor() as u64;
    let exact = binomial_pmf(m, p1, 0) + binomial_pmf(m, p1, 1);
    let bound_raw = 2.0 * (epsilon - 1.0).exp();
    Ok(TrialFailure {
        exact,
        bound_raw,
        bound: bound_raw.clamp(0.0, 1.0),
    })
}
