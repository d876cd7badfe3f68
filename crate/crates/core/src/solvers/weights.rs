use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// How raw frequency counts become learning weights (or event counts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightTransform {
    Raw,
    /// `ln(f + 1)`.
    Log,
    /// `ceil(f / divisor)`, which keeps every attested word at one or more.
    Scaled(u64),
}

impl WeightTransform {
    /// Transformed counts before normalization.
    pub fn effective(&self, freq: u64) -> f64 {
        match *self {
            WeightTransform::Raw => freq as f64,
            WeightTransform::Log => (freq as f64).ln_1p(),
            WeightTransform::Scaled(k) => freq.div_ceil(k) as f64,
        }
    }

    /// Integer presentation counts for incremental training. Log counts are
    /// rounded up so every attested word is presented at least once.
    pub fn event_count(&self, freq: u64) -> u64 {
        match *self {
            WeightTransform::Raw => freq,
            WeightTransform::Log => (freq as f64).ln_1p().ceil() as u64,
            WeightTransform::Scaled(k) => freq.div_ceil(k),
        }
    }
}

impl fmt::Display for WeightTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightTransform::Raw => write!(f, "raw"),
            WeightTransform::Log => write!(f, "log"),
            WeightTransform::Scaled(k) => write!(f, "scaled:{k}"),
        }
    }
}

impl FromStr for WeightTransform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "raw" => Ok(WeightTransform::Raw),
            "log" => Ok(WeightTransform::Log),
            _ => {
                let k = s
                    .strip_prefix("scaled:")
                    .or_else(|| s.strip_prefix("scaled"))
                    .and_then(|k| k.parse::<u64>().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| Error::Validation(format!("unknown weight transform `{s}` (raw, log, scaled:K)")))?;
                Ok(WeightTransform::Scaled(k))
            }
        }
    }
}

/// Per-word weights `p_i` in `[0, 1]`, normalized so the largest is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub values: Vec<f64>,
    pub transform: WeightTransform,
    /// Largest transformed count; `values[i] = effective(f_i) / normalizer`.
    pub normalizer: f64,
}

pub fn weights_from_freqs(freqs: &[u64], transform: WeightTransform) -> Result<WeightVector> {
    if freqs.is_empty() {
        return Err(Error::Validation("no frequencies to weight".into()));
    }
    if let WeightTransform::Scaled(0) = transform {
        return Err(Error::Validation("scaling divisor must be at least 1".into()));
    }
    let effective: Vec<f64> = freqs.iter().map(|&f| transform.effective(f)).collect();
    let normalizer = effective.iter().copied().fold(0.0, f64::max);
    if normalizer <= 0.0 {
        return Err(Error::Validation("all frequencies are zero; nothing to weight".into()));
    }
    Ok(WeightVector { values: effective.iter().map(|e| e / normalizer).collect(), transform, normalizer })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn raw_divides_by_max() {
        let w = weights_from_freqs(&[100, 10, 1], WeightTransform::Raw).unwrap();
        assert!(close(&w.values, &[1.0, 0.1, 0.01]));
        assert_eq!(w.normalizer, 100.0);
    }

    #[test]
    fn log_uses_backoff_of_one() {
        // ln(0 + 1) = 0; the second count is chosen so ln(f + 1) is the max
        let w = weights_from_freqs(&[0, 6], WeightTransform::Log).unwrap();
        assert!(close(&w.values, &[0.0, 1.0]));
        let w = weights_from_freqs(&[0, 6, 2], WeightTransform::Log).unwrap();
        assert!((w.values[2] - 3f64.ln() / 7f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn scaled_uses_ceiling() {
        let w = weights_from_freqs(&[150, 100, 1], WeightTransform::Scaled(100)).unwrap();
        assert!(close(&w.values, &[1.0, 0.5, 0.5]));
        assert_eq!(WeightTransform::Scaled(100).event_count(150), 2);
        assert_eq!(WeightTransform::Scaled(100).event_count(0), 0);
    }

    #[test]
    fn all_zero_is_an_error() {
        assert!(weights_from_freqs(&[0, 0], WeightTransform::Raw).is_err());
        assert!(weights_from_freqs(&[], WeightTransform::Raw).is_err());
    }

    #[test]
    fn parses_names() {
        for t in [WeightTransform::Raw, WeightTransform::Log, WeightTransform::Scaled(100)] {
            assert_eq!(t.to_string().parse::<WeightTransform>().unwrap(), t);
        }
        assert!("scaled:0".parse::<WeightTransform>().is_err());
        assert!("cubic".parse::<WeightTransform>().is_err());
    }
}
