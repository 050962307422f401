//! Value syntaxes shared by the command line and config files.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {what} `{input}`: {reason}")]
pub struct ParseValueError {
    what: &'static str,
    input: String,
    reason: String,
}

impl ParseValueError {
    fn new(what: &'static str, input: &str, reason: impl Into<String>) -> Self {
        Self {
            what,
            input: input.to_string(),
            reason: reason.into(),
        }
    }
}

/// Which evaluator produces a factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineKind {
    Continuous,
    Discrete,
    ClosedForm,
}

impl EngineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Continuous => "continuous",
            EngineKind::Discrete => "discrete",
            EngineKind::ClosedForm => "closed-form",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngineKind {
    type Err = ParseValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "continuous" => Ok(EngineKind::Continuous),
            "discrete" => Ok(EngineKind::Discrete),
            "closed-form" | "closed_form" | "closedform" => Ok(EngineKind::ClosedForm),
            _ => Err(ParseValueError::new(
                "engine",
                s,
                "expected continuous, discrete or closed-form",
            )),
        }
    }
}

/// Number of grid clients for a given facility count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PrecisionRule {
    Fixed(usize),
    /// `P = c * n`
    Scaled(usize),
}

/// Smallest admissible scale factor for [`PrecisionRule::Scaled`].
pub const MIN_SCALE: usize = 50;

impl PrecisionRule {
    pub fn precision(self, n: usize) -> usize {
        match self {
            PrecisionRule::Fixed(p) => p,
            PrecisionRule::Scaled(c) => c * n,
        }
    }

    pub fn validate(self) -> Result<(), String> {
        match self {
            PrecisionRule::Fixed(0) => Err("precision must be positive".into()),
            PrecisionRule::Scaled(c) if c < MIN_SCALE => {
                Err(format!("scaled precision needs c >= {MIN_SCALE}, got {c}"))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PrecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecisionRule::Fixed(p) => write!(f, "{p}"),
            PrecisionRule::Scaled(c) => write!(f, "{c}n"),
        }
    }
}

/// `5000` is a fixed precision, `500n` scales with the facility count.
impl FromStr for PrecisionRule {
    type Err = ParseValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let (digits, scaled) = match t.strip_suffix('n') {
            Some(d) => (d.trim_end_matches('*').trim(), true),
            None => (t, false),
        };
        let v: usize = digits
            .parse()
            .map_err(|_| ParseValueError::new("precision", s, "expected e.g. 5000 or 500n"))?;
        let rule = if scaled {
            PrecisionRule::Scaled(v)
        } else {
            PrecisionRule::Fixed(v)
        };
        rule.validate()
            .map_err(|r| ParseValueError::new("precision", s, r))?;
        Ok(rule)
    }
}

/// Evenly spaced alpha values with both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AlphaGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, String> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(format!("step must be positive, got {step}"));
        }
        if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&stop) || start > stop {
            return Err(format!("need 0 <= start <= stop <= 1, got {start}..{stop}"));
        }
        Ok(Self { start, stop, step })
    }

    /// Values `start + k * step`, built from integer multiples so that the
    /// endpoints come out exactly.
    pub fn values(&self) -> Vec<f64> {
        let span = (self.stop - self.start) / self.step;
        let m = (span + 1e-9).floor() as usize;
        let mut out: Vec<f64> = (0..=m)
            .map(|k| round12(self.start + k as f64 * self.step))
            .collect();
        if let Some(last) = out.last_mut() {
            if (*last - self.stop).abs() < 1e-9 {
                *last = self.stop;
            }
        }
        out
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// `0:1:0.05` is a grid, `0.1,0.5,0.9` a list, `0.55` a single value.
pub fn parse_alphas(s: &str) -> Result<Vec<f64>, ParseValueError> {
    let bad = |r: String| ParseValueError::new("alpha", s, r);
    let num = |t: &str| -> Result<f64, ParseValueError> {
        t.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("`{}` is not a number", t.trim())))
    };
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:step".into()));
        }
        AlphaGrid::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
            .map_err(bad)?
            .values()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if let Some(a) = values.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(bad(format!("{a} is outside [0, 1]")));
    }
    if values.is_empty() {
        return Err(bad("no values".into()));
    }
    Ok(values)
}

/// `3..100` (inclusive), `4,8,10`, or a mix such as `3..5,10`.
pub fn parse_counts(s: &str) -> Result<Vec<usize>, ParseValueError> {
    let bad = |r: &str| ParseValueError::new("facility count", s, r);
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad("bad range start"))?;
            let b: usize = b
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| bad("bad range end"))?;
            if a > b {
                return Err(bad("empty range"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad("expected an integer"))?);
        }
    }
    if out.contains(&0) {
        return Err(bad("facility counts must be at least 1"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_grid_hits_both_endpoints() {
        let v = AlphaGrid::new(0.0, 1.0, 0.05).unwrap().values();
        assert_eq!(v.len(), 21);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[20], 1.0);
        assert_eq!(v[3], 0.15);
        assert_eq!(v[11], 0.55);
        let v = AlphaGrid::new(0.0, 1.0, 0.01).unwrap().values();
        assert_eq!(v.len(), 101);
        assert_eq!(v[100], 1.0);
        assert_eq!(v[7], 0.07);
    }

    #[test]
    fn alpha_syntaxes() {
        assert_eq!(parse_alphas("0.55").unwrap(), vec![0.55]);
        assert_eq!(parse_alphas("0.1, 0.5,0.9").unwrap(), vec![0.1, 0.5, 0.9]);
        assert_eq!(parse_alphas("0:1:0.5").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_alphas("1.5").is_err());
        assert!(parse_alphas("0:1").is_err());
        assert!(parse_alphas("0:1:0").is_err());
    }

    #[test]
    fn count_syntaxes() {
        assert_eq!(parse_counts("4").unwrap(), vec![4]);
        assert_eq!(parse_counts("3..5,10").unwrap(), vec![3, 4, 5, 10]);
        assert_eq!(parse_counts("3..=4").unwrap(), vec![3, 4]);
        assert!(parse_counts("0").is_err());
        assert!(parse_counts("5..3").is_err());
    }

    #[test]
    fn precision_syntaxes() {
        assert_eq!("5000".parse::<PrecisionRule>().unwrap(), PrecisionRule::Fixed(5000));
        assert_eq!("500n".parse::<PrecisionRule>().unwrap(), PrecisionRule::Scaled(500));
        assert_eq!(PrecisionRule::Scaled(500).precision(10), 5000);
        assert!("10n".parse::<PrecisionRule>().is_err());
        assert!("0".parse::<PrecisionRule>().is_err());
        assert_eq!(PrecisionRule::Scaled(250).to_string(), "250n");
    }

    #[test]
    fn engine_names_round_trip() {
        for e in [EngineKind::Continuous, EngineKind::Discrete, EngineKind::ClosedForm] {
            assert_eq!(e.as_str().parse::<EngineKind>().unwrap(), e);
        }
    }
}
