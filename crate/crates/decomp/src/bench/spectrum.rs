//! Synthetic singular-value profiles for the experiment grids.
//!
//! Three families cover everything the harness needs: geometric decay
//! between two endpoints, a flat plateau with a geometric tail, and a linear
//! ramp that hands over to geometric decay at a breakpoint. A realized
//! profile is always positive and nonincreasing, so it can be consumed
//! directly as a singular-value vector.
//!
//! Specs have a compact text form (`exp-decay:1:1e-6:300`) used by the CLI,
//! config files, and the CSV reports; `Display`/`FromStr` round-trip
//! exactly because float formatting uses the shortest representation that
//! parses back to the same bits.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

// ── Profile kinds ──────────────────────────────────────────────────────────

/// The shape of a profile; the length lives in [`SpectrumSpec`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectrumKind {
    /// Geometric interpolation from `from` down to `to` (endpoints included).
    ExpDecay { from: f64, to: f64 },

    /// `plateau_rank` copies of `plateau_value`, then geometric decay from
    /// `tail_from` down to `tail_to` over the remaining entries.
    Step {
        plateau_rank: usize,
        plateau_value: f64,
        tail_from: f64,
        tail_to: f64,
    },

    /// Linear ramp from 1 down to e⁻⁵ over the first `breakpoint` entries,
    /// then geometric decay reaching e⁻⁵⁰ at the final entry.
    ///
    /// For lengths ≥ 1024 the tail is rescaled so its sum matches the
    /// length-1024 profile with the same breakpoint: the tail mass is then
    /// constant across problem sizes, which keeps the optimal Frobenius
    /// floor comparable when the same grid is run at several sizes.
    LinearThenExp { breakpoint: usize },
}

/// A profile kind plus its realized length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumSpec {
    kind: SpectrumKind,
    length: usize,
}

impl SpectrumSpec {
    pub fn new(kind: SpectrumKind, length: usize) -> Result<Self> {
        let spec = SpectrumSpec { kind, length };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exp_decay(from: f64, to: f64, length: usize) -> Result<Self> {
        SpectrumSpec::new(SpectrumKind::ExpDecay { from, to }, length)
    }

    pub fn step(
        plateau_rank: usize,
        plateau_value: f64,
        tail_from: f64,
        tail_to: f64,
        length: usize,
    ) -> Result<Self> {
        SpectrumSpec::new(
            SpectrumKind::Step {
                plateau_rank,
                plateau_value,
                tail_from,
                tail_to,
            },
            length,
        )
    }

    pub fn linear_then_exp(breakpoint: usize, length: usize) -> Result<Self> {
        SpectrumSpec::new(SpectrumKind::LinearThenExp { breakpoint }, length)
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn length(&self) -> usize {
        self.length
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.length == 0 {
            return bad("spectrum length must be at least 1".into());
        }
        match self.kind {
            SpectrumKind::ExpDecay { from, to } => {
                if !(from.is_finite() && to.is_finite() && to > 0.0 && from >= to) {
                    return bad(format!(
                        "exp-decay needs from ≥ to > 0, got from={from}, to={to}"
                    ));
                }
            }
            SpectrumKind::Step {
                plateau_value,
                tail_from,
                tail_to,
                ..
            } => {
                let finite =
                    plateau_value.is_finite() && tail_from.is_finite() && tail_to.is_finite();
                if !(finite && tail_to > 0.0 && tail_from >= tail_to && plateau_value >= tail_from)
                {
                    return bad(format!(
                        "step needs plateau-value ≥ tail-from ≥ tail-to > 0, \
                         got {plateau_value}, {tail_from}, {tail_to}"
                    ));
                }
            }
            SpectrumKind::LinearThenExp { breakpoint } => {
                if breakpoint < 2 {
                    return bad(format!(
                        "linear-then-exp breakpoint must be at least 2, got {breakpoint}"
                    ));
                }
                if breakpoint >= self.length {
                    return bad(format!(
                        "linear-then-exp needs length > breakpoint, got length {} ≤ {breakpoint}",
                        self.length
                    ));
                }
            }
        }
        Ok(())
    }

    /// Materializes the profile. The result is positive and nonincreasing.
    pub fn realize(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let s = match self.kind {
            SpectrumKind::ExpDecay { from, to } => geometric(from, to, self.length),
            SpectrumKind::Step {
                plateau_rank,
                plateau_value,
                tail_from,
                tail_to,
            } => {
                let plateau = plateau_rank.min(self.length);
                let mut s = vec![plateau_value; plateau];
                s.extend(geometric(tail_from, tail_to, self.length - plateau));
                s
            }
            SpectrumKind::LinearThenExp { breakpoint } => {
                let mut s = ramp_and_tail(breakpoint, self.length);
                // Pin the tail mass to the length-1024 reference so runs at
                // different sizes share the same Frobenius floor. Below the
                // reference size the plain profile is used as-is: scaling a
                // short tail up would break monotonicity at the junction.
                if self.length >= 1024 && breakpoint + 1 < 1024 {
                    let reference: f64 = ramp_and_tail(breakpoint, 1024)[breakpoint..].iter().sum();
                    let own: f64 = s[breakpoint..].iter().sum();
                    let gamma = reference / own;
                    for v in &mut s[breakpoint..] {
                        *v *= gamma;
                    }
                }
                s
            }
        };
        debug_assert!(s.windows(2).all(|w| w[0] >= w[1]) && s.iter().all(|&v| v > 0.0));
        Ok(s)
    }
}

/// `count` points interpolating geometrically from `from` to `to`, both
/// endpoints included. A single point degenerates to `from`.
fn geometric(from: f64, to: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![from],
        _ => {
            let ratio = to / from;
            (0..count)
                .map(|i| from * ratio.powf(i as f64 / (count - 1) as f64))
                .collect()
        }
    }
}

/// The unscaled linear-then-exp profile: `breakpoint` ramp entries from 1
/// down to e⁻⁵, then a geometric tail reaching e⁻⁵⁰ at index `length − 1`.
fn ramp_and_tail(breakpoint: usize, length: usize) -> Vec<f64> {
    let low = (-5.0f64).exp();
    let floor = (-50.0f64).exp();
    let mut s = Vec::with_capacity(length);
    for i in 0..breakpoint {
        let t = i as f64 / (breakpoint - 1) as f64;
        s.push(1.0 + (low - 1.0) * t);
    }
    let tail = length - breakpoint;
    for i in 0..tail {
        s.push(low * (floor / low).powf((i + 1) as f64 / tail as f64));
    }
    s
}

// ── Text form ──────────────────────────────────────────────────────────────

impl fmt::Display for SpectrumSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SpectrumKind::ExpDecay { from, to } => {
                write!(f, "exp-decay:{from}:{to}:{}", self.length)
            }
            SpectrumKind::Step {
                plateau_rank,
                plateau_value,
                tail_from,
                tail_to,
            } => write!(
                f,
                "step:{plateau_rank}:{plateau_value}:{tail_from}:{tail_to}:{}",
                self.length
            ),
            SpectrumKind::LinearThenExp { breakpoint } => {
                write!(f, "linear-then-exp:{breakpoint}:{}", self.length)
            }
        }
    }
}

impl FromStr for SpectrumSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || {
            Error::InvalidParams(format!(
                "unrecognized spectrum `{text}`; expected exp-decay:FROM:TO:LEN, \
                 step:RANK:VALUE:TAIL_FROM:TAIL_TO:LEN, or linear-then-exp:BREAK:LEN"
            ))
        };
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad());
        match parts.as_slice() {
            ["exp-decay", from, to, len] => SpectrumSpec::exp_decay(real(from)?, real(to)?, int(len)?),
            ["step", rank, value, tail_from, tail_to, len] => SpectrumSpec::step(
                int(rank)?,
                real(value)?,
                real(tail_from)?,
                real(tail_to)?,
                int(len)?,
            ),
            ["linear-then-exp", breakpoint, len] => {
                SpectrumSpec::linear_then_exp(int(breakpoint)?, int(len)?)
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for SpectrumSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SpectrumSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(DeError::custom)
    }
}

// ── Tests ──────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_decay_hits_both_endpoints_and_the_interior_ratio() {
        let s = SpectrumSpec::exp_decay(1.0, (-50.0f64).exp(), 100)
            .unwrap()
            .realize()
            .unwrap();
        assert_eq!(s.len(), 100);
        assert_eq!(s[0], 1.0);
        assert!((s[99] / (-50.0f64).exp() - 1.0).abs() < 1e-12);
        // Geometric interpolation fixes every interior point:
        // σ₅₀/σ₁ = exp(−50·49/99).
        let expected = (-50.0f64 * 49.0 / 99.0).exp();
        assert!((s[49] / s[0] / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_kinds_realize_positive_and_nonincreasing() {
        let specs = [
            SpectrumSpec::exp_decay(2.0, 1e-9, 137).unwrap(),
            SpectrumSpec::step(30, 1.0, 1e-3, 1e-9, 500).unwrap(),
            SpectrumSpec::linear_then_exp(200, 1024).unwrap(),
            SpectrumSpec::linear_then_exp(50, 300).unwrap(),
        ];
        for spec in specs {
            let s = spec.realize().unwrap();
            assert_eq!(s.len(), spec.length());
            assert!(s.iter().all(|&v| v > 0.0), "{spec}");
            assert!(s.windows(2).all(|w| w[0] >= w[1]), "{spec}");
        }
    }

    #[test]
    fn step_profile_has_exact_plateau_and_tail_endpoints() {
        let s = SpectrumSpec::step(30, 1.0, 1e-3, 1e-9, 500)
            .unwrap()
            .realize()
            .unwrap();
        assert!(s[..30].iter().all(|&v| v == 1.0));
        assert_eq!(s[30], 1e-3);
        assert!((s[499] / 1e-9 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_plateau_longer_than_length_is_all_plateau() {
        let s = SpectrumSpec::step(10, 2.0, 1.0, 0.5, 6).unwrap().realize().unwrap();
        assert_eq!(s, vec![2.0; 6]);
    }

    #[test]
    fn linear_then_exp_junction_value_and_floor() {
        let s = SpectrumSpec::linear_then_exp(200, 1024)
            .unwrap()
            .realize()
            .unwrap();
        assert_eq!(s[0], 1.0);
        assert!((s[199] / (-5.0f64).exp() - 1.0).abs() < 1e-12);
        assert!((s[1023] / (-50.0f64).exp() - 1.0).abs() < 1e-12);
        assert!(s[200] < s[199]);
    }

    #[test]
    fn linear_then_exp_tail_mass_is_constant_across_sizes() {
        let tail_sum = |len: usize| -> f64 {
            let s = SpectrumSpec::linear_then_exp(200, len)
                .unwrap()
                .realize()
                .unwrap();
            s[200..].iter().sum()
        };
        let reference = tail_sum(1024);
        for len in [2048, 4096] {
            assert!(
                (tail_sum(len) / reference - 1.0).abs() < 1e-9,
                "tail mass drifted at length {len}"
            );
        }
    }

    #[test]
    fn display_and_parse_round_trip() {
        let specs = [
            SpectrumSpec::exp_decay(1.0, 1.93e-22, 3000).unwrap(),
            SpectrumSpec::step(30, 1.0, 1e-3, 1e-9, 500).unwrap(),
            SpectrumSpec::linear_then_exp(200, 4096).unwrap(),
        ];
        for spec in specs {
            let text = spec.to_string();
            let back: SpectrumSpec = text.parse().unwrap();
            assert_eq!(back, spec, "{text}");
        }
    }

    #[test]
    fn serde_form_is_the_compact_string() {
        let spec = SpectrumSpec::exp_decay(1.0, 1e-6, 300).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, "\"exp-decay:1:0.000001:300\"");
        let back: SpectrumSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(SpectrumSpec::exp_decay(1e-6, 1.0, 10).is_err()); // increasing
        assert!(SpectrumSpec::exp_decay(1.0, 0.0, 10).is_err()); // zero floor
        assert!(SpectrumSpec::exp_decay(1.0, 0.5, 0).is_err()); // empty
        assert!(SpectrumSpec::step(5, 1.0, 2.0, 0.1, 20).is_err()); // tail above plateau
        assert!(SpectrumSpec::step(5, 1.0, 0.1, 0.2, 20).is_err()); // increasing tail
        assert!(SpectrumSpec::linear_then_exp(1, 100).is_err()); // degenerate ramp
        assert!(SpectrumSpec::linear_then_exp(100, 100).is_err()); // no tail room
        assert!("exp-decay:1:0.5".parse::<SpectrumSpec>().is_err()); // missing length
        assert!("bell-curve:1:2:3".parse::<SpectrumSpec>().is_err()); // unknown kind
    }

    #[test]
    fn single_entry_profile_degenerates_to_the_leading_value() {
        let s = SpectrumSpec::exp_decay(0.7, 0.7, 1).unwrap().realize().unwrap();
        assert_eq!(s, vec![0.7]);
    }
}
