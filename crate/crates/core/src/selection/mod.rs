//! Kernel selection: bounded bandwidth search for the linear and polynomial
//! regimes, Adam ascent for MLP feature maps, and the baselines.

mod baselines;
mod deep;
mod scalar;
mod trajectory;

pub use baselines::{grid_argmax_selector, median_distance, median_heuristic, GridSelection};
pub use deep::{select_deep, Adam, DeepSelection, OptimizerConfig};
pub use scalar::{select_scalar_bandwidth, ScalarClass, ScalarObjective, GRID_POINTS};
pub use trajectory::{Trajectory, TrajectoryRecord};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error};
use crate::features::MlpArch;

/// The objective maximized during selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Criterion {
    /// `mmd - c1 · G̃`
    Cp { c1: f64 },
    /// Unpenalized MMD.
    Plain,
    /// `√n · mmd / τ` with variance floor `lambda`.
    Liu { lambda: f64 },
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Cp { .. } => "cp",
            Criterion::Plain => "plain",
            Criterion::Liu { .. } => "liu",
        }
    }
}

/// Feature-map family searched over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Regime {
    Linear,
    Polynomial { degree: u32 },
    Deep(MlpArch),
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Linear => write!(f, "linear"),
            Regime::Polynomial { degree } => write!(f, "poly:{degree}"),
            Regime::Deep(arch)
                if arch.hidden.len() == 2
                    && arch.hidden[0] == arch.hidden[1]
                    && arch.output == 10 =>
            {
                write!(f, "deep:{}", arch.hidden[0])
            }
            Regime::Deep(arch) => write!(f, "deep{:?}->{}", arch.hidden, arch.output),
        }
    }
}

/// Parses `linear`, `poly:<p>`, `deep` or `deep:<width>`.
impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let parse_arg = |a: &str| {
            a.parse::<usize>()
                .map_err(|_| invalid(format!("bad regime argument in {s:?}")))
        };
        match (head, arg) {
            ("linear", None) => Ok(Regime::Linear),
            ("poly", Some(a)) => {
                let degree = parse_arg(a)?;
                if degree == 0 {
                    return Err(invalid("polynomial degree must be at least 1"));
                }
                Ok(Regime::Polynomial {
                    degree: degree as u32,
                })
            }
            ("deep", None) => Ok(Regime::Deep(MlpArch::default())),
            ("deep", Some(a)) => Ok(Regime::Deep(MlpArch::two_hidden(parse_arg(a)?))),
            _ => Err(invalid(format!(
                "unknown regime {s:?}; expected linear, poly:<p>, deep or deep:<width>"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_round_trip() {
        for s in ["linear", "poly:3", "deep:50"] {
            let r: Regime = s.parse().unwrap();
            assert_eq!(r.to_string(), s);
        }
        assert_eq!(
            "deep".parse::<Regime>().unwrap(),
            Regime::Deep(MlpArch::two_hidden(200))
        );
        assert!("poly".parse::<Regime>().is_err());
        assert!("poly:0".parse::<Regime>().is_err());
        assert!("cubic".parse::<Regime>().is_err());
    }
}
