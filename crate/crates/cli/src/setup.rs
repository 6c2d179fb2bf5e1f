//! Grids and model construction from flags.

use sacs_engine::vconfig::VParams;
use sacs_engine::{AtomicConfiguration, Couplings, ModelParams};

use crate::args::{ModelArgs, Scale};
use crate::error::CliError;

/// `value` or `start:stop:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn parse(name: &str, s: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::BadInput(format!("--{name} `{s}`: {why}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
        let parts: Vec<&str> = s.split(':').collect();
        let axis = match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                Self {
                    start: v,
                    stop: v,
                    count: 1,
                }
            }
            [a, b, n] => Self {
                start: num(a)?,
                stop: num(b)?,
                count: n.trim().parse().map_err(|_| bad("count must be a positive integer"))?,
            },
            _ => return Err(bad("expected a value or start:stop:count")),
        };
        if axis.count == 0 {
            return Err(bad("count must be at least 1"));
        }
        if !axis.start.is_finite() || !axis.stop.is_finite() {
            return Err(bad("bounds must be finite"));
        }
        Ok(axis)
    }

    pub fn is_range(&self) -> bool {
        self.count > 1
    }

    pub fn values(&self, scale: Scale) -> Result<Vec<f64>, CliError> {
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let n = (self.count - 1) as f64;
        match scale {
            Scale::Linear => Ok((0..self.count)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / n)
                .collect()),
            Scale::Log => {
                if self.start <= 0.0 || self.stop <= 0.0 {
                    return Err(CliError::BadInput("log spacing needs positive bounds".into()));
                }
                let (a, b) = (self.start.ln(), self.stop.ln());
                Ok((0..self.count).map(|k| (a + (b - a) * k as f64 / n).exp()).collect())
            }
        }
    }

    pub fn spec(&self) -> String {
        if self.count == 1 {
            format!("{}", self.start)
        } else {
            format!("{}:{}:{}", self.start, self.stop, self.count)
        }
    }
}

/// Atom numbers from an axis; every grid value must be a positive integer.
pub fn atom_numbers(axis: &Axis) -> Result<Vec<u32>, CliError> {
    axis.values(Scale::Linear)?
        .into_iter()
        .map(|v| {
            let r = v.round();
            if (v - r).abs() > 1e-9 || r < 1.0 || r > f64::from(u32::MAX) {
                Err(CliError::BadInput(format!("--na: {v} is not a positive integer")))
            } else {
                Ok(r as u32)
            }
        })
        .collect()
}

/// Couplings μ(cos θ, sin θ) on the two allowed transitions.
pub fn couplings(config: AtomicConfiguration, mu: f64, theta: f64) -> Couplings {
    let [(i1, j1), (i2, j2)] = config.allowed_pairs();
    let mut c = Couplings::default();
    c.set(i1, j1, mu * theta.cos());
    c.set(i2, j2, mu * theta.sin());
    c
}

pub fn params(m: &ModelArgs, mu: f64, theta: f64, n_atoms: u32) -> Result<ModelParams, CliError> {
    let config = m.configuration.into();
    ModelParams::new(
        config,
        m.omega,
        [m.w1, m.w2, m.w3],
        couplings(config, mu, theta),
        n_atoms,
        m.rwa,
    )
    .map_err(|e| CliError::BadInput(e.to_string()))
}

/// The V closed forms apply to the full Hamiltonian in double resonance
/// with θ ∈ [0, π/2].
pub fn v_params(m: &ModelArgs, mu: f64, theta: f64, n_atoms: u32) -> Option<VParams> {
    let eligible = AtomicConfiguration::from(m.configuration) == AtomicConfiguration::V && !m.rwa && m.w2 == m.w3;
    if !eligible {
        return None;
    }
    VParams::new(mu, theta, m.omega, m.w1, m.w3, n_atoms).ok()
}

pub fn describe_model(m: &ModelArgs) -> Vec<(&'static str, String)> {
    vec![
        ("configuration", format!("{:?}", m.configuration).to_lowercase()),
        ("omega", m.omega.to_string()),
        ("w1", m.w1.to_string()),
        ("w2", m.w2.to_string()),
        ("w3", m.w3.to_string()),
        ("rwa", m.rwa.to_string()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_forms() {
        assert_eq!(
            Axis::parse("mu", "0.5").unwrap().values(Scale::Linear).unwrap(),
            vec![0.5]
        );
        let a = Axis::parse("mu", "0:2:5").unwrap();
        assert_eq!(a.values(Scale::Linear).unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let l = Axis::parse("mu", "0.01:1:3").unwrap().values(Scale::Log).unwrap();
        assert!((l[1] - 0.1).abs() < 1e-15);
        assert!(Axis::parse("mu", "0:1:0").is_err());
        assert!(Axis::parse("mu", "0:1").is_err());
        assert!(Axis::parse("mu", "x").is_err());
        assert!(Axis::parse("mu", "0:1:3").unwrap().values(Scale::Log).is_err());
    }

    #[test]
    fn atom_axis_requires_integers() {
        assert_eq!(
            atom_numbers(&Axis::parse("na", "1:4:4").unwrap()).unwrap(),
            vec![1, 2, 3, 4]
        );
        assert!(atom_numbers(&Axis::parse("na", "1:2:3").unwrap()).is_err());
        assert!(atom_numbers(&Axis::parse("na", "0").unwrap()).is_err());
    }

    #[test]
    fn couplings_follow_allowed_transitions() {
        let c = couplings(AtomicConfiguration::Xi, 2.0, 0.0);
        assert_eq!(c.as_array(), [2.0, 0.0, 0.0]);
        let c = couplings(AtomicConfiguration::Lambda, 1.0, std::f64::consts::FRAC_PI_2);
        assert!(c.mu23 > 0.999 && c.mu12 == 0.0);
    }
}
