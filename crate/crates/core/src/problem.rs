//! Front trajectories and complete problem setups.

use crate::error::{Error, Result};
use crate::grid::{BcLeft, BcRight, Field, Frame, Grid};

/// Sampled candidate front t -> s(t) on a uniform time grid.
///
/// Admissible fronts are Lipschitz with 0 < s_dot <= M. Runs started from
/// zero data legitimately produce constant fronts, so validation accepts
/// s_dot >= 0 and exposes the strict-positivity failure through
/// `is_degenerate` instead of rejecting outright.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontPath {
    times: Vec<f64>,
    s: Vec<f64>,
    s_dot: Vec<f64>,
}

impl FrontPath {
    /// Speeds below this floor count as stalled.
    pub const SPEED_FLOOR: f64 = 1e-12;

    pub fn new(times: Vec<f64>, s: Vec<f64>, s_dot: Vec<f64>, m_bound: f64) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::FrontPathInvalid {
                index: 0,
                reason: format!("need at least 2 samples, got {}", times.len()),
            });
        }
        if s.len() != times.len() || s_dot.len() != times.len() {
            return Err(Error::FrontPathInvalid {
                index: 0,
                reason: format!(
                    "sample count mismatch: {} times, {} positions, {} speeds",
                    times.len(),
                    s.len(),
                    s_dot.len()
                ),
            });
        }
        if times[0] != 0.0 {
            return Err(Error::FrontPathInvalid {
                index: 0,
                reason: format!("time grid must start at 0, got {}", times[0]),
            });
        }
        if !(s[0].is_finite() && s[0] > 0.0) {
            return Err(Error::FrontPathInvalid {
                index: 0,
                reason: format!("initial position must be positive, got {}", s[0]),
            });
        }
        let speed_slack = 1.0 + 1e-9;
        let lip_tol = 1e-9 * (s[0].abs() + m_bound.abs() + 1.0);
        for i in 0..times.len() {
            if !(times[i].is_finite() && s[i].is_finite() && s_dot[i].is_finite()) {
                return Err(Error::FrontPathInvalid {
                    index: i,
                    reason: "non-finite sample".into(),
                });
            }
            if s_dot[i] < 0.0 || s_dot[i] > m_bound * speed_slack {
                return Err(Error::FrontPathInvalid {
                    index: i,
                    reason: format!(
                        "speed {} outside [0, {m_bound}]",
                        s_dot[i]
                    ),
                });
            }
            if i > 0 {
                let dt = times[i] - times[i - 1];
                if dt <= 0.0 {
                    return Err(Error::FrontPathInvalid {
                        index: i,
                        reason: "times must be strictly increasing".into(),
                    });
                }
                let ds = s[i] - s[i - 1];
                if ds < -lip_tol {
                    return Err(Error::FrontPathInvalid {
                        index: i,
                        reason: format!("position decreased by {}", -ds),
                    });
                }
                if ds > m_bound * dt + lip_tol {
                    return Err(Error::FrontPathInvalid {
                        index: i,
                        reason: format!(
                            "increment {ds} exceeds the Lipschitz budget {} over dt={dt}",
                            m_bound * dt
                        ),
                    });
                }
            }
        }
        Ok(FrontPath { times, s, s_dot })
    }

    /// Straight front s(t) = b + slope * t on a uniform grid of
    /// n_steps + 1 samples.
    pub fn linear(
        b: f64,
        slope: f64,
        t_final: f64,
        n_steps: usize,
        m_bound: f64,
     ) -> Result<Self> {
        if n_steps == 0 || !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::FrontPathInvalid {
                index: 0,
                reason: format!("need n_steps >= 1 and t_final > 0, got {n_steps}, {t_final}"),
            });
        }
        let dt = t_final / n_steps as f64;
        let times: Vec<f64> = (0..=n_steps).map(|k| k as f64 * dt).collect();
        let s: Vec<f64> = times.iter().map(|t| b + slope * t).collect();
        let s_dot = vec![slope; n_steps + 1];
        FrontPath::new(times, s, s_dot, m_bound)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[f64] {
        &self.s
    }

    pub fn speeds(&self) -> &[f64] {
        &self.s_dot
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn position(&self, k: usize) -> f64 {
        self.s[k]
    }

    pub fn speed(&self, k: usize) -> f64 {
        self.s_dot[k]
    }

    pub fn final_position(&self) -> f64 {
        *self.s.last().unwrap()
    }

    /// True when the path stalls somewhere: strict admissibility wants
    /// s_dot > 0 everywhere.
    pub fn is_degenerate(&self) -> bool {
        self.s_dot.iter().any(|&v| v <= Self::SPEED_FLOOR)
    }
}

/// Complete setup of one solve. `u0` lives on the uniform physical grid
/// over [0, b] with `n_nodes` nodes; solvers run on the matching
/// cylindrical grid with `n_steps` uniform implicit time steps up to
/// `t_final`. `m_bound` is the prescribed Lipschitz budget of admissible
/// fronts and enters the data cone bound.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub b: f64,
    pub t_final: f64,
    pub m_bound: f64,
    pub u0: Field,
    pub n_nodes: usize,
    pub n_steps: usize,
}

impl ProblemSpec {
    pub fn new(
        alpha: f64,
        b: f64,
        t_final: f64,
        m_bound: f64,
        u0: Field,
        n_steps: usize,
    ) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
            return Err(Error::AlphaOutOfRange {
                value: alpha,
                range: "(0, 1)",
            });
        }
        for (name, v) in [("b", b), ("t_final", t_final), ("m_bound", m_bound)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::SpecInvalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if n_steps == 0 {
            return Err(Error::SpecInvalid("n_steps must be at least 1".into()));
        }
        let n_nodes = u0.grid().n_nodes();
        match u0.grid().frame() {
            Frame::Physical { length } if (length - b).abs() <= 1e-12 * b => {}
            other => {
                return Err(Error::SpecInvalid(format!(
                    "u0 must live on the physical grid of length b={b}, got {other:?}"
                )));
            }
        }
        if u0.bc_left() != BcLeft::NeumannZero || u0.bc_right() != BcRight::DirichletZero {
            return Err(Error::SpecInvalid(
                "u0 must carry the no-flux left tag and zero right tag".into(),
            ));
        }
        Ok(ProblemSpec {
            alpha,
            b,
            t_final,
            m_bound,
            u0,
            n_nodes,
            n_steps,
        })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn time_grid(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| k as f64 * self.dt()).collect()
    }

    pub fn cylindrical_grid(&self) -> Grid {
        Grid::cylindrical(self.n_nodes).expect("validated at construction")
    }

    /// Default audit tolerance 10 * (h + dt) * max|u0| with the cylindrical
    /// spacing h; `factor` replaces the leading 10 when overridden.
    pub fn audit_tolerance(&self, factor: f64) -> f64 {
        let h = 1.0 / (self.n_nodes - 1) as f64;
        factor * (h + self.dt()) * self.u0.max_abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_front_is_valid() {
        let f = FrontPath::linear(1.0, 0.5, 1.0, 8, 1.0).unwrap();
        assert_eq!(f.len(), 9);
        assert!(!f.is_degenerate());
        assert!((f.final_position() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn speed_above_budget_is_rejected() {
        let err = FrontPath::linear(1.0, 1.5, 1.0, 8, 1.0).unwrap_err();
        match err {
            Error::FrontPathInvalid { .. } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn decreasing_position_is_rejected_with_index() {
        let times = vec![0.0, 0.5, 1.0];
        let s = vec![1.0, 1.2, 1.1];
        let s_dot = vec![0.4, 0.4, 0.4];
        match FrontPath::new(times, s, s_dot, 1.0) {
            Err(Error::FrontPathInvalid { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stalled_front_is_degenerate_not_invalid() {
        let f = FrontPath::linear(2.0, 0.0, 1.0, 4, 1.0).unwrap();
        assert!(f.is_degenerate());
    }
}
