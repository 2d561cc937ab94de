//! Free-boundary solvers: the integral front-update map, its damped
//! fixed-point iteration, and a direct explicit-front marching scheme.

use crate::error::{Error, Result};
use crate::fixed_front::{
    admit_initial_condition, solve_given_front, OperatorAssembly, Trajectory,
};
use crate::frac_ops::caputo_at_right_end;
use crate::grid::Field;
use crate::problem::{FrontPath, ProblemSpec};
use crate::transform::{stefan_speed_from_cylindrical, to_cylindrical};
use serde::Serialize;
use std::time::Instant;

/// Result of one application of the front-update map.
#[derive(Debug, Clone)]
pub struct FrontUpdate {
    /// The updated front: positions are the mass integral of the clamped
    /// speeds, so the result is always an admissible path.
    pub front: FrontPath,
    /// How many speed samples had to be clamped into [floor, M].
    pub clamp_count: usize,
    /// The fixed-front solve along the input path that produced the
    /// speeds.
    pub trajectory: Trajectory,
}

/// The front-update map: solve the field along the candidate front, read
/// the flux speed g(t) = -(D^alpha u)(s(t), t) at every time level, clamp
/// it into [speed floor, M], and integrate by the trapezoid rule from
/// s(0) = b. Clamping keeps the output inside the admissible class; events
/// are counted so a fixed point reached only by force can be rejected.
pub fn apply_front_update(front: &FrontPath, spec: &ProblemSpec) -> Result<FrontUpdate> {
    let trajectory = solve_given_front(spec, front)?;
    let n = trajectory.n_times();
    let mut speeds = Vec::with_capacity(n);
    let mut clamp_count = 0usize;
    for k in 0..n {
        let raw = -trajectory.front_flux(k);
        let clamped = raw.clamp(FrontPath::SPEED_FLOOR, spec.m_bound);
        if clamped != raw {
            clamp_count += 1;
        }
        speeds.push(clamped);
    }
    let times = trajectory.times().to_vec();
    let mut s = Vec::with_capacity(n);
    s.push(spec.b);
    for k in 0..n - 1 {
        let dt = times[k + 1] - times[k];
        s.push(s[k] + 0.5 * dt * (speeds[k] + speeds[k + 1]));
    }
    let front = FrontPath::new(times, s, speeds, spec.m_bound)?;
    Ok(FrontUpdate {
        front,
        clamp_count,
        trajectory,
    })
}

/// Damped fixed-point iteration settings.
#[derive(Debug, Clone, Copy)]
pub struct FixedPointConfig {
    pub max_iters: usize,
    /// Convergence target for sup_t |update(s) - s|.
    pub tol_sup: f64,
    /// Damping weight on the update, in (0, 1].
    pub relaxation: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            max_iters: 50,
            tol_sup: 1e-6,
            relaxation: 0.5,
        }
    }
}

impl FixedPointConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::SpecInvalid("max_iters must be at least 1".into()));
        }
        if !(self.tol_sup.is_finite() && self.tol_sup > 0.0) {
            return Err(Error::SpecInvalid(format!(
                "tol_sup must be positive, got {}",
                self.tol_sup
            )));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::SpecInvalid(format!(
                "relaxation must lie in (0, 1], got {}",
                self.relaxation
            )));
        }
        Ok(())
    }
}

/// One line of the fixed-point iteration log.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub sup_residual: f64,
    pub clamp_count: usize,
    pub wall_seconds: f64,
}

/// Converged free-boundary solution with its iteration history.
#[derive(Debug, Clone)]
pub struct PicardSolution {
    pub trajectory: Trajectory,
    pub log: Vec<IterationRecord>,
}

fn blend_fronts(
    current: &FrontPath,
    update: &FrontPath,
    relaxation: f64,
    m_bound: f64,
) -> Result<FrontPath> {
    let n = current.len();
    let mut s = Vec::with_capacity(n);
    let mut s_dot = Vec::with_capacity(n);
    for k in 0..n {
        s.push((1.0 - relaxation) * current.position(k) + relaxation * update.position(k));
        s_dot.push((1.0 - relaxation) * current.speed(k) + relaxation * update.speed(k));
    }
    FrontPath::new(current.times().to_vec(), s, s_dot, m_bound)
}

/// Constructive fixed-point solve of the free-boundary problem: start from
/// a straight front with the initial flux speed and damp the front-update
/// map until sup_t |update(s) - s| falls under tol. A run that meets the
/// residual target while clamping is still active is rejected as
/// unresolved. Identically zero data is rejected up front.
pub fn solve_stefan_picard(spec: &ProblemSpec, cfg: &FixedPointConfig) -> Result<PicardSolution> {
    cfg.validate()?;
    let admitted = admit_initial_condition(spec)?;
    if admitted.trivial {
        return Err(Error::TrivialData);
    }

    let h_phys = spec.u0.grid().spacing();
    let flux0 = caputo_at_right_end(spec.u0.values().as_slice(), h_phys, spec.alpha)?;
    let slope = (-flux0).clamp(FrontPath::SPEED_FLOOR, spec.m_bound);
    let mut front = FrontPath::linear(spec.b, slope, spec.t_final, spec.n_steps, spec.m_bound)?;

    let started = Instant::now();
    let mut log: Vec<IterationRecord> = Vec::new();
    for k in 0..cfg.max_iters {
        let update = apply_front_update(&front, spec)?;
        let residual = front
            .positions()
            .iter()
            .zip(update.front.positions())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        log.push(IterationRecord {
            k,
            sup_residual: residual,
            clamp_count: update.clamp_count,
            wall_seconds: started.elapsed().as_secs_f64(),
        });
        if residual <= cfg.tol_sup {
            if update.clamp_count > 0 {
                return Err(Error::PicardStalled {
                    iters: k + 1,
                    tol: cfg.tol_sup,
                    tail: vec![residual],
                });
            }
            let trajectory = solve_given_front(spec, &update.front)?;
            return Ok(PicardSolution { trajectory, log });
        }
        front = blend_fronts(&front, &update.front, cfg.relaxation, spec.m_bound)?;
    }
    let tail: Vec<f64> = log
        .iter()
        .rev()
        .take(5)
        .map(|r| r.sup_residual)
        .collect();
    Err(Error::PicardStalled {
        iters: cfg.max_iters,
        tol: cfg.tol_sup,
        tail,
    })
}

/// Direct marching scheme: read the speed off the current state, advance
/// the front explicitly, then take the implicit field step on the moved
/// domain. Speeds below -tol abort; the stored path uses speeds clamped
/// into [0, M] so it stays admissible, and zero data marches a constant
/// front flagged as degenerate.
pub fn solve_stefan_marching(spec: &ProblemSpec) -> Result<Trajectory> {
    let admitted = admit_initial_condition(spec)?;
    let asm = OperatorAssembly::new(spec.alpha, spec.n_nodes)?;
    let tol = spec.audit_tolerance(10.0);
    let times = spec.time_grid();
    let dt = spec.dt();

    let mut snapshots = Vec::with_capacity(spec.n_steps + 1);
    snapshots.push(to_cylindrical(&admitted.field, spec.b)?);
    let mut s = Vec::with_capacity(spec.n_steps + 1);
    s.push(spec.b);
    let mut speeds = Vec::with_capacity(spec.n_steps + 1);

    for k in 0..spec.n_steps {
        let raw = stefan_speed_from_cylindrical(&snapshots[k], s[k], spec.alpha)?;
        if raw < -tol {
            return Err(Error::NegativeFrontSpeed {
                time_index: k,
                speed: raw,
                tol,
            });
        }
        let speed = raw.clamp(0.0, spec.m_bound);
        speeds.push(speed);
        let s_next = s[k] + dt * speed;
        let stepped = crate::fixed_front::step_fixed_front(
            &snapshots[k],
            s_next,
            speed,
            dt,
            &asm,
        )
        .map_err(|e| match e {
            Error::LinearSolveFailed { cond_estimate, .. } => Error::LinearSolveFailed {
                time_index: k + 1,
                cond_estimate,
            },
            other => other,
        })?;
        s.push(s_next);
        snapshots.push(stepped);
    }
    let last_raw =
        stefan_speed_from_cylindrical(&snapshots[spec.n_steps], s[spec.n_steps], spec.alpha)?;
    speeds.push(last_raw.clamp(0.0, spec.m_bound));

    let front = FrontPath::new(times.clone(), s, speeds, spec.m_bound)?;
    Ok(Trajectory::new(
        spec.alpha,
        times,
        snapshots,
        front,
        admitted.trivial,
    ))
}

/// Discrete conservation defect r(t) = [s(t) + int_0^s(t) u dx] -
/// [b + int_0^b u0 dx], one value per time level, trapezoid in space.
/// By construction r(0) = 0 exactly.
pub fn mass_balance_residual(traj: &Trajectory) -> Vec<f64> {
    let baseline = traj.front().position(0) + traj.physical_snapshot(0).trapezoid();
    (0..traj.n_times())
        .map(|k| traj.front().position(k) + traj.physical_snapshot(k).trapezoid() - baseline)
        .collect()
}

/// Convenience: total trapezoid mass of a physical field. Used by callers
/// reporting conservation summaries.
pub fn physical_mass(u: &Field) -> f64 {
    u.trapezoid()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed_front::{
        barrier_initial_condition, quartic_initial_condition, quartic_max_amplitude,
    };
    use crate::grid::{BcLeft, BcRight, Grid};

    fn quartic_spec(alpha: f64, n: usize, steps: usize) -> ProblemSpec {
        let amp = 0.5 * quartic_max_amplitude(alpha, 1.0, 1.0);
        let u0 = quartic_initial_condition(n, 1.0, amp).unwrap();
        ProblemSpec::new(alpha, 1.0, 0.5, 1.0, u0, steps).unwrap()
    }

    #[test]
    fn front_update_on_barrier_data_starts_at_speed_m() {
        // Extremal cone data meets the flux law with speed exactly M at
        // t = 0, so the updated front leaves b at slope M + O(h).
        let alpha = 0.4;
        let u0 = barrier_initial_condition(129, 1.0, alpha, 1.0).unwrap();
        let spec = ProblemSpec::new(alpha, 1.0, 0.25, 1.0, u0, 32).unwrap();
        let trial = FrontPath::linear(1.0, 0.9, 0.25, 32, 1.0).unwrap();
        let update = apply_front_update(&trial, &spec).unwrap();
        let s0_slope = update.front.speed(0);
        assert!(
            (s0_slope - 1.0).abs() < 0.02,
            "initial update speed {s0_slope} should be M + O(h)"
        );
    }

    #[test]
    fn front_update_of_zero_data_is_constant() {
        let grid = Grid::physical(65, 1.0).unwrap();
        let u0 = Field::new(
            grid,
            vec![0.0; 65],
            BcLeft::NeumannZero,
            BcRight::DirichletZero,
        )
        .unwrap();
        let spec = ProblemSpec::new(0.5, 1.0, 0.5, 1.0, u0, 64).unwrap();
        let trial = FrontPath::linear(1.0, 0.5, 0.5, 64, 1.0).unwrap();
        let update = apply_front_update(&trial, &spec).unwrap();
        assert!(update.front.is_degenerate());
        let drift = (update.front.final_position() - 1.0).abs();
        assert!(drift <= 1e-11, "front moved {drift}");
    }

    #[test]
    fn picard_rejects_zero_data() {
        let grid = Grid::physical(65, 1.0).unwrap();
        let u0 = Field::new(
            grid,
            vec![0.0; 65],
            BcLeft::NeumannZero,
            BcRight::DirichletZero,
        )
        .unwrap();
        let spec = ProblemSpec::new(0.5, 1.0, 0.5, 1.0, u0, 64).unwrap();
        match solve_stefan_picard(&spec, &FixedPointConfig::default()) {
            Err(Error::TrivialData) => {}
            other => panic!("expected trivial-data rejection, got {other:?}"),
        }
    }

    #[test]
    fn picard_converges_and_is_a_fixed_point() {
        let spec = quartic_spec(0.5, 65, 64);
        let cfg = FixedPointConfig::default();
        let sol = solve_stefan_picard(&spec, &cfg).unwrap();
        assert!(sol.log.len() < cfg.max_iters);
        // residual at the returned front is below target
        let update = apply_front_update(sol.trajectory.front(), &spec).unwrap();
        let residual = sol
            .trajectory
            .front()
            .positions()
            .iter()
            .zip(update.front.positions())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(
            residual <= 2.0 * cfg.tol_sup,
            "returned front is not a fixed point: residual {residual:.3e}"
        );
        // residual history is monotted downward overall
        let first = sol.log.first().unwrap().sup_residual;
        let last = sol.log.last().unwrap().sup_residual;
        assert!(last < first);
    }

    #[test]
    fn marching_front_grows_and_respects_the_budget() {
        let spec = quartic_spec(0.5, 65, 64);
        let traj = solve_stefan_marching(&spec).unwrap();
        let front = traj.front();
        assert!(!front.is_degenerate());
        assert!(front.final_position() > spec.b);
        for k in 0..front.len() {
            assert!(front.speed(k) <= spec.m_bound + 1e-12);
        }
    }

    #[test]
    fn marching_zero_data_stays_put() {
        let grid = Grid::physical(65, 1.0).unwrap();
        let u0 = Field::new(
            grid,
            vec![0.0; 65],
            BcLeft::NeumannZero,
            BcRight::DirichletZero,
        )
        .unwrap();
        let spec = ProblemSpec::new(0.5, 1.0, 0.5, 1.0, u0, 64).unwrap();
        let traj = solve_stefan_marching(&spec).unwrap();
        assert!(traj.trivial());
        assert!(traj.front().is_degenerate());
        assert_eq!(traj.front().final_position(), 1.0);
        assert_eq!(traj.snapshot(64).max_abs(), 0.0);
    }

    #[test]
    fn mass_residual_starts_at_exact_zero() {
        let spec = quartic_spec(0.5, 65, 64);
        let traj = solve_stefan_marching(&spec).unwrap();
        let r = mass_balance_residual(&traj);
        assert_eq!(r[0], 0.0);
        assert_eq!(r.len(), 65);
    }
}
