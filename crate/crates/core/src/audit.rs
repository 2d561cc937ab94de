//! Checkable consequences of the well-posedness analysis: barrier
//! constants and their defining inequalities, sign structure of the front
//! flux, extremum and bound audits on computed trajectories, conservation,
//! and monotone dependence on the data.

use crate::error::{Error, Result};
use crate::fixed_front::Trajectory;
use crate::frac_ops::caputo_at_point_maxrep;
use crate::grid::{BcLeft, BcRight, Field, Grid};
use crate::problem::ProblemSpec;
use crate::stefan::{mass_balance_residual, solve_stefan_marching};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::function::gamma::gamma;

/// Where the worst violation of a check sits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Location {
    NodeTime { node: usize, time_index: usize },
    Parameter(String),
    Whole,
}

/// One audit outcome: a named check, its worst violation against the
/// tolerance it ran with, and where that violation occurred.
#[derive(Debug, Clone, Serialize)]
pub struct AuditCheck {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub location: Location,
}

impl AuditCheck {
    fn from_worst(name: &str, worst: f64, tolerance: f64, location: Location) -> Self {
        AuditCheck {
            name: name.to_string(),
            passed: worst <= tolerance,
            worst_violation: worst,
            tolerance,
            location,
        }
    }
}

/// Collection of audit outcomes from one suite run.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain text table, one row per check.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<28} {:<6} {:>13} {:>13}  location\n",
            "check", "status", "worst", "tolerance"
        ));
        for c in &self.checks {
            let loc = match &c.location {
                Location::NodeTime { node, time_index } => {
                    format!("node {node}, time {time_index}")
                }
                Location::Parameter(p) => p.clone(),
                Location::Whole => "-".to_string(),
            };
            out.push_str(&format!(
                "{:<28} {:<6} {:>13.4e} {:>13.4e}  {}\n",
                c.name,
                if c.passed { "pass" } else { "FAIL" },
                c.worst_violation,
                c.tolerance,
                loc
            ));
        }
        out
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange {
            value: alpha,
            range: "(0, 1)",
        });
    }
    Ok(())
}

/// The root-ratio constant of the barrier construction,
///
///   kappa(alpha) = (3 - sqrt(3) sqrt((1+alpha)/(3-alpha))) / (2 - alpha),
///
/// which is the ratio 2 delta_- / y of the smaller root of the barrier
/// quadratic to the half-window. Strictly above 1 on (0, 1), which is what
/// makes the window argument close.
pub fn kappa_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let root = (3.0f64 * (1.0 + alpha) / (3.0 - alpha)).sqrt();
    Ok((3.0 - root) / (2.0 - alpha))
}

/// Window margin omega(alpha, delta) = 2 delta (kappa - 1) / kappa: how
/// far inside the right edge the pointwise argument must stop.
pub fn omega_alpha_delta(alpha: f64, delta: f64) -> Result<f64> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::BarrierParamsInvalid(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let k = kappa_alpha(alpha)?;
    Ok(2.0 * delta * (k - 1.0) / k)
}

/// Smallest decay rate that closes the barrier inequality on the far
/// window: a* = (4 delta^2 / Gamma(2-alpha)) (2 delta - omega)^(1-alpha)
///             / (delta^2 - (delta - omega)^2)^2.
pub fn barrier_decay_threshold(alpha: f64, delta: f64) -> Result<f64> {
    let omega = omega_alpha_delta(alpha, delta)?;
    let denom = delta * delta - (delta - omega) * (delta - omega);
    Ok(4.0 * delta * delta / gamma(2.0 - alpha) * (2.0 * delta - omega).powf(1.0 - alpha)
        / (denom * denom))
}

/// Parameters of the decaying bump barrier used in the no-stall argument.
#[derive(Debug, Clone, Copy)]
pub struct BarrierParams {
    pub alpha: f64,
    pub delta: f64,
    pub x1: f64,
    /// Positive amplitude of the decaying prefactor. It multiplies the
    /// whole expression, so nonnegativity is decided by the bracket alone.
    pub epsilon_amp: f64,
    /// Decay rate; must reach the threshold for the inequality to close.
    pub decay: f64,
}

impl BarrierParams {
    pub fn new(alpha: f64, delta: f64, x1: f64, epsilon_amp: f64, decay: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(delta > 0.0 && x1 > 0.0 && x1 + 2.0 * delta < 1.0) {
            return Err(Error::BarrierParamsInvalid(format!(
                "window [x1, x1 + 2 delta] = [{x1}, {}] must sit inside (0, 1)",
                x1 + 2.0 * delta
            )));
        }
        if !(epsilon_amp > 0.0) {
            return Err(Error::BarrierParamsInvalid(format!(
                "amplitude must be positive, got {epsilon_amp}"
            )));
        }
        let threshold = barrier_decay_threshold(alpha, delta)?;
        if decay < threshold * (1.0 - 1e-12) {
            return Err(Error::BarrierParamsInvalid(format!(
                "decay {decay} below the closing threshold {threshold}"
            )));
        }
        Ok(BarrierParams {
            alpha,
            delta,
            x1,
            epsilon_amp,
            decay,
        })
    }
}

/// Exact kernel moments of the inner integral of the barrier expression:
///
///   int_0^y (y-q)^(-alpha) (q - delta)^2 dq
///     = 2 y^(3-alpha) / ((1-alpha)(2-alpha)(3-alpha))
///     - 2 delta y^(2-alpha) / ((1-alpha)(2-alpha))
///     + delta^2 y^(1-alpha) / (1-alpha),
///
/// the quadratic integrand integrated against the kernel in closed form.
pub fn barrier_inner_integral(alpha: f64, delta: f64, y: f64) -> f64 {
    let a1 = 1.0 - alpha;
    let a2 = 2.0 - alpha;
    let a3 = 3.0 - alpha;
    2.0 * y.powf(a3) / (a1 * a2 * a3) - 2.0 * delta * y.powf(a2) / (a1 * a2)
        + delta * delta * y.powf(a1) / a1
}

/// The bracket of the barrier inequality at offset y = x - x1:
///
///   a [delta^2 - (y - delta)^2]^2
///   + (4/Gamma(1-alpha)) [ 3 I(y) - delta^2 y^(1-alpha) / (1-alpha) ],
///
/// with I the inner integral above. Nonnegative on (0, 2 delta] once the
/// decay rate reaches its threshold.
pub fn barrier_expression(params: &BarrierParams, y: f64) -> f64 {
    let alpha = params.alpha;
    let delta = params.delta;
    // delta^2 - (y - delta)^2 = y (2 delta - y), exact at both endpoints
    let hump = y * (2.0 * delta - y);
    let inner = barrier_inner_integral(alpha, delta, y);
    let tail = delta * delta * y.powf(1.0 - alpha) / (1.0 - alpha);
    params.decay * hump * hump + 4.0 / gamma(1.0 - alpha) * (3.0 * inner - tail)
}

/// Minimum of the barrier bracket over n_eval uniform offsets in
/// (0, 2 delta]. The left endpoint is excluded: the bracket vanishes there
/// identically.
pub fn barrier_expression_min(params: &BarrierParams, n_eval: usize) -> Result<f64> {
    if n_eval < 2 {
        return Err(Error::BarrierParamsInvalid(format!(
            "need at least 2 evaluation points, got {n_eval}"
        )));
    }
    let width = 2.0 * params.delta;
    let mut min = f64::INFINITY;
    for j in 1..=n_eval {
        let y = width * j as f64 / n_eval as f64;
        min = min.min(barrier_expression(params, y));
    }
    Ok(min)
}

/// Space-time minimum check: the interior minimum of a trajectory must be
/// attained on the parabolic boundary (initial level, the axis, the front)
/// up to tol, and nonnegative data must stay above -tol everywhere.
pub fn audit_extremum_principle(traj: &Trajectory, tol: f64) -> AuditCheck {
    let n = traj.snapshot(0).len();
    let kmax = traj.n_times();

    let mut boundary_min = f64::INFINITY;
    for i in 0..n {
        boundary_min = boundary_min.min(traj.snapshot(0).value(i));
    }
    for k in 0..kmax {
        boundary_min = boundary_min.min(traj.snapshot(k).value(0));
        boundary_min = boundary_min.min(traj.snapshot(k).value(n - 1));
    }

    let mut interior_min = f64::INFINITY;
    let mut interior_loc = Location::Whole;
    for k in 1..kmax {
        for i in 1..n - 1 {
            let v = traj.snapshot(k).value(i);
            if v < interior_min {
                interior_min = v;
                interior_loc = Location::NodeTime {
                    node: i,
                    time_index: k,
                };
            }
        }
    }

    let principle_gap = (boundary_min - interior_min).max(0.0);
    let negative_dip = (-interior_min.min(boundary_min)).max(0.0);
    let worst = principle_gap.max(negative_dip);
    AuditCheck::from_worst("extremum_principle", worst, tol, interior_loc)
}

/// Front-flux window and pointwise cone bound along a trajectory:
/// -M - tol <= (D^alpha u)(s(t), t) <= tol at every level, strictly below
/// -tol once one step has elapsed when the data is well above the
/// tolerance scale, and u <= M Gamma(2-alpha) s^(alpha-1) (s - x) + tol
/// at every node and level.
pub fn audit_flux_and_bounds(traj: &Trajectory, spec: &ProblemSpec, tol: f64) -> AuditCheck {
    let n = traj.snapshot(0).len();
    let m = spec.m_bound;
    let m0 = m * gamma(2.0 - spec.alpha);
    let mut worst = 0.0f64;
    let mut loc = Location::Whole;
    let strict_active = spec.u0.max_abs() >= 10.0 * tol;

    for k in 0..traj.n_times() {
        let flux = traj.front_flux(k);
        let mut here = (flux - tol).max(-m - tol - flux).max(0.0);
        if strict_active && k >= 1 {
            here = here.max(flux + tol);
        }
        if here > worst {
            worst = here;
            loc = Location::NodeTime {
                node: n - 1,
                time_index: k,
            };
        }
        let s = traj.front().position(k);
        let cone = m0 * s.powf(spec.alpha);
        let grid = traj.snapshot(k).grid().clone();
        for i in 0..n {
            let bound = cone * (1.0 - grid.node(i));
            let excess = traj.snapshot(k).value(i) - bound - tol;
            if excess > worst {
                worst = excess;
                loc = Location::NodeTime {
                    node: i,
                    time_index: k,
                };
            }
        }
    }
    AuditCheck {
        name: "flux_and_bounds".into(),
        passed: worst <= 0.0,
        worst_violation: worst,
        tolerance: tol,
        location: loc,
    }
}

/// Conservation audit: the mass-balance residual must stay below
/// tol_factor * (h + dt) * (b + |u0|_1).
pub fn audit_mass_balance(traj: &Trajectory, tol_factor: f64) -> AuditCheck {
    let residual = mass_balance_residual(traj);
    let b = traj.front().position(0);
    let u0_l1 = traj.physical_snapshot(0).trapezoid();
    let n = traj.snapshot(0).len();
    let h = 1.0 / (n - 1) as f64;
    let dt = traj.times()[1] - traj.times()[0];
    let tol = tol_factor * (h + dt) * (b + u0_l1);
    let (worst_k, worst) = residual
        .iter()
        .enumerate()
        .map(|(k, r)| (k, r.abs()))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    AuditCheck::from_worst(
        "mass_balance",
        worst,
        tol,
        Location::NodeTime {
            node: 0,
            time_index: worst_k,
        },
    )
}

/// Monotone dependence on the data: with b1 <= b2 and zero-extended
/// u0_1 <= u0_2 (same alpha, M, time grid), the computed fronts must obey
/// s1 <= s2 + C (h + dt) with C = c_factor * (b2 + M T). Both runs use the
/// marching scheme. The data ordering is verified up front by linear
/// interpolation of the smaller-domain data.
pub fn audit_monotone_dependence(
    spec1: &ProblemSpec,
    spec2: &ProblemSpec,
    c_factor: f64,
) -> Result<AuditCheck> {
    if spec1.alpha != spec2.alpha
        || spec1.m_bound != spec2.m_bound
        || spec1.t_final != spec2.t_final
        || spec1.n_steps != spec2.n_steps
    {
        return Err(Error::OrderingViolated(
            "runs must share alpha, M, t_final, and the time grid".into(),
        ));
    }
    if spec1.b > spec2.b {
        return Err(Error::OrderingViolated(format!(
            "need b1 <= b2, got {} > {}",
            spec1.b, spec2.b
        )));
    }
    let g1 = spec1.u0.grid();
    let sample_u1 = |x: f64| -> f64 {
        if x >= spec1.b {
            return 0.0;
        }
        let h = g1.spacing();
        let cell = ((x / h).floor() as usize).min(g1.n_nodes() - 2);
        let w = (x - g1.node(cell)) / h;
        spec1.u0.value(cell) * (1.0 - w) + spec1.u0.value(cell + 1) * w
    };
    let slack = 1e-10 * (1.0 + spec1.u0.max_abs() + spec2.u0.max_abs());
    for i in 0..spec2.u0.len() {
        let x = spec2.u0.grid().node(i);
        if sample_u1(x) > spec2.u0.value(i) + slack {
            return Err(Error::OrderingViolated(format!(
                "u0 ordering fails at x = {x}: {} > {}",
                sample_u1(x),
                spec2.u0.value(i)
            )));
        }
    }

    let t1 = solve_stefan_marching(spec1)?;
    let t2 = solve_stefan_marching(spec2)?;
    let h = 1.0 / (spec2.n_nodes - 1) as f64;
    let tol = c_factor * (spec2.b + spec2.m_bound * spec2.t_final) * (h + spec2.dt());
    let mut worst = 0.0f64;
    let mut worst_k = 0usize;
    for k in 0..t1.n_times() {
        let gap = t1.front().position(k) - t2.front().position(k);
        if gap > worst {
            worst = gap;
            worst_k = k;
        }
    }
    Ok(AuditCheck::from_worst(
        "monotone_dependence",
        worst,
        tol,
        Location::NodeTime {
            node: 0,
            time_index: worst_k,
        },
    ))
}

/// Barrier-constant audit: kappa stays strictly above 1 across the alpha
/// range, and the closed form matches the smaller quadratic root computed
/// independently at seeded random (alpha, y) draws.
pub fn audit_barrier_constants(seed: u64) -> AuditCheck {
    let tol = 1e-12;
    let mut worst = 0.0f64;
    let mut loc = Location::Whole;
    for i in 1..=19 {
        let alpha = 0.05 * i as f64;
        let k = kappa_alpha(alpha).expect("alpha grid is valid");
        let gap = (1.0 + 1e-12 - k).max(0.0);
        if gap > worst {
            worst = gap;
            loc = Location::Parameter(format!("alpha={alpha:.2}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for draw in 0..20 {
        let alpha: f64 = rng.gen_range(0.02..0.98);
        let y: f64 = rng.gen_range(0.01..2.0);
        // smaller root of d^2 - 3 y d/(2-a) + 3 y^2/((2-a)(3-a)) = 0
        let p = 3.0 * y / (2.0 - alpha);
        let q = 3.0 * y * y / ((2.0 - alpha) * (3.0 - alpha));
        let disc = (p * p - 4.0 * q).sqrt();
        let root_small = 2.0 * q / (p + disc);
        let k = kappa_alpha(alpha).unwrap();
        let mismatch = (2.0 * root_small / y - k).abs();
        if mismatch > worst {
            worst = mismatch;
            loc = Location::Parameter(format!("draw {draw}: alpha={alpha:.4}, y={y:.4}"));
        }
    }
    AuditCheck::from_worst("barrier_constants", worst, tol, loc)
}

/// Barrier-inequality audit: at the threshold decay rate the bracket stays
/// nonnegative over the window for a grid of (alpha, delta) pairs,
/// measured relative to the bracket's own scale a delta^4.
pub fn audit_barrier_positivity(n_eval: usize) -> AuditCheck {
    let tol = 1e-8;
    let mut worst = 0.0f64;
    let mut loc = Location::Whole;
    for &alpha in &[0.25, 0.5, 0.75] {
        for &delta in &[0.05, 0.1] {
            let a = barrier_decay_threshold(alpha, delta).unwrap();
            let params = BarrierParams::new(alpha, delta, 0.2, 1.0, a).unwrap();
            let min = barrier_expression_min(&params, n_eval).unwrap();
            let scale = a * delta.powi(4);
            let viol = (-min / scale).max(0.0);
            if viol > worst {
                worst = viol;
                loc = Location::Parameter(format!("alpha={alpha}, delta={delta}"));
            }
        }
    }
    AuditCheck::from_worst("barrier_positivity", worst, tol, loc)
}

/// Sign audit of the nonlocal representation: random smooth fields that
/// attain their running maximum at the probe node must produce a
/// nonnegative Caputo value there, strictly positive when the field
/// actually varies. The quadrature weights behind the representation are
/// nonnegative, so failures would point at the assembly, not roundoff.
pub fn audit_front_flux_sign(seed: u64) -> AuditCheck {
    let n = 65;
    let grid = Grid::cylindrical(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut loc = Location::Whole;
    let tol = 0.0;
    for case in 0..200 {
        let alpha: f64 = rng.gen_range(0.15..0.85);
        let i0: usize = rng.gen_range(n / 4..n);
        let c0: f64 = rng.gen_range(-1.0..1.0);
        let (a0, a1, a2): (f64, f64, f64) = (
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let x0 = grid.node(i0);
        let f = Field::from_fn(
            grid.clone(),
            |x| {
                let q = a0 + a1 * (3.0 * x).sin() + a2 * (5.0 * x).cos();
                c0 - (x0 - x).max(0.0) * q * q
            },
            BcLeft::Free,
            BcRight::Free,
        );
        let value = caputo_at_point_maxrep(&f, i0, alpha).unwrap();
        let osc = (0..=i0)
            .map(|j| c0 - f.value(j))
            .fold(0.0f64, f64::max);
        let viol = if osc > 1e-8 {
            // must be strictly positive for genuinely varying fields
            if value > 0.0 {
                0.0
            } else {
                -value + f64::MIN_POSITIVE
            }
        } else {
            (-value).max(0.0)
        };
        if viol > worst {
            worst = viol;
            loc = Location::Parameter(format!("case {case}: alpha={alpha:.4}, node {i0}"));
        }
    }
    AuditCheck::from_worst("front_flux_sign", worst, tol, loc)
}
