//! Self-contained classical Stefan marcher used as the limiting reference:
//! heat equation on the melted region, front speed equal to minus the
//! boundary gradient. Front fixing onto [0, 1] gives
//!
//!   v_t = (s_dot / s) p v_p + s^-2 v_pp,   v_p(0) = 0,  v(1) = 0,
//!   s_dot = -v_p(1) / s.
//!
//! The discretization is assembled here from scratch (tridiagonal second
//! difference, one-sided boundary gradient), sharing no operator code with
//! the fractional solver, so the two solvers can be played against each
//! other near the limiting order.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct ClassicalRun {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    /// Cylindrical field at the final time.
    pub final_field: Vec<f64>,
}

/// Marches the classical one-phase problem from the nodal data `u0` on
/// [0, b]. Speeds are clamped to [0, m_bound] exactly like the fractional
/// marcher, so the comparison isolates the flux law.
pub fn solve_classical_marching(
    u0: &[f64],
    b: f64,
    t_final: f64,
    m_bound: f64,
    n_steps: usize,
) -> Result<ClassicalRun, String> {
    let n = u0.len();
    if n < 3 {
        return Err(format!("need at least 3 nodes, got {n}"));
    }
    if !(b > 0.0 && t_final > 0.0 && m_bound > 0.0) {
        return Err("b, t_final, m_bound must be positive".into());
    }
    let h = 1.0 / (n - 1) as f64;
    let dt = t_final / n_steps as f64;

    let mut v = DVector::from_column_slice(u0);
    let mut s = b;
    let mut times = vec![0.0];
    let mut fronts = vec![b];

    let boundary_gradient = |v: &DVector<f64>| (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);

    for k in 0..n_steps {
        let speed = (-boundary_gradient(&v) / s).clamp(0.0, m_bound);
        let s_next = s + dt * speed;

        let mut sys = DMatrix::zeros(n, n);
        let diff = dt / (s_next * s_next * h * h);
        let drift = dt * speed / s_next / h;
        for i in 1..n - 1 {
            let p = i as f64 * h;
            sys[(i, i - 1)] = -diff;
            sys[(i, i)] = 1.0 + 2.0 * diff + drift * p;
            sys[(i, i + 1)] = -diff - drift * p;
        }
        sys[(0, 0)] = -1.5 / h;
        sys[(0, 1)] = 2.0 / h;
        sys[(0, 2)] = -0.5 / h;
        sys[(n - 1, n - 1)] = 1.0;

        let mut rhs = v.clone();
        rhs[0] = 0.0;
        rhs[n - 1] = 0.0;

        v = sys
            .lu()
            .solve(&rhs)
            .ok_or_else(|| format!("classical step {} failed to solve", k + 1))?;
        v[n - 1] = 0.0;
        s = s_next;
        times.push((k + 1) as f64 * dt);
        fronts.push(s);
    }

    Ok(ClassicalRun {
        times,
        s: fronts,
        final_field: v.as_slice().to_vec(),
    })
}
