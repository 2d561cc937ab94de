//! Product acceptance gate: twelve criteria spanning operator algebra,
//! refinement orders, barrier constants, solver audits, solver agreement,
//! the classical limit, and the convergence study. Each criterion prints a
//! single [PASS]/[FAIL] line; all failures are reported together at the end
//! so one regression never hides another.

use fracstefan::frac_ops::{assemble_caputo, semigroup_defect};
use fracstefan::{
    audit_barrier_constants, audit_extremum_principle, audit_flux_and_bounds, audit_mass_balance,
    audit_monotone_dependence, barrier_decay_threshold, barrier_expression_min,
    mass_balance_residual, quartic_initial_condition, quartic_max_amplitude,
    solve_stefan_marching, solve_stefan_picard, stefan_speed_from_cylindrical, BarrierParams,
    BcLeft, BcRight, Field, FixedPointConfig, Grid, ProblemSpec,
};
use fracstefan_cli::{execute_study, solve_classical_marching, CommandOptions};
use statrs::function::gamma::gamma;

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn new() -> Self {
        Gate {
            failures: Vec::new(),
        }
    }

    fn record(&mut self, idx: usize, label: &str, passed: bool, detail: String) {
        let verdict = if passed { "[PASS]" } else { "[FAIL]" };
        println!("{verdict} criterion {idx:2}: {label} ({detail})");
        if !passed {
            self.failures.push(format!("criterion {idx}: {label} ({detail})"));
        }
    }
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn sup_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Quartic free-boundary spec with amplitude given as a fraction of the
/// admissible maximum.
fn quartic_spec(alpha: f64, b: f64, frac: f64, n_nodes: usize, n_steps: usize) -> ProblemSpec {
    let amp = frac * quartic_max_amplitude(alpha, b, 1.0);
    let u0 = quartic_initial_condition(n_nodes, b, amp).unwrap();
    ProblemSpec::new(alpha, b, 0.5, 1.0, u0, n_steps).unwrap()
}

#[test]
fn acceptance() {
    let mut gate = Gate::new();
    let alphas = [0.25, 0.5, 0.75];

    // 1: the discrete derivative annihilates constants exactly and
    // reproduces affine data to closed form.
    {
        let g = Grid::cylindrical(129).unwrap();
        let mut const_worst = 0.0f64;
        let mut affine_worst = 0.0f64;
        for &alpha in &alphas {
            let k = assemble_caputo(alpha, &g).unwrap();
            for &c in &[1.0, -3.7, 0.1234567, 1e6] {
                let f = Field::from_fn(g.clone(), |_| c, BcLeft::Free, BcRight::Free);
                const_worst = const_worst.max(k.apply(&f).unwrap().amax());
            }
            let f = Field::from_fn(g.clone(), |x| 0.3 + 1.7 * x, BcLeft::Free, BcRight::Free);
            let out = k.apply(&f).unwrap();
            let scale = 1.7 / gamma(2.0 - alpha);
            let exact_max = scale; // attained at x = 1
            for (i, x) in g.nodes().enumerate() {
                let exact = scale * x.powf(1.0 - alpha);
                affine_worst = affine_worst.max((out[i] - exact).abs() / exact_max);
            }
        }
        gate.record(
            1,
            "constants annihilated, affine data exact",
            const_worst == 0.0 && affine_worst <= 1e-10,
            format!("const residual {const_worst:.1e}, affine rel err {affine_worst:.2e}"),
        );
    }

    // 2: refinement order for the quadratic power rule approaches 2 - alpha.
    {
        let sizes = [33usize, 65, 129, 257];
        let mut all_ok = true;
        let mut summary = String::new();
        println!("power-rule refinement, sup error over all nodes:");
        for &alpha in &alphas {
            let mut lh = Vec::new();
            let mut le = Vec::new();
            for &n in &sizes {
                let g = Grid::cylindrical(n).unwrap();
                let k = assemble_caputo(alpha, &g).unwrap();
                let f = Field::from_fn(g.clone(), |x| x * x, BcLeft::Free, BcRight::Free);
                let out = k.apply(&f).unwrap();
                let scale = 2.0 / gamma(3.0 - alpha);
                let mut err = 0.0f64;
                for (i, x) in g.nodes().enumerate() {
                    err = err.max((out[i] - scale * x.powf(2.0 - alpha)).abs());
                }
                lh.push((1.0 / (n - 1) as f64).ln());
                le.push(err.ln());
            }
            let order = least_squares_slope(&lh, &le);
            let target = 2.0 - alpha - 0.3;
            println!("  alpha={alpha:.2}: observed order {order:.3}, target {target:.3}");
            all_ok &= order >= target;
            summary.push_str(&format!("{order:.2}/"));
        }
        gate.record(
            2,
            "quadratic power rule converges at order near 2 - alpha",
            all_ok,
            format!("orders {} >= 2-alpha-0.3", summary.trim_end_matches('/')),
        );
    }

    // 3: the integral semigroup defect I^a I^b - I^(a+b) vanishes at first
    // order or better under refinement.
    {
        let mut all_ok = true;
        let mut summary = String::new();
        for &(a, b) in &[(0.3f64, 0.4f64), (0.5, 0.5), (0.2, 0.7)] {
            let mut defects = Vec::new();
            for &n in &[65usize, 129] {
                let g = Grid::cylindrical(n).unwrap();
                let f = Field::from_fn(g.clone(), |x| x * (1.0 - x), BcLeft::Free, BcRight::Free);
                defects.push(semigroup_defect(a, b, &g, &f).unwrap());
            }
            let order = (defects[0] / defects[1]).log2();
            all_ok &= order >= 1.0;
            summary.push_str(&format!("{order:.2}/"));
        }
        gate.record(
            3,
            "composition defect of the fractional integrals is first order",
            all_ok,
            format!("orders {} >= 1", summary.trim_end_matches('/')),
        );
    }

    // 4: the affine similarity profile drives the front at exactly the
    // speed bound, independent of scale and front position.
    {
        let g = Grid::cylindrical(129).unwrap();
        let mut worst = 0.0f64;
        for &alpha in &alphas {
            for &m in &[0.5f64, 1.0, 2.0] {
                for &s in &[1.0f64, 1.5] {
                    let amp = m * gamma(2.0 - alpha) * s.powf(alpha);
                    let v = Field::from_fn(
                        g.clone(),
                        |p| amp * (1.0 - p),
                        BcLeft::Free,
                        BcRight::DirichletZero,
                    );
                    let speed = stefan_speed_from_cylindrical(&v, s, alpha).unwrap();
                    worst = worst.max((speed - m).abs());
                }
            }
        }
        gate.record(
            4,
            "similarity profile reproduces the exact front speed",
            worst <= 1e-10,
            format!("max |speed - M| = {worst:.2e} <= 1e-10"),
        );
    }

    // 5: the no-stall constants: kappa_alpha stays above one across alpha
    // and the window width solves its defining quadratic.
    {
        let check = audit_barrier_constants(20260822);
        gate.record(
            5,
            "barrier constants exceed one and satisfy the root equation",
            check.passed,
            format!("worst violation {:.2e}", check.worst_violation),
        );
    }

    // 6: the barrier bracket is nonnegative over the whole window at the
    // threshold decay rate.
    {
        let mut worst_rel = f64::NEG_INFINITY;
        let mut all_ok = true;
        for &alpha in &alphas {
            for &delta in &[0.05f64, 0.1] {
                let a = barrier_decay_threshold(alpha, delta).unwrap();
                let params = BarrierParams::new(alpha, delta, 0.2, 1.0, a).unwrap();
                let min = barrier_expression_min(&params, 10_000).unwrap();
                let scale = a * delta.powi(4);
                all_ok &= min >= -1e-8 * scale;
                worst_rel = worst_rel.max(-min / scale);
            }
        }
        gate.record(
            6,
            "barrier expression stays nonnegative at the threshold rate",
            all_ok,
            format!("worst scaled dip {worst_rel:.2e} <= 1e-8 over 10^4 nodes"),
        );
    }

    // Shared free-boundary runs for criteria 7-9.
    let spec_129 = quartic_spec(0.5, 1.0, 0.5, 129, 128);
    let traj_129 = solve_stefan_marching(&spec_129).unwrap();

    // 7: marching solution obeys the extremum principle and the one-sided
    // flux law with bounds.
    {
        let tol = spec_129.audit_tolerance(10.0);
        let ex = audit_extremum_principle(&traj_129, tol);
        let fl = audit_flux_and_bounds(&traj_129, &spec_129, tol);
        gate.record(
            7,
            "free-boundary run passes extremum and flux audits",
            ex.passed && fl.passed,
            format!(
                "extremum worst {:.2e}, flux worst {:.2e}, tol {tol:.2e}",
                ex.worst_violation, fl.worst_violation
            ),
        );
    }

    // 8: conservation residual is small at (129,128) and shrinks on
    // refinement to (257,256).
    {
        let mass = audit_mass_balance(&traj_129, 10.0);
        let r_coarse = mass_balance_residual(&traj_129)
            .iter()
            .fold(0.0f64, |m, r| m.max(r.abs()));
        let spec_257 = quartic_spec(0.5, 1.0, 0.5, 257, 256);
        let traj_257 = solve_stefan_marching(&spec_257).unwrap();
        let r_fine = mass_balance_residual(&traj_257)
            .iter()
            .fold(0.0f64, |m, r| m.max(r.abs()));
        gate.record(
            8,
            "mass balance holds and tightens under refinement",
            mass.passed && r_fine * 1.5 <= r_coarse,
            format!(
                "residual {r_coarse:.2e} (tol {:.2e}), refined {r_fine:.2e}, ratio {:.2}",
                mass.tolerance,
                r_coarse / r_fine
            ),
        );
    }

    // 9: the damped fixed-point closure and explicit marching agree on the
    // front to discretization accuracy.
    {
        let cfg = FixedPointConfig::default();
        let picard = solve_stefan_picard(&spec_129, &cfg).unwrap();
        let gap = sup_gap(
            picard.trajectory.front().positions(),
            traj_129.front().positions(),
        );
        let h = 1.0 / 128.0;
        let dt = spec_129.dt();
        let bound = 5.0 * (h + dt) * (1.0 + 1.0 * 0.5);
        gate.record(
            9,
            "fixed-point and marching fronts agree",
            gap <= bound,
            format!("sup gap {gap:.2e} <= {bound:.2e}"),
        );
    }

    // 10: larger data yields a front that is no smaller, for nested
    // amplitudes and for nested slab depths.
    {
        let amp_pair = audit_monotone_dependence(
            &quartic_spec(0.5, 1.0, 0.4, 129, 128),
            &quartic_spec(0.5, 1.0, 0.8, 129, 128),
            10.0,
        )
        .unwrap();
        let amp = 0.4 * quartic_max_amplitude(0.5, 1.0, 1.0);
        let shallow = ProblemSpec::new(
            0.5,
            1.0,
            0.5,
            1.0,
            quartic_initial_condition(129, 1.0, amp).unwrap(),
            128,
        )
        .unwrap();
        let deep = ProblemSpec::new(
            0.5,
            1.1,
            0.5,
            1.0,
            quartic_initial_condition(129, 1.1, amp).unwrap(),
            128,
        )
        .unwrap();
        let depth_pair = audit_monotone_dependence(&shallow, &deep, 10.0).unwrap();
        gate.record(
            10,
            "front depends monotonically on the data",
            amp_pair.passed && depth_pair.passed,
            format!(
                "amplitude pair worst {:.2e}, depth pair worst {:.2e}",
                amp_pair.worst_violation, depth_pair.worst_violation
            ),
        );
    }

    // 11: near alpha = 1 the fractional front tracks an independently
    // assembled classical solver on the same data.
    {
        let alpha = 0.99;
        let amp = 0.5 * quartic_max_amplitude(alpha, 1.0, 1.0);
        let u0 = quartic_initial_condition(129, 1.0, amp).unwrap();
        let spec = ProblemSpec::new(alpha, 1.0, 0.5, 1.0, u0.clone(), 128).unwrap();
        let frac = solve_stefan_marching(&spec).unwrap();
        let classical =
            solve_classical_marching(u0.values().as_slice(), 1.0, 0.5, 1.0, 128).unwrap();
        let s_f = frac.front().final_position();
        let s_c = *classical.s.last().unwrap();
        let gap = (s_f - s_c).abs() / s_c;
        gate.record(
            11,
            "alpha -> 1 front matches the classical solver",
            gap <= 0.05,
            format!("s_frac {s_f:.6}, s_classical {s_c:.6}, rel gap {gap:.2e} <= 5e-2"),
        );
    }

    // 12: the convergence study reports positive observed orders for both
    // the fixed-front field and the marching front.
    {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("study.cfg");
        std::fs::write(&cfg_path, "alpha = 0.5\nmode = stefan_marching\n").unwrap();
        let out_dir = dir.path().join("out");
        let opts = CommandOptions {
            config_path: &cfg_path,
            out_dir: &out_dir,
            seed: 0,
            strict_audits: false,
        };
        let summary = execute_study(&opts).unwrap();
        let mut all_ok = !summary.rows.is_empty();
        let mut detail = String::new();
        for row in &summary.rows {
            all_ok &= row.observed_order >= 0.8;
            detail.push_str(&format!("{} {:.3}, ", row.observable, row.observed_order));
        }
        gate.record(
            12,
            "refinement study shows convergent orders",
            all_ok,
            format!("orders {}all >= 0.8", detail),
        );
    }

    assert!(
        gate.failures.is_empty(),
        "acceptance failures:\n  {}",
        gate.failures.join("\n  ")
    );
}
