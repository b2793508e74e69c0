//! Derivative-free simplex search (Nelder-Mead) in a few dimensions.

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Relative spread of objective values across the simplex.
    pub f_rel_tol: f64,
    /// Largest vertex distance from the best vertex.
    pub diameter_tol: f64,
    /// Objective spread treated as noise regardless of `f_best`.
    pub f_abs_tol: f64,
    pub max_iter: usize,
    /// Re-expansions around the converged point.
    pub max_restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            f_rel_tol: 1e-10,
            diameter_tol: 1e-8,
            f_abs_tol: 0.0,
            max_iter: 4000,
            max_restarts: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
}

/// Minimize `f` from `x0`.
///
/// Convergence requires both the objective spread to fall below
/// `f_rel_tol * |f_best|` (floored at `f_abs_tol` and at machine precision
/// of the starting value) and the simplex diameter to fall below `diameter_tol`.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexOutcome {
    let f0 = f(x0);
    let floor = (f64::EPSILON * f0.abs().max(f64::MIN_POSITIVE)).max(opts.f_abs_tol);
    let (mut x, mut fx, mut iterations, mut converged) =
        run(&f, x0, opts.initial_step, opts, floor, opts.max_iter);
    let mut restarts = 0;
    while converged && restarts < opts.max_restarts && iterations < opts.max_iter {
        restarts += 1;
        let (rx, rf, it, rc) = run(
            &f,
            &x,
            opts.initial_step * 0.1,
            opts,
            floor,
            opts.max_iter - iterations,
        );
        iterations += it;
        let improved = rf < fx - (opts.f_rel_tol * fx.abs() + floor);
        if rf <= fx {
            x = rx;
            fx = rf;
            converged = rc;
        }
        if !improved {
            break;
        }
    }
    SimplexOutcome {
        x,
        f: fx,
        iterations,
        restarts,
        converged,
    }
}

fn run<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    step: f64,
    opts: &SimplexOptions,
    floor: f64,
    budget: usize,
) -> (Vec<f64>, f64, usize, bool) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iter = 0;
    loop {
        // order vertices, ties broken by index for determinism
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[n];
        let diameter = simplex[1..]
            .iter()
            .map(|v| dist(v, &simplex[0]))
            .fold(0.0, f64::max);
        let spread = worst - best;
        if best.is_finite() && spread <= opts.f_rel_tol * best.abs() + floor && diameter < opts.diameter_tol {
            return (simplex[0].clone(), best, iter, true);
        }
        if iter >= budget {
            return (simplex[0].clone(), best, iter, false);
        }
        iter += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = along(gamma);
            let fe = f(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(rho);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = f(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            values[i] = f(&shrunk);
            simplex[i] = shrunk;
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
