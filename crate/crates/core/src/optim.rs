//! Derivative-free minimizers: golden-section search on an interval and
//! Nelder-Mead simplex descent.

/// 1/phi
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Best point found by [`golden_section`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMinimum {
    pub x: f64,
    pub fx: f64,
    pub evaluations: usize,
}

/// Golden-section search for a minimum of `f` on `[a, b]`, shrinking the
/// bracket until its width is at most `tol`. Returns the best evaluated
/// point, which for a unimodal `f` lies inside the final bracket.
pub fn golden_section<F>(f: F, a: f64, b: f64, tol: f64) -> LineMinimum
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    let mut best = if fd < fc { (d, fd) } else { (c, fc) };
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc <= best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd < best.1 {
                best = (d, fd);
            }
        }
        evaluations += 1;
    }
    LineMinimum { x: best.0, fx: best.1, evaluations }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Converged once every vertex is within this max-norm distance of the best.
    pub diameter_tol: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { initial_step: 0.25, diameter_tol: 1e-8, max_iterations: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead with standard coefficients (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2). Non-finite objective values are treated as
/// `+inf`.
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if dim == 0 {
        return SimplexResult { x: Vec::new(), fx: eval(x0), iterations: 0, converged: true };
    }

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        let fv = eval(&v);
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < opts.diameter_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> =
            (0..dim).map(|j| simplex[..dim].iter().map(|(v, _)| v[j]).sum::<f64>() / dim as f64).collect();
        let worst = simplex[dim].clone();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < worst.1.min(fr) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let v: Vec<f64> = vertex.0.iter().zip(&best).map(|(x, b)| b + 0.5 * (x - b)).collect();
            let fv = eval(&v);
            *vertex = (v, fv);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    SimplexResult { x, fx, iterations, converged }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_parabola() {
        let m = golden_section(|x| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-8);
        assert!((m.x - 0.3).abs() < 1e-7);
        assert!((m.fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn golden_boundary_minimum() {
        let m = golden_section(|x| x, 0.2, 0.9, 1e-6);
        assert!((m.x - 0.2).abs() < 1e-6);
    }

    #[test]
    fn simplex_rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = SimplexOptions { max_iterations: 5000, ..Default::default() };
        let r = nelder_mead(rosen, &[-1.2, 1.0], &opts);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r);
    }

    #[test]
    fn simplex_budget() {
        let opts = SimplexOptions { max_iterations: 3, ..Default::default() };
        let r = nelder_mead(|x: &[f64]| x[0].powi(2) + x[1].powi(2), &[3.0, 4.0], &opts);
        assert_eq!(r.iterations, 3);
        assert!(!r.converged);
    }

    #[test]
    fn simplex_ignores_nan_region() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 2.0).powi(2) };
        let r = nelder_mead(f, &[0.1], &SimplexOptions::default());
        assert!((r.x[0] - 2.0).abs() < 1e-7);
    }
}
