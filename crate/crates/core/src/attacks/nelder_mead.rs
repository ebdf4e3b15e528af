//! Nelder-Mead simplex minimisation with dimension-adaptive coefficients.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop once the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ... and every vertex is within this (scaled) distance of the best.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 4000,
            f_tol: 1e-12,
            x_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexMinimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimises `f` starting from `x0`, with an initial simplex spanned by
/// `steps[i]` along each axis. Non-finite objective values are treated as +∞.
pub fn minimize<F>(mut f: F, x0: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> SimplexMinimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(steps.len(), n, "one step per coordinate");
    let nf = n.max(1) as f64;
    let (reflect, expand, contract, shrink) =
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    let scale: Vec<f64> = steps
        .iter()
        .map(|s| s.abs().max(f64::MIN_POSITIVE))
        .collect();
    let mut converged = false;

    while evals < opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread = (worst - best).abs();
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .zip(&scale)
                    .map(|((a, b), s)| ((a - b) / s).abs())
            })
            .fold(0.0, f64::max);
        if spread <= opts.f_tol * (1.0 + best.abs()) && size <= opts.x_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(reflect);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(reflect * expand);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(reflect * contract);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-contract);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for (v, b) in vertex.0.iter_mut().zip(&x_best) {
                *v = b + shrink * (*v - b);
            }
            vertex.1 = eval(&vertex.0, &mut evals);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    SimplexMinimum {
        x,
        f,
        evals,
        converged,
    }
}
