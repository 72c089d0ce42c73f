//! Nelder-Mead simplex minimizer (Lagarias et al. variant, standard
//! coefficients).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop once every vertex is within this distance of the best one
    /// (per coordinate)...
    pub x_tolerance: f64,
    /// ...and every vertex value is within this fraction of the best value.
    pub f_tolerance: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            x_tolerance: 1e-8,
            f_tolerance: 1e-10,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect()
}

/// Minimizes `f` from the simplex spanned by `x0` and `x0 + step_k e_k`.
///
/// NaN objective values are treated as `+inf`, so the simplex retreats from
/// regions where the objective is undefined.
pub fn minimize<F>(mut f: F, x0: &[f64], step: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    assert_eq!(dim, step.len(), "step must match the dimension of x0");
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        sanitize(f(x))
    };

    let mut simplex = Vec::with_capacity(dim + 1);
    simplex.push(Vertex {
        x: x0.to_vec(),
        f: eval(x0),
    });
    for k in 0..dim {
        let mut x = x0.to_vec();
        x[k] += step[k];
        let fx = eval(&x);
        simplex.push(Vertex { x, f: fx });
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        // stable sort keeps the earlier vertex first on ties
        simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
        if has_converged(&simplex, opts) {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let worst = dim;
        let mut centroid = vec![0.0; dim];
        for v in &simplex[..dim] {
            for (c, xi) in centroid.iter_mut().zip(&v.x) {
                *c += xi / dim as f64;
            }
        }

        let xr = affine(&centroid, &simplex[worst].x, -opts.reflection);
        let fr = eval(&xr);

        if fr < simplex[0].f {
            let xe = affine(
                &centroid,
                &simplex[worst].x,
                -opts.reflection * opts.expansion,
            );
            let fe = eval(&xe);
            simplex[worst] = if fe < fr {
                Vertex { x: xe, f: fe }
            } else {
                Vertex { x: xr, f: fr }
            };
            continue;
        }
        if fr < simplex[dim - 1].f {
            simplex[worst] = Vertex { x: xr, f: fr };
            continue;
        }

        let accepted = if fr < simplex[worst].f {
            let xc = affine(&centroid, &xr, opts.contraction);
            let fc = eval(&xc);
            (fc <= fr).then_some(Vertex { x: xc, f: fc })
        } else {
            let xcc = affine(&centroid, &simplex[worst].x, opts.contraction);
            let fcc = eval(&xcc);
            (fcc < simplex[worst].f).then_some(Vertex { x: xcc, f: fcc })
        };
        match accepted {
            Some(v) => simplex[worst] = v,
            None => {
                let best = simplex[0].x.clone();
                for v in simplex.iter_mut().skip(1) {
                    v.x = affine(&best, &v.x, opts.shrink);
                    v.f = eval(&v.x);
                }
            }
        }
    }

    let best = simplex.swap_remove(0);
    SimplexResult {
        x: best.x,
        f: best.f,
        iterations,
        evaluations,
        converged,
    }
}

fn has_converged(simplex: &[Vertex], opts: &SimplexOptions) -> bool {
    let best = &simplex[0];
    let x_spread = simplex[1..]
        .iter()
        .flat_map(|v| v.x.iter().zip(&best.x).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    let f_spread = simplex[1..]
        .iter()
        .map(|v| (v.f - best.f).abs())
        .fold(0.0, f64::max);
    x_spread <= opts.x_tolerance && f_spread <= opts.f_tolerance * best.f.abs()
        || (f_spread == 0.0 && x_spread <= opts.x_tolerance)
}
