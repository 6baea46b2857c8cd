//! Box-constrained Nelder-Mead.
//!
//! Trial points are clamped into the box before evaluation, so the
//! objective is never evaluated outside it. Non-finite objective values
//! count as `+inf`.

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Initial simplex edge per coordinate.
    pub step: Vec<f64>,
    pub max_evals: usize,
    /// Stop once every vertex is within this (infinity-norm) distance of the
    /// best vertex.
    pub xtol: f64,
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub n_evals: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn clamp(x: &mut [f64], opts: &NelderMeadOptions) {
    for (k, v) in x.iter_mut().enumerate() {
        *v = v.clamp(opts.lower[k], opts.upper[k]);
    }
}

/// Minimises `f` starting from `x0`.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    assert!(opts.lower.len() == dim && opts.upper.len() == dim && opts.step.len() == dim);
    let mut n_evals = 0usize;
    let mut eval = |x: &[f64], n_evals: &mut usize| -> f64 {
        *n_evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    clamp(&mut start, opts);
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.clone());
    for k in 0..dim {
        let mut v = start.clone();
        v[k] += opts.step[k];
        if v[k] > opts.upper[k] {
            v[k] = start[k] - opts.step[k];
        }
        clamp(&mut v, opts);
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut n_evals)).collect();

    let mut converged = false;
    while n_evals < opts.max_evals {
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        values = idx.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < opts.xtol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; dim];
        for v in &simplex[..dim] {
            for k in 0..dim {
                centroid[k] += v[k] / dim as f64;
            }
        }
        let point = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..dim)
                .map(|k| centroid[k] + t * (simplex[dim][k] - centroid[k]))
                .collect();
            clamp(&mut p, opts);
            p
        };

        let xr = point(-REFLECT);
        let fr = eval(&xr, &mut n_evals);
        if fr < values[0] {
            let xe = point(-EXPAND);
            let fe = eval(&xe, &mut n_evals);
            if fe < fr {
                simplex[dim] = xe;
                values[dim] = fe;
            } else {
                simplex[dim] = xr;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = xr;
            values[dim] = fr;
            continue;
        }
        // outside contraction when the reflection improved on the worst vertex
        let xc = point(if fr < values[dim] { -CONTRACT } else { CONTRACT });
        let fc = eval(&xc, &mut n_evals);
        if fc < values[dim].min(fr) {
            simplex[dim] = xc;
            values[dim] = fc;
            continue;
        }
        for i in 1..=dim {
            let mut v: Vec<f64> = (0..dim)
                .map(|k| simplex[0][k] + SHRINK * (simplex[i][k] - simplex[0][k]))
                .collect();
            clamp(&mut v, opts);
            values[i] = eval(&v, &mut n_evals);
            simplex[i] = v;
        }
    }

    let best = (0..=dim).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    NelderMeadResult {
        x: simplex[best].clone(),
        fx: values[best],
        n_evals,
        converged,
    }
}
