//! Derivative-free local descent (Nelder–Mead) with restarts.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Stop when the spread of simplex values falls below this (absolute,
    /// scaled by max(1, |f_best|)).
    pub ftol: f64,
    /// ... and the simplex fits inside a ball of this radius.
    pub xtol: f64,
    pub max_evals: usize,
    /// Restart from the best vertex until a restart improves by less than
    /// `ftol`.
    pub max_restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            ftol: 1e-12,
            xtol: 1e-8,
            max_evals: 20_000,
            max_restarts: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimize `f` from `x0` with an axis-aligned initial simplex of edge
/// lengths `step`.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(step.len(), n);
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if step[i] != 0.0 { step[i] } else { 1e-3 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut converged = false;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    loop {
        // order vertices, best first
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= opts.ftol * values[0].abs().max(1.0) && diameter <= opts.xtol {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evals {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = &simplex[n];
        for k in 0..n {
            trial[k] = centroid[k] + REFLECT * (centroid[k] - worst[k]);
        }
        let f_reflect = eval(&trial);

        if f_reflect < values[0] {
            for k in 0..n {
                trial2[k] = centroid[k] + EXPAND * (trial[k] - centroid[k]);
            }
            let f_expand = eval(&trial2);
            if f_expand < f_reflect {
                simplex[n].copy_from_slice(&trial2);
                values[n] = f_expand;
            } else {
                simplex[n].copy_from_slice(&trial);
                values[n] = f_reflect;
            }
            continue;
        }
        if f_reflect < values[n - 1] {
            simplex[n].copy_from_slice(&trial);
            values[n] = f_reflect;
            continue;
        }
        // contraction, outside if the reflection helped at all
        let outside = f_reflect < values[n];
        for k in 0..n {
            trial2[k] = if outside {
                centroid[k] + CONTRACT * (trial[k] - centroid[k])
            } else {
                centroid[k] + CONTRACT * (simplex[n][k] - centroid[k])
            };
        }
        let f_contract = eval(&trial2);
        if f_contract < values[n].min(f_reflect) {
            simplex[n].copy_from_slice(&trial2);
            values[n] = f_contract;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            for k in 0..n {
                simplex[i][k] = best[k] + SHRINK * (simplex[i][k] - best[k]);
            }
            values[i] = eval(&simplex[i]);
        }
    }

    NelderMeadResult {
        x: simplex.swap_remove(0),
        fx: values[0],
        evals: evals.get(),
        converged,
    }
}

/// Nelder–Mead followed by restarts from the incumbent with a fresh simplex,
/// which guards against premature collapse in narrow valleys.
pub fn nelder_mead_restarting<F>(f: F, x0: &[f64], step: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64,
{
    let mut best = nelder_mead(&f, x0, step, opts);
    let mut total = best.evals;
    let mut restart_step: Vec<f64> = step.iter().map(|s| s.abs() * 0.1).collect();
    for _ in 0..opts.max_restarts {
        let budget = NelderMeadOptions {
            max_evals: opts.max_evals.saturating_sub(total).max(1),
            ..*opts
        };
        let next = nelder_mead(&f, &best.x, &restart_step, &budget);
        total += next.evals;
        let improvement = best.fx - next.fx;
        let moved = next
            .x
            .iter()
            .zip(&best.x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if next.fx <= best.fx {
            best = NelderMeadResult { evals: total, ..next };
        }
        if improvement <= opts.ftol * best.fx.abs().max(1.0) && moved <= opts.xtol {
            break;
        }
        restart_step.iter_mut().for_each(|s| *s *= 0.5);
        if total >= opts.max_evals {
            best.converged = false;
            break;
        }
    }
    best.evals = total;
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
        let r = nelder_mead(f, &[0.0, 0.0], &[0.5, 0.5], &NelderMeadOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-7);
        assert!((r.x[1] + 2.0).abs() < 1e-7);
    }

    #[test]
    fn rosenbrock_with_restarts() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let r = nelder_mead_restarting(f, &[-1.2, 1.0], &[0.3, 0.3], &NelderMeadOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6, "{:?}", r.x);
        assert!((r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let opts = NelderMeadOptions {
            max_evals: 20,
            ..Default::default()
        };
        let r = nelder_mead(f, &[-1.2, 1.0], &[0.3, 0.3], &opts);
        assert!(!r.converged);
    }
}
