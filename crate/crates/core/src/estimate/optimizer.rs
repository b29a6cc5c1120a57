//! Derivative-free simplex search and quasi-Newton minimisation.
//!
//! Both minimise; non-finite objective values are treated as `+∞`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct OptimOutcome<T> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub evaluations: usize,
    /// Finite evaluations at points other than the starting point.
    pub finite_evaluations: usize,
    pub converged: bool,
    /// Best point and value after each iteration.
    pub trace: Vec<(Vec<T>, T)>,
}

#[derive(Clone, Debug)]
pub struct NelderMeadOptions<T> {
    pub max_iter: usize,
    /// Stop when the simplex's value spread is below `tol` relative.
    pub tol: T,
    pub initial_step: T,
    /// Extra simplex rebuilds at the incumbent after convergence.
    pub restarts: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for NelderMeadOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: T::lit(1e-8),
            initial_step: T::lit(0.25),
            restarts: 2,
            seed: 0,
        }
    }
}

fn sanitize<T: Scalar>(v: T) -> T {
    if v.is_finite() {
        v
    } else {
        T::infinity()
    }
}

fn rel_gap<T: Scalar>(a: T, b: T, tol: T) -> bool {
    (a - b).abs() <= tol * (a.abs() + b.abs() + tol) * T::lit(0.5)
}

/// Nelder–Mead with standard coefficients (1, 2, ½, ½) and restarts.
pub fn nelder_mead<T, F>(mut f: F, x0: &[T], opts: &NelderMeadOptions<T>) -> OptimOutcome<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut finite_evaluations = 0usize;
    let mut eval = |x: &[T]| {
        evaluations += 1;
        let v = sanitize(f(x));
        if v.is_finite() && x != x0 {
            finite_evaluations += 1;
        }
        v
    };
    let mut best_x = x0.to_vec();
    let mut best_f = eval(x0);
    let mut trace = Vec::new();
    let mut iterations = 0usize;
    let mut converged = false;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    if n == 0 {
        return OptimOutcome {
            x: best_x,
            value: best_f,
            iterations: 0,
            evaluations,
            finite_evaluations,
            converged: true,
            trace,
        };
    }

    let (alpha, gamma, rho, shrink) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    for round in 0..=opts.restarts {
        let start_f = best_f;
        // Simplex around the incumbent; restarts jitter the step sizes.
        let mut simplex: Vec<(Vec<T>, T)> = vec![(best_x.clone(), best_f)];
        for i in 0..n {
            let jitter = if round == 0 {
                T::one()
            } else {
                T::lit(rng.random_range(0.5..1.5))
            };
            let mut x = best_x.clone();
            let step = opts.initial_step * jitter * best_x[i].abs().max(T::one());
            x[i] += step;
            let fx = eval(&x);
            simplex.push((x, fx));
        }
        let mut round_converged = false;
        while iterations < opts.max_iter {
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
            let (lo, hi) = (simplex[0].1, simplex[n].1);
            if lo.is_finite() && hi.is_finite() && rel_gap(lo, hi, opts.tol) {
                round_converged = true;
                break;
            }
            iterations += 1;
            let mut centroid = vec![T::zero(); n];
            for (x, _) in &simplex[..n] {
                for (c, &xi) in centroid.iter_mut().zip(x) {
                    *c += xi;
                }
            }
            let inv = T::one() / T::from_usize_lossy(n);
            centroid.iter_mut().for_each(|c| *c *= inv);
            let worst = simplex[n].0.clone();
            let along = |t: T| -> Vec<T> {
                centroid
                    .iter()
                    .zip(&worst)
                    .map(|(&c, &w)| c + t * (c - w))
                    .collect()
            };
            let xr = along(alpha);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = along(gamma);
                let fe = eval(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < simplex[n].1 {
                    let xc = along(rho);
                    let fc = eval(&xc);
                    (xc, fc)
                } else {
                    let xc = along(-rho);
                    let fc = eval(&xc);
                    (xc, fc)
                };
                if fc < simplex[n].1.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    let x_best = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let xs: Vec<T> = x_best
                            .iter()
                            .zip(&vertex.0)
                            .map(|(&b, &v)| b + shrink * (v - b))
                            .collect();
                        let fs = eval(&xs);
                        *vertex = (xs, fs);
                    }
                }
            }
            let incumbent = simplex
                .iter()
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap();
            if incumbent.1 < best_f {
                best_f = incumbent.1;
                best_x = incumbent.0.clone();
            }
            trace.push((best_x.clone(), best_f));
        }
        for (x, fx) in &simplex {
            if *fx < best_f {
                best_f = *fx;
                best_x = x.clone();
            }
        }
        converged = round_converged;
        if !round_converged || (round > 0 && rel_gap(start_f, best_f, opts.tol)) {
            break;
        }
    }

    OptimOutcome {
        x: best_x,
        value: best_f,
        iterations,
        evaluations,
        finite_evaluations,
        converged,
        trace,
    }
}

#[derive(Clone, Debug)]
pub struct BfgsOptions<T> {
    pub max_iter: usize,
    pub tol: T,
    /// Relative finite-difference step.
    pub fd_step: T,
}

impl<T: Scalar> Default for BfgsOptions<T> {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: T::lit(1e-8),
            fd_step: T::lit(1e-5),
        }
    }
}

/// Central-difference gradient; coordinates are evaluated in parallel.
pub fn fd_gradient<T, F>(f: &F, x: &[T], rel_step: T) -> Vec<T>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    (0..x.len())
        .into_par_iter()
        .map(|i| {
            let h = rel_step * x[i].abs().max(T::one());
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (sanitize(f(&xp)) - sanitize(f(&xm))) / (h + h)
        })
        .collect()
}

/// BFGS with finite-difference gradients and backtracking line search.
pub fn bfgs<T, F>(f: F, x0: &[T], opts: &BfgsOptions<T>) -> OptimOutcome<T>
where
    T: Scalar,
    F: Fn(&[T]) -> T + Sync,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = sanitize(f(&x));
    let mut evaluations = 1usize;
    let mut finite_evaluations = 0usize;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0usize;
    if n == 0 || !fx.is_finite() {
        return OptimOutcome {
            x,
            value: fx,
            iterations,
            evaluations,
            finite_evaluations,
            converged: n == 0,
            trace,
        };
    }
    let mut h_inv = crate::linalg::Matrix::<T>::identity(n);
    let mut g = fd_gradient(&f, &x, opts.fd_step);
    evaluations += 2 * n;
    while iterations < opts.max_iter {
        iterations += 1;
        if g.iter().any(|v| !v.is_finite()) {
            break;
        }
        let mut dir: Vec<T> = h_inv.mul_vec(&g).into_iter().map(|v| -v).collect();
        let mut slope = crate::linalg::dot(&g, &dir);
        if !(slope < T::zero()) {
            h_inv = crate::linalg::Matrix::identity(n);
            dir = g.iter().map(|&v| -v).collect();
            slope = crate::linalg::dot(&g, &dir);
        }
        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<T> = x.iter().zip(&dir).map(|(&a, &d)| a + step * d).collect();
            let fnew = sanitize(f(&xn));
            evaluations += 1;
            if fnew.is_finite() {
                finite_evaluations += 1;
            }
            if fnew <= fx + T::lit(1e-4) * step * slope {
                accepted = Some((xn, fnew));
                break;
            }
            step *= T::lit(0.5);
        }
        let Some((xn, fnew)) = accepted else {
            converged = g.iter().all(|v| v.abs() < T::lit(1e-4));
            break;
        };
        let gn = fd_gradient(&f, &xn, opts.fd_step);
        evaluations += 2 * n;
        let s: Vec<T> = xn.iter().zip(&x).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = gn.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = crate::linalg::dot(&s, &y);
        if sy > T::epsilon() {
            let rho = T::one() / sy;
            let hy = h_inv.mul_vec(&y);
            let yhy = crate::linalg::dot(&y, &hy);
            let mut next = h_inv.clone();
            for i in 0..n {
                for j in 0..n {
                    next[(i, j)] += (T::one() + yhy * rho) * rho * s[i] * s[j]
                        - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
            next.symmetrize();
            h_inv = next;
        }
        let done = rel_gap(fx, fnew, opts.tol);
        x = xn;
        fx = fnew;
        g = gn;
        trace.push((x.clone(), fx));
        if done {
            converged = true;
            break;
        }
    }
    OptimOutcome {
        x,
        value: fx,
        iterations,
        evaluations,
        finite_evaluations,
        converged,
        trace,
    }
}
