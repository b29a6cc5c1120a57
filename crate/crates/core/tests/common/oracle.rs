//! Dense joint-Gaussian conditioning for small state-space systems.
//!
//! Writes every state as a linear map of the prior state and the shocks,
//! stacks the observations, and conditions with one dense solve. No
//! recursion is shared with the filter under test.

use nalgebra::{DMatrix, DVector};
use nowcast::kalman::Observations;
use nowcast::model::StateSpaceSystem;

pub struct Moments {
    pub mean: Vec<DVector<f64>>,
    pub cov: Vec<DMatrix<f64>>,
}

pub struct Oracle {
    n: usize,
    len: usize,
    mean_x: DVector<f64>,
    cov_x: DMatrix<f64>,
    /// Observed `(day, z, intercept, noise_var, value)` in day order.
    obs: Vec<(usize, DVector<f64>, f64, f64, f64)>,
}

fn dense(m: &nowcast::linalg::Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

impl Oracle {
    pub fn new(sys: &StateSpaceSystem<f64>, y: &Observations<f64>) -> Self {
        let n = sys.dim();
        let len = sys.len();
        // x_t = Phi(t) x_{-1} + sum_j Phi(t, j) eta_j
        let m = n * (len + 1);
        let mut a = DMatrix::<f64>::zeros(n * len, m);
        let mut cov_s = DMatrix::<f64>::zeros(m, m);
        let mut mean_s = DVector::<f64>::zeros(m);
        cov_s.view_mut((0, 0), (n, n)).copy_from(&dense(sys.init_cov()));
        mean_s.rows_mut(0, n).copy_from_slice(sys.init_mean());
        for t in 0..len {
            cov_s
                .view_mut((n * (t + 1), n * (t + 1)), (n, n))
                .copy_from(&dense(sys.shock_cov(t)));
        }
        for t in 0..len {
            let tr = dense(sys.transition(t));
            for j in 0..=t {
                // column block j holds x_{-1} (j = 0) or eta_{j-1}
                let prev = if t == 0 {
                    if j == 0 {
                        DMatrix::identity(n, n)
                    } else {
                        unreachable!()
                    }
                } else {
                    a.view((n * (t - 1), n * j), (n, n)).clone_owned()
                };
                let block = &tr * prev;
                a.view_mut((n * t, n * j), (n, n)).copy_from(&block);
            }
            a.view_mut((n * t, n * (t + 1)), (n, n)).copy_from(&DMatrix::identity(n, n));
        }
        let mean_x = &a * &mean_s;
        let cov_x = &a * &cov_s * a.transpose();

        let mut obs = Vec::new();
        for t in 0..len {
            for &(slot, value) in y.day(t) {
                let row = sys
                    .rows(t)
                    .iter()
                    .find(|r| r.slot == slot)
                    .expect("observation for a declared slot");
                obs.push((t, DVector::from_column_slice(&row.loading), row.intercept, row.noise_var, value));
            }
        }
        Self {
            n,
            len,
            mean_x,
            cov_x,
            obs,
        }
    }

    /// Stacked observation loadings for the first `k` observations.
    fn z(&self, k: usize) -> DMatrix<f64> {
        let mut z = DMatrix::zeros(k, self.n * self.len);
        for (i, (t, load, ..)) in self.obs[..k].iter().enumerate() {
            for j in 0..self.n {
                z[(i, self.n * t + j)] = load[j];
            }
        }
        z
    }

    fn count_through(&self, day: Option<usize>) -> usize {
        match day {
            None => 0,
            Some(d) => self.obs.iter().take_while(|o| o.0 <= d).count(),
        }
    }

    /// Joint posterior of all states given the first `k` observations.
    fn posterior(&self, k: usize) -> (DVector<f64>, DMatrix<f64>) {
        if k == 0 {
            return (self.mean_x.clone(), self.cov_x.clone());
        }
        let z = self.z(k);
        let h = DMatrix::from_diagonal(&DVector::from_iterator(k, self.obs[..k].iter().map(|o| o.3)));
        let c = DVector::from_iterator(k, self.obs[..k].iter().map(|o| o.2));
        let y = DVector::from_iterator(k, self.obs[..k].iter().map(|o| o.4));
        let sxy = &self.cov_x * z.transpose();
        let syy = &z * &sxy + h;
        let resid = y - (c + &z * &self.mean_x);
        let lu = syy.lu();
        let gain_t = lu.solve(&sxy.transpose()).expect("nonsingular observation covariance");
        let mean = &self.mean_x + gain_t.transpose() * resid;
        let cov = &self.cov_x - sxy * gain_t;
        (mean, cov)
    }

    fn block(&self, mean: &DVector<f64>, cov: &DMatrix<f64>, t: usize) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        (
            mean.rows(n * t, n).clone_owned(),
            cov.view((n * t, n * t), (n, n)).clone_owned(),
        )
    }

    /// `E[x_t | y_{<t}]`, `Var[x_t | y_{<t}]` for every day.
    pub fn predicted(&self) -> Moments {
        self.marginals(|t| t.checked_sub(1))
    }

    /// `E[x_t | y_{<=t}]`, `Var[x_t | y_{<=t}]` for every day.
    pub fn filtered(&self) -> Moments {
        self.marginals(Some)
    }

    fn marginals(&self, through: impl Fn(usize) -> Option<usize>) -> Moments {
        let mut out = Moments {
            mean: Vec::new(),
            cov: Vec::new(),
        };
        for t in 0..self.len {
            let (m, c) = self.posterior(self.count_through(through(t)));
            let (bm, bc) = self.block(&m, &c, t);
            out.mean.push(bm);
            out.cov.push(bc);
        }
        out
    }

    /// Moments given every observation.
    pub fn smoothed(&self) -> Moments {
        let (m, c) = self.posterior(self.obs.len());
        let mut out = Moments {
            mean: Vec::new(),
            cov: Vec::new(),
        };
        for t in 0..self.len {
            let (bm, bc) = self.block(&m, &c, t);
            out.mean.push(bm);
            out.cov.push(bc);
        }
        out
    }

    /// Log-density of the stacked observation vector.
    pub fn log_likelihood(&self) -> f64 {
        let k = self.obs.len();
        if k == 0 {
            return 0.0;
        }
        let z = self.z(k);
        let h = DMatrix::from_diagonal(&DVector::from_iterator(k, self.obs.iter().map(|o| o.3)));
        let c = DVector::from_iterator(k, self.obs.iter().map(|o| o.2));
        let y = DVector::from_iterator(k, self.obs.iter().map(|o| o.4));
        let syy = &z * &self.cov_x * z.transpose() + h;
        let resid = y - (c + &z * &self.mean_x);
        let chol = syy.cholesky().expect("positive definite observation covariance");
        let log_det: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
        let quad = resid.dot(&chol.solve(&resid));
        -0.5 * (k as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad)
    }
}

/// `|a - b| <= tol * max(1, scale)` elementwise, where `scale` is the largest
/// magnitude in the reference.
pub fn close_vec(a: &[f64], b: &DVector<f64>, tol: f64) -> Result<(), String> {
    let scale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    for (i, (x, y)) in a.iter().zip(b.iter()).enumerate() {
        if (x - y).abs() > tol * scale {
            return Err(format!("element {i}: {x} vs {y} (scale {scale})"));
        }
    }
    Ok(())
}

pub fn close_mat(a: &nowcast::linalg::Matrix<f64>, b: &DMatrix<f64>, tol: f64) -> Result<(), String> {
    let scale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            let (x, y) = (a[(i, j)], b[(i, j)]);
            if (x - y).abs() > tol * scale {
                return Err(format!("({i},{j}): {x} vs {y} (scale {scale})"));
            }
        }
    }
    Ok(())
}

pub fn close(a: f64, b: f64, tol: f64) -> Result<(), String> {
    if (a - b).abs() > tol * b.abs().max(1.0) {
        return Err(format!("{a} vs {b}"));
    }
    Ok(())
}

/// Random system: dimension 1..=6, length 1..=20, up to three measurement
/// slots per day with positive noise, and random missingness.
pub fn random_instance(seed: u64) -> (StateSpaceSystem<f64>, Observations<f64>) {
    use nowcast::linalg::Matrix;
    use nowcast::model::MeasurementRow;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=6usize);
    let len = rng.random_range(1..=20usize);
    let g = move |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
    let gram = |rng: &mut ChaCha8Rng, rank: usize, ridge: f64| {
        let b = Matrix::from_fn(n, rank, |_, _| g(rng));
        let mut m = b.matmul_t(&b);
        for i in 0..n {
            m[(i, i)] += ridge;
        }
        m
    };
    let init_mean: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let init_cov = gram(&mut rng, n, 0.1);
    let mut days = Vec::with_capacity(len);
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        let scale = 0.9 / (n as f64).sqrt();
        let t = Matrix::from_fn(n, n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
        let rank = rng.random_range(0..=n);
        let q = gram(&mut rng, rank, 0.0);
        let n_rows = rng.random_range(0..=3usize);
        let mut rows = Vec::new();
        let mut present = Vec::new();
        for slot in 0..n_rows {
            let loading: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            rows.push(MeasurementRow {
                slot,
                loading,
                intercept: rng.sample::<f64, _>(StandardNormal),
                noise_var: rng.random_range(0.05..2.0),
            });
            if rng.random_bool(0.6) {
                present.push((slot, 3.0 * rng.sample::<f64, _>(StandardNormal)));
            }
        }
        days.push((t, q, rows));
        values.push(present);
    }
    let sys = StateSpaceSystem::from_days(init_mean, init_cov, days).expect("consistent dimensions");
    (sys, Observations::from_days(values))
}

/// Compares filter and smoother output with the oracle at relative tolerance `tol`.
pub fn check_against_oracle(sys: &StateSpaceSystem<f64>, y: &Observations<f64>, tol: f64) -> Result<(), String> {
    let fr = nowcast::kalman::filter(sys, y).map_err(|e| e.to_string())?;
    let sm = nowcast::kalman::smooth(sys, &fr).map_err(|e| e.to_string())?;
    let oracle = Oracle::new(sys, y);
    let (pred, filt, smooth) = (oracle.predicted(), oracle.filtered(), oracle.smoothed());
    for t in 0..sys.len() {
        let at = |what: &str, r: Result<(), String>| r.map_err(|e| format!("day {t} {what}: {e}"));
        at("predicted mean", close_vec(&fr.predicted_mean[t], &pred.mean[t], tol))?;
        at("predicted cov", close_mat(&fr.predicted_cov[t], &pred.cov[t], tol))?;
        at("filtered mean", close_vec(&fr.filtered_mean[t], &filt.mean[t], tol))?;
        at("filtered cov", close_mat(&fr.filtered_cov[t], &filt.cov[t], tol))?;
        at("smoothed mean", close_vec(&sm.mean[t], &smooth.mean[t], tol))?;
        at("smoothed cov", close_mat(&sm.cov[t], &smooth.cov[t], tol))?;
    }
    close(fr.log_likelihood, oracle.log_likelihood(), tol).map_err(|e| format!("log-likelihood: {e}"))
}
