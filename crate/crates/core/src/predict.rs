//! Trajectory prediction with weighted ε-SVR and a cubic baseline.
//!
//! Each coordinate is regressed on time with an RBF-kernel ε-SVR. Recent
//! samples carry larger weights, which scale their box bound `wᵢ·C`. The
//! dual is solved exactly (to a KKT tolerance) with pairwise SMO and
//! second-order working-set selection.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PredictError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("solver did not converge after {iterations} iterations (KKT residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    #[serde(rename = "C")]
    pub c: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self { c: 1000.0, epsilon: 0.01, gamma: 1.0 }
    }
}

impl SvrParams {
    pub fn new(c: f64, epsilon: f64, gamma: f64) -> Self {
        Self { c, epsilon, gamma }
    }

    pub fn validate(&self) -> Result<(), PredictError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(PredictError::InvalidParams(format!("C = {} must be positive", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(PredictError::InvalidParams(format!("epsilon = {} must be non-negative", self.epsilon)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(PredictError::InvalidParams(format!("gamma = {} must be positive", self.gamma)));
        }
        Ok(())
    }

    pub fn kernel(&self, a: f64, b: f64) -> f64 {
        (-self.gamma * (a - b) * (a - b)).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Stop when the maximal KKT violation falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 5_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub support_inputs: Vec<f64>,
    /// `αᵢ − αᵢ*` per support input.
    pub dual_coeffs: Vec<f64>,
    pub bias: f64,
    pub params: SvrParams,
}

/// Full dual solution alongside the compact model.
#[derive(Clone, Debug, PartialEq)]
pub struct SvrSolution {
    pub model: SvrModel,
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub iterations: usize,
}

impl SvrSolution {
    pub fn coefficients(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.alpha_star).map(|(a, s)| a - s).collect()
    }
}

fn check_data(inputs: &[f64], targets: &[f64], weights: &[f64]) -> Result<(), PredictError> {
    let n = inputs.len();
    if n < 2 {
        return Err(PredictError::InsufficientData(format!("{n} samples, need at least 2")));
    }
    if targets.len() != n || weights.len() != n {
        return Err(PredictError::InvalidParams(format!(
            "length mismatch: {n} inputs, {} targets, {} weights",
            targets.len(),
            weights.len()
        )));
    }
    if inputs.iter().chain(targets).any(|v| !v.is_finite()) {
        return Err(PredictError::InvalidParams("non-finite input or target".into()));
    }
    if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(PredictError::InvalidParams("weights must be positive".into()));
    }
    Ok(())
}

fn kernel_matrix(inputs: &[f64], params: &SvrParams) -> Vec<Vec<f64>> {
    inputs.iter().map(|&a| inputs.iter().map(|&b| params.kernel(a, b)).collect()).collect()
}

/// Weighted ε-SVR fit with default solver options.
pub fn svr_fit(inputs: &[f64], targets: &[f64], weights: &[f64], params: SvrParams) -> Result<SvrModel, PredictError> {
    svr_fit_with(inputs, targets, weights, params, SolverOptions::default()).map(|s| s.model)
}

/// Solves `min ½βᵀQβ + pᵀβ, sᵀβ = 0, 0 ≤ β ≤ wC` over `β = [α; α*]`.
pub fn svr_fit_with(
    inputs: &[f64],
    targets: &[f64],
    weights: &[f64],
    params: SvrParams,
    opts: SolverOptions,
) -> Result<SvrSolution, PredictError> {
    params.validate()?;
    check_data(inputs, targets, weights)?;
    let n = inputs.len();
    let l = 2 * n;
    let k = kernel_matrix(inputs, &params);
    let kk = |i: usize, j: usize| k[i % n][j % n];
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let bound = |t: usize| weights[t % n] * params.c;

    let mut beta = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| if t < n { params.epsilon - targets[t] } else { params.epsilon + targets[t - n] })
        .collect();
    const TAU: f64 = 1e-12;

    let at_upper = |b: &[f64], t: usize| b[t] >= bound(t);
    let at_lower = |b: &[f64], t: usize| b[t] <= 0.0;

    let mut iterations = 0;
    loop {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            let v = -sign(t) * grad[t];
            let up = if sign(t) > 0.0 { !at_upper(&beta, t) } else { !at_lower(&beta, t) };
            if up && v >= gmax {
                gmax = v;
                i_sel = Some(t);
            }
        }
        // j: second-order choice in I_low
        let mut gmin = f64::INFINITY;
        let mut j_sel = None;
        let mut best_obj = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..l {
                let low = if sign(t) > 0.0 { !at_lower(&beta, t) } else { !at_upper(&beta, t) };
                if !low {
                    continue;
                }
                let v = -sign(t) * grad[t];
                gmin = gmin.min(v);
                let diff = gmax - v;
                if diff > 0.0 {
                    let quad = kk(i, i) + kk(t, t) - 2.0 * kk(i, t);
                    let quad = if quad > 0.0 { quad } else { TAU };
                    let obj = -(diff * diff) / quad;
                    if obj <= best_obj {
                        best_obj = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let residual = gmax - gmin;
        let (Some(i), Some(j)) = (i_sel, j_sel) else { break };
        if residual < opts.tol {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(PredictError::Convergence { iterations, residual });
        }
        iterations += 1;

        let (ci, cj) = (bound(i), bound(j));
        let (old_i, old_j) = (beta[i], beta[j]);
        let qij = sign(i) * sign(j) * kk(i, j);
        if sign(i) != sign(j) {
            let quad = kk(i, i) + kk(j, j) + 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > 0.0 {
                if beta[j] < 0.0 {
                    beta[j] = 0.0;
                    beta[i] = diff;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = -diff;
            }
            if diff > ci - cj {
                if beta[i] > ci {
                    beta[i] = ci;
                    beta[j] = ci - diff;
                }
            } else if beta[j] > cj {
                beta[j] = cj;
                beta[i] = cj + diff;
            }
        } else {
            let quad = kk(i, i) + kk(j, j) - 2.0 * qij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > ci {
                if beta[i] > ci {
                    beta[i] = ci;
                    beta[j] = sum - ci;
                }
            } else if beta[j] < 0.0 {
                beta[j] = 0.0;
                beta[i] = sum;
            }
            if sum > cj {
                if beta[j] > cj {
                    beta[j] = cj;
                    beta[i] = sum - cj;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = sum;
            }
        }
        let (di, dj) = (beta[i] - old_i, beta[j] - old_j);
        for t in 0..l {
            grad[t] += sign(t) * (sign(i) * kk(i, t) * di + sign(j) * kk(j, t) * dj);
        }
    }

    // bias: average over free variables, else midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..l {
        let yg = sign(t) * grad[t];
        if at_upper(&beta, t) {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower(&beta, t) {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };

    let alpha = beta[..n].to_vec();
    let alpha_star = beta[n..].to_vec();
    let (support_inputs, dual_coeffs) = (0..n)
        .filter_map(|t| {
            let c = alpha[t] - alpha_star[t];
            (c != 0.0).then_some((inputs[t], c))
        })
        .unzip();
    Ok(SvrSolution {
        model: SvrModel { support_inputs, dual_coeffs, bias: -rho, params },
        alpha,
        alpha_star,
        iterations,
    })
}

/// `Σ coeffᵢ k(sᵢ, t) + b`.
pub fn svr_predict(model: &SvrModel, t: f64) -> f64 {
    model
        .support_inputs
        .iter()
        .zip(&model.dual_coeffs)
        .map(|(&s, &c)| c * model.params.kernel(s, t))
        .sum::<f64>()
        + model.bias
}

/// Dual objective in minimization form: `½βᵀKβ − yᵀβ + εΣ(α + α*)`, `β = α − α*`.
pub fn svr_dual_objective(inputs: &[f64], targets: &[f64], params: &SvrParams, alpha: &[f64], alpha_star: &[f64]) -> f64 {
    let beta: Vec<f64> = alpha.iter().zip(alpha_star).map(|(a, s)| a - s).collect();
    let quad = quadratic_form(inputs, params, &beta);
    let lin: f64 = targets.iter().zip(&beta).map(|(y, b)| y * b).sum();
    let reg: f64 = alpha.iter().chain(alpha_star).sum();
    0.5 * quad - lin + params.epsilon * reg
}

fn quadratic_form(inputs: &[f64], params: &SvrParams, beta: &[f64]) -> f64 {
    let mut q = 0.0;
    for (i, &a) in inputs.iter().enumerate() {
        for (j, &b) in inputs.iter().enumerate() {
            q += beta[i] * beta[j] * params.kernel(a, b);
        }
    }
    q
}

/// Primal objective `½‖ω‖² + Σ wᵢC·max(0, |yᵢ − f(xᵢ)| − ε)` of a model.
pub fn svr_primal_objective(inputs: &[f64], targets: &[f64], weights: &[f64], sol: &SvrSolution) -> f64 {
    let p = &sol.model.params;
    let beta = sol.coefficients();
    let norm = quadratic_form(inputs, p, &beta);
    let slack: f64 = inputs
        .iter()
        .zip(targets)
        .zip(weights)
        .map(|((&x, &y), &w)| w * p.c * ((y - svr_predict(&sol.model, x)).abs() - p.epsilon).max(0.0))
        .sum();
    0.5 * norm + slack
}

/// Primal minus dual (maximization form); non-negative up to rounding.
pub fn svr_duality_gap(inputs: &[f64], targets: &[f64], weights: &[f64], sol: &SvrSolution) -> f64 {
    svr_primal_objective(inputs, targets, weights, sol)
        + svr_dual_objective(inputs, targets, &sol.model.params, &sol.alpha, &sol.alpha_star)
}

/// Least-squares cubic, coefficients in ascending powers `[c₀, c₁, c₂, c₃]`.
pub fn polyfit3(inputs: &[f64], targets: &[f64]) -> Result<[f64; 4], PredictError> {
    let n = inputs.len();
    if n < 4 {
        return Err(PredictError::InsufficientData(format!("{n} samples, a cubic needs at least 4")));
    }
    if targets.len() != n {
        return Err(PredictError::InvalidParams("length mismatch".into()));
    }
    let row = |t: f64| [1.0, t, t * t, t * t * t];
    let mut scale = [0.0f64; 4];
    for &t in inputs {
        for (s, v) in scale.iter_mut().zip(row(t)) {
            *s += v * v;
        }
    }
    let scale = scale.map(|s| if s > 0.0 { s.sqrt() } else { 1.0 });
    let mut a = Matrix4::<f64>::zeros();
    let mut b = Vector4::<f64>::zeros();
    for (&t, &y) in inputs.iter().zip(targets) {
        let r = row(t);
        for i in 0..4 {
            let ri = r[i] / scale[i];
            b[i] += ri * y;
            for j in 0..4 {
                a[(i, j)] += ri * r[j] / scale[j];
            }
        }
    }
    let lu = a.lu();
    let mut z = lu
        .solve(&b)
        .ok_or_else(|| PredictError::InsufficientData("inputs do not determine a cubic".into()))?;
    // one step of iterative refinement
    if let Some(dz) = lu.solve(&(b - a * z)) {
        z += dz;
    }
    Ok([z[0] / scale[0], z[1] / scale[1], z[2] / scale[2], z[3] / scale[3]])
}

pub fn polyval3(c: &[f64; 4], t: f64) -> f64 {
    ((c[3] * t + c[2]) * t + c[1]) * t + c[0]
}

/// Timestamped positions with recency weights `exp((tᵢ − t_last)/τ_w)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackHistory {
    samples: Vec<(f64, f64, f64)>,
    weights: Vec<f64>,
    pub tau_w: f64,
}

impl TrackHistory {
    pub fn new(tau_w: f64) -> Self {
        Self { samples: Vec::new(), weights: Vec::new(), tau_w }
    }

    /// History from `(t, x, y)` samples; timestamps must strictly increase.
    pub fn from_samples(samples: Vec<(f64, f64, f64)>, tau_w: f64) -> Result<Self, PredictError> {
        if let Some(w) = samples.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(PredictError::InvalidParams(format!(
                "timestamps not strictly increasing at t = {}",
                w[1].0
            )));
        }
        if samples.iter().any(|s| !(s.0.is_finite() && s.1.is_finite() && s.2.is_finite())) {
            return Err(PredictError::InvalidParams("non-finite sample".into()));
        }
        let mut h = Self { samples, weights: Vec::new(), tau_w };
        h.reweight();
        Ok(h)
    }

    fn reweight(&mut self) {
        let last = self.samples.last().map_or(0.0, |s| s.0);
        self.weights = self.samples.iter().map(|s| ((s.0 - last) / self.tau_w).exp()).collect();
    }

    /// Appends a sample; returns false (and ignores it) when `t` does not advance.
    pub fn push(&mut self, t: f64, x: f64, y: f64) -> bool {
        if self.samples.last().is_some_and(|s| t <= s.0) || !(t.is_finite() && x.is_finite() && y.is_finite()) {
            return false;
        }
        self.samples.push((t, x, y));
        self.reweight();
        true
    }

    /// Drops samples older than `t_last − keep`.
    pub fn trim(&mut self, keep: f64) {
        if let Some(&(last, _, _)) = self.samples.last() {
            self.samples.retain(|s| last - s.0 <= keep + 1e-9);
            self.reweight();
        }
    }

    pub fn clear(&mut self) {
        self.samples.clear();
        self.weights.clear();
    }

    pub fn samples(&self) -> &[(f64, f64, f64)] {
        &self.samples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.samples.last().map(|s| s.0)
    }

    pub fn span(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0.0,
        }
    }

    /// The samples within `window` seconds of the last one, reweighted.
    pub fn recent(&self, window: f64) -> TrackHistory {
        let mut h = self.clone();
        h.trim(window);
        h
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictConfig {
    pub params: SvrParams,
    pub solver: SolverOptions,
    pub tau_w: f64,
    /// Seconds of history used for a fit.
    pub window: f64,
    pub valid_horizon: f64,
    pub min_span: f64,
    /// Regression input is `(t − t_last) / time_scale`.
    pub time_scale: f64,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            params: SvrParams::default(),
            solver: SolverOptions::default(),
            tau_w: 1.0,
            window: 3.0,
            valid_horizon: 1.5,
            min_span: 1.0,
            time_scale: 4.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictedPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub valid: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    Svr,
    Cubic,
}

struct Prepared {
    t_last: f64,
    inputs: Vec<f64>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    weights: Vec<f64>,
}

fn prepare(history: &TrackHistory, cfg: &PredictConfig) -> Result<Prepared, PredictError> {
    let h = history.recent(cfg.window);
    if h.len() < 2 || h.span() + 1e-9 < cfg.min_span {
        return Err(PredictError::InsufficientData(format!(
            "history spans {:.3} s over {} samples, need {:.3} s",
            h.span(),
            h.len(),
            cfg.min_span
        )));
    }
    let t_last = h.last_time().expect("non-empty");
    let weights = h.samples().iter().map(|s| ((s.0 - t_last) / cfg.tau_w).exp()).collect();
    Ok(Prepared {
        t_last,
        inputs: h.samples().iter().map(|s| (s.0 - t_last) / cfg.time_scale).collect(),
        xs: h.samples().iter().map(|s| s.1).collect(),
        ys: h.samples().iter().map(|s| s.2).collect(),
        weights,
    })
}

fn query_times(t_last: f64, horizon: f64, step: f64) -> Result<Vec<f64>, PredictError> {
    if !(horizon > 0.0 && step > 0.0) {
        return Err(PredictError::InvalidParams("horizon and step must be positive".into()));
    }
    let count = (horizon / step + 1e-9).floor() as usize;
    Ok((1..=count).map(|k| t_last + k as f64 * step).collect())
}

/// Extrapolates the history with two independent SVRs `t → x` and `t → y`.
pub fn predict_trajectory(
    history: &TrackHistory,
    horizon: f64,
    step: f64,
    cfg: &PredictConfig,
) -> Result<Vec<PredictedPoint>, PredictError> {
    predict_with(history, horizon, step, cfg, Regressor::Svr)
}

/// Like [`predict_trajectory`] with a selectable regressor.
pub fn predict_with(
    history: &TrackHistory,
    horizon: f64,
    step: f64,
    cfg: &PredictConfig,
    regressor: Regressor,
) -> Result<Vec<PredictedPoint>, PredictError> {
    let p = prepare(history, cfg)?;
    let times = query_times(p.t_last, horizon, step)?;
    let input = |t: f64| (t - p.t_last) / cfg.time_scale;
    let eval: Box<dyn Fn(f64) -> (f64, f64)> = match regressor {
        Regressor::Svr => {
            let mx = svr_fit_with(&p.inputs, &p.xs, &p.weights, cfg.params, cfg.solver)?.model;
            let my = svr_fit_with(&p.inputs, &p.ys, &p.weights, cfg.params, cfg.solver)?.model;
            Box::new(move |s| (svr_predict(&mx, s), svr_predict(&my, s)))
        }
        Regressor::Cubic => {
            let cx = polyfit3(&p.inputs, &p.xs)?;
            let cy = polyfit3(&p.inputs, &p.ys)?;
            Box::new(move |s| (polyval3(&cx, s), polyval3(&cy, s)))
        }
    };
    Ok(times
        .into_iter()
        .map(|t| {
            let (x, y) = eval(input(t));
            PredictedPoint { t, x, y, valid: t <= p.t_last + cfg.valid_horizon + 1e-9 }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrGrid {
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Default for SvrGrid {
    fn default() -> Self {
        Self { c: vec![100.0, 1000.0, 10000.0], epsilon: vec![0.001, 0.01, 0.1], gamma: vec![0.1, 1.0, 10.0] }
    }
}

impl SvrGrid {
    pub fn single(p: SvrParams) -> Self {
        Self { c: vec![p.c], epsilon: vec![p.epsilon], gamma: vec![p.gamma] }
    }

    /// Combinations with C outermost and γ innermost.
    pub fn combinations(&self) -> Vec<SvrParams> {
        let mut out = Vec::new();
        for &c in &self.c {
            for &e in &self.epsilon {
                for &g in &self.gamma {
                    out.push(SvrParams::new(c, e, g));
                }
            }
        }
        out
    }
}

/// Mean absolute validation error of `params` over time-ordered suffix folds.
///
/// The history is cut into `folds + 1` equal blocks; fold `k` trains on all
/// blocks before block `k + 1` and validates on that block.
pub fn fold_error(history: &TrackHistory, params: SvrParams, folds: usize, cfg: &PredictConfig) -> Result<f64, PredictError> {
    let n = history.len();
    let block = if folds == 0 { 0 } else { n / (folds + 1) };
    if folds == 0 || block < 1 || n - folds * block < 2 {
        return Err(PredictError::InsufficientData(format!("{n} samples cannot form {folds} folds")));
    }
    let s = history.samples();
    let mut total = 0.0;
    let mut count = 0usize;
    for k in 0..folds {
        let split = n - (folds - k) * block;
        let train = &s[..split];
        let t_last = train[split - 1].0;
        let inputs: Vec<f64> = train.iter().map(|p| (p.0 - t_last) / cfg.time_scale).collect();
        let weights: Vec<f64> = train.iter().map(|p| ((p.0 - t_last) / cfg.tau_w).exp()).collect();
        let xs: Vec<f64> = train.iter().map(|p| p.1).collect();
        let ys: Vec<f64> = train.iter().map(|p| p.2).collect();
        let mx = svr_fit_with(&inputs, &xs, &weights, params, cfg.solver)?.model;
        let my = svr_fit_with(&inputs, &ys, &weights, params, cfg.solver)?.model;
        for v in &s[split..split + block] {
            let q = (v.0 - t_last) / cfg.time_scale;
            total += (svr_predict(&mx, q) - v.1).abs() + (svr_predict(&my, q) - v.2).abs();
            count += 2;
        }
    }
    Ok(total / count as f64)
}

/// Grid point with the least [`fold_error`]; ties go to the earliest combination.
pub fn grid_search(history: &TrackHistory, grid: &SvrGrid, folds: usize, cfg: &PredictConfig) -> Result<SvrParams, PredictError> {
    let combos = grid.combinations();
    if combos.is_empty() {
        return Err(PredictError::InvalidParams("empty parameter grid".into()));
    }
    let mut best: Option<(SvrParams, f64)> = None;
    for p in combos {
        let e = fold_error(history, p, folds, cfg)?;
        if best.is_none_or(|(_, be)| e < be) {
            best = Some((p, e));
        }
    }
    Ok(best.expect("non-empty grid").0)
}
