//! Edge-flow masking and spectral optimization of the drop probabilities.
//!
//! A mask keeps edge `i` with probability `q_i = 1 - p_i`. For a Hodge block
//! `U_S` the expected squared embedding gap `E||U_Sᵀx - U_Sᵀ(x∘m)||²` is a
//! quadratic in `q`, so the objective and its gradient are exact.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::hodge::{Component, HodgeBasis};
use crate::linalg::Mat;

/// Per-edge drop probabilities together with the ℓ1 budget they respect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskProbabilities {
    pub p: Vec<f64>,
    pub budget: f64,
}

impl MaskProbabilities {
    /// Every edge dropped with the same probability.
    pub fn uniform(num_edges: usize, p: f64) -> Self {
        Self {
            p: vec![p; num_edges],
            budget: p * num_edges as f64,
        }
    }

    pub fn is_feasible(&self, slack: f64) -> bool {
        self.p.iter().all(|&v| (-slack..=1.0 + slack).contains(&v)) && self.p.iter().sum::<f64>() <= self.budget + slack
    }

    pub fn mass(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Drops each entry of `x` independently with probability `p_i`.
pub fn mask_flow<R: Rng + ?Sized>(x: &[f64], p: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if x.len() != p.len() {
        return Err(dim_mismatch(format!(
            "flow of length {} with {} probabilities",
            x.len(),
            p.len()
        )));
    }
    Ok(x.iter()
        .zip(p)
        .map(|(&xi, &pi)| {
            // one draw per edge, also for p in {0, 1}, so streams stay aligned
            let u: f64 = rng.gen();
            if u < pi {
                0.0
            } else {
                xi
            }
        })
        .collect())
}

/// Signs and weights of the three expected gaps in the objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGapObjective {
    pub sign_g: f64,
    pub sign_c: f64,
    pub sign_h: f64,
    #[serde(default = "one")]
    pub weight_c: f64,
    #[serde(default = "one")]
    pub weight_h: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for SpectralGapObjective {
    /// Change the gradient embedding, preserve curl and harmonic ones.
    fn default() -> Self {
        Self {
            sign_g: -1.0,
            sign_c: 1.0,
            sign_h: 1.0,
            weight_c: 1.0,
            weight_h: 1.0,
        }
    }
}

impl SpectralGapObjective {
    pub fn coefficient(&self, c: Component) -> f64 {
        match c {
            Component::Gradient => self.sign_g,
            Component::Curl => self.sign_c * self.weight_c,
            Component::Harmonic => self.sign_h * self.weight_h,
        }
    }

    fn check(&self) -> Result<()> {
        if self.sign_g == 0.0 && self.sign_c == 0.0 && self.sign_h == 0.0 {
            return Err(Error::InvalidConfig("all objective signs are zero".into()));
        }
        Ok(())
    }
}

/// Closed-form `E||U_Sᵀx - U_Sᵀ(x∘m)||²` for `m_i ~ Bernoulli(q_i)`:
///
/// `||U_Sᵀx||² - 2 xᵀU_S U_Sᵀ(x∘q) + Σ_ij (U_S U_Sᵀ)_ij P_ij`
///
/// with `P_ij = x_i x_j q_i q_j` off the diagonal and `P_ii = x_i² q_i`.
/// Evaluated as `||U_Sᵀ(x∘(1-q))||² + Σ_i a_i x_i² q_i (1 - q_i)` where
/// `a_i` is the squared norm of row `i` of `U_S`.
pub fn expected_gap(x: &[f64], u_s: &Mat, q: &[f64]) -> Result<f64> {
    check_dims(x, u_s, q)?;
    let r: Vec<f64> = x.iter().zip(q).map(|(xi, qi)| xi * (1.0 - qi)).collect();
    let s = u_s.tr_matvec(&r)?;
    let mut gap: f64 = s.iter().map(|v| v * v).sum();
    for (i, (&xi, &qi)) in x.iter().zip(q).enumerate() {
        let a: f64 = u_s.row(i).iter().map(|v| v * v).sum();
        gap += a * xi * xi * qi * (1.0 - qi);
    }
    Ok(gap)
}

/// Gradient of [`expected_gap`] with respect to the drop probabilities `p = 1 - q`.
fn expected_gap_grad_p(x: &[f64], u_s: &Mat, q: &[f64], out: &mut [f64], scale: f64) -> Result<f64> {
    let r: Vec<f64> = x.iter().zip(q).map(|(xi, qi)| xi * (1.0 - qi)).collect();
    let s = u_s.tr_matvec(&r)?;
    let us = u_s.matvec(&s)?;
    let mut gap: f64 = s.iter().map(|v| v * v).sum();
    for (i, (&xi, &qi)) in x.iter().zip(q).enumerate() {
        let a: f64 = u_s.row(i).iter().map(|v| v * v).sum();
        gap += a * xi * xi * qi * (1.0 - qi);
        // d/dq_i = -2 x_i (U Uᵀ r)_i + a_i x_i² (1 - 2 q_i); dp = -dq
        let dq = -2.0 * xi * us[i] + a * xi * xi * (1.0 - 2.0 * qi);
        out[i] -= scale * dq;
    }
    Ok(gap)
}

fn check_dims(x: &[f64], u_s: &Mat, q: &[f64]) -> Result<()> {
    if x.len() != q.len() || x.len() != u_s.rows() {
        return Err(dim_mismatch(format!(
            "flow {}, probabilities {}, basis rows {}",
            x.len(),
            q.len(),
            u_s.rows()
        )));
    }
    Ok(())
}

/// The three expected gaps at drop probabilities `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectedGaps {
    pub gradient: f64,
    pub curl: f64,
    pub harmonic: f64,
}

pub fn expected_gaps(x: &[f64], basis: &HodgeBasis, p: &[f64]) -> Result<ExpectedGaps> {
    let q: Vec<f64> = p.iter().map(|v| 1.0 - v).collect();
    Ok(ExpectedGaps {
        gradient: expected_gap(x, &basis.u_g, &q)?,
        curl: expected_gap(x, &basis.u_c, &q)?,
        harmonic: expected_gap(x, &basis.u_h, &q)?,
    })
}

/// Value and exact gradient (w.r.t. `p`) of the signed gap objective.
pub fn objective_and_gradient(
    x: &[f64],
    basis: &HodgeBasis,
    p: &[f64],
    obj: &SpectralGapObjective,
) -> Result<(f64, Vec<f64>)> {
    obj.check()?;
    if p.len() != basis.num_edges() {
        return Err(dim_mismatch("probabilities do not match edge count"));
    }
    let q: Vec<f64> = p.iter().map(|v| 1.0 - v).collect();
    let mut grad = vec![0.0; p.len()];
    let mut value = 0.0;
    for c in Component::ALL {
        let coef = obj.coefficient(c);
        if coef == 0.0 {
            continue;
        }
        value += coef * expected_gap_grad_p(x, basis.block(c), &q, &mut grad, coef)?;
    }
    Ok((value, grad))
}

/// Euclidean projection onto `{p ∈ [0,1]^N : ||p||₁ <= budget}`.
///
/// The set lies in the nonnegative orthant, so the projection is
/// `clamp(v - λ, 0, 1)` with the smallest `λ >= 0` meeting the budget.
pub fn project_feasible(v: &[f64], budget: f64) -> MaskProbabilities {
    assert!(budget > 0.0, "budget must be positive");
    let clamp = |lambda: f64| -> Vec<f64> { v.iter().map(|&x| (x - lambda).clamp(0.0, 1.0)).collect() };
    let p = clamp(0.0);
    if p.iter().sum::<f64>() <= budget {
        return MaskProbabilities { p, budget };
    }
    let mut lo = 0.0;
    let mut hi = v.iter().fold(0.0f64, |m, &x| m.max(x));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s: f64 = v.iter().map(|&x| (x - mid).clamp(0.0, 1.0)).sum();
        if s > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    MaskProbabilities { p: clamp(hi), budget }
}

/// Trace of a projected-gradient run.
#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub probabilities: MaskProbabilities,
    pub objective: f64,
    /// Best objective seen after each iteration (index 0 is the start).
    pub best_history: Vec<f64>,
}

/// Projected gradient descent from the uniform point `min(budget/N, 0.5)`,
/// returning the best iterate seen.
pub fn optimize_probabilities(
    x: &[f64],
    basis: &HodgeBasis,
    obj: &SpectralGapObjective,
    budget: f64,
    step: f64,
    iters: usize,
) -> Result<OptimizationResult> {
    let n = basis.num_edges();
    if !(budget > 0.0 && budget <= n as f64) {
        return Err(Error::InvalidConfig(format!("budget {budget} outside (0, {n}]")));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidConfig(format!("step {step} must be positive")));
    }
    let start = (budget / n as f64).min(0.5);
    let mut p = vec![start; n];
    let (mut value, mut grad) = objective_and_gradient(x, basis, &p, obj)?;
    if !value.is_finite() {
        return Err(Error::NonFiniteObjective { iteration: 0 });
    }
    let mut best = (value, p.clone());
    let mut history = Vec::with_capacity(iters + 1);
    history.push(value);
    for it in 1..=iters {
        let v: Vec<f64> = p.iter().zip(&grad).map(|(pi, gi)| pi - step * gi).collect();
        p = project_feasible(&v, budget).p;
        (value, grad) = objective_and_gradient(x, basis, &p, obj)?;
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteObjective { iteration: it });
        }
        if value < best.0 {
            best = (value, p.clone());
        }
        history.push(best.0);
    }
    Ok(OptimizationResult {
        probabilities: MaskProbabilities { p: best.1, budget },
        objective: best.0,
        best_history: history,
    })
}

/// One record of the cached-probabilities JSON-lines file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityRecord {
    pub index: usize,
    pub p: Vec<f64>,
    pub objective: f64,
    pub budget: f64,
}

pub fn write_probability_cache(records: &[ProbabilityRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&format!(
            "{{\"index\":{},\"p\":{},\"objective\":{},\"budget\":{}}}\n",
            r.index,
            crate::datasets::format_f64_array(&r.p),
            crate::datasets::format_f64(r.objective),
            crate::datasets::format_f64(r.budget),
        ));
    }
    out
}

pub fn read_probability_cache(text: &str) -> Result<Vec<ProbabilityRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
