// Copyright 2026 The galton-core Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Closed-form oracles and distribution metrics.

use std::f64::consts::SQRT_2;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galton::{run_post_selected, RunConfig};
use crate::schedule::Schedule;
use crate::statevector::State;

/// Largest `t` for which binomial amplitudes use exact integers.
pub const EXACT_BINOMIAL_LIMIT: u64 = 512;

/// `C(t,k) / sqrt(C(2t,t))` for `k = 0..=t`: the walk amplitudes after `t`
/// accepted steps from a basis state.
pub fn binomial_amplitudes(t: u64) -> Vec<f64> {
    if t <= EXACT_BINOMIAL_LIMIT {
        binomial_amplitudes_exact(t)
    } else {
        binomial_amplitudes_log(t)
    }
}

fn binomial_row(t: u64) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(t as usize + 1);
    let mut c = BigUint::one();
    for k in 0..=t {
        row.push(c.clone());
        c = c * (t - k) / (k + 1);
    }
    row
}

pub(crate) fn binomial_amplitudes_exact(t: u64) -> Vec<f64> {
    let mut central = BigUint::one();
    for k in 0..t {
        central = central * (2 * t - k) / (k + 1);
    }
    let norm = central.to_f64().expect("finite").sqrt();
    binomial_row(t)
        .iter()
        .map(|c| c.to_f64().expect("finite") / norm)
        .collect()
}

/// Ratio recurrence in log space, then l2 normalization.
pub(crate) fn binomial_amplitudes_log(t: u64) -> Vec<f64> {
    let mut logs = Vec::with_capacity(t as usize + 1);
    let mut l = 0.0f64;
    for k in 0..=t {
        logs.push(l);
        if k < t {
            l += ((t - k) as f64).ln() - ((k + 1) as f64).ln();
        }
    }
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut a: Vec<f64> = logs.iter().map(|x| (x - peak).exp()).collect();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    a.iter_mut().for_each(|x| *x /= norm);
    a
}

/// Probability of reading 0 at step `t` of a walk from a basis state.
pub fn theoretical_p0(t: u64) -> f64 {
    1.0 - 1.0 / (2.0 * t as f64)
}

/// `prod_{k=1}^{t} (1 - 1/(2k))`, summed in log space.
pub fn success_probability_exact(t: u64) -> f64 {
    (1..=t)
        .map(|k| (-0.5 / k as f64).ln_1p())
        .sum::<f64>()
        .exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialsBound {
    pub t: u64,
    pub p_success: f64,
    pub expected_trials: f64,
    /// `e^{3/2} sqrt(t - 1)`, defined for `t >= 2`.
    pub upper_bound: Option<f64>,
}

pub fn expected_trials(t: u64) -> TrialsBound {
    let p = success_probability_exact(t);
    TrialsBound {
        t,
        p_success: p,
        expected_trials: 1.0 / p,
        upper_bound: (t >= 2).then(|| 1.5f64.exp() * ((t - 1) as f64).sqrt()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Terms {
    Finite(u64),
    Infinite,
}

/// `(a;q)_n = prod_{k=1}^{n} (1 - a q^k)`. Note the product starts at
/// `k = 1`; the more common convention starting at `k = 0` equals
/// `(1 - a)` times this value.
pub fn qpochhammer(a: f64, q: f64, terms: Terms) -> Result<f64> {
    if !a.is_finite() || !q.is_finite() || a * q >= 1.0 {
        return Err(Error::Divergent { a, q });
    }
    let mut prod = 1.0;
    let mut aqk = a;
    match terms {
        Terms::Finite(n) => {
            for _ in 0..n {
                aqk *= q;
                prod *= 1.0 - aqk;
            }
        }
        Terms::Infinite => {
            if q.abs() >= 1.0 {
                return Err(Error::Divergent { a, q });
            }
            loop {
                aqk *= q;
                let next = prod * (1.0 - aqk);
                if next == 0.0 || ((next - prod) / prod).abs() < 1e-15 {
                    prod = next;
                    break;
                }
                prod = next;
            }
        }
    }
    Ok(prod)
}

/// `e^{-2/(2 t1 - 1)}`, a lower bound on `(1/t1; 1/2)_inf`.
pub fn qpochhammer_lower_bound(t1: u64) -> f64 {
    (-2.0 / (2.0 * t1 as f64 - 1.0)).exp()
}

/// Upper bound on the expected number of attempts for a scaled schedule
/// whose later stages run at most `t_max` steps each:
/// `(1/p_s(t1)) [(1 - 1/(2 t1)) e^{2/(2 t1 - 1)}]^{t_max}`.
pub fn scaled_trials_bound(t1: u64, t_max: u64) -> Result<f64> {
    if t1 < 2 {
        return Err(Error::InvalidArgument(format!(
            "scaled bound needs t1 >= 2, got {t1}"
        )));
    }
    let x = 2.0 * t1 as f64;
    let per = (1.0 - 1.0 / x) * (2.0 / (x - 1.0)).exp();
    Ok(per.powf(t_max as f64) / success_probability_exact(t1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// Normal mass of the unit bin centred on each grid point.
    BinIntegral,
    /// Normal density at each grid point.
    Midpoint,
}

fn normal_mass(a: f64, b: f64) -> f64 {
    // difference of upper tails on the side where it does not cancel
    if a >= 0.0 {
        0.5 * (libm::erfc(a / SQRT_2) - libm::erfc(b / SQRT_2))
    } else if b <= 0.0 {
        0.5 * (libm::erfc(-b / SQRT_2) - libm::erfc(-a / SQRT_2))
    } else {
        1.0 - 0.5 * (libm::erfc(-a / SQRT_2) + libm::erfc(b / SQRT_2))
    }
}

/// Amplitude reference on `n_points` grid points whose amplitudes follow
/// the normal law `N(mu, sigma_sq)`, normalized to unit l2 norm.
pub fn gaussian_reference(
    mu: f64,
    sigma_sq: f64,
    n_points: usize,
    conv: Convention,
) -> Result<Vec<f64>> {
    if sigma_sq.is_nan() || sigma_sq <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sigma_sq must be positive, got {sigma_sq}"
        )));
    }
    let sigma = sigma_sq.sqrt();
    let mut a: Vec<f64> = (0..n_points)
        .map(|j| {
            let x = j as f64;
            match conv {
                Convention::BinIntegral => {
                    normal_mass((x - 0.5 - mu) / sigma, (x + 0.5 - mu) / sigma)
                }
                Convention::Midpoint => (-0.5 * (x - mu).powi(2) / sigma_sq).exp(),
            }
        })
        .collect();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    a.iter_mut().for_each(|x| *x /= norm);
    Ok(a)
}

/// Mean and variance of a state read two ways: the Born probabilities, and
/// the normalized amplitudes taken as a mass function. The second is
/// available only when every amplitude is real and non-negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistStats {
    pub mean_prob: f64,
    pub var_prob: f64,
    pub mean_amp: Option<f64>,
    pub var_amp: Option<f64>,
}

fn moments(w: &[f64], pos: impl Fn(usize) -> f64) -> (f64, f64) {
    let total: f64 = w.iter().sum();
    let mean = w.iter().enumerate().map(|(i, x)| pos(i) * x).sum::<f64>() / total;
    let var = w
        .iter()
        .enumerate()
        .map(|(i, x)| (pos(i) - mean).powi(2) * x)
        .sum::<f64>()
        / total;
    (mean, var)
}

fn amplitude_weights(amps: &[Complex64]) -> Option<Vec<f64>> {
    let scale = amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let tol = 1e-12 * scale;
    amps.iter()
        .all(|a| a.im.abs() <= tol && a.re >= -tol)
        .then(|| amps.iter().map(|a| a.re.max(0.0)).collect())
}

fn stats_with(amps: &[Complex64], pos: impl Fn(usize) -> f64 + Copy) -> DistStats {
    let probs: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    let (mean_prob, var_prob) = moments(&probs, pos);
    let amp = amplitude_weights(amps).map(|w| moments(&w, pos));
    DistStats {
        mean_prob,
        var_prob,
        mean_amp: amp.map(|m| m.0),
        var_amp: amp.map(|m| m.1),
    }
}

/// Statistics over basis labels `0..2^n`.
pub fn stats(state: &State) -> DistStats {
    stats_with(state.amplitudes(), |i| i as f64)
}

/// Statistics on the cyclic register, with each label read as the
/// representative nearest to `center`, i.e. in `[center - N/2, center + N/2)`.
pub fn stats_centered(state: &State, center: f64) -> DistStats {
    let n = state.dim() as f64;
    let lo = center - n / 2.0;
    stats_with(state.amplitudes(), move |i| {
        let x = i as f64;
        x - n * ((x - lo) / n).floor()
    })
}

/// Half the l1 distance between two probability vectors.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `|<a|b>|^2`.
pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm_sqr())
}

/// Squares of a real amplitude vector.
pub fn probabilities(amps: &[f64]) -> Vec<f64> {
    amps.iter().map(|a| a * a).collect()
}

/// Places an amplitude sequence on a cyclic register of `n_points` labels,
/// entry `k` landing on `(k + offset) mod n_points`.
pub fn fold_onto_register(amps: &[f64], offset: i64, n_points: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_points];
    let n = n_points as i64;
    for (k, &a) in amps.iter().enumerate() {
        let idx = (k as i64 + offset).rem_euclid(n) as usize;
        out[idx] += a;
    }
    out
}

/// The walk on the unbounded integer line: the same schedule with no
/// register to wrap around. Amplitudes are indexed from label 0.
#[derive(Clone, Debug, PartialEq)]
pub struct LineWalk {
    pub amps: Vec<f64>,
    pub per_step_p0: Vec<f64>,
}

impl LineWalk {
    pub fn acceptance(&self) -> f64 {
        self.per_step_p0.iter().product()
    }
}

pub fn line_walk(s: &Schedule) -> LineWalk {
    let mut a = vec![1.0f64];
    let mut p0s = Vec::with_capacity(s.total_steps() as usize);
    for (r, &t) in s.t.iter().enumerate() {
        if r > 0 {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            a = a.iter().flat_map(|&x| [x * h, x * h]).collect();
        }
        for _ in 0..t {
            let mut next = vec![0.0; a.len() + 1];
            for (i, &x) in a.iter().enumerate() {
                next[i] += 0.5 * x;
                next[i + 1] += 0.5 * x;
            }
            let p0: f64 = next.iter().map(|x| x * x).sum();
            let s = 1.0 / p0.sqrt();
            next.iter_mut().for_each(|x| *x *= s);
            p0s.push(p0);
            a = next;
        }
    }
    LineWalk {
        amps: a,
        per_step_p0: p0s,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionPoint {
    /// 1-based step count across all stages.
    pub t: u64,
    pub stage: usize,
    pub n_qubits: usize,
    /// Value on the unbounded line.
    pub p0_theory: f64,
    /// Value from the statevector run.
    pub p0_sim: f64,
}

/// Per-step probability of reading 0, given all earlier reads were 0.
pub fn selection_curve(cfg: &RunConfig) -> Result<Vec<SelectionPoint>> {
    let s = cfg.effective_schedule();
    let sim = run_post_selected(cfg)?.per_step_p0;
    let theory = line_walk(&s).per_step_p0;
    let mut out = Vec::with_capacity(sim.len());
    let mut g = 0;
    for (r, &t) in s.t.iter().enumerate() {
        for _ in 0..t {
            out.push(SelectionPoint {
                t: g as u64 + 1,
                stage: r + 1,
                n_qubits: s.n1 + r,
                p0_theory: theory[g],
                p0_sim: sim[g],
            });
            g += 1;
        }
    }
    Ok(out)
}
