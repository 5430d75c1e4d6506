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

//! Target description, grid units and the qubit-scaling schedule.
//!
//! A schedule starts from `|0>` on `n1` qubits, runs `t[0]` walk steps, then
//! repeatedly appends a `|+>` qubit and runs `t[r]` correction steps until
//! the register holds `nm` qubits. With step bias `p = 1/2` the stage-`i`
//! statistics follow
//!
//! ```text
//! var_i  = (4^(i-1) - 1)/12 + sum_{k<=i} 4^(i-k) t_k p(1-p)
//! mean_i = (2^(i-1) - 1)/2  + sum_{k<=i} 2^(i-k) t_k p
//! ```
//!
//! in grid units, where the statistics are those of the normalized
//! amplitudes read as a mass function.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_c() -> u32 {
    2
}

/// User-facing description of the target normal distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub mu_hat: f64,
    pub sigma_hat_sq: f64,
    pub x0: f64,
    pub l: f64,
    pub n1: usize,
    pub nm: usize,
    #[serde(default = "default_c")]
    pub c: u32,
}

impl TargetSpec {
    /// Checks hard invariants and returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if !self.sigma_hat_sq.is_finite() || self.sigma_hat_sq <= 0.0 {
            return Err(Error::InvalidTarget(format!(
                "sigma_hat_sq must be positive, got {}",
                self.sigma_hat_sq
            )));
        }
        if !self.l.is_finite() || self.l <= 0.0 {
            return Err(Error::InvalidTarget(format!(
                "l must be positive, got {}",
                self.l
            )));
        }
        if self.n1 < 1 || self.nm < self.n1 {
            return Err(Error::InvalidTarget(format!(
                "need nm >= n1 >= 1, got n1 = {}, nm = {}",
                self.n1, self.nm
            )));
        }
        if self.nm > 62 {
            return Err(Error::InvalidTarget(format!(
                "nm = {} is too large",
                self.nm
            )));
        }
        let mut warnings = Vec::new();
        if self.mu_hat < self.x0 || self.mu_hat > self.x0 + self.l {
            warnings.push(format!(
                "mu_hat = {} lies outside [{}, {}]; the register is cyclic and the tails will wrap",
                self.mu_hat,
                self.x0,
                self.x0 + self.l
            ));
        }
        Ok(warnings)
    }
}

/// Grid-unit view of a target: `N = 2^nm` points spaced `l / N` apart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    pub n_points: u64,
    pub delta_x: f64,
    pub mu: f64,
    pub sigma_sq: f64,
}

/// Converts a target into grid units via `mu = N mu_hat / l` and
/// `sigma^2 = N^2 sigma_hat^2 / l^2`.
pub fn to_grid_units(spec: &TargetSpec) -> Result<GridMap> {
    spec.validate()?;
    let n_points = 1u64 << spec.nm;
    let scale = n_points as f64 / spec.l;
    Ok(GridMap {
        n_points,
        delta_x: spec.l / n_points as f64,
        mu: scale * spec.mu_hat,
        sigma_sq: scale * scale * spec.sigma_hat_sq,
    })
}

/// Number of walk steps that reach the grid variance without qubit scaling.
/// A walk of `t` unbiased steps has variance `t/4`, so this is
/// `round(4 sigma^2)`.
pub fn exact_iteration_count(grid: &GridMap) -> u64 {
    round_half_away(4.0 * grid.sigma_sq).max(0) as u64
}

/// Round half away from zero.
pub fn round_half_away(x: f64) -> i64 {
    x.round() as i64
}

/// Iteration counts per stage plus the mean shift applied at the end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub n1: usize,
    pub t: Vec<u32>,
    #[serde(default = "half")]
    pub p: f64,
    #[serde(default)]
    pub alpha: f64,
}

fn half() -> f64 {
    0.5
}

/// The mean shift: requested real value, the integer actually added, and
/// what is left over.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shift {
    pub alpha: f64,
    pub applied: i64,
    pub residual: f64,
}

impl Schedule {
    pub fn new(n1: usize, t: Vec<u32>) -> Result<Self> {
        if n1 < 1 {
            return Err(Error::InvalidArgument("n1 must be at least 1".into()));
        }
        if t.is_empty() {
            return Err(Error::InvalidArgument(
                "a schedule needs at least one stage".into(),
            ));
        }
        Ok(Schedule {
            n1,
            t,
            p: 0.5,
            alpha: 0.0,
        })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// Number of stages.
    pub fn m(&self) -> usize {
        self.t.len()
    }

    /// Final qubit count.
    pub fn nm(&self) -> usize {
        self.n1 + self.m() - 1
    }

    /// `n_r = n1 + r` for stage index `r` (0-based).
    pub fn stage_qubits(&self) -> Vec<usize> {
        (0..self.m()).map(|r| self.n1 + r).collect()
    }

    pub fn total_steps(&self) -> u64 {
        self.t.iter().map(|&t| t as u64).sum()
    }

    pub fn predicted_variance(&self) -> f64 {
        let m = self.m() as i32;
        let q = self.p * (1.0 - self.p);
        let cascade = (4f64.powi(m - 1) - 1.0) / 12.0;
        cascade
            + self
                .t
                .iter()
                .enumerate()
                .map(|(k, &t)| 4f64.powi(m - 1 - k as i32) * q * t as f64)
                .sum::<f64>()
    }

    /// Mean before the shift is applied.
    pub fn predicted_mean(&self) -> f64 {
        let m = self.m() as i32;
        let cascade = 0.5 * (2f64.powi(m - 1) - 1.0);
        cascade
            + self
                .t
                .iter()
                .enumerate()
                .map(|(k, &t)| 2f64.powi(m - 1 - k as i32) * self.p * t as f64)
                .sum::<f64>()
    }

    /// Integer shift actually applied after the walk.
    pub fn applied_shift(&self) -> i64 {
        round_half_away(self.alpha)
    }

    /// A single-stage schedule on `nm` qubits with the same variance and the
    /// same final mean target.
    pub fn exact_equivalent(&self) -> Schedule {
        let t_eff = round_half_away(4.0 * self.predicted_variance()).max(0) as u32;
        let target_mean = self.predicted_mean() + self.alpha;
        Schedule {
            n1: self.nm(),
            t: vec![t_eff],
            p: self.p,
            alpha: target_mean - t_eff as f64 * self.p,
        }
    }

    /// Largest basis label carrying amplitude at the end of each stage, when
    /// the register is treated as unbounded.
    pub fn stage_support_max(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.m());
        let mut hi = 0u64;
        for (r, &t) in self.t.iter().enumerate() {
            if r > 0 {
                hi = 2 * hi + 1;
            }
            hi += t as u64;
            out.push(hi);
        }
        out
    }

    /// Stage indices (0-based) whose walk support overflows `2^{n_r} - 1`,
    /// meaning the modular adder wraps amplitude around the register.
    pub fn wraparound_stages(&self) -> Vec<usize> {
        self.stage_support_max()
            .into_iter()
            .enumerate()
            .filter(|&(r, hi)| {
                let n = self.n1 + r;
                n < 64 && hi > (1u64 << n) - 1
            })
            .map(|(r, _)| r)
            .collect()
    }

    /// Extra qubits that would have to be added to `n1` (and so to every
    /// stage) for the walk to stay inside the register.
    pub fn guard_qubits_needed(&self) -> usize {
        let mut g = 0;
        loop {
            let s = Schedule {
                n1: self.n1 + g,
                ..self.clone()
            };
            if s.wraparound_stages().is_empty() {
                return g;
            }
            g += 1;
        }
    }
}

/// Variance of the scaling cascade with every `t_k = 0`.
pub fn baseline_variance(m: usize) -> f64 {
    (4f64.powi(m as i32 - 1) - 1.0) / 12.0
}

/// Plans `[t_1, ..., t_m]` for a grid variance. Later stages start at `c`,
/// `t_1` comes from inverting the closed form, then stages `2..m` are
/// adjusted by whole iterations to close the remaining gap.
pub fn plan_schedule(grid: &GridMap, n1: usize, nm: usize, c: u32) -> Result<Schedule> {
    if n1 < 1 || nm < n1 {
        return Err(Error::InvalidTarget(format!(
            "need nm >= n1 >= 1, got n1 = {n1}, nm = {nm}"
        )));
    }
    let m = nm - n1 + 1;
    let baseline = baseline_variance(m);
    let target = grid.sigma_sq;
    if target.is_nan() || target < baseline {
        return Err(Error::Infeasible {
            requested: target,
            minimum: baseline,
        });
    }
    let weight = |k: usize| 4f64.powi((m - 1 - k) as i32) * 0.25;
    let later: f64 = (1..m).map(|k| weight(k) * c as f64).sum();
    let t1 = round_half_away((target - baseline - later) / weight(0));
    // later stages cannot go below zero, so the rounded t_1 may overshoot
    // beyond repair; its lower neighbour is tried as well
    let mut best: Option<Schedule> = None;
    for cand in [t1, t1 - 1] {
        let mut t = vec![c; m];
        t[0] = cand.max(0) as u32;
        let mut s = Schedule::new(n1, t)?;
        for k in 1..m {
            let residual = target - s.predicted_variance();
            // intermediate stages stay below the target so the finer
            // stages after them only ever need to add
            let q = residual / weight(k);
            let delta = if k + 1 == m {
                round_half_away(q)
            } else {
                q.floor() as i64
            };
            s.t[k] = (s.t[k] as i64 + delta).max(0) as u32;
        }
        let err = (target - s.predicted_variance()).abs();
        if best
            .as_ref()
            .is_none_or(|b| err < (target - b.predicted_variance()).abs())
        {
            best = Some(s);
        }
    }
    let mut s = best.expect("at least one candidate");
    s.alpha = grid.mu - s.predicted_mean();
    Ok(s)
}

/// `alpha = mu - predicted_mean`, with the rounded integer shift and the
/// sub-bin residual it leaves.
pub fn shift_amount(s: &Schedule, grid: &GridMap) -> Shift {
    let alpha = grid.mu - s.predicted_mean();
    let applied = round_half_away(alpha);
    Shift {
        alpha,
        applied,
        residual: alpha - applied as f64,
    }
}

/// Machine-readable summary of a planned schedule.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub n1: usize,
    pub nm: usize,
    pub t: Vec<u32>,
    pub stage_qubits: Vec<usize>,
    pub alpha: f64,
    pub shift_applied: i64,
    pub shift_residual: f64,
    pub predicted_mean: f64,
    pub predicted_variance: f64,
    pub requested_mean: f64,
    pub requested_variance: f64,
    pub exact_iterations: u64,
    pub wraparound_stages: Vec<usize>,
    pub guard_qubits_needed: usize,
    pub warnings: Vec<String>,
}

impl ScheduleReport {
    pub fn new(s: &Schedule, grid: &GridMap, warnings: Vec<String>) -> Self {
        let shift = shift_amount(s, grid);
        ScheduleReport {
            n1: s.n1,
            nm: s.nm(),
            t: s.t.clone(),
            stage_qubits: s.stage_qubits(),
            alpha: shift.alpha,
            shift_applied: shift.applied,
            shift_residual: shift.residual,
            predicted_mean: s.predicted_mean(),
            predicted_variance: s.predicted_variance(),
            requested_mean: grid.mu,
            requested_variance: grid.sigma_sq,
            exact_iterations: exact_iteration_count(grid),
            wraparound_stages: s.wraparound_stages(),
            guard_qubits_needed: s.guard_qubits_needed(),
            warnings,
        }
    }
}

/// Plans straight from a target spec.
pub fn plan_from_spec(spec: &TargetSpec) -> Result<(Schedule, GridMap, Vec<String>)> {
    let warnings = spec.validate()?;
    let grid = to_grid_units(spec)?;
    let s = plan_schedule(&grid, spec.n1, spec.nm, spec.c)?;
    Ok((s, grid, warnings))
}
