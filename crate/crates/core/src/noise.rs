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

//! Discrete X/Z faults injected in the logical (non-Fourier) frame.
//!
//! Transforms are taken as noiseless, so a fault on data qubit `j` between
//! two steps is modelled as `iqft -> X_j or Z_j -> qft` on the data register.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::galton::{
    attempt_rng, drive_single_ancilla, h_step_unitary, Resources, RunConfig, RunRecord,
    StepContext, StepOutcome,
};
use crate::schedule::Schedule;
use crate::statevector::{Register, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorKind {
    #[serde(rename = "X")]
    BitFlipX,
    #[serde(rename = "Z")]
    PhaseFlipZ,
}

impl ErrorKind {
    pub fn label(&self) -> &'static str {
        match self {
            ErrorKind::BitFlipX => "X",
            ErrorKind::PhaseFlipZ => "Z",
        }
    }
}

/// A fault on data qubit `j` (0 = most significant) after `tau` steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorSpec {
    pub kind: ErrorKind,
    pub j: usize,
    pub tau: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Two-qubit gate infidelity.
    pub epsilon: f64,
    /// Keep injecting after the first fault. Off by default.
    pub multi_error: bool,
}

impl NoiseModel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must lie in [0, 1), got {epsilon}"
            )));
        }
        Ok(NoiseModel {
            epsilon,
            multi_error: false,
        })
    }

    /// Fault probability of one step on an `n`-qubit register, which costs
    /// `2n` two-qubit gates.
    pub fn step_error_probability(&self, n: usize) -> f64 {
        op_infidelity(self, n)
    }
}

/// `1 - (1 - epsilon)^{2n}`.
pub fn op_infidelity(model: &NoiseModel, n: usize) -> f64 {
    1.0 - (1.0 - model.epsilon).powi(2 * n as i32)
}

/// `floor(t / 2^{n-j})`.
pub fn discontinuity_count(n: usize, j: usize, t: u64) -> u64 {
    t >> (n - j)
}

/// Applies the fault to a data register that is currently in Fourier space.
pub fn inject(s: &mut State, data: Register, kind: ErrorKind, j: usize) -> Result<()> {
    if j >= data.len {
        return Err(Error::QubitOutOfRange {
            index: j,
            n: data.len,
        });
    }
    s.iqft_on(data)?;
    match kind {
        ErrorKind::BitFlipX => s.apply_x(data.qubit(j))?,
        ErrorKind::PhaseFlipZ => s.apply_z(data.qubit(j))?,
    }
    s.qft_on(data)
}

/// Walk state after `t` post-selected steps from `|0>` on `n` qubits, in
/// Fourier space with a clear ancilla at index `n`.
fn walked(n: usize, t: u64) -> Result<State> {
    let mut s = State::basis(n, 0)?;
    s.qft()?;
    s.append_zero_qubit()?;
    let data = Register::new(0, n);
    for _ in 0..t {
        h_step_unitary(&mut s, n, data, 1.0)?;
        s.project(n, 0)?;
    }
    Ok(s)
}

fn next_p1(mut s: State, n: usize) -> Result<f64> {
    h_step_unitary(&mut s, n, Register::new(0, n), 1.0)?;
    s.prob_of(n, 1)
}

fn check_no_wrap(n: usize, t: u64) -> Result<()> {
    if n >= 63 || t + 1 >= (1u64 << n) {
        return Err(Error::InvalidArgument(format!(
            "t = {t} wraps around a {n}-qubit register"
        )));
    }
    Ok(())
}

/// `p(1)` on the next step after `t` clean steps from `|0>`, with the fault
/// applied in between and without it: `(p1_err, p1_clean)`.
pub fn rejection_probability(n: usize, t: u64, kind: ErrorKind, j: usize) -> Result<(f64, f64)> {
    check_no_wrap(n, t)?;
    let s = walked(n, t)?;
    let clean = next_p1(s.clone(), n)?;
    let mut e = s;
    inject(&mut e, Register::new(0, n), kind, j)?;
    Ok((next_p1(e, n)?, clean))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: u64,
    pub j: usize,
    pub kind: ErrorKind,
    pub p1_err: f64,
    pub p1_clean: f64,
}

/// [`rejection_probability`] over a grid of `t` and `j`, both kinds, rows
/// ordered by `t`, then `j`, then kind (X before Z).
pub fn rejection_sweep(n: usize, ts: &[u64], js: &[usize]) -> Result<Vec<SweepRow>> {
    let mut ts = ts.to_vec();
    ts.sort_unstable();
    if let Some(&tmax) = ts.last() {
        check_no_wrap(n, tmax)?;
    }
    if let Some(&j) = js.iter().find(|&&j| j >= n) {
        return Err(Error::QubitOutOfRange { index: j, n });
    }
    let data = Register::new(0, n);
    let mut s = walked(n, 0)?;
    let mut done = 0;
    let mut rows = Vec::with_capacity(ts.len() * js.len() * 2);
    for &t in &ts {
        for _ in done..t {
            h_step_unitary(&mut s, n, data, 1.0)?;
            s.project(n, 0)?;
        }
        done = t;
        let clean = next_p1(s.clone(), n)?;
        for &j in js {
            for kind in [ErrorKind::BitFlipX, ErrorKind::PhaseFlipZ] {
                let mut e = s.clone();
                inject(&mut e, data, kind, j)?;
                rows.push(SweepRow {
                    t,
                    j,
                    kind,
                    p1_err: next_p1(e, n)?,
                    p1_clean: clean,
                });
            }
        }
    }
    Ok(rows)
}

/// A fault that was actually injected during a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectedError {
    pub kind: ErrorKind,
    pub j: usize,
    pub stage: usize,
    pub step: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyRecord {
    pub record: RunRecord,
    pub errors: Vec<InjectedError>,
}

impl NoisyRecord {
    pub fn errored(&self) -> bool {
        !self.errors.is_empty()
    }
}

/// Draws the faults for one shot. Every step of the schedule gets a chance,
/// whatever its ancilla later reads: the circuit runs to completion and the
/// shot is judged on its full ancilla record. Unless `multi_error` is set,
/// drawing stops at the first fault.
pub fn draw_faults<R: Rng + ?Sized>(
    s: &Schedule,
    model: &NoiseModel,
    rng: &mut R,
) -> Vec<InjectedError> {
    let mut out = Vec::new();
    for (stage, &t) in s.t.iter().enumerate() {
        let n = s.n1 + stage;
        let p = model.step_error_probability(n);
        for step in 0..t {
            if rng.random::<f64>() < p {
                let kind = if rng.random::<bool>() {
                    ErrorKind::PhaseFlipZ
                } else {
                    ErrorKind::BitFlipX
                };
                let j = rng.random_range(0..n);
                out.push(InjectedError {
                    kind,
                    j,
                    stage,
                    step,
                });
                if !model.multi_error {
                    return out;
                }
            }
        }
    }
    out
}

/// One attempt of the single-ancilla walk with random faults. A step fails
/// with probability `1 - (1-eps)^{2 n_r}`; the fault's kind and qubit are
/// uniform and it lands right after the step's ancilla read.
pub fn sample_noisy_run(cfg: &RunConfig, model: &NoiseModel, shot: u64) -> Result<NoisyRecord> {
    let s = cfg.effective_schedule();
    let mut rng = attempt_rng(cfg.seed, shot, 1);
    // faults draw from stream 0, which attempts never use, so the
    // measurement sequence matches a clean run draw for draw
    let errors = draw_faults(&s, model, &mut attempt_rng(cfg.seed, shot, 0));
    let mut measure = |st: &mut State, anc: usize| -> Result<StepOutcome> {
        let (ancilla_bit, p0) = st.measure_qubit(anc, &mut rng)?;
        Ok(StepOutcome { ancilla_bit, p0 })
    };
    let mut hook = |st: &mut State, ctx: &StepContext| -> Result<()> {
        for e in errors
            .iter()
            .filter(|e| e.stage == ctx.stage && e.step == ctx.step)
        {
            inject(st, ctx.data, e.kind, e.j)?;
        }
        Ok(())
    };
    let shift = cfg.shift_value(&s);
    let a = drive_single_ancilla(&s, cfg.fourier_mode, shift, &mut measure, &mut hook)?;
    let accepted = a.state.is_some();
    Ok(NoisyRecord {
        record: RunRecord {
            shot,
            attempts: 1,
            accepted,
            ancilla_trace: a.trace,
            per_step_p0: a.p0,
            total_qubits: Resources::mcmr(&s).total as usize,
            final_state: a.state,
        },
        errors,
    })
}

/// Acceptance of a single-fault path: every read projected onto 0, with
/// `fault` (if any) injected at its step.
fn fault_path_acceptance(
    cfg: &RunConfig,
    s: &Schedule,
    fault: Option<InjectedError>,
) -> Result<f64> {
    let mut measure = |st: &mut State, anc: usize| -> Result<StepOutcome> {
        let p0 = if st.prob_of(anc, 0)? <= crate::statevector::ZERO_PROB {
            0.0
        } else {
            st.project(anc, 0)?
        };
        Ok(StepOutcome {
            ancilla_bit: if p0 == 0.0 { 1 } else { 0 },
            p0,
        })
    };
    let mut hook = |st: &mut State, ctx: &StepContext| -> Result<()> {
        if let Some(e) = fault.filter(|e| e.stage == ctx.stage && e.step == ctx.step) {
            inject(st, ctx.data, e.kind, e.j)?;
        }
        Ok(())
    };
    let a = drive_single_ancilla(
        s,
        cfg.fourier_mode,
        cfg.shift_value(s),
        &mut measure,
        &mut hook,
    )?;
    Ok(a.p0.iter().product())
}

/// Exact acceptance probability under the single-fault model, summed over
/// every fault location, kind and qubit.
pub fn noisy_acceptance_exact(cfg: &RunConfig, model: &NoiseModel) -> Result<f64> {
    if model.multi_error {
        return Err(Error::InvalidArgument(
            "exact noisy acceptance needs the single-fault model".into(),
        ));
    }
    let s = cfg.effective_schedule();
    let mut survive = 1.0;
    let mut total = 0.0;
    for (stage, &t) in s.t.iter().enumerate() {
        let n = s.n1 + stage;
        let p = model.step_error_probability(n);
        for step in 0..t {
            if p > 0.0 {
                let w = survive * p / (2 * n) as f64;
                for kind in [ErrorKind::BitFlipX, ErrorKind::PhaseFlipZ] {
                    for j in 0..n {
                        total += w * fault_path_acceptance(
                            cfg,
                            &s,
                            Some(InjectedError {
                                kind,
                                j,
                                stage,
                                step,
                            }),
                        )?;
                    }
                }
            }
            survive *= 1.0 - p;
        }
    }
    Ok(total + survive * fault_path_acceptance(cfg, &s, None)?)
}

/// Shots `0..shots` in parallel, ordered by shot.
pub fn sample_noisy_shots(
    cfg: &RunConfig,
    model: &NoiseModel,
    shots: u64,
) -> Result<Vec<NoisyRecord>> {
    (0..shots)
        .into_par_iter()
        .map(|shot| sample_noisy_run(cfg, model, shot))
        .collect()
}

/// Acceptance counts split by whether a fault fired.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoisySummary {
    pub shots: u64,
    pub accepted: u64,
    pub errored: u64,
    pub rejected_with_error: u64,
    pub rejected_without_error: u64,
}

impl NoisySummary {
    pub fn from_records(records: &[NoisyRecord]) -> Self {
        let mut s = NoisySummary {
            shots: records.len() as u64,
            ..Default::default()
        };
        for r in records {
            let e = r.errored();
            s.accepted += r.record.accepted as u64;
            s.errored += e as u64;
            if !r.record.accepted {
                if e {
                    s.rejected_with_error += 1;
                } else {
                    s.rejected_without_error += 1;
                }
            }
        }
        s
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.shots as f64
    }

    pub fn p_reject_given_error(&self) -> f64 {
        self.rejected_with_error as f64 / self.errored as f64
    }

    pub fn p_reject_given_clean(&self) -> f64 {
        self.rejected_without_error as f64 / (self.shots - self.errored) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galton::run_post_selected;

    #[test]
    fn exact_noisy_acceptance_tracks_sampling() {
        let cfg = RunConfig::new(Schedule::new(2, vec![2, 2, 2]).unwrap()).seed(9);
        let clean = run_post_selected(&cfg).unwrap().acceptance;
        assert!(
            (noisy_acceptance_exact(&cfg, &NoiseModel::new(0.0).unwrap()).unwrap() - clean).abs()
                < 1e-12
        );
        let mut prev = clean;
        for eps in [0.005, 0.01, 0.02, 0.05] {
            let model = NoiseModel::new(eps).unwrap();
            let exact = noisy_acceptance_exact(&cfg, &model).unwrap();
            assert!(exact < prev);
            prev = exact;
            let recs = sample_noisy_shots(&cfg, &model, 4000).unwrap();
            let rate = NoisySummary::from_records(&recs).acceptance_rate();
            let se = (exact * (1.0 - exact) / 4000.0).sqrt();
            assert!(
                (rate - exact).abs() < 4.0 * se,
                "eps {eps}: {rate} vs {exact}"
            );
        }
    }

    #[test]
    fn infidelity_formula() {
        let m = NoiseModel::new(0.0).unwrap();
        assert_eq!(op_infidelity(&m, 5), 0.0);
        let m = NoiseModel::new(0.01).unwrap();
        assert!((op_infidelity(&m, 4) - (1.0 - 0.99f64.powi(8))).abs() < 1e-15);
        assert!((op_infidelity(&m, 4) - 0.07726).abs() < 1e-5);
        let mut prev = 0.0;
        for n in 1..10 {
            let v = op_infidelity(&m, n);
            assert!(v > prev);
            prev = v;
        }
        assert!(op_infidelity(&NoiseModel::new(0.02).unwrap(), 4) > op_infidelity(&m, 4));
        assert!(NoiseModel::new(1.0).is_err());
    }

    #[test]
    fn discontinuities() {
        assert_eq!(discontinuity_count(8, 0, 220), 0);
        assert_eq!(discontinuity_count(8, 7, 3), 1);
        assert_eq!(discontinuity_count(5, 2, 0), 0);
    }

    #[test]
    fn z_is_identity_when_support_avoids_sign_flip() {
        let n = 8;
        for j in 0..n {
            for t in [1u64, 5, 25, 60, 120, 250] {
                if t < 1u64 << (n - 1 - j) {
                    let (e, c) = rejection_probability(n, t, ErrorKind::PhaseFlipZ, j).unwrap();
                    assert!((e - c).abs() <= 1e-12, "j = {j}, t = {t}");
                }
            }
        }
    }

    #[test]
    fn msb_flip_is_a_translation() {
        let (e, c) = rejection_probability(8, 100, ErrorKind::BitFlipX, 0).unwrap();
        assert!((e - c).abs() < 1e-12);
    }

    #[test]
    fn sweep_matches_single_cells() {
        let rows = rejection_sweep(6, &[20, 7], &[1, 4]).unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[0].t, 7);
        for r in rows {
            let (e, c) = rejection_probability(6, r.t, r.kind, r.j).unwrap();
            assert!((e - r.p1_err).abs() < 1e-12 && (c - r.p1_clean).abs() < 1e-12);
        }
        assert!(rejection_sweep(4, &[15], &[0]).is_err());
        assert!(rejection_sweep(4, &[3], &[4]).is_err());
    }

    #[test]
    fn z_dominates_x_on_average() {
        let rows = rejection_sweep(8, &[50, 100, 200], &(0..8).collect::<Vec<_>>()).unwrap();
        for t in [50, 100, 200] {
            let mean = |k| {
                let v: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.t == t && r.kind == k)
                    .map(|r| r.p1_err)
                    .collect();
                v.iter().sum::<f64>() / v.len() as f64
            };
            assert!(mean(ErrorKind::PhaseFlipZ) >= mean(ErrorKind::BitFlipX));
        }
    }

    #[test]
    fn z_rejection_grows_with_sign_periods() {
        let rows = rejection_sweep(8, &[200], &(0..8).collect::<Vec<_>>()).unwrap();
        let z: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| r.kind == ErrorKind::PhaseFlipZ)
            .map(|r| (r.j, r.p1_err))
            .collect();
        let covered: Vec<f64> = z
            .iter()
            .filter(|(j, _)| discontinuity_count(8, *j, 200) >= 1)
            .map(|p| p.1)
            .collect();
        assert!(covered.len() >= 2);
        for w in covered.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn zero_noise_matches_clean_runs() {
        let cfg = RunConfig::new(Schedule::new(2, vec![2, 2, 2]).unwrap()).seed(3);
        let m = NoiseModel::new(0.0).unwrap();
        for shot in 0..20 {
            let a = sample_noisy_run(&cfg, &m, shot).unwrap();
            let b = crate::galton::run_mcmr(&cfg, shot).unwrap();
            assert!(!a.errored());
            assert_eq!(a.record, b);
        }
    }

    #[test]
    fn noisy_runs_are_reproducible() {
        let cfg = RunConfig::new(Schedule::new(3, vec![3, 2]).unwrap()).seed(11);
        let m = NoiseModel::new(0.05).unwrap();
        let a = sample_noisy_shots(&cfg, &m, 64).unwrap();
        let b = sample_noisy_shots(&cfg, &m, 64).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().any(|r| r.errored()));
        assert!(a.iter().all(|r| r.errors.len() <= 1));
    }

    #[test]
    fn acceptance_falls_with_noise() {
        let cfg = RunConfig::new(Schedule::new(2, vec![2, 2, 2]).unwrap()).seed(1);
        let clean = run_post_selected(&cfg).unwrap().acceptance;
        let rate = |eps| {
            let m = NoiseModel::new(eps).unwrap();
            NoisySummary::from_records(&sample_noisy_shots(&cfg, &m, 4000).unwrap())
                .acceptance_rate()
        };
        let hi = rate(0.05);
        assert!(hi < clean);
    }
}
