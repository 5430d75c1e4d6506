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

//! The walk step and the repeat-until-success drivers.
//!
//! One H-step takes `|j>|0>` to `(|j> + |j+1>)|0> + (|j> - |j+1>)|1>` (up to
//! normalization) and then reads the ancilla. Reading 0 keeps the walk;
//! reading 1 discards the attempt.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::Schedule;
use crate::statevector::{Register, State, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// One ancilla, measured and reused after every step.
    Mcmr,
    /// A fresh ancilla per step, all measured at the end.
    McmrFree,
    /// No qubit scaling: the equivalent single-stage walk on `nm` qubits.
    ExactNoScaling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FourierMode {
    /// Transform in and out of Fourier space around every stage.
    PerStage,
    /// All scaling qubits allocated up front, one transform pair overall;
    /// stage `r` steps add `2^{m-1-r}`.
    SingleQft,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftMode {
    None,
    /// Add `round(alpha)`.
    Rounded,
    /// Add the real `alpha` through the Fourier adder. Not a basis
    /// permutation when `alpha` is fractional.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schedule: Schedule,
    pub variant: Variant,
    pub seed: u64,
    pub max_attempts: u32,
    pub fourier_mode: FourierMode,
    pub shift: ShiftMode,
    pub max_qubits: usize,
}

impl RunConfig {
    pub fn new(schedule: Schedule) -> Self {
        RunConfig {
            schedule,
            variant: Variant::Mcmr,
            seed: 0,
            max_attempts: 1,
            fourier_mode: FourierMode::PerStage,
            shift: ShiftMode::Rounded,
            max_qubits: MAX_QUBITS,
        }
    }

    pub fn variant(mut self, v: Variant) -> Self {
        self.variant = v;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn max_attempts(mut self, n: u32) -> Self {
        self.max_attempts = n;
        self
    }

    pub fn fourier_mode(mut self, f: FourierMode) -> Self {
        self.fourier_mode = f;
        self
    }

    pub fn shift(mut self, s: ShiftMode) -> Self {
        self.shift = s;
        self
    }

    /// Schedule actually executed: the exact variant swaps in the
    /// single-stage equivalent.
    pub fn effective_schedule(&self) -> Schedule {
        match self.variant {
            Variant::ExactNoScaling => self.schedule.exact_equivalent(),
            _ => self.schedule.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_attempts < 1 {
            return Err(Error::InvalidArgument(
                "max_attempts must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn shift_value(&self, s: &Schedule) -> Option<f64> {
        match self.shift {
            ShiftMode::None => None,
            ShiftMode::Rounded => Some(s.applied_shift() as f64),
            ShiftMode::Exact => Some(s.alpha),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub ancilla_bit: u8,
    pub p0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub shot: u64,
    pub attempts: u32,
    pub accepted: bool,
    pub ancilla_trace: Vec<u8>,
    pub per_step_p0: Vec<f64>,
    pub total_qubits: usize,
    #[serde(skip)]
    pub final_state: Option<State>,
}

/// Deterministic evolution with every ancilla projected onto `|0>`.
#[derive(Clone, Debug, PartialEq)]
pub struct PostSelected {
    pub state: State,
    pub acceptance: f64,
    pub per_step_p0: Vec<f64>,
}

/// Where the driver is when a step has just completed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepContext {
    pub stage: usize,
    pub step: u32,
    /// Data register in the joint state, currently in Fourier space.
    pub data: Register,
    /// Logical qubit count `n_r` of the current stage.
    pub logical_qubits: usize,
}

/// Qubit footprint of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resources {
    pub total: u64,
    pub ancillas: u64,
}

impl Resources {
    pub fn mcmr(s: &Schedule) -> Self {
        Resources {
            total: s.nm() as u64 + 1,
            ancillas: 1,
        }
    }

    pub fn mcmr_free(s: &Schedule) -> Self {
        let a = s.total_steps();
        Resources {
            total: s.nm() as u64 + a,
            ancillas: a,
        }
    }
}

pub fn qubit_resources(cfg: &RunConfig) -> Resources {
    match cfg.variant {
        Variant::Mcmr => Resources::mcmr(&cfg.schedule),
        Variant::McmrFree => Resources::mcmr_free(&cfg.schedule),
        Variant::ExactNoScaling => Resources::mcmr(&cfg.schedule.exact_equivalent()),
    }
}

/// Generator for one attempt of one shot. Shots get independent keys,
/// attempts independent streams under that key.
pub fn attempt_rng(seed: u64, shot: u64, attempt: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(shot)));
    rng.set_stream(attempt as u64);
    rng
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `H(anc) -> controlled +d on data -> H(anc)`, without measuring.
pub fn h_step_unitary(s: &mut State, ancilla: usize, data: Register, d: f64) -> Result<()> {
    s.apply_hadamard(ancilla)?;
    s.ctrl_fourier_add(ancilla, data, d)?;
    s.apply_hadamard(ancilla)
}

fn check_ancilla_clear(s: &State, ancilla: usize) -> Result<()> {
    let p1 = s.prob_of(ancilla, 1)?;
    if p1 > 1e-12 {
        return Err(Error::AncillaNotReset { qubit: ancilla, p1 });
    }
    Ok(())
}

/// One sampled H-step. `data` must be in Fourier space and the ancilla in
/// `|0>`. After a 1 the ancilla is left in `|1>`; callers discard the state.
pub fn apply_h_step<R: Rng + ?Sized>(
    s: &mut State,
    ancilla: usize,
    data: Register,
    d: f64,
    rng: &mut R,
) -> Result<StepOutcome> {
    check_ancilla_clear(s, ancilla)?;
    h_step_unitary(s, ancilla, data, d)?;
    let (ancilla_bit, p0) = s.measure_qubit(ancilla, rng)?;
    Ok(StepOutcome { ancilla_bit, p0 })
}

/// One H-step with the ancilla projected onto 0. Returns `p0`.
pub fn apply_h_step_post_selected(
    s: &mut State,
    ancilla: usize,
    data: Register,
    d: f64,
) -> Result<f64> {
    check_ancilla_clear(s, ancilla)?;
    h_step_unitary(s, ancilla, data, d)?;
    s.project(ancilla, 0)
}

/// Result of a single attempt in the single-ancilla driver.
pub(crate) struct Attempt {
    pub state: Option<State>,
    pub trace: Vec<u8>,
    pub p0: Vec<f64>,
}

pub(crate) type MeasureFn<'a> = dyn FnMut(&mut State, usize) -> Result<StepOutcome> + 'a;
pub(crate) type HookFn<'a> = dyn FnMut(&mut State, &StepContext) -> Result<()> + 'a;

/// Runs one attempt with a single reused ancilla. `measure` reads the
/// ancilla after each step; `hook` runs after every step that read 0.
pub(crate) fn drive_single_ancilla(
    s: &Schedule,
    mode: FourierMode,
    shift: Option<f64>,
    measure: &mut MeasureFn<'_>,
    hook: &mut HookFn<'_>,
) -> Result<Attempt> {
    let m = s.m();
    let mut trace = Vec::with_capacity(s.total_steps() as usize);
    let mut p0s = Vec::with_capacity(trace.capacity());
    let mut st = State::basis(s.n1, 0)?;
    if mode == FourierMode::SingleQft {
        for _ in 1..m {
            st.append_plus_qubit()?;
        }
        st.qft()?;
        st.append_zero_qubit()?;
    }
    for r in 0..m {
        let (data, d) = match mode {
            FourierMode::PerStage => {
                if r > 0 {
                    st.append_plus_qubit()?;
                }
                st.qft()?;
                st.append_zero_qubit()?;
                (Register::new(0, s.n1 + r), 1.0)
            }
            FourierMode::SingleQft => (Register::new(0, s.nm()), (1u64 << (m - 1 - r)) as f64),
        };
        let anc = data.len;
        for k in 0..s.t[r] {
            h_step_unitary(&mut st, anc, data, d)?;
            let out = measure(&mut st, anc)?;
            trace.push(out.ancilla_bit);
            p0s.push(out.p0);
            if out.ancilla_bit == 1 {
                return Ok(Attempt {
                    state: None,
                    trace,
                    p0: p0s,
                });
            }
            let ctx = StepContext {
                stage: r,
                step: k,
                data,
                logical_qubits: s.n1 + r,
            };
            hook(&mut st, &ctx)?;
        }
        let last = r + 1 == m;
        if last {
            if let Some(alpha) = shift {
                st.fourier_add_on(data, alpha)?;
            }
        }
        if mode == FourierMode::PerStage || last {
            st.remove_last_qubit()?;
            st.iqft()?;
        }
    }
    Ok(Attempt {
        state: Some(st),
        trace,
        p0: p0s,
    })
}

/// Deterministic run: every ancilla read is projected onto 0.
pub fn run_post_selected(cfg: &RunConfig) -> Result<PostSelected> {
    let s = cfg.effective_schedule();
    let mut measure = |st: &mut State, anc: usize| -> Result<StepOutcome> {
        let p0 = st.project(anc, 0)?;
        Ok(StepOutcome { ancilla_bit: 0, p0 })
    };
    let a = drive_single_ancilla(
        &s,
        cfg.fourier_mode,
        cfg.shift_value(&s),
        &mut measure,
        &mut |_, _| Ok(()),
    )?;
    Ok(PostSelected {
        state: a.state.expect("projection never rejects"),
        acceptance: a.p0.iter().product(),
        per_step_p0: a.p0,
    })
}

/// Repeat-until-success with one reused ancilla.
pub fn run_mcmr(cfg: &RunConfig, shot: u64) -> Result<RunRecord> {
    cfg.validate()?;
    let s = cfg.effective_schedule();
    let res = Resources::mcmr(&s);
    if res.total as usize > cfg.max_qubits.min(MAX_QUBITS) {
        return Err(Error::Capacity {
            requested: res.total as usize,
            limit: cfg.max_qubits.min(MAX_QUBITS),
        });
    }
    let shift = cfg.shift_value(&s);
    let mut last = None;
    for attempt in 1..=cfg.max_attempts {
        let mut rng = attempt_rng(cfg.seed, shot, attempt);
        let mut measure = |st: &mut State, anc: usize| -> Result<StepOutcome> {
            let (ancilla_bit, p0) = st.measure_qubit(anc, &mut rng)?;
            Ok(StepOutcome { ancilla_bit, p0 })
        };
        let a = drive_single_ancilla(
            &s,
            cfg.fourier_mode,
            shift,
            &mut measure,
            &mut |_, _| Ok(()),
        )?;
        let accepted = a.state.is_some();
        let rec = RunRecord {
            shot,
            attempts: attempt,
            accepted,
            ancilla_trace: a.trace,
            per_step_p0: a.p0,
            total_qubits: res.total as usize,
            final_state: a.state,
        };
        if accepted {
            return Ok(rec);
        }
        last = Some(rec);
    }
    Ok(last.expect("at least one attempt"))
}

/// Builds the joint data-plus-ancillas state of the deferred-measurement
/// variant: one fresh ancilla per step, appended after everything else.
/// The data register stays at qubits `0..n`; ancillas sit behind it.
pub fn mcmr_free_joint_state(s: &Schedule, mode: FourierMode, shift: Option<f64>) -> Result<State> {
    let m = s.m();
    let mut st = State::basis(s.n1, 0)?;
    if mode == FourierMode::SingleQft {
        for _ in 1..m {
            st.append_plus_qubit()?;
        }
        st.qft_on(Register::new(0, s.nm()))?;
    }
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    for r in 0..m {
        let n = s.n1 + r;
        let (data, d) = match mode {
            FourierMode::PerStage => {
                if r > 0 {
                    // new least significant data qubit, ahead of the ancillas
                    st.insert_qubit(n - 1, h, h)?;
                }
                let data = Register::new(0, n);
                st.qft_on(data)?;
                (data, 1.0)
            }
            FourierMode::SingleQft => (Register::new(0, s.nm()), (1u64 << (m - 1 - r)) as f64),
        };
        for _ in 0..s.t[r] {
            st.append_zero_qubit()?;
            let anc = st.num_qubits() - 1;
            h_step_unitary(&mut st, anc, data, d)?;
        }
        let last = r + 1 == m;
        if last {
            if let Some(alpha) = shift {
                st.fourier_add_on(data, alpha)?;
            }
        }
        if mode == FourierMode::PerStage || last {
            st.iqft_on(data)?;
        }
    }
    Ok(st)
}

/// Deferred-measurement variant with all ancillas projected onto 0.
pub fn run_mcmr_free_post_selected(cfg: &RunConfig) -> Result<PostSelected> {
    let s = cfg.effective_schedule();
    check_free_capacity(cfg, &s)?;
    let mut st = mcmr_free_joint_state(&s, cfg.fourier_mode, cfg.shift_value(&s))?;
    let k = s.total_steps() as usize;
    let mut per_step_p0 = Vec::with_capacity(k);
    for i in 0..k {
        per_step_p0.push(st.project(s.nm() + i, 0)?);
    }
    let acceptance = per_step_p0.iter().product();
    st.project_trailing_zeros(k)?;
    Ok(PostSelected {
        state: st,
        acceptance,
        per_step_p0,
    })
}

fn check_free_capacity(cfg: &RunConfig, s: &Schedule) -> Result<()> {
    let need = Resources::mcmr_free(s).total as usize;
    let limit = cfg.max_qubits.min(MAX_QUBITS);
    if need > limit {
        return Err(Error::Capacity {
            requested: need,
            limit,
        });
    }
    Ok(())
}

/// Deferred-measurement run: the whole circuit executes, then every ancilla
/// is measured in step order. Accepted iff all read 0.
pub fn run_mcmr_free(cfg: &RunConfig, shot: u64) -> Result<RunRecord> {
    cfg.validate()?;
    let s = cfg.effective_schedule();
    check_free_capacity(cfg, &s)?;
    let joint = mcmr_free_joint_state(&s, cfg.fourier_mode, cfg.shift_value(&s))?;
    let k = s.total_steps() as usize;
    let total_qubits = joint.num_qubits();
    let mut last = None;
    for attempt in 1..=cfg.max_attempts {
        let mut rng = attempt_rng(cfg.seed, shot, attempt);
        let mut st = joint.clone();
        let mut trace = Vec::with_capacity(k);
        let mut p0s = Vec::with_capacity(k);
        for i in 0..k {
            let (bit, p0) = st.measure_qubit(s.nm() + i, &mut rng)?;
            trace.push(bit);
            p0s.push(p0);
        }
        let accepted = trace.iter().all(|&b| b == 0);
        let final_state = if accepted {
            st.project_trailing_zeros(k)?;
            Some(st)
        } else {
            None
        };
        let rec = RunRecord {
            shot,
            attempts: attempt,
            accepted,
            ancilla_trace: trace,
            per_step_p0: p0s,
            total_qubits,
            final_state,
        };
        if accepted {
            return Ok(rec);
        }
        last = Some(rec);
    }
    Ok(last.expect("at least one attempt"))
}

/// Dispatches on the configured variant.
pub fn run(cfg: &RunConfig, shot: u64) -> Result<RunRecord> {
    match cfg.variant {
        Variant::McmrFree => run_mcmr_free(cfg, shot),
        Variant::Mcmr | Variant::ExactNoScaling => run_mcmr(cfg, shot),
    }
}

/// Runs shots `0..shots` in parallel; output is ordered by shot index.
pub fn run_shots(cfg: &RunConfig, shots: u64) -> Result<Vec<RunRecord>> {
    (0..shots)
        .into_par_iter()
        .map(|shot| run(cfg, shot))
        .collect()
}
