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

use std::f64::consts::TAU;

use galton_core::analysis::{binomial_amplitudes, gaussian_reference, stats, Convention};
use galton_core::galton::{
    h_step_unitary, run_mcmr_free_post_selected, run_post_selected, FourierMode, RunConfig,
    ShiftMode, Variant,
};
use galton_core::schedule::Schedule;
use galton_core::statevector::{PhaseAngle, Register, State};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(n: usize, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1usize << n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let mut s = State::from_amplitudes(amps).unwrap();
    s.normalize();
    s
}

fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn unshifted(s: Schedule) -> RunConfig {
    RunConfig::new(s).shift(ShiftMode::None)
}

#[test]
fn qft_matches_dense_dft() {
    for n in 1..=6 {
        let dim = 1usize << n;
        let psi = random_state(n, n as u64);
        let mut want = vec![Complex64::new(0.0, 0.0); dim];
        for (y, w) in want.iter_mut().enumerate() {
            for (x, a) in psi.amplitudes().iter().enumerate() {
                let ph = TAU * ((x * y) % dim) as f64 / dim as f64;
                *w += a * Complex64::from_polar(1.0, ph);
            }
            *w /= (dim as f64).sqrt();
        }
        let mut got = psi.clone();
        got.qft().unwrap();
        assert!(max_dev(got.amplitudes(), &want) <= 1e-10, "n = {n}");
    }
}

#[test]
fn fourier_adder_is_modular_addition() {
    for n in 1..=6usize {
        let dim = 1u64 << n;
        for d in 0..dim {
            for x in 0..dim {
                let mut s = State::basis(n, x).unwrap();
                s.qft().unwrap();
                s.fourier_add(d as f64).unwrap();
                s.iqft().unwrap();
                let want = State::basis(n, (x + d) % dim).unwrap();
                assert!(
                    max_dev(s.amplitudes(), want.amplitudes()) <= 1e-10,
                    "n={n} x={x} d={d}"
                );
            }
        }
    }
}

#[test]
fn controlled_adder_with_set_control_is_adder() {
    let n = 4;
    for d in 0..16u64 {
        for x in 0..16u64 {
            // control as the most significant qubit, register behind it
            let mut a = State::basis(n + 1, (1 << n) | x).unwrap();
            let reg = Register::new(1, n);
            a.qft_on(reg).unwrap();
            a.ctrl_fourier_add(0, reg, d as f64).unwrap();
            a.iqft_on(reg).unwrap();
            let want = State::basis(n + 1, (1 << n) | ((x + d) % 16)).unwrap();
            assert!(max_dev(a.amplitudes(), want.amplitudes()) <= 1e-10);
        }
    }
}

#[test]
fn binomial_oracle_small_t() {
    for t in 0..=40u32 {
        let n = (t as f64 + 1.0).log2().ceil().max(1.0) as usize;
        let p = run_post_selected(&unshifted(Schedule::new(n, vec![t]).unwrap())).unwrap();
        let want = binomial_amplitudes(t as u64);
        for (k, a) in p.state.amplitudes().iter().enumerate() {
            let w = want.get(k).copied().unwrap_or(0.0);
            assert!((a - Complex64::new(w, 0.0)).norm() <= 1e-9, "t={t} k={k}");
        }
    }
}

#[test]
fn oracle_agreement_small_schedules() {
    // every wrap-free schedule with n1 <= nm <= 5 and t_i <= 8 on a sparse grid
    let mut checked = 0;
    for n1 in 1..=5usize {
        for m in 1..=(6 - n1) {
            for seed in 0..40u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed * 31 + n1 as u64 * 7 + m as u64);
                let t: Vec<u32> = (0..m).map(|_| rng.random_range(0..=8)).collect();
                let s = Schedule::new(n1, t).unwrap();
                if !s.wraparound_stages().is_empty() {
                    continue;
                }
                let p = run_post_selected(&unshifted(s.clone())).unwrap();
                let st = stats(&p.state);
                assert!(
                    (st.mean_amp.unwrap() - s.predicted_mean()).abs() <= 1e-9,
                    "{s:?}"
                );
                assert!(
                    (st.var_amp.unwrap() - s.predicted_variance()).abs() <= 1e-9,
                    "{s:?}"
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn variance_after_47_steps() {
    let p = run_post_selected(&unshifted(Schedule::new(6, vec![47]).unwrap())).unwrap();
    assert!((stats(&p.state).var_amp.unwrap() - 11.75).abs() < 1e-9);
}

#[test]
fn per_step_law_exact_variant() {
    let p = run_post_selected(&unshifted(Schedule::new(7, vec![60]).unwrap())).unwrap();
    for (k, p0) in p.per_step_p0.iter().enumerate() {
        let t = (k + 1) as f64;
        assert!((p0 - (1.0 - 1.0 / (2.0 * t))).abs() <= 1e-12);
    }
}

#[test]
fn variants_agree_exhaustively() {
    for n1 in 1..=3usize {
        for m in 1..=3usize {
            let total = 3usize.pow(m as u32);
            for code in 0..total {
                let t: Vec<u32> = (0..m)
                    .map(|k| ((code / 3usize.pow(k as u32)) % 3) as u32)
                    .collect();
                let s = Schedule::new(n1, t).unwrap().with_alpha(1.0);
                for mode in [FourierMode::PerStage, FourierMode::SingleQft] {
                    let cfg = RunConfig::new(s.clone()).fourier_mode(mode);
                    let a = run_post_selected(&cfg).unwrap();
                    let b = run_mcmr_free_post_selected(&cfg.clone().variant(Variant::McmrFree))
                        .unwrap();
                    assert!((a.acceptance - b.acceptance).abs() <= 1e-9);
                    assert!(
                        max_dev(a.state.amplitudes(), b.state.amplitudes()) <= 1e-9,
                        "{s:?} {mode:?}"
                    );
                    for (x, y) in a.per_step_p0.iter().zip(&b.per_step_p0) {
                        assert!((x - y).abs() <= 1e-9);
                    }
                }
            }
        }
    }
}

#[test]
fn cancellation_improves_with_resolution() {
    // fixed continuous width: grid variance grows by 4 per added qubit
    let mut prev = f64::INFINITY;
    for n in 4..=9usize {
        let dim = 1usize << n;
        let sigma_sq = 1.5 * 4f64.powi(n as i32 - 4);
        let a = gaussian_reference(
            dim as f64 / 2.0 - 0.5,
            sigma_sq,
            dim,
            Convention::BinIntegral,
        )
        .unwrap();
        let mut s = State::from_real(&a).unwrap();
        s.qft().unwrap();
        s.append_zero_qubit().unwrap();
        h_step_unitary(&mut s, n, Register::new(0, n), 1.0).unwrap();
        let p1 = s.prob_of(n, 1).unwrap();
        assert!(p1 < prev, "n = {n}");
        prev = p1;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitaries_preserve_norm(n in 2usize..=10, seed in any::<u64>(), lambda in -10.0f64..10.0) {
        let mut s = random_state(n, seed);
        let q = (seed as usize) % n;
        let c = (q + 1) % n;
        s.apply_hadamard(q).unwrap();
        s.apply_x(c).unwrap();
        s.apply_z(q).unwrap();
        s.apply_u1(c, PhaseAngle(lambda)).unwrap();
        s.apply_cu1(c, q, PhaseAngle(lambda)).unwrap();
        s.qft().unwrap();
        s.fourier_add(lambda).unwrap();
        s.iqft().unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn adder_phases_compose(d1 in -20.0f64..20.0, d2 in -20.0f64..20.0, seed in any::<u64>()) {
        let base = random_state(4, seed);
        let mut a = base.clone();
        a.fourier_add(d1).unwrap();
        a.fourier_add(d2).unwrap();
        let mut b = base;
        b.fourier_add(d1 + d2).unwrap();
        prop_assert!(max_dev(a.amplitudes(), b.amplitudes()) <= 1e-10);
    }

    #[test]
    fn append_doubles_resolution(n in 1usize..=6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amps: Vec<f64> = (0..1usize << n).map(|_| rng.random::<f64>()).collect();
        let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut s = State::from_real(&amps.iter().map(|a| a / norm).collect::<Vec<_>>()).unwrap();
        let before = stats(&s);
        s.append_plus_qubit().unwrap();
        let after = stats(&s);
        prop_assert!((after.var_prob - (4.0 * before.var_prob + 0.25)).abs() <= 1e-9);
        prop_assert!((after.var_amp.unwrap() - (4.0 * before.var_amp.unwrap() + 0.25)).abs() <= 1e-9);
        prop_assert!((after.mean_amp.unwrap() - (2.0 * before.mean_amp.unwrap() + 0.5)).abs() <= 1e-9);
    }

    #[test]
    fn fourier_modes_agree(n1 in 1usize..=4, t in proptest::collection::vec(0u32..=4, 1..=4), alpha in -3i32..=3) {
        let s = Schedule::new(n1, t).unwrap().with_alpha(alpha as f64);
        let a = run_post_selected(&RunConfig::new(s.clone())).unwrap();
        let b = run_post_selected(&RunConfig::new(s).fourier_mode(FourierMode::SingleQft)).unwrap();
        prop_assert!(max_dev(a.state.amplitudes(), b.state.amplitudes()) <= 1e-10);
        for (x, y) in a.per_step_p0.iter().zip(&b.per_step_p0) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }
}
