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

//! Dense complex statevector kernel.
//!
//! Bit convention: qubit 0 is the *most* significant bit of the basis label.
//! For an `n`-qubit state, qubit `q` corresponds to bit `n - 1 - q` of the
//! amplitude index. Appending a qubit therefore adds a new least significant
//! bit, and an ancilla appended after a data register sits at index `n_data`.
//!
//! Operations mutate the state in place. Fourier-space bookkeeping is the
//! caller's job: nothing here records whether a register has been
//! transformed.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::io;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Hard upper bound on the number of qubits a [`State`] may hold.
pub const MAX_QUBITS: usize = 24;

/// Probabilities at or below this are treated as exactly zero when projecting.
pub(crate) const ZERO_PROB: f64 = 1e-28;

/// Tolerance used to decide whether a phase angle is a multiple of 2π.
const ANGLE_EPS: f64 = 1e-12;

/// A contiguous block of qubits `[start, start + len)`; `start` is the most
/// significant qubit of the block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Register {
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub fn new(start: usize, len: usize) -> Self {
        Register { start, len }
    }

    pub fn contains(&self, q: usize) -> bool {
        q >= self.start && q < self.start + self.len
    }

    pub fn qubit(&self, k: usize) -> usize {
        self.start + k
    }
}

/// Phase angle in radians for the U1 family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseAngle(pub f64);

impl PhaseAngle {
    /// Angle of the `k`-th (1-based) adder rotation for a shift of `d`.
    pub fn adder(d: f64, k: usize) -> Self {
        PhaseAngle(TAU * d / 2f64.powi(k as i32))
    }

    /// True when the rotation is the identity gate.
    pub fn is_identity(&self) -> bool {
        let turns = self.0 / TAU;
        (turns - turns.round()).abs() < ANGLE_EPS
    }

    fn phasor(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.0)
    }
}

/// Dense statevector over `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    n: usize,
    amps: Vec<Complex64>,
}

impl State {
    /// Computational basis state `|x>` on `n` qubits.
    pub fn basis(n: usize, x: u64) -> Result<Self> {
        check_capacity(n)?;
        if n == 0 {
            return Err(Error::InvalidArgument(
                "a state needs at least one qubit".into(),
            ));
        }
        let dim = 1u64 << n;
        if x >= dim {
            return Err(Error::BasisOutOfRange { x, n });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim as usize];
        amps[x as usize] = Complex64::new(1.0, 0.0);
        Ok(State { n, amps })
    }

    /// Wraps an amplitude vector whose length is a power of two. The vector is
    /// not renormalized.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector length {dim} is not a power of two >= 2"
            )));
        }
        let n = dim.trailing_zeros() as usize;
        check_capacity(n)?;
        Ok(State { n, amps })
    }

    /// Real amplitudes, convenience over [`State::from_amplitudes`].
    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm and returns the norm squared before rescaling.
    pub fn normalize(&mut self) -> f64 {
        let ns = self.norm_sqr();
        if ns > 0.0 {
            let s = 1.0 / ns.sqrt();
            self.amps.iter_mut().for_each(|a| *a *= s);
        }
        ns
    }

    fn mask(&self, q: usize) -> Result<usize> {
        if q >= self.n {
            return Err(Error::QubitOutOfRange {
                index: q,
                n: self.n,
            });
        }
        Ok(1usize << (self.n - 1 - q))
    }

    fn check_register(&self, reg: Register) -> Result<()> {
        if reg.len == 0 || reg.start + reg.len > self.n {
            return Err(Error::QubitOutOfRange {
                index: reg.start + reg.len.max(1) - 1,
                n: self.n,
            });
        }
        Ok(())
    }

    pub fn full_register(&self) -> Register {
        Register::new(0, self.n)
    }

    pub fn apply_hadamard(&mut self, q: usize) -> Result<()> {
        let m = self.mask(q)?;
        for i in 0..self.amps.len() {
            if i & m == 0 {
                let (a, b) = (self.amps[i], self.amps[i | m]);
                self.amps[i] = (a + b) * FRAC_1_SQRT_2;
                self.amps[i | m] = (a - b) * FRAC_1_SQRT_2;
            }
        }
        Ok(())
    }

    pub fn apply_x(&mut self, q: usize) -> Result<()> {
        let m = self.mask(q)?;
        for i in 0..self.amps.len() {
            if i & m == 0 {
                self.amps.swap(i, i | m);
            }
        }
        Ok(())
    }

    pub fn apply_z(&mut self, q: usize) -> Result<()> {
        let m = self.mask(q)?;
        self.amps
            .iter_mut()
            .enumerate()
            .filter(|(i, _)| i & m != 0)
            .for_each(|(_, a)| *a = -*a);
        Ok(())
    }

    /// `diag(1, e^{iλ})` on qubit `q`.
    pub fn apply_u1(&mut self, q: usize, lambda: PhaseAngle) -> Result<()> {
        let m = self.mask(q)?;
        let ph = lambda.phasor();
        self.amps
            .iter_mut()
            .enumerate()
            .filter(|(i, _)| i & m != 0)
            .for_each(|(_, a)| *a *= ph);
        Ok(())
    }

    /// Controlled U1: phase `e^{iλ}` on the `|11>` component of `(ctrl, tgt)`.
    pub fn apply_cu1(&mut self, ctrl: usize, tgt: usize, lambda: PhaseAngle) -> Result<()> {
        if ctrl == tgt {
            return Err(Error::InvalidControl {
                ctrl,
                reason: "control equals target",
            });
        }
        let both = self.mask(ctrl)? | self.mask(tgt)?;
        let ph = lambda.phasor();
        self.amps
            .iter_mut()
            .enumerate()
            .filter(|(i, _)| i & both == both)
            .for_each(|(_, a)| *a *= ph);
        Ok(())
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) -> Result<()> {
        let (ma, mb) = (self.mask(a)?, self.mask(b)?);
        if a == b {
            return Ok(());
        }
        for i in 0..self.amps.len() {
            // visit each (10, 01) pair once, from the side where a is set
            if i & ma != 0 && i & mb == 0 {
                self.amps.swap(i, (i & !ma) | mb);
            }
        }
        Ok(())
    }

    /// `|x> -> 2^{-n/2} Σ_y e^{2πi xy/2^n} |y>` over the whole state.
    pub fn qft(&mut self) -> Result<()> {
        self.qft_on(self.full_register())
    }

    pub fn iqft(&mut self) -> Result<()> {
        self.iqft_on(self.full_register())
    }

    /// QFT on a sub-register, output in natural bit order.
    pub fn qft_on(&mut self, reg: Register) -> Result<()> {
        self.check_register(reg)?;
        let n = reg.len;
        for i in 0..n {
            self.apply_hadamard(reg.qubit(i))?;
            for j in i + 1..n {
                let angle = PhaseAngle(PI / (1u64 << (j - i)) as f64);
                self.apply_cu1(reg.qubit(j), reg.qubit(i), angle)?;
            }
        }
        for i in 0..n / 2 {
            self.apply_swap(reg.qubit(i), reg.qubit(n - 1 - i))?;
        }
        Ok(())
    }

    pub fn iqft_on(&mut self, reg: Register) -> Result<()> {
        self.check_register(reg)?;
        let n = reg.len;
        for i in 0..n / 2 {
            self.apply_swap(reg.qubit(i), reg.qubit(n - 1 - i))?;
        }
        for i in (0..n).rev() {
            for j in (i + 1..n).rev() {
                let angle = PhaseAngle(-PI / (1u64 << (j - i)) as f64);
                self.apply_cu1(reg.qubit(j), reg.qubit(i), angle)?;
            }
            self.apply_hadamard(reg.qubit(i))?;
        }
        Ok(())
    }

    /// Fourier-space adder on the whole state; see [`State::fourier_add_on`].
    pub fn fourier_add(&mut self, d: f64) -> Result<usize> {
        self.fourier_add_on(self.full_register(), d)
    }

    /// Applies `U1(2π d / 2^k)` to the `k`-th register qubit (k = 1 is the
    /// most significant). Sandwiched between `qft_on` and `iqft_on` this maps
    /// `|x> -> |x + d mod 2^n>` for integer `d`. Identity rotations are
    /// skipped; returns the number of rotations actually applied.
    pub fn fourier_add_on(&mut self, reg: Register, d: f64) -> Result<usize> {
        self.check_register(reg)?;
        let mut applied = 0;
        for k in 1..=reg.len {
            let angle = PhaseAngle::adder(d, k);
            if !angle.is_identity() {
                self.apply_u1(reg.qubit(k - 1), angle)?;
                applied += 1;
            }
        }
        Ok(applied)
    }

    /// Controlled Fourier adder: the rotations of [`State::fourier_add_on`],
    /// each conditioned on `ctrl`. CU1 gates whose angle is a multiple of 2π
    /// are elided; returns the number of CU1 gates applied.
    pub fn ctrl_fourier_add(&mut self, ctrl: usize, reg: Register, d: f64) -> Result<usize> {
        self.check_register(reg)?;
        self.mask(ctrl)?;
        if reg.contains(ctrl) {
            return Err(Error::InvalidControl {
                ctrl,
                reason: "control lies inside the target register",
            });
        }
        let mut applied = 0;
        for k in 1..=reg.len {
            let angle = PhaseAngle::adder(d, k);
            if !angle.is_identity() {
                self.apply_cu1(ctrl, reg.qubit(k - 1), angle)?;
                applied += 1;
            }
        }
        Ok(applied)
    }

    /// Inserts a fresh qubit in state `a0|0> + a1|1>` at position `pos`
    /// (0 = new most significant qubit, `n` = new least significant).
    pub fn insert_qubit(&mut self, pos: usize, a0: Complex64, a1: Complex64) -> Result<()> {
        if pos > self.n {
            return Err(Error::QubitOutOfRange {
                index: pos,
                n: self.n + 1,
            });
        }
        check_capacity(self.n + 1)?;
        let low_bits = self.n - pos;
        let low_mask = (1usize << low_bits) - 1;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len() * 2];
        for (x, &a) in self.amps.iter().enumerate() {
            let high = x >> low_bits;
            let low = x & low_mask;
            let base = (high << (low_bits + 1)) | low;
            out[base] = a * a0;
            out[base | (1 << low_bits)] = a * a1;
        }
        self.n += 1;
        self.amps = out;
        Ok(())
    }

    /// `|x> -> (|2x> + |2x+1>)/√2`: a `|+>` qubit as the new least
    /// significant bit.
    pub fn append_plus_qubit(&mut self) -> Result<()> {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        self.insert_qubit(self.n, h, h)
    }

    pub fn append_zero_qubit(&mut self) -> Result<()> {
        self.insert_qubit(self.n, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    /// Drops the `k` least significant qubits after projecting them all onto
    /// `|0>`. Returns the probability of that joint outcome; the remaining
    /// state is renormalized.
    pub fn project_trailing_zeros(&mut self, k: usize) -> Result<f64> {
        if k >= self.n {
            return Err(Error::QubitOutOfRange {
                index: k,
                n: self.n,
            });
        }
        let amps: Vec<Complex64> = self.amps.iter().step_by(1 << k).copied().collect();
        let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if p <= ZERO_PROB {
            return Err(Error::ZeroProbability {
                qubit: self.n - 1,
                bit: 0,
                prob: p,
            });
        }
        self.n -= k;
        self.amps = amps;
        let s = 1.0 / p.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= s);
        Ok(p)
    }

    /// Removes the least significant qubit, which must already be `|0>`.
    pub fn remove_last_qubit(&mut self) -> Result<()> {
        let q = self.n - 1;
        let p1 = self.prob_of(q, 1)?;
        if p1 > 1e-12 {
            return Err(Error::AncillaNotReset { qubit: q, p1 });
        }
        self.project_trailing_zeros(1).map(|_| ())
    }

    /// Born probability of reading `bit` on qubit `q`.
    pub fn prob_of(&self, q: usize, bit: u8) -> Result<f64> {
        let m = self.mask(q)?;
        let want = if bit == 0 { 0 } else { m };
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & m == want)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Collapses qubit `q` onto `bit` and renormalizes. Returns the
    /// probability of the outcome.
    pub fn project(&mut self, q: usize, bit: u8) -> Result<f64> {
        let p = self.prob_of(q, bit)?;
        if p <= ZERO_PROB {
            return Err(Error::ZeroProbability {
                qubit: q,
                bit,
                prob: p,
            });
        }
        let m = self.mask(q)?;
        let want = if bit == 0 { 0 } else { m };
        let s = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & m == want {
                *a *= s;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(p)
    }

    /// Samples a standard-basis measurement of qubit `q` and collapses.
    /// Returns the outcome bit and the probability the qubit had of reading 0.
    pub fn measure_qubit<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<(u8, f64)> {
        let p0 = self.prob_of(q, 0)?;
        let u: f64 = rng.random();
        let bit = if u < p0 { 0 } else { 1 };
        self.project(q, bit)?;
        Ok((bit, p0))
    }

    /// Writes `index,re,im,prob` rows.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["index", "re", "im", "prob"])?;
        for (i, a) in self.amps.iter().enumerate() {
            wtr.serialize((i, a.re, a.im, a.norm_sqr()))?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn check_capacity(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::Capacity {
            requested: n,
            limit: MAX_QUBITS,
        });
    }
    Ok(())
}
