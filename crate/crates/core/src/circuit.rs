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

//! Gate-level form of the single-transform circuit, and an OpenQASM 3
//! style emitter.
//!
//! The transform omits its closing swaps, so the register sits in
//! bit-reversed Fourier order between the transform pair. Data qubit `i`
//! (0 = most significant) then takes the adder rotation `2 pi d / 2^{nm-i}`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use crate::error::Result;
use crate::galton::ShiftMode;
use crate::schedule::Schedule;
use crate::statevector::{PhaseAngle, State};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Qubit {
    Data(usize),
    Ancilla,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Instruction {
    H(Qubit),
    U1(Qubit, f64),
    Cu1 {
        ctrl: Qubit,
        tgt: Qubit,
        lambda: f64,
    },
    /// Mid-circuit ancilla read into `a[bit]`.
    MeasureAncilla {
        bit: usize,
    },
    Reset(Qubit),
    /// Final read of data qubit `i` into `c[i]`.
    MeasureData(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_data: usize,
    pub n_ancilla_bits: usize,
    pub instructions: Vec<Instruction>,
}

fn is_identity(lambda: f64) -> bool {
    PhaseAngle(lambda).is_identity()
}

fn qft_noswap(out: &mut Vec<Instruction>, n: usize) {
    for i in 0..n {
        out.push(Instruction::H(Qubit::Data(i)));
        for j in i + 1..n {
            out.push(Instruction::Cu1 {
                ctrl: Qubit::Data(j),
                tgt: Qubit::Data(i),
                lambda: PI / (1u64 << (j - i)) as f64,
            });
        }
    }
}

fn iqft_noswap(out: &mut Vec<Instruction>, n: usize) {
    let mut fwd = Vec::new();
    qft_noswap(&mut fwd, n);
    for ins in fwd.into_iter().rev() {
        out.push(match ins {
            Instruction::Cu1 { ctrl, tgt, lambda } => Instruction::Cu1 {
                ctrl,
                tgt,
                lambda: -lambda,
            },
            other => other,
        });
    }
}

fn adder_angle(d: f64, n: usize, i: usize) -> f64 {
    TAU * d / 2f64.powi((n - i) as i32)
}

/// Builds the single-transform circuit for a schedule. Rotations that are a
/// multiple of 2 pi are left out.
pub fn build(s: &Schedule, shift: ShiftMode) -> Circuit {
    let n = s.nm();
    let m = s.m();
    let mut out = Vec::new();
    for q in s.n1..n {
        out.push(Instruction::H(Qubit::Data(q)));
    }
    qft_noswap(&mut out, n);
    let mut bit = 0;
    for r in 0..m {
        let d = (1u64 << (m - 1 - r)) as f64;
        for _ in 0..s.t[r] {
            out.push(Instruction::H(Qubit::Ancilla));
            for i in 0..n {
                let lambda = adder_angle(d, n, i);
                if !is_identity(lambda) {
                    out.push(Instruction::Cu1 {
                        ctrl: Qubit::Ancilla,
                        tgt: Qubit::Data(i),
                        lambda,
                    });
                }
            }
            out.push(Instruction::H(Qubit::Ancilla));
            out.push(Instruction::MeasureAncilla { bit });
            out.push(Instruction::Reset(Qubit::Ancilla));
            bit += 1;
        }
    }
    let d = match shift {
        ShiftMode::None => None,
        ShiftMode::Rounded => Some(s.applied_shift() as f64),
        ShiftMode::Exact => Some(s.alpha),
    };
    if let Some(d) = d {
        for i in 0..n {
            let lambda = adder_angle(d, n, i);
            if !is_identity(lambda) {
                out.push(Instruction::U1(Qubit::Data(i), lambda));
            }
        }
    }
    iqft_noswap(&mut out, n);
    for i in 0..n {
        out.push(Instruction::MeasureData(i));
    }
    Circuit {
        n_data: n,
        n_ancilla_bits: bit,
        instructions: out,
    }
}

impl Circuit {
    /// Instruction counts keyed by mnemonic.
    pub fn gate_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut c = BTreeMap::new();
        for ins in &self.instructions {
            let k = match ins {
                Instruction::H(_) => "h",
                Instruction::U1(..) => "u1",
                Instruction::Cu1 { .. } => "cu1",
                Instruction::MeasureAncilla { .. } | Instruction::MeasureData(_) => "measure",
                Instruction::Reset(_) => "reset",
            };
            *c.entry(k).or_insert(0) += 1;
        }
        c
    }

    pub fn measurement_count(&self) -> usize {
        self.gate_counts().get("measure").copied().unwrap_or(0)
    }

    /// Number of ancilla-controlled rotations in each walk step, in order.
    pub fn cu1_per_step(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = None;
        for ins in &self.instructions {
            match ins {
                Instruction::Cu1 {
                    ctrl: Qubit::Ancilla,
                    ..
                } => *cur.get_or_insert(0) += 1,
                Instruction::MeasureAncilla { .. } => out.push(cur.take().unwrap_or(0)),
                _ => {}
            }
        }
        out
    }

    fn index(&self, q: Qubit) -> usize {
        match q {
            Qubit::Data(i) => i,
            Qubit::Ancilla => self.n_data,
        }
    }

    /// Runs the circuit on the statevector engine with every ancilla read
    /// projected onto 0. Final data reads are skipped; returns the data
    /// state and the per-read probabilities of 0.
    pub fn replay_post_selected(&self) -> Result<(State, Vec<f64>)> {
        let mut st = State::basis(self.n_data + 1, 0)?;
        let anc = self.n_data;
        let mut p0 = Vec::with_capacity(self.n_ancilla_bits);
        for ins in &self.instructions {
            match *ins {
                Instruction::H(q) => st.apply_hadamard(self.index(q))?,
                Instruction::U1(q, l) => st.apply_u1(self.index(q), PhaseAngle(l))?,
                Instruction::Cu1 { ctrl, tgt, lambda } => {
                    st.apply_cu1(self.index(ctrl), self.index(tgt), PhaseAngle(lambda))?
                }
                Instruction::MeasureAncilla { .. } => p0.push(st.project(anc, 0)?),
                Instruction::Reset(_) | Instruction::MeasureData(_) => {}
            }
        }
        st.remove_last_qubit()?;
        Ok((st, p0))
    }

    /// OpenQASM 3 style text.
    pub fn to_qasm(&self) -> String {
        let mut s = String::new();
        let counts = self.gate_counts();
        let summary: Vec<String> = counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(s, "// gate counts: {}", summary.join(" "));
        let _ = writeln!(s, "// measurements: {}", self.measurement_count());
        let _ = writeln!(s, "// any 1 in a[] discards the shot");
        let _ = writeln!(s, "OPENQASM 3.0;");
        let _ = writeln!(s, "include \"stdgates.inc\";");
        let _ = writeln!(s, "qubit[{}] q;", self.n_data);
        let _ = writeln!(s, "qubit[1] anc;");
        if self.n_ancilla_bits > 0 {
            let _ = writeln!(s, "bit[{}] a;", self.n_ancilla_bits);
        }
        let _ = writeln!(s, "bit[{}] c;", self.n_data);
        let name = |q: Qubit| match q {
            Qubit::Data(i) => format!("q[{i}]"),
            Qubit::Ancilla => "anc[0]".to_string(),
        };
        for ins in &self.instructions {
            let _ = match *ins {
                Instruction::H(q) => writeln!(s, "h {};", name(q)),
                Instruction::U1(q, l) => writeln!(s, "u1({l:?}) {};", name(q)),
                Instruction::Cu1 { ctrl, tgt, lambda } => {
                    writeln!(s, "cu1({lambda:?}) {}, {};", name(ctrl), name(tgt))
                }
                Instruction::MeasureAncilla { bit } => writeln!(s, "a[{bit}] = measure anc[0];"),
                Instruction::Reset(q) => writeln!(s, "reset {};", name(q)),
                Instruction::MeasureData(i) => writeln!(s, "c[{i}] = measure q[{i}];"),
            };
        }
        s
    }
}
