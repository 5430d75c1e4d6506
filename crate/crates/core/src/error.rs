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

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Qubit index outside the register.
    #[error("qubit index {index} out of range for a {n}-qubit state")]
    QubitOutOfRange { index: usize, n: usize },

    /// Basis label outside `[0, 2^n)`.
    #[error("basis state {x} out of range for a {n}-qubit state")]
    BasisOutOfRange { x: u64, n: usize },

    /// Control and target of a two-qubit gate coincide, or a control lies
    /// inside the register it controls.
    #[error("invalid control qubit {ctrl}: {reason}")]
    InvalidControl { ctrl: usize, reason: &'static str },

    #[error("state would need {requested} qubits but the limit is {limit}")]
    Capacity { requested: usize, limit: usize },

    #[error("cannot project qubit {qubit} onto |{bit}>: outcome has probability {prob:e}")]
    ZeroProbability { qubit: usize, bit: u8, prob: f64 },

    #[error("ancilla qubit {qubit} is not in |0> (p(1) = {p1:e})")]
    AncillaNotReset { qubit: usize, p1: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    /// Requested grid-unit variance is below what the scaling cascade
    /// produces with zero iterations.
    #[error("infeasible target: variance {requested} is below the minimal achievable {minimum}")]
    Infeasible { requested: f64, minimum: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("divergent q-Pochhammer product (a = {a}, q = {q})")]
    Divergent { a: f64, q: f64 },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
