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

//! Statevector simulation of a coherent Galton-board walk that prepares
//! discretized normal distributions with repeat-until-success
//! post-selection, mid-circuit measurement and reuse of one ancilla, and
//! qubit scaling.

pub mod analysis;
pub mod circuit;
pub mod error;
pub mod galton;
pub mod noise;
pub mod schedule;
pub mod statevector;

pub use error::{Error, Result};
