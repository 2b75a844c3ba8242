//! Synthetic response generation.
//!
//! Uses SplitMix64 (Steele, Lea and Flood, 2014) so that any implementation
//! can reproduce a file from `(questionnaire, n, seed)`:
//!
//! ```text
//! state = seed
//! next():  state += 0x9E3779B97F4A7C15
//!          z = state
//!          z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!          z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!          return z ^ (z >> 31)            (all arithmetic mod 2^64)
//! ```
//!
//! Rows are drawn participant by participant; within a row one value per
//! question in questionnaire order, level = `next() mod L`. Participant ids
//! are `P` followed by the 1-based row number zero-padded to the width of `n`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::questionnaire::{csv_header, Questionnaire};

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulateError {
    #[error("participant count must be at least 1")]
    NoParticipants,
}

/// Response CSV with `n` rows of uniformly drawn levels.
pub fn simulate_responses(q: &Questionnaire, n: usize, seed: u64) -> Result<String, SimulateError> {
    if n == 0 {
        return Err(SimulateError::NoParticipants);
    }
    let levels = q.scale.len() as u64;
    let width = n.to_string().len();
    let mut rng = SplitMix64::new(seed);
    let mut out = csv_header(q, &[]);
    for row in 1..=n {
        let _ = write!(out, "P{row:0width$}");
        for _ in &q.questions {
            let _ = write!(out, ",{}", rng.next_u64() % levels);
        }
        out.push('\n');
    }
    Ok(out)
}
