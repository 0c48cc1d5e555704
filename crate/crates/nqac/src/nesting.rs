//! Logical-to-code nesting at level C and its majority-vote inverse.
//!
//! Code qubit `(i, c)` maps to flat index `i * C + c`. Each logical coupling
//! gets `C^2` copies, each logical field `C` copies of strength `C h_i`, and
//! each logical qubit carries `C(C-1)/2` intra-group ferromagnetic penalties
//! of strength `gamma`.

use crate::error::{Error, Result};
use crate::ising::{IsingProblem, Label, SpinConfig};
use rand::Rng;

/// A nested problem together with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedProblem {
    pub base: IsingProblem,
    pub c: usize,
    pub gamma: f64,
    pub problem: IsingProblem,
}

impl NestedProblem {
    /// Flat code index of code qubit `(i, c)`.
    pub fn code_index(&self, logical: usize, copy: usize) -> usize {
        logical * self.c + copy
    }

    pub fn n_code_qubits(&self) -> usize {
        self.base.n_spins() * self.c
    }
}

/// Resource accounting for nesting level C of an N-variable problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceCount {
    pub c: usize,
    pub n: usize,
    pub chain_length: usize,
    pub physical_qubits: usize,
}

/// Chain length and physical qubit count for embedding level-C nesting of K_N.
pub fn resource_count(n: usize, c: usize) -> ResourceCount {
    let chain_length = (c * n).div_ceil(4) + 1;
    ResourceCount {
        c,
        n,
        chain_length,
        physical_qubits: c * n * chain_length,
    }
}

/// Nest a logical problem at level `c` with penalty strength `gamma`.
///
/// `gamma` is ignored when `c == 1` (no penalty edges exist).
pub fn nest(problem: &IsingProblem, c: usize, gamma: f64) -> Result<NestedProblem> {
    if problem.label != Label::Logical {
        return Err(Error::Input("nest expects a logical problem".into()));
    }
    if c < 1 {
        return Err(Error::Input("nesting level C must be >= 1".into()));
    }
    if c > 1 && gamma <= 0.0 {
        return Err(Error::Input(format!("gamma must be > 0, got {gamma}")));
    }
    let n = problem.n_spins();
    let idx = |i: usize, cc: usize| i * c + cc;

    let mut edges = Vec::new();
    for &(i, j, v) in problem.edges() {
        for ci in 0..c {
            for cj in 0..c {
                edges.push((idx(i, ci), idx(j, cj), v));
            }
        }
    }
    for i in 0..n {
        for ci in 0..c {
            for cj in (ci + 1)..c {
                edges.push((idx(i, ci), idx(i, cj), -gamma));
            }
        }
    }
    let mut fields = Vec::new();
    for &(i, v) in problem.fields() {
        let nested_field = c as f64 * v;
        if nested_field < problem.h_range.0 || nested_field > problem.h_range.1 {
            return Err(Error::Range {
                what: format!("nested field C*h({i})"),
                value: nested_field,
                lo: problem.h_range.0,
                hi: problem.h_range.1,
            });
        }
        for ci in 0..c {
            fields.push((idx(i, ci), nested_field));
        }
    }
    if c > 1 && (gamma < -problem.j_range.1 || -gamma < problem.j_range.0) {
        return Err(Error::Range {
            what: "penalty -gamma".into(),
            value: -gamma,
            lo: problem.j_range.0,
            hi: problem.j_range.1,
        });
    }
    let nested = IsingProblem::with_ranges(
        n * c,
        edges,
        fields,
        problem.h_range,
        problem.j_range,
        if c == 1 { Label::Logical } else { Label::Nested },
    )?;
    Ok(NestedProblem {
        base: problem.clone(),
        c,
        gamma: if c == 1 { 0.0 } else { gamma },
        problem: nested,
    })
}

/// Replicate a logical configuration across all C copies of each qubit.
pub fn lift_logical_to_code(config: &SpinConfig, c: usize) -> SpinConfig {
    let mut out = Vec::with_capacity(config.len() * c);
    for &s in &config.0 {
        out.extend(std::iter::repeat(s).take(c));
    }
    SpinConfig(out)
}

/// Majority-vote decode of a code configuration back to logical spins.
///
/// Ties (possible only for even C) are broken by a fair coin from `tie_rng`.
pub fn decode_code_to_logical<R: Rng>(
    code: &SpinConfig,
    c: usize,
    tie_rng: &mut R,
) -> Result<SpinConfig> {
    if c == 0 || code.len() % c != 0 {
        return Err(Error::Dimension {
            expected: c.max(1),
            got: code.len(),
        });
    }
    let n = code.len() / c;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let sum: i32 = code.0[i * c..(i + 1) * c].iter().map(|&s| s as i32).sum();
        let spin = match sum.cmp(&0) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => {
                if tie_rng.gen::<bool>() {
                    1
                } else {
                    -1
                }
            }
        };
        out.push(spin);
    }
    Ok(SpinConfig(out))
}
