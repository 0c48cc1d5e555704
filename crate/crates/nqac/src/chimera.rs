//! Chimera hardware graph, balanced clique minor embedding, embedded
//! Hamiltonian construction and chain decoding.
//!
//! Qubit indexing: cell `(row, col)` of an `M x N` grid holds `2k` qubits,
//! `k` on the vertical shore (0) and `k` on the horizontal shore (1);
//! `index = ((row * N + col) * 2 + shore) * k + offset`. Within a cell the
//! shores form a `K_{k,k}`; vertical qubits couple to the same offset in the
//! cell above/below, horizontal qubits to the same offset left/right.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ising::{IsingProblem, Label, SpinConfig};
use crate::nesting::NestedProblem;
use crate::reads::ReadSet;

#[derive(Debug, Clone)]
pub struct ChimeraGraph {
    pub rows: usize,
    pub cols: usize,
    pub shore: usize,
    mask: HashSet<usize>,
}

pub fn build_chimera(rows: usize, cols: usize, shore: usize, mask: &[usize]) -> Result<ChimeraGraph> {
    if rows < 1 || cols < 1 || shore < 1 {
        return Err(Error::Input("Chimera dimensions must be >= 1".into()));
    }
    let n = rows * cols * 2 * shore;
    let mut set = HashSet::new();
    for &q in mask {
        if q >= n {
            return Err(Error::Input(format!("mask index {q} out of range (n = {n})")));
        }
        set.insert(q);
    }
    Ok(ChimeraGraph {
        rows,
        cols,
        shore,
        mask: set,
    })
}

impl ChimeraGraph {
    pub fn n_qubits(&self) -> usize {
        self.rows * self.cols * 2 * self.shore
    }

    pub fn n_available(&self) -> usize {
        self.n_qubits() - self.mask.len()
    }

    pub fn is_available(&self, q: usize) -> bool {
        q < self.n_qubits() && !self.mask.contains(&q)
    }

    pub fn index(&self, row: usize, col: usize, shore: usize, offset: usize) -> usize {
        ((row * self.cols + col) * 2 + shore) * self.shore + offset
    }

    /// (row, col, shore, offset) of a qubit index.
    pub fn coords(&self, q: usize) -> (usize, usize, usize, usize) {
        let offset = q % self.shore;
        let rest = q / self.shore;
        let shore = rest % 2;
        let cell = rest / 2;
        (cell / self.cols, cell % self.cols, shore, offset)
    }

    /// Whether two distinct available qubits share a coupler.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        if a == b || !self.is_available(a) || !self.is_available(b) {
            return false;
        }
        let (ra, ca, sa, oa) = self.coords(a);
        let (rb, cb, sb, ob) = self.coords(b);
        if ra == rb && ca == cb {
            return sa != sb;
        }
        if sa != sb || oa != ob {
            return false;
        }
        match sa {
            0 => ca == cb && ra.abs_diff(rb) == 1,
            _ => ra == rb && ca.abs_diff(cb) == 1,
        }
    }

    /// All couplers among available qubits, each once with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for row in 0..self.rows {
            for col in 0..self.cols {
                for oa in 0..self.shore {
                    let v = self.index(row, col, 0, oa);
                    for ob in 0..self.shore {
                        let h = self.index(row, col, 1, ob);
                        if self.is_available(v) && self.is_available(h) {
                            out.push((v.min(h), v.max(h)));
                        }
                    }
                    if row + 1 < self.rows {
                        let below = self.index(row + 1, col, 0, oa);
                        if self.is_available(v) && self.is_available(below) {
                            out.push((v, below));
                        }
                    }
                    let h = self.index(row, col, 1, oa);
                    if col + 1 < self.cols {
                        let right = self.index(row, col + 1, 1, oa);
                        if self.is_available(h) && self.is_available(right) {
                            out.push((h, right));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn mask_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut sorted: Vec<usize> = self.mask.iter().cloned().collect();
        sorted.sort_unstable();
        let mut hasher = Sha256::new();
        for q in sorted {
            hasher.update(q.to_le_bytes());
        }
        hex::encode(&hasher.finalize()[..8])
    }
}

/// A balanced minor embedding: one equal-length chain per code qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// Chains in code-qubit order; each is a path of hardware qubit indices.
    pub chains: Vec<Vec<usize>>,
    pub chain_length: usize,
    /// Source clique size (= number of chains).
    pub source_size: usize,
    pub graph_rows: usize,
    pub graph_cols: usize,
    pub graph_shore: usize,
    pub mask_hash: String,
}

impl Embedding {
    pub fn n_qubits_used(&self) -> usize {
        self.chains.len() * self.chain_length
    }

    /// Full validity check against a hardware graph.
    ///
    /// Verifies balanced lengths, pairwise disjointness, path connectivity of
    /// every chain, availability of every qubit, and existence of at least one
    /// coupler between every pair of chains (the source is a clique).
    pub fn validate(&self, graph: &ChimeraGraph) -> Result<()> {
        if self.chains.len() != self.source_size {
            return Err(Error::EmbeddingInvalid(format!(
                "expected {} chains, found {}",
                self.source_size,
                self.chains.len()
            )));
        }
        let mut used = HashSet::new();
        for (t, chain) in self.chains.iter().enumerate() {
            if chain.len() != self.chain_length {
                return Err(Error::EmbeddingInvalid(format!(
                    "chain {t} has length {}, expected {} (unbalanced)",
                    chain.len(),
                    self.chain_length
                )));
            }
            for &q in chain {
                if !graph.is_available(q) {
                    return Err(Error::EmbeddingInvalid(format!(
                        "chain {t} uses unavailable qubit {q}"
                    )));
                }
                if !used.insert(q) {
                    return Err(Error::EmbeddingInvalid(format!(
                        "qubit {q} appears in more than one chain (overlap)"
                    )));
                }
            }
            for w in chain.windows(2) {
                if !graph.adjacent(w[0], w[1]) {
                    return Err(Error::EmbeddingInvalid(format!(
                        "chain {t} is disconnected between qubits {} and {}",
                        w[0], w[1]
                    )));
                }
            }
        }
        for a in 0..self.chains.len() {
            for b in (a + 1)..self.chains.len() {
                if inter_chain_coupler(graph, &self.chains[a], &self.chains[b]).is_none() {
                    return Err(Error::EmbeddingInvalid(format!(
                        "no coupler between chains {a} and {b}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// First hardware coupler between two chains, in chain order. Deterministic.
pub fn inter_chain_coupler(
    graph: &ChimeraGraph,
    a: &[usize],
    b: &[usize],
) -> Option<(usize, usize)> {
    for &qa in a {
        for &qb in b {
            if graph.adjacent(qa, qb) {
                return Some((qa, qb));
            }
        }
    }
    None
}

/// Balanced clique embedding of `K_m` with the standard diagonal layout.
///
/// Chains of length `ceil(m/k) + 1` run one cell column vertically and one
/// cell row horizontally, meeting on the block diagonal. The block placement
/// and the chain-to-code-qubit assignment are randomized per seed.
pub fn embed_complete(m: usize, graph: &ChimeraGraph, seed: u64) -> Result<Embedding> {
    if m < 2 {
        return Err(Error::Input("clique size must be >= 2".into()));
    }
    let k = graph.shore;
    let blocks = m.div_ceil(k);
    let chain_length = blocks + 1;
    let required = m * chain_length;

    // All offsets whose l x l cell block is fully available.
    let mut placements = Vec::new();
    if graph.rows >= blocks && graph.cols >= blocks {
        'offset: for row_off in 0..=(graph.rows - blocks) {
            for col_off in 0..=(graph.cols - blocks) {
                for r in 0..blocks {
                    for c in 0..blocks {
                        for s in 0..2 {
                            for o in 0..k {
                                if !graph.is_available(graph.index(row_off + r, col_off + c, s, o)) {
                                    continue 'offset;
                                }
                            }
                        }
                    }
                }
                placements.push((row_off, col_off));
            }
        }
    }
    if placements.is_empty() {
        return Err(Error::Capacity {
            what: "clique embedding (no unmasked cell block large enough)",
            required,
            cap: graph.n_available(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let &(row_off, col_off) = placements.choose(&mut rng).unwrap();

    // Chain slots (b, r): vertical qubits in column b, rows 0..=b, then
    // horizontal qubits in row b, columns b..blocks-1, all at offset r.
    let mut slots: Vec<(usize, usize)> = (0..blocks)
        .flat_map(|b| (0..k).map(move |r| (b, r)))
        .collect();
    slots.shuffle(&mut rng);
    slots.truncate(m);

    let chains = slots
        .into_iter()
        .map(|(b, r)| {
            let mut chain = Vec::with_capacity(chain_length);
            for row in 0..=b {
                chain.push(graph.index(row_off + row, col_off + b, 0, r));
            }
            for col in b..blocks {
                chain.push(graph.index(row_off + b, col_off + col, 1, r));
            }
            chain
        })
        .collect();

    let embedding = Embedding {
        chains,
        chain_length,
        source_size: m,
        graph_rows: graph.rows,
        graph_cols: graph.cols,
        graph_shore: graph.shore,
        mask_hash: graph.mask_hash(),
    };
    embedding.validate(graph)?;
    Ok(embedding)
}

/// A nested problem realized on hardware through an embedding.
///
/// Physical spins use the compact index `chain * L + position`; the embedding
/// records which hardware qubit each compact index occupies.
#[derive(Debug, Clone)]
pub struct PhysicalProblem {
    pub problem: IsingProblem,
    pub embedding: Embedding,
    pub chain_penalty: f64,
    pub n_chains: usize,
    pub chain_length: usize,
}

/// Realize a nested problem on hardware: chain penalties on intra-chain
/// couplers, each nested coupling on one designated inter-chain coupler,
/// nested fields split uniformly along the chain.
pub fn embed_problem(
    nested: &NestedProblem,
    graph: &ChimeraGraph,
    embedding: &Embedding,
    chain_penalty: f64,
) -> Result<PhysicalProblem> {
    let m = nested.n_code_qubits();
    if embedding.source_size != m {
        return Err(Error::Dimension {
            expected: m,
            got: embedding.source_size,
        });
    }
    if chain_penalty <= 0.0 {
        return Err(Error::Input(format!(
            "chain penalty must be > 0, got {chain_penalty}"
        )));
    }
    let j_range = nested.problem.j_range;
    if -chain_penalty < j_range.0 {
        return Err(Error::Range {
            what: "chain penalty".into(),
            value: -chain_penalty,
            lo: j_range.0,
            hi: j_range.1,
        });
    }
    embedding.validate(graph)?;
    let l = embedding.chain_length;
    let n_phys = m * l;

    // Hardware qubit -> compact physical index.
    let mut hw_to_compact = std::collections::HashMap::new();
    for (t, chain) in embedding.chains.iter().enumerate() {
        for (p, &q) in chain.iter().enumerate() {
            hw_to_compact.insert(q, t * l + p);
        }
    }

    let mut edges = Vec::new();
    for t in 0..m {
        for p in 0..(l - 1) {
            edges.push((t * l + p, t * l + p + 1, -chain_penalty));
        }
    }
    for &(a, b, v) in nested.problem.edges() {
        let (qa, qb) =
            inter_chain_coupler(graph, &embedding.chains[a], &embedding.chains[b]).ok_or_else(
                || Error::EmbeddingInvalid(format!("no coupler available for nested edge ({a},{b})")),
            )?;
        edges.push((hw_to_compact[&qa], hw_to_compact[&qb], v));
    }
    let mut fields = Vec::new();
    for &(i, h) in nested.problem.fields() {
        let per_qubit = h / l as f64;
        for p in 0..l {
            fields.push((i * l + p, per_qubit));
        }
    }
    let problem = IsingProblem::with_ranges(
        n_phys,
        edges,
        fields,
        nested.problem.h_range,
        j_range,
        Label::Physical,
    )?;
    Ok(PhysicalProblem {
        problem,
        embedding: embedding.clone(),
        chain_penalty,
        n_chains: m,
        chain_length: l,
    })
}

impl PhysicalProblem {
    /// Replicate a code configuration along every chain.
    pub fn lift_code_config(&self, code: &SpinConfig) -> Result<SpinConfig> {
        if code.len() != self.n_chains {
            return Err(Error::Dimension {
                expected: self.n_chains,
                got: code.len(),
            });
        }
        let mut out = Vec::with_capacity(self.n_chains * self.chain_length);
        for &s in &code.0 {
            out.extend(std::iter::repeat(s).take(self.chain_length));
        }
        Ok(SpinConfig(out))
    }
}

/// Result of chain decoding: code-level reads plus the fraction of chains
/// that were not unanimous.
#[derive(Debug, Clone)]
pub struct ChainDecode {
    pub reads: ReadSet,
    pub broken_chain_fraction: f64,
}

/// Majority-vote each chain of every read down to a code spin.
pub fn decode_chains<R: Rng>(
    reads: &ReadSet,
    physical: &PhysicalProblem,
    tie_rng: &mut R,
) -> Result<ChainDecode> {
    let n_phys = physical.n_chains * physical.chain_length;
    if reads.spin_len() != n_phys {
        return Err(Error::Dimension {
            expected: n_phys,
            got: reads.spin_len(),
        });
    }
    let l = physical.chain_length;
    let mut decoded = Vec::with_capacity(reads.len());
    let mut broken = 0usize;
    let mut total_chains = 0usize;
    for config in &reads.configs {
        let mut code = Vec::with_capacity(physical.n_chains);
        for t in 0..physical.n_chains {
            let chain = &config.0[t * l..(t + 1) * l];
            let sum: i32 = chain.iter().map(|&s| s as i32).sum();
            if sum.unsigned_abs() as usize != l {
                broken += 1;
            }
            total_chains += 1;
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
            code.push(spin);
        }
        decoded.push(SpinConfig(code));
    }
    let mut provenance = reads.provenance.clone();
    provenance.sampler = format!("{}+chain-decode", provenance.sampler);
    Ok(ChainDecode {
        reads: ReadSet::with_weights(decoded, reads.weights.clone(), provenance)?,
        broken_chain_fraction: broken as f64 / total_chains.max(1) as f64,
    })
}
