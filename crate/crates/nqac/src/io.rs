//! Plain-text file formats.
//!
//! All formats are line-oriented; blank lines and lines starting with `#`
//! are ignored. Floating-point values are written with Rust's shortest
//! round-trip formatting, so decimal literals survive a write/read cycle
//! bit-exactly.
//!
//! Instance format (`nqac-instance v1`):
//! ```text
//! nqac-instance v1
//! label logical
//! n_spins 4
//! h_range -2 2
//! j_range -1 1
//! couplings 6
//! 0 1 1
//! ...
//! fields 0
//! ```
//!
//! Nested format (`nqac-nested v1`) adds a `c`/`gamma` header above the
//! base logical instance; code qubit `(i, c)` maps to flat index `i*C + c`
//! and the nested problem is reconstructed from the base on load.
//!
//! Embedding format (`nqac-embedding v1`): header `m`, `l`, `graph
//! rows cols shore`, `mask_hash`, then one chain per line as
//! space-separated qubit indices.
//!
//! Read-set format (`nqac-reads v1`): provenance header, then one read per
//! line as a `+`/`-` string followed by its weight.

use std::path::Path;

use crate::chimera::Embedding;
use crate::error::{Error, Result};
use crate::ising::{IsingProblem, Label, SpinConfig};
use crate::nesting::{nest, NestedProblem};
use crate::reads::{Provenance, ReadSet};

struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Lines<'a> {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Lines { lines, pos: 0 }
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        let item = self.lines.get(self.pos).copied().ok_or(Error::Parse {
            line: self.lines.last().map(|(n, _)| *n).unwrap_or(0),
            msg: "unexpected end of file".into(),
        })?;
        self.pos += 1;
        Ok(item)
    }

    fn expect_key(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (n, line) = self.next()?;
        match line.strip_prefix(key) {
            Some(rest) if rest.is_empty() || rest.starts_with(' ') => Ok((n, rest.trim())),
            _ => Err(Error::Parse {
                line: n,
                msg: format!("expected `{key}`, found `{line}`"),
            }),
        }
    }
}

fn parse<T: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<T> {
    token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what}: `{token}`"),
    })
}

fn parse_pair_f64(rest: &str, line: usize) -> Result<(f64, f64)> {
    let mut it = rest.split_whitespace();
    let a = parse(it.next().unwrap_or(""), line, "number")?;
    let b = parse(it.next().unwrap_or(""), line, "number")?;
    Ok((a, b))
}

pub fn write_instance(problem: &IsingProblem) -> String {
    let mut out = String::new();
    out.push_str("nqac-instance v1\n");
    out.push_str(&format!("label {}\n", problem.label.as_str()));
    out.push_str(&format!("n_spins {}\n", problem.n_spins()));
    out.push_str(&format!("h_range {} {}\n", problem.h_range.0, problem.h_range.1));
    out.push_str(&format!("j_range {} {}\n", problem.j_range.0, problem.j_range.1));
    out.push_str(&format!("couplings {}\n", problem.edges().len()));
    for &(i, j, v) in problem.edges() {
        out.push_str(&format!("{i} {j} {v}\n"));
    }
    out.push_str(&format!("fields {}\n", problem.fields().len()));
    for &(i, v) in problem.fields() {
        out.push_str(&format!("{i} {v}\n"));
    }
    out
}

fn read_instance_body(lines: &mut Lines) -> Result<IsingProblem> {
    let (n, rest) = lines.expect_key("label")?;
    let label = Label::parse(rest).ok_or(Error::Parse {
        line: n,
        msg: format!("unknown label `{rest}`"),
    })?;
    let (n, rest) = lines.expect_key("n_spins")?;
    let n_spins: usize = parse(rest, n, "spin count")?;
    let (n, rest) = lines.expect_key("h_range")?;
    let h_range = parse_pair_f64(rest, n)?;
    let (n, rest) = lines.expect_key("j_range")?;
    let j_range = parse_pair_f64(rest, n)?;

    let (n, rest) = lines.expect_key("couplings")?;
    let n_edges: usize = parse(rest, n, "coupling count")?;
    let mut edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let (ln, line) = lines.next()?;
        let mut it = line.split_whitespace();
        let i = parse(it.next().unwrap_or(""), ln, "index")?;
        let j = parse(it.next().unwrap_or(""), ln, "index")?;
        let v = parse(it.next().unwrap_or(""), ln, "coupling")?;
        edges.push((i, j, v));
    }
    let (n, rest) = lines.expect_key("fields")?;
    let n_fields: usize = parse(rest, n, "field count")?;
    let mut fields = Vec::with_capacity(n_fields);
    for _ in 0..n_fields {
        let (ln, line) = lines.next()?;
        let mut it = line.split_whitespace();
        let i = parse(it.next().unwrap_or(""), ln, "index")?;
        let v = parse(it.next().unwrap_or(""), ln, "field")?;
        fields.push((i, v));
    }
    IsingProblem::with_ranges(n_spins, edges, fields, h_range, j_range, label)
}

pub fn read_instance(text: &str) -> Result<IsingProblem> {
    let mut lines = Lines::new(text);
    let (n, header) = lines.next()?;
    if header != "nqac-instance v1" {
        return Err(Error::Parse {
            line: n,
            msg: format!("expected `nqac-instance v1` header, found `{header}`"),
        });
    }
    read_instance_body(&mut lines)
}

pub fn write_nested(nested: &NestedProblem) -> String {
    let mut out = String::new();
    out.push_str("nqac-nested v1\n");
    out.push_str(&format!("c {}\n", nested.c));
    out.push_str(&format!("gamma {}\n", nested.gamma));
    out.push_str("# code qubit (i,c) occupies flat index i*C + c\n");
    out.push_str(&write_instance(&nested.base));
    out
}

pub fn read_nested(text: &str) -> Result<NestedProblem> {
    let mut lines = Lines::new(text);
    let (n, header) = lines.next()?;
    if header != "nqac-nested v1" {
        return Err(Error::Parse {
            line: n,
            msg: format!("expected `nqac-nested v1` header, found `{header}`"),
        });
    }
    let (n, rest) = lines.expect_key("c")?;
    let c: usize = parse(rest, n, "nesting level")?;
    let (n, rest) = lines.expect_key("gamma")?;
    let gamma: f64 = parse(rest, n, "gamma")?;
    let (n, header) = lines.next()?;
    if header != "nqac-instance v1" {
        return Err(Error::Parse {
            line: n,
            msg: "expected embedded instance header".into(),
        });
    }
    let base = read_instance_body(&mut lines)?;
    nest(&base, c, if c == 1 { 1.0 } else { gamma })
}

pub fn write_embedding(embedding: &Embedding) -> String {
    let mut out = String::new();
    out.push_str("nqac-embedding v1\n");
    out.push_str(&format!("m {}\n", embedding.source_size));
    out.push_str(&format!("l {}\n", embedding.chain_length));
    out.push_str(&format!(
        "graph {} {} {}\n",
        embedding.graph_rows, embedding.graph_cols, embedding.graph_shore
    ));
    out.push_str(&format!("mask_hash {}\n", embedding.mask_hash));
    for chain in &embedding.chains {
        let words: Vec<String> = chain.iter().map(|q| q.to_string()).collect();
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_embedding(text: &str) -> Result<Embedding> {
    let mut lines = Lines::new(text);
    let (n, header) = lines.next()?;
    if header != "nqac-embedding v1" {
        return Err(Error::Parse {
            line: n,
            msg: format!("expected `nqac-embedding v1` header, found `{header}`"),
        });
    }
    let (n, rest) = lines.expect_key("m")?;
    let m: usize = parse(rest, n, "clique size")?;
    let (n, rest) = lines.expect_key("l")?;
    let l: usize = parse(rest, n, "chain length")?;
    let (n, rest) = lines.expect_key("graph")?;
    let mut it = rest.split_whitespace();
    let rows = parse(it.next().unwrap_or(""), n, "rows")?;
    let cols = parse(it.next().unwrap_or(""), n, "cols")?;
    let shore = parse(it.next().unwrap_or(""), n, "shore")?;
    let (_, rest) = lines.expect_key("mask_hash")?;
    let mask_hash = rest.to_string();
    let mut chains = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, line) = lines.next()?;
        let chain: Vec<usize> = line
            .split_whitespace()
            .map(|t| parse(t, ln, "qubit index"))
            .collect::<Result<_>>()?;
        if chain.len() != l {
            return Err(Error::Parse {
                line: ln,
                msg: format!("chain has {} qubits, header says {l}", chain.len()),
            });
        }
        chains.push(chain);
    }
    Ok(Embedding {
        chains,
        chain_length: l,
        source_size: m,
        graph_rows: rows,
        graph_cols: cols,
        graph_shore: shore,
        mask_hash,
    })
}

pub fn write_reads(reads: &ReadSet) -> String {
    let p = &reads.provenance;
    let mut out = String::new();
    out.push_str("nqac-reads v1\n");
    out.push_str(&format!("problem_hash {}\n", p.problem_hash));
    out.push_str(&format!("sampler {}\n", p.sampler));
    out.push_str(&format!("seed {}\n", p.seed));
    if let Some(v) = p.embedding_id {
        out.push_str(&format!("embedding_id {v}\n"));
    }
    if let Some(v) = p.alpha {
        out.push_str(&format!("alpha {v}\n"));
    }
    if let Some(v) = p.c {
        out.push_str(&format!("c {v}\n"));
    }
    if let Some(v) = p.gamma {
        out.push_str(&format!("gamma {v}\n"));
    }
    if let Some(v) = p.beta {
        out.push_str(&format!("beta {v}\n"));
    }
    if let Some(v) = &p.device_model {
        out.push_str(&format!("device_model {v}\n"));
    }
    out.push_str(&format!("reads {}\n", reads.len()));
    for (config, weight) in reads.configs.iter().zip(reads.weights.iter()) {
        for &s in &config.0 {
            out.push(if s > 0 { '+' } else { '-' });
        }
        out.push_str(&format!(" {weight}\n"));
    }
    out
}

pub fn read_reads(text: &str) -> Result<ReadSet> {
    let mut lines = Lines::new(text);
    let (n, header) = lines.next()?;
    if header != "nqac-reads v1" {
        return Err(Error::Parse {
            line: n,
            msg: format!("expected `nqac-reads v1` header, found `{header}`"),
        });
    }
    let mut provenance = Provenance::default();
    let count;
    loop {
        let (ln, line) = lines.next()?;
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        match key {
            "problem_hash" => provenance.problem_hash = rest.to_string(),
            "sampler" => provenance.sampler = rest.to_string(),
            "seed" => provenance.seed = parse(rest, ln, "seed")?,
            "embedding_id" => provenance.embedding_id = Some(parse(rest, ln, "embedding id")?),
            "alpha" => provenance.alpha = Some(parse(rest, ln, "alpha")?),
            "c" => provenance.c = Some(parse(rest, ln, "c")?),
            "gamma" => provenance.gamma = Some(parse(rest, ln, "gamma")?),
            "beta" => provenance.beta = Some(parse(rest, ln, "beta")?),
            "device_model" => provenance.device_model = Some(rest.to_string()),
            "reads" => {
                count = parse(rest, ln, "read count")?;
                break;
            }
            _ => {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("unknown provenance key `{key}`"),
                })
            }
        }
    }
    let mut configs = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for _ in 0..count {
        let (ln, line) = lines.next()?;
        let mut it = line.split_whitespace();
        let spins = it.next().unwrap_or("");
        let config: Vec<i8> = spins
            .chars()
            .map(|ch| match ch {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(Error::Parse {
                    line: ln,
                    msg: format!("invalid spin character `{ch}`"),
                }),
            })
            .collect::<Result<_>>()?;
        configs.push(SpinConfig(config));
        weights.push(parse(it.next().unwrap_or("1"), ln, "weight")?);
    }
    ReadSet::with_weights(configs, weights, provenance)
}

pub fn write_model(model: &crate::bm::BmModel) -> String {
    let mut out = String::new();
    out.push_str("nqac-bm v1\n");
    out.push_str(&format!("beta_eff {}\n", model.beta_eff));
    out.push_str(&format!("n_spins {}\n", model.n));
    out.push_str(&format!("couplings {}\n", model.weights.len()));
    for ((i, j), &w) in crate::bm::all_pairs(model.n).into_iter().zip(model.weights.iter()) {
        out.push_str(&format!("{i} {j} {w}\n"));
    }
    let nonzero: Vec<(usize, f64)> = model
        .biases
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(i, &b)| (i, b))
        .collect();
    out.push_str(&format!("fields {}\n", nonzero.len()));
    for (i, b) in nonzero {
        out.push_str(&format!("{i} {b}\n"));
    }
    out
}

pub fn read_model(text: &str) -> Result<crate::bm::BmModel> {
    let mut lines = Lines::new(text);
    let (n, header) = lines.next()?;
    if header != "nqac-bm v1" {
        return Err(Error::Parse {
            line: n,
            msg: format!("expected `nqac-bm v1` header, found `{header}`"),
        });
    }
    let (n, rest) = lines.expect_key("beta_eff")?;
    let beta_eff: f64 = parse(rest, n, "beta_eff")?;
    let (n, rest) = lines.expect_key("n_spins")?;
    let n_spins: usize = parse(rest, n, "spin count")?;
    let mut model = crate::bm::BmModel::zeros(n_spins, beta_eff);
    let (n, rest) = lines.expect_key("couplings")?;
    let n_edges: usize = parse(rest, n, "coupling count")?;
    for _ in 0..n_edges {
        let (ln, line) = lines.next()?;
        let mut it = line.split_whitespace();
        let i: usize = parse(it.next().unwrap_or(""), ln, "index")?;
        let j: usize = parse(it.next().unwrap_or(""), ln, "index")?;
        let w: f64 = parse(it.next().unwrap_or(""), ln, "weight")?;
        if i >= n_spins || j >= n_spins || i >= j {
            return Err(Error::Parse {
                line: ln,
                msg: format!("bad pair ({i},{j})"),
            });
        }
        model.weights[crate::bm::pair_index(n_spins, i, j)] = w;
    }
    let (n, rest) = lines.expect_key("fields")?;
    let n_fields: usize = parse(rest, n, "field count")?;
    for _ in 0..n_fields {
        let (ln, line) = lines.next()?;
        let mut it = line.split_whitespace();
        let i: usize = parse(it.next().unwrap_or(""), ln, "index")?;
        let b: f64 = parse(it.next().unwrap_or(""), ln, "bias")?;
        if i >= n_spins {
            return Err(Error::Parse {
                line: ln,
                msg: format!("bias index {i} out of range"),
            });
        }
        model.biases[i] = b;
    }
    Ok(model)
}

pub fn save(path: &Path, content: &str) -> Result<()> {
    Ok(std::fs::write(path, content)?)
}

pub fn load(path: &Path) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}
