//! Experiment orchestration: configuration, the optimization and sampling
//! pipelines, point-level persistence with crash-resume, and CSV export.
//!
//! A single master seed fans out through [`crate::seeds::child_seed`] to
//! per-instance, per-embedding, per-sample and per-tie streams, so a config
//! file plus its seed reproduces every read byte-for-byte.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    data_collapse, fit_effective_beta_with_cap, gradient_overlap, percentile, repetition_copies,
    repetition_correct, BetaSearch, BoostFit, CurvePoint,
};
use crate::bm::{all_pairs, moments_from_reads, MomentVector};
use crate::chimera::{build_chimera, decode_chains, embed_complete, embed_problem, ChimeraGraph};
use crate::error::{Error, Result};
use crate::ising::{IsingProblem, SpinConfig, DEFAULT_ENERGY_TOLERANCE};
use crate::nesting::{decode_code_to_logical, nest};
use crate::reads::{Provenance, ReadSet};
use crate::samplers::{problem_hash, simulate_device, DeviceModel};
use crate::seeds::{child_seed, tag};

/// Coupling values allowed in ensemble mode.
const ENSEMBLE_VALUE_STEP: f64 = 0.1;

fn default_ensemble_values() -> Vec<f64> {
    let mut out = Vec::new();
    for k in 1..=10 {
        let v = k as f64 * ENSEMBLE_VALUE_STEP;
        out.push(-v);
        out.push(v);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Where logical instances come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstanceConfig {
    /// `clique` (antiferromagnetic K_n), `ensemble` (random K_n couplings),
    /// or `file`.
    pub source: String,
    pub path: Option<PathBuf>,
    pub n: usize,
    /// Number of random instances in ensemble mode.
    pub count: usize,
    /// Coupling value set for ensemble mode.
    pub values: Vec<f64>,
    pub seed: u64,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            source: "clique".into(),
            path: None,
            n: 4,
            count: 1,
            values: default_ensemble_values(),
            seed: 0,
        }
    }
}

impl InstanceConfig {
    /// Short identifier used in CSV `ensemble` columns.
    pub fn id(&self) -> String {
        match self.source.as_str() {
            "file" => self
                .path
                .as_ref()
                .and_then(|p| p.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into()),
            "ensemble" => format!("K{}x{}", self.n, self.count),
            _ => format!("K{}", self.n),
        }
    }

    pub fn load(&self) -> Result<Vec<IsingProblem>> {
        match self.source.as_str() {
            "clique" => Ok(vec![IsingProblem::antiferromagnetic_clique(self.n)]),
            "file" => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Input("file source needs a path".into()))?;
                Ok(vec![crate::io::read_instance(&crate::io::load(path)?)?])
            }
            "ensemble" => {
                if self.count == 0 {
                    return Err(Error::Input("ensemble count must be >= 1".into()));
                }
                if self.values.is_empty() {
                    return Err(Error::Input("ensemble value set is empty".into()));
                }
                for &v in &self.values {
                    let steps = (v.abs() / ENSEMBLE_VALUE_STEP).round();
                    if !(1.0..=10.0).contains(&steps)
                        || (v.abs() - steps * ENSEMBLE_VALUE_STEP).abs() > 1e-12
                    {
                        return Err(Error::Input(format!(
                            "ensemble coupling {v} is not a multiple of 0.1 in [-1, 1]"
                        )));
                    }
                }
                (0..self.count)
                    .map(|k| {
                        let seed = child_seed(self.seed, &[tag::INSTANCE, k as u64]);
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        let mut edges = Vec::new();
                        for i in 0..self.n {
                            for j in (i + 1)..self.n {
                                let v = self.values[rand::Rng::gen_range(&mut rng, 0..self.values.len())];
                                edges.push((i, j, v));
                            }
                        }
                        IsingProblem::new(self.n, edges, vec![])
                    })
                    .collect()
            }
            other => Err(Error::Input(format!("unknown instance source `{other}`"))),
        }
    }
}

/// Fixed penalty or a per-alpha optimized sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GammaConfig {
    /// `fixed` or `sweep`.
    pub mode: String,
    pub value: f64,
    pub sweep: Vec<f64>,
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig {
            mode: "fixed".into(),
            value: 1.0,
            sweep: vec![],
        }
    }
}

impl GammaConfig {
    pub fn candidates(&self) -> Result<Vec<f64>> {
        match self.mode.as_str() {
            "fixed" => Ok(vec![self.value]),
            "sweep" => {
                if self.sweep.is_empty() {
                    return Err(Error::Input("gamma sweep set is empty".into()));
                }
                Ok(self.sweep.clone())
            }
            other => Err(Error::Input(format!("unknown gamma mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub rows: usize,
    pub cols: usize,
    pub shore: usize,
    pub dead_qubits: Vec<usize>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            rows: 16,
            cols: 16,
            shore: 4,
            dead_qubits: vec![],
        }
    }
}

impl GraphConfig {
    pub fn build(&self) -> Result<ChimeraGraph> {
        build_chimera(self.rows, self.cols, self.shore, &self.dead_qubits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Collapse reference; defaults to the C = 1 curve midpoint.
    pub m0: Option<f64>,
    pub beta_lo: f64,
    pub beta_hi: f64,
    pub beta_coarse_points: usize,
    /// Exact thermal histograms and moments are refused above this size.
    pub exact_cap: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let search = BetaSearch::default();
        AnalysisConfig {
            m0: None,
            beta_lo: search.lo,
            beta_hi: search.hi,
            beta_coarse_points: search.coarse_points,
            exact_cap: 20,
        }
    }
}

impl AnalysisConfig {
    fn beta_search(&self) -> BetaSearch {
        BetaSearch {
            lo: self.beta_lo,
            hi: self.beta_hi,
            coarse_points: self.beta_coarse_points,
            ..BetaSearch::default()
        }
    }
}

/// Full experiment description; serializes to TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    /// Energy scales, ascending, each in (0, 1].
    pub alpha: Vec<f64>,
    /// Nesting levels, ascending, must include 1.
    pub c_list: Vec<usize>,
    /// Balanced embeddings per point.
    pub embeddings: usize,
    /// Reads per embedding.
    pub reads: usize,
    pub chain_penalty: f64,
    pub instance: InstanceConfig,
    pub gamma: GammaConfig,
    pub device: DeviceModel,
    pub graph: GraphConfig,
    pub analysis: AnalysisConfig,
    /// Point results are persisted here when set, enabling crash-resume.
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 0,
            alpha: log_grid(0.05, 1.0, 12),
            c_list: vec![1],
            embeddings: 25,
            reads: 1000,
            chain_penalty: 1.0,
            instance: InstanceConfig::default(),
            gamma: GammaConfig::default(),
            device: DeviceModel::default(),
            graph: GraphConfig::default(),
            analysis: AnalysisConfig::default(),
            output_dir: None,
        }
    }
}

/// Logarithmically spaced grid over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Input(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_empty() {
            return Err(Error::Input("alpha grid is empty".into()));
        }
        for w in self.alpha.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Input("alpha grid must be strictly increasing".into()));
            }
        }
        for &a in &self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::Range {
                    what: "alpha".into(),
                    value: a,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        if self.c_list.is_empty() || self.c_list[0] != 1 {
            return Err(Error::Input("c_list must start at 1".into()));
        }
        for w in self.c_list.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Input("c_list must be strictly increasing".into()));
            }
        }
        if self.embeddings == 0 || self.reads == 0 {
            return Err(Error::Input("embeddings and reads must be >= 1".into()));
        }
        self.gamma.candidates()?;
        self.device.validate()?;
        Ok(())
    }

    /// Hash of the canonical TOML form, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let mut hasher = Sha256::new();
        hasher.update(canonical.to_toml().as_bytes());
        hex::encode(&hasher.finalize()[..8])
    }
}

/// One pipeline evaluation: a problem instance at one (C, alpha, gamma)
/// with one embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PointKey {
    pub instance: usize,
    pub c: usize,
    pub alpha_idx: usize,
    pub gamma_idx: usize,
    pub embedding: usize,
}

impl PointKey {
    fn tags(&self) -> [u64; 4] {
        [
            self.instance as u64,
            self.c as u64,
            self.gamma_idx as u64,
            self.embedding as u64,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointResult {
    pub p: Option<f64>,
    pub broken_chain_fraction: Option<f64>,
    pub beta_fit: Option<f64>,
    pub overlap: Option<f64>,
    pub error: Option<String>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

fn parse_opt(token: &str) -> Result<Option<f64>> {
    if token == "-" {
        return Ok(None);
    }
    token
        .parse()
        .map(Some)
        .map_err(|_| Error::Input(format!("bad point value `{token}`")))
}

impl PointResult {
    fn to_line(&self) -> String {
        if let Some(msg) = &self.error {
            format!("! {msg}")
        } else {
            format!(
                "{} {} {} {}",
                fmt_opt(self.p),
                fmt_opt(self.broken_chain_fraction),
                fmt_opt(self.beta_fit),
                fmt_opt(self.overlap)
            )
        }
    }

    fn from_line(line: &str) -> Result<PointResult> {
        if let Some(msg) = line.strip_prefix("! ") {
            return Ok(PointResult {
                error: Some(msg.to_string()),
                ..Default::default()
            });
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 4 {
            return Err(Error::Input(format!("bad point record `{line}`")));
        }
        Ok(PointResult {
            p: parse_opt(tokens[0])?,
            broken_chain_fraction: parse_opt(tokens[1])?,
            beta_fit: parse_opt(tokens[2])?,
            overlap: parse_opt(tokens[3])?,
            error: None,
        })
    }
}

/// All point results of one run, keyed for reproducibility.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config_hash: String,
    /// Hash of every point result, for resume bookkeeping.
    pub content_hash: String,
    pub points: BTreeMap<PointKey, PointResult>,
    /// Unix seconds; not part of any hash or exported artifact.
    pub started: u64,
    pub finished: u64,
}

impl RunRecord {
    fn new(config_hash: String, points: BTreeMap<PointKey, PointResult>, started: u64) -> RunRecord {
        let mut hasher = Sha256::new();
        hasher.update(config_hash.as_bytes());
        for (key, result) in &points {
            hasher.update(format!(
                "{} {} {} {} {} {}\n",
                key.instance,
                key.c,
                key.alpha_idx,
                key.gamma_idx,
                key.embedding,
                result.to_line()
            ));
        }
        RunRecord {
            content_hash: hex::encode(&hasher.finalize()[..8]),
            config_hash,
            points,
            started,
            finished: now(),
        }
    }
}

fn now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

struct PointStore {
    dir: Option<PathBuf>,
    config_hash: String,
}

impl PointStore {
    fn new(config: &ExperimentConfig) -> Result<PointStore> {
        let dir = match &config.output_dir {
            Some(out) => {
                let dir = out.join("points");
                std::fs::create_dir_all(&dir)?;
                Some(dir)
            }
            None => None,
        };
        Ok(PointStore {
            dir,
            config_hash: config.hash(),
        })
    }

    fn path(&self, key: &PointKey) -> Option<PathBuf> {
        let dir = self.dir.as_ref()?;
        let mut hasher = Sha256::new();
        hasher.update(self.config_hash.as_bytes());
        hasher.update(format!(
            " {} {} {} {} {}",
            key.instance, key.c, key.alpha_idx, key.gamma_idx, key.embedding
        ));
        Some(dir.join(format!("{}.txt", hex::encode(&hasher.finalize()[..8]))))
    }

    fn load(&self, key: &PointKey) -> Option<PointResult> {
        let path = self.path(key)?;
        let text = std::fs::read_to_string(path).ok()?;
        PointResult::from_line(text.trim()).ok()
    }

    fn save(&self, key: &PointKey, result: &PointResult) -> Result<()> {
        if let Some(path) = self.path(key) {
            std::fs::write(path, format!("{}\n", result.to_line()))?;
        }
        Ok(())
    }
}

struct Pipeline {
    config: ExperimentConfig,
    instances: Vec<IsingProblem>,
    grounds: Vec<Vec<SpinConfig>>,
    gammas: Vec<f64>,
    graph: ChimeraGraph,
    store: PointStore,
}

impl Pipeline {
    fn new(config: &ExperimentConfig) -> Result<Pipeline> {
        config.validate()?;
        let instances = config.instance.load()?;
        let grounds = instances
            .iter()
            .map(|p| p.enumerate_ground_states().map(|(_, g)| g))
            .collect::<Result<_>>()?;
        Ok(Pipeline {
            config: config.clone(),
            gammas: config.gamma.candidates()?,
            graph: config.graph.build()?,
            store: PointStore::new(config)?,
            instances,
            grounds,
        })
    }

    /// Decoded logical reads plus the broken-chain fraction for one point.
    fn decoded_reads(&self, key: &PointKey) -> Result<(ReadSet, f64)> {
        let config = &self.config;
        let instance = &self.instances[key.instance];
        let alpha = config.alpha[key.alpha_idx];
        let gamma = if key.c == 1 { 1.0 } else { self.gammas[key.gamma_idx] };
        let scaled = instance.scaled(alpha)?;
        let nested = nest(&scaled, key.c, gamma)?;

        let t = key.tags();
        let embed_seed = child_seed(
            config.master_seed,
            &[tag::EMBEDDING, t[0], t[1], t[3]],
        );
        let embedding = embed_complete(nested.n_code_qubits(), &self.graph, embed_seed)?;
        let physical = embed_problem(&nested, &self.graph, &embedding, config.chain_penalty)?;

        let sample_seed = child_seed(
            config.master_seed,
            &[tag::SAMPLE, t[0], t[1], key.alpha_idx as u64, t[2], t[3]],
        );
        let raw = simulate_device(&physical, &config.device, config.reads, sample_seed)?;

        let tie_seed = child_seed(
            config.master_seed,
            &[tag::TIE, t[0], t[1], key.alpha_idx as u64, t[2], t[3]],
        );
        let mut tie_rng = ChaCha8Rng::seed_from_u64(tie_seed);
        let chains = decode_chains(&raw, &physical, &mut tie_rng)?;
        let logical: Vec<SpinConfig> = chains
            .reads
            .configs
            .iter()
            .map(|code| decode_code_to_logical(code, key.c, &mut tie_rng))
            .collect::<Result<_>>()?;
        let decoded = ReadSet::new(
            logical,
            Provenance {
                problem_hash: problem_hash(instance),
                sampler: "device".into(),
                seed: sample_seed,
                embedding_id: Some(key.embedding as u64),
                alpha: Some(alpha),
                c: Some(key.c),
                gamma: Some(gamma),
                beta: Some(config.device.beta_eff()),
                device_model: Some(config.device.id()),
            },
        )?;
        Ok((decoded, chains.broken_chain_fraction))
    }

    fn run<F>(&self, evaluate: F) -> Result<BTreeMap<PointKey, PointResult>>
    where
        F: Fn(&PointKey) -> Result<PointResult>,
    {
        let mut points = BTreeMap::new();
        for instance in 0..self.instances.len() {
            for &c in &self.config.c_list {
                let n_gammas = if c == 1 { 1 } else { self.gammas.len() };
                for gamma_idx in 0..n_gammas {
                    for alpha_idx in 0..self.config.alpha.len() {
                        for embedding in 0..self.config.embeddings {
                            let key = PointKey {
                                instance,
                                c,
                                alpha_idx,
                                gamma_idx,
                                embedding,
                            };
                            let result = match self.store.load(&key) {
                                Some(cached) => cached,
                                None => {
                                    let result = match evaluate(&key) {
                                        Ok(r) => r,
                                        Err(e) => PointResult {
                                            error: Some(e.to_string()),
                                            ..Default::default()
                                        },
                                    };
                                    self.store.save(&key, &result)?;
                                    result
                                }
                            };
                            points.insert(key, result);
                        }
                    }
                }
            }
        }
        Ok(points)
    }

    /// Median / quartile statistic values for one (c, alpha, gamma) cell:
    /// per-embedding values for a single instance, per-instance medians for
    /// an ensemble.
    fn cell_values(
        &self,
        points: &BTreeMap<PointKey, PointResult>,
        c: usize,
        alpha_idx: usize,
        gamma_idx: usize,
        pick: fn(&PointResult) -> Option<f64>,
    ) -> Vec<f64> {
        let mut per_instance: Vec<Vec<f64>> = vec![Vec::new(); self.instances.len()];
        for (key, result) in points {
            if key.c == c && key.alpha_idx == alpha_idx && key.gamma_idx == gamma_idx {
                if let Some(v) = pick(result) {
                    per_instance[key.instance].push(v);
                }
            }
        }
        if self.instances.len() == 1 {
            per_instance.pop().unwrap()
        } else {
            per_instance
                .into_iter()
                .filter(|vs| !vs.is_empty())
                .map(|vs| percentile(&vs, 0.5))
                .collect()
        }
    }

    /// Build per-C percentile curves, selecting the best gamma per alpha
    /// when sweeping. Returns (curves, selected gamma per alpha per C).
    fn curves(
        &self,
        points: &BTreeMap<PointKey, PointResult>,
        pick: fn(&PointResult) -> Option<f64>,
        best_is_max: bool,
    ) -> (Vec<(usize, Vec<CurvePoint>)>, Vec<(usize, Vec<f64>)>) {
        let mut curves = Vec::new();
        let mut selected = Vec::new();
        for &c in &self.config.c_list {
            let n_gammas = if c == 1 { 1 } else { self.gammas.len() };
            let mut track = Vec::new();
            let mut gamma_track = Vec::new();
            for alpha_idx in 0..self.config.alpha.len() {
                let mut best: Option<(f64, Vec<f64>, f64)> = None;
                for gamma_idx in 0..n_gammas {
                    let values = self.cell_values(points, c, alpha_idx, gamma_idx, pick);
                    if values.is_empty() {
                        continue;
                    }
                    let median = percentile(&values, 0.5);
                    let better = match &best {
                        None => true,
                        Some((m, _, _)) => {
                            if best_is_max {
                                median > *m
                            } else {
                                median < *m
                            }
                        }
                    };
                    let gamma = if c == 1 { 1.0 } else { self.gammas[gamma_idx] };
                    if better {
                        best = Some((median, values, gamma));
                    }
                }
                if let Some((median, values, gamma)) = best {
                    track.push(CurvePoint {
                        alpha: self.config.alpha[alpha_idx],
                        median,
                        p25: percentile(&values, 0.25),
                        p75: percentile(&values, 0.75),
                    });
                    gamma_track.push(gamma);
                }
            }
            if !track.is_empty() {
                curves.push((c, track));
                selected.push((c, gamma_track));
            }
        }
        (curves, selected)
    }
}

fn collapse(
    curves: &[(usize, Vec<CurvePoint>)],
    m0: Option<f64>,
) -> (Option<BoostFit>, Option<String>) {
    let borrowed: Vec<(usize, &[CurvePoint])> =
        curves.iter().map(|(c, pts)| (*c, pts.as_slice())).collect();
    match data_collapse(&borrowed, m0) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// Output of [`run_optimization_experiment`].
#[derive(Debug, Clone)]
pub struct OptimizationRun {
    pub record: RunRecord,
    pub ensemble: String,
    pub logical_n: usize,
    pub c_max: usize,
    /// Success-probability percentile curves per C, gamma-optimized.
    pub curves: Vec<(usize, Vec<CurvePoint>)>,
    /// Selected gamma per alpha for each C.
    pub gamma_selected: Vec<(usize, Vec<f64>)>,
    pub boost: Option<BoostFit>,
    pub boost_error: Option<String>,
}

/// Full optimization protocol: scale, nest, embed, simulate, decode chains,
/// decode code, aggregate success percentiles, then collapse and fit.
///
/// Stage errors abort only their point; the failure is recorded and the run
/// continues.
pub fn run_optimization_experiment(config: &ExperimentConfig) -> Result<OptimizationRun> {
    let started = now();
    let pipeline = Pipeline::new(config)?;
    let points = pipeline.run(|key| {
        let (decoded, broken) = pipeline.decoded_reads(key)?;
        let p = crate::analysis::success_fraction(&decoded, &pipeline.grounds[key.instance])?;
        Ok(PointResult {
            p: Some(p),
            broken_chain_fraction: Some(broken),
            ..Default::default()
        })
    })?;
    let (curves, gamma_selected) = pipeline.curves(&points, |r| r.p, true);
    let (boost, boost_error) = collapse(&curves, config.analysis.m0);
    Ok(OptimizationRun {
        record: RunRecord::new(config.hash(), points, started),
        ensemble: config.instance.id(),
        logical_n: pipeline.instances[0].n_spins(),
        c_max: *config.c_list.last().unwrap(),
        curves,
        gamma_selected,
        boost,
        boost_error,
    })
}

/// Output of [`run_sampling_experiment`].
#[derive(Debug, Clone)]
pub struct SamplingRun {
    pub record: RunRecord,
    pub ensemble: String,
    /// Fitted effective-beta percentile curves per C.
    pub beta_curves: Vec<(usize, Vec<CurvePoint>)>,
    /// Gradient-overlap percentile curves per C, at the fitted beta.
    pub overlap_curves: Vec<(usize, Vec<CurvePoint>)>,
    pub boost: Option<BoostFit>,
    pub boost_error: Option<String>,
}

/// Sampling protocol: decoded energy histogram per point, effective-beta
/// fit against the exact logical spectrum, gradient overlap at the fitted
/// beta, then beta-curve collapse and power-law fit.
pub fn run_sampling_experiment(config: &ExperimentConfig) -> Result<SamplingRun> {
    let started = now();
    let pipeline = Pipeline::new(config)?;
    let cap = config.analysis.exact_cap;
    for instance in &pipeline.instances {
        if instance.n_spins() > cap {
            return Err(Error::Capacity {
                what: "exact thermal fit",
                required: instance.n_spins(),
                cap,
            });
        }
    }
    let points = pipeline.run(|key| {
        let (decoded, broken) = pipeline.decoded_reads(key)?;
        let instance = &pipeline.instances[key.instance];
        let scaled = instance.scaled(config.alpha[key.alpha_idx])?;
        let empirical = crate::ising::EnergyHistogram::from_samples(
            &scaled,
            &decoded.configs,
            Some(&decoded.weights),
            DEFAULT_ENERGY_TOLERANCE,
        )?;
        let fit = fit_effective_beta_with_cap(
            &empirical,
            &scaled,
            config.analysis.beta_search(),
            cap,
        )?;
        let thermal = scaled.gibbs_distribution_with_cap(fit.beta, cap)?;
        let (first, second) = thermal.moments(&all_pairs(scaled.n_spins()));
        let thermal_vec = MomentVector { first, second }.gradient_vector(true);
        let empirical_vec = moments_from_reads(&decoded)?.gradient_vector(true);
        let overlap = gradient_overlap(&empirical_vec, &thermal_vec)?;
        Ok(PointResult {
            broken_chain_fraction: Some(broken),
            beta_fit: Some(fit.beta),
            overlap: Some(overlap),
            ..Default::default()
        })
    })?;
    let (beta_curves, _) = pipeline.curves(&points, |r| r.beta_fit, true);
    let (overlap_curves, _) = pipeline.curves(&points, |r| r.overlap, true);
    let (boost, boost_error) = collapse(&beta_curves, config.analysis.m0);
    Ok(SamplingRun {
        record: RunRecord::new(config.hash(), points, started),
        ensemble: config.instance.id(),
        beta_curves,
        overlap_curves,
        boost,
        boost_error,
    })
}

fn write_csv(dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{name}.csv"));
    let mut out = String::with_capacity(rows.len() * 32);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    std::fs::write(&path, out)?;
    Ok(path)
}

fn curve_rows(curves: &[(usize, Vec<CurvePoint>)]) -> Vec<String> {
    let mut rows = Vec::new();
    for (c, points) in curves {
        for p in points {
            rows.push(format!("{c},{},{},{},{}", p.alpha, p.median, p.p25, p.p75));
        }
    }
    rows
}

fn boost_of(boost: &Option<BoostFit>, error: &Option<String>) -> Result<BoostFit> {
    match boost {
        Some(fit) => Ok(fit.clone()),
        None => Err(Error::Input(format!(
            "no collapse fit available: {}",
            error.as_deref().unwrap_or("missing curves")
        ))),
    }
}

fn fig4_rows(ensemble: &str, boost: &BoostFit) -> Vec<String> {
    let (eta, err) = boost
        .power_law
        .map(|f| (f.eta, f.uncertainty))
        .unwrap_or((f64::NAN, f64::NAN));
    boost
        .entries
        .iter()
        .map(|e| format!("{ensemble},{},{},{},{},{eta},{err}", e.c, e.mu, e.low, e.high))
        .collect()
}

impl OptimizationRun {
    /// Known figure ids: `fig1a` (success curves), `fig1b` (collapsed
    /// curves), `fig2` (repetition-corrected curves), `fig4` (boosts and
    /// power law).
    pub fn export_csv(&self, figure: &str, dir: &Path) -> Result<PathBuf> {
        match figure {
            "fig1a" => write_csv(dir, "fig1a", "C,alpha,p_median,p25,p75", &curve_rows(&self.curves)),
            "fig1b" => {
                let boost = boost_of(&self.boost, &self.boost_error)?;
                let mut rows = Vec::new();
                for (c, points) in &self.curves {
                    let mu = boost
                        .entries
                        .iter()
                        .find(|e| e.c == *c)
                        .map(|e| e.mu)
                        .unwrap_or(f64::NAN);
                    for p in points {
                        rows.push(format!(
                            "{c},{},{},{},{}",
                            mu * p.alpha,
                            p.median,
                            p.p25,
                            p.p75
                        ));
                    }
                }
                write_csv(dir, "fig1b", "C,alpha_rescaled,p_median,p25,p75", &rows)
            }
            "fig2" => {
                let mut rows = Vec::new();
                for (c, points) in &self.curves {
                    let copies = repetition_copies(self.logical_n, *c, self.c_max)?;
                    for p in points {
                        let corr = repetition_correct(p.median, *c, self.logical_n, self.c_max)?;
                        rows.push(format!("{c},{},{copies},{corr}", p.alpha));
                    }
                }
                write_csv(dir, "fig2", "C,alpha,m_c,p_corr_median", &rows)
            }
            "fig4" => {
                let boost = boost_of(&self.boost, &self.boost_error)?;
                write_csv(
                    dir,
                    "fig4",
                    "ensemble,C,mu,mu_low,mu_high,eta,eta_err",
                    &fig4_rows(&self.ensemble, &boost),
                )
            }
            other => Err(Error::Input(format!("unknown figure id `{other}`"))),
        }
    }
}

impl SamplingRun {
    /// Known figure ids: `fig3` (fitted beta and overlap curves), `fig4`
    /// (beta boosts and power law).
    pub fn export_csv(&self, figure: &str, dir: &Path) -> Result<PathBuf> {
        match figure {
            "fig3" => {
                let mut rows = Vec::new();
                for (c, points) in &self.beta_curves {
                    let overlaps = self
                        .overlap_curves
                        .iter()
                        .find(|(oc, _)| oc == c)
                        .map(|(_, pts)| pts.as_slice())
                        .unwrap_or(&[]);
                    for (k, p) in points.iter().enumerate() {
                        let overlap = overlaps.get(k).map(|o| o.median).unwrap_or(f64::NAN);
                        rows.push(format!(
                            "{c},{},{},{},{},{overlap}",
                            p.alpha, p.median, p.p25, p.p75
                        ));
                    }
                }
                write_csv(dir, "fig3", "C,alpha,beta_median,beta25,beta75,overlap_median", &rows)
            }
            "fig4" => {
                let boost = boost_of(&self.boost, &self.boost_error)?;
                write_csv(
                    dir,
                    "fig4",
                    "ensemble,C,mu,mu_low,mu_high,eta,eta_err",
                    &fig4_rows(&self.ensemble, &boost),
                )
            }
            other => Err(Error::Input(format!("unknown figure id `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(out: Option<PathBuf>) -> ExperimentConfig {
        ExperimentConfig {
            master_seed: 11,
            alpha: log_grid(0.02, 1.0, 6),
            c_list: vec![1, 2],
            embeddings: 3,
            reads: 200,
            instance: InstanceConfig {
                source: "clique".into(),
                n: 4,
                ..Default::default()
            },
            device: DeviceModel {
                control_noise_sigma: 0.0,
                reads_per_cycle: 200,
                beta_phys: 2.0,
                ..Default::default()
            },
            graph: GraphConfig {
                rows: 4,
                cols: 4,
                shore: 4,
                dead_qubits: vec![],
            },
            output_dir: out,
            ..Default::default()
        }
    }

    #[test]
    fn config_toml_round_trip() {
        let config = small_config(None);
        let text = config.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(config, back);
        assert_eq!(config.hash(), back.hash());
    }

    #[test]
    fn config_validation_rejects_bad_grids() {
        let mut config = small_config(None);
        config.alpha = vec![0.5, 0.5];
        assert!(config.validate().is_err());
        let mut config = small_config(None);
        config.alpha = vec![0.5, 1.5];
        assert!(config.validate().is_err());
        let mut config = small_config(None);
        config.c_list = vec![2, 3];
        assert!(config.validate().is_err());
    }

    #[test]
    fn empty_ensemble_is_an_input_error() {
        let mut config = small_config(None);
        config.instance = InstanceConfig {
            source: "ensemble".into(),
            n: 4,
            count: 0,
            ..Default::default()
        };
        assert!(matches!(run_optimization_experiment(&config), Err(Error::Input(_))));
    }

    #[test]
    fn ensemble_values_outside_paper_set_rejected() {
        let config = InstanceConfig {
            source: "ensemble".into(),
            n: 4,
            count: 2,
            values: vec![0.35],
            ..Default::default()
        };
        assert!(config.load().is_err());
    }

    #[test]
    fn ensemble_instances_are_seeded_and_distinct() {
        let config = InstanceConfig {
            source: "ensemble".into(),
            n: 6,
            count: 4,
            seed: 3,
            ..Default::default()
        };
        let a = config.load().unwrap();
        let b = config.load().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert_ne!(a[0], a[1]);
        for p in &a {
            assert_eq!(p.edges().len(), 15);
        }
    }

    #[test]
    fn c1_only_run_has_unit_boost_and_no_power_law() {
        let mut config = small_config(None);
        config.c_list = vec![1];
        let run = run_optimization_experiment(&config).unwrap();
        let boost = run.boost.unwrap();
        assert_eq!(boost.entries.len(), 1);
        assert_eq!(boost.entries[0].c, 1);
        assert_eq!(boost.entries[0].mu, 1.0);
        assert!(boost.power_law.is_none());
    }

    #[test]
    fn gamma_sweep_selects_argmax_per_alpha() {
        let mut config = small_config(None);
        // gamma 0.02 barely binds the code qubits; 1.0 should win.
        config.gamma = GammaConfig {
            mode: "sweep".into(),
            value: 1.0,
            sweep: vec![0.02, 1.0],
        };
        let run = run_optimization_experiment(&config).unwrap();
        let (_, gammas_c2) = run
            .gamma_selected
            .iter()
            .find(|(c, _)| *c == 2)
            .cloned()
            .unwrap();
        // The selected gamma is the per-alpha argmax of the median over
        // embeddings, recomputed here from the raw point records.
        for (alpha_idx, &picked) in gammas_c2.iter().enumerate() {
            let medians: Vec<f64> = (0..config.gamma.sweep.len())
                .map(|gamma_idx| {
                    let ps: Vec<f64> = run
                        .record
                        .points
                        .iter()
                        .filter(|(k, _)| {
                            k.c == 2 && k.alpha_idx == alpha_idx && k.gamma_idx == gamma_idx
                        })
                        .filter_map(|(_, r)| r.p)
                        .collect();
                    percentile(&ps, 0.5)
                })
                .collect();
            let best = medians
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                .unwrap()
                .0;
            assert_eq!(picked, config.gamma.sweep[best], "alpha index {alpha_idx}");
        }
        let (_, gammas_c1) = run.gamma_selected.iter().find(|(c, _)| *c == 1).cloned().unwrap();
        assert!(gammas_c1.iter().all(|&g| g == 1.0));
    }

    #[test]
    fn optimization_run_is_deterministic_and_resumable() {
        let tmp = tempfile::tempdir().unwrap();
        let dir_a = tmp.path().join("a");
        let dir_b = tmp.path().join("b");
        let run1 = run_optimization_experiment(&small_config(Some(dir_a.clone()))).unwrap();
        let run2 = run_optimization_experiment(&small_config(Some(dir_b.clone()))).unwrap();
        assert_eq!(run1.record.content_hash, run2.record.content_hash);
        assert_eq!(run1.record.points, run2.record.points);

        // Resume: drop half the cached points, rerun, results identical.
        let points_dir = dir_a.join("points");
        for (k, entry) in std::fs::read_dir(&points_dir).unwrap().enumerate() {
            if k % 2 == 0 {
                std::fs::remove_file(entry.unwrap().path()).unwrap();
            }
        }
        let run3 = run_optimization_experiment(&small_config(Some(dir_a))).unwrap();
        assert_eq!(run1.record.content_hash, run3.record.content_hash);

        let csv_a = run1.export_csv("fig1a", tmp.path()).unwrap();
        let bytes_a = std::fs::read(&csv_a).unwrap();
        let csv_b = run2.export_csv("fig1a", tmp.path()).unwrap();
        assert_eq!(bytes_a, std::fs::read(&csv_b).unwrap());
    }

    #[test]
    fn export_rejects_unknown_figure() {
        let mut config = small_config(None);
        config.c_list = vec![1];
        config.alpha = log_grid(0.2, 1.0, 3);
        config.embeddings = 2;
        config.reads = 100;
        let run = run_optimization_experiment(&config).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        assert!(run.export_csv("fig9", tmp.path()).is_err());
    }

    #[test]
    fn exports_are_idempotent_and_schema_stable() {
        let config = small_config(None);
        let run = run_optimization_experiment(&config).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        for figure in ["fig1a", "fig1b", "fig2", "fig4"] {
            let path = run.export_csv(figure, tmp.path()).unwrap();
            let first = std::fs::read(&path).unwrap();
            run.export_csv(figure, tmp.path()).unwrap();
            assert_eq!(first, std::fs::read(&path).unwrap());
        }
        let fig1a = std::fs::read_to_string(tmp.path().join("fig1a.csv")).unwrap();
        assert!(fig1a.starts_with("C,alpha,p_median,p25,p75\n"));
        let fig4 = std::fs::read_to_string(tmp.path().join("fig4.csv")).unwrap();
        assert!(fig4.starts_with("ensemble,C,mu,mu_low,mu_high,eta,eta_err\n"));
    }

    #[test]
    fn sampling_run_fits_beta_and_overlap_where_chains_hold() {
        let mut config = small_config(None);
        config.alpha = vec![0.1, 0.3];
        config.embeddings = 2;
        config.reads = 4000;
        config.device.reads_per_cycle = 4000;
        let run = run_sampling_experiment(&config).unwrap();
        let beta_eff = config.device.beta_eff();
        // At alpha = 0.3 the problem couplings sit well inside the chain
        // penalty, chains rarely break, and the decoded state tracks the
        // logical Gibbs state at slightly below the device beta.
        let (_, c1) = run.beta_curves.iter().find(|(c, _)| *c == 1).unwrap();
        let fitted = c1.last().unwrap().median;
        assert!(fitted > 0.8 * beta_eff && fitted < beta_eff, "fitted {fitted}");
        let (_, overlap_c1) = run.overlap_curves.iter().find(|(c, _)| *c == 1).unwrap();
        assert!(overlap_c1.last().unwrap().median >= 0.99);
    }

    #[test]
    fn sampling_run_refuses_oversized_instances() {
        let mut config = small_config(None);
        config.instance.n = 22;
        config.analysis.exact_cap = 20;
        match run_sampling_experiment(&config) {
            Err(Error::Capacity { required, cap, .. }) => {
                assert_eq!(required, 22);
                assert_eq!(cap, 20);
            }
            other => panic!("expected capacity error, got {other:?}"),
        }
    }
}
