//! Ising problem representation and exact oracles for small systems.
//!
//! Energies follow the convention `E(z) = sum_i h_i z_i + sum_(i,j) J_ij z_i z_j`
//! with spins `z_i = +-1`. Exhaustive enumeration indexes configurations by the
//! bits of a `usize`: bit `i` set means spin `i` is `+1`.

use crate::error::{Error, Result};

/// Default cap on exhaustive ground-state enumeration.
pub const DEFAULT_GROUND_STATE_CAP: usize = 30;
/// Default cap on full Gibbs-distribution construction.
pub const DEFAULT_GIBBS_CAP: usize = 25;
/// Default binning tolerance for energy levels.
pub const DEFAULT_ENERGY_TOLERANCE: f64 = 1e-9;

/// Role of a problem in the encoding pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Logical,
    Nested,
    Physical,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Logical => "logical",
            Label::Nested => "nested",
            Label::Physical => "physical",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "logical" => Some(Label::Logical),
            "nested" => Some(Label::Nested),
            "physical" => Some(Label::Physical),
            _ => None,
        }
    }
}

/// An Ising instance: couplings on an undirected graph plus local fields.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    n_spins: usize,
    /// (i, j, J_ij) with i < j, no duplicates.
    edges: Vec<(usize, usize, f64)>,
    /// (i, h_i), at most one per spin.
    fields: Vec<(usize, f64)>,
    pub h_range: (f64, f64),
    pub j_range: (f64, f64),
    pub label: Label,
}

/// A configuration of +-1 spins.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig(pub Vec<i8>);

impl SpinConfig {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Build from a configuration index: bit `i` set means spin `i` is `+1`.
    pub fn from_index(index: usize, n_spins: usize) -> SpinConfig {
        SpinConfig(
            (0..n_spins)
                .map(|i| if (index >> i) & 1 == 1 { 1 } else { -1 })
                .collect(),
        )
    }

    /// Inverse of [`SpinConfig::from_index`].
    pub fn to_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &s)| if s > 0 { acc | (1 << i) } else { acc })
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Input("spins must be +-1".into()));
        }
        Ok(())
    }
}

impl IsingProblem {
    /// Construct a problem with default ranges `h in [-2,2]`, `J in [-1,1]`.
    pub fn new(
        n_spins: usize,
        edges: Vec<(usize, usize, f64)>,
        fields: Vec<(usize, f64)>,
    ) -> Result<IsingProblem> {
        IsingProblem::with_ranges(n_spins, edges, fields, (-2.0, 2.0), (-1.0, 1.0), Label::Logical)
    }

    pub fn with_ranges(
        n_spins: usize,
        edges: Vec<(usize, usize, f64)>,
        fields: Vec<(usize, f64)>,
        h_range: (f64, f64),
        j_range: (f64, f64),
        label: Label,
    ) -> Result<IsingProblem> {
        let mut normalized = Vec::with_capacity(edges.len());
        let mut seen = std::collections::HashSet::new();
        for (i, j, v) in edges {
            if i == j {
                return Err(Error::Input(format!("self-loop on spin {i}")));
            }
            if i >= n_spins || j >= n_spins {
                return Err(Error::Input(format!(
                    "edge ({i},{j}) out of range for {n_spins} spins"
                )));
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if !seen.insert((a, b)) {
                return Err(Error::Input(format!("duplicate edge ({a},{b})")));
            }
            if v < j_range.0 || v > j_range.1 {
                return Err(Error::Range {
                    what: format!("J({a},{b})"),
                    value: v,
                    lo: j_range.0,
                    hi: j_range.1,
                });
            }
            normalized.push((a, b, v));
        }
        let mut seen_f = std::collections::HashSet::new();
        for &(i, v) in &fields {
            if i >= n_spins {
                return Err(Error::Input(format!("field index {i} out of range")));
            }
            if !seen_f.insert(i) {
                return Err(Error::Input(format!("duplicate field on spin {i}")));
            }
            if v < h_range.0 || v > h_range.1 {
                return Err(Error::Range {
                    what: format!("h({i})"),
                    value: v,
                    lo: h_range.0,
                    hi: h_range.1,
                });
            }
        }
        Ok(IsingProblem {
            n_spins,
            edges: normalized,
            fields,
            h_range,
            j_range,
            label,
        })
    }

    /// Fully antiferromagnetic complete graph, all J = 1, no fields.
    pub fn antiferromagnetic_clique(n: usize) -> IsingProblem {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j, 1.0));
            }
        }
        IsingProblem::new(n, edges, vec![]).expect("AF clique is always valid")
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn fields(&self) -> &[(usize, f64)] {
        &self.fields
    }

    /// Dense field vector, zero where no field is declared.
    pub fn dense_fields(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.n_spins];
        for &(i, v) in &self.fields {
            h[i] = v;
        }
        h
    }

    pub fn energy(&self, config: &SpinConfig) -> Result<f64> {
        if config.len() != self.n_spins {
            return Err(Error::Dimension {
                expected: self.n_spins,
                got: config.len(),
            });
        }
        let z = &config.0;
        let mut e = 0.0;
        for &(i, v) in &self.fields {
            e += v * z[i] as f64;
        }
        for &(i, j, v) in &self.edges {
            e += v * (z[i] as f64) * (z[j] as f64);
        }
        Ok(e)
    }

    /// Energies of all `2^n` configurations, indexed per [`SpinConfig::from_index`].
    pub fn all_energies(&self) -> Vec<f64> {
        let n = self.n_spins;
        let h = self.dense_fields();
        let mut energies = vec![0.0f64; 1usize << n];
        for (idx, e) in energies.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &hi) in h.iter().enumerate() {
                let zi = if (idx >> i) & 1 == 1 { 1.0 } else { -1.0 };
                acc += hi * zi;
            }
            for &(i, j, v) in &self.edges {
                let zi = if (idx >> i) & 1 == 1 { 1.0 } else { -1.0 };
                let zj = if (idx >> j) & 1 == 1 { 1.0 } else { -1.0 };
                acc += v * zi * zj;
            }
            *e = acc;
        }
        energies
    }

    /// Exhaustive ground-state search with the default cap.
    pub fn enumerate_ground_states(&self) -> Result<(f64, Vec<SpinConfig>)> {
        self.enumerate_ground_states_with_cap(DEFAULT_GROUND_STATE_CAP)
    }

    pub fn enumerate_ground_states_with_cap(&self, cap: usize) -> Result<(f64, Vec<SpinConfig>)> {
        if self.n_spins > cap {
            return Err(Error::Capacity {
                what: "ground-state enumeration",
                required: self.n_spins,
                cap,
            });
        }
        let energies = self.all_energies();
        let ground = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let states = energies
            .iter()
            .enumerate()
            .filter(|(_, &e)| e <= ground + DEFAULT_ENERGY_TOLERANCE)
            .map(|(idx, _)| SpinConfig::from_index(idx, self.n_spins))
            .collect();
        Ok((ground, states))
    }

    /// Exact Gibbs distribution at inverse temperature `beta`.
    pub fn gibbs_distribution(&self, beta: f64) -> Result<GibbsDistribution> {
        self.gibbs_distribution_with_cap(beta, DEFAULT_GIBBS_CAP)
    }

    pub fn gibbs_distribution_with_cap(&self, beta: f64, cap: usize) -> Result<GibbsDistribution> {
        if self.n_spins > cap {
            return Err(Error::Capacity {
                what: "Gibbs enumeration",
                required: self.n_spins,
                cap,
            });
        }
        if beta < 0.0 {
            return Err(Error::Input(format!("beta must be >= 0, got {beta}")));
        }
        let energies = self.all_energies();
        // Subtract the minimum before exponentiating to avoid overflow.
        let e_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut probs: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
        let z: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= z;
        }
        Ok(GibbsDistribution {
            n_spins: self.n_spins,
            beta,
            energies,
            probs,
        })
    }

    /// Multiply every field and coupling by `alpha in (0,1]`; ranges unchanged.
    pub fn scaled(&self, alpha: f64) -> Result<IsingProblem> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Input(format!("alpha must be in (0,1], got {alpha}")));
        }
        let mut out = self.clone();
        for e in &mut out.edges {
            e.2 *= alpha;
        }
        for f in &mut out.fields {
            f.1 *= alpha;
        }
        Ok(out)
    }

    /// Uniformly rescale so every value fits its range; preserves ground states.
    pub fn rescale_to_range(&self) -> IsingProblem {
        let mut factor: f64 = 1.0;
        for &(_, _, v) in &self.edges {
            if v > self.j_range.1 {
                factor = factor.min(self.j_range.1 / v);
            } else if v < self.j_range.0 {
                factor = factor.min(self.j_range.0 / v);
            }
        }
        for &(_, v) in &self.fields {
            if v > self.h_range.1 {
                factor = factor.min(self.h_range.1 / v);
            } else if v < self.h_range.0 {
                factor = factor.min(self.h_range.0 / v);
            }
        }
        let mut out = self.clone();
        for e in &mut out.edges {
            e.2 *= factor;
        }
        for f in &mut out.fields {
            f.1 *= factor;
        }
        out
    }
}

/// Exact Boltzmann distribution over all configurations of a small problem.
#[derive(Debug, Clone)]
pub struct GibbsDistribution {
    pub n_spins: usize,
    pub beta: f64,
    /// Energy of every configuration, indexed per [`SpinConfig::from_index`].
    pub energies: Vec<f64>,
    pub probs: Vec<f64>,
}

impl GibbsDistribution {
    pub fn prob(&self, config: &SpinConfig) -> f64 {
        self.probs[config.to_index()]
    }

    /// Exact first and second moments `<z_i>`, `<z_i z_j>` for edge list `pairs`.
    pub fn moments(&self, pairs: &[(usize, usize)]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_spins;
        let mut first = vec![0.0; n];
        let mut second = vec![0.0; pairs.len()];
        for (idx, &p) in self.probs.iter().enumerate() {
            for (i, f) in first.iter_mut().enumerate() {
                let zi = if (idx >> i) & 1 == 1 { 1.0 } else { -1.0 };
                *f += p * zi;
            }
            for (k, &(i, j)) in pairs.iter().enumerate() {
                let zi = if (idx >> i) & 1 == 1 { 1.0 } else { -1.0 };
                let zj = if (idx >> j) & 1 == 1 { 1.0 } else { -1.0 };
                second[k] += p * zi * zj;
            }
        }
        (first, second)
    }
}

/// Probability mass over distinct energy levels.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyHistogram {
    levels: Vec<f64>,
    masses: Vec<f64>,
    pub energy_tolerance: f64,
}

impl EnergyHistogram {
    /// Aggregate weighted (energy, mass) pairs into levels separated by more
    /// than `tolerance`.
    pub fn from_weighted_energies(items: &[(f64, f64)], tolerance: f64) -> Result<EnergyHistogram> {
        if items.is_empty() {
            return Err(Error::Input("cannot build histogram from empty input".into()));
        }
        let mut sorted: Vec<(f64, f64)> = items.to_vec();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let total: f64 = sorted.iter().map(|&(_, m)| m).sum();
        if total <= 0.0 {
            return Err(Error::Input("histogram mass must be positive".into()));
        }
        let mut levels = Vec::new();
        let mut masses = Vec::new();
        for &(e, m) in &sorted {
            match levels.last() {
                Some(&last) if e - last <= tolerance => {
                    *masses.last_mut().unwrap() += m / total;
                }
                _ => {
                    levels.push(e);
                    masses.push(m / total);
                }
            }
        }
        Ok(EnergyHistogram {
            levels,
            masses,
            energy_tolerance: tolerance,
        })
    }

    /// Histogram of an exact distribution.
    pub fn from_distribution(dist: &GibbsDistribution, tolerance: f64) -> Result<EnergyHistogram> {
        let items: Vec<(f64, f64)> = dist
            .energies
            .iter()
            .cloned()
            .zip(dist.probs.iter().cloned())
            .collect();
        EnergyHistogram::from_weighted_energies(&items, tolerance)
    }

    /// Empirical histogram of sampled configurations under `problem`.
    pub fn from_samples(
        problem: &IsingProblem,
        configs: &[SpinConfig],
        weights: Option<&[f64]>,
        tolerance: f64,
    ) -> Result<EnergyHistogram> {
        if configs.is_empty() {
            return Err(Error::Input("empty sample set".into()));
        }
        let mut items = Vec::with_capacity(configs.len());
        for (k, c) in configs.iter().enumerate() {
            let w = weights.map(|w| w[k]).unwrap_or(1.0);
            items.push((problem.energy(c)?, w));
        }
        EnergyHistogram::from_weighted_energies(&items, tolerance)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Total variation distance on the union of energy levels; levels within
    /// `energy_tolerance` of each other are identified.
    pub fn total_variation(&self, other: &EnergyHistogram) -> f64 {
        let tol = self.energy_tolerance.max(other.energy_tolerance);
        let mut d = 0.0;
        let (mut a, mut b) = (0usize, 0usize);
        while a < self.levels.len() || b < other.levels.len() {
            let ea = self.levels.get(a).copied().unwrap_or(f64::INFINITY);
            let eb = other.levels.get(b).copied().unwrap_or(f64::INFINITY);
            if (ea - eb).abs() <= tol {
                d += (self.masses[a] - other.masses[b]).abs();
                a += 1;
                b += 1;
            } else if ea < eb {
                d += self.masses[a];
                a += 1;
            } else {
                d += other.masses[b];
                b += 1;
            }
        }
        d / 2.0
    }
}
