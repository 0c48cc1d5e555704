//! Boltzmann-machine moment estimation and weight updates.
//!
//! Models live in the unit-temperature convention `E(z) = sum b_i z_i +
//! sum w_ij z_i z_j`; the annealer mapping is `h_i = b_i / beta_eff`,
//! `J_ij = w_ij / beta_eff`.

use crate::error::{Error, Result};
use crate::ising::{IsingProblem, Label, SpinConfig};
use crate::reads::ReadSet;

/// Fully connected Boltzmann machine over N logical variables.
///
/// Weights are stored on the upper triangle in lexicographic pair order, so
/// symmetry and a zero diagonal hold by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct BmModel {
    pub n: usize,
    pub biases: Vec<f64>,
    /// `weights[pair_index(i, j)]` = w_ij for i < j.
    pub weights: Vec<f64>,
    pub beta_eff: f64,
}

/// Lexicographic index of pair `(i, j)`, `i < j`, among all pairs of `n`.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// All pairs `(i, j)` with `i < j` in the order used by [`pair_index`].
pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.push((i, j));
        }
    }
    pairs
}

/// First and second moments indexed consistently with [`BmModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl MomentVector {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: &f64| (-1.0..=1.0).contains(v);
        if !self.first.iter().all(ok) || !self.second.iter().all(ok) {
            return Err(Error::Input("moments must lie in [-1, 1]".into()));
        }
        Ok(())
    }

    /// Flat vector of second moments followed by first moments, for overlap
    /// computations. First moments are dropped when `include_first` is false
    /// (all paper instances have vanishing fields).
    pub fn gradient_vector(&self, include_first: bool) -> Vec<f64> {
        let mut v = self.second.clone();
        if include_first {
            v.extend(self.first.iter());
        }
        v
    }
}

impl BmModel {
    pub fn new(n: usize, biases: Vec<f64>, weights: Vec<f64>, beta_eff: f64) -> Result<BmModel> {
        if biases.len() != n || weights.len() != n * (n - 1) / 2 {
            return Err(Error::Dimension {
                expected: n * (n - 1) / 2,
                got: weights.len(),
            });
        }
        if beta_eff <= 0.0 {
            return Err(Error::Input(format!("beta_eff must be > 0, got {beta_eff}")));
        }
        Ok(BmModel {
            n,
            biases,
            weights,
            beta_eff,
        })
    }

    pub fn zeros(n: usize, beta_eff: f64) -> BmModel {
        BmModel::new(n, vec![0.0; n], vec![0.0; n * (n - 1) / 2], beta_eff).unwrap()
    }

    /// Map to annealer parameters `h = b / beta_eff`, `J = w / beta_eff`,
    /// checked against the given ranges.
    pub fn to_ising(&self, h_range: (f64, f64), j_range: (f64, f64)) -> Result<IsingProblem> {
        let fields = self
            .biases
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(i, &b)| (i, b / self.beta_eff))
            .collect();
        let edges = all_pairs(self.n)
            .into_iter()
            .zip(self.weights.iter())
            .map(|((i, j), &w)| (i, j, w / self.beta_eff))
            .collect();
        IsingProblem::with_ranges(self.n, edges, fields, h_range, j_range, Label::Logical)
    }

    /// Inverse of [`BmModel::to_ising`]: `b = beta_eff * h`, `w = beta_eff * J`.
    pub fn from_ising(problem: &IsingProblem, beta_eff: f64) -> Result<BmModel> {
        let n = problem.n_spins();
        let mut model = BmModel::zeros(n, beta_eff);
        for &(i, h) in problem.fields() {
            model.biases[i] = beta_eff * h;
        }
        for &(i, j, v) in problem.edges() {
            model.weights[pair_index(n, i, j)] = beta_eff * v;
        }
        Ok(model)
    }

    /// The model's unit-temperature energy function as an Ising problem with
    /// unconstrained ranges, for exact enumeration.
    fn unit_problem(&self) -> IsingProblem {
        let big = f64::INFINITY;
        let fields = self
            .biases
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(i, &b)| (i, b))
            .collect();
        let edges = all_pairs(self.n)
            .into_iter()
            .zip(self.weights.iter())
            .map(|((i, j), &w)| (i, j, w))
            .collect();
        IsingProblem::with_ranges(self.n, edges, fields, (-big, big), (-big, big), Label::Logical)
            .expect("unconstrained ranges")
    }

    /// Analytic negative phases: exact Gibbs moments of the model at unit
    /// temperature. Capacity-limited by full enumeration.
    pub fn negative_phases_exact(&self, cap: usize) -> Result<MomentVector> {
        let dist = self.unit_problem().gibbs_distribution_with_cap(1.0, cap)?;
        let (first, second) = dist.moments(&all_pairs(self.n));
        Ok(MomentVector { first, second })
    }

    /// Exact Gibbs distribution of the model at unit temperature.
    pub fn distribution(&self, cap: usize) -> Result<crate::ising::GibbsDistribution> {
        self.unit_problem().gibbs_distribution_with_cap(1.0, cap)
    }
}

/// Data-average moments ("positive phases").
pub fn positive_phases(dataset: &[SpinConfig]) -> Result<MomentVector> {
    if dataset.is_empty() {
        return Err(Error::Input("empty dataset".into()));
    }
    let n = dataset[0].len();
    if dataset.iter().any(|c| c.len() != n) {
        return Err(Error::Input("dataset configurations differ in length".into()));
    }
    moments_weighted(dataset.iter().map(|c| (c, 1.0)), n)
}

/// Sample-average moments from decoded reads ("negative phases" when the
/// reads came from sampling the model's Gibbs distribution).
pub fn moments_from_reads(reads: &ReadSet) -> Result<MomentVector> {
    if reads.is_empty() {
        return Err(Error::Input("empty read set".into()));
    }
    let n = reads.spin_len();
    moments_weighted(reads.configs.iter().zip(reads.weights.iter().cloned()), n)
}

fn moments_weighted<'a, I>(items: I, n: usize) -> Result<MomentVector>
where
    I: Iterator<Item = (&'a SpinConfig, f64)>,
{
    let pairs = all_pairs(n);
    let mut first = vec![0.0; n];
    let mut second = vec![0.0; pairs.len()];
    let mut total = 0.0;
    for (c, w) in items {
        for (i, f) in first.iter_mut().enumerate() {
            *f += w * c.0[i] as f64;
        }
        for (k, &(i, j)) in pairs.iter().enumerate() {
            second[k] += w * (c.0[i] * c.0[j]) as f64;
        }
        total += w;
    }
    for f in first.iter_mut().chain(second.iter_mut()) {
        *f /= total;
    }
    Ok(MomentVector { first, second })
}

/// One likelihood-gradient step of size `lr * (positive - negative)` per
/// parameter, with the sign matching the `+b z + w z z` energy convention:
/// parameters move down the moment mismatch so over-represented data
/// correlations lower the corresponding energy term.
pub fn update_step(
    model: &BmModel,
    positive: &MomentVector,
    negative: &MomentVector,
    learning_rate: f64,
) -> Result<BmModel> {
    if positive.first.len() != model.n || negative.first.len() != model.n {
        return Err(Error::Dimension {
            expected: model.n,
            got: positive.first.len(),
        });
    }
    if positive.second.len() != model.weights.len() || negative.second.len() != model.weights.len() {
        return Err(Error::Dimension {
            expected: model.weights.len(),
            got: positive.second.len(),
        });
    }
    let mut out = model.clone();
    for i in 0..model.n {
        out.biases[i] -= learning_rate * (positive.first[i] - negative.first[i]);
    }
    for k in 0..model.weights.len() {
        out.weights[k] -= learning_rate * (positive.second[k] - negative.second[k]);
    }
    Ok(out)
}
