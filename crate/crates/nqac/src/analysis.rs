//! Quantitative evaluation: success probabilities, classical repetition
//! correction, effective-temperature fits, gradient overlap, data collapse
//! and power-law scaling of the energy boost.

use crate::error::{Error, Result};
use crate::ising::{EnergyHistogram, IsingProblem, SpinConfig, DEFAULT_ENERGY_TOLERANCE};
use crate::nesting::resource_count;
use crate::reads::ReadSet;
use crate::spline::{golden_section_min, smoothing_spline};

/// One aggregated point of a median/percentile curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub alpha: f64,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

fn validate_points(points: &[CurvePoint], lo: f64, hi: f64) -> Result<()> {
    if points.windows(2).any(|w| w[1].alpha <= w[0].alpha) {
        return Err(Error::Input("curve alphas must be strictly increasing".into()));
    }
    for p in points {
        if !(p.p25 <= p.median && p.median <= p.p75) {
            return Err(Error::Input(format!(
                "percentiles must bracket the median at alpha = {}",
                p.alpha
            )));
        }
        if p.p25 < lo || p.p75 > hi {
            return Err(Error::Input(format!("curve value out of range at alpha = {}", p.alpha)));
        }
    }
    Ok(())
}

/// Success probability vs energy scale for one nesting level.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessCurve {
    pub c: usize,
    pub points: Vec<CurvePoint>,
}

impl SuccessCurve {
    pub fn new(c: usize, points: Vec<CurvePoint>) -> Result<SuccessCurve> {
        validate_points(&points, 0.0, 1.0)?;
        Ok(SuccessCurve { c, points })
    }
}

/// Effective inverse temperature vs energy scale for one nesting level.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaCurve {
    pub c: usize,
    pub points: Vec<CurvePoint>,
}

impl BetaCurve {
    pub fn new(c: usize, points: Vec<CurvePoint>) -> Result<BetaCurve> {
        validate_points(&points, 0.0, f64::INFINITY)?;
        Ok(BetaCurve { c, points })
    }
}

/// Linear-interpolation percentile of unsorted data.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if v.len() == 1 {
        return v[0];
    }
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    v[lo] * (1.0 - frac) + v[hi] * frac
}

/// Per-embedding success probabilities with median / 25th / 75th aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessStats {
    pub per_embedding: Vec<f64>,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

/// Fraction of reads (weighted) that land in the ground set.
pub fn success_fraction(decoded: &ReadSet, ground: &[SpinConfig]) -> Result<f64> {
    if decoded.is_empty() {
        return Err(Error::Input("empty read set".into()));
    }
    if ground.is_empty() {
        return Err(Error::Input("empty ground set".into()));
    }
    let ground_set: std::collections::HashSet<&SpinConfig> = ground.iter().collect();
    let mut hit = 0.0;
    let mut total = 0.0;
    for (c, &w) in decoded.configs.iter().zip(decoded.weights.iter()) {
        if ground_set.contains(c) {
            hit += w;
        }
        total += w;
    }
    Ok(hit / total)
}

/// Success probability per embedding, aggregated across embeddings by
/// median and quartiles.
pub fn success_probability(per_embedding: &[ReadSet], ground: &[SpinConfig]) -> Result<SuccessStats> {
    if per_embedding.is_empty() {
        return Err(Error::Input("no read sets supplied".into()));
    }
    let ps: Vec<f64> = per_embedding
        .iter()
        .map(|rs| success_fraction(rs, ground))
        .collect::<Result<_>>()?;
    Ok(SuccessStats {
        median: percentile(&ps, 0.5),
        p25: percentile(&ps, 0.25),
        p75: percentile(&ps, 0.75),
        per_embedding: ps,
    })
}

/// Number of parallel copies affordable at nesting level `c` given the
/// resources of the largest level `c_max`.
pub fn repetition_copies(n: usize, c: usize, c_max: usize) -> Result<usize> {
    if c > c_max {
        return Err(Error::Input(format!("C = {c} exceeds C_max = {c_max}")));
    }
    let top = resource_count(n, c_max).physical_qubits;
    let own = resource_count(n, c).physical_qubits;
    Ok(top / own)
}

/// Classical-repetition corrected success probability:
/// `1 - (1 - P)^{M_C}` with `M_C = floor(N_phys(C_max)/N_phys(C))`.
pub fn repetition_correct(p_c: f64, c: usize, n: usize, c_max: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_c) {
        return Err(Error::Input(format!("P must be in [0,1], got {p_c}")));
    }
    let m = repetition_copies(n, c, c_max)?;
    Ok(1.0 - (1.0 - p_c).powi(m as i32))
}

/// Search settings for the effective-temperature fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSearch {
    pub lo: f64,
    pub hi: f64,
    pub coarse_points: usize,
    pub tolerance: f64,
}

impl Default for BetaSearch {
    fn default() -> Self {
        BetaSearch {
            lo: 0.0,
            hi: 20.0,
            coarse_points: 200,
            tolerance: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaFit {
    pub beta: f64,
    /// Total variation distance at the fitted beta.
    pub distance: f64,
}

/// Energy levels of a problem with their degeneracies, for fast thermal
/// histograms across many betas.
#[derive(Debug, Clone)]
pub struct LevelSpectrum {
    pub levels: Vec<f64>,
    pub degeneracy: Vec<f64>,
    tolerance: f64,
}

impl LevelSpectrum {
    pub fn of(problem: &IsingProblem, cap: usize) -> Result<LevelSpectrum> {
        if problem.n_spins() > cap {
            return Err(Error::Capacity {
                what: "thermal histogram",
                required: problem.n_spins(),
                cap,
            });
        }
        let tolerance = DEFAULT_ENERGY_TOLERANCE;
        let items: Vec<(f64, f64)> = problem.all_energies().into_iter().map(|e| (e, 1.0)).collect();
        let hist = EnergyHistogram::from_weighted_energies(&items, tolerance)?;
        let total = items.len() as f64;
        Ok(LevelSpectrum {
            levels: hist.levels().to_vec(),
            degeneracy: hist.masses().iter().map(|m| m * total).collect(),
            tolerance,
        })
    }

    /// Thermal energy histogram at inverse temperature `beta`.
    pub fn thermal_histogram(&self, beta: f64) -> EnergyHistogram {
        let e_min = self.levels[0];
        let items: Vec<(f64, f64)> = self
            .levels
            .iter()
            .zip(self.degeneracy.iter())
            .map(|(&e, &g)| (e, g * (-beta * (e - e_min)).exp()))
            .collect();
        EnergyHistogram::from_weighted_energies(&items, self.tolerance).unwrap()
    }
}

/// Fit the inverse temperature minimizing the total variation distance
/// between an empirical histogram and the exact thermal histogram of
/// `logical`. Coarse grid scan, then golden-section refinement.
pub fn fit_effective_beta(
    empirical: &EnergyHistogram,
    logical: &IsingProblem,
    search: BetaSearch,
) -> Result<BetaFit> {
    fit_effective_beta_with_cap(empirical, logical, search, crate::ising::DEFAULT_GIBBS_CAP)
}

pub fn fit_effective_beta_with_cap(
    empirical: &EnergyHistogram,
    logical: &IsingProblem,
    search: BetaSearch,
    cap: usize,
) -> Result<BetaFit> {
    let spectrum = LevelSpectrum::of(logical, cap)?;
    let distance = |beta: f64| empirical.total_variation(&spectrum.thermal_histogram(beta));
    let m = search.coarse_points.max(2);
    let step = (search.hi - search.lo) / (m - 1) as f64;
    let mut best_i = 0;
    let mut best_d = f64::INFINITY;
    for i in 0..m {
        let d = distance(search.lo + step * i as f64);
        if d < best_d {
            best_d = d;
            best_i = i;
        }
    }
    let lo = search.lo + step * best_i.saturating_sub(1) as f64;
    let hi = (search.lo + step * (best_i + 1) as f64).min(search.hi);
    let beta = golden_section_min(distance, lo, hi, search.tolerance);
    Ok(BetaFit {
        beta,
        distance: distance(beta),
    })
}

/// Normalized dot product of two moment vectors.
pub fn gradient_overlap(empirical: &[f64], thermal: &[f64]) -> Result<f64> {
    if empirical.len() != thermal.len() {
        return Err(Error::Dimension {
            expected: thermal.len(),
            got: empirical.len(),
        });
    }
    let na: f64 = empirical.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = thermal.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Degenerate("zero-norm moment vector".into()));
    }
    Ok(empirical.iter().zip(thermal.iter()).map(|(a, b)| a * b).sum::<f64>() / (na * nb))
}

/// Boost of one nesting level with percentile error bars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostEntry {
    pub c: usize,
    pub mu: f64,
    pub low: f64,
    pub high: f64,
}

/// Power-law fit of `mu_C ~ C^eta`, anchored through `mu_1 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub eta: f64,
    pub uncertainty: f64,
    /// Set when fewer than two informative (C > 1) points constrain the fit.
    pub degenerate: bool,
}

/// Result of the data collapse: per-C boosts plus the reference value used.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostFit {
    pub entries: Vec<BoostEntry>,
    pub m0: f64,
    pub power_law: Option<PowerLawFit>,
}

/// Default collapse reference: midpoint between the maximum and minimum of
/// the C = 1 median curve.
pub fn default_reference(c1_points: &[CurvePoint]) -> f64 {
    let max = c1_points.iter().map(|p| p.median).fold(f64::NEG_INFINITY, f64::max);
    let min = c1_points.iter().map(|p| p.median).fold(f64::INFINITY, f64::min);
    0.5 * (max + min)
}

fn collapse_alpha(points: &[CurvePoint], pick: fn(&CurvePoint) -> f64, m0: f64, label: &str) -> Result<f64> {
    let xs: Vec<f64> = points.iter().map(|p| p.alpha.log10()).collect();
    let ys: Vec<f64> = points.iter().map(pick).collect();
    let (spline, _) = smoothing_spline(&xs, &ys)?;
    let roots = spline.solve(m0, 2000);
    match roots.first() {
        Some(&x) => Ok(10f64.powf(x)),
        None => Err(Error::Reference {
            m0,
            curve: label.to_string(),
        }),
    }
}

/// Extract the energy boost `mu_C` for each curve by data collapse.
///
/// Smoothing splines through the median / 25th / 75th points in `log10
/// alpha` are solved for the reference value `m0`; `mu_C` is the ratio of
/// the C = 1 crossing to the level-C crossing, with error bars from the
/// percentile splines. Curves must include C = 1.
pub fn data_collapse(curves: &[(usize, &[CurvePoint])], m0: Option<f64>) -> Result<BoostFit> {
    if curves.len() < 2 && !(curves.len() == 1 && curves[0].0 == 1) {
        return Err(Error::Input("data collapse needs >= 2 curves including C = 1".into()));
    }
    let c1 = curves
        .iter()
        .find(|(c, _)| *c == 1)
        .ok_or_else(|| Error::Input("data collapse requires the C = 1 curve".into()))?;
    let m0 = m0.unwrap_or_else(|| default_reference(c1.1));

    let a1_mid = collapse_alpha(c1.1, |p| p.median, m0, "C=1 median")?;
    let a1_low = collapse_alpha(c1.1, |p| p.p25, m0, "C=1 p25")?;
    let a1_high = collapse_alpha(c1.1, |p| p.p75, m0, "C=1 p75")?;

    let mut entries = Vec::new();
    for &(c, points) in curves {
        if c == 1 {
            entries.push(BoostEntry {
                c: 1,
                mu: 1.0,
                low: 1.0,
                high: 1.0,
            });
            continue;
        }
        let mid = collapse_alpha(points, |p| p.median, m0, &format!("C={c} median"))?;
        let low = collapse_alpha(points, |p| p.p25, m0, &format!("C={c} p25"))?;
        let high = collapse_alpha(points, |p| p.p75, m0, &format!("C={c} p75"))?;
        let mu = a1_mid / mid;
        let mu_a = a1_high / high;
        let mu_b = a1_low / low;
        entries.push(BoostEntry {
            c,
            mu,
            low: mu.min(mu_a).min(mu_b),
            high: mu.max(mu_a).max(mu_b),
        });
    }
    entries.sort_by_key(|e| e.c);
    let power_law = fit_power_law(&entries).ok();
    Ok(BoostFit {
        entries,
        m0,
        power_law,
    })
}

/// Least-squares slope of `log mu` vs `log C` with zero intercept.
pub fn fit_power_law(boosts: &[BoostEntry]) -> Result<PowerLawFit> {
    let mut distinct: Vec<usize> = boosts.iter().map(|b| b.c).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Input("power-law fit needs >= 2 distinct C values".into()));
    }
    if boosts.iter().any(|b| b.mu <= 0.0) {
        return Err(Error::Input("boosts must be positive".into()));
    }
    let pts: Vec<(f64, f64)> = boosts
        .iter()
        .map(|b| ((b.c as f64).ln(), b.mu.ln()))
        .collect();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let eta = sxy / sxx;
    let informative = boosts.iter().filter(|b| b.c > 1).count();
    if informative < 2 {
        return Ok(PowerLawFit {
            eta,
            uncertainty: 0.0,
            degenerate: true,
        });
    }
    let ss_res: f64 = pts.iter().map(|(x, y)| (y - eta * x).powi(2)).sum();
    let variance = ss_res / (informative - 1) as f64 / sxx;
    Ok(PowerLawFit {
        eta,
        uncertainty: variance.sqrt(),
        degenerate: false,
    })
}
