//! Brute-force reference computations on explicit covariance matrices.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::channels::{closed_form, oracle_subfidelity, ChannelModel, SubFidelityLabel};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{apply_gpi_pattern, cvghz_cm, gaussian_fidelity, tmsv_cm, CovarianceMatrix, ProbeEnergy};
use crate::patterns::{
    dynamic_to_fixed, hamming_distance, klnn_distribution, target_count, ChannelPattern, ImageSpace,
    ProbeDomainDistribution,
};

/// Largest image space accepted by [`brute_total_error`].
pub const MAX_ORACLE_SPACE: usize = 4096;
/// Largest modified-pattern length (modes) accepted by the oracle.
pub const MAX_ORACLE_MODES: usize = 24;

fn secs<S: Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// Result of an oracle run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub value: f64,
    pub pair_count: u64,
    pub max_class_spread: f64,
    #[serde(serialize_with = "secs")]
    pub elapsed: Duration,
}

/// Sums `values` by a fixed balanced binary tree, independent of thread count.
pub fn tree_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            tree_sum(a) + tree_sum(b)
        }
    }
}

/// Probe state for one domain: `mu I` for a single channel, TMSV for a
/// pair, CV-GHZ for larger domains.
pub fn domain_probe(size: usize, energy: ProbeEnergy) -> Result<CovarianceMatrix> {
    match size {
        0 => invalid("empty probe domain"),
        1 => CovarianceMatrix::thermal(&[energy.mu()]),
        2 => Ok(tmsv_cm(energy)),
        n => cvghz_cm(n, energy),
    }
}

/// Global probe for a distribution: the direct sum of its domain probes.
pub fn global_probe(s: &ProbeDomainDistribution, energy: ProbeEnergy) -> Result<CovarianceMatrix> {
    let parts = s.domains().iter().map(|d| domain_probe(d.len(), energy)).collect::<Result<Vec<_>>>()?;
    Ok(CovarianceMatrix::direct_sum_all(&parts))
}

/// Output state of one pattern after the channels act on the modified pattern.
pub fn output_state(
    pattern: &ChannelPattern,
    s: &ProbeDomainDistribution,
    probe: &CovarianceMatrix,
    model: &ChannelModel,
) -> Result<CovarianceMatrix> {
    let modified = dynamic_to_fixed(pattern, s)?;
    let params: Vec<_> = modified.bits().iter().map(|&b| model.channel(b)).collect();
    apply_gpi_pattern(probe, &params)
}

fn check_caps(n_patterns: usize, modes: usize) -> Result<()> {
    if n_patterns > MAX_ORACLE_SPACE {
        return Err(Error::ResourceLimit(format!(
            "oracle space has {n_patterns} patterns, above the cap of {MAX_ORACLE_SPACE}"
        )));
    }
    if modes > MAX_ORACLE_MODES {
        return Err(Error::ResourceLimit(format!(
            "modified patterns have {modes} modes, above the cap of {MAX_ORACLE_MODES}"
        )));
    }
    Ok(())
}

/// `Σ_{i≠i'} F(out_i, out_i')^M` computed from full covariance matrices.
pub fn brute_total_error(
    space: &ImageSpace,
    s: &ProbeDomainDistribution,
    model: &ChannelModel,
    energy: ProbeEnergy,
    m_copies: f64,
) -> Result<OracleReport> {
    let start = Instant::now();
    if space.pattern_len() != s.m() {
        return invalid("image space and distribution disagree on the number of channels");
    }
    if space.cardinality() > MAX_ORACLE_SPACE as u128 {
        return Err(Error::ResourceLimit(format!(
            "oracle space has {} patterns, above the cap of {MAX_ORACLE_SPACE}",
            space.cardinality()
        )));
    }
    let patterns = space.enumerate()?;
    check_caps(patterns.len(), s.total_size())?;
    let probe = global_probe(s, energy)?;
    let outputs = patterns.par_iter().map(|p| output_state(p, s, &probe, model)).collect::<Result<Vec<_>>>()?;
    let n = outputs.len();
    let terms = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            if i == j {
                return Ok(0.0);
            }
            let f = gaussian_fidelity(&outputs[i], &outputs[j])?;
            Ok((m_copies * f.ln()).exp())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(OracleReport {
        value: tree_sum(&terms),
        pair_count: (n * n.saturating_sub(1)) as u64,
        max_class_spread: 0.0,
        elapsed: start.elapsed(),
    })
}

/// Probing scheme checked by [`verify_degeneracy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneracyProtocol {
    /// One `m`-mode CV-GHZ state across all channels.
    Cvghz,
    /// A TMSV pair on every pair of channels.
    KmaxTmsv,
}

/// Fidelity range within one `(u, v, d)` class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyClass {
    pub u: usize,
    pub v: usize,
    pub d: usize,
    pub count: usize,
    pub min: f64,
    pub max: f64,
}

/// Degeneracy check over all ordered pattern pairs of length `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyReport {
    pub report: OracleReport,
    pub classes: Vec<DegeneracyClass>,
    /// Largest `|F(u,v,d) - F(v,u,d)|` between mirrored classes.
    pub mirror_gap: f64,
}

impl DegeneracyReport {
    /// Number of classes with `u <= v`.
    pub fn merged_class_count(&self) -> usize {
        self.classes.iter().filter(|c| c.u <= c.v).count()
    }
}

/// Groups every ordered pair of `UniformAll(m)` by `(u, v, d)` and measures
/// the spread of output fidelities within each class.
pub fn verify_degeneracy(
    m: usize,
    model: &ChannelModel,
    energy: ProbeEnergy,
    protocol: DegeneracyProtocol,
) -> Result<DegeneracyReport> {
    let start = Instant::now();
    let s = match protocol {
        DegeneracyProtocol::Cvghz => {
            if !(2..=5).contains(&m) {
                return Err(Error::ResourceLimit(format!("CV-GHZ degeneracy check supports 2 <= m <= 5, got {m}")));
            }
            ProbeDomainDistribution::new(m, vec![(1..=m).collect()])?
        }
        DegeneracyProtocol::KmaxTmsv => {
            if !(2..=4).contains(&m) {
                return Err(Error::ResourceLimit(format!(
                    "pairwise TMSV degeneracy check supports 2 <= m <= 4, got {m}"
                )));
            }
            klnn_distribution(m, m - 1)?
        }
    };
    let patterns = ImageSpace::uniform_all(m)?.enumerate()?;
    let probe = global_probe(&s, energy)?;
    let outputs = patterns.iter().map(|p| output_state(p, &s, &probe, model)).collect::<Result<Vec<_>>>()?;
    let n = patterns.len();
    let fids = (0..n * n)
        .into_par_iter()
        .map(|idx| gaussian_fidelity(&outputs[idx / n], &outputs[idx % n]))
        .collect::<Result<Vec<f64>>>()?;

    let mut groups: BTreeMap<(usize, usize, usize), (usize, f64, f64)> = BTreeMap::new();
    for (idx, &f) in fids.iter().enumerate() {
        let (a, b) = (&patterns[idx / n], &patterns[idx % n]);
        let key = (target_count(a), target_count(b), hamming_distance(a, b)?);
        let e = groups.entry(key).or_insert((0, f64::INFINITY, f64::NEG_INFINITY));
        e.0 += 1;
        e.1 = e.1.min(f);
        e.2 = e.2.max(f);
    }
    let classes: Vec<DegeneracyClass> =
        groups.iter().map(|(&(u, v, d), &(count, min, max))| DegeneracyClass { u, v, d, count, min, max }).collect();
    let spread = classes.iter().map(|c| c.max - c.min).fold(0.0, f64::max);
    let mirror_gap = classes
        .iter()
        .filter_map(|c| {
            let (_, lo, hi) = groups.get(&(c.v, c.u, c.d))?;
            Some((c.min - lo).abs().max((c.max - hi).abs()))
        })
        .fold(0.0, f64::max);
    Ok(DegeneracyReport {
        report: OracleReport {
            value: spread,
            pair_count: (n * n) as u64,
            max_class_spread: spread,
            elapsed: start.elapsed(),
        },
        classes,
        mirror_gap,
    })
}

/// One closed-form/oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub model: ChannelModel,
    pub n_s: f64,
    pub label: SubFidelityLabel,
    pub oracle: f64,
    pub closed_form: f64,
    pub printed: f64,
}

impl ValidationRow {
    /// `|closed form - oracle|`, infinite when the closed form is not a number.
    pub fn deviation(&self) -> f64 {
        deviation(self.closed_form, self.oracle)
    }

    pub fn printed_deviation(&self) -> f64 {
        deviation(self.printed, self.oracle)
    }
}

fn deviation(x: f64, oracle: f64) -> f64 {
    if x.is_finite() {
        (x - oracle).abs()
    } else {
        f64::INFINITY
    }
}

/// Largest deviations for one label within one channel family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub family: &'static str,
    pub label: SubFidelityLabel,
    pub points: usize,
    pub max_deviation: f64,
    pub max_printed_deviation: f64,
    /// Points where the printed expression is not a number or leaves (0, 1].
    pub printed_invalid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    pub summary: Vec<ValidationSummary>,
}

fn family(model: &ChannelModel) -> &'static str {
    if model.is_loss() {
        "pure_loss"
    } else {
        "additive_noise"
    }
}

/// Compares both closed-form sets with the oracle at every grid point.
pub fn validate_closed_forms(grid: &[(ChannelModel, ProbeEnergy)]) -> Result<ValidationReport> {
    if grid.is_empty() {
        return invalid("validation grid is empty");
    }
    let rows = grid
        .par_iter()
        .map(|(model, energy)| {
            SubFidelityLabel::ALL
                .iter()
                .map(|&label| {
                    Ok(ValidationRow {
                        model: *model,
                        n_s: energy.n_s(),
                        label,
                        oracle: oracle_subfidelity(label, model, *energy)?,
                        closed_form: closed_form(label, model, energy.n_s(), false),
                        printed: closed_form(label, model, energy.n_s(), true),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();

    let mut summary: BTreeMap<(&'static str, SubFidelityLabel), ValidationSummary> = BTreeMap::new();
    for r in &rows {
        let fam = family(&r.model);
        let e = summary.entry((fam, r.label)).or_insert(ValidationSummary {
            family: fam,
            label: r.label,
            points: 0,
            max_deviation: 0.0,
            max_printed_deviation: 0.0,
            printed_invalid: 0,
        });
        e.points += 1;
        e.max_deviation = e.max_deviation.max(r.deviation());
        e.max_printed_deviation = e.max_printed_deviation.max(r.printed_deviation());
        if !(r.printed.is_finite() && r.printed > 0.0 && r.printed <= crate::channels::CLOSED_FORM_CEILING) {
            e.printed_invalid += 1;
        }
    }
    Ok(ValidationReport { rows, summary: summary.into_values().collect() })
}

/// The loss grid used for acceptance: `eta_b ∈ {0.5, 0.9, 1}`,
/// `eta_t ∈ {0.1, ..., 0.9}`, `n_s ∈ {0.1, 1, 10}`.
pub fn loss_validation_grid() -> Vec<(ChannelModel, ProbeEnergy)> {
    let mut grid = Vec::new();
    for eta_b in [0.5, 0.9, 1.0] {
        for j in 1..=9 {
            for n_s in [0.1, 1.0, 10.0] {
                let model = ChannelModel::pure_loss(eta_b, j as f64 / 10.0).expect("grid values are valid");
                grid.push((model, ProbeEnergy::new(n_s).expect("grid values are valid")));
            }
        }
    }
    grid
}

/// Additive-noise grid: `nu_b ∈ {0, 0.02, 0.5}`, `nu_t ∈ {0.1, 0.2, 1, 3}`, `n_s ∈ {0.1, 1, 10}`.
pub fn additive_validation_grid() -> Vec<(ChannelModel, ProbeEnergy)> {
    let mut grid = Vec::new();
    for nu_b in [0.0, 0.02, 0.5] {
        for nu_t in [0.1, 0.2, 1.0, 3.0] {
            for n_s in [0.1, 1.0, 10.0] {
                let model = ChannelModel::additive_noise(nu_b, nu_t).expect("grid values are valid");
                grid.push((model, ProbeEnergy::new(n_s).expect("grid values are valid")));
            }
        }
    }
    grid
}
