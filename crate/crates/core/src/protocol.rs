//! End-to-end evaluation of one discrimination scenario: task, probing
//! protocol, channel model, energy and resource budget.

use serde::Serialize;

use crate::bounds::{
    bcpf_bounds, build_error_polynomial, classical_cpf_lower, classical_lower, evaluate_bounds, fixed_uniform_bound,
    klnn_cpf_bound, BoundReport,
};
use crate::channels::{classical_fidelity, unique_set, ChannelModel, FidelitySource, UniqueFidelitySet2};
use crate::error::{invalid, Result};
use crate::gaussian::ProbeEnergy;
use crate::patterns::{is_valid_k, klnn_distribution, ImageSpace};

/// Which image space is discriminated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Exactly one target.
    Cpf,
    /// Exactly `u` targets.
    Ucpf(usize),
    /// Any target count in the set.
    Bcpf(Vec<usize>),
    /// All `2^m` patterns.
    Uniform,
}

impl Task {
    pub fn image_space(&self, m: usize) -> Result<ImageSpace> {
        match self {
            Task::Cpf => ImageSpace::ucpf(m, 1),
            Task::Ucpf(u) => ImageSpace::ucpf(m, *u),
            Task::Bcpf(set) => ImageSpace::bcpf(m, set.iter().copied()),
            Task::Uniform => ImageSpace::uniform_all(m),
        }
    }
}

/// Neighbourhood width of the k-LNN protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighbourhood {
    /// `k = m - 1`: every channel pair is probed.
    Max,
    Width(usize),
}

impl Neighbourhood {
    pub fn resolve(self, m: usize) -> usize {
        match self {
            Neighbourhood::Max => m.saturating_sub(1),
            Neighbourhood::Width(k) => k,
        }
    }
}

/// How the number of probe copies is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    /// `M` copies of the quantum probe.
    Copies(f64),
    /// Average channel use `M̄`; the quantum probe gets `m M̄ / Σ|s|` copies.
    AverageUse(f64),
    /// Photons delivered to each channel, `M̄ N_S`.
    PhotonsPerChannel(f64),
}

impl Resource {
    /// `(M, M̄)` for a protocol with channel use `k` per copy.
    pub fn resolve(self, k: usize, energy: ProbeEnergy) -> Result<(f64, f64)> {
        let k = k as f64;
        let (m, m_bar) = match self {
            Resource::Copies(m) => (m, m * k),
            Resource::AverageUse(m_bar) => (m_bar / k, m_bar),
            Resource::PhotonsPerChannel(p) => {
                if energy.n_s() <= 0.0 {
                    return invalid("a photon budget needs n_s > 0");
                }
                let m_bar = p / energy.n_s();
                (m_bar / k, m_bar)
            }
        };
        if !(m.is_finite() && m >= 0.0) {
            return invalid(format!("resource budget gives an invalid number of copies ({m})"));
        }
        Ok((m, m_bar))
    }
}

/// A fully specified discrimination problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub task: Task,
    pub m: usize,
    pub k: Neighbourhood,
    pub model: ChannelModel,
    pub energy_n_s: f64,
    pub resource: Resource,
    pub source: FidelitySource,
}

/// Bounds for a scenario together with the fidelities that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub k: usize,
    pub fidelities: UniqueFidelitySet2,
    pub classical_fidelity: f64,
    #[serde(flatten)]
    pub bounds: BoundReport,
}

impl Scenario {
    pub fn energy(&self) -> Result<ProbeEnergy> {
        ProbeEnergy::new(self.energy_n_s)
    }

    /// Evaluates with sub-fidelities from `self.source`.
    pub fn evaluate(&self) -> Result<ScenarioReport> {
        let energy = self.energy()?;
        let fids = unique_set(&self.model, energy, self.source)?;
        self.evaluate_with(fids, classical_fidelity(&self.model, energy))
    }

    /// Evaluates with caller-supplied fidelities.
    pub fn evaluate_with(&self, fids: UniqueFidelitySet2, f_cl: f64) -> Result<ScenarioReport> {
        let m = self.m;
        if m < 2 {
            return invalid(format!("need m >= 2 channels, got {m}"));
        }
        let k = self.k.resolve(m);
        if !is_valid_k(m, k) {
            return invalid(format!(
                "k={k} is not a valid neighbourhood width for m={m}: need 1 <= k <= m-1 and k*m even"
            ));
        }
        let (copies, m_bar) = self.resource.resolve(k, self.energy()?)?;
        let space = self.task.image_space(m)?;
        let quantum = match (&self.task, k == m - 1) {
            (Task::Cpf, _) => klnn_cpf_bound(m, k, copies, &fids)?,
            (Task::Ucpf(u), true) => bcpf_bounds(m, &[*u], copies, &fids)?,
            (Task::Bcpf(set), true) => bcpf_bounds(m, set, copies, &fids)?,
            (Task::Uniform, _) if k == 1 => fixed_uniform_bound(m, copies, &fids)?.engine,
            _ => evaluate_bounds(&build_error_polynomial(&space, &klnn_distribution(m, k)?)?, &fids, copies),
        };
        let quantum = BoundReport { m_copies: copies, m_bar, ..quantum };
        let cl = match self.task {
            Task::Cpf => classical_cpf_lower(m, m_bar, f_cl),
            _ => classical_lower(&space, m_bar, f_cl)?,
        };
        Ok(ScenarioReport { k, fidelities: fids, classical_fidelity: f_cl, bounds: quantum.with_classical(cl) })
    }
}
