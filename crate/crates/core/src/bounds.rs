//! Error-probability bounds built from the four two-mode sub-fidelities.
//!
//! The total error quantity `D(M)` sums `F(i, i')^M` over ordered unequal
//! pattern pairs. With uniform priors over a space of size `|U|` the bounds
//! are `D(2M) / (2|U|^2) <= p_err <= D(M) / |U|`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{SubFidelityLabel, UniqueFidelitySet2};
use crate::error::{invalid, Error, Result};
use crate::patterns::{
    binomial, dynamic_to_fixed, hamming_distance, is_valid_k, klnn_distribution, ImageSpace, ProbeDomainDistribution,
};

/// Exponents per unit `M` of F01, F11, F02, F12, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct FidelityMonomial {
    pub exponents: [u32; 4],
}

impl FidelityMonomial {
    pub fn new(exponents: [u32; 4]) -> Self {
        Self { exponents }
    }

    pub fn is_unit(&self) -> bool {
        self.exponents == [0; 4]
    }

    /// `prod F^{e M}`, computed as `exp(M Σ e ln F)`.
    pub fn evaluate(&self, fids: &UniqueFidelitySet2, m_copies: f64) -> f64 {
        let f = fids.as_array();
        let log: f64 =
            self.exponents.iter().zip(f).filter(|&(&e, x)| e != 0 && x != 1.0).map(|(&e, x)| e as f64 * x.ln()).sum();
        if log == 0.0 {
            1.0
        } else {
            (m_copies * log).exp()
        }
    }
}

/// Symbolic total error quantity: monomial → number of ordered pattern pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorPolynomial {
    terms: BTreeMap<FidelityMonomial, u128>,
    space_size: u128,
    /// Average channel use per probe copy, `Σ|s| / m`.
    channel_use: f64,
}

impl ErrorPolynomial {
    pub fn new(terms: BTreeMap<FidelityMonomial, u128>, space_size: u128, channel_use: f64) -> Result<Self> {
        if terms.keys().any(FidelityMonomial::is_unit) {
            return invalid("the unit monomial cannot appear in an error polynomial");
        }
        if terms.values().any(|&c| c == 0) {
            return invalid("error polynomial multiplicities must be positive");
        }
        let total: u128 = terms.values().sum();
        if total > space_size * space_size.saturating_sub(1) {
            return invalid(format!("{total} pairs exceed |U|(|U|-1) for |U| = {space_size}"));
        }
        Ok(Self { terms, space_size, channel_use })
    }

    pub fn terms(&self) -> &BTreeMap<FidelityMonomial, u128> {
        &self.terms
    }

    pub fn space_size(&self) -> u128 {
        self.space_size
    }

    pub fn channel_use(&self) -> f64 {
        self.channel_use
    }

    /// Number of ordered pairs represented, i.e. `D` at unit fidelities.
    pub fn total_multiplicity(&self) -> u128 {
        self.terms.values().sum()
    }

    /// `D(M)`.
    pub fn evaluate(&self, fids: &UniqueFidelitySet2, m_copies: f64) -> f64 {
        self.terms.iter().map(|(mono, &c)| c as f64 * mono.evaluate(fids, m_copies)).sum()
    }

    /// Lines `e01 e11 e02 e12 multiplicity`, sorted, after a `# space_size` header.
    pub fn to_text(&self) -> String {
        let mut out = format!("# space_size {}\n# channel_use {}\n", self.space_size, self.channel_use);
        for (mono, c) in &self.terms {
            let [a, b, x, y] = mono.exponents;
            let _ = writeln!(out, "{a} {b} {x} {y} {c}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut space_size = None;
        let mut channel_use = 1.0;
        let mut terms = BTreeMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                match (it.next(), it.next()) {
                    (Some("space_size"), Some(v)) => {
                        space_size = Some(v.parse::<u128>().map_err(|_| bad_line(line))?);
                    }
                    (Some("channel_use"), Some(v)) => channel_use = v.parse::<f64>().map_err(|_| bad_line(line))?,
                    _ => {}
                }
                continue;
            }
            let nums: Vec<u128> = line
                .split_whitespace()
                .map(|x| x.parse::<u128>().map_err(|_| bad_line(line)))
                .collect::<Result<_>>()?;
            let [a, b, x, y, c] = nums[..] else {
                return Err(bad_line(line));
            };
            let exps = [a, b, x, y]
                .iter()
                .map(|&e| u32::try_from(e).map_err(|_| bad_line(line)))
                .collect::<Result<Vec<u32>>>()?;
            let mono = FidelityMonomial::new([exps[0], exps[1], exps[2], exps[3]]);
            *terms.entry(mono).or_insert(0) += c;
        }
        let space_size = space_size.ok_or_else(|| Error::InvalidArgument("missing '# space_size' header".into()))?;
        Self::new(terms, space_size, channel_use)
    }
}

fn bad_line(line: &str) -> Error {
    Error::InvalidArgument(format!("malformed polynomial line '{line}'"))
}

/// Builds `D` for a space probed with two-mode domains.
pub fn build_error_polynomial(space: &ImageSpace, s: &ProbeDomainDistribution) -> Result<ErrorPolynomial> {
    if let Some(d) = s.domains().iter().find(|d| d.len() != 2) {
        return Err(Error::UnsupportedDomain(format!(
            "domain {d:?} has {} channels; only two-mode domains have a symbolic form",
            d.len()
        )));
    }
    if space.pattern_len() != s.m() {
        return invalid(format!(
            "image space has pattern length {} but the distribution covers {} channels",
            space.pattern_len(),
            s.m()
        ));
    }
    let patterns = space.enumerate()?;
    let modified =
        patterns.iter().map(|p| dynamic_to_fixed(p, s).map(|mp| mp.bits().to_vec())).collect::<Result<Vec<_>>>()?;

    let terms = (0..modified.len())
        .into_par_iter()
        .map(|i| {
            let mut local: BTreeMap<FidelityMonomial, u128> = BTreeMap::new();
            for (j, other) in modified.iter().enumerate() {
                if i == j {
                    continue;
                }
                let mut e = [0u32; 4];
                for (a, b) in modified[i].chunks(2).zip(other.chunks(2)) {
                    if let Some(l) = SubFidelityLabel::classify([a[0], a[1]], [b[0], b[1]]) {
                        e[l.index()] += 1;
                    }
                }
                *local.entry(FidelityMonomial::new(e)).or_insert(0) += 1;
            }
            local
        })
        .reduce(BTreeMap::new, |mut acc, part| {
            for (k, v) in part {
                *acc.entry(k).or_insert(0) += v;
            }
            acc
        });
    let channel_use = s.total_size() as f64 / s.m() as f64;
    ErrorPolynomial::new(terms, patterns.len() as u128, channel_use)
}

/// Lower and upper error-probability bounds with the resources behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub lower: f64,
    pub upper_raw: f64,
    pub upper: f64,
    pub classical_lower: Option<f64>,
    pub delta_adv: Option<f64>,
    pub m_copies: f64,
    pub m_bar: f64,
}

impl BoundReport {
    /// Bounds from `D(2M)` and `D(M)` with `|U|` uniform priors.
    pub fn from_totals(d_2m: f64, d_m: f64, space_size: f64, m_copies: f64, m_bar: f64) -> Self {
        // `+ 0.0` folds a signed zero from an empty sum into `0.0`.
        let upper_raw = d_m / space_size + 0.0;
        Self {
            lower: (d_2m / (2.0 * space_size * space_size)).max(0.0),
            upper_raw,
            upper: upper_raw.min(1.0),
            classical_lower: None,
            delta_adv: None,
            m_copies,
            m_bar,
        }
    }

    /// Attaches a classical lower bound and the resulting log-ratio.
    pub fn with_classical(mut self, classical_lower: f64) -> Self {
        self.classical_lower = Some(classical_lower + 0.0);
        self.delta_adv = advantage(classical_lower, self.upper).ok();
        self
    }
}

/// Evaluates the bounds of a symbolic polynomial at `M` copies.
pub fn evaluate_bounds(poly: &ErrorPolynomial, fids: &UniqueFidelitySet2, m_copies: f64) -> BoundReport {
    BoundReport::from_totals(
        poly.evaluate(fids, 2.0 * m_copies),
        poly.evaluate(fids, m_copies),
        poly.space_size() as f64,
        m_copies,
        m_copies * poly.channel_use(),
    )
}

fn pow(f: f64, e: f64) -> f64 {
    if e == 0.0 || f == 1.0 {
        1.0
    } else {
        (e * f.ln()).exp()
    }
}

/// `D(M)` of the k-LNN protocol over single-target patterns.
pub fn klnn_cpf_total(m: usize, k: usize, m_copies: f64, fids: &UniqueFidelitySet2) -> Result<f64> {
    if !is_valid_k(m, k) {
        return invalid(format!("k={k} is not a valid neighbourhood width for m={m}: need 1 <= k <= m-1 and k*m even"));
    }
    let (m_f, k_f) = (m as f64, k as f64);
    let pairs = m_f * (m_f - 1.0);
    let near = k_f * m_f;
    let inner = 2.0 * (k_f - 1.0) * fids.f01.ln() + fids.f11.ln();
    let near_term = near * (m_copies * inner).exp();
    let far_term = if pairs - near > 0.0 { (pairs - near) * pow(fids.f01, 2.0 * k_f * m_copies) } else { 0.0 };
    Ok(near_term + far_term)
}

/// Bounds for single-target patterns under the k-LNN protocol.
pub fn klnn_cpf_bound(m: usize, k: usize, m_copies: f64, fids: &UniqueFidelitySet2) -> Result<BoundReport> {
    let d_m = klnn_cpf_total(m, k, m_copies, fids)?;
    let d_2m = klnn_cpf_total(m, k, 2.0 * m_copies, fids)?;
    Ok(BoundReport::from_totals(d_2m, d_m, m as f64, m_copies, k as f64 * m_copies))
}

/// Single-target bounds for disjoint pairs: `D = m F11^M + (2C(m,2) - m) F01^{2M}`.
pub fn cpf_disjoint_bound(m: usize, m_copies: f64, fids: &UniqueFidelitySet2) -> Result<BoundReport> {
    if m < 2 || !m.is_multiple_of(2) {
        return invalid(format!("disjoint pairing needs an even m >= 2, got {m}"));
    }
    let mf = m as f64;
    let d = |x: f64| mf * pow(fids.f11, x) + (mf * (mf - 1.0) - mf) * pow(fids.f01, 2.0 * x);
    Ok(BoundReport::from_totals(d(2.0 * m_copies), d(m_copies), mf, m_copies, m_copies))
}

/// Single-target bounds with every channel pair probed:
/// `(m-1)/(2m) Q^{2M} <= p_err <= (m-1) Q^M`, `Q = F01^{2(m-2)} F11`.
pub fn cpf_kmax_bound(m: usize, m_copies: f64, fids: &UniqueFidelitySet2) -> Result<BoundReport> {
    if m < 2 {
        return invalid(format!("need m >= 2, got {m}"));
    }
    let mf = m as f64;
    let log_q = 2.0 * (mf - 2.0) * fids.f01.ln() + fids.f11.ln();
    let upper_raw = (mf - 1.0) * (m_copies * log_q).exp();
    let lower = (mf - 1.0) / (2.0 * mf) * (2.0 * m_copies * log_q).exp();
    Ok(BoundReport {
        lower,
        upper_raw,
        upper: upper_raw.min(1.0),
        classical_lower: None,
        delta_adv: None,
        m_copies,
        m_bar: (mf - 1.0) * m_copies,
    })
}

fn check_triple(m: usize, u: usize, v: usize, d: usize) -> Result<(usize, usize)> {
    let (u, v) = if u <= v { (u, v) } else { (v, u) };
    if v > m {
        return invalid(format!("target counts must not exceed m={m}, got u={u}, v={v}"));
    }
    let d_min = v - u;
    let d_max = (u + v).min(2 * m - (u + v));
    if d < d_min || d > d_max || !(d - d_min).is_multiple_of(2) {
        return invalid(format!(
            "Hamming distance {d} is not attainable for u={u}, v={v}, m={m}: need {d_min} <= d <= {d_max} with d - {d_min} even"
        ));
    }
    Ok((u, v))
}

/// Sub-fidelity counts `(f01, f11, f02, f12)` between two patterns with
/// `u` and `v` targets at Hamming distance `d`, every channel pair probed.
pub fn counting_exponents(m: usize, u: usize, v: usize, d: usize) -> Result<[u32; 4]> {
    let (u, v) = check_triple(m, u, v, d)?;
    let (m, u, v, d) = (m as i64, u as i64, v as i64, d as i64);
    let d_min = v - u;
    let e = [
        d * (2 * m - u - v - d) / 2,
        (d * d - d_min * d_min) / 4,
        (d * (d - 2) + d_min * d_min) / 4,
        d * (u + v - d) / 2,
    ];
    Ok(e.map(|x| x as u32))
}

/// Exponents as printed for `u != v`. They reproduce the pair counts only
/// when `u = v`; the report carries them for comparison.
pub fn printed_counting_exponents(m: usize, u: usize, v: usize, d: usize) -> Result<[f64; 4]> {
    let (u, v) = check_triple(m, u, v, d)?;
    let (m, v, d) = (m as f64, v as f64, d as f64);
    let d_min = v - u as f64;
    Ok([
        (2.0 * d * (m - v) - d * d + d_min) / 2.0,
        (d * d - d_min * d_min) / 4.0,
        (d * (d - 2.0) + d_min * d_min) / 4.0,
        (d * (2.0 * v - (d - d_min)) - 2.0 * d_min * d_min) / 2.0,
    ])
}

/// Exponents of the correction-factor form
/// `F[u:u|d] · [F01 F02^{δ/2} F11^{-δ/2} F12^{d-2δ}]^{δ/2}`, `δ = v - u`.
pub fn correction_form_exponents(m: usize, u: usize, v: usize, d: usize) -> Result<[f64; 4]> {
    let (u, v) = check_triple(m, u, v, d)?;
    let (m, u, d) = (m as f64, u as f64, d as f64);
    let delta = v as f64 - u;
    let h = delta / 2.0;
    Ok([
        d * (2.0 * (m - u) - d) / 2.0 + h,
        d * d / 4.0 - h * h,
        d * (d - 2.0) / 4.0 + h * h,
        d * (2.0 * u - d) / 2.0 + h * (d - 2.0 * delta),
    ])
}

/// A `(u, v, d)` triple where two exponent sets disagree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentMismatch {
    pub m: usize,
    pub u: usize,
    pub v: usize,
    pub d: usize,
    pub counted: [u32; 4],
    pub other: [f64; 4],
}

/// Every valid `(u <= v, d)` triple for pattern length `m`.
pub fn valid_triples(m: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for u in 0..=m {
        for v in u..=m {
            let d_min = v - u;
            let d_max = (u + v).min(2 * m - (u + v));
            out.extend((d_min..=d_max).step_by(2).map(|d| (u, v, d)));
        }
    }
    out
}

/// Compares [`counting_exponents`] with another exponent formula over all triples.
pub fn exponent_mismatches(
    m: usize,
    other: fn(usize, usize, usize, usize) -> Result<[f64; 4]>,
) -> Vec<ExponentMismatch> {
    valid_triples(m)
        .into_iter()
        .filter_map(|(u, v, d)| {
            let counted = counting_exponents(m, u, v, d).ok()?;
            let alt = other(m, u, v, d).ok()?;
            let differs = counted.iter().zip(alt).any(|(&c, a)| (c as f64 - a).abs() > 1e-12);
            differs.then_some(ExponentMismatch { m, u, v, d, counted, other: alt })
        })
        .collect()
}

/// Output fidelity `F[u:v|d]^M` for the all-pairs protocol.
pub fn unique_fidelity_kmax(
    m: usize,
    u: usize,
    v: usize,
    d: usize,
    fids: &UniqueFidelitySet2,
    m_copies: f64,
) -> Result<f64> {
    let e = counting_exponents(m, u, v, d)?;
    Ok(FidelityMonomial::new(e).evaluate(fids, m_copies))
}

fn binom_f(n: usize, k: usize) -> f64 {
    binomial(n, k) as f64
}

/// `D_{u:u}(M)` for `u`-target patterns with every channel pair probed.
pub fn ucpf_total_error(m: usize, u: usize, m_copies: f64, fids: &UniqueFidelitySet2) -> Result<f64> {
    if u > m {
        return invalid(format!("u-CPF needs 0 <= u <= m, got u={u}, m={m}"));
    }
    let mut total = 0.0;
    for t in (u + 1)..=(2 * u).min(m) {
        let coef = binom_f(m, t) * binom_f(t, u) * binom_f(u, 2 * u - t);
        total += coef * unique_fidelity_kmax(m, u, u, 2 * (t - u), fids, m_copies)?;
    }
    Ok(total)
}

/// One-directional cross term `D~_{u:v}(M)` between `u`- and `v`-target patterns, `u < v`.
pub fn ucpf_cross_error(m: usize, u: usize, v: usize, m_copies: f64, fids: &UniqueFidelitySet2) -> Result<f64> {
    let (u, v) = if u <= v { (u, v) } else { (v, u) };
    if u == v || v > m {
        return invalid(format!("cross term needs u < v <= m, got u={u}, v={v}, m={m}"));
    }
    let mut total = 0.0;
    for t in v..=(u + v).min(m) {
        let coef = binom_f(m, t) * binom_f(t, v) * binom_f(v, u + v - t);
        total += coef * unique_fidelity_kmax(m, u, v, 2 * t - (u + v), fids, m_copies)?;
    }
    Ok(total)
}

/// Total `D(M)` over a bounded-target space, every channel pair probed.
pub fn bcpf_total_error(m: usize, targets: &[usize], m_copies: f64, fids: &UniqueFidelitySet2) -> Result<f64> {
    let mut set = targets.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.is_empty() {
        return invalid("bounded CPF target set must be nonempty");
    }
    if let Some(&u) = set.iter().find(|&&u| u > m) {
        return invalid(format!("bounded CPF target count {u} exceeds m={m}"));
    }
    let mut total = 0.0;
    for (i, &u) in set.iter().enumerate() {
        total += ucpf_total_error(m, u, m_copies, fids)?;
        for &v in &set[i + 1..] {
            total += 2.0 * ucpf_cross_error(m, u, v, m_copies, fids)?;
        }
    }
    Ok(total)
}

/// Bounds over a bounded-target space with `Σ = Σ_u C(m,u)` uniform priors.
pub fn bcpf_bounds(m: usize, targets: &[usize], m_copies: f64, fids: &UniqueFidelitySet2) -> Result<BoundReport> {
    if m < 2 {
        return invalid(format!("need m >= 2, got {m}"));
    }
    let d_m = bcpf_total_error(m, targets, m_copies, fids)?;
    let d_2m = bcpf_total_error(m, targets, 2.0 * m_copies, fids)?;
    let mut set = targets.to_vec();
    set.sort_unstable();
    set.dedup();
    let sigma: f64 = set.iter().map(|&u| binom_f(m, u)).sum();
    Ok(BoundReport::from_totals(d_2m, d_m, sigma, m_copies, (m - 1) as f64 * m_copies))
}

/// Classical lower bound for single-target patterns: `(m-1)/(2m) f_cl^{4M}`.
pub fn classical_cpf_lower(m: usize, m_copies: f64, f_cl: f64) -> f64 {
    let mf = m as f64;
    (mf - 1.0) / (2.0 * mf) * pow(f_cl, 4.0 * m_copies)
}

/// Ordered unequal pattern pairs counted by Hamming distance: `(d, count)`.
pub fn hamming_pair_counts(space: &ImageSpace) -> Result<Vec<(usize, f64)>> {
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    match space {
        ImageSpace::Explicit(_) => {
            let pats = space.enumerate()?;
            for a in &pats {
                for b in &pats {
                    let d = hamming_distance(a, b)?;
                    if d > 0 {
                        *counts.entry(d).or_insert(0.0) += 1.0;
                    }
                }
            }
        }
        ImageSpace::UniformAll { m } => {
            for d in 1..=*m {
                counts.insert(d, 2f64.powi(*m as i32) * binom_f(*m, d));
            }
        }
        ImageSpace::Ucpf { m, u } => add_cross_counts(&mut counts, *m, *u, *u),
        ImageSpace::Bcpf { m, targets } => {
            for &u in targets {
                for &v in targets {
                    add_cross_counts(&mut counts, *m, u, v);
                }
            }
        }
    }
    Ok(counts.into_iter().collect())
}

// Ordered pairs (i, i') with t(i) = u, t(i') = v at each distance d > 0:
// i' drops `a` of i's targets and adds `b` new ones, b - a = v - u.
fn add_cross_counts(counts: &mut BTreeMap<usize, f64>, m: usize, u: usize, v: usize) {
    for a in 0..=u {
        let Some(b) = (a + v).checked_sub(u) else { continue };
        if b > m - u || a + b == 0 {
            continue;
        }
        *counts.entry(a + b).or_insert(0.0) += binom_f(m, u) * binom_f(u, a) * binom_f(m - u, b);
    }
}

/// Lower bound for single-mode classical probing with per-channel fidelity
/// `f_cl`: pairs at distance `d` contribute `f_cl^{d M̄}` to `D(M̄)`.
pub fn classical_lower(space: &ImageSpace, m_bar: f64, f_cl: f64) -> Result<f64> {
    let n = space.cardinality() as f64;
    let d2: f64 = hamming_pair_counts(space)?.into_iter().map(|(d, c)| c * pow(f_cl, 2.0 * d as f64 * m_bar)).sum();
    Ok(d2 / (2.0 * n * n))
}

/// `log10(p_cl_lb / p_q_ub)`; positive values certify an advantage.
pub fn advantage(p_cl_lb: f64, p_q_ub: f64) -> Result<f64> {
    if !(p_cl_lb > 0.0 && p_q_ub > 0.0) {
        return invalid(format!("advantage needs positive bounds, got {p_cl_lb} and {p_q_ub}"));
    }
    Ok((p_cl_lb / p_q_ub).log10())
}

/// Smallest average channel use `M̄` at which the all-pairs single-target
/// upper bound falls below the classical lower bound.
pub fn copies_threshold(m: usize, f_cl: f64, fids: &UniqueFidelitySet2) -> Result<f64> {
    if m < 3 {
        return invalid(format!("threshold needs m >= 3, got {m}"));
    }
    let mf = m as f64;
    let log_q = 2.0 * (mf - 2.0) * fids.f01.log10() + fids.f11.log10();
    let denom = 4.0 * f_cl.log10() - log_q / (mf - 1.0);
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::NoThreshold(format!(
            "denominator 4 log10(F_cl) - log10(F01^(2(m-2)) F11)/(m-1) = {denom} is not positive"
        )));
    }
    Ok((2.0 * mf).log10() / denom)
}

/// Uniform-pattern bounds under disjoint pairing, in both normalisations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformBoundReport {
    /// `[1 + F01^M + F12^M + (F11^M + F02^M)/2]^{m/2} - 1`.
    pub d_printed: f64,
    /// Ordered-pair total; equals `2^m · d_printed`.
    pub d_engine: f64,
    /// Printed prefactors `2^{-(2m+1)}` and `2^{-m}` applied to `d_printed`.
    pub printed: BoundReport,
    /// Ordered-pair total with `|U| = 2^m` priors.
    pub engine: BoundReport,
}

/// Uniform patterns probed by disjoint TMSV pairs, `m` even.
pub fn fixed_uniform_bound(m: usize, m_copies: f64, fids: &UniqueFidelitySet2) -> Result<UniformBoundReport> {
    if m < 2 || !m.is_multiple_of(2) {
        return invalid(format!("uniform disjoint pairing needs an even m >= 2, got {m}"));
    }
    let half = (m / 2) as i32;
    let d = |x: f64| {
        let base = 1.0 + pow(fids.f01, x) + pow(fids.f12, x) + (pow(fids.f11, x) + pow(fids.f02, x)) / 2.0;
        base.powi(half) - 1.0
    };
    let size = 2f64.powi(m as i32);
    let (p_m, p_2m) = (d(m_copies), d(2.0 * m_copies));
    let printed_upper = p_m / size;
    let printed = BoundReport {
        lower: p_2m / (2.0 * size * size),
        upper_raw: printed_upper,
        upper: printed_upper.min(1.0),
        classical_lower: None,
        delta_adv: None,
        m_copies,
        m_bar: m_copies,
    };
    let engine = BoundReport::from_totals(size * p_2m, size * p_m, size, m_copies, m_copies);
    Ok(UniformBoundReport { d_printed: p_m, d_engine: size * p_m, printed, engine })
}

/// Single-target k-LNN polynomial built symbolically, for cross-checks.
pub fn klnn_cpf_polynomial(m: usize, k: usize) -> Result<ErrorPolynomial> {
    build_error_polynomial(&ImageSpace::ucpf(m, 1)?, &klnn_distribution(m, k)?)
}
