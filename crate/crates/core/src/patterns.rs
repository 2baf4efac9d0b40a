//! Channel patterns, image spaces, probe-domain distributions and resource
//! accounting.
//!
//! Channel indices are 1-based wherever they appear in a public type, so
//! that distribution strings such as `"1,2;2,3;3,1"` read naturally.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Default bound on the number of patterns [`ImageSpace::enumerate`] will produce.
pub const ENUMERATION_CAP: usize = 1_000_000;

/// Largest pattern length for which symbolic cardinalities fit in `u128`.
pub const MAX_PATTERN_LEN: usize = 127;

/// Binary channel pattern: 0 = background, 1 = target.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChannelPattern {
    bits: Vec<u8>,
}

impl ChannelPattern {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return invalid("channel pattern must have at least one channel");
        }
        if bits.iter().any(|&b| b > 1) {
            return invalid("channel pattern entries must be 0 or 1");
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bit at 1-based index `i`.
    pub fn get(&self, i: usize) -> u8 {
        self.bits[i - 1]
    }
}

impl FromStr for ChannelPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => invalid(format!("pattern '{s}' may only contain 0 and 1")),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(bits)
    }
}

impl fmt::Display for ChannelPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Number of positions at which two patterns differ.
pub fn hamming_distance(a: &ChannelPattern, b: &ChannelPattern) -> Result<usize> {
    if a.len() != b.len() {
        return invalid(format!("patterns of length {} and {} cannot be compared", a.len(), b.len()));
    }
    Ok(a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count())
}

/// Number of target channels.
pub fn target_count(a: &ChannelPattern) -> usize {
    a.bits.iter().filter(|&&b| b == 1).count()
}

/// Binomial coefficient, exact in `u128` for `n <= 127`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    // Pascal's rule keeps every intermediate below the result's own row maximum.
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for i in 1..=n {
        for j in (1..=k.min(i)).rev() {
            row[j] += row[j - 1];
        }
    }
    row[k]
}

/// A collection of candidate channel patterns.
#[derive(Debug, Clone, PartialEq)]
pub enum ImageSpace {
    /// Explicit list; use [`ImageSpace::explicit`] to construct.
    Explicit(Vec<ChannelPattern>),
    /// All length-`m` patterns with exactly `u` targets.
    Ucpf { m: usize, u: usize },
    /// All length-`m` patterns whose target count lies in `targets`.
    Bcpf { m: usize, targets: BTreeSet<usize> },
    /// All `2^m` patterns.
    UniformAll { m: usize },
}

impl ImageSpace {
    pub fn explicit(patterns: Vec<ChannelPattern>) -> Result<Self> {
        let Some(first) = patterns.first() else {
            return invalid("explicit image space must contain at least one pattern");
        };
        let m = first.len();
        if patterns.iter().any(|p| p.len() != m) {
            return invalid("explicit image space patterns must share one length");
        }
        let set: BTreeSet<&ChannelPattern> = patterns.iter().collect();
        if set.len() != patterns.len() {
            return invalid("explicit image space contains duplicate patterns");
        }
        Ok(Self::Explicit(patterns))
    }

    pub fn ucpf(m: usize, u: usize) -> Result<Self> {
        check_len(m)?;
        if u > m {
            return invalid(format!("u-CPF needs 0 <= u <= m, got u={u}, m={m}"));
        }
        Ok(Self::Ucpf { m, u })
    }

    pub fn bcpf(m: usize, targets: impl IntoIterator<Item = usize>) -> Result<Self> {
        check_len(m)?;
        let targets: BTreeSet<usize> = targets.into_iter().collect();
        if targets.is_empty() {
            return invalid("bounded CPF target set must be nonempty");
        }
        if let Some(&u) = targets.iter().find(|&&u| u > m) {
            return invalid(format!("bounded CPF target count {u} exceeds m={m}"));
        }
        Ok(Self::Bcpf { m, targets })
    }

    pub fn uniform_all(m: usize) -> Result<Self> {
        check_len(m)?;
        Ok(Self::UniformAll { m })
    }

    pub fn pattern_len(&self) -> usize {
        match self {
            Self::Explicit(p) => p[0].len(),
            Self::Ucpf { m, .. } | Self::Bcpf { m, .. } | Self::UniformAll { m } => *m,
        }
    }

    /// Number of patterns, computed without enumeration.
    pub fn cardinality(&self) -> u128 {
        match self {
            Self::Explicit(p) => p.len() as u128,
            Self::Ucpf { m, u } => binomial(*m, *u),
            Self::Bcpf { m, targets } => targets.iter().map(|&u| binomial(*m, u)).sum(),
            Self::UniformAll { m } => 1u128 << *m,
        }
    }

    /// Lexicographically ordered patterns, refusing spaces above [`ENUMERATION_CAP`].
    pub fn enumerate(&self) -> Result<Vec<ChannelPattern>> {
        self.enumerate_with_cap(ENUMERATION_CAP)
    }

    pub fn enumerate_with_cap(&self, cap: usize) -> Result<Vec<ChannelPattern>> {
        let count = self.cardinality();
        if count > cap as u128 {
            return Err(Error::ResourceLimit(format!(
                "image space has {count} patterns, above the enumeration cap of {cap}"
            )));
        }
        let m = self.pattern_len();
        let mut out = Vec::with_capacity(count as usize);
        match self {
            Self::Explicit(p) => {
                out = p.clone();
                out.sort();
            }
            Self::Ucpf { u, .. } => {
                let allowed: BTreeSet<usize> = [*u].into();
                lex_patterns(m, &allowed, &mut Vec::new(), 0, &mut out);
            }
            Self::Bcpf { targets, .. } => lex_patterns(m, targets, &mut Vec::new(), 0, &mut out),
            Self::UniformAll { .. } => {
                let allowed: BTreeSet<usize> = (0..=m).collect();
                lex_patterns(m, &allowed, &mut Vec::new(), 0, &mut out);
            }
        }
        Ok(out)
    }
}

fn check_len(m: usize) -> Result<()> {
    if m == 0 || m > MAX_PATTERN_LEN {
        return invalid(format!("pattern length must lie in 1..={MAX_PATTERN_LEN}, got {m}"));
    }
    Ok(())
}

fn lex_patterns(m: usize, allowed: &BTreeSet<usize>, prefix: &mut Vec<u8>, ones: usize, out: &mut Vec<ChannelPattern>) {
    let remaining = m - prefix.len();
    if allowed.range(ones..=ones + remaining).next().is_none() {
        return;
    }
    if remaining == 0 {
        out.push(ChannelPattern { bits: prefix.clone() });
        return;
    }
    for b in [0u8, 1] {
        prefix.push(b);
        lex_patterns(m, allowed, prefix, ones + b as usize, out);
        prefix.pop();
    }
}

/// Ordered list of channel-index subsets over which probe sub-states are
/// irradiated. Indices are 1-based and sorted within each domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProbeDomainDistribution {
    m: usize,
    domains: Vec<Vec<usize>>,
}

impl ProbeDomainDistribution {
    pub fn new(m: usize, domains: Vec<Vec<usize>>) -> Result<Self> {
        if m == 0 {
            return invalid("distribution needs m >= 1");
        }
        let mut covered = vec![false; m];
        let mut sorted = Vec::with_capacity(domains.len());
        for d in domains {
            if d.is_empty() {
                return invalid("probe domains must be nonempty");
            }
            let set: BTreeSet<usize> = d.iter().copied().collect();
            if set.len() != d.len() {
                return invalid(format!("probe domain {d:?} repeats a channel"));
            }
            for &i in &set {
                if i == 0 || i > m {
                    return invalid(format!("channel index {i} is outside 1..={m}"));
                }
                covered[i - 1] = true;
            }
            sorted.push(set.into_iter().collect());
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return invalid(format!("channel {} is not covered by any probe domain", i + 1));
        }
        Ok(Self { m, domains: sorted })
    }

    /// Parses `"1,2;2,3;3,1"`.
    pub fn parse(m: usize, s: &str) -> Result<Self> {
        let domains = s
            .split(';')
            .map(|part| {
                part.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::InvalidArgument(format!("bad channel index '{}' in '{s}'", x.trim())))
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(m, domains)
    }

    /// Disjoint single-channel covering, the trivial fixed protocol.
    pub fn singletons(m: usize) -> Result<Self> {
        Self::new(m, (1..=m).map(|i| vec![i]).collect())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn domains(&self) -> &[Vec<usize>] {
        &self.domains
    }

    /// `Σ|s|`, the length of every modified pattern.
    pub fn total_size(&self) -> usize {
        self.domains.iter().map(Vec::len).sum()
    }

    pub fn is_disjoint(&self) -> bool {
        self.total_size() == self.m
    }
}

impl fmt::Display for ProbeDomainDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.domains.iter().map(|d| d.iter().map(usize::to_string).collect::<Vec<_>>().join(",")).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// True iff `1 <= k <= m-1` and `k*m` is even.
pub fn is_valid_k(m: usize, k: usize) -> bool {
    m >= 2 && k >= 1 && k < m && (k * m).is_multiple_of(2)
}

/// k-LNN distribution on a ring: every channel is paired with its `k/2`
/// nearest neighbours on each side and, for odd `k`, with the antipodal channel.
pub fn klnn_distribution(m: usize, k: usize) -> Result<ProbeDomainDistribution> {
    if !is_valid_k(m, k) {
        return invalid(format!("k={k} is not a valid neighbourhood width for m={m}: need 1 <= k <= m-1 and k*m even"));
    }
    let mut pairs = BTreeSet::new();
    for j in 0..m {
        for d in 1..=k / 2 {
            let n = (j + d) % m;
            pairs.insert((j.min(n) + 1, j.max(n) + 1));
        }
        if k % 2 == 1 {
            let n = (j + m / 2) % m;
            pairs.insert((j.min(n) + 1, j.max(n) + 1));
        }
    }
    ProbeDomainDistribution::new(m, pairs.into_iter().map(|(a, b)| vec![a, b]).collect())
}

/// Pattern read through a probe-domain distribution, domain by domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModifiedPattern {
    pattern: ChannelPattern,
    domain_sizes: Vec<usize>,
}

impl ModifiedPattern {
    pub fn pattern(&self) -> &ChannelPattern {
        &self.pattern
    }

    pub fn bits(&self) -> &[u8] {
        self.pattern.bits()
    }

    pub fn domain_sizes(&self) -> &[usize] {
        &self.domain_sizes
    }

    /// The per-domain sub-patterns, in domain order.
    pub fn blocks(&self) -> impl Iterator<Item = &[u8]> {
        let mut off = 0;
        self.domain_sizes.iter().map(move |&n| {
            let b = &self.pattern.bits[off..off + n];
            off += n;
            b
        })
    }
}

/// Concatenates the bits of `a` at each domain's indices, in domain order.
pub fn dynamic_to_fixed(a: &ChannelPattern, s: &ProbeDomainDistribution) -> Result<ModifiedPattern> {
    if a.len() != s.m() {
        return invalid(format!("pattern of length {} used with a distribution over {} channels", a.len(), s.m()));
    }
    let bits = s.domains().iter().flat_map(|d| d.iter().map(|&i| a.get(i))).collect();
    Ok(ModifiedPattern { pattern: ChannelPattern { bits }, domain_sizes: s.domains().iter().map(Vec::len).collect() })
}

/// `M̄ = (M/m) Σ|s|`.
pub fn average_channel_use(s: &ProbeDomainDistribution, m_copies: f64) -> f64 {
    m_copies * s.total_size() as f64 / s.m() as f64
}

/// Copies giving average channel use `m_bar`: `M = m M̄ / Σ|s|`.
pub fn fair_copies(s: &ProbeDomainDistribution, m_bar: f64) -> f64 {
    s.m() as f64 * m_bar / s.total_size() as f64
}

/// Probe copies together with the channel use they imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceBudget {
    pub m_copies: f64,
    pub m_bar: f64,
}

impl ResourceBudget {
    pub fn from_copies(s: &ProbeDomainDistribution, m_copies: f64) -> Result<Self> {
        if !(m_copies.is_finite() && m_copies >= 0.0) {
            return invalid(format!("probe copies must be finite and >= 0, got {m_copies}"));
        }
        Ok(Self { m_copies, m_bar: average_channel_use(s, m_copies) })
    }

    pub fn from_average_use(s: &ProbeDomainDistribution, m_bar: f64) -> Result<Self> {
        if !(m_bar.is_finite() && m_bar >= 0.0) {
            return invalid(format!("average channel use must be finite and >= 0, got {m_bar}"));
        }
        Ok(Self { m_copies: fair_copies(s, m_bar), m_bar })
    }
}
