//! Two-mode sub-fidelities for pure-loss and additive-noise channel pairs,
//! and the matching classical benchmark fidelities.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::gaussian::{apply_gpi_pattern, gaussian_fidelity, tmsv_cm, GpiChannelParams, ProbeEnergy};

/// Largest value a closed form may return before it is rejected.
pub const CLOSED_FORM_CEILING: f64 = 1.0 + 1e-9;

/// Background/target channel pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ChannelModel {
    PureLoss { eta_b: f64, eta_t: f64 },
    AdditiveNoise { nu_b: f64, nu_t: f64 },
}

impl ChannelModel {
    pub fn pure_loss(eta_b: f64, eta_t: f64) -> Result<Self> {
        for (name, eta) in [("eta_b", eta_b), ("eta_t", eta_t)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return invalid(format!("{name} must lie in (0, 1], got {eta}"));
            }
        }
        Ok(Self::PureLoss { eta_b, eta_t })
    }

    pub fn additive_noise(nu_b: f64, nu_t: f64) -> Result<Self> {
        for (name, nu) in [("nu_b", nu_b), ("nu_t", nu_t)] {
            if !(nu.is_finite() && nu >= 0.0) {
                return invalid(format!("{name} must be finite and >= 0, got {nu}"));
            }
        }
        Ok(Self::AdditiveNoise { nu_b, nu_t })
    }

    /// Channel applied for pattern bit 0.
    pub fn background(&self) -> GpiChannelParams {
        self.channel(0)
    }

    /// Channel applied for pattern bit 1.
    pub fn target(&self) -> GpiChannelParams {
        self.channel(1)
    }

    /// GPI parameters for a pattern bit.
    pub fn channel(&self, bit: u8) -> GpiChannelParams {
        let r = match (*self, bit) {
            (Self::PureLoss { eta_b, .. }, 0) => GpiChannelParams::pure_loss(eta_b),
            (Self::PureLoss { eta_t, .. }, _) => GpiChannelParams::pure_loss(eta_t),
            (Self::AdditiveNoise { nu_b, .. }, 0) => GpiChannelParams::additive(nu_b),
            (Self::AdditiveNoise { nu_t, .. }, _) => GpiChannelParams::additive(nu_t),
        };
        r.expect("model parameters are validated on construction")
    }

    /// The same model with background and target exchanged.
    pub fn swapped(&self) -> Self {
        match *self {
            Self::PureLoss { eta_b, eta_t } => Self::PureLoss { eta_b: eta_t, eta_t: eta_b },
            Self::AdditiveNoise { nu_b, nu_t } => Self::AdditiveNoise { nu_b: nu_t, nu_t: nu_b },
        }
    }

    pub fn is_loss(&self) -> bool {
        matches!(self, Self::PureLoss { .. })
    }
}

/// One of the four unique two-mode sub-fidelities `F_{u:v}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SubFidelityLabel {
    #[serde(rename = "01")]
    F01,
    #[serde(rename = "11")]
    F11,
    #[serde(rename = "02")]
    F02,
    #[serde(rename = "12")]
    F12,
}

impl SubFidelityLabel {
    pub const ALL: [Self; 4] = [Self::F01, Self::F11, Self::F02, Self::F12];

    /// Position in exponent vectors: 01, 11, 02, 12.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::F01 => "01",
            Self::F11 => "11",
            Self::F02 => "02",
            Self::F12 => "12",
        }
    }

    /// The two sub-patterns whose output fidelity defines this label.
    pub fn sub_patterns(self) -> ([u8; 2], [u8; 2]) {
        match self {
            Self::F01 => ([0, 0], [0, 1]),
            Self::F11 => ([0, 1], [1, 0]),
            Self::F02 => ([0, 0], [1, 1]),
            Self::F12 => ([0, 1], [1, 1]),
        }
    }

    /// Label of an unequal pair of two-channel sub-patterns; `None` when equal.
    pub fn classify(a: [u8; 2], b: [u8; 2]) -> Option<Self> {
        if a == b {
            return None;
        }
        let (ta, tb) = (a[0] + a[1], b[0] + b[1]);
        Some(match (ta.min(tb), ta.max(tb)) {
            (0, 1) => Self::F01,
            (1, 1) => Self::F11,
            (0, 2) => Self::F02,
            _ => Self::F12,
        })
    }
}

impl fmt::Display for SubFidelityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubFidelityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim_start_matches(['F', 'f']) {
            "01" => Ok(Self::F01),
            "11" => Ok(Self::F11),
            "02" => Ok(Self::F02),
            "12" => Ok(Self::F12),
            _ => invalid(format!("unknown sub-fidelity label '{s}'")),
        }
    }
}

/// How a sub-fidelity is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FidelitySource {
    /// Analytic expressions that reproduce the Gaussian oracle.
    ClosedForm,
    /// The expressions exactly as published, including their known defects.
    Printed,
    /// Direct Gaussian fidelity of the two output states.
    Oracle,
}

impl FromStr for FidelitySource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed-form" | "closed_form" => Ok(Self::ClosedForm),
            "printed" => Ok(Self::Printed),
            "oracle" => Ok(Self::Oracle),
            _ => invalid(format!("unknown fidelity source '{s}' (expected closed-form, printed or oracle)")),
        }
    }
}

/// The four two-mode sub-fidelities for one model and probe energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniqueFidelitySet2 {
    pub f01: f64,
    pub f11: f64,
    pub f02: f64,
    pub f12: f64,
}

impl UniqueFidelitySet2 {
    pub fn new(f01: f64, f11: f64, f02: f64, f12: f64) -> Result<Self> {
        let s = Self { f01, f11, f02, f12 };
        for l in SubFidelityLabel::ALL {
            let f = s.get(l);
            if !(f > 0.0 && f <= 1.0 + 1e-12) {
                return invalid(format!("F{l} = {f} is outside (0, 1]"));
            }
        }
        Ok(s)
    }

    pub fn ones() -> Self {
        Self { f01: 1.0, f11: 1.0, f02: 1.0, f12: 1.0 }
    }

    pub fn get(&self, label: SubFidelityLabel) -> f64 {
        self.as_array()[label.index()]
    }

    /// Values ordered 01, 11, 02, 12.
    pub fn as_array(&self) -> [f64; 4] {
        [self.f01, self.f11, self.f02, self.f12]
    }
}

/// Evaluates one sub-fidelity.
pub fn subfidelity(
    label: SubFidelityLabel,
    model: &ChannelModel,
    energy: ProbeEnergy,
    source: FidelitySource,
) -> Result<f64> {
    match source {
        FidelitySource::Oracle => oracle_subfidelity(label, model, energy),
        FidelitySource::ClosedForm | FidelitySource::Printed => {
            let v = closed_form(label, model, energy.n_s(), source == FidelitySource::Printed);
            if v.is_finite() && v > 0.0 && v <= CLOSED_FORM_CEILING {
                Ok(v.min(1.0))
            } else {
                Err(Error::ClosedFormInvalid {
                    label: label.as_str().to_string(),
                    closed_form: v,
                    oracle: oracle_subfidelity(label, model, energy)?,
                })
            }
        }
    }
}

/// Bundles the four sub-fidelities.
pub fn unique_set(model: &ChannelModel, energy: ProbeEnergy, source: FidelitySource) -> Result<UniqueFidelitySet2> {
    let [f01, f11, f02, f12] = SubFidelityLabel::ALL.map(|l| subfidelity(l, model, energy, source));
    UniqueFidelitySet2::new(f01?, f11?, f02?, f12?)
}

/// Fidelity of the TMSV outputs of the two sub-patterns that define `label`.
pub fn oracle_subfidelity(label: SubFidelityLabel, model: &ChannelModel, energy: ProbeEnergy) -> Result<f64> {
    let probe = tmsv_cm(energy);
    let (a, b) = label.sub_patterns();
    let out = |p: [u8; 2]| apply_gpi_pattern(&probe, &[model.channel(p[0]), model.channel(p[1])]);
    gaussian_fidelity(&out(a)?, &out(b)?)
}

/// Single-channel fidelity of the optimal classical probe.
pub fn classical_fidelity(model: &ChannelModel, energy: ProbeEnergy) -> f64 {
    match *model {
        ChannelModel::PureLoss { eta_b, eta_t } => (-energy.n_s() / 2.0 * (eta_b - eta_t).powi(2)).exp(),
        ChannelModel::AdditiveNoise { nu_b, nu_t } => {
            1.0 / (((nu_t + 1.0) * (nu_b + 1.0)).sqrt() - (nu_t * nu_b).sqrt())
        }
    }
}

/// Raw closed-form value, possibly NaN or outside (0, 1] for the printed set.
pub fn closed_form(label: SubFidelityLabel, model: &ChannelModel, n: f64, printed: bool) -> f64 {
    use SubFidelityLabel::*;
    match (*model, label) {
        (ChannelModel::PureLoss { eta_b, eta_t }, F01) => loss_f01(n, eta_b, eta_t, printed),
        (ChannelModel::PureLoss { eta_b, eta_t }, F12) => loss_f01(n, eta_t, eta_b, printed),
        (ChannelModel::PureLoss { eta_b, eta_t }, F11) => loss_f11(n, eta_b, eta_t),
        (ChannelModel::PureLoss { eta_b, eta_t }, F02) => loss_f02(n, eta_b, eta_t, printed),
        (ChannelModel::AdditiveNoise { nu_b, nu_t }, F01) => additive_f01(n, nu_b, nu_t),
        (ChannelModel::AdditiveNoise { nu_b, nu_t }, F12) => additive_f01(n, nu_t, nu_b),
        (ChannelModel::AdditiveNoise { nu_b, nu_t }, F11) => additive_f11(n, nu_b, nu_t, printed),
        (ChannelModel::AdditiveNoise { nu_b, nu_t }, F02) => additive_f02(n, nu_b, nu_t, printed),
    }
}

/// Square root that absorbs rounding below zero. Radicands that vanish
/// analytically (for instance at unit transmissivity) can come out as tiny
/// negatives; genuinely negative radicands still give NaN.
fn guarded_sqrt(x: f64, scale: f64) -> f64 {
    if x < 0.0 && x > -1e-12 * scale.abs().max(1.0) {
        0.0
    } else {
        x.sqrt()
    }
}

struct LossTerms {
    bar: f64,
    tilde: f64,
    star: f64,
}

fn loss_terms(eb: f64, et: f64) -> LossTerms {
    LossTerms {
        bar: eb * et * (1.0 - et) * (1.0 - eb),
        tilde: (eb + et - 2.0) * (eb + et),
        star: eb + et - 2.0 * eb * et,
    }
}

// F_{0:1} with background transmissivity `eb`, target `et`.
fn loss_f01(n: f64, eb: f64, et: f64, printed: bool) -> f64 {
    let LossTerms { tilde, star, .. } = loss_terms(eb, et);
    let r = (eb.powi(3) * et).sqrt();
    let theta = 4.0 * r * n * n * ((eb - 1.0).powi(3) * (et - 1.0)).sqrt();
    let theta_t = 2.0 * r * n * (n + 1.0) - et * n - 1.0;
    let phi_rest = -eb * eb * n * (n - 1.0) - eb * n * (et * (n - 1.0) + 3.0);
    let psi_rest = if printed {
        eb * star * n * n * (2.0 * eb - 3.0) + eb * n * (tilde + 2.0 * eb * et - 3.0)
    } else {
        eb * n * n * (star * (2.0 * eb - 3.0) - 2.0 * eb * et) + eb * n * (star + 2.0 * eb * et - 3.0)
    };
    let (phi, psi) = (theta_t + phi_rest, theta_t + psi_rest);
    // psi - phi without the shared theta_t; the corrected difference
    // factorises, which keeps the radicand exact at unit transmissivity.
    let diff = if printed { psi_rest - phi_rest } else { -2.0 * eb * star * (1.0 - eb) * n * n };
    let gap = if phi.signum() == psi.signum() { psi.signum() * diff } else { psi.abs() - phi.abs() };
    let scale = theta + phi.abs() + psi.abs();
    let lo = guarded_sqrt(theta + gap, scale);
    let hi = guarded_sqrt(theta + phi.abs() + psi.abs(), scale);
    (-lo - hi) / (std::f64::consts::SQRT_2 * phi)
}

fn loss_f11(n: f64, eb: f64, et: f64) -> f64 {
    let LossTerms { bar, star, .. } = loss_terms(eb, et);
    1.0 / (n * (-2.0 * bar.sqrt() + star) + 1.0)
}

fn loss_f02(n: f64, eb: f64, et: f64, printed: bool) -> f64 {
    let LossTerms { bar, tilde, .. } = loss_terms(eb, et);
    let radicand = if printed { n * (tilde - 4.0 * n * bar) - 1.0 } else { 1.0 + n * (4.0 * n * bar - tilde) };
    (2.0 * n * bar.sqrt() + guarded_sqrt(radicand, 1.0 + n * n)) / (1.0 - n * tilde)
}

// F_{0:1} with background noise `nb`, target `nt`.
fn additive_f01(n: f64, nb: f64, nt: f64) -> f64 {
    let mu = n + 0.5;
    let wb = nb + 2.0 * mu;
    let gamma = |i: f64, j: f64| 2.0 * mu * (i + j) + i * (2.0 * j + 1.0) - j;
    let (g_bt, g_tb) = (gamma(nb, nt), gamma(nt, nb));
    let g_bar = (g_bt + g_tb) / 2.0;
    let root = guarded_sqrt(g_bt * g_tb, g_bt.abs() * g_tb.abs());
    let a = guarded_sqrt(nb * wb * (g_bar + root), 1.0);
    let b = guarded_sqrt(1.0 + g_bar + nb * wb * (g_bar + 2.0 + root), 1.0);
    (a + b) / (g_bar + 2.0 * nb * wb + 1.0)
}

fn additive_f11(n: f64, nb: f64, nt: f64, printed: bool) -> f64 {
    let tilde = |i: f64, j: f64| n * (i + j) + i * (j + 1.0);
    let (t_tb, t_bt) = (tilde(nt, nb), tilde(nb, nt));
    if printed {
        1.0 / (2.0 * (t_tb - nt - (t_tb * t_bt).sqrt()) + 1.0)
    } else {
        1.0 / ((t_tb.sqrt() - t_bt.sqrt()).powi(2) + 1.0)
    }
}

fn additive_f02(n: f64, nb: f64, nt: f64, printed: bool) -> f64 {
    let mu = n + 0.5;
    let (wb, wt) = (nb + 2.0 * mu, nt + 2.0 * mu);
    let last = if printed { nb } else { nb * nb };
    let radicand = 2.0 * nb * wt * (2.0 * nt * wb + 1.0) + nt * (wt + 2.0 * mu) + last + 1.0;
    1.0 / (radicand.sqrt() - 2.0 * (nb * nt * wb * wt).sqrt())
}
