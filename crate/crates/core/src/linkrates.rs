//! Physical-layer key-rate models.
//!
//! Two link kinds are modeled. A QKD link runs asymptotic decoy-state BB84
//! over fiber: its secret-key rate decays with distance through the channel
//! transmittance. A KEM link transports keys with post-quantum public-key
//! encapsulation: its rate is set by CPU cycle counts and is independent of
//! distance. Built-in presets reproduce published commercial and
//! state-of-the-art QKD parameter sets and the AVX2 Kyber-1024 benchmark.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ratecalc::Rate;

#[derive(Debug, Error, PartialEq)]
pub enum LinkRateError {
    #[error("probability out of range: {0}")]
    ProbabilityRange(f64),
    #[error("invalid parameter {name}: {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("invalid distance range: min {min} km, max {max} km, step {step} km")]
    InvalidRange { min: f64, max: f64, step: f64 },
    #[error("unknown QKD preset `{0}`")]
    UnknownQkdPreset(String),
    #[error("unknown KEM preset `{0}`")]
    UnknownKemPreset(String),
}

/// Error rate of the vacuum state; a dark count clicks on a random outcome.
pub const VACUUM_ERROR_RATE: f64 = 0.5;

/// Default fiber attenuation in dB/km.
pub const DEFAULT_FIBER_LOSS_DB_PER_KM: f64 = 0.19;

/// Decoy-state BB84 system parameters (asymptotic signal-state analysis).
#[derive(Debug, Clone, PartialEq)]
pub struct QkdParams {
    /// System clock rate in Hz.
    pub clock_rate_hz: f64,
    /// Probability that both parties choose the Z basis.
    pub p_z: f64,
    /// Probability of sending the signal intensity.
    pub p_mu: f64,
    /// Detector efficiency.
    pub eta_det: f64,
    /// Dark-count probability per gate.
    pub p_d: f64,
    /// Z-basis quantum bit error rate.
    pub e_z: f64,
    /// X-basis error rate.
    pub e_x: f64,
    /// Error-correction efficiency (>= 1).
    pub f_ec: f64,
    /// Signal intensity (mean photon number).
    pub mu: f64,
    /// Fiber loss in dB/km.
    pub fiber_loss_db_per_km: f64,
}

impl QkdParams {
    /// Commercial-grade system parameters.
    pub fn commercial() -> Self {
        Self {
            clock_rate_hz: 1e9,
            p_z: 0.9668 * (1.0 - 1.0 / 128.0),
            p_mu: 0.9697,
            eta_det: 0.31,
            p_d: 1e-6,
            e_z: 0.03,
            e_x: 0.03,
            f_ec: 1.3,
            mu: 0.4,
            fiber_loss_db_per_km: DEFAULT_FIBER_LOSS_DB_PER_KM,
        }
    }

    /// State-of-the-art laboratory system parameters.
    pub fn state_of_the_art() -> Self {
        Self {
            clock_rate_hz: 2.5e9,
            p_z: 0.955,
            p_mu: 0.88,
            eta_det: 0.56,
            p_d: 1e-8,
            e_z: 0.005,
            e_x: 0.04,
            f_ec: 1.04,
            mu: 0.54,
            fiber_loss_db_per_km: DEFAULT_FIBER_LOSS_DB_PER_KM,
        }
    }

    pub fn validate(&self) -> Result<(), LinkRateError> {
        for (name, value) in [
            ("p_z", self.p_z),
            ("p_mu", self.p_mu),
            ("p_d", self.p_d),
            ("e_z", self.e_z),
            ("e_x", self.e_x),
        ] {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(LinkRateError::InvalidParam { name, value });
            }
        }
        if !self.eta_det.is_finite() || self.eta_det <= 0.0 || self.eta_det > 1.0 {
            return Err(LinkRateError::InvalidParam {
                name: "eta_det",
                value: self.eta_det,
            });
        }
        if !self.clock_rate_hz.is_finite() || self.clock_rate_hz <= 0.0 {
            return Err(LinkRateError::InvalidParam {
                name: "clock_rate_hz",
                value: self.clock_rate_hz,
            });
        }
        if !self.mu.is_finite() || self.mu <= 0.0 {
            return Err(LinkRateError::InvalidParam {
                name: "mu",
                value: self.mu,
            });
        }
        if !self.f_ec.is_finite() || self.f_ec < 1.0 {
            return Err(LinkRateError::InvalidParam {
                name: "f_ec",
                value: self.f_ec,
            });
        }
        if !self.fiber_loss_db_per_km.is_finite() || self.fiber_loss_db_per_km < 0.0 {
            return Err(LinkRateError::InvalidParam {
                name: "fiber_loss_db_per_km",
                value: self.fiber_loss_db_per_km,
            });
        }
        Ok(())
    }
}

/// Quantities derived from [`QkdParams`] at a given distance.
#[derive(Debug, Clone, PartialEq)]
pub struct QkdDerived {
    /// Overall transmittance: detector efficiency times fiber transmission.
    pub eta: f64,
    /// Gain: probability that a signal pulse produces a detection.
    pub q_mu: f64,
    /// Vacuum-state yield.
    pub y_0: f64,
    /// Single-photon yield.
    pub y_1: f64,
    /// Single-photon fraction among detections.
    pub q_1: f64,
    /// Single-photon phase error rate.
    pub e_1: f64,
    /// Secret fraction per detection (may be negative before clamping).
    pub r: f64,
}

/// KEM throughput parameters: cycle counts per protocol round.
#[derive(Debug, Clone, PartialEq)]
pub struct KemParams {
    pub cycles_keygen: f64,
    pub cycles_encaps: f64,
    pub cycles_decaps: f64,
    pub clock_hz: f64,
    pub bits_per_round: f64,
}

impl KemParams {
    /// Kyber-1024 AVX2 benchmark cycles on a 3.0 GHz personal computer.
    pub fn kyber1024_pc() -> Self {
        Self {
            cycles_keygen: 73_544.0,
            cycles_encaps: 97_324.0,
            cycles_decaps: 79_128.0,
            clock_hz: 3.0e9,
            bits_per_round: 256.0,
        }
    }

    pub fn validate(&self) -> Result<(), LinkRateError> {
        for (name, value) in [
            ("cycles_keygen", self.cycles_keygen),
            ("cycles_encaps", self.cycles_encaps),
            ("cycles_decaps", self.cycles_decaps),
            ("clock_hz", self.clock_hz),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(LinkRateError::InvalidParam { name, value });
            }
        }
        if !self.bits_per_round.is_finite() || self.bits_per_round < 0.0 {
            return Err(LinkRateError::InvalidParam {
                name: "bits_per_round",
                value: self.bits_per_round,
            });
        }
        Ok(())
    }
}

/// Named parameter bundles resolvable from network-description files.
#[derive(Debug, Clone)]
pub struct PresetRegistry {
    qkd: BTreeMap<String, QkdParams>,
    kem: BTreeMap<String, KemParams>,
}

impl Default for PresetRegistry {
    fn default() -> Self {
        let mut qkd = BTreeMap::new();
        qkd.insert("commercial".to_owned(), QkdParams::commercial());
        qkd.insert("sota".to_owned(), QkdParams::state_of_the_art());
        let mut kem = BTreeMap::new();
        kem.insert("kyber1024-pc".to_owned(), KemParams::kyber1024_pc());
        Self { qkd, kem }
    }
}

impl PresetRegistry {
    pub fn qkd(&self, name: &str) -> Result<&QkdParams, LinkRateError> {
        self.qkd
            .get(name)
            .ok_or_else(|| LinkRateError::UnknownQkdPreset(name.to_owned()))
    }

    pub fn kem(&self, name: &str) -> Result<&KemParams, LinkRateError> {
        self.kem
            .get(name)
            .ok_or_else(|| LinkRateError::UnknownKemPreset(name.to_owned()))
    }

    pub fn insert_qkd(&mut self, name: impl Into<String>, params: QkdParams) {
        self.qkd.insert(name.into(), params);
    }

    pub fn insert_kem(&mut self, name: impl Into<String>, params: KemParams) {
        self.kem.insert(name.into(), params);
    }
}

/// Binary entropy H(p) in bits, with H(0) = H(1) = 0 by continuity.
pub fn binary_entropy(p: f64) -> Result<f64, LinkRateError> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(LinkRateError::ProbabilityRange(p));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// Evaluate the decoy-state quantities at `distance_km`.
pub fn qkd_derived(params: &QkdParams, distance_km: f64) -> Result<QkdDerived, LinkRateError> {
    params.validate()?;
    if !distance_km.is_finite() || distance_km < 0.0 {
        return Err(LinkRateError::InvalidParam {
            name: "distance_km",
            value: distance_km,
        });
    }
    let eta = params.eta_det * 10f64.powf(-params.fiber_loss_db_per_km * distance_km / 10.0);
    let q_mu = 1.0 - (1.0 - 2.0 * params.p_d) * (-params.mu * eta).exp();
    let y_0 = 2.0 * params.p_d;
    let y_1 = 1.0 - (1.0 - 2.0 * params.p_d) * (1.0 - eta);
    let q_1 = y_1 * params.mu * (-params.mu).exp() / q_mu;
    let e_1 = params.e_x + (VACUUM_ERROR_RATE - params.e_x) * y_0 / y_1;
    let r = -params.f_ec * binary_entropy(params.e_z)? + q_1 * (1.0 - binary_entropy(e_1)?);
    Ok(QkdDerived {
        eta,
        q_mu,
        y_0,
        y_1,
        q_1,
        e_1,
        r,
    })
}

/// Asymptotic decoy-state BB84 secret-key rate in bits per second.
///
/// Negative secret fractions clamp to zero so curves terminate cleanly.
pub fn qkd_rate(params: &QkdParams, distance_km: f64) -> Result<Rate, LinkRateError> {
    let derived = qkd_derived(params, distance_km)?;
    let rate =
        params.clock_rate_hz * params.p_z * params.p_z * params.p_mu * derived.q_mu * derived.r;
    Ok(Rate::clamped(rate))
}

/// KEM key rate in bits per second: bits per round over round latency.
pub fn kem_rate(params: &KemParams) -> Result<Rate, LinkRateError> {
    params.validate()?;
    let cycles = params.cycles_keygen + params.cycles_encaps + params.cycles_decaps;
    Ok(Rate::clamped(
        params.bits_per_round * params.clock_hz / cycles,
    ))
}

/// Which physical model a curve tabulates.
#[derive(Debug, Clone)]
pub enum LinkModel {
    Qkd(QkdParams),
    Kem(KemParams),
}

/// Tabulate rate versus distance over `[l_min, l_max]` at `step` km spacing.
///
/// KEM curves are constant in distance.
pub fn rate_curve(
    model: &LinkModel,
    l_min: f64,
    l_max: f64,
    step: f64,
) -> Result<Vec<(f64, Rate)>, LinkRateError> {
    if !l_min.is_finite()
        || !l_max.is_finite()
        || !step.is_finite()
        || l_min < 0.0
        || l_min > l_max
        || step <= 0.0
    {
        return Err(LinkRateError::InvalidRange {
            min: l_min,
            max: l_max,
            step,
        });
    }
    let mut points = Vec::new();
    let mut i = 0u64;
    loop {
        let distance = l_min + i as f64 * step;
        if distance > l_max + step * 1e-9 {
            break;
        }
        let rate = match model {
            LinkModel::Qkd(params) => qkd_rate(params, distance)?,
            LinkModel::Kem(params) => kem_rate(params)?,
        };
        points.push((distance, rate));
        i += 1;
    }
    Ok(points)
}

/// Render a curve as CSV with a header row and 6-significant-digit rates.
pub fn curve_to_csv(points: &[(f64, Rate)]) -> String {
    let mut out = String::from("distance_km,rate_bps\n");
    for (distance, rate) in points {
        out.push_str(&format!("{},{:.5e}\n", distance, rate.bps()));
    }
    out
}
