//! Beacon channel model: log-distance RSSI/range conversion and noisy
//! range sampling.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseModel {
    /// Range noise std is `sigma0` everywhere.
    Constant,
    /// Range noise std is `sigma0 * (r / ref_range)^2`.
    DistanceScaled,
}

impl NoiseModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseModel::Constant => "constant",
            NoiseModel::DistanceScaled => "distance_scaled",
        }
    }
}

impl std::str::FromStr for NoiseModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "constant" => Ok(NoiseModel::Constant),
            "distance_scaled" => Ok(NoiseModel::DistanceScaled),
            other => Err(format!("unknown noise model `{other}` (expected constant or distance_scaled)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Emission constant `P` in dB.
    pub emission_db: f64,
    /// Path-loss exponent `n`.
    pub path_loss_exp: f64,
    /// Range noise std in meters.
    pub noise_sigma0: f64,
    pub noise_model: NoiseModel,
    /// Anchor range of the distance-scaled model, meters.
    pub noise_ref_range: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            emission_db: -40.0,
            path_loss_exp: 2.0,
            noise_sigma0: 0.1,
            noise_model: NoiseModel::Constant,
            noise_ref_range: 10.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.path_loss_exp > 0.0) {
            return Err(domain(format!("path-loss exponent must be positive, got {}", self.path_loss_exp)));
        }
        if !(self.noise_sigma0 >= 0.0) {
            return Err(domain(format!("noise sigma must be non-negative, got {}", self.noise_sigma0)));
        }
        if !(self.noise_ref_range > 0.0) {
            return Err(domain(format!("noise reference range must be positive, got {}", self.noise_ref_range)));
        }
        if !self.emission_db.is_finite() {
            return Err(domain("emission constant must be finite"));
        }
        Ok(())
    }

    /// Noise std at true range `r`.
    pub fn noise_sigma(&self, r: f64) -> f64 {
        match self.noise_model {
            NoiseModel::Constant => self.noise_sigma0,
            NoiseModel::DistanceScaled => self.noise_sigma0 * (r / self.noise_ref_range).powi(2),
        }
    }
}

/// `r = 10^((P - RSSI) / (10 n))`.
pub fn range_from_rssi(rssi: f64, params: &ChannelParams) -> f64 {
    10f64.powf((params.emission_db - rssi) / (10.0 * params.path_loss_exp))
}

/// Inverse of [`range_from_rssi`]: `RSSI = P - 10 n log10(r)`.
pub fn rssi_from_range(range: f64, params: &ChannelParams) -> Result<f64> {
    if !(range > 0.0) {
        return Err(domain(format!("range must be positive, got {range}")));
    }
    Ok(params.emission_db - 10.0 * params.path_loss_exp * range.log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeMeasurement {
    pub t: f64,
    pub range: f64,
    /// Simulation-only ground truth.
    pub true_range: f64,
    pub vehicle_pos: Vec2,
}

const MAX_RESAMPLES: usize = 10;
const MIN_RANGE: f64 = 1e-3;

/// Draws one noisy range reading from `vehicle_pos` to `target_pos`.
pub fn sample_measurement<R: Rng + ?Sized>(
    vehicle_pos: Vec2,
    target_pos: Vec2,
    t: f64,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<RangeMeasurement> {
    let true_range = vehicle_pos.distance(target_pos);
    if !(true_range > 0.0) {
        return Err(domain("vehicle and target positions coincide"));
    }
    let sigma = params.noise_sigma(true_range);
    let mut range = true_range;
    if sigma > 0.0 {
        range = MIN_RANGE;
        for _ in 0..MAX_RESAMPLES {
            let eps: f64 = StandardNormal.sample(rng);
            let draw = true_range + sigma * eps;
            if draw > 0.0 {
                range = draw;
                break;
            }
        }
    }
    Ok(RangeMeasurement { t, range, true_range, vehicle_pos })
}
