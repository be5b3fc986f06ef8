//! Closed-loop localization mission and the with/without-information
//! comparison harness.
//!
//! One mission is a strictly sequential loop driven by a seeded ChaCha
//! stream, so a configuration and seed fully determine the log. Batches of
//! missions (seeds, modes) are independent and run on the rayon pool when
//! the `parallel` feature is enabled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bernstein::BernsteinPoly;
use crate::error::{domain, Result};
use crate::estimator::{
    density_stats, estimate_position, fit_density, sample_stats, Axis, DensityModel, DensityStats, PositionEstimate,
};
use crate::planner::{self, CostBreakdown, PlanContext, PlanWeights};
use crate::sensing::{sample_measurement, ChannelParams, RangeMeasurement};
use crate::solver::SolveOptions;
use crate::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct MissionConfig {
    pub target_pos: Vec2,
    pub vehicle_start: Vec2,
    pub zeta_min: f64,
    pub zeta_max: f64,
    pub sample_rate_hz: f64,
    pub replan_interval_s: f64,
    /// Termination radius: stop once `2 sigma <= r_t` on both axes.
    pub r_t: f64,
    pub tf_max: f64,
    pub channel: ChannelParams,
    pub weights: PlanWeights,
    pub v_max: f64,
    pub degree: usize,
    pub rng_seed: u64,
    pub fim_enabled: bool,
}

impl MissionConfig {
    /// Scenario used by the default configuration and the reproduction
    /// runs: 2 Hz readings with 0.1 m noise, 1 m/s vehicle, 5 s replanning,
    /// 2 m termination radius and a 350 s time limit.
    pub fn reference(rng_seed: u64) -> Self {
        Self {
            target_pos: Vec2::new(14.0, 11.0),
            vehicle_start: Vec2::new(1.0, 1.0),
            zeta_min: 0.0,
            zeta_max: 20.0,
            sample_rate_hz: 2.0,
            replan_interval_s: 5.0,
            r_t: 2.0,
            tf_max: 350.0,
            channel: ChannelParams::default(),
            weights: PlanWeights { time: 0.1, effort: 1.0, terminal: 0.05, information: 1.0 },
            v_max: 1.0,
            degree: 5,
            rng_seed,
            fim_enabled: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if !(self.sample_rate_hz > 0.0) {
            return Err(domain("sample_rate_hz must be positive"));
        }
        if !(self.replan_interval_s > 0.0) {
            return Err(domain("replan_interval_s must be positive"));
        }
        if !(self.r_t > 0.0) {
            return Err(domain("r_t_m must be positive"));
        }
        if !(self.tf_max > 0.0 && self.tf_max.is_finite()) {
            return Err(domain("tf_max_s must be positive"));
        }
        if !(self.zeta_max > self.zeta_min) {
            return Err(domain("zeta_max must exceed zeta_min"));
        }
        let inside = |v: f64| v >= self.zeta_min && v <= self.zeta_max;
        if !(inside(self.target_pos.x) && inside(self.target_pos.y)) {
            return Err(domain("target_pos must lie inside the search area"));
        }
        if !self.vehicle_start.is_finite() {
            return Err(domain("vehicle_start must be finite"));
        }
        if self.vehicle_start == self.target_pos {
            return Err(domain("vehicle_start coincides with target_pos"));
        }
        if !(self.v_max > 0.0) {
            return Err(domain("v_max must be positive"));
        }
        if self.degree < 3 {
            return Err(domain("degree_d must be at least 3"));
        }
        if self.weights.as_array().iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(domain("weights must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn area_center(&self) -> Vec2 {
        let c = 0.5 * (self.zeta_min + self.zeta_max);
        Vec2::new(c, c)
    }

    /// Planner weights with the information term switched off in no-FIM mode.
    pub fn effective_weights(&self) -> PlanWeights {
        let mut w = self.weights;
        if !self.fim_enabled {
            w.information = 0.0;
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleSample {
    pub t: f64,
    pub pos: Vec2,
    pub vel: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRecord {
    pub estimate: PositionEstimate,
    pub err: f64,
    /// Density standard deviations (infinite when the density is degenerate).
    pub sigma: Vec2,
    /// Standard deviation of the raw clipped estimates.
    pub raw_sigma: Vec2,
}

#[derive(Debug, Clone)]
pub struct PlanRecord {
    /// Start of validity; the first record is the pre-plan initializer at t = 0.
    pub t_start: f64,
    pub poly: BernsteinPoly,
    pub cost: CostBreakdown,
    pub objective: f64,
    pub converged: bool,
    pub planner_fault: bool,
    pub initializer: bool,
}

#[derive(Debug, Clone)]
pub struct DensitySnapshot {
    pub t: f64,
    pub density: DensityModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Confidence,
    Timeout,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Confidence => "confidence",
            Termination::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MissionLog {
    pub measurements: Vec<RangeMeasurement>,
    pub estimates: Vec<EstimateRecord>,
    pub vehicle: Vec<VehicleSample>,
    pub plans: Vec<PlanRecord>,
    /// Densities at every replanning instant.
    pub snapshots: Vec<DensitySnapshot>,
    pub final_density: Option<DensityModel>,
    pub termination: Termination,
    pub termination_time: f64,
    pub final_error: f64,
    pub planner_faults: usize,
    pub estimator_failures: usize,
}

impl MissionLog {
    /// Mean estimation error over the logged epochs.
    pub fn time_averaged_error(&self) -> f64 {
        if self.estimates.is_empty() {
            return self.final_error;
        }
        self.estimates.iter().map(|e| e.err).sum::<f64>() / self.estimates.len() as f64
    }

    pub fn final_stats(&self) -> Option<DensityStats> {
        self.final_density.as_ref().and_then(|d| density_stats(d).ok())
    }
}

/// Vehicle state at `t` on a trajectory, holding the end point afterwards.
pub fn vehicle_state(poly: &BernsteinPoly, t: f64) -> Result<(Vec2, Vec2)> {
    if t >= poly.tf() {
        return Ok((Vec2::from_slice(poly.coeff(poly.degree())), Vec2::ZERO));
    }
    let pos = Vec2::from_slice(&poly.eval(t)?);
    let vel = Vec2::from_slice(&poly.derivative().eval(t)?);
    Ok((pos, vel))
}

/// Motion before the first plan: a straight line toward the search-area
/// center at 0.8 `v_max`, slowed down if needed to last one replan interval.
pub fn initializer_trajectory(config: &MissionConfig) -> Result<BernsteinPoly> {
    let start = config.vehicle_start;
    let goal = config.area_center();
    let span = (start.distance(goal) / (0.8 * config.v_max)).max(config.replan_interval_s);
    let d = config.degree;
    let coeffs = (0..=d).map(|j| (start + (goal - start) * (j as f64 / d as f64)).to_array().to_vec()).collect();
    BernsteinPoly::new(coeffs, 0.0, span)
}

fn planner_options() -> SolveOptions {
    SolveOptions { max_iters: 200, grad_tol: 1e-7, max_outer_iters: 10, ..Default::default() }
}

/// Runs one mission to confidence or timeout.
pub fn run(config: &MissionConfig) -> Result<MissionLog> {
    config.validate()?;
    let base_rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let eps = 1e-9;

    let mut measurements: Vec<RangeMeasurement> = Vec::new();
    let mut estimates: Vec<PositionEstimate> = Vec::new();
    let mut records: Vec<EstimateRecord> = Vec::new();
    let mut vehicle = Vec::new();
    let mut snapshots = Vec::new();
    let mut plans = vec![PlanRecord {
        t_start: 0.0,
        poly: initializer_trajectory(config)?,
        cost: CostBreakdown::default(),
        objective: 0.0,
        converged: true,
        planner_fault: false,
        initializer: true,
    }];
    let mut density: Option<DensityModel> = None;
    let mut warm = config.area_center();
    let mut next_replan = config.replan_interval_s;
    let mut termination = None;
    let mut planner_faults = 0;
    let mut estimator_failures = 0;

    let mut k: u64 = 1;
    loop {
        let t = k as f64 / config.sample_rate_hz;
        if t > config.tf_max + eps {
            break;
        }
        let active = &plans.last().expect("at least the initializer").poly;
        let (pos, vel) = vehicle_state(active, t)?;
        vehicle.push(VehicleSample { t, pos, vel });

        // One stream per epoch: a resampled draw never shifts later epochs,
        // so paired runs of a seed see the same noise at every epoch.
        let mut rng = base_rng.clone();
        rng.set_stream(k);
        if let Ok(m) = sample_measurement(pos, config.target_pos, t, &config.channel, &mut rng) {
            measurements.push(m);
        }
        if !measurements.is_empty() {
            match estimate_position(&measurements, warm) {
                Ok(e) => {
                    if !e.solver_converged {
                        estimator_failures += 1;
                    }
                    warm = e.p_hat;
                    estimates.push(e);
                }
                Err(_) => estimator_failures += 1,
            }
        }

        if let Some(last) = estimates.last().copied() {
            let d = fit_density(&estimates, config.zeta_min, config.zeta_max)?;
            let sigma = match density_stats(&d) {
                Ok(s) => Vec2::new(s.x.sigma, s.y.sigma),
                Err(_) => Vec2::new(f64::INFINITY, f64::INFINITY),
            };
            let points: Vec<Vec2> = estimates.iter().map(|e| e.p_hat).collect();
            let raw = sample_stats(&points, config.zeta_min, config.zeta_max).expect("non-empty");
            records.push(EstimateRecord {
                estimate: last,
                err: last.p_hat.distance(config.target_pos),
                sigma,
                raw_sigma: Vec2::new(raw.x.sigma, raw.y.sigma),
            });
            density = Some(d);
            if 2.0 * sigma.x <= config.r_t && 2.0 * sigma.y <= config.r_t {
                termination = Some((Termination::Confidence, t));
                break;
            }
        }

        if t + eps >= config.tf_max {
            break;
        }
        if t + eps >= next_replan {
            if let Some(d) = &density {
                snapshots.push(DensitySnapshot { t, density: d.clone() });
                let record = replan(config, t, pos, vel, warm, d, plans.last().map(|p| p.poly.clone()))?;
                if record.planner_fault {
                    planner_faults += 1;
                }
                plans.push(record);
            }
            next_replan += config.replan_interval_s;
        }
        k += 1;
    }

    let (termination, termination_time) = termination.unwrap_or((Termination::Timeout, config.tf_max));
    let final_error = records.last().map(|r| r.err).unwrap_or_else(|| config.area_center().distance(config.target_pos));
    Ok(MissionLog {
        measurements,
        estimates: records,
        vehicle,
        plans,
        snapshots,
        final_density: density,
        termination,
        termination_time,
        final_error,
        planner_faults,
        estimator_failures,
    })
}

fn replan(
    config: &MissionConfig,
    t: f64,
    pos: Vec2,
    vel: Vec2,
    p_hat: Vec2,
    density: &DensityModel,
    previous: Option<BernsteinPoly>,
) -> Result<PlanRecord> {
    let lo = (t + config.replan_interval_s).min(config.tf_max);
    let ctx = PlanContext {
        t_i: t,
        p_ti: pos,
        v_ti: vel,
        p_hat,
        density: density.clone(),
        sigma: config.channel.noise_sigma0.max(1e-6),
        weights: config.effective_weights(),
        v_max: config.v_max,
        degree: config.degree,
        tf_bounds: (lo, config.tf_max),
        tf_max_mission: config.tf_max,
        obstacles: Vec::new(),
        previous,
        solve_options: planner_options(),
    };
    let plan = planner::plan(&ctx)?;
    Ok(PlanRecord {
        t_start: t,
        poly: plan.poly,
        cost: plan.cost,
        objective: plan.objective,
        converged: plan.converged,
        planner_fault: plan.planner_fault,
        initializer: false,
    })
}

/// Runs missions one after another.
pub fn run_batch_sequential(configs: &[MissionConfig]) -> Vec<Result<MissionLog>> {
    configs.iter().map(run).collect()
}

/// Runs missions on the rayon pool; order of results matches `configs`.
#[cfg(feature = "parallel")]
pub fn run_batch_parallel(configs: &[MissionConfig]) -> Vec<Result<MissionLog>> {
    use rayon::prelude::*;
    configs.par_iter().map(run).collect()
}

/// Runs independent missions, in parallel when the `parallel` feature is on.
pub fn run_batch(configs: &[MissionConfig]) -> Vec<Result<MissionLog>> {
    #[cfg(feature = "parallel")]
    {
        run_batch_parallel(configs)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_batch_sequential(configs)
    }
}

/// Number of points per axis in exported density curves.
pub const DENSITY_GRID: usize = 200;

/// Largest value of each axis PDF on the export grid.
pub fn pdf_peaks(d: &DensityModel) -> Result<Vec2> {
    let peak = |p: &BernsteinPoly| -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for i in 0..DENSITY_GRID {
            let z = d.zeta_min + (d.zeta_max - d.zeta_min) * i as f64 / (DENSITY_GRID - 1) as f64;
            best = best.max(p.eval_scalar(z)?);
        }
        Ok(best)
    };
    Ok(Vec2::new(peak(d.pdf(Axis::X))?, peak(d.pdf(Axis::Y))?))
}

#[derive(Debug, Clone)]
pub struct PairedRun {
    pub seed: u64,
    pub with_fim: MissionLog,
    pub without_fim: MissionLog,
    /// Time of the density pair used for the peak comparison.
    pub common_snapshot_t: f64,
    /// Mean of the per-axis PDF peaks at the common snapshot.
    pub peak_with_fim: f64,
    pub peak_without_fim: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonSummary {
    pub runs: Vec<PairedRun>,
    pub median_final_error_fim: f64,
    pub median_final_error_nofim: f64,
    pub median_avg_error_fim: f64,
    pub median_avg_error_nofim: f64,
    pub confidence_fraction_fim: f64,
    pub confidence_fraction_nofim: f64,
    /// Share of seeds whose information-mode PDF peak is at least the other mode's.
    pub peak_win_fraction: f64,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Densities of both modes at the latest replanning instant both reached,
/// falling back to the final densities.
fn common_densities<'a>(a: &'a MissionLog, b: &'a MissionLog) -> (f64, Option<&'a DensityModel>, Option<&'a DensityModel>) {
    let found = a
        .snapshots
        .iter()
        .rev()
        .find_map(|sa| b.snapshots.iter().find(|sb| (sb.t - sa.t).abs() < 1e-9).map(|sb| (sa.t, &sa.density, &sb.density)));
    match found {
        Some((t, da, db)) => (t, Some(da), Some(db)),
        None => (a.termination_time.min(b.termination_time), a.final_density.as_ref(), b.final_density.as_ref()),
    }
}

fn mean_peak(d: Option<&DensityModel>) -> Result<f64> {
    match d {
        Some(d) => {
            let p = pdf_peaks(d)?;
            Ok(0.5 * (p.x + p.y))
        }
        None => Ok(0.0),
    }
}

/// Runs every seed with and without the information term. Both runs of a
/// seed share the same measurement-noise stream.
pub fn compare_modes(config: &MissionConfig, seeds: &[u64]) -> Result<ComparisonSummary> {
    compare_modes_with(config, seeds, run_batch)
}

/// [`compare_modes`] with an explicit batch executor.
pub fn compare_modes_with<B>(config: &MissionConfig, seeds: &[u64], batch: B) -> Result<ComparisonSummary>
where
    B: Fn(&[MissionConfig]) -> Vec<Result<MissionLog>>,
{
    if seeds.is_empty() {
        return Err(domain("comparison needs at least one seed"));
    }
    let configs: Vec<MissionConfig> = seeds
        .iter()
        .flat_map(|&seed| {
            [true, false].map(|fim| MissionConfig { rng_seed: seed, fim_enabled: fim, ..config.clone() })
        })
        .collect();
    let mut logs = batch(&configs).into_iter();
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let with_fim = logs.next().expect("paired result")?;
        let without_fim = logs.next().expect("paired result")?;
        let (t, da, db) = common_densities(&with_fim, &without_fim);
        runs.push(PairedRun {
            seed,
            common_snapshot_t: t,
            peak_with_fim: mean_peak(da)?,
            peak_without_fim: mean_peak(db)?,
            with_fim,
            without_fim,
        });
    }
    let collect = |f: &dyn Fn(&PairedRun) -> f64| runs.iter().map(f).collect::<Vec<_>>();
    let frac = |f: &dyn Fn(&PairedRun) -> bool| runs.iter().filter(|r| f(r)).count() as f64 / runs.len() as f64;
    Ok(ComparisonSummary {
        median_final_error_fim: median(&collect(&|r| r.with_fim.final_error)),
        median_final_error_nofim: median(&collect(&|r| r.without_fim.final_error)),
        median_avg_error_fim: median(&collect(&|r| r.with_fim.time_averaged_error())),
        median_avg_error_nofim: median(&collect(&|r| r.without_fim.time_averaged_error())),
        confidence_fraction_fim: frac(&|r| r.with_fim.termination == Termination::Confidence),
        confidence_fraction_nofim: frac(&|r| r.without_fim.termination == Termination::Confidence),
        peak_win_fraction: frac(&|r| r.peak_with_fim >= r.peak_without_fim),
        runs,
    })
}
