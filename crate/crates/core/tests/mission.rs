use bernloc::estimator::density_stats;
use bernloc::mission::*;
use bernloc::sensing::ChannelParams;
use bernloc::Vec2;

fn short(seed: u64, tf_max: f64) -> MissionConfig {
    MissionConfig { tf_max, r_t: 0.01, ..MissionConfig::reference(seed) }
}

fn active_plan(log: &MissionLog, t: f64) -> &PlanRecord {
    log.plans.iter().rev().find(|p| p.t_start < t).unwrap_or(&log.plans[0])
}

#[test]
fn same_config_same_log() {
    let cfg = short(3, 40.0);
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    let c = run(&short(4, 40.0)).unwrap();
    assert_ne!(format!("{a:?}"), format!("{c:?}"));
}

#[test]
fn vehicle_tracks_the_active_plan() {
    let cfg = short(5, 60.0);
    let log = run(&cfg).unwrap();
    assert!(log.plans.len() > 5);
    for s in &log.vehicle {
        let (pos, _) = vehicle_state(&active_plan(&log, s.t).poly, s.t).unwrap();
        assert!(pos.distance(s.pos) < 1e-9);
        assert!(s.vel.norm() <= cfg.v_max + 1e-4, "speed {} at {}", s.vel.norm(), s.t);
    }
}

#[test]
fn replans_continue_the_previous_trajectory() {
    let log = run(&short(6, 60.0)).unwrap();
    for w in log.plans.windows(2) {
        let t = w[1].t_start;
        let (p0, v0) = vehicle_state(&w[0].poly, t).unwrap();
        let (p1, v1) = vehicle_state(&w[1].poly, t).unwrap();
        assert!(p0.distance(p1) < 1e-6 && v0.distance(v1) < 1e-6, "handover at {t}");
    }
}

#[test]
fn timestamps_increase() {
    let log = run(&short(7, 30.0)).unwrap();
    let inc = |ts: Vec<f64>| ts.windows(2).all(|w| w[1] > w[0]);
    assert!(inc(log.measurements.iter().map(|m| m.t).collect()));
    assert!(inc(log.estimates.iter().map(|e| e.estimate.t).collect()));
    assert!(inc(log.vehicle.iter().map(|v| v.t).collect()));
    assert!(inc(log.plans.iter().map(|p| p.t_start).collect()));
}

#[test]
fn short_horizon_times_out() {
    let cfg = MissionConfig { tf_max: 3.0, ..MissionConfig::reference(1) };
    let log = run(&cfg).unwrap();
    assert_eq!(log.termination, Termination::Timeout);
    assert_eq!(log.termination_time, 3.0);
    assert_eq!(log.measurements.len(), 6);
    assert_eq!(log.plans.len(), 1);
}

#[test]
fn easy_instance_reaches_confidence() {
    let cfg = MissionConfig {
        target_pos: Vec2::new(2.5, 1.5),
        channel: ChannelParams { noise_sigma0: 0.0, ..Default::default() },
        ..MissionConfig::reference(0)
    };
    let log = run(&cfg).unwrap();
    assert_eq!(log.termination, Termination::Confidence);
    assert!(log.termination_time < 0.5 * cfg.tf_max);
    assert!(log.final_error < cfg.r_t);
}

#[test]
fn confidence_is_rechecked_from_the_logged_density() {
    let cfg = MissionConfig::reference(0);
    let log = run(&cfg).unwrap();
    assert_eq!(log.termination, Termination::Confidence);
    let s = density_stats(log.final_density.as_ref().unwrap()).unwrap();
    assert!(2.0 * s.x.sigma <= cfg.r_t && 2.0 * s.y.sigma <= cfg.r_t);
    assert_eq!(log.estimates.last().unwrap().estimate.t, log.termination_time);
}

#[test]
fn paired_runs_share_noise() {
    let cfg = short(11, 30.0);
    let s = compare_modes(&cfg, &[11]).unwrap();
    assert_eq!(s.runs.len(), 1);
    let r = &s.runs[0];
    assert!(r.with_fim_enabled_check());
    let noise = |l: &MissionLog| l.measurements.iter().map(|m| m.range - m.true_range).collect::<Vec<_>>();
    let (a, b) = (noise(&r.with_fim), noise(&r.without_fim));
    assert_eq!(a.len(), b.len());
    for (k, (x, y)) in a.iter().zip(&b).enumerate() {
        assert!((x - y).abs() < 1e-12, "{k}: {x} vs {y} {:?} {:?}", r.with_fim.measurements[k], r.without_fim.measurements[k]);
    }
}

trait ModeCheck {
    fn with_fim_enabled_check(&self) -> bool;
}

impl ModeCheck for PairedRun {
    fn with_fim_enabled_check(&self) -> bool {
        self.with_fim.plans.iter().skip(1).any(|p| p.cost.information != 0.0)
            && self.without_fim.plans.iter().all(|p| p.cost.information == 0.0)
    }
}

#[test]
fn zero_noise_comparison_is_well_formed() {
    let cfg = MissionConfig {
        channel: ChannelParams { noise_sigma0: 0.0, ..Default::default() },
        tf_max: 60.0,
        ..MissionConfig::reference(0)
    };
    let s = compare_modes(&cfg, &[0, 1]).unwrap();
    assert_eq!(s.runs.len(), 2);
    for r in &s.runs {
        assert!(r.with_fim.final_error < 1e-3 && r.without_fim.final_error < 1e-3);
    }
    assert!(s.median_final_error_fim.is_finite() && s.median_final_error_nofim.is_finite());
}

#[test]
fn sequential_and_parallel_batches_agree() {
    let cfgs: Vec<MissionConfig> = (0..4).map(|s| short(s, 20.0)).collect();
    let a = run_batch_sequential(&cfgs);
    let b = run_batch(&cfgs);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(format!("{:?}", x.as_ref().unwrap()), format!("{:?}", y.as_ref().unwrap()));
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        MissionConfig { sample_rate_hz: 0.0, ..MissionConfig::reference(0) },
        MissionConfig { replan_interval_s: -1.0, ..MissionConfig::reference(0) },
        MissionConfig { r_t: 0.0, ..MissionConfig::reference(0) },
        MissionConfig { target_pos: Vec2::new(25.0, 5.0), ..MissionConfig::reference(0) },
    ];
    for cfg in bad {
        assert!(run(&cfg).is_err());
    }
}

#[test]
fn median_helper() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    assert!(median(&[]).is_nan());
}
