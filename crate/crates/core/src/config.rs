//! Flat `key = value` mission configuration files.
//!
//! One assignment per line, `#` starts a comment, vectors are written as
//! `x, y`. Keys:
//!
//! ```text
//! target_pos, vehicle_start, zeta_min, zeta_max        (required)
//! sample_rate_hz, replan_interval_s, r_t_m, tf_max_s
//! channel.P, channel.n_exp, channel.noise_model, channel.sigma0, channel.noise_ref_range
//! w1, w2, w3, w4, v_max, degree_d, rng_seed, fim_enabled
//! ```
//!
//! Omitted optional keys take the values of [`MissionConfig::reference`].

use std::collections::HashSet;
use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mission::MissionConfig;
use crate::sensing::NoiseModel;
use crate::Vec2;

pub const KEYS: [&str; 21] = [
    "target_pos",
    "vehicle_start",
    "zeta_min",
    "zeta_max",
    "sample_rate_hz",
    "replan_interval_s",
    "r_t_m",
    "tf_max_s",
    "channel.P",
    "channel.n_exp",
    "channel.noise_model",
    "channel.sigma0",
    "channel.noise_ref_range",
    "w1",
    "w2",
    "w3",
    "w4",
    "v_max",
    "degree_d",
    "rng_seed",
    "fim_enabled",
];

pub const REQUIRED_KEYS: [&str; 4] = ["target_pos", "vehicle_start", "zeta_min", "zeta_max"];

fn parse_scalar<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse::<T>().map_err(|_| format!("cannot parse `{value}`"))
}

fn parse_vec2(value: &str) -> std::result::Result<Vec2, String> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected `x, y`, got `{value}`"));
    }
    Ok(Vec2::new(parse_scalar(parts[0])?, parse_scalar(parts[1])?))
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected true or false, got `{other}`")),
    }
}

/// Parses and validates a configuration text.
pub fn parse_config(text: &str) -> Result<MissionConfig> {
    let mut cfg = MissionConfig::reference(0);
    let mut seen = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::ConfigLine { line, msg: format!("expected `key = value`, got `{content}`") });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::ConfigLine { line, msg: format!("unknown key `{key}`") });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::ConfigLine { line, msg: format!("duplicate key `{key}`") });
        }
        let applied: std::result::Result<(), String> = (|| {
            match key {
                "target_pos" => cfg.target_pos = parse_vec2(value)?,
                "vehicle_start" => cfg.vehicle_start = parse_vec2(value)?,
                "zeta_min" => cfg.zeta_min = parse_scalar(value)?,
                "zeta_max" => cfg.zeta_max = parse_scalar(value)?,
                "sample_rate_hz" => cfg.sample_rate_hz = parse_scalar(value)?,
                "replan_interval_s" => cfg.replan_interval_s = parse_scalar(value)?,
                "r_t_m" => cfg.r_t = parse_scalar(value)?,
                "tf_max_s" => cfg.tf_max = parse_scalar(value)?,
                "channel.P" => cfg.channel.emission_db = parse_scalar(value)?,
                "channel.n_exp" => cfg.channel.path_loss_exp = parse_scalar(value)?,
                "channel.noise_model" => cfg.channel.noise_model = NoiseModel::from_str(value)?,
                "channel.sigma0" => cfg.channel.noise_sigma0 = parse_scalar(value)?,
                "channel.noise_ref_range" => cfg.channel.noise_ref_range = parse_scalar(value)?,
                "w1" => cfg.weights.time = parse_scalar(value)?,
                "w2" => cfg.weights.effort = parse_scalar(value)?,
                "w3" => cfg.weights.terminal = parse_scalar(value)?,
                "w4" => cfg.weights.information = parse_scalar(value)?,
                "v_max" => cfg.v_max = parse_scalar(value)?,
                "degree_d" => cfg.degree = parse_scalar(value)?,
                "rng_seed" => cfg.rng_seed = parse_scalar(value)?,
                "fim_enabled" => cfg.fim_enabled = parse_bool(value)?,
                _ => unreachable!("key list checked above"),
            }
            Ok(())
        })();
        applied.map_err(|msg| Error::ConfigLine { line, msg: format!("`{key}`: {msg}") })?;
    }

    for key in REQUIRED_KEYS {
        if !seen.contains(key) {
            return Err(Error::Config(format!("missing required key `{key}`")));
        }
    }
    cfg.validate().map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
    Ok(cfg)
}

/// Canonical text form; parses back to an identical configuration.
pub fn to_config_string(cfg: &MissionConfig) -> String {
    let v = |p: Vec2| format!("{}, {}", p.x, p.y);
    let mut s = String::new();
    let mut put = |k: &str, val: String| {
        let _ = writeln!(s, "{k} = {val}");
    };
    put("target_pos", v(cfg.target_pos));
    put("vehicle_start", v(cfg.vehicle_start));
    put("zeta_min", cfg.zeta_min.to_string());
    put("zeta_max", cfg.zeta_max.to_string());
    put("sample_rate_hz", cfg.sample_rate_hz.to_string());
    put("replan_interval_s", cfg.replan_interval_s.to_string());
    put("r_t_m", cfg.r_t.to_string());
    put("tf_max_s", cfg.tf_max.to_string());
    put("channel.P", cfg.channel.emission_db.to_string());
    put("channel.n_exp", cfg.channel.path_loss_exp.to_string());
    put("channel.noise_model", cfg.channel.noise_model.as_str().to_string());
    put("channel.sigma0", cfg.channel.noise_sigma0.to_string());
    put("channel.noise_ref_range", cfg.channel.noise_ref_range.to_string());
    put("w1", cfg.weights.time.to_string());
    put("w2", cfg.weights.effort.to_string());
    put("w3", cfg.weights.terminal.to_string());
    put("w4", cfg.weights.information.to_string());
    put("v_max", cfg.v_max.to_string());
    put("degree_d", cfg.degree.to_string());
    put("rng_seed", cfg.rng_seed.to_string());
    put("fim_enabled", cfg.fim_enabled.to_string());
    s
}

/// SHA-256 of the canonical text, hex encoded.
pub fn config_hash(cfg: &MissionConfig) -> String {
    hex::encode(Sha256::digest(to_config_string(cfg).as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "target_pos = 14, 11\nvehicle_start = 1, 1\nzeta_min = 0\nzeta_max = 20\n";

    #[test]
    fn minimal_config_takes_reference_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg, MissionConfig::reference(0));
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = MissionConfig::reference(42);
        cfg.channel.noise_model = NoiseModel::DistanceScaled;
        cfg.weights.information = 0.3;
        cfg.fim_enabled = false;
        cfg.tf_max = 123.456;
        assert_eq!(parse_config(&to_config_string(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# scenario\n\n{MINIMAL}rng_seed = 9   # seed\n");
        assert_eq!(parse_config(&text).unwrap().rng_seed, 9);
    }

    #[test]
    fn missing_key_is_named() {
        let err = parse_config("vehicle_start = 1, 1\nzeta_min = 0\nzeta_max = 20\n").unwrap_err();
        assert!(err.to_string().contains("target_pos"), "{err}");
    }

    #[test]
    fn errors_are_line_anchored() {
        let err = parse_config(&format!("{MINIMAL}v_max = fast\n")).unwrap_err();
        assert!(matches!(err, Error::ConfigLine { line: 5, .. }), "{err}");
        let err = parse_config(&format!("{MINIMAL}\nbogus = 1\n")).unwrap_err();
        assert!(matches!(err, Error::ConfigLine { line: 6, .. }), "{err}");
        let err = parse_config(&format!("{MINIMAL}zeta_min = 1\n")).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        let err = parse_config("target_pos 14 11\n").unwrap_err();
        assert!(matches!(err, Error::ConfigLine { line: 1, .. }));
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(parse_config(&format!("{MINIMAL}r_t_m = -1\n")).is_err());
        assert!(parse_config(&format!("{MINIMAL}channel.noise_model = loud\n")).is_err());
        assert!(parse_config("target_pos = 30, 11\nvehicle_start = 1, 1\nzeta_min = 0\nzeta_max = 20\n").is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = MissionConfig::reference(1);
        let b = MissionConfig::reference(2);
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
