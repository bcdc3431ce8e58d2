//! Concurrent runs over one config key.

use crate::config::{ConfigError, RunConfig};
use crate::scenario::{run_scenario, HarnessError, ScenarioOutcome};

/// Member `i` gets `value[i]` for `key`, seed `seed + i` and its own output
/// prefix. Members run on scoped threads; results come back in input order.
pub fn member_configs(base: &RunConfig, key: &str, values: &[String]) -> Result<Vec<RunConfig>, ConfigError> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut cfg = base.clone();
            cfg.set(key, v).map_err(|e| ConfigError::Invalid(format!("sweep value {v}: {e}")))?;
            cfg.seed = base.seed.wrapping_add(i as u64);
            let tag: String = key.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
            cfg.output.prefix = format!("{}_{tag}_{i}", base.output.prefix);
            cfg.validate()?;
            Ok(cfg)
        })
        .collect()
}

pub fn sweep(base: &RunConfig, key: &str, values: &[String]) -> Result<Vec<Result<ScenarioOutcome, HarnessError>>, ConfigError> {
    let configs = member_configs(base, key, values)?;
    Ok(std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| scope.spawn(move || run_scenario(cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep member panicked"))
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn members_get_distinct_seeds_and_prefixes() {
        let base = parse_config("seed = 10").unwrap();
        let vals: Vec<String> = ["0.5", "1", "2"].iter().map(|s| s.to_string()).collect();
        let cfgs = member_configs(&base, "blowup.eps_multiplier", &vals).unwrap();
        assert_eq!(cfgs.iter().map(|c| c.seed).collect::<Vec<_>>(), [10, 11, 12]);
        assert_eq!(cfgs[2].eps_multiplier, 2.0);
        assert_eq!(cfgs[1].output.prefix, "run_blowup_eps_multiplier_1");
        assert!(member_configs(&base, "nope", &vals).is_err());
        assert!(member_configs(&base, "time.dt", &["-1".to_string()]).is_err());
    }
}
