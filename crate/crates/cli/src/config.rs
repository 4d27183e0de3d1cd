//! `key = value` configuration files. `#` starts a comment line; keys are
//! dotted. Unknown keys are errors so typos do not pass silently.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use invsynth_core::engine::RunConfig;
use invsynth_core::gateway::ProviderConfig;

pub const KEYS: &[(&str, &str)] = &[
    ("provider.base_url", "chat endpoint base URL; `/chat/completions` is appended"),
    ("provider.model", "model name sent to the provider"),
    ("provider.api_key_env", "environment variable holding the API key (default INVSYNTH_API_KEY)"),
    ("provider.temperature", "sampling temperature; provider default when unset"),
    ("provider.system_prompt", "system message sent with every request"),
    ("provider.timeout_secs", "per-request HTTP timeout"),
    ("budget.tokens", "token budget per run (default 150000)"),
    ("budget.seconds", "wall-clock budget per run (default 600)"),
    ("budget.max_feedback_rounds", "feedback round limit; unlimited when unset"),
    ("solver.path", "SMT solver binary (default z3 on PATH)"),
    ("solver.timeout_ms", "per-query solver timeout (default 5000)"),
    ("seed", "rng seed (default 0)"),
    ("bench.jobs", "parallel runs for bench (default 1)"),
];

#[derive(Debug, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Raw values with where each one came from, for the verbose dump.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, (String, Source)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    File,
    Env,
    Flag,
}

impl Settings {
    pub fn parse_file_text(text: &str) -> Result<Settings, ConfigError> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected `key = value`", n + 1)))?;
            let k = k.trim();
            if !KEYS.iter().any(|(known, _)| *known == k) {
                return Err(ConfigError(format!("line {}: unknown key `{k}`", n + 1)));
            }
            let v = v.trim().trim_matches('"');
            s.values.insert(k.to_string(), (v.to_string(), Source::File));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Settings, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Settings::parse_file_text(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>, source: Source) {
        self.values.insert(key.to_string(), (value.into(), source));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError(format!("`{key}`: cannot parse `{v}`"))),
        }
    }

    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = RunConfig::default();
        if let Some(t) = self.parsed::<u64>("budget.tokens")? {
            cfg.token_budget = t;
        }
        if let Some(s) = self.parsed::<u64>("budget.seconds")? {
            cfg.wall_clock_budget = Duration::from_secs(s);
        }
        if cfg.token_budget == 0 || cfg.wall_clock_budget.is_zero() {
            return Err(ConfigError("budgets must be positive".into()));
        }
        cfg.max_feedback_rounds = self.parsed("budget.max_feedback_rounds")?;
        if let Some(ms) = self.parsed::<u64>("solver.timeout_ms")? {
            cfg.solver.per_query_timeout = Duration::from_millis(ms);
        }
        if let Some(seed) = self.parsed("seed")? {
            cfg.rng_seed = seed;
        }
        Ok(cfg)
    }

    pub fn solver_path(&self) -> Option<PathBuf> {
        self.get("solver.path").map(PathBuf::from)
    }

    pub fn jobs(&self) -> Result<usize, ConfigError> {
        Ok(self.parsed("bench.jobs")?.unwrap_or(1))
    }

    /// Live mode needs at least an explicit model name.
    pub fn provider(&self) -> Result<ProviderConfig, ConfigError> {
        let model = self
            .get("provider.model")
            .ok_or_else(|| ConfigError("live mode needs `provider.model` (config file or --model)".into()))?
            .to_string();
        let mut p = ProviderConfig {
            model,
            ..ProviderConfig::default()
        };
        if let Some(u) = self.get("provider.base_url") {
            p.base_url = u.to_string();
        }
        if let Some(k) = self.get("provider.api_key_env") {
            p.api_key_env = k.to_string();
        }
        p.temperature = self.parsed("provider.temperature")?;
        p.system_prompt = self.get("provider.system_prompt").map(str::to_string);
        if let Some(t) = self.parsed::<u64>("provider.timeout_secs")? {
            p.request_timeout = Duration::from_secs(t);
        }
        Ok(p)
    }

    pub fn dump(&self) -> String {
        self.values
            .iter()
            .map(|(k, (v, src))| format!("{k} = {v}  ({src:?})\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let s = Settings::parse_file_text("# c\nseed = 7\nprovider.model = \"m\"\n\nbudget.tokens=100\n").unwrap();
        assert_eq!(s.run_config().unwrap().rng_seed, 7);
        assert_eq!(s.run_config().unwrap().token_budget, 100);
        assert_eq!(s.provider().unwrap().model, "m");
        assert!(Settings::parse_file_text("sed = 7").is_err());
        assert!(Settings::parse_file_text("seed 7").is_err());
        assert!(Settings::parse_file_text("seed = x").unwrap().run_config().is_err());
        assert!(Settings::parse_file_text("budget.tokens = 0").unwrap().run_config().is_err());
    }

    #[test]
    fn later_sources_override() {
        let mut s = Settings::parse_file_text("seed = 1").unwrap();
        s.set("seed", "9", Source::Flag);
        assert_eq!(s.run_config().unwrap().rng_seed, 9);
        assert!(s.dump().contains("Flag"));
    }

    #[test]
    fn live_needs_model() {
        assert!(Settings::default().provider().is_err());
    }
}
