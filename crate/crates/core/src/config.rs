//! Layered configuration: packaged defaults, an optional INI file, then
//! `SECTION__OPTION` environment variables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::{EscapePolicy, Ini, LineSeparator, ParseOption, WriteOption};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::services::{AgentRole, ChatBackendConfig, LeanServerConfig, SearchConfig, DEFAULT_VERIFY_PATH};

/// The packaged defaults.
pub const DEFAULT_INI: &str = include_str!("../data/config.ini");

pub const KIMINA_SECTION: &str = "KIMINA_LEAN_SERVER";
pub const SEARCH_SECTION: &str = "LEAN_EXPLORE_SERVER";

/// Used when a chat section names no `url`.
pub const DEFAULT_CHAT_URL: &str = "https://api.openai.com/v1";
/// Read from the environment when a chat section names no `api_key`.
pub const API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed INI{}: {message}", .origin.as_deref().map(|p| format!(" in {p}")).unwrap_or_default())]
    ParseError { origin: Option<String>, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("[{section}] {option} = {value:?} is not a {expected}")]
    TypeError {
        section: String,
        option: String,
        value: String,
        expected: &'static str,
    },
    #[error("[{section}] {option} is required")]
    MissingOption { section: String, option: String },
}

/// Search and proof budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub formalizer_max_retries: u32,
    pub prover_self_correction: u32,
    pub prover_max_pass: u32,
    pub decomposer_self_correction: u32,
    pub max_depth: u32,
}

impl Limits {
    /// Re-decompositions allowed per node; shares the sketch-correction budget.
    pub fn decomposition_budget(&self) -> u32 {
        self.decomposer_self_correction
    }
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            formalizer_max_retries: 10,
            prover_self_correction: 2,
            prover_max_pass: 32,
            decomposer_self_correction: 6,
            max_depth: 20,
        }
    }
}

type Sections = BTreeMap<String, BTreeMap<String, String>>;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Config {
    sections: Sections,
    fallback_api_key: Option<String>,
}

fn parse_ini(text: &str, origin: Option<&Path>) -> Result<Sections, ConfigError> {
    let opt = ParseOption {
        enabled_quote: false,
        enabled_escape: false,
        ..ParseOption::default()
    };
    let ini = Ini::load_from_str_opt(text, opt).map_err(|e| ConfigError::ParseError {
        origin: origin.map(|p| p.display().to_string()),
        message: e.to_string(),
    })?;
    let mut out = Sections::new();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(ConfigError::ParseError {
                    origin: origin.map(|p| p.display().to_string()),
                    message: format!("option `{k}` appears before any section"),
                });
            }
            continue;
        };
        let entry = out.entry(section.trim().to_ascii_uppercase()).or_default();
        for (k, v) in props.iter() {
            entry.insert(k.trim().to_ascii_lowercase(), v.to_string());
        }
    }
    Ok(out)
}

fn merge(into: &mut Sections, from: Sections) {
    for (section, props) in from {
        into.entry(section).or_default().extend(props);
    }
}

impl Config {
    /// Merge `defaults`, then `user_file`, then `SECTION__OPTION` entries of
    /// `env`. Env keys without a double underscore are ignored.
    pub fn load<'a>(
        defaults: &str,
        user_file: Option<&Path>,
        env: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Config, ConfigError> {
        let mut sections = parse_ini(defaults, None)?;
        if let Some(path) = user_file {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
            merge(&mut sections, parse_ini(&text, Some(path))?);
        }
        // Sorted so that two keys differing only in case resolve the same way
        // regardless of iteration order.
        let mut fallback_api_key = None;
        let mut overrides: Vec<(String, String, &str)> = Vec::new();
        for (key, value) in env {
            if key == API_KEY_ENV {
                fallback_api_key = Some(value.to_string());
            }
            let Some((section, option)) = key.split_once("__") else {
                continue;
            };
            if section.is_empty() || option.is_empty() {
                continue;
            }
            overrides.push((section.to_ascii_uppercase(), option.to_ascii_lowercase(), value));
        }
        overrides.sort();
        for (section, option, value) in overrides {
            sections.entry(section).or_default().insert(option, value.to_string());
        }
        Ok(Config {
            sections,
            fallback_api_key,
        })
    }

    /// Packaged defaults plus the process environment.
    pub fn from_env(user_file: Option<&Path>) -> Result<Config, ConfigError> {
        let env: Vec<(String, String)> = std::env::vars().collect();
        Self::load(DEFAULT_INI, user_file, env.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    pub fn defaults() -> Config {
        Self::load(DEFAULT_INI, None, std::iter::empty()).expect("packaged defaults parse")
    }

    pub fn get(&self, section: &str, option: &str) -> Option<&str> {
        self.sections
            .get(&section.to_ascii_uppercase())?
            .get(&option.to_ascii_lowercase())
            .map(String::as_str)
    }

    pub fn set(&mut self, section: &str, option: &str, value: impl Into<String>) {
        self.sections
            .entry(section.to_ascii_uppercase())
            .or_default()
            .insert(option.to_ascii_lowercase(), value.into());
    }

    pub fn sections(&self) -> &BTreeMap<String, BTreeMap<String, String>> {
        &self.sections
    }

    /// Serialize back to INI text that [`Config::load`] reads unchanged.
    pub fn to_ini(&self) -> String {
        let mut ini = Ini::new();
        for (section, props) in &self.sections {
            for (k, v) in props {
                ini.with_section(Some(section.as_str())).set(k.as_str(), v.as_str());
            }
        }
        let mut buf = Vec::new();
        ini.write_to_opt(
            &mut buf,
            WriteOption {
                escape_policy: EscapePolicy::Nothing,
                line_separator: LineSeparator::CR,
                kv_separator: " = ",
            },
        )
        .expect("writing to memory");
        String::from_utf8(buf).expect("config text is UTF-8")
    }

    fn required(&self, section: &str, option: &str) -> Result<&str, ConfigError> {
        self.get(section, option).ok_or_else(|| ConfigError::MissingOption {
            section: section.to_string(),
            option: option.to_string(),
        })
    }

    fn int(&self, section: &str, option: &str, positive: bool) -> Result<Option<u32>, ConfigError> {
        let Some(raw) = self.get(section, option) else {
            return Ok(None);
        };
        match raw.trim().parse::<u32>() {
            Ok(v) if !positive || v > 0 => Ok(Some(v)),
            _ => Err(ConfigError::TypeError {
                section: section.to_string(),
                option: option.to_string(),
                value: raw.to_string(),
                expected: if positive { "positive integer" } else { "non-negative integer" },
            }),
        }
    }

    fn limit(&self, section: &str, option: &str, default: u32) -> Result<u32, ConfigError> {
        Ok(self.int(section, option, true)?.unwrap_or(default))
    }

    fn url(&self, section: &str, option: &str, default: Option<&str>) -> Result<String, ConfigError> {
        let raw = match (self.get(section, option), default) {
            (Some(v), _) => v,
            (None, Some(d)) => d,
            (None, None) => self.required(section, option)?,
        };
        let parsed = url::Url::parse(raw.trim()).ok();
        match parsed {
            Some(u) if matches!(u.scheme(), "http" | "https") && u.has_host() => {
                Ok(raw.trim().trim_end_matches('/').to_string())
            }
            _ => Err(ConfigError::TypeError {
                section: section.to_string(),
                option: option.to_string(),
                value: raw.to_string(),
                expected: "http(s) URL",
            }),
        }
    }

    pub fn typed_limits(&self) -> Result<Limits, ConfigError> {
        let d = Limits::default();
        let prover = AgentRole::Prover.section();
        Ok(Limits {
            formalizer_max_retries: self.limit(AgentRole::Formalizer.section(), "max_retries", d.formalizer_max_retries)?,
            prover_self_correction: self.limit(prover, "max_self_correction_attempts", d.prover_self_correction)?,
            prover_max_pass: self.limit(prover, "max_pass", d.prover_max_pass)?,
            decomposer_self_correction: self.limit(
                AgentRole::Decomposer.section(),
                "max_self_correction_attempts",
                d.decomposer_self_correction,
            )?,
            max_depth: self.limit(prover, "max_depth", d.max_depth)?,
        })
    }

    pub fn chat_backend(&self, role: AgentRole) -> Result<ChatBackendConfig, ConfigError> {
        let s = role.section();
        let (max_tokens, completion_tokens_param) = match self.int(s, "max_completion_tokens", true)? {
            Some(v) => (v, true),
            None => (self.int(s, "max_tokens", true)?.unwrap_or(50_000), false),
        };
        let api_key = self
            .get(s, "api_key")
            .map(str::to_owned)
            .or_else(|| self.fallback_api_key.clone())
            .unwrap_or_default();
        Ok(ChatBackendConfig {
            model: self.required(s, "model")?.trim().to_string(),
            base_url: self.url(s, "url", Some(DEFAULT_CHAT_URL))?,
            api_key,
            max_tokens,
            completion_tokens_param,
            context_window: self.int(s, "num_ctx", true)?,
            max_remote_retries: self.int(s, "max_remote_retries", false)?.unwrap_or(5),
        })
    }

    pub fn chat_backends(&self) -> Result<BTreeMap<AgentRole, ChatBackendConfig>, ConfigError> {
        AgentRole::ALL.iter().map(|&r| Ok((r, self.chat_backend(r)?))).collect()
    }

    pub fn lean_server(&self) -> Result<LeanServerConfig, ConfigError> {
        Ok(LeanServerConfig {
            url: self.url(KIMINA_SECTION, "url", None)?,
            verify_path: self
                .get(KIMINA_SECTION, "verify_path")
                .map_or(DEFAULT_VERIFY_PATH.to_string(), |p| p.trim().to_string()),
            max_retries: self.int(KIMINA_SECTION, "max_retries", false)?.unwrap_or(5),
            max_concurrent_ast: self.int(KIMINA_SECTION, "max_concurrent_ast", true)?.unwrap_or(4) as usize,
        })
    }

    /// Per-request timeout handed to the Lean server, in seconds.
    pub fn lean_timeout_secs(&self) -> Result<u64, ConfigError> {
        Ok(self.int(KIMINA_SECTION, "timeout", true)?.unwrap_or(300) as u64)
    }

    pub fn package_filters(&self) -> Vec<String> {
        self.get(SEARCH_SECTION, "package_filters")
            .unwrap_or_default()
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
            .collect()
    }

    pub fn search(&self) -> Result<SearchConfig, ConfigError> {
        Ok(SearchConfig {
            url: self.url(SEARCH_SECTION, "url", None)?,
            package_filters: self.package_filters(),
            max_retries: self.int(SEARCH_SECTION, "max_retries", false)?.unwrap_or(5),
        })
    }
}
