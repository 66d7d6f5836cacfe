//! Project configuration, read from `.treqs.toml` at the repository root (or
//! from the file named by the `TREQS_CONFIG` environment variable — the CLI
//! resolves that override and passes the path in).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::model::{is_token, TraceLinkType};
use crate::parser::Vocabulary;

/// Glob patterns used when the configuration does not set `include_globs`.
pub const DEFAULT_INCLUDE_GLOBS: [&str; 1] = ["**/*.md"];

/// Default ID prefixes for the built-in element kinds.
pub const DEFAULT_ID_PREFIXES: [(&str, &str); 4] = [
    ("requirement", "REQ"),
    ("user-story", "US"),
    ("test", "TC"),
    ("information", "INFO"),
];

/// Name of the configuration file looked up at the repository root.
pub const CONFIG_FILE_NAME: &str = ".treqs.toml";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse `{path}`: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
}

/// Project settings. All fields have defaults, so a missing configuration
/// file is equivalent to an empty one.
#[derive(Debug, Clone)]
pub struct Config {
    /// Glob patterns (relative to the repository root) selecting the files
    /// that contain elements.
    pub include_globs: Vec<String>,
    /// Element kinds accepted in addition to the built-in four.
    pub extra_kinds: Vec<String>,
    /// Link types accepted in addition to the built-in five.
    pub extra_link_types: Vec<String>,
    /// Link type that counts as test coverage.
    pub default_test_link: TraceLinkType,
    /// ID prefix per element kind, used by `treqs new`.
    pub id_prefixes: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            include_globs: DEFAULT_INCLUDE_GLOBS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            extra_kinds: Vec::new(),
            extra_link_types: Vec::new(),
            default_test_link: TraceLinkType::tests(),
            id_prefixes: DEFAULT_ID_PREFIXES
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

impl Config {
    /// The parser vocabulary implied by this configuration.
    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::with_extras(
            self.extra_kinds.iter().map(String::as_str),
            self.extra_link_types.iter().map(String::as_str),
        )
    }

    /// ID prefix for `kind`: configured, or a built-in default, or the kind
    /// name itself for declared kinds without a configured prefix.
    pub fn id_prefix<'c>(&'c self, kind: &'c str) -> &'c str {
        self.id_prefixes
            .get(kind)
            .map(String::as_str)
            .unwrap_or(kind)
    }
}

/// Returns the configuration file the repository at `root` uses, if any.
pub fn discover(root: &Path) -> Option<PathBuf> {
    let candidate = root.join(CONFIG_FILE_NAME);
    candidate.is_file().then_some(candidate)
}

/// Loads configuration from `path`. Unknown keys, wrongly typed values, and
/// non-token names are tolerated: each produces a warning string and the
/// entry is ignored, so a typo can never silently change semantics *and*
/// never blocks the tool.
pub fn load_from(path: &Path) -> Result<(Config, Vec<String>), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: toml::Value = text.parse().map_err(|source| ConfigError::Toml {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(from_value(value, &path.display().to_string()))
}

fn from_value(value: toml::Value, origin: &str) -> (Config, Vec<String>) {
    let mut config = Config::default();
    let mut warnings = Vec::new();

    let table = match value {
        toml::Value::Table(table) => table,
        _ => {
            warnings.push(format!(
                "{origin}: configuration must be a table; using defaults"
            ));
            return (config, warnings);
        }
    };

    let mut warn = |message: String| warnings.push(format!("{origin}: {message}"));

    for (key, entry) in table {
        match key.as_str() {
            "include_globs" => match string_array(&entry) {
                Some(globs) if !globs.is_empty() => config.include_globs = globs,
                Some(_) => warn("`include_globs` is empty; keeping the default".into()),
                None => warn("`include_globs` must be an array of strings; ignored".into()),
            },
            "extra_kinds" => match string_array(&entry) {
                Some(kinds) => {
                    for kind in kinds {
                        if is_token(&kind) {
                            config.extra_kinds.push(kind);
                        } else {
                            warn(format!("extra kind `{kind}` is not a valid token; ignored"));
                        }
                    }
                }
                None => warn("`extra_kinds` must be an array of strings; ignored".into()),
            },
            "extra_link_types" => match string_array(&entry) {
                Some(types) => {
                    for link_type in types {
                        if is_token(&link_type) {
                            config.extra_link_types.push(link_type);
                        } else {
                            warn(format!(
                                "extra link type `{link_type}` is not a valid token; ignored"
                            ));
                        }
                    }
                }
                None => warn("`extra_link_types` must be an array of strings; ignored".into()),
            },
            "default_test_link" => match entry.as_str() {
                Some(name) => match TraceLinkType::new(name) {
                    Ok(link_type) => config.default_test_link = link_type,
                    Err(_) => warn(format!(
                        "`default_test_link` `{name}` is not a valid token; keeping `tests`"
                    )),
                },
                None => warn("`default_test_link` must be a string; ignored".into()),
            },
            "id_prefixes" => match entry.as_table() {
                Some(table) => {
                    for (kind, prefix) in table {
                        match prefix.as_str() {
                            Some(prefix) if is_token(kind) && is_token(prefix) => {
                                config.id_prefixes.insert(kind.clone(), prefix.to_string());
                            }
                            Some(prefix) => warn(format!(
                                "id prefix `{kind}` = `{prefix}` must use token syntax; ignored"
                            )),
                            None => {
                                warn(format!("id prefix for `{kind}` must be a string; ignored"))
                            }
                        }
                    }
                }
                None => warn("`id_prefixes` must be a table; ignored".into()),
            },
            other => warn(format!("unknown key `{other}` ignored")),
        }
    }

    (config, warnings)
}

fn string_array(value: &toml::Value) -> Option<Vec<String>> {
    let items = value.as_array()?;
    items
        .iter()
        .map(|item| item.as_str().map(String::from))
        .collect()
}
