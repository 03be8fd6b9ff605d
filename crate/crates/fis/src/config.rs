//! JSON run configuration.
//!
//! Every key is optional. Missing keys take the toy defaults; the sensitive
//! set defaults to the first block plus the last two. Unknown keys are
//! rejected so a typo never silently falls back to a default.

use std::path::Path;

use fis_core::model::ToyDiTConfig;
use fis_core::SparsityConfig;
use serde_json::{json, Map, Value};

pub const DEFAULT_STRIDE: usize = 3;
pub const DEFAULT_TAIL: usize = 1;

const KEYS: &[&str] = &[
    "stride_n",
    "blocks_total",
    "steps_total",
    "sensitive_blocks",
    "tail_steps",
    "frames",
    "height",
    "width",
    "model_dim",
    "heads",
    "ffn_expansion",
    "weight_seed",
    "interleave",
    "anchor_ratio",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("config key `{key}`: {message}")]
    Key { key: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(#[from] fis_core::Error),
}

fn key_err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Key {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Command-line flags that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub stride: Option<usize>,
    pub tail: Option<usize>,
    pub sensitive: Option<Vec<usize>>,
    pub no_interleave: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ToyDiTConfig,
    pub sparsity: SparsityConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        resolve(&Map::new(), &Overrides::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    /// Every resolved value, including defaults.
    pub fn to_json(&self) -> Value {
        let m = &self.model;
        let s = &self.sparsity;
        json!({
            "stride_n": s.stride_n(),
            "blocks_total": m.blocks_total,
            "steps_total": m.steps_total,
            "sensitive_blocks": s.sensitive_blocks(),
            "tail_steps": s.tail_steps(),
            "interleave": s.interleave(),
            "frames": m.frames,
            "height": m.height,
            "width": m.width,
            "model_dim": m.model_dim,
            "heads": m.heads,
            "ffn_expansion": m.ffn_expansion,
            "weight_seed": m.weight_seed,
            "anchor_ratio": s.anchor_ratio(),
        })
    }
}

pub fn default_sensitive(blocks_total: usize) -> Vec<usize> {
    let mut s = vec![
        0,
        blocks_total.saturating_sub(2),
        blocks_total.saturating_sub(1),
    ];
    s.dedup();
    s
}

/// Loads `path` (or starts from defaults when `None`) and applies overrides.
pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.display().to_string(),
                source,
            })?;
            parse(&text, overrides)
        }
        None => resolve(&Map::new(), overrides),
    }
}

pub fn parse(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    match serde_json::from_str::<Value>(text)? {
        Value::Object(map) => resolve(&map, overrides),
        _ => Err(key_err("<root>", "expected a JSON object")),
    }
}

fn count(map: &Map<String, Value>, key: &str, default: usize) -> Result<usize, ConfigError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .and_then(|x| usize::try_from(x).ok())
            .ok_or_else(|| key_err(key, format!("expected a non-negative integer, got {v}"))),
    }
}

fn resolve(map: &Map<String, Value>, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    if let Some(unknown) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(key_err(unknown, "unknown key"));
    }
    let d = ToyDiTConfig::default();
    let model = ToyDiTConfig {
        blocks_total: count(map, "blocks_total", d.blocks_total)?,
        model_dim: count(map, "model_dim", d.model_dim)?,
        heads: count(map, "heads", d.heads)?,
        ffn_expansion: count(map, "ffn_expansion", d.ffn_expansion)?,
        frames: count(map, "frames", d.frames)?,
        height: count(map, "height", d.height)?,
        width: count(map, "width", d.width)?,
        steps_total: count(map, "steps_total", d.steps_total)?,
        weight_seed: match map.get("weight_seed") {
            None => d.weight_seed,
            Some(v) => v
                .as_u64()
                .ok_or_else(|| key_err("weight_seed", format!("expected a u64, got {v}")))?,
        },
    };
    for key in [
        "blocks_total",
        "model_dim",
        "heads",
        "ffn_expansion",
        "frames",
        "height",
        "width",
        "steps_total",
    ] {
        if map.get(key).and_then(Value::as_u64) == Some(0) {
            return Err(key_err(key, "must be >= 1"));
        }
    }
    if !model.model_dim.is_multiple_of(model.heads) {
        return Err(key_err(
            "heads",
            format!(
                "model_dim {} is not divisible by {}",
                model.model_dim, model.heads
            ),
        ));
    }
    model.validate()?;
    if model.frames < 2 {
        return Err(key_err("frames", "must be >= 2"));
    }

    let stride = match overrides.stride {
        Some(n) => n,
        None => count(map, "stride_n", DEFAULT_STRIDE)?,
    };
    if stride == 0 {
        return Err(key_err("stride_n", "must be >= 1"));
    }
    let tail = match overrides.tail {
        Some(t) => t,
        None => count(map, "tail_steps", DEFAULT_TAIL)?,
    };
    if tail > model.steps_total {
        return Err(key_err(
            "tail_steps",
            format!("{tail} exceeds steps_total {}", model.steps_total),
        ));
    }
    let sensitive = match &overrides.sensitive {
        Some(s) => s.clone(),
        None => match map.get("sensitive_blocks") {
            None => default_sensitive(model.blocks_total),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_u64()
                        .and_then(|x| usize::try_from(x).ok())
                        .ok_or_else(|| {
                            key_err(
                                "sensitive_blocks",
                                format!("expected block indices, got {v}"),
                            )
                        })
                })
                .collect::<Result<_, _>>()?,
            Some(v) => {
                return Err(key_err(
                    "sensitive_blocks",
                    format!("expected an array, got {v}"),
                ))
            }
        },
    };
    if let Some(&bad) = sensitive.iter().find(|&&l| l >= model.blocks_total) {
        return Err(key_err(
            "sensitive_blocks",
            format!("block {bad} out of range for {} blocks", model.blocks_total),
        ));
    }
    let interleave = match map.get("interleave") {
        None => true,
        Some(Value::Bool(b)) => *b,
        Some(v) => {
            return Err(key_err(
                "interleave",
                format!("expected a boolean, got {v}"),
            ))
        }
    } && !overrides.no_interleave;

    let sparsity = SparsityConfig::new(
        stride,
        model.blocks_total,
        model.steps_total,
        sensitive,
        tail,
    )?
    .with_interleave(interleave);
    // derived from the stride; accepted so a manifest echo can be replayed
    if let Some(v) = map.get("anchor_ratio") {
        if v.as_f64() != Some(sparsity.anchor_ratio()) {
            return Err(key_err(
                "anchor_ratio",
                format!(
                    "{v} does not match 1/stride_n = {}",
                    sparsity.anchor_ratio()
                ),
            ));
        }
    }
    Ok(RunConfig { model, sparsity })
}

/// Parses a comma-separated list such as `0,10,11`.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| format!("`{p}` is not a valid value")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(e: ConfigError) -> String {
        match e {
            ConfigError::Key { key, .. } => key,
            other => panic!("expected a key error, got {other}"),
        }
    }

    #[test]
    fn empty_object_gives_defaults() {
        let cfg = parse("{}", &Overrides::default()).unwrap();
        assert_eq!(cfg.model, ToyDiTConfig::default());
        assert_eq!(cfg.sparsity.stride_n(), 3);
        assert_eq!(cfg.sparsity.sensitive_blocks(), &[0, 10, 11]);
        assert_eq!(cfg.sparsity.tail_steps(), 1);
        assert!(cfg.sparsity.interleave());
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn file_values_and_overrides() {
        let text = r#"{"stride_n": 4, "blocks_total": 6, "steps_total": 2,
                       "sensitive_blocks": [0, 5], "tail_steps": 0, "frames": 9}"#;
        let cfg = parse(text, &Overrides::default()).unwrap();
        assert_eq!(cfg.sparsity.stride_n(), 4);
        assert_eq!(cfg.model.frames, 9);
        assert_eq!(cfg.sparsity.sensitive_blocks(), &[0, 5]);

        let o = Overrides {
            stride: Some(2),
            tail: Some(2),
            sensitive: Some(vec![1]),
            no_interleave: true,
        };
        let cfg = parse(text, &o).unwrap();
        assert_eq!(cfg.sparsity.stride_n(), 2);
        assert_eq!(cfg.sparsity.tail_steps(), 2);
        assert_eq!(cfg.sparsity.sensitive_blocks(), &[1]);
        assert!(!cfg.sparsity.interleave());
    }

    #[test]
    fn errors_name_the_key() {
        let o = Overrides::default();
        assert_eq!(
            key_of(parse(r#"{"strides": 3}"#, &o).unwrap_err()),
            "strides"
        );
        assert_eq!(
            key_of(parse(r#"{"stride_n": 0}"#, &o).unwrap_err()),
            "stride_n"
        );
        assert_eq!(
            key_of(parse(r#"{"stride_n": -1}"#, &o).unwrap_err()),
            "stride_n"
        );
        assert_eq!(
            key_of(parse(r#"{"frames": "many"}"#, &o).unwrap_err()),
            "frames"
        );
        assert_eq!(
            key_of(parse(r#"{"tail_steps": 9}"#, &o).unwrap_err()),
            "tail_steps"
        );
        assert_eq!(
            key_of(parse(r#"{"sensitive_blocks": [12]}"#, &o).unwrap_err()),
            "sensitive_blocks"
        );
        assert_eq!(
            key_of(parse(r#"{"sensitive_blocks": 1}"#, &o).unwrap_err()),
            "sensitive_blocks"
        );
        assert_eq!(key_of(parse(r#"{"heads": 5}"#, &o).unwrap_err()), "heads");
        assert_eq!(
            key_of(parse(r#"{"interleave": 1}"#, &o).unwrap_err()),
            "interleave"
        );
        assert_eq!(key_of(parse("[1]", &o).unwrap_err()), "<root>");
        assert!(matches!(parse("{", &o), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn resolved_json_round_trips() {
        let cfg = parse(
            r#"{"stride_n": 5, "interleave": false}"#,
            &Overrides::default(),
        )
        .unwrap();
        let v = cfg.to_json();
        assert_eq!(parse(&v.to_string(), &Overrides::default()).unwrap(), cfg);
        let stale = r#"{"stride_n": 4, "anchor_ratio": 0.2}"#;
        assert_eq!(
            key_of(parse(stale, &Overrides::default()).unwrap_err()),
            "anchor_ratio"
        );
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<usize>("0, 10,11").unwrap(), vec![0, 10, 11]);
        assert_eq!(parse_list::<u64>("").unwrap(), Vec::<u64>::new());
        assert!(parse_list::<u64>("1,x").is_err());
    }
}
