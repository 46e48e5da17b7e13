//! Flat `key = value` config files.
//!
//! `#` starts a comment. Keys before the first `[case]` header are defaults
//! shared by every case; each `[case]` block overrides them. A file without
//! `[case]` blocks describes a single case. Lists are comma-separated.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, Default)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

#[derive(Debug, Clone)]
pub struct ConfigFile {
    path: String,
    defaults: Section,
    cases: Vec<Section>,
}

impl ConfigFile {
    pub fn load(path: &Path, allowed: &[&str]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), allowed)
    }

    pub fn parse(text: &str, path: &str, allowed: &[&str]) -> Result<Self> {
        let err = |line: usize, message: String| CliError::Config {
            path: path.to_string(),
            line,
            message,
        };
        let mut defaults = Section::default();
        let mut cases: Vec<Section> = Vec::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if content.starts_with('[') {
                if content != "[case]" {
                    return Err(err(line, format!("unknown section `{content}` (only [case] is allowed)")));
                }
                cases.push(Section {
                    line,
                    entries: BTreeMap::new(),
                });
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, found `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !allowed.contains(&key) {
                return Err(err(line, format!("unknown key `{key}` (allowed: {})", allowed.join(", "))));
            }
            if value.is_empty() {
                return Err(err(line, format!("key `{key}` has no value")));
            }
            let section = cases.last_mut().unwrap_or(&mut defaults);
            if let Some(previous) = section.entries.get(key) {
                return Err(err(line, format!("duplicate key `{key}` (first set on line {})", previous.line)));
            }
            section.entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }
        Ok(Self {
            path: path.to_string(),
            defaults,
            cases,
        })
    }

    /// Every case with the defaults merged in.
    pub fn cases(&self) -> Vec<Case<'_>> {
        if self.cases.is_empty() {
            return vec![Case {
                path: &self.path,
                line: 1,
                entries: self.defaults.entries.iter().map(|(k, v)| (k.as_str(), v)).collect(),
            }];
        }
        self.cases
            .iter()
            .map(|section| {
                let mut entries: BTreeMap<&str, &Entry> =
                    self.defaults.entries.iter().map(|(k, v)| (k.as_str(), v)).collect();
                entries.extend(section.entries.iter().map(|(k, v)| (k.as_str(), v)));
                Case {
                    path: &self.path,
                    line: section.line,
                    entries,
                }
            })
            .collect()
    }
}

/// One merged case, with typed accessors that report the offending line.
#[derive(Debug)]
pub struct Case<'a> {
    path: &'a str,
    line: usize,
    entries: BTreeMap<&'a str, &'a Entry>,
}

impl Case<'_> {
    fn error(&self, line: usize, message: String) -> CliError {
        CliError::Config {
            path: self.path.to_string(),
            line,
            message,
        }
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.entries
            .get(key)
            .map(|e| parse_f64(&e.value).map_err(|m| self.error(e.line, format!("`{key}`: {m}"))))
            .transpose()
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.entries
            .get(key)
            .map(|e| {
                e.value
                    .split(',')
                    .map(|item| parse_f64(item.trim()))
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|m| self.error(e.line, format!("`{key}`: {m}")))
            })
            .transpose()
    }

    /// Nonnegative integer; scientific notation such as `1e6` is accepted.
    pub fn count(&self, key: &str) -> Result<Option<u64>> {
        self.entries
            .get(key)
            .map(|e| parse_count(&e.value).map_err(|m| self.error(e.line, format!("`{key}`: {m}"))))
            .transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?
            .ok_or_else(|| self.error(self.line, format!("missing required key `{key}`")))
    }

    pub fn require_count(&self, key: &str) -> Result<u64> {
        self.count(key)?
            .ok_or_else(|| self.error(self.line, format!("missing required key `{key}`")))
    }

    pub fn require_f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.f64_list(key)?
            .ok_or_else(|| self.error(self.line, format!("missing required key `{key}`")))
    }

    /// Error tied to the line that set `key` (or the case header).
    pub fn invalid(&self, key: &str, message: impl std::fmt::Display) -> CliError {
        let line = self.entries.get(key).map_or(self.line, |e| e.line);
        self.error(line, format!("`{key}`: {message}"))
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a finite number")),
    }
}

fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 9.0e15 => Ok(v as u64),
        _ => Err(format!("`{s}` is not a nonnegative integer")),
    }
}
