//! Flat sectioned `key = value` files.
//!
//! `#` and `;` start comments. Keys outside a section belong to `""`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.path.display(), self.msg)
        } else {
            write!(f, "{}:{}: {}", self.path.display(), self.line, self.msg)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
pub struct Value {
    pub text: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Section {
    pub line: usize,
    pub entries: BTreeMap<String, Value>,
}

#[derive(Debug, Clone)]
pub struct Ini {
    pub path: PathBuf,
    pub sections: BTreeMap<String, Section>,
}

impl Ini {
    pub fn parse(path: &Path, text: &str) -> Result<Self, ConfigError> {
        let err = |line: usize, msg: String| ConfigError {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = strip_comment(raw).trim();
            if t.is_empty() {
                continue;
            }
            if let Some(rest) = t.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, format!("unterminated section header '{t}'")))?
                    .trim()
                    .to_ascii_lowercase();
                if name.is_empty() {
                    return Err(err(line, "empty section name".into()));
                }
                if let Some(prev) = sections.get(&name) {
                    return Err(err(line, format!("section [{name}] already opened on line {}", prev.line)));
                }
                sections.insert(name.clone(), Section { line, ..Default::default() });
                current = name;
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected 'key = value', found '{t}'")))?;
            let key = k.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(err(line, "missing key before '='".into()));
            }
            let sec = sections.entry(current.clone()).or_insert_with(|| Section { line, ..Default::default() });
            if let Some(prev) = sec.entries.get(&key) {
                return Err(err(line, format!("duplicate key '{key}' (first set on line {})", prev.line)));
            }
            sec.entries.insert(
                key,
                Value {
                    text: v.trim().to_string(),
                    line,
                },
            );
        }
        Ok(Self {
            path: path.to_path_buf(),
            sections,
        })
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("cannot read: {e}"),
        })?;
        Self::parse(path, &text)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.get(name)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Value> {
        self.sections.get(section).and_then(|s| s.entries.get(key))
    }

    pub fn error(&self, line: usize, msg: impl Into<String>) -> ConfigError {
        ConfigError {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    /// Reject sections and keys outside `schema`.
    pub fn check_schema(&self, schema: &[(&str, &[&str])]) -> Result<(), ConfigError> {
        for (name, sec) in &self.sections {
            let Some((_, keys)) = schema.iter().find(|(s, _)| s == name) else {
                let what = if name.is_empty() { "keys outside any section".to_string() } else { format!("unknown section [{name}]") };
                return Err(self.error(sec.line, what));
            };
            for (k, v) in &sec.entries {
                if !keys.contains(&k.as_str()) {
                    return Err(self.error(v.line, format!("unknown key '{k}' in [{name}]")));
                }
            }
        }
        Ok(())
    }

    pub fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .text
                .parse::<T>()
                .map(Some)
                .map_err(|e| self.error(v.line, format!("{section}.{key} = '{}': {e}", v.text))),
        }
    }

    pub fn parsed_or<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parsed(section, key)?.unwrap_or(default))
    }

    /// Comma-separated list; `None` when the key is absent.
    pub fn list(&self, section: &str, key: &str) -> Option<(Vec<String>, usize)> {
        self.get(section, key).map(|v| {
            let items = v
                .text
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            (items, v.line)
        })
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}
