//! Line-oriented `key = value` configuration with `#` comments, and the
//! flag > environment > file > default resolution used by the CLI.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{AppError, Result};

/// Parsed config file: keys in file order with their line numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| AppError::config(format!("line {line}: expected `key = value`")))?;
            let key = k.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(AppError::config(format!("line {line}: invalid key `{key}`")));
            }
            if entries.insert(key.to_string(), (v.trim().to_string(), line)).is_some() {
                return Err(AppError::config(format!("line {line}: duplicate key `{key}`")));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            AppError::Config(msg) => AppError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Resolves settings and records every effective value in order.
#[derive(Debug, Default)]
pub struct Settings {
    file: ConfigFile,
    used: Vec<String>,
    echo: Vec<(String, String)>,
}

impl Settings {
    pub fn new(file: ConfigFile) -> Self {
        Settings { file, used: Vec::new(), echo: Vec::new() }
    }

    /// Flag value if given, else the file value, else `default`.
    pub fn value<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(s) => s
                    .parse()
                    .map_err(|e| AppError::config(format!("key `{key}`: cannot parse `{s}`: {e}")))?,
                None => default,
            },
        };
        self.used.push(key.to_string());
        self.echo.push((key.to_string(), v.to_string()));
        Ok(v)
    }

    /// Like [`Settings::value`] without a default.
    pub fn optional<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(s) => Some(s.parse().map_err(|e| {
                    AppError::config(format!("key `{key}`: cannot parse `{s}`: {e}"))
                })?),
                None => None,
            },
        };
        self.used.push(key.to_string());
        if let Some(v) = &v {
            self.echo.push((key.to_string(), v.to_string()));
        }
        Ok(v)
    }

    /// Records a derived value that is not user-settable.
    pub fn note(&mut self, key: &str, value: impl Display) {
        self.echo.push((key.to_string(), value.to_string()));
    }

    /// Fails if the file holds keys no setting consumed.
    pub fn finish(&self) -> Result<()> {
        let unknown: Vec<&str> = self
            .file
            .keys()
            .filter(|k| !self.used.iter().any(|u| u == k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(AppError::config(format!("unknown config keys: {}", unknown.join(", "))))
        }
    }

    pub fn echo(&self) -> &[(String, String)] {
        &self.echo
    }
}

/// A list of numbers written as `a,b,c`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumList<T>(pub Vec<T>);

impl<T: FromStr> FromStr for NumList<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|p| p.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", p.trim())))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(NumList)
    }
}

impl<T: Display> Display for NumList<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// `(n, m)` pairs written as `20x500,50x200`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairList(pub Vec<(usize, usize)>);

impl FromStr for PairList {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|p| {
                let (a, b) = p
                    .trim()
                    .split_once('x')
                    .ok_or_else(|| format!("`{p}` is not of the form NxM"))?;
                Ok((
                    a.parse().map_err(|e| format!("`{a}`: {e}"))?,
                    b.parse().map_err(|e| format!("`{b}`: {e}"))?,
                ))
            })
            .collect::<std::result::Result<Vec<_>, String>>()
            .map(PairList)
    }
}

impl Display for PairList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, (n, m)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}x{m}")?;
        }
        Ok(())
    }
}
