//! `key=value` config files layered under command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use oddcycle_core::GameSize;

#[derive(Debug)]
pub enum CliError {
    /// Bad input; nothing was run.
    Validation(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn field(name: &str, msg: impl Display) -> Self {
        CliError::Validation(format!("--{name}: {msg}"))
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Default)]
pub struct Layer {
    file: BTreeMap<String, String>,
}

impl Layer {
    /// Reads `path` if given. Keys may use `-` or `_`; blank lines and `#`
    /// comments are skipped. Keys outside `allowed` are rejected.
    pub fn load(path: Option<&Path>, allowed: &[&str]) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Layer::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::field("config", format!("{}: {e}", path.display())))?;
        let mut file = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::field(
                    "config",
                    format!("{}:{}: expected key=value", path.display(), i + 1),
                ));
            };
            let key = k.trim().replace('_', "-");
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::field(
                    "config",
                    format!("{}:{}: unknown key `{key}`", path.display(), i + 1),
                ));
            }
            file.insert(key, v.trim().to_string());
        }
        Ok(Layer { file })
    }

    /// The flag if given, else the file value.
    pub fn pick<T>(&self, key: &str, flag: Option<T>) -> CliResult<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::field(key, format!("`{v}`: {e}"))))
            .transpose()
    }

    pub fn flag(&self, key: &str, flag: bool) -> CliResult<bool> {
        if flag {
            return Ok(true);
        }
        Ok(self.pick::<bool>(key, None)?.unwrap_or(false))
    }
}

pub fn game_size(key: &str, n: u32) -> CliResult<GameSize> {
    GameSize::new(n).map_err(|_| CliError::field(key, format!("{n} is invalid, n must be odd and at least 3")))
}

pub fn rounds(r: Option<i64>) -> CliResult<u64> {
    match r {
        None => Ok(100_000),
        Some(r) if r < 0 => Err(CliError::field("rounds", format!("{r} is negative"))),
        Some(r) => Ok(r as u64),
    }
}

/// `LO..HI` (inclusive) or `LO..=HI`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NRange {
    pub lo: u32,
    pub hi: u32,
}

impl FromStr for NRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s
            .split_once("..=")
            .or_else(|| s.split_once(".."))
            .ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
        let parse = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("`{v}`: {e}"));
        Ok(NRange {
            lo: parse(lo)?,
            hi: parse(hi)?,
        })
    }
}

/// Sizes from a list of `--n` values or a range; every value must be odd.
pub fn sizes(list: &[u32], range: Option<NRange>, default: NRange) -> CliResult<Vec<GameSize>> {
    if !list.is_empty() && range.is_some() {
        return Err(CliError::field("n-range", "give either --n or --n-range, not both"));
    }
    if !list.is_empty() {
        return list.iter().map(|&n| game_size("n", n)).collect();
    }
    let r = range.unwrap_or(default);
    game_size("n-range", r.lo)?;
    game_size("n-range", r.hi)?;
    if r.lo > r.hi {
        return Err(CliError::field("n-range", format!("{}..{} is empty", r.lo, r.hi)));
    }
    Ok(GameSize::odd_range(r.lo, r.hi).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn file_values_yield_to_flags() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# run\nrounds = 500\ntarget_ratio=0.9\n").unwrap();
        let layer = Layer::load(Some(f.path()), &["rounds", "target-ratio"]).unwrap();
        assert_eq!(layer.pick::<i64>("rounds", None).unwrap(), Some(500));
        assert_eq!(layer.pick("rounds", Some(7i64)).unwrap(), Some(7));
        assert_eq!(layer.pick::<f64>("target-ratio", None).unwrap(), Some(0.9));
        assert_eq!(layer.pick::<u64>("seed", None).unwrap(), None);
    }

    #[test]
    fn unknown_and_malformed_keys_are_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "colour=red").unwrap();
        assert!(Layer::load(Some(f.path()), &["rounds"]).is_err());
        let mut g = tempfile::NamedTempFile::new().unwrap();
        writeln!(g, "rounds").unwrap();
        assert!(Layer::load(Some(g.path()), &["rounds"]).is_err());
        let mut h = tempfile::NamedTempFile::new().unwrap();
        writeln!(h, "rounds=lots").unwrap();
        let layer = Layer::load(Some(h.path()), &["rounds"]).unwrap();
        assert!(layer.pick::<i64>("rounds", None).is_err());
    }

    #[test]
    fn ranges() {
        assert_eq!("3..27".parse::<NRange>().unwrap(), NRange { lo: 3, hi: 27 });
        assert_eq!("3..=9".parse::<NRange>().unwrap(), NRange { lo: 3, hi: 9 });
        let d = NRange { lo: 3, hi: 13 };
        assert_eq!(sizes(&[], None, d).unwrap().len(), 6);
        assert!(sizes(&[4], None, d).is_err());
        assert!(sizes(&[], Some(NRange { lo: 3, hi: 8 }), d).is_err());
        assert!(rounds(Some(-1)).is_err());
    }
}
