//! `key = value` run configuration, merged under command-line flags.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use porous_renewal::Error;

/// Keys accepted in a config file; `-` and `_` are interchangeable.
pub const KEYS: &[&str] = &[
    "beta",
    "mu",
    "theta_deg",
    "h",
    "n",
    "seed",
    "workers",
    "epsilon",
    "out",
    "bed_radius",
    "bed_vf",
    "bed_width",
    "bed_depth",
];

#[derive(Debug, Default, Clone, PartialEq)]
pub struct ConfigFile {
    values: HashMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut values = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `key = value`, got {content:?}"),
                });
            };
            let key = k.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key {:?}", k.trim()),
                });
            }
            let value = v.trim();
            if value.is_empty() {
                return Err(Error::Parse {
                    line,
                    msg: format!("missing value for {key}"),
                });
            }
            values.insert(key, (value.to_string(), line));
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Typed value for `key`; parse failures cite the line.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Error> {
        match self.values.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| Error::Parse {
                line: *line,
                msg: format!("invalid value {v:?} for {key}"),
            }),
        }
    }
}

/// Resolved parameters shared by all commands.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub beta: Option<f64>,
    pub mu: Option<f64>,
    pub theta_deg: f64,
    pub h: Option<f64>,
    pub n: Option<u64>,
    pub seed: Option<u64>,
    pub workers: usize,
    pub epsilon: Option<f64>,
    pub out: Option<PathBuf>,
    pub bed_radius: f64,
    pub bed_vf: f64,
    pub bed_width: Option<f64>,
    pub bed_depth: Option<f64>,
}

impl RunConfig {
    pub fn theta(&self) -> f64 {
        self.theta_deg.to_radians()
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(0.0..90.0).contains(&self.theta_deg) {
            return Err(Error::InvalidParameter(format!(
                "theta-deg must lie in [0, 90), got {}",
                self.theta_deg
            )));
        }
        if self.n == Some(0) {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParameter("workers must be >= 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_dashes() {
        let c = ConfigFile::parse("# run\nbeta = 0.5  # trailing\ntheta-deg=30\n\n").unwrap();
        assert_eq!(c.get::<f64>("beta").unwrap(), Some(0.5));
        assert_eq!(c.get::<f64>("theta_deg").unwrap(), Some(30.0));
        assert_eq!(c.get::<f64>("mu").unwrap(), None);
    }

    #[test]
    fn errors_cite_lines() {
        assert_eq!(
            ConfigFile::parse("beta = 1\nnonsense\n"),
            Err(Error::Parse {
                line: 2,
                msg: "expected `key = value`, got \"nonsense\"".into()
            })
        );
        assert!(matches!(ConfigFile::parse("\n\ncolour = red"), Err(Error::Parse { line: 3, .. })));
        let c = ConfigFile::parse("mu = 1\nn = ten\n").unwrap();
        assert!(matches!(c.get::<u64>("n"), Err(Error::Parse { line: 2, .. })));
    }
}
