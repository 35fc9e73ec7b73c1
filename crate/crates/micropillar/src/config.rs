//! Run configuration: `key = value` lines, `#` comments.
//!
//! Precedence is command-line override > file > built-in default. Relative
//! paths in a file are resolved against the file's directory; relative paths
//! given on the command line against the working directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use micropillar_core::coupling::ModeDegeneracy;

use crate::FormatError;

/// Built-in defaults. `alpha` is the calibrated scattering coefficient in um^2.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("alpha", "7.0e-3"),
    ("bottom_fraction", ""),
    ("beta", ""),
    ("cladding_index", "1.0"),
    ("core_index", "3.5"),
    ("d_count", "200"),
    ("d_max", "10"),
    ("d_min", "0.3"),
    ("d_scale", "log"),
    ("diameter", "2.0"),
    ("fit_per_series", "false"),
    ("gamma", "1.0"),
    ("measurements", ""),
    ("mode_degeneracy", "degenerate"),
    ("n_photons", "1000000"),
    ("out", ""),
    ("q_2d", "500, 1000, 2000, 5000"),
    ("q_ext", "30000"),
    ("q_total", ""),
    ("search_max_nm", "1000"),
    ("search_min_nm", "900"),
    ("seed", "1"),
    ("spectrum_max_nm", "1050"),
    ("spectrum_min_nm", "850"),
    ("spectrum_points", "801"),
    ("stack", ""),
    ("tau0_ns", "1.0"),
    ("wavelength_nm", "950"),
];

const PATH_KEYS: [&str; 3] = ["stack", "measurements", "out"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSource {
    Value(f64),
    /// Fit to the measurement file before use.
    Fit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub stack: Option<PathBuf>,
    pub wavelength_nm: f64,
    pub core_index: f64,
    pub cladding_index: f64,
    pub gamma: f64,
    pub tau0_ns: f64,
    pub q_ext: f64,
    pub alpha: AlphaSource,
    pub measurements: Option<PathBuf>,
    /// Planar `Q_2D` of each measurement series, from `series.<label>` keys.
    pub series: Vec<(String, f64)>,
    pub fit_per_series: bool,
    pub d_min: f64,
    pub d_max: f64,
    pub d_count: usize,
    pub d_scale: Scale,
    pub q_2d: Vec<f64>,
    pub degeneracy: ModeDegeneracy,
    pub search_window_nm: (f64, f64),
    pub spectrum_nm: (f64, f64),
    pub spectrum_points: usize,
    pub n_photons: u64,
    pub seed: u64,
    /// Design point used by `mc` when no explicit budget is given.
    pub diameter: f64,
    /// Explicit `mc` budget: all of `beta` and `q_total` set, or neither.
    pub beta: Option<f64>,
    pub q_total: Option<f64>,
    pub bottom_fraction: Option<f64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
enum Origin {
    Default,
    File { name: String, line: usize, dir: PathBuf },
    Override,
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: String,
    origin: Origin,
}

/// Configuration text merged with overrides, before typing.
#[derive(Debug, Clone, Default)]
pub struct ConfigSource {
    entries: BTreeMap<String, Entry>,
}

fn known(key: &str) -> bool {
    DEFAULTS.iter().any(|(k, _)| *k == key) || key.strip_prefix("series.").is_some_and(|l| !l.is_empty())
}

impl ConfigSource {
    pub fn parse(text: &str, source_name: &str, dir: &Path) -> Result<Self, FormatError> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(FormatError::new(source_name, line, "expected 'key = value'"));
            };
            let key = key.trim();
            if !known(key) {
                return Err(FormatError::new(source_name, line, format!("unknown key '{key}'")));
            }
            let origin = Origin::File {
                name: source_name.to_string(),
                line,
                dir: dir.to_path_buf(),
            };
            let entry = Entry {
                value: value.trim().to_string(),
                origin,
            };
            if entries.insert(key.to_string(), entry).is_some() {
                return Err(FormatError::new(source_name, line, format!("'{key}' set twice")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        let dir = path.parent().unwrap_or(Path::new(""));
        Ok(Self::parse(&text, &path.display().to_string(), dir)?)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), FormatError> {
        let bad = |m: String| FormatError::new("--set", 0, m);
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| bad(format!("'{assignment}' is not key=value")))?;
        let key = key.trim();
        if !known(key) {
            return Err(bad(format!("unknown key '{key}'")));
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.trim().to_string(),
                origin: Origin::Override,
            },
        );
        Ok(())
    }

    fn get(&self, key: &str) -> Entry {
        self.entries.get(key).cloned().unwrap_or_else(|| Entry {
            value: DEFAULTS
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| v.to_string())
                .unwrap_or_default(),
            origin: Origin::Default,
        })
    }

    fn fail(&self, key: &str, message: impl Into<String>) -> FormatError {
        let message = format!("{key}: {}", message.into());
        match self.get(key).origin {
            Origin::File { name, line, .. } => FormatError::new(&name, line, message),
            Origin::Override => FormatError::new("--set", 0, message),
            Origin::Default => FormatError::new("default", 0, message),
        }
    }

    /// Effective `key = value` pairs in key order, defaults included, unset
    /// optional keys omitted.
    /// Every parameter that affects results, sorted; `out` is left out so the
    /// same run written to two places has identical files.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut keys: Vec<&str> = DEFAULTS.iter().map(|(k, _)| *k).filter(|k| *k != "out").collect();
        keys.extend(
            self.entries
                .keys()
                .map(String::as_str)
                .filter(|k| k.starts_with("series.")),
        );
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter()
            .map(|k| (k.to_string(), self.get(k).value))
            .filter(|(_, v)| !v.is_empty())
            .collect()
    }

    pub fn resolve(&self) -> Result<RunConfig, FormatError> {
        let f = |key: &str| self.float(key);
        let window = |lo: &str, hi: &str| -> Result<(f64, f64), FormatError> {
            let (a, b) = (f(lo)?, f(hi)?);
            if !(a > 0.0 && b > a) {
                return Err(self.fail(hi, format!("needs 0 < {lo} < {hi}")));
            }
            Ok((a, b))
        };
        let alpha = match self.get("alpha").value.as_str() {
            "fit" => AlphaSource::Fit,
            _ => {
                let a = f("alpha")?;
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(self.fail("alpha", "must be finite and >= 0"));
                }
                AlphaSource::Value(a)
            }
        };
        let q_2d = self
            .get("q_2d")
            .value
            .split(',')
            .map(|s| s.trim().parse::<f64>().ok().filter(|q| *q > 0.0 && q.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| self.fail("q_2d", "expected a comma-separated list of positive numbers"))?;
        let series = self
            .entries
            .keys()
            .filter_map(|k| k.strip_prefix("series.").map(|l| (k, l)))
            .map(|(k, label)| Ok((label.to_string(), self.positive(k)?)))
            .collect::<Result<Vec<_>, FormatError>>()?;

        let d_min = self.positive("d_min")?;
        let d_max = self.positive("d_max")?;
        if d_max < d_min {
            return Err(self.fail("d_max", "must be >= d_min"));
        }
        let d_count = self.count("d_count")?;
        if d_count < 2 && d_max > d_min {
            return Err(self.fail("d_count", "a range needs at least 2 points"));
        }
        let cfg = RunConfig {
            stack: self.path("stack"),
            wavelength_nm: self.positive("wavelength_nm")?,
            core_index: self.positive("core_index")?,
            cladding_index: self.positive("cladding_index")?,
            gamma: self.positive("gamma")?,
            tau0_ns: self.positive("tau0_ns")?,
            q_ext: self.positive("q_ext")?,
            alpha,
            measurements: self.path("measurements"),
            series,
            fit_per_series: self.boolean("fit_per_series")?,
            d_min,
            d_max,
            d_count,
            d_scale: match self.get("d_scale").value.as_str() {
                "log" => Scale::Log,
                "linear" => Scale::Linear,
                _ => return Err(self.fail("d_scale", "expected 'log' or 'linear'")),
            },
            q_2d,
            degeneracy: match self.get("mode_degeneracy").value.as_str() {
                "degenerate" => ModeDegeneracy::Degenerate,
                "non-degenerate" => ModeDegeneracy::NonDegenerate,
                _ => return Err(self.fail("mode_degeneracy", "expected 'degenerate' or 'non-degenerate'")),
            },
            search_window_nm: window("search_min_nm", "search_max_nm")?,
            spectrum_nm: window("spectrum_min_nm", "spectrum_max_nm")?,
            spectrum_points: self.count("spectrum_points")?,
            n_photons: self.count("n_photons")? as u64,
            seed: self
                .get("seed")
                .value
                .parse::<u64>()
                .map_err(|_| self.fail("seed", "expected an unsigned 64-bit integer"))?,
            diameter: self.positive("diameter")?,
            beta: self.optional("beta")?,
            q_total: self.optional("q_total")?,
            bottom_fraction: self.optional("bottom_fraction")?,
            out: self.path("out"),
        };
        if cfg.beta.is_some() != cfg.q_total.is_some() {
            return Err(self.fail("beta", "an explicit budget needs both beta and q_total"));
        }
        if cfg.q_total.is_some_and(|q| !(q > 0.0)) {
            return Err(self.fail("q_total", "must be positive"));
        }
        if let Some(b) = cfg.beta {
            if !(0.0..=1.0).contains(&b) {
                return Err(self.fail("beta", "must lie in [0, 1]"));
            }
        }
        if let Some(b) = cfg.bottom_fraction {
            if !(0.0..=1.0).contains(&b) {
                return Err(self.fail("bottom_fraction", "must lie in [0, 1]"));
            }
        }
        Ok(cfg)
    }

    fn float(&self, key: &str) -> Result<f64, FormatError> {
        let v = self.get(key).value;
        v.parse::<f64>()
            .ok()
            .filter(|x| !x.is_nan())
            .ok_or_else(|| self.fail(key, format!("'{v}' is not a number")))
    }

    fn positive(&self, key: &str) -> Result<f64, FormatError> {
        let x = self.float(key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(self.fail(key, "must be positive"))
        }
    }

    fn optional(&self, key: &str) -> Result<Option<f64>, FormatError> {
        if self.get(key).value.is_empty() {
            return Ok(None);
        }
        let x = self.float(key)?;
        if x >= 0.0 {
            Ok(Some(x))
        } else {
            Err(self.fail(key, "must be >= 0"))
        }
    }

    fn count(&self, key: &str) -> Result<usize, FormatError> {
        let x = self.float(key)?;
        if x >= 1.0 && x.fract() == 0.0 && x <= 9.007_199_254_740_992e15 {
            Ok(x as usize)
        } else {
            Err(self.fail(key, "expected a positive integer"))
        }
    }

    fn boolean(&self, key: &str) -> Result<bool, FormatError> {
        match self.get(key).value.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(self.fail(key, "expected 'true' or 'false'")),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        debug_assert!(PATH_KEYS.contains(&key));
        let e = self.get(key);
        if e.value.is_empty() {
            return None;
        }
        let p = PathBuf::from(&e.value);
        Some(match e.origin {
            Origin::File { dir, .. } if p.is_relative() => dir.join(p),
            _ => p,
        })
    }
}

impl RunConfig {
    pub fn diameters(&self) -> Vec<f64> {
        if self.d_max == self.d_min {
            return vec![self.d_min];
        }
        match self.d_scale {
            Scale::Log => micropillar_core::efficiency::log_grid(self.d_min, self.d_max, self.d_count),
            Scale::Linear => {
                let n = self.d_count;
                (0..n)
                    .map(|k| match k {
                        k if k == n - 1 => self.d_max,
                        k => self.d_min + (self.d_max - self.d_min) * k as f64 / (n - 1) as f64,
                    })
                    .collect()
            }
        }
    }
}
