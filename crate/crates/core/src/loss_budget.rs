//! Quality-factor budget and sidewall scattering.
//!
//! Loss rates add: `1/Q = 1/Q_int + 1/Q_ext + 1/Q_scat`, with
//! `1/Q_2D = 1/Q_int + 1/Q_ext` the planar part. Any partial Q may be
//! `f64::INFINITY` (channel absent).

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::pillar_mode::{solve_fundamental_mode, GuidedMode, PillarGeometry};

fn check_q(name: &str, q: f64) -> Result<()> {
    if q > 0.0 && !q.is_nan() {
        Ok(())
    } else {
        Err(domain(alloc::format!("{name} must be positive or infinite, got {q}")))
    }
}

/// Harmonic combination of partial quality factors.
pub fn harmonic(qs: &[f64]) -> f64 {
    1.0 / qs.iter().map(|q| 1.0 / q).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBudget {
    pub q_int: f64,
    pub q_ext: f64,
    pub q_scat: f64,
    pub q_2d: f64,
    pub q_total: f64,
}

impl LossBudget {
    pub fn compose(q_int: f64, q_ext: f64, q_scat: f64) -> Result<Self> {
        check_q("q_int", q_int)?;
        check_q("q_ext", q_ext)?;
        check_q("q_scat", q_scat)?;
        let q_2d = harmonic(&[q_int, q_ext]);
        Ok(Self {
            q_int,
            q_ext,
            q_scat,
            q_2d,
            q_total: harmonic(&[q_2d, q_scat]),
        })
    }

    /// Budget realising a planar `q_2d` at fixed `q_ext` by choosing `q_int`.
    pub fn from_planar(q_2d: f64, q_ext: f64, q_scat: f64) -> Result<Self> {
        check_q("q_2d", q_2d)?;
        check_q("q_ext", q_ext)?;
        if !q_2d.is_finite() || q_2d >= q_ext {
            return Err(Error::InconsistentBudget(alloc::format!(
                "q_2d = {q_2d} must be finite and below q_ext = {q_ext}"
            )));
        }
        let q_int = 1.0 / (1.0 / q_2d - 1.0 / q_ext);
        let mut b = Self::compose(q_int, q_ext, q_scat)?;
        b.q_2d = q_2d;
        b.q_total = harmonic(&[q_2d, q_scat]);
        Ok(b)
    }

    /// Checks the harmonic relations between the stored fields.
    pub fn validate(&self) -> Result<()> {
        for (name, q) in [
            ("q_int", self.q_int),
            ("q_ext", self.q_ext),
            ("q_scat", self.q_scat),
            ("q_2d", self.q_2d),
            ("q_total", self.q_total),
        ] {
            check_q(name, q)?;
        }
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if !close(1.0 / self.q_2d, 1.0 / self.q_int + 1.0 / self.q_ext) {
            return Err(Error::InconsistentBudget("1/q_2d != 1/q_int + 1/q_ext".into()));
        }
        if !close(1.0 / self.q_total, 1.0 / self.q_2d + 1.0 / self.q_scat) {
            return Err(Error::InconsistentBudget("1/q_total != 1/q_2d + 1/q_scat".into()));
        }
        Ok(())
    }
}

/// Sidewall scattering: `1/Q_scat = alpha * S`, with `S` the sidewall
/// intensity of the unit-power mode (um^-2) and `alpha` in um^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringModel {
    alpha: f64,
}

impl ScatteringModel {
    pub fn new(alpha_um2: f64) -> Result<Self> {
        if !(alpha_um2 >= 0.0) || !alpha_um2.is_finite() {
            return Err(domain("scattering coefficient must be finite and >= 0"));
        }
        Ok(Self { alpha: alpha_um2 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn q_scat_from_intensity(&self, sidewall_intensity: f64) -> f64 {
        let rate = self.alpha * sidewall_intensity;
        if rate > 0.0 {
            1.0 / rate
        } else {
            f64::INFINITY
        }
    }

    pub fn q_scat_of_diameter(&self, mode: &GuidedMode) -> f64 {
        self.q_scat_from_intensity(mode.sidewall_intensity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QMeasurement {
    pub diameter_um: f64,
    pub q: f64,
    pub series: String,
}

impl QMeasurement {
    pub fn new(diameter_um: f64, q: f64, series: impl Into<String>) -> Result<Self> {
        if !(diameter_um > 0.0 && diameter_um.is_finite()) || !(q > 0.0 && q.is_finite()) {
            return Err(domain("measurement needs diameter > 0 and finite q > 0"));
        }
        Ok(Self {
            diameter_um,
            q,
            series: series.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaFit {
    /// Coefficient shared by all series.
    pub alpha: f64,
    /// Separate coefficient per series, only when requested.
    pub per_series: Vec<(String, f64)>,
    /// `1/q_model - 1/q_meas` for each input point, in input order.
    pub residuals: Vec<f64>,
}

/// Least-squares scattering coefficient in `1/Q` space.
///
/// Each point contributes `y = 1/q_meas - 1/q_2d(series)` against
/// `S(d)`, the sidewall intensity of the mode solved on `template` with its
/// diameter replaced. `alpha = sum(S y) / sum(S^2)`, clamped at zero.
pub fn fit_alpha(
    data: &[QMeasurement],
    q_2d: &[(String, f64)],
    template: &PillarGeometry,
    per_series: bool,
) -> Result<AlphaFit> {
    if data.is_empty() {
        return Err(domain("no measurements to fit"));
    }
    let mut rows = Vec::with_capacity(data.len());
    for m in data {
        let planar = q_2d
            .iter()
            .find(|(s, _)| *s == m.series)
            .map(|&(_, q)| q)
            .ok_or_else(|| domain(alloc::format!("series '{}' has no q_2d", m.series)))?;
        check_q("q_2d", planar)?;
        let geom = PillarGeometry {
            diameter_um: m.diameter_um,
            ..*template
        };
        let s = solve_fundamental_mode(&geom)
            .map_err(|e| Error::AtDiameter {
                diameter: m.diameter_um,
                source: alloc::boxed::Box::new(e),
            })?
            .sidewall_intensity;
        rows.push((s, 1.0 / m.q - 1.0 / planar, 1.0 / planar));
    }

    let alpha = solve_scalar(rows.iter().map(|&(s, y, _)| (s, y)))?;
    let mut per = Vec::new();
    if per_series {
        for (label, _) in q_2d {
            let pts: Vec<(f64, f64)> = data
                .iter()
                .zip(&rows)
                .filter(|(m, _)| m.series == *label)
                .map(|(_, &(s, y, _))| (s, y))
                .collect();
            if !pts.is_empty() {
                per.push((label.clone(), solve_scalar(pts.into_iter())?));
            }
        }
    }
    let residuals = data
        .iter()
        .zip(&rows)
        .map(|(m, &(s, _, inv_planar))| inv_planar + alpha * s - 1.0 / m.q)
        .collect();
    Ok(AlphaFit {
        alpha,
        per_series: per,
        residuals,
    })
}

fn solve_scalar(points: impl Iterator<Item = (f64, f64)>) -> Result<f64> {
    let (mut n, mut sxx, mut sxy) = (0usize, 0.0, 0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (s, y) in points {
        n += 1;
        sxx += s * s;
        sxy += s * y;
        lo = lo.min(s);
        hi = hi.max(s);
    }
    if sxx == 0.0 || (n > 1 && hi - lo <= 1e-12 * hi.abs()) {
        return Err(Error::RankDeficient(
            "sidewall intensities are all equal; alpha is not identifiable".into(),
        ));
    }
    Ok((sxy / sxx).max(0.0))
}
