//! One function per CLI command. Each returns the data file contents plus a
//! short human-readable summary; the binary decides where they go.

use std::fmt::Write;

use anyhow::{anyhow, bail, Context, Result};

use micropillar_core::efficiency::{DesignConfig, DesignPoint};
use micropillar_core::loss_budget::{fit_alpha, AlphaFit, LossBudget, ScatteringModel};
use micropillar_core::multilayer::{
    cavity_mode_length, dbr_transmission, escape_split, planar_cavity_q, spectrum, EscapeSplit, LayerStack,
    PlanarCavity,
};
use micropillar_core::photon_mc::{estimate_eta, ChannelRates, RNG_ALGORITHM};
use micropillar_core::pillar_mode::{far_field_divergence, solve_fundamental_mode, PillarGeometry};

use crate::config::{AlphaSource, ConfigSource, RunConfig};
use crate::output::{num, provenance, sha256_hex};
use crate::{measurements, parallel, stack_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dbr,
    CavityQ,
    Mode,
    Fit,
    Sweep,
    Optimize,
    Mc,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dbr => "dbr",
            Command::CavityQ => "cavity-q",
            Command::Mode => "mode",
            Command::Fit => "fit",
            Command::Sweep => "sweep",
            Command::Optimize => "optimize",
            Command::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub data: String,
    pub summary: String,
    pub warnings: Vec<String>,
}

pub fn run(command: Command, source: &ConfigSource) -> Result<Outcome> {
    let cfg = source.resolve()?;
    let mut ctx = Run {
        cfg: &cfg,
        extra: Vec::new(),
    };
    match command {
        Command::Dbr => dbr(&mut ctx),
        Command::CavityQ => cavity_q(&mut ctx),
        Command::Mode => mode(&mut ctx),
        Command::Fit => fit(&mut ctx),
        Command::Sweep => sweep(&mut ctx),
        Command::Optimize => optimize(&mut ctx),
        Command::Mc => mc(&mut ctx),
    }
    .map(|mut o| {
        let mut data = provenance(command.name(), source, &ctx.extra_refs());
        for w in &o.warnings {
            let _ = writeln!(data, "# warning: {w}");
        }
        data.push_str(&o.data);
        o.data = data;
        o
    })
}

struct Run<'a> {
    cfg: &'a RunConfig,
    extra: Vec<(&'static str, String)>,
}

impl Run<'_> {
    fn extra_refs(&self) -> Vec<(&str, String)> {
        self.extra.iter().map(|(k, v)| (*k, v.clone())).collect()
    }

    fn note(&mut self, key: &'static str, value: String) {
        if !self.extra.iter().any(|(k, _)| *k == key) {
            self.extra.push((key, value));
        }
    }

    fn stack(&mut self) -> Result<LayerStack> {
        let path = self
            .cfg
            .stack
            .as_ref()
            .ok_or_else(|| anyhow!("this command needs 'stack = <file>'"))?;
        let bytes = std::fs::read(path).with_context(|| format!("cannot read stack file {}", path.display()))?;
        self.note("stack_sha256", sha256_hex(&bytes));
        stack_file::load(path)
    }

    fn cavity(&mut self) -> Result<PlanarCavity> {
        Ok(PlanarCavity::detect(self.stack()?)?)
    }

    /// Core index and geometry template: the cavity spacer when a stack is
    /// configured, otherwise `core_index`.
    fn template(&mut self) -> Result<PillarGeometry> {
        let core = match self.cfg.stack {
            Some(_) => self.cavity()?.spacer().index().re,
            None => self.cfg.core_index,
        };
        Ok(PillarGeometry::new(
            1.0,
            core,
            self.cfg.cladding_index,
            self.cfg.wavelength_nm,
        )?)
    }

    fn fitted(&mut self) -> Result<(AlphaFit, Vec<measurements::Row>)> {
        let path = self
            .cfg
            .measurements
            .as_ref()
            .ok_or_else(|| anyhow!("fitting needs 'measurements = <file>'"))?;
        let rows = measurements::load(path)?;
        for r in &rows {
            if !self.cfg.series.iter().any(|(s, _)| *s == r.point.series) {
                bail!(
                    "{}:{}: unknown series '{}' (declare it with 'series.{} = <q_2d>')",
                    path.display(),
                    r.line,
                    r.point.series,
                    r.point.series
                );
            }
        }
        let template = self.template()?;
        let points: Vec<_> = rows.iter().map(|r| r.point.clone()).collect();
        let fit = fit_alpha(&points, &self.cfg.series, &template, self.cfg.fit_per_series)?;
        Ok((fit, rows))
    }

    fn alpha(&mut self) -> Result<f64> {
        match self.cfg.alpha {
            AlphaSource::Value(a) => Ok(a),
            AlphaSource::Fit => {
                let (fit, _) = self.fitted()?;
                self.extra.push(("alpha_fitted_um2", num(fit.alpha)));
                Ok(fit.alpha)
            }
        }
    }

    fn design(&mut self) -> Result<DesignConfig> {
        let alpha = self.alpha()?;
        let cavity = self.cavity()?;
        let cfg = self.cfg;
        let design = DesignConfig::from_cavity(
            &cavity,
            cfg.wavelength_nm,
            cfg.cladding_index,
            ScatteringModel::new(alpha)?,
            cfg.gamma,
            cfg.q_ext,
            cfg.degeneracy,
        )?;
        self.note("mode_length_nm", num(design.mode_length_nm));
        self.note("stack_digest", micropillar_core::efficiency::hex(&design.stack_digest));
        Ok(design)
    }
}

fn dbr(ctx: &mut Run) -> Result<Outcome> {
    let stack = ctx.stack()?;
    let cfg = ctx.cfg;
    let (lo, hi) = cfg.spectrum_nm;
    let n = cfg.spectrum_points;
    let grid: Vec<f64> = if n == 1 {
        vec![lo]
    } else {
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    };
    let s = spectrum(&stack, &grid)?;
    let mut data = String::from("wavelength_nm,reflectance,transmittance,phase_rad\n");
    for k in 0..grid.len() {
        let _ = writeln!(
            data,
            "{},{},{},{}",
            num(s.wavelengths[k]),
            num(s.reflectance[k]),
            num(s.transmittance[k]),
            num(s.reflection_phase[k])
        );
    }
    let t = dbr_transmission(&stack, cfg.wavelength_nm)?;
    Ok(Outcome {
        data,
        summary: format!("T({} nm) = {}\n", cfg.wavelength_nm, num(t)),
        warnings: Vec::new(),
    })
}

fn cavity_q(ctx: &mut Run) -> Result<Outcome> {
    let cavity = ctx.cavity()?;
    let cfg = ctx.cfg;
    let res = planar_cavity_q(cavity.stack(), cfg.search_window_nm)?;
    let split = escape_split(&cavity, res.wavelength_nm)?;
    let length = cavity_mode_length(&cavity, cfg.wavelength_nm)?;
    let mut data =
        String::from("resonance_nm,q_2d,fwhm_nm,peak_transmittance,top_fraction,bottom_fraction,mode_length_nm\n");
    let _ = writeln!(
        data,
        "{},{},{},{},{},{},{}",
        num(res.wavelength_nm),
        num(res.q_2d),
        num(res.fwhm_nm),
        num(res.peak_transmittance),
        num(split.top),
        num(split.bottom),
        num(length)
    );
    Ok(Outcome {
        data,
        summary: format!(
            "resonance = {} nm, Q_2D = {}, top escape fraction = {}\n",
            num(res.wavelength_nm),
            num(res.q_2d),
            num(split.top)
        ),
        warnings: Vec::new(),
    })
}

fn mode(ctx: &mut Run) -> Result<Outcome> {
    let template = ctx.template()?;
    let mut data = String::from(
        "diameter_um,u,w,v_number,effective_index,surface_intensity,sidewall_intensity_um2,effective_area_um2,confinement_factor,divergence_deg\n",
    );
    let mut summary = String::new();
    for d in ctx.cfg.diameters() {
        let m = solve_fundamental_mode(&PillarGeometry {
            diameter_um: d,
            ..template
        })
        .with_context(|| format!("mode solve failed at d = {d} um"))?;
        let theta = far_field_divergence(&m);
        let _ = writeln!(
            data,
            "{},{},{},{},{},{},{},{},{},{}",
            num(d),
            num(m.u),
            num(m.w),
            num(m.v_number),
            num(m.effective_index),
            num(m.surface_intensity),
            num(m.sidewall_intensity),
            num(m.effective_area_um2),
            num(m.confinement_factor),
            num(theta)
        );
        summary = format!(
            "d = {} um: n_eff = {}, divergence = {} deg\n",
            num(d),
            num(m.effective_index),
            num(theta)
        );
    }
    Ok(Outcome {
        data,
        summary,
        warnings: Vec::new(),
    })
}

fn fit(ctx: &mut Run) -> Result<Outcome> {
    let (fit, rows) = ctx.fitted()?;
    let template = ctx.template()?;
    let model = ScatteringModel::new(fit.alpha)?;
    let mut summary = format!("alpha = {} um^2\n", num(fit.alpha));
    for (label, a) in &fit.per_series {
        let _ = writeln!(summary, "alpha[{label}] = {} um^2", num(*a));
    }
    let _ = writeln!(summary, "diameter_um,series,q_measured,residual_inv_q");
    for (r, res) in rows.iter().zip(&fit.residuals) {
        let _ = writeln!(
            summary,
            "{},{},{},{}",
            num(r.point.diameter_um),
            r.point.series,
            num(r.point.q),
            num(*res)
        );
    }
    ctx.extra.push(("alpha_um2", num(fit.alpha)));
    let mut data = String::from("diameter_um,series,q_model\n");
    for (label, q2d) in &ctx.cfg.series {
        for d in ctx.cfg.diameters() {
            let m = solve_fundamental_mode(&PillarGeometry {
                diameter_um: d,
                ..template
            })?;
            let q = LossBudget::compose(*q2d, f64::INFINITY, model.q_scat_of_diameter(&m))?.q_total;
            let _ = writeln!(data, "{},{label},{}", num(d), num(q));
        }
    }
    Ok(Outcome {
        data,
        summary,
        warnings: Vec::new(),
    })
}

fn peak(points: &[DesignPoint]) -> &DesignPoint {
    points
        .iter()
        .fold(&points[0], |best, p| if p.eta > best.eta { p } else { best })
}

fn sweep(ctx: &mut Run) -> Result<Outcome> {
    let design = ctx.design()?;
    let grid = ctx.cfg.diameters();
    let mut data = String::new();
    let mut summary = String::new();
    for (k, &q) in ctx.cfg.q_2d.iter().enumerate() {
        let curve = parallel::sweep(&grid, q, &design).with_context(|| format!("sweep for q_2d = {q}"))?;
        if k > 0 {
            data.push('\n');
        }
        let _ = writeln!(data, "# block q_2d = {}", num(q));
        data.push_str("diameter_um,q_total,f_p,beta,eta\n");
        for p in &curve.points {
            let _ = writeln!(
                data,
                "{},{},{},{},{}",
                num(p.diameter_um),
                num(p.q_total),
                num(p.f_p),
                num(p.beta),
                num(p.eta)
            );
        }
        let best = peak(&curve.points);
        let _ = writeln!(
            summary,
            "q_2d = {}: peak eta = {} at d = {} um",
            num(q),
            num(best.eta),
            num(best.diameter_um)
        );
    }
    Ok(Outcome {
        data,
        summary,
        warnings: Vec::new(),
    })
}

fn optimize(ctx: &mut Run) -> Result<Outcome> {
    let design = ctx.design()?;
    let cfg = ctx.cfg;
    let report = parallel::optimize(&cfg.q_2d, (cfg.d_min, cfg.d_max), &design)?;
    let mut data = String::from("q_2d,d_opt_um,eta_opt,at_boundary\n");
    let mut warnings = Vec::new();
    for o in &report.per_q_2d {
        let _ = writeln!(
            data,
            "{},{},{},{}",
            num(o.q_2d),
            num(o.diameter_um),
            num(o.eta),
            o.at_boundary
        );
        if o.at_boundary {
            warnings.push(format!(
                "q_2d = {}: optimum at the edge of the diameter range (d = {} um)",
                num(o.q_2d),
                num(o.diameter_um)
            ));
        }
    }
    let g = report.global();
    let line = format!(
        "global best: q_2d = {}, d = {} um, eta = {}",
        num(g.q_2d),
        num(g.diameter_um),
        num(g.eta)
    );
    let _ = writeln!(data, "# {line}");
    Ok(Outcome {
        data,
        summary: line + "\n",
        warnings,
    })
}

fn mc(ctx: &mut Run) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let q_2d = cfg.q_2d[0];
    let (beta, budget, mut split) = match (cfg.beta, cfg.q_total) {
        (Some(beta), Some(q_total)) => {
            let inv = 1.0 / q_total - 1.0 / q_2d;
            if inv < -1e-12 / q_total {
                bail!("q_total = {q_total} exceeds q_2d = {q_2d}");
            }
            let q_scat = if inv > 0.0 { 1.0 / inv } else { f64::INFINITY };
            let b = LossBudget::from_planar(q_2d, cfg.q_ext, q_scat)?;
            (beta, b, EscapeSplit { top: 1.0, bottom: 0.0 })
        }
        _ => {
            let design = ctx.design()?;
            let p = micropillar_core::efficiency::design_point(cfg.diameter, q_2d, &design)?;
            let cavity = ctx.cavity()?;
            let split = escape_split(&cavity, cfg.wavelength_nm)?;
            (p.beta, LossBudget::from_planar(q_2d, cfg.q_ext, p.q_scat)?, split)
        }
    };
    if let Some(b) = cfg.bottom_fraction {
        split = EscapeSplit {
            top: 1.0 - b,
            bottom: b,
        };
    }
    let rates = ChannelRates::from_budget(beta, &budget, split)?;
    let tally = parallel::simulate(&rates, cfg.n_photons, cfg.seed)?;
    let (eta_hat, se) = estimate_eta(&tally);
    let analytic = rates.analytic_eta();
    let eq3 = micropillar_core::efficiency::efficiency_eq3(beta, budget.q_total, budget.q_2d, budget.q_ext)?;
    ctx.extra.push(("rng", RNG_ALGORITHM.to_string()));
    ctx.extra.push(("seed", tally.seed.to_string()));
    ctx.extra.push(("eta_hat", num(eta_hat)));
    ctx.extra.push(("standard_error", num(se)));
    ctx.extra.push(("eta_analytic", num(analytic)));
    ctx.extra.push(("eta_no_bottom_loss", num(eq3)));
    let mut data = String::from("fate,count\n");
    for (name, count) in tally.fates() {
        let _ = writeln!(data, "{name},{count}");
    }
    Ok(Outcome {
        data,
        summary: format!(
            "eta_hat = {} +- {} (n = {}), analytic eta = {}, without bottom loss = {}\n",
            num(eta_hat),
            num(se),
            tally.total,
            num(analytic),
            num(eq3)
        ),
        warnings: Vec::new(),
    })
}
