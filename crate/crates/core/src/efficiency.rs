//! Source efficiency, diameter sweeps and the (d, Q_2D) design optimiser.
//!
//! For each diameter: mode -> `Q_scat` -> budget -> `V` -> `F_p` (with the
//! loss-degraded `Q`) -> `beta` -> `eta = beta (Q/Q_2D - Q/Q_ext)`.

use alloc::string::String;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use crate::coupling::{beta, purcell_factor, ModeDegeneracy};
use crate::error::{domain, Error, Result};
use crate::loss_budget::{LossBudget, ScatteringModel};
use crate::multilayer::{cavity_mode_length, LayerStack, PlanarCavity};
use crate::pillar_mode::{effective_mode_volume, solve_fundamental_mode, PillarGeometry};

/// Fraction of photons in the mode that leave through the top mirror,
/// `beta (1/Q_int) / (1/Q)`. The bottom mirror is taken as lossless.
pub fn efficiency_eq2(beta: f64, budget: &LossBudget) -> Result<f64> {
    check_beta(beta)?;
    budget.validate()?;
    Ok(beta * (budget.q_total / budget.q_int).min(1.0))
}

/// `beta (Q/Q_2D - Q/Q_ext)`.
pub fn efficiency_eq3(beta: f64, q_total: f64, q_2d: f64, q_ext: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(q_total > 0.0 && q_total.is_finite()) || !(q_2d > 0.0) || !(q_ext > 0.0) {
        return Err(domain("efficiency needs finite q_total > 0 and positive q_2d, q_ext"));
    }
    if q_total > q_2d * (1.0 + 1e-12) {
        return Err(Error::InconsistentBudget(alloc::format!(
            "q_total = {q_total} exceeds q_2d = {q_2d}"
        )));
    }
    Ok(beta * (q_total / q_2d - q_total / q_ext))
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(domain("beta must lie in [0, 1]"))
    }
}

/// SHA-256 over the indices and thicknesses of a stack.
pub fn stack_digest(stack: &LayerStack) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(stack.ambient_index().to_le_bytes());
    h.update(stack.substrate_index().to_le_bytes());
    for l in stack.layers() {
        h.update(l.index().re.to_le_bytes());
        h.update(l.index().im.to_le_bytes());
        h.update(l.thickness_nm().to_le_bytes());
    }
    h.finalize().into()
}

pub fn hex(bytes: &[u8]) -> String {
    use core::fmt::Write;
    let mut s = String::with_capacity(2 * bytes.len());
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Everything a sweep needs besides the diameters and `Q_2D`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    pub core_index: f64,
    pub cladding_index: f64,
    pub wavelength_nm: f64,
    /// Longitudinal mode length of the planar cavity.
    pub mode_length_nm: f64,
    pub scattering: ScatteringModel,
    pub gamma: f64,
    pub q_ext: f64,
    pub degeneracy: ModeDegeneracy,
    pub stack_digest: [u8; 32],
}

impl DesignConfig {
    /// Core index and mode length are taken from the cavity spacer and mirrors.
    pub fn from_cavity(
        cavity: &PlanarCavity,
        wavelength_nm: f64,
        cladding_index: f64,
        scattering: ScatteringModel,
        gamma: f64,
        q_ext: f64,
        degeneracy: ModeDegeneracy,
    ) -> Result<Self> {
        let cfg = Self {
            core_index: cavity.spacer().index().re,
            cladding_index,
            wavelength_nm,
            mode_length_nm: cavity_mode_length(cavity, wavelength_nm)?,
            scattering,
            gamma,
            q_ext,
            degeneracy,
            stack_digest: stack_digest(cavity.stack()),
        };
        cfg.geometry(1.0)?;
        Ok(cfg)
    }

    pub fn geometry(&self, diameter_um: f64) -> Result<PillarGeometry> {
        PillarGeometry::new(diameter_um, self.core_index, self.cladding_index, self.wavelength_nm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    pub diameter_um: f64,
    pub q_2d: f64,
    pub q_scat: f64,
    pub q_total: f64,
    /// Mode volume in `(lambda/n)^3`.
    pub mode_volume: f64,
    pub f_p: f64,
    pub beta: f64,
    pub eta: f64,
}

pub fn design_point(diameter_um: f64, q_2d: f64, cfg: &DesignConfig) -> Result<DesignPoint> {
    let at = |e: Error| Error::AtDiameter {
        diameter: diameter_um,
        source: alloc::boxed::Box::new(e),
    };
    let mode = solve_fundamental_mode(&cfg.geometry(diameter_um).map_err(at)?).map_err(at)?;
    let q_scat = cfg.scattering.q_scat_of_diameter(&mode);
    let budget = LossBudget::from_planar(q_2d, cfg.q_ext, q_scat).map_err(at)?;
    let volume = effective_mode_volume(&mode, cfg.mode_length_nm).map_err(at)?;
    let f_p = purcell_factor(budget.q_total, volume.cubic_wavelengths).map_err(at)?;
    let b = beta(f_p, cfg.gamma, cfg.degeneracy).map_err(at)?;
    let eta = efficiency_eq3(b, budget.q_total, q_2d, cfg.q_ext).map_err(at)?;
    Ok(DesignPoint {
        diameter_um,
        q_2d,
        q_scat,
        q_total: budget.q_total,
        mode_volume: volume.cubic_wavelengths,
        f_p,
        beta: b,
        eta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub core_index: f64,
    pub cladding_index: f64,
    pub wavelength_nm: f64,
    pub mode_length_nm: f64,
    pub alpha_um2: f64,
    pub gamma: f64,
    pub q_ext: f64,
    pub q_2d: f64,
    pub degeneracy: ModeDegeneracy,
    pub stack_digest: String,
}

impl Provenance {
    pub fn new(cfg: &DesignConfig, q_2d: f64) -> Self {
        Self {
            core_index: cfg.core_index,
            cladding_index: cfg.cladding_index,
            wavelength_nm: cfg.wavelength_nm,
            mode_length_nm: cfg.mode_length_nm,
            alpha_um2: cfg.scattering.alpha(),
            gamma: cfg.gamma,
            q_ext: cfg.q_ext,
            q_2d,
            degeneracy: cfg.degeneracy,
            stack_digest: hex(&cfg.stack_digest),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyCurve {
    pub points: Vec<DesignPoint>,
    pub provenance: Provenance,
}

pub fn check_grid(d_grid: &[f64]) -> Result<()> {
    if d_grid.is_empty() {
        return Err(domain("diameter grid is empty"));
    }
    if d_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("diameter grid must be strictly increasing"));
    }
    Ok(())
}

/// Evaluates every diameter in order; the first failing point aborts.
pub fn sweep(d_grid: &[f64], q_2d: f64, cfg: &DesignConfig) -> Result<EfficiencyCurve> {
    check_grid(d_grid)?;
    let points = d_grid
        .iter()
        .map(|&d| design_point(d, q_2d, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(EfficiencyCurve {
        points,
        provenance: Provenance::new(cfg, q_2d),
    })
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo == hi {
        return alloc::vec![lo];
    }
    let (a, b) = (libm::log(lo), libm::log(hi));
    (0..n)
        .map(|k| match k {
            0 => lo,
            k if k == n - 1 => hi,
            k => libm::exp(a + (b - a) * k as f64 / (n - 1) as f64),
        })
        .collect()
}

pub const COARSE_POINTS: usize = 64;
pub const DIAMETER_RTOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub q_2d: f64,
    pub diameter_um: f64,
    pub eta: f64,
    /// The maximum sits on an edge of the diameter range.
    pub at_boundary: bool,
}

/// Coarse log-grid scan, then golden section inside the bracketing cells.
pub fn optimize_diameter(q_2d: f64, d_range: (f64, f64), cfg: &DesignConfig) -> Result<Optimum> {
    let (lo, hi) = d_range;
    if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
        return Err(domain("diameter range must satisfy 0 < lo <= hi"));
    }
    let eta = |d: f64| design_point(d, q_2d, cfg).map(|p| p.eta);
    if lo == hi {
        return Ok(Optimum {
            q_2d,
            diameter_um: lo,
            eta: eta(lo)?,
            at_boundary: false,
        });
    }
    let grid = log_grid(lo, hi, COARSE_POINTS);
    let values = grid.iter().map(|&d| eta(d)).collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    let last = grid.len() - 1;
    if best == 0 || best == last {
        return Ok(Optimum {
            q_2d,
            diameter_um: grid[best],
            eta: values[best],
            at_boundary: true,
        });
    }
    let (d, e) = golden_max(eta, grid[best - 1], grid[best + 1], DIAMETER_RTOL)?;
    let (diameter_um, eta) = if e >= values[best] {
        (d, e)
    } else {
        (grid[best], values[best])
    };
    Ok(Optimum {
        q_2d,
        diameter_um,
        eta,
        at_boundary: false,
    })
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, rtol: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > rtol * 0.5 * (a + b) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeReport {
    pub per_q_2d: Vec<Optimum>,
    /// Index into `per_q_2d` of the largest efficiency.
    pub best: usize,
}

impl OptimizeReport {
    pub fn from_optima(per_q_2d: Vec<Optimum>) -> Result<Self> {
        if per_q_2d.is_empty() {
            return Err(domain("q_2d list is empty"));
        }
        let mut best = 0;
        for (k, o) in per_q_2d.iter().enumerate() {
            if o.eta > per_q_2d[best].eta {
                best = k;
            }
        }
        Ok(Self { per_q_2d, best })
    }

    pub fn global(&self) -> &Optimum {
        &self.per_q_2d[self.best]
    }
}

pub fn optimize(q_2d_grid: &[f64], d_range: (f64, f64), cfg: &DesignConfig) -> Result<OptimizeReport> {
    let optima = q_2d_grid
        .iter()
        .map(|&q| optimize_diameter(q, d_range, cfg))
        .collect::<Result<Vec<_>>>()?;
    OptimizeReport::from_optima(optima)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss_budget::harmonic;
    use crate::multilayer::{quarter_wave_mirror, Layer};
    use proptest::prelude::*;

    const GAAS: f64 = 3.5;
    const ALAS: f64 = 2.95;
    const LAMBDA: f64 = 950.0;

    fn cavity(top: usize) -> PlanarCavity {
        let t = quarter_wave_mirror(1.0, GAAS, ALAS, top, GAAS, LAMBDA).unwrap();
        let b = quarter_wave_mirror(GAAS, ALAS, GAAS, 25, GAAS, LAMBDA).unwrap();
        let mut layers = t.layers().to_vec();
        layers.push(Layer::lossless(GAAS, LAMBDA / GAAS).unwrap());
        layers.extend_from_slice(b.layers());
        PlanarCavity::detect(LayerStack::new(1.0, layers, GAAS).unwrap()).unwrap()
    }

    fn config(alpha: f64, q_ext: f64) -> DesignConfig {
        DesignConfig::from_cavity(
            &cavity(15),
            LAMBDA,
            1.0,
            ScatteringModel::new(alpha).unwrap(),
            1.0,
            q_ext,
            ModeDegeneracy::Degenerate,
        )
        .unwrap()
    }

    #[test]
    fn worked_efficiencies() {
        let b = LossBudget::compose(2142.9, 30000.0, 10000.0).unwrap();
        let oracle = 1.0 / (1.0 / 2142.9 + 1.0 / 30000.0 + 1.0 / 10000.0);
        assert!((b.q_total / oracle - 1.0).abs() < 1e-14);
        assert!((b.q_total - 1666.7).abs() < 0.1);
        let e2 = efficiency_eq2(0.9, &b).unwrap();
        let direct = 0.9 * (1.0 - b.q_total / 10000.0 - b.q_total / 30000.0);
        assert!((e2 - direct).abs() < 1e-12);
        assert!((e2 - 0.7000).abs() < 5e-5);

        let e3 = efficiency_eq3(0.9, 1500.0, 2000.0, 30000.0).unwrap();
        assert!((e3 - 0.63).abs() < 1e-12);

        let open = LossBudget::compose(1800.0, f64::INFINITY, f64::INFINITY).unwrap();
        assert!((efficiency_eq2(0.8, &open).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(efficiency_eq2(0.0, &b).unwrap(), 0.0);
        let e = efficiency_eq3(0.7, 2000.0, 2000.0, 30000.0).unwrap();
        assert!((e - 0.7 * (1.0 - 2000.0 / 30000.0)).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_budgets_rejected() {
        assert!(matches!(
            efficiency_eq3(0.9, 2500.0, 2000.0, 30000.0),
            Err(Error::InconsistentBudget(_))
        ));
        assert!(efficiency_eq3(1.2, 1500.0, 2000.0, 30000.0).is_err());
        let mut b = LossBudget::compose(2000.0, 30000.0, 5000.0).unwrap();
        b.q_total *= 1.01;
        assert!(efficiency_eq2(0.5, &b).is_err());
    }

    proptest! {
        #[test]
        fn eq2_equals_eq3(
            beta in 0.0f64..1.0,
            li in 1.0f64..5.0,
            le in 2.0f64..7.0,
            ls in 1.0f64..7.0,
            inf_ext in proptest::bool::weighted(0.1),
            inf_scat in proptest::bool::weighted(0.1),
        ) {
            let q_ext = if inf_ext { f64::INFINITY } else { libm::pow(10.0, le) };
            let q_scat = if inf_scat { f64::INFINITY } else { libm::pow(10.0, ls) };
            let b = LossBudget::compose(libm::pow(10.0, li), q_ext, q_scat).unwrap();
            let e2 = efficiency_eq2(beta, &b).unwrap();
            let e3 = efficiency_eq3(beta, b.q_total, b.q_2d, b.q_ext).unwrap();
            prop_assert!((e2 - e3).abs() < 1e-12);
            prop_assert!(e2 <= beta);
            if beta > 0.0 && !(inf_ext && inf_scat) {
                prop_assert!(e2 < beta);
            }
        }
    }

    #[test]
    fn design_point_chain_matches_hand_evaluation() {
        let cfg = config(7e-3, 30000.0);
        let p = design_point(1.7, 2000.0, &cfg).unwrap();
        let mode = solve_fundamental_mode(&cfg.geometry(1.7).unwrap()).unwrap();
        let q_scat = 1.0 / (7e-3 * mode.sidewall_intensity);
        let q = harmonic(&[2000.0, q_scat]);
        let lam_n = LAMBDA * 1e-3 / GAAS;
        let v = mode.effective_area_um2 * cfg.mode_length_nm * 1e-3 / (lam_n * lam_n * lam_n);
        let fp = 3.0 * q / (4.0 * core::f64::consts::PI * core::f64::consts::PI * v);
        let b = fp / (fp + 1.0);
        assert!((p.q_total / q - 1.0).abs() < 1e-12);
        assert!((p.f_p / fp - 1.0).abs() < 1e-12);
        assert!((p.eta - b * (q / 2000.0 - q / 30000.0)).abs() < 1e-12);
        assert!(p.eta <= p.beta && p.beta < 1.0);
    }

    #[test]
    fn mode_length_from_cavity() {
        let cfg = config(7e-3, 30000.0);
        assert!(cfg.mode_length_nm > 450.0 && cfg.mode_length_nm < 550.0);
        assert_eq!(cfg.core_index, GAAS);
    }

    #[test]
    fn lossless_extrinsics_reduce_to_beta() {
        let cfg = config(0.0, f64::INFINITY);
        let curve = sweep(&log_grid(0.5, 8.0, 20), 2000.0, &cfg).unwrap();
        for p in &curve.points {
            assert_eq!(p.eta, p.beta);
        }
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let cfg = config(7e-3, 30000.0);
        assert!(sweep(&[], 2000.0, &cfg).is_err());
        assert!(sweep(&[1.0, 1.0], 2000.0, &cfg).is_err());
        let err = sweep(&[1.0, 2.0], 40000.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::AtDiameter { diameter, .. } if diameter == 1.0));
    }

    #[test]
    fn large_pillars_lose_efficiency() {
        let cfg = config(7e-3, 30000.0);
        assert!(design_point(20.0, 5000.0, &cfg).unwrap().eta < 0.2);
    }

    #[test]
    fn purcell_peak_sits_below_efficiency_peak() {
        let cfg = config(7e-3, 30000.0);
        let curve = sweep(&log_grid(0.3, 10.0, 200), 5000.0, &cfg).unwrap();
        let argmax = |f: &dyn Fn(&DesignPoint) -> f64| {
            curve
                .points
                .iter()
                .max_by(|a, b| f(a).partial_cmp(&f(b)).unwrap())
                .unwrap()
                .diameter_um
        };
        let d_fp = argmax(&|p| p.f_p);
        let d_eta = argmax(&|p| p.eta);
        assert!(d_fp > 0.3 && d_fp < 10.0);
        assert!(d_eta > d_fp);
        let q_half = design_point(0.5, 5000.0, &cfg).unwrap().q_total;
        assert!(q_half < 2500.0);
    }

    #[test]
    fn better_sidewalls_never_hurt() {
        let ds = log_grid(0.4, 8.0, 25);
        let mut last: Option<Vec<f64>> = None;
        for alpha in [2e-2, 1e-2, 7e-3, 3e-3, 1e-3, 0.0] {
            let etas: Vec<f64> = sweep(&ds, 2000.0, &config(alpha, 30000.0))
                .unwrap()
                .points
                .iter()
                .map(|p| p.eta)
                .collect();
            if let Some(prev) = &last {
                assert!(etas.iter().zip(prev).all(|(a, b)| a >= b));
            }
            last = Some(etas);
        }
    }

    #[test]
    fn optimiser_finds_scan_maximum() {
        let cfg = config(7e-3, 30000.0);
        let opt = optimize_diameter(2000.0, (0.5, 6.0), &cfg).unwrap();
        assert!(!opt.at_boundary);
        let fine = sweep(&log_grid(0.5, 6.0, 2000), 2000.0, &cfg).unwrap();
        let scan = fine.points.iter().map(|p| p.eta).fold(0.0, f64::max);
        assert!(opt.eta >= scan - 1e-9);
        assert!((opt.eta - scan).abs() < 1e-6);
    }

    #[test]
    fn optimiser_edge_cases() {
        let cfg = config(7e-3, 30000.0);
        let single = optimize_diameter(2000.0, (1.3, 1.3), &cfg).unwrap();
        assert_eq!(single.diameter_um, 1.3);
        assert_eq!(single.eta, design_point(1.3, 2000.0, &cfg).unwrap().eta);
        let big = optimize_diameter(2000.0, (10.0, 20.0), &cfg).unwrap();
        assert!(big.at_boundary);
        assert_eq!(big.diameter_um, 10.0);
        assert!(optimize(&[], (1.0, 2.0), &cfg).is_err());
        let one = optimize(&[1000.0], (0.5, 6.0), &cfg).unwrap();
        assert_eq!(one.per_q_2d.len(), 1);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.3, 12.0, 64);
        assert_eq!(g.len(), 64);
        assert_eq!((g[0], g[63]), (0.3, 12.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn digest_tracks_stack_contents() {
        assert_eq!(stack_digest(cavity(9).stack()), stack_digest(cavity(9).stack()));
        assert_ne!(stack_digest(cavity(9).stack()), stack_digest(cavity(15).stack()));
        assert_eq!(hex(&[0x0f, 0xa0]), "0fa0");
    }
}
