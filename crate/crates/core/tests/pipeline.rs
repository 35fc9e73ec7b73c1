use micropillar_core::coupling::ModeDegeneracy;
use micropillar_core::efficiency::{design_point, log_grid, optimize, sweep, DesignConfig};
use micropillar_core::loss_budget::{LossBudget, ScatteringModel};
use micropillar_core::multilayer::{
    cavity_mode_length, escape_split, planar_cavity_q, Layer, LayerStack, PlanarCavity,
};
use micropillar_core::photon_mc::{estimate_eta, simulate, ChannelRates};

const LAMBDA: f64 = 950.0;
const GAAS: f64 = 3.5;
const ALAS: f64 = 2.95;

fn cavity(top: usize, bottom: usize) -> PlanarCavity {
    let h = Layer::quarter_wave(GAAS, LAMBDA).unwrap();
    let l = Layer::quarter_wave(ALAS, LAMBDA).unwrap();
    let mut layers = Vec::new();
    for _ in 0..top {
        layers.extend([h, l]);
    }
    layers.push(Layer::lossless(GAAS, LAMBDA / GAAS).unwrap());
    for _ in 0..bottom {
        layers.extend([l, h]);
    }
    PlanarCavity::new(LayerStack::new(1.0, layers, GAAS).unwrap(), 2 * top).unwrap()
}

fn config(c: &PlanarCavity, alpha: f64) -> DesignConfig {
    DesignConfig::from_cavity(
        c,
        LAMBDA,
        1.0,
        ScatteringModel::new(alpha).unwrap(),
        1.0,
        30000.0,
        ModeDegeneracy::Degenerate,
    )
    .unwrap()
}

#[test]
fn stack_to_efficiency() {
    let c = cavity(15, 25);
    let res = planar_cavity_q(c.stack(), (900.0, 1000.0)).unwrap();
    assert!((res.wavelength_nm - LAMBDA).abs() < 0.5);
    let cfg = config(&c, 7.0e-3);
    assert_eq!(cfg.core_index, GAAS);
    assert_eq!(cfg.mode_length_nm, cavity_mode_length(&c, LAMBDA).unwrap());

    let curve = sweep(&log_grid(0.5, 8.0, 40), res.q_2d, &cfg).unwrap();
    for p in &curve.points {
        assert!(p.q_total < p.q_2d);
        assert!(p.eta > 0.0 && p.eta < p.beta);
        assert!(p.eta <= 1.0 - p.q_total / cfg.q_ext);
    }
    let best = curve.points.iter().map(|p| p.eta).fold(0.0, f64::max);
    assert!(best > 0.6 && best < 0.8);
}

#[test]
fn optimizer_beats_every_sweep_point() {
    let c = cavity(15, 25);
    let cfg = config(&c, 7.0e-3);
    let report = optimize(&[1000.0, 3000.0], (0.5, 6.0), &cfg).unwrap();
    for o in &report.per_q_2d {
        let curve = sweep(&log_grid(0.5, 6.0, 30), o.q_2d, &cfg).unwrap();
        assert!(curve.points.iter().all(|p| p.eta <= o.eta + 1e-9));
        assert!(!o.at_boundary);
    }
}

#[test]
fn monte_carlo_sees_the_bottom_mirror() {
    let c = cavity(9, 25);
    let res = planar_cavity_q(c.stack(), (900.0, 1000.0)).unwrap();
    let split = escape_split(&c, res.wavelength_nm).unwrap();
    assert!(split.top > 0.5 && split.top < 1.0);

    let cfg = config(&c, 7.0e-3);
    let p = design_point(2.0, res.q_2d, &cfg).unwrap();
    let budget = LossBudget::from_planar(p.q_2d, cfg.q_ext, p.q_scat).unwrap();
    let rates = ChannelRates::from_budget(p.beta, &budget, split).unwrap();
    // Collected light is the top share of the mirror losses.
    assert!((rates.analytic_eta() - split.top * p.eta).abs() < 1e-12);

    let (eta, se) = estimate_eta(&simulate(&rates, 200_000, 11).unwrap());
    assert!((eta - rates.analytic_eta()).abs() < 5.0 * se);
}
