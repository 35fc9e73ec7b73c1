//! Normal-incidence transfer-matrix optics for planar layer stacks.
//!
//! Fields follow the `exp(-i omega t)` convention, so an absorbing layer has
//! a refractive index with a positive imaginary part. A stack is read from
//! the ambient side: `layers[0]` is the layer light meets first.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::fabs;
use num_complex::Complex64;

use crate::error::{domain, Error, Result};

/// One homogeneous dielectric layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    index: Complex64,
    thickness_nm: f64,
}

impl Layer {
    pub fn new(index: Complex64, thickness_nm: f64) -> Result<Self> {
        if !(thickness_nm > 0.0) || !thickness_nm.is_finite() {
            return Err(domain("layer thickness must be positive"));
        }
        if !(index.re >= 1.0) || !(index.im >= 0.0) || !index.im.is_finite() {
            return Err(domain("layer index needs re >= 1 and im >= 0"));
        }
        Ok(Self { index, thickness_nm })
    }

    pub fn lossless(index: f64, thickness_nm: f64) -> Result<Self> {
        Self::new(Complex64::new(index, 0.0), thickness_nm)
    }

    /// Quarter-wave layer at `design_wavelength_nm`.
    pub fn quarter_wave(index: f64, design_wavelength_nm: f64) -> Result<Self> {
        Self::lossless(index, design_wavelength_nm / (4.0 * index))
    }

    pub fn index(&self) -> Complex64 {
        self.index
    }

    pub fn thickness_nm(&self) -> f64 {
        self.thickness_nm
    }

    pub fn optical_thickness_nm(&self) -> f64 {
        self.index.re * self.thickness_nm
    }
}

/// Layers between a semi-infinite ambient and a semi-infinite substrate.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    ambient_index: f64,
    layers: Vec<Layer>,
    substrate_index: f64,
}

impl LayerStack {
    pub fn new(ambient_index: f64, layers: Vec<Layer>, substrate_index: f64) -> Result<Self> {
        if !(ambient_index >= 1.0) || !(substrate_index >= 1.0) {
            return Err(domain("ambient and substrate indices must be >= 1"));
        }
        if !ambient_index.is_finite() || !substrate_index.is_finite() {
            return Err(domain("ambient and substrate indices must be finite"));
        }
        Ok(Self {
            ambient_index,
            layers,
            substrate_index,
        })
    }

    pub fn ambient_index(&self) -> f64 {
        self.ambient_index
    }

    pub fn substrate_index(&self) -> f64 {
        self.substrate_index
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn is_lossless(&self) -> bool {
        self.layers.iter().all(|l| l.index.im == 0.0)
    }

    /// The same structure illuminated from the substrate side.
    pub fn reversed(&self) -> Self {
        let mut layers = self.layers.clone();
        layers.reverse();
        Self {
            ambient_index: self.substrate_index,
            layers,
            substrate_index: self.ambient_index,
        }
    }
}

/// Alternating quarter-wave mirror: `periods` repetitions of `(first, second)`
/// counted from the ambient side.
pub fn quarter_wave_mirror(
    ambient_index: f64,
    first_index: f64,
    second_index: f64,
    periods: usize,
    substrate_index: f64,
    design_wavelength_nm: f64,
) -> Result<LayerStack> {
    let a = Layer::quarter_wave(first_index, design_wavelength_nm)?;
    let b = Layer::quarter_wave(second_index, design_wavelength_nm)?;
    let mut layers = Vec::with_capacity(2 * periods);
    for _ in 0..periods {
        layers.push(a);
        layers.push(b);
    }
    LayerStack::new(ambient_index, layers, substrate_index)
}

/// Complex amplitude response of a stack at one wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub r: Complex64,
    pub t: Complex64,
    ambient_index: f64,
    substrate_index: f64,
}

impl Response {
    pub fn reflectance(&self) -> f64 {
        self.r.norm_sqr()
    }

    pub fn transmittance(&self) -> f64 {
        self.substrate_index / self.ambient_index * self.t.norm_sqr()
    }

    /// Reflection phase in radians, in `(-pi, pi]`.
    pub fn reflection_phase(&self) -> f64 {
        self.r.arg()
    }
}

/// Amplitude reflection and transmission coefficients at normal incidence.
pub fn stack_response(stack: &LayerStack, wavelength_nm: f64) -> Result<Response> {
    if !(wavelength_nm > 0.0) || !wavelength_nm.is_finite() {
        return Err(domain("wavelength must be positive"));
    }
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    // Characteristic matrix product, ambient side first.
    let (mut m11, mut m12, mut m21, mut m22) = (one, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), one);
    for layer in &stack.layers {
        let n = layer.index;
        let delta = n * (2.0 * PI * layer.thickness_nm / wavelength_nm);
        let (c, s) = (delta.cos(), delta.sin());
        let (a11, a12, a21, a22) = (c, -i * s / n, -i * n * s, c);
        let n11 = m11 * a11 + m12 * a21;
        let n12 = m11 * a12 + m12 * a22;
        let n21 = m21 * a11 + m22 * a21;
        let n22 = m21 * a12 + m22 * a22;
        m11 = n11;
        m12 = n12;
        m21 = n21;
        m22 = n22;
    }
    let ns = stack.substrate_index;
    let n0 = stack.ambient_index;
    let b = m11 + m12 * ns;
    let c = m21 + m22 * ns;
    let denom = b * n0 + c;
    Ok(Response {
        r: (b * n0 - c) / denom,
        t: Complex64::new(2.0 * n0, 0.0) / denom,
        ambient_index: n0,
        substrate_index: ns,
    })
}

/// Sampled reflectance, transmittance and reflection phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResponse {
    pub wavelengths: Vec<f64>,
    pub reflectance: Vec<f64>,
    pub transmittance: Vec<f64>,
    pub reflection_phase: Vec<f64>,
}

pub fn spectrum(stack: &LayerStack, wavelengths_nm: &[f64]) -> Result<SpectralResponse> {
    if wavelengths_nm.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("wavelength samples must be strictly increasing"));
    }
    let mut out = SpectralResponse {
        wavelengths: wavelengths_nm.to_vec(),
        reflectance: Vec::with_capacity(wavelengths_nm.len()),
        transmittance: Vec::with_capacity(wavelengths_nm.len()),
        reflection_phase: Vec::with_capacity(wavelengths_nm.len()),
    };
    for &lambda in wavelengths_nm {
        let resp = stack_response(stack, lambda)?;
        out.reflectance.push(resp.reflectance());
        out.transmittance.push(resp.transmittance());
        out.reflection_phase.push(resp.reflection_phase());
    }
    Ok(out)
}

/// Mirror transmittance at its design wavelength.
pub fn dbr_transmission(stack: &LayerStack, center_wavelength_nm: f64) -> Result<f64> {
    Ok(stack_response(stack, center_wavelength_nm)?.transmittance())
}

/// A planar stack with one spacer layer bounded by two mirrors.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarCavity {
    stack: LayerStack,
    spacer: usize,
}

impl PlanarCavity {
    pub fn new(stack: LayerStack, spacer: usize) -> Result<Self> {
        if spacer >= stack.layers.len() {
            return Err(Error::NoCavityLayer);
        }
        Ok(Self { stack, spacer })
    }

    /// Picks the spacer as the unique layer of largest optical thickness.
    pub fn detect(stack: LayerStack) -> Result<Self> {
        let mut best: Option<(usize, f64)> = None;
        let mut tie = false;
        for (k, layer) in stack.layers.iter().enumerate() {
            let ot = layer.optical_thickness_nm();
            match best {
                Some((_, b)) if fabs(ot - b) <= 1e-9 * b => tie = true,
                Some((_, b)) if ot < b => {}
                _ => {
                    best = Some((k, ot));
                    tie = false;
                }
            }
        }
        match best {
            Some((k, _)) if !tie => Self::new(stack, k),
            _ => Err(Error::NoCavityLayer),
        }
    }

    pub fn stack(&self) -> &LayerStack {
        &self.stack
    }

    pub fn spacer(&self) -> &Layer {
        &self.stack.layers[self.spacer]
    }

    pub fn spacer_position(&self) -> usize {
        self.spacer
    }

    /// Top mirror as seen from inside the spacer, exiting into the ambient.
    pub fn top_mirror(&self) -> LayerStack {
        let mut layers = self.stack.layers[..self.spacer].to_vec();
        layers.reverse();
        LayerStack {
            ambient_index: self.spacer().index.re,
            layers,
            substrate_index: self.stack.ambient_index,
        }
    }

    /// Bottom mirror as seen from inside the spacer, exiting into the substrate.
    pub fn bottom_mirror(&self) -> LayerStack {
        LayerStack {
            ambient_index: self.spacer().index.re,
            layers: self.stack.layers[self.spacer + 1..].to_vec(),
            substrate_index: self.stack.substrate_index,
        }
    }
}

/// Located planar resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityResonance {
    pub wavelength_nm: f64,
    pub q_2d: f64,
    pub fwhm_nm: f64,
    pub peak_transmittance: f64,
    pub samples: usize,
}

const INITIAL_SAMPLES: usize = 257;
const MAX_SAMPLES: usize = 1 << 20;
const MIN_SAMPLES_PER_FWHM: f64 = 8.0;
const Q_STABILITY: f64 = 1e-3;

/// Resonance wavelength and `Q_2D = lambda / FWHM` of the transmittance peak
/// inside `window_nm`.
///
/// Sampling density doubles until Q moves by less than 0.1 % between levels
/// and the linewidth spans at least eight samples. Peak position and the
/// half-maximum crossings are refined between samples.
pub fn planar_cavity_q(stack: &LayerStack, window_nm: (f64, f64)) -> Result<CavityResonance> {
    let (lo, hi) = window_nm;
    if !(lo > 0.0) || !(hi > lo) {
        return Err(domain("search window must satisfy 0 < lo < hi"));
    }
    let trans = |l: f64| stack_response(stack, l).map(|r| r.transmittance());

    let mut n = INITIAL_SAMPLES;
    let mut previous: Option<f64> = None;
    loop {
        if n > MAX_SAMPLES {
            return match previous {
                Some(_) => Err(Error::RefinementCap { samples: MAX_SAMPLES }),
                None => Err(Error::ResonanceNotFound { lo, hi }),
            };
        }
        let step = (hi - lo) / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|k| lo + step * k as f64).collect();
        let values = grid.iter().map(|&l| trans(l)).collect::<Result<Vec<_>>>()?;
        let (imax, _) = values.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc },
        );
        if imax == 0 || imax == n - 1 {
            previous = None;
            n = 2 * n - 1;
            continue;
        }

        let (peak, peak_t) = golden_max(&trans, grid[imax - 1], grid[imax + 1])?;
        let half = 0.5 * peak_t;

        let mut left = imax;
        while values[left] > half {
            if left == 0 {
                return Err(Error::WindowTruncated { resonance: peak });
            }
            left -= 1;
        }
        let mut right = imax;
        while values[right] > half {
            if right == n - 1 {
                return Err(Error::WindowTruncated { resonance: peak });
            }
            right += 1;
        }
        let l_cross = bisect_level(&trans, half, grid[left], grid[left + 1])?;
        let r_cross = bisect_level(&trans, half, grid[right - 1], grid[right])?;
        let fwhm = r_cross - l_cross;
        let q = peak / fwhm;

        if let Some(p) = previous {
            if fabs(q - p) <= Q_STABILITY * q && fwhm / step >= MIN_SAMPLES_PER_FWHM {
                return Ok(CavityResonance {
                    wavelength_nm: peak,
                    q_2d: q,
                    fwhm_nm: fwhm,
                    peak_transmittance: peak_t,
                    samples: n,
                });
            }
        }
        previous = Some(q);
        n = 2 * n - 1;
    }
}

fn golden_max(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..200 {
        if b - a <= 1e-13 * b {
            break;
        }
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 > f2 { (x1, f1) } else { (x2, f2) })
}

fn bisect_level(f: &impl Fn(f64) -> Result<f64>, level: f64, mut a: f64, mut b: f64) -> Result<f64> {
    let fa_above = f(a)? > level;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m)? > level) == fa_above {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Fractions of mirror escape through the top and bottom mirrors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscapeSplit {
    pub top: f64,
    pub bottom: f64,
}

pub fn escape_split_from_transmissions(top_t: f64, bottom_t: f64) -> Result<EscapeSplit> {
    if !(top_t >= 0.0) || !(bottom_t >= 0.0) {
        return Err(domain("mirror transmissions must be non-negative"));
    }
    let total = top_t + bottom_t;
    if total == 0.0 {
        return Err(Error::DegenerateCavity);
    }
    let top = top_t / total;
    Ok(EscapeSplit { top, bottom: 1.0 - top })
}

/// Splits the intrinsic (mirror) loss of `cavity` between its two mirrors at
/// `resonance_wavelength_nm`.
pub fn escape_split(cavity: &PlanarCavity, resonance_wavelength_nm: f64) -> Result<EscapeSplit> {
    let top_t = dbr_transmission(&cavity.top_mirror(), resonance_wavelength_nm)?;
    let bottom_t = dbr_transmission(&cavity.bottom_mirror(), resonance_wavelength_nm)?;
    escape_split_from_transmissions(top_t, bottom_t)
}

const MIN_MIRROR_REFLECTANCE: f64 = 0.9;

/// Phase penetration depth of a mirror seen from its ambient (cavity) side.
pub fn phase_penetration_depth(mirror: &LayerStack, center_wavelength_nm: f64) -> Result<f64> {
    let reflectance = stack_response(mirror, center_wavelength_nm)?.reflectance();
    if !(reflectance > MIN_MIRROR_REFLECTANCE) {
        return Err(Error::NotAMirror { reflectance });
    }
    let phase = |l: f64| stack_response(mirror, l).map(|r| r.reflection_phase());
    penetration_depth_from_phase(phase, center_wavelength_nm, mirror.ambient_index)
}

/// `-(lambda^2 / (4 pi n)) dphi/dlambda` by a centred difference whose step
/// is halved until successive estimates agree to three digits.
pub fn penetration_depth_from_phase(
    phase: impl Fn(f64) -> Result<f64>,
    wavelength_nm: f64,
    cavity_index: f64,
) -> Result<f64> {
    if !(wavelength_nm > 0.0) || !(cavity_index > 0.0) {
        return Err(domain("wavelength and cavity index must be positive"));
    }
    let derivative = |h: f64| -> Result<f64> {
        let d = wrap_phase(phase(wavelength_nm + h)? - phase(wavelength_nm - h)?);
        Ok(d / (2.0 * h))
    };
    let mut h = 1e-3 * wavelength_nm;
    let mut last = derivative(h)?;
    let mut converged = false;
    for _ in 0..30 {
        h *= 0.5;
        let next = derivative(h)?;
        let agree = fabs(next - last) <= 1e-4 * fabs(next) || fabs(next - last) < 1e-15;
        last = next;
        if agree {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(domain("reflection phase derivative did not stabilise"));
    }
    Ok(-wavelength_nm * wavelength_nm / (4.0 * PI * cavity_index) * last)
}

fn wrap_phase(mut d: f64) -> f64 {
    while d > PI {
        d -= 2.0 * PI;
    }
    while d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Longitudinal mode length `(L_spacer + L_pen,top + L_pen,bottom) / 2`.
///
/// The factor one half is the standing-wave average of `n^2 |E|^2` against
/// its antinode value, so that `A_eff * L` is a Purcell-convention volume.
pub fn cavity_mode_length(cavity: &PlanarCavity, wavelength_nm: f64) -> Result<f64> {
    let top = phase_penetration_depth(&cavity.top_mirror(), wavelength_nm)?;
    let bottom = phase_penetration_depth(&cavity.bottom_mirror(), wavelength_nm)?;
    Ok(0.5 * (cavity.spacer().thickness_nm + top + bottom))
}

/// Fresnel reflectance of a bare interface at normal incidence.
pub fn fresnel_reflectance(n1: f64, n2: f64) -> f64 {
    let r = (n1 - n2) / (n1 + n2);
    r * r
}
