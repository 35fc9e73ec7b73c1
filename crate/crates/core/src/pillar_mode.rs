//! Scalar fundamental (LP01) mode of a circular dielectric pillar.
//!
//! Inside the core the field is `J0(u r / a)`, outside it is matched to
//! `K0(w r / a)`; `u` solves `u J1(u)/J0(u) = w K1(w)/K0(w)` with
//! `u^2 + w^2 = V^2`. The scalar model ignores the vectorial corrections of
//! the high-contrast HE11 mode; the sidewall scattering coefficient is a fit
//! parameter, which absorbs that bias.

use core::f64::consts::PI;

use libm::{asin, fabs, sqrt};

use crate::error::{domain, Error, Result};
use crate::special::{j0, j1, k0_scaled, k1_over_k0, J0_FIRST_ZERO};

const BRACKET_EPS: f64 = 1e-6;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PillarGeometry {
    pub diameter_um: f64,
    pub core_index: f64,
    pub cladding_index: f64,
    pub wavelength_nm: f64,
}

impl PillarGeometry {
    pub fn new(diameter_um: f64, core_index: f64, cladding_index: f64, wavelength_nm: f64) -> Result<Self> {
        if !(diameter_um > 0.0) || !diameter_um.is_finite() {
            return Err(domain("pillar diameter must be positive"));
        }
        if !(cladding_index >= 1.0) || !(core_index > cladding_index) {
            return Err(domain("need core index > cladding index >= 1"));
        }
        if !(wavelength_nm > 0.0) || !wavelength_nm.is_finite() {
            return Err(domain("wavelength must be positive"));
        }
        Ok(Self {
            diameter_um,
            core_index,
            cladding_index,
            wavelength_nm,
        })
    }

    pub fn radius_um(&self) -> f64 {
        0.5 * self.diameter_um
    }

    pub fn wavelength_um(&self) -> f64 {
        1e-3 * self.wavelength_nm
    }

    pub fn v_number(&self) -> f64 {
        PI * self.diameter_um / self.wavelength_um()
            * sqrt(self.core_index * self.core_index - self.cladding_index * self.cladding_index)
    }

    /// `(lambda / n_core)^3` in cubic micrometres.
    pub fn cubic_wavelength_um3(&self) -> f64 {
        let l = self.wavelength_um() / self.core_index;
        l * l * l
    }
}

/// Solved fundamental mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidedMode {
    pub geometry: PillarGeometry,
    pub u: f64,
    pub w: f64,
    pub v_number: f64,
    pub effective_index: f64,
    /// `I(a) / I(0)`.
    pub surface_intensity: f64,
    /// Intensity at the sidewall of a unit-power mode, `I(a) / (integral I dA)`, in um^-2.
    pub sidewall_intensity: f64,
    /// `(integral I dA) / I_max`, in um^2.
    pub effective_area_um2: f64,
    pub confinement_factor: f64,
}

/// `u J1(u)/J0(u) - w K1(w)/K0(w)`.
pub fn dispersion_residual(u: f64, w: f64) -> f64 {
    u * j1(u) / j0(u) - w * k1_over_k0(w)
}

pub fn solve_fundamental_mode(geom: &PillarGeometry) -> Result<GuidedMode> {
    let v = geom.v_number();
    let g = |u: f64| dispersion_residual(u, sqrt(v * v - u * u));

    let mut lo = BRACKET_EPS;
    let mut hi = if v < J0_FIRST_ZERO { v } else { J0_FIRST_ZERO } - BRACKET_EPS;
    if !(hi > lo) {
        return Err(Error::SolverFailure(alloc::format!("V = {v:.3e} too small to bracket")));
    }
    let (g_lo, g_hi) = (g(lo), g(hi));
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(Error::SolverFailure(alloc::format!(
            "dispersion root not bracketed for V = {v:.6} (g = {g_lo:.3e}, {g_hi:.3e})"
        )));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let u = 0.5 * (lo + hi);
    let w = sqrt(v * v - u * u);
    Ok(assemble(geom, u, w, v))
}

fn assemble(geom: &PillarGeometry, u: f64, w: f64, v: f64) -> GuidedMode {
    let a = geom.radius_um();
    let (j0u, j1u) = (j0(u), j1(u));
    let ratio = k1_over_k0(w);
    let disk = PI * a * a;
    let core = disk * (j0u * j0u + j1u * j1u);
    let cladding = disk * j0u * j0u * (ratio * ratio - 1.0);
    let area = core + cladding;
    let k = 2.0 * PI / geom.wavelength_um();
    let beta_over_k = geom.core_index * geom.core_index - (u / (k * a)) * (u / (k * a));
    GuidedMode {
        geometry: *geom,
        u,
        w,
        v_number: v,
        effective_index: sqrt(beta_over_k),
        surface_intensity: j0u * j0u,
        sidewall_intensity: j0u * j0u / area,
        effective_area_um2: area,
        confinement_factor: core / area,
    }
}

impl GuidedMode {
    /// Field amplitude at radius `r_um`, normalised to 1 on axis.
    pub fn field(&self, r_um: f64) -> f64 {
        let a = self.geometry.radius_um();
        let r = fabs(r_um);
        if r <= a {
            j0(self.u * r / a)
        } else {
            let x = self.w * r / a;
            // J0(u) K0(x)/K0(w), with the exponentials of the scaled K split out.
            j0(self.u) * k0_scaled(x) / k0_scaled(self.w) * libm::exp(self.w - x)
        }
    }

    /// Radius where the field falls to `1/e` of its axial value.
    pub fn field_radius_um(&self) -> f64 {
        let target = 1.0 / core::f64::consts::E;
        let a = self.geometry.radius_um();
        let (mut lo, mut hi) = (0.0, a);
        if self.field(a) > target {
            lo = a;
            hi = 2.0 * a;
            while self.field(hi) > target {
                lo = hi;
                hi *= 2.0;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.field(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Core and cladding power integrals `2 pi integral I r dr` by composite
/// Simpson quadrature with `intervals` subintervals per region.
///
/// The cladding is integrated in `x = w r / a` out to `x = w + 40`.
pub fn radial_power_integrals(mode: &GuidedMode, intervals: usize) -> (f64, f64) {
    let n = intervals.max(2) & !1;
    let a = mode.geometry.radius_um();
    let simpson = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for k in 1..n {
            let x = lo + h * k as f64;
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        s * h / 3.0
    };
    let core = simpson(
        &|r: f64| {
            let e = j0(mode.u * r / a);
            2.0 * PI * e * e * r
        },
        0.0,
        a,
    );
    let w = mode.w;
    let base = k0_scaled(w);
    let j0u = j0(mode.u);
    let cladding = simpson(
        &|x: f64| {
            let e = j0u * k0_scaled(x) / base * libm::exp(w - x);
            2.0 * PI * e * e * x
        },
        w,
        w + 40.0,
    ) * (a / w)
        * (a / w);
    (core, cladding)
}

/// Mode volume in cubic micrometres and in units of `(lambda/n)^3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeVolume {
    pub cubic_um: f64,
    pub cubic_wavelengths: f64,
}

/// `V = A_eff * L_eff` for a longitudinal mode length `length_nm`.
pub fn effective_mode_volume(mode: &GuidedMode, length_nm: f64) -> Result<ModeVolume> {
    if !(length_nm > 0.0) || !length_nm.is_finite() {
        return Err(domain("mode length must be positive"));
    }
    let cubic_um = mode.effective_area_um2 * length_nm * 1e-3;
    Ok(ModeVolume {
        cubic_um,
        cubic_wavelengths: cubic_um / mode.geometry.cubic_wavelength_um3(),
    })
}

/// Gaussian-beam half-angle `asin(lambda / (pi w0))` in degrees; saturates at 90.
pub fn gaussian_divergence_deg(wavelength_um: f64, waist_um: f64) -> f64 {
    let s = wavelength_um / (PI * waist_um);
    if s >= 1.0 {
        90.0
    } else {
        asin(s).to_degrees()
    }
}

/// Far-field half-angle of the emission leaving the pillar top facet.
///
/// Diffraction of the guided field at the top aperture is treated as that of
/// a Gaussian beam whose waist is the mode's `1/e` field radius, with the
/// wavelength taken inside the pillar material.
pub fn far_field_divergence(mode: &GuidedMode) -> f64 {
    let g = &mode.geometry;
    gaussian_divergence_deg(g.wavelength_um() / g.core_index, mode.field_radius_um())
}
