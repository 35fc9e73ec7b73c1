//! Integer-order Bessel functions J0, J1, K0, K1 for real positive arguments.
//!
//! J is evaluated by its power series for small arguments and by Miller's
//! backward recurrence otherwise; K by its logarithmic series for `x <= 2`
//! and Steed's continued fraction (Temme's CF2) above. The `*_scaled`
//! variants return `exp(x) * K(x)` so that large cladding parameters do not
//! underflow.

use libm::{exp, fabs, log, sqrt};

/// First positive zero of J0.
pub const J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 4.0;
const EPS: f64 = 1e-17;

/// Bessel function of the first kind, order 0.
pub fn j0(x: f64) -> f64 {
    let x = fabs(x);
    if x <= SERIES_LIMIT {
        j_series(x, 0)
    } else {
        miller(x).0
    }
}

/// Bessel function of the first kind, order 1.
pub fn j1(x: f64) -> f64 {
    let ax = fabs(x);
    let v = if ax <= SERIES_LIMIT {
        j_series(ax, 1)
    } else {
        miller(ax).1
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// Modified Bessel function of the second kind, order 0, for `x > 0`.
pub fn k0(x: f64) -> f64 {
    k0_scaled(x) * exp(-x)
}

/// Modified Bessel function of the second kind, order 1, for `x > 0`.
pub fn k1(x: f64) -> f64 {
    k1_scaled(x) * exp(-x)
}

/// `exp(x) * K0(x)`.
pub fn k0_scaled(x: f64) -> f64 {
    k_pair_scaled(x).0
}

/// `exp(x) * K1(x)`.
pub fn k1_scaled(x: f64) -> f64 {
    k_pair_scaled(x).1
}

/// Ratio `K1(x) / K0(x)`, free of overflow and underflow for any `x > 0`.
pub fn k1_over_k0(x: f64) -> f64 {
    let (a, b) = k_pair_scaled(x);
    b / a
}

fn j_series(x: f64, order: u32) -> f64 {
    let q = -0.25 * x * x;
    let (mut term, offset) = if order == 0 { (1.0, 0.0) } else { (0.5 * x, 1.0) };
    let mut sum = term;
    let mut k = 1.0;
    while fabs(term) > EPS * fabs(sum) {
        term *= q / (k * (k + offset));
        sum += term;
        k += 1.0;
    }
    sum
}

/// Miller's backward recurrence normalised by `J0 + 2 * sum J_2k = 1`.
fn miller(x: f64) -> (f64, f64) {
    let start = {
        let n = x as usize + 30 + sqrt(60.0 * x) as usize;
        n + (n & 1)
    };
    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    let mut j0 = 0.0;
    let mut j1 = 0.0;
    for k in (1..=start).rev() {
        let prev = (k as f64) * two_over_x * cur - next;
        next = cur;
        cur = prev;
        // cur = J_{k-1}
        if fabs(cur) > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * cur;
        }
        if k == 1 {
            j0 = cur;
            j1 = next;
        }
    }
    norm += j0;
    (j0 / norm, j1 / norm)
}

fn i_series(x: f64, order: u32) -> f64 {
    let q = 0.25 * x * x;
    let (mut term, offset) = if order == 0 { (1.0, 0.0) } else { (0.5 * x, 1.0) };
    let mut sum = term;
    let mut k = 1.0;
    while term > EPS * sum {
        term *= q / (k * (k + offset));
        sum += term;
        k += 1.0;
    }
    sum
}

/// `(exp(x) K0(x), exp(x) K1(x))`.
fn k_pair_scaled(x: f64) -> (f64, f64) {
    assert!(x > 0.0, "K is defined for positive arguments");
    if x <= 2.0 {
        let q = 0.25 * x * x;
        let lg = log(0.5 * x);
        // K0 = -(ln(x/2) + gamma) I0 + sum q^k/(k!)^2 H_k
        let mut term = 1.0;
        let mut harmonic = 0.0;
        let mut s0 = 0.0;
        // K1 tail: sum (psi(k+1) + psi(k+2)) q^k / (k! (k+1)!)
        let mut term1 = 1.0;
        let mut s1 = 0.0;
        let mut k = 0.0;
        loop {
            let psi_k1 = -EULER_GAMMA + harmonic;
            let psi_k2 = psi_k1 + 1.0 / (k + 1.0);
            let add1 = term1 * (psi_k1 + psi_k2);
            s1 += add1;
            k += 1.0;
            term *= q / (k * k);
            harmonic += 1.0 / k;
            let add0 = term * harmonic;
            s0 += add0;
            term1 *= q / (k * (k + 1.0));
            if fabs(add0) < EPS * fabs(s0) && fabs(add1) < EPS * fabs(s1) {
                break;
            }
        }
        let k0 = -(lg + EULER_GAMMA) * i_series(x, 0) + s0;
        let k1 = 1.0 / x + lg * i_series(x, 1) - 0.25 * x * s1;
        let e = exp(x);
        (k0 * e, k1 * e)
    } else {
        // Steed's algorithm for CF2, order 0.
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 1..100_000 {
            let fi = i as f64;
            a -= 2.0 * fi;
            c = -a * c / (fi + 1.0);
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if fabs(dels / s) < EPS {
                break;
            }
        }
        h *= a1;
        let k0 = sqrt(core::f64::consts::PI / (2.0 * x)) / s;
        let k1 = k0 * (x + 0.5 - h) / x;
        (k0, k1)
    }
}
