//! Independent oracles shared by the integration tests.
//!
//! Nothing here goes through the product rule or the log moments of the
//! library: singular integrals are computed by brute-force dyadic grading with
//! a fixed 64-point Gauss-Legendre panel rule.

#![allow(dead_code)]

use cornerbie::geometry::MacroArc;
use cornerbie::quadrature::gauss_legendre;
use cornerbie::{Decomposition, NeumannDatum, Vec2};

/// Dyadic levels used when grading toward a singular endpoint.
const LEVELS: usize = 52;
const PANEL_ORDER: usize = 64;

/// Widest panel; keeps degree-255 polynomials well resolved by the base rule.
const MAX_PANEL: f64 = 1.0 / 32.0;

/// Panels `[len 2^-(j+1), len 2^-j]`, each cut into pieces no wider than
/// `MAX_PANEL`, as `(lo, hi)` offsets from the singular end.
fn dyadic_panels(len: f64) -> Vec<(f64, f64)> {
    let mut panels = Vec::new();
    let mut hi = len;
    for _ in 0..LEVELS {
        let lo = 0.5 * hi;
        let pieces = ((hi - lo) / MAX_PANEL).ceil().max(1.0) as usize;
        let width = (hi - lo) / pieces as f64;
        panels.extend((0..pieces).map(|p| (lo + p as f64 * width, lo + (p + 1) as f64 * width)));
        hi = lo;
    }
    panels
}

/// `int_0^len f(x) dx` for `f` with an integrable singularity at `x = 0`.
fn graded_from_zero<F: Fn(f64) -> f64>(len: f64, f: &F) -> f64 {
    let rule = gauss_legendre(PANEL_ORDER).unwrap();
    dyadic_panels(len)
        .into_iter()
        .map(|(lo, hi)| {
            (hi - lo)
                * rule
                    .iter()
                    .map(|(x, w)| w * f(lo + (hi - lo) * x))
                    .sum::<f64>()
        })
        .sum()
}

/// `int_a^b f` with grading toward both ends; `f` receives the offsets from
/// `a` and from `b` so callers can avoid cancellation near either end.
pub fn graded_both_ends<F: Fn(f64, f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let len = b - a;
    if len <= 0.0 {
        return 0.0;
    }
    let half = 0.5 * len;
    let left = graded_from_zero(half, &|x: f64| f(x, len - x));
    let right = graded_from_zero(half, &|y: f64| f(len - y, y));
    left + right
}

/// `c_nu(s) = int_0^1 p_nu(z) log|z - s| dz` for `nu < count`, with the
/// orthonormal Legendre values from the plain three-term recurrence.
pub fn log_moments_oracle(s: f64, count: usize) -> Vec<f64> {
    let p = |z: f64| -> Vec<f64> {
        let y = 2.0 * z - 1.0;
        let mut out = Vec::with_capacity(count);
        let (mut p0, mut p1) = (1.0, y);
        for n in 0..count {
            let pn = match n {
                0 => 1.0,
                1 => y,
                _ => {
                    let nf = n as f64;
                    let next = ((2.0 * nf - 1.0) * y * p1 - (nf - 1.0) * p0) / nf;
                    p0 = p1;
                    p1 = next;
                    next
                }
            };
            out.push(pn * (2.0 * n as f64 + 1.0).sqrt());
        }
        out
    };
    let mut acc = vec![0.0; count];
    let mut add = |a: f64, b: f64, from_s_left: bool| {
        let rule = gauss_legendre(PANEL_ORDER).unwrap();
        let len = b - a;
        if len <= 0.0 {
            return;
        }
        // Grade toward the end that touches `s`.
        for (lo, hi) in dyadic_panels(len) {
            for (x, w) in rule.iter() {
                let off = lo + (hi - lo) * x;
                let z = if from_s_left { a + off } else { b - off };
                let lg = off.ln();
                for (c, v) in acc.iter_mut().zip(p(z)) {
                    *c += (hi - lo) * w * v * lg;
                }
            }
        }
    };
    add(s, 1.0, true);
    add(0.0, s, false);
    acc
}

/// `g(sigma_l(s)) = sum_k int_0^1 phi_k(t) log|sigma_l(s) - sigma_k(t)| dt`.
///
/// On the arc holding `s` the integral is split at `t = s` and each part is
/// graded toward both of its ends, which also resolves the closed-arc seam of
/// single-corner domains. Other arcs are graded toward both endpoints.
pub fn rhs_oracle(dec: &Decomposition, datum: &NeumannDatum, l: usize, s: f64) -> f64 {
    let boundary = &dec.boundary;
    let arc: &dyn MacroArc = boundary.arcs[l].as_ref();
    let field = arc.position(s);
    let mut total = 0.0;
    for (k, other) in boundary.arcs.iter().enumerate() {
        if k == l {
            continue;
        }
        total += graded_both_ends(0.0, 1.0, |x, _| {
            datum.phi(boundary, k, x) * (field - other.position(x)).norm().ln()
        });
    }
    let phi = |t: f64| datum.phi(boundary, l, t);
    let log_dist = |t0: f64, dt: f64| arc.chord(t0, dt).norm().ln();
    // t in [s, 1]: offsets x from s.
    total += graded_both_ends(s, 1.0, |x, _| phi(s + x) * log_dist(s, x));
    // t in [0, s]: offsets y back from s.
    total += graded_both_ends(0.0, s, |_, y| phi(s - y) * log_dist(s, -y));
    total
}

pub fn v(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

/// Reference rows: `(mu, nu, errors at the four points, cond)`.
pub type RefRow = (usize, usize, [f64; 4], f64);

pub const HEART_REF: [RefRow; 5] = [
    (8, 32, [6.62e-3, 2.35e-5, 4.52e-5, 5.9e-5], 133.5),
    (16, 64, [6.95e-3, 1.89e-4, 1.12e-5, 5.3e-6], 25.86),
    (32, 128, [6.78e-4, 1.81e-5, 1.05e-6, 5.3e-7], 18.37),
    (64, 256, [1.18e-5, 3.19e-7, 1.86e-8, 9.2e-9], 18.32),
    (128, 512, [2.29e-6, 6.10e-8, 3.55e-9, 1.8e-9], 18.32),
];

pub const TEARDROP_REF: [RefRow; 5] = [
    (8, 32, [1.44e-3, 6.39e-4, 1.47e-3, 1.80e-3], 6.67),
    (16, 64, [7.43e-6, 8.81e-6, 4.34e-6, 5.57e-6], 4.49),
    (32, 128, [9.32e-8, 2.54e-7, 1.98e-8, 8.05e-9], 4.16),
    (64, 256, [8.24e-8, 1.03e-8, 8.14e-10, 3.62e-10], 4.16),
    (128, 512, [2.14e-8, 2.92e-9, 2.29e-10, 1.01e-10], 4.17),
];

pub const BOOMERANG_REF: [RefRow; 5] = [
    (8, 32, [7.22e-3, 2.66e-4, 7.41e-6, 3.48e-5], 19.13),
    (16, 64, [3.34e-4, 1.62e-5, 9.59e-7, 4.87e-7], 16.92),
    (32, 128, [8.51e-5, 4.05e-6, 2.39e-7, 1.21e-7], 16.92),
    (64, 256, [1.95e-5, 9.34e-7, 5.54e-8, 2.80e-8], 16.93),
    (128, 512, [4.64e-6, 2.22e-7, 1.31e-8, 6.67e-9], 16.93),
];

pub const TRIANGLE_REF: [RefRow; 5] = [
    (8, 32, [7.11e-4, 1.33e-2, 1.79e-3, 2.93e-4], 166.39),
    (16, 64, [9.83e-4, 2.78e-4, 6.51e-5, 6.70e-6], 66.18),
    (32, 128, [1.41e-4, 7.74e-6, 6.94e-6, 5.27e-7], 20.40),
    (64, 256, [2.18e-6, 3.38e-7, 1.24e-7, 1.12e-8], 9.11),
    (128, 512, [6.93e-9, 1.20e-9, 4.16e-10, 3.90e-11], 8.81),
];

/// `a` and `b` agree within a factor `f` in either direction.
pub fn within_factor(a: f64, b: f64, f: f64) -> bool {
    a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 && a <= f * b && b <= f * a
}
