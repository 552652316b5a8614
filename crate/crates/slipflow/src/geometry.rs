//! Analytic geometry helpers: wall profiles of the distorted strip, the
//! compactly supported bump, the quintic smoothstep, and plane-curve
//! curvature formulas.
//!
//! Orientation conventions. Boundary frames carry the outward unit normal `n`
//! and the tangent `tau` obtained by rotating `n` by +90 degrees
//! (tau = (-n2, n1)). The signed curvature is kappa = dn/ds . tau with
//! arclength s oriented along tau, so the unit circle with outward normal has
//! kappa = +1 and a flat wall has kappa = 0.

use serde::{Deserialize, Serialize};

/// Wall of a distorted strip, given as a graph x1 = b(x2).
///
/// The bump term is `amplitude * exp(-1/(1 - (x2/half_width)^2))` for
/// |x2| < half_width and identically zero outside, so walls are exactly
/// straight beyond the bump support.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct WallProfile {
    pub base: f64,
    #[serde(default)]
    pub bump_amplitude: f64,
    #[serde(default = "default_half_width")]
    pub bump_half_width: f64,
}

fn default_half_width() -> f64 {
    1.0
}

impl WallProfile {
    pub fn flat(base: f64) -> Self {
        WallProfile {
            base,
            bump_amplitude: 0.0,
            bump_half_width: 1.0,
        }
    }

    pub fn bump(base: f64, amplitude: f64, half_width: f64) -> Self {
        WallProfile {
            base,
            bump_amplitude: amplitude,
            bump_half_width: half_width,
        }
    }

    pub fn is_flat(&self) -> bool {
        self.bump_amplitude == 0.0
    }

    /// Largest |x2| with a non-straight wall (0 for flat walls).
    pub fn distortion_extent(&self) -> f64 {
        if self.is_flat() {
            0.0
        } else {
            self.bump_half_width
        }
    }

    pub fn value(&self, x2: f64) -> f64 {
        self.base + self.bump_amplitude * mollifier(x2 / self.bump_half_width)
    }

    pub fn deriv(&self, x2: f64) -> f64 {
        self.bump_amplitude * mollifier_d1(x2 / self.bump_half_width) / self.bump_half_width
    }

    pub fn deriv2(&self, x2: f64) -> f64 {
        self.bump_amplitude * mollifier_d2(x2 / self.bump_half_width)
            / (self.bump_half_width * self.bump_half_width)
    }
}

/// The standard compactly supported mollifier exp(-1/(1-t^2)) on |t| < 1.
pub fn mollifier(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

pub fn mollifier_d1(t: f64) -> f64 {
    if t.abs() < 1.0 {
        let s = 1.0 - t * t;
        mollifier(t) * (-2.0 * t / (s * s))
    } else {
        0.0
    }
}

pub fn mollifier_d2(t: f64) -> f64 {
    if t.abs() < 1.0 {
        let s = 1.0 - t * t;
        // d/dt [ -2t / s^2 ] = (-2 s^2 - (-2t) 2 s (-2t)) / s^4 = (-2s - 8t^2)/s^3
        let g = -2.0 * t / (s * s);
        let gp = (-2.0 * s - 8.0 * t * t) / (s * s * s);
        mollifier(t) * (g * g + gp)
    } else {
        0.0
    }
}

/// Int_{-1}^{1} exp(-1/(1-t^2)) dt, frozen from a converged composite
/// 16-point Gauss evaluation (see quadrature tests).
pub const MOLLIFIER_MASS: f64 = 0.44399381616807944;

/// Quintic smoothstep: 0 at t<=0, 1 at t>=1, C^2 across the endpoints.
pub fn smoothstep5(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

pub fn smoothstep5_d1(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

pub fn smoothstep5_d2(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
    }
}

/// Antiderivative int_0^t smoothstep5, needed for the pressure balance term.
pub fn smoothstep5_integral(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        t - 0.5
    } else {
        // int 10 t^3 - 15 t^4 + 6 t^5
        t * t * t * t * (2.5 + t * (-3.0 + t))
    }
}

/// Signed curvature of a graph wall x1 = b(x2) with the convention above.
///
/// For the upper wall (outward normal pointing towards +x1) this evaluates to
/// -b'' / (1 + b'^2)^{3/2}; the lower wall flips sign.
pub fn graph_wall_curvature(b1: f64, b2: f64, upper: bool) -> f64 {
    let k = -b2 / (1.0 + b1 * b1).powf(1.5);
    if upper {
        k
    } else {
        -k
    }
}

/// Outward normal and tangent of a graph wall.
pub fn graph_wall_frame(b1: f64, upper: bool) -> ([f64; 2], [f64; 2]) {
    let len = (1.0 + b1 * b1).sqrt();
    let n = if upper {
        [1.0 / len, -b1 / len]
    } else {
        [-1.0 / len, b1 / len]
    };
    let tau = [-n[1], n[0]];
    (n, tau)
}

/// Signed curvature of a polar curve r(theta) with outward normal, same
/// convention as the circle (kappa = 1/r for r const).
pub fn polar_curvature(r: f64, r1: f64, r2: f64) -> f64 {
    (r * r + 2.0 * r1 * r1 - r * r2) / (r * r + r1 * r1).powf(1.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mollifier_derivatives_match_finite_differences() {
        let h = 1e-6;
        for &t in &[-0.9, -0.5, 0.0, 0.3, 0.77] {
            let d1 = (mollifier(t + h) - mollifier(t - h)) / (2.0 * h);
            let d2 = (mollifier(t + h) - 2.0 * mollifier(t) + mollifier(t - h)) / (h * h);
            assert!((d1 - mollifier_d1(t)).abs() < 1e-6, "d1 at {t}");
            assert!((d2 - mollifier_d2(t)).abs() < 2e-4, "d2 at {t}");
        }
    }

    #[test]
    fn smoothstep_is_c2_at_knots() {
        for f in [smoothstep5, smoothstep5_d1, smoothstep5_d2] {
            assert!((f(1e-12) - f(-1e-12)).abs() < 1e-9);
            assert!((f(1.0 + 1e-12) - f(1.0 - 1e-12)).abs() < 1e-9);
        }
        assert_eq!(smoothstep5(0.5), 0.5);
        assert!((smoothstep5_integral(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn circle_curvature_from_polar_formula() {
        assert!((polar_curvature(2.0, 0.0, 0.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn flat_wall_frame_and_curvature() {
        let w = WallProfile::flat(1.0);
        assert_eq!(w.value(0.3), 1.0);
        assert_eq!(w.deriv(0.3), 0.0);
        let (n, tau) = graph_wall_frame(0.0, true);
        assert_eq!(n, [1.0, 0.0]);
        assert_eq!(tau, [0.0, 1.0]);
        assert_eq!(graph_wall_curvature(0.0, 0.0, true), 0.0);
    }

    #[test]
    fn bump_wall_curvature_matches_closed_form_at_crest() {
        // At the crest b' = 0, so |kappa| = |b''|.
        let w = WallProfile::bump(1.0, 0.3, 2.0);
        let b2 = w.deriv2(0.0);
        let k = graph_wall_curvature(w.deriv(0.0), b2, true);
        assert!((k + b2 / (1.0f64).powf(1.5)).abs() < 1e-14);
        // outward-bulging upper wall curves like the circle: kappa > 0
        assert!(k > 0.0);
    }
}
