//! Lagrange shape functions on reference cells.
//!
//! Local node ordering is lexicographic with xi running fastest:
//! a Q2 quad has nodes (i, j) with i, j in {0, 1, 2} at reference positions
//! xi, eta in {-1, 0, 1}, stored as local index 3j + i. Q1 uses the four
//! corners. 1D cells work the same way with 3 (quadratic) or 2 (linear) nodes.

/// Corner positions of a Q2 quad inside its 9-node lexicographic layout.
pub const Q2_CORNERS: [usize; 4] = [0, 2, 6, 8];

/// Corner positions of a quadratic 1D cell inside its 3-node layout.
pub const LINE3_CORNERS: [usize; 2] = [0, 2];

#[inline]
fn lag1d_quadratic(x: f64) -> [f64; 3] {
    [0.5 * x * (x - 1.0), 1.0 - x * x, 0.5 * x * (x + 1.0)]
}

#[inline]
fn lag1d_quadratic_deriv(x: f64) -> [f64; 3] {
    [x - 0.5, -2.0 * x, x + 0.5]
}

#[inline]
fn lag1d_linear(x: f64) -> [f64; 2] {
    [0.5 * (1.0 - x), 0.5 * (1.0 + x)]
}

#[inline]
fn lag1d_linear_deriv() -> [f64; 2] {
    [-0.5, 0.5]
}

/// Values of the 9 biquadratic basis functions at (xi, eta).
pub fn q2_values(xi: f64, eta: f64) -> [f64; 9] {
    let a = lag1d_quadratic(xi);
    let b = lag1d_quadratic(eta);
    let mut out = [0.0; 9];
    for j in 0..3 {
        for i in 0..3 {
            out[3 * j + i] = a[i] * b[j];
        }
    }
    out
}

/// Reference gradients (d/dxi, d/deta) of the 9 biquadratic basis functions.
pub fn q2_gradients(xi: f64, eta: f64) -> [[f64; 2]; 9] {
    let a = lag1d_quadratic(xi);
    let da = lag1d_quadratic_deriv(xi);
    let b = lag1d_quadratic(eta);
    let db = lag1d_quadratic_deriv(eta);
    let mut out = [[0.0; 2]; 9];
    for j in 0..3 {
        for i in 0..3 {
            out[3 * j + i] = [da[i] * b[j], a[i] * db[j]];
        }
    }
    out
}

/// Values of the 4 bilinear basis functions at (xi, eta).
pub fn q1_values(xi: f64, eta: f64) -> [f64; 4] {
    let a = lag1d_linear(xi);
    let b = lag1d_linear(eta);
    let mut out = [0.0; 4];
    for j in 0..2 {
        for i in 0..2 {
            out[2 * j + i] = a[i] * b[j];
        }
    }
    out
}

/// Reference gradients of the 4 bilinear basis functions.
pub fn q1_gradients(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    let a = lag1d_linear(xi);
    let da = lag1d_linear_deriv();
    let b = lag1d_linear(eta);
    let db = lag1d_linear_deriv();
    let mut out = [[0.0; 2]; 4];
    for j in 0..2 {
        for i in 0..2 {
            out[2 * j + i] = [da[i] * b[j], a[i] * db[j]];
        }
    }
    out
}

/// Values of the 3 quadratic basis functions on a 1D cell.
pub fn line3_values(xi: f64) -> [f64; 3] {
    lag1d_quadratic(xi)
}

/// Derivatives of the 3 quadratic basis functions on a 1D cell.
pub fn line3_derivs(xi: f64) -> [f64; 3] {
    lag1d_quadratic_deriv(xi)
}

/// Values of the 2 linear basis functions on a 1D cell.
pub fn line2_values(xi: f64) -> [f64; 2] {
    lag1d_linear(xi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q2_kronecker_property() {
        let pos = [-1.0, 0.0, 1.0];
        for j in 0..3 {
            for i in 0..3 {
                let vals = q2_values(pos[i], pos[j]);
                for (k, &v) in vals.iter().enumerate() {
                    let want = if k == 3 * j + i { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn q2_partition_of_unity_and_gradient_consistency() {
        let samples = [(-0.77, 0.33), (0.5, -0.9), (0.0, 0.0), (1.0, 1.0)];
        for &(xi, eta) in &samples {
            let vals = q2_values(xi, eta);
            assert!((vals.iter().sum::<f64>() - 1.0).abs() < 1e-13);
            // finite-difference check of gradients
            let grads = q2_gradients(xi, eta);
            let h = 1e-6;
            let vx = q2_values(xi + h, eta);
            let vy = q2_values(xi, eta + h);
            for k in 0..9 {
                assert!(((vx[k] - vals[k]) / h - grads[k][0]).abs() < 1e-5);
                assert!(((vy[k] - vals[k]) / h - grads[k][1]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn q1_reproduces_bilinear_functions() {
        let f = |x: f64, y: f64| 2.0 - 0.5 * x + 3.0 * y + 0.25 * x * y;
        let nodal = [
            f(-1.0, -1.0),
            f(1.0, -1.0),
            f(-1.0, 1.0),
            f(1.0, 1.0),
        ];
        let (xi, eta) = (0.3, -0.6);
        let vals = q1_values(xi, eta);
        let interp: f64 = vals.iter().zip(&nodal).map(|(v, n)| v * n).sum();
        assert!((interp - f(xi, eta)).abs() < 1e-14);
    }
}
