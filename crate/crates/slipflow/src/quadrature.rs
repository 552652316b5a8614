//! Gauss-Legendre quadrature rules on the reference interval and square.
//!
//! The default assembly rule is the tensor 3-point rule (degree-5 exact per
//! direction), which integrates every bilinear form of the Q2/Q1 pair exactly
//! on affine cells. Higher-point rules are used for error functionals and for
//! integrands involving analytic (non-polynomial) factors.

/// One-dimensional Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Rule with `n` points (exact for polynomials of degree 2n-1), 1 <= n <= 16.
    pub fn new(n: usize) -> Self {
        let (points, weights) = gauss_legendre(n);
        GaussRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrate a callable over [a, b].
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Composite integration over [a, b] split into `cells` equal pieces.
    pub fn integrate_composite(&self, a: f64, b: f64, cells: usize, f: impl Fn(f64) -> f64) -> f64 {
        let h = (b - a) / cells as f64;
        (0..cells)
            .map(|k| self.integrate(a + k as f64 * h, a + (k + 1) as f64 * h, &f))
            .sum()
    }
}

/// Tensor-product rule on the reference square [-1,1]^2.
#[derive(Debug, Clone)]
pub struct TensorRule {
    /// (xi, eta) coordinates per point.
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub points_per_dir: usize,
}

impl TensorRule {
    pub fn new(n: usize) -> Self {
        let g = GaussRule::new(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        // eta-major ordering: the level sets eta = const are contiguous, which
        // the per-section flux evaluation relies on.
        for j in 0..n {
            for i in 0..n {
                points.push([g.points[i], g.points[j]]);
                weights.push(g.weights[i] * g.weights[j]);
            }
        }
        TensorRule {
            points,
            weights,
            points_per_dir: n,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

/// Nodes and weights of the n-point Gauss-Legendre rule, computed by Newton
/// iteration on Legendre polynomials (standard approach; accurate to ~1e-15).
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && n <= 16, "gauss rule size out of supported range");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev initial guess.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence.
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_integral(k: u32) -> f64 {
        // int_{-1}^{1} x^k dx
        if k % 2 == 1 {
            0.0
        } else {
            2.0 / (k as f64 + 1.0)
        }
    }

    #[test]
    fn three_point_rule_is_degree_five_exact() {
        let rule = GaussRule::new(3);
        for k in 0..=5u32 {
            let got: f64 = rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(&x, &w)| w * x.powi(k as i32))
                .sum();
            assert!(
                (got - monomial_integral(k)).abs() < 1e-14,
                "degree {k}: {got} vs {}",
                monomial_integral(k)
            );
        }
    }

    #[test]
    fn tensor_rule_integrates_mixed_monomials_exactly() {
        let rule = TensorRule::new(3);
        for p in 0..=5u32 {
            for q in 0..=5u32 {
                let got: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(pt, &w)| w * pt[0].powi(p as i32) * pt[1].powi(q as i32))
                    .sum();
                let want = monomial_integral(p) * monomial_integral(q);
                assert!((got - want).abs() < 1e-13, "x^{p} y^{q}");
            }
        }
    }

    #[test]
    fn high_order_rule_handles_smooth_bump() {
        // Reference value of int_{-1}^{1} exp(-1/(1-t^2)) dt, computed with a
        // composite 16-point rule at high subdivision (independent of the
        // single-panel evaluation below).
        let f = |t: f64| {
            if t.abs() < 1.0 {
                (-1.0 / (1.0 - t * t)).exp()
            } else {
                0.0
            }
        };
        let fine = GaussRule::new(16).integrate_composite(-1.0, 1.0, 256, f);
        let coarse = GaussRule::new(16).integrate_composite(-1.0, 1.0, 32, f);
        assert!((fine - coarse).abs() < 1e-13);
        assert!((fine - 0.443993816168).abs() < 1e-9);
    }
}
