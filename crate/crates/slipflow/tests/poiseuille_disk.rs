//! Disk cross-section verification: the discrete Robin solution against the
//! analytic radial profile, an independent RK4 shooting oracle, the flux
//! constant, and the L2 convergence order.

use std::sync::Arc;

use slipflow::assemble;
use slipflow::mesh::{build_cross_section_mesh, DomainKind, DomainSpec, Mesh};
use slipflow::poiseuille::{
    closed_form_reference, flux_constant, l2_error_against, poiseuille_profile,
    solve_robin_poisson,
};

fn disk_mesh(resolution: usize, alpha: f64) -> Arc<Mesh> {
    let spec = DomainSpec {
        kind: DomainKind::Disk { radius: 1.0 },
        alpha,
    };
    Arc::new(build_cross_section_mesh(&spec, resolution).unwrap())
}

/// Radial shooting oracle for -(1/r)(r phi')' = 1 with phi'(0) = 0 and the
/// Robin condition phi'(1) + alpha phi(1) = 0.
///
/// The ODE is integrated by RK4 for w = r phi' (w' = -r), giving
/// phi(r) = p0 + int_0^r w(s)/s ds; the Robin condition is linear in p0, so
/// one solve pins it. Independent of the finite-element path.
fn shooting_center_value(alpha: f64, steps: usize) -> f64 {
    // w(r) = r phi'(r) satisfies w' = -r exactly; use RK4 anyway to keep the
    // oracle generic in the load
    let h = 1.0 / steps as f64;
    let mut w = 0.0;
    let mut phi_rel = 0.0; // phi(r) - phi(0)
    let mut r = 0.0;
    for _ in 0..steps {
        // d(phi_rel)/dr = w / r (limit 0 at r = 0)
        let slope = |r: f64, w: f64| if r == 0.0 { 0.0 } else { w / r };
        let k1w = -r;
        let k1p = slope(r, w);
        let k2w = -(r + 0.5 * h);
        let k2p = slope(r + 0.5 * h, w + 0.5 * h * k1w);
        let k3w = -(r + 0.5 * h);
        let k3p = slope(r + 0.5 * h, w + 0.5 * h * k2w);
        let k4w = -(r + h);
        let k4p = slope(r + h, w + h * k3w);
        phi_rel += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        r += h;
    }
    // Robin at r = 1: phi'(1) + alpha (p0 + phi_rel(1)) = 0 with phi'(1) = w(1)
    -(w + alpha * phi_rel) / alpha
}

#[test]
fn shooting_oracle_agrees_with_closed_form() {
    // phi(0) = 1/4 + 1/(2 alpha)
    for alpha in [0.5, 1.0, 4.0] {
        let oracle = shooting_center_value(alpha, 4096);
        let exact = 0.25 + 0.5 / alpha;
        assert!(
            (oracle - exact).abs() < 1e-9,
            "alpha {alpha}: {oracle} vs {exact}"
        );
    }
}

#[test]
fn robin_solution_center_value_matches_oracle() {
    let mesh = disk_mesh(16, 1.0);
    let phi = solve_robin_poisson(&mesh, 1.0).unwrap();
    let center = mesh
        .nodes
        .iter()
        .position(|p| p[0].abs() < 1e-12 && p[1].abs() < 1e-12)
        .expect("center node");
    let oracle = shooting_center_value(1.0, 4096);
    assert!((phi.dofs[center] - oracle).abs() < 1e-4);
    assert!((phi.dofs[center] - 0.75).abs() < 1e-4);
}

#[test]
fn flux_constant_matches_five_pi_over_eight() {
    let mesh = disk_mesh(64, 1.0);
    let phi = solve_robin_poisson(&mesh, 1.0).unwrap();
    let fc = flux_constant(&phi, 1.0).unwrap();
    let exact = 5.0 * std::f64::consts::PI / 8.0;
    assert!(
        (fc.value - exact).abs() / exact < 1e-6,
        "C_P = {} vs {exact} (rel {:.3e})",
        fc.value,
        (fc.value - exact).abs() / exact
    );
    assert!(fc.relative_gap < 1e-10);
}

#[test]
fn disk_profile_hits_published_values() {
    // alpha = 1, phi = 1: center 6/(5 pi), wall 4/(5 pi)
    let mesh = disk_mesh(32, 1.0);
    let prof = poiseuille_profile(&mesh, 1.0, 1.0).unwrap();
    let center = mesh
        .nodes
        .iter()
        .position(|p| p[0].abs() < 1e-12 && p[1].abs() < 1e-12)
        .unwrap();
    let wall = mesh
        .nodes
        .iter()
        .position(|p| (p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12)
        .unwrap();
    let c_exact = 6.0 / (5.0 * std::f64::consts::PI);
    let w_exact = 4.0 / (5.0 * std::f64::consts::PI);
    assert!((prof.profile.dofs[center] - c_exact).abs() < 1e-6);
    assert!((prof.profile.dofs[wall] - w_exact).abs() < 1e-6);
    let grad_exact = -8.0 / (5.0 * std::f64::consts::PI);
    assert!((prof.pressure_gradient - grad_exact).abs() < 1e-6);
}

#[test]
fn disk_profile_l2_error_converges_beyond_order_two_and_a_half() {
    let mut errors = Vec::new();
    for res in [16usize, 32, 64] {
        let mesh = disk_mesh(res, 1.0);
        let prof = poiseuille_profile(&mesh, 1.0, 1.0).unwrap();
        let cf = closed_form_reference(&mesh, 1.0, 1.0).unwrap();
        errors.push(l2_error_against(&prof.profile, &cf));
    }
    let order1 = (errors[0] / errors[1]).log2();
    let order2 = (errors[1] / errors[2]).log2();
    assert!(
        order1 >= 2.5 && order2 >= 2.5,
        "errors {errors:?}, orders {order1:.2}, {order2:.2}"
    );
    // relative error target at resolution 64
    let scale = 6.0 / (5.0 * std::f64::consts::PI);
    assert!(errors[2] / scale < 1e-4);
}

#[test]
fn no_slip_limit_recovers_dirichlet_solution() {
    let mesh = disk_mesh(16, 1e6);
    let phi = solve_robin_poisson(&mesh, 1e6).unwrap();
    let center = mesh
        .nodes
        .iter()
        .position(|p| p[0].abs() < 1e-12 && p[1].abs() < 1e-12)
        .unwrap();
    // (1 - r^2)/4 at the center plus the O(1/alpha) slip offset
    assert!((phi.dofs[center] - 0.25).abs() < 1e-4);
}

#[test]
fn disk_flux_is_quadrature_exact() {
    let mesh = disk_mesh(16, 2.0);
    let prof = poiseuille_profile(&mesh, 2.0, 0.37).unwrap();
    let flux = assemble::integrate_scalar(&prof.profile);
    assert!((flux - 0.37).abs() < 1e-12 * 0.37);
}
