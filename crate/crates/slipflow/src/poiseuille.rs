//! Cross-sectional Poiseuille profiles under slip: the unit-load Robin
//! problem, the flux constant, profile scaling, and closed-form references
//! for the disk and the strip cross-section.

use std::sync::Arc;

use crate::assemble;
use crate::error::{Error, Result};
use crate::mesh::{DomainKind, Mesh};
use crate::space::{Family, Field, Space};
use crate::system::{AssembledSystem, Constraints};

/// Cross-sectional slip Poiseuille data: the axial profile g with flux phi,
/// the flux constant, and the induced axial pressure gradient -phi / C_P.
#[derive(Debug, Clone)]
pub struct PoiseuilleProfile {
    pub alpha: f64,
    pub phi: f64,
    /// Unit-load Robin solution.
    pub unit_solution: Field,
    /// g = (phi / C_P) * unit_solution.
    pub profile: Field,
    pub flux_constant: f64,
    pub pressure_gradient: f64,
}

/// Both sides of the flux-constant energy identity
/// int phi dx = int |grad phi|^2 dx + alpha int_wall phi^2 dS.
#[derive(Debug, Clone, Copy)]
pub struct FluxConstant {
    pub value: f64,
    pub energy_value: f64,
    pub relative_gap: f64,
}

/// Solve -lap(phi) = 1 with d phi/dn + alpha phi = 0 on the section walls.
pub fn solve_robin_poisson(mesh: &Arc<Mesh>, alpha: f64) -> Result<Field> {
    if !(alpha > 0.0) {
        return Err(Error::SingularSystem(format!(
            "Robin problem needs alpha > 0 (got {alpha}); alpha = 0 is pure Neumann"
        )));
    }
    let space = Space::new(mesh.clone(), Family::ScalarQ2);
    let mut coo = assemble::scalar_stiffness(&space)?;
    for &(r, c, v) in assemble::scalar_boundary_mass(&space, alpha)?.entries() {
        coo.push(r, c, v);
    }
    let rhs = assemble::scalar_load(&space, |_| 1.0)?;
    let constraints = Constraints::none(&space);
    let sys = AssembledSystem::reduce(&coo, &rhs, &constraints, false);
    let (dofs, _) = sys.solve(false)?;
    Ok(Field::from_dofs(&space, dofs)?.named("robin_unit_solution"))
}

/// Flux constant C_P = int phi, cross-checked against the energy identity.
pub fn flux_constant(unit_solution: &Field, alpha: f64) -> Result<FluxConstant> {
    let space = &unit_solution.space;
    let value = assemble::integrate_scalar(unit_solution);
    let stiffness = assemble::scalar_stiffness(space)?.to_csr();
    let bmass = assemble::scalar_boundary_mass(space, alpha)?.to_csr();
    let energy_value =
        stiffness.quadratic(&unit_solution.dofs) + bmass.quadratic(&unit_solution.dofs);
    let relative_gap = (value - energy_value).abs() / value.abs().max(1e-300);
    if !(value > 0.0) {
        return Err(Error::Diagnostic {
            name: "flux_constant_positivity".into(),
            detail: format!("C_P = {value} is not positive"),
        });
    }
    Ok(FluxConstant {
        value,
        energy_value,
        relative_gap,
    })
}

/// Build the slip Poiseuille profile with flux phi on a cross-section mesh.
pub fn poiseuille_profile(mesh: &Arc<Mesh>, alpha: f64, phi: f64) -> Result<PoiseuilleProfile> {
    if phi < 0.0 {
        return Err(Error::Contract(
            "flux must be nonnegative (flip the sign at the driver level)".into(),
        ));
    }
    let unit_solution = solve_robin_poisson(mesh, alpha)?;
    let fc = flux_constant(&unit_solution, alpha)?;
    if fc.relative_gap > 1e-8 {
        return Err(Error::Diagnostic {
            name: "flux_constant_energy_identity".into(),
            detail: format!(
                "int phi = {} vs energy form {} (relative gap {:.3e})",
                fc.value, fc.energy_value, fc.relative_gap
            ),
        });
    }
    let scale = phi / fc.value;
    let mut profile = unit_solution.clone();
    for d in &mut profile.dofs {
        *d *= scale;
    }
    Ok(PoiseuilleProfile {
        alpha,
        phi,
        unit_solution,
        profile: profile.named("poiseuille_profile"),
        flux_constant: fc.value,
        pressure_gradient: -phi / fc.value,
    })
}

/// Exact slip Poiseuille profiles where a closed form exists.
#[derive(Debug, Clone, Copy)]
pub enum ClosedFormProfile {
    /// g(r) = (phi/C_P) ((R^2 - r^2)/4 + R/(2 alpha)) on the disk of radius R.
    Disk { radius: f64, alpha: f64, phi: f64 },
    /// g(x) = (phi/C_P) (x (L - x)/2 + L/(2 alpha)) on [0, L].
    Interval { length: f64, alpha: f64, phi: f64 },
}

impl ClosedFormProfile {
    pub fn flux_constant(&self) -> f64 {
        match *self {
            ClosedFormProfile::Disk { radius: r, alpha, .. } => {
                std::f64::consts::PI * r * r * r * (alpha * r + 4.0) / (8.0 * alpha)
            }
            ClosedFormProfile::Interval { length: l, alpha, .. } => {
                l * l * l / 12.0 + l * l / (2.0 * alpha)
            }
        }
    }

    pub fn pressure_gradient(&self) -> f64 {
        match *self {
            ClosedFormProfile::Disk { phi, .. } | ClosedFormProfile::Interval { phi, .. } => {
                -phi / self.flux_constant()
            }
        }
    }

    /// Profile value at a cross-section point (x of the interval in p[0],
    /// or the in-plane point of the disk).
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match *self {
            ClosedFormProfile::Disk { radius: r, alpha, phi } => {
                let rho2 = p[0] * p[0] + p[1] * p[1];
                phi / self.flux_constant() * ((r * r - rho2) / 4.0 + r / (2.0 * alpha))
            }
            ClosedFormProfile::Interval { length: l, alpha, phi } => {
                phi / self.flux_constant() * (p[0] * (l - p[0]) / 2.0 + l / (2.0 * alpha))
            }
        }
    }

    /// In-plane gradient of the profile.
    pub fn eval_gradient(&self, p: [f64; 2]) -> [f64; 2] {
        match *self {
            ClosedFormProfile::Disk { phi, .. } => {
                let s = phi / self.flux_constant();
                [-0.5 * s * p[0], -0.5 * s * p[1]]
            }
            ClosedFormProfile::Interval { length: l, phi, .. } => {
                [phi / self.flux_constant() * (l / 2.0 - p[0]), 0.0]
            }
        }
    }

    /// Transverse Laplacian (constant, equal to the pressure gradient).
    pub fn laplacian(&self) -> f64 {
        self.pressure_gradient()
    }
}

/// Closed-form reference for Disk and Interval cross-sections.
pub fn closed_form_reference(mesh: &Mesh, alpha: f64, phi: f64) -> Result<ClosedFormProfile> {
    let spec = mesh
        .spec
        .as_ref()
        .ok_or_else(|| Error::Contract("mesh carries no domain spec".into()))?;
    match spec.kind {
        DomainKind::Disk { radius } => Ok(ClosedFormProfile::Disk { radius, alpha, phi }),
        DomainKind::Interval { length } => Ok(ClosedFormProfile::Interval { length, alpha, phi }),
        _ => Err(Error::Contract(
            "closed-form profile exists only for Disk and Interval cross-sections".into(),
        )),
    }
}

/// The strip closed form on [0, 1]: g(x) = 6 alpha phi/(6+alpha) (x - x^2)
/// + 6 phi/(6+alpha), as an Interval profile of unit length.
pub fn strip_closed_form(alpha: f64, phi: f64) -> ClosedFormProfile {
    ClosedFormProfile::Interval {
        length: 1.0,
        alpha,
        phi,
    }
}

/// L2 error of a discrete scalar profile against a closed form, integrated
/// with a 5-point rule to keep the error functional quadrature-clean.
pub fn l2_error_against(profile: &Field, exact: &ClosedFormProfile) -> f64 {
    let mesh = &profile.space.mesh;
    let mut acc = 0.0;
    if mesh.dim == 2 {
        let rule = crate::quadrature::TensorRule::new(5);
        for c in 0..mesh.cells2.len() {
            for (pt, &w) in rule.points.iter().zip(&rule.weights) {
                let geom = mesh.cell_geom_at(c, pt[0], pt[1]);
                let (v, _) = profile.eval_scalar(c, pt[0], pt[1]);
                let d = v - exact.eval(geom.xy);
                acc += w * geom.det * d * d;
            }
        }
    } else {
        let rule = crate::quadrature::GaussRule::new(5);
        for c in 0..mesh.cells1.len() {
            for (&x, &w) in rule.points.iter().zip(&rule.weights) {
                let geom = mesh.cell_geom_at_1d(c, x);
                let (v, _) = profile.eval_scalar_1d(c, x);
                let d = v - exact.eval(geom.xy);
                acc += w * geom.det * d * d;
            }
        }
    }
    acc.sqrt()
}

/// Discrete H1 norm of a scalar field.
pub fn scalar_h1_norm(field: &Field) -> Result<f64> {
    let space = &field.space;
    let stiffness = assemble::scalar_stiffness(space)?.to_csr();
    let mass = assemble::scalar_mass(space)?.to_csr();
    Ok((stiffness.quadratic(&field.dofs) + mass.quadratic(&field.dofs)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_cross_section_mesh, DomainKind, DomainSpec};

    fn interval_mesh(cells: usize) -> Arc<Mesh> {
        let spec = DomainSpec {
            kind: DomainKind::Interval { length: 1.0 },
            alpha: 1.0,
        };
        Arc::new(build_cross_section_mesh(&spec, cells).unwrap())
    }

    #[test]
    fn interval_robin_solution_is_exact_for_quadratics() {
        // phi(x) = (x - x^2)/2 + 1/2 at alpha = 1; quadratic, so exact
        let mesh = interval_mesh(8);
        let phi = solve_robin_poisson(&mesh, 1.0).unwrap();
        for (i, p) in mesh.nodes.iter().enumerate() {
            let exact = 0.5 * (p[0] - p[0] * p[0]) + 0.5;
            assert!((phi.dofs[i] - exact).abs() < 1e-12);
        }
        let fc = flux_constant(&phi, 1.0).unwrap();
        assert!((fc.value - 7.0 / 12.0).abs() < 1e-12);
        assert!(fc.relative_gap < 1e-12);
    }

    #[test]
    fn strip_profile_matches_published_closed_form() {
        let mesh = interval_mesh(6);
        let prof = poiseuille_profile(&mesh, 1.0, 1.0).unwrap();
        // midpoint value 15/14, wall value 6/7
        let mid = mesh
            .nodes
            .iter()
            .position(|p| (p[0] - 0.5).abs() < 1e-12)
            .unwrap();
        assert!((prof.profile.dofs[mid] - 15.0 / 14.0).abs() < 1e-12);
        assert!((prof.profile.dofs[0] - 6.0 / 7.0).abs() < 1e-12);
        assert!((prof.pressure_gradient + 12.0 / 7.0).abs() < 1e-12);
        // robin residual of the closed form: g'(0) = alpha g(0)
        for alpha in [0.5, 1.0, 4.0] {
            let cf = strip_closed_form(alpha, 1.0);
            let g0 = cf.eval([0.0, 0.0]);
            let g1 = cf.eval_gradient([0.0, 0.0])[0];
            assert!((g1 - alpha * g0).abs() < 1e-12);
        }
    }

    #[test]
    fn strip_closed_form_has_no_slip_limit() {
        let cf = strip_closed_form(1e9, 1.0);
        let mid = cf.eval([0.5, 0.0]);
        assert!((mid - 6.0 * (0.5 - 0.25)).abs() < 1e-7);
    }

    #[test]
    fn flux_constant_decreases_with_friction() {
        let mesh = interval_mesh(6);
        let mut last = f64::INFINITY;
        for alpha in [0.1, 1.0, 10.0, 100.0] {
            let phi = solve_robin_poisson(&mesh, alpha).unwrap();
            let fc = flux_constant(&phi, alpha).unwrap();
            assert!(fc.value < last, "C_P not decreasing at alpha = {alpha}");
            last = fc.value;
        }
    }

    #[test]
    fn profile_flux_is_exact_and_h1_scales_linearly() {
        let mesh = interval_mesh(5);
        let p1 = poiseuille_profile(&mesh, 2.0, 1.0).unwrap();
        let p2 = poiseuille_profile(&mesh, 2.0, 3.5).unwrap();
        let f1 = assemble::integrate_scalar(&p1.profile);
        let f2 = assemble::integrate_scalar(&p2.profile);
        assert!((f1 - 1.0).abs() < 1e-12);
        assert!((f2 - 3.5).abs() < 1e-11);
        let n1 = scalar_h1_norm(&p1.profile).unwrap();
        let n2 = scalar_h1_norm(&p2.profile).unwrap();
        assert!((n2 / n1 - 3.5).abs() < 1e-10);
    }

    #[test]
    fn zero_flux_gives_zero_profile() {
        let mesh = interval_mesh(4);
        let p = poiseuille_profile(&mesh, 1.0, 0.0).unwrap();
        assert!(p.profile.dofs.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn negative_flux_is_rejected() {
        let mesh = interval_mesh(4);
        assert!(poiseuille_profile(&mesh, 1.0, -1.0).is_err());
    }

    #[test]
    fn robin_rejects_nonpositive_alpha() {
        let mesh = interval_mesh(4);
        assert!(solve_robin_poisson(&mesh, 0.0).is_err());
    }
}
