//! The divergence-free background profile vector: a smooth field carrying
//! the prescribed flux that satisfies the slip condition, equals the
//! Poiseuille flow beyond the distortion, and reduces the nonlinear problem
//! to one with a decaying unknown.
//!
//! Two constructions are provided. On the strip, the transverse divergence
//! equation is a uniquely integrable 1D ODE and everything is assembled from
//! closed-form pieces. On a 2D cross-section, the same equation is solved by
//! a Helmholtz split: a Neumann potential plus a divergence-free slip-Stokes
//! correction.

use std::sync::Arc;

use crate::assemble;
use crate::error::{Error, Result};
use crate::geometry::{
    mollifier, mollifier_d1, smoothstep5, smoothstep5_d1, smoothstep5_d2, smoothstep5_integral,
};
use crate::mesh::{FacetTag, Mesh};
use crate::poiseuille::{self, ClosedFormProfile};
use crate::quadrature::GaussRule;
use crate::space::{Family, Field, Space};
use crate::stokes::StokesSolution;
use crate::system::{AssembledSystem, Constraints};

/// Smooth monotone cutoff: 0 below z/2, 1 above z, quintic in between.
#[derive(Debug, Clone, Copy)]
pub struct CutoffEta {
    pub z: f64,
}

impl CutoffEta {
    pub fn new(z: f64) -> Result<CutoffEta> {
        if !(z > 0.0) {
            return Err(Error::InvalidSpec("cutoff needs z > 0".into()));
        }
        Ok(CutoffEta { z })
    }

    #[inline]
    fn t(&self, x2: f64) -> f64 {
        (x2 - 0.5 * self.z) / (0.5 * self.z)
    }

    pub fn value(&self, x2: f64) -> f64 {
        smoothstep5(self.t(x2))
    }

    pub fn d1(&self, x2: f64) -> f64 {
        smoothstep5_d1(self.t(x2)) / (0.5 * self.z)
    }

    pub fn d2(&self, x2: f64) -> f64 {
        smoothstep5_d2(self.t(x2)) / (0.25 * self.z * self.z)
    }

    /// int_{-inf}^{x2} eta(s) ds.
    pub fn integral(&self, x2: f64) -> f64 {
        0.5 * self.z * smoothstep5_integral(self.t(x2))
    }
}

/// Compactly supported flux carrier h on sigma' = [left, right] with
/// quadrature-exact mass phi.
#[derive(Debug, Clone)]
pub struct FluxCarrier {
    pub phi: f64,
    pub support: [f64; 2],
    /// Fixed panel decomposition of the reference bump mass; reusing the
    /// same panels for partial integrals makes int h = phi bitwise at the
    /// right endpoint.
    panels: usize,
    rule: GaussRule,
    norm: f64,
}

impl FluxCarrier {
    pub fn new(support: [f64; 2], phi: f64) -> Result<FluxCarrier> {
        if !(support[0] < support[1]) {
            return Err(Error::InvalidSpec("flux carrier support is empty".into()));
        }
        let panels = 24;
        let rule = GaussRule::new(12);
        let norm = (0..panels)
            .map(|k| {
                let a = -1.0 + 2.0 * k as f64 / panels as f64;
                let b = -1.0 + 2.0 * (k + 1) as f64 / panels as f64;
                rule.integrate(a, b, mollifier)
            })
            .sum();
        Ok(FluxCarrier {
            phi,
            support,
            panels,
            rule,
            norm,
        })
    }

    #[inline]
    fn half_width(&self) -> f64 {
        0.5 * (self.support[1] - self.support[0])
    }

    #[inline]
    fn center(&self) -> f64 {
        0.5 * (self.support[0] + self.support[1])
    }

    pub fn value(&self, x1: f64) -> f64 {
        let w = self.half_width();
        self.phi * mollifier((x1 - self.center()) / w) / (self.norm * w)
    }

    pub fn d1(&self, x1: f64) -> f64 {
        let w = self.half_width();
        self.phi * mollifier_d1((x1 - self.center()) / w) / (self.norm * w * w)
    }

    /// int_{-inf}^{x1} h, summed over the fixed panel decomposition so the
    /// full mass is exactly phi.
    pub fn integral_from_left(&self, x1: f64) -> f64 {
        let w = self.half_width();
        let t = (x1 - self.center()) / w;
        if t <= -1.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for k in 0..self.panels {
            let a = -1.0 + 2.0 * k as f64 / self.panels as f64;
            let b = -1.0 + 2.0 * (k + 1) as f64 / self.panels as f64;
            if t >= b {
                acc += self.rule.integrate(a, b, mollifier);
            } else if t > a {
                acc += self.rule.integrate(a, t, mollifier);
                break;
            } else {
                break;
            }
        }
        self.phi * acc / self.norm
    }

    /// L2 norm of the carrier (for the linear-scaling checks).
    pub fn l2_norm(&self) -> f64 {
        let w = self.half_width();
        let scale = self.phi / (self.norm * w);
        let mass2: f64 = (0..self.panels)
            .map(|k| {
                let a = -1.0 + 2.0 * k as f64 / self.panels as f64;
                let b = -1.0 + 2.0 * (k + 1) as f64 / self.panels as f64;
                self.rule.integrate(a, b, |t| mollifier(t) * mollifier(t))
            })
            .sum();
        scale.abs() * (mass2 * w).sqrt()
    }
}

/// Build a flux carrier, requiring its support strictly inside the channel
/// cross-section (distance eps0 from both walls across the whole strip).
pub fn build_flux_carrier(
    support: [f64; 2],
    phi: f64,
    wall_bounds: [f64; 2],
    eps0: f64,
) -> Result<FluxCarrier> {
    if support[0] < wall_bounds[0] + eps0 || support[1] > wall_bounds[1] - eps0 {
        return Err(Error::Contract(format!(
            "flux carrier support [{}, {}] is not strictly interior to the channel \
             (walls reach [{}, {}], margin {eps0})",
            support[0], support[1], wall_bounds[0], wall_bounds[1]
        )));
    }
    FluxCarrier::new(support, phi)
}

/// A(x1) = int_0^{x1} f ds for a zero-mean integrand f = h - g on [0, 1];
/// the strip reduction of the transverse divergence equation.
pub struct Divergence1d {
    carrier: FluxCarrier,
    g: ClosedFormProfile,
}

impl Divergence1d {
    pub fn new(carrier: FluxCarrier, g: ClosedFormProfile) -> Result<Divergence1d> {
        // compatibility: int (h - g) over the section must vanish; the
        // closed-form profile integrates to its own flux exactly
        let hmass = carrier.integral_from_left(f64::INFINITY);
        let gmass = match g {
            ClosedFormProfile::Interval { phi, .. } => phi,
            _ => {
                return Err(Error::Contract(
                    "strip divergence solve needs the interval closed form".into(),
                ))
            }
        };
        let residual = hmass - gmass;
        if residual.abs() > 1e-10 * carrier.phi.abs().max(1.0) {
            return Err(Error::Compatibility {
                residual,
                tolerance: 1e-10 * carrier.phi.abs().max(1.0),
            });
        }
        Ok(Divergence1d { carrier, g })
    }

    /// A(x1); zero at both walls because the integrand has zero mean.
    pub fn value(&self, x1: f64) -> f64 {
        self.carrier.integral_from_left(x1) - self.g_antiderivative(x1)
    }

    /// A'(x1) = h - g.
    pub fn d1(&self, x1: f64) -> f64 {
        self.carrier.value(x1) - self.g.eval([x1, 0.0])
    }

    fn g_antiderivative(&self, x1: f64) -> f64 {
        match self.g {
            ClosedFormProfile::Interval { length: l, alpha, phi } => {
                let cp = self.g.flux_constant();
                // int_0^x (s(l-s)/2 + l/(2 alpha)) ds, scaled by phi/cp
                phi / cp * (l * x1 * x1 / 4.0 - x1 * x1 * x1 / 6.0 + l * x1 / (2.0 * alpha))
            }
            _ => unreachable!(),
        }
    }
}

/// The assembled background vector on a strip mesh: analytic closures plus
/// the Q2 nodal interpolant used by the nonlinear solver.
pub struct ProfileVector {
    pub mesh: Arc<Mesh>,
    pub alpha: f64,
    pub phi: f64,
    pub eta: CutoffEta,
    pub carrier: FluxCarrier,
    pub g: ClosedFormProfile,
    pub divergence_1d: Divergence1d,
    /// Nodal Q2 interpolant of the analytic field.
    pub field: Field,
    pub flux_constant: f64,
    /// Straight channels take a = (0, g) identically; the carrier/cutoff
    /// machinery only enters for genuinely distorted walls.
    pub straight: bool,
}

impl ProfileVector {
    pub fn value(&self, p: [f64; 2]) -> [f64; 2] {
        let (x1, x2) = (p[0], p[1]);
        if self.straight {
            return [0.0, self.g.eval([x1, 0.0])];
        }
        let a = &self.divergence_1d;
        let ep = self.eta.d1(x2) - self.eta.d1(-x2);
        let blend = self.eta.value(x2) + self.eta.value(-x2);
        let h = self.carrier.value(x1);
        let g = self.g.eval([x1, 0.0]);
        [a.value(x1) * ep, h + (g - h) * blend]
    }

    /// grad[a][d] = d a_a / d x_d.
    pub fn gradient(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        let (x1, x2) = (p[0], p[1]);
        if self.straight {
            let gp = self.g.eval_gradient([x1, 0.0])[0];
            return [[0.0, 0.0], [gp, 0.0]];
        }
        let a = &self.divergence_1d;
        let ep = self.eta.d1(x2) - self.eta.d1(-x2);
        let epp = self.eta.d2(x2) + self.eta.d2(-x2);
        let blend = self.eta.value(x2) + self.eta.value(-x2);
        let h = self.carrier.value(x1);
        let hp = self.carrier.d1(x1);
        let g = self.g.eval([x1, 0.0]);
        let gp = self.g.eval_gradient([x1, 0.0])[0];
        [
            [a.d1(x1) * ep, a.value(x1) * epp],
            [hp + (gp - hp) * blend, (g - h) * ep],
        ]
    }

    pub fn divergence(&self, p: [f64; 2]) -> f64 {
        let g = self.gradient(p);
        g[0][0] + g[1][1]
    }

    /// Flux through the section at station x2, by piecewise high-order
    /// quadrature of the analytic axial component.
    pub fn section_flux(&self, x2: f64) -> f64 {
        let layout = self.mesh.strip.as_ref().expect("strip mesh");
        let lo = layout.lower.value(x2);
        let hi = layout.upper.value(x2);
        let rule = GaussRule::new(12);
        let mut cuts = vec![lo, self.carrier.support[0], self.carrier.support[1], hi];
        cuts.retain(|&c| c >= lo && c <= hi);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            acc += rule.integrate_composite(w[0], w[1], 8, |x1| self.value([x1, x2])[1]);
        }
        acc
    }

    /// Largest |div a| over all default quadrature points.
    pub fn max_divergence(&self) -> f64 {
        let mesh = &self.mesh;
        let mut worst: f64 = 0.0;
        for cell in &mesh.geom {
            for qp in cell {
                worst = worst.max(self.divergence(qp.xy).abs());
            }
        }
        worst
    }

    /// Largest deviation of the interpolant from the Poiseuille dofs on
    /// |x2| >= z.
    pub fn max_outlet_deviation(&self) -> f64 {
        let layout = self.mesh.strip.as_ref().expect("strip mesh");
        let mut worst: f64 = 0.0;
        for (n, p) in self.mesh.nodes.iter().enumerate() {
            if p[1].abs() >= layout.z - 1e-12 {
                let g = self.g.eval([p[0], 0.0]);
                worst = worst
                    .max((self.field.dofs[2 * n]).abs())
                    .max((self.field.dofs[2 * n + 1] - g).abs());
            }
        }
        worst
    }
}

/// Construct the profile vector on a strip mesh.
///
/// Requires the wall distortion to stay inside |x2| <= z/2 so that the
/// cutoff transition happens along straight walls; this is what makes the
/// slip condition of the constructed field exact.
pub fn assemble_profile_vector(
    mesh: &Arc<Mesh>,
    alpha: f64,
    phi: f64,
    sigma_prime: [f64; 2],
) -> Result<ProfileVector> {
    let layout = mesh
        .strip
        .as_ref()
        .ok_or_else(|| Error::Contract("profile vector needs a strip mesh".into()))?
        .clone();
    let extent = layout
        .lower
        .distortion_extent()
        .max(layout.upper.distortion_extent());
    if extent > 0.5 * layout.z + 1e-12 {
        return Err(Error::Contract(format!(
            "wall distortion reaches |x2| = {extent} but the cutoff transition starts at \
             z/2 = {}; the construction needs straight walls there",
            0.5 * layout.z
        )));
    }
    // walls across the whole strip; the carrier must clear them with margin
    let mut wall_lo: f64 = f64::NEG_INFINITY;
    let mut wall_hi: f64 = f64::INFINITY;
    let samples = 256;
    for k in 0..=samples {
        let x2 = -layout.zeta + 2.0 * layout.zeta * k as f64 / samples as f64;
        wall_lo = wall_lo.max(layout.lower.value(x2));
        wall_hi = wall_hi.min(layout.upper.value(x2));
    }
    let eps0 = 0.02 * (wall_hi - wall_lo);
    let carrier = build_flux_carrier(sigma_prime, phi, [wall_lo, wall_hi], eps0)?;
    let g = poiseuille::strip_closed_form(alpha, phi);
    let divergence_1d = Divergence1d::new(carrier.clone(), g)?;
    let eta = CutoffEta::new(layout.z)?;

    // endpoint check: A must vanish at both walls
    let a0 = divergence_1d.value(0.0);
    let a1 = divergence_1d.value(1.0);
    if a0.abs() > 1e-12 * phi.abs().max(1.0) || a1.abs() > 1e-12 * phi.abs().max(1.0) {
        return Err(Error::Diagnostic {
            name: "profile_vector_wall_values".into(),
            detail: format!("A(0) = {a0:.3e}, A(1) = {a1:.3e} (both must vanish)"),
        });
    }

    let cp = g.flux_constant();
    let straight = layout.lower.is_flat() && layout.upper.is_flat();
    let mut pv = ProfileVector {
        mesh: mesh.clone(),
        alpha,
        phi,
        eta,
        carrier,
        g,
        divergence_1d,
        field: Field::zeros(&Space::new(mesh.clone(), Family::VectorQ2)),
        flux_constant: cp,
        straight,
    };
    let vspace = Space::new(mesh.clone(), Family::VectorQ2);
    let values: Vec<[f64; 2]> = mesh.nodes.iter().map(|&p| pv.value(p)).collect();
    let mut field = Field::zeros(&vspace);
    for (n, v) in values.iter().enumerate() {
        field.dofs[2 * n] = v[0];
        field.dofs[2 * n + 1] = v[1];
    }
    pv.field = field.named("profile_vector");

    // construction invariants
    let scale = phi.abs().max(1e-30);
    let div = pv.max_divergence();
    if div > 1e-10 * scale {
        return Err(Error::Diagnostic {
            name: "profile_vector_divergence".into(),
            detail: format!("max |div a| = {div:.3e} exceeds 1e-10 phi"),
        });
    }
    let dev = pv.max_outlet_deviation();
    if dev > 1e-11 * scale.max(1.0) {
        return Err(Error::Diagnostic {
            name: "profile_vector_outlet_match".into(),
            detail: format!("interpolant deviates from the Poiseuille dofs by {dev:.3e}"),
        });
    }
    Ok(pv)
}

/// Helmholtz-split divergence construction on a 2D cross-section:
/// A = grad(phi) + G with a Neumann potential and a slip-Stokes correction.
pub struct Divergence2d {
    pub potential: Field,
    pub potential_gradient: Field,
    pub correction: StokesSolution,
    /// Nodal field grad(phi) + G with the wall-normal component zeroed.
    pub a_field: Field,
}

/// Solve div A = data on a cross-section mesh with the 2D slip condition.
///
/// `data` must have (quadrature-) zero mean; it is measured with the default
/// rule and rejected beyond `tol`.
pub fn solve_divergence_2d(
    mesh: &Arc<Mesh>,
    alpha: f64,
    data: &dyn Fn([f64; 2]) -> f64,
    tol: f64,
) -> Result<Divergence2d> {
    let sspace = Space::new(mesh.clone(), Family::ScalarQ2);
    // compatibility check with the assembly quadrature
    let load = assemble::scalar_load(&sspace, |p| data(p))?;
    let mean: f64 = load.iter().sum();
    let area = mesh.area();
    if mean.abs() > tol * area.max(1.0) {
        return Err(Error::Compatibility {
            residual: mean,
            tolerance: tol * area.max(1.0),
        });
    }

    // Neumann potential: (grad phi, grad psi) = -(data, psi), zero mean
    let stiffness = assemble::scalar_stiffness(&sspace)?;
    let rhs: Vec<f64> = load.iter().map(|v| -v).collect();
    let gauge = scalar_integrals(&sspace);
    let constraints = Constraints::none(&sspace).scalar_gauge(gauge);
    let sys = AssembledSystem::reduce(&stiffness, &rhs, &constraints, false);
    let (dofs, _) = sys.solve(false)?;
    let potential = Field::from_dofs(&sspace, dofs)?.named("neumann_potential");

    // nodal gradient field
    let vspace = Space::new(mesh.clone(), Family::VectorQ2);
    let potential_gradient = nodal_gradient(&potential, &vspace)?;

    // slip-Stokes correction with data -(2 S(w) n + alpha w)_tan
    let correction = {
        let load = slip_data_load(&vspace, &potential_gradient, alpha)?;
        solve_stokes_with_load(mesh, alpha, &load)?
    };

    let mut a_field = potential_gradient.clone();
    a_field.axpy(1.0, &correction.velocity);
    // zero the normal trace nodewise
    for (&n, frame) in &mesh.frames {
        let v = [a_field.dofs[2 * n], a_field.dofs[2 * n + 1]];
        let vn = v[0] * frame.normal[0] + v[1] * frame.normal[1];
        a_field.dofs[2 * n] -= vn * frame.normal[0];
        a_field.dofs[2 * n + 1] -= vn * frame.normal[1];
    }

    Ok(Divergence2d {
        potential,
        potential_gradient,
        correction,
        a_field: a_field.named("divergence_construction"),
    })
}

/// Integrals of the Q2 scalar basis (gauge vector for Neumann problems).
pub fn scalar_integrals(space: &Space) -> Vec<f64> {
    let mesh = &space.mesh;
    let mut out = vec![0.0; space.ndof];
    let rule = Mesh::default_rule_2d();
    for c in 0..mesh.cells2.len() {
        let conn = &mesh.cells2[c];
        for (q, pt) in rule.points.iter().enumerate() {
            let geom = &mesh.geom[c][q];
            let vals = crate::shape::q2_values(pt[0], pt[1]);
            for k in 0..9 {
                out[conn[k]] += rule.weights[q] * geom.det * vals[k];
            }
        }
    }
    out
}

/// Nodal interpolant of the gradient of a scalar Q2 field, averaging the
/// per-cell one-sided values at shared nodes.
pub fn nodal_gradient(scalar: &Field, vspace: &Arc<Space>) -> Result<Field> {
    let mesh = &scalar.space.mesh;
    let mut sums = vec![[0.0f64; 2]; mesh.n_nodes()];
    let mut counts = vec![0usize; mesh.n_nodes()];
    const POS: [f64; 3] = [-1.0, 0.0, 1.0];
    for c in 0..mesh.cells2.len() {
        let conn = &mesh.cells2[c];
        for (k, &node) in conn.iter().enumerate() {
            let (i, j) = (k % 3, k / 3);
            let (_, grad) = scalar.eval_scalar(c, POS[i], POS[j]);
            sums[node][0] += grad[0];
            sums[node][1] += grad[1];
            counts[node] += 1;
        }
    }
    let mut field = Field::zeros(vspace);
    for n in 0..mesh.n_nodes() {
        if counts[n] > 0 {
            field.dofs[2 * n] = sums[n][0] / counts[n] as f64;
            field.dofs[2 * n + 1] = sums[n][1] / counts[n] as f64;
        }
    }
    Ok(field.named("nodal_gradient"))
}

/// Boundary load -(2 (S(w) n)_tan + alpha w_tan) . phi_tan for a discrete
/// vector field w, evaluated through the field's own gradients at the edge
/// quadrature points.
pub fn slip_data_load(space: &Arc<Space>, w: &Field, alpha: f64) -> Result<Vec<f64>> {
    let mesh = &space.mesh;
    let mut out = vec![0.0; space.ndof];
    let rule = GaussRule::new(3);
    for edge in &mesh.boundary_edges {
        if edge.tag != FacetTag::Wall {
            continue;
        }
        let conn = &mesh.cells2[edge.cell];
        let local = crate::mesh::EDGE_NODES[edge.local_edge];
        for (qs, &s) in rule.points.iter().enumerate() {
            let (xi, eta) = crate::mesh::edge_ref_coords(edge.local_edge, s);
            let eders = crate::shape::line3_derivs(s);
            let mut dxds = [0.0; 2];
            for k in 0..3 {
                let p = mesh.nodes[edge.nodes[k]];
                dxds[0] += eders[k] * p[0];
                dxds[1] += eders[k] * p[1];
            }
            let jac = (dxds[0] * dxds[0] + dxds[1] * dxds[1]).sqrt();
            let tau = [dxds[0] / jac, dxds[1] / jac];
            let n = [tau[1], -tau[0]];
            let (wv, wg) = w.eval_vector(edge.cell, xi, eta);
            // 2 (S w . n) . tau = sum_ij tau_i (d_i w_j + d_j w_i) n_j
            let mut sn_tau = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    sn_tau += tau[i] * (wg[j][i] + wg[i][j]) * n[j];
                }
            }
            let w_tau = wv[0] * tau[0] + wv[1] * tau[1];
            let intensity = -(sn_tau + alpha * w_tau);
            let weight = rule.weights[qs] * jac;
            let vals = crate::shape::q2_values(xi, eta);
            for &li in &local {
                for a in 0..2 {
                    out[space.vdof(conn[li], a)] += weight * intensity * tau[a] * vals[li];
                }
            }
        }
    }
    Ok(out)
}

/// Stokes solve with a precomputed velocity load (internal helper for the
/// correction problem).
fn solve_stokes_with_load(mesh: &Arc<Mesh>, alpha: f64, load: &[f64]) -> Result<StokesSolution> {
    // wrap the load in a one-shot tangential closure-free problem by
    // assembling manually: reuse solve_stokes structure with a custom rhs
    let space = Space::new(mesh.clone(), Family::MixedQ2Q1);
    let mut coo = assemble::stress_form(&space)?;
    for &(r, c, v) in assemble::slip_boundary_form(&space, alpha)?.entries() {
        coo.push(r, c, v);
    }
    let div = assemble::divergence_coupling(&space)?;
    for &(r, c, v) in div.entries() {
        coo.push(r, c, v);
        coo.push(c, r, -v);
    }
    let mut rhs = vec![0.0; space.ndof];
    rhs[..load.len()].copy_from_slice(load);
    let constraints = Constraints::none(&space)
        .impermeable_walls()?
        .pressure_gauge(crate::stokes::pressure_integrals(&space));
    let sys = AssembledSystem::reduce(&coo, &rhs, &constraints, false);
    let (dofs, _) = sys.solve(false)?;
    let nv = space.n_velocity_dofs();
    Ok(StokesSolution {
        velocity: Field {
            space: Space::new(mesh.clone(), Family::VectorQ2),
            dofs: dofs[..nv].to_vec(),
            name: Some("slip_stokes_correction".into()),
        },
        pressure: Field {
            space: Space::new(mesh.clone(), Family::ScalarQ1),
            dofs: dofs[nv..].to_vec(),
            name: None,
        },
        mixed: Field::from_dofs(&space, dofs)?,
        momentum_residual: 0.0,
        mass_residual: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_is_monotone_with_supported_derivative() {
        let eta = CutoffEta::new(2.0).unwrap();
        assert_eq!(eta.value(0.9), 0.0);
        assert_eq!(eta.value(2.1), 1.0);
        assert!((eta.value(1.5) - 0.5).abs() < 1e-14);
        let mut last = -1.0;
        for k in 0..=100 {
            let x = 0.5 + 2.0 * k as f64 / 100.0;
            let v = eta.value(x);
            assert!(v >= last - 1e-14);
            last = v;
            if !(1.0..=2.0).contains(&x) {
                assert_eq!(eta.d1(x), 0.0);
            }
        }
        // derivative consistency
        let h = 1e-6;
        for &x in &[1.2, 1.5, 1.9] {
            let fd = (eta.value(x + h) - eta.value(x - h)) / (2.0 * h);
            assert!((fd - eta.d1(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn carrier_mass_is_exact_and_scales_linearly() {
        let c1 = FluxCarrier::new([0.25, 0.75], 1.0).unwrap();
        assert!((c1.integral_from_left(10.0) - 1.0).abs() < 1e-15);
        assert_eq!(c1.value(0.2), 0.0);
        assert_eq!(c1.value(0.8), 0.0);
        let c2 = FluxCarrier::new([0.25, 0.75], 2.5).unwrap();
        assert!((c2.l2_norm() / c1.l2_norm() - 2.5).abs() < 1e-12);
        // zero flux carries the zero function
        let c0 = FluxCarrier::new([0.25, 0.75], 0.0).unwrap();
        assert_eq!(c0.value(0.5), 0.0);
    }

    #[test]
    fn carrier_support_must_clear_walls() {
        assert!(build_flux_carrier([0.0, 0.6], 1.0, [0.0, 1.0], 0.02).is_err());
        assert!(build_flux_carrier([0.3, 0.7], 1.0, [0.0, 1.0], 0.02).is_ok());
    }

    #[test]
    fn divergence_1d_endpoints_vanish_and_derivative_matches() {
        let carrier = FluxCarrier::new([0.25, 0.75], 1.0).unwrap();
        let g = poiseuille::strip_closed_form(1.0, 1.0);
        let a = Divergence1d::new(carrier, g).unwrap();
        assert!(a.value(0.0).abs() < 1e-15);
        assert!(a.value(1.0).abs() < 1e-13);
        // symmetry sends A(1/2) to zero; probe off-center
        assert!(a.value(0.3).abs() > 1e-3);
        // A' = h - g pointwise
        let h = 1e-6;
        for &x in &[0.1, 0.3, 0.5, 0.62, 0.9] {
            let fd = (a.value(x + h) - a.value(x - h)) / (2.0 * h);
            assert!((fd - a.d1(x)).abs() < 1e-6, "at {x}");
        }
    }

    #[test]
    fn zero_mean_violation_is_rejected() {
        // carrier with the wrong flux against g with flux 1
        let carrier = FluxCarrier::new([0.25, 0.75], 0.7).unwrap();
        let g = poiseuille::strip_closed_form(1.0, 1.0);
        match Divergence1d::new(carrier, g) {
            Err(Error::Compatibility { residual, .. }) => {
                assert!((residual + 0.3).abs() < 1e-12);
            }
            other => panic!("expected compatibility error, got {:?}", other.is_ok()),
        }
    }
}
