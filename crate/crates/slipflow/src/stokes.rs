//! Linear Stokes solver with Navier-slip walls: friction enters as a natural
//! boundary term, impermeability is strong, and generalized tangential
//! boundary data is supported. Serves as the Newton linearization backbone
//! and as the correction solver of the cross-section divergence
//! construction.

use std::sync::Arc;

use crate::assemble::{self, Advect};
use crate::error::{Error, Result};
use crate::mesh::{FacetTag, Mesh};
use crate::space::{Family, Field, Space};
use crate::system::{AssembledSystem, Constraints};

/// Data of one Stokes solve. All closures are optional; a missing end-data
/// closure means no Dirichlet ends (pure natural walls), which requires
/// alpha > 0 to exclude the rigid-rotation kernel.
pub struct StokesProblem<'a> {
    pub mesh: Arc<Mesh>,
    pub alpha: f64,
    pub force: Option<&'a dyn Fn([f64; 2]) -> [f64; 2]>,
    /// Tensor source F contributing -int F : grad(phi) to the right side
    /// (the weak divergence of F).
    pub tensor_source: Option<&'a dyn Fn([f64; 2]) -> [[f64; 2]; 2]>,
    /// Tangential intensity h of the generalized slip condition
    /// 2 (S u . n)_tan + alpha u_tan = h tau, as h(x, n, tau).
    pub tangential_data: Option<&'a dyn Fn([f64; 2], [f64; 2], [f64; 2]) -> f64>,
    /// Strong velocity data on InflowEnd/OutflowEnd facets.
    pub end_data: Option<&'a dyn Fn(FacetTag, [f64; 2]) -> [f64; 2]>,
    /// Extra advection term (b . grad u, phi), used by the Picard loop.
    pub advection: Option<&'a Field>,
}

impl<'a> StokesProblem<'a> {
    pub fn plain(mesh: Arc<Mesh>, alpha: f64) -> Self {
        StokesProblem {
            mesh,
            alpha,
            force: None,
            tensor_source: None,
            tangential_data: None,
            end_data: None,
            advection: None,
        }
    }
}

pub struct StokesSolution {
    pub mixed: Field,
    pub velocity: Field,
    pub pressure: Field,
    /// Algebraic residuals of the reduced system, relative to the load.
    pub momentum_residual: f64,
    pub mass_residual: f64,
}

/// Integrals of the pressure basis functions (the gauge vector).
pub fn pressure_integrals(space: &Space) -> Vec<f64> {
    assert_eq!(space.family, Family::MixedQ2Q1);
    let mesh = &space.mesh;
    let rule = Mesh::default_rule_2d();
    let mut out = vec![0.0; space.n_q1];
    for c in 0..mesh.cells2.len() {
        let conn = &mesh.cells2[c];
        for (q, pt) in rule.points.iter().enumerate() {
            let geom = &mesh.geom[c][q];
            let qvals = crate::shape::q1_values(pt[0], pt[1]);
            for (k, &corner) in crate::shape::Q2_CORNERS.iter().enumerate() {
                out[space.q1_index[conn[corner]].unwrap()] += rule.weights[q] * geom.det * qvals[k];
            }
        }
    }
    out
}

pub fn solve_stokes(problem: &StokesProblem<'_>) -> Result<StokesSolution> {
    if problem.end_data.is_none() && problem.alpha == 0.0 {
        return Err(Error::SingularSystem(
            "alpha = 0 with no end constraints leaves the tangential rigid-rotation \
             kernel (dimension 1 on a disk cross-section); supply alpha > 0 or end data"
                .into(),
        ));
    }
    let space = Space::new(problem.mesh.clone(), Family::MixedQ2Q1);
    let mut coo = assemble::stress_form(&space)?;
    for &(r, c, v) in assemble::slip_boundary_form(&space, problem.alpha)?.entries() {
        coo.push(r, c, v);
    }
    if let Some(b) = problem.advection {
        for &(r, c, v) in assemble::convection_form(&space, &Advect::Field(b))?.entries() {
            coo.push(r, c, v);
        }
    }
    let div = assemble::divergence_coupling(&space)?;
    for &(r, c, v) in div.entries() {
        coo.push(r, c, v); // mass rows: B u = 0
        coo.push(c, r, -v); // momentum columns: -B^T p
    }

    let mut rhs = vec![0.0; space.ndof];
    if let Some(f) = problem.force {
        for (d, v) in assemble::vector_load(&space, f)?.iter().enumerate() {
            rhs[d] += v;
        }
    }
    if let Some(ft) = problem.tensor_source {
        add_tensor_source(&space, ft, &mut rhs);
    }
    if let Some(h) = problem.tangential_data {
        for (d, v) in assemble::tangential_boundary_load(&space, h)?
            .iter()
            .enumerate()
        {
            rhs[d] += v;
        }
    }

    let mut constraints = Constraints::none(&space)
        .impermeable_walls()?
        .pressure_gauge(pressure_integrals(&space));
    if let Some(data) = problem.end_data {
        constraints = constraints.dirichlet_ends(|tag, _, p| data(tag, p));
    }

    let sys = AssembledSystem::reduce(&coo, &rhs, &constraints, false);
    let (dofs, _) = sys.solve(false)?;

    // algebraic residual A x - b on the free dofs
    let nv = space.n_velocity_dofs();
    let full = coo.to_csr();
    let ax = full.matvec(&dofs);
    let mut mom = 0.0;
    let mut mass = 0.0;
    let mut mom_scale = 0.0f64;
    let rot_res: Vec<f64> = {
        let diff: Vec<f64> = ax.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        sys.restrict_residual(&diff)
    };
    for d in 0..space.ndof {
        if let Some(i) = sys.reduction.free_index[d] {
            let r = rot_res[i];
            if d < nv {
                mom += r * r;
            } else {
                mass += r * r;
            }
        }
        if d < nv {
            mom_scale += rhs[d] * rhs[d];
        }
    }
    let scale = mom_scale.sqrt().max(1.0);
    let velocity = Field {
        space: Space::new(problem.mesh.clone(), Family::VectorQ2),
        dofs: dofs[..nv].to_vec(),
        name: Some("stokes_velocity".into()),
    };
    let pressure = Field {
        space: Space::new(problem.mesh.clone(), Family::ScalarQ1),
        dofs: dofs[nv..].to_vec(),
        name: Some("stokes_pressure".into()),
    };
    Ok(StokesSolution {
        mixed: Field::from_dofs(&space, dofs)?,
        velocity,
        pressure,
        momentum_residual: mom.sqrt() / scale,
        mass_residual: mass.sqrt() / scale,
    })
}

fn add_tensor_source(
    space: &Arc<Space>,
    ft: &dyn Fn([f64; 2]) -> [[f64; 2]; 2],
    rhs: &mut [f64],
) {
    let mesh = &space.mesh;
    let rule = Mesh::default_rule_2d();
    for c in 0..mesh.cells2.len() {
        let conn = &mesh.cells2[c];
        for (q, pt) in rule.points.iter().enumerate() {
            let geom = &mesh.geom[c][q];
            let f = ft(geom.xy);
            let grads = crate::shape::q2_gradients(pt[0], pt[1]);
            let w = rule.weights[q] * geom.det;
            for k in 0..9 {
                let gx = grads[k][0] * geom.inv_jac[0][0] + grads[k][1] * geom.inv_jac[1][0];
                let gy = grads[k][0] * geom.inv_jac[0][1] + grads[k][1] * geom.inv_jac[1][1];
                for a in 0..2 {
                    // -int F_{a d} d phi_a / d x_d
                    rhs[space.vdof(conn[k], a)] -= w * (f[a][0] * gx + f[a][1] * gy);
                }
            }
        }
    }
}
