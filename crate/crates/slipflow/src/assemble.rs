//! Assembly of the bilinear and linear forms of the weak formulation: the
//! stress form 2 (Su, Sv), the slip boundary friction term, convection,
//! the pressure-velocity divergence coupling, masses, and loads.
//!
//! All matrices are assembled over the full Cartesian dof set of the given
//! space; frame rotation and constraint elimination happen later in the
//! system module.

use crate::error::{Error, Result};
use crate::mesh::{FacetTag, Mesh, QuadPointGeom, EDGE_NODES};
use crate::quadrature::GaussRule;
use crate::shape;
use crate::space::{Family, Field, Space};
use crate::sparse::CooMat;

/// Advecting velocity: a discrete field or an analytic closure.
pub enum Advect<'a> {
    Field(&'a Field),
    Analytic(&'a dyn Fn([f64; 2]) -> [f64; 2]),
}

/// Basis values and physical gradients of the velocity basis at one
/// quadrature point of one cell.
struct CellBasis {
    vals: [f64; 9],
    grads: [[f64; 2]; 9],
}

fn q2_basis_at(geom: &QuadPointGeom, xi: f64, eta: f64) -> CellBasis {
    let vals = shape::q2_values(xi, eta);
    let ref_grads = shape::q2_gradients(xi, eta);
    let mut grads = [[0.0; 2]; 9];
    for k in 0..9 {
        grads[k][0] = ref_grads[k][0] * geom.inv_jac[0][0] + ref_grads[k][1] * geom.inv_jac[1][0];
        grads[k][1] = ref_grads[k][0] * geom.inv_jac[0][1] + ref_grads[k][1] * geom.inv_jac[1][1];
    }
    CellBasis { vals, grads }
}

fn require_vector_space(space: &Space) -> Result<()> {
    match space.family {
        Family::VectorQ2 | Family::MixedQ2Q1 => Ok(()),
        _ => Err(Error::Contract(
            "this form needs a vector velocity component".into(),
        )),
    }
}

/// Iterate cells with the default rule, giving (cell, qp index, weight*det,
/// basis) to the callback.
fn for_each_qp(mesh: &Mesh, mut f: impl FnMut(usize, usize, f64, &CellBasis)) {
    let rule = Mesh::default_rule_2d();
    for c in 0..mesh.cells2.len() {
        for (q, pt) in rule.points.iter().enumerate() {
            let geom = &mesh.geom[c][q];
            let basis = q2_basis_at(geom, pt[0], pt[1]);
            f(c, q, rule.weights[q] * geom.det, &basis);
        }
    }
}

/// Stress form 2 int S(u):S(phi) dx over the velocity dofs.
///
/// The quadratic form of the result is u -> 2 int |S(u)|^2.
pub fn stress_form(space: &Space) -> Result<CooMat> {
    require_vector_space(space)?;
    let mesh = &space.mesh;
    let mut coo = CooMat::new(space.ndof, space.ndof);
    for_each_qp(mesh, |c, _q, w, basis| {
        let conn = &mesh.cells2[c];
        // 2 S(u):S(phi) = sum_ab [ du_a/dx_b dphi_a/dx_b + du_a/dx_b dphi_b/dx_a ]
        for i in 0..9 {
            for j in 0..9 {
                let gi = basis.grads[i];
                let gj = basis.grads[j];
                for a in 0..2 {
                    for b in 0..2 {
                        // trial component b at node j, test component a at node i:
                        // term1: a == b: grad dot grad
                        // term2: cross coupling
                        let mut v = 0.0;
                        if a == b {
                            v += gi[0] * gj[0] + gi[1] * gj[1];
                        }
                        v += gi[b] * gj[a];
                        if v != 0.0 {
                            coo.push(
                                space.vdof(conn[i], a),
                                space.vdof(conn[j], b),
                                w * v,
                            );
                        }
                    }
                }
            }
        }
    });
    Ok(coo)
}

/// Gradient form int grad u : grad phi over the velocity dofs (used for
/// H1 norms and the Korn-ratio denominators).
pub fn gradient_form(space: &Space) -> Result<CooMat> {
    require_vector_space(space)?;
    let mesh = &space.mesh;
    let mut coo = CooMat::new(space.ndof, space.ndof);
    for_each_qp(mesh, |c, _q, w, basis| {
        let conn = &mesh.cells2[c];
        for i in 0..9 {
            for j in 0..9 {
                let v = basis.grads[i][0] * basis.grads[j][0]
                    + basis.grads[i][1] * basis.grads[j][1];
                for a in 0..2 {
                    coo.push(space.vdof(conn[i], a), space.vdof(conn[j], a), w * v);
                }
            }
        }
    });
    Ok(coo)
}

/// Velocity mass form int u . phi.
pub fn vector_mass(space: &Space) -> Result<CooMat> {
    require_vector_space(space)?;
    let mesh = &space.mesh;
    let mut coo = CooMat::new(space.ndof, space.ndof);
    for_each_qp(mesh, |c, _q, w, basis| {
        let conn = &mesh.cells2[c];
        for i in 0..9 {
            for j in 0..9 {
                let v = basis.vals[i] * basis.vals[j];
                for a in 0..2 {
                    coo.push(space.vdof(conn[i], a), space.vdof(conn[j], a), w * v);
                }
            }
        }
    });
    Ok(coo)
}

/// Slip friction boundary form alpha int_wall u_tan . phi_tan dS.
///
/// Acts on tangential velocity components along Wall facets only; the
/// tangent is taken from the discrete edge geometry, so the form is exactly
/// the boundary mass of the tangential trace.
pub fn slip_boundary_form(space: &Space, alpha: f64) -> Result<CooMat> {
    require_vector_space(space)?;
    let mesh = &space.mesh;
    let mut coo = CooMat::new(space.ndof, space.ndof);
    if alpha == 0.0 {
        return Ok(coo);
    }
    let rule = GaussRule::new(3);
    for edge in &mesh.boundary_edges {
        if edge.tag != FacetTag::Wall {
            continue;
        }
        if !mesh.frames.contains_key(&edge.nodes[0]) {
            return Err(Error::Contract(format!(
                "missing boundary frame at node {}",
                edge.nodes[0]
            )));
        }
        let conn = &mesh.cells2[edge.cell];
        let local = EDGE_NODES[edge.local_edge];
        for (qs, &s) in rule.points.iter().enumerate() {
            let (xi, eta) = crate::mesh::edge_ref_coords(edge.local_edge, s);
            // edge geometry from its three nodes
            let eders = shape::line3_derivs(s);
            let mut dxds = [0.0; 2];
            for k in 0..3 {
                let p = mesh.nodes[edge.nodes[k]];
                dxds[0] += eders[k] * p[0];
                dxds[1] += eders[k] * p[1];
            }
            let jac = (dxds[0] * dxds[0] + dxds[1] * dxds[1]).sqrt();
            let tau = [dxds[0] / jac, dxds[1] / jac];
            let w = rule.weights[qs] * jac * alpha;
            let vals = shape::q2_values(xi, eta);
            for &li in &local {
                for &lj in &local {
                    let v = vals[li] * vals[lj];
                    for a in 0..2 {
                        for b in 0..2 {
                            coo.push(
                                space.vdof(conn[li], a),
                                space.vdof(conn[lj], b),
                                w * v * tau[a] * tau[b],
                            );
                        }
                    }
                }
            }
        }
    }
    Ok(coo)
}

/// Convection form int (b . grad u) . phi with a given advecting field b.
pub fn convection_form(space: &Space, b: &Advect<'_>) -> Result<CooMat> {
    require_vector_space(space)?;
    if let Advect::Field(bf) = b {
        if !std::sync::Arc::ptr_eq(&bf.space.mesh, &space.mesh) {
            return Err(Error::Contract(
                "advecting field lives on a different mesh".into(),
            ));
        }
    }
    let mesh = &space.mesh;
    let mut coo = CooMat::new(space.ndof, space.ndof);
    for_each_qp(mesh, |c, q, w, basis| {
        let bval = advect_value(b, mesh, c, q);
        let conn = &mesh.cells2[c];
        for i in 0..9 {
            for j in 0..9 {
                let v = basis.vals[i] * (bval[0] * basis.grads[j][0] + bval[1] * basis.grads[j][1]);
                for a in 0..2 {
                    coo.push(space.vdof(conn[i], a), space.vdof(conn[j], a), w * v);
                }
            }
        }
    });
    Ok(coo)
}

/// Reaction form int (u . grad b) . phi for a known differentiable field b:
/// row (i,a), column (j,c) gets int N_i N_j d b_a / d x_c.
pub fn gradient_coupling_form(space: &Space, b: &Advect<'_>) -> Result<CooMat> {
    require_vector_space(space)?;
    let mesh = &space.mesh;
    let mut coo = CooMat::new(space.ndof, space.ndof);
    for_each_qp(mesh, |c, q, w, basis| {
        let gb = advect_gradient(b, mesh, c, q);
        let conn = &mesh.cells2[c];
        for i in 0..9 {
            for j in 0..9 {
                let nn = basis.vals[i] * basis.vals[j];
                for a in 0..2 {
                    for comp in 0..2 {
                        let v = nn * gb[a][comp];
                        if v != 0.0 {
                            coo.push(space.vdof(conn[i], a), space.vdof(conn[j], comp), w * v);
                        }
                    }
                }
            }
        }
    });
    Ok(coo)
}

/// Divergence coupling rows: B[(p_i), (u_j,c)] = int q_i d u_c / d x_c dx.
/// B u = 0 over all pressure test functions enforces discrete
/// incompressibility.
pub fn divergence_coupling(space: &Space) -> Result<CooMat> {
    if space.family != Family::MixedQ2Q1 {
        return Err(Error::Contract("divergence coupling needs the mixed space".into()));
    }
    let mesh = &space.mesh;
    let rule = Mesh::default_rule_2d();
    let mut coo = CooMat::new(space.ndof, space.ndof);
    for c in 0..mesh.cells2.len() {
        let conn = &mesh.cells2[c];
        for (q, pt) in rule.points.iter().enumerate() {
            let geom = &mesh.geom[c][q];
            let basis = q2_basis_at(geom, pt[0], pt[1]);
            let qvals = shape::q1_values(pt[0], pt[1]);
            let w = rule.weights[q] * geom.det;
            for (kq, &corner) in shape::Q2_CORNERS.iter().enumerate() {
                let prow = space.pdof(conn[corner]);
                for j in 0..9 {
                    for comp in 0..2 {
                        coo.push(
                            prow,
                            space.vdof(conn[j], comp),
                            w * qvals[kq] * basis.grads[j][comp],
                        );
                    }
                }
            }
        }
    }
    Ok(coo)
}

/// The nonlinear convection residual int (u . grad u) . phi over the
/// velocity block, evaluated from the velocity part of a mixed dof vector.
pub fn nonlinear_convection_residual(space: &Space, x: &[f64]) -> Result<Vec<f64>> {
    require_vector_space(space)?;
    let mesh = &space.mesh;
    let rule = Mesh::default_rule_2d();
    let mut out = vec![0.0; space.ndof];
    for c in 0..mesh.cells2.len() {
        let conn = &mesh.cells2[c];
        for (q, pt) in rule.points.iter().enumerate() {
            let geom = &mesh.geom[c][q];
            let basis = q2_basis_at(geom, pt[0], pt[1]);
            // velocity value and gradient at the quadrature point
            let mut u = [0.0; 2];
            let mut gu = [[0.0; 2]; 2];
            for k in 0..9 {
                for a in 0..2 {
                    let d = x[space.vdof(conn[k], a)];
                    u[a] += basis.vals[k] * d;
                    gu[a][0] += basis.grads[k][0] * d;
                    gu[a][1] += basis.grads[k][1] * d;
                }
            }
            let adv = [
                u[0] * gu[0][0] + u[1] * gu[0][1],
                u[0] * gu[1][0] + u[1] * gu[1][1],
            ];
            let w = rule.weights[q] * geom.det;
            for k in 0..9 {
                for a in 0..2 {
                    out[space.vdof(conn[k], a)] += w * basis.vals[k] * adv[a];
                }
            }
        }
    }
    Ok(out)
}

/// Load vector int f . phi for an analytic force.
pub fn vector_load(space: &Space, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<Vec<f64>> {
    require_vector_space(space)?;
    let mesh = &space.mesh;
    let mut out = vec![0.0; space.ndof];
    for_each_qp(mesh, |c, q, w, basis| {
        let geom = &mesh.geom[c][q];
        let fv = f(geom.xy);
        let conn = &mesh.cells2[c];
        for i in 0..9 {
            for a in 0..2 {
                out[space.vdof(conn[i], a)] += w * basis.vals[i] * fv[a];
            }
        }
    });
    Ok(out)
}

/// Boundary load int_wall g . phi_tan dS with g given through its tangential
/// intensity g(x, n, tau) (a scalar multiplying tau).
pub fn tangential_boundary_load(
    space: &Space,
    g: impl Fn([f64; 2], [f64; 2], [f64; 2]) -> f64,
) -> Result<Vec<f64>> {
    require_vector_space(space)?;
    let mesh = &space.mesh;
    let mut out = vec![0.0; space.ndof];
    let rule = GaussRule::new(3);
    for edge in &mesh.boundary_edges {
        if edge.tag != FacetTag::Wall {
            continue;
        }
        let conn = &mesh.cells2[edge.cell];
        let local = EDGE_NODES[edge.local_edge];
        for (qs, &s) in rule.points.iter().enumerate() {
            let (xi, eta) = crate::mesh::edge_ref_coords(edge.local_edge, s);
            let evals = shape::line3_values(s);
            let eders = shape::line3_derivs(s);
            let mut x = [0.0; 2];
            let mut dxds = [0.0; 2];
            for k in 0..3 {
                let p = mesh.nodes[edge.nodes[k]];
                x[0] += evals[k] * p[0];
                x[1] += evals[k] * p[1];
                dxds[0] += eders[k] * p[0];
                dxds[1] += eders[k] * p[1];
            }
            let jac = (dxds[0] * dxds[0] + dxds[1] * dxds[1]).sqrt();
            let mut tau = [dxds[0] / jac, dxds[1] / jac];
            // orient tau consistently with the stored frames (tau = rot90(n)),
            // then n = rot(-90)(tau) is outward
            let frame_tau = nearest_frame_tangent(mesh, edge.nodes, x);
            if tau[0] * frame_tau[0] + tau[1] * frame_tau[1] < 0.0 {
                tau = [-tau[0], -tau[1]];
            }
            let n = [tau[1], -tau[0]];
            let gval = g(x, n, tau);
            let w = rule.weights[qs] * jac;
            let vals = shape::q2_values(xi, eta);
            for &li in &local {
                for a in 0..2 {
                    out[space.vdof(conn[li], a)] += w * gval * tau[a] * vals[li];
                }
            }
        }
    }
    Ok(out)
}

fn nearest_frame_tangent(mesh: &Mesh, nodes: [usize; 3], x: [f64; 2]) -> [f64; 2] {
    let mut best = [0.0, 0.0];
    let mut best_d = f64::INFINITY;
    for &n in &nodes {
        if let Some(f) = mesh.frames.get(&n) {
            let p = mesh.nodes[n];
            let d = (p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = f.tangent;
            }
        }
    }
    best
}

fn advect_value(b: &Advect<'_>, mesh: &Mesh, cell: usize, q: usize) -> [f64; 2] {
    match b {
        Advect::Analytic(f) => f(mesh.geom[cell][q].xy),
        Advect::Field(field) => {
            let rule = Mesh::default_rule_2d();
            let pt = rule.points[q];
            field.eval_vector(cell, pt[0], pt[1]).0
        }
    }
}

fn advect_gradient(b: &Advect<'_>, mesh: &Mesh, cell: usize, q: usize) -> [[f64; 2]; 2] {
    match b {
        Advect::Analytic(f) => {
            // central differences on the analytic closure
            let x = mesh.geom[cell][q].xy;
            let h = 1e-6;
            let mut g = [[0.0; 2]; 2];
            for d in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[d] += h;
                xm[d] -= h;
                let fp = f(xp);
                let fm = f(xm);
                for a in 0..2 {
                    g[a][d] = (fp[a] - fm[a]) / (2.0 * h);
                }
            }
            g
        }
        Advect::Field(field) => {
            let rule = Mesh::default_rule_2d();
            let pt = rule.points[q];
            field.eval_vector(cell, pt[0], pt[1]).1
        }
    }
}

// ---------------------------------------------------------------------------
// scalar forms (cross-section Robin problems), 1D and 2D
// ---------------------------------------------------------------------------

/// Scalar stiffness int grad u . grad v (Q2).
pub fn scalar_stiffness(space: &Space) -> Result<CooMat> {
    if space.family != Family::ScalarQ2 {
        return Err(Error::Contract("scalar stiffness needs ScalarQ2".into()));
    }
    let mesh = &space.mesh;
    let mut coo = CooMat::new(space.ndof, space.ndof);
    if mesh.dim == 2 {
        for_each_qp(mesh, |c, _q, w, basis| {
            let conn = &mesh.cells2[c];
            for i in 0..9 {
                for j in 0..9 {
                    let v = basis.grads[i][0] * basis.grads[j][0]
                        + basis.grads[i][1] * basis.grads[j][1];
                    coo.push(conn[i], conn[j], w * v);
                }
            }
        });
    } else {
        let rule = Mesh::default_rule_1d();
        for c in 0..mesh.cells1.len() {
            let conn = &mesh.cells1[c];
            for (q, &x) in rule.points.iter().enumerate() {
                let geom = &mesh.geom[c][q];
                let ders = shape::line3_derivs(x);
                let w = rule.weights[q] * geom.det;
                for i in 0..3 {
                    for j in 0..3 {
                        coo.push(conn[i], conn[j], w * ders[i] * ders[j] / (geom.det * geom.det));
                    }
                }
            }
        }
    }
    Ok(coo)
}

/// Scalar mass int u v (Q2).
pub fn scalar_mass(space: &Space) -> Result<CooMat> {
    if space.family != Family::ScalarQ2 {
        return Err(Error::Contract("scalar mass needs ScalarQ2".into()));
    }
    let mesh = &space.mesh;
    let mut coo = CooMat::new(space.ndof, space.ndof);
    if mesh.dim == 2 {
        for_each_qp(mesh, |c, _q, w, basis| {
            let conn = &mesh.cells2[c];
            for i in 0..9 {
                for j in 0..9 {
                    coo.push(conn[i], conn[j], w * basis.vals[i] * basis.vals[j]);
                }
            }
        });
    } else {
        let rule = Mesh::default_rule_1d();
        for c in 0..mesh.cells1.len() {
            let conn = &mesh.cells1[c];
            for (q, &x) in rule.points.iter().enumerate() {
                let geom = &mesh.geom[c][q];
                let vals = shape::line3_values(x);
                let w = rule.weights[q] * geom.det;
                for i in 0..3 {
                    for j in 0..3 {
                        coo.push(conn[i], conn[j], w * vals[i] * vals[j]);
                    }
                }
            }
        }
    }
    Ok(coo)
}

/// Robin boundary mass alpha int_wall u v dS (2D) or the endpoint masses
/// alpha (u v)(0) + alpha (u v)(L) (1D).
pub fn scalar_boundary_mass(space: &Space, alpha: f64) -> Result<CooMat> {
    if space.family != Family::ScalarQ2 {
        return Err(Error::Contract("boundary mass needs ScalarQ2".into()));
    }
    let mesh = &space.mesh;
    let mut coo = CooMat::new(space.ndof, space.ndof);
    if mesh.dim == 2 {
        let rule = GaussRule::new(3);
        for edge in &mesh.boundary_edges {
            if edge.tag != FacetTag::Wall {
                continue;
            }
            for (qs, &s) in rule.points.iter().enumerate() {
                let evals = shape::line3_values(s);
                let eders = shape::line3_derivs(s);
                let mut dxds = [0.0; 2];
                for k in 0..3 {
                    let p = mesh.nodes[edge.nodes[k]];
                    dxds[0] += eders[k] * p[0];
                    dxds[1] += eders[k] * p[1];
                }
                let jac = (dxds[0] * dxds[0] + dxds[1] * dxds[1]).sqrt();
                let w = rule.weights[qs] * jac * alpha;
                for i in 0..3 {
                    for j in 0..3 {
                        coo.push(
                            edge.nodes[i],
                            edge.nodes[j],
                            w * evals[i] * evals[j],
                        );
                    }
                }
            }
        }
    } else {
        for bp in &mesh.boundary_points {
            coo.push(bp.node, bp.node, alpha);
        }
    }
    Ok(coo)
}

/// Load vector int f v for a scalar space.
pub fn scalar_load(space: &Space, f: impl Fn([f64; 2]) -> f64) -> Result<Vec<f64>> {
    if space.family != Family::ScalarQ2 {
        return Err(Error::Contract("scalar load needs ScalarQ2".into()));
    }
    let mesh = &space.mesh;
    let mut out = vec![0.0; space.ndof];
    if mesh.dim == 2 {
        for_each_qp(mesh, |c, q, w, basis| {
            let conn = &mesh.cells2[c];
            let fv = f(mesh.geom[c][q].xy);
            for i in 0..9 {
                out[conn[i]] += w * basis.vals[i] * fv;
            }
        });
    } else {
        let rule = Mesh::default_rule_1d();
        for c in 0..mesh.cells1.len() {
            let conn = &mesh.cells1[c];
            for (q, &x) in rule.points.iter().enumerate() {
                let geom = &mesh.geom[c][q];
                let vals = shape::line3_values(x);
                let w = rule.weights[q] * geom.det;
                let fv = f(geom.xy);
                for i in 0..3 {
                    out[conn[i]] += w * vals[i] * fv;
                }
            }
        }
    }
    Ok(out)
}

/// Integral of a discrete scalar field over the domain.
pub fn integrate_scalar(field: &Field) -> f64 {
    let mesh = &field.space.mesh;
    if mesh.dim == 2 {
        let rule = Mesh::default_rule_2d();
        let mut acc = 0.0;
        for c in 0..mesh.cells2.len() {
            for (q, pt) in rule.points.iter().enumerate() {
                let geom = &mesh.geom[c][q];
                acc += rule.weights[q] * geom.det * field.eval_scalar(c, pt[0], pt[1]).0;
            }
        }
        acc
    } else {
        let rule = Mesh::default_rule_1d();
        let mut acc = 0.0;
        for c in 0..mesh.cells1.len() {
            for (q, &x) in rule.points.iter().enumerate() {
                let geom = &mesh.geom[c][q];
                acc += rule.weights[q] * geom.det * field.eval_scalar_1d(c, x).0;
            }
        }
        acc
    }
}

