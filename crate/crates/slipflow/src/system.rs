//! Constrained linear systems: nodal frame rotation for the impermeability
//! condition, strong Dirichlet elimination, optional mean-value gauge, and
//! the direct sparse solve.
//!
//! The impermeability condition u . n = 0 is enforced strongly: at every
//! wall boundary node the two velocity dofs are rotated into the (n, tau)
//! frame and the normal dof is fixed to zero. Rows and columns are
//! eliminated symmetrically, with the right-hand side lifted by the fixed
//! values.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::FacetTag;
use crate::space::{Family, Field, Space};
use crate::sparse::{CooMat, CsrMat, SparseLu};

#[derive(Debug, Clone, Copy)]
pub enum NodeFrame {
    Cartesian,
    /// Local dof 0 is the normal component, local dof 1 the tangential one.
    Rotated {
        normal: [f64; 2],
        tangent: [f64; 2],
    },
}

#[derive(Debug, Clone)]
pub struct Constraints {
    pub space: Arc<Space>,
    pub frames: Vec<NodeFrame>,
    /// Fixed value per dof, expressed in the nodal frame.
    pub fixed: Vec<Option<f64>>,
    /// Mean-value gauge vector (adds one Lagrange multiplier when set).
    pub gauge: Option<Vec<f64>>,
}

impl Constraints {
    pub fn none(space: &Arc<Space>) -> Constraints {
        Constraints {
            space: space.clone(),
            frames: vec![NodeFrame::Cartesian; space.mesh.n_nodes()],
            fixed: vec![None; space.ndof],
            gauge: None,
        }
    }

    /// Rotate every wall boundary node into its (n, tau) frame and fix the
    /// normal dof to zero.
    pub fn impermeable_walls(mut self) -> Result<Constraints> {
        let space = self.space.clone();
        if !matches!(space.family, Family::VectorQ2 | Family::MixedQ2Q1) {
            return Err(Error::Contract(
                "impermeability constraint needs a vector space".into(),
            ));
        }
        let mesh = &space.mesh;
        for edge in &mesh.boundary_edges {
            if edge.tag != FacetTag::Wall {
                continue;
            }
            for &n in &edge.nodes {
                let frame = mesh.frames.get(&n).ok_or_else(|| {
                    Error::Contract(format!("missing boundary frame at node {n}"))
                })?;
                self.frames[n] = NodeFrame::Rotated {
                    normal: frame.normal,
                    tangent: frame.tangent,
                };
                self.fixed[space.vdof(n, 0)] = Some(0.0);
            }
        }
        Ok(self)
    }

    /// Fix both velocity components at end facets to the values of `data`
    /// (a Cartesian closure receiving tag, node index, and coordinates),
    /// expressed in each node's frame.
    pub fn dirichlet_ends(
        mut self,
        data: impl Fn(FacetTag, usize, [f64; 2]) -> [f64; 2],
    ) -> Constraints {
        let space = self.space.clone();
        let mesh = &space.mesh;
        for edge in &mesh.boundary_edges {
            let tag = edge.tag;
            if tag == FacetTag::Wall {
                continue;
            }
            for &n in &edge.nodes {
                let v = data(tag, n, mesh.nodes[n]);
                let local = self.to_node_frame(n, v);
                self.fixed[space.vdof(n, 0)] = Some(local[0]);
                self.fixed[space.vdof(n, 1)] = Some(local[1]);
            }
        }
        self
    }

    /// Zero-mean gauge over the pressure block of a mixed space.
    pub fn pressure_gauge(mut self, pressure_integrals: Vec<f64>) -> Constraints {
        let mut g = vec![0.0; self.space.ndof];
        let base = 2 * self.space.mesh.n_nodes();
        for (k, v) in pressure_integrals.into_iter().enumerate() {
            g[base + k] = v;
        }
        self.gauge = Some(g);
        self
    }

    /// Zero-mean gauge over a scalar space.
    pub fn scalar_gauge(mut self, integrals: Vec<f64>) -> Constraints {
        assert_eq!(integrals.len(), self.space.ndof);
        self.gauge = Some(integrals);
        self
    }

    #[inline]
    pub fn to_node_frame(&self, node: usize, v: [f64; 2]) -> [f64; 2] {
        match self.frames[node] {
            NodeFrame::Cartesian => v,
            NodeFrame::Rotated { normal, tangent } => [
                normal[0] * v[0] + normal[1] * v[1],
                tangent[0] * v[0] + tangent[1] * v[1],
            ],
        }
    }

    #[inline]
    pub fn from_node_frame(&self, node: usize, v: [f64; 2]) -> [f64; 2] {
        match self.frames[node] {
            NodeFrame::Cartesian => v,
            NodeFrame::Rotated { normal, tangent } => [
                normal[0] * v[0] + tangent[0] * v[1],
                normal[1] * v[0] + tangent[1] * v[1],
            ],
        }
    }

    /// Rotate a full Cartesian dof vector into nodal frames (T x).
    pub fn rotate_to_frames(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        if matches!(self.space.family, Family::VectorQ2 | Family::MixedQ2Q1) {
            for (node, frame) in self.frames.iter().enumerate() {
                if let NodeFrame::Rotated { .. } = frame {
                    let d0 = self.space.vdof(node, 0);
                    let d1 = self.space.vdof(node, 1);
                    let local = self.to_node_frame(node, [x[d0], x[d1]]);
                    y[d0] = local[0];
                    y[d1] = local[1];
                }
            }
        }
        y
    }

    /// Rotate a nodal-frame dof vector back to Cartesian (T^T x).
    pub fn rotate_from_frames(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        if matches!(self.space.family, Family::VectorQ2 | Family::MixedQ2Q1) {
            for (node, frame) in self.frames.iter().enumerate() {
                if let NodeFrame::Rotated { .. } = frame {
                    let d0 = self.space.vdof(node, 0);
                    let d1 = self.space.vdof(node, 1);
                    let cart = self.from_node_frame(node, [x[d0], x[d1]]);
                    y[d0] = cart[0];
                    y[d1] = cart[1];
                }
            }
        }
        y
    }

    /// Overwrite the constrained dofs of a Cartesian dof vector with their
    /// fixed values (rotating through nodal frames as needed).
    pub fn project(&self, dofs: &mut [f64]) {
        let mut local = self.rotate_to_frames(dofs);
        for (d, f) in self.fixed.iter().enumerate() {
            if let Some(v) = f {
                local[d] = *v;
            }
        }
        let back = self.rotate_from_frames(&local);
        dofs.copy_from_slice(&back);
    }
}

/// Index maps of the reduced system.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub n_free: usize,
    pub free_index: Vec<Option<usize>>,
    pub n_reduced: usize,
    pub has_gauge: bool,
}

/// A constrained sparse system ready to factor.
pub struct AssembledSystem {
    pub constraints: Constraints,
    pub reduction: Reduction,
    reduced_triplets: Vec<(usize, usize, f64)>,
    reduced_rhs: Vec<f64>,
}

impl AssembledSystem {
    /// Rotate, eliminate, and gauge a full matrix/rhs pair.
    ///
    /// `newton_mode` solves for an update: fixed dofs are held at zero
    /// instead of their constraint values (no right-hand-side lift).
    pub fn reduce(
        coo: &CooMat,
        rhs: &[f64],
        constraints: &Constraints,
        newton_mode: bool,
    ) -> AssembledSystem {
        let space = &constraints.space;
        let ndof = space.ndof;
        assert_eq!(rhs.len(), ndof);

        let mut free_index = vec![None; ndof];
        let mut n_free = 0;
        for d in 0..ndof {
            if constraints.fixed[d].is_none() {
                free_index[d] = Some(n_free);
                n_free += 1;
            }
        }
        let has_gauge = constraints.gauge.is_some();
        let n_reduced = n_free + if has_gauge { 1 } else { 0 };

        let is_vec = matches!(space.family, Family::VectorQ2 | Family::MixedQ2Q1);
        let nv = if is_vec { 2 * space.mesh.n_nodes() } else { 0 };
        let rot_of = |dof: usize| -> Option<(usize, usize)> {
            // (node, comp) for velocity dofs under rotation
            if is_vec && dof < nv {
                let node = dof / 2;
                if matches!(constraints.frames[node], NodeFrame::Rotated { .. }) {
                    return Some((node, dof % 2));
                }
            }
            None
        };
        let frame_row = |node: usize, comp: usize| -> [f64; 2] {
            match constraints.frames[node] {
                NodeFrame::Rotated { normal, tangent } => {
                    if comp == 0 {
                        normal
                    } else {
                        tangent
                    }
                }
                NodeFrame::Cartesian => unreachable!(),
            }
        };

        // rotated rhs, then lift below
        let mut red_rhs = vec![0.0; n_reduced];
        let rot_rhs = constraints.rotate_to_frames(rhs);
        for d in 0..ndof {
            if let Some(i) = free_index[d] {
                red_rhs[i] = rot_rhs[d];
            }
        }

        let mut red_trip: Vec<(usize, usize, f64)> = Vec::with_capacity(coo.entries().len() * 2);
        let mut lift = vec![0.0; ndof];
        for &(r, c, v) in coo.entries() {
            // expand T K T^T entries touching rotated nodes
            let row_terms: Vec<(usize, f64)> = match rot_of(r) {
                None => vec![(r, 1.0)],
                Some((node, comp_orig)) => {
                    // original Cartesian row r = (node, comp_orig) appears in
                    // rotated rows (node, 0) and (node, 1) with weights
                    // R[new][comp_orig]
                    let base = 2 * node;
                    (0..2)
                        .map(|new| (base + new, frame_row(node, new)[comp_orig]))
                        .collect()
                }
            };
            let col_terms: Vec<(usize, f64)> = match rot_of(c) {
                None => vec![(c, 1.0)],
                Some((node, comp_orig)) => {
                    let base = 2 * node;
                    (0..2)
                        .map(|new| (base + new, frame_row(node, new)[comp_orig]))
                        .collect()
                }
            };
            for &(rr, wr) in &row_terms {
                if wr == 0.0 {
                    continue;
                }
                for &(cc, wc) in &col_terms {
                    if wc == 0.0 {
                        continue;
                    }
                    let val = v * wr * wc;
                    match (free_index[rr], free_index[cc]) {
                        (Some(ri), Some(ci)) => red_trip.push((ri, ci, val)),
                        (Some(_), None) => {
                            if !newton_mode {
                                lift[rr] += val * constraints.fixed[cc].unwrap();
                            }
                        }
                        (None, _) => {}
                    }
                }
            }
        }
        for d in 0..ndof {
            if let Some(i) = free_index[d] {
                red_rhs[i] -= lift[d];
            }
        }
        if let Some(g) = &constraints.gauge {
            let grow = n_free;
            for d in 0..ndof {
                if g[d] != 0.0 {
                    if let Some(i) = free_index[d] {
                        red_trip.push((i, grow, g[d]));
                        red_trip.push((grow, i, g[d]));
                    }
                }
            }
            red_rhs[grow] = 0.0;
        }

        AssembledSystem {
            constraints: constraints.clone(),
            reduction: Reduction {
                n_free,
                free_index,
                n_reduced,
                has_gauge,
            },
            reduced_triplets: red_trip,
            reduced_rhs: red_rhs,
        }
    }

    pub fn reduced_matrix(&self) -> CsrMat {
        let mut coo = CooMat::new(self.reduction.n_reduced, self.reduction.n_reduced);
        for &(r, c, v) in &self.reduced_triplets {
            coo.push(r, c, v);
        }
        coo.to_csr()
    }

    /// Factor and solve; returns the full Cartesian dof vector (fixed dofs at
    /// their constraint values, or zero in newton mode) and the gauge
    /// multiplier when present.
    pub fn solve(&self, newton_mode: bool) -> Result<(Vec<f64>, Option<f64>)> {
        let lu = SparseLu::factor(self.reduction.n_reduced, &self.reduced_triplets)?;
        let x = lu.solve(&self.reduced_rhs);
        for v in &x {
            if !v.is_finite() {
                return Err(Error::SingularSystem(
                    "non-finite entries in the direct solve".into(),
                ));
            }
        }
        let multiplier = if self.reduction.has_gauge {
            Some(x[self.reduction.n_free])
        } else {
            None
        };
        let ndof = self.constraints.space.ndof;
        let mut local = vec![0.0; ndof];
        for d in 0..ndof {
            local[d] = match self.reduction.free_index[d] {
                Some(i) => x[i],
                None => {
                    if newton_mode {
                        0.0
                    } else {
                        self.constraints.fixed[d].unwrap()
                    }
                }
            };
        }
        Ok((self.constraints.rotate_from_frames(&local), multiplier))
    }

    /// Rotate a full Cartesian residual into nodal frames and restrict to the
    /// free dofs (gauge row excluded).
    pub fn restrict_residual(&self, full: &[f64]) -> Vec<f64> {
        let rot = self.constraints.rotate_to_frames(full);
        let mut out = vec![0.0; self.reduction.n_free];
        for d in 0..full.len() {
            if let Some(i) = self.reduction.free_index[d] {
                out[i] = rot[d];
            }
        }
        out
    }
}

/// Project a raw dof vector onto the discretely divergence-free constraint
/// set: minimize ||u - raw||_M subject to B u = 0, wall impermeability, and
/// zero end values. Used by randomized starts and the coercivity probe.
pub fn project_divergence_free(
    space: &Arc<Space>,
    mass: &CooMat,
    divergence: &CooMat,
    raw: &[f64],
) -> Result<Field> {
    assert_eq!(space.family, Family::MixedQ2Q1);
    // saddle system: [M B^T; B 0] (u, m) = (M raw, 0) within the constrained
    // subspace; reuse the mixed dof layout with the pressure block as the
    // multiplier.
    let mut coo = CooMat::new(space.ndof, space.ndof);
    for &(r, c, v) in mass.entries() {
        coo.push(r, c, v);
    }
    for &(r, c, v) in divergence.entries() {
        coo.push(r, c, v);
        coo.push(c, r, v);
    }
    let mut rhs = mass.to_csr().matvec(raw);
    let nv = 2 * space.mesh.n_nodes();
    for v in rhs.iter_mut().skip(nv) {
        *v = 0.0;
    }
    let constraints = Constraints::none(space)
        .impermeable_walls()?
        .dirichlet_ends(|_, _, _| [0.0, 0.0])
        .pressure_gauge(crate::stokes::pressure_integrals(space));
    let sys = AssembledSystem::reduce(&coo, &rhs, &constraints, false);
    let (solution, _) = sys.solve(false)?;
    let mut out = Field::zeros(space);
    out.dofs[..nv].copy_from_slice(&solution[..nv]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemble;
    use crate::mesh::rectangle_mesh;
    use crate::space::{Family, Space};

    #[test]
    fn rotation_roundtrip_preserves_vectors() {
        let mesh = Arc::new(rectangle_mesh(2, 2, [0.0, 1.0], [0.0, 1.0]).unwrap());
        let space = Space::new(mesh, Family::VectorQ2);
        let constraints = Constraints::none(&space).impermeable_walls().unwrap();
        let x: Vec<f64> = (0..space.ndof).map(|k| (k as f64 * 0.37).sin()).collect();
        let y = constraints.rotate_from_frames(&constraints.rotate_to_frames(&x));
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn constrained_poisson_like_solve_fixes_walls() {
        // solve (grad u, grad phi) + (u, phi) = load with u.n = 0 on walls
        let mesh = Arc::new(rectangle_mesh(3, 3, [0.0, 1.0], [0.0, 1.0]).unwrap());
        let space = Space::new(mesh.clone(), Family::VectorQ2);
        let mut coo = assemble::gradient_form(&space).unwrap();
        for &(r, c, v) in assemble::vector_mass(&space).unwrap().entries() {
            coo.push(r, c, v);
        }
        let rhs = assemble::vector_load(&space, |_| [1.0, 1.0]).unwrap();
        let constraints = Constraints::none(&space).impermeable_walls().unwrap();
        let sys = AssembledSystem::reduce(&coo, &rhs, &constraints, false);
        let (u, _) = sys.solve(false).unwrap();
        // walls are x = 0 and x = 1 with normal +-e1: u1 must vanish there
        for (node, p) in mesh.nodes.iter().enumerate() {
            if p[0].abs() < 1e-12 || (p[0] - 1.0).abs() < 1e-12 {
                assert!(u[2 * node].abs() < 1e-12, "u.n != 0 at wall node {node}");
            }
        }
    }
}
