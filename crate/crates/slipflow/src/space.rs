//! Finite-element spaces and discrete fields.
//!
//! The velocity/scalar space is continuous biquadratic (Q2) on the mesh
//! nodes; pressure is continuous bilinear (Q1) on the corner sub-lattice.
//! The mixed space interleaves velocity components per node and appends the
//! pressure block, so a mixed dof vector is [u1_0, u2_0, u1_1, u2_1, ..., p_
//! 0, ...].

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::shape;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    ScalarQ1,
    ScalarQ2,
    VectorQ2,
    MixedQ2Q1,
}

#[derive(Debug)]
pub struct Space {
    pub mesh: Arc<Mesh>,
    pub family: Family,
    pub ndof: usize,
    /// mesh node -> Q1 dof index for corner nodes.
    pub q1_index: Vec<Option<usize>>,
    pub n_q1: usize,
}

impl Space {
    pub fn new(mesh: Arc<Mesh>, family: Family) -> Arc<Space> {
        let mut q1_index = vec![None; mesh.n_nodes()];
        let mut n_q1 = 0;
        for (i, &is_corner) in mesh.corner_nodes.iter().enumerate() {
            if is_corner {
                q1_index[i] = Some(n_q1);
                n_q1 += 1;
            }
        }
        let n = mesh.n_nodes();
        let ndof = match family {
            Family::ScalarQ1 => n_q1,
            Family::ScalarQ2 => n,
            Family::VectorQ2 => 2 * n,
            Family::MixedQ2Q1 => 2 * n + n_q1,
        };
        Arc::new(Space {
            mesh,
            family,
            ndof,
            q1_index,
            n_q1,
        })
    }

    pub fn n_velocity_dofs(&self) -> usize {
        match self.family {
            Family::VectorQ2 | Family::MixedQ2Q1 => 2 * self.mesh.n_nodes(),
            _ => 0,
        }
    }

    /// Velocity dof index of component `comp` at a mesh node.
    #[inline]
    pub fn vdof(&self, node: usize, comp: usize) -> usize {
        2 * node + comp
    }

    /// Pressure dof index (mixed numbering) of a corner node.
    #[inline]
    pub fn pdof(&self, node: usize) -> usize {
        2 * self.mesh.n_nodes() + self.q1_index[node].expect("pressure dof on non-corner node")
    }

    pub fn has_pressure(&self) -> bool {
        self.family == Family::MixedQ2Q1
    }
}

/// Discrete field: dof values over a space.
#[derive(Debug, Clone)]
pub struct Field {
    pub space: Arc<Space>,
    pub dofs: Vec<f64>,
    pub name: Option<String>,
}

impl Field {
    pub fn zeros(space: &Arc<Space>) -> Field {
        Field {
            space: space.clone(),
            dofs: vec![0.0; space.ndof],
            name: None,
        }
    }

    pub fn from_dofs(space: &Arc<Space>, dofs: Vec<f64>) -> Result<Field> {
        if dofs.len() != space.ndof {
            return Err(Error::Contract(format!(
                "dof count {} does not match space dimension {}",
                dofs.len(),
                space.ndof
            )));
        }
        Ok(Field {
            space: space.clone(),
            dofs,
            name: None,
        })
    }

    pub fn named(mut self, name: &str) -> Field {
        self.name = Some(name.to_string());
        self
    }

    /// Nodal interpolation of a scalar function (ScalarQ2 or ScalarQ1).
    pub fn interpolate_scalar(space: &Arc<Space>, f: impl Fn([f64; 2]) -> f64) -> Field {
        let mut field = Field::zeros(space);
        match space.family {
            Family::ScalarQ2 => {
                for (i, p) in space.mesh.nodes.iter().enumerate() {
                    field.dofs[i] = f(*p);
                }
            }
            Family::ScalarQ1 => {
                for (i, p) in space.mesh.nodes.iter().enumerate() {
                    if let Some(k) = space.q1_index[i] {
                        field.dofs[k] = f(*p);
                    }
                }
            }
            _ => panic!("interpolate_scalar needs a scalar space"),
        }
        field
    }

    /// Nodal interpolation of a vector function (VectorQ2, or the velocity
    /// block of MixedQ2Q1).
    pub fn interpolate_vector(space: &Arc<Space>, f: impl Fn([f64; 2]) -> [f64; 2]) -> Field {
        assert!(matches!(
            space.family,
            Family::VectorQ2 | Family::MixedQ2Q1
        ));
        let mut field = Field::zeros(space);
        for (i, p) in space.mesh.nodes.iter().enumerate() {
            let v = f(*p);
            field.dofs[2 * i] = v[0];
            field.dofs[2 * i + 1] = v[1];
        }
        field
    }

    /// Scalar value and physical gradient at a reference point of a 2D cell.
    pub fn eval_scalar(&self, cell: usize, xi: f64, eta: f64) -> (f64, [f64; 2]) {
        let mesh = &self.space.mesh;
        let geom = mesh.cell_geom_at(cell, xi, eta);
        match self.space.family {
            Family::ScalarQ2 => {
                let vals = shape::q2_values(xi, eta);
                let grads = shape::q2_gradients(xi, eta);
                let conn = &mesh.cells2[cell];
                let mut v = 0.0;
                let mut g = [0.0; 2];
                for k in 0..9 {
                    let d = self.dofs[conn[k]];
                    v += vals[k] * d;
                    let gx = grads[k][0] * geom.inv_jac[0][0] + grads[k][1] * geom.inv_jac[1][0];
                    let gy = grads[k][0] * geom.inv_jac[0][1] + grads[k][1] * geom.inv_jac[1][1];
                    g[0] += gx * d;
                    g[1] += gy * d;
                }
                (v, g)
            }
            Family::ScalarQ1 => {
                let vals = shape::q1_values(xi, eta);
                let grads = shape::q1_gradients(xi, eta);
                let conn = &mesh.cells2[cell];
                let mut v = 0.0;
                let mut g = [0.0; 2];
                for (k, &corner) in shape::Q2_CORNERS.iter().enumerate() {
                    let d = self.dofs[self.space.q1_index[conn[corner]].unwrap()];
                    v += vals[k] * d;
                    let gx = grads[k][0] * geom.inv_jac[0][0] + grads[k][1] * geom.inv_jac[1][0];
                    let gy = grads[k][0] * geom.inv_jac[0][1] + grads[k][1] * geom.inv_jac[1][1];
                    g[0] += gx * d;
                    g[1] += gy * d;
                }
                (v, g)
            }
            _ => panic!("eval_scalar needs a scalar space"),
        }
    }

    /// Vector value and gradient (grad[a][d] = d u_a / d x_d) at a reference
    /// point of a 2D cell. Works for VectorQ2 and the velocity block of the
    /// mixed space.
    pub fn eval_vector(&self, cell: usize, xi: f64, eta: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let mesh = &self.space.mesh;
        let geom = mesh.cell_geom_at(cell, xi, eta);
        let vals = shape::q2_values(xi, eta);
        let grads = shape::q2_gradients(xi, eta);
        let conn = &mesh.cells2[cell];
        let mut v = [0.0; 2];
        let mut g = [[0.0; 2]; 2];
        for k in 0..9 {
            let gx = grads[k][0] * geom.inv_jac[0][0] + grads[k][1] * geom.inv_jac[1][0];
            let gy = grads[k][0] * geom.inv_jac[0][1] + grads[k][1] * geom.inv_jac[1][1];
            for a in 0..2 {
                let d = self.dofs[2 * conn[k] + a];
                v[a] += vals[k] * d;
                g[a][0] += gx * d;
                g[a][1] += gy * d;
            }
        }
        (v, g)
    }

    /// Scalar value and derivative on a 1D cell.
    pub fn eval_scalar_1d(&self, cell: usize, xi: f64) -> (f64, f64) {
        let mesh = &self.space.mesh;
        let geom = mesh.cell_geom_at_1d(cell, xi);
        let vals = shape::line3_values(xi);
        let ders = shape::line3_derivs(xi);
        let conn = &mesh.cells1[cell];
        let mut v = 0.0;
        let mut g = 0.0;
        for k in 0..3 {
            let d = self.dofs[conn[k]];
            v += vals[k] * d;
            g += ders[k] * d / geom.det;
        }
        (v, g)
    }

    /// Pressure value at a reference point of a mixed-space field.
    pub fn eval_pressure(&self, cell: usize, xi: f64, eta: f64) -> f64 {
        assert_eq!(self.space.family, Family::MixedQ2Q1);
        let mesh = &self.space.mesh;
        let vals = shape::q1_values(xi, eta);
        let conn = &mesh.cells2[cell];
        let base = 2 * mesh.n_nodes();
        let mut v = 0.0;
        for (k, &corner) in shape::Q2_CORNERS.iter().enumerate() {
            v += vals[k] * self.dofs[base + self.space.q1_index[conn[corner]].unwrap()];
        }
        v
    }

    /// Velocity block of a mixed field as a VectorQ2 field.
    pub fn velocity_part(&self, vspace: &Arc<Space>) -> Field {
        assert_eq!(self.space.family, Family::MixedQ2Q1);
        assert_eq!(vspace.family, Family::VectorQ2);
        let nv = 2 * self.space.mesh.n_nodes();
        Field {
            space: vspace.clone(),
            dofs: self.dofs[..nv].to_vec(),
            name: self.name.clone(),
        }
    }

    /// Pressure block of a mixed field as a ScalarQ1 field.
    pub fn pressure_part(&self, pspace: &Arc<Space>) -> Field {
        assert_eq!(self.space.family, Family::MixedQ2Q1);
        assert_eq!(pspace.family, Family::ScalarQ1);
        let nv = 2 * self.space.mesh.n_nodes();
        Field {
            space: pspace.clone(),
            dofs: self.dofs[nv..].to_vec(),
            name: self.name.clone(),
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &Field) {
        assert_eq!(self.dofs.len(), other.dofs.len());
        for (a, b) in self.dofs.iter_mut().zip(&other.dofs) {
            *a += alpha * b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::rectangle_mesh;

    #[test]
    fn q2_fields_reproduce_biquadratics_exactly() {
        let mesh = Arc::new(rectangle_mesh(3, 2, [0.0, 1.0], [0.0, 1.0]).unwrap());
        let space = Space::new(mesh.clone(), Family::ScalarQ2);
        let f = |p: [f64; 2]| (1.0 + p[0] * p[0]) * (2.0 - p[1] + p[1] * p[1]);
        let field = Field::interpolate_scalar(&space, f);
        let (v, g) = field.eval_scalar(2, 0.3, -0.4);
        let geom = mesh.cell_geom_at(2, 0.3, -0.4);
        let p = geom.xy;
        assert!((v - f(p)).abs() < 1e-13);
        let h = 1e-6;
        let dx = (f([p[0] + h, p[1]]) - f([p[0] - h, p[1]])) / (2.0 * h);
        let dy = (f([p[0], p[1] + h]) - f([p[0], p[1] - h])) / (2.0 * h);
        assert!((g[0] - dx).abs() < 1e-6);
        assert!((g[1] - dy).abs() < 1e-6);
    }

    #[test]
    fn mixed_space_counts_dofs() {
        let mesh = Arc::new(rectangle_mesh(2, 2, [0.0, 1.0], [0.0, 1.0]).unwrap());
        let space = Space::new(mesh.clone(), Family::MixedQ2Q1);
        let n = mesh.n_nodes();
        assert_eq!(n, 25);
        assert_eq!(space.n_q1, 9);
        assert_eq!(space.ndof, 2 * 25 + 9);
    }
}
