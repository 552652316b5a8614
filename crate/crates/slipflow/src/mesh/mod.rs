//! Mapped structured meshes with isoparametric Q2 (9-node) quadrilateral
//! cells, boundary facets, and per-boundary-node geometric frames.
//!
//! Cross-sections (interval, disk, star-shaped) and truncated distorted strip
//! channels are all built from block-structured lattices. Disk and
//! star-shaped domains use a five-block butterfly layout so no cell mapping
//! degenerates at the center; boundary mid-edge nodes are placed on the exact
//! boundary curve, making the geometry third-order accurate.

mod disk;
mod strip;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::WallProfile;
use crate::quadrature::{GaussRule, TensorRule};
use crate::shape;

pub use disk::{build_cross_section_mesh, star_area_reference};
pub use strip::{build_strip_mesh, rectangle_mesh};

/// Declarative description of the meshable domains.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Friction coefficient alpha > 0 of the Navier-slip condition.
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainKind {
    Interval {
        length: f64,
    },
    Disk {
        radius: f64,
    },
    /// Boundary radius r(theta) sampled at uniform angles 2 pi k / N.
    StarShaped {
        radii: Vec<f64>,
    },
    DistortedStrip {
        lower: WallProfile,
        upper: WallProfile,
        /// Truncation half-length: the channel covers x2 in [-zeta, zeta].
        zeta: f64,
        /// Distortion half-length: walls are straight for |x2| >= z.
        z: f64,
    },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "friction coefficient alpha must be positive, got {}",
                self.alpha
            )));
        }
        match &self.kind {
            DomainKind::Interval { length } => {
                if !(*length > 0.0) {
                    return Err(Error::InvalidSpec("interval length must be positive".into()));
                }
            }
            DomainKind::Disk { radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidSpec("disk radius must be positive".into()));
                }
            }
            DomainKind::StarShaped { radii } => {
                if radii.len() < 8 {
                    return Err(Error::InvalidSpec(
                        "star-shaped boundary table needs at least 8 samples".into(),
                    ));
                }
                if radii.iter().any(|r| !(*r > 0.0)) {
                    return Err(Error::InvalidSpec(
                        "star-shaped radius function must be strictly positive".into(),
                    ));
                }
            }
            DomainKind::DistortedStrip {
                lower,
                upper,
                zeta,
                z,
            } => {
                if !(*z >= 0.0) {
                    return Err(Error::InvalidSpec("distortion half-length z must be >= 0".into()));
                }
                if !(*zeta > z + 1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "truncation half-length zeta = {zeta} must exceed z + 1 = {}",
                        z + 1.0
                    )));
                }
                let extent = lower.distortion_extent().max(upper.distortion_extent());
                if extent > *z + 1e-12 {
                    return Err(Error::InvalidSpec(format!(
                        "wall distortion extends to |x2| = {extent} beyond the declared z = {z}"
                    )));
                }
                // sample for wall crossing over the distorted region
                let samples = 512;
                for k in 0..=samples {
                    let x2 = -zeta + 2.0 * zeta * k as f64 / samples as f64;
                    let lo = lower.value(x2);
                    let hi = upper.value(x2);
                    if lo >= hi {
                        return Err(Error::WallCrossing {
                            x2,
                            lower: lo,
                            upper: hi,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Boundary facet classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FacetTag {
    Wall,
    InflowEnd,
    OutflowEnd,
}

/// Orthonormal frame at a boundary node: outward normal, tangent
/// (tau = rot90(n)), and signed curvature.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub normal: [f64; 2],
    pub tangent: [f64; 2],
    pub curvature: f64,
}

/// Q2 boundary edge of a 2D cell: three nodes in parameter order.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub cell: usize,
    /// Local edge of the cell: 0 south (eta=-1), 1 east (xi=1),
    /// 2 north (eta=1), 3 west (xi=-1).
    pub local_edge: usize,
    pub nodes: [usize; 3],
    pub tag: FacetTag,
}

/// Boundary point of a 1D mesh.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPoint {
    pub node: usize,
    /// Outward direction (-1 at the left end, +1 at the right end).
    pub outward: f64,
    pub tag: FacetTag,
}

/// Geometry of one quadrature point of a mapped cell.
#[derive(Debug, Clone, Copy)]
pub struct QuadPointGeom {
    /// Physical coordinates of the point.
    pub xy: [f64; 2],
    /// Jacobian dx/dxi (2D) or the scalar dx/dxi in [0][0] (1D).
    pub jac: [[f64; 2]; 2],
    pub inv_jac: [[f64; 2]; 2],
    pub det: f64,
}

/// Structured layout of a strip mesh (used for sections and stations).
#[derive(Debug, Clone)]
pub struct StripLayout {
    pub nx: usize,
    pub ny: usize,
    pub zeta: f64,
    pub z: f64,
    pub lower: WallProfile,
    pub upper: WallProfile,
}

#[derive(Debug)]
pub struct Mesh {
    pub dim: usize,
    pub nodes: Vec<[f64; 2]>,
    /// 9-node quadrilateral cells, lexicographic local ordering (2D only).
    pub cells2: Vec<[usize; 9]>,
    /// 3-node interval cells (1D only).
    pub cells1: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub boundary_points: Vec<BoundaryPoint>,
    /// Frames for every boundary node, wall frames taking precedence at
    /// wall/end corners.
    pub frames: BTreeMap<usize, Frame>,
    /// True for nodes that are cell corners (the Q1 sub-lattice).
    pub corner_nodes: Vec<bool>,
    /// Per-cell per-quadrature-point mapping geometry for the default rule.
    pub geom: Vec<Vec<QuadPointGeom>>,
    pub strip: Option<StripLayout>,
    pub spec: Option<DomainSpec>,
}

/// Default assembly rule: 3 Gauss points per direction (degree-5 exact).
pub const DEFAULT_RULE_PTS: usize = 3;

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_cells(&self) -> usize {
        if self.dim == 2 {
            self.cells2.len()
        } else {
            self.cells1.len()
        }
    }

    pub fn default_rule_2d() -> TensorRule {
        TensorRule::new(DEFAULT_RULE_PTS)
    }

    pub fn default_rule_1d() -> GaussRule {
        GaussRule::new(DEFAULT_RULE_PTS)
    }

    /// Mapping geometry of a 2D cell at an arbitrary reference point.
    pub fn cell_geom_at(&self, cell: usize, xi: f64, eta: f64) -> QuadPointGeom {
        debug_assert_eq!(self.dim, 2);
        let conn = &self.cells2[cell];
        let vals = shape::q2_values(xi, eta);
        let grads = shape::q2_gradients(xi, eta);
        let mut xy = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        for k in 0..9 {
            let p = self.nodes[conn[k]];
            for d in 0..2 {
                xy[d] += vals[k] * p[d];
                jac[d][0] += grads[k][0] * p[d];
                jac[d][1] += grads[k][1] * p[d];
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv_jac = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        QuadPointGeom {
            xy,
            jac,
            inv_jac,
            det,
        }
    }

    /// Mapping geometry of a 1D cell at a reference point.
    pub fn cell_geom_at_1d(&self, cell: usize, xi: f64) -> QuadPointGeom {
        debug_assert_eq!(self.dim, 1);
        let conn = &self.cells1[cell];
        let vals = shape::line3_values(xi);
        let ders = shape::line3_derivs(xi);
        let mut x = 0.0;
        let mut dxdxi = 0.0;
        for k in 0..3 {
            x += vals[k] * self.nodes[conn[k]][0];
            dxdxi += ders[k] * self.nodes[conn[k]][0];
        }
        QuadPointGeom {
            xy: [x, 0.0],
            jac: [[dxdxi, 0.0], [0.0, 1.0]],
            inv_jac: [[1.0 / dxdxi, 0.0], [0.0, 1.0]],
            det: dxdxi,
        }
    }

    /// Reference coordinates of a node inside one of its cells.
    pub fn node_ref_in_cell(&self, cell: usize, node: usize) -> Option<(f64, f64)> {
        const POS: [f64; 3] = [-1.0, 0.0, 1.0];
        self.cells2[cell].iter().position(|&n| n == node).map(|k| {
            let (i, j) = (k % 3, k / 3);
            (POS[i], POS[j])
        })
    }

    /// Some cell containing the given boundary node (via its boundary edge).
    pub fn boundary_cell_of(&self, node: usize) -> Option<usize> {
        self.boundary_edges
            .iter()
            .find(|e| e.nodes.contains(&node))
            .map(|e| e.cell)
    }

    /// Total measure (area in 2D, length in 1D) by quadrature of |det J|.
    pub fn area(&self) -> f64 {
        if self.dim == 2 {
            let rule = Self::default_rule_2d();
            self.geom
                .iter()
                .map(|g| {
                    g.iter()
                        .zip(&rule.weights)
                        .map(|(qp, &w)| w * qp.det)
                        .sum::<f64>()
                })
                .sum()
        } else {
            let rule = Self::default_rule_1d();
            self.geom
                .iter()
                .map(|g| {
                    g.iter()
                        .zip(&rule.weights)
                        .map(|(qp, &w)| w * qp.det)
                        .sum::<f64>()
                })
                .sum()
        }
    }

    /// Signed curvature at a wall boundary node.
    pub fn curvature_at(&self, node: usize) -> Result<f64> {
        let on_wall = self
            .boundary_edges
            .iter()
            .any(|e| e.tag == FacetTag::Wall && e.nodes.contains(&node))
            || self
                .boundary_points
                .iter()
                .any(|p| p.tag == FacetTag::Wall && p.node == node);
        if !on_wall {
            return Err(Error::Contract(format!(
                "node {node} does not lie on a Wall facet"
            )));
        }
        Ok(self.frames[&node].curvature)
    }

    /// Validate positivity of all mapping Jacobians and frame orthonormality.
    pub(crate) fn validate(&self) -> Result<()> {
        for (c, g) in self.geom.iter().enumerate() {
            for qp in g {
                if !(qp.det > 0.0) {
                    return Err(Error::NonPositiveJacobian {
                        cell: c,
                        det: qp.det,
                    });
                }
            }
        }
        for (node, f) in &self.frames {
            let n2 = f.normal[0] * f.normal[0] + f.normal[1] * f.normal[1];
            let t2 = f.tangent[0] * f.tangent[0] + f.tangent[1] * f.tangent[1];
            let dot = f.normal[0] * f.tangent[0] + f.normal[1] * f.tangent[1];
            if (n2 - 1.0).abs() > 1e-12 || (t2 - 1.0).abs() > 1e-12 || dot.abs() > 1e-12 {
                return Err(Error::Contract(format!(
                    "boundary frame at node {node} is not orthonormal"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn precompute_geometry(&mut self) {
        if self.dim == 2 {
            let rule = Self::default_rule_2d();
            self.geom = (0..self.cells2.len())
                .map(|c| {
                    rule.points
                        .iter()
                        .map(|p| self.cell_geom_at(c, p[0], p[1]))
                        .collect()
                })
                .collect();
        } else {
            let rule = Self::default_rule_1d();
            self.geom = (0..self.cells1.len())
                .map(|c| {
                    rule.points
                        .iter()
                        .map(|&x| self.cell_geom_at_1d(c, x))
                        .collect()
                })
                .collect();
        }
    }
}

/// Local edge -> the three lexicographic Q2 node slots along it, in
/// increasing parameter order.
pub const EDGE_NODES: [[usize; 3]; 4] = [
    [0, 1, 2], // south, eta = -1
    [2, 5, 8], // east, xi = +1
    [6, 7, 8], // north, eta = +1
    [0, 3, 6], // west, xi = -1
];

/// Reference coordinates along a local edge at edge parameter s in [-1, 1].
pub fn edge_ref_coords(local_edge: usize, s: f64) -> (f64, f64) {
    match local_edge {
        0 => (s, -1.0),
        1 => (1.0, s),
        2 => (s, 1.0),
        3 => (-1.0, s),
        _ => unreachable!(),
    }
}

/// Uniform interval mesh with quadratic cells.
pub fn interval_mesh(length: f64, cells: usize, alpha: f64) -> Result<Mesh> {
    if cells < 1 || !(length > 0.0) {
        return Err(Error::InvalidSpec("interval mesh needs length > 0 and cells >= 1".into()));
    }
    let n_nodes = 2 * cells + 1;
    let nodes: Vec<[f64; 2]> = (0..n_nodes)
        .map(|i| [length * i as f64 / (n_nodes - 1) as f64, 0.0])
        .collect();
    let cells1: Vec<[usize; 3]> = (0..cells).map(|c| [2 * c, 2 * c + 1, 2 * c + 2]).collect();
    let corner_nodes = (0..n_nodes).map(|i| i % 2 == 0).collect();
    let mut frames = BTreeMap::new();
    frames.insert(
        0,
        Frame {
            normal: [-1.0, 0.0],
            tangent: [0.0, -1.0],
            curvature: 0.0,
        },
    );
    frames.insert(
        n_nodes - 1,
        Frame {
            normal: [1.0, 0.0],
            tangent: [0.0, 1.0],
            curvature: 0.0,
        },
    );
    let boundary_points = vec![
        BoundaryPoint {
            node: 0,
            outward: -1.0,
            tag: FacetTag::Wall,
        },
        BoundaryPoint {
            node: n_nodes - 1,
            outward: 1.0,
            tag: FacetTag::Wall,
        },
    ];
    let mut mesh = Mesh {
        dim: 1,
        nodes,
        cells2: Vec::new(),
        cells1,
        boundary_edges: Vec::new(),
        boundary_points,
        frames,
        corner_nodes,
        geom: Vec::new(),
        strip: None,
        spec: Some(DomainSpec {
            kind: DomainKind::Interval { length },
            alpha,
        }),
    };
    mesh.precompute_geometry();
    mesh.validate()?;
    Ok(mesh)
}

/// Reference square side, used by the block lattice builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    South,
    East,
    North,
    West,
}

impl Side {
    fn local_edge(self) -> usize {
        match self {
            Side::South => 0,
            Side::East => 1,
            Side::North => 2,
            Side::West => 3,
        }
    }
}

pub(crate) struct Block<'a> {
    /// Map from the unit square [0,1]^2 to physical space; must be positively
    /// oriented.
    pub map: Box<dyn Fn(f64, f64) -> [f64; 2] + 'a>,
    pub mu: usize,
    pub mv: usize,
    pub boundary_sides: Vec<(Side, FacetTag)>,
}

/// Assemble a conforming mesh from structured blocks, deduplicating shared
/// interface nodes by rounded coordinates.
pub(crate) fn build_from_blocks(blocks: &[Block<'_>], scale: f64) -> (
    Vec<[f64; 2]>,
    Vec<[usize; 9]>,
    Vec<BoundaryEdge>,
    Vec<bool>,
) {
    let tol = 1e-9 * scale.max(1e-30);
    let key = |p: [f64; 2]| -> (i64, i64) {
        ((p[0] / tol).round() as i64, (p[1] / tol).round() as i64)
    };
    let mut node_ids: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    let mut nodes: Vec<[f64; 2]> = Vec::new();
    let mut cells: Vec<[usize; 9]> = Vec::new();
    let mut boundary: Vec<BoundaryEdge> = Vec::new();
    let mut corner_flags: Vec<bool> = Vec::new();

    for block in blocks {
        let (mu, mv) = (block.mu, block.mv);
        let nu = 2 * mu + 1;
        let nv = 2 * mv + 1;
        // global ids of this block's lattice
        let mut ids = vec![0usize; nu * nv];
        for j in 0..nv {
            for i in 0..nu {
                let p = (block.map)(i as f64 / (nu - 1) as f64, j as f64 / (nv - 1) as f64);
                let k = key(p);
                let id = *node_ids.entry(k).or_insert_with(|| {
                    nodes.push(p);
                    corner_flags.push(false);
                    nodes.len() - 1
                });
                ids[j * nu + i] = id;
            }
        }
        let cell_base = cells.len();
        for cv in 0..mv {
            for cu in 0..mu {
                let mut conn = [0usize; 9];
                for dj in 0..3 {
                    for di in 0..3 {
                        conn[3 * dj + di] = ids[(2 * cv + dj) * nu + (2 * cu + di)];
                    }
                }
                for &c in shape::Q2_CORNERS.iter() {
                    corner_flags[conn[c]] = true;
                }
                cells.push(conn);
            }
        }
        for &(side, tag) in &block.boundary_sides {
            let local_edge = side.local_edge();
            let along = match side {
                Side::South | Side::North => mu,
                Side::East | Side::West => mv,
            };
            for k in 0..along {
                let cell = cell_base
                    + match side {
                        Side::South => k,
                        Side::North => (mv - 1) * mu + k,
                        Side::West => k * mu,
                        Side::East => k * mu + (mu - 1),
                    };
                let conn = &cells[cell];
                let en = EDGE_NODES[local_edge];
                boundary.push(BoundaryEdge {
                    cell,
                    local_edge,
                    nodes: [conn[en[0]], conn[en[1]], conn[en[2]]],
                    tag,
                });
            }
        }
    }
    (nodes, cells, boundary, corner_flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_mesh_has_uniform_cells() {
        let m = interval_mesh(1.0, 8, 1.0).unwrap();
        assert_eq!(m.cells1.len(), 8);
        // cell corners sit at i/8
        let corners: Vec<f64> = m
            .nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| m.corner_nodes[*i])
            .map(|(_, p)| p[0])
            .collect();
        for (k, x) in corners.iter().enumerate() {
            assert!((x - k as f64 / 8.0).abs() < 1e-15);
        }
        assert!((m.area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spec_validation_rejects_bad_parameters() {
        let bad_alpha = DomainSpec {
            kind: DomainKind::Disk { radius: 1.0 },
            alpha: 0.0,
        };
        assert!(bad_alpha.validate().is_err());
        let crossing = DomainSpec {
            kind: DomainKind::DistortedStrip {
                // mollifier peak is e^{-1}, so amplitude -3 dips below zero
                lower: WallProfile::flat(0.0),
                upper: WallProfile::bump(1.0, -3.0, 1.0),
                zeta: 4.0,
                z: 2.0,
            },
            alpha: 1.0,
        };
        match crossing.validate() {
            Err(Error::WallCrossing { .. }) => {}
            other => panic!("expected wall crossing, got {other:?}"),
        }
    }
}
