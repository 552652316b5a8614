//! Boundary-fitted meshes for distorted strip channels and plain rectangles.

use std::collections::BTreeMap;

use super::{
    build_from_blocks, Block, BoundaryEdge, DomainKind, DomainSpec, FacetTag, Frame, Mesh, Side,
    StripLayout,
};
use crate::error::{Error, Result};
use crate::geometry::{graph_wall_curvature, graph_wall_frame, WallProfile};

/// Build a boundary-fitted strip mesh on [b-(x2), b+(x2)] x [-zeta, zeta].
///
/// `resolution` is the number of cells across the channel; the axial cell
/// count is chosen so cells stay near unit aspect ratio, rounded so that the
/// stations x2 = +-z and +-z/2 fall on mesh lines whenever z does.
pub fn build_strip_mesh(spec: &DomainSpec, resolution: usize) -> Result<Mesh> {
    spec.validate()?;
    let (lower, upper, zeta, z) = match &spec.kind {
        DomainKind::DistortedStrip {
            lower,
            upper,
            zeta,
            z,
        } => (*lower, *upper, *zeta, *z),
        _ => {
            return Err(Error::Contract(
                "build_strip_mesh requires a DistortedStrip spec".into(),
            ))
        }
    };
    if resolution < 2 {
        return Err(Error::InvalidSpec("strip resolution must be >= 2".into()));
    }
    let nx = resolution;
    // axial spacing ~ mean channel width / resolution; 2*zeta*2*resolution
    // subdivisions per unit width keeps cells near square and puts +-z,
    // +-z/2 on cell lines for half-integer z.
    let ny = (2.0 * zeta * resolution as f64).round() as usize;
    build_strip_lattice(lower, upper, zeta, z, nx, ny, spec.clone())
}

/// Plain rectangle [x0,x1] x [y0,y1]; walls at x = x0, x1 and ends at
/// y = y0 (inflow), y1 (outflow). Used by tests and manufactured-solution
/// studies.
pub fn rectangle_mesh(nx: usize, ny: usize, x_range: [f64; 2], y_range: [f64; 2]) -> Result<Mesh> {
    let width = x_range[1] - x_range[0];
    let height = y_range[1] - y_range[0];
    if !(width > 0.0) || !(height > 0.0) || nx < 1 || ny < 1 {
        return Err(Error::InvalidSpec("degenerate rectangle mesh".into()));
    }
    let lower = WallProfile::flat(x_range[0]);
    let upper = WallProfile::flat(x_range[1]);
    let map = move |u: f64, v: f64| -> [f64; 2] {
        [x_range[0] + width * u, y_range[0] + height * v]
    };
    let blocks = [Block {
        map: Box::new(map),
        mu: nx,
        mv: ny,
        boundary_sides: vec![
            (Side::West, FacetTag::Wall),
            (Side::East, FacetTag::Wall),
            (Side::South, FacetTag::InflowEnd),
            (Side::North, FacetTag::OutflowEnd),
        ],
    }];
    let (nodes, cells2, boundary_edges, corner_nodes) =
        build_from_blocks(&blocks, width.max(height));
    let frames = wall_frames(&nodes, &boundary_edges, &lower, &upper, x_range[0], x_range[1]);
    let mut mesh = Mesh {
        dim: 2,
        nodes,
        cells2,
        cells1: Vec::new(),
        boundary_edges,
        boundary_points: Vec::new(),
        frames,
        corner_nodes,
        geom: Vec::new(),
        strip: None,
        spec: None,
    };
    mesh.precompute_geometry();
    mesh.validate()?;
    Ok(mesh)
}

fn build_strip_lattice(
    lower: WallProfile,
    upper: WallProfile,
    zeta: f64,
    z: f64,
    nx: usize,
    ny: usize,
    spec: DomainSpec,
) -> Result<Mesh> {
    let map = move |u: f64, v: f64| -> [f64; 2] {
        let x2 = -zeta + 2.0 * zeta * v;
        let lo = lower.value(x2);
        let hi = upper.value(x2);
        [lo + (hi - lo) * u, x2]
    };
    let blocks = [Block {
        map: Box::new(map),
        mu: nx,
        mv: ny,
        boundary_sides: vec![
            (Side::West, FacetTag::Wall),
            (Side::East, FacetTag::Wall),
            (Side::South, FacetTag::InflowEnd),
            (Side::North, FacetTag::OutflowEnd),
        ],
    }];
    let (nodes, cells2, boundary_edges, corner_nodes) = build_from_blocks(&blocks, 2.0 * zeta);
    let frames = wall_frames(
        &nodes,
        &boundary_edges,
        &lower,
        &upper,
        lower.value(0.0),
        upper.value(0.0),
    );
    let mut mesh = Mesh {
        dim: 2,
        nodes,
        cells2,
        cells1: Vec::new(),
        boundary_edges,
        boundary_points: Vec::new(),
        frames,
        corner_nodes,
        geom: Vec::new(),
        strip: Some(StripLayout {
            nx,
            ny,
            zeta,
            z,
            lower,
            upper,
        }),
        spec: Some(spec),
    };
    mesh.precompute_geometry();
    mesh.validate()?;
    Ok(mesh)
}

/// Frames for strip-like meshes: wall frames from the wall-function
/// derivatives, end frames constant axial. Wall frames win at corners.
fn wall_frames(
    nodes: &[[f64; 2]],
    boundary_edges: &[BoundaryEdge],
    lower: &WallProfile,
    upper: &WallProfile,
    lower_mid: f64,
    upper_mid: f64,
) -> BTreeMap<usize, Frame> {
    let mut frames = BTreeMap::new();
    for edge in boundary_edges {
        for &n in &edge.nodes {
            let [x1, x2] = nodes[n];
            let frame = match edge.tag {
                FacetTag::Wall => {
                    // decide which wall by proximity
                    let upper_wall =
                        (x1 - upper.value(x2)).abs() < (x1 - lower.value(x2)).abs();
                    let (b1, b2) = if upper_wall {
                        (upper.deriv(x2), upper.deriv2(x2))
                    } else {
                        (lower.deriv(x2), lower.deriv2(x2))
                    };
                    let (normal, tangent) = graph_wall_frame(b1, upper_wall);
                    Frame {
                        normal,
                        tangent,
                        curvature: graph_wall_curvature(b1, b2, upper_wall),
                    }
                }
                FacetTag::InflowEnd => Frame {
                    normal: [0.0, -1.0],
                    tangent: [1.0, 0.0],
                    curvature: 0.0,
                },
                FacetTag::OutflowEnd => Frame {
                    normal: [0.0, 1.0],
                    tangent: [-1.0, 0.0],
                    curvature: 0.0,
                },
            };
            match edge.tag {
                FacetTag::Wall => {
                    frames.insert(n, frame);
                }
                _ => {
                    frames.entry(n).or_insert(frame);
                }
            }
        }
    }
    let _ = (lower_mid, upper_mid);
    frames
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DomainKind;

    fn strip_spec(upper: WallProfile, zeta: f64, z: f64) -> DomainSpec {
        DomainSpec {
            kind: DomainKind::DistortedStrip {
                lower: WallProfile::flat(0.0),
                upper,
                zeta,
                z,
            },
            alpha: 1.0,
        }
    }

    #[test]
    fn straight_strip_is_a_uniform_rectangle() {
        let spec = strip_spec(WallProfile::flat(1.0), 4.0, 0.0);
        let m = build_strip_mesh(&spec, 4).unwrap();
        assert!((m.area() - 8.0).abs() < 1e-12);
        for (_, f) in &m.frames {
            // all wall normals +-e1, ends +-e2, curvature 0
            assert!(f.curvature.abs() < 1e-15);
            assert!(f.normal[0].abs() == 1.0 || f.normal[1].abs() == 1.0);
        }
    }

    #[test]
    fn bump_wall_curvature_matches_plane_curve_formula() {
        let upper = WallProfile::bump(1.0, 0.3, 2.0);
        let spec = strip_spec(upper, 4.0, 2.0);
        let m = build_strip_mesh(&spec, 6).unwrap();
        // node closest to the crest of the bump on the upper wall
        let crest = m
            .frames
            .iter()
            .filter(|(&n, _)| {
                let p = m.nodes[n];
                (p[0] - upper.value(p[1])).abs() < 1e-9
            })
            .min_by(|a, b| {
                let pa = m.nodes[*a.0][1].abs();
                let pb = m.nodes[*b.0][1].abs();
                pa.partial_cmp(&pb).unwrap()
            })
            .unwrap();
        let b2 = upper.deriv2(m.nodes[*crest.0][1]);
        let b1 = upper.deriv(m.nodes[*crest.0][1]);
        let expect = -b2 / (1.0 + b1 * b1).powf(1.5);
        assert!((crest.1.curvature - expect).abs() < 1e-12);
    }

    #[test]
    fn mesh_jacobians_positive_even_with_strong_bump() {
        let spec = strip_spec(WallProfile::bump(1.0, 0.45, 1.5), 4.0, 2.0);
        let m = build_strip_mesh(&spec, 5).unwrap();
        for cell in &m.geom {
            for qp in cell {
                assert!(qp.det > 0.0);
            }
        }
    }
}
