//! Five-block butterfly meshes for disk and star-shaped cross-sections.
//!
//! A center square is surrounded by four transfinite blocks whose outer edges
//! sample the exact boundary curve, so no mapping degenerates at the center
//! and boundary mid-edge nodes sit on the true boundary.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::{
    build_from_blocks, interval_mesh, Block, BoundaryEdge, DomainKind, DomainSpec, FacetTag,
    Frame, Mesh, Side,
};
use crate::error::{Error, Result};
use crate::geometry::polar_curvature;
use crate::quadrature::GaussRule;

/// Build the cross-section mesh for Interval, Disk, or StarShaped specs.
pub fn build_cross_section_mesh(spec: &DomainSpec, resolution: usize) -> Result<Mesh> {
    spec.validate()?;
    if resolution < 2 {
        return Err(Error::InvalidSpec("cross-section resolution must be >= 2".into()));
    }
    match &spec.kind {
        DomainKind::Interval { length } => interval_mesh(*length, resolution, spec.alpha),
        DomainKind::Disk { radius } => butterfly_mesh(&Circle { radius: *radius }, resolution, spec),
        DomainKind::StarShaped { radii } => {
            let curve = PolarTable::new(radii.clone());
            butterfly_mesh(&curve, resolution, spec)
        }
        DomainKind::DistortedStrip { .. } => Err(Error::Contract(
            "build_cross_section_mesh does not accept DistortedStrip; use build_strip_mesh".into(),
        )),
    }
}

/// Closed boundary curve in polar form.
trait PolarCurve {
    fn radius(&self, theta: f64) -> f64;
    fn radius_d1(&self, theta: f64) -> f64;
    fn radius_d2(&self, theta: f64) -> f64;
    fn min_radius(&self) -> f64;

    fn point(&self, theta: f64) -> [f64; 2] {
        let r = self.radius(theta);
        [r * theta.cos(), r * theta.sin()]
    }

    /// Outward normal, tangent (tau = rot90(n)), and signed curvature.
    fn frame(&self, theta: f64) -> Frame {
        let r = self.radius(theta);
        let r1 = self.radius_d1(theta);
        let (s, c) = theta.sin_cos();
        // tangent along increasing theta
        let t = [r1 * c - r * s, r1 * s + r * c];
        let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
        let tangent = [t[0] / len, t[1] / len];
        let normal = [tangent[1], -tangent[0]];
        Frame {
            normal,
            tangent,
            curvature: polar_curvature(r, r1, self.radius_d2(theta)),
        }
    }
}

struct Circle {
    radius: f64,
}

impl PolarCurve for Circle {
    fn radius(&self, _: f64) -> f64 {
        self.radius
    }
    fn radius_d1(&self, _: f64) -> f64 {
        0.0
    }
    fn radius_d2(&self, _: f64) -> f64 {
        0.0
    }
    fn min_radius(&self) -> f64 {
        self.radius
    }
}

/// Periodic radius table with local quadratic interpolation.
pub(crate) struct PolarTable {
    radii: Vec<f64>,
}

impl PolarTable {
    pub(crate) fn new(radii: Vec<f64>) -> Self {
        PolarTable { radii }
    }

    fn local(&self, theta: f64) -> (usize, f64) {
        let n = self.radii.len();
        let step = 2.0 * PI / n as f64;
        let t = theta.rem_euclid(2.0 * PI) / step;
        let k = t.round() as usize % n;
        // offset in [-1/2, 1/2] panels around sample k
        let phi = t - t.round();
        (k, phi)
    }

    fn sample(&self, k: isize) -> f64 {
        let n = self.radii.len() as isize;
        self.radii[k.rem_euclid(n) as usize]
    }
}

impl PolarCurve for PolarTable {
    fn radius(&self, theta: f64) -> f64 {
        let (k, phi) = self.local(theta);
        let (a, b, c) = (
            self.sample(k as isize - 1),
            self.sample(k as isize),
            self.sample(k as isize + 1),
        );
        a * 0.5 * phi * (phi - 1.0) + b * (1.0 - phi * phi) + c * 0.5 * phi * (phi + 1.0)
    }

    fn radius_d1(&self, theta: f64) -> f64 {
        let n = self.radii.len();
        let step = 2.0 * PI / n as f64;
        let (k, phi) = self.local(theta);
        let (a, b, c) = (
            self.sample(k as isize - 1),
            self.sample(k as isize),
            self.sample(k as isize + 1),
        );
        (a * (phi - 0.5) - 2.0 * phi * b + c * (phi + 0.5)) / step
    }

    fn radius_d2(&self, theta: f64) -> f64 {
        let n = self.radii.len();
        let step = 2.0 * PI / n as f64;
        let (k, _) = self.local(theta);
        let (a, b, c) = (
            self.sample(k as isize - 1),
            self.sample(k as isize),
            self.sample(k as isize + 1),
        );
        (a - 2.0 * b + c) / (step * step)
    }

    fn min_radius(&self) -> f64 {
        self.radii.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

fn butterfly_mesh(curve: &dyn PolarCurve, resolution: usize, spec: &DomainSpec) -> Result<Mesh> {
    // kr radial cells in the outer ring, m cells per center-square side;
    // a diameter crosses kr + m + kr ~ resolution cells.
    let kr = (resolution as f64 / 4.0).round().max(1.0) as usize;
    let m = (resolution - (2 * kr).min(resolution.saturating_sub(1))).max(2);
    let s = 0.5 * curve.min_radius() * std::f64::consts::FRAC_1_SQRT_2 * 1.2;

    // center square corners, sides facing +x, +y, -x, -y
    let inner = move |k: usize, t: f64| -> [f64; 2] {
        match k {
            0 => [s, -s + 2.0 * s * t],
            1 => [s - 2.0 * s * t, s],
            2 => [-s, s - 2.0 * s * t],
            _ => [-s + 2.0 * s * t, -s],
        }
    };

    let mut blocks: Vec<Block<'_>> = Vec::new();
    blocks.push(Block {
        map: Box::new(move |u, v| [-s + 2.0 * s * u, -s + 2.0 * s * v]),
        mu: m,
        mv: m,
        boundary_sides: vec![],
    });
    for k in 0..4usize {
        let theta0 = k as f64 * PI / 2.0 - PI / 4.0;
        let map = move |u: f64, v: f64| -> [f64; 2] {
            let p_in = inner(k, v);
            let theta = theta0 + v * PI / 2.0;
            let p_out = curve_point(curve, theta);
            [
                (1.0 - u) * p_in[0] + u * p_out[0],
                (1.0 - u) * p_in[1] + u * p_out[1],
            ]
        };
        blocks.push(Block {
            map: Box::new(map),
            mu: kr,
            mv: m,
            boundary_sides: vec![(Side::East, FacetTag::Wall)],
        });
    }

    let scale = curve.min_radius();
    let (nodes, cells2, boundary_edges, corner_nodes) = build_from_blocks(&blocks, scale);
    let frames = boundary_frames(curve, &nodes, &boundary_edges);
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
        spec: Some(spec.clone()),
    };
    mesh.precompute_geometry();
    mesh.validate()?;
    Ok(mesh)
}

fn curve_point(curve: &dyn PolarCurve, theta: f64) -> [f64; 2] {
    curve.point(theta)
}

fn boundary_frames(
    curve: &dyn PolarCurve,
    nodes: &[[f64; 2]],
    boundary_edges: &[BoundaryEdge],
) -> BTreeMap<usize, Frame> {
    let mut frames = BTreeMap::new();
    for edge in boundary_edges {
        for &n in &edge.nodes {
            frames.entry(n).or_insert_with(|| {
                let p = nodes[n];
                let theta = p[1].atan2(p[0]);
                curve.frame(theta)
            });
        }
    }
    frames
}

/// Area enclosed by the interpolated star boundary, 0.5 * int r(theta)^2,
/// integrated panel-by-panel at high order. Reference value for mesh-area
/// convergence checks.
pub fn star_area_reference(radii: &[f64]) -> f64 {
    let table = PolarTable::new(radii.to_vec());
    let n = radii.len();
    let step = 2.0 * PI / n as f64;
    let rule = GaussRule::new(8);
    let mut area = 0.0;
    for k in 0..n {
        let a = k as f64 * step - 0.5 * step;
        let b = a + step;
        area += rule.integrate(a, b, |theta| 0.5 * table.radius(theta).powi(2));
    }
    area
}
