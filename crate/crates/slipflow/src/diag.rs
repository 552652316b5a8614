//! Numerical certification of the analytical statements on computed fields:
//! flux constancy, the Payne identity, Poincare and combined Korn-type
//! ratios, the curvilinear slip residual, and exponential decay fitting.

use crate::assemble;
use crate::error::{Error, Result};
use crate::mesh::{FacetTag, Mesh};
use crate::quadrature::GaussRule;
use crate::space::Field;

/// L2 norm of a vector field.
pub fn vector_l2_norm(u: &Field) -> Result<f64> {
    let m = assemble::vector_mass(&u.space)?.to_csr();
    Ok(m.quadratic(&u.dofs).max(0.0).sqrt())
}

/// H1 norm (L2 + gradient seminorm) of a vector field.
pub fn vector_h1_norm(u: &Field) -> Result<f64> {
    let m = assemble::vector_mass(&u.space)?.to_csr();
    let g = assemble::gradient_form(&u.space)?.to_csr();
    Ok((m.quadratic(&u.dofs) + g.quadratic(&u.dofs)).max(0.0).sqrt())
}

/// Gradient seminorm of a vector field.
pub fn vector_h1_seminorm(u: &Field) -> Result<f64> {
    let g = assemble::gradient_form(&u.space)?.to_csr();
    Ok(g.quadratic(&u.dofs).max(0.0).sqrt())
}

// ---------------------------------------------------------------------------
// flux constancy
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct FluxProfile {
    /// (axial station, flux) at every axial quadrature level.
    pub stations: Vec<(f64, f64)>,
    pub max_drift_relative: f64,
}

/// Flux through every axial quadrature station of a strip velocity field.
pub fn flux_profile(u: &Field) -> Result<FluxProfile> {
    let mesh = &u.space.mesh;
    let layout = mesh
        .strip
        .as_ref()
        .ok_or_else(|| Error::Contract("flux profile needs a strip mesh".into()))?;
    let rule = GaussRule::new(3);
    let mut stations = Vec::new();
    for row in 0..layout.ny {
        for &eta in &rule.points {
            let mut flux = 0.0;
            let mut x2 = 0.0;
            for col in 0..layout.nx {
                let cell = row * layout.nx + col;
                for (k, &xi) in rule.points.iter().enumerate() {
                    let geom = mesh.cell_geom_at(cell, xi, eta);
                    let (v, _) = u.eval_vector(cell, xi, eta);
                    flux += rule.weights[k] * geom.jac[0][0] * v[1];
                    x2 = geom.xy[1];
                }
            }
            stations.push((x2, flux));
        }
    }
    let max = stations.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let min = stations.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let mean = stations.iter().map(|s| s.1).sum::<f64>() / stations.len() as f64;
    Ok(FluxProfile {
        stations,
        max_drift_relative: (max - min) / mean.abs().max(1e-300),
    })
}

// ---------------------------------------------------------------------------
// Payne identity
// ---------------------------------------------------------------------------

/// Integral residual of the planar Payne identity for a field with vanishing
/// normal trace: analytically zero; discretely the boundary-flux defect.
pub fn payne_residual(f: &Field, x0: [f64; 2]) -> Result<f64> {
    let mesh = &f.space.mesh;
    // contract: f . n at wall nodes must vanish
    for (&node, frame) in &mesh.frames {
        let v = [f.dofs[2 * node], f.dofs[2 * node + 1]];
        let vn = v[0] * frame.normal[0] + v[1] * frame.normal[1];
        let scale = (v[0] * v[0] + v[1] * v[1]).sqrt().max(1.0);
        if vn.abs() > 1e-8 * scale {
            return Err(Error::Contract(format!(
                "payne residual needs f.n = 0 at wall nodes; node {node} has {vn:.3e}"
            )));
        }
    }
    let rule = Mesh::default_rule_2d();
    let mut acc = 0.0;
    for c in 0..mesh.cells2.len() {
        for (q, pt) in rule.points.iter().enumerate() {
            let geom = &mesh.geom[c][q];
            let (v, g) = f.eval_vector(c, pt[0], pt[1]);
            let xj = [geom.xy[0] - x0[0], geom.xy[1] - x0[1]];
            let div = g[0][0] + g[1][1];
            let xf = xj[0] * v[0] + xj[1] * v[1];
            let f2 = v[0] * v[0] + v[1] * v[1];
            // sum_ij f_i X_j d_i f_j
            let mut cross = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    cross += v[i] * xj[j] * g[j][i];
                }
            }
            acc += rule.weights[q] * geom.det * (div * xf + f2 + cross);
        }
    }
    Ok(acc.abs())
}

// ---------------------------------------------------------------------------
// Poincare ratios
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoincareMode {
    /// Transverse components with vanishing normal trace (straight-pipe
    /// partial inequality).
    Transverse,
    /// Full field after subtracting the flux-carrying profile: every
    /// cross-section mean of the axial component must vanish.
    FluxSubtracted,
    /// Truncated-domain variant: zero total flux through sections.
    TruncatedDomain,
}

/// ||w||_L2 / ||grad w||_L2 with mode-specific hypothesis validation.
pub fn poincare_ratio(w: &Field, mode: PoincareMode) -> Result<f64> {
    let mesh = &w.space.mesh;
    match mode {
        PoincareMode::Transverse => {
            let is_strip = mesh.strip.is_some();
            for (&node, frame) in &mesh.frames {
                if !mesh
                    .boundary_edges
                    .iter()
                    .any(|e| e.tag == FacetTag::Wall && e.nodes.contains(&node))
                {
                    continue;
                }
                // normal trace of the transverse part: on a strip the axial
                // direction is x2 and only w1 counts; on a cross-section the
                // whole in-plane field is transverse
                let vn = if is_strip {
                    w.dofs[2 * node] * frame.normal[0]
                } else {
                    w.dofs[2 * node] * frame.normal[0] + w.dofs[2 * node + 1] * frame.normal[1]
                };
                if vn.abs() > 1e-8 {
                    return Err(Error::Contract(format!(
                        "transverse normal trace {vn:.3e} at node {node} violates the hypothesis"
                    )));
                }
            }
        }
        PoincareMode::FluxSubtracted | PoincareMode::TruncatedDomain => {
            let profile = flux_profile(w)?;
            let norm = vector_l2_norm(w)?;
            let worst = profile
                .stations
                .iter()
                .map(|s| s.1.abs())
                .fold(0.0f64, f64::max);
            let tol = 1e-8 * norm.max(1e-12);
            let violated = match mode {
                PoincareMode::FluxSubtracted => worst > tol,
                _ => profile.stations.first().map(|s| s.1.abs()).unwrap_or(0.0) > tol,
            };
            if violated {
                return Err(Error::Contract(format!(
                    "nonzero section flux (max {worst:.3e}) violates the zero-mean hypothesis"
                )));
            }
        }
    }
    let l2 = vector_l2_norm(w)?;
    let h1 = vector_h1_seminorm(w)?;
    if h1 == 0.0 {
        return Err(Error::Contract("gradient-free field has no Poincare ratio".into()));
    }
    Ok(l2 / h1)
}

// ---------------------------------------------------------------------------
// combined Korn-type ratio
// ---------------------------------------------------------------------------

/// (2 int |Su|^2 + alpha int_wall |u_tan|^2) / int |grad u|^2.
pub fn korn_combined_ratio(u: &Field, alpha: f64) -> Result<f64> {
    let stress = assemble::stress_form(&u.space)?.to_csr();
    let slip = assemble::slip_boundary_form(&u.space, alpha)?.to_csr();
    let grad = assemble::gradient_form(&u.space)?.to_csr();
    let denom = grad.quadratic(&u.dofs);
    if denom <= 0.0 {
        return Err(Error::Contract("constant field has no Korn ratio".into()));
    }
    Ok((stress.quadratic(&u.dofs) + slip.quadratic(&u.dofs)) / denom)
}

// ---------------------------------------------------------------------------
// curvilinear slip residuals
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SlipResidual {
    /// Per wall node: (node, |d_n u_tau - (kappa - alpha) u_tau|, |u . n|).
    pub rows: Vec<(usize, f64, f64)>,
    pub max_tangential: f64,
    pub max_normal: f64,
}

/// Pointwise slip-condition residual of an in-plane vector field along the
/// walls, using one-sided mapped-gradient evaluation at boundary nodes.
pub fn slip_residual_inplane(u: &Field, alpha: f64) -> Result<SlipResidual> {
    let mesh = &u.space.mesh;
    let mut rows = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for edge in &mesh.boundary_edges {
        if edge.tag != FacetTag::Wall {
            continue;
        }
        for &node in &edge.nodes {
            if !seen.insert(node) {
                continue;
            }
            let frame = &mesh.frames[&node];
            let (xi, eta) = mesh
                .node_ref_in_cell(edge.cell, node)
                .ok_or_else(|| Error::Contract("node not in its boundary cell".into()))?;
            let (v, g) = u.eval_vector(edge.cell, xi, eta);
            let n = frame.normal;
            let tau = frame.tangent;
            let u_tau = v[0] * tau[0] + v[1] * tau[1];
            let u_n = v[0] * n[0] + v[1] * n[1];
            // d_n u_tau with the frame transported along the normal
            let mut dn_utau = 0.0;
            for a in 0..2 {
                for d in 0..2 {
                    dn_utau += tau[a] * g[a][d] * n[d];
                }
            }
            let res = (dn_utau - (frame.curvature - alpha) * u_tau).abs();
            rows.push((node, res, u_n.abs()));
        }
    }
    let max_tangential = rows.iter().map(|r| r.1).fold(0.0f64, f64::max);
    let max_normal = rows.iter().map(|r| r.2).fold(0.0f64, f64::max);
    Ok(SlipResidual {
        rows,
        max_tangential,
        max_normal,
    })
}

/// Robin residual |d_n g + alpha g| of an axial (scalar) profile at wall
/// nodes of a cross-section mesh.
pub fn slip_residual_axial(g: &Field, alpha: f64) -> Result<SlipResidual> {
    let mesh = &g.space.mesh;
    let mut rows = Vec::new();
    if mesh.dim == 1 {
        for bp in &mesh.boundary_points {
            let cell = if bp.node == 0 { 0 } else { mesh.cells1.len() - 1 };
            let xi = if bp.node == 0 { -1.0 } else { 1.0 };
            let (v, d) = g.eval_scalar_1d(cell, xi);
            rows.push((bp.node, (d * bp.outward + alpha * v).abs(), 0.0));
        }
    } else {
        let mut seen = std::collections::BTreeSet::new();
        for edge in &mesh.boundary_edges {
            if edge.tag != FacetTag::Wall {
                continue;
            }
            for &node in &edge.nodes {
                if !seen.insert(node) {
                    continue;
                }
                let frame = &mesh.frames[&node];
                let (xi, eta) = mesh
                    .node_ref_in_cell(edge.cell, node)
                    .ok_or_else(|| Error::Contract("node not in its boundary cell".into()))?;
                let (v, grad) = g.eval_scalar(edge.cell, xi, eta);
                let dn = grad[0] * frame.normal[0] + grad[1] * frame.normal[1];
                rows.push((node, (dn + alpha * v).abs(), 0.0));
            }
        }
    }
    let max_tangential = rows.iter().map(|r| r.1).fold(0.0f64, f64::max);
    Ok(SlipResidual {
        rows,
        max_tangential,
        max_normal: 0.0,
    })
}

// ---------------------------------------------------------------------------
// exponential decay fit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct DecayFit {
    /// Station positions actually used (snapped to mesh rows).
    pub stations: Vec<f64>,
    /// Tail energies G at those stations.
    pub energies: Vec<f64>,
    pub sigma: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub dropped_stations: usize,
    pub valid: bool,
    /// Fit of the pointwise section-sup decay, when measurable.
    pub pointwise_sigma: Option<f64>,
}

/// Tail energy G(zeta) = int_{|x2| > zeta} |grad v|^2 over both outlets.
pub fn tail_energy(v: &Field, zeta: f64) -> Result<f64> {
    let mesh = &v.space.mesh;
    let rule = Mesh::default_rule_2d();
    let mut acc = 0.0;
    for c in 0..mesh.cells2.len() {
        // a cell is in the tail when its whole x2 range clears the station
        let min_abs = mesh.cells2[c]
            .iter()
            .map(|&n| mesh.nodes[n][1].abs())
            .fold(f64::INFINITY, f64::min);
        let signs_equal = {
            let s: Vec<f64> = mesh.cells2[c]
                .iter()
                .map(|&n| mesh.nodes[n][1].signum())
                .collect();
            s.iter().all(|&x| x >= 0.0) || s.iter().all(|&x| x <= 0.0)
        };
        if min_abs < zeta - 1e-12 || !signs_equal {
            continue;
        }
        for (q, pt) in rule.points.iter().enumerate() {
            let geom = &mesh.geom[c][q];
            let (_, g) = v.eval_vector(c, pt[0], pt[1]);
            let g2: f64 = g.iter().flatten().map(|x| x * x).sum();
            acc += rule.weights[q] * geom.det * g2;
        }
    }
    Ok(acc)
}

/// Least-squares fit of log G against the station coordinate.
pub fn decay_fit(v: &Field, stations: &[f64]) -> Result<DecayFit> {
    let mesh = &v.space.mesh;
    let layout = mesh
        .strip
        .as_ref()
        .ok_or_else(|| Error::Contract("decay fit needs a strip mesh".into()))?;
    if stations.len() < 4 {
        return Err(Error::Contract("decay fit needs at least 4 stations".into()));
    }
    let mut sorted = stations.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in sorted.windows(2) {
        if w[1] - w[0] < 1e-12 {
            return Err(Error::Contract("decay stations must be distinct".into()));
        }
    }
    for &s in &sorted {
        if s <= layout.z || s >= layout.zeta {
            return Err(Error::Contract(format!(
                "station {s} outside the straight outlet ({}, {})",
                layout.z, layout.zeta
            )));
        }
    }
    // snap stations to mesh rows
    let dy = 2.0 * layout.zeta / layout.ny as f64;
    let snapped: Vec<f64> = sorted
        .iter()
        .map(|&s| (s / dy).round() * dy)
        .collect();

    let floor = 100.0 * f64::EPSILON;
    let mut used_st = Vec::new();
    let mut used_g = Vec::new();
    let mut dropped = 0;
    for &s in &snapped {
        let g = tail_energy(v, s)?;
        if g > floor {
            used_st.push(s);
            used_g.push(g);
        } else {
            dropped += 1;
        }
    }
    if used_st.len() < 2 {
        return Ok(DecayFit {
            stations: used_st,
            energies: used_g,
            sigma: 0.0,
            prefactor: 0.0,
            r_squared: 0.0,
            dropped_stations: dropped,
            valid: false,
            pointwise_sigma: None,
        });
    }
    let logs: Vec<f64> = used_g.iter().map(|g| g.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&used_st, &logs);

    // pointwise sup decay over section nodes
    let pointwise_sigma = pointwise_decay_sigma(v, &used_st, floor);

    Ok(DecayFit {
        stations: used_st,
        energies: used_g,
        sigma: -slope,
        prefactor: intercept.exp(),
        r_squared: r2,
        dropped_stations: dropped,
        valid: true,
        pointwise_sigma,
    })
}

fn pointwise_decay_sigma(v: &Field, stations: &[f64], floor: f64) -> Option<f64> {
    let mesh = &v.space.mesh;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &s in stations {
        // sup of |v| over nodes near the two stations +-s
        let mut sup: f64 = 0.0;
        let dy = {
            let layout = mesh.strip.as_ref()?;
            2.0 * layout.zeta / layout.ny as f64
        };
        for (n, p) in mesh.nodes.iter().enumerate() {
            if (p[1].abs() - s).abs() < 0.5 * dy {
                let m = (v.dofs[2 * n].powi(2) + v.dofs[2 * n + 1].powi(2)).sqrt();
                sup = sup.max(m);
            }
        }
        if sup > floor.sqrt() {
            xs.push(s);
            ys.push(sup.ln());
        }
    }
    if xs.len() < 2 {
        return None;
    }
    let (slope, _, _) = linear_fit(&xs, &ys);
    Some(-slope)
}

/// Ordinary least squares y = a x + b; returns (a, b, R^2).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

// ---------------------------------------------------------------------------
// energy linearity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct LinearityTable {
    /// (phi, ||v||_H1, ratio).
    pub rows: Vec<(f64, f64, f64)>,
    /// Largest relative spread of the ratios.
    pub max_spread: f64,
}

/// Table of ||v||_H1 / phi over a family of solutions.
pub fn energy_linearity(entries: &[(f64, f64)]) -> Result<LinearityTable> {
    if entries.len() < 2 {
        return Err(Error::Contract("linearity table needs at least 2 solutions".into()));
    }
    let rows: Vec<(f64, f64, f64)> = entries
        .iter()
        .map(|&(phi, h1)| (phi, h1, h1 / phi.abs().max(1e-300)))
        .collect();
    let ratios: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let rmax = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rmin = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(LinearityTable {
        rows,
        max_spread: (rmax - rmin) / rmax.abs().max(1e-300),
    })
}

/// True when the final iterations contract at least quadratically: the
/// second differences of log residual are negative.
pub fn quadratic_convergence_indicator(history: &[f64]) -> bool {
    let logs: Vec<f64> = history
        .iter()
        .filter(|r| **r > 0.0)
        .map(|r| r.ln())
        .collect();
    if logs.len() < 3 {
        return true; // too few iterations to falsify
    }
    let tail = &logs[logs.len() - 3..];
    tail[2] - 2.0 * tail[1] + tail[0] < 0.0
}
