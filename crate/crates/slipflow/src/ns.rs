//! Steady nonlinear Navier-Stokes in the truncated distorted strip.
//!
//! The discrete unknown is the full velocity u with u = g (the Poiseuille
//! interpolant) imposed strongly at the artificial ends, so the nonlinear
//! problem is independent of how the background field was gauged; the
//! deficit v = u - a is recovered afterwards. Globalization is a few Picard
//! (Oseen) sweeps followed by Newton with an exact Jacobian, and convergence
//! is measured in a lumped-mass dual norm of the residual.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::assemble::{self, Advect};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::profile::ProfileVector;
use crate::space::{Family, Field, Space};
use crate::sparse::{CooMat, CsrMat};
use crate::stokes::pressure_integrals;
use crate::system::{AssembledSystem, Constraints};

#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iters: usize,
    pub picard_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol_abs: 1e-10,
            tol_rel: 1e-12,
            max_iters: 25,
            picard_iters: 3,
        }
    }
}

pub struct NSProblem {
    pub mesh: Arc<Mesh>,
    pub alpha: f64,
    pub phi: f64,
    pub profile: ProfileVector,
    pub settings: SolverSettings,
}

#[derive(Debug, Clone)]
pub enum InitialGuess {
    /// v = 0, u = the background interpolant.
    Background,
    /// Background plus a fixed smooth divergence-free bubble of the given
    /// relative amplitude.
    PerturbedBackground(f64),
    /// Background plus seeded random stream-function noise.
    RandomDivFree { seed: u64, amplitude: f64 },
    /// Warm start from a previous full velocity.
    Velocity(Vec<f64>),
}

pub struct NSSolution {
    /// Full velocity u.
    pub u: Field,
    /// Deficit v = u - a (dofwise against the background interpolant).
    pub v: Field,
    /// Zero-mean modified pressure.
    pub pi: Field,
    /// Reconstructed physical pressure (zero-mean pi minus the Poiseuille
    /// balance term).
    pub pressure: Field,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

struct Operators {
    space: Arc<Space>,
    vspace: Arc<Space>,
    pspace: Arc<Space>,
    /// stress + slip + saddle coupling (all linear terms).
    linear: CooMat,
    linear_csr: CsrMat,
    constraints: Constraints,
    /// lumped velocity mass (dual-norm weights).
    lumped_mass: Vec<f64>,
    /// lumped pressure mass.
    lumped_pressure: Vec<f64>,
}

impl Operators {
    fn build(problem: &NSProblem) -> Result<Operators> {
        let mesh = &problem.mesh;
        let space = Space::new(mesh.clone(), Family::MixedQ2Q1);
        let vspace = Space::new(mesh.clone(), Family::VectorQ2);
        let pspace = Space::new(mesh.clone(), Family::ScalarQ1);
        let mut linear = assemble::stress_form(&space)?;
        for &(r, c, v) in assemble::slip_boundary_form(&space, problem.alpha)?.entries() {
            linear.push(r, c, v);
        }
        let div = assemble::divergence_coupling(&space)?;
        for &(r, c, v) in div.entries() {
            linear.push(r, c, v);
            coo_push(&mut linear, c, r, -v);
        }
        let linear_csr = linear.to_csr();
        let mass = assemble::vector_mass(&space)?.to_csr();
        let mut lumped_mass = vec![0.0; space.ndof];
        for r in 0..mass.nrows {
            let mut acc = 0.0;
            for k in mass.row_ptr[r]..mass.row_ptr[r + 1] {
                acc += mass.vals[k];
            }
            lumped_mass[r] = acc;
        }
        let lumped_pressure = pressure_integrals(&space);
        let g = &problem.profile;
        let end_values: Vec<[f64; 2]> = mesh.nodes.iter().map(|&p| g.value(p)).collect();
        let constraints = Constraints::none(&space)
            .impermeable_walls()?
            // v = 0 at the artificial ends, i.e. u = the background values
            .dirichlet_ends(|_, node, _| end_values[node])
            .pressure_gauge(lumped_pressure.clone());
        Ok(Operators {
            space,
            vspace,
            pspace,
            linear,
            linear_csr,
            constraints,
            lumped_mass,
            lumped_pressure,
        })
    }

    /// Full nonlinear residual R(x) = L x + N(u).
    fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.linear_csr.matvec(x);
        let n = assemble::nonlinear_convection_residual(&self.space, x)?;
        for (a, b) in r.iter_mut().zip(&n) {
            *a += b;
        }
        Ok(r)
    }

    /// Dual norm of the residual restricted to free dofs.
    fn residual_norm(&self, sys: &AssembledSystem, full_residual: &[f64]) -> f64 {
        let rot = sys.restrict_residual(full_residual);
        let nv = self.space.n_velocity_dofs();
        let mut vel = 0.0;
        let mut mass = 0.0;
        for d in 0..self.space.ndof {
            if let Some(i) = sys.reduction.free_index[d] {
                let r = rot[i];
                if d < nv {
                    let m = self.lumped_mass[d].max(1e-300);
                    vel += r * r / m;
                } else {
                    let m = self.lumped_pressure[d - nv].max(1e-300);
                    mass += r * r / m;
                }
            }
        }
        (vel + mass).sqrt()
    }
}

fn coo_push(coo: &mut CooMat, r: usize, c: usize, v: f64) {
    coo.push(r, c, v);
}

/// Solve the nonlinear problem from the given start.
pub fn solve_ns(problem: &NSProblem, guess: &InitialGuess) -> Result<NSSolution> {
    let ops = Operators::build(problem)?;
    let mut x = initial_dofs(problem, &ops, guess)?;
    project_velocity(&ops, &mut x);

    let settings = &problem.settings;
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut norm0 = f64::NAN;

    for it in 0..settings.max_iters {
        let residual = ops.residual(&x)?;
        // reuse the current Jacobian's reduction maps for the norm; the
        // structure does not depend on the linearization point
        let jac = self_jacobian(&ops, &x, it >= settings.picard_iters)?;
        let neg_res: Vec<f64> = residual.iter().map(|v| -v).collect();
        let sys = AssembledSystem::reduce(&jac, &neg_res, &ops.constraints, true);
        let norm = ops.residual_norm(&sys, &residual);
        if !norm.is_finite() {
            return Err(Error::Nonconvergence {
                iterations: it,
                last_residual: norm,
                history,
            });
        }
        history.push(norm);
        if it == 0 {
            norm0 = norm;
        }
        if norm <= settings.tol_abs.max(settings.tol_rel * norm0) {
            converged = true;
            iterations = it;
            break;
        }
        let (delta, _) = sys.solve(true)?;
        for (a, d) in x.iter_mut().zip(&delta) {
            *a += d;
        }
        iterations = it + 1;
    }
    if !converged {
        // final residual check after the last update
        let residual = ops.residual(&x)?;
        let jac = self_jacobian(&ops, &x, true)?;
        let neg_res: Vec<f64> = residual.iter().map(|v| -v).collect();
        let sys = AssembledSystem::reduce(&jac, &neg_res, &ops.constraints, true);
        let norm = ops.residual_norm(&sys, &residual);
        history.push(norm);
        if norm <= settings.tol_abs.max(settings.tol_rel * norm0) {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::Nonconvergence {
            iterations: settings.max_iters,
            last_residual: *history.last().unwrap_or(&f64::NAN),
            history,
        });
    }

    Ok(package_solution(problem, &ops, x, history, iterations))
}

fn self_jacobian(ops: &Operators, x: &[f64], newton: bool) -> Result<CooMat> {
    let u = Field {
        space: ops.vspace.clone(),
        dofs: x[..ops.space.n_velocity_dofs()].to_vec(),
        name: None,
    };
    let mut jac = ops.linear.clone();
    for &(r, c, v) in assemble::convection_form(&ops.space, &Advect::Field(&u))?.entries() {
        jac.push(r, c, v);
    }
    if newton {
        for &(r, c, v) in
            assemble::gradient_coupling_form(&ops.space, &Advect::Field(&u))?.entries()
        {
            jac.push(r, c, v);
        }
    }
    Ok(jac)
}

fn project_velocity(ops: &Operators, x: &mut [f64]) {
    let mut full = x.to_vec();
    ops.constraints.project(&mut full);
    x.copy_from_slice(&full);
}

fn initial_dofs(problem: &NSProblem, ops: &Operators, guess: &InitialGuess) -> Result<Vec<f64>> {
    let mut x = vec![0.0; ops.space.ndof];
    let nv = ops.space.n_velocity_dofs();
    x[..nv].copy_from_slice(&problem.profile.field.dofs);
    match guess {
        InitialGuess::Background => {}
        InitialGuess::PerturbedBackground(amp) => {
            let bubble = stream_bubble(&problem.mesh, 1);
            for d in 0..nv {
                x[d] += amp * problem.phi.max(1e-8) * bubble[d];
            }
        }
        InitialGuess::RandomDivFree { seed, amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let coefs: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut noise = vec![0.0; nv];
            for (k, c) in coefs.iter().enumerate() {
                let b = stream_bubble(&problem.mesh, k + 1);
                for d in 0..nv {
                    noise[d] += c * b[d];
                }
            }
            for d in 0..nv {
                x[d] += amplitude * problem.phi.max(1e-8) * noise[d];
            }
        }
        InitialGuess::Velocity(u0) => {
            if u0.len() != nv {
                return Err(Error::Contract("warm-start velocity has wrong length".into()));
            }
            x[..nv].copy_from_slice(u0);
        }
    }
    Ok(x)
}

/// Divergence-free bubble from a stream function vanishing near the
/// boundary: w = curl(psi_k) interpolated nodally.
fn stream_bubble(mesh: &Arc<Mesh>, k: usize) -> Vec<f64> {
    let layout = mesh.strip.as_ref().expect("strip mesh");
    let zeta = layout.zeta;
    let kk = k as f64;
    let psi = move |p: [f64; 2]| -> f64 {
        let s = p[0] * (1.0 - p[0]);
        let t = (p[1] * p[1] / (zeta * zeta) - 1.0).abs();
        s * s * t * t * (kk * std::f64::consts::PI * p[1] / zeta).cos()
    };
    let h = 1e-6;
    let mut out = vec![0.0; 2 * mesh.n_nodes()];
    for (n, &p) in mesh.nodes.iter().enumerate() {
        let dpsi_dx2 = (psi([p[0], p[1] + h]) - psi([p[0], p[1] - h])) / (2.0 * h);
        let dpsi_dx1 = (psi([p[0] + h, p[1]]) - psi([p[0] - h, p[1]])) / (2.0 * h);
        out[2 * n] = dpsi_dx2;
        out[2 * n + 1] = -dpsi_dx1;
    }
    out
}

fn package_solution(
    problem: &NSProblem,
    ops: &Operators,
    x: Vec<f64>,
    history: Vec<f64>,
    iterations: usize,
) -> NSSolution {
    let nv = ops.space.n_velocity_dofs();
    let u = Field {
        space: ops.vspace.clone(),
        dofs: x[..nv].to_vec(),
        name: Some("velocity".into()),
    };
    let mut v = u.clone();
    v.axpy(-1.0, &problem.profile.field);
    v.name = Some("deficit".into());

    // pressure: the solve gauges p to zero mean; pi adds the Poiseuille
    // balance and is re-gauged, p = pi - balance
    let p_solved = Field {
        space: ops.pspace.clone(),
        dofs: x[nv..].to_vec(),
        name: Some("pressure_raw".into()),
    };
    let eta = &problem.profile.eta;
    let cp = problem.profile.flux_constant;
    let phi = problem.phi;
    let balance = |x2: f64| -> f64 { -phi * eta.integral(x2) / cp + phi * eta.integral(-x2) / cp };
    let mut pi = p_solved.clone();
    for (node, idx) in ops.space.q1_index.iter().enumerate() {
        if let Some(i) = idx {
            pi.dofs[*i] -= balance(ops.space.mesh.nodes[node][1]);
        }
    }
    // re-gauge pi to zero mean
    let w = &ops.lumped_pressure;
    let total: f64 = w.iter().sum();
    let mean: f64 = pi.dofs.iter().zip(w).map(|(p, w)| p * w).sum::<f64>() / total;
    for p in &mut pi.dofs {
        *p -= mean;
    }
    let mut pressure = pi.clone();
    for (node, idx) in ops.space.q1_index.iter().enumerate() {
        if let Some(i) = idx {
            pressure.dofs[*i] += balance(ops.space.mesh.nodes[node][1]);
        }
    }
    NSSolution {
        u,
        v,
        pi: pi.named("pressure_pi"),
        pressure: pressure.named("pressure"),
        residual_history: history,
        converged: true,
        iterations,
    }
}

/// Ascending-flux continuation; each solve warm-starts from the previous.
pub struct SweepResult {
    pub solutions: Vec<(f64, NSSolution)>,
    /// Set when a step failed: flux value and the residual history.
    pub failed_at: Option<(f64, Vec<f64>)>,
}

pub fn continuation_sweep(
    mesh: &Arc<Mesh>,
    alpha: f64,
    sigma_prime: [f64; 2],
    settings: &SolverSettings,
    phi_list: &[f64],
) -> Result<SweepResult> {
    if phi_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Contract("continuation flux list must be ascending".into()));
    }
    let mut out = SweepResult {
        solutions: Vec::new(),
        failed_at: None,
    };
    let mut warm: Option<(f64, Vec<f64>)> = None;
    for &phi in phi_list {
        let profile = crate::profile::assemble_profile_vector(mesh, alpha, phi, sigma_prime)?;
        let problem = NSProblem {
            mesh: mesh.clone(),
            alpha,
            phi,
            profile,
            settings: settings.clone(),
        };
        let guess = match &warm {
            None => InitialGuess::Background,
            Some((phi_prev, u_prev)) => {
                // carry the deficit: u0 = a_new + (u_prev - a_prev)
                let a_prev = crate::profile::assemble_profile_vector(
                    mesh,
                    alpha,
                    *phi_prev,
                    sigma_prime,
                )?;
                let mut u0 = problem.profile.field.dofs.clone();
                for d in 0..u0.len() {
                    u0[d] += u_prev[d] - a_prev.field.dofs[d];
                }
                InitialGuess::Velocity(u0)
            }
        };
        match solve_ns(&problem, &guess) {
            Ok(sol) => {
                warm = Some((phi, sol.u.dofs.clone()));
                out.solutions.push((phi, sol));
            }
            Err(Error::Nonconvergence { history, .. }) => {
                out.failed_at = Some((phi, history));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Multi-start uniqueness probe: max pairwise relative H1 distance of the
/// converged deficits. Nonconvergent starts are excluded and reported.
pub struct UniquenessReport {
    pub max_pairwise_distance: f64,
    pub converged_starts: usize,
    pub excluded_starts: usize,
}

pub fn uniqueness_probe(
    problem: &NSProblem,
    starts: &[InitialGuess],
) -> Result<UniquenessReport> {
    if starts.len() < 2 {
        return Err(Error::Contract("uniqueness probe needs at least 2 starts".into()));
    }
    let mut deficits: Vec<Field> = Vec::new();
    let mut excluded = 0;
    for guess in starts {
        match solve_ns(problem, guess) {
            Ok(sol) => deficits.push(sol.v),
            Err(Error::Nonconvergence { .. }) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    if deficits.len() < 2 {
        return Err(Error::Contract(
            "fewer than two starts converged; uniqueness probe void".into(),
        ));
    }
    let space = &deficits[0].space;
    let grad = assemble::gradient_form(space)?.to_csr();
    let mass = assemble::vector_mass(space)?.to_csr();
    let h1 = |f: &Field| -> f64 { (grad.quadratic(&f.dofs) + mass.quadratic(&f.dofs)).sqrt() };
    let scale = deficits.iter().map(|f| h1(f)).fold(0.0f64, f64::max).max(1e-14);
    let mut worst = 0.0f64;
    for i in 0..deficits.len() {
        for j in i + 1..deficits.len() {
            let mut d = deficits[i].clone();
            d.axpy(-1.0, &deficits[j]);
            worst = worst.max(h1(&d) / scale);
        }
    }
    Ok(UniquenessReport {
        max_pairwise_distance: worst,
        converged_starts: deficits.len(),
        excluded_starts: excluded,
    })
}
