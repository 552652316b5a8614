//! Subcommand drivers: scenario files in, fields and reports out.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::config::RunConfig;
use crate::diag::{self, PoincareMode};
use crate::error::{Error, Result};
use crate::io::{self, VtkData};
use crate::mesh::{
    build_cross_section_mesh, build_strip_mesh, rectangle_mesh, DomainKind, DomainSpec, Mesh,
};
use crate::ns::{self, InitialGuess, NSProblem, NSSolution};
use crate::poiseuille;
use crate::profile;
use crate::report::{Environment, Report};
use crate::space::{Family, Field, Space};

pub struct RunContext {
    pub config: RunConfig,
    pub config_hash: String,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub jobs: usize,
}

impl RunContext {
    pub fn prepare(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir)?;
        Ok(())
    }

    fn environment(&self, mesh: &Mesh, phi: f64) -> Environment {
        let (zeta, z) = match &self.config.domain {
            DomainKind::DistortedStrip { zeta, z, .. } => (Some(*zeta), Some(*z)),
            _ => (None, None),
        };
        Environment {
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            alpha: self.config.physics.alpha,
            phi,
            resolution: self.config.discretization.resolution,
            mesh_nodes: mesh.n_nodes(),
            zeta,
            z,
        }
    }
}

/// The cross-section of the configured domain: the domain itself for
/// Interval/Disk/StarShaped, the unit interval for strips.
fn cross_section_mesh(ctx: &RunContext) -> Result<Arc<Mesh>> {
    let spec = match &ctx.config.domain {
        DomainKind::DistortedStrip { .. } => DomainSpec {
            kind: DomainKind::Interval { length: 1.0 },
            alpha: ctx.config.physics.alpha,
        },
        other => DomainSpec {
            kind: other.clone(),
            alpha: ctx.config.physics.alpha,
        },
    };
    Ok(Arc::new(build_cross_section_mesh(
        &spec,
        ctx.config.discretization.resolution,
    )?))
}

fn strip_mesh(ctx: &RunContext) -> Result<Arc<Mesh>> {
    match &ctx.config.domain {
        DomainKind::DistortedStrip { .. } => Ok(Arc::new(build_strip_mesh(
            &ctx.config.domain_spec(),
            ctx.config.discretization.resolution,
        )?)),
        _ => Err(Error::Config(
            "this subcommand needs a distorted-strip domain".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// poiseuille
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PoiseuilleSummary {
    environment: Environment,
    flux_constant: f64,
    pressure_gradient: f64,
    energy_identity_gap: f64,
    closed_form_l2_error: Option<f64>,
    profile_csv: String,
}

pub fn run_poiseuille(ctx: &RunContext) -> Result<()> {
    ctx.prepare()?;
    let mesh = cross_section_mesh(ctx)?;
    let phi = *ctx.config.fluxes().first().unwrap_or(&1.0);
    let prof = poiseuille::poiseuille_profile(&mesh, ctx.config.physics.alpha, phi)?;
    let fc = poiseuille::flux_constant(&prof.unit_solution, ctx.config.physics.alpha)?;

    let csv_path = ctx.out_dir.join("profile.csv");
    let rows: Vec<Vec<f64>> = mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(i, p)| vec![p[0], p[1], prof.profile.dofs[i]])
        .collect();
    io::write_csv(&csv_path, "x1,x2,g", &rows)?;

    let closed_form_l2_error =
        poiseuille::closed_form_reference(&mesh, ctx.config.physics.alpha, phi)
            .ok()
            .map(|cf| poiseuille::l2_error_against(&prof.profile, &cf));

    let summary = PoiseuilleSummary {
        environment: ctx.environment(&mesh, phi),
        flux_constant: prof.flux_constant,
        pressure_gradient: prof.pressure_gradient,
        energy_identity_gap: fc.relative_gap,
        closed_form_l2_error,
        profile_csv: csv_path.display().to_string(),
    };
    io::write_json(&ctx.out_dir.join("poiseuille.json"), &summary)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SolveSummary {
    environment: Environment,
    converged: bool,
    iterations: usize,
    residual_history: Vec<f64>,
    deficit_h1: f64,
    flux_drift: f64,
    quadratic_tail: bool,
}

pub fn run_solve(ctx: &RunContext) -> Result<()> {
    ctx.prepare()?;
    let mesh = strip_mesh(ctx)?;
    let fluxes = ctx.config.fluxes();
    if fluxes.len() == 1 || ctx.jobs <= 1 {
        for phi in &fluxes {
            solve_one(ctx, &mesh, *phi)?;
        }
        return Ok(());
    }
    // independent scenarios in parallel
    let errors: Vec<Error> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for chunk in fluxes.chunks(fluxes.len().div_ceil(ctx.jobs)) {
            let mesh = mesh.clone();
            handles.push(scope.spawn(move || -> Result<()> {
                for &phi in chunk {
                    solve_one(ctx, &mesh, phi)?;
                }
                Ok(())
            }));
        }
        handles
            .into_iter()
            .filter_map(|h| h.join().expect("solver thread panicked").err())
            .collect()
    });
    match errors.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn solve_dir(ctx: &RunContext, phi: f64) -> PathBuf {
    ctx.out_dir.join(format!("phi_{phi:.6e}"))
}

fn solve_one(ctx: &RunContext, mesh: &Arc<Mesh>, phi: f64) -> Result<()> {
    let dir = solve_dir(ctx, phi);
    std::fs::create_dir_all(&dir)?;
    let problem = build_problem(ctx, mesh, phi)?;
    match ns::solve_ns(&problem, &InitialGuess::Background) {
        Ok(sol) => {
            write_solution(ctx, mesh, phi, &dir, &sol)?;
            Ok(())
        }
        Err(Error::Nonconvergence {
            iterations,
            last_residual,
            history,
        }) => {
            #[derive(Serialize)]
            struct FailureDump {
                environment: Environment,
                iterations: usize,
                last_residual: f64,
                residual_history: Vec<f64>,
            }
            io::write_json(
                &dir.join("nonconvergence.json"),
                &FailureDump {
                    environment: ctx.environment(mesh, phi),
                    iterations,
                    last_residual,
                    residual_history: history.clone(),
                },
            )?;
            Err(Error::Nonconvergence {
                iterations,
                last_residual,
                history,
            })
        }
        Err(e) => Err(e),
    }
}

fn build_problem(ctx: &RunContext, mesh: &Arc<Mesh>, phi: f64) -> Result<NSProblem> {
    let profile = profile::assemble_profile_vector(
        mesh,
        ctx.config.physics.alpha,
        phi,
        ctx.config.profile.sigma_prime,
    )?;
    Ok(NSProblem {
        mesh: mesh.clone(),
        alpha: ctx.config.physics.alpha,
        phi,
        profile,
        settings: ctx.config.solver_settings(),
    })
}

fn write_solution(
    ctx: &RunContext,
    mesh: &Arc<Mesh>,
    phi: f64,
    dir: &Path,
    sol: &NSSolution,
) -> Result<()> {
    let p_nodal = io::q1_to_nodal(&sol.pressure);
    io::write_vtk(
        &dir.join("fields.vtk"),
        mesh,
        &[
            VtkData::Vector("velocity", sol.u.dofs.clone()),
            VtkData::Vector("deficit", sol.v.dofs.clone()),
            VtkData::Scalar("pressure", p_nodal),
        ],
    )?;
    let drift = diag::flux_profile(&sol.u)?.max_drift_relative;
    let summary = SolveSummary {
        environment: ctx.environment(mesh, phi),
        converged: sol.converged,
        iterations: sol.iterations,
        residual_history: sol.residual_history.clone(),
        deficit_h1: diag::vector_h1_norm(&sol.v)?,
        flux_drift: drift,
        quadratic_tail: diag::quadratic_convergence_indicator(&sol.residual_history),
    };
    io::write_json(&dir.join("solve.json"), &summary)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// decay-study
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct DecaySummary {
    environment: Environment,
    fit: diag::DecayFit,
    double_truncation_sigma: Option<f64>,
    sigma_agreement: Option<f64>,
}

pub fn run_decay_study(ctx: &RunContext) -> Result<()> {
    ctx.prepare()?;
    let mesh = strip_mesh(ctx)?;
    let phi = *ctx
        .config
        .fluxes()
        .first()
        .ok_or_else(|| Error::Config("decay study needs a flux".into()))?;
    let problem = build_problem(ctx, &mesh, phi)?;
    let sol = ns::solve_ns(&problem, &InitialGuess::Background)?;
    let stations = ctx.config.decay_stations();
    let fit = diag::decay_fit(&sol.v, &stations)?;

    let rows: Vec<Vec<f64>> = fit
        .stations
        .iter()
        .zip(&fit.energies)
        .map(|(&s, &g)| vec![s, g, g.ln()])
        .collect();
    io::write_csv(&ctx.out_dir.join("decay_curve.csv"), "zeta,G,logG", &rows)?;

    let (double_truncation_sigma, sigma_agreement) = if ctx.config.decay.compare_double_truncation
        && fit.valid
    {
        let doubled = doubled_truncation_spec(&ctx.config.domain_spec())?;
        let mesh2 = Arc::new(build_strip_mesh(&doubled, ctx.config.discretization.resolution)?);
        let problem2 = NSProblem {
            mesh: mesh2.clone(),
            alpha: ctx.config.physics.alpha,
            phi,
            profile: profile::assemble_profile_vector(
                &mesh2,
                ctx.config.physics.alpha,
                phi,
                ctx.config.profile.sigma_prime,
            )?,
            settings: ctx.config.solver_settings(),
        };
        let sol2 = ns::solve_ns(&problem2, &InitialGuess::Background)?;
        let fit2 = diag::decay_fit(&sol2.v, &stations)?;
        if fit2.valid {
            let agreement = (fit.sigma - fit2.sigma).abs() / fit.sigma.abs().max(1e-300);
            (Some(fit2.sigma), Some(agreement))
        } else {
            (None, None)
        }
    } else {
        (None, None)
    };

    let summary = DecaySummary {
        environment: ctx.environment(&mesh, phi),
        fit,
        double_truncation_sigma,
        sigma_agreement,
    };
    io::write_json(&ctx.out_dir.join("decay.json"), &summary)?;
    Ok(())
}

fn doubled_truncation_spec(spec: &DomainSpec) -> Result<DomainSpec> {
    match &spec.kind {
        DomainKind::DistortedStrip {
            lower,
            upper,
            zeta,
            z,
        } => Ok(DomainSpec {
            kind: DomainKind::DistortedStrip {
                lower: *lower,
                upper: *upper,
                zeta: 2.0 * zeta,
                z: *z,
            },
            alpha: spec.alpha,
        }),
        _ => Err(Error::Config("not a strip".into())),
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

pub fn run_verify(ctx: &RunContext) -> Result<Report> {
    ctx.prepare()?;
    let alpha = ctx.config.physics.alpha;
    let mesh = strip_mesh(ctx)?;
    let phi = *ctx
        .config
        .fluxes()
        .first()
        .ok_or_else(|| Error::Config("verify needs a flux".into()))?;
    let mut report = Report::new(ctx.environment(&mesh, phi));

    // 1. cross-section energy identity and strip closed form
    let section = Arc::new(build_cross_section_mesh(
        &DomainSpec {
            kind: DomainKind::Interval { length: 1.0 },
            alpha,
        },
        ctx.config.discretization.resolution.max(4),
    )?);
    let prof = poiseuille::poiseuille_profile(&section, alpha, 1.0)?;
    let fc = poiseuille::flux_constant(&prof.unit_solution, alpha)?;
    report.check_upper(
        "poiseuille_energy_identity",
        "robin_unit_solution",
        fc.relative_gap,
        1e-10,
    );
    let cf = poiseuille::strip_closed_form(alpha, 1.0);
    let closed_err = poiseuille::l2_error_against(&prof.profile, &cf);
    report.check_upper("strip_closed_form_l2", "poiseuille_profile", closed_err, 1e-10);

    // 2. profile vector invariants
    let pv = profile::assemble_profile_vector(&mesh, alpha, phi, ctx.config.profile.sigma_prime)?;
    report.check_upper(
        "profile_divergence",
        "profile_vector",
        pv.max_divergence(),
        1e-10 * phi.abs().max(1e-30),
    );
    let stations: Vec<f64> = {
        let layout = mesh.strip.as_ref().unwrap();
        (0..=16)
            .map(|k| -layout.zeta + 2.0 * layout.zeta * k as f64 / 16.0)
            .collect()
    };
    let fluxes: Vec<f64> = stations.iter().map(|&s| pv.section_flux(s)).collect();
    let drift = {
        let max = fluxes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = fluxes.iter().cloned().fold(f64::INFINITY, f64::min);
        (max - min) / phi.abs().max(1e-30)
    };
    report.check_upper("profile_flux_drift", "profile_vector", drift, 1e-10);
    report.check_upper(
        "profile_outlet_match",
        "profile_vector",
        pv.max_outlet_deviation(),
        1e-11,
    );

    // 3. nonlinear solve
    let problem = NSProblem {
        mesh: mesh.clone(),
        alpha,
        phi,
        profile: pv,
        settings: ctx.config.solver_settings(),
    };
    let sol = ns::solve_ns(&problem, &InitialGuess::Background)?;
    report.check_upper(
        "ns_residual",
        "velocity",
        *sol.residual_history.last().unwrap_or(&f64::NAN),
        10.0 * ctx.config.solver.tol_abs,
    );
    let mut u = sol.u.clone();
    if ctx.config.verify.inject_broken_normal {
        corrupt_wall_normal(&mesh, &mut u);
    }
    report.check_upper(
        "flux_drift",
        "velocity",
        diag::flux_profile(&u)?.max_drift_relative,
        1e-3,
    );
    let slip = diag::slip_residual_inplane(&u, alpha)?;
    report.check_upper("slip_normal_trace", "velocity", slip.max_normal, 1e-12);
    report.check_upper(
        "slip_tangential_residual",
        "velocity",
        slip.max_tangential,
        2e-1 * phi.abs().max(1e-30) / 1e-2,
    );

    // 4. identity suite on analytic fields
    let disk = Arc::new(build_cross_section_mesh(
        &DomainSpec {
            kind: DomainKind::Disk { radius: 1.0 },
            alpha,
        },
        8,
    )?);
    let vdisk = Space::new(disk.clone(), Family::VectorQ2);
    let rotation = Field::interpolate_vector(&vdisk, |p| [-p[1], p[0]]);
    report.check_upper(
        "payne_residual_rotation",
        "analytic_rotation",
        diag::payne_residual(&rotation, [0.0, 0.0])?,
        1e-10,
    );
    let korn_rotation = diag::korn_combined_ratio(&rotation, alpha)?;
    report.check_upper(
        "korn_rotation_matches_alpha",
        "analytic_rotation",
        (korn_rotation - alpha).abs(),
        1e-10,
    );

    let unit_rect = Arc::new(rectangle_mesh(8, 16, [0.0, 1.0], [-1.0, 1.0])?);
    let vrect = Space::new(unit_rect.clone(), Family::VectorQ2);
    let sin_field = Field::interpolate_vector(&vrect, |p| {
        [0.0, (std::f64::consts::PI * p[0]).sin()]
    });
    let ratio = diag::poincare_ratio(&sin_field, PoincareMode::Transverse)?;
    report.check_upper(
        "poincare_sin_ratio",
        "analytic_sine",
        (ratio - std::f64::consts::FRAC_1_PI).abs(),
        1e-3,
    );

    // 5. deficit diagnostics
    let payne_deficit = diag::payne_residual(&sol.v, [0.5, 0.0])?;
    let deficit_scale = diag::vector_l2_norm(&sol.v)?.powi(2).max(1e-30);
    report.check_upper(
        "payne_residual_deficit",
        "deficit",
        payne_deficit / deficit_scale,
        5e-2,
    );
    report.check_lower(
        "korn_ratio_deficit",
        "deficit",
        diag::korn_combined_ratio(&sol.v, alpha)?,
        1e-3,
    );

    // 6. uniqueness
    let starts: Vec<InitialGuess> = (0..ctx.config.uniqueness.starts.max(2))
        .map(|k| match k {
            0 => InitialGuess::Background,
            1 => InitialGuess::PerturbedBackground(0.5),
            k => InitialGuess::RandomDivFree {
                seed: ctx.seed.wrapping_add(k as u64),
                amplitude: 0.5,
            },
        })
        .collect();
    let probe = ns::uniqueness_probe(&problem, &starts)?;
    report.check_upper(
        "uniqueness_distance",
        "deficit",
        probe.max_pairwise_distance,
        1e-8,
    );

    // 7. decay
    let fit = diag::decay_fit(&sol.v, &ctx.config.decay_stations())?;
    if fit.valid {
        report.check_lower("decay_sigma", "deficit", fit.sigma, 1e-6);
        report.check_lower("decay_r2", "deficit", fit.r_squared, 0.98);
    } else {
        // straight channels have no tail energy: declare the fit void
        report.check_upper("decay_fit_void", "deficit", 0.0, 1.0);
    }

    io::write_json(&ctx.out_dir.join("report.json"), &report)?;
    std::fs::write(ctx.out_dir.join("report.txt"), report.to_text())?;
    Ok(report)
}

fn corrupt_wall_normal(mesh: &Arc<Mesh>, u: &mut Field) {
    if let Some((&node, frame)) = mesh.frames.iter().next() {
        u.dofs[2 * node] += frame.normal[0];
        u.dofs[2 * node + 1] += frame.normal[1];
    }
}
