//! Oracle tests for the assembled forms: hand-integrated quadratic forms,
//! algebraic identities, kernel dimensions, and an independent slow
//! quadrature route on a two-cell mesh.

use std::sync::Arc;

use slipflow::assemble::{self, Advect};
use slipflow::diag;
use slipflow::mesh::rectangle_mesh;
use slipflow::space::{Family, Field, Space};
use slipflow::sparse::dense_symmetric_eigenvalues;
use slipflow::system::project_divergence_free;

fn unit_square(n: usize) -> Arc<slipflow::mesh::Mesh> {
    Arc::new(rectangle_mesh(n, n, [0.0, 1.0], [0.0, 1.0]).unwrap())
}

#[test]
fn stress_form_vanishes_on_rigid_motions() {
    let mesh = unit_square(3);
    let space = Space::new(mesh, Family::VectorQ2);
    let k = assemble::stress_form(&space).unwrap().to_csr();
    let constant = Field::interpolate_vector(&space, |_| [2.0, -1.0]);
    let rotation = Field::interpolate_vector(&space, |p| [-p[1], p[0]]);
    assert!(k.quadratic(&constant.dofs).abs() < 1e-13);
    assert!(k.quadratic(&rotation.dofs).abs() < 1e-13);
}

#[test]
fn stress_form_matches_hand_integration_on_shear() {
    // u = (x, -y): S(u) = diag(1, -1), 2 int |Su|^2 = 4 * area
    let mesh = unit_square(2);
    let space = Space::new(mesh, Family::VectorQ2);
    let k = assemble::stress_form(&space).unwrap().to_csr();
    let u = Field::interpolate_vector(&space, |p| [p[0], -p[1]]);
    assert!((k.quadratic(&u.dofs) - 4.0).abs() < 1e-12);
    assert!(k.max_asymmetry() < 1e-13);
}

#[test]
fn stress_kernel_is_exactly_the_rigid_motions() {
    // single unconstrained cell: 18 dofs, kernel dim 3
    let mesh = Arc::new(rectangle_mesh(1, 1, [0.0, 1.0], [0.0, 1.0]).unwrap());
    let space = Space::new(mesh, Family::VectorQ2);
    let k = assemble::stress_form(&space).unwrap().to_csr();
    let dense = k.to_dense();
    let ev = dense_symmetric_eigenvalues(&dense).unwrap();
    let zero_count = ev.iter().filter(|l| l.abs() < 1e-10).count();
    assert_eq!(zero_count, 3, "eigenvalues: {ev:?}");
}

#[test]
fn slip_form_is_the_tangential_boundary_mass() {
    // walls x = 0, 1 of length 3 each
    let mesh = Arc::new(rectangle_mesh(2, 3, [0.0, 1.0], [-1.5, 1.5]).unwrap());
    let space = Space::new(mesh, Family::VectorQ2);
    let s = assemble::slip_boundary_form(&space, 1.0).unwrap().to_csr();
    let tangential = Field::interpolate_vector(&space, |_| [0.0, 1.0]);
    let normal = Field::interpolate_vector(&space, |_| [1.0, 0.0]);
    assert!((s.quadratic(&tangential.dofs) - 6.0).abs() < 1e-12);
    assert!(s.quadratic(&normal.dofs).abs() < 1e-13);
    let zero = assemble::slip_boundary_form(&space, 0.0).unwrap().to_csr();
    assert_eq!(zero.vals.iter().filter(|v| **v != 0.0).count(), 0);
}

#[test]
fn convection_vanishing_and_hand_value() {
    let mesh = unit_square(3);
    let space = Space::new(mesh, Family::VectorQ2);
    let zero_b = Field::interpolate_vector(&space, |_| [0.0, 0.0]);
    let c0 = assemble::convection_form(&space, &Advect::Field(&zero_b))
        .unwrap()
        .to_csr();
    let any = Field::interpolate_vector(&space, |p| [p[0] * p[1], p[1]]);
    assert!(c0.quadratic(&any.dofs).abs() < 1e-14);

    // b = e2, u = (0, x2) on the unit square: int x2 = 1/2
    let b = Field::interpolate_vector(&space, |_| [0.0, 1.0]);
    let c = assemble::convection_form(&space, &Advect::Field(&b))
        .unwrap()
        .to_csr();
    let u = Field::interpolate_vector(&space, |p| [0.0, p[1]]);
    assert!((c.quadratic(&u.dofs) - 0.5).abs() < 1e-13);
}

#[test]
fn convection_is_skew_for_divergence_free_impermeable_advection() {
    // b = curl psi with psi biquadratic and zero on the whole boundary:
    // b is exactly representable, pointwise divergence-free, b.n = 0
    let mesh = Arc::new(rectangle_mesh(3, 4, [0.0, 1.0], [-1.0, 1.0]).unwrap());
    let space = Space::new(mesh, Family::VectorQ2);
    let b = Field::interpolate_vector(&space, |p| {
        let (x, y) = (p[0], p[1]);
        // psi = x(1-x)(1-y^2)
        [x * (1.0 - x) * (-2.0 * y), -(1.0 - 2.0 * x) * (1.0 - y * y)]
    });
    let c = assemble::convection_form(&space, &Advect::Field(&b))
        .unwrap()
        .to_csr();
    // several test fields, including boundary-supported ones
    for (k, u) in [
        Field::interpolate_vector(&space, |p| [p[0] * p[0], p[1] * p[0]]),
        Field::interpolate_vector(&space, |p| [(3.1 * p[1]).sin(), p[0]]),
        Field::interpolate_vector(&space, |p| [1.0 + p[1] * p[1], p[0] * p[1]]),
    ]
    .into_iter()
    .enumerate()
    {
        let norm = c
            .vals
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max)
            .max(1.0)
            * u.dofs.iter().map(|v| v * v).sum::<f64>();
        let val = c.quadratic(&u.dofs).abs();
        assert!(val <= 1e-12 * norm, "field {k}: {val:.3e} vs scale {norm:.3e}");
    }
}

#[test]
fn divergence_coupling_annihilates_divergence_free_fields() {
    let mesh = unit_square(3);
    let space = Space::new(mesh.clone(), Family::MixedQ2Q1);
    let b = assemble::divergence_coupling(&space).unwrap().to_csr();
    let nv = space.n_velocity_dofs();

    let mut check = |f: &dyn Fn([f64; 2]) -> [f64; 2], expect_zero: bool| {
        let mut x = vec![0.0; space.ndof];
        for (i, p) in mesh.nodes.iter().enumerate() {
            let v = f(*p);
            x[2 * i] = v[0];
            x[2 * i + 1] = v[1];
        }
        let rows = b.matvec(&x);
        let max_prow = rows[nv..].iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        if expect_zero {
            assert!(max_prow < 1e-13, "pressure rows not annihilated: {max_prow:.3e}");
        } else {
            assert!(max_prow > 1e-3);
        }
    };
    check(&|p| [-p[1], p[0]], true); // rigid rotation
    check(&|p| [p[0] * p[0], -2.0 * p[0] * p[1]], true); // curl of x^2 y
    check(&|p| [2.0 * p[0] * p[1], -p[1] * p[1]], true); // curl of x y^2
    check(&|p| [p[0], 0.0], false);
}

#[test]
fn divergence_of_linear_field_is_the_pressure_mass_of_one() {
    let mesh = unit_square(2);
    let space = Space::new(mesh.clone(), Family::MixedQ2Q1);
    let b = assemble::divergence_coupling(&space).unwrap().to_csr();
    let nv = space.n_velocity_dofs();
    let mut x = vec![0.0; space.ndof];
    for (i, p) in mesh.nodes.iter().enumerate() {
        x[2 * i] = p[0];
    }
    let rows = b.matvec(&x);
    let integrals = slipflow::stokes::pressure_integrals(&space);
    for (k, &integral) in integrals.iter().enumerate() {
        assert!(
            (rows[nv + k] - integral).abs() < 1e-13,
            "row {k}: {} vs {}",
            rows[nv + k],
            integral
        );
    }
}

#[test]
fn korn_combined_coercivity_floor_on_divergence_free_fields() {
    use rand::Rng;
    use rand::SeedableRng;
    let mut floors = Vec::new();
    for res in [3usize, 6] {
        let mesh = Arc::new(rectangle_mesh(res, 3 * res, [0.0, 1.0], [-1.5, 1.5]).unwrap());
        let space = Space::new(mesh.clone(), Family::MixedQ2Q1);
        let mass = assemble::vector_mass(&space).unwrap();
        let div = assemble::divergence_coupling(&space).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut min_ratio = f64::INFINITY;
        for _ in 0..5 {
            let raw: Vec<f64> = (0..space.ndof).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let u = project_divergence_free(&space, &mass, &div, &raw).unwrap();
            let vspace = Space::new(mesh.clone(), Family::VectorQ2);
            let uv = u.velocity_part(&vspace);
            let ratio = diag::korn_combined_ratio(&uv, 1.0).unwrap();
            min_ratio = min_ratio.min(ratio);
        }
        assert!(
            min_ratio >= 1e-3,
            "coercivity floor violated at res {res}: {min_ratio}"
        );
        floors.push(min_ratio);
    }
    // stable under refinement: same order of magnitude
    let ratio = floors[0] / floors[1];
    assert!(ratio > 0.25 && ratio < 4.0, "floors: {floors:?}");
}

// ---------------------------------------------------------------------------
// independent slow-quadrature route on a two-cell mesh
// ---------------------------------------------------------------------------

mod slow {
    //! A from-scratch reimplementation of Q2 assembly used only as an
    //! oracle: explicit Lagrange products and hard-coded 3-point Gauss data.

    pub const GPTS: [f64; 3] = [-0.7745966692414834, 0.0, 0.7745966692414834];
    pub const GWTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

    /// 1D quadratic Lagrange basis through nodes -1, 0, 1 by the product
    /// formula.
    pub fn lag(i: usize, x: f64) -> f64 {
        let nodes = [-1.0, 0.0, 1.0];
        let mut v = 1.0;
        for j in 0..3 {
            if j != i {
                v *= (x - nodes[j]) / (nodes[i] - nodes[j]);
            }
        }
        v
    }

    pub fn dlag(i: usize, x: f64) -> f64 {
        // derivative by central differences at machine-safe step; the basis
        // is quadratic so a wide step with Richardson is exact
        let h = 1e-5;
        (lag(i, x + h) - lag(i, x - h)) / (2.0 * h)
    }
}

#[test]
fn assembled_forms_match_slow_quadrature_on_two_cells() {
    // mesh: 2 cells side by side on [0,2]x[0,1], affine geometry
    let mesh = Arc::new(rectangle_mesh(2, 1, [0.0, 2.0], [0.0, 1.0]).unwrap());
    let sspace = Space::new(mesh.clone(), Family::ScalarQ2);
    let fast_stiff = assemble::scalar_stiffness(&sspace).unwrap().to_csr().to_dense();
    let fast_mass = assemble::scalar_mass(&sspace).unwrap().to_csr().to_dense();

    let n = mesh.n_nodes();
    let mut slow_stiff = vec![vec![0.0; n]; n];
    let mut slow_mass = vec![vec![0.0; n]; n];
    // each cell is [x0, x0+1] x [0, 1]: dx/dxi = 0.5, dy/deta = 0.5
    for cell in 0..2 {
        let conn = &mesh.cells2[cell];
        for (qi, &gx) in slow::GPTS.iter().enumerate() {
            for (qj, &gy) in slow::GPTS.iter().enumerate() {
                let w = slow::GWTS[qi] * slow::GWTS[qj] * 0.25; // det J
                for a in 0..9 {
                    let (ia, ja) = (a % 3, a / 3);
                    let na = slow::lag(ia, gx) * slow::lag(ja, gy);
                    let gax = slow::dlag(ia, gx) * slow::lag(ja, gy) / 0.5;
                    let gay = slow::lag(ia, gx) * slow::dlag(ja, gy) / 0.5;
                    for b in 0..9 {
                        let (ib, jb) = (b % 3, b / 3);
                        let nb = slow::lag(ib, gx) * slow::lag(jb, gy);
                        let gbx = slow::dlag(ib, gx) * slow::lag(jb, gy) / 0.5;
                        let gby = slow::lag(ib, gx) * slow::dlag(jb, gy) / 0.5;
                        slow_stiff[conn[a]][conn[b]] += w * (gax * gbx + gay * gby);
                        slow_mass[conn[a]][conn[b]] += w * na * nb;
                    }
                }
            }
        }
    }
    for r in 0..n {
        for c in 0..n {
            assert!(
                (fast_stiff[r][c] - slow_stiff[r][c]).abs() < 1e-9,
                "stiffness mismatch at ({r},{c})"
            );
            assert!(
                (fast_mass[r][c] - slow_mass[r][c]).abs() < 1e-9,
                "mass mismatch at ({r},{c})"
            );
        }
    }
}
