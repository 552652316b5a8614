//! Output plumbing: legacy-VTK unstructured grids for fields, CSV for
//! curves and tables, JSON for reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::mesh::Mesh;
use crate::space::{Family, Field};

/// Point data attached to a VTK export.
pub enum VtkData<'a> {
    Scalar(&'a str, Vec<f64>),
    Vector(&'a str, Vec<f64>),
}

/// Permutation from our lexicographic Q2 layout to VTK_BIQUADRATIC_QUAD (28).
const VTK_Q2_PERM: [usize; 9] = [0, 2, 8, 6, 1, 5, 7, 3, 4];

/// Write a mesh with optional nodal data as a legacy VTK unstructured grid.
pub fn write_vtk(path: &Path, mesh: &Mesh, data: &[VtkData<'_>]) -> Result<()> {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("slipflow field export\n");
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let n = mesh.n_nodes();
    let _ = writeln!(s, "POINTS {n} double");
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:.17e} {:.17e} 0.0", p[0], p[1]);
    }
    if mesh.dim == 2 {
        let nc = mesh.cells2.len();
        let _ = writeln!(s, "CELLS {nc} {}", nc * 10);
        for conn in &mesh.cells2 {
            s.push('9');
            for &k in &VTK_Q2_PERM {
                let _ = write!(s, " {}", conn[k]);
            }
            s.push('\n');
        }
        let _ = writeln!(s, "CELL_TYPES {nc}");
        for _ in 0..nc {
            s.push_str("28\n");
        }
    } else {
        let nc = mesh.cells1.len();
        let _ = writeln!(s, "CELLS {nc} {}", nc * 4);
        for conn in &mesh.cells1 {
            let _ = writeln!(s, "3 {} {} {}", conn[0], conn[2], conn[1]);
        }
        let _ = writeln!(s, "CELL_TYPES {nc}");
        for _ in 0..nc {
            s.push_str("21\n");
        }
    }
    if !data.is_empty() {
        let _ = writeln!(s, "POINT_DATA {n}");
        for d in data {
            match d {
                VtkData::Scalar(name, values) => {
                    let _ = writeln!(s, "SCALARS {name} double 1");
                    s.push_str("LOOKUP_TABLE default\n");
                    for v in values {
                        let _ = writeln!(s, "{v:.17e}");
                    }
                }
                VtkData::Vector(name, values) => {
                    let _ = writeln!(s, "VECTORS {name} double");
                    for k in 0..n {
                        let _ = writeln!(s, "{:.17e} {:.17e} 0.0", values[2 * k], values[2 * k + 1]);
                    }
                }
            }
        }
    }
    fs::write(path, s)?;
    Ok(())
}

/// Expand a ScalarQ1 field to all Q2 nodes by bilinear evaluation.
pub fn q1_to_nodal(field: &Field) -> Vec<f64> {
    assert_eq!(field.space.family, Family::ScalarQ1);
    let mesh = &field.space.mesh;
    let mut out = vec![0.0; mesh.n_nodes()];
    let mut touched = vec![false; mesh.n_nodes()];
    const POS: [f64; 3] = [-1.0, 0.0, 1.0];
    for c in 0..mesh.cells2.len() {
        for (k, &node) in mesh.cells2[c].iter().enumerate() {
            if touched[node] {
                continue;
            }
            let (i, j) = (k % 3, k / 3);
            out[node] = field.eval_scalar(c, POS[i], POS[j]).0;
            touched[node] = true;
        }
    }
    out
}

/// Write rows of floats as CSV with the given header line.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut s = String::with_capacity(rows.len() * 32);
    s.push_str(header);
    s.push('\n');
    for row in rows {
        let mut first = true;
        for v in row {
            if !first {
                s.push(',');
            }
            let _ = write!(s, "{v:.17e}");
            first = false;
        }
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

/// Write a JSON-serializable value.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value).expect("json"))?;
    Ok(())
}
