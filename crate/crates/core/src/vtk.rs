//! Legacy ASCII VTK output for triangle meshes with per-cell scalar fields.

use std::io::{self, Write};

use crate::mesh::TriMesh;

/// Writes the mesh as an unstructured grid followed by one `CELL_DATA`
/// scalar array per `(name, values)` pair. Every value slice must have one
/// entry per triangle.
pub fn write_vtk<W: Write>(
    out: &mut W,
    mesh: &TriMesh,
    cell_fields: &[(&str, &[f64])],
) -> io::Result<()> {
    for (name, values) in cell_fields {
        assert_eq!(
            values.len(),
            mesh.ntri(),
            "cell field {name} has {} values for {} triangles",
            values.len(),
            mesh.ntri()
        );
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "triangulation with cell data")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.nvert())?;
    for v in &mesh.vertices {
        writeln!(out, "{} {} 0", v[0], v[1])?;
    }
    writeln!(out, "CELLS {} {}", mesh.ntri(), 4 * mesh.ntri())?;
    for t in &mesh.tris {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {}", mesh.ntri())?;
    for _ in 0..mesh.ntri() {
        writeln!(out, "5")?;
    }
    if !cell_fields.is_empty() {
        writeln!(out, "CELL_DATA {}", mesh.ntri())?;
        for (name, values) in cell_fields {
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in *values {
                writeln!(out, "{v}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_initial_mesh, DomainSpec};

    #[test]
    fn output_has_the_expected_structure() {
        let mesh = build_initial_mesh(DomainSpec::Square { half: 1.0 }).unwrap();
        let mut buf = Vec::new();
        write_vtk(&mut buf, &mesh, &[("solution_mean", &[1.5, -2.0])]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("POINTS 4 double"));
        assert!(text.contains("CELLS 2 8"));
        assert!(text.contains("CELL_TYPES 2"));
        assert!(text.contains("CELL_DATA 2"));
        assert!(text.contains("SCALARS solution_mean double 1"));
        assert!(text.contains("-1 -1 0\n"));
        assert!(text.contains("\n1.5\n-2\n"));
    }

    #[test]
    fn no_fields_means_no_cell_data_block() {
        let mesh = build_initial_mesh(DomainSpec::Square { half: 1.0 }).unwrap();
        let mut buf = Vec::new();
        write_vtk(&mut buf, &mesh, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains("CELL_DATA"));
    }
}
