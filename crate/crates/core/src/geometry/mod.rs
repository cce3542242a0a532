//! Parametric domains, exact measures and conforming triangle meshes.

mod domain;
mod mesh;
pub mod mesh_io;

pub use domain::{
    elementary_symmetric, incircle, polygon_perimeter, regular_polygon_inradius, regular_polygon_vertices, signed_area,
    DomainMeasures, DomainSpec, Point, TANGENTIAL_TOL,
};
pub use mesh::{build_mesh, BoundaryCurve, BoundaryEdge, MeshMeasures, TriMesh, MAX_LEVEL};

pub(crate) use domain::distance;

/// Exact measures of a domain; see [`DomainSpec::measures`].
pub fn measures(spec: &DomainSpec) -> crate::Result<DomainMeasures> {
    spec.measures()
}

/// Measures of the discrete domain; see [`TriMesh::measures`].
pub fn mesh_measures(mesh: &TriMesh) -> MeshMeasures {
    mesh.measures()
}

/// One uniform refinement; see [`TriMesh::refine`].
pub fn refine(mesh: &TriMesh) -> crate::Result<TriMesh> {
    mesh.refine()
}
