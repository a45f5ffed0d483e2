//! Benchmark fixtures shared by the criterion targets.

use dec_green::dec::{BoundaryCondition, FlatBundle, LaplaceSolver};
use dec_green::{generate_mesh, MeshShape, Result, SimplicialMesh};

pub fn disk(resolution: usize) -> SimplicialMesh {
    generate_mesh(&MeshShape::Disk { radius: 1.0 }, resolution).expect("disk mesh")
}

pub fn cube(resolution: usize) -> SimplicialMesh {
    generate_mesh(&MeshShape::Box3d { side: 1.0 }, resolution).expect("box mesh")
}

pub fn dirichlet(mesh: &SimplicialMesh, p: usize) -> Result<LaplaceSolver> {
    LaplaceSolver::assemble(mesh, p, &FlatBundle::trivial(mesh, 1), BoundaryCondition::Dirichlet)
}
