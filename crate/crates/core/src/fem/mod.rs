//! Small-strain linear elasticity on structured meshes and contact pairing.

pub mod assembly;
pub mod mesh;
pub mod pairing;

pub use assembly::{assemble, Assembly, Body, Dof, DofMap, Material};
pub use mesh::{graded, uniform, StructuredMesh};
pub use pairing::{
    build_pairing_node_to_node, build_pairing_node_to_surface, contact_matrix, parabolic_gap_profile, ContactRow,
    PairingMode, PairingSpec,
};
