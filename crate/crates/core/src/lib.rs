//! Variational discrete element method for quasi-static brittle fracture
//! on triangle meshes.

pub mod exec;
pub mod mesh;
pub mod material;
pub mod reconstruction;
pub mod system;
pub mod fracture;
pub mod analysis;
pub mod runner;
