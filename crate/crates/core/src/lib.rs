//! Space-time slab meshing for rotating and translating rigid bodies.
//!
//! The crate builds conforming tetrahedral meshes of the space-time region between two
//! time levels, keeps a sliding annulus well shaped by uniform edge swapping, and couples
//! a spring-damper rigid body to a pluggable force model with a staggered
//! predictor-corrector loop.
//!
//! Module map:
//! - [`mesh`]: spatial mesh model, annulus construction, chainsaw numbering, generators.
//! - [`motion`]: rigid rotation and box-blended translation of a spatial mesh.
//! - [`sliding`]: diagonal state of the sliding layer and the shortest-diagonal swap rule.
//! - [`extrude`]: prism cuts, block tetrahedralization, slab assembly and validation.
//! - [`rigid_body`]: Euler predictor and BDF2 corrector for each degree of freedom.
//! - [`coupling`]: force quadrature, force providers and the staggered time loop.
//! - [`io`]: native text formats, VTK export, CSV time series and configuration files.

pub mod coupling;
pub mod extrude;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod motion;
pub mod rigid_body;
pub mod sliding;

pub use mesh::{SpatialMesh, VertexId};
