//! Striped block matrices for the matrix problem of (n−1)-connected,
//! (n+5)-dimensional polyhedra with 2-torsion-free homology.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is on.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::should_implement_trait, clippy::type_complexity, clippy::needless_range_loop)]

extern crate alloc;

pub mod blockmat;
pub mod cat2;
pub mod chains3;
pub mod congruence;
pub mod rings;
pub mod shape;
pub mod transform;

pub use blockmat::BlockMatrix;
pub use rings::{crt_combine, crt_split, Modulus, Residue};
pub use shape::{CellRing, Generator, Side, StripeLabel, TransformSchema, Variant};
