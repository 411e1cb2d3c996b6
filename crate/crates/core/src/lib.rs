//! Exact finite-level computations for the Hausdorff spectrum of a class-2
//! wreath-like pro-p group 𝔊 = H ⋊ ⟨x⟩.
//!
//! The crate is `no_std` (with `alloc`); the `std` feature only forwards to
//! dependencies.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod fplin;
pub mod zbasis;
pub mod gsymb;
pub mod gfin;
pub mod filtser;
pub mod hdim;
pub mod appverify;
pub mod suites;

pub use fplin::{EchelonSpan, Fp, FpError, SparseVec};
pub use gsymb::{GElement, GWindowCtx, QElement, QuotCtx};
pub use zbasis::{BasisIndex, ZLayout};
