//! Constraint-tightening L1 adaptive control combined with a reference governor.
//!
//! The crate is `no_std` (it needs `alloc`). Modules, bottom-up:
//!
//! * [`linsys`]: dense matrices, matrix exponentials, ZOH discretization,
//!   state-space realizations and induced L1 norms.
//! * [`sets`]: boxes, halfspace polytopes and a small dense LP.
//! * [`uncertainty`]: matched uncertainty models with Lipschitz metadata.
//! * [`l1ac`]: L1 adaptive controller bounds and run-time pieces.
//! * [`refgov`]: reference governor on the nominal closed loop.
//! * [`l1rg`]: the integrated designer and run-time controller.
//! * [`simkit`]: hybrid RK4 simulation, replays and bound verification.
//! * [`f16`]: the short-period/roll-free F-16 benchmark data.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod error;
pub mod f16;
pub mod l1ac;
pub mod l1rg;
pub mod linsys;
pub mod refgov;
pub mod sets;
pub mod simkit;
pub mod uncertainty;

pub use error::{Error, Result};
pub use linsys::{Mat, StateSpaceSystem};
pub use sets::{Hyperbox, Polytope};
