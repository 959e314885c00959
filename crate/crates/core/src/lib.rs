//! Pose estimation by alternating minimization over rotation and translation.
//!
//! Each objective (relative pose from ray pairs, absolute pose from point-to-ray
//! distance, absolute pose with eliminated depths) is compiled once into a fixed-size
//! quadratic form, so every evaluation inside the solver costs the same regardless of
//! how many correspondences went in. The solver alternates a steepest-descent walk on
//! SO(3) with a Barzilai-Borwein walk on the translation.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amm;
pub mod bench;
pub mod error;
pub mod gec;
pub mod geometry;
pub mod gpnp;
pub mod init;
pub mod io;
pub mod objective;
pub mod solver;
pub mod upnp;

pub use amm::{rotation_step, rotation_subsolve, solve_amm, solve_amm_from, translation_subsolve, AmmConfig, AmmResult};
pub use error::PoseError;
pub use gec::{build_gec_form, GecForm, RayCorrespondence};
pub use geometry::{ObservedRay, PlueckerLine, Pose, Rotation, Translation, Vec3};
pub use gpnp::{build_gpnp_form, PointRayCorrespondence};
pub use objective::{Objective, QuadraticPoseForm};
pub use solver::{estimate_pose, Correspondences, InitKind, SolveError, SolverKind};
pub use upnp::build_upnp_form;
