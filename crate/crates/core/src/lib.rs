//! Planning toolkit for mobile manipulation over scanned scenes.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod geometry;
pub mod seed;
pub mod scene;
pub mod grasp;
pub mod nav;
pub mod optimizer;
pub mod drawer;
pub mod config;
pub mod sim;
