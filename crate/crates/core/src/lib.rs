#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` rejects NaN too

pub mod classify;
pub mod expr;
pub mod geometry;
pub mod jets;
pub mod landsberg;
