//! Isogeometric analysis with Nitsche-type weak conditions.

pub mod assembly;
pub mod contact;
pub mod linalg;
pub mod model;
pub mod nitsche;
pub mod splines;
