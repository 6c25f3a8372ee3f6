pub mod critical;
pub mod expr;
pub mod fields;
pub mod gradlike;
pub mod numeric;
pub mod tol;
pub mod weinstein;
