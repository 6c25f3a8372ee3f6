#![allow(dead_code)]

use gradcert::expr::parse;
use gradcert::fields::{ScalarField, VectorField};

pub fn names(dim: usize) -> Vec<String> {
    match dim {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        _ => (1..=dim).map(|i| format!("x{i}")).collect(),
    }
}

pub fn scalar(dim: usize, src: &str) -> ScalarField {
    ScalarField::new(dim, parse(src, &names(dim)).unwrap()).unwrap()
}

pub fn vector(dim: usize, src: &[&str]) -> VectorField {
    let v = names(dim);
    VectorField::from_exprs(dim, src.iter().map(|s| parse(s, &v).unwrap()).collect()).unwrap()
}
