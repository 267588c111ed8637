#![allow(dead_code)]

use std::collections::BTreeSet;

use outfit_core::catalog::{Category, Item};
use outfit_core::embedding::{Vector, EMBEDDING_DIM};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Uniform on the unit sphere.
pub fn random_unit(rng: &mut ChaCha8Rng) -> Vector {
    let v: Vec<f64> = (0..EMBEDDING_DIM).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Vector::new(v.into_iter().map(|x| x / n).collect())
}

/// A unit vector with cosine `c` to `base` (which must be unit).
pub fn at_cosine(rng: &mut ChaCha8Rng, base: &Vector, c: f64) -> Vector {
    let r = random_unit(rng);
    let d: f64 = r.as_slice().iter().zip(base.as_slice()).map(|(x, y)| x * y).sum();
    let orth: Vec<f64> = r.as_slice().iter().zip(base.as_slice()).map(|(x, y)| x - d * y).collect();
    let n = orth.iter().map(|x| x * x).sum::<f64>().sqrt();
    let s = (1.0 - c * c).sqrt();
    Vector::new(
        base.as_slice()
            .iter()
            .zip(&orth)
            .map(|(b, o)| c * b + s * o / n)
            .collect(),
    )
}

pub fn item(id: &str, category: Category, color: &str, tags: &[&str], embedding: Vector) -> Item {
    Item {
        id: id.into(),
        name: format!("{color} {category}"),
        category,
        color: color.into(),
        material: "cotton".into(),
        style_tags: tags.iter().map(|s| s.to_string()).collect(),
        occasion_tags: BTreeSet::new(),
        embedding,
        image_embedding: None,
        text_embedding: None,
        material_weight: None,
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cos(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}
