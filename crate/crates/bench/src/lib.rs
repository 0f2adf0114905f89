//! Seeded fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vnet_core::{Algebra, BuiltinAlgebra, ConvLayer, DenseLayer, SplitActivation, VImage, VMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Builtins first, then a random 8-dimensional table.
pub fn algebras() -> Vec<Algebra> {
    let mut out: Vec<Algebra> = [
        BuiltinAlgebra::Real,
        BuiltinAlgebra::Complex,
        BuiltinAlgebra::Quaternion,
    ]
    .into_iter()
    .map(Algebra::builtin)
    .collect();
    out.push(
        Algebra::random(8, &mut rng(8))
            .expect("n > 0")
            .with_name("random8"),
    );
    out
}

pub fn matrix_pair(alg: &Algebra, m: usize, k: usize, p: usize) -> (VMatrix, VMatrix) {
    let mut r = rng(1);
    (
        VMatrix::random(alg, m, k, &mut r),
        VMatrix::random(alg, k, p, &mut r),
    )
}

pub fn dense(alg: &Algebra, outputs: usize, inputs: usize) -> (DenseLayer, Vec<f64>) {
    let mut r = rng(2);
    let layer = DenseLayer::init(alg, outputs, inputs, SplitActivation::Tanh, &mut r);
    let x = VMatrix::random(alg, inputs, 1, &mut r).phi();
    (layer, x.iter().copied().collect())
}

pub fn conv(alg: &Algebra, side: usize, channels: usize, filters: usize) -> (ConvLayer, VImage) {
    let mut r = rng(3);
    let layer = ConvLayer::random(
        alg,
        (3, 3),
        channels,
        filters,
        (1, 1),
        SplitActivation::Relu,
        &mut r,
    )
    .expect("valid conv shape");
    let image = VImage::random(alg, side, side, channels, &mut r);
    (layer, image)
}
