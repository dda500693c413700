//! Shared fixtures for the criterion benchmarks.

use ifgan_core::dataframe::{encode, EncodingMap, MaskMatrix};
use ifgan_core::missingness::{ampute_dataset, AmputationConfig, Mechanism};
use ifgan_core::synth::linear_blend_dataset;
use ifgan_core::{Matrix, RngStream};

/// An encoded benchmark instance: amputed matrix, mask, and encoding map.
pub struct Fixture {
    pub x_hat: Matrix,
    pub mask: MaskMatrix,
    pub map: EncodingMap,
}

/// Correlated continuous data with MCAR missingness at the given rate.
pub fn mcar_fixture(rows: usize, cols: usize, rate: f64, seed: u64) -> Fixture {
    let mut rng = RngStream::new(seed);
    let ds = linear_blend_dataset(rows, cols, 0.05, &mut rng).expect("valid synthetic schema");
    let cfg = AmputationConfig::new(Mechanism::Mcar, rate);
    let mut amp_rng = rng.child("ampute");
    let (amputed, _) = ampute_dataset(&ds, &cfg, &mut amp_rng).expect("amputation succeeds");
    let (x_hat, mask, map) = encode(&amputed).expect("encoding succeeds");
    Fixture { x_hat, mask, map }
}
