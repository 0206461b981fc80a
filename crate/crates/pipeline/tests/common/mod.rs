#![allow(dead_code)]

use std::path::Path;

use lmd_autodiff::Tensor;
use lmd_core::snapshot::{snapshot_file_name, write_snapshot};
use lmd_core::{init_state, FieldState, GridSpec};
use lmd_uafno::UafnoConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A 16x16 model small enough for many roll-outs.
pub fn tiny_model() -> UafnoConfig {
    UafnoConfig {
        height: 16,
        width: 16,
        enc_levels: 2,
        base_channels: 4,
        n_blocks: 1,
        heads: 2,
        mlp_hidden: 8,
        ..UafnoConfig::desk()
    }
}

pub fn tiny_grid() -> GridSpec {
    GridSpec::new(16, 16, 0.2).unwrap()
}

pub fn write_run(dir: &Path, steps: &[u64]) {
    std::fs::create_dir_all(dir).unwrap();
    let g = GridSpec::new(8, 8, 0.2).unwrap();
    for &s in steps {
        let mut st = init_state(&g, 0.5, 0.02, s).unwrap();
        st.step = s;
        st.time = s as f64 * 1e-12;
        write_snapshot(&st, &dir.join(snapshot_file_name(s))).unwrap();
    }
}

/// Random fields in (0, 1) with the tiny model's shape.
pub fn random_pairs(n: usize, seed: u64) -> Vec<(Tensor, Tensor)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = || {
        let t = Tensor::uniform(&[3, 16, 16], 0.5, &mut rng);
        Tensor::real(&[3, 16, 16], t.as_real().unwrap().iter().map(|v| v + 0.5).collect()).unwrap()
    };
    (0..n).map(|_| (field(), field())).collect()
}

pub fn same_states(a: &[FieldState], b: &[FieldState]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.step == y.step
                && x.time.to_bits() == y.time.to_bits()
                && x.fields().iter().zip(y.fields()).all(|(f, g)| {
                    f.iter().zip(g.iter()).all(|(u, v)| u.to_bits() == v.to_bits())
                })
        })
}
