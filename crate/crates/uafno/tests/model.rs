use lmd_autodiff::{check_gradients, CheckOptions, Tape, Tensor};
use lmd_uafno::{
    afno_block, load_weights, load_weights_for, param_specs, save_weights, shape_plan, Error, Model, UafnoConfig,
    PER_BLOCK,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiny() -> UafnoConfig {
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

fn field(shape: &[usize], bound: f64, seed: u64) -> Tensor {
    Tensor::uniform(shape, bound, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn input(cfg: &UafnoConfig, seed: u64) -> Tensor {
    let t = field(&[cfg.in_channels, cfg.height, cfg.width], 0.5, seed);
    let v = t.as_real().unwrap().iter().map(|x| x + 0.5).collect();
    Tensor::real(t.shape(), v).unwrap()
}

fn shape_of(cfg: &UafnoConfig, name: &str) -> Vec<usize> {
    param_specs(cfg).unwrap().into_iter().find(|s| s.name == name).unwrap().shape
}

#[test]
fn full_size_shapes() {
    let cfg = UafnoConfig::full_scale();
    let plan = shape_plan(&cfg).unwrap();
    assert_eq!(plan.input, [3, 512, 512]);
    assert_eq!(plan.latent, [256, 64, 64]);
    assert_eq!(plan.output, [3, 512, 512]);
    assert_eq!(plan.skips, vec![[64, 512, 512], [128, 256, 256], [256, 128, 128]]);
    assert_eq!(shape_of(&cfg, "enc0.conv1.w"), [64, 3, 3, 3]);
    assert_eq!(shape_of(&cfg, "afno11.ln1.scale"), [256]);
    assert_eq!(shape_of(&cfg, "afno0.mix.w"), [16, 16, 16]);
    assert_eq!(shape_of(&cfg, "afno0.fc1.w"), [256, 3072]);
    assert_eq!(shape_of(&cfg, "afno0.fc2.w"), [3072, 256]);
    assert_eq!(shape_of(&cfg, "dec2.conv1.w"), [256, 512, 3, 3]);
    assert_eq!(shape_of(&cfg, "head.w"), [3, 64, 1, 1]);
    let blocks = param_specs(&cfg).unwrap().iter().filter(|s| s.name.starts_with("afno")).count();
    assert_eq!(blocks, 12 * PER_BLOCK);
}

#[test]
fn desk_encoder_reaches_eight_by_eight() {
    let cfg = UafnoConfig::desk();
    let m = Model::build(cfg.clone(), 1).unwrap();
    let tape = Tape::new();
    let p = m.bind(&tape, false);
    let x = tape.constant(Tensor::full(&[3, 64, 64], 0.3));
    let (latent, skips) = m.encode(&tape, &p, x).unwrap();
    assert_eq!(tape.shape(latent), [64, 8, 8]);
    assert_eq!(skips.len(), 3);
    assert!(tape.value(latent).all_finite());
    let out = m.decode(&tape, &p, latent, &skips).unwrap();
    assert_eq!(tape.shape(out), [3, 64, 64]);
}

#[test]
fn wrong_input_shape_is_rejected() {
    let m = Model::build(tiny(), 0).unwrap();
    assert!(matches!(m.forward(&Tensor::zeros(&[3, 8, 16])), Err(Error::Tensor(_) | Error::Shape(_))));
    let tape = Tape::new();
    let p = m.bind(&tape, false);
    let (latent, skips) = m.encode(&tape, &p, tape.constant(input(&tiny(), 0))).unwrap();
    assert!(matches!(m.decode(&tape, &p, latent, &skips[1..]), Err(Error::Shape(_))));
}

#[test]
fn builds_are_deterministic_per_seed() {
    let a = Model::build(UafnoConfig::desk(), 42).unwrap();
    let b = Model::build(UafnoConfig::desk(), 42).unwrap();
    let c = Model::build(UafnoConfig::desk(), 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn initialization_bounds() {
    let m = Model::build(UafnoConfig::desk(), 3).unwrap();
    for (s, p) in m.specs().iter().zip(m.params()) {
        let bound = match s.init {
            lmd_uafno::Init::Uniform { fan_in } | lmd_uafno::Init::ComplexUniform { fan_in } => {
                (fan_in as f64).recip().sqrt()
            }
            lmd_uafno::Init::Ones => {
                assert!((0..p.dof()).all(|k| p.get_dof(k) == 1.0));
                continue;
            }
            _ => 0.0,
        };
        assert!((0..p.dof()).all(|k| p.get_dof(k).abs() <= bound), "{}", s.name);
    }
}

#[test]
fn zeroed_blocks_are_identities() {
    for cfg in [tiny(), UafnoConfig::desk()] {
        let mut m = Model::build(cfg.clone(), 5).unwrap();
        let names: Vec<String> = m.specs().iter().map(|s| s.name.clone()).collect();
        for (name, p) in names.iter().zip(m.params_mut()) {
            if name.starts_with("afno") && !name.contains(".ln") {
                p.scale(0.0);
            }
        }
        let tape = Tape::new();
        let p = m.bind(&tape, false);
        let (c, (h, w)) = (cfg.latent_channels(), cfg.latent_dims());
        let xv = field(&[c, h, w], 1.0, 9);
        let x = tape.constant(xv.clone());
        let y = m.mix(&tape, &p, x).unwrap();
        assert_eq!(*tape.value(y), xv);
    }
}

#[test]
fn zero_decoder_gives_bias_constant() {
    let cfg = tiny();
    let mut m = Model::build(cfg.clone(), 6).unwrap();
    let n = m.params().len();
    for p in m.params_mut() {
        p.scale(0.0);
    }
    m.params_mut()[n - 1] = Tensor::real(&[3], vec![-1.0, 0.0, 2.0]).unwrap();
    let y = m.forward(&input(&cfg, 1)).unwrap();
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    for (ch, plane) in y.as_real().unwrap().chunks(16 * 16).enumerate() {
        let want = sig([-1.0, 0.0, 2.0][ch]);
        assert!(plane.iter().all(|v| (v - want).abs() < 1e-15));
    }
}

#[test]
fn block_gradient_on_toy() {
    let (c, heads, hid) = (4, 2, 8);
    let dh = c / heads;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut inputs = vec![Tensor::uniform(&[c, 8, 8], 1.0, &mut rng)];
    inputs.push(Tensor::uniform(&[c], 1.0, &mut rng));
    inputs.push(Tensor::uniform(&[c], 1.0, &mut rng));
    inputs.push(Tensor::complex_uniform(&[heads, dh, dh], 1.0, &mut rng));
    inputs.push(Tensor::complex_uniform(&[heads, dh], 1.0, &mut rng));
    inputs.push(Tensor::uniform(&[c], 1.0, &mut rng));
    inputs.push(Tensor::uniform(&[c], 1.0, &mut rng));
    inputs.push(Tensor::uniform(&[c, hid], 1.0, &mut rng));
    inputs.push(Tensor::uniform(&[hid], 1.0, &mut rng));
    inputs.push(Tensor::uniform(&[hid, c], 1.0, &mut rng));
    inputs.push(Tensor::uniform(&[c], 1.0, &mut rng));
    let r = check_gradients(&inputs, |t, v| Ok(afno_block(t, &v[1..], 0.0, v[0]).unwrap()), CheckOptions::default())
        .unwrap();
    assert!(r.max_rel_err < 1e-5, "{r:?}");
}

fn model_gradient(m: &Model, x: &Tensor, probes: usize) -> f64 {
    let opts = CheckOptions {
        max_probes: Some(probes),
        seed: 2,
        ..CheckOptions::default()
    };
    let r = check_gradients(
        m.params(),
        |t, p| Ok(m.trace_logits(t, p, t.constant(x.clone())).unwrap()),
        opts,
    )
    .unwrap();
    r.max_rel_err
}

#[test]
fn toy_model_gradient() {
    let cfg = tiny();
    let m = Model::build(cfg.clone(), 12).unwrap();
    let e = model_gradient(&m, &input(&cfg, 2), 300);
    assert!(e < 1e-5, "{e}");
}

#[test]
fn desk_model_gradient_on_sampled_parameters() {
    let cfg = UafnoConfig::desk();
    let m = Model::build(cfg.clone(), 13).unwrap();
    let e = model_gradient(&m, &input(&cfg, 4), 100);
    assert!(e < 1e-5, "{e}");
}

#[test]
fn loss_and_grads_agree_with_trace() {
    let cfg = tiny();
    let m = Model::build(cfg.clone(), 14).unwrap();
    let (x, t) = (input(&cfg, 6), input(&cfg, 7));
    let (loss, grads) = m.loss_and_grads(&x, &t).unwrap();
    let y = m.forward(&x).unwrap();
    let direct: f64 = y.as_real().unwrap().iter().zip(t.as_real().unwrap()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        / y.len() as f64;
    assert!((loss - direct).abs() < 1e-15);
    assert_eq!(grads.len(), m.params().len());
    assert!(grads.iter().any(|g| g.norm_sqr() > 0.0));
}

#[test]
fn weights_round_trip_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.uafw");
    let cfg = tiny();
    let m = Model::build(cfg.clone(), 15).unwrap();
    save_weights(&m, &path).unwrap();
    let back = load_weights(&path).unwrap();
    assert_eq!(back, m);
    let x = input(&cfg, 8);
    let (a, b) = (m.forward(&x).unwrap(), back.forward(&x).unwrap());
    assert_eq!(a.to_le_bytes(), b.to_le_bytes());
    let other = UafnoConfig { mlp_hidden: 16, ..cfg };
    assert!(matches!(load_weights_for(&path, &other), Err(Error::Incompatible(_))));
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(load_weights(&path), Err(Error::Format(_))));
    assert!(matches!(load_weights(&dir.path().join("missing")), Err(Error::Io { .. })));
}

#[test]
fn desk_forward_is_bounded_and_reproducible() {
    let cfg = UafnoConfig::desk();
    let m = Model::build(cfg.clone(), 16).unwrap();
    let x = field(&[3, 64, 64], 50.0, 17);
    let a = m.forward(&x).unwrap();
    assert_eq!(a.shape(), [3, 64, 64]);
    assert!(a.as_real().unwrap().iter().all(|&v| v > 0.0 && v < 1.0));
    assert_eq!(a, m.forward(&x).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn outputs_stay_inside_unit_interval(seed in any::<u64>(), scale in 0.0f64..1e4) {
        let cfg = tiny();
        let m = Model::build(cfg, seed).unwrap();
        let y = m.forward(&field(&[3, 16, 16], scale, seed ^ 7)).unwrap();
        prop_assert!(y.as_real().unwrap().iter().all(|&v| v > 0.0 && v < 1.0));
    }
}
