use super::*;
use candle_core::{DType, Device};

fn small(variant: Variant, ablation: Ablation) -> ArchConfig {
    ArchConfig {
        frames: 16,
        bins: 16,
        conv_channels: vec![4, 8],
        kernel: 8,
        stride: 2,
        padding: 3,
        recurrent_hidden: 12,
        latent_dim: 3,
        n_clusters: 3,
        variant,
        ablation,
    }
}

fn batch(b: usize, t: usize, f: usize, seed: u64, dtype: DType) -> Tensor {
    let v: Vec<f32> = (0..b * t * f)
        .map(|i| (((i as u64 * 2654435761 + seed * 97) % 1000) as f32) / 1000.0)
        .collect();
    Tensor::from_vec(v, (b, t, f), &Device::Cpu).unwrap().to_dtype(dtype).unwrap()
}

fn max_diff(a: &Tensor, b: &Tensor) -> f64 {
    a.sub(b).unwrap().abs().unwrap().flatten_all().unwrap().max(0).unwrap().to_dtype(DType::F64).unwrap().to_scalar().unwrap()
}

const GS: GumbelSettings = GumbelSettings { tau: 1.0, hard: false };

#[test]
fn same_seed_same_parameters() {
    let cfg = small(Variant::M2Ac, Ablation::None);
    let a = build_model(&cfg, 7).unwrap();
    let b = build_model(&cfg, 7).unwrap();
    let c = build_model(&cfg, 8).unwrap();
    let mut differs = false;
    for ((na, va), (_, vb)) in a.params().iter().zip(b.params().iter()) {
        assert_eq!(max_diff(va.as_tensor(), vb.as_tensor()), 0.0, "{na}");
        let vc = c.params().get(na).unwrap();
        differs |= max_diff(va.as_tensor(), vc.as_tensor()) > 0.0;
    }
    assert!(differs);
}

#[test]
fn biases_start_at_zero_and_prior_as_declared() {
    let cfg = small(Variant::VibGmmAc, Ablation::None);
    let m = build_model(&cfg, 1).unwrap();
    let mut n_bias = 0;
    for (name, v) in m.params().iter() {
        let vals: Vec<f32> = v.as_tensor().flatten_all().unwrap().to_vec1().unwrap();
        let is_bias = name.ends_with(".bias") && !name.contains(".bn");
        if is_bias || name.ends_with(".b_ih") || name.ends_with(".b_hh") || name == "prior.log_vars" {
            assert!(vals.iter().all(|&x| x == 0.0), "{name}");
            n_bias += 1;
        }
        if name == "prior.weight_logits" {
            assert!(vals.iter().all(|&x| (0.0..1.0).contains(&x)));
        }
        if name == "prior.means" {
            let bound = (6.0f32 / 6.0).sqrt();
            assert!(vals.iter().all(|&x| x.abs() <= bound));
        }
    }
    assert!(n_bias > 5);
}

#[test]
fn default_parameter_counts_track_reported_sizes() {
    let m2 = build_model(&ArchConfig::new(99, 128, Variant::M2Ac), 0).unwrap();
    let total = m2.param_count() as f64;
    let enc = m2.params().count_group(ParamGroup::Upsilon) as f64;
    assert!((total / 3.32e6 - 1.0).abs() < 0.15, "{total}");
    assert!((enc / 1.24e6 - 1.0).abs() < 0.15, "{enc}");
}

#[test]
fn shapes_round_trip_for_all_variants_and_geometries() {
    for (t, f) in [(99, 128), (32, 128)] {
        for variant in [Variant::M2Ac, Variant::VibGmmAc, Variant::VadeAc] {
            let mut cfg = ArchConfig::new(t, f, variant);
            cfg.conv_channels = vec![2, 2, 2];
            cfg.recurrent_hidden = 8;
            let m = build_model(&cfg, 3).unwrap();
            let x = batch(2, t, f, 1, DType::F32);
            let noise = Noise::zeros(&cfg, 2, DType::F32, &Device::Cpu).unwrap();
            let out = m.forward(&x, &noise, GS, &Carry::default(), Mode::Train).unwrap();
            assert_eq!(out.x_hat[0].dims(), &[2, t, f]);
            assert_eq!(out.mu.dims(), &[2, 10]);
            let v: Vec<f32> = out.x_hat[0].flatten_all().unwrap().to_vec1().unwrap();
            assert!(v.iter().all(|&p| p > 0.0 && p < 1.0));
        }
    }
}

#[test]
fn mel_scene_geometry_builds() {
    let mut cfg = ArchConfig::new(332, 128, Variant::M2Ac);
    cfg.conv_channels = vec![2, 2, 2];
    cfg.recurrent_hidden = 8;
    let m = build_model(&cfg, 3).unwrap();
    let x = batch(1, 332, 128, 2, DType::F32);
    let (mu, lv) = {
        let (logits, _) = m.encode_categorical(&x, None, Mode::Eval).unwrap();
        let y = ops::softmax(&logits).unwrap();
        let (mu, lv, _) = m.encode_continuous(&x, Some(&y), None, Mode::Eval).unwrap();
        (mu, lv)
    };
    assert_eq!(mu.dims(), lv.dims());
}

#[test]
fn encoder_is_batch_equivariant() {
    for variant in [Variant::M2Ac, Variant::VibGmmAc] {
        let cfg = small(variant, Ablation::None);
        let m = Model::build(&cfg, 5, DType::F64, &Device::Cpu).unwrap();
        let x = batch(3, 16, 16, 9, DType::F64);
        let perm = Tensor::new(&[2u32, 0, 1], &Device::Cpu).unwrap();
        let xp = x.index_select(&perm, 0).unwrap();
        let run = |x: &Tensor| -> Tensor {
            if variant == Variant::M2Ac {
                m.encode_categorical(x, None, Mode::Eval).unwrap().0
            } else {
                m.encoder_gmm(x, Mode::Eval).unwrap().0
            }
        };
        let a = run(&x).contiguous().unwrap().index_select(&perm, 0).unwrap();
        let b = run(&xp).contiguous().unwrap();
        assert!(max_diff(&a, &b) < 1e-12);
    }
}

#[test]
fn zero_input_gives_finite_deterministic_logits() {
    let cfg = small(Variant::M2Ac, Ablation::None);
    let m = build_model(&cfg, 5).unwrap();
    let x = Tensor::zeros((2, 16, 16), DType::F32, &Device::Cpu).unwrap();
    let (a, _) = m.encode_categorical(&x, None, Mode::Eval).unwrap();
    let (b, _) = m.encode_categorical(&x, None, Mode::Eval).unwrap();
    assert_eq!(max_diff(&a, &b), 0.0);
    let v: Vec<f32> = a.flatten_all().unwrap().to_vec1().unwrap();
    assert!(v.iter().all(|x| x.is_finite()));
}

#[test]
fn split_windows_with_carried_state_match_whole_sequence() {
    let cfg = small(Variant::M2Ac, Ablation::Conv1d);
    let m = Model::build(&cfg, 11, DType::F64, &Device::Cpu).unwrap();
    let x = batch(2, 16, 16, 3, DType::F64);
    let (whole, _) = m.encode_categorical(&x, None, Mode::Eval).unwrap();
    let first = x.narrow(1, 0, 7).unwrap();
    let second = x.narrow(1, 7, 9).unwrap();
    let (_, state) = m.encode_categorical(&first, None, Mode::Eval).unwrap();
    let (split, _) = m.encode_categorical(&second, state.as_ref(), Mode::Eval).unwrap();
    assert!(max_diff(&whole, &split) < 1e-5);
}

#[test]
fn distinct_categories_give_distinct_means() {
    let cfg = small(Variant::M2Ac, Ablation::None);
    let m = Model::build(&cfg, 2, DType::F64, &Device::Cpu).unwrap();
    let x = batch(1, 16, 16, 4, DType::F64);
    let mus: Vec<Vec<f64>> = (0..3)
        .map(|k| {
            let y = ops::one_hot(&[k], 3, DType::F64, &Device::Cpu).unwrap();
            let (mu, _, _) = m.encode_continuous(&x, Some(&y), None, Mode::Eval).unwrap();
            mu.squeeze(0).unwrap().to_vec1().unwrap()
        })
        .collect();
    for i in 0..3 {
        for j in i + 1..3 {
            let d: f64 = mus[i].iter().zip(&mus[j]).map(|(a, b)| (a - b).abs()).sum();
            assert!(d > 1e-6);
        }
    }
}

#[test]
fn mixture_decoder_takes_z_only() {
    let cfg = small(Variant::VibGmmAc, Ablation::None);
    let m = build_model(&cfg, 2).unwrap();
    let z = Tensor::zeros((1, 3), DType::F32, &Device::Cpu).unwrap();
    let y = Tensor::zeros((1, 3), DType::F32, &Device::Cpu).unwrap();
    assert!(m.decode(Some(&y), &z, 16, None, Mode::Eval).is_err());
    assert_eq!(m.decode(None, &z, 16, None, Mode::Eval).unwrap().0.dims(), &[1, 16, 16]);
}

#[test]
fn ablations_build_and_run() {
    for ab in [Ablation::Conv1d, Ablation::NoRecurrence] {
        for variant in [Variant::M2Ac, Variant::VadeAc] {
            let cfg = small(variant, ab);
            let m = build_model(&cfg, 1).unwrap();
            let x = batch(2, 16, 16, 1, DType::F32);
            let noise = Noise::zeros(&cfg, 2, DType::F32, &Device::Cpu).unwrap();
            let out = m.forward(&x, &noise, GS, &Carry::default(), Mode::Train).unwrap();
            assert_eq!(out.x_hat[0].dims(), &[2, 16, 16]);
        }
    }
}

#[test]
fn short_inputs_are_rejected() {
    let mut cfg = small(Variant::M2Ac, Ablation::None);
    cfg.frames = 2;
    assert!(cfg.validate().is_err());
    let cfg = small(Variant::M2Ac, Ablation::None);
    assert_eq!(cfg.min_frames(), 4);
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let cfg = small(Variant::VadeAc, Ablation::None);
    let m = build_model(&cfg, 4).unwrap();
    let x = batch(2, 16, 16, 5, DType::F32);
    let noise = Noise::zeros(&cfg, 2, DType::F32, &Device::Cpu).unwrap();
    // move running statistics away from their initial values
    m.forward(&x, &noise, GS, &Carry::default(), Mode::Train).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ck");
    let meta = CheckpointMeta {
        epoch: 3,
        tau: 0.5,
        lr: 1e-4,
        seed: 4,
        ..Default::default()
    };
    save_checkpoint(&m, &meta, &path).unwrap();
    let (back, meta2) = load_checkpoint(&path, &Device::Cpu).unwrap();
    assert_eq!(meta, meta2);
    let a = m.forward(&x, &noise, GS, &Carry::default(), Mode::Eval).unwrap();
    let b = back.forward(&x, &noise, GS, &Carry::default(), Mode::Eval).unwrap();
    assert_eq!(max_diff(&a.x_hat[0], &b.x_hat[0]), 0.0);
    assert_eq!(max_diff(&a.mu, &b.mu), 0.0);

    let mut bytes = std::fs::read(&path).unwrap();
    bytes[4] = 2;
    std::fs::write(&path, bytes).unwrap();
    assert!(matches!(load_checkpoint(&path, &Device::Cpu), Err(Error::Version { found: 2, .. })));
}
