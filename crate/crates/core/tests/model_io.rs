mod common;

use fixsim::engine::{ConvLayer, FxConfig, MacPosition, Padding, RealMac};
use fixsim::fxcore::{quantize, AdjustMethod, FxFormat, RngStream, RoundingMethod};
use fixsim::model_io::*;

#[test]
fn lenet_manifest_loads() {
    let m = load_manifest(common::lenet_manifest()).unwrap();
    // 5*5*1*6+6 + 5*5*6*16+16 + 400*84+84 + 84*10+10
    assert_eq!(m.param_count(), 156 + 2_416 + 33_684 + 850);
    assert_eq!(m.param_count(), 37_106);
    assert_eq!(m.input_shape, vec![28, 28, 1]);
    assert_eq!(m.output_shape(), vec![10]);
    assert_eq!(m.weighted_layers(), vec![0, 3, 7, 9]);
}

#[test]
fn lenet_round_trips_bit_identically() {
    let m = load_manifest(common::lenet_manifest()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = save_manifest(&m, dir.path()).unwrap();
    let back = load_manifest(&path).unwrap();
    assert_eq!(back, m);
    for l in back.layers.iter().filter_map(|l| l.tensors.as_ref()) {
        let orig = std::fs::read(common::repo_root().join("models/lenet5").join(&l.weights_file)).unwrap();
        assert_eq!(std::fs::read(dir.path().join(&l.weights_file)).unwrap(), orig);
    }
}

#[test]
fn weight_quantization_error_bounds() {
    let m = load_manifest(common::lenet_manifest()).unwrap();
    for n in [4u32, 8, 16] {
        let fmt = FxFormat::half_split(n).unwrap();
        let eps = fmt.epsilon();
        for l in m.layers.iter().filter_map(|l| l.tensors.as_ref()) {
            for &w in &l.weights {
                let w = w as f64;
                if w > fmt.max_value() || w < fmt.min_value() {
                    continue;
                }
                let mut rng = RngStream::new(0);
                let t = quantize(w, fmt, RoundingMethod::Truncate, &mut rng).unwrap().value();
                let r = quantize(w, fmt, RoundingMethod::RoundToNearest, &mut rng).unwrap().value();
                assert!((w - t).abs() < eps, "{w} -> {t}");
                // RN may round the top value up past max and saturate.
                if r < fmt.max_value() {
                    assert!((w - r).abs() <= eps / 2.0, "{w} -> {r}");
                }
            }
        }
    }
}

fn conv(k: [usize; 4], padding: Padding) -> ModelLayer {
    let n: usize = k.iter().product();
    ModelLayer {
        spec: LayerSpec::Conv(ConvSpec { kernel: k, stride: 1, padding }),
        tensors: Some(LayerTensors {
            weights_file: format!("c{}x{}.w", k[2], k[3]),
            bias_file: format!("c{}x{}.b", k[2], k[3]),
            weights: vec![0.01; n],
            bias: vec![0.0; k[3]],
        }),
    }
}

fn fc(i: usize, o: usize) -> ModelLayer {
    ModelLayer {
        spec: LayerSpec::Fc(FcSpec { inputs: i, outputs: o }),
        tensors: Some(LayerTensors {
            weights_file: format!("f{o}.w"),
            bias_file: format!("f{o}.b"),
            weights: vec![0.01; i * o],
            bias: vec![0.0; o],
        }),
    }
}

fn plain(spec: LayerSpec) -> ModelLayer {
    ModelLayer { spec, tensors: None }
}

#[test]
fn cifar_architecture_composes() {
    let pool = || plain(LayerSpec::MaxPool(fixsim::engine::PoolParams { window: 2, stride: 2 }));
    let relu = || plain(LayerSpec::Relu);
    let same = Padding::Same;
    let layers = vec![
        conv([3, 3, 3, 32], same),
        relu(),
        pool(),
        conv([3, 3, 32, 64], same),
        relu(),
        pool(),
        conv([3, 3, 64, 128], same),
        relu(),
        conv([3, 3, 128, 128], same),
        relu(),
        conv([3, 3, 128, 128], same),
        relu(),
        pool(),
        plain(LayerSpec::Flatten),
        fc(4 * 4 * 128, 500),
        relu(),
        fc(500, 128),
        relu(),
        fc(128, 10),
    ];
    let m = ModelManifest::new("cifar", vec![32, 32, 3], layers, None).unwrap();
    assert_eq!(m.output_shape(), vec![10]);
    let dir = tempfile::tempdir().unwrap();
    let back = load_manifest(save_manifest(&m, dir.path()).unwrap()).unwrap();
    assert_eq!(back.param_count(), m.param_count());
    // The real network runs end to end on a blank image.
    let out = RealModel::new(&back).unwrap().infer(&[0u8; 32 * 32 * 3]).unwrap();
    assert_eq!(out.logits.len(), 10);
}

#[test]
fn hwio_kernel_layout_matches_manual_convolution() {
    // A 2x2 kernel with 2 in and 3 out channels, weights distinct.
    let k = [2, 2, 2, 3];
    let hwio: Vec<f64> = (0..24).map(|v| v as f64).collect();
    let params = LayerSpec::conv_params(&ConvSpec { kernel: k, stride: 1, padding: Padding::Valid });
    let layer = ConvLayer::from_hwio(params, &hwio, vec![0.0; 3], RealMac).unwrap();
    let x: Vec<f64> = (0..8).map(|v| 1.0 + v as f64).collect(); // 2x2x2
    let input = fixsim::engine::Tensor::new(vec![2, 2, 2], x.clone()).unwrap();
    let mut ctx = fixsim::engine::ExecContext::new(RngStream::new(0));
    let y = fixsim::engine::conv2d(&input, &layer, &mut ctx).unwrap();
    for co in 0..3 {
        let mut want = 0.0;
        for ky in 0..2 {
            for kx in 0..2 {
                for ci in 0..2 {
                    want += x[(ky * 2 + kx) * 2 + ci] * hwio[((ky * 2 + kx) * 2 + ci) * 3 + co];
                }
            }
        }
        assert_eq!(y.data()[co], want);
    }
}

#[test]
fn mnist_test_set_when_present() {
    let Some(dir) = common::mnist_dir() else {
        eprintln!("MNIST not found; skipping");
        return;
    };
    let d = load_mnist(&dir, Split::Test).unwrap();
    assert_eq!(d.len(), 10_000);
    assert_eq!(d.shape(), MNIST_SHAPE);
}

#[test]
fn calibrated_plan_is_admissible() {
    let Some(dir) = common::mnist_dir() else {
        return;
    };
    let m = load_manifest(common::lenet_manifest()).unwrap();
    let d = load_mnist(&dir, Split::Test).unwrap();
    for int_bits in 1..=8 {
        let plan = calibrate_norm_scales(&m, int_bits, MacPosition::Rmac, &d).unwrap();
        for s in &plan.layers {
            let t = m.layers[s.layer].tensors.as_ref().unwrap();
            let max = t.weights.iter().fold(0f64, |a, &w| a.max((w as f64).abs()));
            let scaled = max * (s.weight_exp as f64).exp2();
            assert!(scaled < (int_bits as f64 - 1.0).exp2());
            assert!(scaled >= (int_bits as f64 - 2.0).exp2());
        }
        let cfg = FxConfig::new(
            FxFormat::new(2 * int_bits, int_bits).unwrap(),
            RoundingMethod::RoundToNearest,
            AdjustMethod::Norm { shift: 0 },
            MacPosition::Rmac,
        );
        quantize_model(&m, &cfg, Some(&plan)).unwrap();
    }
}
