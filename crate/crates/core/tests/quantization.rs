use rpq::kmeans::{inertia, train_kmeans, InitMethod, KmeansConfig};
use rpq::quantizer::{make_layout_random, train_quantizer, Method};
use rpq::{
    encode, generate_synthetic, quantization_error, reconstruct, FeatureMatrix, FeatureMatrix64,
    QuantizerConfig, SynthSpec,
};

fn corpus(dim: usize, n: usize, seed: u64) -> FeatureMatrix {
    generate_synthetic(&SynthSpec::new(dim, n, 8, 0.3, seed)).unwrap()
}

fn correlation(m: &FeatureMatrix64, a: usize, b: usize) -> f64 {
    let means = m.column_means();
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for row in m.rows() {
        let (x, y) = (row[a] - means[a], row[b] - means[b]);
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    sab / (saa * sbb).sqrt()
}

#[test]
fn uncorrelated_generator_has_small_off_diagonals() {
    let m: FeatureMatrix64 = generate_synthetic(&SynthSpec::new(8, 100_000, 1, 0.0, 3)).unwrap();
    for a in 0..8 {
        for b in a + 1..8 {
            let r = correlation(&m, a, b);
            assert!(r.abs() < 0.05, "corr({a},{b}) = {r}");
        }
    }
}

#[test]
fn designated_pairs_carry_the_requested_correlation() {
    let spec = SynthSpec::new(8, 100_000, 1, 0.9, 5);
    let m: FeatureMatrix64 = generate_synthetic(&spec).unwrap();
    for (a, b) in spec.designated_pairs() {
        let r = correlation(&m, a, b);
        assert!((0.85..=0.95).contains(&r), "corr({a},{b}) = {r}");
    }
}

#[test]
fn generator_is_a_pure_function_of_its_spec() {
    let spec = SynthSpec::new(6, 500, 3, 0.4, 77);
    let a: FeatureMatrix = generate_synthetic(&spec).unwrap();
    let b: FeatureMatrix = generate_synthetic(&spec).unwrap();
    assert_eq!(a, b);
    let c: FeatureMatrix = generate_synthetic(&SynthSpec { seed: 78, ..spec }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn pq_beats_kmeans_at_equal_codebook_size() {
    let data = corpus(32, 4000, 1);
    let km = QuantizerConfig::kmeans(32).with_seed(1).fit(&data).unwrap();
    let pq = QuantizerConfig::pq(4, 32).with_seed(1).fit(&data).unwrap();
    let e_km = quantization_error(&data, &km).unwrap();
    let e_pq = quantization_error(&data, &pq).unwrap();
    assert!(e_pq < e_km, "pq {e_pq} vs kmeans {e_km}");
}

#[test]
fn pq_error_does_not_grow_with_more_subvectors() {
    let data = corpus(32, 4000, 2);
    let errs: Vec<f64> = [1, 2, 4]
        .iter()
        .map(|&m| {
            let model = QuantizerConfig::pq(m, 32).with_seed(2).fit(&data).unwrap();
            quantization_error(&data, &model).unwrap()
        })
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] <= w[0] * 1.02, "{errs:?}");
    }
}

#[test]
fn train_quantizer_infers_the_method() {
    let data = corpus(12, 300, 3);
    let cfg = KmeansConfig::new(4).with_seed(3);
    let rpq = train_quantizer(&data, &make_layout_random(12, 3, 0.5, 3).unwrap(), 4, &cfg).unwrap();
    assert_eq!(rpq.method(), Method::Rpq);
    assert_eq!(rpq.n_subspaces(), 3);
    assert_eq!(rpq.layout().sub_dim(), 6);
    let km = train_quantizer(&data, &rpq::make_layout_contiguous(12, 1).unwrap(), 4, &cfg).unwrap();
    assert_eq!(km.method(), Method::Kmeans);
}

#[test]
fn reconstruction_error_matches_quantization_error() {
    let data = corpus(16, 800, 4);
    let model = QuantizerConfig::rpq(4, 0.25, 16).with_seed(4).fit(&data).unwrap();
    let mut total = 0.0;
    for row in data.rows() {
        let code = encode(row, &model).unwrap();
        let x_hat = reconstruct(&code, &model).unwrap();
        total += row
            .iter()
            .zip(&x_hat)
            .map(|(a, b)| ((a - b) as f64).powi(2))
            .sum::<f64>();
    }
    let mean = total / data.n_frames() as f64;
    let reported = quantization_error(&data, &model).unwrap();
    assert!((mean - reported).abs() <= 1e-9 * reported.max(1.0), "{mean} vs {reported}");
}

#[test]
fn generic_over_precision() {
    let d32 = corpus(8, 400, 6);
    let d64: FeatureMatrix64 = d32.cast();
    let m32 = QuantizerConfig::pq(2, 8).with_seed(6).fit(&d32).unwrap();
    let m64 = QuantizerConfig::pq(2, 8).with_seed(6).fit(&d64).unwrap();
    let e32 = quantization_error(&d32, &m32).unwrap();
    let e64 = quantization_error(&d64, &m64).unwrap();
    assert!((e32 - e64).abs() / e64 < 0.05, "{e32} vs {e64}");
}

/// Two well separated clusters of 1-D points: K-means with k=2 should land on
/// the optimum found by trying every split point of the sorted data.
#[test]
fn two_mode_data_reaches_the_exhaustive_optimum() {
    let mut values: Vec<f64> = Vec::new();
    for i in 0..60 {
        values.push(-4.0 + (i as f64 * 0.37).sin());
        values.push(5.0 + (i as f64 * 0.91).cos() * 1.3);
    }
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let sse = |s: &[f64]| {
        let mu = s.iter().sum::<f64>() / s.len() as f64;
        s.iter().map(|v| (v - mu).powi(2)).sum::<f64>()
    };
    let best = (1..sorted.len())
        .map(|c| sse(&sorted[..c]) + sse(&sorted[c..]))
        .fold(f64::INFINITY, f64::min);

    let data = FeatureMatrix64::new(values.len(), 1, values).unwrap();
    for seed in 0..5 {
        for init in [InitMethod::KmeansPlusPlus, InitMethod::Random] {
            let (cb, report) = train_kmeans(&data, &KmeansConfig::new(2).with_init(init).with_seed(seed)).unwrap();
            assert!(report.final_inertia <= best * 1.01, "{} vs {best}", report.final_inertia);
            assert!((inertia(&data, &cb).unwrap() - report.final_inertia).abs() < 1e-9);
        }
    }
}
