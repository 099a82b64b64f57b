use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::strategy::SPACE_SIZE;

fn random_strategy(rng: &mut ChaCha8Rng) -> Strategy {
    let space = enumerate_space();
    space[rng.gen_range(0..space.len())]
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize) -> Vec<Sample> {
    (0..n)
        .map(|_| {
            let a = random_strategy(rng);
            let b = random_strategy(rng);
            Sample::new(&a, &b, rng.gen_range(0.0..=1.0))
        })
        .collect()
}

#[test]
fn zero_network_outputs_one_half() {
    let p = SenParams::zeros(&[28, 64, 64, 1]);
    for s in enumerate_space().iter().step_by(37) {
        assert_eq!(forward(&p, &encode(s), &encode(&Strategy::default())).unwrap(), 0.5);
    }
}

#[test]
fn hand_computed_single_hidden_unit() {
    let mut p = SenParams::zeros(&[28, 1, 1]);
    for l in &mut p.layers {
        l.w.iter_mut().for_each(|w| *w = 1.0);
    }
    // The neutral strategy has three slots at 1.0, so the hidden unit sees 6.
    let v = encode(&Strategy::default());
    let out = forward(&p, &v, &v).unwrap();
    assert!((out - 0.997_527_376_843_365_3).abs() < 1e-15);
}

#[test]
fn forward_checks_shape() {
    let p = SenParams::init(&[4], 0);
    assert!(matches!(
        p.predict(&[0.0; 5]),
        Err(SenError::Shape { expected: 28, got: 5 })
    ));
}

#[test]
fn bce_values() {
    assert!((bce_loss(0.5, 0.5) - std::f64::consts::LN_2).abs() < 1e-12);
    assert!((bce_loss(0.9, 1.0) - 0.105_360_515_657_826_3).abs() < 1e-12);
    assert!(bce_loss(0.0, 1.0).is_finite());
    assert!(bce_loss(1.0, 0.0).is_finite());
    for t in [0.0f64, 0.2, 0.5, 0.8, 1.0] {
        let at = bce_loss(t.clamp(1e-7, 1.0 - 1e-7), t);
        for d in [-0.05, 0.05] {
            let p = (t + d).clamp(0.01, 0.99);
            if p != t {
                assert!(bce_loss(p, t) >= at);
            }
        }
    }
}

fn param_mut(q: &mut SenParams, li: usize, k: usize) -> &mut f64 {
    let l = &mut q.layers[li];
    let nw = l.w.len();
    if k < nw {
        &mut l.w[k]
    } else {
        &mut l.b[k - nw]
    }
}

/// Central-difference estimate of the mean batch loss gradient.
fn numeric_gradient(p: &SenParams, batch: &[Sample], h: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut q = p.clone();
    for li in 0..p.layers.len() {
        for k in 0..p.layers[li].w.len() + p.layers[li].b.len() {
            let orig = *param_mut(&mut q, li, k);
            *param_mut(&mut q, li, k) = orig + h;
            let up = mean_loss(&q, batch).unwrap();
            *param_mut(&mut q, li, k) = orig - h;
            let down = mean_loss(&q, batch).unwrap();
            *param_mut(&mut q, li, k) = orig;
            out.push((up - down) / (2.0 * h));
        }
    }
    out
}

fn flatten(g: &SenParams) -> Vec<f64> {
    g.layers
        .iter()
        .flat_map(|l| l.w.iter().chain(&l.b).copied())
        .collect()
}

#[test]
fn gradient_matches_finite_differences() {
    for seed in 0..12u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let hidden = if seed % 3 == 0 { vec![16, 16] } else { vec![6, 5] };
        let p = SenParams::init(&hidden, seed);
        let batch = random_batch(&mut rng, 7);
        let (_, g) = gradient(&p, &batch).unwrap();
        let analytic = flatten(&g);
        let numeric = numeric_gradient(&p, &batch, 1e-5);
        let worst = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
            .fold(0.0, f64::max);
        assert!(worst <= 1e-4, "seed {seed}: relative error {worst}");
    }
}

#[test]
fn gradient_vanishes_at_stationary_point() {
    let p = SenParams::zeros(&[28, 8, 8, 1]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let batch: Vec<Sample> = random_batch(&mut rng, 5)
        .into_iter()
        .map(|s| Sample { target: 0.5, ..s })
        .collect();
    let (loss, g) = gradient(&p, &batch).unwrap();
    assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    assert!(flatten(&g).iter().all(|v| *v == 0.0));
}

#[test]
fn duplicated_batch_has_same_mean_gradient() {
    let p = SenParams::init(&[8, 8], 4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let batch = random_batch(&mut rng, 6);
    let doubled: Vec<Sample> = batch.iter().chain(batch.iter()).cloned().collect();
    let (l1, g1) = gradient(&p, &batch).unwrap();
    let (l2, g2) = gradient(&p, &doubled).unwrap();
    assert!((l1 - l2).abs() < 1e-12);
    for (a, b) in flatten(&g1).iter().zip(flatten(&g2)) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(matches!(gradient(&p, &[]), Err(SenError::Empty(_))));
}

fn separable_set() -> ResultDataset {
    // Aggressive strategies beat passive ones and lose the reverse pairing.
    let space = enumerate_space();
    let aggressive: Vec<Strategy> = space.iter().filter(|s| s.aggression).copied().take(5).collect();
    let passive: Vec<Strategy> = space.iter().filter(|s| !s.aggression).copied().take(5).collect();
    let mut records = Vec::new();
    for i in 0..5 {
        records.push(DatasetRecord::new(aggressive[i], passive[i], 1.0, 1));
        records.push(DatasetRecord::new(passive[i], aggressive[(i + 1) % 5], 0.0, 1));
    }
    ResultDataset { records }
}

#[test]
fn trains_to_low_loss_on_separable_data() {
    let data = separable_set();
    let cfg = TrainConfig {
        patience: 2000,
        epochs: 1000,
        ..TrainConfig::default()
    };
    let out = train(&data, &cfg).unwrap();
    let loss = mean_loss(&out.params, &data.samples(Split::Train)).unwrap();
    assert!(loss < 0.1, "final loss {loss}");
    // Best-so-far validation loss never rises.
    for w in out.history.windows(2) {
        assert!(w[1].best_val_loss <= w[0].best_val_loss);
    }
}

#[test]
fn training_is_deterministic_and_lr_zero_is_identity() {
    let data = separable_set();
    let cfg = TrainConfig {
        epochs: 30,
        seed: 9,
        ..TrainConfig::default()
    };
    assert_eq!(train(&data, &cfg).unwrap(), train(&data, &cfg).unwrap());
    let frozen = TrainConfig {
        learning_rate: 0.0,
        ..cfg.clone()
    };
    assert_eq!(train(&data, &frozen).unwrap().params, SenParams::init(&cfg.hidden, cfg.seed));
    assert!(matches!(
        train(&ResultDataset::default(), &cfg),
        Err(SenError::Empty(_))
    ));
}

#[test]
fn evaluate_perfect_and_constant_predictors() {
    let p = SenParams::init(&[8], 1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut records = Vec::new();
    for _ in 0..60 {
        let a = random_strategy(&mut rng);
        let b = random_strategy(&mut rng);
        let pred = forward(&p, &encode(&a), &encode(&b)).unwrap();
        records.push(DatasetRecord::new(a, b, if pred > 0.5 { 1.0 } else { 0.0 }, 1));
    }
    let data = ResultDataset { records };
    let m = evaluate(&p, &data, 0.5).unwrap();
    assert_eq!(m.accuracy, 1.0);
    assert_eq!(m.fp_rate, 0.0);
    assert_eq!(m.confusion[0][1] + m.confusion[1][0], 0);

    let mut low = SenParams::zeros(&[28, 4, 1]);
    low.layers[1].b[0] = -1e-3;
    let m = evaluate(&low, &data, 0.5).unwrap();
    assert_eq!(m.confusion[0][1] + m.confusion[1][1], 0);
    assert_eq!(m.fp_rate, 0.0);
}

#[test]
fn best_response_tie_break_and_value() {
    let flat = SenParams::zeros(&[28, 8, 1]);
    let (s, v) = best_response(&flat, &Strategy::default());
    assert_eq!(s, enumerate_space()[0]);
    assert_eq!(v, 0.5);
}

#[test]
fn best_response_matches_independent_scan() {
    let p = SenParams::init(&[64, 64], 21);
    let space = enumerate_space();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let opp = random_strategy(&mut rng);
        let ov = encode(&opp);
        let mut best_i = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (i, s) in space.iter().enumerate() {
            let mut x: Vec<f64> = encode(s).to_vec();
            x.extend(ov.iter());
            let v = p.predict(&x).unwrap();
            if v > best_v {
                best_i = i;
                best_v = v;
            }
        }
        let (s, v) = best_response(&p, &opp);
        assert_eq!(s, space[best_i]);
        assert_eq!(v, best_v);
        assert_eq!(v, forward(&p, &encode(&s), &ov).unwrap());
    }
}

#[test]
fn outputs_stay_in_open_unit_interval_over_all_pairs() {
    let p = SenParams::init(&[64, 64], 5);
    let vs: Vec<_> = enumerate_space().iter().map(encode).collect();
    assert_eq!(vs.len(), SPACE_SIZE);
    for a in &vs {
        for b in &vs {
            let y = forward(&p, a, b).unwrap();
            assert!(y > 0.0 && y < 1.0);
        }
    }
}

#[test]
fn params_file_round_trip() {
    let p = SenParams::init(&[64, 64], 2);
    assert_eq!(p.shape(), vec![28, 64, 64, 1]);
    let text = p.save_json();
    assert!(text.contains("\"format_version\": 1"));
    assert_eq!(SenParams::load_json(&text).unwrap(), p);
    let mut bad = p.clone();
    bad.layers[1].b.pop();
    assert!(SenParams::load_json(&bad.save_json()).is_err());
    let mut nan = p;
    nan.layers[0].w[0] = f64::NAN;
    assert!(nan.validate().is_err());
}

#[test]
fn dataset_file_round_trip_and_split() {
    let data = split_dataset(&separable_set(), 0.2, 3);
    assert_eq!(data.with_split(Split::Test).len(), 2);
    assert_eq!(data.with_split(Split::Train).len(), 8);
    assert_eq!(split_dataset(&separable_set(), 0.2, 3), data);

    let mut buf = Vec::new();
    write_dataset(&data, &mut buf).unwrap();
    assert_eq!(read_dataset(&buf[..]).unwrap(), data);

    // A half-written final line is dropped.
    let text = String::from_utf8(buf).unwrap();
    let cut = &text[..text.len() - 20];
    assert_eq!(read_dataset(cut.as_bytes()).unwrap().len(), 9);

    let bad = text.replacen("\"r\":1.0", "\"r\":1.5", 1);
    assert!(read_dataset(bad.as_bytes()).is_err());
}
