use fuzzy_bns::classifier::{classification_report, train, Activation, ClassificationReport, NetConfig, Network};
use fuzzy_bns::RngStream;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

#[test]
fn analytic_gradient_matches_differences() {
    let mut rng = RngStream::new(8, 0).rng();
    for trial in 0..10u64 {
        let width = rng.random_range(1..8);
        let depth = rng.random_range(0..3);
        let mut sizes = vec![width];
        let mut acts = Vec::new();
        for _ in 0..depth {
            sizes.push(rng.random_range(1..8));
            acts.push(if rng.random_bool(0.5) { Activation::Logistic } else { Activation::Rectifier });
        }
        sizes.push(1);
        let mut net = Network::init(&sizes, &acts, RngStream::new(trial, 1));
        // random biases too: zero biases put dead rectifier inputs exactly on the kink
        let jitter: Vec<f64> = net.to_flat().iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
        net.set_flat(&jitter).unwrap();
        let n = rng.random_range(2..20);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..width).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let ws: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let l2 = rng.random_range(0.0..0.1);

        let (_, grad) = net.loss_and_grad(&xs, &ys, &ws, l2);
        let flat = net.to_flat();
        let h = 1e-6;
        let mut numeric = vec![0.0; flat.len()];
        for i in 0..flat.len() {
            let mut p = flat.clone();
            p[i] += h;
            net.set_flat(&p).unwrap();
            let up = net.loss_and_grad(&xs, &ys, &ws, l2).0;
            p[i] -= 2.0 * h;
            net.set_flat(&p).unwrap();
            let down = net.loss_and_grad(&xs, &ys, &ws, l2).0;
            numeric[i] = (up - down) / (2.0 * h);
        }
        net.set_flat(&flat).unwrap();
        let diff: f64 = grad.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = grad.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-8);
        assert!(diff / scale < 1e-4, "trial {trial}: relative error {}", diff / scale);
    }
}

#[test]
fn training_is_deterministic() {
    let mut rng = RngStream::new(4, 0).rng();
    let xs: Vec<Vec<f64>> = (0..200).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let ys: Vec<u8> = xs.iter().map(|x| (x[0] + x[1] > 0.0) as u8).collect();
    let cfg = NetConfig {
        epochs: 20,
        ..NetConfig::default().with_input_width(4)
    };
    let a = train(&xs, &ys, &cfg).unwrap();
    let b = train(&xs, &ys, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

fn pairs() -> impl Strategy<Value = Vec<(u8, u8)>> {
    prop::collection::vec((0u8..2, 0u8..2), 1..200)
}

proptest! {
    #[test]
    fn report_is_consistent(pairs in pairs()) {
        let (p, y): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
        let r = classification_report(&p, &y).unwrap();
        prop_assert_eq!(r.classes[0].support + r.classes[1].support, y.len());
        let correct = p.iter().zip(&y).filter(|(a, b)| a == b).count();
        prop_assert_eq!(r.accuracy, correct as f64 / y.len() as f64);
        prop_assert_eq!(&ClassificationReport::from_confusion(r.confusion), &r);
    }

    #[test]
    fn report_ignores_row_order(pairs in pairs(), seed in any::<u64>()) {
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut RngStream::new(seed, 0).rng());
        let (p, y): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let (ps, ys): (Vec<u8>, Vec<u8>) = shuffled.into_iter().unzip();
        prop_assert_eq!(classification_report(&p, &y).unwrap(), classification_report(&ps, &ys).unwrap());
    }

    #[test]
    fn flipping_labels_swaps_classes(pairs in pairs()) {
        let (p, y): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
        let (pf, yf): (Vec<u8>, Vec<u8>) = pairs.iter().map(|&(a, b)| (1 - a, 1 - b)).unzip();
        let r = classification_report(&p, &y).unwrap();
        let f = classification_report(&pf, &yf).unwrap();
        prop_assert_eq!(r.classes[0], f.classes[1]);
        prop_assert_eq!(r.classes[1], f.classes[0]);
        prop_assert_eq!(r.accuracy, f.accuracy);
    }
}
