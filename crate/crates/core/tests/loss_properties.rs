use plr_core::losses::{plr_loss, weights, Aggregation, CandidateSet, PointwiseLoss};
use proptest::prelude::*;

fn pointwise() -> impl Strategy<Value = PointwiseLoss> {
    prop_oneof![
        Just(PointwiseLoss::Mse),
        Just(PointwiseLoss::Mae),
        (0.1f64..10.0).prop_map(|d| PointwiseLoss::Huber { delta: d }),
    ]
}

proptest! {
    #[test]
    fn weights_form_a_distribution(
        losses in prop::collection::vec(0.0f64..100.0, 1..10),
        beta1 in 0.01f64..2.0,
        beta2 in 0.0f64..1e4,
    ) {
        let w = weights(&losses, beta1, beta2).unwrap();
        prop_assert!(w.iter().all(|&v| v >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn smaller_loss_gets_no_less_weight(
        losses in prop::collection::vec(0.0f64..100.0, 2..10),
        beta1 in 0.01f64..2.0,
        beta2 in 0.0f64..1e4,
    ) {
        let w = weights(&losses, beta1, beta2).unwrap();
        for i in 0..losses.len() {
            for j in 0..losses.len() {
                if losses[i] < losses[j] {
                    prop_assert!(w[i] >= w[j]);
                }
            }
        }
    }

    #[test]
    fn weighted_loss_sits_between_min_and_average(
        pred in -50.0f64..50.0,
        labels in prop::collection::vec(-50.0f64..50.0, 1..9),
        loss in pointwise(),
        beta1 in 0.05f64..2.0,
        beta2 in 0.0f64..1e4,
    ) {
        let set = CandidateSet::new(labels).unwrap();
        let min = plr_loss(Aggregation::MinLoss, loss, pred, &set, None).unwrap().0;
        let avg = plr_loss(Aggregation::AvgLoss, loss, pred, &set, None).unwrap().0;
        let wtd = plr_loss(Aggregation::Weighted { beta1, beta2 }, loss, pred, &set, None).unwrap().0;
        prop_assert!(min <= wtd + 1e-12 * (1.0 + wtd.abs()));
        prop_assert!(wtd <= avg + 1e-12 * (1.0 + avg.abs()));
    }

    #[test]
    fn singleton_sets_collapse_every_aggregation(
        pred in -50.0f64..50.0,
        y in -50.0f64..50.0,
        loss in pointwise(),
    ) {
        let set = CandidateSet::single(y).unwrap();
        let reference = plr_loss(Aggregation::Supervised, loss, pred, &set, Some(y)).unwrap();
        for agg in [Aggregation::AvgLoss, Aggregation::AvgValue, Aggregation::MinLoss, Aggregation::Weighted { beta1: 0.5, beta2: 100.0 }] {
            let got = plr_loss(agg, loss, pred, &set, None).unwrap();
            prop_assert_eq!(got, reference);
        }
    }

    #[test]
    fn average_value_uses_candidate_mean(
        pred in -50.0f64..50.0,
        labels in prop::collection::vec(-50.0f64..50.0, 1..9),
    ) {
        let set = CandidateSet::new(labels.clone()).unwrap();
        let m = labels.iter().sum::<f64>() / labels.len() as f64;
        let (v, _) = plr_loss(Aggregation::AvgValue, PointwiseLoss::Mse, pred, &set, None).unwrap();
        prop_assert!((v - (pred - m).powi(2)).abs() <= 1e-9 * (1.0 + v));
    }
}
