use connectome::eeg_io::{parse_recording, standardize, EegRecording, Format};
use connectome::pipeline::{evaluate, stratified_kfold};
use connectome::simulate::{random_stable_var, simulate_var};
use connectome::spectral::pdc_at;
use connectome::var_model::{fit_var, VarModel};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn recording(seed: u64, channels: usize, samples: usize) -> EegRecording {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = random_stable_var(channels, 2, 0.8, &mut rng);
    simulate_var(&model, samples, 128.0, &mut rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn standardize_is_idempotent(seed in any::<u64>(), channels in 2usize..6, samples in 10usize..200) {
        let once = standardize(&recording(seed, channels, samples));
        let twice = standardize(&once);
        for (a, b) in once.data().iter().zip(twice.data()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn both_file_layouts_round_trip(seed in any::<u64>(), channels in 2usize..6, samples in 1usize..80) {
        let rec = recording(seed, channels, samples);
        let id = rec.subject_id.clone();
        let a = parse_recording(&rec.to_csv(), Format::CsvMatrix, channels, 128.0, &id).unwrap();
        let b = parse_recording(&rec.to_column_concat(), Format::ColumnConcat, channels, 128.0, &id).unwrap();
        prop_assert_eq!(&a, &rec);
        prop_assert_eq!(&a, &b);
    }

    #[test]
    fn pdc_columns_have_unit_norm(seed in any::<u64>(), channels in 2usize..7, order in 1usize..6, f in 0.0f64..64.0) {
        let model = random_stable_var(channels, order, 0.9, &mut ChaCha8Rng::seed_from_u64(seed));
        let p = pdc_at(&model, f, 128.0).unwrap();
        for j in 0..channels {
            let s: f64 = p.column(j).iter().map(|v| v * v).sum();
            prop_assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn evaluate_ignores_example_order(
        pairs in prop::collection::vec((0usize..2, 0usize..2), 1..60),
        shift in 0usize..60,
    ) {
        let (preds, labels): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
        let mut rotated = pairs.clone();
        rotated.rotate_left(shift % pairs.len());
        rotated.reverse();
        let (p2, l2): (Vec<_>, Vec<_>) = rotated.into_iter().unzip();
        prop_assert_eq!(evaluate(&preds, &labels, 0).unwrap(), evaluate(&p2, &l2, 0).unwrap());
    }

    #[test]
    fn folds_partition_and_stratify(pos in 5usize..40, neg in 5usize..40, k in 2usize..6, seed in any::<u64>()) {
        let labels: Vec<usize> = (0..pos + neg).map(|i| usize::from(i >= pos)).collect();
        let ids: Vec<String> = (0..pos + neg).map(|i| format!("s{i}")).collect();
        let plan = stratified_kfold(&ids, &labels, k, seed).unwrap();
        let mut seen = vec![0; pos + neg];
        for f in 0..k {
            let test = plan.test_indices(f);
            let positives = test.iter().filter(|&&i| labels[i] == 0).count();
            prop_assert!(positives >= pos / k && positives <= pos.div_ceil(k));
            for i in test {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let sizes = plan.fold_sizes();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}

#[test]
fn cohort_of_84_splits_into_17_17_17_17_16() {
    let labels: Vec<usize> = (0..84).map(|i| usize::from(i >= 45)).collect();
    let ids: Vec<String> = (0..84).map(|i| format!("s{i}")).collect();
    let plan = stratified_kfold(&ids, &labels, 5, 0).unwrap();
    assert_eq!(plan.fold_sizes(), vec![17, 17, 17, 17, 16]);
}

#[test]
fn least_squares_error_shrinks_with_length() {
    let truth = VarModel::from_coeffs(vec![
        DMatrix::from_row_slice(3, 3, &[0.5, 0.2, 0.0, 0.0, 0.3, -0.2, 0.1, 0.0, 0.4]),
        DMatrix::from_row_slice(3, 3, &[-0.2, 0.0, 0.1, 0.0, -0.1, 0.0, 0.0, 0.1, -0.2]),
    ])
    .unwrap();
    let errors: Vec<f64> = [500, 4000, 32000]
        .iter()
        .map(|&t| {
            let rec = simulate_var(&truth, t, 128.0, &mut ChaCha8Rng::seed_from_u64(t as u64));
            fit_var(&rec, 2).unwrap().max_abs_diff(&truth)
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    assert!(errors[2] < 0.02);
}
