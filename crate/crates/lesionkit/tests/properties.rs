use std::sync::Arc;

use lesionkit::experiment::parse_experiment_text;
use lesionkit::prefetch::prefetch_stream;
use lesionkit::report::{render_train_output, RowMetrics, TrainReport};
use lesionkit_core::augment::{shared, InMemoryProvider};
use lesionkit_core::record::read_records;
use lesionkit_core::{ColorSpace, ExperimentRow, ImageProvider, PresetRegistry, RasterImage};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prefetch_preserves_any_order(
        order in Just((0..30usize).collect::<Vec<_>>()).prop_shuffle(),
        workers in 1usize..6,
        capacity in 1usize..4,
    ) {
        let items: Vec<_> = (0..30u8).map(|i| (RasterImage::filled(1, 1, ColorSpace::Rgb, [i, 0, 0]), 0)).collect();
        let provider: Arc<dyn ImageProvider> = shared(InMemoryProvider::new(items));
        let got: Vec<usize> = prefetch_stream(provider, order.clone(), workers, capacity)
            .unwrap()
            .map(|s| s.unwrap().image.pixel(0, 0)[0] as usize)
            .collect();
        prop_assert_eq!(got, order);
    }

    #[test]
    fn report_values_survive_a_csv_round_trip(
        metrics in proptest::collection::vec(proptest::option::of(0.0f64..1.0), 8),
        props in proptest::collection::vec(0.0f64..1.0, 1..4),
        sizes in (0usize..1000, 0usize..1000),
        message in "[ -~]{1,30}",
        echo in "[a-z,\\[\\]\" ]{0,12}",
    ) {
        let ok = RowMetrics {
            val_size: sizes.0,
            test_size: sizes.1,
            class_proportions: props.clone(),
            train_time: metrics[0],
            val_accuracy: metrics[1],
            val_sensitivity: metrics[2],
            val_specificity: metrics[3],
            test_accuracy: metrics[4],
            test_sensitivity: metrics[5],
            test_specificity: metrics[6],
            test_roc_auc: metrics[7],
        };
        let header = vec!["note".to_string()];
        let reports = [
            TrainReport { input: vec![echo.clone()], outcome: Ok(ok) },
            TrainReport { input: vec![echo.clone()], outcome: Err(message.clone()) },
        ];
        let recs = read_records(&render_train_output(&header, &reports));
        prop_assert_eq!(recs.len(), 3);
        let good = &recs[1].fields;
        prop_assert_eq!(&good[0], &echo);
        prop_assert_eq!(good[1].parse::<usize>().unwrap(), sizes.0);
        let parsed_props: Vec<f64> = good[3]
            .trim_matches(|c| c == '[' || c == ']')
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        prop_assert_eq!(parsed_props, props);
        for (i, m) in metrics.iter().enumerate() {
            let cell = &good[4 + i];
            match m {
                Some(v) => prop_assert_eq!(cell.parse::<f64>().unwrap(), *v),
                None => prop_assert!(cell.is_empty()),
            }
        }
        prop_assert_eq!(&recs[2].fields[12], &message);
    }

    #[test]
    fn experiment_file_round_trips_through_the_writer(
        epochs in 1usize..50,
        batch in 1usize..64,
        size in 1usize..600,
        segment in -2.0f64..3.0,
    ) {
        let presets = PresetRegistry::default();
        let line = format!("baseline,ds,n=7,{epochs},{segment},hflip_rot4,{batch},{size},lanczos,LAB,\"[0.25,0.75]\"");
        let text = format!("{}\n{line}\n", ExperimentRow::header().join(","));
        let row = parse_experiment_text(&text, &presets).unwrap().rows.remove(0).parsed.unwrap();
        let again = format!(
            "{}\n{}\n",
            ExperimentRow::header().join(","),
            lesionkit_core::record::format_record(&row.to_fields())
        );
        let reparsed = parse_experiment_text(&again, &presets).unwrap().rows.remove(0).parsed.unwrap();
        prop_assert_eq!(reparsed, row);
    }
}
