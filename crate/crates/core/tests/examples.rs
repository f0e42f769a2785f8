macro_rules! example_test {
    ($module:ident, $file:literal, $test:ident) => {
        #[allow(dead_code)]
        #[path = $file]
        mod $module;

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example_test!(
    amplitude_regimes,
    "../examples/amplitude_regimes.rs",
    amplitude_regimes_runs
);
example_test!(
    schmidt_spectrum,
    "../examples/schmidt_spectrum.rs",
    schmidt_spectrum_runs
);
example_test!(hom_scan, "../examples/hom_scan.rs", hom_scan_runs);
example_test!(
    etm_discrimination,
    "../examples/etm_discrimination.rs",
    etm_discrimination_runs
);
example_test!(
    heatmap_sweep,
    "../examples/heatmap_sweep.rs",
    heatmap_sweep_runs
);
example_test!(
    cli_pipeline,
    "../examples/cli_pipeline.rs",
    cli_pipeline_runs
);
