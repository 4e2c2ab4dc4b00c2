//! Shared fixtures for the benchmarks.

use std::path::Path;

use pedalshare::sim::ScenarioConfig;

/// Loads one of the bundled scenarios by file name.
pub fn scenario(name: &str) -> ScenarioConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// `n` telemetry lines with varied but valid readings.
pub fn frame_lines(n: usize) -> String {
    (0..n)
        .map(|i| {
            let k = i as f64;
            format!(
                "36.{}\t{:.2}\t{:.1}\t25\t{:.1}\t{:.1}\n",
                i % 10,
                2.0 + k * 0.01,
                18.0 + k * 0.1 % 7.0,
                60.0 + k % 20.0,
                50.0 + k % 30.0
            )
        })
        .collect()
}
