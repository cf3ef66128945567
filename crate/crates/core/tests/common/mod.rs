#![allow(dead_code)]

use std::io::Write;

use crit::config::{preset, RunConfig};
use crit::sweep::{intensity_scan, scan, SweepResult};

pub fn spectrum(run: &RunConfig) -> SweepResult {
    scan(
        &run.cavity_config(),
        &run.input_state().unwrap(),
        run.omega(),
        &run.detection_model().unwrap(),
        &run.scan_spec(),
    )
    .unwrap()
}

pub fn preset_spectrum(name: &str) -> SweepResult {
    spectrum(&preset(name).unwrap())
}

pub fn preset_intensity(name: &str) -> SweepResult {
    let run = preset(name).unwrap();
    intensity_scan(&run.cavity_config(), &run.scan_spec()).unwrap()
}

/// Writes straight to the process stderr so the line survives test capture.
pub fn report(criterion: u32, title: &str, passed: bool, detail: &str) {
    let status = if passed { "PASS" } else { "FAIL" };
    let _ = writeln!(
        std::io::stderr(),
        "[acceptance {criterion:>2}] {status} {title}: {detail}"
    );
}
