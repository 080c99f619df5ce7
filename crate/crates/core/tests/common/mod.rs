#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_korn-lab");

/// Runs the binary with `KORN_LAB_THREADS` set when `threads` is given.
pub fn run_cli(args: &[&str], dir: &Path, threads: Option<usize>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).current_dir(dir);
    match threads {
        Some(n) => cmd.env("KORN_LAB_THREADS", n.to_string()),
        None => cmd.env_remove("KORN_LAB_THREADS"),
    };
    cmd.output().expect("binary runs")
}

/// Report text with the timestamp value blanked.
pub fn strip_timestamp(report: &str) -> String {
    let key = "\"timestamp\":";
    match report.find(key) {
        Some(start) => {
            let from = start + key.len();
            let end = report[from..]
                .find(|c: char| !c.is_ascii_digit())
                .map_or(report.len(), |e| from + e);
            format!("{}{}{}", &report[..from], "0", &report[end..])
        }
        None => report.to_string(),
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}
