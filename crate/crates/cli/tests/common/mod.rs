#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use regiofit::synthetic::fixture_sources;
use regiofit::RegionCode;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_regiofit"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn regions(codes: &[i64]) -> Vec<RegionCode> {
    codes.iter().map(|c| RegionCode::new(*c).unwrap()).collect()
}

/// Writes the synthetic raw files, their adapters and a configuration
/// under `dir`; returns the configuration path.
pub fn write_fixture(dir: &Path, codes: &[i64], extra: &str) -> PathBuf {
    let data = dir.join("data");
    let adapters = dir.join("adapters");
    std::fs::create_dir_all(&data).unwrap();
    std::fs::create_dir_all(&adapters).unwrap();
    let mut sources = Vec::new();
    for src in fixture_sources(&regions(codes), 17) {
        std::fs::write(data.join(&src.file_name), &src.contents).unwrap();
        std::fs::write(adapters.join(&src.adapter_name), &src.adapter_json).unwrap();
        sources.push(format!(
            r#"{{"file":"{}","adapter":"adapters/{}"}}"#,
            src.file_name, src.adapter_name
        ));
    }
    let cfg = format!(
        r#"{{"data_dir":"data","output_dir":"out","solver":{{"max_restarts":50}}{extra},"sources":[{}]}}"#,
        sources.join(",")
    );
    let path = dir.join("pipeline.json");
    std::fs::write(&path, cfg).unwrap();
    path
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}
