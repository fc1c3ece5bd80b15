//! The checked-in fuzz seeds, run through the same checks as the fuzz targets.

use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;
use tw_tail::ensemble::{read_batch_csv, write_batch_csv};
use tw_tail::harness::ExperimentConfig;

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    assert!(!out.is_empty());
    out
}

fn check_config(data: &[u8]) -> bool {
    let Ok(text) = std::str::from_utf8(data) else {
        return false;
    };
    match ExperimentConfig::from_toml_str(text) {
        Ok(cfg) => {
            let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
            assert_eq!(back, cfg);
            true
        }
        Err(_) => false,
    }
}

fn check_batch(data: &[u8]) -> bool {
    match read_batch_csv(data) {
        Ok(batch) => {
            assert!(batch.beta > 0.0 && batch.samples.iter().all(|x| x.is_finite()));
            let mut buf = Vec::new();
            write_batch_csv(&mut buf, &batch).unwrap();
            assert_eq!(read_batch_csv(buf.as_slice()).unwrap().samples, batch.samples);
            true
        }
        Err(_) => false,
    }
}

#[test]
fn config_seeds() {
    let accepted = ["compare.toml", "flowlines.toml", "is_beta1.toml", "minimal.toml"];
    for (name, data) in corpus("config_parse") {
        assert_eq!(check_config(&data), accepted.contains(&name.as_str()), "{name}");
    }
}

#[test]
fn batch_seeds() {
    let accepted = ["crlf.csv", "empty.csv", "small.csv"];
    for (name, data) in corpus("batch_csv") {
        assert_eq!(check_batch(&data), accepted.contains(&name.as_str()), "{name}");
    }
}

proptest! {
    #[test]
    fn parsers_never_panic(data in prop::collection::vec(any::<u8>(), 0..256)) {
        check_config(&data);
        check_batch(&data);
    }

    #[test]
    fn mutated_seeds_never_panic(pick in 0usize..64, at in any::<prop::sample::Index>(), byte in any::<u8>()) {
        let mut seeds = corpus("config_parse");
        seeds.extend(corpus("batch_csv"));
        let (_, mut data) = seeds[pick % seeds.len()].clone();
        if !data.is_empty() {
            let i = at.index(data.len());
            data[i] = byte;
        }
        check_config(&data);
        check_batch(&data);
    }
}
