#![no_main]

use libfuzzer_sys::fuzz_target;
use tw_tail::harness::{ExperimentConfig, Mode};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = text.trim().parse::<Mode>();
    if let Ok(cfg) = ExperimentConfig::from_toml_str(text) {
        // anything accepted must survive a round trip
        let again = cfg.to_toml_string().expect("serialize accepted config");
        let back = ExperimentConfig::from_toml_str(&again).expect("reparse serialized config");
        assert_eq!(back, cfg);
    }
});
