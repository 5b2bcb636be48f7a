#![no_main]

use col_core::harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = ExperimentConfig::from_toml(text) else { return };
    // anything that parses must survive a round trip unchanged
    let again = ExperimentConfig::from_toml(&cfg.to_toml().expect("serializable")).expect("reparses");
    assert_eq!(format!("{cfg:?}"), format!("{again:?}"));
});
