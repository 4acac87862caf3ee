#![no_main]

use gma_core::experiment::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = ExperimentConfig::from_json_str(s) {
            // Anything accepted must describe a buildable array.
            cfg.scenario.array_config().unwrap();
        }
    }
});
