#![no_main]

use libfuzzer_sys::fuzz_target;
use oscgate_cli::ExperimentConfig;

// Parsing never panics, and an accepted config survives its own echo.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        let echoed = ExperimentConfig::parse(&cfg.to_text()).expect("echoed config parses");
        assert_eq!(echoed, cfg);
    }
});
