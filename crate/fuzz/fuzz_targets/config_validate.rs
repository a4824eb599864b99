#![no_main]

use adhesion_cli::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = ExperimentConfig::from_json(text) {
            let _ = cfg.validate();
            let _ = cfg.t_grid();
            let _ = cfg.output_prefix();
        }
    }
});
