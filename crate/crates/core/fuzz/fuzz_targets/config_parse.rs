#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use radlabel::pipeline::PipelineConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = PipelineConfig::from_toml_str(text, Path::new("/base")) {
        let _ = cfg.hash();
    }
});
