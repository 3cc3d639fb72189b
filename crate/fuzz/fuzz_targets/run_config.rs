#![no_main]

use libfuzzer_sys::fuzz_target;
use silverqa_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = toml::from_str::<RunConfig>(src) {
        let _ = cfg.split_ratios();
    }
});
