#![no_main]

use ldg_core::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_json_str(text) {
        let back = RunConfig::from_json_str(&cfg.to_json_string()).expect("written config parses");
        assert_eq!(back.grid.nx, cfg.grid.nx);
        assert_eq!(back.grid.ny, cfg.grid.ny);
    }
});
