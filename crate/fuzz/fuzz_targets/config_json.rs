#![no_main]

use libfuzzer_sys::fuzz_target;
use ris_core::SystemConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = SystemConfig::from_json_str(text) {
        let json = cfg.to_json_pretty().unwrap();
        let again = SystemConfig::from_json_str(&json).unwrap();
        assert_eq!(again, cfg);
    }
});
