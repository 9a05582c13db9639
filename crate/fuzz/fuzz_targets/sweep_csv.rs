#![no_main]

use libfuzzer_sys::fuzz_target;
use ris_core::experiment::{parse_sweep_csv, rows_to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_sweep_csv(text) {
        let csv = rows_to_csv(&rows).unwrap();
        assert_eq!(parse_sweep_csv(&csv).unwrap().len(), rows.len());
    }
});
