#![no_main]

use libfuzzer_sys::fuzz_target;
use ris_core::plot::{emit_plot, PlotColumns};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let columns = PlotColumns::sweep_default();
    if let Ok(svg) = emit_plot(text, &columns, "fuzz") {
        assert!(svg.ends_with("</svg>\n"));
    }
    let _ = emit_plot(text, &PlotColumns::new("x", &["y"], None), "");
});
