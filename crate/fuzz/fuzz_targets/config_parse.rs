#![no_main]

use libfuzzer_sys::fuzz_target;
use spark_finger::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    match text.parse::<RunConfig>() {
        Ok(cfg) => {
            let _ = cfg.linkage();
        }
        Err(e) => {
            if let (Some(line), Some(_)) = (e.line, e.column) {
                assert!(line >= 1 && line <= text.matches('\n').count() + 1);
            }
        }
    }
});
