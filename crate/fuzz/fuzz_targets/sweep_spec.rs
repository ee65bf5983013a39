#![no_main]

use libfuzzer_sys::fuzz_target;
use spark_finger::statics::{GraspMode, SweepSpec};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = text.parse::<GraspMode>();
    if let Ok(spec) = text.parse::<SweepSpec>() {
        assert_eq!(spec.to_string().parse::<SweepSpec>().unwrap(), spec);
        if spec.n <= 10_000 {
            let v = spec.values();
            assert_eq!(v.len(), spec.n);
            assert!(v.iter().all(|x| x.is_finite()));
        }
    }
});
