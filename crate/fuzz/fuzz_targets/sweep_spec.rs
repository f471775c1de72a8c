#![no_main]

use libfuzzer_sys::fuzz_target;
use swipt_cli::SweepSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = SweepSpec::parse(text) else { return };
    assert!(!spec.values.is_empty() && spec.realizations > 0);
    for &v in spec.values.iter().take(4) {
        let _ = spec.config_at(v);
    }
});
