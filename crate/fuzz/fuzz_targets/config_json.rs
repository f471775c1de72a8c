#![no_main]

use libfuzzer_sys::fuzz_target;
use swipt_cli::ScenarioFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(f) = ScenarioFile::parse(text) else { return };
    // conversion may reject the values but must not panic
    if let Ok(cfg) = f.system() {
        assert_eq!(cfg.gamma.len(), cfg.u);
        assert_eq!(cfg.gamma_leak.len(), cfg.u);
    }
    let _ = f.geometry();
});
