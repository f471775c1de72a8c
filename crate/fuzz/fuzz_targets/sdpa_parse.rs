#![no_main]

use libfuzzer_sys::fuzz_target;

// Anything that parses must export, and the export must parse back to the
// same text.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(p) = conic::sdpa::parse(text) else { return };
    let Ok(out) = conic::sdpa::export(&p) else { return };
    let again = conic::sdpa::parse(&out).expect("exported text must parse");
    assert_eq!(conic::sdpa::export(&again).unwrap(), out);
});
