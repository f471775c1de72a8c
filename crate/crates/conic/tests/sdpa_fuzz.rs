//! Random and mutated SDPA text never panics the parser, and whatever
//! parses survives an export round trip.

use conic::sdpa::{export, parse};
use proptest::prelude::*;

const SEED: &str = "\"seed\n2\n2\n2 -1\n1.0 0.5\n0 1 1 2 1.0\n1 1 1 1 1.0\n2 1 2 2 1.0\n2 2 1 1 -1.0\n0 2 1 1 -3\n";

fn check(text: &str) {
    if let Ok(p) = parse(text) {
        if let Ok(out) = export(&p) {
            let again = parse(&out).expect("exported text parses");
            assert_eq!(export(&again).unwrap(), out);
        }
    }
}

#[test]
fn truncated_records() {
    for cut in 0..SEED.len() {
        check(&SEED[..cut]);
    }
    check("1\n1\n1\n1.0\n0 1");
    check("1\n1\n1\n1.0\n0 1 1");
}

fn token() -> impl Strategy<Value = String> {
    prop_oneof![
        (-3i64..5).prop_map(|v| v.to_string()),
        any::<i64>().prop_map(|v| v.to_string()),
        any::<f64>().prop_map(|v| v.to_string()),
        Just("{".to_string()),
        Just("\n".to_string()),
        Just("\"".to_string()),
        Just("nan".to_string()),
        "[a-z]{1,3}",
    ]
}

proptest! {
    #[test]
    fn random_tokens(tokens in prop::collection::vec(token(), 0..40)) {
        check(&tokens.join(" "));
    }

    #[test]
    fn mutated_seed(pos in 0usize..200, tok in token()) {
        let mut words: Vec<String> = SEED.split(' ').map(str::to_string).collect();
        let i = pos % words.len();
        words[i] = tok;
        check(&words.join(" "));
    }

    #[test]
    fn arbitrary_text(s in "\\PC{0,80}") {
        check(&s);
    }
}
