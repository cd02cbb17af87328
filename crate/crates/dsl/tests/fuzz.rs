//! Parser robustness: arbitrary input may be rejected but must never
//! panic, hang, or blow the stack.

use chq_dsl::parse_scenario;
use rand::seq::SliceRandom as _;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::path::PathBuf;

fn valid_corpus() -> Vec<String> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus/valid");
    let mut sources: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|entry| fs::read_to_string(entry.unwrap().path()).unwrap())
        .collect();
    sources.sort();
    sources
}

#[test]
fn random_inputs_never_panic() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d51f);
    let charset: Vec<char> = "space ketunitary pdi times family intervened query \
                              0123456789.,:=[](){}+-*/i#\n_abz"
        .chars()
        .collect();
    for case in 0..100_000 {
        let len = rng.gen_range(0..80);
        let src: String = if case % 2 == 0 {
            (0..len).map(|_| rng.gen::<u8>() as char).collect()
        } else {
            (0..len).map(|_| *charset.choose(&mut rng).unwrap()).collect()
        };
        let _ = parse_scenario(&src);
    }
}

#[test]
fn mutated_corpus_never_panics() {
    let sources = valid_corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(20_260_819);
    for src in &sources {
        for _ in 0..300 {
            let mut bytes = src.clone().into_bytes();
            for _ in 0..rng.gen_range(1..4) {
                if bytes.is_empty() {
                    break;
                }
                let at = rng.gen_range(0..bytes.len());
                match rng.gen_range(0..3) {
                    0 => bytes[at] = rng.gen(),
                    1 => {
                        bytes.insert(at, rng.gen());
                    }
                    _ => {
                        bytes.remove(at);
                    }
                }
            }
            let mutated = String::from_utf8_lossy(&bytes).into_owned();
            let _ = parse_scenario(&mutated);
        }
    }
}

#[test]
fn pathological_nesting_errors_instead_of_overflowing() {
    let deep_kron = format!("space 2\nket k = {}", "kron(".repeat(10_000));
    assert!(parse_scenario(&deep_kron).is_err());

    let deep_parens = format!("space 2\nket k = [{}", "(".repeat(10_000));
    assert!(parse_scenario(&deep_parens).is_err());

    let long_sum = format!("space 2\nket k = [{}1, 0]", "1+".repeat(10_000));
    assert!(parse_scenario(&long_sum).is_err());

    let many_entries = format!("space 2\nket k = [{}]", "0,".repeat(100_000));
    assert!(parse_scenario(&many_entries).is_err());
}
