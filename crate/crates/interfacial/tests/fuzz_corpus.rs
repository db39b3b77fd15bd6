//! Replays the checked-in fuzz seeds through the same checks as the fuzz
//! targets, so the corpus stays meaningful on a stable toolchain.

use std::path::PathBuf;

use interfacial::scenario::parse_config;
use interfacial::snapshot::{decode, encode};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn config_seeds() {
    let all = seeds("config");
    assert!(all.len() >= 5);
    let mut accepted = 0;
    for (name, data) in &all {
        let Ok(text) = std::str::from_utf8(data) else {
            continue;
        };
        if let Ok(cfg) = parse_config(text) {
            accepted += 1;
            let echo = serde_json::to_string(&cfg).unwrap();
            assert_eq!(parse_config(&echo).unwrap(), cfg, "{name}");
        }
    }
    assert!(accepted >= 5 && accepted < all.len(), "{accepted}");
}

#[test]
fn snapshot_seeds() {
    let all = seeds("snapshot");
    let mut accepted = 0;
    for (name, data) in &all {
        if let Ok(s) = decode(data) {
            accepted += 1;
            let again = decode(&encode(&s.state, s.time).unwrap()).unwrap();
            assert_eq!(again.state.zeta, s.state.zeta, "{name}");
            assert_eq!(again.state.psi, s.state.psi, "{name}");
        }
    }
    assert_eq!(accepted, 1);
}
