#![no_main]

use interfacial::scenario::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Anything accepted must survive its own echo.
    if let Ok(cfg) = parse_config(text) {
        let echo = serde_json::to_string(&cfg).expect("validated config serializes");
        let again = parse_config(&echo).expect("echo parses");
        assert_eq!(cfg, again);
    }
});
