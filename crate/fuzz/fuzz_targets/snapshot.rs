#![no_main]

use interfacial::snapshot::{decode, encode};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = decode(data) {
        let bytes = encode(&s.state, s.time).expect("decoded snapshot re-encodes");
        let again = decode(&bytes).expect("re-encoded snapshot decodes");
        assert_eq!(again.time.to_bits(), s.time.to_bits());
        assert_eq!(again.state.zeta, s.state.zeta);
        assert_eq!(again.state.psi, s.state.psi);
    }
});
