#![no_main]

use gma_core::experiment::parse_scheme_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(list) = parse_scheme_list(s) {
            let joined: Vec<&str> = list.iter().map(|s| s.as_str()).collect();
            assert_eq!(parse_scheme_list(&joined.join(",")).unwrap(), list);
        }
    }
});
