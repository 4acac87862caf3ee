#![no_main]

use gma_core::experiment::{read_trial_csv, write_trial_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_trial_csv(data) {
        let mut out = Vec::new();
        write_trial_csv(&records, &mut out).unwrap();
        assert_eq!(read_trial_csv(out.as_slice()).unwrap(), records);
    }
});
