#![no_main]

use libfuzzer_sys::fuzz_target;
use radlabel::io::calib::{format_calibration, parse_calibration};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(calib) = parse_calibration(text) {
        let again = parse_calibration(&format_calibration(&calib)).expect("formatted calibration parses");
        assert_eq!(again, calib);
    }
});
