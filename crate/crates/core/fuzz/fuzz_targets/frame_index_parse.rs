#![no_main]

use libfuzzer_sys::fuzz_target;
use radlabel::pipeline::frames::parse_frame_index;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_frame_index(data) {
        assert!(rows.windows(2).all(|w| w[0].frame_id < w[1].frame_id));
    }
});
