#![no_main]

use libfuzzer_sys::fuzz_target;
use radlabel::fog::Encoding;
use radlabel::io::image::decode_image;

fuzz_target!(|data: &[u8]| {
    let _ = decode_image(data, Encoding::Linear);
    let _ = decode_image(data, Encoding::Srgb);
});
