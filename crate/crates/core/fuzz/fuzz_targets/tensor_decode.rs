#![no_main]

use libfuzzer_sys::fuzz_target;
use radlabel::io::tensor;

fuzz_target!(|data: &[u8]| {
    if let Ok(t) = tensor::decode(data) {
        assert_eq!(tensor::encode(&t), data);
    }
    let _ = tensor::decode_raed(data);
    let _ = tensor::decode_depth(data);
});
