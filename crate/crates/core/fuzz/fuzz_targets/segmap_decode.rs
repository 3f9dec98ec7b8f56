#![no_main]

use libfuzzer_sys::fuzz_target;
use radlabel::io::segmap;
use radlabel::labels::SegSource;

fuzz_target!(|data: &[u8]| {
    if let Ok(seg) = segmap::decode_png(data, SegSource::Camera) {
        let bytes = segmap::encode_png(&seg).expect("decoded raster encodes");
        assert_eq!(segmap::decode_png(&bytes, SegSource::Camera).expect("round trip"), seg);
    }
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = segmap::parse_sidecar(text);
    }
});
