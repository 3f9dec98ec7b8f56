#![no_main]

use libfuzzer_sys::fuzz_target;
use radlabel::io::ply;

fuzz_target!(|data: &[u8]| {
    if let Ok(cloud) = ply::decode(data) {
        let _ = cloud.clone().into_point_cloud(0);
        let _ = cloud.into_labeled(0);
    }
});
