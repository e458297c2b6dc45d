#![no_main]

use filament_sim::collision::{parse_patch_dump, write_patch_dump};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(polys) = parse_patch_dump(text) {
        assert_eq!(parse_patch_dump(&write_patch_dump(&polys)).unwrap(), polys);
    }
});
