#![no_main]

use filament_sim::scene::{parse_scene, print_scene};
use libfuzzer_sys::fuzz_target;

// Any scene the parser accepts must print to text that parses back to it.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_scene(text) {
        let printed = print_scene(&spec);
        let again = parse_scene(&printed).expect("printed scene must parse");
        assert_eq!(again, spec);
    }
});
