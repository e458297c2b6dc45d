#![no_main]

use filament_sim::scene::read_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = read_csv(data) {
        let width = log.columns.len() - 2;
        assert!(log.rows.iter().all(|r| r.values.len() == width));
    }
});
