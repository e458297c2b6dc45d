#![no_main]

use filament_sim::scene::{read_jsonl, write_jsonl};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = read_jsonl(data) {
        let mut out = Vec::new();
        write_jsonl(&log, &mut out).unwrap();
        assert_eq!(read_jsonl(out.as_slice()).unwrap(), log);
    }
});
