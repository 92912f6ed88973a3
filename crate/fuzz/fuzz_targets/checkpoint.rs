#![no_main]

use chiralwire::app::Checkpoint;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = Checkpoint::from_json(s);
    }
});
