#![no_main]

use chiralwire::app::GeometryFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(g) = GeometryFile::from_json(s) {
            // Accepted files must survive a write/read cycle unchanged.
            assert_eq!(GeometryFile::from_json(&g.to_json()).unwrap(), g);
            let _ = g.splines_lambda();
        }
    }
});
