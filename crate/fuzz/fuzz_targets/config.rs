#![no_main]

use chiralwire::app::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = RunConfig::parse(s) {
            let _ = cfg.validate();
        }
        let _ = RunConfig::default().merge_str(s);
    }
});
