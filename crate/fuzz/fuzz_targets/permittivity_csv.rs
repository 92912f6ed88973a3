#![no_main]

use chiralwire::material::MaterialDb;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(db) = MaterialDb::from_csv_reader(data) {
        let metals: Vec<String> = db.metals().map(String::from).collect();
        for m in metals {
            let t = db.table(&m).unwrap();
            let (lo, hi) = t.range();
            let _ = t.lookup(0.5 * (lo + hi));
        }
    }
});
