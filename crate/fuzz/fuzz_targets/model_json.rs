#![no_main]

use kltext::harness::ModelFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Anything that loads must survive a write/load cycle unchanged.
    if let Ok(model) = ModelFile::from_json(data) {
        let text = model.to_json().unwrap();
        assert_eq!(ModelFile::from_json(text.as_bytes()).unwrap(), model);
    }
});
