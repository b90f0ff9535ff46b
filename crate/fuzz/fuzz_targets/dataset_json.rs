#![no_main]

use kltext::LabeledDataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = LabeledDataset::from_json(data) {
        let text = ds.to_json().unwrap();
        let again = LabeledDataset::from_json(text.as_bytes()).unwrap();
        assert_eq!(again.documents, ds.documents);
    }
});
