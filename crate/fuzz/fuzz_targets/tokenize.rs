#![no_main]

use kltext::corpus::{count_wordforms, normalize_counts, tokenize, Vocabulary};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    let tokens = tokenize(&text);
    let mut vocab = Vocabulary::new();
    let counts = count_wordforms(&tokens, &mut vocab);
    assert_eq!(
        counts.terms().iter().map(|&(_, c)| c as usize).sum::<usize>(),
        tokens.len()
    );
    match normalize_counts(&counts) {
        Ok(unit) => assert!(unit.is_unit()),
        Err(_) => assert!(tokens.is_empty()),
    }
});
