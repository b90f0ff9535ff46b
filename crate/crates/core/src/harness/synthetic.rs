use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;

/// Probability that a token is drawn from the class signal block when
/// noise terms exist (4:1 signal to noise).
pub const SIGNAL_SHARE: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub classes: usize,
    pub docs_per_class: usize,
    pub signal_terms: usize,
    pub noise_terms: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            classes: 4,
            docs_per_class: 25,
            signal_terms: 20,
            noise_terms: 40,
            min_tokens: 40,
            max_tokens: 80,
            seed: 42,
        }
    }
}

pub fn class_dir_name(class: usize) -> String {
    format!("class{class:02}")
}

fn signal_word(class: usize, term: usize) -> String {
    format!("c{class:02}s{term:03}")
}

fn noise_word(term: usize) -> String {
    format!("noise{term:03}")
}

/// Token sequence of one synthetic document.
fn document_tokens(class: usize, opts: &SynthOptions, rng: &mut ChaCha8Rng) -> Vec<String> {
    let len = rng.gen_range(opts.min_tokens..=opts.max_tokens);
    (0..len)
        .map(|_| {
            if opts.noise_terms > 0 && !rng.gen_bool(SIGNAL_SHARE) {
                noise_word(rng.gen_range(0..opts.noise_terms))
            } else {
                signal_word(class, rng.gen_range(0..opts.signal_terms))
            }
        })
        .collect()
}

/// Writes `<out>/classNN/docNNN.txt`. Every class owns a disjoint block of
/// signal terms; all classes share the noise terms.
pub fn gen_synthetic(out: &Path, opts: &SynthOptions) -> Result<usize, HarnessError> {
    if opts.classes == 0 || opts.docs_per_class == 0 || opts.signal_terms == 0 {
        return Err(HarnessError::Usage(
            "classes, docs-per-class and signal-terms must be at least 1".into(),
        ));
    }
    if opts.min_tokens == 0 || opts.min_tokens > opts.max_tokens {
        return Err(HarnessError::Usage("token range must satisfy 1 <= min <= max".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut written = 0;
    for class in 0..opts.classes {
        let dir = out.join(class_dir_name(class));
        fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
        for doc in 0..opts.docs_per_class {
            let tokens = document_tokens(class, opts, &mut rng);
            let mut text = String::new();
            for line in tokens.chunks(12) {
                let _ = writeln!(text, "{}", line.join(" "));
            }
            let path = dir.join(format!("doc{doc:03}.txt"));
            fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
            written += 1;
        }
    }
    Ok(written)
}
