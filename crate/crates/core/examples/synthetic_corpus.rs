//! Writes a small synthetic speaker-pair corpus with a run configuration,
//! ready for the `diffvc` command line.
//!
//! ```text
//! cargo run --example synthetic_corpus -- /tmp/corpus
//! diffvc prep --config /tmp/corpus/run.json
//! ```

use std::path::PathBuf;

use diffvc::runtime::commands::synth_corpus;
use diffvc::runtime::{read_pair_list, read_wav};
use diffvc::spectral::AnalysisConfig;

fn main() -> diffvc::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("diffvc_corpus"));
    let config = synth_corpus(&dir, &AnalysisConfig::narrow_band(), [8, 2, 2], 1.0, 0)?;
    println!("wrote {}", config.display());
    for (src, tgt) in read_pair_list(dir.join("test.list"))? {
        let (x, y) = (read_wav(&src)?, read_wav(&tgt)?);
        println!("{}: {:.2}s, rms {:.3} -> {:.3}", src.display(), x.duration_secs(), x.rms(), y.rms());
    }
    Ok(())
}
