//! Write a small synthetic corpus in the released file layout, for trying
//! the toolkit without the real dataset:
//!
//! ```text
//! cargo run -p stancy-core --example make_fixture -- /tmp/corpus [seed]
//! ```

use std::path::Path;
use std::process::ExitCode;

use stancy_core::data::fixture::write_perspectrum_fixture;

/// Split counts small enough to train on in seconds while still covering
/// every split and label.
const DEMO_COUNTS: [[u64; 2]; 3] = [[120, 110], [30, 28], [40, 36]];

fn main() -> ExitCode {
    let mut args = std::env::args().skip(1);
    let Some(dir) = args.next() else {
        eprintln!("usage: make_fixture <output-dir> [seed]");
        return ExitCode::FAILURE;
    };
    let seed = match args.next().map(|s| s.parse::<u64>()) {
        Some(Ok(s)) => s,
        Some(Err(_)) => {
            eprintln!("usage: make_fixture <output-dir> [seed]");
            return ExitCode::FAILURE;
        }
        None => 7,
    };
    if let Err(e) = write_perspectrum_fixture(Path::new(&dir), DEMO_COUNTS, seed) {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    let total: u64 = DEMO_COUNTS.iter().flatten().sum();
    println!("wrote a {total}-pair corpus to {dir}");
    ExitCode::SUCCESS
}
