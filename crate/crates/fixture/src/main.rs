//! `radlabel-synth <dir> [frames] [scene...]`: writes a synthetic dataset.

use std::path::PathBuf;
use std::process::ExitCode;

use radlabel_fixture::{write_fixture, SceneSpec};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(root) = args.first().map(PathBuf::from) else {
        eprintln!("usage: radlabel-synth <dir> [frames] [scene...]");
        return ExitCode::from(1);
    };
    let frames = match args.get(1).map(|s| s.parse::<u64>()) {
        None => 10,
        Some(Ok(n)) => n,
        Some(Err(_)) => {
            eprintln!("frames must be a non-negative integer");
            return ExitCode::from(1);
        }
    };
    let scenes: Result<Vec<u32>, _> = args.iter().skip(2).map(|s| s.parse::<u32>()).collect();
    let scenes = match scenes {
        Ok(s) if s.is_empty() => vec![2],
        Ok(s) => s,
        Err(_) => {
            eprintln!("scene ids must be non-negative integers");
            return ExitCode::from(1);
        }
    };
    let specs: Vec<SceneSpec> = scenes.into_iter().map(|s| SceneSpec::new(s, frames)).collect();
    match write_fixture(&root, &specs) {
        Ok(f) => {
            println!("{}", f.config.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
