//! Write a generated instance and its metadata sidecar.

use std::path::{Path, PathBuf};

use super::{make_instance, parse_family, CommandError, EXIT_OK};
use crate::config::RunConfig;
use crate::format::write_instance;

/// Default file name `<family>_<size>_s<seed>.json` under `cfg.out`.
pub fn default_path(cfg: &RunConfig, size: &str, seed: u64) -> PathBuf {
    cfg.out.join(format!("{}_{}_s{}.json", cfg.family, size, seed))
}

/// Writes one instance per (size, seed); `file` overrides the path when
/// exactly one instance is requested.
pub fn cmd_gen(cfg: &RunConfig, file: Option<&Path>) -> Result<i32, CommandError> {
    cfg.validate().map_err(CommandError::Usage)?;
    let family = parse_family(&cfg.family)?;
    let count = cfg.sizes.len() * cfg.seeds.len();
    if file.is_some() && count != 1 {
        return Err(CommandError::Usage("--file needs exactly one size and one seed".into()));
    }
    for size in &cfg.sizes {
        for &seed in &cfg.seeds {
            let inst = make_instance(family, size, seed, cfg).map_err(CommandError::Usage)?;
            let path = file.map(Path::to_path_buf).unwrap_or_else(|| default_path(cfg, size, seed));
            let side = write_instance(&path, &inst)?;
            println!("wrote {} and {}", path.display(), side.display());
        }
    }
    Ok(EXIT_OK)
}
