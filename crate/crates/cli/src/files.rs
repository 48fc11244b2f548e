use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use cdrl_core::{Checkpoint, Error};

/// Configs shipped with the binary, usable by name with `--config`.
pub const BUILTIN_CONFIGS: [(&str, &str); 3] = [
    ("point-runner-ppo", include_str!("../../../configs/point-runner-ppo.conf")),
    ("point-runner-ddpg", include_str!("../../../configs/point-runner-ddpg.conf")),
    ("grid-collect-dqn", include_str!("../../../configs/grid-collect-dqn.conf")),
];

/// Text of a config file, falling back to the built-in config of that name.
pub fn read_config(source: &str) -> Result<String> {
    let path = Path::new(source);
    if path.is_file() {
        return fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()));
    }
    if let Some((_, text)) = BUILTIN_CONFIGS.iter().find(|(name, _)| *name == source) {
        return Ok(text.to_string());
    }
    let names: Vec<&str> = BUILTIN_CONFIGS.iter().map(|(n, _)| *n).collect();
    Err(Error::config(
        "--config",
        format!("{source:?} is neither a file nor a built-in config ({})", names.join(", ")),
    )
    .into())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config("--checkpoint", format!("cannot read {}: {e}", path.display())))?;
    Checkpoint::parse(&text).with_context(|| format!("loading checkpoint {}", path.display()))
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, &target).with_context(|| format!("moving {} into place", target.display()))?;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_configs_parse() {
        for (name, text) in BUILTIN_CONFIGS {
            let cfg = cdrl_core::RunConfig::parse(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.out, format!("runs/{name}"));
        }
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_atomic(dir.path(), "a.csv", "x\n").unwrap();
        assert_eq!(fs::read_to_string(path).unwrap(), "x\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
