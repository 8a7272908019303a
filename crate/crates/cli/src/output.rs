//! Fixed-format CSV cells and artifact files.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// 17 significant digits, so CSV output is bit-exact and diffable.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

pub fn partial_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

/// Write `contents` to `<path>.partial`; on success rename it to `path`.
/// A failed run leaves only the `.partial` file behind.
pub fn write_artifact(path: &Path, contents: &str, passed: bool) -> io::Result<PathBuf> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let partial = partial_path(path);
    {
        let mut f = fs::File::create(&partial)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    if passed {
        fs::rename(&partial, path)?;
        Ok(path.to_path_buf())
    } else {
        match fs::remove_file(path) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        Ok(partial)
    }
}
