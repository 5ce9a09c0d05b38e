//! File helpers: atomic writes, sorted listings, label files, seeds.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use antispoof::eval::Class;

use crate::failure::{CliResult, Context, Failure};

/// Writes through a temporary file in the same directory, then renames it
/// over `path`, so readers never see a partial file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> CliResult {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Failure::input(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.context(path.display())
}

pub fn ensure_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).context(dir.display())
}

/// Files in `dir` with extension `ext` (case-insensitive), sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).context(dir.display())? {
        let path = entry.context(dir.display())?.path();
        let matches = path
            .extension()
            .is_some_and(|e| e.to_string_lossy().eq_ignore_ascii_case(ext));
        if matches && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Either `input` itself or the matching files inside it.
pub fn inputs(input: &Path, ext: &str) -> CliResult<Vec<PathBuf>> {
    let files = if input.is_dir() {
        list_files(input, ext)?
    } else if input.is_file() {
        vec![input.to_path_buf()]
    } else {
        return Err(Failure::input(format!("{} does not exist", input.display())));
    };
    if files.is_empty() {
        return Err(Failure::input(format!("no .{ext} files in {}", input.display())));
    }
    Ok(files)
}

/// Utterance id of a file: its name without the extension.
pub fn utterance_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Per-file seed: the master seed XOR the FNV-1a hash of the utterance id.
pub fn file_seed(master: u64, id: &str) -> u64 {
    master ^ fnv1a64(id.as_bytes())
}

/// Reads `id<TAB>bonafide|fake` lines.
pub fn read_labels(path: &Path) -> CliResult<BTreeMap<String, Class>> {
    let text = fs::read_to_string(path).context(path.display())?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(id), Some(label), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Failure::input(format!(
                "{} line {}: expected id<TAB>label",
                path.display(),
                n + 1
            )));
        };
        let class: Class = label.trim().parse().context(path.display())?;
        if out.insert(id.to_string(), class).is_some() {
            return Err(Failure::input(format!("{}: duplicate id {id}", path.display())));
        }
    }
    Ok(out)
}

pub fn write_labels(path: &Path, labels: &BTreeMap<String, Class>) -> CliResult {
    let text: String = labels.iter().map(|(id, c)| format!("{id}\t{c}\n")).collect();
    atomic_write(path, text.as_bytes())
}

pub fn pretty_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}
