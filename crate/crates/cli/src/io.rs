use std::fs;
use std::path::Path;

use featurekit::{interchange, FeatureCollection};

use crate::failure::{Classify, CmdResult};

pub fn read(path: &Path) -> CmdResult<Vec<u8>> {
    fs::read(path).data_ctx(format!("reading {}", path.display()))
}

pub fn write(path: &Path, bytes: &[u8]) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).data_ctx(format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).data_ctx(format!("writing {}", path.display()))
}

pub fn read_collection(path: &Path) -> CmdResult<FeatureCollection> {
    interchange::from_bytes(&read(path)?).data_ctx(path.display())
}

pub fn write_collection(path: &Path, collection: &FeatureCollection) -> CmdResult {
    write(path, &interchange::to_bytes_pretty(collection))
}

/// Comma-separated floats with an exact count.
pub fn floats(text: &str, count: usize, what: &str) -> CmdResult<Vec<f64>> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    match values {
        Ok(v) if v.len() == count && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(crate::failure::Failure::usage(format!(
            "{what} needs {count} comma-separated numbers, got '{text}'"
        ))),
    }
}
