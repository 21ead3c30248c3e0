//! On-disk layout, atomic writes and file references.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Version written into, and required of, every document.
pub const FORMAT_VERSION: u32 = 1;

/// A JSON document with a `kind` tag and a `version` field.
pub trait Document: Serialize + DeserializeOwned {
    const KIND: &'static str;
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename, so readers see either the old or the new content.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Canonical serialized form: pretty JSON with a trailing newline.
pub fn to_bytes<T: Serialize>(doc: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("documents always serialize");
    out.push(b'\n');
    out
}

pub fn save<T: Document>(path: &Path, doc: &T) -> Result<()> {
    write_atomic(path, &to_bytes(doc))
}

/// Parses a document, checking its kind tag and version first so that
/// passing the wrong file gives a clear message.
pub fn parse<T: Document>(path: &Path, bytes: &[u8]) -> Result<T> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })?;
    let kind = value.get("kind").and_then(|k| k.as_str());
    if kind != Some(T::KIND) {
        return Err(Error::format(
            path,
            format!(
                "expected a {} file, found kind {:?}",
                T::KIND,
                kind.unwrap_or("<none>")
            ),
        ));
    }
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(FORMAT_VERSION) => {}
        other => {
            return Err(Error::format(
                path,
                format!("unsupported format version {other:?}, expected {FORMAT_VERSION}"),
            ))
        }
    }
    serde_json::from_value(value).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}

pub fn load<T: Document>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse(path, &bytes)
}

/// Reference to `target` as stored inside the file at `from`: relative to
/// `from`'s directory when `target` lies below it, absolute otherwise.
pub fn reference(from: &Path, target: &Path) -> Result<String> {
    let target = fs::canonicalize(target).map_err(|e| Error::io(target, e))?;
    let dir = parent_dir(from);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let dir = fs::canonicalize(&dir).map_err(|e| Error::io(&dir, e))?;
    let r = match target.strip_prefix(&dir) {
        Ok(rel) => rel.to_path_buf(),
        Err(_) => target,
    };
    r.to_str()
        .map(|s| s.replace('\\', "/"))
        .ok_or_else(|| Error::Invalid(format!("path {} is not valid UTF-8", r.display())))
}

/// Absolute form of a target path, for documents that leave the project.
pub fn absolute_reference(target: &Path) -> Result<String> {
    let target = fs::canonicalize(target).map_err(|e| Error::io(target, e))?;
    target
        .to_str()
        .map(str::to_owned)
        .ok_or_else(|| Error::Invalid(format!("path {} is not valid UTF-8", target.display())))
}

/// Resolves a reference stored in the file at `from`; the target must exist.
pub fn resolve(from: &Path, reference: &str) -> Result<PathBuf> {
    let r = Path::new(reference);
    let path = if r.is_absolute() {
        r.to_path_buf()
    } else {
        parent_dir(from).join(r)
    };
    if !path.is_file() {
        return Err(Error::format(
            from,
            format!("referenced file {} does not exist", path.display()),
        ));
    }
    Ok(path)
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Project directory with one sub-directory per artifact kind.
#[derive(Debug, Clone)]
pub struct ProjectStore {
    root: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Area {
    Datasets,
    Pairs,
    Sessions,
    Results,
}

impl Area {
    pub fn dir_name(self) -> &'static str {
        match self {
            Area::Datasets => "datasets",
            Area::Pairs => "pairs",
            Area::Sessions => "sessions",
            Area::Results => "results",
        }
    }
}

impl ProjectStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ProjectStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Creates the directory layout.
    pub fn init(&self) -> Result<()> {
        for area in [Area::Datasets, Area::Pairs, Area::Sessions, Area::Results] {
            let dir = self.root.join(area.dir_name());
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        Ok(())
    }

    /// Path of the artifact `name` in `area`; names are plain file stems.
    pub fn path(&self, area: Area, name: &str) -> Result<PathBuf> {
        let valid = !name.is_empty()
            && name != "."
            && name != ".."
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
        if !valid {
            return Err(Error::Invalid(format!("invalid artifact name `{name}`")));
        }
        Ok(self.root.join(area.dir_name()).join(format!("{name}.json")))
    }

    /// Like [`ProjectStore::path`] but the file must exist.
    pub fn existing(&self, area: Area, name: &str) -> Result<PathBuf> {
        let p = self.path(area, name)?;
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::Invalid(format!(
                "no {} entry named `{name}`",
                area.dir_name()
            )))
        }
    }
}
