//! Reading and writing the JSON configuration files.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{validate_profile, DetectorProfile, Taxonomy, WeightProfile};

/// Reads a file. A path given without extension also matches `<path>.json`.
pub fn read_text(path: &Path) -> Result<String> {
    let resolved = resolve_path(path).ok_or_else(|| Error::FileNotFound(path.to_path_buf()))?;
    fs::read_to_string(&resolved).map_err(|source| match source.kind() {
        ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io {
            path: resolved.clone(),
            source,
        },
    })
}

fn resolve_path(path: &Path) -> Option<PathBuf> {
    if path.is_file() {
        return Some(path.to_path_buf());
    }
    if path.extension().is_none() {
        let with_ext = path.with_extension("json");
        if with_ext.is_file() {
            return Some(with_ext);
        }
    }
    None
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(Error::from_json)
}

/// Pretty JSON with two-space indent and a trailing newline.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("in-memory serialization");
    out.push('\n');
    out
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct TaxonomyFile {
    pub categories: Vec<crate::model::Category>,
}

impl Taxonomy {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TaxonomyFile = parse_json(text)?;
        Taxonomy::new(file.categories)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?)
    }
}

impl WeightProfile {
    /// Parses and validates.
    pub fn from_json(text: &str) -> Result<Self> {
        let profile: WeightProfile = parse_json(text)?;
        validate_profile(&profile).into_result()?;
        Ok(profile)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?)
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }
}

impl DetectorProfile {
    pub fn from_json(text: &str) -> Result<Self> {
        let detector: DetectorProfile = parse_json(text)?;
        detector.validate()?;
        Ok(detector)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_text(path)?)
    }

    pub fn to_json(&self) -> String {
        to_canonical_json(self)
    }
}
