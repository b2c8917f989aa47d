use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sift::{read_features, Feature};

pub const FEATURE_EXT: &str = "sift";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub image_id: String,
    pub clip_id: String,
    pub label: Option<String>,
    pub feature_path: PathBuf,
}

/// Clip id of an image id: everything before the last `_`, or the whole id.
///
/// `clip0042_3` belongs to clip `clip0042`.
pub fn clip_id_of(image_id: &str) -> &str {
    image_id.rsplit_once('_').map_or(image_id, |(clip, _)| clip)
}

fn stem(name: &str) -> String {
    Path::new(name)
        .file_stem()
        .map_or_else(|| name.to_string(), |s| s.to_string_lossy().into_owned())
}

/// Reads a `filename,label` CSV into a map keyed by file stem.
pub fn load_labels(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Config(format!("{}: {other:?}", path.display())),
        })?;
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "filename" || &headers[1] != "label" {
        return Err(Error::Config(format!("{}: expected header `filename,label`", path.display())));
    }
    let mut labels = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let (file, label) = (&record[0], &record[1]);
        if file.is_empty() || label.is_empty() {
            continue;
        }
        if labels.insert(stem(file), label.to_string()).is_some() {
            return Err(Error::Config(format!("{}: duplicate entry for `{file}`", path.display())));
        }
    }
    Ok(labels)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetIndex {
    entries: Vec<Entry>,
}

impl DatasetIndex {
    pub fn new(mut entries: Vec<Entry>) -> Result<Self> {
        entries.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        if let Some(w) = entries.windows(2).find(|w| w[0].image_id == w[1].image_id) {
            return Err(Error::arg(format!("duplicate image id `{}`", w[0].image_id)));
        }
        Ok(Self { entries })
    }

    /// One entry per `*.sift` file in `dir`, labelled from `labels` by stem.
    pub fn from_feature_dir(dir: &Path, labels: Option<&BTreeMap<String, String>>) -> Result<Self> {
        let mut entries = Vec::new();
        for item in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = item.map_err(|e| Error::io(dir, e))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some(FEATURE_EXT) || !path.is_file() {
                continue;
            }
            let image_id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            entries.push(Entry {
                clip_id: clip_id_of(&image_id).to_string(),
                label: labels.and_then(|l| l.get(&image_id).cloned()),
                image_id,
                feature_path: path,
            });
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A dataset index with every feature file loaded once.
#[derive(Debug, Clone)]
pub struct Gallery {
    entries: Vec<Entry>,
    features: Vec<Vec<Feature>>,
    by_id: HashMap<String, usize>,
}

impl Gallery {
    pub fn load(index: &DatasetIndex) -> Result<Self> {
        let features = index
            .entries()
            .par_iter()
            .map(|e| read_features(&e.feature_path))
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(index.entries().to_vec(), features)
    }

    /// Builds a gallery from in-memory features, one list per entry.
    pub fn from_parts(entries: Vec<Entry>, features: Vec<Vec<Feature>>) -> Result<Self> {
        if entries.len() != features.len() {
            return Err(Error::arg("one feature list per entry is required"));
        }
        let mut by_id = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if by_id.insert(e.image_id.clone(), i).is_some() {
                return Err(Error::arg(format!("duplicate image id `{}`", e.image_id)));
            }
        }
        Ok(Self {
            entries,
            features,
            by_id,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn position(&self, image_id: &str) -> Option<usize> {
        self.by_id.get(image_id).copied()
    }

    pub fn get(&self, i: usize) -> (&Entry, &[Feature]) {
        (&self.entries[i], &self.features[i])
    }
}
