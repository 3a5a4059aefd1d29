use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::codec::{read_image, ImageFormat};
use super::resize::resize_bilinear;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Preferred source when one stem exists with several extensions.
const PREFERENCE: [ImageFormat; 3] = [ImageFormat::Png, ImageFormat::Ppm, ImageFormat::Jpeg];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Val,
    Test,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEntry {
    pub id: String,
    pub raw: PathBuf,
    #[serde(rename = "ref")]
    pub reference: PathBuf,
    #[serde(default)]
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub root: PathBuf,
    /// Sorted by id.
    pub pairs: Vec<PairEntry>,
    pub split_seed: Option<u64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl DatasetManifest {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.id.as_str())
    }

    pub fn with_split(&self, split: Split) -> impl Iterator<Item = &PairEntry> {
        self.pairs.iter().filter(move |p| p.split == split)
    }
}

/// Maps stem → file, resolving duplicate stems by format preference.
fn index_dir(dir: &Path, warnings: &mut Vec<String>) -> Result<BTreeMap<String, PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingDirectory(dir.to_path_buf()));
    }
    let mut by_stem: BTreeMap<String, Vec<(ImageFormat, PathBuf)>> = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let (Some(format), Some(stem)) = (
            ImageFormat::from_path(&path),
            path.file_stem().and_then(|s| s.to_str()),
        ) else {
            continue;
        };
        by_stem
            .entry(stem.to_owned())
            .or_default()
            .push((format, path.clone()));
    }
    let mut out = BTreeMap::new();
    for (stem, mut files) in by_stem {
        files.sort_by_key(|(f, p)| (PREFERENCE.iter().position(|x| x == f), p.clone()));
        if files.len() > 1 {
            warnings.push(format!(
                "{}: stem {stem:?} has {} files, using {}",
                dir.display(),
                files.len(),
                files[0].1.display()
            ));
        }
        out.insert(stem, files.swap_remove(0).1);
    }
    Ok(out)
}

/// Pairs files in `root/raw_dir` and `root/ref_dir` by filename stem.
pub fn scan_dataset(root: &Path, raw_dir: &str, ref_dir: &str) -> Result<DatasetManifest> {
    let mut warnings = Vec::new();
    let (raw_path, ref_path) = (root.join(raw_dir), root.join(ref_dir));
    let raw = index_dir(&raw_path, &mut warnings)?;
    let mut reference = index_dir(&ref_path, &mut warnings)?;
    let mut pairs = Vec::new();
    for (id, raw_file) in raw {
        match reference.remove(&id) {
            Some(ref_file) => pairs.push(PairEntry {
                id,
                raw: raw_file,
                reference: ref_file,
                split: Split::Train,
            }),
            None => warnings.push(format!("{}: no reference for {id:?}", raw_path.display())),
        }
    }
    for id in reference.keys() {
        warnings.push(format!("{}: no raw image for {id:?}", ref_path.display()));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyIntersection {
            raw: raw_path,
            reference: ref_path,
        });
    }
    Ok(DatasetManifest {
        root: root.to_path_buf(),
        pairs,
        split_seed: None,
        warnings,
    })
}

#[derive(Deserialize)]
struct ManifestFile {
    pairs: Vec<ManifestPair>,
    #[serde(default)]
    split_seed: Option<u64>,
}

#[derive(Deserialize)]
struct ManifestPair {
    id: String,
    raw: PathBuf,
    #[serde(rename = "ref")]
    reference: PathBuf,
}

/// Uses `root/manifest.json` when present, otherwise pairs `root/raw` with
/// `root/ref`.
pub fn open_dataset(root: &Path) -> Result<DatasetManifest> {
    let path = root.join(MANIFEST_FILE);
    if !path.is_file() {
        return scan_dataset(root, "raw", "ref");
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let file: ManifestFile = serde_json::from_str(&text)?;
    let mut pairs: Vec<PairEntry> = file
        .pairs
        .into_iter()
        .map(|p| PairEntry {
            id: p.id,
            raw: root.join(p.raw),
            reference: root.join(p.reference),
            split: Split::Train,
        })
        .collect();
    pairs.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = pairs.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Error::DuplicateName(w[0].id.clone()));
    }
    for p in &pairs {
        for f in [&p.raw, &p.reference] {
            if !f.is_file() {
                return Err(Error::io(
                    f.clone(),
                    std::io::Error::new(std::io::ErrorKind::NotFound, "listed in manifest.json"),
                ));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Empty("manifest.json pairs"));
    }
    Ok(DatasetManifest {
        root: root.to_path_buf(),
        pairs,
        split_seed: file.split_seed,
        warnings: Vec::new(),
    })
}

/// Seeded shuffle; the first `train_n` ids become train, the next `val_n`
/// val and the rest test.
pub fn split(manifest: &DatasetManifest, train_n: usize, val_n: usize, seed: u64) -> Result<DatasetManifest> {
    let total = manifest.pairs.len();
    if train_n.checked_add(val_n).is_none_or(|n| n > total) {
        return Err(Error::InvalidArgument(format!(
            "split {train_n} + {val_n} exceeds {total} pairs"
        )));
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = manifest.clone();
    for (rank, &i) in order.iter().enumerate() {
        out.pairs[i].split = if rank < train_n {
            Split::Train
        } else if rank < train_n + val_n {
            Split::Val
        } else {
            Split::Test
        };
    }
    out.split_seed = Some(seed);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairedSample {
    pub id: String,
    pub raw: Tensor<f32>,
    pub reference: Tensor<f32>,
}

/// Decodes both images and resizes them to `target` (height, width).
pub fn load_sample(entry: &PairEntry, target: (usize, usize)) -> Result<PairedSample> {
    let load = |p: &Path| -> Result<Tensor<f32>> {
        resize_bilinear(&read_image(p)?.to_tensor(), target.0, target.1)
    };
    Ok(PairedSample {
        id: entry.id.clone(),
        raw: load(&entry.raw)?,
        reference: load(&entry.reference)?,
    })
}
