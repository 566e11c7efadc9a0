//! Line-oriented triplet manifests.
//!
//! One record per line as whitespace-separated `key=value` pairs. Blank lines
//! and lines starting with `#` are ignored. Two header keys may appear on a
//! line of their own: `split=train|val|test` and `dataset=<name>`.
//!
//! ```text
//! split=train
//! dataset=viewmatch
//! source=obj01/az000 target=obj01/az090 label=ground_truth d_az=90 path=a/0.prsa
//! source=obj01/az000 target=obj01/az090_p1 label=positive d_az=90 path=a/1.prsa anchor=obj01/az090
//! source=obj01/az000 target=obj01/az090_n1 label=negative_inpaint d_az=90 weight=0.31 path=a/2.prsa anchor=obj01/az090
//! ```
//!
//! Record keys: `source`, `target`, `label`, `path` (required); `d_az`,
//! `d_el`, `d_r` (default 0); `weight` (default 1); `anchor` (the target id of
//! the ground-truth record this sample is compared against, defaults to
//! `target`).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::format::{self, FileKind};
use crate::types::RelativePose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    GroundTruth,
    Positive,
    NegativeInpaint,
    NegativePose,
}

impl Label {
    pub const ALL: [Label; 4] = [
        Label::GroundTruth,
        Label::Positive,
        Label::NegativeInpaint,
        Label::NegativePose,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::GroundTruth => "ground_truth",
            Label::Positive => "positive",
            Label::NegativeInpaint => "negative_inpaint",
            Label::NegativePose => "negative_pose",
        }
    }

    pub fn is_negative(self) -> bool {
        matches!(self, Label::NegativeInpaint | Label::NegativePose)
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown label {s:?}"))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Split {
    #[default]
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(format!("unknown split {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripletRecord {
    pub source_id: String,
    pub target_id: String,
    pub pose: RelativePose,
    pub label: Label,
    pub weight: f64,
    pub activation_path: String,
    pub anchor_id: Option<String>,
}

impl TripletRecord {
    /// Target id of the ground-truth record this sample belongs to.
    pub fn anchor_key(&self) -> &str {
        self.anchor_id.as_deref().unwrap_or(&self.target_id)
    }

    /// Object identifier: the part of `source_id` before the first `/`.
    pub fn object_id(&self) -> &str {
        self.source_id.split('/').next().unwrap_or(&self.source_id)
    }

    fn to_line(&self) -> String {
        let mut s = format!(
            "source={} target={} label={} d_az={} d_el={} d_r={} weight={} path={}",
            self.source_id,
            self.target_id,
            self.label,
            self.pose.d_azimuth_deg,
            self.pose.d_elevation_deg,
            self.pose.d_radius,
            self.weight,
            self.activation_path
        );
        if let Some(a) = &self.anchor_id {
            let _ = write!(s, " anchor={a}");
        }
        s
    }
}

/// One ground-truth record with its positives and negatives (record indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorGroup {
    pub anchor: usize,
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub records: Vec<TripletRecord>,
    pub split: Split,
    pub dataset: String,
}

impl Manifest {
    pub fn new(records: Vec<TripletRecord>, split: Split, dataset: impl Into<String>) -> Result<Self> {
        let m = Manifest {
            records,
            split,
            dataset: dataset.into(),
        };
        m.check_unique()?;
        for r in &m.records {
            check_weight(r.weight).map_err(Error::Data)?;
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn check_unique(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, r) in self.records.iter().enumerate() {
            if !seen.insert((r.source_id.as_str(), r.target_id.as_str(), r.label)) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("duplicate record ({}, {}, {})", r.source_id, r.target_id, r.label),
                });
            }
        }
        Ok(())
    }

    /// Groups records around their ground-truth anchors, in first-seen order.
    ///
    /// Records whose anchor has no ground-truth entry are ignored.
    pub fn anchor_groups(&self) -> Vec<AnchorGroup> {
        let mut index: HashMap<(&str, &str), usize> = HashMap::new();
        let mut groups = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            if r.label == Label::GroundTruth {
                index
                    .entry((r.source_id.as_str(), r.target_id.as_str()))
                    .or_insert_with(|| {
                        groups.push(AnchorGroup {
                            anchor: i,
                            positives: Vec::new(),
                            negatives: Vec::new(),
                        });
                        groups.len() - 1
                    });
            }
        }
        for (i, r) in self.records.iter().enumerate() {
            if r.label == Label::GroundTruth {
                continue;
            }
            if let Some(&g) = index.get(&(r.source_id.as_str(), r.anchor_key())) {
                if r.label == Label::Positive {
                    groups[g].positives.push(i);
                } else {
                    groups[g].negatives.push(i);
                }
            }
        }
        groups
    }

    pub fn object_ids(&self) -> Vec<String> {
        let set: std::collections::BTreeSet<&str> = self.records.iter().map(|r| r.object_id()).collect();
        set.into_iter().map(str::to_owned).collect()
    }

    /// Splits by object with a seeded shuffle: `train_objects` objects go to a
    /// train manifest, the rest to a test manifest.
    pub fn split_by_object(&self, train_objects: usize, seed: u64) -> Result<(Manifest, Manifest)> {
        let mut objects = self.object_ids();
        if train_objects > objects.len() {
            return Err(Error::Data(format!(
                "asked for {train_objects} train objects, manifest has {}",
                objects.len()
            )));
        }
        objects.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let train: HashSet<&str> = objects[..train_objects].iter().map(String::as_str).collect();
        let (a, b): (Vec<_>, Vec<_>) = self
            .records
            .iter()
            .cloned()
            .partition(|r| train.contains(r.object_id()));
        Ok((
            Manifest {
                records: a,
                split: Split::Train,
                dataset: self.dataset.clone(),
            },
            Manifest {
                records: b,
                split: Split::Test,
                dataset: self.dataset.clone(),
            },
        ))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("split={}\n", self.split.as_str());
        if !self.dataset.is_empty() {
            let _ = writeln!(s, "dataset={}", self.dataset);
        }
        for r in &self.records {
            s.push_str(&r.to_line());
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn check_weight(w: f64) -> std::result::Result<(), String> {
    if (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(format!("weight {w} outside [0, 1]"))
    }
}

pub fn parse_manifest(text: &str) -> Result<Manifest> {
    let mut m = Manifest::default();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let mut kv = BTreeMap::new();
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {tok:?}")))?;
            if kv.insert(k, v).is_some() {
                return Err(err(format!("key {k:?} repeated")));
            }
        }
        if kv.len() == 1 {
            if let Some(v) = kv.get("split") {
                m.split = v.parse().map_err(err)?;
                continue;
            }
            if let Some(v) = kv.get("dataset") {
                m.dataset = (*v).to_owned();
                continue;
            }
        }
        let record = parse_record(&mut kv).map_err(err)?;
        if !seen.insert((record.source_id.clone(), record.target_id.clone(), record.label)) {
            return Err(Error::Parse {
                line: line_no,
                msg: format!(
                    "duplicate record ({}, {}, {})",
                    record.source_id, record.target_id, record.label
                ),
            });
        }
        m.records.push(record);
    }
    Ok(m)
}

fn parse_record(kv: &mut BTreeMap<&str, &str>) -> std::result::Result<TripletRecord, String> {
    let mut take = |k: &str| kv.remove(k);
    let required = |v: Option<&str>, k: &str| v.map(str::to_owned).ok_or(format!("missing key {k:?}"));
    let float = |v: Option<&str>, k: &str, default: f64| -> std::result::Result<f64, String> {
        match v {
            None => Ok(default),
            Some(s) => s
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or(format!("bad number for {k}: {s:?}")),
        }
    };
    let source_id = required(take("source"), "source")?;
    let target_id = required(take("target"), "target")?;
    let label: Label = required(take("label"), "label")?.parse()?;
    let activation_path = required(take("path"), "path")?;
    let d_az = float(take("d_az"), "d_az", 0.0)?;
    let d_el = float(take("d_el"), "d_el", 0.0)?;
    let d_r = float(take("d_r"), "d_r", 0.0)?;
    let weight = float(take("weight"), "weight", 1.0)?;
    check_weight(weight)?;
    let anchor_id = take("anchor").map(str::to_owned);
    if let Some(k) = kv.keys().next() {
        return Err(format!("unknown key {k:?}"));
    }
    Ok(TripletRecord {
        source_id,
        target_id,
        pose: RelativePose::new(d_az, d_el, d_r),
        label,
        weight,
        activation_path,
        anchor_id,
    })
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    MissingFile {
        record: usize,
        path: PathBuf,
    },
    Unreadable {
        record: usize,
        path: PathBuf,
        reason: String,
    },
    /// Feature dimension (sum of channels, or D) differs from the reference.
    DimensionMismatch {
        record: usize,
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    /// Same total dimension but different per-block shapes.
    ShapeMismatch {
        record: usize,
        path: PathBuf,
    },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::MissingFile { record, path } => {
                write!(f, "record {record}: missing file {}", path.display())
            }
            Issue::Unreadable { record, path, reason } => {
                write!(f, "record {record}: unreadable {}: {reason}", path.display())
            }
            Issue::DimensionMismatch {
                record,
                path,
                expected,
                found,
            } => write!(
                f,
                "record {record}: dimension mismatch in {}: expected {expected}, found {found}",
                path.display()
            ),
            Issue::ShapeMismatch { record, path } => write!(
                f,
                "record {record}: block shapes in {} differ from the first record",
                path.display()
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
    pub weights: BTreeMap<Label, WeightStats>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for issue in &self.issues {
            writeln!(f, "issue: {issue}")?;
        }
        for (label, s) in &self.weights {
            writeln!(
                f,
                "weights {label}: count={} min={} max={} mean={:.6}",
                s.count, s.min, s.max, s.mean
            )?;
        }
        write!(f, "issues={}", self.issues.len())
    }
}

#[derive(PartialEq)]
enum Layout {
    Blocks(Vec<(usize, usize, usize)>),
    Flat(usize),
}

impl Layout {
    fn dim(&self) -> usize {
        match self {
            Layout::Blocks(s) => s.iter().map(|b| b.2).sum(),
            Layout::Flat(d) => *d,
        }
    }
}

fn read_layout(path: &Path) -> Result<Layout> {
    match format::detect_kind(path)? {
        FileKind::Activations => Ok(Layout::Blocks(format::read_activation_shapes(path)?)),
        FileKind::Embeddings => Ok(Layout::Flat(format::read_embedding_shape(path)?.1)),
    }
}

/// Checks referenced files against the first readable record. Never fails;
/// all findings go into the report.
pub fn validate_manifest(m: &Manifest, root: impl AsRef<Path>) -> ValidationReport {
    let root = root.as_ref();
    let mut report = ValidationReport::default();
    let mut reference: Option<Layout> = None;
    for (i, r) in m.records.iter().enumerate() {
        let path = root.join(&r.activation_path);
        if !path.is_file() {
            report.issues.push(Issue::MissingFile { record: i, path });
            continue;
        }
        match read_layout(&path) {
            Err(e) => report.issues.push(Issue::Unreadable {
                record: i,
                path,
                reason: e.to_string(),
            }),
            Ok(layout) => match &reference {
                None => reference = Some(layout),
                Some(want) if want.dim() != layout.dim() => report.issues.push(Issue::DimensionMismatch {
                    record: i,
                    path,
                    expected: want.dim(),
                    found: layout.dim(),
                }),
                Some(want) if *want != layout => report.issues.push(Issue::ShapeMismatch { record: i, path }),
                Some(_) => {}
            },
        }
    }
    for r in &m.records {
        let s = report.weights.entry(r.label).or_insert(WeightStats {
            count: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            mean: 0.0,
        });
        s.count += 1;
        s.min = s.min.min(r.weight);
        s.max = s.max.max(r.weight);
        s.mean += (r.weight - s.mean) / s.count as f64;
    }
    report
}
