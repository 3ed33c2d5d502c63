//! Dataset ingestion and partitioning: the IDX binary container (the
//! de-facto MNIST distribution format), IID and label-pair agent
//! partitions, and synthetic dataset generators.
//!
//! IDX files are big-endian: a 4-byte magic whose upper two bytes are
//! zero, whose third byte is the element type code (`0x08` = unsigned
//! byte, the only type supported here), and whose fourth byte is the
//! dimension count; then one 32-bit size per dimension; then the raw
//! payload, whose length must equal the product of the sizes exactly.
//! Only uncompressed files are handled — decompressing `.gz` downloads is
//! the operator's job.
//!
//! Loaded images are normalized to `[0, 1]` by dividing by 255 and a
//! constant bias feature (1.0) is appended to every row.

use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::core::RngStream;
use crate::objectives::{DatasetHandle, ObjectiveError, Split};

pub const IDX_UBYTE: u8 = 0x08;
/// Magic of a label file (`0x00000801`).
pub const IDX_MAGIC_LABELS: u32 = 0x0000_0801;
/// Magic of an image file (`0x00000803`).
pub const IDX_MAGIC_IMAGES: u32 = 0x0000_0803;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("input too short: need at least 4 header bytes, got {0}")]
    TooShort(usize),
    #[error("bad magic: upper bytes of {found:#010x} are not zero")]
    BadMagic { found: u32 },
    #[error("unsupported element type code {code:#04x} (only 0x08 unsigned byte)")]
    UnsupportedElementType { code: u8 },
    #[error("truncated payload: expected {expected} bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("trailing bytes: expected {expected} payload bytes, got {got}")]
    TrailingBytes { expected: usize, got: usize },
    #[error("images and labels disagree: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("label pairs overlap or repeat a label: {0:?}")]
    OverlappingPairs(Vec<(u8, u8)>),
    #[error("insufficient samples{}: need {needed}, have {available}",
            label.map(|l| format!(" of label {l}")).unwrap_or_default())]
    Insufficient {
        label: Option<u8>,
        needed: usize,
        available: usize,
    },
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// A validated IDX container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxFile {
    pub type_code: u8,
    pub dims: Vec<u32>,
    pub payload: Vec<u8>,
}

/// Parse and validate an IDX byte stream.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxFile, DataError> {
    if bytes.len() < 4 {
        return Err(DataError::TooShort(bytes.len()));
    }
    let magic = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(DataError::BadMagic { found: magic });
    }
    let type_code = bytes[2];
    if type_code != IDX_UBYTE {
        return Err(DataError::UnsupportedElementType { code: type_code });
    }
    let ndims = bytes[3] as usize;
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(DataError::Truncated {
            expected: header,
            got: bytes.len(),
        });
    }
    let mut dims = Vec::with_capacity(ndims);
    for d in 0..ndims {
        let off = 4 + 4 * d;
        dims.push(u32::from_be_bytes([
            bytes[off],
            bytes[off + 1],
            bytes[off + 2],
            bytes[off + 3],
        ]));
    }
    let expected: usize = dims.iter().try_fold(1usize, |acc, d| {
        acc.checked_mul(*d as usize)
    }).ok_or(DataError::BadRequest("dimension product overflows".into()))?;
    let got = bytes.len() - header;
    if got < expected {
        return Err(DataError::Truncated { expected, got });
    }
    if got > expected {
        return Err(DataError::TrailingBytes { expected, got });
    }
    Ok(IdxFile {
        type_code,
        dims,
        payload: bytes[header..].to_vec(),
    })
}

impl IdxFile {
    /// Serialize back to the exact byte layout `parse_idx` accepts.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * self.dims.len() + self.payload.len());
        out.extend_from_slice(&[0, 0, self.type_code, self.dims.len() as u8]);
        for d in &self.dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn magic(&self) -> u32 {
        u32::from_be_bytes([0, 0, self.type_code, self.dims.len() as u8])
    }

    pub fn read_from(path: &Path) -> Result<Self, DataError> {
        parse_idx(&std::fs::read(path)?)
    }
}

/// A labeled pool of feature rows shared by every split carved from it.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Arc<Array2<f64>>,
    pub labels: Arc<Vec<u8>>,
    pub num_classes: usize,
}

impl Dataset {
    /// Build from an image + label IDX pair: pixels are scaled by 1/255
    /// and a bias column is appended.
    pub fn from_idx(images: &IdxFile, labels: &IdxFile, num_classes: usize) -> Result<Self, DataError> {
        if images.dims.len() != 3 {
            return Err(DataError::BadRequest(format!(
                "image file must have 3 dimensions, got {}",
                images.dims.len()
            )));
        }
        if labels.dims.len() != 1 {
            return Err(DataError::BadRequest(format!(
                "label file must have 1 dimension, got {}",
                labels.dims.len()
            )));
        }
        let n = images.dims[0] as usize;
        if labels.dims[0] as usize != n {
            return Err(DataError::CountMismatch {
                images: n,
                labels: labels.dims[0] as usize,
            });
        }
        let pixels = (images.dims[1] * images.dims[2]) as usize;
        let mut feats = Array2::zeros((n, pixels + 1));
        for i in 0..n {
            let row = &images.payload[i * pixels..(i + 1) * pixels];
            for (j, &b) in row.iter().enumerate() {
                feats[[i, j]] = b as f64 / 255.0;
            }
            feats[[i, pixels]] = 1.0;
        }
        Ok(Self {
            features: Arc::new(feats),
            labels: Arc::new(labels.payload.clone()),
            num_classes,
        })
    }

    pub fn from_parts(features: Array2<f64>, labels: Vec<u8>, num_classes: usize) -> Self {
        Self {
            features: Arc::new(features),
            labels: Arc::new(labels),
            num_classes,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Handle over the whole pool.
    pub fn full_handle(&self, split: Split) -> Result<DatasetHandle, DataError> {
        self.handle((0..self.len() as u32).collect(), split)
    }

    /// Handle over an index subset of the pool.
    pub fn handle(&self, indices: Vec<u32>, split: Split) -> Result<DatasetHandle, DataError> {
        Ok(DatasetHandle::with_indices(
            Arc::clone(&self.features),
            Arc::clone(&self.labels),
            indices,
            self.num_classes,
            split,
        )?)
    }
}

/// The conventional MNIST file names under one directory.
pub const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

/// Load the four-file MNIST layout from a directory into a train pool
/// and a test set.
pub fn load_mnist_dir(dir: &Path) -> Result<(Dataset, Dataset), DataError> {
    let train_images = IdxFile::read_from(&dir.join(MNIST_FILES[0]))?;
    let train_labels = IdxFile::read_from(&dir.join(MNIST_FILES[1]))?;
    let test_images = IdxFile::read_from(&dir.join(MNIST_FILES[2]))?;
    let test_labels = IdxFile::read_from(&dir.join(MNIST_FILES[3]))?;
    Ok((
        Dataset::from_idx(&train_images, &train_labels, 10)?,
        Dataset::from_idx(&test_images, &test_labels, 10)?,
    ))
}

/// How samples were assigned to agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionScheme {
    Iid,
    LabelPairs(Vec<(u8, u8)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentAssignment {
    pub train: Vec<u32>,
    pub val: Vec<u32>,
}

/// Disjoint per-agent index assignments over a pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub scheme: PartitionScheme,
    pub agents: Vec<AgentAssignment>,
}

impl Partition {
    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    /// Check disjointness, bounds, and (for label pairs) purity against
    /// the pool's labels.
    pub fn validate(&self, pool_len: usize, labels: &[u8]) -> Result<(), DataError> {
        let mut seen = vec![false; pool_len];
        for (a, assign) in self.agents.iter().enumerate() {
            for &i in assign.train.iter().chain(&assign.val) {
                let i = i as usize;
                if i >= pool_len {
                    return Err(DataError::BadRequest(format!(
                        "agent {} references row {} beyond pool of {}",
                        a + 1,
                        i,
                        pool_len
                    )));
                }
                if seen[i] {
                    return Err(DataError::BadRequest(format!(
                        "row {i} assigned twice"
                    )));
                }
                seen[i] = true;
            }
        }
        if let PartitionScheme::LabelPairs(pairs) = &self.scheme {
            for (assign, (l1, l2)) in self.agents.iter().zip(pairs) {
                for &i in assign.train.iter().chain(&assign.val) {
                    let l = labels[i as usize];
                    if l != *l1 && l != *l2 {
                        return Err(DataError::BadRequest(format!(
                            "label {l} leaked into agent with pair ({l1}, {l2})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Uniform random disjoint assignment: each of `m_agents` receives
/// exactly `train_per_agent` training rows and `val_per_agent` validation
/// rows; leftover pool rows are discarded.
pub fn partition_iid(
    n: usize,
    m_agents: usize,
    train_per_agent: usize,
    val_per_agent: usize,
    stream: RngStream,
) -> Result<Partition, DataError> {
    if m_agents == 0 {
        return Err(DataError::BadRequest("need at least one agent".into()));
    }
    let per_agent = train_per_agent + val_per_agent;
    if per_agent == 0 {
        return Err(DataError::BadRequest(
            "per-agent sample count must be positive".into(),
        ));
    }
    let needed = m_agents * per_agent;
    if needed > n {
        return Err(DataError::Insufficient {
            label: None,
            needed,
            available: n,
        });
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    let mut rng = stream.rng();
    order.shuffle(&mut rng);
    let agents = (0..m_agents)
        .map(|a| {
            let base = a * per_agent;
            AgentAssignment {
                train: order[base..base + train_per_agent].to_vec(),
                val: order[base + train_per_agent..base + per_agent].to_vec(),
            }
        })
        .collect();
    Ok(Partition {
        scheme: PartitionScheme::Iid,
        agents,
    })
}

/// Assign each agent samples drawn only from its two labels (balanced
/// between the two), with pairs strictly non-overlapping across agents.
pub fn partition_label_pairs(
    labels: &[u8],
    pairs: &[(u8, u8)],
    train_per_agent: usize,
    val_per_agent: usize,
    stream: RngStream,
) -> Result<Partition, DataError> {
    if pairs.is_empty() {
        return Err(DataError::BadRequest("need at least one pair".into()));
    }
    let mut used = std::collections::BTreeSet::new();
    for (l1, l2) in pairs {
        if l1 == l2 || !used.insert(*l1) || !used.insert(*l2) {
            return Err(DataError::OverlappingPairs(pairs.to_vec()));
        }
    }
    // per-label index pools, shuffled once
    let mut by_label: std::collections::BTreeMap<u8, Vec<u32>> = std::collections::BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_label.entry(*l).or_default().push(i as u32);
    }
    let mut rng = stream.rng();
    for pool in by_label.values_mut() {
        pool.shuffle(&mut rng);
    }
    let mut cursor: std::collections::BTreeMap<u8, usize> = std::collections::BTreeMap::new();
    let mut take = |label: u8, count: usize| -> Result<Vec<u32>, DataError> {
        let pool = by_label.get(&label).map(|p| p.as_slice()).unwrap_or(&[]);
        let at = cursor.entry(label).or_insert(0);
        if *at + count > pool.len() {
            return Err(DataError::Insufficient {
                label: Some(label),
                needed: count,
                available: pool.len().saturating_sub(*at),
            });
        }
        let out = pool[*at..*at + count].to_vec();
        *at += count;
        Ok(out)
    };
    let mut agents = Vec::with_capacity(pairs.len());
    for (l1, l2) in pairs {
        let t1 = train_per_agent - train_per_agent / 2;
        let t2 = train_per_agent / 2;
        let v1 = val_per_agent - val_per_agent / 2;
        let v2 = val_per_agent / 2;
        let mut train = take(*l1, t1)?;
        train.extend(take(*l2, t2)?);
        let mut val = take(*l1, v1)?;
        val.extend(take(*l2, v2)?);
        agents.push(AgentAssignment { train, val });
    }
    Ok(Partition {
        scheme: PartitionScheme::LabelPairs(pairs.to_vec()),
        agents,
    })
}

/// The label-pair mapping used by the heterogeneous experiment:
/// agent 1 → (2, 8), 2 → (4, 9), 3 → (1, 6), 4 → (3, 7), 5 → (0, 5).
pub const NON_IID_PAIRS: [(u8, u8); 5] = [(2, 8), (4, 9), (1, 6), (3, 7), (0, 5)];

/// Per-agent Gaussian class blobs with a heterogeneity knob.
///
/// All agents share ten class centers; agent `i`'s samples are shifted by
/// `separation` along a fixed per-agent direction, so `separation = 0`
/// makes the agents statistically identical and large values drive their
/// local optima apart. A bias column is appended.
pub fn synth_blobs(
    m_agents: usize,
    d: usize,
    separation: f64,
    n_per_agent: usize,
    stream: RngStream,
) -> Result<Vec<DatasetHandle>, DataError> {
    const CLASSES: usize = 10;
    if m_agents == 0 || d == 0 {
        return Err(DataError::BadRequest(
            "need at least one agent and one feature dimension".into(),
        ));
    }
    if n_per_agent == 0 {
        return Err(DataError::BadRequest(
            "n_per_agent must be positive".into(),
        ));
    }
    if !(separation >= 0.0) || !separation.is_finite() {
        return Err(DataError::BadRequest("separation must be >= 0".into()));
    }
    let mut rng = stream.rng();
    let centers: Vec<Vec<f64>> = (0..CLASSES)
        .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let shifts: Vec<Vec<f64>> = (0..m_agents)
        .map(|_| {
            let raw: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            raw.into_iter().map(|v| v / norm * separation).collect()
        })
        .collect();
    let mut handles = Vec::with_capacity(m_agents);
    for shift in &shifts {
        let mut feats = Array2::zeros((n_per_agent, d + 1));
        let mut labels = Vec::with_capacity(n_per_agent);
        for i in 0..n_per_agent {
            let y = rng.random_range(0..CLASSES as u8);
            for j in 0..d {
                feats[[i, j]] = centers[y as usize][j]
                    + shift[j]
                    + rng.sample::<f64, _>(StandardNormal);
            }
            feats[[i, d]] = 1.0;
            labels.push(y);
        }
        let pool = Dataset::from_parts(feats, labels, CLASSES);
        handles.push(pool.full_handle(Split::Train)?);
    }
    Ok(handles)
}

/// Parameters of the synthetic digit-image generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DigitSynthParams {
    /// Probability that a glyph segment is dimmed.
    pub p_drop: f64,
    /// Dim factor range for dropped segments.
    pub drop_lo: f64,
    pub drop_hi: f64,
    /// Per-pixel additive Gaussian noise (before clipping to [0, 1]).
    pub sigma_pix: f64,
    /// Maximum absolute shift, pixels, each axis.
    pub max_shift: i32,
    /// Stroke intensity range.
    pub intensity_lo: f64,
    pub intensity_hi: f64,
}

impl Default for DigitSynthParams {
    fn default() -> Self {
        Self {
            p_drop: 0.08,
            drop_lo: 0.25,
            drop_hi: 0.6,
            sigma_pix: 0.10,
            max_shift: 2,
            intensity_lo: 0.7,
            intensity_hi: 1.0,
        }
    }
}

const GLYPH_SIDE: usize = 28;
/// Seven-segment boxes as (row0, row1, col0, col1), half-open.
const SEGMENTS: [(usize, usize, usize, usize); 7] = [
    (4, 7, 8, 20),   // a: top bar
    (12, 15, 8, 20), // g: middle bar
    (21, 24, 8, 20), // d: bottom bar
    (4, 14, 8, 11),  // f: upper left
    (4, 14, 17, 20), // b: upper right
    (14, 24, 8, 11), // e: lower left
    (14, 24, 17, 20),// c: lower right
];
/// Segment masks per digit, bit i = SEGMENTS[i] lit
/// (bit order: a, g, d, f, b, e, c).
const DIGIT_MASKS: [u8; 10] = [
    0b111_1101, // 0: a d f b e c
    0b101_0000, // 1: b c
    0b011_0111, // 2: a g d b e
    0b101_0111, // 3: a g d b c
    0b101_1010, // 4: f g b c
    0b100_1111, // 5: a g d f c
    0b110_1111, // 6: a g d f e c
    0b101_0001, // 7: a b c
    0b111_1111, // 8: all
    0b101_1111, // 9: a g d f b c
];

/// Render `n` perturbed digit images and labels directly as a valid IDX
/// pair (images, labels). Deterministic in the stream.
pub fn synth_digits_idx(
    n: usize,
    params: &DigitSynthParams,
    stream: RngStream,
) -> Result<(IdxFile, IdxFile), DataError> {
    if n == 0 {
        return Err(DataError::BadRequest("n must be positive".into()));
    }
    let side = GLYPH_SIDE;
    let mut rng = stream.rng();
    let mut images = Vec::with_capacity(n * side * side);
    let mut labels = Vec::with_capacity(n);
    let mut canvas = vec![0.0_f64; side * side];
    for _ in 0..n {
        let digit = rng.random_range(0..10u8);
        canvas.iter_mut().for_each(|p| *p = 0.0);
        let intensity = params.intensity_lo
            + (params.intensity_hi - params.intensity_lo) * rng.random::<f64>();
        let mask = DIGIT_MASKS[digit as usize];
        for (bit, (r0, r1, c0, c1)) in SEGMENTS.iter().enumerate() {
            if mask & (1 << bit) == 0 {
                continue;
            }
            let mut v = intensity;
            if rng.random::<f64>() < params.p_drop {
                v *= params.drop_lo + (params.drop_hi - params.drop_lo) * rng.random::<f64>();
            }
            for r in *r0..*r1 {
                for c in *c0..*c1 {
                    canvas[r * side + c] = v;
                }
            }
        }
        let dy = rng.random_range(-params.max_shift..=params.max_shift);
        let dx = rng.random_range(-params.max_shift..=params.max_shift);
        for r in 0..side as i32 {
            for c in 0..side as i32 {
                let (sr, sc) = (r - dy, c - dx);
                let base = if sr >= 0 && sr < side as i32 && sc >= 0 && sc < side as i32 {
                    canvas[sr as usize * side + sc as usize]
                } else {
                    0.0
                };
                let noisy = base + params.sigma_pix * rng.sample::<f64, _>(StandardNormal);
                let clipped = noisy.clamp(0.0, 1.0);
                images.push((clipped * 255.0).round() as u8);
            }
        }
        labels.push(digit);
    }
    let image_file = IdxFile {
        type_code: IDX_UBYTE,
        dims: vec![n as u32, side as u32, side as u32],
        payload: images,
    };
    let label_file = IdxFile {
        type_code: IDX_UBYTE,
        dims: vec![n as u32],
        payload: labels,
    };
    Ok((image_file, label_file))
}

/// Synthetic digit train pool + test set, produced through the IDX byte
/// path (the files are serialized and re-parsed, so the parser is on the
/// load path exactly as it is for real MNIST files).
pub fn synth_digits_dataset(
    n_train: usize,
    n_test: usize,
    params: &DigitSynthParams,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    use crate::core::StreamLane;
    let (tri, trl) = synth_digits_idx(
        n_train,
        params,
        RngStream::for_data(seed, 0, StreamLane::Synth),
    )?;
    let (tei, tel) = synth_digits_idx(
        n_test,
        params,
        RngStream::for_data(seed, 1, StreamLane::Synth),
    )?;
    let train = Dataset::from_idx(&parse_idx(&tri.to_bytes())?, &parse_idx(&trl.to_bytes())?, 10)?;
    let test = Dataset::from_idx(&parse_idx(&tei.to_bytes())?, &parse_idx(&tel.to_bytes())?, 10)?;
    Ok((train, test))
}
