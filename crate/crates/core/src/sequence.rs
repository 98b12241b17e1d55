//! On-disk frame sequences: a directory holding `index.json` plus one
//! 16-bit PGM per frame. Replaces live sensor acquisition.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{CameraConfig, DepthFrame};
use crate::netpbm;

pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameEntry {
    pub file: String,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceIndex {
    pub width: u32,
    pub height: u32,
    pub camera: CameraConfig,
    pub frames: Vec<FrameEntry>,
}

/// Iterator over the frames of a sequence directory, in timestamp order.
pub struct FrameSource {
    dir: PathBuf,
    index: SequenceIndex,
    next: usize,
}

impl FrameSource {
    pub fn camera(&self) -> &CameraConfig {
        &self.index.camera
    }

    pub fn width(&self) -> u32 {
        self.index.width
    }

    pub fn height(&self) -> u32 {
        self.index.height
    }

    pub fn len(&self) -> usize {
        self.index.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.frames.is_empty()
    }
}

impl Iterator for FrameSource {
    type Item = Result<DepthFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        let entry = self.index.frames.get(self.next)?;
        self.next += 1;
        let path = self.dir.join(&entry.file);
        let item = netpbm::read_pgm16(&path).and_then(|(w, h, data)| {
            if w != self.index.width || h != self.index.height {
                return Err(Error::format(format!(
                    "{}: frame is {}x{}, index declares {}x{}",
                    path.display(),
                    w,
                    h,
                    self.index.width,
                    self.index.height
                )));
            }
            DepthFrame::new(w, h, entry.timestamp_ms, data)
        });
        Some(item)
    }
}

/// Opens a sequence directory, validating the index and every frame header.
pub fn load_sequence(dir: &Path) -> Result<FrameSource> {
    let index_path = dir.join(INDEX_FILE);
    let text = std::fs::read_to_string(&index_path)
        .map_err(|e| Error::format(format!("missing index {}: {}", index_path.display(), e)))?;
    let index: SequenceIndex = serde_json::from_str(&text)
        .map_err(|e| Error::format(format!("{}: {}", index_path.display(), e)))?;
    if index.frames.is_empty() {
        return Err(Error::format(format!(
            "{}: sequence has no frames",
            index_path.display()
        )));
    }
    index.camera.validate(index.width, index.height)?;
    let mut last_ts = None;
    for entry in &index.frames {
        if let Some(prev) = last_ts {
            if entry.timestamp_ms <= prev {
                return Err(Error::format(format!(
                    "timestamps not strictly increasing at {}",
                    entry.file
                )));
            }
        }
        last_ts = Some(entry.timestamp_ms);
        let (w, h) = netpbm::read_pgm16_dims(&dir.join(&entry.file))?;
        if w != index.width || h != index.height {
            return Err(Error::format(format!(
                "{}: frame is {}x{}, index declares {}x{}",
                entry.file, w, h, index.width, index.height
            )));
        }
    }
    Ok(FrameSource {
        dir: dir.to_path_buf(),
        index,
        next: 0,
    })
}

/// Writes frames plus index so that `load_sequence` inverts it exactly.
pub fn save_sequence(frames: &[DepthFrame], camera: &CameraConfig, dir: &Path) -> Result<()> {
    let first = frames
        .first()
        .ok_or_else(|| Error::argument("cannot save an empty sequence"))?;
    camera.validate(first.width, first.height)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(frames.len());
    for (i, frame) in frames.iter().enumerate() {
        if frame.width != first.width || frame.height != first.height {
            return Err(Error::argument(format!(
                "frame {} is {}x{}, expected {}x{}",
                i, frame.width, frame.height, first.width, first.height
            )));
        }
        let file = format!("frame_{:06}.pgm", i);
        netpbm::write_pgm16(&dir.join(&file), frame.width, frame.height, &frame.data)?;
        entries.push(FrameEntry {
            file,
            timestamp_ms: frame.timestamp_ms,
        });
    }
    let index = SequenceIndex {
        width: first.width,
        height: first.height,
        camera: camera.clone(),
        frames: entries,
    };
    let json = serde_json::to_string_pretty(&index).expect("index serializes");
    std::fs::write(dir.join(INDEX_FILE), json).map_err(|e| Error::io(dir.join(INDEX_FILE), e))
}
