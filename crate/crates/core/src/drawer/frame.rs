use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DepthImage, Detection2D, DetectionFrame, DrawerError};
use crate::geometry::{CameraIntrinsics, Pose};

/// On-disk frame description. The depth buffer lives next to it as raw
/// little-endian `f32`, row-major, `width × height` values.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub intrinsics: CameraIntrinsics,
    /// world←camera, 4×4 row-major
    pub cam_pose: Vec<f64>,
    /// Relative paths resolve against the directory holding the JSON file.
    pub depth_file: String,
    pub detections: Vec<Detection2D>,
}

fn parse_err(path: &Path, message: impl ToString) -> DrawerError {
    DrawerError::Parse {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

pub fn read_depth_file(path: &Path, width: u32, height: u32) -> Result<DepthImage, DrawerError> {
    let bytes = std::fs::read(path).map_err(|e| parse_err(path, e))?;
    let expected = width as usize * height as usize * 4;
    if bytes.len() != expected {
        return Err(DrawerError::DepthSize {
            path: path.display().to_string(),
            expected,
            found: bytes.len(),
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(DepthImage::new(width, height, data))
}

pub fn read_detection_frame(path: &Path) -> Result<DetectionFrame, DrawerError> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(path, e))?;
    let record: FrameRecord = serde_json::from_str(&text).map_err(|e| parse_err(path, e))?;
    record
        .intrinsics
        .validate()
        .map_err(|e| parse_err(path, e))?;
    let cam_pose =
        Pose::from_homogeneous_row_major(&record.cam_pose).map_err(|e| parse_err(path, e))?;
    let depth_path = {
        let p = PathBuf::from(&record.depth_file);
        if p.is_absolute() {
            p
        } else {
            path.parent().unwrap_or(Path::new(".")).join(p)
        }
    };
    let depth = read_depth_file(&depth_path, record.intrinsics.width, record.intrinsics.height)?;
    Ok(DetectionFrame {
        intrinsics: record.intrinsics,
        cam_pose,
        detections: record.detections,
        depth,
    })
}

/// Writes `frame` as JSON at `path` plus its depth buffer at
/// `depth_file_name`, relative to the JSON's directory.
pub fn write_detection_frame(
    path: &Path,
    frame: &DetectionFrame,
    depth_file_name: &str,
) -> Result<(), DrawerError> {
    let record = FrameRecord {
        intrinsics: frame.intrinsics,
        cam_pose: frame.cam_pose.to_homogeneous_row_major().to_vec(),
        depth_file: depth_file_name.to_string(),
        detections: frame.detections.clone(),
    };
    let json = serde_json::to_string_pretty(&record).map_err(|e| parse_err(path, e))?;
    std::fs::write(path, json).map_err(|e| parse_err(path, e))?;
    let depth_path = path.parent().unwrap_or(Path::new(".")).join(depth_file_name);
    let bytes: Vec<u8> = frame.depth.data.iter().flat_map(|d| d.to_le_bytes()).collect();
    std::fs::write(&depth_path, bytes).map_err(|e| parse_err(&depth_path, e))?;
    Ok(())
}
