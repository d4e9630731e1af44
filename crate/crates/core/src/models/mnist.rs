//! Reader for IDX-format image/label files (big-endian header).
//!
//! Layout: magic `u32` (0x803 for 3-d ubyte images, 0x801 for 1-d ubyte
//! labels), then one big-endian `u32` per dimension, then the raw bytes.
//! Pixel values are scaled to `[0, 1]` by the recorded maximum (255 for
//! MNIST, 16 for the bundled 8x8 digits).

use crate::error::{MippError, Result};
use crate::tensor::Matrix;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

const IMAGE_MAGIC: u32 = 0x0000_0803;
const LABEL_MAGIC: u32 = 0x0000_0801;

/// Images as a samples x (h*w) matrix scaled to `[0, 1]`.
#[derive(Debug)]
pub struct IdxImages {
    pub data: Matrix,
    pub height: usize,
    pub width: usize,
}

pub fn read_idx_images(path: &Path) -> Result<IdxImages> {
    parse_idx_images(open(path)?).map_err(|e| with_path(e, path))
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<usize>> {
    parse_idx_labels(open(path)?).map_err(|e| with_path(e, path))
}

/// Parse IDX images from any byte source (embedded assets, files, ...).
pub fn parse_idx_images(mut reader: impl Read) -> Result<IdxImages> {
    let magic = read_u32_be(&mut reader)?;
    if magic != IMAGE_MAGIC {
        return Err(MippError::Format {
            what: "IDX image file",
            detail: format!("bad magic {magic:#x}"),
        });
    }
    let n = read_u32_be(&mut reader)? as usize;
    let h = read_u32_be(&mut reader)? as usize;
    let w = read_u32_be(&mut reader)? as usize;
    let mut bytes = vec![0u8; n * h * w];
    reader.read_exact(&mut bytes)?;
    let max = *bytes.iter().max().unwrap_or(&1) as f32;
    let scale = if max > 0.0 { 1.0 / max } else { 1.0 };
    let data = Matrix::from_vec(n, h * w, bytes.iter().map(|&b| b as f32 * scale).collect())?;
    Ok(IdxImages {
        data,
        height: h,
        width: w,
    })
}

/// Parse IDX labels from any byte source.
pub fn parse_idx_labels(mut reader: impl Read) -> Result<Vec<usize>> {
    let magic = read_u32_be(&mut reader)?;
    if magic != LABEL_MAGIC {
        return Err(MippError::Format {
            what: "IDX label file",
            detail: format!("bad magic {magic:#x}"),
        });
    }
    let n = read_u32_be(&mut reader)? as usize;
    let mut bytes = vec![0u8; n];
    reader.read_exact(&mut bytes)?;
    Ok(bytes.into_iter().map(|b| b as usize).collect())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| {
        MippError::Ingestion {
            path: path.display().to_string(),
            source: e,
        }
    })?))
}

fn read_u32_be(reader: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader.read_exact(&mut buf)?;
    Ok(u32::from_be_bytes(buf))
}

fn with_path(err: MippError, path: &Path) -> MippError {
    match err {
        MippError::Io(source) => MippError::Ingestion {
            path: path.display().to_string(),
            source,
        },
        MippError::Format { what, detail } => MippError::Format {
            what,
            detail: format!("{detail} in {}", path.display()),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_idx_images(path: &Path, images: &[[u8; 4]]) {
        let mut f = File::create(path).unwrap();
        f.write_all(&IMAGE_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&(images.len() as u32).to_be_bytes()).unwrap();
        f.write_all(&2u32.to_be_bytes()).unwrap();
        f.write_all(&2u32.to_be_bytes()).unwrap();
        for img in images {
            f.write_all(img).unwrap();
        }
    }

    #[test]
    fn round_trip_small_idx() {
        let dir = std::env::temp_dir().join("mipp_idx_test");
        std::fs::create_dir_all(&dir).unwrap();
        let img_path = dir.join("imgs");
        write_idx_images(&img_path, &[[0, 128, 255, 64], [1, 2, 3, 4]]);
        let images = read_idx_images(&img_path).unwrap();
        assert_eq!(images.data.rows(), 2);
        assert_eq!(images.height, 2);
        assert_eq!(images.data.get(0, 2), 1.0);

        let lbl_path = dir.join("lbls");
        let mut f = File::create(&lbl_path).unwrap();
        f.write_all(&LABEL_MAGIC.to_be_bytes()).unwrap();
        f.write_all(&3u32.to_be_bytes()).unwrap();
        f.write_all(&[7u8, 0, 9]).unwrap();
        drop(f);
        assert_eq!(read_idx_labels(&lbl_path).unwrap(), vec![7, 0, 9]);
    }

    #[test]
    fn wrong_magic_is_a_format_error() {
        let dir = std::env::temp_dir().join("mipp_idx_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad");
        std::fs::write(&path, 42u32.to_be_bytes()).unwrap();
        assert!(matches!(
            read_idx_images(&path),
            Err(MippError::Format { .. })
        ));
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_idx_images(Path::new("/nonexistent/mipp")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/mipp"));
    }
}
