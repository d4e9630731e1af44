//! Artifact formats: the mask JSON file and the binary activation dump.
//!
//! Activation dump layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "MIPPACT1"
//! u32      record count
//! per record:
//!   u32    layer index (0xFFFFFFFF marks the raw-input record)
//!   u32    samples
//!   u32    ndims, then u32 dims[ndims]
//!          dense: [units]; conv: [filters, h, w]
//!   f32    payload, samples x prod(dims), row-major
//! ```
//!
//! Records appear input record first, then parameterized layers in network
//! order; the final record is the output layer. External frameworks can
//! produce this dump, run the sweep, and read back `masks.json`.

use super::sweep::MippReport;
use crate::error::{MippError, Result};
use crate::models::{ActivationCapture, CapturedLayer, CollapseReport, LayerActs, PruneMask};
use crate::tensor::Matrix;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const ACT_MAGIC: &[u8; 8] = b"MIPPACT1";
const INPUT_RECORD: u32 = u32::MAX;

/// Serialized pruning outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaskFile {
    pub model_id: String,
    /// Echo of the configuration that produced the masks.
    pub config: serde_json::Value,
    pub masks: Vec<PruneMask>,
    pub per_layer_pr: Vec<f64>,
    pub global_pr: f64,
    pub collapse: CollapseReport,
}

impl MaskFile {
    pub fn from_report(model_id: &str, config: serde_json::Value, report: &MippReport) -> Self {
        MaskFile {
            model_id: model_id.to_string(),
            config,
            masks: report.masks.clone(),
            per_layer_pr: report.per_layer_pr.clone(),
            global_pr: report.global_pr,
            collapse: report.collapse.clone(),
        }
    }
}

pub fn write_masks_json(file: &MaskFile, path: &Path) -> Result<()> {
    let out = File::create(path)?;
    serde_json::to_writer_pretty(BufWriter::new(out), file)?;
    Ok(())
}

pub fn read_masks_json(path: &Path) -> Result<MaskFile> {
    let f = File::open(path).map_err(|e| MippError::Ingestion {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

pub fn write_activation_dump(capture: &ActivationCapture, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(ACT_MAGIC)?;
    w.write_all(&(1 + capture.layers.len() as u32).to_le_bytes())?;

    write_record(
        &mut w,
        INPUT_RECORD,
        &capture.inputs,
        &[capture.inputs.cols() as u32],
    )?;
    for layer in &capture.layers {
        match &layer.acts {
            LayerActs::Dense(m) => {
                write_record(&mut w, layer.layer_index as u32, m, &[m.cols() as u32])?;
            }
            LayerActs::Conv {
                data,
                filters,
                h,
                w: fw,
            } => {
                write_record(
                    &mut w,
                    layer.layer_index as u32,
                    data,
                    &[*filters as u32, *h as u32, *fw as u32],
                )?;
            }
        }
    }
    Ok(())
}

fn write_record(w: &mut impl Write, index: u32, data: &Matrix, dims: &[u32]) -> Result<()> {
    w.write_all(&index.to_le_bytes())?;
    w.write_all(&(data.rows() as u32).to_le_bytes())?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        w.write_all(&d.to_le_bytes())?;
    }
    for v in data.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_activation_dump(path: &Path) -> Result<ActivationCapture> {
    let mut r = BufReader::new(File::open(path).map_err(|e| MippError::Ingestion {
        path: path.display().to_string(),
        source: e,
    })?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != ACT_MAGIC {
        return Err(MippError::Format {
            what: "activation dump",
            detail: format!("bad magic in {}", path.display()),
        });
    }
    let count = read_u32(&mut r)? as usize;
    if count < 3 {
        return Err(MippError::Format {
            what: "activation dump",
            detail: format!("need inputs plus at least two layers, got {count} records"),
        });
    }
    let mut inputs: Option<Matrix> = None;
    let mut layers = Vec::new();
    let mut samples: Option<usize> = None;
    for _ in 0..count {
        let index = read_u32(&mut r)?;
        let rows = read_u32(&mut r)? as usize;
        if *samples.get_or_insert(rows) != rows {
            return Err(MippError::Format {
                what: "activation dump",
                detail: "records disagree on sample count".into(),
            });
        }
        let ndims = read_u32(&mut r)? as usize;
        let mut dims = Vec::with_capacity(ndims);
        for _ in 0..ndims {
            dims.push(read_u32(&mut r)? as usize);
        }
        let cols: usize = dims.iter().product();
        let data = read_matrix(&mut r, rows, cols)?;
        if index == INPUT_RECORD {
            inputs = Some(data);
            continue;
        }
        let acts = match dims.len() {
            1 => LayerActs::Dense(data),
            3 => LayerActs::Conv {
                data,
                filters: dims[0],
                h: dims[1],
                w: dims[2],
            },
            n => {
                return Err(MippError::Format {
                    what: "activation dump",
                    detail: format!("unsupported record rank {n}"),
                })
            }
        };
        layers.push(CapturedLayer {
            layer_index: index as usize,
            acts,
        });
    }
    let inputs = inputs.ok_or(MippError::Format {
        what: "activation dump",
        detail: "missing input record".into(),
    })?;
    Ok(ActivationCapture {
        sample_count: inputs.rows(),
        inputs,
        layers,
    })
}

fn read_matrix(r: &mut impl Read, rows: usize, cols: usize) -> Result<Matrix> {
    let mut bytes = vec![0u8; rows * cols * 4];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{capture_activations, zoo};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn activation_dump_round_trip() {
        let dir = std::env::temp_dir().join("mipp_act_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("acts.bin");

        let model = zoo::conv_mnist(1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let inputs = Matrix::from_vec(
            4,
            784,
            (0..4 * 784).map(|_| rng.gen_range(0.0..1.0)).collect(),
        )
        .unwrap();
        let cap = capture_activations(&model, &inputs, 4).unwrap();
        write_activation_dump(&cap, &path).unwrap();
        let back = read_activation_dump(&path).unwrap();

        assert_eq!(back.sample_count, 4);
        assert_eq!(back.inputs.data(), cap.inputs.data());
        assert_eq!(back.layers.len(), cap.layers.len());
        match (&back.layers[0].acts, &cap.layers[0].acts) {
            (
                LayerActs::Conv { data: a, filters: fa, .. },
                LayerActs::Conv { data: b, filters: fb, .. },
            ) => {
                assert_eq!(fa, fb);
                assert_eq!(a.data(), b.data());
            }
            _ => panic!("expected conv record"),
        }
    }

    #[test]
    fn masks_json_round_trip() {
        let dir = std::env::temp_dir().join("mipp_mask_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("masks.json");

        let file = MaskFile {
            model_id: "dense-digits".into(),
            config: serde_json::json!({"confidence": 0.9}),
            masks: vec![PruneMask {
                layer_index: 0,
                keep: vec![1, 0, 1],
            }],
            per_layer_pr: vec![1.0 / 3.0],
            global_pr: 1.0 / 3.0,
            collapse: CollapseReport {
                collapsed: false,
                layers: vec![],
            },
        };
        write_masks_json(&file, &path).unwrap();
        let back = read_masks_json(&path).unwrap();
        assert_eq!(back.masks, file.masks);
        assert_eq!(back.model_id, file.model_id);
    }
}
