//! Flat binary model checkpoints.
//!
//! Byte layout (all integers little-endian):
//!
//! ```text
//! magic   8 bytes  "MIPPNET1"
//! u32     version (1)
//! u8      input kind: 0 = flat, 1 = image
//!         flat:  u32 n
//!         image: u32 c, u32 h, u32 w
//! u32     layer count
//! per layer:
//!   u8 kind: 0 dense | 1 conv2d | 2 maxpool2 | 3 flatten
//!   dense:  u8 act (0 relu, 1 identity), u32 out, u32 in,
//!           f32 w[out*in] row-major, f32 b[out]
//!   conv2d: u8 act, u32 out_ch, u32 in_ch, u32 kh, u32 kw,
//!           f32 w[out_ch*in_ch*kh*kw] row-major, f32 b[out_ch]
//! u32     mask count
//! per mask: u32 layer_index, u32 len, u8 keep[len]
//! ```

use super::masks::PruneMask;
use super::toy::{Layer, Shape, ToyModel};
use crate::error::{MippError, Result};
use crate::tensor::{Activation, Matrix};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"MIPPNET1";
const VERSION: u32 = 1;

pub fn save_model(model: &ToyModel, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    match model.input_shape {
        Shape::Flat(n) => {
            w.write_all(&[0u8])?;
            w.write_all(&(n as u32).to_le_bytes())?;
        }
        Shape::Image { c, h, w: iw } => {
            w.write_all(&[1u8])?;
            for v in [c, h, iw] {
                w.write_all(&(v as u32).to_le_bytes())?;
            }
        }
    }
    w.write_all(&(model.layers.len() as u32).to_le_bytes())?;
    for layer in &model.layers {
        match layer {
            Layer::Dense { w: wm, b, act } => {
                w.write_all(&[0u8, act_code(*act)])?;
                w.write_all(&(wm.rows() as u32).to_le_bytes())?;
                w.write_all(&(wm.cols() as u32).to_le_bytes())?;
                write_f32s(&mut w, wm.data())?;
                write_f32s(&mut w, b)?;
            }
            Layer::Conv2d {
                w: wv,
                b,
                out_ch,
                in_ch,
                kh,
                kw,
                act,
            } => {
                w.write_all(&[1u8, act_code(*act)])?;
                for v in [*out_ch, *in_ch, *kh, *kw] {
                    w.write_all(&(v as u32).to_le_bytes())?;
                }
                write_f32s(&mut w, wv)?;
                write_f32s(&mut w, b)?;
            }
            Layer::MaxPool2 => w.write_all(&[2u8])?,
            Layer::Flatten => w.write_all(&[3u8])?,
        }
    }
    w.write_all(&(model.masks.len() as u32).to_le_bytes())?;
    for mask in &model.masks {
        w.write_all(&(mask.layer_index as u32).to_le_bytes())?;
        w.write_all(&(mask.keep.len() as u32).to_le_bytes())?;
        w.write_all(&mask.keep)?;
    }
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ToyModel> {
    let mut r = BufReader::new(File::open(path).map_err(|e| MippError::Ingestion {
        path: path.display().to_string(),
        source: e,
    })?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(MippError::Format {
            what: "model checkpoint",
            detail: format!("bad magic in {}", path.display()),
        });
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(MippError::Format {
            what: "model checkpoint",
            detail: format!("unsupported version {version}"),
        });
    }
    let input_shape = match read_u8(&mut r)? {
        0 => Shape::Flat(read_u32(&mut r)? as usize),
        1 => Shape::Image {
            c: read_u32(&mut r)? as usize,
            h: read_u32(&mut r)? as usize,
            w: read_u32(&mut r)? as usize,
        },
        k => {
            return Err(MippError::Format {
                what: "model checkpoint",
                detail: format!("unknown input kind {k}"),
            })
        }
    };
    let n_layers = read_u32(&mut r)? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        match read_u8(&mut r)? {
            0 => {
                let act = act_from_code(read_u8(&mut r)?)?;
                let out = read_u32(&mut r)? as usize;
                let inn = read_u32(&mut r)? as usize;
                let w = Matrix::from_vec(out, inn, read_f32s(&mut r, out * inn)?)?;
                let b = read_f32s(&mut r, out)?;
                layers.push(Layer::Dense { w, b, act });
            }
            1 => {
                let act = act_from_code(read_u8(&mut r)?)?;
                let out_ch = read_u32(&mut r)? as usize;
                let in_ch = read_u32(&mut r)? as usize;
                let kh = read_u32(&mut r)? as usize;
                let kw = read_u32(&mut r)? as usize;
                let w = read_f32s(&mut r, out_ch * in_ch * kh * kw)?;
                let b = read_f32s(&mut r, out_ch)?;
                layers.push(Layer::Conv2d {
                    w,
                    b,
                    out_ch,
                    in_ch,
                    kh,
                    kw,
                    act,
                });
            }
            2 => layers.push(Layer::MaxPool2),
            3 => layers.push(Layer::Flatten),
            k => {
                return Err(MippError::Format {
                    what: "model checkpoint",
                    detail: format!("unknown layer kind {k}"),
                })
            }
        }
    }
    let n_masks = read_u32(&mut r)? as usize;
    let mut masks = Vec::with_capacity(n_masks);
    for _ in 0..n_masks {
        let layer_index = read_u32(&mut r)? as usize;
        let len = read_u32(&mut r)? as usize;
        let mut keep = vec![0u8; len];
        r.read_exact(&mut keep)?;
        masks.push(PruneMask { layer_index, keep });
    }
    let mut model = ToyModel::new(layers, input_shape)?;
    model.masks = masks;
    Ok(model)
}

fn act_code(act: Activation) -> u8 {
    match act {
        Activation::Relu => 0,
        Activation::Identity => 1,
    }
}

fn act_from_code(code: u8) -> Result<Activation> {
    match code {
        0 => Ok(Activation::Relu),
        1 => Ok(Activation::Identity),
        _ => Err(MippError::Format {
            what: "model checkpoint",
            detail: format!("unknown activation code {code}"),
        }),
    }
}

fn write_f32s(w: &mut impl Write, values: &[f32]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f32s(r: &mut impl Read, n: usize) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; n * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u8(r: &mut impl Read) -> Result<u8> {
    let mut buf = [0u8; 1];
    r.read_exact(&mut buf)?;
    Ok(buf[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::masks::{apply_masks, PruneMask};
    use crate::models::zoo;

    #[test]
    fn checkpoint_round_trip_preserves_weights_and_masks() {
        let dir = std::env::temp_dir().join("mipp_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.bin");

        let model = zoo::conv_mnist(3);
        let mask = PruneMask {
            layer_index: 0,
            keep: vec![1, 0, 1, 1, 0, 1, 1, 1],
        };
        let masked = apply_masks(&model, &[mask]).unwrap();
        save_model(&masked, &path).unwrap();
        let loaded = load_model(&path).unwrap();

        assert_eq!(loaded.masks, masked.masks);
        assert_eq!(loaded.input_shape, masked.input_shape);
        for (a, b) in masked.layers.iter().zip(&loaded.layers) {
            match (a, b) {
                (Layer::Dense { w: wa, b: ba, .. }, Layer::Dense { w: wb, b: bb, .. }) => {
                    assert_eq!(wa.data(), wb.data());
                    assert_eq!(ba, bb);
                }
                (Layer::Conv2d { w: wa, b: ba, .. }, Layer::Conv2d { w: wb, b: bb, .. }) => {
                    assert_eq!(wa, wb);
                    assert_eq!(ba, bb);
                }
                (Layer::MaxPool2, Layer::MaxPool2) | (Layer::Flatten, Layer::Flatten) => {}
                _ => panic!("layer kind mismatch"),
            }
        }
    }
}
