//! Model serialization.
//!
//! A weights file is a structured text header followed by a raw blob of
//! little-endian f32 values: every parameter and batch-norm running statistic
//! in declaration order. Normalization statistics live in the header as f32
//! bit patterns so the file round-trips byte-identically.

use crate::arch;
use crate::dct::CompressionSpec;
use crate::error::{Error, Result};
use crate::model::{instantiate, Model};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &str = "FUNW v1";

fn hex_f32_line(values: &[f32]) -> String {
    let mut s = String::with_capacity(values.len() * 9);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&format!("{:08x}", v.to_bits()));
    }
    s
}

fn parse_hex_f32_line(line: &str, origin: &Path) -> Result<Vec<f32>> {
    line.split_whitespace()
        .map(|tok| {
            u32::from_str_radix(tok, 16)
                .map(f32::from_bits)
                .map_err(|_| Error::parse(origin, format!("bad f32 bits {tok:?}")))
        })
        .collect()
}

pub fn save(model: &Model<f32>, path: &Path) -> Result<()> {
    let mut m = model.clone();
    let mut blob: Vec<u8> = Vec::new();
    let mut values = 0usize;
    m.visit_state(|t| {
        values += t.len();
        for &v in t.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    });

    let mut header = String::new();
    header.push_str(MAGIC);
    header.push('\n');
    header.push_str(&format!("seed {}\n", model.seed));
    header.push_str(&format!(
        "keep {} {} {}\n",
        model.keep.keep_y, model.keep.keep_cb, model.keep.keep_cr
    ));
    let front_kind = match &model.front {
        None => "none",
        Some(f) if f.shared() => "shared",
        Some(_) => "per-plane",
    };
    header.push_str(&format!("front {front_kind}\n"));
    header.push_str(&format!("norm-mean {}\n", hex_f32_line(&model.norm.mean)));
    header.push_str(&format!("norm-std {}\n", hex_f32_line(&model.norm.std)));
    header.push_str("arch-begin\n");
    header.push_str(&arch::to_text(&model.spec));
    header.push_str("arch-end\n");
    header.push_str(&format!("values {values}\n"));
    header.push_str("blob\n");

    let mut f =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    f.write_all(header.as_bytes())
        .and_then(|_| f.write_all(&blob))
        .map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Model<f32>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let blob_tag = b"\nblob\n";
    let blob_at = bytes
        .windows(blob_tag.len())
        .position(|w| w == blob_tag)
        .ok_or_else(|| Error::parse(path, "missing blob marker"))?;
    let header = std::str::from_utf8(&bytes[..blob_at])
        .map_err(|_| Error::parse(path, "header is not utf-8"))?;
    let blob = &bytes[blob_at + blob_tag.len()..];

    let mut lines = header.lines();
    if lines.next() != Some(MAGIC) {
        return Err(Error::parse(path, "bad magic"));
    }
    let mut seed = 0u64;
    let mut keep = CompressionSpec::FULL;
    let mut front = "none".to_string();
    let mut norm_mean = Vec::new();
    let mut norm_std = Vec::new();
    let mut arch_text = String::new();
    let mut values = 0usize;
    let mut in_arch = false;
    for line in lines {
        if in_arch {
            if line == "arch-end" {
                in_arch = false;
            } else {
                arch_text.push_str(line);
                arch_text.push('\n');
            }
            continue;
        }
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        match key {
            "arch-begin" => in_arch = true,
            "seed" => {
                seed = rest.parse().map_err(|_| Error::parse(path, "bad seed"))?;
            }
            "keep" => {
                let ks: Vec<usize> = rest
                    .split_whitespace()
                    .map(|v| v.parse().map_err(|_| Error::parse(path, "bad keep")))
                    .collect::<Result<_>>()?;
                if ks.len() != 3 {
                    return Err(Error::parse(path, "keep needs 3 fields"));
                }
                keep = CompressionSpec::new(ks[0], ks[1], ks[2])?;
            }
            "front" => front = rest.to_string(),
            "norm-mean" => norm_mean = parse_hex_f32_line(rest, path)?,
            "norm-std" => norm_std = parse_hex_f32_line(rest, path)?,
            "values" => {
                values = rest.parse().map_err(|_| Error::parse(path, "bad value count"))?;
            }
            _ => return Err(Error::parse(path, format!("unknown header line {line:?}"))),
        }
    }
    if blob.len() != values * 4 {
        return Err(Error::parse(
            path,
            format!("blob holds {} bytes, header declares {}", blob.len(), values * 4),
        ));
    }

    let spec = arch::from_text(&arch_text, path)?;
    let mut model = instantiate::<f32>(&spec, seed)?;
    match front.as_str() {
        "none" => {}
        "shared" => model.attach_front(false, seed),
        "per-plane" => model.attach_front(true, seed),
        other => return Err(Error::parse(path, format!("unknown front kind {other:?}"))),
    }
    model.keep = keep;
    if norm_mean.len() != spec.input.2 || norm_std.len() != spec.input.2 {
        return Err(Error::parse(path, "normalization statistics length mismatch"));
    }
    model.norm.mean = norm_mean;
    model.norm.std = norm_std;

    let mut offset = 0usize;
    let mut fill_err = None;
    model.visit_state(|t| {
        for v in t.data_mut() {
            if offset + 4 > blob.len() {
                fill_err = Some(());
                return;
            }
            *v = f32::from_le_bytes(blob[offset..offset + 4].try_into().unwrap());
            offset += 4;
        }
    });
    if fill_err.is_some() || offset != blob.len() {
        return Err(Error::parse(
            path,
            format!("blob length {} does not match model state {}", blob.len(), offset),
        ));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::by_name;

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = std::env::temp_dir().join("fun-weights-test");
        std::fs::create_dir_all(&dir).unwrap();
        let spec = by_name("micro").unwrap().with_classes(4);
        let mut model = instantiate::<f32>(&spec, 99).unwrap();
        model.norm.mean = (0..192).map(|i| i as f32 * 0.25).collect();
        model.norm.std = (0..192).map(|i| 1.0 + i as f32).collect();

        let p1 = dir.join("a.funw");
        let p2 = dir.join("b.funw");
        save(&model, &p1).unwrap();
        let loaded = load(&p1).unwrap();
        save(&loaded, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

        let mut a = Vec::new();
        model.clone().visit_state(|t| a.extend_from_slice(t.data()));
        let mut b = Vec::new();
        loaded.clone().visit_state(|t| b.extend_from_slice(t.data()));
        assert_eq!(a, b);
        assert_eq!(loaded.seed, 99);
    }

    #[test]
    fn front_flag_round_trips() {
        let dir = std::env::temp_dir().join("fun-weights-test");
        std::fs::create_dir_all(&dir).unwrap();
        let spec = by_name("micro").unwrap().with_classes(2);
        let mut model = instantiate::<f32>(&spec, 3).unwrap();
        model.attach_front(false, 7);
        model.front.as_mut().unwrap().init_dct_basis();
        let p = dir.join("front.funw");
        save(&model, &p).unwrap();
        let loaded = load(&p).unwrap();
        assert!(loaded.has_front());
        let w_orig = model.front.as_ref().unwrap().filters(0);
        let w_back = loaded.front.as_ref().unwrap().filters(0);
        assert_eq!(w_orig, w_back);
    }

    #[test]
    fn truncated_blob_is_rejected() {
        let dir = std::env::temp_dir().join("fun-weights-test");
        std::fs::create_dir_all(&dir).unwrap();
        let spec = by_name("micro").unwrap().with_classes(2);
        let model = instantiate::<f32>(&spec, 3).unwrap();
        let p = dir.join("trunc.funw");
        save(&model, &p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 8]).unwrap();
        assert!(load(&p).is_err());
    }
}
