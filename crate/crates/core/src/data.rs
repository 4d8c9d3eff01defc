//! Image I/O and datasets.

use crate::dct::RgbImage;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

// --- binary PPM (P6) ---

pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut fields = Vec::new();
    // header: magic, width, height, maxval as whitespace-separated tokens,
    // '#' comments allowed
    while fields.len() < 4 {
        let mut tok = String::new();
        loop {
            let mut byte = [0u8; 1];
            r.read_exact(&mut byte).map_err(|e| Error::io(path, e))?;
            let ch = byte[0] as char;
            if ch == '#' {
                let mut line = String::new();
                r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
                continue;
            }
            if ch.is_ascii_whitespace() {
                if tok.is_empty() {
                    continue;
                }
                break;
            }
            tok.push(ch);
        }
        fields.push(tok);
    }
    if fields[0] != "P6" {
        return Err(Error::parse(path, format!("expected P6 magic, got {:?}", fields[0])));
    }
    let parse = |s: &str| {
        s.parse::<usize>().map_err(|_| Error::parse(path, format!("bad header field {s:?}")))
    };
    let (w, h, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval != 255 {
        return Err(Error::parse(path, format!("unsupported maxval {maxval}, want 255")));
    }
    let mut data = vec![0u8; w * h * 3];
    r.read_exact(&mut data).map_err(|e| Error::io(path, e))?;
    RgbImage::new(h, w, data)
}

pub fn write_ppm(img: &RgbImage, path: &Path) -> Result<()> {
    let mut f =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let hdr = format!("P6\n{} {}\n255\n", img.width(), img.height());
    f.write_all(hdr.as_bytes())
        .and_then(|_| f.write_all(img.data()))
        .map_err(|e| Error::io(path, e))
}

/// Load an image by extension: `.ppm` always, `.png` behind the `png` feature.
pub fn load_image(path: &Path) -> Result<RgbImage> {
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(ext) if ext == "ppm" => read_ppm(path),
        #[cfg(feature = "png")]
        Some(ext) if ext == "png" => {
            let img = image::open(path)
                .map_err(|e| Error::parse(path, format!("png decode: {e}")))?
                .to_rgb8();
            RgbImage::new(img.height() as usize, img.width() as usize, img.into_raw())
        }
        _ => Err(Error::parse(path, "unsupported image extension (use .ppm)")),
    }
}

pub fn is_image_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("ppm") | Some("png")
    )
}

// --- datasets ---

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone)]
pub struct DatasetItem {
    pub image: RgbImage,
    pub label: usize,
    /// Stable identifier: source path or synthetic index.
    pub id: String,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub items: Vec<DatasetItem>,
    pub num_classes: usize,
    pub class_names: Vec<String>,
    pub split: Split,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.label).collect()
    }

    /// Split off the first `train_n` items as the train portion.
    pub fn split_at(mut self, train_n: usize) -> Result<(Dataset, Dataset)> {
        if train_n == 0 || train_n >= self.items.len() {
            return Err(Error::Dataset(format!(
                "cannot split {} items at {train_n}",
                self.items.len()
            )));
        }
        let test_items = self.items.split_off(train_n);
        let test = Dataset {
            items: test_items,
            num_classes: self.num_classes,
            class_names: self.class_names.clone(),
            split: Split::Test,
        };
        self.split = Split::Train;
        Ok((self, test))
    }
}

/// Directory of class-named subdirectories containing images. Labels follow
/// sorted class-name order; items follow sorted path order.
pub fn load_folder_dataset(path: &Path) -> Result<Dataset> {
    let entries = std::fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut class_dirs: Vec<PathBuf> =
        entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(Error::Dataset(format!("no class directories under {}", path.display())));
    }
    let mut items = Vec::new();
    let mut class_names = Vec::new();
    for (label, dir) in class_dirs.iter().enumerate() {
        let name = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_image_path(p))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::Dataset(format!(
                "class directory {} has no images",
                dir.display()
            )));
        }
        for file in files {
            let image = load_image(&file)?;
            items.push(DatasetItem { image, label, id: file.display().to_string() });
        }
        class_names.push(name);
    }
    Ok(Dataset { items, num_classes: class_names.len(), class_names, split: Split::Train })
}

/// Per-class base frequencies (half-cycles per 8-pixel block) for the
/// synthetic task, ordered so class 0 lands on the lowest zigzag channels.
pub const SYNTH_CLASS_FREQS: [(usize, usize); 8] =
    [(0, 1), (1, 0), (1, 1), (2, 0), (0, 2), (2, 2), (1, 2), (2, 1)];

pub const SYNTH_IMAGE_SIDE: usize = 224;

/// Synthetic frequency-domain classification task: 224×224 grayscale-rendered
/// RGB images where class k carries a dominant global 2-D cosine at its block
/// frequency, with randomized amplitude and phase plus pixel noise. Labels
/// round-robin so the histogram is uniform.
pub fn synth_freq_dataset(n: usize, num_classes: usize, seed: u64) -> Result<Dataset> {
    if num_classes == 0 || num_classes > SYNTH_CLASS_FREQS.len() {
        return Err(Error::Dataset(format!(
            "num_classes {num_classes} outside 1..={}",
            SYNTH_CLASS_FREQS.len()
        )));
    }
    if n == 0 {
        return Err(Error::Dataset("empty synthetic dataset".into()));
    }
    let side = SYNTH_IMAGE_SIDE;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % num_classes;
        let (u, v) = SYNTH_CLASS_FREQS[label];
        let amp: f64 = rng.gen_range(45.0..110.0);
        let phase_y: f64 = if u > 0 { rng.gen_range(0.0..std::f64::consts::TAU) } else { 0.0 };
        let phase_x: f64 = if v > 0 { rng.gen_range(0.0..std::f64::consts::TAU) } else { 0.0 };
        let wave = |k: usize, t: usize, phase: f64| -> f64 {
            if k == 0 {
                1.0
            } else {
                ((2 * t + 1) as f64 * k as f64 * std::f64::consts::PI / 16.0 + phase).cos()
            }
        };
        let mut data = vec![0u8; side * side * 3];
        for y in 0..side {
            let cy = wave(u, y, phase_y);
            for x in 0..side {
                let cx = wave(v, x, phase_x);
                let noise: f64 = rng.gen_range(-9.0..9.0);
                let val = (128.0 + amp * cy * cx + noise).round().clamp(0.0, 255.0) as u8;
                let o = (y * side + x) * 3;
                data[o] = val;
                data[o + 1] = val;
                data[o + 2] = val;
            }
        }
        items.push(DatasetItem {
            image: RgbImage::new(side, side, data)?,
            label,
            id: format!("synth-{i}"),
        });
    }
    let class_names = (0..num_classes).map(|k| format!("freq-{k}")).collect();
    Ok(Dataset { items, num_classes, class_names, split: Split::Train })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dct::{preprocess, CompressionSpec};

    #[test]
    fn ppm_round_trip() {
        let dir = std::env::temp_dir().join("fun-ppm-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("x.ppm");
        let img = RgbImage::filled(16, 32, [1, 128, 255]).unwrap();
        write_ppm(&img, &path).unwrap();
        let back = read_ppm(&path).unwrap();
        assert_eq!((back.height(), back.width()), (16, 32));
        assert_eq!(back.data(), img.data());
    }

    #[test]
    fn synth_is_deterministic_and_balanced() {
        let a = synth_freq_dataset(17, 4, 9).unwrap();
        let b = synth_freq_dataset(17, 4, 9).unwrap();
        for (x, y) in a.items.iter().zip(&b.items) {
            assert_eq!(x.image.data(), y.image.data());
            assert_eq!(x.label, y.label);
        }
        let mut hist = [0usize; 4];
        for item in &a.items {
            hist[item.label] += 1;
        }
        let (lo, hi) = (hist.iter().min().unwrap(), hist.iter().max().unwrap());
        assert!(hi - lo <= 1, "label histogram {hist:?} not uniform ±1");
    }

    #[test]
    fn class0_energy_sits_in_low_zigzag_channels() {
        let ds = synth_freq_dataset(8, 4, 3).unwrap();
        let item = ds.items.iter().find(|i| i.label == 0).unwrap();
        let t = preprocess(&item.image, CompressionSpec::FULL).unwrap();
        let hw = t.grid_h * t.grid_w;
        let energy: Vec<f64> = (0..64)
            .map(|c| t.data[c * hw..(c + 1) * hw].iter().map(|&v| (v as f64).powi(2)).sum())
            .collect();
        // skip DC (offset + noise); the signal must concentrate in the
        // lowest AC zigzag channels of the luma plane
        let low: f64 = energy[1..10].iter().sum();
        let high: f64 = energy[10..].iter().sum();
        assert!(low > 5.0 * high, "low {low:.1} vs high {high:.1}");
    }

    #[test]
    fn split_keeps_counts_and_order() {
        let ds = synth_freq_dataset(20, 4, 1).unwrap();
        let (tr, te) = ds.split_at(16).unwrap();
        assert_eq!(tr.len(), 16);
        assert_eq!(te.len(), 4);
        assert_eq!(tr.split, Split::Train);
        assert_eq!(te.split, Split::Test);
        assert!(te.items[0].id.contains("synth-16"));
    }

    #[test]
    fn empty_folder_is_a_dataset_error() {
        let dir = std::env::temp_dir().join("fun-empty-ds");
        std::fs::create_dir_all(&dir).unwrap();
        assert!(matches!(load_folder_dataset(&dir), Err(Error::Dataset(_))));
    }
}
