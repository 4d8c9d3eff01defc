//! JPEG-style DCT preprocessing codec.
//!
//! RGB → YCbCr (BT.601 full range) → 4:2:0 chroma downsampling → per-plane
//! 8×8 tiling → orthonormal type-II DCT with −128 level shift → zigzag
//! flattening into 64 frequency channels per plane → nearest-neighbor
//! upsampling of the chroma coefficient grids → plane-major stacking.
//! A 224×224 image becomes a 28×28×192 frequency tensor.
//!
//! Block transforms are evaluated in double precision and cast to the
//! pipeline scalar on output, keeping round-trip and Parseval error at the
//! level of cast rounding.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use std::io::{Read, Write};
use std::path::Path;

/// JPEG zigzag scan: `ZIGZAG[k]` is the row-major index of the k-th lowest
/// frequency in the 8×8 coefficient grid. Index 0 is DC.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
    20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58,
    59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// Zigzag scan as (row, col) grid positions.
pub fn zigzag_order() -> [(usize, usize); 64] {
    let mut out = [(0usize, 0usize); 64];
    for (k, &idx) in ZIGZAG.iter().enumerate() {
        out[k] = (idx / 8, idx % 8);
    }
    out
}

/// 8-bit interleaved RGB image, row-major. Dimensions must be multiples of 16
/// so the half-resolution chroma planes tile into whole 8×8 blocks.
#[derive(Debug, Clone)]
pub struct RgbImage {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || height % 16 != 0 || width % 16 != 0 {
            return Err(Error::Dimension(format!(
                "image dimensions {width}x{height} must be nonzero multiples of 16"
            )));
        }
        if data.len() != height * width * 3 {
            return Err(Error::Dimension(format!(
                "pixel buffer has {} bytes, expected {}",
                data.len(),
                height * width * 3
            )));
        }
        Ok(RgbImage { height, width, data })
    }

    pub fn filled(height: usize, width: usize, rgb: [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * 3);
        for _ in 0..height * width {
            data.extend_from_slice(&rgb);
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, y: usize, x: usize) -> [u8; 3] {
        let o = (y * self.width + x) * 3;
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    /// Bilinear resize to a new multiple-of-16 size. Used when a model's
    /// native input resolution differs from the source material.
    pub fn resize(&self, height: usize, width: usize) -> Result<Self> {
        if height == self.height && width == self.width {
            return Ok(self.clone());
        }
        let mut data = vec![0u8; height * width * 3];
        let sy = self.height as f64 / height as f64;
        let sx = self.width as f64 / width as f64;
        for y in 0..height {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let wy = fy - y0 as f64;
            for x in 0..width {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let wx = fx - x0 as f64;
                for c in 0..3 {
                    let p = |yy: usize, xx: usize| self.data[(yy * self.width + xx) * 3 + c] as f64;
                    let v = p(y0, x0) * (1.0 - wy) * (1.0 - wx)
                        + p(y0, x1) * (1.0 - wy) * wx
                        + p(y1, x0) * wy * (1.0 - wx)
                        + p(y1, x1) * wy * wx;
                    data[(y * width + x) * 3 + c] = v.round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        Self::new(height, width, data)
    }
}

/// Luma plane plus half-resolution chroma planes, all in [0, 255].
#[derive(Debug, Clone)]
pub struct PlaneSet {
    pub height: usize,
    pub width: usize,
    pub y: Vec<f64>,
    pub cb: Vec<f64>,
    pub cr: Vec<f64>,
}

/// Full-range BT.601 conversion with 2×2 box-averaged chroma.
pub fn rgb_to_ycbcr(img: &RgbImage) -> Result<PlaneSet> {
    let (h, w) = (img.height(), img.width());
    let mut y = vec![0.0f64; h * w];
    let mut cb_full = vec![0.0f64; h * w];
    let mut cr_full = vec![0.0f64; h * w];
    for i in 0..h * w {
        let r = img.data()[i * 3] as f64;
        let g = img.data()[i * 3 + 1] as f64;
        let b = img.data()[i * 3 + 2] as f64;
        y[i] = (0.299 * r + 0.587 * g + 0.114 * b).clamp(0.0, 255.0);
        cb_full[i] = (128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b).clamp(0.0, 255.0);
        cr_full[i] = (128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b).clamp(0.0, 255.0);
    }
    let (ch, cw) = (h / 2, w / 2);
    let mut cb = vec![0.0f64; ch * cw];
    let mut cr = vec![0.0f64; ch * cw];
    for cy in 0..ch {
        for cx in 0..cw {
            let mut sb = 0.0;
            let mut sr = 0.0;
            for dy in 0..2 {
                for dx in 0..2 {
                    let i = (cy * 2 + dy) * w + cx * 2 + dx;
                    sb += cb_full[i];
                    sr += cr_full[i];
                }
            }
            cb[cy * cw + cx] = sb / 4.0;
            cr[cy * cw + cx] = sr / 4.0;
        }
    }
    Ok(PlaneSet { height: h, width: w, y, cb, cr })
}

// 1-D orthonormal DCT-II basis: BASIS[u][x] = s(u) * cos((2x+1) u pi / 16).
fn basis_1d() -> [[f64; 8]; 8] {
    let mut c = [[0.0f64; 8]; 8];
    for (u, row) in c.iter_mut().enumerate() {
        let s = if u == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };
        for (x, v) in row.iter_mut().enumerate() {
            *v = s * ((2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0).cos();
        }
    }
    c
}

/// Orthonormal 2-D type-II DCT of an 8×8 sample block, with the JPEG −128
/// level shift and no quantization (quality-100 pipeline).
pub fn block_dct8(block: &[f64; 64]) -> [f64; 64] {
    let c = basis_1d();
    let mut shifted = [0.0f64; 64];
    for (d, s) in shifted.iter_mut().zip(block) {
        *d = s - 128.0;
    }
    // rows: tmp[u][x] over columns, then columns
    let mut tmp = [0.0f64; 64];
    for y in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for x in 0..8 {
                acc += shifted[y * 8 + x] * c[u][x];
            }
            tmp[y * 8 + u] = acc;
        }
    }
    let mut out = [0.0f64; 64];
    for v in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for y in 0..8 {
                acc += tmp[y * 8 + u] * c[v][y];
            }
            out[v * 8 + u] = acc;
        }
    }
    out
}

/// Exact inverse of [`block_dct8`], including the +128 level shift. No clamping.
pub fn block_idct8(coeffs: &[f64; 64]) -> [f64; 64] {
    let c = basis_1d();
    let mut tmp = [0.0f64; 64];
    for v in 0..8 {
        for x in 0..8 {
            let mut acc = 0.0;
            for u in 0..8 {
                acc += coeffs[v * 8 + u] * c[u][x];
            }
            tmp[v * 8 + x] = acc;
        }
    }
    let mut out = [0.0f64; 64];
    for y in 0..8 {
        for x in 0..8 {
            let mut acc = 0.0;
            for v in 0..8 {
                acc += tmp[v * 8 + x] * c[v][y];
            }
            out[y * 8 + x] = acc + 128.0;
        }
    }
    out
}

/// 8×8 spatial rendering of the orthonormal DCT basis function for grid
/// frequency (u, v): varies with v along x and u along y.
pub fn dct_basis(u: usize, v: usize) -> [f64; 64] {
    let c = basis_1d();
    let mut out = [0.0f64; 64];
    for y in 0..8 {
        for x in 0..8 {
            out[y * 8 + x] = c[u][y] * c[v][x];
        }
    }
    out
}

/// Per-plane keep-counts for frequency truncation. The retained channels are
/// always the lowest `keep` zigzag frequencies of each plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompressionSpec {
    pub keep_y: usize,
    pub keep_cb: usize,
    pub keep_cr: usize,
}

impl CompressionSpec {
    pub const FULL: CompressionSpec = CompressionSpec { keep_y: 64, keep_cb: 64, keep_cr: 64 };

    pub fn new(keep_y: usize, keep_cb: usize, keep_cr: usize) -> Result<Self> {
        let s = CompressionSpec { keep_y, keep_cb, keep_cr };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("Y", self.keep_y), ("Cb", self.keep_cb), ("Cr", self.keep_cr)] {
            if k > 64 {
                return Err(Error::Spec(format!("keep count {k} for {name} exceeds 64")));
            }
        }
        Ok(())
    }

    /// Total retained channel count.
    pub fn channels(&self) -> usize {
        self.keep_y + self.keep_cb + self.keep_cr
    }
}

impl std::fmt::Display for CompressionSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.keep_y, self.keep_cb, self.keep_cr)
    }
}

/// Stacked frequency-domain tensor: plane-major channel groups (Y, Cb, Cr),
/// zigzag frequency order within each group, [channel][row][col] layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DctTensor {
    pub grid_h: usize,
    pub grid_w: usize,
    pub keep: CompressionSpec,
    pub data: Vec<f32>,
}

impl DctTensor {
    pub fn channels(&self) -> usize {
        self.keep.channels()
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let hw = self.grid_h * self.grid_w;
        &self.data[c * hw..(c + 1) * hw]
    }

    /// View as a 1×C×H×W activation tensor.
    pub fn to_tensor(&self) -> Tensor<f32> {
        Tensor::from_vec(&[1, self.channels(), self.grid_h, self.grid_w], self.data.clone())
            .expect("DctTensor data is consistent")
    }

    /// Mean squared coefficient per plane group, for the preprocess summary.
    pub fn plane_energy(&self) -> [f64; 3] {
        let hw = (self.grid_h * self.grid_w) as f64;
        let mut out = [0.0f64; 3];
        let groups =
            [(0, self.keep.keep_y), (self.keep.keep_y, self.keep.keep_cb), (self.keep.keep_y + self.keep.keep_cb, self.keep.keep_cr)];
        for (g, (start, len)) in groups.iter().enumerate() {
            if *len == 0 {
                continue;
            }
            let mut acc = 0.0;
            for c in *start..start + len {
                for &v in self.channel(c) {
                    acc += (v as f64) * (v as f64);
                }
            }
            out[g] = acc / (hw * *len as f64);
        }
        out
    }
}

// Zigzag-flattened DCT coefficient grid of one plane: 64 channels, each
// grid_h x grid_w.
fn plane_coefficients(plane: &[f64], height: usize, width: usize) -> Vec<f64> {
    let (gh, gw) = (height / 8, width / 8);
    let mut out = vec![0.0f64; 64 * gh * gw];
    let mut block = [0.0f64; 64];
    for by in 0..gh {
        for bx in 0..gw {
            for y in 0..8 {
                for x in 0..8 {
                    block[y * 8 + x] = plane[(by * 8 + y) * width + bx * 8 + x];
                }
            }
            let coeffs = block_dct8(&block);
            for (k, &idx) in ZIGZAG.iter().enumerate() {
                out[(k * gh + by) * gw + bx] = coeffs[idx];
            }
        }
    }
    out
}

// Nearest-neighbor duplication of each grid cell from (gh, gw) to (2gh, 2gw),
// per channel.
fn upsample_grid_2x(channels: &[f64], gh: usize, gw: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; 64 * 4 * gh * gw];
    let (oh, ow) = (gh * 2, gw * 2);
    for c in 0..64 {
        for y in 0..oh {
            for x in 0..ow {
                out[(c * oh + y) * ow + x] = channels[(c * gh + y / 2) * gw + x / 2];
            }
        }
    }
    out
}

/// Full preprocessing pipeline. A 224×224 input with keep 64/64/64 yields a
/// 28×28×192 tensor.
pub fn preprocess(img: &RgbImage, spec: CompressionSpec) -> Result<DctTensor> {
    spec.validate()?;
    let planes = rgb_to_ycbcr(img)?;
    let (gh, gw) = (img.height() / 8, img.width() / 8);

    let y_ch = plane_coefficients(&planes.y, planes.height, planes.width);
    let cb_half = plane_coefficients(&planes.cb, planes.height / 2, planes.width / 2);
    let cr_half = plane_coefficients(&planes.cr, planes.height / 2, planes.width / 2);
    let cb_ch = upsample_grid_2x(&cb_half, gh / 2, gw / 2);
    let cr_ch = upsample_grid_2x(&cr_half, gh / 2, gw / 2);

    let hw = gh * gw;
    let mut data = Vec::with_capacity(spec.channels() * hw);
    for (plane, keep) in [(&y_ch, spec.keep_y), (&cb_ch, spec.keep_cb), (&cr_ch, spec.keep_cr)] {
        data.extend(plane[..keep * hw].iter().map(|&v| v as f32));
    }
    Ok(DctTensor { grid_h: gh, grid_w: gw, keep: spec, data })
}

const FDT1_MAGIC: &[u8; 4] = b"FDT1";

/// Write the bit-specified FDT1 dump: magic, six little-endian u32 fields
/// (grid_h, grid_w, channels, keep_y, keep_cb, keep_cr), then the channel-major
/// f32 payload.
pub fn write_fdt1(t: &DctTensor, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(FDT1_MAGIC)?;
    for v in [t.grid_h, t.grid_w, t.channels(), t.keep.keep_y, t.keep.keep_cb, t.keep.keep_cr] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    for &v in &t.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_fdt1(r: &mut impl Read, origin: &Path) -> Result<DctTensor> {
    let err = |msg: &str| Error::parse(origin, msg);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| Error::io(origin, e))?;
    if &magic != FDT1_MAGIC {
        return Err(err("bad FDT1 magic"));
    }
    let mut fields = [0u32; 6];
    for f in &mut fields {
        let mut b = [0u8; 4];
        r.read_exact(&mut b).map_err(|e| Error::io(origin, e))?;
        *f = u32::from_le_bytes(b);
    }
    let [gh, gw, channels, ky, kcb, kcr] = fields.map(|v| v as usize);
    let keep = CompressionSpec::new(ky, kcb, kcr)?;
    if keep.channels() != channels {
        return Err(err("channel count does not match keep counts"));
    }
    let mut data = vec![0.0f32; channels * gh * gw];
    let mut buf = [0u8; 4];
    for v in &mut data {
        r.read_exact(&mut buf).map_err(|e| Error::io(origin, e))?;
        *v = f32::from_le_bytes(buf);
    }
    Ok(DctTensor { grid_h: gh, grid_w: gw, keep, data })
}

pub fn save_fdt1(t: &DctTensor, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(
        std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
    );
    write_fdt1(t, &mut f).map_err(|e| Error::io(path, e))
}

pub fn load_fdt1(path: &Path) -> Result<DctTensor> {
    let mut f = std::io::BufReader::new(
        std::fs::File::open(path).map_err(|e| Error::io(path, e))?,
    );
    read_fdt1(&mut f, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_is_the_jpeg_scan() {
        let zz = zigzag_order();
        assert_eq!(&zz[..6], &[(0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2)]);
        assert_eq!(zz[63], (7, 7));
        let mut seen = [false; 64];
        for (r, c) in zz {
            seen[r * 8 + c] = true;
        }
        assert!(seen.iter().all(|&s| s), "zigzag must be a permutation");
    }

    #[test]
    fn achromatic_images_have_neutral_chroma() {
        // up to rounding of the published BT.601 constants
        let near = |v: f64, want: f64| (v - want).abs() < 1e-9;
        let white = rgb_to_ycbcr(&RgbImage::filled(16, 16, [255, 255, 255]).unwrap()).unwrap();
        assert!(white.y.iter().all(|&v| near(v, 255.0)));
        assert!(white.cb.iter().all(|&v| near(v, 128.0)));
        assert!(white.cr.iter().all(|&v| near(v, 128.0)));

        let black = rgb_to_ycbcr(&RgbImage::filled(16, 16, [0, 0, 0]).unwrap()).unwrap();
        assert!(black.y.iter().all(|&v| v == 0.0));
        assert!(black.cb.iter().all(|&v| near(v, 128.0)));
        assert!(black.cr.iter().all(|&v| near(v, 128.0)));
    }

    #[test]
    fn pure_red_matches_bt601_with_clamped_cr() {
        let red = rgb_to_ycbcr(&RgbImage::filled(16, 16, [255, 0, 0]).unwrap()).unwrap();
        assert!((red.y[0] - 76.245).abs() < 1e-9);
        assert!((red.cb[0] - 84.97232).abs() < 1e-9);
        assert_eq!(red.cr[0], 255.0, "Cr = 128 + 0.5*255 clamps to 255");
    }

    #[test]
    fn dimension_error_on_non_multiple_of_16() {
        assert!(RgbImage::filled(24, 16, [0, 0, 0]).is_err());
        assert!(RgbImage::filled(0, 16, [0, 0, 0]).is_err());
    }

    #[test]
    fn constant_128_block_maps_to_zero() {
        let out = block_dct8(&[128.0; 64]);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_255_block_has_dc_1016() {
        let out = block_dct8(&[255.0; 64]);
        assert!((out[0] - 1016.0).abs() < 1e-9);
        assert!(out[1..].iter().all(|&v| v.abs() < 1e-9));
        let back = block_idct8(&out);
        assert!(back.iter().all(|&v| (v - 255.0).abs() < 1e-9));
    }

    #[test]
    fn zero_coefficients_invert_to_level_shift() {
        let back = block_idct8(&[0.0; 64]);
        assert!(back.iter().all(|&v| v == 128.0));
    }

    #[test]
    fn preprocess_gray_is_all_zero_with_full_shape() {
        let img = RgbImage::filled(224, 224, [128, 128, 128]).unwrap();
        let t = preprocess(&img, CompressionSpec::FULL).unwrap();
        assert_eq!((t.grid_h, t.grid_w, t.channels()), (28, 28, 192));
        // Y=128, Cb=Cr=128 level-shift to zero, up to constant rounding.
        assert!(t.data.iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn keep_counts_control_channel_total() {
        let img = RgbImage::filled(32, 32, [10, 200, 30]).unwrap();
        let t = preprocess(&img, CompressionSpec::new(64, 12, 12).unwrap()).unwrap();
        assert_eq!(t.channels(), 88);
        assert_eq!(t.data.len(), 88 * 4 * 4);
        assert!(CompressionSpec::new(65, 0, 0).is_err());
    }

    #[test]
    fn chroma_coefficients_are_grid_duplicated() {
        // 32x32 image: luma grid 4x4, chroma grid 2x2 upsampled to 4x4.
        let mut data = vec![0u8; 32 * 32 * 3];
        for (i, px) in data.chunks_mut(3).enumerate() {
            let v = ((i * 37) % 251) as u8;
            px.copy_from_slice(&[v, 255 - v, v / 2]);
        }
        let img = RgbImage::new(32, 32, data).unwrap();
        let t = preprocess(&img, CompressionSpec::FULL).unwrap();
        for c in 64..192 {
            let ch = t.channel(c);
            for y in 0..4 {
                for x in 0..4 {
                    assert_eq!(ch[y * 4 + x], ch[(y / 2 * 2) * 4 + (x / 2 * 2)]);
                }
            }
        }
    }

    #[test]
    fn fdt1_route_preserves_payload() {
        let img = RgbImage::filled(32, 32, [3, 141, 59]).unwrap();
        let t = preprocess(&img, CompressionSpec::new(10, 4, 4).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_fdt1(&t, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"FDT1");
        let back = read_fdt1(&mut &buf[..], Path::new("<mem>")).unwrap();
        assert_eq!(back, t);
    }
}
