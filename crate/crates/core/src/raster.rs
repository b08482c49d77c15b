//! 8-bit RGB raster plus PNG/JPEG codecs and the elementary geometric
//! transforms every augmentation builds on.

use std::io::Cursor;

use image::{ImageFormat, ImageReader};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("invalid dimensions {width}x{height}: both must be positive")]
    InvalidDimensions { width: u32, height: u32 },
    #[error("pixel buffer holds {actual} bytes, expected {expected} for {width}x{height} RGB")]
    BufferSize {
        width: u32,
        height: u32,
        expected: usize,
        actual: usize,
    },
    #[error("decode error: {0}")]
    Decode(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("encode error: {0}")]
    Encode(String),
}

/// Owned, row-major, 8-bit RGB raster.
///
/// `pixels` always holds exactly `width * height * 3` bytes, so every channel
/// is trivially inside `[0, 255]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for ImageBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ImageBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

/// Column/row address of a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelCoord {
    pub x: u32,
    pub y: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodeFormat {
    Png,
    /// Quality in `[1, 100]`; out-of-range values are clamped.
    Jpeg { quality: u8 },
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidDimensions { width, height });
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(ImageError::BufferSize {
                width,
                height,
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_pixels(width: u32, height: u32, rgb: &[[u8; 3]]) -> Result<Self, ImageError> {
        Self::new(width, height, rgb.iter().flatten().copied().collect())
    }

    /// Uniformly filled buffer.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self, ImageError> {
        Self::from_fn(width, height, |_| rgb)
    }

    pub fn from_fn(
        width: u32,
        height: u32,
        mut f: impl FnMut(PixelCoord) -> [u8; 3],
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidDimensions { width, height });
        }
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(PixelCoord { x, y }));
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Raw interleaved RGB bytes.
    pub fn as_bytes(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.pixels
    }

    /// Panics when `coord` is out of bounds.
    pub fn pixel(&self, coord: PixelCoord) -> [u8; 3] {
        let i = self.offset(coord);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn get(&self, x: u32, y: u32) -> Option<[u8; 3]> {
        (x < self.width && y < self.height).then(|| self.pixel(PixelCoord { x, y }))
    }

    pub fn pixels(&self) -> impl ExactSizeIterator<Item = [u8; 3]> + '_ {
        self.pixels.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub(crate) fn pixels_mut(&mut self) -> std::slice::ChunksExactMut<'_, u8> {
        self.pixels.chunks_exact_mut(3)
    }

    fn offset(&self, coord: PixelCoord) -> usize {
        assert!(
            coord.x < self.width && coord.y < self.height,
            "pixel {coord:?} out of bounds for {}x{}",
            self.width,
            self.height
        );
        (coord.y as usize * self.width as usize + coord.x as usize) * 3
    }

    /// Mean of `(r + g + b) / 3` over the pixels selected by `select`, or
    /// `None` when nothing is selected.
    pub fn mean_intensity_where(&self, mut select: impl FnMut(PixelCoord) -> bool) -> Option<f64> {
        let mut sum = 0u64;
        let mut n = 0u64;
        for (i, px) in self.pixels().enumerate() {
            let coord = PixelCoord {
                x: (i % self.width as usize) as u32,
                y: (i / self.width as usize) as u32,
            };
            if select(coord) {
                sum += px.iter().map(|&c| c as u64).sum::<u64>();
                n += 1;
            }
        }
        (n > 0).then(|| sum as f64 / (3 * n) as f64)
    }
}

/// Decode a PNG or JPEG stream into an RGB buffer.
///
/// Grayscale sources are expanded to RGB. Sources with alpha are composited
/// over opaque black.
pub fn decode_image(bytes: &[u8]) -> Result<ImageBuffer, ImageError> {
    if bytes.is_empty() {
        return Err(ImageError::Decode("empty stream (offset 0)".into()));
    }
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| ImageError::Decode(e.to_string()))?;
    match reader.format() {
        Some(ImageFormat::Png | ImageFormat::Jpeg) => {}
        Some(other) => return Err(ImageError::UnsupportedFormat(format!("{other:?}"))),
        None => {
            return Err(ImageError::UnsupportedFormat(
                "unrecognized signature".to_string(),
            ))
        }
    }
    let decoded = reader
        .decode()
        .map_err(|e| ImageError::Decode(e.to_string()))?;

    let (width, height) = (decoded.width(), decoded.height());
    let pixels = if decoded.color().has_alpha() {
        let rgba = decoded.into_rgba8();
        let mut out = Vec::with_capacity(width as usize * height as usize * 3);
        for px in rgba.as_raw().chunks_exact(4) {
            let a = px[3] as u32;
            for &c in &px[..3] {
                // c * a / 255 rounded to nearest
                out.push(((c as u32 * a + 127) / 255) as u8);
            }
        }
        out
    } else {
        decoded.into_rgb8().into_raw()
    };
    ImageBuffer::new(width, height, pixels)
}

pub fn encode_image(img: &ImageBuffer, format: EncodeFormat) -> Result<Vec<u8>, ImageError> {
    let mut out = Vec::new();
    match format {
        EncodeFormat::Png => {
            let encoder = image::codecs::png::PngEncoder::new(&mut out);
            image::ImageEncoder::write_image(
                encoder,
                img.as_bytes(),
                img.width(),
                img.height(),
                image::ExtendedColorType::Rgb8,
            )
        }
        EncodeFormat::Jpeg { quality } => {
            let encoder =
                image::codecs::jpeg::JpegEncoder::new_with_quality(&mut out, quality.clamp(1, 100));
            image::ImageEncoder::write_image(
                encoder,
                img.as_bytes(),
                img.width(),
                img.height(),
                image::ExtendedColorType::Rgb8,
            )
        }
    }
    .map_err(|e| ImageError::Encode(e.to_string()))?;
    Ok(out)
}

/// Mirror left-right: `out(x, y) = in(width - 1 - x, y)`.
pub fn horizontal_flip(img: &ImageBuffer) -> ImageBuffer {
    let row_len = img.width as usize * 3;
    let mut pixels = Vec::with_capacity(img.pixels.len());
    for row in img.pixels.chunks_exact(row_len) {
        for px in row.chunks_exact(3).rev() {
            pixels.extend_from_slice(px);
        }
    }
    ImageBuffer {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// Place two equally tall images next to each other.
pub fn side_by_side(left: &ImageBuffer, right: &ImageBuffer) -> Result<ImageBuffer, ImageError> {
    let height = left.height.max(right.height);
    ImageBuffer::from_fn(left.width + right.width, height, |PixelCoord { x, y }| {
        if x < left.width {
            left.get(x, y).unwrap_or([0, 0, 0])
        } else {
            right.get(x - left.width, y).unwrap_or([0, 0, 0])
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn buffer(width: u32, height: u32, seed: u8) -> ImageBuffer {
        ImageBuffer::from_fn(width, height, |p| {
            let v = (p.x * 31 + p.y * 17) as u8 ^ seed;
            [v, v.wrapping_mul(3), v.wrapping_add(seed)]
        })
        .unwrap()
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(
            ImageBuffer::new(0, 1, vec![]),
            Err(ImageError::InvalidDimensions { .. })
        ));
        assert!(matches!(
            ImageBuffer::new(2, 2, vec![0; 11]),
            Err(ImageError::BufferSize { expected: 12, .. })
        ));
    }

    #[test]
    fn decodes_hand_authored_png() {
        // build the PNG with the codec directly so the check doesn't lean on encode_image
        let mut bytes = Vec::new();
        image::ImageEncoder::write_image(
            image::codecs::png::PngEncoder::new(&mut bytes),
            &[255, 0, 0, 0, 255, 0],
            2,
            1,
            image::ExtendedColorType::Rgb8,
        )
        .unwrap();
        let img = decode_image(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
        assert_eq!(img.pixels().collect::<Vec<_>>(), vec![[255, 0, 0], [0, 255, 0]]);
    }

    #[test]
    fn empty_stream_is_decode_error() {
        assert!(matches!(decode_image(&[]), Err(ImageError::Decode(_))));
    }

    #[test]
    fn garbage_is_rejected() {
        let err = decode_image(b"definitely not an image").unwrap_err();
        assert!(matches!(err, ImageError::UnsupportedFormat(_)));
        // truncated PNG: valid signature, nothing after it
        let png_sig = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a, 0, 0];
        assert!(matches!(decode_image(&png_sig), Err(ImageError::Decode(_))));
    }

    #[test]
    fn gray_and_alpha_sources_become_rgb() {
        let mut gray = Vec::new();
        image::ImageEncoder::write_image(
            image::codecs::png::PngEncoder::new(&mut gray),
            &[10, 200],
            2,
            1,
            image::ExtendedColorType::L8,
        )
        .unwrap();
        let img = decode_image(&gray).unwrap();
        assert_eq!(img.pixels().collect::<Vec<_>>(), vec![[10; 3], [200; 3]]);

        let mut rgba = Vec::new();
        image::ImageEncoder::write_image(
            image::codecs::png::PngEncoder::new(&mut rgba),
            &[200, 100, 50, 255, 200, 100, 50, 0, 255, 255, 255, 128],
            3,
            1,
            image::ExtendedColorType::Rgba8,
        )
        .unwrap();
        let img = decode_image(&rgba).unwrap();
        assert_eq!(
            img.pixels().collect::<Vec<_>>(),
            vec![[200, 100, 50], [0, 0, 0], [128, 128, 128]]
        );
    }

    #[test]
    fn png_one_pixel_black() {
        let img = ImageBuffer::filled(1, 1, [0, 0, 0]).unwrap();
        let back = decode_image(&encode_image(&img, EncodeFormat::Png).unwrap()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn noise_png_round_trips() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(64);
        let img = ImageBuffer::from_fn(64, 64, |_| rng.random()).unwrap();
        let once = decode_image(&encode_image(&img, EncodeFormat::Png).unwrap()).unwrap();
        assert_eq!(once, img);
        let twice = decode_image(&encode_image(&once, EncodeFormat::Png).unwrap()).unwrap();
        assert_eq!(twice, once);
    }

    #[test]
    fn jpeg_keeps_dimensions() {
        let img = ImageBuffer::from_fn(32, 32, |p| [(p.x * 8) as u8, (p.y * 8) as u8, 128]).unwrap();
        let bytes = encode_image(&img, EncodeFormat::Jpeg { quality: 90 }).unwrap();
        let back = decode_image(&bytes).unwrap();
        assert_eq!((back.width(), back.height()), (32, 32));
    }

    #[test]
    fn flip_examples() {
        let img = ImageBuffer::from_pixels(2, 1, &[[1, 2, 3], [4, 5, 6]]).unwrap();
        let flipped = horizontal_flip(&img);
        assert_eq!(flipped.pixels().collect::<Vec<_>>(), vec![[4, 5, 6], [1, 2, 3]]);

        let single = ImageBuffer::filled(1, 1, [9, 8, 7]).unwrap();
        assert_eq!(horizontal_flip(&single), single);
    }

    #[test]
    fn side_by_side_layout() {
        let a = ImageBuffer::filled(2, 2, [1, 1, 1]).unwrap();
        let b = ImageBuffer::filled(3, 2, [2, 2, 2]).unwrap();
        let both = side_by_side(&a, &b).unwrap();
        assert_eq!((both.width(), both.height()), (5, 2));
        assert_eq!(both.get(1, 1), Some([1, 1, 1]));
        assert_eq!(both.get(2, 0), Some([2, 2, 2]));
    }

    proptest! {
        #[test]
        fn png_round_trip_is_identity(w in 1u32..24, h in 1u32..24, seed in any::<u8>()) {
            let img = buffer(w, h, seed);
            let back = decode_image(&encode_image(&img, EncodeFormat::Png).unwrap()).unwrap();
            prop_assert_eq!(back, img);
        }

        #[test]
        fn flip_is_involution_and_permutes(w in 1u32..24, h in 1u32..24, seed in any::<u8>()) {
            let img = buffer(w, h, seed);
            let flipped = horizontal_flip(&img);
            for y in 0..h {
                for x in 0..w {
                    prop_assert_eq!(flipped.get(x, y), img.get(w - 1 - x, y));
                }
            }
            let mut a: Vec<_> = img.pixels().collect();
            let mut b: Vec<_> = flipped.pixels().collect();
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
            prop_assert_eq!(horizontal_flip(&flipped), img);
        }
    }
}
