//! A minimal row-major RGB raster plus PNG reading and writing.

use std::path::Path;

use thiserror::Error;

use crate::caption::RgbColor;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions must be at least 1×1, got {width}×{height}")]
    EmptyDimensions { width: u32, height: u32 },
    #[error("pixel buffer holds {got} pixels, expected {expected}")]
    BufferSize { expected: usize, got: usize },
    #[error(transparent)]
    Codec(#[from] ::image::ImageError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: u32,
    height: u32,
    pixels: Vec<RgbColor>,
}

impl Image {
    pub fn filled(width: u32, height: u32, color: RgbColor) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        Ok(Self { width, height, pixels: vec![color; width as usize * height as usize] })
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<RgbColor>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(ImageError::BufferSize { expected, got: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[RgbColor] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> RgbColor {
        self.pixels[self.index(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, c: RgbColor) {
        let i = self.index(x, y);
        self.pixels[i] = c;
    }

    fn index(&self, x: u32, y: u32) -> usize {
        assert!(x < self.width && y < self.height, "pixel ({x}, {y}) out of bounds");
        y as usize * self.width as usize + x as usize
    }

    /// Loads an 8-bit PNG; alpha is composited over white.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Self, ImageError> {
        let rgba = ::image::open(path)?.to_rgba8();
        let (width, height) = rgba.dimensions();
        let pixels = rgba
            .pixels()
            .map(|p| {
                let [r, g, b, a] = p.0;
                let over_white = |c: u8| {
                    let a = u32::from(a);
                    ((u32::from(c) * a + 255 * (255 - a) + 127) / 255) as u8
                };
                RgbColor::new(over_white(r), over_white(g), over_white(b))
            })
            .collect();
        Self::from_pixels(width, height, pixels)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        let raw: Vec<u8> = self.pixels.iter().flat_map(|c| c.channels()).collect();
        let buf = ::image::RgbImage::from_raw(self.width, self.height, raw)
            .expect("buffer length matches dimensions");
        buf.save_with_format(path, ::image::ImageFormat::Png)?;
        Ok(())
    }
}
