//! Hue histograms and hue transfer between images.
//!
//! Hue is read on the circle of perimeter 1 (`h / 360`). Only the hue of
//! each pixel is remapped, through the optimal circular transfer between the
//! two hue histograms, so saturation and value are untouched.

use rayon::prelude::*;

use crate::circle::circular_transfer_map;
use crate::error::{Error, Result};
use crate::histogram::Histogram;
use crate::ppm::RgbImage;

/// Hue bin count used when none is given.
pub const DEFAULT_HUE_BINS: usize = 360;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsvPixel {
    /// Degrees in `[0, 360)`; 0 for achromatic pixels.
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

impl HsvPixel {
    pub fn is_chromatic(&self) -> bool {
        self.s > 0.0
    }
}

/// Standard hexcone conversion.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> HsvPixel {
    let [r, g, b] = rgb.map(|c| c as f64);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max / 255.0;
    let s = if max == 0.0 { 0.0 } else { delta / max };
    if delta == 0.0 {
        return HsvPixel { h: 0.0, s, v };
    }
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let h = 60.0 * sector;
    HsvPixel { h: if h >= 360.0 { 0.0 } else { h }, s, v }
}

pub fn hsv_to_rgb(p: HsvPixel) -> [u8; 3] {
    let c = p.v * p.s;
    let hp = (p.h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - ((hp % 2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = p.v - c;
    [r, g, b].map(|ch| ((ch + m) * 255.0).round().clamp(0.0, 255.0) as u8)
}

fn hue_bin(h: f64, bins: usize) -> usize {
    ((h / 360.0 * bins as f64) as usize).min(bins - 1)
}

/// Normalized circular histogram of the hues of chromatic pixels.
pub fn hue_histogram(image: &RgbImage, bins: usize) -> Result<Histogram> {
    if bins < 2 {
        return Err(Error::TooFewBins);
    }
    let counts = image
        .pixels()
        .par_chunks(image.width())
        .fold(
            || vec![0u64; bins],
            |mut acc, row| {
                for &px in row {
                    let p = rgb_to_hsv(px);
                    if p.is_chromatic() {
                        acc[hue_bin(p.h, bins)] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; bins],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::NoChromaticPixels);
    }
    Histogram::circular(counts.into_iter().map(|c| c as f64 / total as f64).collect())?.normalize()
}

/// Remaps the hue of `source` so that its hue distribution follows `target`.
/// Achromatic pixels are copied unchanged.
pub fn transfer_hue(source: &RgbImage, target: &RgbImage, bins: usize) -> Result<RgbImage> {
    let hs = hue_histogram(source, bins)?;
    let ht = hue_histogram(target, bins)?;
    let map = circular_transfer_map(&hs, &ht)?;
    let pixels: Vec<[u8; 3]> = source
        .pixels()
        .par_chunks(source.width())
        .flat_map_iter(|row| {
            row.iter().map(|&px| {
                let p = rgb_to_hsv(px);
                if !p.is_chromatic() {
                    return px;
                }
                let h = map.apply(p.h / 360.0) * 360.0;
                hsv_to_rgb(HsvPixel { h, ..p })
            })
        })
        .collect();
    RgbImage::new(source.width(), source.height(), pixels)
}

/// Adds `degrees` to the hue of every chromatic pixel.
pub fn rotate_hue(image: &RgbImage, degrees: f64) -> RgbImage {
    let pixels = image
        .pixels()
        .iter()
        .map(|&px| {
            let p = rgb_to_hsv(px);
            if p.is_chromatic() {
                hsv_to_rgb(HsvPixel { h: (p.h + degrees).rem_euclid(360.0), ..p })
            } else {
                px
            }
        })
        .collect();
    RgbImage::new(image.width(), image.height(), pixels).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversion_examples() {
        let red = rgb_to_hsv([255, 0, 0]);
        assert_eq!((red.h, red.s, red.v), (0.0, 1.0, 1.0));
        assert_eq!(rgb_to_hsv([128, 128, 128]).s, 0.0);
        let orange = rgb_to_hsv([255, 128, 0]);
        assert!((orange.h - 30.117_647_058_823_53).abs() < 1e-9);
    }

    #[test]
    fn round_trip_sampled() {
        for r in (0..=255).step_by(3) {
            for g in (0..=255).step_by(5) {
                for b in 0..=255u8 {
                    let px = [r as u8, g as u8, b];
                    assert_eq!(hsv_to_rgb(rgb_to_hsv(px)), px);
                }
            }
        }
    }

    #[test]
    fn histogram_examples() {
        let red = RgbImage::from_fn(4, 4, |_, _| [255, 0, 0]).unwrap();
        let h = hue_histogram(&red, 360).unwrap();
        assert_eq!(h.weights()[0], 1.0);
        let two = RgbImage::from_fn(4, 2, |x, _| if x < 2 { [255, 0, 0] } else { [0, 255, 255] }).unwrap();
        let h = hue_histogram(&two, 360).unwrap();
        assert_eq!((h.weights()[0], h.weights()[180]), (0.5, 0.5));
        let gray = RgbImage::from_fn(2, 2, |_, _| [9, 9, 9]).unwrap();
        assert!(matches!(hue_histogram(&gray, 360), Err(Error::NoChromaticPixels)));
    }

    #[test]
    fn achromatic_pass_through() {
        let img = RgbImage::from_fn(4, 1, |x, _| if x == 0 { [40, 40, 40] } else { [200, 30, 10] }).unwrap();
        let target = RgbImage::from_fn(2, 1, |_, _| [10, 30, 200]).unwrap();
        let out = transfer_hue(&img, &target, 36).unwrap();
        assert_eq!(out.get(0, 0), [40, 40, 40]);
    }
}
