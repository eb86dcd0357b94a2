//! sRGB → CIELab conversion (D65, 2° observer) and the two color-difference
//! metrics of the color-fidelity protocol: CIEDE2000 and the Euclidean
//! distance in the a–b chromaticity plane.

use serde::{Deserialize, Serialize};

use crate::caption::RgbColor;

/// Linear-light RGB, channels in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearRgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabColor {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl LabColor {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }

    pub fn squared_distance(&self, other: &LabColor) -> f64 {
        let (dl, da, db) = (self.l - other.l, self.a - other.a, self.b - other.b);
        dl * dl + da * da + db * db
    }
}

/// Both metrics for one color pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorDifference {
    pub delta_e00: f64,
    pub ab_distance: f64,
}

impl ColorDifference {
    pub fn between(p: &LabColor, q: &LabColor) -> Self {
        Self { delta_e00: ciede2000(p, q), ab_distance: ab_distance(p, q) }
    }
}

/// Linear RGB → XYZ for sRGB primaries under D65.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

/// D65 white as the image of RGB (1, 1, 1), so white lands on L = 100, a = b = 0.
const WHITE: [f64; 3] = [
    RGB_TO_XYZ[0][0] + RGB_TO_XYZ[0][1] + RGB_TO_XYZ[0][2],
    RGB_TO_XYZ[1][0] + RGB_TO_XYZ[1][1] + RGB_TO_XYZ[1][2],
    RGB_TO_XYZ[2][0] + RGB_TO_XYZ[2][1] + RGB_TO_XYZ[2][2],
];

const LAB_EPSILON: f64 = 216.0 / 24389.0;
const LAB_KAPPA: f64 = 24389.0 / 27.0;

/// Inverse sRGB companding of one 8-bit channel.
pub fn srgb_channel_to_linear(c: u8) -> f64 {
    let v = f64::from(c) / 255.0;
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

pub fn srgb_to_linear(c: RgbColor) -> LinearRgb {
    LinearRgb {
        r: srgb_channel_to_linear(c.r),
        g: srgb_channel_to_linear(c.g),
        b: srgb_channel_to_linear(c.b),
    }
}

pub fn linear_to_xyz(c: LinearRgb) -> [f64; 3] {
    let v = [c.r, c.g, c.b];
    RGB_TO_XYZ.map(|row| row[0] * v[0] + row[1] * v[1] + row[2] * v[2])
}

pub fn xyz_to_lab(xyz: [f64; 3]) -> LabColor {
    let f = |t: f64| {
        if t > LAB_EPSILON {
            t.cbrt()
        } else {
            (LAB_KAPPA * t + 16.0) / 116.0
        }
    };
    let fx = f(xyz[0] / WHITE[0]);
    let fy = f(xyz[1] / WHITE[1]);
    let fz = f(xyz[2] / WHITE[2]);
    LabColor { l: 116.0 * fy - 16.0, a: 500.0 * (fx - fy), b: 200.0 * (fy - fz) }
}

pub fn srgb_to_lab(c: RgbColor) -> LabColor {
    xyz_to_lab(linear_to_xyz(srgb_to_linear(c)))
}

/// Euclidean distance in the a–b plane; lightness is ignored.
pub fn ab_distance(p: &LabColor, q: &LabColor) -> f64 {
    (p.a - q.a).hypot(p.b - q.b)
}

/// CIEDE2000 color difference with kL = kC = kH = 1.
pub fn ciede2000(p: &LabColor, q: &LabColor) -> f64 {
    const POW25_7: f64 = 6_103_515_625.0; // 25^7

    let c1 = p.a.hypot(p.b);
    let c2 = q.a.hypot(q.b);
    let c_mean = (c1 + c2) / 2.0;
    let c_mean7 = c_mean.powi(7);
    let g = 0.5 * (1.0 - (c_mean7 / (c_mean7 + POW25_7)).sqrt());

    let a1p = (1.0 + g) * p.a;
    let a2p = (1.0 + g) * q.a;
    let c1p = a1p.hypot(p.b);
    let c2p = a2p.hypot(q.b);
    let h1p = hue_degrees(p.b, a1p);
    let h2p = hue_degrees(q.b, a2p);

    let dl = q.l - p.l;
    let dc = c2p - c1p;
    let chroma_product = c1p * c2p;
    let hue_gap = h2p - h1p;
    let dh = if chroma_product == 0.0 {
        0.0
    } else if hue_gap.abs() <= 180.0 {
        hue_gap
    } else if hue_gap > 180.0 {
        hue_gap - 360.0
    } else {
        hue_gap + 360.0
    };
    let dh_big = 2.0 * chroma_product.sqrt() * (dh.to_radians() / 2.0).sin();

    let l_mean = (p.l + q.l) / 2.0;
    let cp_mean = (c1p + c2p) / 2.0;
    let hue_sum = h1p + h2p;
    let h_mean = if chroma_product == 0.0 {
        hue_sum
    } else if hue_gap.abs() <= 180.0 {
        hue_sum / 2.0
    } else if hue_sum < 360.0 {
        (hue_sum + 360.0) / 2.0
    } else {
        (hue_sum - 360.0) / 2.0
    };

    let t = 1.0 - 0.17 * (h_mean - 30.0).to_radians().cos()
        + 0.24 * (2.0 * h_mean).to_radians().cos()
        + 0.32 * (3.0 * h_mean + 6.0).to_radians().cos()
        - 0.20 * (4.0 * h_mean - 63.0).to_radians().cos();
    let d_theta = 30.0 * (-((h_mean - 275.0) / 25.0).powi(2)).exp();
    let cp_mean7 = cp_mean.powi(7);
    let r_c = 2.0 * (cp_mean7 / (cp_mean7 + POW25_7)).sqrt();
    let l50 = (l_mean - 50.0).powi(2);
    let s_l = 1.0 + 0.015 * l50 / (20.0 + l50).sqrt();
    let s_c = 1.0 + 0.045 * cp_mean;
    let s_h = 1.0 + 0.015 * cp_mean * t;
    let r_t = -(2.0 * d_theta).to_radians().sin() * r_c;

    let tl = dl / s_l;
    let tc = dc / s_c;
    let th = dh_big / s_h;
    (tl * tl + tc * tc + th * th + r_t * tc * th).max(0.0).sqrt()
}

/// Hue angle in degrees within `[0, 360)`; 0 for the achromatic axis.
fn hue_degrees(b: f64, a: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        return 0.0;
    }
    let h = b.atan2(a).to_degrees();
    if h < 0.0 {
        h + 360.0
    } else {
        h
    }
}
