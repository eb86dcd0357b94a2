//! Color-fidelity scoring of single-object images on a white background.
//!
//! The pipeline is: border flood fill to find the background, erosion of the
//! remaining object mask, K-means over the object pixels in CIELab, removal
//! of small clusters, and selection of the cluster closest to the target
//! color under each metric.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caption::RgbColor;
use crate::colorlab::{ab_distance, ciede2000, srgb_to_lab, ColorDifference, LabColor};
use crate::image::Image;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PaletteError {
    #[error("image has no foreground pixels")]
    EmptyForeground,
    #[error("k-means needs at least one pixel")]
    NoPixels,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("every cluster fell below the minimum fraction {0}")]
    AllFiltered(f64),
    #[error("palette has no clusters")]
    EmptyPalette,
    #[error("no usable cases to aggregate")]
    NoUsableCases,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForegroundMask {
    width: u32,
    height: u32,
    mask: Vec<bool>,
}

impl ForegroundMask {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.mask[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Colors of the foreground pixels in row-major order.
    pub fn select<'a>(&'a self, img: &'a Image) -> impl Iterator<Item = RgbColor> + 'a {
        img.pixels().iter().zip(&self.mask).filter(|(_, &m)| m).map(|(c, _)| *c)
    }
}

pub const DEFAULT_WHITE_THRESHOLD: u8 = 245;
pub const DEFAULT_EROSION: u32 = 1;
pub const DEFAULT_MIN_FRACTION: f64 = 0.05;

/// Background is every pixel reachable (4-connected) from the image border
/// through near-white pixels, i.e. pixels whose channels are all at least
/// `white_threshold`. The complement is eroded `erosion` times with a
/// 4-neighbourhood; pixels outside the image count as background.
pub fn extract_foreground(img: &Image, white_threshold: u8, erosion: u32) -> Result<ForegroundMask, PaletteError> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let is_white = |c: &RgbColor| c.channels().iter().all(|&v| v >= white_threshold);
    let white: Vec<bool> = img.pixels().iter().map(is_white).collect();

    let mut background = vec![false; w * h];
    let mut queue = VecDeque::new();
    let border = (0..w).flat_map(|x| [(x, 0), (x, h - 1)]).chain((0..h).flat_map(|y| [(0, y), (w - 1, y)]));
    for (x, y) in border {
        let i = y * w + x;
        if white[i] && !background[i] {
            background[i] = true;
            queue.push_back((x, y));
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for (nx, ny) in neighbours(x, y, w, h) {
            let i = ny * w + nx;
            if white[i] && !background[i] {
                background[i] = true;
                queue.push_back((nx, ny));
            }
        }
    }

    let mut mask: Vec<bool> = background.iter().map(|b| !b).collect();
    for _ in 0..erosion {
        let prev = mask.clone();
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if !prev[i] {
                    continue;
                }
                let on_edge = x == 0 || y == 0 || x == w - 1 || y == h - 1;
                if on_edge || neighbours(x, y, w, h).any(|(nx, ny)| !prev[ny * w + nx]) {
                    mask[i] = false;
                }
            }
        }
    }

    let fg = ForegroundMask { width: img.width(), height: img.height(), mask };
    if fg.count() == 0 {
        return Err(PaletteError::EmptyForeground);
    }
    Ok(fg)
}

fn neighbours(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    let left = (x > 0).then(|| (x - 1, y));
    let right = (x + 1 < w).then(|| (x + 1, y));
    let up = (y > 0).then(|| (x, y - 1));
    let down = (y + 1 < h).then(|| (x, y + 1));
    [left, right, up, down].into_iter().flatten()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: LabColor,
    /// Fraction of foreground pixels assigned to this cluster.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaletteResult {
    pub clusters: Vec<Cluster>,
    pub k: usize,
    pub total_foreground_pixels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Convergence threshold on the largest center movement (Lab units).
    pub tol: f64,
}

impl KmeansConfig {
    pub fn new(k: usize) -> Self {
        Self { k, seed: 0, max_iter: 100, tol: 1e-4 }
    }
}

/// A K-means run with its per-iteration inertia (sum of squared Lab
/// distances to the assigned centers), recorded after every assignment step.
#[derive(Debug, Clone, PartialEq)]
pub struct KmeansFit {
    pub palette: PaletteResult,
    pub inertia: Vec<f64>,
    pub iterations: usize,
}

pub fn kmeans_lab(pixels: &[LabColor], cfg: &KmeansConfig) -> Result<PaletteResult, PaletteError> {
    Ok(kmeans_lab_fit(pixels, cfg)?.palette)
}

pub fn kmeans_lab_fit(pixels: &[LabColor], cfg: &KmeansConfig) -> Result<KmeansFit, PaletteError> {
    let points = WeightedPoints::from_labs(pixels.iter().copied());
    points.fit(cfg)
}

/// k-means++ seeding over the raw pixel list.
pub fn kmeans_plus_plus(pixels: &[LabColor], k: usize, seed: u64) -> Result<Vec<LabColor>, PaletteError> {
    let points = WeightedPoints::from_labs(pixels.iter().copied());
    points.check(k)?;
    Ok(points.seed_centers(k, seed))
}

/// Distinct colors with multiplicities, in order of first occurrence.
///
/// Lloyd iterations on deduplicated points are identical to iterations on
/// the raw list: equal points always share an assignment.
struct WeightedPoints {
    labs: Vec<LabColor>,
    counts: Vec<u64>,
    total: u64,
}

impl WeightedPoints {
    fn from_labs(iter: impl Iterator<Item = LabColor>) -> Self {
        let mut index: HashMap<[u64; 3], usize> = HashMap::new();
        let mut labs = Vec::new();
        let mut counts = Vec::new();
        let mut total = 0;
        for lab in iter {
            let key = [lab.l.to_bits(), lab.a.to_bits(), lab.b.to_bits()];
            let i = *index.entry(key).or_insert_with(|| {
                labs.push(lab);
                counts.push(0);
                labs.len() - 1
            });
            counts[i] += 1;
            total += 1;
        }
        Self { labs, counts, total }
    }

    fn from_rgbs(iter: impl Iterator<Item = RgbColor>) -> Self {
        let mut index: HashMap<RgbColor, usize> = HashMap::new();
        let mut labs = Vec::new();
        let mut counts = Vec::new();
        let mut total = 0;
        for c in iter {
            let i = *index.entry(c).or_insert_with(|| {
                labs.push(srgb_to_lab(c));
                counts.push(0);
                labs.len() - 1
            });
            counts[i] += 1;
            total += 1;
        }
        Self { labs, counts, total }
    }

    fn check(&self, k: usize) -> Result<(), PaletteError> {
        if self.total == 0 {
            return Err(PaletteError::NoPixels);
        }
        if k == 0 {
            return Err(PaletteError::ZeroK);
        }
        Ok(())
    }

    fn seed_centers(&self, k: usize, seed: u64) -> Vec<LabColor> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut centers = Vec::with_capacity(k);
        let first = sample_index(&mut rng, self.counts.iter().map(|&c| c as f64));
        centers.push(self.labs[first.unwrap_or(0)]);
        let mut nearest: Vec<f64> = self.labs.iter().map(|p| p.squared_distance(&centers[0])).collect();
        while centers.len() < k {
            let weights = self.counts.iter().zip(&nearest).map(|(&c, &d)| c as f64 * d);
            // All remaining mass sits on existing centers: duplicate the first.
            let next = sample_index(&mut rng, weights).map_or(centers[0], |i| self.labs[i]);
            for (d, p) in nearest.iter_mut().zip(&self.labs) {
                *d = d.min(p.squared_distance(&next));
            }
            centers.push(next);
        }
        centers
    }

    fn assign(&self, centers: &[LabColor], labels: &mut [usize], dists: &mut [f64]) -> f64 {
        let mut inertia = 0.0;
        for (i, p) in self.labs.iter().enumerate() {
            let (best, d) = nearest_center(p, centers);
            labels[i] = best;
            dists[i] = d;
            inertia += self.counts[i] as f64 * d;
        }
        inertia
    }

    fn fit(&self, cfg: &KmeansConfig) -> Result<KmeansFit, PaletteError> {
        self.check(cfg.k)?;
        let centers = self.seed_centers(cfg.k, cfg.seed);
        Ok(self.lloyd(centers, cfg.max_iter, cfg.tol))
    }

    fn lloyd(&self, mut centers: Vec<LabColor>, max_iter: usize, tol: f64) -> KmeansFit {
        let k = centers.len();
        let n = self.labs.len();
        let mut labels = vec![0; n];
        let mut dists = vec![0.0; n];
        let mut inertia = Vec::new();
        let mut iterations = 0;

        while iterations < max_iter {
            inertia.push(self.assign(&centers, &mut labels, &mut dists));
            iterations += 1;

            let mut sums = vec![[0.0f64; 3]; k];
            let mut mass = vec![0u64; k];
            // A member index per cluster, or usize::MAX once it has two distinct points.
            let mut only = vec![None::<usize>; k];
            for i in 0..n {
                only[labels[i]] = match only[labels[i]] {
                    None => Some(i),
                    Some(_) => Some(usize::MAX),
                };
                let c = self.counts[i] as f64;
                let s = &mut sums[labels[i]];
                s[0] += c * self.labs[i].l;
                s[1] += c * self.labs[i].a;
                s[2] += c * self.labs[i].b;
                mass[labels[i]] += self.counts[i];
            }
            let mut next = centers.clone();
            for j in 0..k {
                match only[j] {
                    // Exact, where summing copies would drift by an ulp.
                    Some(i) if i != usize::MAX => next[j] = self.labs[i],
                    Some(_) => {
                        let m = mass[j] as f64;
                        next[j] = LabColor::new(sums[j][0] / m, sums[j][1] / m, sums[j][2] / m);
                    }
                    None => {}
                }
            }
            // Empty clusters move onto the point farthest from its own center.
            let mut taken = vec![false; n];
            for j in (0..k).filter(|&j| mass[j] == 0) {
                let far = (0..n)
                    .filter(|&i| !taken[i] && dists[i] > 0.0)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
                if let Some(i) = far {
                    taken[i] = true;
                    next[j] = self.labs[i];
                }
            }

            let shift = centers
                .iter()
                .zip(&next)
                .map(|(a, b)| a.squared_distance(b).sqrt())
                .fold(0.0, f64::max);
            centers = next;
            if shift < tol {
                break;
            }
        }

        inertia.push(self.assign(&centers, &mut labels, &mut dists));
        let mut mass = vec![0u64; k];
        for i in 0..n {
            mass[labels[i]] += self.counts[i];
        }
        let total = self.total as f64;
        let clusters = centers
            .iter()
            .zip(&mass)
            .map(|(&center, &m)| Cluster { center, weight: m as f64 / total })
            .collect();
        KmeansFit {
            palette: PaletteResult { clusters, k, total_foreground_pixels: self.total as usize },
            inertia,
            iterations,
        }
    }
}

/// Nearest center by squared Lab distance; ties go to the lower index.
fn nearest_center(p: &LabColor, centers: &[LabColor]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = p.squared_distance(c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Draws an index with probability proportional to its weight; `None` when
/// the total weight is zero.
fn sample_index(rng: &mut impl Rng, weights: impl Iterator<Item = f64> + Clone) -> Option<usize> {
    let total: f64 = weights.clone().sum();
    if total <= 0.0 {
        return None;
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if target < acc {
            return Some(i);
        }
    }
    last
}

/// Drops clusters whose weight is below `min_fraction`, keeping order.
pub fn filter_clusters(p: &PaletteResult, min_fraction: f64) -> Result<PaletteResult, PaletteError> {
    let clusters: Vec<Cluster> = p.clusters.iter().copied().filter(|c| c.weight >= min_fraction).collect();
    if clusters.is_empty() {
        return Err(PaletteError::AllFiltered(min_fraction));
    }
    Ok(PaletteResult { clusters, ..p.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorMetric {
    DeltaE00,
    AbDistance,
}

impl ColorMetric {
    pub fn distance(self, p: &LabColor, q: &LabColor) -> f64 {
        match self {
            ColorMetric::DeltaE00 => ciede2000(p, q),
            ColorMetric::AbDistance => ab_distance(p, q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub index: usize,
    pub cluster: Cluster,
    pub distance: f64,
}

/// Cluster closest to `target` under `metric`. Ties prefer the heavier
/// cluster, then the lower index.
pub fn nearest_cluster(p: &PaletteResult, target: RgbColor, metric: ColorMetric) -> Result<Selection, PaletteError> {
    let t = srgb_to_lab(target);
    p.clusters
        .iter()
        .enumerate()
        .map(|(index, c)| Selection { index, cluster: *c, distance: metric.distance(&c.center, &t) })
        .min_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then(b.cluster.weight.total_cmp(&a.cluster.weight))
                .then(a.index.cmp(&b.index))
        })
        .ok_or(PaletteError::EmptyPalette)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorEvalConfig {
    pub white_threshold: u8,
    pub erosion: u32,
    pub min_fraction: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ColorEvalConfig {
    fn default() -> Self {
        Self {
            white_threshold: DEFAULT_WHITE_THRESHOLD,
            erosion: DEFAULT_EROSION,
            min_fraction: DEFAULT_MIN_FRACTION,
            seed: 0,
            max_iter: 100,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorCaseResult {
    pub case_id: String,
    pub target: RgbColor,
    pub k: usize,
    pub by_delta_e00: Selection,
    pub by_ab_distance: Selection,
    pub difference: ColorDifference,
}

/// Scores one image against its target color with `k` clusters.
pub fn eval_color_case(
    case_id: &str,
    img: &Image,
    target: RgbColor,
    k: usize,
    cfg: &ColorEvalConfig,
) -> Result<ColorCaseResult, PaletteError> {
    let mask = extract_foreground(img, cfg.white_threshold, cfg.erosion)?;
    let points = WeightedPoints::from_rgbs(mask.select(img));
    let kcfg = KmeansConfig { k, seed: cfg.seed, max_iter: cfg.max_iter, tol: cfg.tol };
    let palette = filter_clusters(&points.fit(&kcfg)?.palette, cfg.min_fraction)?;
    let by_delta_e00 = nearest_cluster(&palette, target, ColorMetric::DeltaE00)?;
    let by_ab_distance = nearest_cluster(&palette, target, ColorMetric::AbDistance)?;
    Ok(ColorCaseResult {
        case_id: case_id.to_string(),
        target,
        k,
        difference: ColorDifference {
            delta_e00: by_delta_e00.distance,
            ab_distance: by_ab_distance.distance,
        },
        by_delta_e00,
        by_ab_distance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub p90: f64,
}

impl Summary {
    /// Summary of a non-empty sample. The p-th percentile sits at 1-based
    /// rank `1 + p(n−1)/100`, interpolated linearly between neighbours.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        Some(Self { mean, median: percentile(&sorted, 50.0), p90: percentile(&sorted, 90.0) })
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorStats {
    pub ab_distance: Summary,
    pub delta_e00: Summary,
    pub cases: usize,
}

pub fn aggregate_color(results: &[ColorCaseResult]) -> Result<ColorStats, PaletteError> {
    let ab: Vec<f64> = results.iter().map(|r| r.difference.ab_distance).collect();
    let de: Vec<f64> = results.iter().map(|r| r.difference.delta_e00).collect();
    Ok(ColorStats {
        ab_distance: Summary::of(&ab).ok_or(PaletteError::NoUsableCases)?,
        delta_e00: Summary::of(&de).ok_or(PaletteError::NoUsableCases)?,
        cases: results.len(),
    })
}
