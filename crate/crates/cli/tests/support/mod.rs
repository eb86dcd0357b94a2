#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use paracap_core::caption::{serialize_caption, CoordForm, ObjectSpec, StructuredCaption};
use paracap_core::{BoundingBox, RgbColor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn paracap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paracap")).args(args).output().expect("binary runs")
}

pub fn path_arg(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn read_json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

pub fn write(p: &Path, text: &str) {
    if let Some(d) = p.parent() {
        std::fs::create_dir_all(d).unwrap();
    }
    std::fs::write(p, text).unwrap();
}

/// Random box on the 1e-4 grid with sides in `[min, max]`.
pub fn random_box(rng: &mut ChaCha8Rng, min: f64, max: f64) -> BoundingBox {
    let q = |v: f64| (v * 10_000.0).round() / 10_000.0;
    let w = q(rng.gen_range(min..=max));
    let h = q(rng.gen_range(min..=max));
    let x0 = q(rng.gen_range(0.0..=1.0 - w));
    let y0 = q(rng.gen_range(0.0..=1.0 - h));
    BoundingBox::new(x0, y0, q(x0 + w).min(1.0), q(y0 + h).min(1.0)).unwrap()
}

/// Random color that foreground extraction will not treat as background.
pub fn random_target(rng: &mut ChaCha8Rng) -> RgbColor {
    loop {
        let c = RgbColor::new(rng.gen(), rng.gen(), rng.gen());
        if c.channels().iter().any(|&v| v < 245) {
            return c;
        }
    }
}

pub struct ColorCase {
    pub id: String,
    pub target: RgbColor,
}

/// Writes `n` single-object captions under `dir/captions`, renders them with
/// the CLI into `dir/images` and writes `dir/manifest.json`.
pub fn build_color_cases(dir: &Path, n: usize, seed: u64, size: u32) -> PathBuf {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let captions = dir.join("captions");
    let mut cases = Vec::new();
    for i in 0..n {
        let target = random_target(&mut rng);
        let b = random_box(&mut rng, 0.15, 0.8);
        let c = StructuredCaption {
            scene: format!("object {i} on white"),
            objects: vec![ObjectSpec::new("obj", "a block").with_box(b).with_colors(vec![target])],
            ..Default::default()
        };
        let id = format!("case{i:04}");
        write(&captions.join(format!("{id}.json")), &serialize_caption(&c, CoordForm::Unit));
        cases.push(ColorCase { id, target });
    }
    let images = dir.join("images");
    let (w, h) = (size.to_string(), size.to_string());
    let out = paracap(&["render", path_arg(&captions), "--out", path_arg(&images), "--width", &w, "--height", &h]);
    assert!(out.status.success(), "render failed: {}", stderr(&out));
    let manifest: Vec<serde_json::Value> = cases
        .iter()
        .map(|c| {
            serde_json::json!({
                "caseId": c.id,
                "imagePath": format!("images/{}.png", c.id),
                "target": c.target.channels(),
            })
        })
        .collect();
    let path = dir.join("manifest.json");
    write(&path, &serde_json::to_string_pretty(&manifest).unwrap());
    path
}

/// Reference preference counts (wins, losses, ties) per baseline.
pub const PREFERENCE_COUNTS: [(&str, u64, u64, u64); 3] =
    [("flux2", 42, 3, 15), ("nano-banana", 30, 16, 14), ("fibo", 35, 11, 14)];

pub fn preference_csv() -> String {
    let mut s = String::from("item_id,candidate,baseline,verdict\n");
    for (baseline, wins, losses, ties) in PREFERENCE_COUNTS {
        let verdicts = std::iter::repeat_n("candidate", wins as usize)
            .chain(std::iter::repeat_n("baseline", losses as usize))
            .chain(std::iter::repeat_n("tie", ties as usize));
        for (i, v) in verdicts.enumerate() {
            s.push_str(&format!("{baseline}-{i:03},ours,{baseline},{v}\n"));
        }
    }
    s
}
