use std::path::PathBuf;

use clap::Args;
use paracap_core::caption::parse_caption;
use paracap_core::image::Image;
use paracap_core::render::{overlay_boxes, rasterize, Background, RenderConfig, Shape};
use paracap_core::RgbColor;

use crate::config::{check, pick, FileConfig, ShapeArg};
use crate::error::CliError;
use crate::output::{json_inputs, read_text, stem};

fn parse_rgb(s: &str) -> Result<RgbColor, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [r, g, b] = parts.as_slice() else {
        return Err(format!("expected r,g,b, got {s:?}"));
    };
    let ch = |v: &str| v.parse::<u8>().map_err(|_| format!("channel {v:?} outside [0, 255]"));
    Ok(RgbColor::new(ch(r)?, ch(g)?, ch(b)?))
}

fn parse_background(s: &str) -> Result<Background, String> {
    match s {
        "white" => Ok(Background::White),
        "palette" => Ok(Background::Palette),
        _ => parse_rgb(s).map(Background::Color),
    }
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Caption file or directory of captions
    pub captions: PathBuf,
    /// Output directory; one `<stem>.png` per caption
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long, value_enum)]
    pub shape: Option<ShapeArg>,
    /// `white`, `palette` (first palette color) or `r,g,b`
    #[arg(long)]
    pub background: Option<String>,
}

pub fn render(args: &RenderArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let width = pick(args.width, cfg.width, 512);
    let height = pick(args.height, cfg.height, 512);
    check(width >= 1 && height >= 1, || "--width and --height must be ≥ 1".into())?;
    let shape = match pick(args.shape, cfg.shape, ShapeArg::Rectangle) {
        ShapeArg::Rectangle => Shape::Rectangle,
        ShapeArg::Ellipse => Shape::Ellipse,
    };
    let background = match args.background.as_deref().or(cfg.background.as_deref()) {
        Some(s) => parse_background(s).map_err(CliError::env)?,
        None => Background::White,
    };
    let rc = RenderConfig { width, height, shape, background };
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    for f in json_inputs(&args.captions)? {
        let c = parse_caption(&read_text(&f)?).map_err(|e| CliError::domain(format!("{}: {e}", f.display())))?;
        let img = rasterize(&c, &rc).map_err(|e| CliError::domain(format!("{}: {e}", f.display())))?;
        let out = args.out.join(format!("{}.png", stem(&f)));
        img.save_png(&out).map_err(|e| CliError::io(&out, e))?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct OverlayArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Caption whose boxes are drawn
    #[arg(long)]
    pub caption: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Outline width in pixels
    #[arg(long)]
    pub stroke: Option<u32>,
    /// Outline color `r,g,b`; defaults to each object's first color
    #[arg(long, value_parser = parse_rgb)]
    pub color: Option<RgbColor>,
}

pub fn overlay(args: &OverlayArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let stroke = pick(args.stroke, cfg.stroke, 3);
    let img = Image::load_png(&args.image).map_err(|e| CliError::io(&args.image, e))?;
    let c = parse_caption(&read_text(&args.caption)?)
        .map_err(|e| CliError::domain(format!("{}: {e}", args.caption.display())))?;
    let boxes: Vec<_> = c
        .objects
        .iter()
        .filter_map(|o| {
            let col = args.color.or_else(|| o.colors.first().copied()).unwrap_or(RgbColor::BLACK);
            o.bbox.map(|b| (b, col))
        })
        .collect();
    let out = overlay_boxes(&img, &boxes, stroke);
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    out.save_png(&args.out).map_err(|e| CliError::io(&args.out, e))
}
