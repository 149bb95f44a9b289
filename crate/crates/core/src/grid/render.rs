//! Heatmap rasterization.
//!
//! Every traversable cell is painted with one of ten fixed band colors (one
//! per gain decile, 0.9 and 1.0 share the top band), obstacles are white and
//! cell borders are black. A rendered PNG decodes back into bands exactly.

use image::{Rgb, RgbImage};

use super::{CellIndex, GridMap};
use crate::error::{Error, Result};

/// Band colors from gain 0.0 (red) through orange and yellow to blue (0.9+).
pub const BAND_COLORS: [[u8; 3]; 10] = [
    [215, 25, 28],
    [232, 85, 30],
    [244, 140, 40],
    [253, 190, 90],
    [250, 230, 140],
    [200, 230, 160],
    [140, 205, 170],
    [90, 170, 200],
    [50, 120, 200],
    [20, 60, 170],
];

pub const OBSTACLE_COLOR: [u8; 3] = [255, 255, 255];
pub const GRID_LINE_COLOR: [u8; 3] = [0, 0, 0];

/// Band index (0..=9) of a gain given in tenths.
pub fn gain_band(tenths: u8) -> u8 {
    tenths.min(9)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorClass {
    Band(u8),
    Obstacle,
    GridLine,
    Other,
}

pub fn classify_color(rgb: [u8; 3]) -> ColorClass {
    if rgb == OBSTACLE_COLOR {
        return ColorClass::Obstacle;
    }
    if rgb == GRID_LINE_COLOR {
        return ColorClass::GridLine;
    }
    BAND_COLORS
        .iter()
        .position(|c| *c == rgb)
        .map_or(ColorClass::Other, |b| ColorClass::Band(b as u8))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderOptions {
    pub px_per_cell: u32,
    pub grid_lines: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            px_per_cell: 12,
            grid_lines: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathStyle {
    pub color: [u8; 3],
    pub width: u32,
    /// Diagonal shift in pixels applied to the whole path.
    pub offset: i32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Overlay {
    pub waypoints: Vec<CellIndex>,
    pub style: PathStyle,
}

fn cell_origin_px(map: &GridMap, cell: CellIndex, ppc: u32) -> (u32, u32) {
    let x = cell.col as u32 * ppc;
    let y = (map.height() - 1 - cell.row) as u32 * ppc;
    (x, y)
}

fn cell_center_px(map: &GridMap, cell: CellIndex, ppc: u32) -> (i64, i64) {
    let (x, y) = cell_origin_px(map, cell, ppc);
    (i64::from(x + ppc / 2), i64::from(y + ppc / 2))
}

/// Paints the map (north up) and draws each overlay as a polyline through
/// the cell centers of its waypoints.
pub fn render_heatmap(map: &GridMap, overlays: &[Overlay], opts: &RenderOptions) -> Result<RgbImage> {
    if map.is_empty() {
        return Err(Error::Geometry("cannot render an empty map".into()));
    }
    if opts.px_per_cell < 3 {
        return Err(Error::Input("px_per_cell must be at least 3".into()));
    }
    for ov in overlays {
        if let Some(bad) = ov.waypoints.iter().find(|c| !map.contains(**c)) {
            return Err(Error::Input(format!("overlay waypoint {bad} lies outside the map")));
        }
    }
    let ppc = opts.px_per_cell;
    let mut img = RgbImage::new(map.width() as u32 * ppc, map.height() as u32 * ppc);
    for cell in map.cells() {
        let color = if map.is_obstacle(cell) {
            OBSTACLE_COLOR
        } else {
            BAND_COLORS[gain_band(map.gain_tenths(cell)) as usize]
        };
        let (x0, y0) = cell_origin_px(map, cell, ppc);
        for dy in 0..ppc {
            for dx in 0..ppc {
                let border = opts.grid_lines && (dx == 0 || dy == 0);
                let px = if border { GRID_LINE_COLOR } else { color };
                img.put_pixel(x0 + dx, y0 + dy, Rgb(px));
            }
        }
    }
    for ov in overlays {
        draw_polyline(map, &mut img, &ov.waypoints, ov.style, ppc);
    }
    Ok(img)
}

fn draw_polyline(map: &GridMap, img: &mut RgbImage, waypoints: &[CellIndex], style: PathStyle, ppc: u32) {
    let off = i64::from(style.offset);
    let points: Vec<(i64, i64)> = waypoints
        .iter()
        .map(|&c| {
            let (x, y) = cell_center_px(map, c, ppc);
            (x + off, y + off)
        })
        .collect();
    if let [only] = points.as_slice() {
        stamp(img, *only, style);
    }
    for seg in points.windows(2) {
        let (mut x0, mut y0) = seg[0];
        let (x1, y1) = seg[1];
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            stamp(img, (x0, y0), style);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }
}

fn stamp(img: &mut RgbImage, (cx, cy): (i64, i64), style: PathStyle) {
    let half = i64::from(style.width.max(1)) / 2;
    let lo = -half;
    let hi = i64::from(style.width.max(1)) - half;
    for y in cy + lo..cy + hi {
        for x in cx + lo..cx + hi {
            if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
                img.put_pixel(x as u32, y as u32, Rgb(style.color));
            }
        }
    }
}

/// Reads back the class of each cell from its center pixel, row-major.
pub fn decode_bands(img: &RgbImage, width: usize, height: usize, opts: &RenderOptions) -> Result<Vec<ColorClass>> {
    let ppc = opts.px_per_cell;
    if img.width() != width as u32 * ppc || img.height() != height as u32 * ppc {
        return Err(Error::Geometry(format!(
            "image is {}x{} px, expected {}x{}",
            img.width(),
            img.height(),
            width as u32 * ppc,
            height as u32 * ppc
        )));
    }
    let mut out = Vec::with_capacity(width * height);
    for row in 0..height {
        for col in 0..width {
            let x = col as u32 * ppc + ppc / 2;
            let y = (height - 1 - row) as u32 * ppc + ppc / 2;
            out.push(classify_color(img.get_pixel(x, y).0));
        }
    }
    Ok(out)
}

/// Lossless PNG bytes of a rendered image.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    img.write_with_encoder(image::codecs::png::PngEncoder::new(&mut out))?;
    Ok(out)
}

/// Reads back a PNG written by [`encode_png`].
pub fn decode_png(bytes: &[u8]) -> Result<RgbImage> {
    Ok(image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?.to_rgb8())
}

// 3x5 glyphs, one row per u8 (low three bits, MSB on the left).
fn glyph(ch: char) -> [u8; 5] {
    match ch.to_ascii_uppercase() {
        'A' => [0b010, 0b101, 0b111, 0b101, 0b101],
        'B' => [0b110, 0b101, 0b110, 0b101, 0b110],
        'C' => [0b011, 0b100, 0b100, 0b100, 0b011],
        'D' => [0b110, 0b101, 0b101, 0b101, 0b110],
        'E' => [0b111, 0b100, 0b110, 0b100, 0b111],
        'F' => [0b111, 0b100, 0b110, 0b100, 0b100],
        'G' => [0b011, 0b100, 0b101, 0b101, 0b011],
        'H' => [0b101, 0b101, 0b111, 0b101, 0b101],
        'I' => [0b111, 0b010, 0b010, 0b010, 0b111],
        'J' => [0b001, 0b001, 0b001, 0b101, 0b010],
        'K' => [0b101, 0b101, 0b110, 0b101, 0b101],
        'L' => [0b100, 0b100, 0b100, 0b100, 0b111],
        'M' => [0b101, 0b111, 0b111, 0b101, 0b101],
        'N' => [0b110, 0b101, 0b101, 0b101, 0b101],
        'O' => [0b010, 0b101, 0b101, 0b101, 0b010],
        'P' => [0b110, 0b101, 0b110, 0b100, 0b100],
        'Q' => [0b010, 0b101, 0b101, 0b110, 0b011],
        'R' => [0b110, 0b101, 0b110, 0b101, 0b101],
        'S' => [0b011, 0b100, 0b010, 0b001, 0b110],
        'T' => [0b111, 0b010, 0b010, 0b010, 0b010],
        'U' => [0b101, 0b101, 0b101, 0b101, 0b111],
        'V' => [0b101, 0b101, 0b101, 0b101, 0b010],
        'W' => [0b101, 0b101, 0b111, 0b111, 0b101],
        'X' => [0b101, 0b101, 0b010, 0b101, 0b101],
        'Y' => [0b101, 0b101, 0b010, 0b010, 0b010],
        'Z' => [0b111, 0b001, 0b010, 0b100, 0b111],
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b110, 0b001, 0b010, 0b100, 0b111],
        '3' => [0b110, 0b001, 0b010, 0b001, 0b110],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b110, 0b001, 0b110],
        '6' => [0b011, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b010, 0b010, 0b010],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b110],
        '-' => [0b000, 0b000, 0b111, 0b000, 0b000],
        '*' => [0b101, 0b010, 0b111, 0b010, 0b101],
        '.' => [0b000, 0b000, 0b000, 0b000, 0b010],
        '=' => [0b000, 0b111, 0b000, 0b111, 0b000],
        _ => [0; 5],
    }
}

/// Draws `text` with the built-in 3x5 font, top-left at `(x, y)`.
pub(crate) fn draw_text(img: &mut RgbImage, x: u32, y: u32, text: &str, scale: u32, color: [u8; 3]) {
    let scale = scale.max(1);
    for (i, ch) in text.chars().enumerate() {
        let gx = x + i as u32 * 4 * scale;
        for (row, bits) in glyph(ch).iter().enumerate() {
            for col in 0..3u32 {
                if bits & (0b100 >> col) == 0 {
                    continue;
                }
                for sy in 0..scale {
                    for sx in 0..scale {
                        let px = gx + col * scale + sx;
                        let py = y + row as u32 * scale + sy;
                        if px < img.width() && py < img.height() {
                            img.put_pixel(px, py, Rgb(color));
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn text_width(text: &str, scale: u32) -> u32 {
    text.chars().count() as u32 * 4 * scale.max(1)
}
