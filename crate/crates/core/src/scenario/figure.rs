use std::path::Path;

use image::{Rgb, RgbImage};

use crate::error::{Error, Result};
use crate::grid::render::{draw_text, text_width};
use crate::grid::{encode_png, render_heatmap, CellIndex, GridMap, Overlay, PathStyle, RenderOptions};
use crate::io::write_atomic;

/// One labelled path on a figure.
#[derive(Clone, Debug, PartialEq)]
pub struct FigureSeries {
    pub label: String,
    pub waypoints: Vec<CellIndex>,
}

const STYLES: [(&str, PathStyle); 5] = [
    ("A*", PathStyle { color: [255, 0, 255], width: 2, offset: -3 }),
    ("N-WA*", PathStyle { color: [0, 150, 0], width: 2, offset: -1 }),
    ("DP-WA*", PathStyle { color: [40, 40, 40], width: 3, offset: 1 }),
    ("SCoTT", PathStyle { color: [0, 230, 230], width: 2, offset: 3 }),
    ("SCoTT-DP-WA*", PathStyle { color: [150, 75, 0], width: 2, offset: 5 }),
];

const LEGEND_SCALE: u32 = 2;
const LEGEND_ROW: u32 = 7 * LEGEND_SCALE + 6;
const SWATCH: u32 = 24;

/// Overlay style of an algorithm, looked up by its table label.
pub fn algorithm_style(label: &str) -> Result<PathStyle> {
    STYLES
        .iter()
        .find(|(l, _)| *l == label)
        .map(|(_, s)| *s)
        .ok_or_else(|| Error::UnknownStyle(label.to_owned()))
}

/// Heatmap with one overlay per series and a legend strip underneath.
pub fn render_figure(map: &GridMap, series: &[FigureSeries]) -> Result<RgbImage> {
    let opts = RenderOptions::default();
    let overlays = series
        .iter()
        .map(|s| Ok(Overlay { waypoints: s.waypoints.clone(), style: algorithm_style(&s.label)? }))
        .collect::<Result<Vec<_>>>()?;
    let heat = render_heatmap(map, &overlays, &opts)?;
    let legend_w = series
        .iter()
        .map(|s| SWATCH + 12 + text_width(&s.label, LEGEND_SCALE))
        .max()
        .unwrap_or(0);
    let width = heat.width().max(legend_w + 8);
    let height = heat.height() + 4 + LEGEND_ROW * series.len() as u32;
    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    image::imageops::replace(&mut img, &heat, 0, 0);
    for (i, s) in series.iter().enumerate() {
        let style = algorithm_style(&s.label)?;
        let y = heat.height() + 4 + i as u32 * LEGEND_ROW;
        let mid = y + LEGEND_ROW / 2;
        for x in 4..4 + SWATCH {
            for w in 0..style.width.max(2) {
                img.put_pixel(x, mid - 1 + w, Rgb(style.color));
            }
        }
        draw_text(&mut img, 4 + SWATCH + 8, y + 3, &s.label, LEGEND_SCALE, [0, 0, 0]);
    }
    Ok(img)
}

/// Writes the figure as PNG. Identical inputs give identical bytes.
pub fn emit_figure(map: &GridMap, series: &[FigureSeries], path: &Path) -> Result<()> {
    let png = encode_png(&render_figure(map, series)?)?;
    write_atomic(path, &png)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::Algorithm;

    fn map() -> GridMap {
        GridMap::from_tenths(8, 5, 1.0, [0.0, 0.0], (0..40).map(|i| (i % 11) as u8).collect(), vec![false; 40]).unwrap()
    }

    fn path() -> Vec<CellIndex> {
        (0..8).map(|c| CellIndex::new(c, 2)).collect()
    }

    #[test]
    fn every_algorithm_has_a_distinct_style() {
        let styles: Vec<PathStyle> = Algorithm::ALL.iter().map(|a| algorithm_style(a.label()).unwrap()).collect();
        for (i, a) in styles.iter().enumerate() {
            for b in &styles[i + 1..] {
                assert_ne!(a.color, b.color);
            }
            assert!(!crate::grid::BAND_COLORS.contains(&a.color));
        }
    }

    #[test]
    fn unknown_style_is_an_error() {
        let series = [FigureSeries { label: "Dijkstra".into(), waypoints: path() }];
        assert!(matches!(render_figure(&map(), &series), Err(Error::UnknownStyle(_))));
    }

    #[test]
    fn single_overlay_and_determinism() {
        let series = [FigureSeries { label: "A*".into(), waypoints: path() }];
        let img = render_figure(&map(), &series).unwrap();
        let magenta = img.pixels().filter(|p| p.0 == [255, 0, 255]).count();
        assert!(magenta > 0);
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
        emit_figure(&map(), &series, &a).unwrap();
        emit_figure(&map(), &series, &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn five_series_five_colors() {
        let series: Vec<FigureSeries> =
            Algorithm::ALL.iter().map(|a| FigureSeries { label: a.label().into(), waypoints: path() }).collect();
        let img = render_figure(&map(), &series).unwrap();
        for a in Algorithm::ALL {
            let c = algorithm_style(a.label()).unwrap().color;
            assert!(img.pixels().any(|p| p.0 == c), "{a} missing");
        }
    }
}
