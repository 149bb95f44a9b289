use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{min_max_normalize, quantize, CellIndex, GridMap};
use crate::error::{Error, Result};

/// Inclusive rectangle of cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRect {
    pub min: [usize; 2],
    pub max: [usize; 2],
}

impl CellRect {
    pub fn contains(&self, cell: CellIndex) -> bool {
        (self.min[0]..=self.max[0]).contains(&cell.col) && (self.min[1]..=self.max[1]).contains(&cell.row)
    }
}

fn default_cell_size() -> f64 {
    1.0
}

fn default_exponent() -> f64 {
    2.0
}

/// Parameters for the synthetic radio-map generator.
///
/// Received power falls off with log-distance from the nearest access point:
/// `-10 · exponent · log10(1 + d / cell_size)` dB, then the usual min-max
/// normalization and quantization apply. `random_obstacles` extra rectangles
/// are drawn from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
    #[serde(default)]
    pub origin: [f64; 2],
    /// World coordinates of the access points.
    pub access_points: Vec<[f64; 2]>,
    #[serde(default)]
    pub obstacles: Vec<CellRect>,
    #[serde(default)]
    pub random_obstacles: usize,
    #[serde(default = "default_exponent")]
    pub path_loss_exponent: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(width: usize, height: usize, access_points: Vec<[f64; 2]>) -> Self {
        Self {
            width,
            height,
            cell_size: 1.0,
            origin: [0.0, 0.0],
            access_points,
            obstacles: Vec::new(),
            random_obstacles: 0,
            path_loss_exponent: 2.0,
            seed: 0,
        }
    }
}

pub fn synthesize_map(spec: &SyntheticSpec) -> Result<GridMap> {
    if spec.width < 2 || spec.height < 2 {
        return Err(Error::Input(format!(
            "synthetic map must be at least 2x2, got {}x{}",
            spec.width, spec.height
        )));
    }
    if spec.access_points.is_empty() {
        return Err(Error::Input("synthetic map needs at least one access point".into()));
    }
    if !(spec.path_loss_exponent.is_finite() && spec.path_loss_exponent > 0.0) {
        return Err(Error::Input("path loss exponent must be positive".into()));
    }
    let (w, h) = (spec.width, spec.height);
    let mut rects = spec.obstacles.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..spec.random_obstacles {
        let c0 = rng.random_range(0..w);
        let r0 = rng.random_range(0..h);
        let cw = rng.random_range(1..=(w / 5).max(1));
        let rh = rng.random_range(1..=(h / 5).max(1));
        rects.push(CellRect {
            min: [c0, r0],
            max: [(c0 + cw - 1).min(w - 1), (r0 + rh - 1).min(h - 1)],
        });
    }

    let n = w * h;
    let mut obstacles = vec![false; n];
    for (i, blocked) in obstacles.iter_mut().enumerate() {
        let cell = CellIndex::new(i % w, i / w);
        *blocked = rects.iter().any(|r| r.contains(cell));
    }

    let scratch = GridMap::from_tenths(w, h, spec.cell_size, spec.origin, vec![0; n], obstacles.clone())?;
    let power_db: Vec<f64> = scratch
        .cells()
        .map(|cell| {
            let [x, y] = scratch.cell_center(cell);
            let d = spec
                .access_points
                .iter()
                .map(|ap| (ap[0] - x).hypot(ap[1] - y))
                .fold(f64::INFINITY, f64::min);
            -10.0 * spec.path_loss_exponent * (1.0 + d / spec.cell_size).log10()
        })
        .collect();

    let free: Vec<usize> = (0..n).filter(|&i| !obstacles[i]).collect();
    let free_power: Vec<f64> = free.iter().map(|&i| power_db[i]).collect();
    let mut tenths = vec![0u8; n];
    for (&i, g) in free.iter().zip(min_max_normalize(&free_power)) {
        tenths[i] = quantize(g);
    }
    GridMap::from_tenths(w, h, spec.cell_size, spec.origin, tenths, obstacles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_access_point_peaks_in_center() {
        let map = synthesize_map(&SyntheticSpec::new(5, 5, vec![[2.0, 2.0]])).unwrap();
        assert_eq!(map.gain(CellIndex::new(2, 2)), 1.0);
        let min = map.cells().map(|c| map.gain_tenths(c)).min().unwrap();
        for corner in [(0, 0), (4, 0), (0, 4), (4, 4)] {
            assert_eq!(map.gain_tenths(CellIndex::new(corner.0, corner.1)), min);
        }
        assert_eq!(min, 0);
    }

    #[test]
    fn same_seed_same_map() {
        let mut spec = SyntheticSpec::new(16, 12, vec![[3.0, 4.0], [12.0, 9.0]]);
        spec.random_obstacles = 4;
        spec.seed = 99;
        let a = synthesize_map(&spec).unwrap();
        let b = synthesize_map(&spec).unwrap();
        assert_eq!(a.gain_tenths_slice(), b.gain_tenths_slice());
        assert_eq!(a.obstacle_slice(), b.obstacle_slice());
    }

    #[test]
    fn gains_non_increasing_away_from_corner_ap() {
        let map = synthesize_map(&SyntheticSpec::new(20, 20, vec![[0.0, 0.0]])).unwrap();
        let row: Vec<u8> = (0..20).map(|c| map.gain_tenths(CellIndex::new(c, 0))).collect();
        assert!(row.windows(2).all(|w| w[0] >= w[1]), "{row:?}");
    }

    #[test]
    fn obstacle_rectangles_are_blocked() {
        let mut spec = SyntheticSpec::new(6, 6, vec![[0.0, 0.0]]);
        spec.obstacles.push(CellRect { min: [2, 2], max: [3, 4] });
        let map = synthesize_map(&spec).unwrap();
        assert_eq!(map.traversable_count(), 36 - 6);
        assert!(map.is_obstacle(CellIndex::new(3, 4)));
        assert_eq!(map.gain_tenths(CellIndex::new(3, 4)), 0);
    }

    #[test]
    fn rejects_tiny_maps() {
        assert!(synthesize_map(&SyntheticSpec::new(1, 5, vec![[0.0, 0.0]])).is_err());
    }
}
