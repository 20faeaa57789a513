//! Error maps over principal fibre orientation on a level-1 icosphere.
//!
//! The icosahedron has vertices at the poles, so the ten edges of its
//! middle band are bisected by the equator and, after one subdivision,
//! every face lies in a single closed hemisphere: 40 faces above and 40
//! below. Directions are folded to `z > 0` before lookup, so only the
//! upper 40 tiles are ever occupied.

use super::EvalError;
use crate::linalg::{self, Vec3};
use crate::schemes::fold_axis;

pub const DEFAULT_FA_THRESHOLD: f64 = 0.6;

const EDGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    /// Counter-clockwise seen from outside.
    pub vertices: [Vec3; 3],
    /// Normalized vertex mean.
    pub centroid: Vec3,
}

impl Tile {
    fn contains(&self, p: &Vec3) -> bool {
        let [a, b, c] = &self.vertices;
        [(a, b), (b, c), (c, a)].iter().all(|(u, v)| linalg::dot(&linalg::cross(u, v), p) >= -EDGE_TOL)
    }
}

fn normalize(v: Vec3) -> Vec3 {
    linalg::scale(&v, 1.0 / linalg::norm(&v))
}

fn icosahedron() -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let z = 1.0 / 5f64.sqrt();
    let r = 2.0 / 5f64.sqrt();
    let mut v = vec![[0.0, 0.0, 1.0]];
    for k in 0..5 {
        let a = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
        v.push([r * a.cos(), r * a.sin(), z]);
    }
    for k in 0..5 {
        let a = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / 5.0;
        v.push([r * a.cos(), r * a.sin(), -z]);
    }
    v.push([0.0, 0.0, -1.0]);
    let mut f = Vec::with_capacity(20);
    for k in 0..5 {
        let (u0, u1) = (1 + k, 1 + (k + 1) % 5);
        let (l0, l1) = (6 + k, 6 + (k + 1) % 5);
        f.push([0, u0, u1]);
        f.push([u0, l0, u1]);
        f.push([u1, l0, l1]);
        f.push([11, l1, l0]);
    }
    (v, f)
}

/// The 80 faces of the once-subdivided icosahedron in a fixed order.
pub fn icosphere_tiles() -> Vec<Tile> {
    let (v, faces) = icosahedron();
    let mid = |a: usize, b: usize| normalize(linalg::add(&v[a], &v[b]));
    let mut tiles = Vec::with_capacity(80);
    for [a, b, c] in faces {
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        for tri in [[v[a], ab, ca], [ab, v[b], bc], [ca, bc, v[c]], [ab, bc, ca]] {
            let mut tri = tri;
            if linalg::dot(&linalg::cross(&tri[0], &tri[1]), &tri[2]) < 0.0 {
                tri.swap(1, 2);
            }
            let centroid = normalize(linalg::add(&linalg::add(&tri[0], &tri[1]), &tri[2]));
            tiles.push(Tile { vertices: tri, centroid });
        }
    }
    tiles
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileMap {
    pub tiles: Vec<Tile>,
    pub counts: Vec<usize>,
    /// Mean `|pred − gt|` of the members; NaN for empty tiles.
    pub mean_abs_err: Vec<f64>,
    pub fa_threshold: f64,
}

/// Index of the tile holding the folded direction. The first containing
/// tile wins, so points on shared edges are assigned deterministically.
pub fn tile_index(tiles: &[Tile], dir: &Vec3) -> usize {
    let p = fold_axis(&normalize(*dir));
    tiles.iter().position(|t| t.contains(&p)).unwrap_or_else(|| {
        // unreachable for unit input up to rounding; nearest centroid keeps lookup total
        let mut best = 0;
        for (i, t) in tiles.iter().enumerate() {
            if linalg::dot(&t.centroid, &p) > linalg::dot(&tiles[best].centroid, &p) {
                best = i;
            }
        }
        best
    })
}

/// Voxels with `gt > fa_threshold` are binned by the tile of their folded
/// principal direction.
pub fn sphere_tile_map(pred: &[f64], gt: &[f64], dirs: &[Vec3], fa_threshold: f64) -> Result<TileMap, EvalError> {
    if pred.len() != gt.len() {
        return Err(EvalError::LengthMismatch { left: pred.len(), right: gt.len() });
    }
    if dirs.len() != gt.len() {
        return Err(EvalError::LengthMismatch { left: dirs.len(), right: gt.len() });
    }
    let tiles = icosphere_tiles();
    let mut counts = vec![0usize; tiles.len()];
    let mut sums = vec![0.0; tiles.len()];
    for ((p, g), d) in pred.iter().zip(gt).zip(dirs) {
        if *g > fa_threshold {
            let i = tile_index(&tiles, d);
            counts[i] += 1;
            sums[i] += (p - g).abs();
        }
    }
    let mean_abs_err = sums.iter().zip(&counts).map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 }).collect();
    Ok(TileMap { tiles, counts, mean_abs_err, fa_threshold })
}

impl TileMap {
    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.tiles.len()).filter(|&i| self.counts[i] > 0)
    }

    /// Largest over smallest tile value among occupied tiles.
    pub fn value_ratio(&self) -> f64 {
        let (lo, hi) = self.value_range();
        hi / lo
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.occupied().map(|i| self.mean_abs_err[i]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
    }

    /// Angle in radians between a tile centroid and an axis, folded to
    /// `[0, π/2]`.
    pub fn angle_to(&self, tile: usize, axis: &Vec3) -> f64 {
        linalg::dot(&self.tiles[tile].centroid, &normalize(*axis)).abs().min(1.0).acos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eighty_tiles_split_by_equator() {
        let t = icosphere_tiles();
        assert_eq!(t.len(), 80);
        let upper = t.iter().filter(|t| t.vertices.iter().all(|v| v[2] >= -1e-12)).count();
        let lower = t.iter().filter(|t| t.vertices.iter().all(|v| v[2] <= 1e-12)).count();
        assert_eq!((upper, lower), (40, 40));
    }

    #[test]
    fn vertices_are_own_tiles_members() {
        let t = icosphere_tiles();
        for tile in &t {
            let i = tile_index(&t, &tile.centroid);
            assert!(t[i].centroid[2] > 0.0);
        }
    }
}
