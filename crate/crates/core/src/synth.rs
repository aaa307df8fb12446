//! Deterministic synthetic scalar fields.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::grid::{GridDims, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldKind {
    /// `f = x`.
    Ramp,
    /// Two Gaussian peaks on the x axis through the centre, half the x extent
    /// apart.
    TwoBumps,
    /// Uniform noise smoothed by three passes of a separable box filter.
    RandomSmooth,
    /// Uniform noise in `[0, 1)`.
    WhiteNoise,
}

impl FieldKind {
    pub const ALL: [FieldKind; 4] = [
        FieldKind::Ramp,
        FieldKind::TwoBumps,
        FieldKind::RandomSmooth,
        FieldKind::WhiteNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Ramp => "ramp",
            FieldKind::TwoBumps => "two-bumps",
            FieldKind::RandomSmooth => "random-smooth",
            FieldKind::WhiteNoise => "white-noise",
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FieldKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        FieldKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown field kind {s:?}"))
    }
}

/// Builds a field of the given kind. `seed` only affects the noise kinds.
pub fn generate(kind: FieldKind, dims: GridDims, seed: u64) -> Result<ScalarField> {
    match kind {
        FieldKind::Ramp => ScalarField::from_fn(dims, |x, _, _| x as f64),
        FieldKind::TwoBumps => {
            let [nx, ny, nz] = dims.vertex_counts().map(|n| (n - 1) as f64);
            let sigma = 0.15 * nx;
            let (cy, cz) = (0.5 * ny, 0.5 * nz);
            let peaks = [0.25 * nx, 0.75 * nx];
            ScalarField::from_fn(dims, |x, y, z| {
                let (dy, dz) = (y as f64 - cy, z as f64 - cz);
                peaks
                    .iter()
                    .map(|&px| {
                        let dx = x as f64 - px;
                        (-(dx * dx + dy * dy + dz * dz) / (2.0 * sigma * sigma)).exp()
                    })
                    .sum()
            })
        }
        FieldKind::WhiteNoise => ScalarField::new(dims, noise(dims, seed)),
        FieldKind::RandomSmooth => {
            let mut v = noise(dims, seed);
            let counts = dims.vertex_counts();
            for axis in 0..3 {
                for _ in 0..3 {
                    v = box_blur(&v, counts, axis);
                }
            }
            ScalarField::new(dims, v)
        }
    }
}

fn noise(dims: GridDims, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dims.num_vertices()).map(|_| rng.gen::<f64>()).collect()
}

/// Radius-1 box filter along one axis, clamped at the ends.
fn box_blur(v: &[f64], [nx, ny, _]: [usize; 3], axis: usize) -> Vec<f64> {
    let counts = [nx, ny, v.len() / (nx * ny)];
    let stride = [1, nx, nx * ny][axis];
    let n = counts[axis];
    (0..v.len())
        .map(|i| {
            let p = (i / stride) % n;
            let lo = if p > 0 { v[i - stride] } else { v[i] };
            let hi = if p + 1 < n { v[i + stride] } else { v[i] };
            (lo + v[i] + hi) / 3.0
        })
        .collect()
}

/// Affinely maps values onto `[0, max]`, for integer sample types.
pub fn rescale(values: &[f64], max: f64) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - lo) / (hi - lo) * max).collect()
}
