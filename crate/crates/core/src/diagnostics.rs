//! Temporal-redundancy diagnostics.
//!
//! Every frame is reduced to a magnitude map (the channel-wise L2 norm at
//! each spatial location). Adjacent maps give absolute and relative change
//! curves, whose coefficient of variation measures how evenly feature change
//! is spread over time. The per-frame error compares magnitude maps of a
//! sparse run against a dense one. All reductions accumulate in `f64`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::latent::LatentSequence;
use crate::rng::SeedStream;

/// Channel-norm image of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeMap {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl MagnitudeMap {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Row-major `height x width` values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, h: usize, w: usize) -> f64 {
        self.values[h * self.width + w]
    }

    /// L2 norm of the whole map.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum())
    }

    /// L2 norm of `self - other`.
    pub fn distance(&self, other: &Self) -> f64 {
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        libm::sqrt(sum)
    }
}

fn map_of(frame: &[f32], height: usize, width: usize, channels: usize) -> MagnitudeMap {
    let values = frame
        .chunks_exact(channels)
        .map(|token| libm::sqrt(token.iter().map(|&v| v as f64 * v as f64).sum()))
        .collect();
    MagnitudeMap {
        height,
        width,
        values,
    }
}

/// Magnitude map of a single-frame sequence.
pub fn magnitude_map(x_frame: &LatentSequence) -> Result<MagnitudeMap> {
    if x_frame.frames() != 1 {
        return Err(invalid!(
            "magnitude_map expects 1 frame, got {}",
            x_frame.frames()
        ));
    }
    Ok(map_of(
        x_frame.frame(0),
        x_frame.height(),
        x_frame.width(),
        x_frame.channels(),
    ))
}

/// Magnitude maps of every frame.
pub fn magnitude_maps(x: &LatentSequence) -> Vec<MagnitudeMap> {
    (0..x.frames())
        .map(|f| map_of(x.frame(f), x.height(), x.width(), x.channels()))
        .collect()
}

/// Adjacent-frame change curves, each of length `F - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacentChanges {
    /// `||V_{i+1} - V_i||`
    pub abs: Vec<f64>,
    /// `abs_i / ||V_i||`, or a division-guard error naming the first frame
    /// whose map has zero norm.
    pub rel: Result<Vec<f64>>,
}

pub fn adjacent_changes(x: &LatentSequence) -> Result<AdjacentChanges> {
    if x.frames() < 2 {
        return Err(invalid!(
            "adjacent changes need >= 2 frames, got {}",
            x.frames()
        ));
    }
    let maps = magnitude_maps(x);
    let abs: Vec<f64> = maps.windows(2).map(|p| p[1].distance(&p[0])).collect();
    let rel = abs
        .iter()
        .zip(&maps)
        .enumerate()
        .map(|(i, (&a, map))| {
            let norm = map.norm();
            if norm == 0.0 {
                Err(Error::DivisionGuard {
                    what: "magnitude-map norm",
                    index: i,
                })
            } else {
                Ok(a / norm)
            }
        })
        .collect();
    Ok(AdjacentChanges { abs, rel })
}

/// `sigma / mu` of a curve with the population (`1 / len`) variance.
///
/// A zero-mean, zero-spread curve has CV 0. A zero mean with nonzero spread
/// returns `f64::INFINITY`.
pub fn coefficient_of_variation(curve: &[f64]) -> Result<f64> {
    if curve.len() < 2 {
        return Err(invalid!(
            "CV needs a curve of length >= 2, got {}",
            curve.len()
        ));
    }
    let len = curve.len() as f64;
    let mean = curve.iter().sum::<f64>() / len;
    let var = curve.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len;
    let sigma = libm::sqrt(var);
    Ok(match (mean == 0.0, sigma == 0.0) {
        (true, true) => 0.0,
        (true, false) => f64::INFINITY,
        _ => sigma / mean,
    })
}

/// Identifies one change curve: block, denoising step and prompt (seed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CurveKey {
    pub block: usize,
    pub step: usize,
    pub prompt: usize,
}

/// Mean CV over prompts for one `(block, step)` cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvEntry {
    pub block: usize,
    pub step: usize,
    pub mean_cv: f64,
    pub prompts: usize,
}

/// Averages per-curve CVs over prompts, one entry per `(block, step)` in
/// ascending order.
pub fn cv_stats(curves: &[(CurveKey, Vec<f64>)]) -> Result<Vec<CvEntry>> {
    let mut cells: Vec<(usize, usize, f64)> = curves
        .iter()
        .map(|(key, curve)| Ok((key.block, key.step, coefficient_of_variation(curve)?)))
        .collect::<Result<_>>()?;
    cells.sort_by_key(|c| (c.0, c.1));

    let mut out: Vec<CvEntry> = Vec::new();
    let mut start = 0;
    while start < cells.len() {
        let (block, step, _) = cells[start];
        let end = start
            + cells[start..]
                .iter()
                .take_while(|c| c.0 == block && c.1 == step)
                .count();
        let group = &cells[start..end];
        let mean_cv = group.iter().map(|c| c.2).sum::<f64>() / group.len() as f64;
        out.push(CvEntry {
            block,
            step,
            mean_cv,
            prompts: group.len(),
        });
        start = end;
    }
    Ok(out)
}

/// `E_i = ||V̂_i - V_i|| / ||V_i||` per frame, `V` from `dense`, `V̂` from
/// `sparse`.
pub fn per_frame_error(dense: &LatentSequence, sparse: &LatentSequence) -> Result<Vec<f64>> {
    if !dense.same_shape(sparse) {
        return Err(invalid!(
            "shape mismatch {:?} vs {:?}",
            dense.shape(),
            sparse.shape()
        ));
    }
    magnitude_maps(dense)
        .iter()
        .zip(magnitude_maps(sparse))
        .enumerate()
        .map(|(i, (v, v_hat))| {
            let norm = v.norm();
            if norm == 0.0 {
                Err(Error::DivisionGuard {
                    what: "dense magnitude-map norm",
                    index: i,
                })
            } else {
                Ok(v_hat.distance(v) / norm)
            }
        })
        .collect()
}

/// Diagnostics gathered over a grid of `(block, step, prompt)` probes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsReport {
    pub rel_change_curves: Vec<(CurveKey, Vec<f64>)>,
    pub cv_matrix: Vec<CvEntry>,
    /// Present when a sparse run was compared against a dense one.
    pub per_frame_errors: Option<Vec<f64>>,
    pub metadata: Vec<(String, String)>,
}

/// A frame-linear sequence `X_i = A + i·B` with `||B|| << ||A||`, whose
/// relative change curve should be flat.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProbe {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub seed: u64,
    /// Standard deviation of `B`'s entries; `A`'s are standard normal.
    pub b_scale: f32,
    /// Allowed `|rel_i - mean| / mean` on interior curve points.
    pub max_deviation: f64,
    pub max_cv: f64,
}

impl Default for SyntheticProbe {
    fn default() -> Self {
        Self {
            frames: 16,
            height: 8,
            width: 8,
            channels: 64,
            seed: 0,
            b_scale: 1e-3,
            max_deviation: 0.05,
            max_cv: 0.05,
        }
    }
}

impl SyntheticProbe {
    pub fn sequence(&self) -> Result<LatentSequence> {
        let per_frame = self.height * self.width * self.channels;
        let mut rng = SeedStream::new(self.seed, 0);
        let a: Vec<f32> = (0..per_frame).map(|_| rng.normal()).collect();
        let b: Vec<f32> = (0..per_frame)
            .map(|_| self.b_scale * rng.normal())
            .collect();
        let mut data = Vec::with_capacity(self.frames * per_frame);
        for i in 0..self.frames {
            data.extend(a.iter().zip(&b).map(|(a, b)| a + i as f32 * b));
        }
        LatentSequence::new(self.frames, self.height, self.width, self.channels, data)
    }

    /// Builds the sequence, checks flatness and returns the report. Fails
    /// with [`Error::Diagnostic`] listing the offending curve indices.
    pub fn run(&self) -> Result<DiagnosticsReport> {
        let x = self.sequence()?;
        let changes = adjacent_changes(&x)?;
        let rel = changes.rel?;
        let cv = coefficient_of_variation(&rel)?;
        let mean = rel.iter().sum::<f64>() / rel.len() as f64;

        let interior = 1..rel.len().saturating_sub(1);
        let offending: Vec<usize> = interior
            .filter(|&i| {
                let dev = libm::fabs(rel[i] - mean);
                if mean == 0.0 {
                    dev != 0.0
                } else {
                    dev >= self.max_deviation * mean
                }
            })
            .collect();
        if !offending.is_empty() {
            return Err(Error::Diagnostic {
                message: alloc::format!(
                    "relative change deviates from its mean {mean:.3e} by >= {}",
                    self.max_deviation
                ),
                indices: offending,
            });
        }
        if cv >= self.max_cv {
            return Err(Error::Diagnostic {
                message: alloc::format!("CV {cv:.4} >= {}", self.max_cv),
                indices: Vec::new(),
            });
        }

        let key = CurveKey {
            block: 0,
            step: 0,
            prompt: 0,
        };
        let curves = alloc::vec![(key, rel)];
        let cv_matrix = cv_stats(&curves)?;
        Ok(DiagnosticsReport {
            rel_change_curves: curves,
            cv_matrix,
            per_frame_errors: None,
            metadata: alloc::vec![
                ("source".into(), "synthetic A + i*B".into()),
                ("seed".into(), alloc::format!("{}", self.seed)),
                ("b_scale".into(), alloc::format!("{}", self.b_scale)),
            ],
        })
    }
}

/// [`SyntheticProbe::run`] with default parameters.
pub fn synthetic_probe() -> Result<DiagnosticsReport> {
    SyntheticProbe::default().run()
}
