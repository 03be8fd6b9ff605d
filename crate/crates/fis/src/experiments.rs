//! Run drivers shared by the CLI and the acceptance suite.

use fis_core::diagnostics::{
    adjacent_changes, cv_stats, per_frame_error, CurveKey, DiagnosticsReport,
};
use fis_core::model::{analytic_flops, denoise, denoise_with_probe, Denoised, ToyDiT};
use fis_core::{Result, SparsityConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Dense,
    Sparse,
    Both,
}

/// Outcome of one seed. Sparse runs always carry the dense oracle so the
/// comparison metrics can be reported.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub dense: Denoised,
    pub sparse: Option<Denoised>,
}

impl SeedRun {
    pub fn per_frame_error(&self) -> Option<Result<Vec<f64>>> {
        self.sparse
            .as_ref()
            .map(|s| per_frame_error(&self.dense.latent, &s.latent))
    }

    pub fn max_abs_diff(&self) -> Option<Result<f32>> {
        self.sparse
            .as_ref()
            .map(|s| self.dense.latent.max_abs_diff(&s.latent))
    }

    /// Counted dense madds over counted sparse madds.
    pub fn speedup(&self) -> Option<f64> {
        self.sparse
            .as_ref()
            .map(|s| self.dense.ledger.counted_madds() as f64 / s.ledger.counted_madds() as f64)
    }
}

pub fn run_seed(
    model: &ToyDiT,
    sparsity: &SparsityConfig,
    seed: u64,
    mode: Mode,
) -> Result<SeedRun> {
    let init = model.config().init_noise(seed)?;
    let dense = denoise(model, &init, None)?;
    let sparse = match mode {
        Mode::Dense => None,
        Mode::Sparse | Mode::Both => Some(denoise(model, &init, Some(sparsity))?),
    };
    Ok(SeedRun {
        seed,
        dense,
        sparse,
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// A named pass/fail outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grid {
    Schedule,
    Protection,
}

impl std::fmt::Display for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Grid::Schedule => "schedule",
            Grid::Protection => "protection",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationCell {
    pub grid: Grid,
    pub cell: String,
    pub stride_n: usize,
    pub interleave: bool,
    pub sensitive_blocks: Vec<usize>,
    pub tail_steps: usize,
    pub seeds: usize,
    /// Final-output per-frame error, averaged over frames then seeds.
    pub mean_error: f64,
    pub dense_madds: u64,
    /// Counted on the sparse run's ledger.
    pub sparse_madds: u64,
    /// Analytic dense over analytic sparse madds.
    pub speedup: f64,
}

impl AblationCell {
    pub fn config(&self, base: &SparsityConfig) -> Result<SparsityConfig> {
        Ok(SparsityConfig::new(
            self.stride_n,
            base.blocks_total(),
            base.steps_total(),
            self.sensitive_blocks.iter().copied(),
            self.tail_steps,
        )?
        .with_interleave(self.interleave))
    }
}

#[derive(Debug, Clone)]
pub struct Ablation {
    pub cells: Vec<AblationCell>,
    pub checks: Vec<Check>,
}

impl Ablation {
    pub fn cell(&self, grid: Grid, name: &str) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.grid == grid && c.cell == name)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn schedule_cell_name(n: usize, interleave: bool) -> String {
    format!("{}_n{n}", if interleave { "interleaved" } else { "fixed" })
}

pub const PROTECTION_CELLS: [&str; 4] = ["full", "no_block", "no_step", "neither"];

fn protection_config(name: &str, base: &SparsityConfig) -> Result<SparsityConfig> {
    let (keep_blocks, keep_steps) = match name {
        "full" => (true, true),
        "no_block" => (false, true),
        "no_step" => (true, false),
        _ => (false, false),
    };
    let sensitive: &[usize] = if keep_blocks {
        base.sensitive_blocks()
    } else {
        &[]
    };
    let tail = if keep_steps { base.tail_steps() } else { 0 };
    Ok(SparsityConfig::new(
        base.stride_n(),
        base.blocks_total(),
        base.steps_total(),
        sensitive.iter().copied(),
        tail,
    )?
    .with_interleave(base.interleave()))
}

/// Runs the interleaved/fixed grid over `strides` and the protection grid
/// at `base`'s stride. Each seed's dense run is shared by all cells, and
/// identical configurations are run once.
pub fn ablate(
    model: &ToyDiT,
    base: &SparsityConfig,
    strides: &[usize],
    seeds: &[u64],
    mut progress: impl FnMut(&str),
) -> Result<Ablation> {
    let mut specs: Vec<(Grid, String, SparsityConfig)> = Vec::new();
    for &n in strides {
        for interleave in [true, false] {
            let cfg = base.clone().with_stride(n)?.with_interleave(interleave);
            specs.push((Grid::Schedule, schedule_cell_name(n, interleave), cfg));
        }
    }
    for name in PROTECTION_CELLS {
        specs.push((
            Grid::Protection,
            name.to_string(),
            protection_config(name, base)?,
        ));
    }

    let cfg = model.config();
    let mut distinct: Vec<SparsityConfig> = Vec::new();
    let slot: Vec<usize> = specs
        .iter()
        .map(|(_, _, c)| match distinct.iter().position(|d| d == c) {
            Some(i) => i,
            None => {
                distinct.push(c.clone());
                distinct.len() - 1
            }
        })
        .collect();

    let mut errors = vec![Vec::with_capacity(seeds.len()); distinct.len()];
    let mut counted = vec![0u64; distinct.len()];
    for &seed in seeds {
        let init = cfg.init_noise(seed)?;
        let dense = denoise(model, &init, None)?;
        for (i, sp) in distinct.iter().enumerate() {
            let sparse = denoise(model, &init, Some(sp))?;
            let e = per_frame_error(&dense.latent, &sparse.latent)?;
            errors[i].push(mean(&e));
            counted[i] = sparse.ledger.counted_madds();
        }
        progress(&format!(
            "seed {seed}: {} sparse configurations",
            distinct.len()
        ));
    }

    let mut cells = Vec::with_capacity(specs.len());
    for ((grid, name, sp), &i) in specs.iter().zip(&slot) {
        let flops = analytic_flops(cfg, Some(sp))?;
        cells.push(AblationCell {
            grid: *grid,
            cell: name.clone(),
            stride_n: sp.stride_n(),
            interleave: sp.interleave(),
            sensitive_blocks: sp.sensitive_blocks().to_vec(),
            tail_steps: sp.tail_steps(),
            seeds: seeds.len(),
            mean_error: mean(&errors[i]),
            dense_madds: flops.dense,
            sparse_madds: counted[i],
            speedup: flops.speedup(),
        });
    }
    let mut ablation = Ablation {
        cells,
        checks: Vec::new(),
    };
    ablation.checks = ablation_checks(&ablation, strides);
    Ok(ablation)
}

fn ablation_checks(a: &Ablation, strides: &[usize]) -> Vec<Check> {
    let mut checks = Vec::new();
    for &n in strides {
        let (Some(i), Some(f)) = (
            a.cell(Grid::Schedule, &schedule_cell_name(n, true)),
            a.cell(Grid::Schedule, &schedule_cell_name(n, false)),
        ) else {
            continue;
        };
        checks.push(Check::new(
            format!("interleaved_error_le_fixed_n{n}"),
            i.mean_error <= f.mean_error,
            format!(
                "interleaved {:.6e} vs fixed {:.6e}",
                i.mean_error, f.mean_error
            ),
        ));
    }

    let mut sorted = strides.to_vec();
    sorted.sort_unstable();
    let madds: Vec<u64> = sorted
        .iter()
        .filter_map(|&n| {
            a.cell(Grid::Schedule, &schedule_cell_name(n, true))
                .map(|c| c.sparse_madds)
        })
        .collect();
    checks.push(Check::new(
        "sparse_madds_decrease_with_stride",
        madds.windows(2).all(|w| w[1] < w[0]),
        format!("strides {sorted:?} -> {madds:?}"),
    ));

    if let Some(full) = a.cell(Grid::Protection, "full") {
        for name in &PROTECTION_CELLS[1..] {
            let Some(c) = a.cell(Grid::Protection, name) else {
                continue;
            };
            checks.push(Check::new(
                format!("{name}_speedup_gt_full"),
                c.speedup > full.speedup,
                format!("{:.6} vs {:.6}", c.speedup, full.speedup),
            ));
            checks.push(Check::new(
                format!("{name}_error_ge_full"),
                c.mean_error >= full.mean_error,
                format!("{:.6e} vs {:.6e}", c.mean_error, full.mean_error),
            ));
        }
        let protection: Vec<&AblationCell> = a
            .cells
            .iter()
            .filter(|c| c.grid == Grid::Protection)
            .collect();
        if let Some(neither) = a.cell(Grid::Protection, "neither") {
            checks.push(Check::new(
                "neither_has_min_sparse_madds",
                protection
                    .iter()
                    .all(|c| neither.sparse_madds <= c.sparse_madds),
                format!("neither {}", neither.sparse_madds),
            ));
        }
    }
    checks
}

/// Dense runs probed after every block at every step, one run per seed
/// (seeds stand in for prompts). The first seed is also run sparsely to
/// fill the per-frame errors.
pub fn diagnose(
    model: &ToyDiT,
    sparsity: &SparsityConfig,
    seeds: &[u64],
    mut progress: impl FnMut(&str),
) -> Result<DiagnosticsReport> {
    let cfg = model.config();
    let mut curves: Vec<(CurveKey, Vec<f64>)> = Vec::new();
    let mut first_dense = None;
    for (prompt, &seed) in seeds.iter().enumerate() {
        let init = cfg.init_noise(seed)?;
        let mut failure = None;
        let dense = denoise_with_probe(model, &init, None, |step, block, h| {
            if failure.is_some() {
                return;
            }
            match adjacent_changes(h).and_then(|c| c.rel) {
                Ok(rel) => curves.push((
                    CurveKey {
                        block,
                        step,
                        prompt,
                    },
                    rel,
                )),
                Err(e) => failure = Some(e),
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        if first_dense.is_none() {
            first_dense = Some((init, dense));
        }
        progress(&format!(
            "seed {seed}: probed {} blocks x {} steps",
            cfg.blocks_total, cfg.steps_total
        ));
    }
    curves.sort_by_key(|(k, _)| *k);
    let cv_matrix = cv_stats(&curves)?;

    let per_frame_errors = match first_dense {
        Some((init, dense)) => {
            let sparse = denoise(model, &init, Some(sparsity))?;
            Some(per_frame_error(&dense.latent, &sparse.latent)?)
        }
        None => None,
    };
    let metadata = vec![
        (
            "probe_point".to_string(),
            "block output (post-residual)".to_string(),
        ),
        (
            "prompts".to_string(),
            format!("{} seeds stand in for prompts", seeds.len()),
        ),
        ("cv_divisor".to_string(), "population (F-1)".to_string()),
        (
            "per_frame_error".to_string(),
            "final latent, first seed, sparse vs dense".to_string(),
        ),
    ];
    Ok(DiagnosticsReport {
        rel_change_curves: curves,
        cv_matrix,
        per_frame_errors,
        metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use fis_core::model::ToyDiTConfig;

    fn tiny() -> ToyDiT {
        ToyDiT::new(ToyDiTConfig {
            blocks_total: 5,
            model_dim: 8,
            heads: 2,
            frames: 10,
            height: 2,
            width: 2,
            steps_total: 3,
            weight_seed: 3,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn protection_grid_configs() {
        let base = SparsityConfig::new(3, 5, 3, [0, 4], 1).unwrap();
        let no_block = protection_config("no_block", &base).unwrap();
        assert!(no_block.sensitive_blocks().is_empty());
        assert_eq!(no_block.tail_steps(), 1);
        let no_step = protection_config("no_step", &base).unwrap();
        assert_eq!(no_step.sensitive_blocks(), &[0, 4]);
        assert_eq!(no_step.tail_steps(), 0);
        assert_eq!(protection_config("full", &base).unwrap(), base);
    }

    #[test]
    fn ablation_grid_shape() {
        let model = tiny();
        let base = SparsityConfig::new(3, 5, 3, [0, 4], 1).unwrap();
        let a = ablate(&model, &base, &[2, 3], &[0, 1], |_| {}).unwrap();
        assert_eq!(a.cells.len(), 4 + 4);
        // full protection at the base stride is the interleaved n=3 cell
        let full = a.cell(Grid::Protection, "full").unwrap();
        let inter = a.cell(Grid::Schedule, "interleaved_n3").unwrap();
        assert_eq!(full.mean_error, inter.mean_error);
        assert_eq!(full.sparse_madds, inter.sparse_madds);
        for c in &a.cells {
            assert_eq!(c.seeds, 2);
            assert!(c.mean_error.is_finite() && c.mean_error >= 0.0);
            let analytic = analytic_flops(model.config(), Some(&c.config(&base).unwrap())).unwrap();
            assert_eq!(c.sparse_madds, analytic.sparse);
        }
        let names: Vec<&str> = a.checks.iter().map(|c| c.name.as_str()).collect();
        assert!(names.contains(&"interleaved_error_le_fixed_n2"));
        assert!(names.contains(&"sparse_madds_decrease_with_stride"));
        assert!(names.contains(&"neither_has_min_sparse_madds"));
    }

    #[test]
    fn diagnose_grid_is_complete() {
        let model = tiny();
        let sp = SparsityConfig::new(2, 5, 3, [0, 4], 1).unwrap();
        let r = diagnose(&model, &sp, &[4, 5, 6], |_| {}).unwrap();
        assert_eq!(r.rel_change_curves.len(), 5 * 3 * 3);
        assert!(r.rel_change_curves.iter().all(|(_, c)| c.len() == 9));
        assert_eq!(r.cv_matrix.len(), 5 * 3);
        assert!(r
            .cv_matrix
            .iter()
            .all(|e| e.prompts == 3 && e.mean_cv >= 0.0));
        assert_eq!(r.per_frame_errors.as_ref().unwrap().len(), 10);
    }

    #[test]
    fn seed_run_modes() {
        let model = tiny();
        let sp = SparsityConfig::new(1, 5, 3, [0], 1).unwrap();
        let dense = run_seed(&model, &sp, 0, Mode::Dense).unwrap();
        assert!(dense.sparse.is_none() && dense.speedup().is_none());
        let both = run_seed(&model, &sp, 0, Mode::Both).unwrap();
        assert!(both.max_abs_diff().unwrap().unwrap() <= 1e-6);
        assert_eq!(both.speedup(), Some(1.0));
    }
}
