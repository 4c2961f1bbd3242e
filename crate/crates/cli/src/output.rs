//! Output-file helpers: atomic writes and the CSV/JSON artifacts of an
//! identification run.

use std::fmt::Write as _;
use std::path::Path;

use volterra_id_core::signals::SignalPair;
use volterra_id_core::solver::{predict, IdentificationReport};
use volterra_id_core::QuadratureConfigF64;

use crate::CliError;

/// Writes `contents` to `path` through a sibling temp file and a rename, so
/// readers never observe a partially written file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension(match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{ext}.tmp"),
        None => "tmp".to_string(),
    });
    std::fs::write(&tmp, contents)
        .map_err(|e| CliError::io(anyhow::anyhow!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::io(anyhow::anyhow!("cannot rename to {}: {e}", path.display())))?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(anyhow::anyhow!("cannot create {}: {e}", dir.display())))
}

/// First-order kernel estimate sampled on `points` lags.
pub fn kernel_k1_csv(
    report: &IdentificationReport<f64>,
    points: usize,
) -> Result<String, CliError> {
    let horizon = report.expansion.basis().horizon();
    let mut out = String::new();
    let _ = writeln!(out, "# config_digest: {}", report.config_digest);
    let _ = writeln!(out, "s,k1");
    for i in 0..points {
        let s = horizon * i as f64 / (points - 1) as f64;
        let v = report.expansion.eval_k1(s).map_err(CliError::from_core)?;
        let _ = writeln!(out, "{s:e},{v:e}");
    }
    Ok(out)
}

/// Symmetrized second-order kernel estimate on a `points x points` lag grid,
/// in long form.
pub fn kernel_k2_csv(
    report: &IdentificationReport<f64>,
    points: usize,
) -> Result<String, CliError> {
    let horizon = report.expansion.basis().horizon();
    let symmetrized = report.expansion.symmetrized();
    let mut out = String::new();
    let _ = writeln!(out, "# config_digest: {}", report.config_digest);
    let _ = writeln!(out, "s1,s2,k2");
    for i in 0..points {
        let s1 = horizon * i as f64 / (points - 1) as f64;
        for j in 0..points {
            let s2 = horizon * j as f64 / (points - 1) as f64;
            let v = symmetrized.eval_k2(s1, s2).map_err(CliError::from_core)?;
            let _ = writeln!(out, "{s1:e},{s2:e},{v:e}");
        }
    }
    Ok(out)
}

/// `(t, y(t) - prediction)` over the dense evaluation grid.
pub fn residual_curve_csv(
    report: &IdentificationReport<f64>,
    pair: &SignalPair<f64>,
    eval_points: usize,
    cfg: &QuadratureConfigF64,
) -> Result<String, CliError> {
    let horizon = pair.horizon();
    let mut out = String::new();
    let _ = writeln!(out, "# config_digest: {}", report.config_digest);
    let _ = writeln!(out, "t,residual");
    for i in 0..eval_points {
        let t = horizon * i as f64 / (eval_points - 1) as f64;
        let predicted = predict(&report.expansion, pair, t, cfg).map_err(CliError::from_core)?;
        let _ = writeln!(out, "{t:e},{:e}", pair.y(t) - predicted);
    }
    Ok(out)
}
