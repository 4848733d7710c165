use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Least-squares line through (x, y). `r2` is 1 for an exact fit and for a
/// constant y.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    LinearFit { slope, intercept, r2, points: x.len() }
}

/// Shells of width `w` in the distance to the singular set: shell k holds the
/// nodes with floor(dist / w) = k. Returns (k, sup of `values` over the shell)
/// for the nonempty shells.
pub fn shell_sups(dist: &[f64], values: &[f64], w: f64) -> Vec<(usize, f64)> {
    let kmax = dist
        .iter()
        .filter(|d| d.is_finite())
        .map(|d| (d / w).floor() as usize)
        .max()
        .unwrap_or(0);
    let mut sup = vec![f64::NAN; kmax + 1];
    for (d, v) in dist.iter().zip(values) {
        if d.is_finite() {
            let k = (d / w).floor() as usize;
            if sup[k].is_nan() || *v > sup[k] {
                sup[k] = *v;
            }
        }
    }
    sup.into_iter().enumerate().filter(|(_, s)| !s.is_nan()).collect()
}

/// Like [`shell_sups`], but returns the distance of the node attaining each
/// shell sup in place of the shell index.
pub fn shell_sups_at(dist: &[f64], values: &[f64], w: f64) -> Vec<(f64, f64)> {
    let kmax = dist
        .iter()
        .filter(|d| d.is_finite())
        .map(|d| (d / w).floor() as usize)
        .max()
        .unwrap_or(0);
    let mut best: Vec<Option<(f64, f64)>> = vec![None; kmax + 1];
    for (d, v) in dist.iter().zip(values) {
        if d.is_finite() {
            let k = (d / w).floor() as usize;
            if best[k].is_none_or(|(_, s)| *v > s) {
                best[k] = Some((*d, *v));
            }
        }
    }
    best.into_iter().flatten().collect()
}
