//! Monodromy detection on finite point clouds.
//!
//! A locally regular cloud (a computed joint spectrum or a synthetic
//! lattice) is probed by fitting a basis cell near a seed and stepping it
//! along user-chosen waypoints. Every predicted vertex must snap to a
//! unique cloud point; a hole or an ambiguous snap aborts the walk with a
//! hint to enlarge the cell, mirroring the exact-transport admissibility
//! rule. The change of basis between the returned and initial cells is
//! rationalized with denominators bounded by the multiplier product and
//! re-verified, so the reported matrix is exact.

use crate::mat2::{rat, RatMat2};
use std::collections::HashMap;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DetectError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("fewer than 4 points within radius {radius} of the seed")]
    TooFewNeighbors { radius: f64 },
    #[error("neighborhood of the seed is collinear")]
    DegenerateNeighborhood,
    #[error(
        "no cloud point within snap radius at ({x:.4}, {y:.4}); a defect line or hole was hit \
         (consider increasing the cell multiplier)"
    )]
    SnapHole { x: f64, y: f64 },
    #[error(
        "ambiguous snap at ({x:.4}, {y:.4}): {count} candidates; the cell cannot cross \
         unambiguously — increase its multiplier"
    )]
    SnapAmbiguous { x: f64, y: f64, count: usize },
    #[error("walk stalled before reaching a waypoint")]
    Stalled,
    #[error("walk exceeded the step budget")]
    StepBudget,
    #[error("loop failed to close on the starting cell")]
    ClosureFailed,
    #[error("change of basis is not rational within tolerance (residual {residual:.3e})")]
    ResidualTooLarge { residual: f64 },
    #[error("detected change of basis has determinant {det}, not 1")]
    NonUnimodular { det: String },
    #[error("no multiplier up to {max}×{max} completes the loop; last failure: {last}")]
    MultiplierExhausted { max: u32, last: String },
}

/// Finite planar point cloud with a uniform-grid neighbor index.
#[derive(Debug, Clone)]
pub struct PointCloud {
    pub points: Vec<[f64; 2]>,
    pub source: String,
    grid: HashMap<(i64, i64), Vec<usize>>,
    cell_size: f64,
    key_lo: (i64, i64),
    key_hi: (i64, i64),
}

impl PointCloud {
    pub fn new(points: Vec<[f64; 2]>, source: impl Into<String>) -> PointCloud {
        // Grid pitch from the cloud extent; only proportionality matters.
        let n = points.len().max(1);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let cell_size = (extent / (n as f64).sqrt()).max(1e-9);
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut key_lo = (i64::MAX, i64::MAX);
        let mut key_hi = (i64::MIN, i64::MIN);
        for (i, p) in points.iter().enumerate() {
            let k = Self::key(p, cell_size);
            key_lo = (key_lo.0.min(k.0), key_lo.1.min(k.1));
            key_hi = (key_hi.0.max(k.0), key_hi.1.max(k.1));
            grid.entry(k).or_default().push(i);
        }
        PointCloud {
            points,
            source: source.into(),
            grid,
            cell_size,
            key_lo,
            key_hi,
        }
    }

    fn key(p: &[f64; 2], cell: f64) -> (i64, i64) {
        ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
    }

    /// Indices of points within `radius` of `p`.
    pub fn within(&self, p: [f64; 2], radius: f64) -> Vec<usize> {
        if self.points.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        let r_cells = (radius / self.cell_size).ceil() as i64 + 1;
        let (cx, cy) = Self::key(&p, self.cell_size);
        let x0 = (cx - r_cells).max(self.key_lo.0);
        let x1 = (cx + r_cells).min(self.key_hi.0);
        let y0 = (cy - r_cells).max(self.key_lo.1);
        let y1 = (cy + r_cells).min(self.key_hi.1);
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                if let Some(bucket) = self.grid.get(&(gx, gy)) {
                    for &i in bucket {
                        if dist(self.points[i], p) <= radius {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Index of the nearest point to `p`.
    pub fn nearest(&self, p: [f64; 2]) -> Option<usize> {
        if self.points.is_empty() {
            return None;
        }
        let mut radius = self.cell_size;
        for _ in 0..64 {
            let cands = self.within(p, radius);
            if let Some(&best) = cands.iter().min_by(|&&a, &&b| {
                dist(self.points[a], p).total_cmp(&dist(self.points[b], p))
            }) {
                return Some(best);
            }
            radius *= 2.0;
        }
        None
    }

    /// Minimum pairwise separation δ_min.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            for j in self.within(*p, self.cell_size * 2.0) {
                if j != i {
                    best = best.min(dist(*p, self.points[j]));
                }
            }
        }
        if best.is_finite() {
            return best;
        }
        // Sparse cloud relative to the grid: brute force.
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                best = best.min(dist(self.points[i], self.points[j]));
            }
        }
        best
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

fn scale(a: [f64; 2], k: f64) -> [f64; 2] {
    [a[0] * k, a[1] * k]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Basis-cell estimate anchored on a cloud point.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericCell {
    pub anchor: usize,
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub multiplier: (u32, u32),
}

#[derive(Debug, Clone, Copy)]
pub struct DetectOptions {
    /// Snap radius as a fraction of the shorter basis vector.
    pub snap_fraction: f64,
    /// Largest multiplier tried per axis when the walk reports ambiguity.
    pub max_multiplier: u32,
    /// Per-axis pre-scaling applied to cloud, seed, and waypoints (the
    /// detected matrix is invariant under it; it only conditions the
    /// nearest-neighbor geometry).
    pub scale: [f64; 2],
    pub max_steps: usize,
    /// Tolerance for the final rationalized change of basis.
    pub residual_tol: f64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            snap_fraction: 0.3,
            max_multiplier: 6,
            scale: [1.0, 1.0],
            max_steps: 100_000,
            residual_tol: 1e-6,
        }
    }
}

/// Lagrange-reduced local basis: the two shortest independent difference
/// vectors from the anchor nearest the seed, oriented `det(u, v) > 0`.
pub fn fit_local_basis(
    cloud: &PointCloud,
    seed: [f64; 2],
    radius: f64,
) -> Result<NumericCell, DetectError> {
    let anchor = cloud.nearest(seed).ok_or(DetectError::EmptyCloud)?;
    let center = cloud.points[anchor];
    let neighbors = cloud.within(center, radius);
    if neighbors.len() < 4 {
        return Err(DetectError::TooFewNeighbors { radius });
    }
    let mut diffs: Vec<[f64; 2]> = neighbors
        .iter()
        .filter(|&&i| i != anchor)
        .map(|&i| sub(cloud.points[i], center))
        .collect();
    diffs.sort_by(|a, b| norm(*a).total_cmp(&norm(*b)).then(a[0].total_cmp(&b[0])));
    let u = diffs[0];
    let v = diffs
        .iter()
        .find(|d| cross(u, **d).abs() > 1e-9 * norm(u) * norm(**d))
        .copied()
        .ok_or(DetectError::DegenerateNeighborhood)?;
    let (u, v) = reduce_basis(u, v);
    Ok(NumericCell {
        anchor,
        u,
        v,
        multiplier: (1, 1),
    })
}

/// Lagrange reduction to `|u·v| ≤ min(|u|², |v|²)/2`, orientation
/// normalized to `det(u, v) > 0`.
fn reduce_basis(mut u: [f64; 2], mut v: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    for _ in 0..64 {
        if norm(v) < norm(u) {
            std::mem::swap(&mut u, &mut v);
        }
        let mu = (dot(u, v) / dot(u, u)).round();
        if mu == 0.0 {
            break;
        }
        v = sub(v, scale(u, mu));
    }
    if cross(u, v) < 0.0 {
        v = scale(v, -1.0);
    }
    (u, v)
}

/// One multiplied-cell step toward `direction`: the anchor advances by the
/// multiplied basis step best aligned with it, every predicted vertex
/// snaps to a unique point, and the basis re-estimates from the snapped
/// vertices. Returns the new cell and the largest snap residual.
pub fn step_cell(
    cloud: &PointCloud,
    cell: &NumericCell,
    direction: [f64; 2],
    opts: &DetectOptions,
) -> Result<(NumericCell, f64), DetectError> {
    let (mu, mv) = (cell.multiplier.0 as f64, cell.multiplier.1 as f64);
    let steps = [
        scale(cell.u, mu),
        scale(cell.u, -mu),
        scale(cell.v, mv),
        scale(cell.v, -mv),
    ];
    let step = steps
        .iter()
        .max_by(|a, b| {
            (dot(**a, direction) / norm(**a)).total_cmp(&(dot(**b, direction) / norm(**b)))
        })
        .copied()
        .expect("four candidates");
    let anchor_pos = cloud.points[cell.anchor];
    let snap_r = opts.snap_fraction * norm(cell.u).min(norm(cell.v));
    let target = add(anchor_pos, step);
    let a2 = snap_unique(cloud, target, snap_r)?;
    let pu = add(cloud.points[a2], scale(cell.u, mu));
    let pv = add(cloud.points[a2], scale(cell.v, mv));
    let su = snap_unique(cloud, pu, snap_r)?;
    let sv = snap_unique(cloud, pv, snap_r)?;
    let residual = dist(target, cloud.points[a2])
        .max(dist(pu, cloud.points[su]))
        .max(dist(pv, cloud.points[sv]));
    let new_u = scale(sub(cloud.points[su], cloud.points[a2]), 1.0 / mu);
    let new_v = scale(sub(cloud.points[sv], cloud.points[a2]), 1.0 / mv);
    if cross(new_u, new_v).abs() < 1e-9 * norm(new_u) * norm(new_v) {
        return Err(DetectError::DegenerateNeighborhood);
    }
    Ok((
        NumericCell {
            anchor: a2,
            u: new_u,
            v: new_v,
            multiplier: cell.multiplier,
        },
        residual,
    ))
}

fn snap_unique(cloud: &PointCloud, p: [f64; 2], radius: f64) -> Result<usize, DetectError> {
    let hits = cloud.within(p, radius);
    match hits.len() {
        0 => Err(DetectError::SnapHole { x: p[0], y: p[1] }),
        1 => Ok(hits[0]),
        n => Err(DetectError::SnapAmbiguous {
            x: p[0],
            y: p[1],
            count: n,
        }),
    }
}

/// Detection report. `matrix` is in the stored stack convention over the
/// initial fitted basis taken as `(e_v, e_h) = (v, u)`: row `i` lists the
/// coefficients of the transported basis vector `i` over the initial one.
#[derive(Debug, Clone)]
pub struct DetectReport {
    pub matrix: RatMat2,
    pub multiplier: (u32, u32),
    pub residuals: Vec<f64>,
    pub steps: usize,
    /// Initial basis (u, v) in the original (unscaled) coordinates.
    pub basis_u: [f64; 2],
    pub basis_v: [f64; 2],
}

impl DetectReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, &b| a.max(b))
    }
}

/// Transports a fitted cell around the waypoint loop (closed implicitly)
/// and solves the exact change of basis. Ambiguity and hole errors
/// escalate the multiplier pair up to `opts.max_multiplier` before giving
/// up with the last failure.
pub fn detect_monodromy(
    cloud: &PointCloud,
    waypoints: &[[f64; 2]],
    seed: [f64; 2],
    opts: &DetectOptions,
) -> Result<DetectReport, DetectError> {
    if waypoints.len() < 2 {
        return Err(DetectError::Stalled);
    }
    // Pre-scale for isotropy; the detected matrix is invariant.
    let sc = opts.scale;
    let scaled: Vec<[f64; 2]> = cloud
        .points
        .iter()
        .map(|p| [p[0] * sc[0], p[1] * sc[1]])
        .collect();
    let cloud_s = PointCloud::new(scaled, cloud.source.clone());
    let seed_s = [seed[0] * sc[0], seed[1] * sc[1]];
    let wps: Vec<[f64; 2]> = waypoints
        .iter()
        .map(|p| [p[0] * sc[0], p[1] * sc[1]])
        .collect();

    // Fit radius: enough to see a couple of shells around the seed.
    let anchor = cloud_s.nearest(seed_s).ok_or(DetectError::EmptyCloud)?;
    let center = cloud_s.points[anchor];
    let mut radius = cloud_s.cell_size;
    while cloud_s.within(center, radius).len() < 7 {
        radius *= 1.5;
        if radius > 1e12 {
            return Err(DetectError::TooFewNeighbors { radius });
        }
    }
    let base = fit_local_basis(&cloud_s, seed_s, radius)?;

    let mut mults: Vec<(u32, u32)> = Vec::new();
    for a in 1..=opts.max_multiplier {
        for b in 1..=opts.max_multiplier {
            mults.push((a, b));
        }
    }
    mults.sort_by_key(|&(a, b)| (a as u64 * b as u64, a, b));
    let mut last_err: Option<DetectError> = None;
    for m in mults {
        let mut cell = base.clone();
        cell.multiplier = m;
        match walk_loop(&cloud_s, &wps, &cell, opts) {
            Ok((matrix, residuals, steps)) => {
                let inv = [1.0 / sc[0], 1.0 / sc[1]];
                return Ok(DetectReport {
                    matrix,
                    multiplier: m,
                    residuals,
                    steps,
                    basis_u: [base.u[0] * inv[0], base.u[1] * inv[1]],
                    basis_v: [base.v[0] * inv[0], base.v[1] * inv[1]],
                });
            }
            Err(e @ (DetectError::SnapHole { .. } | DetectError::SnapAmbiguous { .. })) => {
                last_err = Some(e);
            }
            Err(other) => return Err(other),
        }
    }
    Err(DetectError::MultiplierExhausted {
        max: opts.max_multiplier,
        last: last_err
            .map(|e| e.to_string())
            .unwrap_or_else(|| "no failure recorded".into()),
    })
}

fn walk_loop(
    cloud: &PointCloud,
    waypoints: &[[f64; 2]],
    start: &NumericCell,
    opts: &DetectOptions,
) -> Result<(RatMat2, Vec<f64>, usize), DetectError> {
    let mut cell = start.clone();
    let mut residuals = Vec::new();
    let mut steps = 0usize;
    let mut targets: Vec<[f64; 2]> = waypoints.to_vec();
    // Close the loop on the starting anchor.
    targets.push(cloud.points[start.anchor]);
    for &target in &targets[1..] {
        loop {
            let here = cloud.points[cell.anchor];
            let gap = sub(target, here);
            let step_len = norm(cell.u).max(norm(cell.v))
                * (cell.multiplier.0.max(cell.multiplier.1) as f64);
            if norm(gap) <= 0.75 * step_len {
                break;
            }
            let (next, res) = step_cell(cloud, &cell, gap, opts)?;
            let new_gap = norm(sub(target, cloud.points[next.anchor]));
            if new_gap >= norm(gap) {
                return Err(DetectError::Stalled);
            }
            residuals.push(res);
            cell = next;
            steps += 1;
            if steps > opts.max_steps {
                return Err(DetectError::StepBudget);
            }
        }
    }
    // Final hops back onto the exact starting anchor.
    let home = cloud.points[start.anchor];
    for _ in 0..4 {
        if cell.anchor == start.anchor {
            break;
        }
        let gap = sub(home, cloud.points[cell.anchor]);
        let (next, res) = step_cell(cloud, &cell, gap, opts)?;
        residuals.push(res);
        cell = next;
        steps += 1;
    }
    if cell.anchor != start.anchor {
        return Err(DetectError::ClosureFailed);
    }
    // Solve [u_f v_f] = [u0 v0]·X and rationalize.
    let b0 = [start.u, start.v];
    let bf = [cell.u, cell.v];
    let det0 = cross(b0[0], b0[1]);
    let max_den = (start.multiplier.0 as u64) * (start.multiplier.1 as u64);
    let mut coeff = [[0f64; 2]; 2]; // coeff[i] = coords of bf[i] over (u0, v0)
    for i in 0..2 {
        coeff[i][0] = cross(bf[i], b0[1]) / det0;
        coeff[i][1] = cross(b0[0], bf[i]) / det0;
    }
    let mut exact = [[rat(0, 1), rat(0, 1)], [rat(0, 1), rat(0, 1)]];
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let (p, q) = rationalize(coeff[i][j], max_den)
                .ok_or(DetectError::ResidualTooLarge {
                    residual: f64::INFINITY,
                })?;
            worst = worst.max((coeff[i][j] - p as f64 / q as f64).abs());
            exact[i][j] = rat(p, q as i64);
        }
    }
    if worst > opts.residual_tol {
        return Err(DetectError::ResidualTooLarge { residual: worst });
    }
    // Stack order (e_v, e_h) = (v, u): rows are v then u.
    let matrix = RatMat2::new(
        exact[1][1].clone(),
        exact[1][0].clone(),
        exact[0][1].clone(),
        exact[0][0].clone(),
    );
    let det = matrix.det();
    if !num_traits::One::is_one(&det) {
        return Err(DetectError::NonUnimodular {
            det: crate::mat2::rational_to_string(&det),
        });
    }
    Ok((matrix, residuals, steps))
}

/// Continued-fraction rationalization with bounded denominator.
fn rationalize(x: f64, max_den: u64) -> Option<(i64, u64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0u64, x.floor() as i64, 1u64);
    let mut frac = x - x.floor();
    for _ in 0..64 {
        if (p1 as f64 / q1 as f64 - x).abs() < 1e-12 {
            break;
        }
        if frac.abs() < 1e-15 {
            break;
        }
        let a = (1.0 / frac).floor();
        frac = 1.0 / frac - a;
        let a = a as i64;
        let p2 = a * p1 + p0;
        let q2 = (a as u64) * q1 + q0;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    if q1 == 0 || q1 > max_den {
        return None;
    }
    Some((p1, q1))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_cloud(n: i64, skip: &[(i64, i64)]) -> PointCloud {
        let mut pts = Vec::new();
        for x in -n..=n {
            for y in -n..=n {
                if !skip.contains(&(x, y)) {
                    pts.push([x as f64, y as f64]);
                }
            }
        }
        PointCloud::new(pts, "grid")
    }

    #[test]
    fn fit_on_square_lattice_gives_unit_basis() {
        let cloud = grid_cloud(6, &[]);
        let cell = fit_local_basis(&cloud, [0.2, -0.1], 1.8).unwrap();
        assert!((norm(cell.u) - 1.0).abs() < 1e-12);
        assert!((norm(cell.v) - 1.0).abs() < 1e-12);
        assert!(cross(cell.u, cell.v) > 0.0);
    }

    #[test]
    fn fit_on_sheared_lattice_matches_columns_up_to_unimodular() {
        // L·Z² with L = [[1, 3], [0, 1]]: reduced basis spans the lattice.
        let mut pts = Vec::new();
        for a in -8i64..=8 {
            for b in -8i64..=8 {
                pts.push([a as f64 + 3.0 * b as f64, b as f64]);
            }
        }
        let cloud = PointCloud::new(pts, "sheared");
        let cell = fit_local_basis(&cloud, [0.1, 0.1], 2.2).unwrap();
        // Lattice determinant is 1; the fitted basis must span it.
        assert!((cross(cell.u, cell.v).abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_neighbors_is_an_error() {
        let cloud = PointCloud::new(vec![[0.0, 0.0], [1.0, 0.0]], "tiny");
        assert!(matches!(
            fit_local_basis(&cloud, [0.0, 0.0], 1.5),
            Err(DetectError::TooFewNeighbors { .. })
        ));
    }

    #[test]
    fn collinear_cloud_is_degenerate() {
        let pts: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 0.0]).collect();
        let cloud = PointCloud::new(pts, "line");
        assert!(matches!(
            fit_local_basis(&cloud, [3.0, 0.0], 3.5),
            Err(DetectError::DegenerateNeighborhood)
        ));
    }

    #[test]
    fn step_on_regular_lattice_translates() {
        let cloud = grid_cloud(6, &[]);
        let cell = fit_local_basis(&cloud, [0.0, 0.0], 1.8).unwrap();
        let opts = DetectOptions::default();
        let (next, res) = step_cell(&cloud, &cell, [1.0, 0.1], &opts).unwrap();
        assert!(res < 1e-12);
        assert_eq!(
            sub(cloud.points[next.anchor], cloud.points[cell.anchor]),
            next.u
        );
        assert_eq!(next.u, cell.u);
        assert_eq!(next.v, cell.v);
    }

    #[test]
    fn vacancy_needs_a_doubled_cell() {
        let cloud = grid_cloud(6, &[(2, 0)]);
        let mut cell = fit_local_basis(&cloud, [0.0, 0.0], 1.8).unwrap();
        // Anchor at origin stepping right: the predicted chain hits the
        // vacancy.
        let opts = DetectOptions::default();
        let hole = (0..4).try_fold(cell.clone(), |c, _| {
            step_cell(&cloud, &c, [1.0, 0.0], &opts).map(|(c2, _)| c2)
        });
        assert!(matches!(hole, Err(DetectError::SnapHole { .. })));
        cell.multiplier = (2, 1);
        let skipped = (0..2).try_fold(cell, |c, _| {
            step_cell(&cloud, &c, [1.0, 0.0], &opts).map(|(c2, _)| c2)
        });
        assert!(skipped.is_ok());
    }

    #[test]
    fn regular_lattice_loop_detects_identity() {
        let cloud = grid_cloud(8, &[]);
        let waypoints = [[4.0, -4.0], [4.0, 4.0], [-4.0, 4.0], [-4.0, -4.0], [4.0, -4.0]];
        let report =
            detect_monodromy(&cloud, &waypoints, [4.0, -4.0], &DetectOptions::default()).unwrap();
        assert_eq!(report.matrix, RatMat2::identity());
        assert_eq!(report.multiplier, (1, 1));
        assert!(report.max_residual() < 1e-9);
    }

    #[test]
    fn loop_reversal_inverts_the_detected_matrix() {
        let arr = crate::defect::build_arrangement(
            vec![crate::defect::elementary_defect(
                crate::Sign::Minus,
                1,
                crate::mat2::Vec2::from_ints(0, 0),
                crate::mat2::Vec2::from_ints(1, 0),
            )
            .unwrap()],
            crate::defect::LatticeKind::Square,
        )
        .unwrap();
        let window = crate::defect::Window::from_ints(-14, 14, -14, 14);
        let cloud = PointCloud::new(crate::defect::fanned_cloud(&arr, &window).unwrap(), "fan");
        let fwd = [[6.0, -6.0], [6.0, 6.0], [-6.0, 6.0], [-6.0, -6.0], [6.0, -6.0]];
        let bwd = [[6.0, -6.0], [-6.0, -6.0], [-6.0, 6.0], [6.0, 6.0], [6.0, -6.0]];
        let opts = DetectOptions::default();
        let a = detect_monodromy(&cloud, &fwd, [6.0, -6.0], &opts).unwrap();
        let b = detect_monodromy(&cloud, &bwd, [6.0, -6.0], &opts).unwrap();
        assert_eq!(b.matrix, a.matrix.inverse().unwrap());
        assert!(a.matrix != RatMat2::identity());
    }

    #[test]
    fn rationalize_small_fractions() {
        assert_eq!(rationalize(0.5, 6), Some((1, 2)));
        assert_eq!(rationalize(-1.0 / 3.0, 6), Some((-1, 3)));
        assert_eq!(rationalize(5.0 / 6.0, 6), Some((5, 6)));
        assert_eq!(rationalize(2.0, 6), Some((2, 1)));
        assert_eq!(rationalize(0.4999999999, 6), Some((1, 2)));
    }
}
