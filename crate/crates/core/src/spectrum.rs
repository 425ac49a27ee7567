//! Joint quantum spectra of `m1:(-m2)` resonant oscillator pairs.
//!
//! The first integral is diagonal in the number basis with eigenvalue
//! `f + (m1-m2)/2` on the polyad labelled by the integer
//! `f = m1·n1 - m2·n2`. Within one polyad the second integral restricts
//! to a real symmetric tridiagonal chain matrix:
//!
//! * diagonal: `(m1(n1+1/2) + m2(n2+1/2))^s`;
//! * coupling between consecutive chain states, evaluated at the upper
//!   state: `1/2 · 2^{(m1+m2)/2} · sqrt(n1!/(n1-m2)!) · sqrt(n2!/(n2-m1)!)`.
//!
//! Quantization convention: `q + ip ↦ √2·a` with `ħ = 1`, so each mode
//! contributes `n + 1/2`; the `i^t` diagonal gauge turns the imaginary
//! couplings into positive real entries without moving eigenvalues.
//! Factorial ratios are running products, never factorials.
//!
//! This is the one module of the crate allowed floating point.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("m1 = {0} and m2 = {1} must be positive and coprime")]
    BadResonance(u32, u32),
    #[error("s = {s} violates s > (m1+m2)/2 = {min}")]
    BadExponent { s: u32, min: f64 },
    #[error("eigenvalue iteration failed to converge for polyad f = {f} (size {size})")]
    NonConvergence { f: i64, size: usize },
    #[error("window is empty or inverted")]
    BadWindow,
    #[error("csv parse error on line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceParams {
    pub m1: u32,
    pub m2: u32,
    /// Exponent of the confining term; must exceed `(m1+m2)/2`.
    pub s: u32,
    /// Scale of the coupling term relative to the confining term.
    pub coupling_scale: f64,
}

impl ResonanceParams {
    /// Default exponent: the least integer with `s > (m1+m2)/2`.
    pub fn new(m1: u32, m2: u32) -> Result<ResonanceParams, SpectrumError> {
        let s = (m1 + m2) / 2 + 1;
        ResonanceParams::with_exponent(m1, m2, s)
    }

    pub fn with_exponent(m1: u32, m2: u32, s: u32) -> Result<ResonanceParams, SpectrumError> {
        if m1 == 0 || m2 == 0 || gcd(m1, m2) != 1 {
            return Err(SpectrumError::BadResonance(m1, m2));
        }
        let min = (m1 + m2) as f64 / 2.0;
        if (s as f64) <= min {
            return Err(SpectrumError::BadExponent { s, min });
        }
        Ok(ResonanceParams {
            m1,
            m2,
            s,
            coupling_scale: 1.0,
        })
    }

    /// Offset between the polyad integer and the first joint eigenvalue:
    /// `f1 = f + (m1-m2)/2`.
    pub fn f1_offset(&self) -> f64 {
        (self.m1 as f64 - self.m2 as f64) / 2.0
    }
}

/// Basis chain of one polyad: all `(n1, n2)` with `m1·n1 - m2·n2 = f`,
/// consecutive states differing by `(m2, m1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyadChain {
    pub f: i64,
    pub states: Vec<(u64, u64)>,
}

fn weighted_number(params: &ResonanceParams, n1: u64, n2: u64) -> f64 {
    params.m1 as f64 * (n1 as f64 + 0.5) + params.m2 as f64 * (n2 as f64 + 0.5)
}

/// First chain state of polyad `f`: the least nonnegative solution.
fn chain_head(params: &ResonanceParams, f: i64) -> (u64, u64) {
    let (m1, m2) = (params.m1 as i64, params.m2 as i64);
    let mut n1 = (0..m2)
        .find(|&n1| (m1 * n1 - f).rem_euclid(m2) == 0)
        .expect("m1 is invertible modulo m2");
    let mut n2 = (m1 * n1 - f) / m2;
    while n2 < 0 {
        n1 += m2;
        n2 += m1;
    }
    (n1 as u64, n2 as u64)
}

/// All chain states with weighted number `m1(n1+1/2) + m2(n2+1/2)`
/// at most `n_w_max`, in ascending order (possibly empty).
pub fn polyad_chain(params: &ResonanceParams, f: i64, n_w_max: f64) -> PolyadChain {
    let (mut n1, mut n2) = chain_head(params, f);
    let mut states = Vec::new();
    while weighted_number(params, n1, n2) <= n_w_max {
        states.push((n1, n2));
        n1 += params.m2 as u64;
        n2 += params.m1 as u64;
    }
    PolyadChain { f, states }
}

/// First `len` states of the (infinite) chain of polyad `f`.
pub fn polyad_chain_with_len(params: &ResonanceParams, f: i64, len: usize) -> PolyadChain {
    let (mut n1, mut n2) = chain_head(params, f);
    let mut states = Vec::with_capacity(len);
    for _ in 0..len {
        states.push((n1, n2));
        n1 += params.m2 as u64;
        n2 += params.m1 as u64;
    }
    PolyadChain { f, states }
}

/// Real symmetric tridiagonal matrix: `diag` plus the coupling `off[i]`
/// between entries `i` and `i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// `n (n-1) ... (n-k+1)` as a running product.
fn falling_product(n: u64, k: u32) -> f64 {
    let mut acc = 1.0;
    for j in 0..k as u64 {
        acc *= (n - j) as f64;
    }
    acc
}

/// Chain matrix of the second integral restricted to one polyad.
pub fn f2_matrix(chain: &PolyadChain, params: &ResonanceParams) -> Tridiag {
    let diag = chain
        .states
        .iter()
        .map(|&(n1, n2)| weighted_number(params, n1, n2).powi(params.s as i32))
        .collect();
    let amp = 0.5 * params.coupling_scale * 2f64.powf((params.m1 + params.m2) as f64 / 2.0);
    let off = chain
        .states
        .iter()
        .skip(1)
        .map(|&(n1, n2)| {
            amp * falling_product(n1, params.m2).sqrt() * falling_product(n2, params.m1).sqrt()
        })
        .collect();
    Tridiag { diag, off }
}

/// Ascending eigenvalues of a symmetric tridiagonal matrix by the
/// implicit-shift QL iteration. `None` on the iteration budget.
pub fn sym_tridiag_eigs(t: &Tridiag) -> Option<Vec<f64>> {
    let mut d = t.diag.clone();
    let mut e = t.off.clone();
    e.push(0.0);
    tql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Some(d)
}

/// Eigenvalues ascending plus, for each, the eigenvector component on the
/// last chain state (the truncation-boundary weight).
pub fn sym_tridiag_eigs_with_boundary(t: &Tridiag) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = t.diag.len();
    let mut d = t.diag.clone();
    let mut e = t.off.clone();
    e.push(0.0);
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    tql(&mut d, &mut e, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let evals = order.iter().map(|&i| d[i]).collect();
    let boundary = if n == 0 {
        Vec::new()
    } else {
        order.iter().map(|&i| z[n - 1][i].abs()).collect()
    };
    Some((evals, boundary))
}

/// QL with implicit shifts on `(d, e)`; `e` has length `n` with the last
/// slot scratch. Optional accumulation of rotations into `z` columns.
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut Vec<Vec<f64>>>) -> Option<()> {
    let n = d.len();
    if n == 0 {
        return Some(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let denom = if g >= 0.0 { g + r } else { g - r };
            g = d[m] - d[l] + e[l] / denom;
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for row in z.iter_mut() {
                        f = row[i + 1];
                        row[i + 1] = s * row[i] + c * f;
                        row[i] = c * row[i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Some(())
}

/// One joint eigenvalue pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub f1: f64,
    pub f2: f64,
    pub f: i64,
    pub chain_index: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumWindow {
    pub f1_min: f64,
    pub f1_max: f64,
    pub f2_min: f64,
    pub f2_max: f64,
}

impl SpectrumWindow {
    pub fn new(f1: (f64, f64), f2: (f64, f64)) -> Result<SpectrumWindow, SpectrumError> {
        if f1.0 > f1.1 || f2.0 > f2.1 {
            return Err(SpectrumError::BadWindow);
        }
        Ok(SpectrumWindow {
            f1_min: f1.0,
            f1_max: f1.1,
            f2_min: f2.0,
            f2_max: f2.1,
        })
    }
}

/// Truncation sizes used for a spectrum run (J and the doubled check).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncations {
    pub base: usize,
    pub doubled: usize,
}

/// Joint spectrum over a window: every polyad with `f1` in range is
/// diagonalized at truncation `J` and `2J`; a point is converged when the
/// eigenvalue moves less than `tol` and its truncation-boundary weight is
/// below `√tol`. Output ordered by `(f, f2)` regardless of the thread
/// count (capped by the `MONODROMY_THREADS` environment variable).
pub fn joint_spectrum(
    params: &ResonanceParams,
    window: &SpectrumWindow,
    tol: f64,
) -> Result<(Vec<SpectrumPoint>, Truncations), SpectrumError> {
    let off = params.f1_offset();
    let f_lo = (window.f1_min - off).ceil() as i64;
    let f_hi = (window.f1_max - off).floor() as i64;
    if f_lo > f_hi {
        return Ok((
            Vec::new(),
            Truncations {
                base: 0,
                doubled: 0,
            },
        ));
    }
    // Truncation: run the chain until the confining diagonal dominates the
    // window by a wide margin.
    let f2_abs = window.f2_max.abs().max(window.f2_min.abs()).max(1.0);
    let n_w_max = (4.0 * f2_abs).powf(1.0 / params.s as f64) + (params.m1 + params.m2) as f64 + 4.0;
    let base_len = polyad_chain(params, 0, n_w_max).states.len().max(4);
    let truncations = Truncations {
        base: base_len,
        doubled: 2 * base_len,
    };

    let fs: Vec<i64> = (f_lo..=f_hi).collect();
    let threads = thread_cap().min(fs.len().max(1));
    let chunks: Vec<&[i64]> = fs.chunks(fs.len().div_ceil(threads)).collect();
    let results: Result<Vec<Vec<SpectrumPoint>>, SpectrumError> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                scope.spawn(move || {
                    let mut out = Vec::new();
                    for &f in chunk {
                        out.extend(polyad_points(params, window, tol, f, base_len)?);
                    }
                    Ok::<_, SpectrumError>(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("spectrum worker panicked"))
            .collect()
    });
    let mut points: Vec<SpectrumPoint> = results?.into_iter().flatten().collect();
    points.sort_by(|a, b| a.f.cmp(&b.f).then(a.f2.total_cmp(&b.f2)));
    Ok((points, truncations))
}

fn thread_cap() -> usize {
    match std::env::var("MONODROMY_THREADS") {
        Ok(v) => v.parse::<usize>().ok().filter(|&n| n >= 1).unwrap_or(1),
        Err(_) => 1,
    }
}

fn polyad_points(
    params: &ResonanceParams,
    window: &SpectrumWindow,
    tol: f64,
    f: i64,
    base_len: usize,
) -> Result<Vec<SpectrumPoint>, SpectrumError> {
    let chain = polyad_chain_with_len(params, f, base_len);
    let chain2 = polyad_chain_with_len(params, f, 2 * base_len);
    let t1 = f2_matrix(&chain, params);
    let t2 = f2_matrix(&chain2, params);
    let (evals, boundary) =
        sym_tridiag_eigs_with_boundary(&t1).ok_or(SpectrumError::NonConvergence {
            f,
            size: base_len,
        })?;
    let evals2 = sym_tridiag_eigs(&t2).ok_or(SpectrumError::NonConvergence {
        f,
        size: 2 * base_len,
    })?;
    let f1 = f as f64 + params.f1_offset();
    let mut out = Vec::new();
    for (i, (&lambda, &edge)) in evals.iter().zip(&boundary).enumerate() {
        if lambda < window.f2_min || lambda > window.f2_max {
            continue;
        }
        // Nearest eigenvalue of the doubled truncation.
        let drift = evals2
            .iter()
            .map(|&mu| (mu - lambda).abs())
            .fold(f64::INFINITY, f64::min);
        let converged = drift < tol && edge < tol.sqrt();
        out.push(SpectrumPoint {
            f1,
            f2: lambda,
            f,
            chain_index: i,
            converged,
        });
    }
    Ok(out)
}

/// CSV with a JSON metadata comment line:
/// `# {...}` then `f1,f2,f,chain_index,converged`.
pub fn write_csv<W: std::io::Write>(
    w: &mut W,
    points: &[SpectrumPoint],
    params: &ResonanceParams,
    window: &SpectrumWindow,
    tol: f64,
    truncations: Truncations,
) -> std::io::Result<()> {
    let meta = serde_json::json!({
        "params": params,
        "window": window,
        "tol": tol,
        "truncations": truncations,
    });
    writeln!(w, "# {meta}")?;
    writeln!(w, "f1,f2,f,chain_index,converged")?;
    for p in points {
        writeln!(
            w,
            "{},{},{},{},{}",
            p.f1, p.f2, p.f, p.chain_index, p.converged
        )?;
    }
    Ok(())
}

/// Reads the CSV format emitted by [`write_csv`]; returns the points and
/// the raw metadata line, if present.
pub fn read_csv(text: &str) -> Result<(Vec<SpectrumPoint>, Option<String>), SpectrumError> {
    let mut meta = None;
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            meta.get_or_insert_with(|| rest.trim().to_string());
            continue;
        }
        if line.starts_with("f1,") {
            continue; // header
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(SpectrumError::Csv {
                line: idx + 1,
                reason: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let bad = |what: &str| SpectrumError::Csv {
            line: idx + 1,
            reason: format!("bad {what}"),
        };
        points.push(SpectrumPoint {
            f1: fields[0].parse().map_err(|_| bad("f1"))?,
            f2: fields[1].parse().map_err(|_| bad("f2"))?,
            f: fields[2].parse().map_err(|_| bad("f"))?,
            chain_index: fields[3].parse().map_err(|_| bad("chain_index"))?,
            converged: fields[4].parse().map_err(|_| bad("converged"))?,
        });
    }
    Ok((points, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m1: u32, m2: u32, s: u32) -> ResonanceParams {
        ResonanceParams::with_exponent(m1, m2, s).unwrap()
    }

    #[test]
    fn resonance_validation() {
        assert!(ResonanceParams::new(2, 4).is_err());
        assert!(ResonanceParams::with_exponent(1, 1, 1).is_err());
        assert_eq!(ResonanceParams::new(1, 1).unwrap().s, 2);
        assert_eq!(ResonanceParams::new(1, 2).unwrap().s, 2);
        assert_eq!(ResonanceParams::new(2, 3).unwrap().s, 3);
    }

    #[test]
    fn chains_enumerate_the_polyad() {
        let p12 = params(1, 2, 2);
        let c = polyad_chain(&p12, 0, 20.0);
        assert!(c.states.starts_with(&[(0, 0), (2, 1), (4, 2)]));
        let c1 = polyad_chain(&p12, 1, 20.0);
        assert!(c1.states.starts_with(&[(1, 0), (3, 1), (5, 2)]));
        let p11 = params(1, 1, 2);
        let c3 = polyad_chain(&p11, 3, 10.0);
        assert_eq!(c3.states, vec![(3, 0), (4, 1), (5, 2), (6, 3)]);
        for w in c3.states.windows(2) {
            assert_eq!(w[1].0 - w[0].0, 1);
            assert_eq!(w[1].1 - w[0].1, 1);
        }
    }

    #[test]
    fn chain_matrix_small_cases() {
        let p = params(1, 1, 2);
        // Single-state chain.
        let single = PolyadChain {
            f: 5,
            states: vec![(5, 0)],
        };
        let t = f2_matrix(&single, &p);
        assert_eq!(t.diag, vec![36.0]); // (5.5 + 0.5)² = 36
        assert!(t.off.is_empty());
        // Two states (1,0),(2,1): coupling 1/2·2·√(2·1) = √2.
        let two = PolyadChain {
            f: 1,
            states: vec![(1, 0), (2, 1)],
        };
        let t = f2_matrix(&two, &p);
        assert_eq!(t.diag, vec![4.0, 16.0]);
        assert!((t.off[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn off_diagonals_are_positive() {
        for (m1, m2) in [(1, 1), (1, 2), (2, 3), (1, 3)] {
            let p = ResonanceParams::new(m1, m2).unwrap();
            for f in -3..=3 {
                let c = polyad_chain_with_len(&p, f, 12);
                let t = f2_matrix(&c, &p);
                assert!(t.off.iter().all(|&x| x > 0.0), "m1={m1} m2={m2} f={f}");
            }
        }
    }

    #[test]
    fn eigs_of_diagonal_matrix() {
        let t = Tridiag {
            diag: vec![3.0, -1.0, 2.0],
            off: vec![0.0, 0.0],
        };
        assert_eq!(sym_tridiag_eigs(&t).unwrap(), vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn eigs_of_two_by_two_match_closed_form() {
        let (a, b, d) = (1.5, 0.7, -2.0);
        let t = Tridiag {
            diag: vec![a, d],
            off: vec![b],
        };
        let evals = sym_tridiag_eigs(&t).unwrap();
        let mid = (a + d) / 2.0;
        let rad = ((a - d) * (a - d) / 4.0 + b * b).sqrt();
        assert!((evals[0] - (mid - rad)).abs() < 1e-14);
        assert!((evals[1] - (mid + rad)).abs() < 1e-14);
    }

    #[test]
    fn eigen_residuals_are_small() {
        // ‖T v − λ v‖ check with accumulated vectors on a physical chain.
        let p = params(1, 2, 2);
        let c = polyad_chain_with_len(&p, 1, 25);
        let t = f2_matrix(&c, &p);
        let n = t.diag.len();
        let mut d = t.diag.clone();
        let mut e = t.off.clone();
        e.push(0.0);
        let mut z: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        tql(&mut d, &mut e, Some(&mut z)).unwrap();
        let scale = t.diag.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        for j in 0..n {
            for i in 0..n {
                let mut r = t.diag[i] * z[i][j] - d[j] * z[i][j];
                if i > 0 {
                    r += t.off[i - 1] * z[i - 1][j];
                }
                if i + 1 < n {
                    r += t.off[i] * z[i + 1][j];
                }
                assert!(r.abs() < 1e-10 * scale, "residual {r} at ({i},{j})");
            }
        }
    }

    #[test]
    fn truncation_growth_interlaces() {
        // Cauchy interlacing for nested chain matrices.
        let p = params(1, 1, 2);
        let small = f2_matrix(&polyad_chain_with_len(&p, 0, 12), &p);
        let large = f2_matrix(&polyad_chain_with_len(&p, 0, 13), &p);
        let a = sym_tridiag_eigs(&small).unwrap();
        let b = sym_tridiag_eigs(&large).unwrap();
        for i in 0..a.len() {
            assert!(b[i] <= a[i] + 1e-9 && a[i] <= b[i + 1] + 1e-9);
        }
    }

    #[test]
    fn coupling_only_spectrum_is_symmetric() {
        // With the confining term removed the chain has zero diagonal and
        // a ±-paired spectrum.
        let p = params(1, 2, 2);
        let c = polyad_chain_with_len(&p, 0, 14);
        let t = f2_matrix(&c, &p);
        let zero_diag = Tridiag {
            diag: vec![0.0; t.diag.len()],
            off: t.off.clone(),
        };
        let ev = sym_tridiag_eigs(&zero_diag).unwrap();
        let n = ev.len();
        for i in 0..n / 2 {
            assert!((ev[i] + ev[n - 1 - i]).abs() < 1e-9 * ev[n - 1].abs().max(1.0));
        }
    }

    #[test]
    fn joint_spectrum_is_sorted_and_windowed() {
        let p = params(1, 1, 2);
        let w = SpectrumWindow::new((-4.0, 4.0), (0.0, 60.0)).unwrap();
        let (pts, trunc) = joint_spectrum(&p, &w, 1e-8).unwrap();
        assert!(trunc.doubled == 2 * trunc.base);
        assert!(!pts.is_empty());
        for win in pts.windows(2) {
            assert!((win[0].f, win[0].f2) <= (win[1].f, win[1].f2));
        }
        for pt in &pts {
            assert!(pt.f2 >= 0.0 && pt.f2 <= 60.0);
            assert!(pt.f1 >= -4.0 && pt.f1 <= 4.0);
        }
        // Low-lying eigenvalues are converged.
        assert!(pts.iter().any(|p| p.converged));
    }

    #[test]
    fn empty_window_gives_empty_list() {
        let p = params(1, 1, 2);
        let w = SpectrumWindow::new((0.2, 0.3), (0.0, 1.0)).unwrap();
        let (pts, _) = joint_spectrum(&p, &w, 1e-8).unwrap();
        assert!(pts.is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let p = params(1, 2, 2);
        let w = SpectrumWindow::new((-2.0, 2.0), (0.0, 30.0)).unwrap();
        let (pts, trunc) = joint_spectrum(&p, &w, 1e-8).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &pts, &p, &w, 1e-8, trunc).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (back, meta) = read_csv(&text).unwrap();
        assert_eq!(back, pts);
        let meta: serde_json::Value = serde_json::from_str(&meta.unwrap()).unwrap();
        assert_eq!(meta["params"]["m1"], 1);
        assert_eq!(meta["truncations"]["base"], trunc.base);
    }
}
