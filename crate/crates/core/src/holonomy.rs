//! Cell transport along paths through a defect arrangement.
//!
//! Between crossings a cell is constant in its chart; at each crossing
//! the defect's gluing applies (inverted for negative crossings). All
//! intersection predicates are exact; there is no floating point in this
//! module.
//!
//! The holonomy of a closed loop is reported in the loop's initial cell
//! frame, stored-convention: the matrix acts from the left on the column
//! stack `(e_v; e_h)`, so row `i` lists the coefficients of the image of
//! basis vector `i` over the initial basis. Loops composed one after the
//! other multiply with the first-crossed factor leftmost.

use crate::defect::{AffineMap, Arrangement, DefectSpec};
use crate::mat2::{rat_int, RatMat2, Rational, Vec2};
use crate::Sign;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum HolonomyError {
    #[error("path needs at least two distinct vertices")]
    PathTooShort,
    #[error("consecutive path vertices {0} and {1} coincide")]
    RepeatedVertex(usize, usize),
    #[error("path vertex {vertex} coincides with the apex of defect {defect}")]
    VertexAtApex { vertex: usize, defect: usize },
    #[error("path passes through the apex of defect {defect} on segment {segment}")]
    ThroughApex { segment: usize, defect: usize },
    #[error("path runs along the cut of defect {defect} near segment {segment}")]
    TangentAlongCut { segment: usize, defect: usize },
    #[error("loop holonomy requires a closed path")]
    NotClosed,
    #[error("cell edge vectors must be linearly independent")]
    DegenerateCell,
    #[error(
        "cell cannot cross the defect line of defect {defect} unambiguously at {point}: \
         scaled edge {edge} is outside the admissibility sublattice (index {index})"
    )]
    InadmissibleCell {
        defect: usize,
        point: String,
        edge: String,
        index: u64,
    },
    #[error("gluing of defect {defect} rotates a cell edge by a half turn; winding is undefined")]
    HalfTurnRotation { defect: usize },
    #[error("deformation sign is undefined for this loop/cell: {0}")]
    DegenerateSign(String),
    #[error("multiplier overflow while computing the admissible cell")]
    MultiplierOverflow,
}

/// Exact polyline, optionally closed (the closing segment returns to the
/// first vertex).
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub vertices: Vec<Vec2>,
    pub closed: bool,
}

impl PathSpec {
    pub fn closed(vertices: Vec<Vec2>) -> PathSpec {
        PathSpec {
            vertices,
            closed: true,
        }
    }

    pub fn open(vertices: Vec<Vec2>) -> PathSpec {
        PathSpec {
            vertices,
            closed: false,
        }
    }

    fn segment_count(&self) -> usize {
        if self.closed {
            self.vertices.len()
        } else {
            self.vertices.len() - 1
        }
    }

    fn segment(&self, k: usize) -> (&Vec2, &Vec2) {
        let n = self.vertices.len();
        (&self.vertices[k], &self.vertices[(k + 1) % n])
    }

    /// Reversed traversal.
    pub fn reversed(&self) -> PathSpec {
        let mut vertices = self.vertices.clone();
        if self.closed {
            // Keep the base vertex first.
            vertices[1..].reverse();
        } else {
            vertices.reverse();
        }
        PathSpec {
            vertices,
            closed: self.closed,
        }
    }

    pub fn validate(&self, arr: &Arrangement) -> Result<(), HolonomyError> {
        if self.vertices.len() < 2 {
            return Err(HolonomyError::PathTooShort);
        }
        let n = self.vertices.len();
        for k in 0..self.segment_count() {
            let (p, q) = self.segment(k);
            if p == q {
                return Err(HolonomyError::RepeatedVertex(k, (k + 1) % n));
            }
        }
        for (vi, v) in self.vertices.iter().enumerate() {
            for (di, d) in arr.defects.iter().enumerate() {
                if d.has_cut() && v == &d.apex {
                    return Err(HolonomyError::VertexAtApex {
                        vertex: vi,
                        defect: di,
                    });
                }
            }
        }
        Ok(())
    }
}

/// A single transversal crossing of a cut ray.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub defect: usize,
    /// +1 when the motion crosses with `cross(cut_direction, motion) > 0`
    /// (the counterclockwise sense around the apex).
    pub orientation: i8,
    pub segment: usize,
    /// Parameter within the segment; interior crossings in `(0, 1)`,
    /// crossings at a path vertex pinned to 1 on the arriving segment.
    pub t: Rational,
    pub point: Vec2,
}

/// Ordered transversal crossings of the path with every cut in the
/// arrangement. Tangential touches are skipped; running along a cut or
/// through an apex is an error.
pub fn crossing_sequence(
    path: &PathSpec,
    arr: &Arrangement,
) -> Result<Vec<Crossing>, HolonomyError> {
    path.validate(arr)?;
    let mut all = Vec::new();
    for (di, d) in arr.defects.iter().enumerate() {
        if d.has_cut() {
            crossings_with_defect(path, di, d, &mut all)?;
        }
    }
    // Order along the path; simultaneous crossings (overlapping collinear
    // cuts) tie-break by defect index — their gluings commute by
    // construction.
    all.sort_by(|a, b| {
        (a.segment, &a.t, a.defect)
            .cmp(&(b.segment, &b.t, b.defect))
    });
    Ok(all)
}

fn crossings_with_defect(
    path: &PathSpec,
    di: usize,
    d: &DefectSpec,
    out: &mut Vec<Crossing>,
) -> Result<(), HolonomyError> {
    let apex = &d.apex;
    let dir = &d.cut_direction;
    let nseg = path.segment_count();
    let nv = path.vertices.len();
    // Side of each vertex relative to the cut line, and its ray parameter
    // (scaled by |dir|², sign is what matters).
    let side = |v: &Vec2| -> i8 {
        let c = dir.cross(&v.sub(apex));
        if c.is_positive() {
            1
        } else if c.is_negative() {
            -1
        } else {
            0
        }
    };
    let ray_pos = |v: &Vec2| -> Rational { v.sub(apex).dot(dir) };

    let sides: Vec<i8> = path.vertices.iter().map(side).collect();

    // Interior crossings and on-line segment checks.
    for k in 0..nseg {
        let (p, q) = path.segment(k);
        let (sp, sq) = (sides[k], sides[(k + 1) % nv]);
        if sp == 0 && sq == 0 {
            // Segment lies on the cut line: an error if it meets the open
            // ray, harmless behind the apex.
            let (a, b) = (ray_pos(p), ray_pos(q));
            let hi = if a > b { a } else { b };
            if hi.is_positive() {
                return Err(HolonomyError::TangentAlongCut {
                    segment: k,
                    defect: di,
                });
            }
            continue;
        }
        if sp != 0 && sq != 0 && sp != sq {
            // Transversal interior crossing.
            let u = q.sub(p);
            let denom = dir.cross(&u);
            let t = -dir.cross(&p.sub(apex)) / &denom;
            let s = u.cross(&p.sub(apex)) / u.cross(dir);
            if s.is_zero() {
                return Err(HolonomyError::ThroughApex {
                    segment: k,
                    defect: di,
                });
            }
            if s.is_positive() {
                let point = p.add(&u.scale(&t));
                out.push(Crossing {
                    defect: di,
                    orientation: sq,
                    segment: k,
                    t,
                    point,
                });
            }
        }
    }

    // Vertex-on-line runs. For open paths the runs touching the ends are
    // touches, not crossings.
    if sides.iter().all(|&s| s == 0) {
        // Entire path on the line; overlapping segments were checked above.
        return Ok(());
    }
    let zero_at = |i: usize| sides[i % nv] == 0;
    let mut handled = vec![false; nv];
    for start in 0..nv {
        if !zero_at(start) || handled[start] {
            continue;
        }
        if !path.closed && start == 0 {
            // Leading run of an open path: skip it entirely.
            let mut i = 0;
            while i < nv && zero_at(i) {
                handled[i] = true;
                i += 1;
            }
            continue;
        }
        // Only start a run at its head.
        let prev = (start + nv - 1) % nv;
        if path.closed && zero_at(prev) {
            continue; // reached again from the run's head
        }
        let mut run = vec![start];
        handled[start] = true;
        let mut i = start + 1;
        while (path.closed || i < nv) && zero_at(i) {
            run.push(i % nv);
            handled[i % nv] = true;
            i += 1;
        }
        let after_idx = i % nv;
        if !path.closed && after_idx == 0 {
            continue; // trailing run of an open path
        }
        let before = sides[prev];
        let after = sides[after_idx];
        debug_assert!(before != 0 && after != 0);
        let positions: Vec<Rational> = run.iter().map(|&v| ray_pos(&path.vertices[v])).collect();
        let any_pos = positions.iter().any(|s| s.is_positive());
        let all_pos = positions.iter().all(|s| s.is_positive());
        if any_pos && !all_pos {
            return Err(HolonomyError::ThroughApex {
                segment: run[0],
                defect: di,
            });
        }
        if !any_pos {
            continue; // touches the line behind the apex only
        }
        if before != after {
            // Genuine crossing at the run's head vertex; it belongs to the
            // end of the segment arriving there (t = 1 orders it after any
            // interior crossing of that segment).
            let head = run[0];
            let seg = (head + nv - 1) % nv;
            out.push(Crossing {
                defect: di,
                orientation: after,
                segment: seg,
                t: rat_int(1),
                point: path.vertices[head].clone(),
            });
        }
        // Same side on both flanks: tangential touch, skipped.
    }
    Ok(())
}

/// Probe cell: anchor, unit edge vectors, and the positive multipliers
/// scaling them into the transported parallelogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub anchor: Vec2,
    pub e_v: Vec2,
    pub e_h: Vec2,
    pub multiplier: (u64, u64),
}

impl Cell {
    /// Standard unit cell `e_v = (0,1)`, `e_h = (1,0)`.
    pub fn standard(anchor: Vec2) -> Cell {
        Cell {
            anchor,
            e_v: Vec2::from_ints(0, 1),
            e_h: Vec2::from_ints(1, 0),
            multiplier: (1, 1),
        }
    }

    pub fn with_multiplier(mut self, m_v: u64, m_h: u64) -> Cell {
        self.multiplier = (m_v, m_h);
        self
    }

    fn validate(&self) -> Result<(), HolonomyError> {
        if self.e_v.cross(&self.e_h).is_zero() || self.multiplier.0 == 0 || self.multiplier.1 == 0
        {
            return Err(HolonomyError::DegenerateCell);
        }
        Ok(())
    }
}

/// Cell frame at one instant of the transport, in base-chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub anchor: Vec2,
    pub e_v: Vec2,
    pub e_h: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportStep {
    pub crossing: Crossing,
    pub after: CellState,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportLog {
    pub cell: Cell,
    pub initial: CellState,
    pub steps: Vec<TransportStep>,
    /// Composite of the gluings applied, in crossing order.
    pub developing: AffineMap,
}

impl TransportLog {
    pub fn final_state(&self) -> &CellState {
        self.steps.last().map(|s| &s.after).unwrap_or(&self.initial)
    }
}

/// Componentwise least multipliers `(m_v, m_h)` making the cell's scaled
/// edges admissible at every crossing of this path, in sequence (each
/// crossing constrains the edge vectors as transported so far). `(1, 1)`
/// when no fractional line is crossed.
pub fn minimal_admissible_cell(
    path: &PathSpec,
    arr: &Arrangement,
) -> Result<(u64, u64), HolonomyError> {
    let crossings = crossing_sequence(path, arr)?;
    let m_v = minimal_edge_multiplier(&Vec2::from_ints(0, 1), &crossings, arr)?;
    let m_h = minimal_edge_multiplier(&Vec2::from_ints(1, 0), &crossings, arr)?;
    Ok((m_v, m_h))
}

fn minimal_edge_multiplier(
    edge: &Vec2,
    crossings: &[Crossing],
    arr: &Arrangement,
) -> Result<u64, HolonomyError> {
    let mut m = BigInt::one();
    let mut w = edge.clone();
    for c in crossings {
        let d = &arr.defects[c.defect];
        let q = BigInt::from(d.gluing.sublattice_index);
        // m·w must be integral.
        m = m.lcm(w.x.denom()).lcm(w.y.denom());
        // m·ξ(w) ≡ 0 (mod q) in the defect frame.
        let (xi, _) = d.cut_coords(&w.add(&d.apex));
        let need = (&q * xi.denom()) / xi.numer().gcd(&(&q * xi.denom()));
        m = m.lcm(&need);
        let map = d.plane_map().linear;
        let map = if c.orientation >= 0 {
            map
        } else {
            map.inverse().expect("gluings are unimodular")
        };
        w = map.mul_vec(&w);
    }
    m.to_u64().ok_or(HolonomyError::MultiplierOverflow)
}

/// Transports a cell along the path, logging the state after every
/// crossing. Fractional crossings verify the scaled edge vectors lie in
/// the defect's admissibility sublattice.
pub fn transport_cell(
    cell: &Cell,
    path: &PathSpec,
    arr: &Arrangement,
) -> Result<TransportLog, HolonomyError> {
    cell.validate()?;
    let crossings = crossing_sequence(path, arr)?;
    let mut developing = AffineMap::identity();
    let mut state = CellState {
        anchor: cell.anchor.clone(),
        e_v: cell.e_v.clone(),
        e_h: cell.e_h.clone(),
    };
    let initial = state.clone();
    let mut steps = Vec::new();
    for c in &crossings {
        let d = &arr.defects[c.defect];
        let q = d.gluing.sublattice_index;
        if q > 1 {
            for (name, edge, mult) in [
                ("e_v", &state.e_v, cell.multiplier.0),
                ("e_h", &state.e_h, cell.multiplier.1),
            ] {
                let scaled = edge.scale(&rat_int(mult as i64));
                let ok = scaled.is_integer() && {
                    let (xi, _) = d.cut_coords(&scaled.add(&d.apex));
                    xi.is_integer() && (xi.numer() % BigInt::from(q)).is_zero()
                };
                if !ok {
                    return Err(HolonomyError::InadmissibleCell {
                        defect: c.defect,
                        point: c.point.to_string(),
                        edge: format!("{mult}·{name} = {scaled}"),
                        index: q,
                    });
                }
            }
        }
        let g = d.plane_map();
        let g = if c.orientation >= 0 {
            g
        } else {
            g.inverse().expect("gluings are unimodular")
        };
        state = CellState {
            anchor: g.apply(&state.anchor),
            e_v: g.linear.mul_vec(&state.e_v),
            e_h: g.linear.mul_vec(&state.e_h),
        };
        developing = g.compose(&developing);
        let note = if q > 1 && (cell.multiplier.0 > 1 || cell.multiplier.1 > 1) {
            Some(if q == 2 {
                "doubled cell crosses the line: internal registry shifts from \
                 face-centered to body-centered"
                    .to_string()
            } else {
                format!("multiplied cell crosses a fractional line of index {q}")
            })
        } else {
            None
        };
        steps.push(TransportStep {
            crossing: c.clone(),
            after: state.clone(),
            note,
        });
    }
    Ok(TransportLog {
        cell: cell.clone(),
        initial,
        steps,
        developing,
    })
}

/// Holonomy of a closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct HolonomyResult {
    /// Stored-convention matrix over the initial cell frame.
    pub linear: RatMat2,
    /// Translation part of the developed affine holonomy, expressed in
    /// the initial cell frame (the Burgers vector for dislocations; zero
    /// for a single angular defect whose apex is the origin).
    pub translation: Vec2,
    /// Signed count of full turns of the transported frame.
    pub winding_k: i64,
    pub crossings: Vec<(usize, i8)>,
    /// Least admissible multipliers for this loop.
    pub admissible_multiplier: (u64, u64),
}

pub fn loop_holonomy(
    path: &PathSpec,
    arr: &Arrangement,
    cell: &Cell,
) -> Result<HolonomyResult, HolonomyError> {
    if !path.closed {
        return Err(HolonomyError::NotClosed);
    }
    let log = transport_cell(cell, path, arr)?;
    let p0 = RatMat2::from_columns(&cell.e_v, &cell.e_h);
    let p0_inv = p0.inverse().ok_or(HolonomyError::DegenerateCell)?;
    let linear = p0_inv
        .mul(&log.developing.linear)
        .mul(&p0)
        .transpose();
    debug_assert!(linear.det().is_one());
    let translation = p0_inv.mul_vec(&log.developing.offset);
    let winding_k = winding_count(&log)?;
    let crossings = log
        .steps
        .iter()
        .map(|s| (s.crossing.defect, s.crossing.orientation))
        .collect();
    let admissible_multiplier = minimal_admissible_cell(path, arr)?;
    Ok(HolonomyResult {
        linear,
        translation,
        winding_k,
        crossings,
        admissible_multiplier,
    })
}

/// Winding of the transported `e_v` direction: the signed number of times
/// the piecewise rotation passes the ray opposite the initial direction.
/// Every single gluing must rotate the edge by strictly less than a half
/// turn (violations are rejected).
fn winding_count(log: &TransportLog) -> Result<i64, HolonomyError> {
    let anti = log.initial.e_v.neg();
    let mut count = 0i64;
    let mut prev = log.initial.e_v.clone();
    for step in &log.steps {
        let next = &step.after.e_v;
        let cr = prev.cross(next);
        if cr.is_zero() {
            if prev.dot(next).is_negative() {
                return Err(HolonomyError::HalfTurnRotation {
                    defect: step.crossing.defect,
                });
            }
            continue; // no rotation
        }
        let ccw = cr.is_positive();
        let inside = if ccw {
            prev.cross(&anti).is_positive() && anti.cross(next).is_positive()
        } else {
            prev.cross(&anti).is_negative() && anti.cross(next).is_negative()
        };
        let landing = next.cross(&anti).is_zero() && next.dot(&anti).is_positive();
        if inside || landing {
            count += if ccw { 1 } else { -1 };
        }
        prev = next.clone();
    }
    Ok(count)
}

/// Geometric sign of an angular defect read off the transport log: the
/// back edge of the final cell is aligned with the initial one and the
/// front-edge displacement is compared with the apex direction. Inward
/// deformation is the removed-angle sign `Minus`, outward is `Plus`; the
/// answer is independent of the traversal direction.
///
/// The loop must arrive at its base vertex moving transversally to the
/// apex bearing (base the loop on the middle of an edge facing the apex,
/// not on a corner); otherwise the front/back identification of the cell
/// degenerates.
pub fn deformation_sign(
    arr: &Arrangement,
    defect_index: usize,
    path: &PathSpec,
    cell: &Cell,
) -> Result<Sign, HolonomyError> {
    if !path.closed {
        return Err(HolonomyError::NotClosed);
    }
    let log = transport_cell(cell, path, arr)?;
    let apex = &arr.defects[defect_index].apex;
    // Return motion: direction of the closing segment.
    let motion = path.vertices[0].sub(path.vertices.last().expect("validated"));
    let m_v = rat_int(cell.multiplier.0 as i64);
    let m_h = rat_int(cell.multiplier.1 as i64);
    let scaled_v = cell.e_v.scale(&m_v);
    let scaled_h = cell.e_h.scale(&m_h);
    let fin = log.final_state();
    let scaled_v_fin = fin.e_v.scale(&m_v);
    let scaled_h_fin = fin.e_h.scale(&m_h);
    // The "along" edge is the one most aligned with the return motion.
    let dv = scaled_v.dot(&motion);
    let dh = scaled_h.dot(&motion);
    let lhs = &dv * &dv * scaled_h.dot(&scaled_h);
    let rhs = &dh * &dh * scaled_v.dot(&scaled_v);
    let (u, v, u_fin, v_fin, du) = if lhs > rhs {
        (scaled_v, scaled_h, scaled_v_fin, scaled_h_fin, dv)
    } else if rhs > lhs {
        (scaled_h, scaled_v, scaled_h_fin, scaled_v_fin, dh)
    } else {
        return Err(HolonomyError::DegenerateSign(
            "no cell edge is aligned with the return motion".into(),
        ));
    };
    if du.is_zero() {
        return Err(HolonomyError::DegenerateSign(
            "return motion is orthogonal to the along edge".into(),
        ));
    }
    let fu = if du.is_positive() { rat_int(1) } else { rat_int(-1) };
    // Front-edge midpoint displacement after aligning the back edges.
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let delta = u_fin
        .sub(&u)
        .scale(&fu)
        .add(&v_fin.sub(&v).scale(&half));
    let front_mid = if fu.is_one() {
        cell.anchor.add(&u).add(&v.scale(&half))
    } else {
        cell.anchor.add(&v.scale(&half))
    };
    let toward_apex = apex.sub(&front_mid);
    let s = delta.dot(&toward_apex);
    if s.is_positive() {
        Ok(Sign::Minus)
    } else if s.is_negative() {
        Ok(Sign::Plus)
    } else {
        Err(HolonomyError::DegenerateSign(
            "front edge is undeformed relative to the apex".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defect::{
        build_arrangement, dislocation_defect, elementary_defect, rational_defect, vacancy,
        LatticeKind,
    };

    fn v(x: i64, y: i64) -> Vec2 {
        Vec2::from_ints(x, y)
    }

    fn rect_ccw(x0: i64, y0: i64, x1: i64, y1: i64) -> PathSpec {
        // Starts at (x1, y0), the lower-right corner, and runs ccw.
        PathSpec::closed(vec![v(x1, y0), v(x1, y1), v(x0, y1), v(x0, y0)])
    }

    fn square_arr(defects: Vec<DefectSpec>) -> Arrangement {
        build_arrangement(defects, LatticeKind::Square).unwrap()
    }

    #[test]
    fn loop_around_single_elementary_defect_has_one_crossing() {
        let arr = square_arr(vec![
            elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap()
        ]);
        let loop_ = rect_ccw(-3, -3, 3, 3);
        let cs = crossing_sequence(&loop_, &arr).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].defect, 0);
        assert_eq!(cs[0].orientation, 1);
    }

    #[test]
    fn loop_missing_all_cuts_is_empty() {
        let arr = square_arr(vec![
            elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap()
        ]);
        let loop_ = rect_ccw(-9, -9, -5, -5);
        assert!(crossing_sequence(&loop_, &arr).unwrap().is_empty());
    }

    #[test]
    fn figure_eight_crossings_have_opposite_orientations() {
        // Cuts pointing away from each other; the eight goes ccw around
        // the left defect and cw around the right one.
        let arr = square_arr(vec![
            elementary_defect(Sign::Minus, 1, v(0, 0), v(-1, 0)).unwrap(),
            elementary_defect(Sign::Plus, 1, v(6, 0), v(1, 0)).unwrap(),
        ]);
        let eight = PathSpec::closed(vec![
            v(3, -2),
            v(3, 2),
            v(-2, 2),
            v(-2, -2),
            v(3, -2),
            v(3, 2),
            v(9, 2),
            v(9, -2),
        ]);
        let cs = crossing_sequence(&eight, &arr).unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].defect, 0);
        assert_eq!(cs[1].defect, 1);
        assert_eq!(cs[0].orientation, -cs[1].orientation);
    }

    #[test]
    fn tangent_along_cut_is_an_error() {
        let arr = square_arr(vec![
            elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap()
        ]);
        let bad = PathSpec::open(vec![v(1, 0), v(4, 0)]);
        assert!(matches!(
            crossing_sequence(&bad, &arr),
            Err(HolonomyError::TangentAlongCut { .. })
        ));
    }

    #[test]
    fn through_apex_is_an_error() {
        let arr = square_arr(vec![
            elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap()
        ]);
        let bad = PathSpec::open(vec![v(-1, -1), v(1, 1)]);
        assert!(matches!(
            crossing_sequence(&bad, &arr),
            Err(HolonomyError::ThroughApex { .. })
        ));
    }

    #[test]
    fn vertex_on_cut_counts_once() {
        let arr = square_arr(vec![
            elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap()
        ]);
        let loop_ = PathSpec::closed(vec![v(3, -3), v(3, 0), v(3, 3), v(-3, 3), v(-3, -3)]);
        let cs = crossing_sequence(&loop_, &arr).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].orientation, 1);
    }

    #[test]
    fn vertex_touch_without_crossing_is_skipped() {
        let arr = square_arr(vec![
            elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap()
        ]);
        // Dips to the cut and retreats to the same side.
        let path = PathSpec::open(vec![v(2, -2), v(3, 0), v(4, -2)]);
        assert!(crossing_sequence(&path, &arr).unwrap().is_empty());
    }

    #[test]
    fn elementary_loop_monodromy_is_the_stored_shear() {
        let arr = square_arr(vec![
            elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap()
        ]);
        let loop_ = rect_ccw(-3, -3, 3, 3);
        let cell = Cell::standard(v(3, -3));
        let h = loop_holonomy(&loop_, &arr, &cell).unwrap();
        assert_eq!(h.linear, RatMat2::from_ints(1, 0, 1, 1));
        assert_eq!(h.translation, Vec2::zero());
        assert_eq!(h.winding_k, 0);
        // The stored frame matrix is a unit-module parabolic: conjugate to
        // (1 p; 0 1) with |p| = 1.
        match crate::sl2::classify(&h.linear).unwrap() {
            crate::sl2::ClassLabel::Parabolic { p, negated: false } => {
                assert!(p.abs().is_one());
            }
            other => panic!("expected parabolic class, got {other:?}"),
        }
    }

    #[test]
    fn reversal_inverts_holonomy_and_winding() {
        let arr = square_arr(vec![
            elementary_defect(Sign::Minus, 2, v(0, 0), v(1, 0)).unwrap(),
            elementary_defect(Sign::Plus, 1, v(0, 5), v(0, 1)).unwrap(),
        ]);
        let loop_ = rect_ccw(-4, -4, 4, 9);
        let cell = Cell::standard(v(4, -4));
        let fwd = loop_holonomy(&loop_, &arr, &cell).unwrap();
        let bwd = loop_holonomy(&loop_.reversed(), &arr, &cell).unwrap();
        assert_eq!(bwd.linear, fwd.linear.inverse().unwrap());
        assert_eq!(bwd.winding_k, -fwd.winding_k);
    }

    #[test]
    fn dislocation_loop_reports_burgers_translation() {
        let arr = square_arr(vec![dislocation_defect(
            v(0, 0),
            v(1, 0),
            Vec2::from_ints(0, 1),
            false,
        )
        .unwrap()]);
        let loop_ = rect_ccw(-3, -3, 3, 3);
        let cell = Cell::standard(v(3, -3));
        let h = loop_holonomy(&loop_, &arr, &cell).unwrap();
        assert_eq!(h.linear, RatMat2::identity());
        assert_eq!(h.translation, Vec2::from_ints(1, 0));
        // translation is reported over (e_v, e_h): (0,1) = 1·e_v + 0·e_h.
    }

    #[test]
    fn opposite_dislocations_cancel() {
        let arr = square_arr(vec![
            dislocation_defect(v(0, 0), v(1, 0), Vec2::from_ints(0, 1), false).unwrap(),
            dislocation_defect(v(0, 4), v(1, 0), Vec2::from_ints(0, 1), true).unwrap(),
        ]);
        let loop_ = rect_ccw(-3, -3, 3, 7);
        let cell = Cell::standard(v(3, -3));
        let h = loop_holonomy(&loop_, &arr, &cell).unwrap();
        assert_eq!(h.linear, RatMat2::identity());
        assert_eq!(h.translation, Vec2::zero());
    }

    #[test]
    fn unit_cell_cannot_cross_a_half_line() {
        let arr = square_arr(vec![
            rational_defect(1, 2, Sign::Minus, v(0, 0), v(1, 0)).unwrap()
        ]);
        let loop_ = rect_ccw(-3, -3, 4, 3);
        let unit = Cell::standard(v(4, -3));
        match loop_holonomy(&loop_, &arr, &unit) {
            Err(HolonomyError::InadmissibleCell { defect: 0, .. }) => {}
            other => panic!("expected inadmissible cell, got {other:?}"),
        }
        let doubled = Cell::standard(v(4, -3)).with_multiplier(1, 2);
        let h = loop_holonomy(&loop_, &arr, &doubled).unwrap();
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        assert_eq!(
            h.linear,
            RatMat2::new(rat_int(1), rat_int(0), half, rat_int(1))
        );
        assert_eq!(h.admissible_multiplier, (1, 2));
    }

    #[test]
    fn no_crossing_transport_is_constant() {
        let arr = square_arr(vec![vacancy(v(0, 0)).unwrap()]);
        let loop_ = rect_ccw(-3, -3, 3, 3);
        let cell = Cell::standard(v(3, -3));
        let log = transport_cell(&cell, &loop_, &arr).unwrap();
        assert!(log.steps.is_empty());
        assert_eq!(log.final_state(), &log.initial);
    }

    #[test]
    fn homotopic_wiggles_do_not_change_holonomy() {
        let arr = square_arr(vec![
            elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap()
        ]);
        let cell = Cell::standard(v(3, -3));
        let plain = rect_ccw(-3, -3, 3, 3);
        let wiggly = PathSpec::closed(vec![
            v(3, -3),
            v(3, 1),
            v(2, 1),
            v(2, 3),
            v(-3, 3),
            v(-3, -1),
            v(-1, -1),
            v(-3, -2),
        ]);
        let a = loop_holonomy(&plain, &arr, &cell).unwrap();
        let b = loop_holonomy(&wiggly, &arr, &cell).unwrap();
        assert_eq!(a.linear, b.linear);
        assert_eq!(a.winding_k, b.winding_k);
    }

    #[test]
    fn spike_across_a_cut_cancels() {
        let arr = square_arr(vec![
            elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap()
        ]);
        let cell = Cell::standard(v(3, -3));
        let plain = rect_ccw(-3, -3, 3, 3);
        // Same loop with an extra out-and-back spike through the cut.
        let spiked = PathSpec::closed(vec![
            v(3, -3),
            v(3, 3),
            v(-3, 3),
            v(-3, -3),
            v(1, -1),
            v(1, 1),
            v(1, -1),
        ]);
        let a = loop_holonomy(&plain, &arr, &cell).unwrap();
        let b = loop_holonomy(&spiked, &arr, &cell).unwrap();
        assert_eq!(a.linear, b.linear);
        assert_eq!(a.translation, b.translation);
    }

    #[test]
    fn deformation_sign_matches_defect_sign_both_directions() {
        for sign in [Sign::Minus, Sign::Plus] {
            let arr = square_arr(vec![elementary_defect(sign, 1, v(0, 0), v(1, 0)).unwrap()]);
            // Based mid-edge below the apex so both traversal directions
            // arrive horizontally.
            let ccw = PathSpec::closed(vec![
                v(1, -3),
                v(3, -3),
                v(3, 3),
                v(-3, 3),
                v(-3, -3),
            ]);
            let cell = Cell::standard(v(1, -3));
            let got_ccw = deformation_sign(&arr, 0, &ccw, &cell).unwrap();
            let got_cw = deformation_sign(&arr, 0, &ccw.reversed(), &cell).unwrap();
            assert_eq!(got_ccw, sign);
            assert_eq!(got_cw, sign);
        }
    }

    #[test]
    fn composition_matches_flower_loop() {
        // Two defects visited by petals from a common base point compose
        // with the first-visited factor leftmost.
        let arr = square_arr(vec![
            elementary_defect(Sign::Minus, 1, v(0, 0), v(0, 1)).unwrap(),
            elementary_defect(Sign::Minus, 2, v(7, 0), v(1, 0)).unwrap(),
        ]);
        let base = v(3, -4);
        let cell = Cell::standard(base.clone());
        let petal1 = PathSpec::closed(vec![
            base.clone(),
            v(3, 2),
            v(-2, 2),
            v(-2, -2),
            v(3, -2),
        ]);
        let petal2 = PathSpec::closed(vec![
            base.clone(),
            v(10, -4),
            v(10, 2),
            v(5, 2),
            v(5, -2),
        ]);
        let both = PathSpec::closed(vec![
            base.clone(),
            v(3, 2),
            v(-2, 2),
            v(-2, -2),
            v(3, -2),
            base.clone(),
            v(10, -4),
            v(10, 2),
            v(5, 2),
            v(5, -2),
        ]);
        let h1 = loop_holonomy(&petal1, &arr, &cell).unwrap();
        let h2 = loop_holonomy(&petal2, &arr, &cell).unwrap();
        let h = loop_holonomy(&both, &arr, &cell).unwrap();
        assert_eq!(h.linear, h1.linear.mul(&h2.linear));
    }
}
