//! Defect arrangements on the integer lattice.
//!
//! A defect is an apex, a cut ray, and an affine gluing applied when a
//! path crosses the cut. Everything is stored in lattice coordinates:
//! the square lattice uses the standard basis, the triangular lattice
//! oblique integer coordinates (basis vectors 60° apart), so all
//! predicates stay exact. The Euclidean embedding only matters when
//! rendering or producing numeric clouds.
//!
//! Frame convention: a defect's monodromy is stored as the matrix acting
//! from the left on the column stack `(e_v; e_h)` of its own frame, where
//! `e_h` is the cut direction `d` and `e_v` the completion `n` with
//! `det[d, n] = 1`. The induced plane map (column action on points) is
//! `B·Mᵀ·B⁻¹` with `B = [n d]`.

use crate::mat2::{rat_int, rational_to_f64, RatMat2, Rational, Vec2};
use crate::Sign;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DefectError {
    #[error("cut direction {0} must be a primitive integer vector")]
    NonPrimitiveDirection(String),
    #[error("apex {0} must be a lattice point")]
    NonIntegerApex(String),
    #[error("slope {p}:{q} is invalid (positive integers required)")]
    InvalidSlope { p: u64, q: u64 },
    #[error("burgers vector must be a nonzero integer vector")]
    BadBurgers,
    #[error("reglue matrix rejected: {0}")]
    ReglueMismatch(String),
    #[error("disclination count {count} not realizable: {reason}")]
    BadDisclination { count: i64, reason: String },
    #[error("defects {0} and {1} share an apex")]
    DuplicateApex(usize, usize),
    #[error("cut rays of defects {0} and {1} cross at {2}")]
    CutsCross(usize, usize, String),
    #[error("apex of defect {0} lies on the cut ray of defect {1}")]
    ApexOnCut(usize, usize),
    #[error("collinear overlapping cuts of defects {0} and {1} have non-commuting gluings")]
    OverlapNotCommuting(usize, usize),
    #[error("defect {index} is inconsistent: {reason}")]
    BadDefect { index: usize, reason: String },
    #[error("gluing rotation of defect {0} does not match the lattice symmetry")]
    RotationIncompatible(usize),
    #[error("fanned embedding unsupported: {0}")]
    FannedUnsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeKind {
    Square,
    Triangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefectKind {
    ElementaryPoint,
    RationalLine,
    Dislocation,
    Disclination,
    Reglue,
    Vacancy,
}

/// Affine plane map `z ↦ linear·z + offset` (column action).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap {
    pub linear: RatMat2,
    pub offset: Vec2,
}

impl AffineMap {
    pub fn identity() -> AffineMap {
        AffineMap {
            linear: RatMat2::identity(),
            offset: Vec2::zero(),
        }
    }

    pub fn apply(&self, z: &Vec2) -> Vec2 {
        self.linear.mul_vec(z).add(&self.offset)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            linear: self.linear.mul(&other.linear),
            offset: self.linear.mul_vec(&other.offset).add(&self.offset),
        }
    }

    pub fn inverse(&self) -> Option<AffineMap> {
        let inv = self.linear.inverse()?;
        Some(AffineMap {
            offset: inv.mul_vec(&self.offset).neg(),
            linear: inv,
        })
    }
}

/// Gluing data of one defect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluingMap {
    /// Monodromy in the defect frame, `(e_v; e_h)` stack convention.
    pub monodromy: RatMat2,
    /// Translation part in lattice coordinates (the Burgers vector for
    /// dislocations, zero for angular defects).
    pub translation: Vec2,
    /// Index of the sublattice of vectors that cross unambiguously; 1 for
    /// integer gluings, `q` for a `p:q` line defect.
    pub sublattice_index: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectSpec {
    pub kind: DefectKind,
    pub sign: Sign,
    pub apex: Vec2,
    /// Primitive cut direction; zero for vacancies (no cut).
    pub cut_direction: Vec2,
    /// Completion `n` with `det[d, n] = 1`.
    pub frame_normal: Vec2,
    /// `(p, q)` for wedge defects.
    pub slope: Option<(u64, u64)>,
    /// Quarter (square) or sixth (triangular) count for disclinations.
    pub rotation: Option<i64>,
    pub gluing: GluingMap,
}

impl DefectSpec {
    pub fn has_cut(&self) -> bool {
        !matches!(self.kind, DefectKind::Vacancy)
    }

    /// `B = [n d]` columns: the defect frame as `(e_v, e_h)`.
    pub fn frame(&self) -> RatMat2 {
        RatMat2::from_columns(&self.frame_normal, &self.cut_direction)
    }

    /// Plane map applied when the cut is crossed positively
    /// (`cross(d, motion) > 0`).
    pub fn plane_map(&self) -> AffineMap {
        if !self.has_cut() {
            return AffineMap::identity();
        }
        let b = self.frame();
        let b_inv = b.inverse().expect("frame is unimodular");
        let linear = b.mul(&self.gluing.monodromy.transpose()).mul(&b_inv);
        // g(z) = apex + D(z - apex) + t
        let offset = self
            .apex
            .sub(&linear.mul_vec(&self.apex))
            .add(&self.gluing.translation);
        AffineMap { linear, offset }
    }

    /// Lattice-frame coordinates `(ξ, η)` of `z − apex` with ξ along the
    /// cut and η along the completion.
    pub fn cut_coords(&self, z: &Vec2) -> (Rational, Rational) {
        let rel = z.sub(&self.apex);
        let c = RatMat2::from_columns(&self.cut_direction, &self.frame_normal);
        let v = c.inverse().expect("frame is unimodular").mul_vec(&rel);
        (v.x, v.y)
    }

    fn validate(&self, index: usize) -> Result<(), DefectError> {
        if !self.apex.is_integer() {
            return Err(DefectError::NonIntegerApex(self.apex.to_string()));
        }
        if matches!(self.kind, DefectKind::Vacancy) {
            return Ok(());
        }
        if !self.cut_direction.is_primitive() {
            return Err(DefectError::NonPrimitiveDirection(
                self.cut_direction.to_string(),
            ));
        }
        if !self.cut_direction.cross(&self.frame_normal).is_one() {
            return Err(DefectError::BadDefect {
                index,
                reason: "frame completion must satisfy det[d, n] = 1".into(),
            });
        }
        if !self.gluing.monodromy.det().is_one() {
            return Err(DefectError::BadDefect {
                index,
                reason: "gluing determinant is not 1".into(),
            });
        }
        if self.gluing.sublattice_index == 0 {
            return Err(DefectError::BadDefect {
                index,
                reason: "sublattice index must be positive".into(),
            });
        }
        if !self.gluing.translation.is_integer() {
            return Err(DefectError::BadDefect {
                index,
                reason: "translation must be a lattice vector".into(),
            });
        }
        Ok(())
    }
}

/// Completion `n` of a primitive `d` with `det[d, n] = 1`, reduced so the
/// component of `n` along `d` lies in `[0, 1)`.
pub fn canonical_normal(direction: &Vec2) -> Result<Vec2, DefectError> {
    if !direction.is_primitive() {
        return Err(DefectError::NonPrimitiveDirection(direction.to_string()));
    }
    let (dx, dy) = direction.integer_parts().expect("primitive implies integer");
    let eg = dx.extended_gcd(&dy);
    debug_assert!(eg.gcd.is_one());
    // det[d, (-y, x)] = dx·x − dy·(−y) = x·dx + y·dy = 1.
    let mut n = Vec2::new(
        Rational::from_integer(-eg.y),
        Rational::from_integer(eg.x),
    );
    let d2 = direction.dot(direction);
    let k = (n.dot(direction) / &d2).floor();
    n = n.sub(&direction.scale(&k));
    debug_assert!(direction.cross(&n).is_one());
    Ok(n)
}

fn reduced_slope(p: u64, q: u64) -> Result<(u64, u64), DefectError> {
    if p == 0 || q == 0 {
        return Err(DefectError::InvalidSlope { p, q });
    }
    let g = p.gcd(&q);
    Ok((p / g, q / g))
}

/// Wedge defect with `|p|`-step vertical matching: the removed (or added)
/// sector opens counterclockwise from the cut direction. The gluing's
/// monodromy is `(1 0; ±p 1)` in the defect frame.
pub fn elementary_defect(
    sign: Sign,
    p: u64,
    apex: Vec2,
    direction: Vec2,
) -> Result<DefectSpec, DefectError> {
    if p == 0 {
        return Err(DefectError::InvalidSlope { p, q: 1 });
    }
    wedge_defect(sign, p, 1, apex, direction, DefectKind::ElementaryPoint)
}

/// Fractional `p:q` line defect (`q ≥ 2`); `q = 1` degenerates to the
/// elementary point defect.
pub fn rational_defect(
    p: u64,
    q: u64,
    sign: Sign,
    apex: Vec2,
    direction: Vec2,
) -> Result<DefectSpec, DefectError> {
    let (p, q) = reduced_slope(p, q)?;
    if q == 1 {
        return elementary_defect(sign, p, apex, direction);
    }
    wedge_defect(sign, p, q, apex, direction, DefectKind::RationalLine)
}

fn wedge_defect(
    sign: Sign,
    p: u64,
    q: u64,
    apex: Vec2,
    direction: Vec2,
    kind: DefectKind,
) -> Result<DefectSpec, DefectError> {
    if !apex.is_integer() {
        return Err(DefectError::NonIntegerApex(apex.to_string()));
    }
    let normal = canonical_normal(&direction)?;
    let shear = Rational::new(BigInt::from(p), BigInt::from(q));
    let shear = match sign {
        Sign::Minus => shear,
        Sign::Plus => -shear,
    };
    let monodromy = RatMat2::new(rat_int(1), rat_int(0), shear, rat_int(1));
    Ok(DefectSpec {
        kind,
        sign,
        apex,
        cut_direction: direction,
        frame_normal: normal,
        slope: Some((p, q)),
        rotation: None,
        gluing: GluingMap {
            monodromy,
            translation: Vec2::zero(),
            sublattice_index: q,
        },
    })
}

/// Point defect from a rational cut with consecutive boundary
/// identification. `gluing_linear` is the stored-convention monodromy; its
/// plane action must send the lower boundary primitive `d` to the upper
/// boundary primitive `q·d + p·n`.
pub fn reglue_defect(
    p: u64,
    q: u64,
    apex: Vec2,
    direction: Vec2,
    gluing_linear: RatMat2,
) -> Result<DefectSpec, DefectError> {
    let (p, q) = reduced_slope(p, q)?;
    if !apex.is_integer() {
        return Err(DefectError::NonIntegerApex(apex.to_string()));
    }
    let normal = canonical_normal(&direction)?;
    if !gluing_linear.is_sl2z() {
        return Err(DefectError::ReglueMismatch(format!(
            "{gluing_linear} is not an integer matrix of determinant 1"
        )));
    }
    let b = RatMat2::from_columns(&normal, &direction);
    let plane = b
        .mul(&gluing_linear.transpose())
        .mul(&b.inverse().expect("unimodular"));
    let upper = direction
        .scale(&rat_int(q as i64))
        .add(&normal.scale(&rat_int(p as i64)));
    if plane.mul_vec(&direction) != upper {
        return Err(DefectError::ReglueMismatch(format!(
            "plane action maps the lower primitive to {}, expected {}",
            plane.mul_vec(&direction),
            upper
        )));
    }
    Ok(DefectSpec {
        kind: DefectKind::Reglue,
        sign: Sign::Minus,
        apex,
        cut_direction: direction,
        frame_normal: normal,
        slope: Some((p, q)),
        rotation: None,
        gluing: GluingMap {
            monodromy: gluing_linear,
            translation: Vec2::zero(),
            sublattice_index: 1,
        },
    })
}

/// Dislocation: identity linear part, pure Burgers translation. `inserted`
/// flips the circuit-closure sign relative to the removed-half-line
/// construction.
pub fn dislocation_defect(
    apex: Vec2,
    direction: Vec2,
    burgers: Vec2,
    inserted: bool,
) -> Result<DefectSpec, DefectError> {
    if !apex.is_integer() {
        return Err(DefectError::NonIntegerApex(apex.to_string()));
    }
    let normal = canonical_normal(&direction)?;
    if !burgers.is_integer() || burgers.is_zero() {
        return Err(DefectError::BadBurgers);
    }
    let translation = if inserted { burgers.neg() } else { burgers };
    Ok(DefectSpec {
        kind: DefectKind::Dislocation,
        sign: if inserted { Sign::Plus } else { Sign::Minus },
        apex,
        cut_direction: direction,
        frame_normal: normal,
        slope: None,
        rotation: None,
        gluing: GluingMap {
            monodromy: RatMat2::identity(),
            translation,
            sublattice_index: 1,
        },
    })
}

/// Missing vertex; identity gluing, no cut.
pub fn vacancy(apex: Vec2) -> Result<DefectSpec, DefectError> {
    if !apex.is_integer() {
        return Err(DefectError::NonIntegerApex(apex.to_string()));
    }
    Ok(DefectSpec {
        kind: DefectKind::Vacancy,
        sign: Sign::Minus,
        apex,
        cut_direction: Vec2::zero(),
        frame_normal: Vec2::zero(),
        slope: None,
        rotation: None,
        gluing: GluingMap {
            monodromy: RatMat2::identity(),
            translation: Vec2::zero(),
            sublattice_index: 1,
        },
    })
}

/// Quarter-turn generator of the square lattice in lattice coordinates.
pub fn square_rotation() -> RatMat2 {
    RatMat2::from_ints(0, -1, 1, 0)
}

/// Sixth-turn generator of the triangular lattice in oblique coordinates.
pub fn triangular_rotation() -> RatMat2 {
    RatMat2::from_ints(0, -1, 1, 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisclinationRealization {
    /// Single cut with a rotational gluing.
    Reglue,
    /// Composite of elementary defects: three per quarter turn on the
    /// square lattice, two per sixth turn on the triangular one. Only a
    /// single turn unit expands; larger angles are built from several
    /// fragments.
    Expanded,
}

/// Rotational defect: `count` quarter turns (square) or sixth turns
/// (triangular); removed for `Sign::Minus`, added for `Sign::Plus`.
/// Returns an arrangement fragment (one or several defects).
pub fn disclination(
    count: i64,
    sign: Sign,
    apex: Vec2,
    lattice: LatticeKind,
    realization: DisclinationRealization,
) -> Result<Vec<DefectSpec>, DefectError> {
    if count <= 0 {
        return Err(DefectError::BadDisclination {
            count,
            reason: "count must be positive; use sign for removed vs added".into(),
        });
    }
    let (rot, full_turn) = match lattice {
        LatticeKind::Square => (square_rotation(), 4),
        LatticeKind::Triangular => (triangular_rotation(), 6),
    };
    if count >= full_turn {
        return Err(DefectError::BadDisclination {
            count,
            reason: format!("must be smaller than a full turn ({full_turn})"),
        });
    }
    match realization {
        DisclinationRealization::Reglue => {
            if !apex.is_integer() {
                return Err(DefectError::NonIntegerApex(apex.to_string()));
            }
            let direction = Vec2::from_ints(1, 0);
            let normal = canonical_normal(&direction)?;
            let plane = match sign {
                Sign::Minus => rot.pow(count).expect("unimodular"),
                Sign::Plus => rot.pow(-count).expect("unimodular"),
            };
            // Stored convention: monodromy = (B⁻¹·D·B)ᵀ for B = [n d].
            let b = RatMat2::from_columns(&normal, &direction);
            let monodromy = b
                .inverse()
                .expect("unimodular")
                .mul(&plane)
                .mul(&b)
                .transpose();
            Ok(vec![DefectSpec {
                kind: DefectKind::Disclination,
                sign,
                apex,
                cut_direction: direction,
                frame_normal: normal,
                slope: None,
                rotation: Some(count),
                gluing: GluingMap {
                    monodromy,
                    translation: Vec2::zero(),
                    sublattice_index: 1,
                },
            }])
        }
        DisclinationRealization::Expanded => {
            if count != 1 {
                return Err(DefectError::BadDisclination {
                    count,
                    reason: "expanded realization covers a single turn unit; compose fragments"
                        .into(),
                });
            }
            // Successive pieces are rotations of the canonical elementary
            // defect: by a quarter turn on the square lattice, by ±2π/3 on
            // the triangular one (added material steps clockwise). Crossed
            // in ccw order the gluings compose to exactly one turn unit.
            let (pieces, step) = match (lattice, sign) {
                (LatticeKind::Square, _) => (3, rot.clone()),
                (LatticeKind::Triangular, Sign::Minus) => (2, rot.mul(&rot)),
                (LatticeKind::Triangular, Sign::Plus) => (
                    2,
                    rot.mul(&rot).inverse().expect("rotations are invertible"),
                ),
            };
            let mut out = Vec::new();
            let mut dir = Vec2::from_ints(1, 0);
            let mut normal = canonical_normal(&dir)?;
            for _ in 0..pieces {
                // Apex sits one step out along the rotated cut so the cuts
                // share no line.
                let apex_i = apex.add(&dir);
                let mut d = elementary_defect(sign, 1, apex_i, dir.clone())?;
                d.frame_normal = normal.clone();
                out.push(d);
                dir = step.mul_vec(&dir);
                normal = step.mul_vec(&normal);
            }
            Ok(out)
        }
    }
}

/// A validated collection of defects.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    pub defects: Vec<DefectSpec>,
    pub lattice_kind: LatticeKind,
}

/// Validates apexes, frames, gluings, and pairwise cut-ray geometry.
/// Collinear same-direction overlaps are allowed when the gluings
/// commute (line defects with interior endpoints need them); transversal
/// crossings are errors naming the offending pair.
pub fn build_arrangement(
    defects: Vec<DefectSpec>,
    lattice_kind: LatticeKind,
) -> Result<Arrangement, DefectError> {
    for (i, d) in defects.iter().enumerate() {
        d.validate(i)?;
        if let Some(count) = d.rotation {
            let full = match lattice_kind {
                LatticeKind::Square => 4,
                LatticeKind::Triangular => 6,
            };
            if count.unsigned_abs() as i64 >= full {
                return Err(DefectError::RotationIncompatible(i));
            }
            let rot = match lattice_kind {
                LatticeKind::Square => square_rotation(),
                LatticeKind::Triangular => triangular_rotation(),
            };
            let expect = match d.sign {
                Sign::Minus => rot.pow(count).expect("unimodular"),
                Sign::Plus => rot.pow(-count).expect("unimodular"),
            };
            if d.plane_map().linear != expect {
                return Err(DefectError::RotationIncompatible(i));
            }
        }
    }
    for i in 0..defects.len() {
        for j in (i + 1)..defects.len() {
            if defects[i].apex == defects[j].apex {
                return Err(DefectError::DuplicateApex(i, j));
            }
            check_ray_pair(&defects, i, j)?;
        }
    }
    Ok(Arrangement {
        defects,
        lattice_kind,
    })
}

fn check_ray_pair(defects: &[DefectSpec], i: usize, j: usize) -> Result<(), DefectError> {
    let (di, dj) = (&defects[i], &defects[j]);
    if !di.has_cut() || !dj.has_cut() {
        // A vacancy sitting on another defect's cut is still a valid
        // scene; only apex coincidence was worth rejecting.
        return Ok(());
    }
    let u = &di.cut_direction;
    let v = &dj.cut_direction;
    let dapex = dj.apex.sub(&di.apex);
    let cross_uv = u.cross(v);
    if cross_uv.is_zero() {
        if !u.cross(&dapex).is_zero() {
            return Ok(()); // parallel, different lines
        }
        // Same line. Opposite directions can still be disjoint.
        let along = dapex.dot(u); // position of apex_j along ray_i (times |u|²)
        if u.dot(v).is_positive() {
            // Same direction: the rays overlap beyond the farther apex.
            let gi = di.plane_map();
            let gj = dj.plane_map();
            if gi.compose(&gj) != gj.compose(&gi) {
                return Err(DefectError::OverlapNotCommuting(i, j));
            }
            return Ok(());
        }
        // Opposite directions: rays [apex_i, ∞)·u and [apex_j, ∞)·(−u).
        // They overlap exactly when apex_j is strictly ahead of apex_i.
        if along.is_positive() {
            return Err(DefectError::CutsCross(i, j, "collinear overlap".into()));
        }
        return Ok(());
    }
    // Transversal: apex_i + t·u = apex_j + s·v.
    let t = dapex.cross(v) / &cross_uv;
    let s = dapex.cross(u) / &cross_uv;
    let zero = Rational::zero();
    if t > zero && s > zero {
        let at = di.apex.add(&u.scale(&t));
        return Err(DefectError::CutsCross(i, j, at.to_string()));
    }
    if t > zero && s.is_zero() {
        return Err(DefectError::ApexOnCut(j, i));
    }
    if s > zero && t.is_zero() {
        return Err(DefectError::ApexOnCut(i, j));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Point enumeration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub x_min: Rational,
    pub x_max: Rational,
    pub y_min: Rational,
    pub y_max: Rational,
}

impl Window {
    pub fn from_ints(x_min: i64, x_max: i64, y_min: i64, y_max: i64) -> Window {
        Window {
            x_min: rat_int(x_min),
            x_max: rat_int(x_max),
            y_min: rat_int(y_min),
            y_max: rat_int(y_max),
        }
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ChartTag {
    Base,
    /// Extra material contributed by defect `i` (added wedges, inserted
    /// half-lines). Positions are chart labels, not an embedding; the
    /// fanned cloud gives the geometric picture.
    Inserted(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub pos: Vec2,
    pub chart: ChartTag,
}

impl DefectSpec {
    /// Is `z` erased by this defect's surgery? Half-open convention: the
    /// wedge interior and its upper boundary go, the cut boundary stays.
    fn removes(&self, z: &Vec2) -> bool {
        match self.kind {
            DefectKind::Vacancy => z == &self.apex,
            DefectKind::ElementaryPoint | DefectKind::RationalLine | DefectKind::Reglue => {
                if self.sign == Sign::Plus {
                    return false;
                }
                let (p, q) = self.slope.expect("wedge kinds carry a slope");
                let (xi, eta) = self.cut_coords(z);
                eta >= rat_int(1) && eta.clone() * rat_int(q as i64) <= xi * rat_int(p as i64)
            }
            DefectKind::Dislocation => {
                if self.sign == Sign::Plus {
                    return false;
                }
                let (xi, eta) = self.cut_coords(z);
                eta.is_zero() && xi >= rat_int(1)
            }
            DefectKind::Disclination => {
                if self.sign == Sign::Plus {
                    return false;
                }
                let rel = z.sub(&self.apex);
                if rel.is_zero() {
                    return false;
                }
                // Removed sector sweeps ccw from the cut direction
                // (exclusive) to its rotated image (inclusive).
                let end = self.plane_map().linear.mul_vec(&self.cut_direction);
                on_ray(&end, &rel) || in_ccw_sector(&self.cut_direction, &end, &rel)
            }
        }
    }

    /// Chart positions contributed by added-material defects.
    fn inserts(&self, z: &Vec2) -> bool {
        if self.sign != Sign::Plus {
            return false;
        }
        match self.kind {
            DefectKind::ElementaryPoint | DefectKind::RationalLine => {
                let (p, q) = self.slope.expect("wedge kinds carry a slope");
                let (xi, eta) = self.cut_coords(z);
                eta >= rat_int(1) && eta.clone() * rat_int(q as i64) <= xi * rat_int(p as i64)
            }
            DefectKind::Dislocation => {
                let (xi, eta) = self.cut_coords(z);
                eta.is_zero() && xi >= rat_int(1)
            }
            DefectKind::Disclination => {
                let rel = z.sub(&self.apex);
                if rel.is_zero() {
                    return false;
                }
                let rot = self
                    .plane_map()
                    .linear
                    .inverse()
                    .expect("rotations are invertible");
                let end = rot.mul_vec(&self.cut_direction);
                on_ray(&end, &rel) || in_ccw_sector(&self.cut_direction, &end, &rel)
            }
            _ => false,
        }
    }
}

fn on_ray(dir: &Vec2, v: &Vec2) -> bool {
    dir.cross(v).is_zero() && dir.dot(v).is_positive()
}

/// Exact comparison of counterclockwise angles from `base`: is
/// `θ(a) < θ(b)` with θ measured in (0, 2π)? Neither argument may lie on
/// the `base` ray.
fn ccw_before(base: &Vec2, a: &Vec2, b: &Vec2) -> bool {
    let half = |u: &Vec2| -> u8 {
        let c = base.cross(u);
        debug_assert!(!c.is_zero() || base.dot(u).is_negative(), "input on base ray");
        if c.is_positive() {
            0
        } else if c.is_zero() {
            1 // θ = π
        } else {
            2
        }
    };
    let (ha, hb) = (half(a), half(b));
    if ha != hb {
        return ha < hb;
    }
    if ha == 1 {
        return false;
    }
    a.cross(b).is_positive()
}

/// Strict membership of `v` in the sector swept counterclockwise from
/// `start` to `end` (sector angle in (0, 2π)).
fn in_ccw_sector(start: &Vec2, end: &Vec2, v: &Vec2) -> bool {
    !on_ray(start, v) && !on_ray(end, v) && ccw_before(start, v, end)
}

/// Deterministic point set of the reconstructed lattice in a window:
/// base chart points that survive all removals, plus chart-tagged points
/// contributed by added material. Output is sorted by position then tag,
/// and is window-monotone.
pub fn enumerate_points(arr: &Arrangement, window: &Window) -> Vec<LatticePoint> {
    let mut out = Vec::new();
    let x_lo = window.x_min.ceil().to_integer();
    let x_hi = window.x_max.floor().to_integer();
    let y_lo = window.y_min.ceil().to_integer();
    let y_hi = window.y_max.floor().to_integer();
    let mut x = x_lo.clone();
    while x <= x_hi {
        let mut y = y_lo.clone();
        while y <= y_hi {
            let z = Vec2::new(
                Rational::from_integer(x.clone()),
                Rational::from_integer(y.clone()),
            );
            if !arr.defects.iter().any(|d| d.removes(&z)) {
                out.push(LatticePoint {
                    pos: z.clone(),
                    chart: ChartTag::Base,
                });
            }
            for (i, d) in arr.defects.iter().enumerate() {
                if d.inserts(&z) {
                    out.push(LatticePoint {
                        pos: z.clone(),
                        chart: ChartTag::Inserted(i),
                    });
                }
            }
            y += BigInt::one();
        }
        x += BigInt::one();
    }
    out
}

// ---------------------------------------------------------------------------
// Fanned embedding (numeric clouds for detection)
// ---------------------------------------------------------------------------

/// `f64` embedding of the reconstructed lattice for a single-defect
/// arrangement (plus any number of vacancies): the gluing is spread
/// continuously around the apex, so the cloud is locally lattice-like
/// everywhere and a transported cell reads the defect's monodromy. The
/// base region (just below the cut, swept last counterclockwise) embeds
/// identically.
pub fn fanned_cloud(arr: &Arrangement, window: &Window) -> Result<Vec<[f64; 2]>, DefectError> {
    let actives: Vec<&DefectSpec> = arr.defects.iter().filter(|d| d.has_cut()).collect();
    if actives.len() > 1 {
        return Err(DefectError::FannedUnsupported(
            "at most one non-vacancy defect".into(),
        ));
    }
    let points = enumerate_points(arr, window);
    let Some(defect) = actives.first() else {
        return Ok(points.iter().map(|p| p.pos.to_f64()).collect());
    };
    let apex = defect.apex.to_f64();
    let d = defect.cut_direction.to_f64();
    let plane = defect.plane_map();
    let lin = [
        [
            rational_to_f64(&plane.linear.a),
            rational_to_f64(&plane.linear.b),
        ],
        [
            rational_to_f64(&plane.linear.c),
            rational_to_f64(&plane.linear.d),
        ],
    ];
    let translation = defect.gluing.translation.to_f64();
    // Wedge angle spanned by removed material (0 for added material and
    // dislocations: there the stretch absorbs the surgery).
    let delta = match (defect.kind, defect.sign) {
        (DefectKind::ElementaryPoint | DefectKind::RationalLine | DefectKind::Reglue, Sign::Minus) => {
            let (p, q) = defect.slope.expect("wedge kinds carry a slope");
            let upper = defect
                .cut_direction
                .scale(&rat_int(q as i64))
                .add(&defect.frame_normal.scale(&rat_int(p as i64)))
                .to_f64();
            ccw_angle(&d, &upper)
        }
        (DefectKind::Disclination, Sign::Minus) => {
            let end_exact = plane.linear.mul_vec(&defect.cut_direction);
            ccw_angle(&d, &end_exact.to_f64())
        }
        _ => 0.0,
    };
    let mut out = Vec::with_capacity(points.len());
    for p in &points {
        if p.chart != ChartTag::Base {
            // Added-material charts are absorbed by the angular stretch.
            continue;
        }
        let zf = p.pos.to_f64();
        let rel = [zf[0] - apex[0], zf[1] - apex[1]];
        if rel[0] == 0.0 && rel[1] == 0.0 {
            out.push(zf);
            continue;
        }
        let phi = ccw_angle(&d, &rel); // in (0, 2π]; on-cut points map to 2π
        let t = ((phi - delta) / (2.0 * std::f64::consts::PI - delta)).clamp(0.0, 1.0);
        let m = mat_power(&lin, t - 1.0);
        let shift = [translation[0] * (t - 1.0), translation[1] * (t - 1.0)];
        out.push([
            apex[0] + m[0][0] * rel[0] + m[0][1] * rel[1] + shift[0],
            apex[1] + m[1][0] * rel[0] + m[1][1] * rel[1] + shift[1],
        ]);
    }
    Ok(out)
}

/// Counterclockwise angle from `a` to `b` in (0, 2π].
fn ccw_angle(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let cross = a[0] * b[1] - a[1] * b[0];
    let dot = a[0] * b[0] + a[1] * b[1];
    let ang = cross.atan2(dot);
    if ang > 0.0 {
        ang
    } else {
        ang + 2.0 * std::f64::consts::PI
    }
}

/// Real power `D^t` of a determinant-1 matrix with trace > −2.
fn mat_power(m: &[[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    let tr = m[0][0] + m[1][1];
    let half = tr / 2.0;
    let dev = [[m[0][0] - half, m[0][1]], [m[1][0], m[1][1] - half]];
    if (tr - 2.0).abs() < 1e-12 {
        // Parabolic (or identity): I + t·(D − I).
        return [
            [1.0 + t * (m[0][0] - 1.0), t * m[0][1]],
            [t * m[1][0], 1.0 + t * (m[1][1] - 1.0)],
        ];
    }
    let (ct, coeff) = if tr < 2.0 {
        // Elliptic: eigenvalues e^{±iθ}.
        let theta = half.clamp(-1.0, 1.0).acos();
        ((t * theta).cos(), (t * theta).sin() / theta.sin())
    } else {
        // Hyperbolic with positive eigenvalues.
        let theta = (half + (half * half - 1.0).sqrt()).ln();
        ((t * theta).cosh(), (t * theta).sinh() / theta.sinh())
    };
    [
        [ct + coeff * dev[0][0], coeff * dev[0][1]],
        [coeff * dev[1][0], ct + coeff * dev[1][1]],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: i64, y: i64) -> Vec2 {
        Vec2::from_ints(x, y)
    }

    fn count_on_column(pts: &[LatticePoint], x: i64) -> usize {
        pts.iter()
            .filter(|p| p.chart == ChartTag::Base && p.pos.x == rat_int(x))
            .count()
    }

    #[test]
    fn empty_window_has_full_grid() {
        let arr = build_arrangement(vec![], LatticeKind::Square).unwrap();
        let pts = enumerate_points(&arr, &Window::from_ints(0, 4, 0, 4));
        assert_eq!(pts.len(), 25);
    }

    #[test]
    fn vacancy_removes_exactly_one_point() {
        let arr =
            build_arrangement(vec![vacancy(v(2, 2)).unwrap()], LatticeKind::Square).unwrap();
        let pts = enumerate_points(&arr, &Window::from_ints(0, 4, 0, 4));
        assert_eq!(pts.len(), 24);
    }

    #[test]
    fn elementary_defect_removes_s_p_points_per_column() {
        for p in [1u64, 2] {
            let d = elementary_defect(Sign::Minus, p, v(0, 0), v(1, 0)).unwrap();
            let arr = build_arrangement(vec![d], LatticeKind::Square).unwrap();
            let h = 40i64;
            let pts = enumerate_points(&arr, &Window::from_ints(0, 8, -h, h));
            for s in 1..=8i64 {
                let full = (2 * h + 1) as usize;
                let missing = full - count_on_column(&pts, s);
                assert_eq!(missing as i64, s * p as i64, "p={p} column {s}");
            }
        }
    }

    #[test]
    fn rational_defect_counts_follow_the_staircase() {
        let d = rational_defect(1, 2, Sign::Minus, v(0, 0), v(1, 0)).unwrap();
        let arr = build_arrangement(vec![d], LatticeKind::Square).unwrap();
        let h = 40i64;
        let pts = enumerate_points(&arr, &Window::from_ints(0, 7, -h, h));
        let mut seq = Vec::new();
        for s in 0..=7i64 {
            let full = (2 * h + 1) as usize;
            seq.push((full - count_on_column(&pts, s)) as i64);
        }
        assert_eq!(seq, vec![0, 0, 1, 1, 2, 2, 3, 3]);
    }

    #[test]
    fn two_one_third_cuts_match_one_two_thirds_cut() {
        let a = rational_defect(2, 3, Sign::Minus, v(0, 0), v(1, 0)).unwrap();
        let b = rational_defect(1, 3, Sign::Minus, v(0, 0), v(1, 0)).unwrap();
        // Removing 2:3 is removing 1:3 twice: the extended matrices
        // compose.
        let twice = b.plane_map().linear.mul(&b.plane_map().linear);
        assert_eq!(a.plane_map().linear, twice);
    }

    #[test]
    fn plus_defect_gluing_is_inverse_of_minus() {
        let m = elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap();
        let p = elementary_defect(Sign::Plus, 1, v(0, 0), v(1, 0)).unwrap();
        let comp = m.plane_map().compose(&p.plane_map());
        assert_eq!(comp, AffineMap::identity());
    }

    #[test]
    fn insertion_counts_mirror_removal_counts() {
        let minus = elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap();
        let plus = elementary_defect(Sign::Plus, 1, v(0, 0), v(1, 0)).unwrap();
        let arr_m = build_arrangement(vec![minus], LatticeKind::Square).unwrap();
        let arr_p = build_arrangement(vec![plus], LatticeKind::Square).unwrap();
        let w = Window::from_ints(0, 6, -10, 10);
        let removed = ((7 * 21) - enumerate_points(&arr_m, &w).len() as i64).unsigned_abs();
        let inserted = enumerate_points(&arr_p, &w)
            .iter()
            .filter(|p| p.chart != ChartTag::Base)
            .count() as u64;
        assert_eq!(removed, inserted);
    }

    #[test]
    fn reglue_accepts_the_consecutive_identification() {
        // 1:3 cut with consecutive vertex identification produces the
        // hyperbolic trace-3 point defect.
        let g = RatMat2::from_ints(0, -1, 1, 3);
        let d = reglue_defect(1, 3, v(0, 0), v(1, 0), g).unwrap();
        assert_eq!(d.plane_map().linear, RatMat2::from_ints(3, -1, 1, 0));
        // A shear that fixes d is not a consecutive identification for 1:3.
        let bad = RatMat2::from_ints(1, 0, 1, 1);
        assert!(reglue_defect(1, 3, v(0, 0), v(1, 0), bad).is_err());
    }

    #[test]
    fn reglue_of_one_one_cut_matches_elementary() {
        let e = elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap();
        // The elementary gluing maps d = (1,0) to d + n = (1,1):
        // consecutive identification of the 1:1 cut.
        let g = e.gluing.monodromy.clone();
        let r = reglue_defect(1, 1, v(0, 0), v(1, 0), g).unwrap();
        assert_eq!(r.plane_map(), e.plane_map());
    }

    #[test]
    fn square_disclination_composes_to_a_quarter_turn() {
        for sign in [Sign::Minus, Sign::Plus] {
            let frag = disclination(
                1,
                sign,
                v(0, 0),
                LatticeKind::Square,
                DisclinationRealization::Expanded,
            )
            .unwrap();
            assert_eq!(frag.len(), 3);
            // Counterclockwise crossing order is the construction order;
            // the composite linear part is the quarter turn.
            let total = frag[2]
                .plane_map()
                .linear
                .mul(&frag[1].plane_map().linear)
                .mul(&frag[0].plane_map().linear);
            let want = match sign {
                Sign::Minus => square_rotation(),
                Sign::Plus => square_rotation().inverse().unwrap(),
            };
            assert_eq!(total, want);
            build_arrangement(frag, LatticeKind::Square).unwrap();
        }
    }

    #[test]
    fn triangular_disclination_composes_to_a_sixth_turn() {
        for sign in [Sign::Minus, Sign::Plus] {
            let frag = disclination(
                1,
                sign,
                v(0, 0),
                LatticeKind::Triangular,
                DisclinationRealization::Expanded,
            )
            .unwrap();
            assert_eq!(frag.len(), 2);
            let total = frag[1]
                .plane_map()
                .linear
                .mul(&frag[0].plane_map().linear);
            let want = match sign {
                Sign::Minus => triangular_rotation(),
                Sign::Plus => triangular_rotation().inverse().unwrap(),
            };
            assert_eq!(total, want);
            build_arrangement(frag, LatticeKind::Triangular).unwrap();
        }
    }

    #[test]
    fn crossing_cuts_are_rejected_with_the_pair() {
        let a = elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap();
        let b = elementary_defect(Sign::Minus, 1, v(3, -3), v(0, 1)).unwrap();
        match build_arrangement(vec![a, b], LatticeKind::Square) {
            Err(DefectError::CutsCross(0, 1, _)) => {}
            other => panic!("expected crossing error, got {other:?}"),
        }
    }

    #[test]
    fn shared_apex_is_rejected() {
        let a = elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap();
        let b = elementary_defect(Sign::Minus, 1, v(0, 0), v(0, 1)).unwrap();
        assert!(matches!(
            build_arrangement(vec![a, b], LatticeKind::Square),
            Err(DefectError::DuplicateApex(0, 1))
        ));
    }

    #[test]
    fn collinear_line_defect_with_interior_end_is_allowed() {
        // 1:3 from the origin plus 2:3 from (6,0) along the same ray: a
        // line defect whose slope changes at the interior point.
        let a = rational_defect(1, 3, Sign::Minus, v(0, 0), v(1, 0)).unwrap();
        let b = rational_defect(2, 3, Sign::Minus, v(6, 0), v(1, 0)).unwrap();
        build_arrangement(vec![a, b], LatticeKind::Square).unwrap();
    }

    #[test]
    fn parallel_and_orthogonal_pairs_validate() {
        let a = rational_defect(1, 2, Sign::Minus, v(0, 0), v(1, 0)).unwrap();
        let b = rational_defect(1, 3, Sign::Minus, v(0, -7), v(1, 0)).unwrap();
        build_arrangement(vec![a, b], LatticeKind::Square).unwrap();
        let c = rational_defect(1, 2, Sign::Minus, v(0, 0), v(1, 0)).unwrap();
        let d = rational_defect(1, 3, Sign::Minus, v(-3, 3), v(0, 1)).unwrap();
        build_arrangement(vec![c, d], LatticeKind::Square).unwrap();
    }

    #[test]
    fn window_monotonicity() {
        let d = elementary_defect(Sign::Minus, 1, v(0, 0), v(1, 0)).unwrap();
        let arr = build_arrangement(vec![d], LatticeKind::Square).unwrap();
        let small = enumerate_points(&arr, &Window::from_ints(-2, 2, -2, 2));
        let large = enumerate_points(&arr, &Window::from_ints(-4, 4, -4, 4));
        for p in &small {
            assert!(large.contains(p));
        }
    }

    #[test]
    fn non_primitive_direction_is_rejected() {
        assert!(matches!(
            elementary_defect(Sign::Minus, 1, v(0, 0), v(2, 0)),
            Err(DefectError::NonPrimitiveDirection(_))
        ));
        assert!(dislocation_defect(v(0, 0), v(1, 0), Vec2::zero(), false).is_err());
    }
}
