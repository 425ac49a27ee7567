//! SL(2,Z) classification, conjugacy, normal forms, and decomposition into
//! conjugates of the elementary shear.
//!
//! Conjugacy is decided completely, not by trace alone:
//!
//! * parabolic matrices carry an integer module `p` extracted from the
//!   eigenvector frame;
//! * elliptic matrices (trace 0, ±1) reduce through their fixed-point
//!   definite quadratic form to a finite automorph group;
//! * hyperbolic matrices map to indefinite binary quadratic forms, and two
//!   matrices are conjugate exactly when their reduced forms lie on the
//!   same reduction cycle. Equal traces are *not* sufficient here, so the
//!   trace-based table representative `(K 1; -1 0)` is returned only when
//!   it actually lies in the class, with a flag recording that.
//!
//! Every witness returned by this module satisfies `A·M₁·A⁻¹ = M₂`
//! exactly; the identities are re-checked before returning.

use crate::mat2::{rat_int, rational_to_string, RatMat2, Rational, Vec2};
use crate::Sign;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum Sl2Error {
    #[error("matrix must have integer entries, got {0}")]
    NonInteger(String),
    #[error("matrix must have determinant 1, got determinant {0}")]
    DetNotOne(String),
    #[error("matrix is singular")]
    Singular,
    #[error("decomposition search budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("form reduction exceeded its iteration budget")]
    ReductionBudget,
}

fn require_sl2z(m: &RatMat2) -> Result<(), Sl2Error> {
    if !m.is_integer() {
        return Err(Sl2Error::NonInteger(m.to_string()));
    }
    let det = m.det();
    if !det.is_one() {
        return Err(Sl2Error::DetNotOne(rational_to_string(&det)));
    }
    Ok(())
}

/// Conjugacy class data per the trace table. `Parabolic` covers both
/// traces ±2 (`negated` marks trace −2, where the class is
/// `-(1 p; 0 1)`); the identity classes are split out because they are
/// singletons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassLabel {
    PlusIdentity,
    MinusIdentity,
    Parabolic { p: BigInt, negated: bool },
    Elliptic { trace: i8, epsilon: i8 },
    ZeroTrace { epsilon: i8 },
    Hyperbolic { trace: BigInt },
}

impl ClassLabel {
    /// Reporting convention for parabolic classes: non-negative module
    /// plus the sign of `p` (for trace −2 the class is written
    /// `-(1 p; 0 1)` with `p ≥ 0` and a separate sign flag).
    pub fn parabolic_module(&self) -> Option<(BigInt, i8)> {
        match self {
            ClassLabel::Parabolic { p, .. } => {
                let sign = if p.is_negative() { -1 } else { 1 };
                Some((p.abs(), sign))
            }
            _ => None,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::PlusIdentity => write!(f, "identity"),
            ClassLabel::MinusIdentity => write!(f, "minus identity"),
            ClassLabel::Parabolic { p, negated: false } => {
                write!(f, "parabolic (trace 2, p = {p})")
            }
            ClassLabel::Parabolic { p, negated: true } => write!(
                f,
                "parabolic (trace -2, module {}, sign {})",
                p.abs(),
                if p.is_negative() { "-" } else { "+" }
            ),
            ClassLabel::Elliptic { trace, epsilon } => {
                write!(f, "elliptic (trace {trace}, epsilon {epsilon})")
            }
            ClassLabel::ZeroTrace { epsilon } => {
                write!(f, "zero-trace (epsilon {epsilon})")
            }
            ClassLabel::Hyperbolic { trace } => write!(f, "hyperbolic (trace {trace})"),
        }
    }
}

fn int(r: &Rational) -> BigInt {
    debug_assert!(r.is_integer());
    r.numer().clone()
}

/// Classify an integer determinant-1 matrix per its trace and the finer
/// class invariants.
pub fn classify(m: &RatMat2) -> Result<ClassLabel, Sl2Error> {
    require_sl2z(m)?;
    if m.is_identity() {
        return Ok(ClassLabel::PlusIdentity);
    }
    if m.neg().is_identity() {
        return Ok(ClassLabel::MinusIdentity);
    }
    let k = int(&m.trace());
    if k == BigInt::from(2) {
        let (p, _) = parabolic_frame(m);
        Ok(ClassLabel::Parabolic { p, negated: false })
    } else if k == BigInt::from(-2) {
        let (p, _) = parabolic_frame(&m.neg());
        Ok(ClassLabel::Parabolic { p, negated: true })
    } else if k.is_zero() {
        Ok(ClassLabel::ZeroTrace {
            epsilon: epsilon_of(m),
        })
    } else if k.abs().is_one() {
        Ok(ClassLabel::Elliptic {
            trace: if k.is_one() { 1 } else { -1 },
            epsilon: epsilon_of(m),
        })
    } else {
        Ok(ClassLabel::Hyperbolic { trace: k })
    }
}

/// For elliptic matrices the two conjugacy classes with a given trace are
/// the two sheets of the trace surface; the sheet is read off the sign of
/// the upper-right entry (β and γ have opposite signs when the
/// eigenvalues are complex).
fn epsilon_of(m: &RatMat2) -> i8 {
    debug_assert!(!m.b.is_zero());
    if m.b.numer().is_positive() {
        1
    } else {
        -1
    }
}

/// For trace-2 `m ≠ I`: primitive eigenvector frame. Returns `(p, B)` with
/// `B⁻¹·m·B = (1 p; 0 1)` and `B` unimodular whose first column is the
/// fixed eigenvector.
fn parabolic_frame(m: &RatMat2) -> (BigInt, RatMat2) {
    let top: (BigInt, BigInt) = (int(&m.a) - BigInt::one(), int(&m.b));
    let bottom: (BigInt, BigInt) = (int(&m.c), int(&m.d) - BigInt::one());
    // Kernel vector of (m - I): read from a nonzero row.
    let (vx, vy) = if !top.0.is_zero() || !top.1.is_zero() {
        (top.1.clone(), -top.0.clone())
    } else {
        (bottom.1.clone(), -bottom.0.clone())
    };
    let g = vx.gcd(&vy);
    let (vx, vy) = (vx / &g, vy / &g);
    // Complete to det [v w] = 1 via Bezout: s·vx + t·vy = 1, w = (-t, s).
    let eg = vx.extended_gcd(&vy);
    debug_assert!(eg.gcd.is_one());
    let w = Vec2::new(
        Rational::from_integer(-eg.y.clone()),
        Rational::from_integer(eg.x.clone()),
    );
    let v = Vec2::new(Rational::from_integer(vx), Rational::from_integer(vy));
    let b = RatMat2::from_columns(&v, &w);
    debug_assert!(b.det().is_one());
    let n = m.conjugated_by(&b.inverse().expect("unimodular")).expect("unimodular");
    debug_assert!(n.a.is_one() && n.d.is_one() && n.c.is_zero());
    (int(&n.b), b)
}

// ---------------------------------------------------------------------------
// Binary quadratic forms
// ---------------------------------------------------------------------------

/// Integer binary quadratic form `a x² + b x y + c y²`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Form {
    a: BigInt,
    b: BigInt,
    c: BigInt,
}

/// Unimodular integer 2×2 used for substitution tracking.
#[derive(Debug, Clone, PartialEq, Eq)]
struct IMat {
    a: BigInt,
    b: BigInt,
    c: BigInt,
    d: BigInt,
}

impl IMat {
    fn identity() -> IMat {
        IMat {
            a: BigInt::one(),
            b: BigInt::zero(),
            c: BigInt::zero(),
            d: BigInt::one(),
        }
    }

    fn mul(&self, o: &IMat) -> IMat {
        IMat {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    /// Inverse assuming det = 1.
    fn inverse_unimodular(&self) -> IMat {
        IMat {
            a: self.d.clone(),
            b: -self.b.clone(),
            c: -self.c.clone(),
            d: self.a.clone(),
        }
    }

    fn to_ratmat(&self) -> RatMat2 {
        RatMat2::new(
            Rational::from_integer(self.a.clone()),
            Rational::from_integer(self.b.clone()),
            Rational::from_integer(self.c.clone()),
            Rational::from_integer(self.d.clone()),
        )
    }
}

impl Form {
    /// Fixed-point form of a matrix `(α β; γ δ)`: `(γ, δ−α, −β)`. Under
    /// conjugation `M ↦ A·M·A⁻¹` the form transforms by substitution with
    /// `A⁻¹`, and for a fixed trace the correspondence is a bijection.
    fn of_matrix(m: &RatMat2) -> Form {
        Form {
            a: int(&m.c),
            b: int(&m.d) - int(&m.a),
            c: -int(&m.b),
        }
    }

    /// Matrix with this fixed-point form and the given trace.
    fn matrix_with_trace(&self, k: &BigInt) -> RatMat2 {
        let two = BigInt::from(2);
        let alpha = (k - &self.b) / &two;
        let delta = (k + &self.b) / &two;
        RatMat2::new(
            Rational::from_integer(alpha),
            Rational::from_integer(-self.c.clone()),
            Rational::from_integer(self.a.clone()),
            Rational::from_integer(delta),
        )
    }

    fn disc(&self) -> BigInt {
        &self.b * &self.b - BigInt::from(4) * &self.a * &self.c
    }

    fn content(&self) -> BigInt {
        self.a.gcd(&self.b).gcd(&self.c)
    }

    fn divide(&self, g: &BigInt) -> Form {
        Form {
            a: &self.a / g,
            b: &self.b / g,
            c: &self.c / g,
        }
    }

    fn scale(&self, g: &BigInt) -> Form {
        Form {
            a: &self.a * g,
            b: &self.b * g,
            c: &self.c * g,
        }
    }

    fn neg(&self) -> Form {
        Form {
            a: -self.a.clone(),
            b: -self.b.clone(),
            c: -self.c.clone(),
        }
    }

    /// `f(U·(x,y))`.
    fn substitute(&self, u: &IMat) -> Form {
        let two = BigInt::from(2);
        let a = &self.a * &u.a * &u.a + &self.b * &u.a * &u.c + &self.c * &u.c * &u.c;
        let c = &self.a * &u.b * &u.b + &self.b * &u.b * &u.d + &self.c * &u.d * &u.d;
        let b = &two * &self.a * &u.a * &u.b
            + &self.b * (&u.a * &u.d + &u.b * &u.c)
            + &two * &self.c * &u.c * &u.d;
        Form { a, b, c }
    }
}

/// Gauss reduction of a positive-definite form, tracking `U` so that the
/// reduced form equals `f ∘ U`.
fn reduce_definite(f: &Form) -> (Form, IMat) {
    debug_assert!(f.disc().is_negative() && f.a.is_positive());
    let mut f = f.clone();
    let mut u = IMat::identity();
    let swap = IMat {
        a: BigInt::zero(),
        b: BigInt::from(-1),
        c: BigInt::one(),
        d: BigInt::zero(),
    };
    for _ in 0..10_000 {
        let two_a = BigInt::from(2) * &f.a;
        if f.b.abs() * BigInt::from(2) > two_a.clone() {
            // Translate b into (-a, a].
            let k = (&f.b + &f.a).div_floor(&two_a);
            let t = IMat {
                a: BigInt::one(),
                b: -k,
                c: BigInt::zero(),
                d: BigInt::one(),
            };
            f = f.substitute(&t);
            u = u.mul(&t);
            continue;
        }
        if f.a > f.c {
            f = f.substitute(&swap);
            u = u.mul(&swap);
            continue;
        }
        // Tie normalization: b ≥ 0 when |b| = a or a = c.
        if f.b.is_negative() && -&f.b == f.a {
            let t = IMat {
                a: BigInt::one(),
                b: BigInt::one(),
                c: BigInt::zero(),
                d: BigInt::one(),
            };
            f = f.substitute(&t);
            u = u.mul(&t);
            continue;
        }
        if f.b.is_negative() && f.a == f.c {
            f = f.substitute(&swap);
            u = u.mul(&swap);
            continue;
        }
        return (f, u);
    }
    unreachable!("definite reduction did not terminate");
}

/// Reduced test for an indefinite form of non-square discriminant with
/// `s = ⌊√D⌋`: `1 ≤ b ≤ s` and `s − b + 1 ≤ 2|a| ≤ s + b`.
fn is_reduced_indefinite(f: &Form, s: &BigInt) -> bool {
    if !f.b.is_positive() || &f.b > s {
        return false;
    }
    let two_abs_a = BigInt::from(2) * f.a.abs();
    two_abs_a >= s - &f.b + 1 && two_abs_a <= s + &f.b
}

/// One reduction step for an indefinite form; the substitution matrix is
/// `(0 -1; 1 m)` with `m = (b + b')/(2c)`.
fn rho_step(f: &Form, s: &BigInt) -> (Form, IMat) {
    let two_c_abs = BigInt::from(2) * f.c.abs();
    debug_assert!(!f.c.is_zero());
    // b' ≡ -b (mod 2|c|) in the standard window.
    let hi = if f.c.abs() > *s { f.c.abs() } else { s.clone() };
    // Unique representative in (hi - 2|c|, hi].
    let base = -&f.b;
    let shift = (&hi - &base).div_floor(&two_c_abs);
    let b_new = &base + &shift * &two_c_abs;
    let lo = &hi - &two_c_abs;
    debug_assert!(b_new <= hi && b_new > lo);
    let m = (&f.b + &b_new) / (BigInt::from(2) * &f.c);
    let t = IMat {
        a: BigInt::zero(),
        b: BigInt::from(-1),
        c: BigInt::one(),
        d: m,
    };
    let g = f.substitute(&t);
    debug_assert_eq!(g.a, f.c);
    debug_assert_eq!(g.b, b_new);
    (g, t)
}

fn reduce_indefinite(f: &Form) -> Result<(Form, IMat), Sl2Error> {
    let d = f.disc();
    debug_assert!(d.is_positive());
    let s = d.sqrt();
    debug_assert!(&s * &s != d, "discriminant must not be a square");
    let mut f = f.clone();
    let mut u = IMat::identity();
    for _ in 0..100_000 {
        if is_reduced_indefinite(&f, &s) {
            return Ok((f, u));
        }
        let (g, t) = rho_step(&f, &s);
        f = g;
        u = u.mul(&t);
    }
    Err(Sl2Error::ReductionBudget)
}

/// The full reduction cycle starting at a reduced form: pairs of
/// `(form, V)` with `form = start ∘ V`, the start pair included.
fn reduction_cycle(start: &Form) -> Result<Vec<(Form, IMat)>, Sl2Error> {
    let s = start.disc().sqrt();
    debug_assert!(is_reduced_indefinite(start, &s));
    let mut out = vec![(start.clone(), IMat::identity())];
    let mut f = start.clone();
    let mut v = IMat::identity();
    for _ in 0..1_000_000 {
        let (g, t) = rho_step(&f, &s);
        v = v.mul(&t);
        if &g == start {
            return Ok(out);
        }
        f = g.clone();
        out.push((g, v.clone()));
    }
    Err(Sl2Error::ReductionBudget)
}

/// Conjugating witness for two hyperbolic matrices with equal trace, or
/// `None` when their reduced cycles differ.
fn hyperbolic_witness(m1: &RatMat2, m2: &RatMat2) -> Result<Option<RatMat2>, Sl2Error> {
    let f1 = Form::of_matrix(m1);
    let f2 = Form::of_matrix(m2);
    let g1 = f1.content();
    let g2 = f2.content();
    if g1 != g2 {
        return Ok(None);
    }
    let p1 = f1.divide(&g1);
    let p2 = f2.divide(&g2);
    let (r1, u1) = reduce_indefinite(&p1)?;
    let (r2, u2) = reduce_indefinite(&p2)?;
    for (rf, v) in reduction_cycle(&r1)? {
        if rf == r2 {
            let u = u1.mul(&v).mul(&u2.inverse_unimodular());
            let a = u.inverse_unimodular().to_ratmat();
            let check = m1.conjugated_by(&a).expect("unimodular");
            assert_eq!(check, *m2, "cycle witness must conjugate exactly");
            return Ok(Some(a));
        }
    }
    Ok(None)
}

/// Exhaustive search for `A ∈ SL(2,Z)` with entries bounded by `bound`
/// such that `A·m·A⁻¹ = target`. Complete only within the bound; the
/// dedicated class machinery above should be preferred for integer
/// matrices. Useful for SL(2,Q) targets.
pub fn bounded_conjugator_search(m: &RatMat2, target: &RatMat2, bound: i64) -> Option<RatMat2> {
    for a in -bound..=bound {
        for b in -bound..=bound {
            for c in -bound..=bound {
                for d in -bound..=bound {
                    if a * d - b * c != 1 {
                        continue;
                    }
                    let cand = RatMat2::from_ints(a, b, c, d);
                    if m.conjugated_by(&cand).expect("det 1") == *target {
                        return Some(cand);
                    }
                }
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Normal forms
// ---------------------------------------------------------------------------

/// Table normal form for a class label (defined for everything except
/// hyperbolic, whose representative needs the cycle machinery).
fn table_form(label: &ClassLabel) -> Option<RatMat2> {
    let m = match label {
        ClassLabel::PlusIdentity => RatMat2::identity(),
        ClassLabel::MinusIdentity => RatMat2::identity().neg(),
        ClassLabel::Parabolic { p, negated } => {
            let shear = RatMat2::new(
                rat_int(1),
                Rational::from_integer(p.clone()),
                rat_int(0),
                rat_int(1),
            );
            if *negated {
                shear.neg()
            } else {
                shear
            }
        }
        ClassLabel::ZeroTrace { epsilon } => {
            let e = i64::from(*epsilon);
            RatMat2::from_ints(0, e, -e, 0)
        }
        ClassLabel::Elliptic { trace, epsilon } => {
            let t = i64::from(*trace);
            let e = i64::from(*epsilon);
            RatMat2::from_ints(t * (1 + e) / 2, e, -e, t * (1 - e) / 2)
        }
        ClassLabel::Hyperbolic { .. } => return None,
    };
    Some(m)
}

/// Result of `normal_form`: `conjugator · m · conjugator⁻¹ = normal`
/// exactly. For hyperbolic classes `trace_form_agrees` records whether the
/// trace-table representative `(K 1; -1 0)` lies in the class (it is then
/// returned); otherwise `normal` is the entrywise-least matrix on the
/// reduction cycle. Non-hyperbolic classes always reach their table form.
#[derive(Debug, Clone)]
pub struct NormalForm {
    pub label: ClassLabel,
    pub normal: RatMat2,
    pub conjugator: RatMat2,
    pub trace_form_agrees: bool,
}

pub fn normal_form(m: &RatMat2) -> Result<NormalForm, Sl2Error> {
    let label = classify(m)?;
    let nf = match &label {
        ClassLabel::PlusIdentity | ClassLabel::MinusIdentity => NormalForm {
            normal: m.clone(),
            conjugator: RatMat2::identity(),
            trace_form_agrees: true,
            label: label.clone(),
        },
        ClassLabel::Parabolic { negated, .. } => {
            let base = if *negated { m.neg() } else { m.clone() };
            let (_, frame) = parabolic_frame(&base);
            let conjugator = frame.inverse().expect("unimodular");
            let normal = m.conjugated_by(&conjugator).expect("unimodular");
            NormalForm {
                normal,
                conjugator,
                trace_form_agrees: true,
                label: label.clone(),
            }
        }
        ClassLabel::Elliptic { .. } | ClassLabel::ZeroTrace { .. } => {
            let (normal, conjugator) = elliptic_normal_form(m, &label);
            NormalForm {
                normal,
                conjugator,
                trace_form_agrees: true,
                label: label.clone(),
            }
        }
        ClassLabel::Hyperbolic { trace } => hyperbolic_normal_form(m, trace)?,
    };
    debug_assert_eq!(
        m.conjugated_by(&nf.conjugator).expect("unimodular"),
        nf.normal
    );
    Ok(nf)
}

fn elliptic_normal_form(m: &RatMat2, label: &ClassLabel) -> (RatMat2, RatMat2) {
    let q = Form::of_matrix(m);
    let positive = if q.a.is_positive() { q.clone() } else { q.neg() };
    let (reduced, u) = reduce_definite(&positive);
    debug_assert!(reduced.a.is_one(), "class number one discriminant");
    let u_rat = u.to_ratmat();
    let m_red = m
        .conjugated_by(&u_rat.inverse().expect("unimodular"))
        .expect("unimodular");
    // m_red now lies in the finite automorph group of the principal form;
    // a small search realigns it with the table representative.
    let target = table_form(label).expect("elliptic labels have table forms");
    let hop = bounded_conjugator_search(&m_red, &target, 3)
        .expect("automorph group elements are conjugate to their table forms");
    let conjugator = hop.mul(&u_rat.inverse().expect("unimodular"));
    let normal = m.conjugated_by(&conjugator).expect("unimodular");
    assert_eq!(normal, target);
    (normal, conjugator)
}

fn hyperbolic_normal_form(m: &RatMat2, trace: &BigInt) -> Result<NormalForm, Sl2Error> {
    let label = ClassLabel::Hyperbolic {
        trace: trace.clone(),
    };
    // Trace-table candidate (K 1; -1 0).
    let t_form = RatMat2::new(
        Rational::from_integer(trace.clone()),
        rat_int(1),
        rat_int(-1),
        rat_int(0),
    );
    if let Some(a) = hyperbolic_witness(m, &t_form)? {
        return Ok(NormalForm {
            label,
            normal: t_form,
            conjugator: a,
            trace_form_agrees: true,
        });
    }
    // Entrywise-least matrix on the reduction cycle.
    let f = Form::of_matrix(m);
    let g = f.content();
    let prim = f.divide(&g);
    let (r1, u1) = reduce_indefinite(&prim)?;
    let mut best: Option<(RatMat2, IMat)> = None;
    for (rf, v) in reduction_cycle(&r1)? {
        let cand = rf.scale(&g).matrix_with_trace(trace);
        let keep = match &best {
            None => true,
            Some((b, _)) => cand.cmp_entrywise(b) == std::cmp::Ordering::Less,
        };
        if keep {
            best = Some((cand, u1.mul(&v)));
        }
    }
    let (normal, u) = best.expect("cycle is nonempty");
    let conjugator = u.inverse_unimodular().to_ratmat();
    let check = m.conjugated_by(&conjugator).expect("unimodular");
    assert_eq!(check, normal, "cycle representative witness must verify");
    Ok(NormalForm {
        label,
        normal,
        conjugator,
        trace_form_agrees: false,
    })
}

// ---------------------------------------------------------------------------
// Conjugacy
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConjugacyAnswer {
    /// `witness · m1 · witness⁻¹ = m2`.
    Conjugate { witness: RatMat2 },
    NotConjugate,
}

impl ConjugacyAnswer {
    pub fn is_conjugate(&self) -> bool {
        matches!(self, ConjugacyAnswer::Conjugate { .. })
    }

    pub fn witness(&self) -> Option<&RatMat2> {
        match self {
            ConjugacyAnswer::Conjugate { witness } => Some(witness),
            ConjugacyAnswer::NotConjugate => None,
        }
    }
}

pub fn are_conjugate(m1: &RatMat2, m2: &RatMat2) -> Result<ConjugacyAnswer, Sl2Error> {
    require_sl2z(m1)?;
    require_sl2z(m2)?;
    if m1 == m2 {
        return Ok(ConjugacyAnswer::Conjugate {
            witness: RatMat2::identity(),
        });
    }
    let l1 = classify(m1)?;
    let l2 = classify(m2)?;
    match (&l1, &l2) {
        (ClassLabel::Hyperbolic { trace: t1 }, ClassLabel::Hyperbolic { trace: t2 }) => {
            if t1 != t2 {
                return Ok(ConjugacyAnswer::NotConjugate);
            }
            Ok(match hyperbolic_witness(m1, m2)? {
                Some(witness) => ConjugacyAnswer::Conjugate { witness },
                None => ConjugacyAnswer::NotConjugate,
            })
        }
        _ => {
            if l1 != l2 {
                return Ok(ConjugacyAnswer::NotConjugate);
            }
            // Same non-hyperbolic label: compose the two normal-form
            // witnesses.
            let n1 = normal_form(m1)?;
            let n2 = normal_form(m2)?;
            debug_assert_eq!(n1.normal, n2.normal);
            let witness = n2
                .conjugator
                .inverse()
                .expect("unimodular")
                .mul(&n1.conjugator);
            let check = m1.conjugated_by(&witness).expect("unimodular");
            assert_eq!(check, *m2, "composed witness must conjugate exactly");
            Ok(ConjugacyAnswer::Conjugate { witness })
        }
    }
}

// ---------------------------------------------------------------------------
// Dual action and trace surfaces
// ---------------------------------------------------------------------------

/// Action transfer from angle transformations to the dual (action)
/// variables: `(M⁻¹)ᵀ`, exact. Works for any nonsingular rational matrix.
pub fn dual_action_map(m: &RatMat2) -> Result<RatMat2, Sl2Error> {
    Ok(m.inverse().ok_or(Sl2Error::Singular)?.transpose())
}

/// Topology of the fixed-trace level surface inside the determinant-1
/// solid torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSurface {
    DoubleCone,
    OneSheetHyperboloid,
    TwoSheetHyperboloid,
}

impl fmt::Display for TraceSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceSurface::DoubleCone => write!(f, "double cone"),
            TraceSurface::OneSheetHyperboloid => write!(f, "one-sheet hyperboloid"),
            TraceSurface::TwoSheetHyperboloid => write!(f, "two-sheet hyperboloid"),
        }
    }
}

pub fn trace_surface_topology(k: &Rational) -> TraceSurface {
    let two = rat_int(2);
    if k == &two || k == &-&two {
        TraceSurface::DoubleCone
    } else if k.abs() > two {
        TraceSurface::OneSheetHyperboloid
    } else {
        TraceSurface::TwoSheetHyperboloid
    }
}

// ---------------------------------------------------------------------------
// Decomposition into elementary conjugates
// ---------------------------------------------------------------------------

/// Generator of the chosen sign: `(1 1; 0 1)` for `Minus`, `(1 -1; 0 1)`
/// for `Plus`. These lie in distinct conjugacy classes.
pub fn elementary_generator(sign: Sign) -> RatMat2 {
    match sign {
        Sign::Minus => RatMat2::from_ints(1, 1, 0, 1),
        Sign::Plus => RatMat2::from_ints(1, -1, 0, 1),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DecomposeOptions {
    /// Longest word accepted before the budget error fires.
    pub max_len: usize,
    /// Entry bound for conjugators explored by the breadth-first stage.
    pub conj_bound: i64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            max_len: 16,
            conj_bound: 5,
        }
    }
}

/// A verified word `m = Π Aᵢ·E·Aᵢ⁻¹` over the sign's generator `E`.
#[derive(Debug, Clone)]
pub struct ElementaryWord {
    pub sign: Sign,
    pub conjugators: Vec<RatMat2>,
}

impl ElementaryWord {
    pub fn len(&self) -> usize {
        self.conjugators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjugators.is_empty()
    }

    pub fn generator(&self) -> RatMat2 {
        elementary_generator(self.sign)
    }

    /// Exact re-multiplication of the word.
    pub fn product(&self) -> RatMat2 {
        let e = self.generator();
        let mut acc = RatMat2::identity();
        for a in &self.conjugators {
            acc = acc.mul(&e.conjugated_by(a).expect("conjugators are unimodular"));
        }
        acc
    }
}

/// `m = Π Aᵢ·E·Aᵢ⁻¹` with `E` the generator of `sign`. Strategy: identity
/// relations for ±I, a conjugacy check for length 1, bounded breadth-first
/// search for short words, then a continued-fraction word over
/// `{L, R⁻¹}` with the standard 11-letter substitutions for the
/// wrong-sign letters. Every returned word is re-multiplied exactly; a
/// word longer than the budget is an error, never silently truncated.
pub fn decompose_into_elementary(
    m: &RatMat2,
    sign: Sign,
    opts: &DecomposeOptions,
) -> Result<ElementaryWord, Sl2Error> {
    require_sl2z(m)?;
    let word = match sign {
        Sign::Minus => decompose_minus(m, opts)?,
        Sign::Plus => {
            // Mirror through J = diag(1, -1): J maps the two generator
            // classes onto each other and J·A·J stays unimodular.
            let j = RatMat2::from_ints(1, 0, 0, -1);
            let mirrored = j.mul(m).mul(&j);
            let w = decompose_minus(&mirrored, opts)?;
            ElementaryWord {
                sign: Sign::Plus,
                conjugators: w.conjugators.iter().map(|a| j.mul(a).mul(&j)).collect(),
            }
        }
    };
    assert_eq!(word.product(), *m, "decomposition must re-multiply exactly");
    Ok(word)
}

const S_ENTRIES: (i64, i64, i64, i64) = (0, -1, 1, 0);

fn s_matrix() -> RatMat2 {
    RatMat2::from_ints(S_ENTRIES.0, S_ENTRIES.1, S_ENTRIES.2, S_ENTRIES.3)
}

/// Conjugator sequences for the fixed relations, as words over the
/// letters `L = E` (conjugator I) and `R⁻¹ = S·E·S⁻¹` (conjugator S).
/// `true` stands for the `S` conjugator.
const WORD_L_INV: [bool; 11] = [
    true, false, false, true, false, false, true, false, false, true, false,
];
const WORD_R: [bool; 11] = [
    false, false, true, false, false, true, false, false, true, false, false,
];
const WORD_MINUS_I: [bool; 6] = [false, true, false, false, true, false];
const WORD_I: [bool; 12] = [
    false, true, false, false, true, false, false, true, false, false, true, false,
];

fn flags_to_conjugators(flags: &[bool]) -> Vec<RatMat2> {
    flags
        .iter()
        .map(|&s| if s { s_matrix() } else { RatMat2::identity() })
        .collect()
}

fn decompose_minus(m: &RatMat2, opts: &DecomposeOptions) -> Result<ElementaryWord, Sl2Error> {
    let make = |conjugators: Vec<RatMat2>| ElementaryWord {
        sign: Sign::Minus,
        conjugators,
    };
    // The identity is the four-quarter-turn relation (L·R⁻¹·L)⁴ — twelve
    // letters; minus identity is half of it.
    if m.is_identity() {
        return budget_check(make(flags_to_conjugators(&WORD_I)), opts);
    }
    if m.neg().is_identity() {
        return budget_check(make(flags_to_conjugators(&WORD_MINUS_I)), opts);
    }
    // Length 1: m conjugate to the generator itself.
    if let ConjugacyAnswer::Conjugate { witness } =
        are_conjugate(&elementary_generator(Sign::Minus), m)?
    {
        return budget_check(make(vec![witness]), opts);
    }
    // Bounded breadth-first search for words of length 2..4.
    if let Some(word) = bfs_word(m, opts) {
        return budget_check(make(word), opts);
    }
    // Constructive completion via the continued-fraction word.
    let tokens = euclid_tokens(m);
    let conjugators = tokens_to_conjugators(&tokens, opts.max_len).ok_or_else(|| {
        Sl2Error::BudgetExceeded(format!(
            "no word of length <= {} found (search depth 4, conjugator bound {})",
            opts.max_len, opts.conj_bound
        ))
    })?;
    budget_check(make(conjugators), opts)
}

fn budget_check(word: ElementaryWord, opts: &DecomposeOptions) -> Result<ElementaryWord, Sl2Error> {
    if word.len() > opts.max_len {
        return Err(Sl2Error::BudgetExceeded(format!(
            "word of length {} exceeds the budget of {}",
            word.len(),
            opts.max_len
        )));
    }
    Ok(word)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct M64 {
    a: i128,
    b: i128,
    c: i128,
    d: i128,
}

impl M64 {
    fn mul(&self, o: &M64) -> M64 {
        M64 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    fn inverse_unimodular(&self) -> M64 {
        M64 {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    fn from_ratmat(m: &RatMat2) -> Option<M64> {
        use num_traits::ToPrimitive;
        let get = |r: &Rational| -> Option<i128> {
            if r.is_integer() {
                r.numer().to_i128()
            } else {
                None
            }
        };
        Some(M64 {
            a: get(&m.a)?,
            b: get(&m.b)?,
            c: get(&m.c)?,
            d: get(&m.d)?,
        })
    }
}

/// Distinct conjugates `A·E·A⁻¹` over conjugators with bounded entries,
/// each paired with its entrywise-least conjugator. Sorted for
/// deterministic search order.
fn generator_set(bound: i64) -> Vec<(M64, RatMat2)> {
    let mut seen: std::collections::HashMap<M64, (i64, i64, i64, i64)> =
        std::collections::HashMap::new();
    for a in -bound..=bound {
        for b in -bound..=bound {
            for c in -bound..=bound {
                for d in -bound..=bound {
                    if a * d - b * c != 1 {
                        continue;
                    }
                    // A·E·A⁻¹ for E = (1 1; 0 1) depends only on (a, c).
                    let g = M64 {
                        a: 1 - (a as i128) * (c as i128),
                        b: (a as i128) * (a as i128),
                        c: -(c as i128) * (c as i128),
                        d: 1 + (a as i128) * (c as i128),
                    };
                    let key = (a, b, c, d);
                    seen.entry(g)
                        .and_modify(|cur| {
                            if key < *cur {
                                *cur = key;
                            }
                        })
                        .or_insert(key);
                }
            }
        }
    }
    let mut out: Vec<(M64, RatMat2)> = seen
        .into_iter()
        .map(|(g, (a, b, c, d))| (g, RatMat2::from_ints(a, b, c, d)))
        .collect();
    out.sort_by_key(|(g, _)| (g.a, g.b, g.c, g.d));
    out
}

/// Meet-in-the-middle search for words of length 2..4 over the bounded
/// generator set; returns the conjugators in product order.
fn bfs_word(m: &RatMat2, opts: &DecomposeOptions) -> Option<Vec<RatMat2>> {
    let target = M64::from_ratmat(m)?;
    // Entries of depth-4 products of bounded generators stay far below
    // i128 range for any sane bound; refuse absurd bounds instead of
    // risking overflow.
    if opts.conj_bound > 32 {
        return None;
    }
    let gens = generator_set(opts.conj_bound);
    let max_depth = opts.max_len.min(4);
    if max_depth < 2 {
        return None;
    }
    // Depth 2.
    let mut pairs: std::collections::HashMap<M64, (usize, usize)> =
        std::collections::HashMap::new();
    for (i, (gi, _)) in gens.iter().enumerate() {
        for (j, (gj, _)) in gens.iter().enumerate() {
            let prod = gi.mul(gj);
            pairs.entry(prod).or_insert((i, j));
        }
    }
    let word = |idx: &[usize]| -> Vec<RatMat2> { idx.iter().map(|&i| gens[i].1.clone()).collect() };
    if let Some(&(i, j)) = pairs.get(&target) {
        return Some(word(&[i, j]));
    }
    if max_depth >= 3 {
        for (k, (gk, _)) in gens.iter().enumerate() {
            let rest = target.mul(&gk.inverse_unimodular());
            if let Some(&(i, j)) = pairs.get(&rest) {
                return Some(word(&[i, j, k]));
            }
        }
    }
    if max_depth >= 4 {
        for (k, (gk, _)) in gens.iter().enumerate() {
            let t1 = target.mul(&gk.inverse_unimodular());
            for (l, (gl, _)) in gens.iter().enumerate() {
                let rest = t1.mul(&gl.inverse_unimodular());
                if let Some(&(i, j)) = pairs.get(&rest) {
                    return Some(word(&[i, j, l, k]));
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    LPow(BigInt),
    RPow(BigInt),
    MinusI,
}

/// Peels `m` into `L^q / R^q` factors by the Euclidean algorithm on the
/// first column, with `S`-corner handling. The product of the emitted
/// tokens, left to right, equals `m`.
fn euclid_tokens(m: &RatMat2) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut cur = m.clone();
    for _ in 0..100_000 {
        let a = int(&cur.a);
        let c = int(&cur.c);
        if c.is_zero() {
            let b = int(&cur.b);
            if a.is_one() {
                if !b.is_zero() {
                    tokens.push(Token::LPow(b));
                }
            } else {
                // (-1 b; 0 -1) = -I · L^{-b}
                tokens.push(Token::MinusI);
                if !b.is_zero() {
                    tokens.push(Token::LPow(-b));
                }
            }
            return tokens;
        }
        if a.is_zero() {
            // m = S⁻¹·(S·m) and S⁻¹ = L·R⁻¹·L.
            tokens.push(Token::LPow(BigInt::one()));
            tokens.push(Token::RPow(BigInt::from(-1)));
            tokens.push(Token::LPow(BigInt::one()));
            cur = s_matrix().mul(&cur);
            continue;
        }
        if a.abs() >= c.abs() {
            // Round a/c to nearest so |a - q c| ≤ |c|/2.
            let q = rounded_div(&a, &c);
            tokens.push(Token::LPow(q.clone()));
            let l_negq = RatMat2::new(
                rat_int(1),
                Rational::from_integer(-q),
                rat_int(0),
                rat_int(1),
            );
            cur = l_negq.mul(&cur);
        } else {
            let q = rounded_div(&c, &a);
            tokens.push(Token::RPow(q.clone()));
            let r_negq = RatMat2::new(
                rat_int(1),
                rat_int(0),
                Rational::from_integer(-q),
                rat_int(1),
            );
            cur = r_negq.mul(&cur);
        }
    }
    unreachable!("euclidean peeling did not terminate");
}

/// Nearest-integer division with ties toward even magnitude reduction.
fn rounded_div(a: &BigInt, c: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(c);
    let two_r = BigInt::from(2) * r.abs();
    if two_r > c.abs() {
        if (a.is_negative()) == (c.is_negative()) {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

/// Expands tokens into conjugators, substituting the 11-letter relations
/// for wrong-sign letters. `None` when the expansion would exceed the
/// budget.
fn tokens_to_conjugators(tokens: &[Token], max_len: usize) -> Option<Vec<RatMat2>> {
    let mut out: Vec<RatMat2> = Vec::new();
    let push_flags = |out: &mut Vec<RatMat2>, flags: &[bool]| -> bool {
        if out.len() + flags.len() > max_len {
            return false;
        }
        out.extend(flags_to_conjugators(flags));
        true
    };
    let count = |k: &BigInt| -> Option<usize> {
        let n = k.abs();
        if n > BigInt::from(max_len) {
            None
        } else {
            n.to_usize()
        }
    };
    for t in tokens {
        let ok = match t {
            Token::MinusI => push_flags(&mut out, &WORD_MINUS_I),
            Token::LPow(k) => {
                let n = count(k)?;
                let mut ok = true;
                for _ in 0..n {
                    ok &= if k.is_positive() {
                        push_flags(&mut out, &[false])
                    } else {
                        push_flags(&mut out, &WORD_L_INV)
                    };
                    if !ok {
                        break;
                    }
                }
                ok
            }
            Token::RPow(k) => {
                let n = count(k)?;
                let mut ok = true;
                for _ in 0..n {
                    ok &= if k.is_negative() {
                        push_flags(&mut out, &[true])
                    } else {
                        push_flags(&mut out, &WORD_R)
                    };
                    if !ok {
                        break;
                    }
                }
                ok
            }
        };
        if !ok {
            return None;
        }
    }
    Some(out)
}
