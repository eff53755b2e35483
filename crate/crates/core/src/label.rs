//! Per-mode labels.
//!
//! Coherent modes carry an exact multiplier `a + b√2` (with `a`, `b`
//! rational) of the base amplitude α. This set is closed under the 50:50
//! beamsplitter map `(x, y) -> ((x + y)/√2, (x - y)/√2)`, so terms produced by
//! chained beamsplitters compare and merge exactly.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_rational::Rational64;
use num_traits::{Signed, Zero};

/// Exact coherent amplitude multiplier `a + b√2`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoherentLabel {
    a: Rational64,
    b: Rational64,
}

impl CoherentLabel {
    pub const fn new(a: Rational64, b: Rational64) -> Self {
        Self { a, b }
    }

    pub fn from_ints(a: i64, b: i64) -> Self {
        Self::new(Rational64::from_integer(a), Rational64::from_integer(b))
    }

    pub fn zero() -> Self {
        Self::from_ints(0, 0)
    }

    /// `+1`, i.e. the state |α⟩.
    pub fn plus() -> Self {
        Self::from_ints(1, 0)
    }

    /// `-1`, i.e. the state |-α⟩.
    pub fn minus() -> Self {
        Self::from_ints(-1, 0)
    }

    /// `√2`.
    pub fn sqrt2() -> Self {
        Self::from_ints(0, 1)
    }

    pub fn rational_part(&self) -> Rational64 {
        self.a
    }

    pub fn sqrt2_part(&self) -> Rational64 {
        self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Division by √2: `(a + b√2)/√2 = b + (a/2)√2`.
    pub fn div_sqrt2(self) -> Self {
        Self::new(self.b, self.a / 2)
    }

    /// Multiplication by √2: `(a + b√2)√2 = 2b + a√2`.
    pub fn mul_sqrt2(self) -> Self {
        Self::new(self.b * 2, self.a)
    }

    pub fn value(&self) -> f64 {
        ratio_to_f64(self.a) + ratio_to_f64(self.b) * SQRT_2
    }

    /// Sign of the real value, computed exactly.
    pub fn signum(&self) -> i32 {
        // compare a against -b√2 without floating point: sign(a + b√2)
        let (a, b) = (self.a, self.b);
        match (a.signum(), b.signum()) {
            (sa, sb) if sa.is_zero() && sb.is_zero() => 0,
            (sa, sb) if !sa.is_negative() && !sb.is_negative() => 1,
            (sa, sb) if !sa.is_positive() && !sb.is_positive() => -1,
            _ => {
                // opposite signs: compare a² with 2b²
                let a2 = a * a;
                let b2 = b * b * 2;
                if a2 > b2 {
                    if a.is_positive() {
                        1
                    } else {
                        -1
                    }
                } else if b.is_positive() {
                    1
                } else {
                    -1
                }
            }
        }
    }

    /// Absolute value (exact).
    pub fn abs(self) -> Self {
        if self.signum() < 0 {
            -self
        } else {
            self
        }
    }
}

fn ratio_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl Add for CoherentLabel {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl Sub for CoherentLabel {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.a - rhs.a, self.b - rhs.b)
    }
}

impl Neg for CoherentLabel {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a, -self.b)
    }
}

impl fmt::Display for CoherentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (true, true) => write!(f, "0"),
            (false, true) => write!(f, "{}α", self.a),
            (true, false) => write!(f, "{}√2α", self.b),
            (false, false) => write!(f, "({}+{}√2)α", self.a, self.b),
        }
    }
}

/// Polarization label in the diagonal basis |±⟩ = (|H⟩ ± |V⟩)/√2.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolLabel {
    Plus,
    Minus,
}

impl PolLabel {
    pub fn flipped(self) -> Self {
        match self {
            PolLabel::Plus => PolLabel::Minus,
            PolLabel::Minus => PolLabel::Plus,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            PolLabel::Plus => "+",
            PolLabel::Minus => "-",
        }
    }

    /// Components `(⟨H|·⟩, ⟨V|·⟩)` of this label.
    pub fn to_hv(self) -> (f64, f64) {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            PolLabel::Plus => (r, r),
            PolLabel::Minus => (r, -r),
        }
    }

    /// Components `(⟨+|·⟩, ⟨-|·⟩)` of |H⟩ (`vertical = false`) or |V⟩.
    pub fn hv_in_diagonal(vertical: bool) -> [(PolLabel, f64); 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        if vertical {
            [(PolLabel::Plus, r), (PolLabel::Minus, -r)]
        } else {
            [(PolLabel::Plus, r), (PolLabel::Minus, r)]
        }
    }
}

impl fmt::Display for PolLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Label of one mode inside a term.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Pol(PolLabel),
    Coh(CoherentLabel),
}

impl Label {
    pub fn as_pol(&self) -> Option<PolLabel> {
        match self {
            Label::Pol(p) => Some(*p),
            Label::Coh(_) => None,
        }
    }

    pub fn as_coh(&self) -> Option<CoherentLabel> {
        match self {
            Label::Coh(c) => Some(*c),
            Label::Pol(_) => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Pol(p) => write!(f, "{p}"),
            Label::Coh(c) => write!(f, "{c}"),
        }
    }
}
