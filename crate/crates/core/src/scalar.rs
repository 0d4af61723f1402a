//! Lane scalars carried by numeric-processor planes.
//!
//! Every NP value is stored in memory as one or two 32-bit words. The
//! [`Lane`] trait fixes that encoding for each scalar, [`NpArith`] fixes
//! lane arithmetic (IEEE-754 for floats, two's-complement wrapping for
//! `localint`), and [`Pair`] builds the two-component `vector` and
//! `complex` lanes over any float scalar.

use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use num_traits::{Float, NumCast, WrappingAdd, WrappingMul, WrappingNeg, WrappingSub};

/// Element kind of an NP plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NpKind {
    Float,
    Double,
    LocalInt,
    Vector,
    Complex,
}

impl NpKind {
    pub const ALL: [NpKind; 5] = [
        NpKind::Float,
        NpKind::Double,
        NpKind::LocalInt,
        NpKind::Vector,
        NpKind::Complex,
    ];

    pub fn words(self) -> u32 {
        match self {
            NpKind::Float | NpKind::LocalInt => 1,
            NpKind::Double | NpKind::Vector | NpKind::Complex => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NpKind::Float => "float",
            NpKind::Double => "double",
            NpKind::LocalInt => "localint",
            NpKind::Vector => "vector",
            NpKind::Complex => "complex",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Element code used by distributed data files.
    pub fn file_code(self) -> u8 {
        match self {
            NpKind::Float => 1,
            NpKind::Double => 2,
            NpKind::LocalInt => 3,
            NpKind::Vector => 4,
            NpKind::Complex => 5,
        }
    }

    pub fn from_file_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.file_code() == code)
    }

    pub fn is_pair(self) -> bool {
        matches!(self, NpKind::Vector | NpKind::Complex)
    }
}

impl std::fmt::Display for NpKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A value that occupies a fixed number of machine words.
pub trait Lane: Copy + Default + PartialEq + Debug + Send + Sync + 'static {
    /// Size in 32-bit words.
    const WORDS: usize;
    /// Size in bytes of the little-endian file encoding.
    const BYTES: usize = Self::WORDS * 4;

    fn to_words(self, out: &mut [u32]);
    fn from_words(words: &[u32]) -> Self;

    fn write_le(self, out: &mut Vec<u8>) {
        let mut words = [0u32; 4];
        self.to_words(&mut words[..Self::WORDS]);
        for w in &words[..Self::WORDS] {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }

    fn read_le(bytes: &[u8]) -> Self {
        let mut words = [0u32; 4];
        for (i, w) in words[..Self::WORDS].iter_mut().enumerate() {
            *w = u32::from_le_bytes(bytes[i * 4..i * 4 + 4].try_into().unwrap());
        }
        Self::from_words(&words[..Self::WORDS])
    }

    /// Truth value when used as a `where` condition.
    fn is_true(self) -> bool;
}

impl Lane for f32 {
    const WORDS: usize = 1;
    fn to_words(self, out: &mut [u32]) {
        out[0] = self.to_bits();
    }
    fn from_words(words: &[u32]) -> Self {
        f32::from_bits(words[0])
    }
    fn is_true(self) -> bool {
        self != 0.0
    }
}

impl Lane for f64 {
    const WORDS: usize = 2;
    fn to_words(self, out: &mut [u32]) {
        let bits = self.to_bits();
        out[0] = bits as u32;
        out[1] = (bits >> 32) as u32;
    }
    fn from_words(words: &[u32]) -> Self {
        f64::from_bits(words[0] as u64 | ((words[1] as u64) << 32))
    }
    fn is_true(self) -> bool {
        self != 0.0
    }
}

impl Lane for i32 {
    const WORDS: usize = 1;
    fn to_words(self, out: &mut [u32]) {
        out[0] = self as u32;
    }
    fn from_words(words: &[u32]) -> Self {
        words[0] as i32
    }
    fn is_true(self) -> bool {
        self != 0
    }
}

/// Lane arithmetic. Division returns `None` when the lane faults.
pub trait NpArith: Lane {
    fn add(self, rhs: Self) -> Self;
    fn sub(self, rhs: Self) -> Self;
    fn mul(self, rhs: Self) -> Self;
    fn div(self, rhs: Self) -> Option<Self>;
    fn neg(self) -> Self;
    /// Conversion of a CP integer broadcast into this lane type.
    fn from_int(v: i32) -> Self;
}

macro_rules! float_arith {
    ($t:ty) => {
        impl NpArith for $t {
            fn add(self, rhs: Self) -> Self {
                self + rhs
            }
            fn sub(self, rhs: Self) -> Self {
                self - rhs
            }
            fn mul(self, rhs: Self) -> Self {
                self * rhs
            }
            fn div(self, rhs: Self) -> Option<Self> {
                Some(self / rhs)
            }
            fn neg(self) -> Self {
                -self
            }
            fn from_int(v: i32) -> Self {
                v as $t
            }
        }
    };
}

float_arith!(f32);
float_arith!(f64);

impl NpArith for i32 {
    fn add(self, rhs: Self) -> Self {
        WrappingAdd::wrapping_add(&self, &rhs)
    }
    fn sub(self, rhs: Self) -> Self {
        WrappingSub::wrapping_sub(&self, &rhs)
    }
    fn mul(self, rhs: Self) -> Self {
        WrappingMul::wrapping_mul(&self, &rhs)
    }
    fn div(self, rhs: Self) -> Option<Self> {
        (rhs != 0).then(|| self.wrapping_div(rhs))
    }
    fn neg(self) -> Self {
        WrappingNeg::wrapping_neg(&self)
    }
    fn from_int(v: i32) -> Self {
        v
    }
}

/// Float scalars usable as `vector`/`complex` components.
pub trait NpFloat: Float + NpArith {}
impl NpFloat for f32 {}
impl NpFloat for f64 {}

/// Two float components: `(x, y)` for `vector`, `(re, im)` for `complex`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Pair<T> {
    pub a: T,
    pub b: T,
}

impl<T> Pair<T> {
    pub const fn new(a: T, b: T) -> Self {
        Self { a, b }
    }
}

impl<T: NpFloat> Pair<T> {
    pub fn splat(v: T) -> Self {
        Self::new(v, v)
    }

    pub fn real(v: T) -> Self {
        Self::new(v, T::zero())
    }

    pub fn zip(self, rhs: Self, f: impl Fn(T, T) -> T) -> Self {
        Self::new(f(self.a, rhs.a), f(self.b, rhs.b))
    }

    pub fn complex_mul(self, rhs: Self) -> Self {
        Self::new(
            self.a * rhs.a - self.b * rhs.b,
            self.a * rhs.b + self.b * rhs.a,
        )
    }

    pub fn complex_div(self, rhs: Self) -> Self {
        let den = rhs.a * rhs.a + rhs.b * rhs.b;
        Self::new(
            (self.a * rhs.a + self.b * rhs.b) / den,
            (self.b * rhs.a - self.a * rhs.b) / den,
        )
    }
}

impl<T: NpFloat> Lane for Pair<T> {
    const WORDS: usize = 2 * T::WORDS;
    fn to_words(self, out: &mut [u32]) {
        self.a.to_words(&mut out[..T::WORDS]);
        self.b.to_words(&mut out[T::WORDS..2 * T::WORDS]);
    }
    fn from_words(words: &[u32]) -> Self {
        Self::new(
            T::from_words(&words[..T::WORDS]),
            T::from_words(&words[T::WORDS..2 * T::WORDS]),
        )
    }
    fn is_true(self) -> bool {
        self.a.is_true() || self.b.is_true()
    }
}

/// Numeric conversion between lane scalars. Float to int rounds toward
/// zero and saturates; NaN becomes 0.
pub fn convert<S, D>(v: S) -> D
where
    S: NumCast + Float,
    D: NumCast + num_traits::Bounded + num_traits::Zero,
{
    match NumCast::from(v) {
        Some(d) => d,
        None if v.is_nan() => D::zero(),
        None if v > S::zero() => D::max_value(),
        None => D::min_value(),
    }
}

/// Integer view of a float lane, rounding toward zero.
pub fn float_to_localint<S: Float>(v: S) -> i32 {
    convert::<S, i32>(v)
}
