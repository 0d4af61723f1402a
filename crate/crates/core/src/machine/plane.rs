use crate::lower::Op;
use crate::scalar::{float_to_localint, Lane, NpArith, NpKind, Pair};

/// One value per node, all of one kind.
#[derive(Clone, Debug, PartialEq)]
pub enum Plane {
    Float(Vec<f32>),
    Double(Vec<f64>),
    LocalInt(Vec<i32>),
    Vector(Vec<Pair<f32>>),
    Complex(Vec<Pair<f32>>),
}

/// Lane types that can form a plane.
pub trait PlaneLane: Lane {
    fn wrap(lanes: Vec<Self>, kind: NpKind) -> Plane;
}

impl PlaneLane for f32 {
    fn wrap(lanes: Vec<Self>, _: NpKind) -> Plane {
        Plane::Float(lanes)
    }
}

impl PlaneLane for f64 {
    fn wrap(lanes: Vec<Self>, _: NpKind) -> Plane {
        Plane::Double(lanes)
    }
}

impl PlaneLane for i32 {
    fn wrap(lanes: Vec<Self>, _: NpKind) -> Plane {
        Plane::LocalInt(lanes)
    }
}

impl PlaneLane for Pair<f32> {
    fn wrap(lanes: Vec<Self>, kind: NpKind) -> Plane {
        match kind {
            NpKind::Complex => Plane::Complex(lanes),
            _ => Plane::Vector(lanes),
        }
    }
}

/// Run `$body` with `$t` bound to the lane type of `$kind`.
macro_rules! with_lane {
    ($kind:expr, $t:ident => $body:expr) => {
        match $kind {
            NpKind::Float => {
                type $t = f32;
                $body
            }
            NpKind::Double => {
                type $t = f64;
                $body
            }
            NpKind::LocalInt => {
                type $t = i32;
                $body
            }
            NpKind::Vector | NpKind::Complex => {
                type $t = Pair<f32>;
                $body
            }
        }
    };
}

macro_rules! each {
    ($plane:expr, $v:ident => $body:expr) => {
        match $plane {
            Plane::Float($v) => $body,
            Plane::Double($v) => $body,
            Plane::LocalInt($v) => $body,
            Plane::Vector($v) => $body,
            Plane::Complex($v) => $body,
        }
    };
}

/// Integer operator shared by CP words and `localint` lanes. `None` on
/// division or remainder by zero.
pub fn int_binop(op: Op, a: i32, b: i32) -> Option<i32> {
    Some(match op {
        Op::Add => a.wrapping_add(b),
        Op::Sub => a.wrapping_sub(b),
        Op::Mul => a.wrapping_mul(b),
        Op::Div => return (b != 0).then(|| a.wrapping_div(b)),
        Op::Rem => return (b != 0).then(|| a.wrapping_rem(b)),
        Op::BitAnd => a & b,
        Op::BitOr => a | b,
        Op::BitXor => a ^ b,
        Op::Shl => a.wrapping_shl(b as u32),
        Op::Shr => a.wrapping_shr(b as u32),
        Op::Eq => (a == b) as i32,
        Op::Ne => (a != b) as i32,
        Op::Lt => (a < b) as i32,
        Op::Le => (a <= b) as i32,
        Op::Gt => (a > b) as i32,
        Op::Ge => (a >= b) as i32,
        Op::And => (a != 0 && b != 0) as i32,
        Op::Or => (a != 0 || b != 0) as i32,
    })
}

fn compare<T: PartialOrd>(op: Op, a: &[T], b: &[T]) -> Vec<i32> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            (match op {
                Op::Eq => x == y,
                Op::Ne => x != y,
                Op::Lt => x < y,
                Op::Le => x <= y,
                Op::Gt => x > y,
                _ => x >= y,
            }) as i32
        })
        .collect()
}

fn arith<T: Lane>(op: Op, a: &[T], b: &[T], active: &[bool], f: impl Fn(Op, T, T) -> Option<T>) -> Result<Vec<T>, String> {
    let mut out = Vec::with_capacity(a.len());
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        out.push(match f(op, *x, *y) {
            Some(v) => v,
            None if active[i] => return Err(format!("{} by zero on node {i}", if op == Op::Rem { "remainder" } else { "division" })),
            None => T::default(),
        });
    }
    Ok(out)
}

fn float_op<T: NpArith>(op: Op, x: T, y: T) -> Option<T> {
    match op {
        Op::Add => Some(x.add(y)),
        Op::Sub => Some(x.sub(y)),
        Op::Mul => Some(x.mul(y)),
        _ => x.div(y),
    }
}

fn vector_op(op: Op, x: Pair<f32>, y: Pair<f32>) -> Option<Pair<f32>> {
    Some(x.zip(y, |p, q| float_op(op, p, q).unwrap_or(0.0)))
}

fn complex_op(op: Op, x: Pair<f32>, y: Pair<f32>) -> Option<Pair<f32>> {
    Some(match op {
        Op::Mul => x.complex_mul(y),
        Op::Div => x.complex_div(y),
        _ => return vector_op(op, x, y),
    })
}

impl Plane {
    pub fn kind(&self) -> NpKind {
        match self {
            Plane::Float(_) => NpKind::Float,
            Plane::Double(_) => NpKind::Double,
            Plane::LocalInt(_) => NpKind::LocalInt,
            Plane::Vector(_) => NpKind::Vector,
            Plane::Complex(_) => NpKind::Complex,
        }
    }

    pub fn len(&self) -> usize {
        each!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zeros(kind: NpKind, n: usize) -> Plane {
        with_lane!(kind, T => T::wrap(vec![T::default(); n], kind))
    }

    /// Replicate a value given by its memory words.
    pub fn splat_words(kind: NpKind, words: &[u32], n: usize) -> Plane {
        with_lane!(kind, T => T::wrap(vec![T::from_words(words); n], kind))
    }

    /// Replicate a CP integer converted to `kind`.
    pub fn splat_int(kind: NpKind, v: i32, n: usize) -> Plane {
        Plane::LocalInt(vec![v; n]).convert(kind).expect("int converts to every kind")
    }

    /// Build a plane lane by lane from memory words.
    pub fn from_words<E>(kind: NpKind, n: usize, mut f: impl FnMut(usize, &mut [u32]) -> Result<(), E>) -> Result<Plane, E> {
        with_lane!(kind, T => {
            let mut lanes = Vec::with_capacity(n);
            let mut buf = [0u32; 2];
            for i in 0..n {
                let w = &mut buf[..T::WORDS];
                w.fill(0);
                f(i, w)?;
                lanes.push(T::from_words(w));
            }
            Ok(T::wrap(lanes, kind))
        })
    }

    pub fn lane_words(&self, i: usize, out: &mut [u32]) {
        each!(self, v => v[i].to_words(out))
    }

    pub fn is_true(&self, i: usize) -> bool {
        each!(self, v => v[i].is_true())
    }

    pub fn as_localint(&self) -> Option<&[i32]> {
        match self {
            Plane::LocalInt(v) => Some(v),
            _ => None,
        }
    }

    pub fn lane_string(&self, i: usize) -> String {
        match self {
            Plane::Float(v) => format!("{:?}", v[i]),
            Plane::Double(v) => format!("{:?}", v[i]),
            Plane::LocalInt(v) => v[i].to_string(),
            Plane::Vector(v) | Plane::Complex(v) => format!("({:?},{:?})", v[i].a, v[i].b),
        }
    }

    /// Lane-wise conversion. Integers and reals widen to pairs as a splat
    /// for `vector` and as `(x, 0)` for `complex`.
    pub fn convert(&self, to: NpKind) -> Result<Plane, String> {
        if self.kind() == to {
            return Ok(self.clone());
        }
        let reals: Vec<f64> = match self {
            Plane::Float(v) => v.iter().map(|&x| x as f64).collect(),
            Plane::Double(v) => v.clone(),
            Plane::LocalInt(v) => v.iter().map(|&x| x as f64).collect(),
            _ => return Err(format!("no conversion from {} to {to}", self.kind())),
        };
        Ok(match (self, to) {
            (Plane::LocalInt(v), NpKind::Float) => Plane::Float(v.iter().map(|&x| x as f32).collect()),
            (Plane::Float(v), NpKind::LocalInt) => Plane::LocalInt(v.iter().map(|&x| float_to_localint(x)).collect()),
            (_, NpKind::LocalInt) => Plane::LocalInt(reals.iter().map(|&x| float_to_localint(x)).collect()),
            (Plane::LocalInt(v), NpKind::Vector) => Plane::Vector(v.iter().map(|&x| Pair::splat(x as f32)).collect()),
            (Plane::LocalInt(v), NpKind::Complex) => Plane::Complex(v.iter().map(|&x| Pair::real(x as f32)).collect()),
            (_, NpKind::Float) => Plane::Float(reals.iter().map(|&x| x as f32).collect()),
            (_, NpKind::Double) => Plane::Double(reals),
            (_, NpKind::Vector) => Plane::Vector(reals.iter().map(|&x| Pair::splat(x as f32)).collect()),
            (_, NpKind::Complex) => Plane::Complex(reals.iter().map(|&x| Pair::real(x as f32)).collect()),
        })
    }

    /// Lane-wise binary operator. Comparisons yield `localint` 0/1.
    /// Integer division by zero faults only on active lanes.
    pub fn binary(&self, op: Op, rhs: &Plane, active: &[bool]) -> Result<Plane, String> {
        let bad = || format!("operator {} is not defined on {}", op.name(), self.kind());
        Ok(match (self, rhs) {
            (Plane::LocalInt(a), Plane::LocalInt(b)) => Plane::LocalInt(arith(op, a, b, active, int_binop)?),
            (Plane::Float(a), Plane::Float(b)) if op.is_comparison() => Plane::LocalInt(compare(op, a, b)),
            (Plane::Double(a), Plane::Double(b)) if op.is_comparison() => Plane::LocalInt(compare(op, a, b)),
            (Plane::Vector(a), Plane::Vector(b)) | (Plane::Complex(a), Plane::Complex(b))
                if matches!(op, Op::Eq | Op::Ne) =>
            {
                Plane::LocalInt(a.iter().zip(b).map(|(x, y)| ((x == y) == (op == Op::Eq)) as i32).collect())
            }
            _ if !matches!(op, Op::Add | Op::Sub | Op::Mul | Op::Div) => return Err(bad()),
            (Plane::Float(a), Plane::Float(b)) => Plane::Float(arith(op, a, b, active, float_op)?),
            (Plane::Double(a), Plane::Double(b)) => Plane::Double(arith(op, a, b, active, float_op)?),
            (Plane::Vector(a), Plane::Vector(b)) => Plane::Vector(arith(op, a, b, active, vector_op)?),
            (Plane::Complex(a), Plane::Complex(b)) => Plane::Complex(arith(op, a, b, active, complex_op)?),
            _ => return Err(format!("operand kinds {} and {} differ", self.kind(), rhs.kind())),
        })
    }

    pub fn neg(&self) -> Plane {
        match self {
            Plane::Float(v) => Plane::Float(v.iter().map(|x| -x).collect()),
            Plane::Double(v) => Plane::Double(v.iter().map(|x| -x).collect()),
            Plane::LocalInt(v) => Plane::LocalInt(v.iter().map(|x| x.wrapping_neg()).collect()),
            Plane::Vector(v) => Plane::Vector(v.iter().map(|x| Pair::new(-x.a, -x.b)).collect()),
            Plane::Complex(v) => Plane::Complex(v.iter().map(|x| Pair::new(-x.a, -x.b)).collect()),
        }
    }

    /// Logical not, yielding `localint` 0/1.
    pub fn not(&self) -> Plane {
        Plane::LocalInt((0..self.len()).map(|i| !self.is_true(i) as i32).collect())
    }

    pub fn bitnot(&self) -> Result<Plane, String> {
        match self {
            Plane::LocalInt(v) => Ok(Plane::LocalInt(v.iter().map(|x| !x).collect())),
            p => Err(format!("operator ~ is not defined on {}", p.kind())),
        }
    }
}
