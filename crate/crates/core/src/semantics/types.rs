use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::NpKind;

/// The eight kinds that the promotion and cast tables range over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    Int,
    PtrCp,
    PtrNp,
    Float,
    Double,
    Vector,
    Complex,
    LocalInt,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Int,
        Kind::PtrCp,
        Kind::PtrNp,
        Kind::Float,
        Kind::Double,
        Kind::Vector,
        Kind::Complex,
        Kind::LocalInt,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Where values of this kind live. NP pointers are CP values that
    /// address NP memory.
    pub fn group(self) -> Group {
        match self {
            Kind::Int | Kind::PtrCp | Kind::PtrNp => Group::Cp,
            _ => Group::Np,
        }
    }

    pub fn is_np(self) -> bool {
        self.group() == Group::Np
    }

    pub fn is_pointer(self) -> bool {
        matches!(self, Kind::PtrCp | Kind::PtrNp)
    }

    pub fn np_kind(self) -> Option<NpKind> {
        Some(match self {
            Kind::Float => NpKind::Float,
            Kind::Double => NpKind::Double,
            Kind::Vector => NpKind::Vector,
            Kind::Complex => NpKind::Complex,
            Kind::LocalInt => NpKind::LocalInt,
            _ => return None,
        })
    }

    pub fn from_np(k: NpKind) -> Self {
        match k {
            NpKind::Float => Kind::Float,
            NpKind::Double => Kind::Double,
            NpKind::Vector => Kind::Vector,
            NpKind::Complex => Kind::Complex,
            NpKind::LocalInt => Kind::LocalInt,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Int => "int",
            Kind::PtrCp => "CP pointer",
            Kind::PtrNp => "NP pointer",
            Kind::Float => "float",
            Kind::Double => "double",
            Kind::Vector => "vector",
            Kind::Complex => "complex",
            Kind::LocalInt => "localint",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    Cp,
    Np,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Cp => "CP",
            Group::Np => "NP",
        })
    }
}

/// Processor groups occupied by a type. Basic types occupy exactly one;
/// records may occupy both.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Groups {
    pub cp: bool,
    pub np: bool,
}

impl Groups {
    pub const CP: Groups = Groups { cp: true, np: false };
    pub const NP: Groups = Groups { cp: false, np: true };
    pub const NONE: Groups = Groups { cp: false, np: false };

    pub fn union(self, other: Groups) -> Groups {
        Groups {
            cp: self.cp || other.cp,
            np: self.np || other.np,
        }
    }

    pub fn is_mixed(self) -> bool {
        self.cp && self.np
    }

    pub fn single(self) -> Option<Group> {
        match (self.cp, self.np) {
            (true, false) => Some(Group::Cp),
            (false, true) => Some(Group::Np),
            _ => None,
        }
    }
}

pub type RecordId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TypeDesc {
    Int,
    Float,
    Double,
    Vector,
    Complex,
    LocalInt,
    Void,
    Ptr(Box<TypeDesc>),
    Array(Box<TypeDesc>, u32),
    Record(RecordId),
    Function(Vec<TypeDesc>, Box<TypeDesc>),
}

impl TypeDesc {
    pub fn ptr(to: TypeDesc) -> Self {
        TypeDesc::Ptr(Box::new(to))
    }

    pub fn array(elem: TypeDesc, n: u32) -> Self {
        TypeDesc::Array(Box::new(elem), n)
    }

    pub fn from_kind(k: Kind) -> Option<Self> {
        Some(match k {
            Kind::Int => TypeDesc::Int,
            Kind::Float => TypeDesc::Float,
            Kind::Double => TypeDesc::Double,
            Kind::Vector => TypeDesc::Vector,
            Kind::Complex => TypeDesc::Complex,
            Kind::LocalInt => TypeDesc::LocalInt,
            Kind::PtrCp | Kind::PtrNp => return None,
        })
    }

    /// Table kind of a scalar type. Pointers are NP pointers when their
    /// target lives in NP memory; pointers to records are CP pointers.
    pub fn kind(&self) -> Option<Kind> {
        Some(match self {
            TypeDesc::Int => Kind::Int,
            TypeDesc::Float => Kind::Float,
            TypeDesc::Double => Kind::Double,
            TypeDesc::Vector => Kind::Vector,
            TypeDesc::Complex => Kind::Complex,
            TypeDesc::LocalInt => Kind::LocalInt,
            TypeDesc::Ptr(to) => match to.innermost().kind() {
                Some(k) if k.is_np() => Kind::PtrNp,
                _ => Kind::PtrCp,
            },
            _ => return None,
        })
    }

    pub fn np_kind(&self) -> Option<NpKind> {
        self.kind().and_then(Kind::np_kind)
    }

    /// Element type after stripping all array dimensions.
    pub fn innermost(&self) -> &TypeDesc {
        match self {
            TypeDesc::Array(e, _) => e.innermost(),
            t => t,
        }
    }

    pub fn is_array(&self) -> bool {
        matches!(self, TypeDesc::Array(..))
    }

    pub fn is_record(&self) -> bool {
        matches!(self, TypeDesc::Record(_))
    }

    pub fn pointee(&self) -> Option<&TypeDesc> {
        match self {
            TypeDesc::Ptr(t) => Some(t),
            _ => None,
        }
    }

    /// Pointer to a record or to an array of records: a two-word
    /// (CP offset, NP offset) handle.
    pub fn is_record_ptr(&self) -> bool {
        matches!(self, TypeDesc::Ptr(t) if t.innermost().is_record())
    }

    /// Records and arrays of records, addressed by two-word handles.
    pub fn is_handle_object(&self) -> bool {
        self.innermost().is_record()
    }

    /// Scalar arithmetic types (no pointers).
    pub fn is_arith(&self) -> bool {
        matches!(
            self,
            TypeDesc::Int
                | TypeDesc::Float
                | TypeDesc::Double
                | TypeDesc::Vector
                | TypeDesc::Complex
                | TypeDesc::LocalInt
        )
    }

    pub fn is_cp_scalar(&self) -> bool {
        self.kind().is_some_and(|k| k.group() == Group::Cp)
    }

    pub fn is_np_scalar(&self) -> bool {
        self.kind().is_some_and(Kind::is_np)
    }
}

impl fmt::Display for TypeDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeDesc::Int => f.write_str("int"),
            TypeDesc::Float => f.write_str("float"),
            TypeDesc::Double => f.write_str("double"),
            TypeDesc::Vector => f.write_str("vector"),
            TypeDesc::Complex => f.write_str("complex"),
            TypeDesc::LocalInt => f.write_str("localint"),
            TypeDesc::Void => f.write_str("void"),
            TypeDesc::Ptr(t) => write!(f, "{t}*"),
            TypeDesc::Array(t, n) => write!(f, "{t}[{n}]"),
            TypeDesc::Record(id) => write!(f, "record#{id}"),
            TypeDesc::Function(params, ret) => {
                write!(f, "{ret}(")?;
                for (i, p) in params.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
        }
    }
}
