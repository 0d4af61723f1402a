//! Untyped syntax tree.
//!
//! Every node carries a [`Loc`]. Locations never take part in structural
//! equality, so two trees that differ only in where they came from compare
//! equal.

use std::fmt;

#[derive(Clone, Copy, Debug, Default, Eq)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl Loc {
    pub const fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl PartialEq for Loc {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub items: Vec<Item>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Var(VarDecl),
    Typedef(Typedef),
    Record(RecordDef),
    Func(FuncDef),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BaseType {
    Int,
    Float,
    Double,
    Vector,
    Complex,
    LocalInt,
    Void,
    Named(String),
}

impl BaseType {
    pub fn from_keyword(kw: &str) -> Option<Self> {
        Some(match kw {
            "int" => Self::Int,
            "float" => Self::Float,
            "double" => Self::Double,
            "vector" => Self::Vector,
            "complex" => Self::Complex,
            "localint" => Self::LocalInt,
            "void" => Self::Void,
            _ => return None,
        })
    }
}

/// A type as written: base name followed by pointer stars.
#[derive(Clone, Debug, PartialEq)]
pub struct TypeName {
    pub base: BaseType,
    pub pointers: u32,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    Expr(Expr),
    /// `Name v(args);`
    Ctor(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Declarator {
    pub name: String,
    pub dims: Vec<Expr>,
    pub init: Option<Init>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarDecl {
    pub is_const: bool,
    pub ty: TypeName,
    pub declarators: Vec<Declarator>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Typedef {
    pub ty: TypeName,
    pub name: String,
    pub dims: Vec<Expr>,
    pub loc: Loc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordKind {
    Struct,
    Class,
    Union,
}

impl RecordKind {
    pub fn keyword(self) -> &'static str {
        match self {
            Self::Struct => "struct",
            Self::Class => "class",
            Self::Union => "union",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Access {
    Public,
    Private,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecordDef {
    pub kind: RecordKind,
    pub name: String,
    pub base: Option<String>,
    pub members: Vec<Member>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Member {
    Access(Access, Loc),
    Field(VarDecl),
    Method(FuncDef),
    Ctor(CtorDef),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub ty: TypeName,
    pub name: String,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuncDef {
    pub ret: TypeName,
    pub name: String,
    pub params: Vec<Param>,
    pub body: Block,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemberInit {
    pub field: String,
    pub args: Vec<Expr>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CtorDef {
    pub name: String,
    pub params: Vec<Param>,
    pub inits: Vec<MemberInit>,
    pub body: Block,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Expr(Expr),
    Block(Block),
    If {
        cond: Expr,
        then: Box<Stmt>,
        els: Option<Box<Stmt>>,
        loc: Loc,
    },
    Where {
        cond: Expr,
        body: Box<Stmt>,
        elsewhere: Option<Box<Stmt>>,
        loc: Loc,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Expr>,
        body: Box<Stmt>,
        loc: Loc,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
        loc: Loc,
    },
    Return(Option<Expr>, Loc),
    Decl(VarDecl),
    Empty(Loc),
}

impl Stmt {
    pub fn loc(&self) -> Loc {
        match self {
            Stmt::Expr(e) => e.loc,
            Stmt::Block(b) => b.loc,
            Stmt::Decl(d) => d.loc,
            Stmt::If { loc, .. }
            | Stmt::Where { loc, .. }
            | Stmt::For { loc, .. }
            | Stmt::While { loc, .. }
            | Stmt::Return(_, loc)
            | Stmt::Empty(loc) => *loc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Plus,
    Not,
    BitNot,
    Deref,
    AddrOf,
}

impl UnOp {
    pub fn symbol(self) -> &'static str {
        match self {
            Self::Neg => "-",
            Self::Plus => "+",
            Self::Not => "!",
            Self::BitNot => "~",
            Self::Deref => "*",
            Self::AddrOf => "&",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitXor,
    BitOr,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            Self::Add => "+",
            Self::Sub => "-",
            Self::Mul => "*",
            Self::Div => "/",
            Self::Rem => "%",
            Self::Shl => "<<",
            Self::Shr => ">>",
            Self::Lt => "<",
            Self::Le => "<=",
            Self::Gt => ">",
            Self::Ge => ">=",
            Self::Eq => "==",
            Self::Ne => "!=",
            Self::BitAnd => "&",
            Self::BitXor => "^",
            Self::BitOr => "|",
            Self::And => "&&",
            Self::Or => "||",
        }
    }

    /// C binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            Self::Mul | Self::Div | Self::Rem => 10,
            Self::Add | Self::Sub => 9,
            Self::Shl | Self::Shr => 8,
            Self::Lt | Self::Le | Self::Gt | Self::Ge => 7,
            Self::Eq | Self::Ne => 6,
            Self::BitAnd => 5,
            Self::BitXor => 4,
            Self::BitOr => 3,
            Self::And => 2,
            Self::Or => 1,
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "+" => Self::Add,
            "-" => Self::Sub,
            "*" => Self::Mul,
            "/" => Self::Div,
            "%" => Self::Rem,
            "<<" => Self::Shl,
            ">>" => Self::Shr,
            "<" => Self::Lt,
            "<=" => Self::Le,
            ">" => Self::Gt,
            ">=" => Self::Ge,
            "==" => Self::Eq,
            "!=" => Self::Ne,
            "&" => Self::BitAnd,
            "^" => Self::BitXor,
            "|" => Self::BitOr,
            "&&" => Self::And,
            "||" => Self::Or,
            _ => return None,
        })
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            Self::Lt | Self::Le | Self::Gt | Self::Ge | Self::Eq | Self::Ne
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, Self::And | Self::Or)
    }

    pub fn is_bitwise(self) -> bool {
        matches!(
            self,
            Self::Shl | Self::Shr | Self::BitAnd | Self::BitXor | Self::BitOr
        )
    }

    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            Self::Add
                | Self::Mul
                | Self::Eq
                | Self::Ne
                | Self::BitAnd
                | Self::BitXor
                | Self::BitOr
                | Self::And
                | Self::Or
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: Loc,
}

impl Expr {
    pub fn new(kind: ExprKind, loc: Loc) -> Self {
        Self { kind, loc }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int(i32),
    Double(f64),
    Single(f32),
    Ident(String),
    Unary(UnOp, Box<Expr>),
    IncDec {
        increment: bool,
        prefix: bool,
        target: Box<Expr>,
    },
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `lhs = rhs` or compound `lhs op= rhs`.
    Assign(Option<BinOp>, Box<Expr>, Box<Expr>),
    Call(Box<Expr>, Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Member {
        base: Box<Expr>,
        field: String,
        arrow: bool,
    },
    Cast(TypeName, Box<Expr>),
}
