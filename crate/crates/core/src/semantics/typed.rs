//! Fully typed program produced by the checker.

use crate::frontend::ast::{Access, BinOp, Loc, RecordKind};
use crate::scalar::NpKind;

use super::types::{Kind, RecordId, TypeDesc};

pub type FuncId = usize;
pub type GlobalId = usize;
pub type LocalId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct FieldInfo {
    pub name: String,
    pub ty: TypeDesc,
    pub access: Access,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecordInfo {
    pub name: String,
    pub kind: RecordKind,
    pub base: Option<RecordId>,
    /// Own fields only, in declaration order; base fields live in `base`.
    pub fields: Vec<FieldInfo>,
    pub methods: Vec<(String, FuncId, Access)>,
    pub ctor: Option<FuncId>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalVar {
    pub name: String,
    pub ty: TypeDesc,
    pub is_const: bool,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalVar {
    pub name: String,
    pub ty: TypeDesc,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Function {
    /// Methods are named `Record::method`.
    pub name: String,
    /// Parameter locals in order; a method's hidden object handle is first.
    pub params: Vec<LocalId>,
    pub locals: Vec<LocalVar>,
    pub ret: TypeDesc,
    pub body: Vec<Stmt>,
    pub this_record: Option<RecordId>,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypedProgram {
    pub records: Vec<RecordInfo>,
    pub globals: Vec<GlobalVar>,
    pub functions: Vec<Function>,
    pub main: Option<FuncId>,
    /// Global initializers in declaration order.
    pub init: Vec<Stmt>,
    /// Names of data files referenced by distributed load/store.
    pub bindings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Expr(Expr),
    Block(Vec<Stmt>),
    If {
        cond: Expr,
        then: Vec<Stmt>,
        els: Vec<Stmt>,
    },
    Where {
        cond: Expr,
        body: Vec<Stmt>,
        elsewhere: Option<Vec<Stmt>>,
        loc: Loc,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    For {
        init: Vec<Stmt>,
        cond: Option<Expr>,
        step: Option<Expr>,
        body: Vec<Stmt>,
    },
    Return(Option<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
    BitNot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ReduceKind {
    Any,
    All,
    None,
}

impl ReduceKind {
    pub fn name(self) -> &'static str {
        match self {
            ReduceKind::Any => "any",
            ReduceKind::All => "all",
            ReduceKind::None => "none",
        }
    }
}

/// How a compound assignment combines the old value with the operand.
#[derive(Clone, Debug, PartialEq)]
pub enum Compound {
    /// `target = (target_ty)((op_ty)target op value)`.
    Arith { op: BinOp, op_ty: TypeDesc },
    /// `p += n` / `p -= n` on a pointer.
    Pointer { negate: bool },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub ty: TypeDesc,
    pub kind: ExprKind,
    pub loc: Loc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Int(i32),
    Float(f32),
    Double(f64),
    Global(GlobalId),
    Local(LocalId),
    /// `named` marks the predeclared `XPLUS_NP`-style names.
    Neighbor {
        axis: u32,
        sign: i32,
        named: bool,
    },
    /// Conversion from the operand's type to this node's type.
    Convert {
        expr: Box<Expr>,
        explicit: bool,
    },
    /// Array lvalue used as a pointer to its first element.
    Decay(Box<Expr>),
    Unary(UnaryOp, Box<Expr>),
    /// Both operands carry the common operand type; comparisons yield
    /// `int` or `localint`.
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    /// CP operands short-circuit; NP operands evaluate both sides.
    Logical {
        and: bool,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    PtrOffset {
        ptr: Box<Expr>,
        index: Box<Expr>,
        negate: bool,
    },
    PtrDiff {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Assign {
        target: Box<Expr>,
        value: Box<Expr>,
        compound: Option<Compound>,
    },
    IncDec {
        increment: bool,
        prefix: bool,
        target: Box<Expr>,
    },
    /// `base[index]`; base is an array lvalue or a pointer rvalue.
    Index {
        base: Box<Expr>,
        index: Box<Expr>,
    },
    Deref(Box<Expr>),
    AddrOf(Box<Expr>),
    /// Field of a record lvalue. `record` is the record that declares it.
    Field {
        base: Box<Expr>,
        record: RecordId,
        field: usize,
    },
    Call {
        func: FuncId,
        args: Vec<Expr>,
    },
    LocalOffset(Box<Expr>),
    Reduce(ReduceKind, Box<Expr>),
    DistLoad {
        dest: Box<Expr>,
        binding: usize,
        count: Box<Expr>,
        elem: NpKind,
    },
    DistStore {
        src: Box<Expr>,
        binding: usize,
        count: Box<Expr>,
        elem: NpKind,
    },
}

impl Expr {
    pub fn is_lvalue(&self) -> bool {
        matches!(
            self.kind,
            ExprKind::Global(_)
                | ExprKind::Local(_)
                | ExprKind::Index { .. }
                | ExprKind::Deref(_)
                | ExprKind::Field { .. }
        )
    }

    /// Direct sub-expressions.
    pub fn children(&self) -> Vec<&Expr> {
        use ExprKind::*;
        match &self.kind {
            Int(_) | Float(_) | Double(_) | Global(_) | Local(_) | Neighbor { .. } => vec![],
            Convert { expr, .. } => vec![expr],
            Decay(e) | Unary(_, e) | Deref(e) | AddrOf(e) | LocalOffset(e) | Reduce(_, e) => {
                vec![e]
            }
            Binary { lhs, rhs, .. } | Logical { lhs, rhs, .. } | PtrDiff { lhs, rhs } => {
                vec![lhs, rhs]
            }
            PtrOffset { ptr, index, .. } => vec![ptr, index],
            Assign { target, value, .. } => vec![target, value],
            IncDec { target, .. } => vec![target],
            Index { base, index } => vec![base, index],
            Field { base, .. } => vec![base],
            Call { args, .. } => args.iter().collect(),
            DistLoad { dest, count, .. } => vec![dest, count],
            DistStore { src, count, .. } => vec![src, count],
        }
    }

    pub fn walk(&self, f: &mut impl FnMut(&Expr)) {
        self.walk_dyn(f)
    }

    fn walk_dyn(&self, f: &mut dyn FnMut(&Expr)) {
        f(self);
        for c in self.children() {
            c.walk_dyn(f);
        }
    }
}

impl Stmt {
    pub fn walk_exprs(&self, f: &mut impl FnMut(&Expr)) {
        self.walk_dyn(f)
    }

    fn walk_dyn(&self, f: &mut dyn FnMut(&Expr)) {
        fn all(stmts: &[Stmt], f: &mut dyn FnMut(&Expr)) {
            for s in stmts {
                s.walk_dyn(f);
            }
        }
        let visit = |e: &Expr, f: &mut dyn FnMut(&Expr)| e.walk_dyn(f);
        match self {
            Stmt::Expr(e) => visit(e, f),
            Stmt::Block(b) => all(b, f),
            Stmt::If { cond, then, els } => {
                visit(cond, f);
                all(then, f);
                all(els, f);
            }
            Stmt::Where {
                cond,
                body,
                elsewhere,
                ..
            } => {
                visit(cond, f);
                all(body, f);
                if let Some(e) = elsewhere {
                    all(e, f);
                }
            }
            Stmt::While { cond, body } => {
                visit(cond, f);
                all(body, f);
            }
            Stmt::For {
                init,
                cond,
                step,
                body,
            } => {
                all(init, f);
                if let Some(c) = cond {
                    visit(c, f);
                }
                if let Some(s) = step {
                    visit(s, f);
                }
                all(body, f);
            }
            Stmt::Return(e) => {
                if let Some(e) = e {
                    visit(e, f);
                }
            }
        }
    }
}

/// One implicit or explicit conversion between table kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConversionEdge {
    pub from: Kind,
    pub to: Kind,
    pub explicit: bool,
}

impl TypedProgram {
    pub fn walk_exprs(&self, f: &mut impl FnMut(&Expr)) {
        for s in &self.init {
            s.walk_exprs(f);
        }
        for func in &self.functions {
            for s in &func.body {
                s.walk_exprs(f);
            }
        }
    }

    /// Every kind-to-kind conversion the program performs, including the
    /// ones implied by compound assignment.
    pub fn conversion_edges(&self) -> Vec<ConversionEdge> {
        let mut edges = Vec::new();
        self.walk_exprs(&mut |e| match &e.kind {
            ExprKind::Convert { expr, explicit } => {
                if let (Some(from), Some(to)) = (expr.ty.kind(), e.ty.kind()) {
                    edges.push(ConversionEdge {
                        from,
                        to,
                        explicit: *explicit,
                    });
                }
            }
            ExprKind::Assign {
                target,
                compound: Some(Compound::Arith { op_ty, .. }),
                ..
            } => {
                if let (Some(t), Some(o)) = (target.ty.kind(), op_ty.kind()) {
                    for (from, to) in [(t, o), (o, t)] {
                        edges.push(ConversionEdge {
                            from,
                            to,
                            explicit: false,
                        });
                    }
                }
            }
            _ => {}
        });
        edges
    }

    pub fn record_name(&self, id: RecordId) -> &str {
        &self.records[id].name
    }

    pub fn function_by_name(&self, name: &str) -> Option<FuncId> {
        self.functions.iter().position(|f| f.name == name)
    }
}
