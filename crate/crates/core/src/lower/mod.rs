//! Lowering of the typed program to the two-stream IR.
//!
//! CP values (integers, pointers, record handles) live on the CP operand
//! stack as words; NP values live on the NP stack as planes. Every NP
//! memory access takes its address from the CP stack.

pub mod ir;

use thiserror::Error;

use crate::frontend::ast::{BinOp, Loc, RecordKind};
use crate::layout::{size_of, LayoutPlan, Slot, Space};
use crate::scalar::NpKind;
use crate::semantics::{
    Compound, Expr, ExprKind, FuncId, Kind, Stmt, TypeDesc, TypedProgram, UnaryOp,
};

pub use ir::*;

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{message}")]
pub struct LowerError {
    pub loc: Loc,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("neighbor axis {axis} needs a topology of rank > {axis}, but the rank is {rank}")]
    AxisOutOfRange { axis: u32, rank: usize },
    #[error("named neighbor constants are only defined for topologies of rank 3 or less (rank is {rank}); use NEIGHBOR_NP(axis, sign)")]
    NamedOnHighRank { rank: usize },
    #[error("NP memory size must be positive")]
    ZeroMemory,
}

/// Address offset selecting the neighbor window for `(axis, sign)`.
pub fn neighbor_constant(axis: u32, sign: i32, np_words: u32, rank: usize) -> Result<i64, ConfigError> {
    if np_words == 0 {
        return Err(ConfigError::ZeroMemory);
    }
    if axis as usize >= rank {
        return Err(ConfigError::AxisOutOfRange { axis, rank });
    }
    let window = 2 * i64::from(axis) + if sign < 0 { 2 } else { 1 };
    Ok(window * i64::from(np_words))
}

/// Named constant lookup for ranks up to three.
pub fn named_neighbor_constant(name: &str, np_words: u32, rank: usize) -> Result<Option<i64>, ConfigError> {
    let Some((_, axis, sign)) = crate::semantics::NEIGHBOR_NAMES.iter().find(|(n, ..)| *n == name) else {
        return Ok(None);
    };
    if rank > 3 {
        return Err(ConfigError::NamedOnHighRank { rank });
    }
    neighbor_constant(*axis, *sign, np_words, rank).map(Some)
}

type LResult<T> = Result<T, LowerError>;

fn internal<T>(loc: Loc, what: &str) -> LResult<T> {
    Err(LowerError {
        loc,
        message: format!("cannot lower {what}"),
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Shape {
    Cp,
    Np,
    Handle,
}

fn shape(ty: &TypeDesc) -> Shape {
    if ty.is_handle_object() {
        return Shape::Handle;
    }
    match ty.innermost().kind().map(|k| k.group()) {
        Some(crate::semantics::Group::Np) => Shape::Np,
        _ => Shape::Cp,
    }
}

/// Words a CP value of this type occupies on the CP stack.
fn cp_words(ty: &TypeDesc) -> u32 {
    match ty {
        TypeDesc::Void => 0,
        t if t.is_record_ptr() => 2,
        _ => 1,
    }
}

struct Gen<'a> {
    p: &'a TypedProgram,
    plan: &'a LayoutPlan,
    code: Vec<Instr>,
    func: Option<FuncId>,
    call_fixups: Vec<(usize, FuncId)>,
}

pub fn lower_program(program: &TypedProgram, plan: &LayoutPlan) -> Result<IrProgram, LowerError> {
    let mut g = Gen {
        p: program,
        plan,
        code: Vec::new(),
        func: None,
        call_fixups: Vec::new(),
    };
    for s in &program.init {
        g.stmt(s)?;
    }
    if let Some(main) = program.main {
        g.call_to(main);
        let ret = program.functions[main].ret.clone();
        g.drop_value(&ret);
    }
    g.cp(CpOp::Halt);

    let mut functions = Vec::with_capacity(program.functions.len());
    for id in 0..program.functions.len() {
        let entry = g.here();
        g.function(id)?;
        functions.push(FuncEntry {
            name: program.functions[id].name.clone(),
            entry,
            end: g.here(),
        });
    }
    for (at, f) in std::mem::take(&mut g.call_fixups) {
        g.code[at] = Instr::Cp(CpOp::Call(functions[f].entry));
    }

    let (cp_cells, np_cells) = static_cells(program, plan);
    Ok(IrProgram {
        instrs: g.code,
        functions,
        entry: 0,
        cp_static_size: plan.cp_static_size,
        np_static_size: plan.np_static_size,
        bindings: program.bindings.clone(),
        cp_cells,
        np_cells,
    })
}

/// Lower one `where` statement on its own, for inspection.
pub fn lower_where(program: &TypedProgram, plan: &LayoutPlan, stmt: &Stmt, func: Option<FuncId>) -> Result<Vec<Instr>, LowerError> {
    let mut g = Gen {
        p: program,
        plan,
        code: Vec::new(),
        func,
        call_fixups: Vec::new(),
    };
    g.stmt(stmt)?;
    Ok(g.code)
}

impl<'a> Gen<'a> {
    fn here(&self) -> u32 {
        self.code.len() as u32
    }

    fn cp(&mut self, op: CpOp) {
        self.code.push(Instr::Cp(op));
    }

    fn np(&mut self, op: NpOp) {
        self.code.push(Instr::Np(op));
    }

    fn placeholder(&mut self, op: CpOp) -> usize {
        self.cp(op);
        self.code.len() - 1
    }

    fn patch(&mut self, at: usize, target: u32) {
        self.code[at] = Instr::Cp(match self.code[at] {
            Instr::Cp(CpOp::Jmp(_)) => CpOp::Jmp(target),
            Instr::Cp(CpOp::Jz(_)) => CpOp::Jz(target),
            Instr::Cp(CpOp::Jnz(_)) => CpOp::Jnz(target),
            other => unreachable!("patching {other:?}"),
        });
    }

    fn call_to(&mut self, f: FuncId) {
        let at = self.placeholder(CpOp::Call(0));
        self.call_fixups.push((at, f));
    }

    fn frame_slot(&self, local: usize) -> Slot {
        let f = self.func.expect("local outside a function");
        self.plan.frames[f].locals[local]
    }

    fn elem_size(&self, ty: &TypeDesc, space: Space) -> u32 {
        match ty {
            TypeDesc::Void => 1,
            t => size_of(t, &self.plan.records).get(space),
        }
    }

    fn function(&mut self, id: FuncId) -> LResult<()> {
        self.func = Some(id);
        let f = &self.p.functions[id];
        let frame = &self.plan.frames[id];
        self.cp(CpOp::Enter {
            cp: frame.cp_size,
            np: frame.np_size,
        });
        self.np(NpOp::ClearLocalOffset);
        for &param in f.params.iter().rev() {
            let ty = &f.locals[param].ty;
            let slot = frame.locals[param];
            match ty.np_kind() {
                Some(k) => {
                    self.cp(CpOp::NpFrame(slot.np));
                    self.np(NpOp::Store(k));
                }
                None => {
                    self.cp(CpOp::Frame(slot.cp));
                    self.cp(CpOp::Store(cp_words(ty)));
                }
            }
        }
        for s in &f.body {
            self.stmt(s)?;
        }
        if f.ret != TypeDesc::Void {
            self.zero(&f.ret);
        }
        self.np(NpOp::ClearLocalOffset);
        self.cp(CpOp::Ret);
        self.func = None;
        Ok(())
    }

    fn zero(&mut self, ty: &TypeDesc) {
        match ty.np_kind() {
            Some(k) => {
                self.cp(CpOp::Push(0));
                self.np(NpOp::BcastInt(k));
            }
            None => {
                for _ in 0..cp_words(ty) {
                    self.cp(CpOp::Push(0));
                }
            }
        }
    }

    fn drop_value(&mut self, ty: &TypeDesc) {
        if ty.np_kind().is_some() {
            self.np(NpOp::Drop);
        } else {
            for _ in 0..cp_words(ty) {
                self.cp(CpOp::Pop);
            }
        }
    }

    // ----- statements ---------------------------------------------------

    fn stmt(&mut self, s: &Stmt) -> LResult<()> {
        match s {
            Stmt::Expr(e) => self.expr(e, false),
            Stmt::Block(b) => b.iter().try_for_each(|s| self.stmt(s)),
            Stmt::If { cond, then, els } => {
                self.condition(cond)?;
                let jz = self.placeholder(CpOp::Jz(0));
                for s in then {
                    self.stmt(s)?;
                }
                if els.is_empty() {
                    let end = self.here();
                    self.patch(jz, end);
                } else {
                    let jmp = self.placeholder(CpOp::Jmp(0));
                    let alt = self.here();
                    self.patch(jz, alt);
                    for s in els {
                        self.stmt(s)?;
                    }
                    let end = self.here();
                    self.patch(jmp, end);
                }
                Ok(())
            }
            Stmt::While { cond, body } => {
                let top = self.here();
                self.condition(cond)?;
                let jz = self.placeholder(CpOp::Jz(0));
                for s in body {
                    self.stmt(s)?;
                }
                self.cp(CpOp::Jmp(top));
                let end = self.here();
                self.patch(jz, end);
                Ok(())
            }
            Stmt::For {
                init,
                cond,
                step,
                body,
            } => {
                for s in init {
                    self.stmt(s)?;
                }
                let top = self.here();
                let jz = match cond {
                    Some(c) => {
                        self.condition(c)?;
                        Some(self.placeholder(CpOp::Jz(0)))
                    }
                    None => None,
                };
                for s in body {
                    self.stmt(s)?;
                }
                if let Some(s) = step {
                    self.expr(s, false)?;
                }
                self.cp(CpOp::Jmp(top));
                if let Some(jz) = jz {
                    let end = self.here();
                    self.patch(jz, end);
                }
                Ok(())
            }
            Stmt::Where {
                cond,
                body,
                elsewhere,
                loc,
            } => {
                let Some(k) = cond.ty.np_kind() else {
                    return internal(*loc, "a where condition without NP type");
                };
                self.value(cond)?;
                self.np(NpOp::WherePush(k));
                for s in body {
                    self.stmt(s)?;
                }
                if let Some(alt) = elsewhere {
                    self.np(NpOp::WhereElse);
                    for s in alt {
                        self.stmt(s)?;
                    }
                }
                self.np(NpOp::WherePop);
                Ok(())
            }
            Stmt::Return(v) => {
                if let Some(v) = v {
                    self.value(v)?;
                }
                self.np(NpOp::ClearLocalOffset);
                self.cp(CpOp::Ret);
                Ok(())
            }
        }
    }

    /// Push a single CP truth word for a CP-typed expression.
    fn condition(&mut self, e: &Expr) -> LResult<()> {
        self.value(e)?;
        if cp_words(&e.ty) == 2 {
            self.cp(CpOp::Bin(Op::BitOr));
        }
        Ok(())
    }

    // ----- addresses ----------------------------------------------------

    fn push_slot(&mut self, slot: Slot, ty: &TypeDesc, frame: bool) {
        let (cp, np) = if frame {
            (CpOp::Frame(slot.cp), CpOp::NpFrame(slot.np))
        } else {
            (CpOp::Push(slot.cp as i32), CpOp::Push(slot.np as i32))
        };
        match shape(ty) {
            Shape::Cp => self.cp(cp),
            Shape::Np => self.cp(np),
            Shape::Handle => {
                self.cp(cp);
                self.cp(np);
            }
        }
    }

    fn addr(&mut self, e: &Expr) -> LResult<()> {
        match &e.kind {
            ExprKind::Global(g) => {
                self.push_slot(self.plan.globals[*g], &e.ty, false);
                Ok(())
            }
            ExprKind::Local(l) => {
                self.push_slot(self.frame_slot(*l), &e.ty, true);
                Ok(())
            }
            ExprKind::Deref(p) => self.value(p),
            ExprKind::Index { base, index } => {
                if base.ty.is_array() {
                    self.addr(base)?;
                } else {
                    self.value(base)?;
                }
                self.value(index)?;
                let size = size_of(&e.ty, &self.plan.records);
                match shape(&e.ty) {
                    Shape::Handle => self.cp(CpOp::IndexHandle {
                        cp: size.cp,
                        np: size.np,
                    }),
                    Shape::Np => {
                        if size.np != 1 {
                            self.cp(CpOp::Scale(size.np));
                        }
                        self.cp(CpOp::Bin(Op::Add));
                    }
                    Shape::Cp => {
                        if size.cp != 1 {
                            self.cp(CpOp::Push(size.cp as i32));
                            self.cp(CpOp::Bin(Op::Mul));
                        }
                        self.cp(CpOp::Bin(Op::Add));
                    }
                }
                Ok(())
            }
            ExprKind::Field {
                base,
                record,
                field,
            } => {
                self.addr(base)?;
                let slot = self.plan.records[*record].fields[*field];
                match shape(&e.ty) {
                    Shape::Cp => self.cp(CpOp::FieldCp(slot.cp)),
                    Shape::Np => self.cp(CpOp::FieldNp(slot.np)),
                    Shape::Handle => self.cp(CpOp::FieldHandle {
                        cp: slot.cp,
                        np: slot.np,
                    }),
                }
                Ok(())
            }
            _ => internal(e.loc, "the address of a non-lvalue"),
        }
    }

    // ----- expressions --------------------------------------------------

    fn value(&mut self, e: &Expr) -> LResult<()> {
        self.expr(e, true)
    }

    fn load(&mut self, e: &Expr) -> LResult<()> {
        self.addr(e)?;
        match e.ty.np_kind() {
            Some(k) => self.np(NpOp::Load(k)),
            None => self.cp(CpOp::Load(cp_words(&e.ty))),
        }
        Ok(())
    }

    /// Scale a CP index on the stack to a word offset for pointer `ptr`.
    fn scale_pointer(&mut self, ptr: &TypeDesc) {
        let Some(target) = ptr.pointee() else { return };
        if ptr.kind() == Some(Kind::PtrNp) {
            let s = self.elem_size(target, Space::Np);
            if s != 1 {
                self.cp(CpOp::Scale(s));
            }
        } else {
            let s = self.elem_size(target, Space::Cp);
            if s != 1 {
                self.cp(CpOp::Push(s as i32));
                self.cp(CpOp::Bin(Op::Mul));
            }
        }
    }

    fn pointer_step(&self, ptr: &TypeDesc) -> u32 {
        let Some(target) = ptr.pointee() else { return 1 };
        let space = if ptr.kind() == Some(Kind::PtrNp) { Space::Np } else { Space::Cp };
        self.elem_size(target, space)
    }

    fn expr(&mut self, e: &Expr, want: bool) -> LResult<()> {
        match &e.kind {
            ExprKind::Assign {
                target,
                value,
                compound,
            } => return self.assign(target, value, compound.as_ref(), want),
            ExprKind::IncDec {
                increment,
                prefix,
                target,
            } => return self.incdec(target, *increment, *prefix, want),
            ExprKind::Call { func, args } => {
                for a in args {
                    self.value(a)?;
                }
                self.call_to(*func);
                if !want {
                    self.drop_value(&e.ty);
                }
                return Ok(());
            }
            _ => {}
        }
        match &e.kind {
            ExprKind::Int(v) => self.cp(CpOp::Push(*v)),
            ExprKind::Float(v) => {
                self.cp(CpOp::Push(v.to_bits() as i32));
                self.np(NpOp::Bcast(NpKind::Float));
            }
            ExprKind::Double(v) => {
                let bits = v.to_bits();
                self.cp(CpOp::Push(bits as u32 as i32));
                self.cp(CpOp::Push((bits >> 32) as u32 as i32));
                self.np(NpOp::Bcast(NpKind::Double));
            }
            ExprKind::Neighbor { axis, sign, named } => self.cp(CpOp::Neighbor {
                axis: *axis,
                sign: *sign,
                named: *named,
            }),
            ExprKind::Global(_)
            | ExprKind::Local(_)
            | ExprKind::Index { .. }
            | ExprKind::Deref(_)
            | ExprKind::Field { .. } => self.load(e)?,
            ExprKind::Convert { expr, .. } => self.convert(expr, &e.ty, e.loc)?,
            ExprKind::Decay(a) | ExprKind::AddrOf(a) => self.addr(a)?,
            ExprKind::Unary(op, x) => {
                match (op, x.ty.np_kind()) {
                    (UnaryOp::Neg, Some(k)) => {
                        self.value(x)?;
                        self.np(NpOp::Neg(k));
                    }
                    (UnaryOp::Neg, None) => {
                        self.value(x)?;
                        self.cp(CpOp::Neg);
                    }
                    (UnaryOp::Not, Some(_)) => {
                        self.value(x)?;
                        self.np(NpOp::Not);
                    }
                    (UnaryOp::Not, None) => {
                        self.condition(x)?;
                        self.cp(CpOp::Not);
                    }
                    (UnaryOp::BitNot, Some(_)) => {
                        self.value(x)?;
                        self.np(NpOp::BitNot);
                    }
                    (UnaryOp::BitNot, None) => {
                        self.value(x)?;
                        self.cp(CpOp::BitNot);
                    }
                }
            }
            ExprKind::Binary { op, lhs, rhs } => {
                self.value(lhs)?;
                self.value(rhs)?;
                let op = map_op(*op);
                match lhs.ty.np_kind() {
                    Some(k) => self.np(NpOp::Bin(op, k)),
                    None => self.cp(CpOp::Bin(op)),
                }
            }
            ExprKind::Logical { and, lhs, rhs } => {
                if e.ty.np_kind().is_some() {
                    self.value(lhs)?;
                    self.value(rhs)?;
                    self.np(NpOp::Bin(if *and { Op::And } else { Op::Or }, NpKind::LocalInt));
                } else {
                    self.condition(lhs)?;
                    let first = self.placeholder(if *and { CpOp::Jz(0) } else { CpOp::Jnz(0) });
                    self.condition(rhs)?;
                    let second = self.placeholder(if *and { CpOp::Jz(0) } else { CpOp::Jnz(0) });
                    self.cp(CpOp::Push(if *and { 1 } else { 0 }));
                    let jmp = self.placeholder(CpOp::Jmp(0));
                    let short = self.here();
                    self.patch(first, short);
                    self.patch(second, short);
                    self.cp(CpOp::Push(if *and { 0 } else { 1 }));
                    let end = self.here();
                    self.patch(jmp, end);
                }
            }
            ExprKind::PtrOffset { ptr, index, negate } => {
                self.value(ptr)?;
                self.value(index)?;
                self.scale_pointer(&ptr.ty);
                self.cp(CpOp::Bin(if *negate { Op::Sub } else { Op::Add }));
            }
            ExprKind::PtrDiff { lhs, rhs } => {
                self.value(lhs)?;
                self.value(rhs)?;
                self.cp(CpOp::Bin(Op::Sub));
                let s = self.pointer_step(&lhs.ty);
                if s > 1 {
                    self.cp(CpOp::Push(s as i32));
                    self.cp(CpOp::Bin(Op::Div));
                }
            }
            ExprKind::LocalOffset(x) => {
                self.value(x)?;
                self.np(NpOp::SetLocalOffset);
            }
            ExprKind::Reduce(kind, x) => {
                self.value(x)?;
                self.np(NpOp::Reduce(*kind));
            }
            ExprKind::DistLoad {
                dest,
                binding,
                count,
                elem,
            } => {
                self.dist_base(dest)?;
                self.value(count)?;
                self.cp(CpOp::DistLoad {
                    binding: *binding as u32,
                    kind: *elem,
                });
            }
            ExprKind::DistStore {
                src,
                binding,
                count,
                elem,
            } => {
                self.dist_base(src)?;
                self.value(count)?;
                self.cp(CpOp::DistStore {
                    binding: *binding as u32,
                    kind: *elem,
                });
            }
            ExprKind::Assign { .. } | ExprKind::IncDec { .. } | ExprKind::Call { .. } => unreachable!(),
        }
        if !want {
            self.drop_value(&e.ty);
        }
        Ok(())
    }

    fn dist_base(&mut self, e: &Expr) -> LResult<()> {
        if e.ty.is_array() {
            self.addr(e)
        } else {
            self.value(e)
        }
    }

    fn convert(&mut self, x: &Expr, to: &TypeDesc, loc: Loc) -> LResult<()> {
        self.value(x)?;
        let (Some(from), Some(to_k)) = (x.ty.kind(), to.kind()) else {
            return internal(loc, "a conversion between non-scalar types");
        };
        match (from.np_kind(), to_k.np_kind()) {
            (None, None) => {}
            (None, Some(t)) if from == Kind::Int => self.np(NpOp::BcastInt(t)),
            (Some(f), Some(t)) => {
                if f != t {
                    self.np(NpOp::Conv { from: f, to: t });
                }
            }
            _ => return internal(loc, &format!("a conversion from {} to {}", from.name(), to_k.name())),
        }
        Ok(())
    }

    fn assign(&mut self, target: &Expr, value: &Expr, compound: Option<&Compound>, want: bool) -> LResult<()> {
        let tk = target.ty.np_kind();
        if target.ty.is_record() {
            return self.copy_record(target, value, want);
        }
        match compound {
            None => {
                self.value(value)?;
                self.addr(target)?;
                match tk {
                    Some(k) => self.np(if want { NpOp::StoreKeep(k) } else { NpOp::Store(k) }),
                    None => {
                        let n = cp_words(&target.ty);
                        self.cp(if want { CpOp::StoreKeep(n) } else { CpOp::Store(n) });
                    }
                }
            }
            Some(Compound::Arith { op, op_ty }) => {
                self.addr(target)?;
                self.cp(CpOp::Dup);
                match (tk, op_ty.np_kind()) {
                    (Some(t), Some(o)) => {
                        self.np(NpOp::Load(t));
                        if t != o {
                            self.np(NpOp::Conv { from: t, to: o });
                        }
                        self.value(value)?;
                        self.np(NpOp::Bin(map_op(*op), o));
                        if t != o {
                            self.np(NpOp::Conv { from: o, to: t });
                        }
                        self.np(if want { NpOp::StoreKeep(t) } else { NpOp::Store(t) });
                    }
                    (None, None) => {
                        self.cp(CpOp::Load(1));
                        self.value(value)?;
                        self.cp(CpOp::Bin(map_op(*op)));
                        self.cp(CpOp::Swap);
                        self.cp(if want { CpOp::StoreKeep(1) } else { CpOp::Store(1) });
                    }
                    _ => return internal(target.loc, "a compound assignment across processors"),
                }
            }
            Some(Compound::Pointer { negate }) => {
                self.addr(target)?;
                self.cp(CpOp::Dup);
                self.cp(CpOp::Load(1));
                self.value(value)?;
                self.scale_pointer(&target.ty);
                self.cp(CpOp::Bin(if *negate { Op::Sub } else { Op::Add }));
                self.cp(CpOp::Swap);
                self.cp(if want { CpOp::StoreKeep(1) } else { CpOp::Store(1) });
            }
        }
        Ok(())
    }

    /// Word-by-word copy between two record handles. CP words are copied
    /// unconditionally, NP words under the current mask.
    fn copy_record(&mut self, target: &Expr, value: &Expr, want: bool) -> LResult<()> {
        let size = size_of(&target.ty, &self.plan.records);
        self.addr(target)?;
        self.addr(value)?;
        // stack: dst_cp dst_np src_cp src_np
        for k in 0..size.cp as i32 {
            self.cp(CpOp::Pick(1));
            self.offset(k);
            self.cp(CpOp::Load(1));
            self.cp(CpOp::Pick(4));
            self.offset(k);
            self.cp(CpOp::Store(1));
        }
        for k in 0..size.np as i32 {
            self.cp(CpOp::Pick(0));
            self.offset(k);
            self.np(NpOp::Load(NpKind::LocalInt));
            self.cp(CpOp::Pick(2));
            self.offset(k);
            self.np(NpOp::Store(NpKind::LocalInt));
        }
        let drop = if want { 2 } else { 4 };
        for _ in 0..drop {
            self.cp(CpOp::Pop);
        }
        Ok(())
    }

    fn offset(&mut self, k: i32) {
        if k != 0 {
            self.cp(CpOp::Push(k));
            self.cp(CpOp::Bin(Op::Add));
        }
    }

    fn incdec(&mut self, target: &Expr, increment: bool, prefix: bool, want: bool) -> LResult<()> {
        let op = if increment { Op::Add } else { Op::Sub };
        self.addr(target)?;
        self.cp(CpOp::Dup);
        match target.ty.np_kind() {
            Some(k) => {
                self.np(NpOp::Load(k));
                let keep_old = want && !prefix;
                if keep_old {
                    self.np(NpOp::Dup);
                }
                self.cp(CpOp::Push(1));
                self.np(NpOp::BcastInt(k));
                self.np(NpOp::Bin(op, k));
                self.np(if want && prefix { NpOp::StoreKeep(k) } else { NpOp::Store(k) });
            }
            None => {
                let step = self.pointer_step(&target.ty) as i32;
                self.cp(CpOp::Load(1));
                if want && !prefix {
                    self.cp(CpOp::Swap);
                    self.cp(CpOp::Over);
                    self.cp(CpOp::Push(step));
                    self.cp(CpOp::Bin(op));
                    self.cp(CpOp::Swap);
                    self.cp(CpOp::Store(1));
                } else {
                    self.cp(CpOp::Push(step));
                    self.cp(CpOp::Bin(op));
                    self.cp(CpOp::Swap);
                    self.cp(if want { CpOp::StoreKeep(1) } else { CpOp::Store(1) });
                }
            }
        }
        Ok(())
    }
}

fn map_op(op: BinOp) -> Op {
    match op {
        BinOp::Add => Op::Add,
        BinOp::Sub => Op::Sub,
        BinOp::Mul => Op::Mul,
        BinOp::Div => Op::Div,
        BinOp::Rem => Op::Rem,
        BinOp::BitAnd => Op::BitAnd,
        BinOp::BitOr => Op::BitOr,
        BinOp::BitXor => Op::BitXor,
        BinOp::Shl => Op::Shl,
        BinOp::Shr => Op::Shr,
        BinOp::Eq => Op::Eq,
        BinOp::Ne => Op::Ne,
        BinOp::Lt => Op::Lt,
        BinOp::Le => Op::Le,
        BinOp::Gt => Op::Gt,
        BinOp::Ge => Op::Ge,
        BinOp::And => Op::And,
        BinOp::Or => Op::Or,
    }
}

fn static_cells(p: &TypedProgram, plan: &LayoutPlan) -> (Vec<Cell>, Vec<Cell>) {
    let mut cp = Vec::new();
    let mut np = Vec::new();
    for (g, slot) in p.globals.iter().zip(&plan.globals) {
        cells(p, plan, &g.ty, *slot, &mut cp, &mut np);
    }
    for v in [&mut cp, &mut np] {
        v.sort_by_key(|c| c.addr);
        v.dedup_by_key(|c| c.addr);
    }
    (cp, np)
}

fn cells(p: &TypedProgram, plan: &LayoutPlan, ty: &TypeDesc, at: Slot, cp: &mut Vec<Cell>, np: &mut Vec<Cell>) {
    match ty {
        TypeDesc::Int => cp.push(Cell { addr: at.cp, kind: CellKind::Int }),
        TypeDesc::Ptr(_) => {
            for i in 0..cp_words(ty) {
                cp.push(Cell {
                    addr: at.cp + i,
                    kind: CellKind::Ptr,
                });
            }
        }
        TypeDesc::Array(e, n) => {
            let s = size_of(e, &plan.records);
            for i in 0..*n {
                let slot = Slot {
                    cp: at.cp + i * s.cp,
                    np: at.np + i * s.np,
                };
                cells(p, plan, e, slot, cp, np);
            }
        }
        TypeDesc::Record(id) => {
            let mut chain = vec![*id];
            while let Some(b) = p.records[*chain.last().unwrap()].base {
                chain.push(b);
            }
            for r in chain.into_iter().rev() {
                let info = &p.records[r];
                let fields = if info.kind == RecordKind::Union {
                    &info.fields[..info.fields.len().min(1)]
                } else {
                    &info.fields[..]
                };
                for (f, off) in fields.iter().zip(&plan.records[r].fields) {
                    let slot = Slot {
                        cp: at.cp + off.cp,
                        np: at.np + off.np,
                    };
                    cells(p, plan, &f.ty, slot, cp, np);
                }
            }
        }
        t => {
            if let Some(k) = t.np_kind() {
                np.push(Cell {
                    addr: at.np,
                    kind: CellKind::Np(k),
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;
    use crate::layout::{compute_layout, DEFAULT_CP_WORDS, DEFAULT_NP_WORDS};
    use crate::semantics::typecheck_program;

    fn lower(src: &str) -> IrProgram {
        let p = typecheck_program(&parse_source(src).unwrap()).unwrap();
        let plan = compute_layout(&p, DEFAULT_CP_WORDS, DEFAULT_NP_WORDS).unwrap();
        lower_program(&p, &plan).unwrap()
    }

    fn body(ir: &IrProgram, name: &str) -> Vec<String> {
        let f = ir.functions.iter().find(|f| f.name == name).unwrap();
        ir.instrs[f.entry as usize..f.end as usize]
            .iter()
            .map(|i| format!("{} {}", i.tag(), i.opcode()))
            .collect()
    }

    #[test]
    fn neighbor_constants() {
        assert_eq!(neighbor_constant(0, 1, 65536, 2), Ok(65536));
        assert_eq!(neighbor_constant(0, -1, 65536, 2), Ok(131072));
        assert_eq!(neighbor_constant(1, 1, 65536, 2), Ok(3 * 65536));
        assert!(matches!(neighbor_constant(5, 1, 65536, 2), Err(ConfigError::AxisOutOfRange { .. })));
        assert!(matches!(named_neighbor_constant("XPLUS_NP", 64, 4), Err(ConfigError::NamedOnHighRank { .. })));
        assert_eq!(named_neighbor_constant("ZMINUS_NP", 64, 3), Ok(Some(6 * 64)));
    }

    #[test]
    fn cp_increment_is_cp_only() {
        let ir = lower("int k; void f() { k++; }");
        let b = body(&ir, "f");
        let inner = &b[2..b.len() - 2];
        assert!(inner.iter().all(|l| l.starts_with("CP")), "{inner:?}");
        assert!(inner.iter().any(|l| l == "CP ADD"));
    }

    #[test]
    fn np_arithmetic_is_np_stream() {
        let ir = lower("double a, b, c; void f() { b = a * c - b; }");
        let b = body(&ir, "f");
        assert!(b.contains(&"NP MUL double".to_string()));
        assert!(b.contains(&"NP SUB double".to_string()));
        assert!(b.contains(&"NP STORE double".to_string()));
        assert!(!b.iter().any(|l| l == "CP MUL" || l == "CP SUB"));
    }

    #[test]
    fn double_literal_is_broadcast() {
        let ir = lower("double a; void f() { a = 1.0; }");
        let b = body(&ir, "f");
        let i = b.iter().position(|l| l == "NP BROADCAST double").unwrap();
        assert!(b[i - 1].starts_with("CP PUSH") && b[i - 2].starts_with("CP PUSH"));
        assert_eq!(b[i + 2], "NP STORE double");
    }

    #[test]
    fn where_shape() {
        let ir = lower("double x, y; void f() { where (x != 0.0) { y = 1 / x; } elsewhere { y = 0; } }");
        let b = body(&ir, "f");
        let push = b.iter().position(|l| l == "NP WHERE_PUSH localint").unwrap();
        let els = b.iter().position(|l| l == "NP WHERE_ELSE").unwrap();
        let pop = b.iter().position(|l| l == "NP WHERE_POP").unwrap();
        assert!(push < els && els < pop);
        assert!(b[push..els].contains(&"NP DIV double".to_string()));
        assert_eq!(verify_mask_balance(&ir), Ok(()));
    }

    #[test]
    fn where_without_elsewhere() {
        let ir = lower("float x; void f() { where (x) x = 2.0f; }");
        let b = body(&ir, "f");
        assert!(!b.iter().any(|l| l.contains("WHERE_ELSE")));
        assert!(b.contains(&"NP WHERE_PUSH float".to_string()));
    }

    #[test]
    fn stream_purity() {
        let ir = lower(
            "double a[10]; int i; void f() { for (i = 0; i < 10; i++) { where (a[i] > 0.0) a[i] = -a[i]; } }",
        );
        for ins in &ir.instrs {
            if ins.is_control() {
                assert_eq!(ins.tag(), Tag::Cp);
            }
        }
    }

    #[test]
    fn localoffset_emits_set() {
        let ir = lower("int i; localint li; float r, a[100]; void f() { localoffset(li); r = a[i]; }");
        let b = body(&ir, "f");
        assert!(b.contains(&"NP SET_LOCAL_OFFSET".to_string()));
    }

    #[test]
    fn method_gets_hidden_handle() {
        let ir = lower("class C { public: float x; void f(float y) { x = y; } }; C v[10]; float a; \
                        void g() { v[0 + XPLUS_NP].f(a); }");
        let g = body(&ir, "g");
        assert!(g.iter().any(|l| l.starts_with("CP NEIGHBOR 0 +")));
        assert!(g.iter().any(|l| l.starts_with("CP INDEXH")));
        let f = body(&ir, "C::f");
        assert!(f.contains(&"CP STORE 2".to_string()), "{f:?}");
    }

    #[test]
    fn static_cells_cover_records() {
        let ir = lower("class Mixed { int a; float x; }; Mixed m[3]; double d;");
        assert_eq!(ir.cp_cells.len(), 3);
        assert_eq!(ir.np_cells.len(), 4);
        assert_eq!(ir.np_cells[3], Cell { addr: 3, kind: CellKind::Np(NpKind::Double) });
    }
}
