use std::collections::{HashMap, HashSet};

use crate::frontend::ast::{self, Access, BaseType, BinOp, Loc, RecordKind, UnOp};

use super::tables::{cast_allowed, promotion_allowed};
use super::typed::*;
use super::types::{Group, Kind, RecordId, TypeDesc};
use super::{binary_result_type, common_kind, group_of, TypeError};

/// Predeclared neighbor constants: name, axis, sign.
pub const NEIGHBOR_NAMES: [(&str, u32, i32); 6] = [
    ("XPLUS_NP", 0, 1),
    ("XMINUS_NP", 0, -1),
    ("YPLUS_NP", 1, 1),
    ("YMINUS_NP", 1, -1),
    ("ZPLUS_NP", 2, 1),
    ("ZMINUS_NP", 2, -1),
];

type TResult<T> = Result<T, TypeError>;

fn err<T>(loc: Loc, message: impl Into<String>) -> TResult<T> {
    Err(TypeError {
        loc,
        message: message.into(),
    })
}

#[derive(Clone, Copy, Debug)]
enum Symbol {
    Global(GlobalId),
    Func(FuncId),
    Neighbor(u32, i32),
}

struct FnState {
    locals: Vec<LocalVar>,
    consts: HashMap<LocalId, i32>,
    readonly: HashSet<LocalId>,
    scopes: Vec<HashMap<String, LocalId>>,
    ret: TypeDesc,
    this_record: Option<RecordId>,
    where_depth: u32,
}

enum Pending<'a> {
    Func(FuncId, &'a ast::FuncDef),
    Ctor(FuncId, RecordId, &'a ast::CtorDef),
}

pub(super) struct Checker<'a> {
    records: Vec<RecordInfo>,
    record_ids: HashMap<String, RecordId>,
    typedefs: HashMap<String, TypeDesc>,
    globals: Vec<GlobalVar>,
    global_consts: HashMap<GlobalId, i32>,
    scope: HashMap<String, Symbol>,
    functions: Vec<Function>,
    bindings: Vec<String>,
    init: Vec<Stmt>,
    pending_inits: Vec<(GlobalId, &'a ast::Declarator)>,
    pending_bodies: Vec<Pending<'a>>,
    cur: Option<FnState>,
}

impl<'a> Checker<'a> {
    pub(super) fn new() -> Self {
        let scope = NEIGHBOR_NAMES
            .iter()
            .map(|(n, axis, sign)| (n.to_string(), Symbol::Neighbor(*axis, *sign)))
            .collect();
        Self {
            records: Vec::new(),
            record_ids: HashMap::new(),
            typedefs: HashMap::new(),
            globals: Vec::new(),
            global_consts: HashMap::new(),
            scope,
            functions: Vec::new(),
            bindings: Vec::new(),
            init: Vec::new(),
            pending_inits: Vec::new(),
            pending_bodies: Vec::new(),
            cur: None,
        }
    }

    pub(super) fn run(mut self, program: &'a ast::Program) -> TResult<TypedProgram> {
        for item in &program.items {
            match item {
                ast::Item::Typedef(t) => self.declare_typedef(t)?,
                ast::Item::Record(r) => self.declare_record(r)?,
                ast::Item::Var(v) => self.declare_globals(v)?,
                ast::Item::Func(f) => {
                    let id = self.declare_function(f, None)?;
                    self.bind_global(&f.name, Symbol::Func(id), f.loc)?;
                    self.pending_bodies.push(Pending::Func(id, f));
                }
            }
        }
        for (gid, decl) in std::mem::take(&mut self.pending_inits) {
            self.begin_fn(TypeDesc::Void, None);
            let stmts = self.init_declarator(VarRef::Global(gid), decl)?;
            let state = self.cur.take().expect("init state");
            if !state.locals.is_empty() {
                return err(decl.loc, "internal: global initializer allocated locals");
            }
            self.init.extend(stmts);
        }
        for p in std::mem::take(&mut self.pending_bodies) {
            match p {
                Pending::Func(id, def) => self.check_body(id, &def.params, &[], &def.body)?,
                Pending::Ctor(id, rec, def) => {
                    self.check_ctor(id, rec, def)?;
                }
            }
        }
        let main = match self.scope.get("main") {
            Some(Symbol::Func(id)) => {
                let f = &self.functions[*id];
                if !f.params.is_empty() {
                    return err(f.loc, "`main` takes no parameters");
                }
                Some(*id)
            }
            _ => None,
        };
        Ok(TypedProgram {
            records: self.records,
            globals: self.globals,
            functions: self.functions,
            main,
            init: self.init,
            bindings: self.bindings,
        })
    }

    // ----- declarations -------------------------------------------------

    fn bind_global(&mut self, name: &str, sym: Symbol, loc: Loc) -> TResult<()> {
        if self.scope.contains_key(name)
            || self.typedefs.contains_key(name)
            || self.record_ids.contains_key(name)
        {
            return err(loc, format!("redefinition of `{name}`"));
        }
        self.scope.insert(name.to_string(), sym);
        Ok(())
    }

    fn type_label(&self, ty: &TypeDesc) -> String {
        match ty {
            TypeDesc::Record(id) => self.records[*id].name.clone(),
            TypeDesc::Ptr(t) => format!("{}*", self.type_label(t)),
            TypeDesc::Array(t, n) => format!("{}[{n}]", self.type_label(t)),
            t => t.to_string(),
        }
    }

    fn resolve_base(&self, tn: &ast::TypeName) -> TResult<TypeDesc> {
        let mut ty = match &tn.base {
            BaseType::Int => TypeDesc::Int,
            BaseType::Float => TypeDesc::Float,
            BaseType::Double => TypeDesc::Double,
            BaseType::Vector => TypeDesc::Vector,
            BaseType::Complex => TypeDesc::Complex,
            BaseType::LocalInt => TypeDesc::LocalInt,
            BaseType::Void => TypeDesc::Void,
            BaseType::Named(n) => {
                if let Some(t) = self.typedefs.get(n) {
                    t.clone()
                } else if let Some(id) = self.record_ids.get(n) {
                    TypeDesc::Record(*id)
                } else {
                    return err(tn.loc, format!("unknown type `{n}`"));
                }
            }
        };
        for _ in 0..tn.pointers {
            ty = TypeDesc::ptr(ty);
        }
        Ok(ty)
    }

    fn resolve_type(&self, tn: &ast::TypeName, dims: &[ast::Expr]) -> TResult<TypeDesc> {
        let mut ty = self.resolve_base(tn)?;
        for d in dims.iter().rev() {
            let n = self
                .const_eval(d)
                .ok_or_else(|| TypeError {
                    loc: d.loc,
                    message: "array bound must be an integer constant".into(),
                })?;
            if n <= 0 {
                return err(d.loc, format!("array bound must be positive, got {n}"));
            }
            ty = TypeDesc::array(ty, n as u32);
        }
        Ok(ty)
    }

    fn check_object_type(&self, ty: &TypeDesc, loc: Loc, what: &str) -> TResult<()> {
        match ty.innermost() {
            TypeDesc::Void => err(loc, format!("{what} cannot have type void")),
            _ => Ok(()),
        }
    }

    fn const_eval(&self, e: &ast::Expr) -> Option<i32> {
        use ast::ExprKind as K;
        match &e.kind {
            K::Int(v) => Some(*v),
            K::Ident(n) => {
                if let Some(st) = &self.cur {
                    for scope in st.scopes.iter().rev() {
                        if let Some(id) = scope.get(n) {
                            return st.consts.get(id).copied();
                        }
                    }
                }
                match self.scope.get(n) {
                    Some(Symbol::Global(g)) => self.global_consts.get(g).copied(),
                    _ => None,
                }
            }
            K::Unary(UnOp::Neg, x) => self.const_eval(x)?.checked_neg(),
            K::Unary(UnOp::Plus, x) => self.const_eval(x),
            K::Binary(op, l, r) => {
                let (l, r) = (self.const_eval(l)?, self.const_eval(r)?);
                match op {
                    BinOp::Add => l.checked_add(r),
                    BinOp::Sub => l.checked_sub(r),
                    BinOp::Mul => l.checked_mul(r),
                    BinOp::Div => l.checked_div(r),
                    BinOp::Rem => l.checked_rem(r),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    fn declare_typedef(&mut self, t: &ast::Typedef) -> TResult<()> {
        let ty = self.resolve_type(&t.ty, &t.dims)?;
        if self.scope.contains_key(&t.name)
            || self.typedefs.contains_key(&t.name)
            || self.record_ids.contains_key(&t.name)
        {
            return err(t.loc, format!("redefinition of `{}`", t.name));
        }
        self.typedefs.insert(t.name.clone(), ty);
        Ok(())
    }

    fn declare_record(&mut self, r: &'a ast::RecordDef) -> TResult<()> {
        if self.scope.contains_key(&r.name)
            || self.typedefs.contains_key(&r.name)
            || self.record_ids.contains_key(&r.name)
        {
            return err(r.loc, format!("redefinition of `{}`", r.name));
        }
        let base = match &r.base {
            None => None,
            Some(b) => match self.record_ids.get(b) {
                Some(id) if self.records[*id].kind != RecordKind::Union => Some(*id),
                Some(_) => return err(r.loc, format!("cannot derive from union `{b}`")),
                None => return err(r.loc, format!("unknown base class `{b}`")),
            },
        };
        if r.kind == RecordKind::Union && base.is_some() {
            return err(r.loc, "a union cannot have a base class");
        }
        let id = self.records.len();
        self.records.push(RecordInfo {
            name: r.name.clone(),
            kind: r.kind,
            base,
            fields: Vec::new(),
            methods: Vec::new(),
            ctor: None,
            loc: r.loc,
        });
        self.record_ids.insert(r.name.clone(), id);

        let mut access = if r.kind == RecordKind::Class {
            Access::Private
        } else {
            Access::Public
        };
        let mut member_names: HashSet<String> = HashSet::new();
        for m in &r.members {
            match m {
                ast::Member::Access(a, _) => access = *a,
                ast::Member::Field(decl) => {
                    if decl.is_const {
                        return err(decl.loc, "const fields are not supported");
                    }
                    for d in &decl.declarators {
                        if d.init.is_some() {
                            return err(d.loc, "field initializers are not supported");
                        }
                        let ty = self.resolve_type(&decl.ty, &d.dims)?;
                        self.check_object_type(&ty, d.loc, "a field")?;
                        if let TypeDesc::Record(fid) = ty.innermost() {
                            if *fid == id {
                                return err(d.loc, format!("field `{}` has incomplete type", d.name));
                            }
                        }
                        if !member_names.insert(d.name.clone()) {
                            return err(d.loc, format!("duplicate member `{}`", d.name));
                        }
                        self.records[id].fields.push(FieldInfo {
                            name: d.name.clone(),
                            ty,
                            access,
                            loc: d.loc,
                        });
                    }
                }
                ast::Member::Method(f) => {
                    if !member_names.insert(f.name.clone()) {
                        return err(f.loc, format!("duplicate member `{}`", f.name));
                    }
                    let fid = self.declare_function(f, Some(id))?;
                    self.records[id].methods.push((f.name.clone(), fid, access));
                    self.pending_bodies.push(Pending::Func(fid, f));
                }
                ast::Member::Ctor(c) => {
                    if self.records[id].ctor.is_some() {
                        return err(c.loc, "only one constructor per record is supported");
                    }
                    let mut params = vec![TypeDesc::ptr(TypeDesc::Record(id))];
                    for p in &c.params {
                        params.push(self.param_type(p)?);
                    }
                    let fid = self.functions.len();
                    self.functions.push(Function {
                        name: format!("{0}::{0}", r.name),
                        params: Vec::new(),
                        locals: Vec::new(),
                        ret: TypeDesc::Void,
                        body: Vec::new(),
                        this_record: Some(id),
                        loc: c.loc,
                    });
                    self.functions[fid].locals = params
                        .into_iter()
                        .enumerate()
                        .map(|(i, ty)| LocalVar {
                            name: if i == 0 {
                                "this".into()
                            } else {
                                c.params[i - 1].name.clone()
                            },
                            ty,
                            loc: c.loc,
                        })
                        .collect();
                    self.functions[fid].params = (0..=c.params.len()).collect();
                    self.records[id].ctor = Some(fid);
                    self.pending_bodies.push(Pending::Ctor(fid, id, c));
                }
            }
        }
        if r.kind == RecordKind::Union {
            let mut group: Option<Group> = None;
            for f in &self.records[id].fields {
                let g = group_of(&f.ty, &self.records).map_err(|e| TypeError {
                    loc: f.loc,
                    message: e.to_string(),
                })?;
                let Some(single) = g.single() else {
                    return err(
                        f.loc,
                        format!(
                            "union `{}` field `{}` spans both processors; union fields must all be CP or all be NP",
                            r.name, f.name
                        ),
                    );
                };
                match group {
                    None => group = Some(single),
                    Some(prev) if prev != single => {
                        return err(
                            f.loc,
                            format!(
                                "union `{}` mixes {prev} and {single} fields; union fields must all be CP or all be NP",
                                r.name
                            ),
                        )
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn param_type(&self, p: &ast::Param) -> TResult<TypeDesc> {
        let ty = self.resolve_base(&p.ty)?;
        match ty {
            TypeDesc::Void => err(p.loc, "parameter cannot have type void"),
            TypeDesc::Record(_) => err(
                p.loc,
                format!(
                    "record parameter `{}` must be passed by pointer",
                    p.name
                ),
            ),
            t => Ok(t),
        }
    }

    fn declare_function(&mut self, f: &ast::FuncDef, record: Option<RecordId>) -> TResult<FuncId> {
        let ret = self.resolve_base(&f.ret)?;
        if ret.is_record() {
            return err(f.loc, "functions cannot return records by value");
        }
        let mut locals = Vec::new();
        if let Some(r) = record {
            locals.push(LocalVar {
                name: "this".into(),
                ty: TypeDesc::ptr(TypeDesc::Record(r)),
                loc: f.loc,
            });
        }
        let mut seen = HashSet::new();
        for p in &f.params {
            if !seen.insert(p.name.clone()) {
                return err(p.loc, format!("duplicate parameter `{}`", p.name));
            }
            locals.push(LocalVar {
                name: p.name.clone(),
                ty: self.param_type(p)?,
                loc: p.loc,
            });
        }
        let name = match record {
            Some(r) => format!("{}::{}", self.records[r].name, f.name),
            None => f.name.clone(),
        };
        let id = self.functions.len();
        self.functions.push(Function {
            name,
            params: (0..locals.len()).collect(),
            locals,
            ret,
            body: Vec::new(),
            this_record: record,
            loc: f.loc,
        });
        Ok(id)
    }

    fn declare_globals(&mut self, v: &'a ast::VarDecl) -> TResult<()> {
        for d in &v.declarators {
            let ty = self.resolve_type(&v.ty, &d.dims)?;
            self.check_object_type(&ty, d.loc, "a variable")?;
            self.check_const_decl(v, d, &ty)?;
            let gid = self.globals.len();
            self.globals.push(GlobalVar {
                name: d.name.clone(),
                ty: ty.clone(),
                is_const: v.is_const,
                loc: d.loc,
            });
            self.bind_global(&d.name, Symbol::Global(gid), d.loc)?;
            if v.is_const && ty == TypeDesc::Int {
                if let Some(ast::Init::Expr(e)) = &d.init {
                    if let Some(c) = self.const_eval(e) {
                        self.global_consts.insert(gid, c);
                    }
                }
            }
            self.pending_inits.push((gid, d));
        }
        Ok(())
    }

    fn check_const_decl(&self, v: &ast::VarDecl, d: &ast::Declarator, ty: &TypeDesc) -> TResult<()> {
        if v.is_const && d.init.is_none() && !ty.is_record() {
            return err(d.loc, format!("const `{}` requires an initializer", d.name));
        }
        Ok(())
    }

    // ----- function bodies ----------------------------------------------

    fn begin_fn(&mut self, ret: TypeDesc, this_record: Option<RecordId>) {
        self.cur = Some(FnState {
            locals: Vec::new(),
            consts: HashMap::new(),
            readonly: HashSet::new(),
            scopes: vec![HashMap::new()],
            ret,
            this_record,
            where_depth: 0,
        });
    }

    fn st(&mut self) -> &mut FnState {
        self.cur.as_mut().expect("inside a function")
    }

    fn enter_fn(&mut self, id: FuncId) {
        let f = &self.functions[id];
        let (ret, rec, locals) = (f.ret.clone(), f.this_record, f.locals.clone());
        self.begin_fn(ret, rec);
        let st = self.st();
        for (i, l) in locals.into_iter().enumerate() {
            st.scopes[0].insert(l.name.clone(), i);
            st.locals.push(l);
        }
        if rec.is_some() {
            st.readonly.insert(0);
        }
    }

    fn check_body(
        &mut self,
        id: FuncId,
        _params: &[ast::Param],
        prologue: &[Stmt],
        body: &ast::Block,
    ) -> TResult<()> {
        self.enter_fn(id);
        let mut stmts = prologue.to_vec();
        stmts.extend(self.block(body)?);
        let st = self.cur.take().expect("function state");
        let f = &mut self.functions[id];
        f.locals = st.locals;
        f.body = stmts;
        Ok(())
    }

    fn check_ctor(&mut self, id: FuncId, rec: RecordId, def: &ast::CtorDef) -> TResult<()> {
        self.enter_fn(id);
        let mut prologue = Vec::new();
        for init in &def.inits {
            let this = self.this_deref(def.loc)?;
            let target = self.member_of(this, &init.field, init.loc)?;
            let ExprKind::Field { record, .. } = &target.kind else { unreachable!() };
            if *record != rec {
                return err(init.loc, format!("`{}` is not a direct member of `{}`", init.field, self.records[rec].name));
            }
            if init.args.len() != 1 || !(target.ty.is_arith() || target.ty.kind().is_some()) {
                return err(init.loc, format!("member initializer for `{}` takes exactly one scalar value", init.field));
            }
            let value = self.expr(&init.args[0])?;
            let value = self.coerce(value, &target.ty, init.args[0].loc)?;
            prologue.push(Stmt::Expr(Expr {
                ty: target.ty.clone(),
                loc: init.loc,
                kind: ExprKind::Assign {
                    target: Box::new(target),
                    value: Box::new(value),
                    compound: None,
                },
            }));
        }
        let mut stmts = prologue;
        stmts.extend(self.block(&def.body)?);
        let st = self.cur.take().expect("function state");
        let f = &mut self.functions[id];
        f.locals = st.locals;
        f.body = stmts;
        Ok(())
    }

    fn block(&mut self, b: &ast::Block) -> TResult<Vec<Stmt>> {
        self.st().scopes.push(HashMap::new());
        let mut out = Vec::new();
        for s in &b.stmts {
            self.stmt(s, &mut out)?;
        }
        self.st().scopes.pop();
        Ok(out)
    }

    fn scoped_stmt(&mut self, s: &ast::Stmt) -> TResult<Vec<Stmt>> {
        self.st().scopes.push(HashMap::new());
        let mut out = Vec::new();
        self.stmt(s, &mut out)?;
        self.st().scopes.pop();
        Ok(out)
    }

    fn cp_condition(&mut self, e: &ast::Expr, what: &str) -> TResult<Expr> {
        let c = self.value_expr(e)?;
        if c.ty.is_cp_scalar() {
            Ok(c)
        } else if c.ty.is_np_scalar() {
            err(
                e.loc,
                format!(
                    "`{what}` condition has NP type `{}`; control flow needs a CP condition (use `where`, or reduce with any/all/none)",
                    self.type_label(&c.ty)
                ),
            )
        } else {
            err(e.loc, format!("`{what}` condition must be a scalar"))
        }
    }

    fn stmt(&mut self, s: &ast::Stmt, out: &mut Vec<Stmt>) -> TResult<()> {
        match s {
            ast::Stmt::Expr(e) => {
                let e = self.expr(e)?;
                out.push(Stmt::Expr(e));
            }
            ast::Stmt::Block(b) => out.push(Stmt::Block(self.block(b)?)),
            ast::Stmt::Empty(_) => {}
            ast::Stmt::Decl(d) => self.local_decl(d, out)?,
            ast::Stmt::If { cond, then, els, .. } => {
                let cond = self.cp_condition(cond, "if")?;
                let then = self.scoped_stmt(then)?;
                let els = match els {
                    Some(e) => self.scoped_stmt(e)?,
                    None => Vec::new(),
                };
                out.push(Stmt::If { cond, then, els });
            }
            ast::Stmt::While { cond, body, .. } => {
                let cond = self.cp_condition(cond, "while")?;
                let body = self.scoped_stmt(body)?;
                out.push(Stmt::While { cond, body });
            }
            ast::Stmt::For {
                init,
                cond,
                step,
                body,
                ..
            } => {
                self.st().scopes.push(HashMap::new());
                let mut init_stmts = Vec::new();
                if let Some(i) = init {
                    self.stmt(i, &mut init_stmts)?;
                }
                let cond = cond.as_ref().map(|c| self.cp_condition(c, "for")).transpose()?;
                let step = step.as_ref().map(|s| self.expr(s)).transpose()?;
                let body = self.scoped_stmt(body)?;
                self.st().scopes.pop();
                out.push(Stmt::For {
                    init: init_stmts,
                    cond,
                    step,
                    body,
                });
            }
            ast::Stmt::Where {
                cond,
                body,
                elsewhere,
                loc,
            } => {
                let c = self.value_expr(cond)?;
                match c.ty.np_kind() {
                    Some(k) if !k.is_pair() => {}
                    Some(_) => {
                        return err(cond.loc, "`where` condition cannot be a vector or complex value")
                    }
                    None => {
                        return err(
                            cond.loc,
                            format!(
                                "`where` requires an NP condition, found CP type `{}` (use `if` for CP conditions)",
                                self.type_label(&c.ty)
                            ),
                        )
                    }
                }
                self.st().where_depth += 1;
                let body = self.scoped_stmt(body)?;
                let elsewhere = elsewhere.as_ref().map(|e| self.scoped_stmt(e)).transpose()?;
                self.st().where_depth -= 1;
                out.push(Stmt::Where {
                    cond: c,
                    body,
                    elsewhere,
                    loc: *loc,
                });
            }
            ast::Stmt::Return(value, loc) => {
                if self.st().where_depth > 0 {
                    return err(
                        *loc,
                        "`return` inside a `where` block is not allowed; control flow is global to all NPs",
                    );
                }
                let ret = self.st().ret.clone();
                let value = match (value, &ret) {
                    (None, TypeDesc::Void) => None,
                    (None, _) => return err(*loc, "non-void function must return a value"),
                    (Some(e), TypeDesc::Void) => {
                        return err(e.loc, "void function cannot return a value")
                    }
                    (Some(e), ret) => {
                        let v = self.value_expr(e)?;
                        Some(self.coerce(v, ret, e.loc)?)
                    }
                };
                out.push(Stmt::Return(value));
            }
        }
        Ok(())
    }

    fn local_decl(&mut self, d: &ast::VarDecl, out: &mut Vec<Stmt>) -> TResult<()> {
        for decl in &d.declarators {
            let ty = self.resolve_type(&d.ty, &decl.dims)?;
            self.check_object_type(&ty, decl.loc, "a variable")?;
            self.check_const_decl(d, decl, &ty)?;
            let st = self.st();
            if st.scopes.last().unwrap().contains_key(&decl.name) {
                return err(decl.loc, format!("redeclaration of `{}`", decl.name));
            }
            let id = st.locals.len();
            st.locals.push(LocalVar {
                name: decl.name.clone(),
                ty: ty.clone(),
                loc: decl.loc,
            });
            st.scopes.last_mut().unwrap().insert(decl.name.clone(), id);
            if d.is_const {
                st.readonly.insert(id);
            }
            let stmts = self.init_declarator(VarRef::Local(id), decl)?;
            out.extend(stmts);
            if d.is_const && ty == TypeDesc::Int {
                if let Some(ast::Init::Expr(e)) = &decl.init {
                    if let Some(c) = self.const_eval(e) {
                        self.st().consts.insert(id, c);
                    }
                }
            }
        }
        Ok(())
    }

    fn var_expr(&self, v: VarRef, loc: Loc) -> Expr {
        match v {
            VarRef::Global(g) => Expr {
                ty: self.globals[g].ty.clone(),
                kind: ExprKind::Global(g),
                loc,
            },
            VarRef::Local(l) => Expr {
                ty: self.cur.as_ref().unwrap().locals[l].ty.clone(),
                kind: ExprKind::Local(l),
                loc,
            },
        }
    }

    fn init_declarator(&mut self, var: VarRef, d: &ast::Declarator) -> TResult<Vec<Stmt>> {
        let target = self.var_expr(var, d.loc);
        match &d.init {
            None => {
                if let TypeDesc::Record(rid) = target.ty {
                    if let Some(ctor) = self.records[rid].ctor {
                        if self.functions[ctor].params.len() == 1 {
                            return Ok(vec![Stmt::Expr(self.ctor_call(target, ctor, &[], d.loc)?)]);
                        }
                    }
                }
                Ok(Vec::new())
            }
            Some(ast::Init::Ctor(args)) => {
                let TypeDesc::Record(rid) = target.ty else {
                    return err(d.loc, format!("`{}` is not a record; use `=` to initialize", d.name));
                };
                let Some(ctor) = self.records[rid].ctor else {
                    return err(
                        d.loc,
                        format!("`{}` has no constructor", self.records[rid].name),
                    );
                };
                Ok(vec![Stmt::Expr(self.ctor_call(target, ctor, args, d.loc)?)])
            }
            Some(ast::Init::Expr(e)) => {
                if target.ty.is_array() || target.ty.is_record() {
                    return err(d.loc, "arrays and records cannot be initialized with `=`");
                }
                let v = self.value_expr(e)?;
                let v = self.coerce(v, &target.ty, e.loc)?;
                Ok(vec![Stmt::Expr(Expr {
                    ty: target.ty.clone(),
                    loc: d.loc,
                    kind: ExprKind::Assign {
                        target: Box::new(target),
                        value: Box::new(v),
                        compound: None,
                    },
                })])
            }
        }
    }

    fn ctor_call(&mut self, target: Expr, ctor: FuncId, args: &[ast::Expr], loc: Loc) -> TResult<Expr> {
        let handle = Expr {
            ty: TypeDesc::ptr(target.ty.clone()),
            kind: ExprKind::AddrOf(Box::new(target)),
            loc,
        };
        self.finish_call(ctor, Some(handle), args, loc)
    }

    // ----- expressions --------------------------------------------------

    fn this_deref(&mut self, loc: Loc) -> TResult<Expr> {
        let st = self.cur.as_ref().expect("inside a function");
        let Some(rec) = st.this_record else {
            return err(loc, "`this` used outside a method");
        };
        let this = Expr {
            ty: TypeDesc::ptr(TypeDesc::Record(rec)),
            kind: ExprKind::Local(0),
            loc,
        };
        Ok(Expr {
            ty: TypeDesc::Record(rec),
            kind: ExprKind::Deref(Box::new(this)),
            loc,
        })
    }

    fn lookup_local(&self, name: &str) -> Option<LocalId> {
        let st = self.cur.as_ref()?;
        st.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn find_field(&self, mut rec: RecordId, name: &str) -> Option<(RecordId, usize)> {
        loop {
            if let Some(i) = self.records[rec].fields.iter().position(|f| f.name == name) {
                return Some((rec, i));
            }
            rec = self.records[rec].base?;
        }
    }

    fn find_method(&self, mut rec: RecordId, name: &str) -> Option<(RecordId, FuncId, Access)> {
        loop {
            if let Some((_, f, a)) = self.records[rec].methods.iter().find(|(n, _, _)| n == name) {
                return Some((rec, *f, *a));
            }
            rec = self.records[rec].base?;
        }
    }

    fn check_access(&self, owner: RecordId, access: Access, name: &str, loc: Loc) -> TResult<()> {
        if access == Access::Private
            && self.cur.as_ref().and_then(|s| s.this_record) != Some(owner)
        {
            return err(
                loc,
                format!("member `{name}` of `{}` is private", self.records[owner].name),
            );
        }
        Ok(())
    }

    fn member_of(&mut self, base: Expr, field: &str, loc: Loc) -> TResult<Expr> {
        let TypeDesc::Record(rec) = base.ty else {
            return err(
                loc,
                format!("member access on non-record type `{}`", self.type_label(&base.ty)),
            );
        };
        let Some((owner, idx)) = self.find_field(rec, field) else {
            return err(
                loc,
                format!("`{}` has no field `{field}`", self.records[rec].name),
            );
        };
        let info = &self.records[owner].fields[idx];
        self.check_access(owner, info.access, field, loc)?;
        Ok(Expr {
            ty: info.ty.clone(),
            kind: ExprKind::Field {
                base: Box::new(base),
                record: owner,
                field: idx,
            },
            loc,
        })
    }

    /// An expression used for its value: arrays decay, records and void
    /// are rejected.
    fn value_expr(&mut self, e: &ast::Expr) -> TResult<Expr> {
        let x = self.expr(e)?;
        self.rvalue(x)
    }

    fn rvalue(&self, x: Expr) -> TResult<Expr> {
        match &x.ty {
            TypeDesc::Void => err(x.loc, "void value used in an expression"),
            TypeDesc::Record(_) => err(
                x.loc,
                "record values cannot be used directly; access a field or take its address",
            ),
            TypeDesc::Function(..) => err(x.loc, "function used as a value"),
            TypeDesc::Array(elem, _) => Ok(Expr {
                ty: TypeDesc::ptr((**elem).clone()),
                loc: x.loc,
                kind: ExprKind::Decay(Box::new(x)),
            }),
            _ => Ok(x),
        }
    }

    fn derives_from(&self, mut rec: RecordId, base: RecordId) -> bool {
        loop {
            if rec == base {
                return true;
            }
            match self.records[rec].base {
                Some(b) => rec = b,
                None => return false,
            }
        }
    }

    fn convert(e: Expr, to: &TypeDesc, explicit: bool) -> Expr {
        Expr {
            ty: to.clone(),
            loc: e.loc,
            kind: ExprKind::Convert {
                expr: Box::new(e),
                explicit,
            },
        }
    }

    /// Implicit conversion governed by the promotion table.
    pub(super) fn coerce(&self, e: Expr, to: &TypeDesc, loc: Loc) -> TResult<Expr> {
        let e = if e.ty.is_array() { self.rvalue(e)? } else { e };
        if &e.ty == to {
            return Ok(e);
        }
        if let (Some(TypeDesc::Record(a)), Some(TypeDesc::Record(b))) = (e.ty.pointee(), to.pointee()) {
            if self.derives_from(*a, *b) {
                return Ok(Self::convert(e, to, false));
            }
            return err(
                loc,
                format!(
                    "cannot convert `{}` to `{}`",
                    self.type_label(&e.ty),
                    self.type_label(to)
                ),
            );
        }
        if e.ty.is_record_ptr() || to.is_record_ptr() {
            return err(
                loc,
                format!(
                    "cannot convert `{}` to `{}`: record handles only convert to handles of a base record",
                    self.type_label(&e.ty),
                    self.type_label(to)
                ),
            );
        }
        match (e.ty.kind(), to.kind()) {
            (Some(Kind::LocalInt), Some(Kind::PtrNp)) => err(
                loc,
                "a localint cannot be used as a pointer; use localoffset() to apply a per-node offset",
            ),
            (Some(f), Some(t)) if promotion_allowed(f, t) => Ok(Self::convert(e, to, false)),
            (Some(f), Some(t)) if f.is_np() && t.group() == Group::Cp => err(
                loc,
                format!(
                    "cannot convert `{}` to `{}`: conversion from an NP type to a CP type is never allowed",
                    self.type_label(&e.ty),
                    self.type_label(to)
                ),
            ),
            (Some(_), Some(_)) => err(
                loc,
                format!(
                    "no implicit conversion from `{}` to `{}`; use an explicit cast",
                    self.type_label(&e.ty),
                    self.type_label(to)
                ),
            ),
            _ => err(
                loc,
                format!(
                    "cannot convert `{}` to `{}`",
                    self.type_label(&e.ty),
                    self.type_label(to)
                ),
            ),
        }
    }

    fn cast(&self, e: Expr, to: &TypeDesc, loc: Loc) -> TResult<Expr> {
        let e = self.rvalue(e)?;
        if let (Some(TypeDesc::Record(a)), Some(TypeDesc::Record(b))) = (e.ty.pointee(), to.pointee()) {
            if self.derives_from(*a, *b) || self.derives_from(*b, *a) {
                return Ok(Self::convert(e, to, true));
            }
        }
        match (e.ty.kind(), to.kind()) {
            (Some(f), Some(t)) if !e.ty.is_record_ptr() && !to.is_record_ptr() => {
                if cast_allowed(f, t) {
                    Ok(Self::convert(e, to, true))
                } else if f.is_np() && t.group() == Group::Cp {
                    err(
                        loc,
                        format!(
                            "cast from `{}` to `{}` is never allowed (NP to CP)",
                            self.type_label(&e.ty),
                            self.type_label(to)
                        ),
                    )
                } else {
                    err(
                        loc,
                        format!(
                            "cast from `{}` to `{}` is not allowed",
                            self.type_label(&e.ty),
                            self.type_label(to)
                        ),
                    )
                }
            }
            _ => err(
                loc,
                format!(
                    "cast from `{}` to `{}` is not allowed",
                    self.type_label(&e.ty),
                    self.type_label(to)
                ),
            ),
        }
    }

    fn check_assignable(&self, t: &Expr, loc: Loc) -> TResult<()> {
        if !t.is_lvalue() {
            return err(loc, "assignment target is not an lvalue");
        }
        match &t.kind {
            ExprKind::Global(g) if self.globals[*g].is_const => {
                return err(loc, format!("cannot assign to const `{}`", self.globals[*g].name))
            }
            ExprKind::Local(l) if self.cur.as_ref().unwrap().readonly.contains(l) => {
                return err(
                    loc,
                    format!("cannot assign to const `{}`", self.cur.as_ref().unwrap().locals[*l].name),
                )
            }
            _ => {}
        }
        if t.ty.is_array() {
            return err(
                loc,
                format!("cannot assign to a value of type `{}`", self.type_label(&t.ty)),
            );
        }
        Ok(())
    }

    pub(super) fn expr(&mut self, e: &ast::Expr) -> TResult<Expr> {
        use ast::ExprKind as K;
        let loc = e.loc;
        let mk = |ty: TypeDesc, kind: ExprKind| Expr { ty, kind, loc };
        match &e.kind {
            K::Int(v) => Ok(mk(TypeDesc::Int, ExprKind::Int(*v))),
            K::Double(v) => Ok(mk(TypeDesc::Double, ExprKind::Double(*v))),
            K::Single(v) => Ok(mk(TypeDesc::Float, ExprKind::Float(*v))),
            K::Ident(name) => self.ident(name, loc),
            K::Unary(op, x) => self.unary(*op, x, loc),
            K::IncDec {
                increment,
                prefix,
                target,
            } => {
                let t = self.expr(target)?;
                self.check_assignable(&t, target.loc)?;
                let ok = matches!(
                    t.ty,
                    TypeDesc::Int | TypeDesc::Float | TypeDesc::Double | TypeDesc::LocalInt
                ) || (matches!(t.ty, TypeDesc::Ptr(_)) && !t.ty.is_record_ptr());
                if !ok {
                    return err(
                        loc,
                        format!("cannot increment or decrement `{}`", self.type_label(&t.ty)),
                    );
                }
                Ok(mk(
                    t.ty.clone(),
                    ExprKind::IncDec {
                        increment: *increment,
                        prefix: *prefix,
                        target: Box::new(t),
                    },
                ))
            }
            K::Binary(op, l, r) => {
                let l = self.value_expr(l)?;
                let r = self.value_expr(r)?;
                self.binary(*op, l, r, loc)
            }
            K::Assign(op, l, r) => {
                let target = self.expr(l)?;
                self.check_assignable(&target, l.loc)?;
                if target.ty.is_record() {
                    return self.record_assign(op.is_some(), target, r, loc);
                }
                let value = self.value_expr(r)?;
                match op {
                    None => {
                        let value = self.coerce(value, &target.ty, r.loc)?;
                        Ok(mk(
                            target.ty.clone(),
                            ExprKind::Assign {
                                target: Box::new(target),
                                value: Box::new(value),
                                compound: None,
                            },
                        ))
                    }
                    Some(op) => self.compound_assign(*op, target, value, loc),
                }
            }
            K::Call(callee, args) => self.call(callee, args, loc),
            K::Index(base, idx) => {
                let b = self.expr(base)?;
                let b = if b.ty.is_array() { b } else { self.rvalue(b)? };
                let elem = match &b.ty {
                    TypeDesc::Array(elem, _) => (**elem).clone(),
                    TypeDesc::Ptr(t) if t.innermost().is_record() => {
                        return err(
                            loc,
                            "pointer arithmetic on record pointers is not allowed; fields live in two memories",
                        )
                    }
                    TypeDesc::Ptr(t) if **t == TypeDesc::Void => {
                        return err(loc, "cannot index a void pointer")
                    }
                    TypeDesc::Ptr(t) => (**t).clone(),
                    other => {
                        return err(
                            loc,
                            format!("cannot index a value of type `{}`", self.type_label(other)),
                        )
                    }
                };
                let i = self.value_expr(idx)?;
                let i = self.index_value(i, idx.loc)?;
                Ok(mk(
                    elem,
                    ExprKind::Index {
                        base: Box::new(b),
                        index: Box::new(i),
                    },
                ))
            }
            K::Member { base, field, arrow } => {
                let b = self.expr(base)?;
                let b = if *arrow {
                    let b = self.rvalue(b)?;
                    match b.ty.pointee() {
                        Some(TypeDesc::Record(r)) => Expr {
                            ty: TypeDesc::Record(*r),
                            loc,
                            kind: ExprKind::Deref(Box::new(b)),
                        },
                        _ => {
                            return err(
                                loc,
                                format!("`->` applied to non-record-pointer `{}`", self.type_label(&b.ty)),
                            )
                        }
                    }
                } else {
                    b
                };
                self.member_of(b, field, loc)
            }
            K::Cast(tn, x) => {
                let to = self.resolve_base(tn)?;
                let x = self.expr(x)?;
                self.cast(x, &to, loc)
            }
        }
    }

    fn index_value(&self, i: Expr, loc: Loc) -> TResult<Expr> {
        match i.ty {
            TypeDesc::Int => Ok(i),
            TypeDesc::LocalInt => err(
                loc,
                "array subscript has NP type `localint`; use localoffset() for per-node offsets",
            ),
            _ => err(
                loc,
                format!("array subscript must have type `int`, found `{}`", self.type_label(&i.ty)),
            ),
        }
    }

    fn ident(&mut self, name: &str, loc: Loc) -> TResult<Expr> {
        if let Some(l) = self.lookup_local(name) {
            return Ok(self.var_expr(VarRef::Local(l), loc));
        }
        if let Some(rec) = self.cur.as_ref().and_then(|s| s.this_record) {
            if self.find_field(rec, name).is_some() {
                let this = self.this_deref(loc)?;
                return self.member_of(this, name, loc);
            }
        }
        match self.scope.get(name) {
            Some(Symbol::Global(g)) => Ok(self.var_expr(VarRef::Global(*g), loc)),
            Some(Symbol::Neighbor(axis, sign)) => Ok(Expr {
                ty: TypeDesc::Int,
                kind: ExprKind::Neighbor {
                    axis: *axis,
                    sign: *sign,
                    named: true,
                },
                loc,
            }),
            Some(Symbol::Func(_)) => err(loc, format!("function `{name}` used as a value")),
            None => err(loc, format!("undeclared identifier `{name}`")),
        }
    }

    fn unary(&mut self, op: UnOp, x: &ast::Expr, loc: Loc) -> TResult<Expr> {
        let mk = |ty: TypeDesc, kind: ExprKind| Expr { ty, kind, loc };
        match op {
            UnOp::AddrOf => {
                let v = self.expr(x)?;
                if !v.is_lvalue() {
                    return err(loc, "cannot take the address of a non-lvalue");
                }
                Ok(mk(TypeDesc::ptr(v.ty.clone()), ExprKind::AddrOf(Box::new(v))))
            }
            UnOp::Deref => {
                let v = self.value_expr(x)?;
                match v.ty.pointee() {
                    Some(TypeDesc::Void) | None => err(
                        loc,
                        format!("cannot dereference `{}`", self.type_label(&v.ty)),
                    ),
                    Some(t) => Ok(mk(t.clone(), ExprKind::Deref(Box::new(v)))),
                }
            }
            UnOp::Plus => {
                let v = self.value_expr(x)?;
                if !v.ty.is_arith() {
                    return err(loc, "unary `+` requires an arithmetic operand");
                }
                Ok(v)
            }
            UnOp::Neg => {
                let v = self.value_expr(x)?;
                if !v.ty.is_arith() {
                    return err(loc, "unary `-` requires an arithmetic operand");
                }
                Ok(mk(v.ty.clone(), ExprKind::Unary(UnaryOp::Neg, Box::new(v))))
            }
            UnOp::Not => {
                let v = self.value_expr(x)?;
                let ty = match v.ty.kind() {
                    Some(k) if k.group() == Group::Cp => TypeDesc::Int,
                    Some(Kind::LocalInt) => TypeDesc::LocalInt,
                    _ => {
                        return err(
                            loc,
                            format!(
                                "`!` requires an int, pointer or localint operand, found `{}`",
                                self.type_label(&v.ty)
                            ),
                        )
                    }
                };
                Ok(mk(ty, ExprKind::Unary(UnaryOp::Not, Box::new(v))))
            }
            UnOp::BitNot => {
                let v = self.value_expr(x)?;
                if !matches!(v.ty, TypeDesc::Int | TypeDesc::LocalInt) {
                    return err(loc, "`~` requires an int or localint operand");
                }
                Ok(mk(v.ty.clone(), ExprKind::Unary(UnaryOp::BitNot, Box::new(v))))
            }
        }
    }

    fn binary(&mut self, op: BinOp, l: Expr, r: Expr, loc: Loc) -> TResult<Expr> {
        let mk = |ty: TypeDesc, kind: ExprKind| Expr { ty, kind, loc };
        if op.is_logical() {
            let both_cp = l.ty.is_cp_scalar() && r.ty.is_cp_scalar();
            if both_cp {
                return Ok(mk(
                    TypeDesc::Int,
                    ExprKind::Logical {
                        and: op == BinOp::And,
                        lhs: Box::new(l),
                        rhs: Box::new(r),
                    },
                ));
            }
            let cond = |e: Expr| -> TResult<Expr> {
                match e.ty {
                    TypeDesc::LocalInt => Ok(e),
                    TypeDesc::Int => Ok(Self::convert(e, &TypeDesc::LocalInt, false)),
                    _ => err(
                        e.loc,
                        format!(
                            "operand of `{}` on NP values must be a localint condition, found `{}`; compare explicitly",
                            op.symbol(),
                            self.type_label(&e.ty)
                        ),
                    ),
                }
            };
            let (l, r) = (cond(l)?, cond(r)?);
            return Ok(mk(
                TypeDesc::LocalInt,
                ExprKind::Logical {
                    and: op == BinOp::And,
                    lhs: Box::new(l),
                    rhs: Box::new(r),
                },
            ));
        }

        let result = binary_result_type(op, &l.ty, &r.ty).map_err(|m| TypeError {
            loc,
            message: self.relabel(m, &l.ty, &r.ty),
        })?;

        let lp = matches!(l.ty, TypeDesc::Ptr(_));
        let rp = matches!(r.ty, TypeDesc::Ptr(_));
        if lp || rp {
            if lp && l.ty.is_record_ptr() || rp && r.ty.is_record_ptr() {
                let what = if op.is_comparison() { "comparison" } else { "pointer arithmetic" };
                return err(
                    loc,
                    format!("{what} on record pointers is not allowed; fields live in two memories"),
                );
            }
            if op.is_comparison() {
                let (l, r) = if lp && rp {
                    (l, r)
                } else if lp {
                    let t = l.ty.clone();
                    (l, self.coerce(r, &t, loc)?)
                } else {
                    let t = r.ty.clone();
                    (self.coerce(l, &t, loc)?, r)
                };
                return Ok(mk(
                    TypeDesc::Int,
                    ExprKind::Binary {
                        op,
                        lhs: Box::new(l),
                        rhs: Box::new(r),
                    },
                ));
            }
            if lp && rp {
                return Ok(mk(
                    TypeDesc::Int,
                    ExprKind::PtrDiff {
                        lhs: Box::new(l),
                        rhs: Box::new(r),
                    },
                ));
            }
            let (ptr, index) = if lp { (l, r) } else { (r, l) };
            return Ok(mk(
                result,
                ExprKind::PtrOffset {
                    ptr: Box::new(ptr),
                    index: Box::new(index),
                    negate: op == BinOp::Sub,
                },
            ));
        }

        let k = common_kind(l.ty.kind().unwrap(), r.ty.kind().unwrap())
            .expect("binary_result_type accepted the operands");
        let operand = TypeDesc::from_kind(k).unwrap();
        let l = self.coerce(l, &operand, loc)?;
        let r = self.coerce(r, &operand, loc)?;
        Ok(mk(
            result,
            ExprKind::Binary {
                op,
                lhs: Box::new(l),
                rhs: Box::new(r),
            },
        ))
    }

    fn relabel(&self, message: String, l: &TypeDesc, r: &TypeDesc) -> String {
        message
            .replace(&l.to_string(), &self.type_label(l))
            .replace(&r.to_string(), &self.type_label(r))
    }

    /// Whole-record copy. Both sides must be lvalues of the same record.
    fn record_assign(&mut self, compound: bool, target: Expr, r: &ast::Expr, loc: Loc) -> TResult<Expr> {
        let label = self.type_label(&target.ty);
        if compound {
            return err(loc, format!("compound assignment is not defined on `{label}`"));
        }
        let value = self.expr(r)?;
        if value.ty != target.ty {
            return err(
                r.loc,
                format!("cannot assign `{}` to `{label}`", self.type_label(&value.ty)),
            );
        }
        if !value.is_lvalue() {
            return err(r.loc, format!("a `{label}` copy needs a source object in memory"));
        }
        Ok(Expr {
            ty: target.ty.clone(),
            loc,
            kind: ExprKind::Assign {
                target: Box::new(target),
                value: Box::new(value),
                compound: None,
            },
        })
    }

    fn compound_assign(&mut self, op: BinOp, target: Expr, value: Expr, loc: Loc) -> TResult<Expr> {
        let ty = target.ty.clone();
        if matches!(ty, TypeDesc::Ptr(_)) {
            if ty.is_record_ptr() {
                return err(
                    loc,
                    "pointer arithmetic on record pointers is not allowed; fields live in two memories",
                );
            }
            if !matches!(op, BinOp::Add | BinOp::Sub) || value.ty != TypeDesc::Int {
                return err(loc, "pointers only support `+= int` and `-= int`");
            }
            return Ok(Expr {
                ty,
                loc,
                kind: ExprKind::Assign {
                    target: Box::new(target),
                    value: Box::new(value),
                    compound: Some(Compound::Pointer {
                        negate: op == BinOp::Sub,
                    }),
                },
            });
        }
        if op.is_comparison() || op.is_logical() {
            return err(loc, "invalid compound assignment operator");
        }
        let op_ty = binary_result_type(op, &target.ty, &value.ty).map_err(|m| TypeError {
            loc,
            message: self.relabel(m, &target.ty, &value.ty),
        })?;
        let (tk, ok) = (target.ty.kind().unwrap(), op_ty.kind().unwrap());
        if !promotion_allowed(ok, tk) {
            let hint = if ok.is_np() && tk.group() == Group::Cp {
                "conversion from an NP type to a CP type is never allowed"
            } else {
                "no implicit conversion back to the target type"
            };
            return err(
                loc,
                format!(
                    "compound assignment computes `{}` but target is `{}`: {hint}",
                    self.type_label(&op_ty),
                    self.type_label(&target.ty)
                ),
            );
        }
        let value = self.coerce(value, &op_ty, loc)?;
        Ok(Expr {
            ty,
            loc,
            kind: ExprKind::Assign {
                target: Box::new(target),
                value: Box::new(value),
                compound: Some(Compound::Arith { op, op_ty }),
            },
        })
    }

    fn call(&mut self, callee: &ast::Expr, args: &[ast::Expr], loc: Loc) -> TResult<Expr> {
        use ast::ExprKind as K;
        match &callee.kind {
            K::Ident(name) => {
                if self.lookup_local(name).is_none() {
                    if let Some(e) = self.intrinsic(name, args, loc)? {
                        return Ok(e);
                    }
                }
                if let Some(rec) = self.cur.as_ref().and_then(|s| s.this_record) {
                    if let Some((owner, fid, access)) = self.find_method(rec, name) {
                        self.check_access(owner, access, name, loc)?;
                        let this = self.this_deref(loc)?;
                        let handle = self.handle_of(this, loc);
                        return self.finish_call(fid, Some(handle), args, loc);
                    }
                }
                match self.scope.get(name.as_str()) {
                    Some(Symbol::Func(fid)) => self.finish_call(*fid, None, args, loc),
                    Some(_) => err(loc, format!("`{name}` is not a function")),
                    None => err(loc, format!("undeclared function `{name}`")),
                }
            }
            K::Member { base, field, arrow } => {
                let b = self.expr(base)?;
                let handle = if *arrow {
                    let b = self.rvalue(b)?;
                    if !b.ty.is_record_ptr() {
                        return err(loc, "`->` applied to a non-record pointer");
                    }
                    b
                } else {
                    if !b.ty.is_record() {
                        return err(loc, "method call on a non-record value");
                    }
                    if !b.is_lvalue() {
                        return err(loc, "method call requires an addressable object");
                    }
                    self.handle_of(b, loc)
                };
                let Some(TypeDesc::Record(rec)) = handle.ty.pointee().cloned() else { unreachable!() };
                let Some((owner, fid, access)) = self.find_method(rec, field) else {
                    return err(
                        loc,
                        format!("`{}` has no method `{field}`", self.records[rec].name),
                    );
                };
                self.check_access(owner, access, field, loc)?;
                self.finish_call(fid, Some(handle), args, loc)
            }
            _ => err(loc, "called object is not a function"),
        }
    }

    fn handle_of(&self, obj: Expr, loc: Loc) -> Expr {
        Expr {
            ty: TypeDesc::ptr(obj.ty.clone()),
            kind: ExprKind::AddrOf(Box::new(obj)),
            loc,
        }
    }

    fn finish_call(
        &mut self,
        fid: FuncId,
        this: Option<Expr>,
        args: &[ast::Expr],
        loc: Loc,
    ) -> TResult<Expr> {
        let f = &self.functions[fid];
        let param_tys: Vec<TypeDesc> = f.params.iter().map(|p| f.locals[*p].ty.clone()).collect();
        let ret = f.ret.clone();
        let name = f.name.clone();
        let explicit = if this.is_some() { &param_tys[1..] } else { &param_tys[..] };
        if explicit.len() != args.len() {
            return err(
                loc,
                format!(
                    "`{name}` expects {} argument(s), got {}",
                    explicit.len(),
                    args.len()
                ),
            );
        }
        let mut out = Vec::new();
        if let Some(h) = this {
            let h = self.coerce(h, &param_tys[0], loc)?;
            out.push(h);
        }
        for (a, ty) in args.iter().zip(explicit) {
            let v = self.value_expr(a)?;
            out.push(self.coerce(v, ty, a.loc)?);
        }
        Ok(Expr {
            ty: ret,
            kind: ExprKind::Call { func: fid, args: out },
            loc,
        })
    }

    fn np_condition_arg(&mut self, name: &str, args: &[ast::Expr], loc: Loc) -> TResult<Expr> {
        if args.len() != 1 {
            return err(loc, format!("`{name}` takes exactly one argument"));
        }
        let v = self.value_expr(&args[0])?;
        match v.ty {
            TypeDesc::LocalInt => Ok(v),
            TypeDesc::Int => Ok(Self::convert(v, &TypeDesc::LocalInt, false)),
            _ => err(
                args[0].loc,
                format!(
                    "`{name}` requires a localint argument, found `{}`",
                    self.type_label(&v.ty)
                ),
            ),
        }
    }

    fn binding_index(&mut self, name: &str) -> usize {
        match self.bindings.iter().position(|b| b == name) {
            Some(i) => i,
            None => {
                self.bindings.push(name.to_string());
                self.bindings.len() - 1
            }
        }
    }

    fn intrinsic(&mut self, name: &str, args: &[ast::Expr], loc: Loc) -> TResult<Option<Expr>> {
        let mk = |ty: TypeDesc, kind: ExprKind| Expr { ty, kind, loc };
        Ok(Some(match name {
            "localoffset" => {
                let v = self.np_condition_arg(name, args, loc)?;
                mk(TypeDesc::Void, ExprKind::LocalOffset(Box::new(v)))
            }
            "any" | "all" | "none" => {
                let v = self.np_condition_arg(name, args, loc)?;
                let kind = match name {
                    "any" => ReduceKind::Any,
                    "all" => ReduceKind::All,
                    _ => ReduceKind::None,
                };
                mk(TypeDesc::Int, ExprKind::Reduce(kind, Box::new(v)))
            }
            "NEIGHBOR_NP" => {
                if args.len() != 2 {
                    return err(loc, "`NEIGHBOR_NP` takes (axis, sign)");
                }
                let (Some(axis), Some(sign)) = (self.const_eval(&args[0]), self.const_eval(&args[1]))
                else {
                    return err(loc, "`NEIGHBOR_NP` arguments must be integer constants");
                };
                if axis < 0 || !(sign == 1 || sign == -1) {
                    return err(loc, "`NEIGHBOR_NP` needs axis >= 0 and sign +1 or -1");
                }
                mk(
                    TypeDesc::Int,
                    ExprKind::Neighbor {
                        axis: axis as u32,
                        sign,
                        named: false,
                    },
                )
            }
            "distributed_load" | "distributed_store" => {
                if args.len() != 3 {
                    return err(loc, format!("`{name}` takes (array, data-name, count)"));
                }
                let target = self.expr(&args[0])?;
                let target = if target.ty.is_array() { target } else { self.rvalue(target)? };
                let elem = match &target.ty {
                    TypeDesc::Array(..) if target.is_lvalue() => target.ty.innermost().np_kind(),
                    TypeDesc::Ptr(t) => t.innermost().np_kind(),
                    _ => None,
                };
                let Some(elem) = elem else {
                    return err(
                        args[0].loc,
                        format!(
                            "`{name}` needs an NP array or NP pointer, found `{}`",
                            self.type_label(&target.ty)
                        ),
                    );
                };
                let ast::ExprKind::Ident(data) = &args[1].kind else {
                    return err(args[1].loc, "data-file argument must be a name bound at run time");
                };
                let binding = self.binding_index(data);
                let count = self.value_expr(&args[2])?;
                if count.ty != TypeDesc::Int {
                    return err(args[2].loc, "element count must have type `int`");
                }
                if name == "distributed_load" {
                    mk(
                        TypeDesc::Void,
                        ExprKind::DistLoad {
                            dest: Box::new(target),
                            binding,
                            count: Box::new(count),
                            elem,
                        },
                    )
                } else {
                    mk(
                        TypeDesc::Void,
                        ExprKind::DistStore {
                            src: Box::new(target),
                            binding,
                            count: Box::new(count),
                            elem,
                        },
                    )
                }
            }
            _ => return Ok(None),
        }))
    }
}

#[derive(Clone, Copy)]
enum VarRef {
    Global(GlobalId),
    Local(LocalId),
}
