//! Source rendering of syntax trees. Expressions are fully parenthesized
//! so that re-parsing the output reproduces the same tree.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

impl Display for Program {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            match item {
                Item::Var(d) => writeln!(f, "{d}")?,
                Item::Typedef(t) => {
                    write!(f, "typedef {} {}", t.ty, t.name)?;
                    write_dims(f, &t.dims)?;
                    writeln!(f, ";")?;
                }
                Item::Record(r) => write_record(f, r)?,
                Item::Func(func) => write_func(f, func, 0)?,
            }
        }
        Ok(())
    }
}

impl Display for TypeName {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match &self.base {
            BaseType::Int => f.write_str("int")?,
            BaseType::Float => f.write_str("float")?,
            BaseType::Double => f.write_str("double")?,
            BaseType::Vector => f.write_str("vector")?,
            BaseType::Complex => f.write_str("complex")?,
            BaseType::LocalInt => f.write_str("localint")?,
            BaseType::Void => f.write_str("void")?,
            BaseType::Named(n) => f.write_str(n)?,
        }
        for _ in 0..self.pointers {
            f.write_char('*')?;
        }
        Ok(())
    }
}

fn write_dims(f: &mut Formatter<'_>, dims: &[Expr]) -> fmt::Result {
    for d in dims {
        write!(f, "[{d}]")?;
    }
    Ok(())
}

fn write_args(f: &mut Formatter<'_>, args: &[Expr]) -> fmt::Result {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

impl Display for VarDecl {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.is_const {
            f.write_str("const ")?;
        }
        write!(f, "{} ", self.ty)?;
        for (i, d) in self.declarators.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(&d.name)?;
            write_dims(f, &d.dims)?;
            match &d.init {
                Some(Init::Expr(e)) => write!(f, " = {e}")?,
                Some(Init::Ctor(args)) => {
                    f.write_char('(')?;
                    write_args(f, args)?;
                    f.write_char(')')?;
                }
                None => {}
            }
        }
        f.write_char(';')
    }
}

fn indent(f: &mut Formatter<'_>, depth: usize) -> fmt::Result {
    for _ in 0..depth {
        f.write_str("    ")?;
    }
    Ok(())
}

fn write_params(f: &mut Formatter<'_>, params: &[Param]) -> fmt::Result {
    f.write_char('(')?;
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{} {}", p.ty, p.name)?;
    }
    f.write_char(')')
}

fn write_record(f: &mut Formatter<'_>, r: &RecordDef) -> fmt::Result {
    write!(f, "{} {}", r.kind.keyword(), r.name)?;
    if let Some(b) = &r.base {
        write!(f, " : public {b}")?;
    }
    f.write_str(" {\n")?;
    for m in &r.members {
        match m {
            Member::Access(Access::Public, _) => f.write_str("public:\n")?,
            Member::Access(Access::Private, _) => f.write_str("private:\n")?,
            Member::Field(d) => {
                indent(f, 1)?;
                writeln!(f, "{d}")?;
            }
            Member::Method(func) => write_func(f, func, 1)?,
            Member::Ctor(c) => {
                indent(f, 1)?;
                f.write_str(&c.name)?;
                write_params(f, &c.params)?;
                for (i, init) in c.inits.iter().enumerate() {
                    f.write_str(if i == 0 { " : " } else { ", " })?;
                    write!(f, "{}(", init.field)?;
                    write_args(f, &init.args)?;
                    f.write_char(')')?;
                }
                f.write_char(' ')?;
                write_block(f, &c.body, 1)?;
                f.write_char('\n')?;
            }
        }
    }
    f.write_str("};\n")
}

fn write_func(f: &mut Formatter<'_>, func: &FuncDef, depth: usize) -> fmt::Result {
    indent(f, depth)?;
    write!(f, "{} {}", func.ret, func.name)?;
    write_params(f, &func.params)?;
    f.write_char(' ')?;
    write_block(f, &func.body, depth)?;
    f.write_char('\n')
}

fn write_block(f: &mut Formatter<'_>, b: &Block, depth: usize) -> fmt::Result {
    f.write_str("{\n")?;
    for s in &b.stmts {
        write_stmt(f, s, depth + 1)?;
    }
    indent(f, depth)?;
    f.write_char('}')
}

fn write_stmt(f: &mut Formatter<'_>, s: &Stmt, depth: usize) -> fmt::Result {
    indent(f, depth)?;
    write_stmt_inline(f, s, depth)?;
    f.write_char('\n')
}

fn write_stmt_inline(f: &mut Formatter<'_>, s: &Stmt, depth: usize) -> fmt::Result {
    match s {
        Stmt::Expr(e) => write!(f, "{e};"),
        Stmt::Block(b) => write_block(f, b, depth),
        Stmt::If {
            cond, then, els, ..
        } => {
            write!(f, "if ({cond}) ")?;
            write_stmt_inline(f, then, depth)?;
            if let Some(e) = els {
                f.write_str(" else ")?;
                write_stmt_inline(f, e, depth)?;
            }
            Ok(())
        }
        Stmt::Where {
            cond,
            body,
            elsewhere,
            ..
        } => {
            write!(f, "where ({cond}) ")?;
            write_stmt_inline(f, body, depth)?;
            if let Some(e) = elsewhere {
                f.write_str(" elsewhere ")?;
                write_stmt_inline(f, e, depth)?;
            }
            Ok(())
        }
        Stmt::For {
            init,
            cond,
            step,
            body,
            ..
        } => {
            f.write_str("for (")?;
            match init {
                Some(s) => write_stmt_inline(f, s, depth)?,
                None => f.write_char(';')?,
            }
            if let Some(c) = cond {
                write!(f, " {c}")?;
            }
            f.write_str(";")?;
            if let Some(s) = step {
                write!(f, " {s}")?;
            }
            f.write_str(") ")?;
            write_stmt_inline(f, body, depth)
        }
        Stmt::While { cond, body, .. } => {
            write!(f, "while ({cond}) ")?;
            write_stmt_inline(f, body, depth)
        }
        Stmt::Return(Some(e), _) => write!(f, "return {e};"),
        Stmt::Return(None, _) => f.write_str("return;"),
        Stmt::Decl(d) => write!(f, "{d}"),
        Stmt::Empty(_) => f.write_char(';'),
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Int(v) => write!(f, "{v}"),
            ExprKind::Double(v) => write!(f, "{v:?}"),
            ExprKind::Single(v) => write!(f, "{v:?}f"),
            ExprKind::Ident(n) => f.write_str(n),
            ExprKind::Unary(op, e) => write!(f, "({}{e})", op.symbol()),
            ExprKind::IncDec {
                increment,
                prefix,
                target,
            } => {
                let sym = if *increment { "++" } else { "--" };
                if *prefix {
                    write!(f, "({sym}{target})")
                } else {
                    write!(f, "({target}{sym})")
                }
            }
            ExprKind::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            ExprKind::Assign(op, l, r) => {
                let sym = op.map(BinOp::symbol).unwrap_or("");
                write!(f, "({l} {sym}= {r})")
            }
            ExprKind::Call(callee, args) => {
                write!(f, "{callee}(")?;
                write_args(f, args)?;
                f.write_char(')')
            }
            ExprKind::Index(base, idx) => write!(f, "{base}[{idx}]"),
            ExprKind::Member { base, field, arrow } => {
                write!(f, "{base}{}{field}", if *arrow { "->" } else { "." })
            }
            ExprKind::Cast(ty, e) => write!(f, "(({ty}){e})"),
        }
    }
}
