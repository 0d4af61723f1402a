//! Type checking: groups, promotions, casts and the typed program.

mod check;
pub mod tables;
pub mod typed;
pub mod types;

use thiserror::Error;

use crate::frontend::ast::{self, BinOp, Loc};

pub use check::NEIGHBOR_NAMES;
pub use tables::{cast_allowed, promotion_allowed, CASTS, PROMOTIONS};
pub use typed::*;
pub use types::{Group, Groups, Kind, RecordId, TypeDesc};

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{message}")]
pub struct TypeError {
    pub loc: Loc,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("internal error: {0}")]
pub struct InternalError(pub String);

/// Groups a type occupies. Records report every group their fields use.
pub fn group_of(t: &TypeDesc, records: &[RecordInfo]) -> Result<Groups, InternalError> {
    match t {
        TypeDesc::Void => Err(InternalError("group of void".into())),
        TypeDesc::Function(..) => Err(InternalError("group of a function type".into())),
        TypeDesc::Array(e, _) => group_of(e, records),
        TypeDesc::Record(id) => {
            let r = records
                .get(*id)
                .ok_or_else(|| InternalError(format!("unknown record #{id}")))?;
            let mut g = match r.base {
                Some(b) => group_of(&TypeDesc::Record(b), records)?,
                None => Groups::NONE,
            };
            for f in &r.fields {
                g = g.union(group_of(&f.ty, records)?);
            }
            Ok(g)
        }
        t => match t.kind().map(Kind::group) {
            Some(Group::Cp) => Ok(Groups::CP),
            Some(Group::Np) => Ok(Groups::NP),
            None => Err(InternalError(format!("group of `{t}`"))),
        },
    }
}

fn rank(k: Kind) -> Option<u8> {
    match k {
        Kind::Int => Some(0),
        Kind::LocalInt => Some(1),
        Kind::Float => Some(2),
        Kind::Double => Some(3),
        Kind::Vector | Kind::Complex => Some(4),
        Kind::PtrCp | Kind::PtrNp => None,
    }
}

/// Least arithmetic kind at or above both operands that both promote to.
pub fn common_kind(a: Kind, b: Kind) -> Result<Kind, String> {
    let (Some(ra), Some(rb)) = (rank(a), rank(b)) else {
        return Err(format!("`{}` and `{}` have no common arithmetic type", a.name(), b.name()));
    };
    let floor = ra.max(rb);
    let mut best: Vec<Kind> = Vec::new();
    let mut best_rank = u8::MAX;
    for k in Kind::ALL {
        let Some(r) = rank(k) else { continue };
        if r < floor || !promotion_allowed(a, k) || !promotion_allowed(b, k) {
            continue;
        }
        if r < best_rank {
            best_rank = r;
            best.clear();
        }
        if r == best_rank {
            best.push(k);
        }
    }
    match best.as_slice() {
        [k] => Ok(*k),
        [] => Err(format!(
            "no common type for `{}` and `{}`; add an explicit cast",
            a.name(),
            b.name()
        )),
        _ => Err(format!(
            "ambiguous common type for `{}` and `{}`; add an explicit cast",
            a.name(),
            b.name()
        )),
    }
}

/// Result type of `lhs op rhs`. Logical operators are typed by the
/// checker since they take conditions rather than arithmetic operands.
pub fn binary_result_type(op: BinOp, lhs: &TypeDesc, rhs: &TypeDesc) -> Result<TypeDesc, String> {
    let (Some(lk), Some(rk)) = (lhs.kind(), rhs.kind()) else {
        return Err(format!("invalid operands to `{}`: `{lhs}` and `{rhs}`", op.symbol()));
    };
    let lp = lk.is_pointer();
    let rp = rk.is_pointer();
    if lp || rp {
        return match op {
            _ if op.is_comparison() => {
                if (lp && rp) || (lp && rk == Kind::Int) || (rp && lk == Kind::Int) {
                    Ok(TypeDesc::Int)
                } else {
                    Err(format!("cannot compare `{lhs}` with `{rhs}`"))
                }
            }
            BinOp::Add if lp && rk == Kind::Int => Ok(lhs.clone()),
            BinOp::Add if rp && lk == Kind::Int => Ok(rhs.clone()),
            BinOp::Sub if lp && rk == Kind::Int => Ok(lhs.clone()),
            BinOp::Sub if lp && rp && lhs == rhs => Ok(TypeDesc::Int),
            BinOp::Add | BinOp::Sub if lk == Kind::LocalInt || rk == Kind::LocalInt => Err(
                "pointer arithmetic with a localint is not allowed; use localoffset() for per-node offsets"
                    .into(),
            ),
            _ => Err(format!("invalid operands to `{}`: `{lhs}` and `{rhs}`", op.symbol())),
        };
    }
    let t = common_kind(lk, rk)?;
    if op.is_logical() {
        return Ok(if t.is_np() { TypeDesc::LocalInt } else { TypeDesc::Int });
    }
    if op.is_comparison() {
        let ordering = !matches!(op, BinOp::Eq | BinOp::Ne);
        if ordering && matches!(t, Kind::Vector | Kind::Complex) {
            return Err(format!("`{}` is not defined for `{}`", op.symbol(), t.name()));
        }
        return Ok(if t.is_np() { TypeDesc::LocalInt } else { TypeDesc::Int });
    }
    let integral = matches!(t, Kind::Int | Kind::LocalInt);
    if (op == BinOp::Rem || op.is_bitwise()) && !integral {
        return Err(format!(
            "`{}` requires int or localint operands, found `{}`",
            op.symbol(),
            t.name()
        ));
    }
    Ok(TypeDesc::from_kind(t).expect("arithmetic kind"))
}

pub fn typecheck_program(tree: &ast::Program) -> Result<TypedProgram, TypeError> {
    check::Checker::new().run(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn check(src: &str) -> Result<TypedProgram, TypeError> {
        typecheck_program(&parse_source(src).expect("parses"))
    }

    fn bt(op: BinOp, a: TypeDesc, b: TypeDesc) -> Result<TypeDesc, String> {
        binary_result_type(op, &a, &b)
    }

    #[test]
    fn result_type_examples() {
        assert_eq!(bt(BinOp::Add, TypeDesc::Int, TypeDesc::Double), Ok(TypeDesc::Double));
        assert!(bt(BinOp::Mul, TypeDesc::Vector, TypeDesc::Complex).is_err());
        assert_eq!(bt(BinOp::Ne, TypeDesc::Double, TypeDesc::Double), Ok(TypeDesc::LocalInt));
        assert_eq!(bt(BinOp::Lt, TypeDesc::Int, TypeDesc::Int), Ok(TypeDesc::Int));
        assert_eq!(bt(BinOp::Add, TypeDesc::Float, TypeDesc::Vector), Ok(TypeDesc::Vector));
        assert_eq!(bt(BinOp::Add, TypeDesc::Int, TypeDesc::LocalInt), Ok(TypeDesc::LocalInt));
        assert!(bt(BinOp::Rem, TypeDesc::Float, TypeDesc::Float).is_err());
        assert!(bt(BinOp::Lt, TypeDesc::Complex, TypeDesc::Complex).is_err());
    }

    #[test]
    fn pointer_arithmetic() {
        let p = TypeDesc::ptr(TypeDesc::Float);
        assert_eq!(bt(BinOp::Add, p.clone(), TypeDesc::Int), Ok(p.clone()));
        assert_eq!(bt(BinOp::Add, TypeDesc::Int, p.clone()), Ok(p.clone()));
        assert_eq!(bt(BinOp::Sub, p.clone(), p.clone()), Ok(TypeDesc::Int));
        let e = bt(BinOp::Add, p, TypeDesc::LocalInt).unwrap_err();
        assert!(e.contains("localoffset"), "{e}");
    }

    #[test]
    fn groups() {
        assert_eq!(group_of(&TypeDesc::Double, &[]), Ok(Groups::NP));
        assert_eq!(group_of(&TypeDesc::ptr(TypeDesc::Float), &[]), Ok(Groups::CP));
        assert_eq!(group_of(&TypeDesc::array(TypeDesc::Int, 10), &[]), Ok(Groups::CP));
        assert!(group_of(&TypeDesc::Void, &[]).is_err());
    }

    #[test]
    fn cp_to_np_assignment_inserts_conversion() {
        let p = check("int i; double a; void f() { a = i; }").unwrap();
        let edges = p.conversion_edges();
        assert!(edges.contains(&ConversionEdge {
            from: Kind::Int,
            to: Kind::Double,
            explicit: false
        }));
    }

    #[test]
    fn np_to_cp_assignment_rejected() {
        let e = check("int i; double a; void f() { i = a; }").unwrap_err();
        assert!(e.message.contains("never allowed"), "{}", e.message);
    }

    #[test]
    fn mixed_union_rejected() {
        assert!(check("union U { int a; float b; };").is_err());
        assert!(check("union U { float a; double b; };").is_ok());
    }

    #[test]
    fn conditions_checked() {
        let e = check("double x; void f() { if (x != 0.0) { x = 1.0; } }").unwrap_err();
        assert!(e.message.contains("where"), "{}", e.message);
        let e = check("int i; void f() { where (i) { i = 1; } }").unwrap_err();
        assert!(e.message.contains("NP condition"), "{}", e.message);
        assert!(check("double x; void f() { where (x != 0.0) x = 1.0 / x; elsewhere x = 0.0; }").is_ok());
    }

    #[test]
    fn return_inside_where_rejected() {
        let e = check("double x; int f() { where (x > 0.0) { return 1; } return 0; }").unwrap_err();
        assert!(e.message.contains("return"));
    }

    #[test]
    fn localint_subscript_hints_localoffset() {
        let e = check("double a[4]; localint li; void f() { a[li] = 1.0; }").unwrap_err();
        assert!(e.message.contains("localoffset"), "{}", e.message);
    }

    #[test]
    fn intrinsics_typed() {
        let p = check(
            "localint li; double a[8]; int n; void f() { localoffset(li); n = any(a[0] > 1.0); }",
        )
        .unwrap();
        let f = &p.functions[0];
        assert_eq!(f.body.len(), 2);
        assert!(check("double d; void f() { localoffset(d); }").is_err());
        assert!(check("double d; int n; void f() { n = all(d); }").is_err());
    }

    #[test]
    fn records_and_methods() {
        let src = "class Mixed { public: int a; float x; Mixed(int i, float f) : a(i) { x = f; } \
                   float get() { return x; } private: int hidden; };\
                   Mixed m(1, 2.0f); float y; void f() { y = m.get(); m.a = 3; }";
        let p = check(src).unwrap();
        assert_eq!(p.records[0].fields.len(), 3);
        assert!(p.function_by_name("Mixed::get").is_some());
        let e = check(&src.replace("m.a = 3", "m.hidden = 3")).unwrap_err();
        assert!(e.message.contains("private"));
    }

    #[test]
    fn record_pointer_arithmetic_rejected() {
        let e = check("struct S { int a; float b; }; S s[2]; S* p; void f() { p = &s[0]; p = p + 1; }")
            .unwrap_err();
        assert!(e.message.contains("record pointers"), "{}", e.message);
    }

    #[test]
    fn const_bounds() {
        let p = check("const int N = 4; double a[N * 2];").unwrap();
        assert_eq!(p.globals[1].ty, TypeDesc::array(TypeDesc::Double, 8));
        assert!(check("int n; double a[n];").is_err());
    }

    #[test]
    fn neighbors_predeclared() {
        let p = check("double a[4]; double b; void f() { b = a[XPLUS_NP + 1]; }").unwrap();
        let mut seen = false;
        p.walk_exprs(&mut |e| {
            if let ExprKind::Neighbor { axis: 0, sign: 1, named: true } = e.kind {
                seen = true;
            }
        });
        assert!(seen);
    }

    #[test]
    fn casts_follow_table() {
        assert!(check("double d; float f; void g() { f = (float)d; }").is_err());
        assert!(check("int i; float f; void g() { f = (float)i; }").is_ok());
        assert!(check("localint l; float f; void g() { f = (float)l; }").is_err());
    }

    #[test]
    fn localint_as_pointer_rejected() {
        let e = check("localint l; float* p; void g() { p = l; }").unwrap_err();
        assert!(e.message.contains("localoffset"));
    }
}
