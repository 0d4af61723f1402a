//! Acceptance criteria. Each criterion prints one PASS/FAIL line with its
//! elapsed time against a pinned bound; the process fails if any does.

mod common;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use simdcpp::machine::Machine;
use simdcpp::runtime_io::{distributed_load, distributed_store, slice, unslice, DistFile, HEADER_LEN};
use simdcpp::semantics::{cast_allowed, promotion_allowed, Kind, TypeDesc, TypedProgram};
use simdcpp::{compile_with, Lane, NpKind, Pair, Topology};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// Column and row order: int, CP pointer, NP pointer, float, double,
// vector, complex, localint.
const PROMOTIONS: [&str; 8] = [
    "yes yes yes yes yes yes yes yes",
    "yes yes yes no no no no no",
    "yes yes yes no no no no no",
    "no no no yes yes yes yes yes",
    "no no no yes yes yes yes yes",
    "no no no no no yes no no",
    "no no no no no no yes no",
    "no no yes yes yes yes yes yes",
];

const CASTS: [&str; 8] = [
    "yes no no yes yes yes yes yes",
    "no yes no no no no no no",
    "no yes no no no no no no",
    "no no no yes yes yes yes no",
    "no no no no yes no no no",
    "no no no no no yes no no",
    "no no no no no no yes no",
    "no no no no no no no yes",
];

fn parse_table(rows: &[&str; 8]) -> [[bool; 8]; 8] {
    let mut t = [[false; 8]; 8];
    for (r, row) in rows.iter().enumerate() {
        for (c, cell) in row.split_whitespace().enumerate() {
            t[r][c] = cell == "yes";
        }
    }
    t
}

const ORDER: [Kind; 8] = [
    Kind::Int,
    Kind::PtrCp,
    Kind::PtrNp,
    Kind::Float,
    Kind::Double,
    Kind::Vector,
    Kind::Complex,
    Kind::LocalInt,
];

fn decl_name(k: Kind) -> Option<&'static str> {
    Some(match k {
        Kind::Int => "int",
        Kind::Float => "float",
        Kind::Double => "double",
        Kind::Vector => "vector",
        Kind::Complex => "complex",
        Kind::LocalInt => "localint",
        _ => return None,
    })
}

fn accepts(src: &str) -> bool {
    compile_with(src, CP_WORDS, NP_WORDS).is_ok()
}

fn criterion_tables() -> Outcome {
    let (mut pairs, mut behavior) = (0, 0);
    for (name, table, api) in [
        ("promotion", parse_table(&PROMOTIONS), promotion_allowed as fn(Kind, Kind) -> bool),
        ("cast", parse_table(&CASTS), cast_allowed as fn(Kind, Kind) -> bool),
    ] {
        for (r, from) in ORDER.iter().enumerate() {
            for (c, to) in ORDER.iter().enumerate() {
                pairs += 1;
                check(api(*from, *to) == table[r][c], || format!("{name} {from:?} -> {to:?}"))?;
                let (Some(f), Some(t)) = (decl_name(*from), decl_name(*to)) else { continue };
                let body = if name == "cast" { format!("dst = ({t})src;") } else { "dst = src;".into() };
                let src = format!("{f} src; {t} dst; int main() {{ {body} return 0; }}");
                behavior += 1;
                check(accepts(&src) == table[r][c], || format!("checker disagrees on {name} {f} -> {t}"))?;
            }
        }
    }
    Ok(format!("{pairs} table pairs, {behavior} checked through the compiler"))
}

const MATRIX_SUM: &str = "int main()
{
   const int dimx = 4;
   const int dimy = 4;
   const int size_per_node = dimx*dimy;

   float m1[dimx][dimy], m2[dimx][dimy], m3[dimx][dimy];
   distributed_load(m1, first, size_per_node);
   distributed_load(m2, second, size_per_node);
   for (int i=0; i<dimx; i++)
     for (int j=0; j<dimy; j++)
       m3[i][j] = m1[i][j] + m2[i][j];
   distributed_store(m3, sum, size_per_node);
   return 0;
}";

fn criterion_matrix_sum() -> Outcome {
    let c = build(MATRIX_SUM);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // Quarter-integers below 2^10 add exactly in binary32.
    let mut matrix = || -> Vec<f32> { (0..64).map(|_| rng.gen_range(-4096..4096) as f32 * 0.25).collect() };
    let (a, b) = (matrix(), matrix());
    let mut cfg = config("2x2");
    for (name, data) in [("first", &a), ("second", &b)] {
        let path = dir.path().join(name);
        let s = slice(data, &[2, 2], &[4, 4]).map_err(|e| e.to_string())?;
        DistFile::from_lanes(NpKind::Float, 4, 16, &s)
            .and_then(|f| f.write(&path))
            .map_err(|e| e.to_string())?;
        cfg.bindings.insert(name.into(), path);
    }
    let out = dir.path().join("sum");
    cfg.bindings.insert("sum".into(), out.clone());
    let mut m = Machine::new(c.ir.clone(), cfg).map_err(|e| e.to_string())?;
    m.run().map_err(|t| t.to_string())?;
    let f = DistFile::read(&out, Some(NpKind::Float)).map_err(|e| e.to_string())?;
    let got = unslice(&f.to_lanes::<f32>().map_err(|e| e.to_string())?, &[2, 2], &[4, 4]).map_err(|e| e.to_string())?;
    let mut want = vec![0f32; 64];
    for r in 0..8 {
        for col in 0..8 {
            want[r * 8 + col] = a[r * 8 + col] + b[r * 8 + col];
        }
    }
    check(got.iter().map(|v| v.to_bits()).eq(want.iter().map(|v| v.to_bits())), || "sum differs".into())?;
    Ok("8x8 sum over 2x2 nodes bit-exact".into())
}

fn criterion_where() -> Outcome {
    let c = build(
        "int i;
         double x,y;
         int main() {
           where (x != 0.0)
           { y = 1/x;
           }
           elsewhere
           { y = 0;
           }
           return 0;
         }",
    );
    let xs = [0.0f64, 3.0, -0.0, 0.125, 7.0, 0.0, -2.5, 1e-300];
    let mut m = machine(&c, "2x4");
    set_np(&mut m, global(&c, "x"), &xs);
    set_np(&mut m, global(&c, "y"), &[f64::NAN; 8]);
    m.run().map_err(|t| t.to_string())?;
    let got = get_np::<f64>(&m, global(&c, "y"));
    for (node, (x, y)) in xs.iter().zip(&got).enumerate() {
        let want = if *x != 0.0 { 1.0 / x } else { 0.0 };
        check(y.to_bits() == want.to_bits(), || format!("node {node}: y = {y}, expected {want}"))?;
    }
    Ok(format!("{} lanes, {} zero", xs.len(), xs.iter().filter(|x| **x == 0.0).count()))
}

fn criterion_neighbor() -> Outcome {
    let c = build(
        "float r, back, v[100], t[100];
         int main() {
           r = v[3+XPLUS_NP];
           t[3] = r;
           back = t[3+XMINUS_NP];
           return 0;
         }",
    );
    let mut m = machine(&c, "4x1");
    let vals = [1.5f32, -2.0, 8.25, 100.0];
    set_np(&mut m, global(&c, "v") + 3, &vals);
    m.run().map_err(|t| t.to_string())?;
    let r = get_np::<f32>(&m, global(&c, "r"));
    for i in 0..4 {
        check(r[i] == vals[(i + 1) % 4], || format!("node {i}: r = {}", r[i]))?;
    }
    check(get_np::<f32>(&m, global(&c, "back")) == vals, || "XPLUS then XMINUS is not the identity".into())?;
    Ok("4x1 torus shift and inverse".into())
}

fn criterion_remote_method() -> Outcome {
    let c = build(
        "class C
         {public:
           float x;
           void f(float y) { x = y; }
         };
         float a;
         C v[10];
         int main()
         {
           v[0+XPLUS_NP].f(a);
           return 0;
         }",
    );
    let mut checked = 0;
    for topo in ["4", "2x2", "3x2"] {
        let t: Topology = topo.parse().unwrap();
        let mut m = machine(&c, topo);
        let a: Vec<f32> = (0..t.nodes()).map(|i| i as f32 * 1.25 + 0.5).collect();
        set_np(&mut m, global(&c, "a"), &a);
        m.run().map_err(|t| t.to_string())?;
        let x = get_np::<f32>(&m, global(&c, "v"));
        for (node, got) in x.iter().enumerate() {
            let from = t.neighbor(node, 0, -1);
            check(got.to_bits() == a[from].to_bits(), || format!("{topo} node {node}: x = {got}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} nodes over 3 topologies"))
}

fn criterion_localoffset() -> Outcome {
    let c = build(
        "int i;
         localint li;
         localint ids[1];
         float r, spill[8], a[100];
         int main() {
           distributed_load(ids, node_ids, 1);
           li = ids[0];
           i = 17;
           localoffset(li);
           r = a[i];
           localoffset(0);
           return 0;
         }",
    );
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("ids");
    let ids: Vec<i32> = (0..8).collect();
    DistFile::from_lanes(NpKind::LocalInt, 8, 1, &ids)
        .and_then(|f| f.write(&path))
        .map_err(|e| e.to_string())?;
    let mut cfg = config("2x4");
    cfg.bindings.insert("node_ids".into(), path);
    let mut m = Machine::new(c.ir.clone(), cfg).map_err(|e| e.to_string())?;
    let a = global(&c, "a");
    for node in 0..8 {
        for k in 0..100 {
            let v = (node * 1000 + k) as f32;
            m.state_mut().np_mem[node][(a + k as u32) as usize] = v.to_bits();
        }
    }
    m.run().map_err(|t| t.to_string())?;
    let r = global(&c, "r");
    for node in 0..8usize {
        // Both the load of a[i] and the store into r are displaced by li.
        let load = (a + 17 + node as u32) as usize;
        let store = (r + node as u32) as usize;
        let mem = &m.state().np_mem[node];
        check(mem[store] == mem[load], || format!("node {node}: word {store} != a[{}]", 17 + node))?;
        check(f32::from_bits(mem[store]) == (node * 1000 + 17 + node) as f32, || format!("node {node}: wrong element"))?;
    }
    Ok("8 nodes, li = node id".into())
}

const CORPUS: &[&str] = &[
    "class Mixed { int a; float x; public: Mixed (int aa, float xx) : a(aa), x(xx) {}; };
     int main() { Mixed m(1, 2.0); return 0; }",
    "struct P { float x, y; int tag; }; P ps[4]; int main() { ps[2].x = 1; ps[2].tag = 3; return 0; }",
    "struct Q { double d; localint k; int n; int *p; }; Q q; int main() { q.n = 1; q.d = q.k; return 0; }",
    "union U { float f; localint i; }; U u; int main() { u.f = 2.5; return 0; }",
    "union W { int a; int *p; }; W w; float pad; int main() { w.a = 3; return 0; }",
    "struct A { int a; float x; }; struct B : A { double y; int b; }; B b; int main() { b.a = 1; b.y = 2; return 0; }",
    "struct In { float f; int i; }; struct Out { In a, b; complex z; }; Out o; int main() { o.b.f = 1; o.z = 2; return 0; }",
    "class V { vector v; public: void set(float s) { v = s; } }; V vs[3]; int main() { vs[1].set(4.0f); return 0; }",
    "float m[3][5]; int n[7]; double d; int main() { m[2][4] = n[6]; return 0; }",
    "struct S { int only; }; S s[5]; localint li; int main() { s[4].only = 9; return 0; }",
    "struct T { float only; }; T t[5]; int main() { t[4].only = 9; return 0; }",
    "struct R { int a; float b; int c; double d; localint e; }; R r[2]; int main() { r[1].d = r[0].b; return 0; }",
    "class K { int n; float w[4]; public: float sum() { return w[0] + w[1] + w[2] + w[3]; } }; K k; float s;
     int main() { s = k.sum(); return 0; }",
    "int f(int a) { float t; t = a; return a + 1; } float g; int main() { g = f(2); return 0; }",
    "struct N { complex c; vector v; int i; }; N arr[2]; int main() { arr[0].c = arr[1].c; return 0; }",
    "struct H { int *p; float *q; }; H h; float x; int main() { h.q = &x; *h.q = 3; return 0; }",
    "struct Base { double d; }; class D : public Base { public: int e; localint l; }; D d; int main() { d.e = 2; return 0; }",
    "struct G { int a[3]; float b[3]; }; G g[2]; int main() { g[1].b[2] = g[1].a[1]; return 0; }",
    "localint a, b; int c; float f; double dd; complex z; vector v; int main() { a = c; f = a; return 0; }",
    "struct E { float x; int y; }; int main() { E e; E arr[3]; e.x = 1; arr[2] = e; return 0; }",
    "union M { double d; complex c; float f; }; M m; int main() { m.d = 1.5; return 0; }",
    "struct L { localint li; int i; }; L l; int main() { l.i = 3; l.li = l.i; return 0; }",
];

/// Independent size oracle: (cp words, np words).
fn oracle_size(ty: &TypeDesc, p: &TypedProgram) -> (u32, u32) {
    match ty {
        TypeDesc::Int => (1, 0),
        TypeDesc::Ptr(t) => {
            let mut inner = &**t;
            while let TypeDesc::Array(e, _) = inner {
                inner = e;
            }
            (if matches!(inner, TypeDesc::Record(_)) { 2 } else { 1 }, 0)
        }
        TypeDesc::Float | TypeDesc::LocalInt => (0, 1),
        TypeDesc::Double | TypeDesc::Vector | TypeDesc::Complex => (0, 2),
        TypeDesc::Array(e, n) => {
            let (c, q) = oracle_size(e, p);
            (c * n, q * n)
        }
        TypeDesc::Record(id) => {
            let r = &p.records[*id];
            let fields = r.fields.iter().map(|f| oracle_size(&f.ty, p));
            let base = r.base.map(|b| oracle_size(&TypeDesc::Record(b), p)).unwrap_or((0, 0));
            if r.kind == simdcpp::frontend::ast::RecordKind::Union {
                fields.fold(base, |a, b| (a.0.max(b.0), a.1.max(b.1)))
            } else {
                fields.fold(base, |a, b| (a.0 + b.0, a.1 + b.1))
            }
        }
        TypeDesc::Void | TypeDesc::Function(..) => (0, 0),
    }
}

fn layout_signature(dump: &str) -> Vec<(String, String)> {
    dump.lines()
        .map(|l| {
            let (node, rest) = l.split_once(' ').unwrap();
            (node.to_string(), rest.split(' ').take(2).collect::<Vec<_>>().join(" "))
        })
        .collect()
}

fn criterion_allocation() -> Outcome {
    let mut records = 0;
    for (n, src) in CORPUS.iter().enumerate() {
        let small = compile_with(src, CP_WORDS, NP_WORDS).map_err(|e| format!("program {n}: {e}"))?;
        let big = compile_with(src, 65536, 65536).map_err(|e| format!("program {n}: {e}"))?;
        let np = small.layout.dump_np(&small.typed);
        check(np == big.layout.dump_np(&big.typed), || format!("program {n}: NP layout depends on memory size"))?;
        let mut per_topology: Option<Vec<String>> = None;
        for topo in ["1", "4", "2x2", "3x2x1"] {
            let mut m = machine(&small, topo);
            m.run().map_err(|t| format!("program {n} on {topo}: {t}"))?;
            let sig = layout_signature(&m.dump_state());
            let nodes = topo.parse::<Topology>().unwrap().nodes();
            let mut cells: Vec<Vec<String>> = vec![Vec::new(); nodes];
            for (node, cell) in sig.iter().filter(|(n, _)| n != "cp") {
                cells[node.parse::<usize>().unwrap()].push(cell.clone());
            }
            check(cells.windows(2).all(|w| w[0] == w[1]), || format!("program {n}: cells differ across nodes on {topo}"))?;
            match &per_topology {
                None => per_topology = Some(cells[0].clone()),
                Some(first) => check(*first == cells[0], || format!("program {n}: cells differ on {topo}"))?,
            }
        }
        for (id, r) in small.typed.records.iter().enumerate() {
            let l = small.layout.record(id);
            let (cp, np) = oracle_size(&TypeDesc::Record(id), &small.typed);
            check((l.cp_size, l.np_size) == (cp, np), || {
                format!("program {n}: {} is cp {} np {}, expected cp {cp} np {np}", r.name, l.cp_size, l.np_size)
            })?;
            records += 1;
        }
    }
    Ok(format!("{} programs, {records} records, 4 topologies", CORPUS.len()))
}

/// Reference scalar interpreter for straight-line NP arithmetic.
mod scalar_oracle {
    use rand::Rng;

    #[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
    pub enum Ty {
        Int,
        LocalInt,
        Float,
        Double,
    }

    #[derive(Clone, Copy, Debug)]
    pub enum Val {
        I(i32),
        L(i32),
        F(f32),
        D(f64),
    }

    impl Val {
        fn ty(self) -> Ty {
            match self {
                Val::I(_) => Ty::Int,
                Val::L(_) => Ty::LocalInt,
                Val::F(_) => Ty::Float,
                Val::D(_) => Ty::Double,
            }
        }

        fn trunc(x: f64) -> i32 {
            if x.is_nan() {
                0
            } else if x >= 2147483647.0 {
                i32::MAX
            } else if x <= -2147483648.0 {
                i32::MIN
            } else {
                x.trunc() as i32
            }
        }

        pub fn to(self, t: Ty) -> Val {
            match (self, t) {
                (Val::I(v) | Val::L(v), Ty::Int) => Val::I(v),
                (Val::I(v) | Val::L(v), Ty::LocalInt) => Val::L(v),
                (Val::I(v) | Val::L(v), Ty::Float) => Val::F(v as f32),
                (Val::I(v) | Val::L(v), Ty::Double) => Val::D(v as f64),
                (Val::F(v), Ty::Float) => Val::F(v),
                (Val::F(v), Ty::Double) => Val::D(v as f64),
                (Val::F(v), _) => Val::L(Self::trunc(v as f64)),
                (Val::D(v), Ty::Float) => Val::F(v as f32),
                (Val::D(v), Ty::Double) => Val::D(v),
                (Val::D(v), _) => Val::L(Self::trunc(v)),
            }
        }

        pub fn bits(self) -> u64 {
            match self {
                Val::I(v) | Val::L(v) => v as u32 as u64,
                Val::F(v) => v.to_bits() as u64,
                Val::D(v) => v.to_bits(),
            }
        }
    }

    #[derive(Clone, Debug)]
    pub enum E {
        Var(usize),
        Int(i32),
        Dbl(f64),
        Flt(f32),
        Neg(Box<E>),
        Bin(char, Box<E>, Box<E>),
    }

    pub const VARS: [(&str, Ty); 9] = [
        ("f0", Ty::Float),
        ("f1", Ty::Float),
        ("f2", Ty::Float),
        ("d0", Ty::Double),
        ("d1", Ty::Double),
        ("d2", Ty::Double),
        ("l0", Ty::LocalInt),
        ("l1", Ty::LocalInt),
        ("l2", Ty::LocalInt),
    ];

    pub fn eval(e: &E, env: &[Val]) -> Result<Val, String> {
        Ok(match e {
            E::Var(i) => env[*i],
            E::Int(v) => Val::I(*v),
            E::Dbl(v) => Val::D(*v),
            E::Flt(v) => Val::F(*v),
            E::Neg(x) => match eval(x, env)? {
                Val::I(v) => Val::I(v.wrapping_neg()),
                Val::L(v) => Val::L(v.wrapping_neg()),
                Val::F(v) => Val::F(-v),
                Val::D(v) => Val::D(-v),
            },
            E::Bin(op, a, b) => {
                let (a, b) = (eval(a, env)?, eval(b, env)?);
                let t = if a.ty() > b.ty() { a.ty() } else { b.ty() };
                let (a, b) = (a.to(t), b.to(t));
                let cmp = |r: bool| if t == Ty::Int { Val::I(r as i32) } else { Val::L(r as i32) };
                match (*op, a, b) {
                    ('<', Val::I(x) | Val::L(x), Val::I(y) | Val::L(y)) => cmp(x < y),
                    ('<', Val::F(x), Val::F(y)) => cmp(x < y),
                    ('<', Val::D(x), Val::D(y)) => cmp(x < y),
                    ('=', Val::I(x) | Val::L(x), Val::I(y) | Val::L(y)) => cmp(x == y),
                    ('=', Val::F(x), Val::F(y)) => cmp(x == y),
                    ('=', Val::D(x), Val::D(y)) => cmp(x == y),
                    (op, Val::I(x), Val::I(y)) => Val::I(int(op, x, y)?),
                    (op, Val::L(x), Val::L(y)) => Val::L(int(op, x, y)?),
                    (op, Val::F(x), Val::F(y)) => Val::F(match op {
                        '+' => x + y,
                        '-' => x - y,
                        '*' => x * y,
                        _ => x / y,
                    }),
                    (op, Val::D(x), Val::D(y)) => Val::D(match op {
                        '+' => x + y,
                        '-' => x - y,
                        '*' => x * y,
                        _ => x / y,
                    }),
                    _ => unreachable!(),
                }
            }
        })
    }

    fn int(op: char, x: i32, y: i32) -> Result<i32, String> {
        Ok(match op {
            '+' => x.wrapping_add(y),
            '-' => x.wrapping_sub(y),
            '*' => x.wrapping_mul(y),
            _ if y == 0 => return Err("division by zero".into()),
            _ => x.wrapping_div(y),
        })
    }

    pub fn source(e: &E) -> String {
        match e {
            E::Var(i) => VARS[*i].0.to_string(),
            E::Int(v) => v.to_string(),
            E::Dbl(v) => format!("{v:?}"),
            E::Flt(v) => format!("{v:?}f"),
            E::Neg(x) => format!("-({})", source(x)),
            E::Bin('=', a, b) => format!("({} == {})", source(a), source(b)),
            E::Bin(op, a, b) => format!("({} {op} {})", source(a), source(b)),
        }
    }

    pub fn gen(rng: &mut impl Rng, depth: u32) -> E {
        if depth == 0 || rng.gen_ratio(1, 4) {
            return match rng.gen_range(0..10) {
                0..=5 => E::Var(rng.gen_range(0..VARS.len())),
                6 | 7 => E::Int(rng.gen_range(1..20)),
                8 => E::Dbl(rng.gen_range(-64..64) as f64 * 0.125),
                _ => E::Flt(rng.gen_range(-64..64) as f32 * 0.375),
            };
        }
        if rng.gen_ratio(1, 8) {
            return E::Neg(Box::new(gen(rng, depth - 1)));
        }
        let op = ['+', '-', '*', '/', '<', '='][rng.gen_range(0..6)];
        E::Bin(op, Box::new(gen(rng, depth - 1)), Box::new(gen(rng, depth - 1)))
    }
}

fn criterion_scalar_oracle() -> Outcome {
    use scalar_oracle::*;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut traps, mut stmts) = (0, 0);
    for n in 0..100 {
        let mut env: Vec<Val> = VARS.iter().map(|(_, t)| Val::I(0).to(*t)).collect();
        let mut body = String::new();
        for (i, (name, t)) in VARS.iter().enumerate() {
            let init = if *t == Ty::LocalInt {
                E::Int(rng.gen_range(-50..50))
            } else {
                E::Dbl(rng.gen_range(-400..400) as f64 * 0.0625)
            };
            body += &format!("  {name} = {};\n", source(&init));
            env[i] = eval(&init, &env).unwrap().to(*t);
        }
        let mut trap = None;
        for _ in 0..rng.gen_range(4..12) {
            let target = rng.gen_range(0..VARS.len());
            let e = gen(&mut rng, 3);
            body += &format!("  {} = {};\n", VARS[target].0, source(&e));
            stmts += 1;
            if trap.is_none() {
                match eval(&e, &env) {
                    Ok(v) => env[target] = v.to(VARS[target].1),
                    Err(msg) => trap = Some(msg),
                }
            }
        }
        let decls = "float f0, f1, f2; double d0, d1, d2; localint l0, l1, l2;\n";
        let src = format!("{decls}int main() {{\n{body}  return 0;\n}}\n");
        let c = compile_with(&src, CP_WORDS, NP_WORDS).map_err(|e| format!("program {n}: {e}\n{src}"))?;
        let mut m = machine(&c, "1");
        match (m.run(), &trap) {
            (Ok(()), None) => {}
            (Err(_), Some(_)) => {
                traps += 1;
                continue;
            }
            (r, t) => return Err(format!("program {n}: machine {r:?}, oracle trap {t:?}\n{src}")),
        }
        for (i, (name, t)) in VARS.iter().enumerate() {
            let addr = global(&c, name);
            let got = match t {
                Ty::Double => get_np::<f64>(&m, addr)[0].to_bits(),
                _ => get_np::<i32>(&m, addr)[0] as u32 as u64,
            };
            check(got == env[i].bits(), || format!("program {n}: {name} = {got:#x}, oracle {:?}\n{src}", env[i]))?;
        }
    }
    Ok(format!("100 programs, {stmts} statements, {traps} agreed traps"))
}

fn roundtrip_kind<T: Lane>(kind: NpKind, rng: &mut ChaCha8Rng, gen: impl Fn(&mut ChaCha8Rng) -> T) -> Result<(), String> {
    let nodes = rng.gen_range(1..6u32);
    let per = rng.gen_range(0..20u32);
    let values: Vec<T> = (0..nodes * per).map(|_| gen(rng)).collect();
    let f = DistFile::from_lanes(kind, nodes, per, &values).map_err(|e| e.to_string())?;
    let bytes = f.encode();
    check(bytes.len() == HEADER_LEN + values.len() * T::BYTES, || format!("{kind}: payload size"))?;
    let back = DistFile::decode(&bytes, Some(kind)).map_err(|e| e.to_string())?;
    let lanes = back.to_lanes::<T>().map_err(|e| e.to_string())?;
    let rebuilt = DistFile::from_lanes(kind, nodes, per, &lanes).map_err(|e| e.to_string())?;
    check(back.words == f.words && rebuilt.words == f.words, || format!("{kind}: values differ"))?;

    // Through node memory: load into a fresh machine image and store back.
    let mut mem = vec![vec![0u32; (per * kind.words() + 8) as usize]; nodes as usize];
    distributed_load(&mut mem, 5, per, &back).map_err(|e| e.to_string())?;
    let again = distributed_store(&mem, 5, per, kind).map_err(|e| e.to_string())?;
    check(again.encode() == bytes, || format!("{kind}: memory round trip differs"))?;

    for pos in (0..8).chain([16]) {
        for v in 0..=255u8 {
            if v == bytes[pos] {
                continue;
            }
            let mut bad = bytes.clone();
            bad[pos] = v;
            check(DistFile::decode(&bad, Some(kind)).is_err(), || format!("{kind}: byte {pos} = {v} accepted"))?;
        }
    }
    for cut in [0, 1, HEADER_LEN - 1] {
        check(DistFile::decode(&bytes[..cut], None).is_err(), || format!("{kind}: truncated header accepted"))?;
    }
    if bytes.len() > HEADER_LEN {
        check(DistFile::decode(&bytes[..bytes.len() - 1], None).is_err(), || format!("{kind}: short payload accepted"))?;
    }
    Ok(())
}

fn criterion_distfile() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let bits32 = |r: &mut ChaCha8Rng| f32::from_bits(r.gen());
    for _ in 0..20 {
        roundtrip_kind(NpKind::Float, &mut rng, bits32)?;
        roundtrip_kind(NpKind::Double, &mut rng, |r| f64::from_bits(r.gen()))?;
        roundtrip_kind(NpKind::LocalInt, &mut rng, |r| r.gen::<i32>())?;
        roundtrip_kind(NpKind::Vector, &mut rng, |r| Pair::new(bits32(r), bits32(r)))?;
        roundtrip_kind(NpKind::Complex, &mut rng, |r| Pair::new(bits32(r), bits32(r)))?;
    }
    Ok("5 kinds x 20 random files, header fuzz on magic/version/kind".into())
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, u64);
    let criteria: [Criterion; 9] = [
        ("1 promotion and cast tables", criterion_tables, 1),
        ("2 distributed matrix sum", criterion_matrix_sum, 1),
        ("3 where/elsewhere reciprocal", criterion_where, 1),
        ("4 neighbor read and inverse", criterion_neighbor, 1),
        ("5 remote method invocation", criterion_remote_method, 1),
        ("6 localoffset addressing", criterion_localoffset, 1),
        ("7 allocation invariant", criterion_allocation, 5),
        ("8 scalar-oracle equivalence", criterion_scalar_oracle, 30),
        ("9 data file round trip and fuzz", criterion_distfile, 10),
    ];
    let mut failed = 0;
    for (name, run, bound) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if took <= Duration::from_secs(bound) {
                Ok(detail)
            } else {
                Err(format!("took {took:.2?}, bound {bound}s"))
            }
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name} ({took:.2?} <= {bound}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} ({took:.2?}): {why}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
