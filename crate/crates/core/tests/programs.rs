mod common;

use common::*;

#[test]
fn where_reciprocal() {
    let c = build(
        "double x, y;
         int main() {
           where (x != 0.0) { y = 1/x; } elsewhere { y = 0; }
           return 0;
         }",
    );
    let mut m = machine(&c, "4");
    let xs = [2.0f64, 0.0, -4.0, 0.0];
    set_np(&mut m, global(&c, "x"), &xs);
    set_np(&mut m, global(&c, "y"), &[9.0f64; 4]);
    m.run().unwrap();
    assert_eq!(get_np::<f64>(&m, global(&c, "y")), vec![0.5, 0.0, -0.25, 0.0]);
}

#[test]
fn neighbor_read_and_round_trip() {
    let c = build(
        "float r, back, v[10];
         int main() {
           r = v[3+XPLUS_NP];
           v[4] = r;
           back = v[4+XMINUS_NP];
           return 0;
         }",
    );
    let mut m = machine(&c, "4x1");
    let v = global(&c, "v");
    set_np(&mut m, v + 3, &[10.0f32, 11.0, 12.0, 13.0]);
    m.run().unwrap();
    assert_eq!(get_np::<f32>(&m, global(&c, "r")), vec![11.0, 12.0, 13.0, 10.0]);
    assert_eq!(get_np::<f32>(&m, global(&c, "back")), vec![10.0, 11.0, 12.0, 13.0]);
}

#[test]
fn remote_method_invocation() {
    let c = build(
        "class C
         {public:
           float x;
           void f(float y) { x = y; }
         };
         int main()
         { float a;
           C v[10];
           a = 1.5;
           v[0+XPLUS_NP].f(a);
           return 0;
         }",
    );
    let m = machine(&c, "4");
    drop(m);
}

#[test]
fn remote_method_moves_values() {
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
    let mut m = machine(&c, "4");
    set_np(&mut m, global(&c, "a"), &[1.0f32, 2.0, 3.0, 4.0]);
    m.run().unwrap();
    // node m receives a from its X-minus neighbor
    assert_eq!(get_np::<f32>(&m, global(&c, "v")), vec![4.0, 1.0, 2.0, 3.0]);
}

#[test]
fn localoffset_reads_shifted_elements() {
    let c = build(
        "int i;
         localint li;
         float r, pad[4], a[100];
         int main() {
           i = 5;
           localoffset(li);
           r = a[i];
           localoffset(0);
           return 0;
         }",
    );
    let mut m = machine(&c, "2x2");
    set_np(&mut m, global(&c, "li"), &[0i32, 1, 2, 3]);
    let a = global(&c, "a");
    for node in 0..4 {
        for k in 0..100u32 {
            m.state_mut().np_mem[node][(a + k) as usize] = (k as f32 * 10.0).to_bits();
        }
    }
    m.run().unwrap();
    // The offset register also applies to the store into r.
    let r = global(&c, "r");
    let got: Vec<f32> = (0..4).map(|k| get_np::<f32>(&m, r + k as u32)[k]).collect();
    assert_eq!(got, vec![50.0, 60.0, 70.0, 80.0]);
}

#[test]
fn nested_where_and_reductions() {
    let c = build(
        "localint k, out;
         int n_any, n_all, n_none;
         int main() {
           where (k > 0) {
             where (k > 2) { out = 2; } elsewhere { out = 1; }
           } elsewhere {
             out = 0 - 1;
           }
           if (any(k > 2)) n_any = 1;
           if (all(k > 2)) n_all = 1;
           if (none(k > 10)) n_none = 1;
           return 0;
         }",
    );
    let mut m = machine(&c, "4");
    set_np(&mut m, global(&c, "k"), &[0i32, 1, 3, 5]);
    m.run().unwrap();
    assert_eq!(get_np::<i32>(&m, global(&c, "out")), vec![-1, 1, 2, 2]);
    assert_eq!(get_cp(&m, global(&c, "n_any")), 1);
    assert_eq!(get_cp(&m, global(&c, "n_all")), 0);
    assert_eq!(get_cp(&m, global(&c, "n_none")), 1);
}

#[test]
fn functions_loops_and_recursion() {
    let c = build(
        "int fact(int n) { if (n <= 1) return 1; return n * fact(n - 1); }
         float axpy(float a, float x, float y) { return a * x + y; }
         int f5;
         float acc, xs[8];
         int main() {
           f5 = fact(5);
           for (int i = 0; i < 8; i++) xs[i] = i;
           int j = 0;
           while (j < 8) { acc = axpy(2.0, xs[j], acc); j += 1; }
           return 0;
         }",
    );
    let mut m = machine(&c, "2");
    m.run().unwrap();
    assert_eq!(get_cp(&m, global(&c, "f5")), 120);
    assert_eq!(get_np::<f32>(&m, global(&c, "acc")), vec![56.0, 56.0]);
}

#[test]
fn mixed_record_constructor_and_fields() {
    let c = build(
        "class Mixed {
            int a;
            float x;
         public:
            Mixed (int aa, float xx) : a(aa), x(xx) {};
            float get() { return x * a; }
         };
         float out;
         int main() {
           Mixed m(3, 1.5);
           out = m.get();
           return 0;
         }",
    );
    let mut m = machine(&c, "1");
    m.run().unwrap();
    assert_eq!(get_np::<f32>(&m, global(&c, "out")), vec![4.5]);
}

#[test]
fn pointers_and_compound_ops() {
    let c = build(
        "double d[4];
         double *p;
         complex z;
         vector w;
         localint q;
         int main() {
           p = d;
           for (int i = 0; i < 4; i++) { *p = i; p++; }
           d[1] += 0.5;
           d[2] *= d[3];
           z = 2;
           z = z * z;
           w = 3;
           w = w + w;
           q = 7;
           q %= 4;
           q = q << 2;
           return 0;
         }",
    );
    let mut m = machine(&c, "1");
    m.run().unwrap();
    let d = global(&c, "d");
    let got: Vec<f64> = (0..4).map(|i| get_np::<f64>(&m, d + 2 * i)[0]).collect();
    assert_eq!(got, vec![0.0, 1.5, 6.0, 3.0]);
    assert_eq!(get_np::<simdcpp::Pair<f32>>(&m, global(&c, "z"))[0], simdcpp::Pair::new(4.0, 0.0));
    assert_eq!(get_np::<simdcpp::Pair<f32>>(&m, global(&c, "w"))[0], simdcpp::Pair::new(6.0, 6.0));
    assert_eq!(get_np::<i32>(&m, global(&c, "q"))[0], 12);
}

#[test]
fn matrix_sum_with_data_files() {
    use simdcpp::runtime_io::{slice, unslice, DistFile};
    use simdcpp::NpKind;
    let c = build(
        "int main()
         {
           const int dimx = 4;
           const int dimy = 4;
           const int size_per_node = dimx*dimy;
           float m1[dimx][dimy], m2[dimx][dimy], m3[dimx][dimy];
           distributed_load(m1, in1, size_per_node);
           distributed_load(m2, in2, size_per_node);
           for (int i=0; i<dimx; i++)
             for (int j=0; j<dimy; j++)
               m3[i][j] = m1[i][j] + m2[i][j];
           distributed_store(m3, out, size_per_node);
           return 0;
         }",
    );
    let dir = tempfile::tempdir().unwrap();
    let a: Vec<f32> = (0..64).map(|i| i as f32 * 0.5).collect();
    let b: Vec<f32> = (0..64).map(|i| 100.0 - i as f32).collect();
    let mut cfg = config("2x2");
    for (name, data) in [("in1", &a), ("in2", &b)] {
        let path = dir.path().join(name);
        let s = slice(data, &[2, 2], &[4, 4]).unwrap();
        DistFile::from_lanes(NpKind::Float, 4, 16, &s).unwrap().write(&path).unwrap();
        cfg.bindings.insert(name.into(), path);
    }
    let out = dir.path().join("out");
    cfg.bindings.insert("out".into(), out.clone());
    let mut m = simdcpp::Machine::new(c.ir.clone(), cfg).unwrap();
    m.run().unwrap();
    let f = DistFile::read(&out, Some(NpKind::Float)).unwrap();
    let sum = unslice(&f.to_lanes::<f32>().unwrap(), &[2, 2], &[4, 4]).unwrap();
    let want: Vec<f32> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    assert_eq!(sum, want);
}

#[test]
fn record_copy_respects_mask_and_neighbors() {
    let c = build(
        "struct E { float x; int y; double d; };
         E src, dst, far;
         localint k;
         int main() {
           src.x = 2.5; src.y = 7; src.d = 0.25;
           where (k > 0) { dst = src; }
           far = src;
           far.x = k;
           E local;
           local = far;
           dst.y = local.y;
           return 0;
         }",
    );
    let mut m = machine(&c, "4");
    set_np(&mut m, global(&c, "k"), &[0i32, 1, 0, 1]);
    m.run().unwrap();
    let dst = global(&c, "dst");
    assert_eq!(get_np::<f32>(&m, dst), vec![0.0, 2.5, 0.0, 2.5]);
    assert_eq!(get_np::<f64>(&m, dst + 1), vec![0.0, 0.25, 0.0, 0.25]);
    // The CP part is shared, so it is copied regardless of the mask.
    assert_eq!(get_cp(&m, global_cp(&c, "dst")), 7);
    assert_eq!(get_np::<f32>(&m, global(&c, "far")), vec![0.0, 1.0, 0.0, 1.0]);
}

#[test]
fn record_copy_rejections() {
    for src in [
        "struct A { float x; }; struct B { float x; }; A a; B b; int main() { a = b; return 0; }",
        "struct A { float x; }; A a; int main() { a += a; return 0; }",
        "float v[3], w[3]; int main() { v = w; return 0; }",
    ] {
        assert!(simdcpp::compile(src).is_err(), "{src}");
    }
}
