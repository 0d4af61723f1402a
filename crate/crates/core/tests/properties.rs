mod common;

use proptest::prelude::*;

use common::*;
use simdcpp::frontend::ast::BinOp;
use simdcpp::lower::{neighbor_constant, Op};
use simdcpp::machine::{int_binop, reduce, resolve_address};
use simdcpp::runtime_io::{slice, unslice, DistFile};
use simdcpp::semantics::{binary_result_type, common_kind, promotion_allowed, Kind, ReduceKind, TypeDesc};
use simdcpp::{NpKind, Topology};

const ARITH: [Kind; 6] = [Kind::Int, Kind::LocalInt, Kind::Float, Kind::Double, Kind::Vector, Kind::Complex];

const OPS: [BinOp; 12] = [
    BinOp::Add,
    BinOp::Sub,
    BinOp::Mul,
    BinOp::Div,
    BinOp::Rem,
    BinOp::BitAnd,
    BinOp::Shl,
    BinOp::Lt,
    BinOp::Ge,
    BinOp::Eq,
    BinOp::Ne,
    BinOp::And,
];

fn topology() -> impl Strategy<Value = Topology> {
    prop::collection::vec(1usize..5, 1..4).prop_map(|d| Topology::new(d).unwrap())
}

fn np_kind() -> impl Strategy<Value = NpKind> {
    prop::sample::select(NpKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn common_kind_is_symmetric_and_reachable(a in prop::sample::select(ARITH.to_vec()), b in prop::sample::select(ARITH.to_vec())) {
        let ab = common_kind(a, b);
        prop_assert_eq!(ab.clone().ok(), common_kind(b, a).ok());
        if let Ok(k) = ab {
            prop_assert!(promotion_allowed(a, k));
            prop_assert!(promotion_allowed(b, k));
        }
    }

    #[test]
    fn binary_result_type_is_symmetric(
        a in prop::sample::select(ARITH.to_vec()),
        b in prop::sample::select(ARITH.to_vec()),
        op in prop::sample::select(OPS.to_vec()),
    ) {
        let ta = TypeDesc::from_kind(a).unwrap();
        let tb = TypeDesc::from_kind(b).unwrap();
        prop_assert_eq!(binary_result_type(op, &ta, &tb).ok(), binary_result_type(op, &tb, &ta).ok());
    }

    #[test]
    fn same_kind_operands_keep_their_kind(a in prop::sample::select(ARITH.to_vec())) {
        let t = TypeDesc::from_kind(a).unwrap();
        prop_assert_eq!(binary_result_type(BinOp::Add, &t, &t), Ok(t));
    }

    #[test]
    fn neighbor_is_a_bijection_with_inverse(topo in topology(), axis_pick in 0usize..3, sign in prop::sample::select(vec![1, -1])) {
        let axis = axis_pick % topo.rank();
        let n = topo.nodes();
        let mut hit = vec![false; n];
        for id in 0..n {
            let j = topo.neighbor(id, axis, sign);
            prop_assert!(!hit[j]);
            hit[j] = true;
            prop_assert_eq!(topo.neighbor(j, axis, -sign), id);
        }
        // Walking a full axis returns home.
        let mut id = 0;
        for _ in 0..topo.dims()[axis] {
            id = topo.neighbor(id, axis, sign);
        }
        prop_assert_eq!(id, 0);
    }

    #[test]
    fn neighbor_windows_resolve_to_neighbors(
        topo in topology(),
        axis_pick in 0usize..3,
        sign in prop::sample::select(vec![1, -1]),
        local in 0u32..256,
    ) {
        let np_words = 256;
        let axis = axis_pick % topo.rank();
        let c = neighbor_constant(axis as u32, sign, np_words, topo.rank()).unwrap();
        for node in 0..topo.nodes() {
            let got = resolve_address(&topo, np_words, node, i64::from(local) + c, 0).unwrap();
            prop_assert_eq!(got, (topo.neighbor(node, axis, sign), local));
        }
        let past = (2 * topo.rank() as i64 + 1) * i64::from(np_words);
        prop_assert!(resolve_address(&topo, np_words, 0, past, 0).is_err());
        prop_assert!(resolve_address(&topo, np_words, 0, 0, -1).is_err());
    }

    #[test]
    fn nested_masks_shrink_and_else_partitions(conds in prop::collection::vec(prop::collection::vec(any::<bool>(), 6), 1..5)) {
        let c = build("int main() { return 0; }");
        let mut m = machine(&c, "6");
        let s = m.state_mut();
        let mut parent = s.effective_mask().to_vec();
        for cond in conds {
            s.where_push(cond.clone());
            let then = s.effective_mask().to_vec();
            s.where_else().unwrap();
            let other = s.effective_mask().to_vec();
            for i in 0..6 {
                prop_assert!(!then[i] || parent[i]);
                prop_assert_eq!(then[i] || other[i], parent[i]);
                prop_assert!(!(then[i] && other[i]));
            }
            parent = other;
        }
    }

    #[test]
    fn reductions_agree(cond in prop::collection::vec(any::<bool>(), 8), mask in prop::collection::vec(any::<bool>(), 8)) {
        let any = reduce(ReduceKind::Any, &cond, &mask);
        prop_assert_eq!(reduce(ReduceKind::None, &cond, &mask), !any);
        let neg: Vec<bool> = cond.iter().map(|c| !c).collect();
        prop_assert_eq!(reduce(ReduceKind::All, &cond, &mask), !reduce(ReduceKind::Any, &neg, &mask));
        let off = vec![false; 8];
        prop_assert!(reduce(ReduceKind::All, &cond, &off));
        prop_assert!(!reduce(ReduceKind::Any, &cond, &off));
    }

    #[test]
    fn localint_ops_wrap(a in any::<i32>(), b in any::<i32>()) {
        prop_assert_eq!(int_binop(Op::Add, a, b), Some(a.wrapping_add(b)));
        prop_assert_eq!(int_binop(Op::Mul, a, b), Some(a.wrapping_mul(b)));
        prop_assert_eq!(int_binop(Op::Div, a, 0), None);
        prop_assert_eq!(int_binop(Op::Rem, a, 0), None);
        if b != 0 {
            let q = int_binop(Op::Div, a, b).unwrap();
            let r = int_binop(Op::Rem, a, b).unwrap();
            prop_assert_eq!(q.wrapping_mul(b).wrapping_add(r), a);
        }
    }

    #[test]
    fn dist_file_round_trips(kind in np_kind(), nodes in 1u32..6, per in 0u32..6, seed in any::<u64>()) {
        let n = (nodes * per * kind.words()) as usize;
        let words: Vec<u32> = (0..n as u64).map(|i| (seed ^ i.wrapping_mul(0x9e37_79b9)) as u32).collect();
        let f = DistFile::new(kind, nodes, per, words).unwrap();
        let back = DistFile::decode(&f.encode(), Some(kind)).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn dist_file_decode_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..64)) {
        let _ = DistFile::decode(&bytes, None);
    }

    #[test]
    fn truncated_dist_files_are_rejected(kind in np_kind(), per in 1u32..4, cut in 1usize..8) {
        let f = DistFile::new(kind, 2, per, vec![7; (2 * per * kind.words()) as usize]).unwrap();
        let bytes = f.encode();
        prop_assert!(DistFile::decode(&bytes[..bytes.len() - cut.min(bytes.len())], None).is_err());
    }

    #[test]
    fn unslice_inverts_slice(topo in prop::collection::vec(1usize..4, 1..3), extra in prop::collection::vec(1usize..4, 0..2), block_seed in prop::collection::vec(1usize..4, 3)) {
        let mut block: Vec<usize> = block_seed[..topo.len()].to_vec();
        block.extend(extra);
        let total: usize = topo.iter().zip(&block).map(|(t, b)| t * b).product::<usize>()
            * block[topo.len()..].iter().product::<usize>();
        let flat: Vec<usize> = (0..total).collect();
        let sliced = slice(&flat, &topo, &block).unwrap();
        // Node blocks are contiguous and each holds block-many elements.
        let per: usize = block.iter().product();
        prop_assert_eq!(sliced.len(), per * topo.iter().product::<usize>());
        prop_assert_eq!(unslice(&sliced, &topo, &block).unwrap(), flat);
    }

    #[test]
    fn compilation_is_deterministic(vals in prop::collection::vec(-50i32..50, 1..6)) {
        let body: String = vals.iter().enumerate().map(|(i, v)| format!("x = x * {v} + {i}; y = y + x;\n")).collect();
        let src = format!("int x; float y;\nint main() {{\n{body}return 0;\n}}\n");
        let a = build(&src);
        let b = build(&src);
        prop_assert_eq!(a.ir.to_json(), b.ir.to_json());
        prop_assert_eq!(a.ir.to_text(), b.ir.to_text());
    }
}
