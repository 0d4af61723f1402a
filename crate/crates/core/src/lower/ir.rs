//! Two-stream stack IR.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::NpKind;
use crate::semantics::ReduceKind;

pub const FORMAT_NAME: &str = "simdcpp-ir";
pub const FORMAT_VERSION: u32 = 1;

/// Binary operators shared by both streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// Logical and/or of two conditions, yielding 0 or 1.
    And,
    Or,
}

impl Op {
    pub fn name(self) -> &'static str {
        match self {
            Op::Add => "ADD",
            Op::Sub => "SUB",
            Op::Mul => "MUL",
            Op::Div => "DIV",
            Op::Rem => "REM",
            Op::BitAnd => "BITAND",
            Op::BitOr => "BITOR",
            Op::BitXor => "BITXOR",
            Op::Shl => "SHL",
            Op::Shr => "SHR",
            Op::Eq => "EQ",
            Op::Ne => "NE",
            Op::Lt => "LT",
            Op::Le => "LE",
            Op::Gt => "GT",
            Op::Ge => "GE",
            Op::And => "AND",
            Op::Or => "OR",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, Op::Eq | Op::Ne | Op::Lt | Op::Le | Op::Gt | Op::Ge)
    }
}

/// Control-processor instructions. Addresses and integers are words on
/// the CP operand stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CpOp {
    Push(i32),
    Pop,
    Dup,
    Swap,
    /// Copy the second word to the top.
    Over,
    /// Copy the word `n` below the top to the top.
    Pick(u32),
    /// Pop an address, push `n` words read from CP memory.
    Load(u32),
    /// Pop an address, then `n` words, and write them to CP memory.
    Store(u32),
    /// Like `Store` but leaves the value on the stack.
    StoreKeep(u32),
    /// Push `cp_fp + off`.
    Frame(u32),
    /// Push `np_fp + off`.
    NpFrame(u32),
    Bin(Op),
    Neg,
    Not,
    BitNot,
    /// Window-preserving index scale for NP element size `n`.
    Scale(u32),
    /// Pop index, then a `(cp, np)` handle; push the handle of element
    /// `index` in an array of records with the given part sizes.
    IndexHandle { cp: u32, np: u32 },
    /// Pop a handle, push `cp + off`.
    FieldCp(u32),
    /// Pop a handle, push `np + off`.
    FieldNp(u32),
    /// Pop a handle, push `(cp + cp_off, np + np_off)`.
    FieldHandle { cp: u32, np: u32 },
    /// Push the address offset of a neighbor window.
    Neighbor { axis: u32, sign: i32, named: bool },
    Jmp(u32),
    Jz(u32),
    Jnz(u32),
    Call(u32),
    /// Allocate the callee's CP and NP frames.
    Enter { cp: u32, np: u32 },
    Ret,
    Halt,
    /// Pop element count, then NP address; fill every node from a data file.
    DistLoad { binding: u32, kind: NpKind },
    /// Pop element count, then NP address; write every node to a data file.
    DistStore { binding: u32, kind: NpKind },
}

/// Numeric-processor instructions. Values are planes on the NP stack;
/// addresses come from the CP stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NpOp {
    /// Pop a CP address, push the plane read at it on every node.
    Load(NpKind),
    /// Pop a CP address and a plane; write active lanes.
    Store(NpKind),
    /// Like `Store` but leaves the plane on the stack.
    StoreKeep(NpKind),
    /// Pop the raw CP words of one value and replicate them.
    Bcast(NpKind),
    /// Pop a CP integer and replicate it converted to the kind.
    BcastInt(NpKind),
    Conv { from: NpKind, to: NpKind },
    Bin(Op, NpKind),
    Neg(NpKind),
    Not,
    BitNot,
    Dup,
    Drop,
    /// Push the nonzero lanes of the popped plane as a mask.
    WherePush(NpKind),
    WhereElse,
    WherePop,
    /// Pop a localint plane into the offset register of active lanes.
    SetLocalOffset,
    ClearLocalOffset,
    /// Pop a localint plane, push a CP 0/1 folded over active lanes.
    Reduce(ReduceKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Instr {
    Cp(CpOp),
    Np(NpOp),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    Cp,
    Np,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::Cp => "CP",
            Tag::Np => "NP",
        })
    }
}

impl Instr {
    pub fn tag(&self) -> Tag {
        match self {
            Instr::Cp(_) => Tag::Cp,
            Instr::Np(_) => Tag::Np,
        }
    }

    pub fn is_control(&self) -> bool {
        matches!(
            self,
            Instr::Cp(CpOp::Jmp(_) | CpOp::Jz(_) | CpOp::Jnz(_) | CpOp::Call(_) | CpOp::Ret | CpOp::Halt)
        )
    }

    /// Opcode mnemonic and operands.
    pub fn opcode(&self) -> String {
        match self {
            Instr::Cp(op) => match op {
                CpOp::Push(v) => format!("PUSH {v}"),
                CpOp::Pop => "POP".into(),
                CpOp::Dup => "DUP".into(),
                CpOp::Swap => "SWAP".into(),
                CpOp::Over => "OVER".into(),
                CpOp::Pick(n) => format!("PICK {n}"),
                CpOp::Load(n) => format!("LOAD {n}"),
                CpOp::Store(n) => format!("STORE {n}"),
                CpOp::StoreKeep(n) => format!("STOREK {n}"),
                CpOp::Frame(o) => format!("FRAME {o}"),
                CpOp::NpFrame(o) => format!("NPFRAME {o}"),
                CpOp::Bin(o) => o.name().into(),
                CpOp::Neg => "NEG".into(),
                CpOp::Not => "NOT".into(),
                CpOp::BitNot => "BITNOT".into(),
                CpOp::Scale(n) => format!("SCALE {n}"),
                CpOp::IndexHandle { cp, np } => format!("INDEXH {cp} {np}"),
                CpOp::FieldCp(o) => format!("FIELDCP {o}"),
                CpOp::FieldNp(o) => format!("FIELDNP {o}"),
                CpOp::FieldHandle { cp, np } => format!("FIELDH {cp} {np}"),
                CpOp::Neighbor { axis, sign, .. } => {
                    format!("NEIGHBOR {axis} {}", if *sign < 0 { '-' } else { '+' })
                }
                CpOp::Jmp(t) => format!("JMP {t}"),
                CpOp::Jz(t) => format!("JZ {t}"),
                CpOp::Jnz(t) => format!("JNZ {t}"),
                CpOp::Call(t) => format!("CALL {t}"),
                CpOp::Enter { cp, np } => format!("ENTER {cp} {np}"),
                CpOp::Ret => "RET".into(),
                CpOp::Halt => "HALT".into(),
                CpOp::DistLoad { binding, kind } => format!("DIST_LOAD {binding} {kind}"),
                CpOp::DistStore { binding, kind } => format!("DIST_STORE {binding} {kind}"),
            },
            Instr::Np(op) => match op {
                NpOp::Load(k) => format!("LOAD {k}"),
                NpOp::Store(k) => format!("STORE {k}"),
                NpOp::StoreKeep(k) => format!("STOREK {k}"),
                NpOp::Bcast(k) => format!("BROADCAST {k}"),
                NpOp::BcastInt(k) => format!("BROADCAST_INT {k}"),
                NpOp::Conv { from, to } => format!("CONV {from} {to}"),
                NpOp::Bin(o, k) => format!("{} {k}", o.name()),
                NpOp::Neg(k) => format!("NEG {k}"),
                NpOp::Not => "NOT".into(),
                NpOp::BitNot => "BITNOT".into(),
                NpOp::Dup => "DUP".into(),
                NpOp::Drop => "DROP".into(),
                NpOp::WherePush(k) => format!("WHERE_PUSH {k}"),
                NpOp::WhereElse => "WHERE_ELSE".into(),
                NpOp::WherePop => "WHERE_POP".into(),
                NpOp::SetLocalOffset => "SET_LOCAL_OFFSET".into(),
                NpOp::ClearLocalOffset => "CLEAR_LOCAL_OFFSET".into(),
                NpOp::Reduce(r) => format!("REDUCE {}", r.name()),
            },
        }
    }

    fn targets(&self) -> Option<u32> {
        match self {
            Instr::Cp(CpOp::Jmp(t) | CpOp::Jz(t) | CpOp::Jnz(t) | CpOp::Call(t)) => Some(*t),
            _ => None,
        }
    }
}

/// Static storage cell described for state dumps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub addr: u32,
    pub kind: CellKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    Int,
    Ptr,
    Np(NpKind),
}

impl CellKind {
    pub fn name(self) -> &'static str {
        match self {
            CellKind::Int => "int",
            CellKind::Ptr => "ptr",
            CellKind::Np(k) => k.name(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuncEntry {
    pub name: String,
    pub entry: u32,
    pub end: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrProgram {
    pub instrs: Vec<Instr>,
    pub functions: Vec<FuncEntry>,
    pub entry: u32,
    pub cp_static_size: u32,
    pub np_static_size: u32,
    /// Names of data files the program loads or stores, by binding index.
    pub bindings: Vec<String>,
    pub cp_cells: Vec<Cell>,
    pub np_cells: Vec<Cell>,
}

#[derive(Serialize, Deserialize)]
struct Container {
    format: String,
    version: u32,
    program: IrProgram,
}

#[derive(Debug, Error)]
pub enum IrFormatError {
    #[error("malformed IR file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not an IR file (format `{0}`)")]
    Format(String),
    #[error("unsupported IR version {0}")]
    Version(u32),
}

impl IrProgram {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&Container {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            program: self.clone(),
        })
        .expect("IR serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, IrFormatError> {
        let c: Container = serde_json::from_str(text)?;
        if c.format != FORMAT_NAME {
            return Err(IrFormatError::Format(c.format));
        }
        if c.version != FORMAT_VERSION {
            return Err(IrFormatError::Version(c.version));
        }
        Ok(c.program)
    }

    /// Text listing, one instruction per line as `idx TAG OPCODE operands`,
    /// with `#` header lines for the entry point and functions.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# entry {} cp_static {} np_static {}",
            self.entry, self.cp_static_size, self.np_static_size
        );
        for (i, b) in self.bindings.iter().enumerate() {
            let _ = writeln!(s, "# binding {i} {b}");
        }
        for (idx, ins) in self.instrs.iter().enumerate() {
            if let Some(f) = self.functions.iter().find(|f| f.entry as usize == idx) {
                let _ = writeln!(s, "# function {}", f.name);
            }
            let _ = writeln!(s, "{idx} {} {}", ins.tag(), ins.opcode());
        }
        s
    }

    pub fn uses_neighbors(&self) -> impl Iterator<Item = (u32, i32, bool)> + '_ {
        self.instrs.iter().filter_map(|i| match i {
            Instr::Cp(CpOp::Neighbor { axis, sign, named }) => Some((*axis, *sign, *named)),
            _ => None,
        })
    }

    /// Every binding index referenced by a data-file instruction.
    pub fn used_bindings(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self
            .instrs
            .iter()
            .filter_map(|i| match i {
                Instr::Cp(CpOp::DistLoad { binding, .. } | CpOp::DistStore { binding, .. }) => {
                    Some(*binding)
                }
                _ => None,
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("instruction {pc}: jump target {target} out of range")]
    BadTarget { pc: u32, target: u32 },
    #[error("instruction {pc}: where depth {found} differs from {expected} at a join")]
    Unbalanced { pc: u32, expected: u32, found: u32 },
    #[error("instruction {pc}: WHERE_ELSE or WHERE_POP with no open where")]
    Underflow { pc: u32 },
    #[error("instruction {pc}: function exits with {depth} open where block(s)")]
    OpenAtExit { pc: u32, depth: u32 },
}

/// Check that where-mask pushes and pops balance on every path: each
/// instruction is reached with a single depth, and every return or halt
/// happens at depth zero relative to its function's entry.
pub fn verify_mask_balance(ir: &IrProgram) -> Result<(), VerifyError> {
    let n = ir.instrs.len() as u32;
    for (pc, ins) in ir.instrs.iter().enumerate() {
        if let Some(t) = ins.targets() {
            if t >= n {
                return Err(VerifyError::BadTarget { pc: pc as u32, target: t });
            }
        }
    }
    let mut depth: Vec<Option<u32>> = vec![None; ir.instrs.len()];
    let mut roots = vec![ir.entry];
    roots.extend(ir.functions.iter().map(|f| f.entry));
    for root in roots {
        if root >= n || depth[root as usize].is_some() {
            continue;
        }
        let mut work = vec![(root, 0u32)];
        while let Some((pc, d)) = work.pop() {
            match depth[pc as usize] {
                Some(e) if e == d => continue,
                Some(e) => {
                    return Err(VerifyError::Unbalanced {
                        pc,
                        expected: e,
                        found: d,
                    })
                }
                None => depth[pc as usize] = Some(d),
            }
            let ins = ir.instrs[pc as usize];
            let next = match ins {
                Instr::Np(NpOp::WherePush(_)) => d + 1,
                Instr::Np(NpOp::WhereElse) if d == 0 => return Err(VerifyError::Underflow { pc }),
                Instr::Np(NpOp::WherePop) => {
                    d.checked_sub(1).ok_or(VerifyError::Underflow { pc })?
                }
                _ => d,
            };
            let mut succ = Vec::new();
            match ins {
                Instr::Cp(CpOp::Ret | CpOp::Halt) => {
                    if d != 0 {
                        return Err(VerifyError::OpenAtExit { pc, depth: d });
                    }
                }
                Instr::Cp(CpOp::Jmp(t)) => succ.push(t),
                Instr::Cp(CpOp::Jz(t) | CpOp::Jnz(t)) => {
                    succ.push(t);
                    succ.push(pc + 1);
                }
                _ => succ.push(pc + 1),
            }
            for s in succ {
                if s < n {
                    work.push((s, next));
                }
            }
        }
    }
    Ok(())
}
