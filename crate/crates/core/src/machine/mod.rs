//! Lockstep simulator: one control processor driving a torus of numeric
//! processors.
//!
//! CP instructions always execute. NP instructions act on every node at
//! once, but only lanes whose effective mask is set have side effects.
//! NP memory addresses come from the CP stack; each active lane adds its
//! local offset and the result selects either the node's own memory or a
//! neighbor window.

mod plane;
mod topology;

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use thiserror::Error;

use crate::layout::{CapacityError, Space, DEFAULT_CP_WORDS, DEFAULT_NP_WORDS};
use crate::lower::{neighbor_constant, CellKind, ConfigError, CpOp, Instr, IrProgram, NpOp};
use crate::runtime_io::{distributed_load, distributed_store, DistFile};
use crate::scalar::NpKind;
use crate::semantics::ReduceKind;

pub use plane::{int_binop, Plane, PlaneLane};
pub use topology::{Topology, TopologyError};

pub const DEFAULT_LIMIT: u64 = 10_000_000;
const MAX_CP_STACK: usize = 1 << 20;
const MAX_NP_STACK: usize = 1 << 12;
const MAX_CALL_DEPTH: usize = 1 << 16;
const MAX_TOTAL_NP_WORDS: u64 = 1 << 28;

#[derive(Clone, Debug)]
pub struct MachineConfig {
    pub topology: Topology,
    pub cp_words: u32,
    pub np_words: u32,
    pub limit: u64,
    /// Data file paths by binding name.
    pub bindings: BTreeMap<String, PathBuf>,
}

impl MachineConfig {
    pub fn new(topology: Topology) -> Self {
        Self {
            topology,
            cp_words: DEFAULT_CP_WORDS,
            np_words: DEFAULT_NP_WORDS,
            limit: DEFAULT_LIMIT,
            bindings: BTreeMap::new(),
        }
    }
}

/// The program cannot run on the requested machine.
#[derive(Debug, Error)]
pub enum MachineConfigError {
    #[error(transparent)]
    Neighbor(#[from] ConfigError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error("memory sizes must be positive")]
    ZeroMemory,
    #[error("NP memory of {np_words} words leaves no room for {windows} address windows")]
    AddressSpace { np_words: u32, windows: usize },
    #[error("{0} nodes with {1} NP words each is too large to simulate")]
    TooLarge(usize, u32),
    #[error("malformed program: {0}")]
    BadProgram(String),
    #[error("no data file bound to `{0}` (use --bind {0}=PATH)")]
    MissingBinding(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("trap at instruction {pc}: {reason}")]
pub struct Trap {
    pub pc: u32,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct CallFrame {
    ret: u32,
    cp_fp: u32,
    cp_sp: u32,
    np_fp: u32,
    np_sp: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MachineState {
    pub topology: Topology,
    pub cp_mem: Vec<u32>,
    pub cp_stack: Vec<u32>,
    /// One memory image per node.
    pub np_mem: Vec<Vec<u32>>,
    pub np_stack: Vec<Plane>,
    /// Raw `where` conditions, innermost last.
    pub mask_stack: Vec<Vec<bool>>,
    /// Conjunction of `mask_stack[..=i]` for each level.
    effective: Vec<Vec<bool>>,
    all_active: Vec<bool>,
    pub local_offset: Vec<i32>,
    pub pc: u32,
    pub halted: bool,
    pub steps: u64,
    pub cp_fp: u32,
    pub cp_sp: u32,
    pub np_fp: u32,
    pub np_sp: u32,
    calls: Vec<CallFrame>,
}

impl MachineState {
    pub fn effective_mask(&self) -> &[bool] {
        self.effective.last().unwrap_or(&self.all_active)
    }

    pub fn where_push(&mut self, cond: Vec<bool>) {
        let eff = self.effective_mask().iter().zip(&cond).map(|(a, b)| *a && *b).collect();
        self.mask_stack.push(cond);
        self.effective.push(eff);
    }

    /// Complement the innermost condition within its enclosing mask.
    pub fn where_else(&mut self) -> Result<(), String> {
        let top = self.mask_stack.last_mut().ok_or("WHERE_ELSE with no open where")?;
        top.iter_mut().for_each(|b| *b = !*b);
        let parent = match self.effective.len() {
            n if n >= 2 => &self.effective[n - 2],
            _ => &self.all_active,
        };
        let eff: Vec<bool> = parent.iter().zip(top.iter()).map(|(a, b)| *a && *b).collect();
        *self.effective.last_mut().unwrap() = eff;
        Ok(())
    }

    pub fn where_pop(&mut self) -> Result<(), String> {
        self.mask_stack.pop().ok_or("WHERE_POP with no open where")?;
        self.effective.pop();
        Ok(())
    }
}

/// Fold a condition plane over the active lanes.
pub fn reduce(kind: ReduceKind, cond: &[bool], mask: &[bool]) -> bool {
    let any = cond.iter().zip(mask).any(|(c, m)| *m && *c);
    match kind {
        ReduceKind::Any => any,
        ReduceKind::None => !any,
        ReduceKind::All => cond.iter().zip(mask).all(|(c, m)| !*m || *c),
    }
}

/// Map a node's effective NP address to the node whose memory it names
/// and the word address inside that memory.
pub fn resolve_address(topology: &Topology, np_words: u32, node: usize, addr: i64, offset: i64) -> Result<(usize, u32), String> {
    let eff = addr + offset;
    if eff < 0 {
        return Err(format!("negative NP address {eff} on node {node}"));
    }
    let w = eff / np_words as i64;
    let local = (eff % np_words as i64) as u32;
    if w == 0 {
        return Ok((node, local));
    }
    let w = w as usize - 1;
    if w >= 2 * topology.rank() {
        return Err(format!("NP address {eff} on node {node} is outside every neighbor window"));
    }
    let sign = if w.is_multiple_of(2) { 1 } else { -1 };
    Ok((topology.neighbor(node, w / 2, sign), local))
}

/// Split an index into a window number and an in-window element, with
/// windows centered so that small negative indices stay local.
fn split_index(idx: i64, size: i64, np_words: i64) -> (i64, i64) {
    let lo = (np_words - np_words / size) / 2;
    let q = (idx + lo).div_euclid(np_words);
    (q, idx - q * np_words)
}

fn word(v: i64) -> Result<u32, String> {
    i32::try_from(v).map(|v| v as u32).map_err(|_| format!("address {v} overflows a machine word"))
}

pub struct Machine {
    program: IrProgram,
    config: MachineConfig,
    state: MachineState,
    trace: Option<Box<dyn Write>>,
}

impl Machine {
    pub fn new(program: IrProgram, config: MachineConfig) -> Result<Self, MachineConfigError> {
        let topo = &config.topology;
        if config.cp_words == 0 || config.np_words == 0 {
            return Err(MachineConfigError::ZeroMemory);
        }
        let windows = 2 * topo.rank() + 1;
        if (config.np_words as u64) * windows as u64 > i32::MAX as u64 {
            return Err(MachineConfigError::AddressSpace { np_words: config.np_words, windows });
        }
        if topo.nodes() as u64 * config.np_words as u64 > MAX_TOTAL_NP_WORDS {
            return Err(MachineConfigError::TooLarge(topo.nodes(), config.np_words));
        }
        for (space, needed, available) in [
            (Space::Cp, program.cp_static_size, config.cp_words),
            (Space::Np, program.np_static_size, config.np_words),
        ] {
            if needed > available {
                return Err(CapacityError { space, needed: needed as u64, available }.into());
            }
        }
        for (axis, sign, named) in program.uses_neighbors() {
            if named && topo.rank() > 3 {
                return Err(ConfigError::NamedOnHighRank { rank: topo.rank() }.into());
            }
            neighbor_constant(axis, sign, config.np_words, topo.rank())?;
        }
        for b in program.used_bindings() {
            let name = program
                .bindings
                .get(b as usize)
                .ok_or_else(|| MachineConfigError::BadProgram(format!("binding {b} is not declared")))?;
            if !config.bindings.contains_key(name) {
                return Err(MachineConfigError::MissingBinding(name.clone()));
            }
        }
        let p = topo.nodes();
        let state = MachineState {
            topology: topo.clone(),
            cp_mem: vec![0; config.cp_words as usize],
            cp_stack: Vec::new(),
            np_mem: vec![vec![0; config.np_words as usize]; p],
            np_stack: Vec::new(),
            mask_stack: Vec::new(),
            effective: Vec::new(),
            all_active: vec![true; p],
            local_offset: vec![0; p],
            pc: program.entry,
            halted: false,
            steps: 0,
            cp_fp: program.cp_static_size,
            cp_sp: program.cp_static_size,
            np_fp: program.np_static_size,
            np_sp: program.np_static_size,
            calls: Vec::new(),
        };
        Ok(Self {
            program,
            config,
            state,
            trace: None,
        })
    }

    /// Print one line per executed instruction to `out`.
    pub fn set_trace(&mut self, out: Box<dyn Write>) {
        self.trace = Some(out);
    }

    pub fn state(&self) -> &MachineState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut MachineState {
        &mut self.state
    }

    pub fn program(&self) -> &IrProgram {
        &self.program
    }

    pub fn run(&mut self) -> Result<(), Trap> {
        while !self.state.halted {
            self.step()?;
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<(), Trap> {
        if self.state.halted {
            return Ok(());
        }
        let pc = self.state.pc;
        let trap = |reason: String| Trap { pc, reason };
        if self.state.steps >= self.config.limit {
            return Err(trap(format!("instruction limit {} exceeded", self.config.limit)));
        }
        let ins = *self
            .program
            .instrs
            .get(pc as usize)
            .ok_or_else(|| trap("program counter out of range".into()))?;
        if let Some(out) = self.trace.as_mut() {
            let active = self.state.effective_mask().iter().filter(|m| **m).count();
            let _ = writeln!(out, "{pc} {} {} {active}", ins.tag(), ins.opcode());
        }
        self.state.steps += 1;
        self.state.pc = pc + 1;
        match ins {
            Instr::Cp(op) => self.exec_cp(op),
            Instr::Np(op) => self.exec_np(op),
        }
        .map_err(trap)
    }

    fn pop(&mut self) -> Result<i32, String> {
        self.state.cp_stack.pop().map(|w| w as i32).ok_or_else(|| "CP stack underflow".into())
    }

    fn push(&mut self, v: i32) -> Result<(), String> {
        if self.state.cp_stack.len() >= MAX_CP_STACK {
            return Err("CP operand stack overflow".into());
        }
        self.state.cp_stack.push(v as u32);
        Ok(())
    }

    fn pop_words(&mut self, n: usize) -> Result<Vec<u32>, String> {
        let len = self.state.cp_stack.len();
        if len < n {
            return Err("CP stack underflow".into());
        }
        Ok(self.state.cp_stack.split_off(len - n))
    }

    fn pop_plane(&mut self) -> Result<Plane, String> {
        self.state.np_stack.pop().ok_or_else(|| "NP stack underflow".into())
    }

    fn push_plane(&mut self, p: Plane) -> Result<(), String> {
        if self.state.np_stack.len() >= MAX_NP_STACK {
            return Err("NP operand stack overflow".into());
        }
        self.state.np_stack.push(p);
        Ok(())
    }

    fn cp_range(&self, addr: i32, n: u32) -> Result<std::ops::Range<usize>, String> {
        let end = addr as i64 + n as i64;
        if addr < 0 || end > self.config.cp_words as i64 {
            return Err(format!("CP address {addr} out of bounds"));
        }
        Ok(addr as usize..end as usize)
    }

    fn exec_cp(&mut self, op: CpOp) -> Result<(), String> {
        let np_words = self.config.np_words as i64;
        match op {
            CpOp::Push(v) => self.push(v)?,
            CpOp::Pop => {
                self.pop()?;
            }
            CpOp::Dup => {
                let v = self.pop()?;
                self.push(v)?;
                self.push(v)?;
            }
            CpOp::Swap => {
                let b = self.pop()?;
                let a = self.pop()?;
                self.push(b)?;
                self.push(a)?;
            }
            CpOp::Over => {
                let len = self.state.cp_stack.len();
                if len < 2 {
                    return Err("CP stack underflow".into());
                }
                self.push(self.state.cp_stack[len - 2] as i32)?;
            }
            CpOp::Pick(n) => {
                let len = self.state.cp_stack.len();
                if len <= n as usize {
                    return Err("CP stack underflow".into());
                }
                self.push(self.state.cp_stack[len - 1 - n as usize] as i32)?;
            }
            CpOp::Load(n) => {
                let a = self.pop()?;
                let r = self.cp_range(a, n)?;
                for i in r {
                    self.push(self.state.cp_mem[i] as i32)?;
                }
            }
            CpOp::Store(n) | CpOp::StoreKeep(n) => {
                let a = self.pop()?;
                let r = self.cp_range(a, n)?;
                let words = self.pop_words(n as usize)?;
                self.state.cp_mem[r].copy_from_slice(&words);
                if matches!(op, CpOp::StoreKeep(_)) {
                    self.state.cp_stack.extend(words);
                }
            }
            CpOp::Frame(off) => self.push(self.state.cp_fp.wrapping_add(off) as i32)?,
            CpOp::NpFrame(off) => self.push(self.state.np_fp.wrapping_add(off) as i32)?,
            CpOp::Bin(o) => {
                let b = self.pop()?;
                let a = self.pop()?;
                let v = int_binop(o, a, b).ok_or("CP integer division by zero")?;
                self.push(v)?;
            }
            CpOp::Neg => {
                let v = self.pop()?;
                self.push(v.wrapping_neg())?;
            }
            CpOp::Not => {
                let v = self.pop()?;
                self.push((v == 0) as i32)?;
            }
            CpOp::BitNot => {
                let v = self.pop()?;
                self.push(!v)?;
            }
            CpOp::Scale(s) => {
                let idx = self.pop()? as i64;
                let (q, r) = split_index(idx, s.max(1) as i64, np_words);
                self.push(word(r * s as i64 + q * np_words)? as i32)?;
            }
            CpOp::IndexHandle { cp, np } => {
                let idx = self.pop()? as i64;
                let hn = self.pop()? as i64;
                let hc = self.pop()? as i64;
                let (q, r) = split_index(idx, np.max(1) as i64, np_words);
                self.push(word(hc + r * cp as i64)? as i32)?;
                self.push(word(hn + r * np as i64 + q * np_words)? as i32)?;
            }
            CpOp::FieldCp(off) => {
                self.pop()?;
                let c = self.pop()?;
                self.push(c.wrapping_add(off as i32))?;
            }
            CpOp::FieldNp(off) => {
                let n = self.pop()?;
                self.pop()?;
                self.push(n.wrapping_add(off as i32))?;
            }
            CpOp::FieldHandle { cp, np } => {
                let n = self.pop()?;
                let c = self.pop()?;
                self.push(c.wrapping_add(cp as i32))?;
                self.push(n.wrapping_add(np as i32))?;
            }
            CpOp::Neighbor { axis, sign, .. } => {
                let v = neighbor_constant(axis, sign, self.config.np_words, self.config.topology.rank())
                    .map_err(|e| e.to_string())?;
                self.push(v as i32)?;
            }
            CpOp::Jmp(t) => self.state.pc = t,
            CpOp::Jz(t) => {
                if self.pop()? == 0 {
                    self.state.pc = t;
                }
            }
            CpOp::Jnz(t) => {
                if self.pop()? != 0 {
                    self.state.pc = t;
                }
            }
            CpOp::Call(t) => {
                if self.state.calls.len() >= MAX_CALL_DEPTH {
                    return Err("call stack overflow".into());
                }
                let s = &self.state;
                self.state.calls.push(CallFrame {
                    ret: s.pc,
                    cp_fp: s.cp_fp,
                    cp_sp: s.cp_sp,
                    np_fp: s.np_fp,
                    np_sp: s.np_sp,
                });
                self.state.pc = t;
            }
            CpOp::Enter { cp, np } => {
                let s = &mut self.state;
                let cp_end = s.cp_sp as u64 + cp as u64;
                if cp_end > self.config.cp_words as u64 {
                    return Err("CP stack overflow".into());
                }
                let np_end = s.np_sp as u64 + np as u64;
                if np_end > self.config.np_words as u64 {
                    return Err("NP stack overflow".into());
                }
                s.cp_mem[s.cp_sp as usize..cp_end as usize].fill(0);
                for mem in &mut s.np_mem {
                    mem[s.np_sp as usize..np_end as usize].fill(0);
                }
                s.cp_fp = s.cp_sp;
                s.np_fp = s.np_sp;
                s.cp_sp = cp_end as u32;
                s.np_sp = np_end as u32;
            }
            CpOp::Ret => {
                let f = self.state.calls.pop().ok_or("return with an empty call stack")?;
                let s = &mut self.state;
                s.pc = f.ret;
                s.cp_fp = f.cp_fp;
                s.cp_sp = f.cp_sp;
                s.np_fp = f.np_fp;
                s.np_sp = f.np_sp;
            }
            CpOp::Halt => self.state.halted = true,
            CpOp::DistLoad { binding, kind } | CpOp::DistStore { binding, kind } => {
                let count = self.pop()?;
                let addr = self.pop()?;
                if addr < 0 || count < 0 {
                    return Err(format!("bad data file transfer of {count} elements at {addr}"));
                }
                let end = addr as u64 + count as u64 * kind.words() as u64;
                if end > self.state.np_sp as u64 {
                    return Err(format!("data file transfer of {count} {kind} elements at {addr} overflows the destination"));
                }
                let name = &self.program.bindings[binding as usize];
                let path = &self.config.bindings[name];
                let fail = |e: crate::runtime_io::DistError| format!("{}: {e}", path.display());
                if matches!(op, CpOp::DistLoad { .. }) {
                    let file = DistFile::read(path, Some(kind)).map_err(fail)?;
                    distributed_load(&mut self.state.np_mem, addr as u32, count as u32, &file).map_err(fail)?;
                } else {
                    distributed_store(&self.state.np_mem, addr as u32, count as u32, kind)
                        .and_then(|f| f.write(path))
                        .map_err(fail)?;
                }
            }
        }
        Ok(())
    }

    /// Resolve the address of every active lane, bounds-checked against
    /// the live NP segment.
    fn lane_targets(&self, addr: i32, kind: NpKind) -> Result<Vec<Option<(usize, usize)>>, String> {
        let s = &self.state;
        let words = kind.words();
        let mask = s.effective_mask();
        (0..mask.len())
            .map(|node| {
                if !mask[node] {
                    return Ok(None);
                }
                let (t, local) = resolve_address(&s.topology, self.config.np_words, node, addr as i64, s.local_offset[node] as i64)?;
                if local as u64 + words as u64 > s.np_sp as u64 {
                    return Err(format!("NP address {local} on node {t} is outside the live segment"));
                }
                Ok(Some((t, local as usize)))
            })
            .collect()
    }

    fn exec_np(&mut self, op: NpOp) -> Result<(), String> {
        let p = self.config.topology.nodes();
        match op {
            NpOp::Load(k) => {
                let addr = self.pop()?;
                let targets = self.lane_targets(addr, k)?;
                let mem = &self.state.np_mem;
                let plane = Plane::from_words(k, p, |i, w| {
                    if let Some((t, a)) = targets[i] {
                        w.copy_from_slice(&mem[t][a..a + w.len()]);
                    }
                    Ok::<(), String>(())
                })?;
                self.push_plane(plane)?;
            }
            NpOp::Store(k) | NpOp::StoreKeep(k) => {
                let addr = self.pop()?;
                let plane = self.pop_plane()?;
                if plane.kind() != k {
                    return Err(format!("storing a {} plane as {k}", plane.kind()));
                }
                let targets = self.lane_targets(addr, k)?;
                let mut seen = HashSet::new();
                for (t, a) in targets.iter().flatten() {
                    if !seen.insert((*t, *a)) {
                        return Err(format!("conflicting stores to address {a} on node {t}"));
                    }
                }
                let n = k.words() as usize;
                for (i, target) in targets.iter().enumerate() {
                    if let Some((t, a)) = *target {
                        plane.lane_words(i, &mut self.state.np_mem[t][a..a + n]);
                    }
                }
                if matches!(op, NpOp::StoreKeep(_)) {
                    self.push_plane(plane)?;
                }
            }
            NpOp::Bcast(k) => {
                let words = self.pop_words(k.words() as usize)?;
                self.push_plane(Plane::splat_words(k, &words, p))?;
            }
            NpOp::BcastInt(k) => {
                let v = self.pop()?;
                self.push_plane(Plane::splat_int(k, v, p))?;
            }
            NpOp::Conv { from, to } => {
                let a = self.pop_plane()?;
                if a.kind() != from {
                    return Err(format!("converting a {} plane as {from}", a.kind()));
                }
                self.push_plane(a.convert(to)?)?;
            }
            NpOp::Bin(o, k) => {
                let b = self.pop_plane()?;
                let a = self.pop_plane()?;
                if a.kind() != k {
                    return Err(format!("{} applied to a {} plane as {k}", o.name(), a.kind()));
                }
                let r = a.binary(o, &b, self.state.effective_mask())?;
                self.push_plane(r)?;
            }
            NpOp::Neg(_) => {
                let a = self.pop_plane()?;
                self.push_plane(a.neg())?;
            }
            NpOp::Not => {
                let a = self.pop_plane()?;
                self.push_plane(a.not())?;
            }
            NpOp::BitNot => {
                let a = self.pop_plane()?;
                self.push_plane(a.bitnot()?)?;
            }
            NpOp::Dup => {
                let a = self.state.np_stack.last().ok_or("NP stack underflow")?.clone();
                self.push_plane(a)?;
            }
            NpOp::Drop => {
                self.pop_plane()?;
            }
            NpOp::WherePush(_) => {
                let c = self.pop_plane()?;
                let cond = (0..p).map(|i| c.is_true(i)).collect();
                self.state.where_push(cond);
            }
            NpOp::WhereElse => self.state.where_else()?,
            NpOp::WherePop => self.state.where_pop()?,
            NpOp::SetLocalOffset => {
                let v = self.pop_plane()?;
                let v = v.as_localint().ok_or("local offset must be a localint plane")?;
                let s = &mut self.state;
                let mask = s.effective.last().unwrap_or(&s.all_active);
                for (i, off) in s.local_offset.iter_mut().enumerate() {
                    if mask[i] {
                        *off = v[i];
                    }
                }
            }
            NpOp::ClearLocalOffset => self.state.local_offset.fill(0),
            NpOp::Reduce(kind) => {
                let c = self.pop_plane()?;
                let cond: Vec<bool> = (0..p).map(|i| c.is_true(i)).collect();
                let r = reduce(kind, &cond, self.state.effective_mask());
                self.push(r as i32)?;
            }
        }
        Ok(())
    }

    /// Static storage as text: `node addr kind value` for every NP cell on
    /// every node, then `cp addr kind value` for CP cells.
    pub fn dump_state(&self) -> String {
        let mut s = String::new();
        let w = self.config.np_words as usize;
        for (node, mem) in self.state.np_mem.iter().enumerate() {
            for cell in &self.program.np_cells {
                let CellKind::Np(k) = cell.kind else { continue };
                let a = cell.addr as usize;
                let n = k.words() as usize;
                if a + n <= w {
                    let v = Plane::splat_words(k, &mem[a..a + n], 1);
                    let _ = writeln!(s, "{node} {a} {k} {}", v.lane_string(0));
                }
            }
        }
        for cell in &self.program.cp_cells {
            if let Some(v) = self.state.cp_mem.get(cell.addr as usize) {
                let _ = writeln!(s, "cp {} {} {}", cell.addr, cell.kind.name(), *v as i32);
            }
        }
        s
    }
}

/// Run to halt and return the final machine.
pub fn run(program: IrProgram, config: MachineConfig) -> Result<Result<Machine, (Machine, Trap)>, MachineConfigError> {
    let mut m = Machine::new(program, config)?;
    Ok(match m.run() {
        Ok(()) => Ok(m),
        Err(t) => Err((m, t)),
    })
}
