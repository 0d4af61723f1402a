//! Static and frame allocation in the CP and NP word spaces.
//!
//! Every object has a base offset in each space. Scalars use only the
//! space of their group; records and arrays of records use both, with
//! the CP part and the NP part laid out independently.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::ast::RecordKind;
use crate::semantics::{Group, RecordId, RecordInfo, TypeDesc, TypedProgram};

pub const DEFAULT_CP_WORDS: u32 = 65536;
pub const DEFAULT_NP_WORDS: u32 = 65536;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    Cp,
    Np,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::Cp => "CP",
            Space::Np => "NP",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{space} segment needs {needed} words but only {available} are configured")]
pub struct CapacityError {
    pub space: Space,
    pub needed: u64,
    pub available: u32,
}

/// Words a type occupies in each space.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Size {
    pub cp: u32,
    pub np: u32,
}

impl Size {
    pub fn get(self, space: Space) -> u32 {
        match space {
            Space::Cp => self.cp,
            Space::Np => self.np,
        }
    }
}

/// Base offsets of one object in both spaces.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub cp: u32,
    pub np: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartEntry {
    pub name: String,
    pub offset: u32,
    pub size: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructLayout {
    /// Fields stored on the CP, base fields first.
    pub cp_part: Vec<PartEntry>,
    /// Fields stored in every NP, base fields first.
    pub np_part: Vec<PartEntry>,
    pub cp_size: u32,
    pub np_size: u32,
    /// Offsets of the record's own fields, indexed like `RecordInfo::fields`.
    pub fields: Vec<Slot>,
}

impl StructLayout {
    pub fn size(&self) -> Size {
        Size {
            cp: self.cp_size,
            np: self.np_size,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLayout {
    pub cp_size: u32,
    pub np_size: u32,
    /// Frame-relative offsets, indexed by local id.
    pub locals: Vec<Slot>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolEntry {
    pub name: String,
    pub space: Space,
    pub offset: u32,
    pub size: u32,
    /// Offset is relative to the frame pointer.
    pub frame: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutPlan {
    pub cp_static_size: u32,
    pub np_static_size: u32,
    pub globals: Vec<Slot>,
    pub records: Vec<StructLayout>,
    pub frames: Vec<FrameLayout>,
    pub symbols: Vec<SymbolEntry>,
}

/// Size of a type given layouts of the records it may contain.
pub fn size_of(ty: &TypeDesc, records: &[StructLayout]) -> Size {
    match ty {
        TypeDesc::Int | TypeDesc::Ptr(_) => Size {
            cp: if ty.is_record_ptr() { 2 } else { 1 },
            np: 0,
        },
        TypeDesc::Float | TypeDesc::LocalInt => Size { cp: 0, np: 1 },
        TypeDesc::Double | TypeDesc::Vector | TypeDesc::Complex => Size { cp: 0, np: 2 },
        TypeDesc::Array(e, n) => {
            let s = size_of(e, records);
            Size {
                cp: s.cp.saturating_mul(*n),
                np: s.np.saturating_mul(*n),
            }
        }
        TypeDesc::Record(id) => records[*id].size(),
        TypeDesc::Void | TypeDesc::Function(..) => Size::default(),
    }
}

/// Split a record's fields between the two spaces. `layouts` must hold
/// the layouts of every record this one mentions, including its base.
pub fn split_record(rec: &RecordInfo, layouts: &[StructLayout]) -> StructLayout {
    let mut out = match rec.base {
        Some(b) => {
            let base = &layouts[b];
            StructLayout {
                cp_part: base.cp_part.clone(),
                np_part: base.np_part.clone(),
                cp_size: base.cp_size,
                np_size: base.np_size,
                fields: Vec::new(),
            }
        }
        None => StructLayout::default(),
    };
    let union = rec.kind == RecordKind::Union;
    let (cp_start, np_start) = (out.cp_size, out.np_size);
    for f in &rec.fields {
        let s = size_of(&f.ty, layouts);
        let slot = if union {
            Slot {
                cp: cp_start,
                np: np_start,
            }
        } else {
            Slot {
                cp: out.cp_size,
                np: out.np_size,
            }
        };
        if s.cp > 0 {
            out.cp_part.push(PartEntry {
                name: f.name.clone(),
                offset: slot.cp,
                size: s.cp,
            });
        }
        if s.np > 0 {
            out.np_part.push(PartEntry {
                name: f.name.clone(),
                offset: slot.np,
                size: s.np,
            });
        }
        if union {
            out.cp_size = out.cp_size.max(cp_start + s.cp);
            out.np_size = out.np_size.max(np_start + s.np);
        } else {
            out.cp_size = out.cp_size.saturating_add(s.cp);
            out.np_size = out.np_size.saturating_add(s.np);
        }
        out.fields.push(slot);
    }
    out
}

struct Packer {
    cp: u64,
    np: u64,
}

impl Packer {
    fn place(&mut self, s: Size) -> Slot {
        let slot = Slot {
            cp: self.cp as u32,
            np: self.np as u32,
        };
        self.cp += u64::from(s.cp);
        self.np += u64::from(s.np);
        slot
    }
}

fn push_symbols(out: &mut Vec<SymbolEntry>, name: &str, slot: Slot, size: Size, frame: bool) {
    for (space, offset, size) in [(Space::Cp, slot.cp, size.cp), (Space::Np, slot.np, size.np)] {
        if size > 0 {
            out.push(SymbolEntry {
                name: name.to_string(),
                space,
                offset,
                size,
                frame,
            });
        }
    }
}

/// Lay out a checked program. Segment sizes are checked against the
/// configured memory sizes.
pub fn compute_layout(
    program: &TypedProgram,
    cp_words: u32,
    np_words: u32,
) -> Result<LayoutPlan, CapacityError> {
    let mut records: Vec<StructLayout> = Vec::with_capacity(program.records.len());
    for r in &program.records {
        let l = split_record(r, &records);
        records.push(l);
    }

    let mut symbols = Vec::new();
    let mut statics = Packer { cp: 0, np: 0 };
    let mut globals = Vec::with_capacity(program.globals.len());
    for g in &program.globals {
        let size = size_of(&g.ty, &records);
        let slot = statics.place(size);
        push_symbols(&mut symbols, &g.name, slot, size, false);
        globals.push(slot);
    }
    for (space, needed, available) in [
        (Space::Cp, statics.cp, cp_words),
        (Space::Np, statics.np, np_words),
    ] {
        if needed > u64::from(available) {
            return Err(CapacityError {
                space,
                needed,
                available,
            });
        }
    }

    let mut frames = Vec::with_capacity(program.functions.len());
    for f in &program.functions {
        let mut p = Packer { cp: 0, np: 0 };
        let mut locals = Vec::with_capacity(f.locals.len());
        for l in &f.locals {
            let size = size_of(&l.ty, &records);
            let slot = p.place(size);
            push_symbols(&mut symbols, &format!("{}::{}", f.name, l.name), slot, size, true);
            locals.push(slot);
        }
        for (space, needed, available) in [(Space::Cp, p.cp, cp_words), (Space::Np, p.np, np_words)] {
            if needed > u64::from(available) {
                return Err(CapacityError {
                    space,
                    needed,
                    available,
                });
            }
        }
        frames.push(FrameLayout {
            cp_size: p.cp as u32,
            np_size: p.np as u32,
            locals,
        });
    }

    Ok(LayoutPlan {
        cp_static_size: statics.cp as u32,
        np_static_size: statics.np as u32,
        globals,
        records,
        frames,
        symbols,
    })
}

impl LayoutPlan {
    /// `name space offset size` lines: globals, then record parts, then
    /// frame slots (offsets prefixed with `fp+`).
    pub fn dump(&self, program: &TypedProgram) -> String {
        let mut s = String::new();
        for e in self.symbols.iter().filter(|e| !e.frame) {
            let _ = writeln!(s, "{} {} {} {}", e.name, e.space, e.offset, e.size);
        }
        for (r, l) in program.records.iter().zip(&self.records) {
            for (space, part) in [(Space::Cp, &l.cp_part), (Space::Np, &l.np_part)] {
                for e in part {
                    let _ = writeln!(s, "{}.{} {} {} {}", r.name, e.name, space, e.offset, e.size);
                }
            }
        }
        for e in self.symbols.iter().filter(|e| e.frame) {
            let _ = writeln!(s, "{} {} fp+{} {}", e.name, e.space, e.offset, e.size);
        }
        s
    }

    /// Only the NP lines of [`LayoutPlan::dump`].
    pub fn dump_np(&self, program: &TypedProgram) -> String {
        self.dump(program)
            .lines()
            .filter(|l| l.split(' ').nth(1) == Some("NP"))
            .map(|l| format!("{l}\n"))
            .collect()
    }

    pub fn record(&self, id: RecordId) -> &StructLayout {
        &self.records[id]
    }
}

/// Space that holds a non-record scalar type.
pub fn space_of_scalar(ty: &TypeDesc) -> Option<Space> {
    ty.kind().map(|k| match k.group() {
        Group::Cp => Space::Cp,
        Group::Np => Space::Np,
    })
}
