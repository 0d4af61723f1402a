//! Compiler and lockstep simulator for a SIMD dialect of C++.
//!
//! Programs run on one control processor (CP) that owns all control flow,
//! integers and pointers, and a torus of numeric processors (NPs) that
//! execute every numeric instruction in lockstep on their own memories.
//!
//! The pipeline is [`frontend`] (parse) → [`semantics`] (type check) →
//! [`layout`] (CP/NP allocation) → [`lower`] (two-stream IR) →
//! [`machine`] (simulation). [`compile`] runs the first four stages.

pub mod frontend;
pub mod layout;
pub mod lower;
pub mod machine;
pub mod runtime_io;
pub mod scalar;
pub mod semantics;

use thiserror::Error;

pub use frontend::Loc;
pub use layout::LayoutPlan;
pub use lower::IrProgram;
pub use machine::{Machine, MachineConfig, Topology, Trap};
pub use scalar::{Lane, NpArith, NpKind, Pair};
pub use semantics::TypedProgram;

/// Lane type of `float` planes.
pub type FloatLane = f32;
/// Lane type of `double` planes.
pub type DoubleLane = f64;
/// Lane type of `localint` planes.
pub type LocalIntLane = i32;
/// Lane type of `vector` planes.
pub type VectorLane = Pair<f32>;
/// Lane type of `complex` planes.
pub type ComplexLane = Pair<f32>;

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(transparent)]
    Syntax(#[from] frontend::FrontendError),
    #[error(transparent)]
    Type(#[from] semantics::TypeError),
    #[error(transparent)]
    Capacity(#[from] layout::CapacityError),
    #[error(transparent)]
    Lower(#[from] lower::LowerError),
    #[error("IR verification failed: {0}")]
    Verify(#[from] lower::VerifyError),
}

impl CompileError {
    /// Source location, for errors that have one.
    pub fn loc(&self) -> Option<Loc> {
        match self {
            CompileError::Syntax(e) => Some(e.loc()),
            CompileError::Type(e) => Some(e.loc),
            CompileError::Lower(e) => Some(e.loc),
            CompileError::Capacity(_) | CompileError::Verify(_) => None,
        }
    }

    /// Whether the error is the compiler's fault rather than the source's.
    pub fn is_internal(&self) -> bool {
        matches!(self, CompileError::Verify(_))
    }
}

/// Every stage product of one compilation.
#[derive(Debug)]
pub struct Compiled {
    pub typed: TypedProgram,
    pub layout: LayoutPlan,
    pub ir: IrProgram,
}

/// Parse, check, lay out and lower a source program for the given memory
/// sizes.
pub fn compile_with(source: &str, cp_words: u32, np_words: u32) -> Result<Compiled, CompileError> {
    let ast = frontend::parse_source(source)?;
    let typed = semantics::typecheck_program(&ast)?;
    let layout = layout::compute_layout(&typed, cp_words, np_words)?;
    let ir = lower::lower_program(&typed, &layout)?;
    lower::verify_mask_balance(&ir)?;
    Ok(Compiled { typed, layout, ir })
}

/// [`compile_with`] at the default memory sizes, returning only the IR.
pub fn compile(source: &str) -> Result<IrProgram, CompileError> {
    compile_with(source, layout::DEFAULT_CP_WORDS, layout::DEFAULT_NP_WORDS).map(|c| c.ir)
}
