use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use simdcpp::layout::{DEFAULT_CP_WORDS, DEFAULT_NP_WORDS};
use simdcpp::machine::{Machine, MachineConfig, DEFAULT_LIMIT};
use simdcpp::runtime_io::{raw_from_words, slice, unslice, words_from_raw, DistFile};
use simdcpp::{compile_with, CompileError, IrProgram, NpKind, Topology};

const EXIT_SOURCE: u8 = 1;
const EXIT_INTERNAL: u8 = 2;
const EXIT_TRAP: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(name = "simdcpp", version, about = "Compile and simulate SIMD C++ programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a source file to an IR file.
    Compile {
        source: PathBuf,
        /// Output path (default: the source path with an `.ir` extension).
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        mem: MemArgs,
        #[command(flatten)]
        dumps: CompileDumps,
    },
    /// Run a compiled IR file.
    Run {
        ir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Print the IR listing before running.
        #[arg(long)]
        emit_ir: bool,
    },
    /// Compile a source file and run it.
    Exec {
        source: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        dumps: CompileDumps,
    },
    /// Split a flat row-major array into a node-major data file.
    Slice {
        input: PathBuf,
        output: PathBuf,
        /// Element kind: float, double, localint, vector or complex.
        #[arg(long, default_value = "float")]
        kind: String,
        #[arg(long)]
        topology: String,
        /// Per-node block shape, e.g. 4x4.
        #[arg(long)]
        block: String,
    },
    /// Reassemble a data file into a flat row-major array.
    Unslice {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        topology: String,
        #[arg(long)]
        block: String,
    },
}

#[derive(Args)]
struct MemArgs {
    /// NP memory per node, in words.
    #[arg(long, default_value_t = DEFAULT_NP_WORDS)]
    np_mem: u32,
    /// CP memory, in words.
    #[arg(long, default_value_t = DEFAULT_CP_WORDS)]
    cp_mem: u32,
}

#[derive(Args)]
struct CompileDumps {
    /// Print the IR listing.
    #[arg(long)]
    emit_ir: bool,
    /// Print the storage layout of every symbol.
    #[arg(long)]
    dump_layout: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Node grid, e.g. 2x2 or 4.
    #[arg(long, default_value = "1")]
    topology: String,
    #[command(flatten)]
    mem: MemArgs,
    /// Instruction limit.
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: u64,
    /// Print each executed instruction to stderr.
    #[arg(long)]
    trace: bool,
    /// Print static storage after the run.
    #[arg(long)]
    dump_state: bool,
    /// Bind a data-file name used by the program to a path.
    #[arg(long = "bind", value_name = "NAME=PATH")]
    bind: Vec<String>,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_INTERNAL, format!("{}: {e}", path.display())))
}

fn diagnostic(path: &Path, e: &CompileError) -> Failure {
    let code = if e.is_internal() { EXIT_INTERNAL } else { EXIT_SOURCE };
    let message = match e.loc() {
        Some(loc) => format!("{}:{}:{}: error: {e}", path.display(), loc.line, loc.col),
        None => format!("{}: error: {e}", path.display()),
    };
    fail(code, message)
}

fn compile_file(source: &Path, mem: &MemArgs, dumps: &CompileDumps) -> Result<IrProgram, Failure> {
    let text = read_text(source)?;
    let c = compile_with(&text, mem.cp_mem, mem.np_mem).map_err(|e| diagnostic(source, &e))?;
    if dumps.dump_layout {
        print!("{}", c.layout.dump(&c.typed));
    }
    if dumps.emit_ir {
        print!("{}", c.ir.to_text());
    }
    Ok(c.ir)
}

fn parse_dims(s: &str) -> Result<Vec<usize>, Failure> {
    s.parse::<Topology>()
        .map(|t| t.dims().to_vec())
        .map_err(|e| fail(EXIT_CONFIG, e.to_string()))
}

fn run_program(ir: IrProgram, args: &RunArgs) -> Result<(), Failure> {
    let topology: Topology = args.topology.parse().map_err(|e: simdcpp::machine::TopologyError| fail(EXIT_CONFIG, e.to_string()))?;
    let mut config = MachineConfig::new(topology);
    config.np_words = args.mem.np_mem;
    config.cp_words = args.mem.cp_mem;
    config.limit = args.limit;
    for b in &args.bind {
        let (name, path) = b
            .split_once('=')
            .ok_or_else(|| fail(EXIT_CONFIG, format!("--bind expects NAME=PATH, got `{b}`")))?;
        config.bindings.insert(name.to_string(), PathBuf::from(path));
    }
    let mut m = Machine::new(ir, config).map_err(|e| fail(EXIT_CONFIG, format!("error: {e}")))?;
    if args.trace {
        m.set_trace(Box::new(std::io::stderr()));
    }
    let result = m.run();
    if args.dump_state {
        print!("{}", m.dump_state());
    }
    result.map_err(|t| fail(EXIT_TRAP, t.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Compile {
            source,
            output,
            mem,
            dumps,
        } => {
            let ir = compile_file(&source, &mem, &dumps)?;
            let out = output.unwrap_or_else(|| source.with_extension("ir"));
            fs::write(&out, ir.to_json()).map_err(|e| fail(EXIT_INTERNAL, format!("{}: {e}", out.display())))
        }
        Command::Run { ir, run, emit_ir } => {
            let program = IrProgram::from_json(&read_text(&ir)?)
                .map_err(|e| fail(EXIT_INTERNAL, format!("{}: {e}", ir.display())))?;
            simdcpp::lower::verify_mask_balance(&program)
                .map_err(|e| fail(EXIT_INTERNAL, format!("{}: {e}", ir.display())))?;
            if emit_ir {
                print!("{}", program.to_text());
            }
            run_program(program, &run)
        }
        Command::Exec { source, run, dumps } => {
            let ir = compile_file(&source, &run.mem, &dumps)?;
            run_program(ir, &run)
        }
        Command::Slice {
            input,
            output,
            kind,
            topology,
            block,
        } => {
            let kind = NpKind::from_name(&kind).ok_or_else(|| fail(EXIT_CONFIG, format!("unknown element kind `{kind}`")))?;
            let dims = parse_dims(&topology)?;
            let block = parse_dims(&block)?;
            let io = |e: simdcpp::runtime_io::DistError| fail(EXIT_INTERNAL, e.to_string());
            let bytes = fs::read(&input).map_err(|e| fail(EXIT_INTERNAL, format!("{}: {e}", input.display())))?;
            let elems = words_from_raw(&bytes, kind).map_err(io)?;
            let sliced = slice(&elems, &dims, &block).map_err(io)?;
            let nodes: usize = dims.iter().product();
            let per: usize = block.iter().product();
            let file = DistFile::new(kind, nodes as u32, per as u32, sliced.concat()).map_err(io)?;
            file.write(&output).map_err(io)
        }
        Command::Unslice {
            input,
            output,
            topology,
            block,
        } => {
            let dims = parse_dims(&topology)?;
            let block = parse_dims(&block)?;
            let io = |e: simdcpp::runtime_io::DistError| fail(EXIT_INTERNAL, e.to_string());
            let file = DistFile::read(&input, None).map_err(io)?;
            let w = file.kind.words() as usize;
            let elems: Vec<Vec<u32>> = file.words.chunks_exact(w).map(<[u32]>::to_vec).collect();
            let flat = unslice(&elems, &dims, &block).map_err(io)?;
            fs::write(&output, raw_from_words(&flat)).map_err(|e| fail(EXIT_INTERNAL, format!("{}: {e}", output.display())))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
