//! The `levelplan` command line: argument parsing, verdict reporting and
//! exit codes, kept in a library so tests can run it in-process.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use levelplan::corpus;
use levelplan::level_graph::{self, EdgeId, LevelGraph, VertexId};
use levelplan::oracle::{self, LinearOrders, OracleBudget};
use levelplan::sim_level::{self, BetweennessInstance};
use levelplan::spqo::SpqoError;
use levelplan::torus_planarity::{self, Planarity, Surface, TorusError, Witness};
use levelplan::Error;

pub mod render;

pub const EXIT_PLANAR: i32 = 0;
pub const EXIT_NONPLANAR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "levelplan", version, about = "Torus, cyclic, radial and simultaneous level planarity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SurfaceArg {
    Torus,
    Cyclic,
    Radial,
}

impl From<SurfaceArg> for Surface {
    fn from(s: SurfaceArg) -> Surface {
        match s {
            SurfaceArg::Torus => Surface::Torus,
            SurfaceArg::Cyclic => Surface::Cyclic,
            SurfaceArg::Radial => Surface::Radial,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OracleSurface {
    Torus,
    Cyclic,
    Radial,
    Sim,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    #[value(name = "betweenness-3x2")]
    Betweenness3x2,
    #[value(name = "betweenness-2x3")]
    Betweenness2x3,
}

#[derive(Debug, clap::Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = OracleBudget::default().max_level_vertices)]
    max_level_vertices: usize,
    #[arg(long, default_value_t = OracleBudget::default().max_layer_edges)]
    max_layer_edges: usize,
    #[arg(long, default_value_t = OracleBudget::default().max_enumeration)]
    max_enumeration: u128,
}

impl BudgetArgs {
    fn budget(&self) -> OracleBudget {
        OracleBudget {
            max_level_vertices: self.max_level_vertices,
            max_layer_edges: self.max_layer_edges,
            max_enumeration: self.max_enumeration,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide level planarity on a surface and print a witness.
    Test {
        #[arg(long, value_enum, default_value = "torus")]
        surface: SurfaceArg,
        /// Level graph file, `-` for stdin.
        file: String,
        /// Write the Simultaneous PQ-Ordering instance as text.
        #[arg(long)]
        dump_instance: Option<PathBuf>,
    },
    /// Decide simultaneous level planarity on the plane.
    SimTest {
        file: String,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Generate a simultaneous instance from a Betweenness instance.
    Gen {
        #[arg(value_enum)]
        family: Family,
        /// Betweenness file, `-` for stdin.
        file: String,
    },
    /// Decide by brute force.
    Oracle {
        #[arg(long, value_enum)]
        surface: OracleSurface,
        file: String,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Draw a torus witness as SVG.
    Render {
        file: String,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "torus")]
        surface: SurfaceArg,
    },
    /// Cross-check the deciders against the oracles on a small corpus.
    Selfcheck,
}

enum Failure {
    Usage(String),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let budget = e.is_budget()
            || matches!(e, Error::Spqo(SpqoError::TooLarge { .. }) | Error::Torus(TorusError::Spqo(SpqoError::TooLarge { .. })));
        if budget {
            Failure::Budget(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

macro_rules! lib {
    ($e:expr) => {
        $e.map_err(|e| Failure::from(Error::from(e)))
    };
}

fn read_input(path: &str, stdin: &mut dyn Read) -> Result<String, Failure> {
    let mut s = String::new();
    if path == "-" {
        stdin.read_to_string(&mut s).map_err(|e| Failure::Usage(format!("stdin: {e}")))?;
    } else {
        s = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
    }
    Ok(s)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn level_line(g: &LevelGraph, i: usize, vs: &[VertexId]) -> String {
    let names: Vec<&str> = vs.iter().map(|&v| g.name(v)).collect();
    if names.is_empty() {
        format!("level {i}:\n")
    } else {
        format!("level {i}: {}\n", names.join(","))
    }
}

fn edge_names(g: &LevelGraph, es: &[EdgeId]) -> String {
    es.iter().map(|&e| g.edge_label(e)).collect::<Vec<_>>().join(",")
}

/// `planar`, one `level i:` line per level and one `layer i:` line per
/// nonempty layer, in the input's names.
pub fn witness_text(input: &LevelGraph, w: &Witness) -> String {
    let mut s = String::from("planar\n");
    for i in 1..=input.levels() {
        s.push_str(&level_line(input, i, &w.level_sequence(i)));
    }
    for i in 1..=input.levels() {
        let edges = w.layer_sequence(i);
        if !edges.is_empty() {
            s.push_str(&format!("layer {i}: {}\n", edge_names(input, &edges)));
        }
    }
    s
}

fn orders_text(g: &LevelGraph, orders: &LinearOrders) -> String {
    let mut s = String::from("planar\n");
    for (i, o) in orders.iter().enumerate() {
        s.push_str(&level_line(g, i + 1, o));
    }
    s
}

/// The graph actually embedded on the torus for `surface`, made proper.
fn torus_graph(g: &LevelGraph, surface: Surface) -> Result<LevelGraph, Error> {
    let t = match surface {
        Surface::Cyclic => level_graph::cyclic_to_torus(g)?.graph,
        Surface::Torus | Surface::Radial => g.clone(),
    };
    Ok(t.make_proper()?.0)
}

fn cmd_test(g: &LevelGraph, surface: Surface, dump: Option<&Path>, out: &mut String) -> Result<i32, Failure> {
    let p = lib!(torus_planarity::test(g, surface))?;
    if let Some(path) = dump {
        let text = if g.levels() < 2 || (surface == Surface::Radial && !g.is_upward()) {
            "no instance\n".to_string()
        } else {
            let t = lib!(torus_graph(g, surface))?;
            lib!(torus_planarity::build_instance(&t, None))?.instance.dump()
        };
        write_file(path, &text)?;
    }
    Ok(match p {
        Planarity::Planar(w) => {
            out.push_str(&witness_text(g, &w));
            EXIT_PLANAR
        }
        Planarity::NonPlanar => {
            out.push_str("nonplanar\n");
            EXIT_NONPLANAR
        }
    })
}

fn cmd_sim(g: &LevelGraph, budget: &OracleBudget, out: &mut String) -> Result<i32, Failure> {
    let two_by_two = g.levels() == 2 && g.graph_count() <= 2;
    let found = if two_by_two { lib!(sim_level::test_sim_2x2(g))? } else { lib!(sim_level::oracle_sim(g, budget))? };
    Ok(report_orders(g, found, out))
}

fn report_orders(g: &LevelGraph, found: Option<LinearOrders>, out: &mut String) -> i32 {
    match found {
        Some(orders) => {
            out.push_str(&orders_text(g, &orders));
            EXIT_PLANAR
        }
        None => {
            out.push_str("nonplanar\n");
            EXIT_NONPLANAR
        }
    }
}

fn cmd_oracle(g: &LevelGraph, surface: OracleSurface, budget: &OracleBudget, out: &mut String) -> Result<i32, Failure> {
    let circular = |emb: Option<torus_planarity::TorusEmbedding>| {
        emb.map(|e| {
            (1..=g.levels())
                .map(|i| {
                    let o = e.level(i).restrict(|&v| v < g.vertex_count());
                    let start = o.as_slice().iter().copied().min_by_key(|&v| g.name(v).to_string());
                    start.map_or_else(Vec::new, |s| o.starting_at(&s).unwrap())
                })
                .collect()
        })
    };
    let found = match surface {
        OracleSurface::Torus => circular(lib!(oracle::oracle_torus(g, budget))?),
        OracleSurface::Radial => circular(lib!(oracle::brute_radial(g, budget))?),
        OracleSurface::Cyclic => lib!(oracle::brute_cyclic(g, budget))?,
        OracleSurface::Sim => lib!(sim_level::oracle_sim(g, budget))?,
    };
    Ok(report_orders(g, found, out))
}

fn cmd_render(g: &LevelGraph, surface: Surface, path: &Path, out: &mut String) -> Result<i32, Failure> {
    match lib!(torus_planarity::test(g, surface))? {
        Planarity::Planar(w) => {
            let svg = lib!(render::render_svg(&w.graph, &w.embedding))?;
            write_file(path, &svg)?;
            out.push_str(&format!("planar\nwrote {}\n", path.display()));
            Ok(EXIT_PLANAR)
        }
        Planarity::NonPlanar => {
            out.push_str("nonplanar\n");
            Ok(EXIT_NONPLANAR)
        }
    }
}

/// Mismatch count per check over the small corpus.
pub fn selfcheck() -> Result<Vec<(String, usize, usize)>, Error> {
    let budget = OracleBudget::default();
    let mut rows = Vec::new();
    let graphs: Vec<LevelGraph> = corpus::exhaustive_proper(2, 2).into_iter().chain(corpus::exhaustive_proper(3, 1)).collect();
    for surface in [Surface::Torus, Surface::Cyclic, Surface::Radial] {
        let mut bad = 0;
        for g in &graphs {
            if torus_planarity::test(g, surface)?.is_planar() != oracle::oracle_planar(g, surface, &budget)? {
                bad += 1;
            }
        }
        rows.push((format!("{surface:?}").to_lowercase(), graphs.len(), bad));
    }
    let sims = corpus::exhaustive_sim_2x2(2, 2);
    let mut bad = 0;
    for g in &sims {
        if sim_level::test_sim_2x2(g)?.is_some() != oracle::brute_sim_level(g, &budget)?.is_some() {
            bad += 1;
        }
    }
    rows.push(("sim-2x2".to_string(), sims.len(), bad));
    let wide = OracleBudget { max_level_vertices: 64, ..budget };
    let instances = corpus::exhaustive_betweenness(4, 1);
    for (name, generate) in [
        ("betweenness-3x2", sim_level::gen_gadget_3x2 as fn(&BetweennessInstance) -> _),
        ("betweenness-2x3", sim_level::gen_gadget_2x3),
    ] {
        let mut bad = 0;
        for b in &instances {
            let sat = sim_level::solve_betweenness(b)?.is_some();
            if sim_level::oracle_sim(&generate(b)?.graph, &wide)?.is_some() != sat {
                bad += 1;
            }
        }
        rows.push((name.to_string(), instances.len(), bad));
    }
    Ok(rows)
}

fn dispatch(cli: Cli, stdin: &mut dyn Read, out: &mut String) -> Result<i32, Failure> {
    let graph = |file: &str, stdin: &mut dyn Read| -> Result<LevelGraph, Failure> { lib!(LevelGraph::parse(&read_input(file, stdin)?)) };
    match cli.command {
        Command::Test { surface, file, dump_instance } => {
            cmd_test(&graph(&file, stdin)?, surface.into(), dump_instance.as_deref(), out)
        }
        Command::SimTest { file, budget } => cmd_sim(&graph(&file, stdin)?, &budget.budget(), out),
        Command::Gen { family, file } => {
            let b = lib!(BetweennessInstance::parse(&read_input(&file, stdin)?))?;
            let gadget = match family {
                Family::Betweenness3x2 => lib!(sim_level::gen_gadget_3x2(&b))?,
                Family::Betweenness2x3 => lib!(sim_level::gen_gadget_2x3(&b))?,
            };
            out.push_str(&gadget.graph.to_text());
            Ok(EXIT_PLANAR)
        }
        Command::Oracle { surface, file, budget } => cmd_oracle(&graph(&file, stdin)?, surface, &budget.budget(), out),
        Command::Render { file, output, surface } => cmd_render(&graph(&file, stdin)?, surface.into(), &output, out),
        Command::Selfcheck => {
            let rows = lib!(selfcheck())?;
            let mut ok = true;
            for (name, n, bad) in rows {
                ok &= bad == 0;
                out.push_str(&format!("{} {name}: {n} instances, {bad} mismatches\n", if bad == 0 { "ok" } else { "FAIL" }));
            }
            Ok(if ok { EXIT_PLANAR } else { EXIT_NONPLANAR })
        }
    }
}

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PLANAR };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut out = String::new();
    let code = match dispatch(cli, stdin, &mut out) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Budget(msg)) => {
            let _ = writeln!(stderr, "budget exceeded: {msg}");
            EXIT_BUDGET
        }
    };
    let _ = stdout.write_all(out.as_bytes());
    code
}
