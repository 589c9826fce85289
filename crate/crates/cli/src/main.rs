//! mixlab: command-line front end for the mixing laboratory.
//!
//! Every subcommand echoes its fully resolved configuration as the first
//! comment line of its CSV output, writes numbers at full double precision,
//! and is deterministic given its inputs plus the global `--seed`. Exit
//! codes: 0 on success, 2 on usage errors, 1 on computation errors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mixlab_core::counterexample::{decompose_interaction, MultiscaleParams};
use mixlab_core::flow::{verify_transport_identity, AnalyticFlow};
use mixlab_core::grid::{make_checkerboard, make_half_torus, GridSpec, IndicatorField};
use mixlab_core::rotation::{
    quarter_square, random_corpus, recursive_scheme, seminorm_ledger, MoveSequence,
};
use mixlab_core::seminorm::{bianchini_seminorm, mixing_scale, SemiNormParams, DEFAULT_RHO};
use mixlab_core::slide::{bfs_min_moves, greedy_mix, SlideState};

#[derive(Parser)]
#[command(
    name = "mixlab",
    version,
    about = "Numerical laboratory for quantitative mixing"
)]
struct Cli {
    /// Seed for any randomized subcommand.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Truncated mixing semi-norm of a set.
    Seminorm(SeminormArgs),
    /// Per-radius ball-average extrema and the resolved mixing scale.
    Mixscale(MixscaleArgs),
    /// Run the recursive quadrisection scheme and write its level ledger.
    RunScheme(RunSchemeArgs),
    /// Replay a move sequence, recording per-move semi-norm deltas.
    Ledger(LedgerArgs),
    /// Exhaustive or cascade mixing distances on the discrete torus.
    Slider(SliderArgs),
    /// Check the semi-norm transport identity along a shear flow.
    VerifyIdentity(VerifyIdentityArgs),
    /// Multiscale interaction decomposition with certified part bounds.
    Counterexample(CounterexampleArgs),
    /// Render series from a CSV file as a standalone SVG plot.
    Plot(PlotArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Shape {
    /// Left half of the torus.
    Half,
    /// The quarter square (0, 1/2)^2.
    Quarter,
    /// Checkerboard with blocks of side 2^-m.
    Checker,
}

impl Shape {
    fn name(self) -> &'static str {
        match self {
            Shape::Half => "half",
            Shape::Quarter => "quarter",
            Shape::Checker => "checker",
        }
    }
}

/// Where the input set comes from: a file or a built-in shape.
#[derive(Args)]
struct FieldArgs {
    /// Set file (text grid of '.' and '#').
    #[arg(long)]
    set: Option<PathBuf>,
    /// Built-in shape instead of a file.
    #[arg(long, value_enum)]
    shape: Option<Shape>,
    /// Grid side for built-in shapes.
    #[arg(long = "N", default_value_t = 256)]
    n: usize,
    /// Block scale for the checker shape: blocks of side 2^-m.
    #[arg(long, default_value_t = 3)]
    checker_m: u32,
}

impl FieldArgs {
    fn load(&self) -> anyhow::Result<IndicatorField> {
        match (&self.set, self.shape) {
            (Some(path), None) => {
                IndicatorField::read_file(path).with_context(|| format!("reading {path:?}"))
            }
            (None, Some(shape)) => {
                let spec = GridSpec::new(self.n)?;
                Ok(match shape {
                    Shape::Half => make_half_torus(spec),
                    Shape::Quarter => quarter_square(spec),
                    Shape::Checker => make_checkerboard(spec, self.checker_m)?,
                })
            }
            _ => usage("exactly one of --set and --shape is required"),
        }
    }

    fn describe(&self) -> String {
        match (&self.set, self.shape) {
            (Some(path), _) => format!("set={}", path.display()),
            (_, Some(Shape::Checker)) => {
                format!("shape=checker checker_m={} N={}", self.checker_m, self.n)
            }
            (_, Some(shape)) => format!("shape={} N={}", shape.name(), self.n),
            _ => "unresolved".into(),
        }
    }
}

#[derive(Args)]
struct SeminormArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Truncation radius, in (0, 1/8).
    #[arg(long, default_value_t = 1.0 / 64.0)]
    eps: f64,
    /// Two-sided mixedness constant, in (0, 1/2).
    #[arg(long, default_value_t = 1.0 / 3.0)]
    kappa: f64,
    /// Geometric step of the radius grid.
    #[arg(long, default_value_t = DEFAULT_RHO)]
    rho: f64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct MixscaleArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    eps: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    kappa: f64,
    #[arg(long, default_value_t = DEFAULT_RHO)]
    rho: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct RunSchemeArgs {
    /// Number of quadrisection levels.
    #[arg(long)]
    levels: u32,
    /// Grid side.
    #[arg(long = "N", default_value_t = 256)]
    n: usize,
    /// Ledger CSV path (stdout when omitted).
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// Also write the full move sequence here.
    #[arg(long)]
    moves_out: Option<PathBuf>,
}

#[derive(Args)]
struct LedgerArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Move sequence file to replay.
    #[arg(long)]
    moves: Option<PathBuf>,
    /// Replay a seeded random sequence of this length instead.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 1.0 / 16.0)]
    eps: f64,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    kappa: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SliderArgs {
    /// Torus parameter: the grid has side 2n.
    #[arg(long)]
    n: usize,
    /// Run the halving cascade with this move budget instead of the
    /// exhaustive search.
    #[arg(long)]
    cascade_budget: Option<usize>,
    /// Depth cap for the exhaustive search.
    #[arg(long, default_value_t = 16)]
    max_depth: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyIdentityArgs {
    /// Grid side.
    #[arg(long = "N", default_value_t = 256)]
    n: usize,
    /// Midpoint time steps.
    #[arg(long, default_value_t = 9)]
    steps: usize,
    /// Annulus inner radius and semi-norm truncation.
    #[arg(long, default_value_t = 1.0 / 16.0)]
    eps: f64,
    /// Shear amplitude.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Final time.
    #[arg(long = "T", default_value_t = 0.3)]
    t_final: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write the (t, form value) samples here.
    #[arg(long)]
    samples: Option<PathBuf>,
}

#[derive(Args)]
struct CounterexampleArgs {
    /// Scale exponent per level.
    #[arg(long = "M")]
    m: u32,
    /// Number of levels; one row is emitted for each l in 2..=L.
    #[arg(long = "L")]
    l: u32,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Input CSV (as emitted by the other subcommands).
    #[arg(long)]
    csv: PathBuf,
    /// Column name for the x axis.
    #[arg(long)]
    x: String,
    /// Column name(s) to plot against x; repeat for several series.
    #[arg(long, required = true)]
    y: Vec<String>,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
    /// Plot title.
    #[arg(long, default_value = "")]
    title: String,
}

fn usage(msg: &str) -> ! {
    eprintln!("mixlab: {msg}");
    std::process::exit(2);
}

fn main() {
    if let Ok(raw) = std::env::var("MIXLAB_THREADS") {
        match raw.parse::<usize>() {
            Ok(k) if k >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global();
            }
            _ => eprintln!("mixlab: ignoring invalid MIXLAB_THREADS={raw}"),
        }
    }
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("mixlab: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Seminorm(a) => cmd_seminorm(a, cli.seed),
        Cmd::Mixscale(a) => cmd_mixscale(a, cli.seed),
        Cmd::RunScheme(a) => cmd_run_scheme(a, cli.seed),
        Cmd::Ledger(a) => cmd_ledger(a, cli.seed),
        Cmd::Slider(a) => cmd_slider(a, cli.seed),
        Cmd::VerifyIdentity(a) => cmd_verify_identity(a, cli.seed),
        Cmd::Counterexample(a) => cmd_counterexample(a, cli.seed),
        Cmd::Plot(a) => cmd_plot(a, cli.seed),
    }
}

/// Full double precision: 17 significant digits.
fn sig(v: f64) -> String {
    format!("{v:.16e}")
}

/// RFC-style quoting: quote when the field holds a comma, quote, or newline.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Open the sink: a buffered file, or stdout when no path is given.
fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {p:?}"))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

/// Write one CSV table: the resolved config comment first, then any extra
/// comment lines, then the header and rows.
fn write_csv(
    path: Option<&Path>,
    config: &str,
    extra_comments: &[String],
    header: &[&str],
    rows: &[Vec<String>],
) -> anyhow::Result<()> {
    let mut out = sink(path)?;
    writeln!(out, "# config: {config}")?;
    for line in extra_comments {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let quoted: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
        writeln!(out, "{}", quoted.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_seminorm(args: SeminormArgs, seed: u64) -> anyhow::Result<()> {
    let field = args.field.load()?;
    let params = SemiNormParams::new(args.eps, args.rho, args.kappa)?;
    let value = bianchini_seminorm(&field, &params);
    let config = format!(
        "cmd=seminorm {} eps={} kappa={} rho={} seed={seed}",
        args.field.describe(),
        sig(args.eps),
        sig(args.kappa),
        sig(args.rho),
    );
    write_csv(
        args.csv.as_deref(),
        &config,
        &[],
        &["eps", "kappa", "rho", "seminorm"],
        &[vec![
            sig(args.eps),
            sig(args.kappa),
            sig(args.rho),
            sig(value),
        ]],
    )
}

fn cmd_mixscale(args: MixscaleArgs, seed: u64) -> anyhow::Result<()> {
    let field = args.field.load()?;
    let params = SemiNormParams::new(args.eps, args.rho, args.kappa)?;
    let report = mixing_scale(&field, &params);
    let config = format!(
        "cmd=mixscale {} eps={} kappa={} rho={} seed={seed}",
        args.field.describe(),
        sig(args.eps),
        sig(args.kappa),
        sig(args.rho),
    );
    let scale_line = match report.scale {
        Some(r) => format!("mixing scale: {}", sig(r)),
        None => "mixing scale: none at or below 1/4".into(),
    };
    let rows: Vec<Vec<String>> = report
        .per_radius
        .iter()
        .map(|&(r, lo, hi)| {
            let mixed = lo >= args.kappa && hi <= 1.0 - args.kappa;
            vec![sig(r), sig(lo), sig(hi), mixed.to_string()]
        })
        .collect();
    write_csv(
        args.csv.as_deref(),
        &config,
        &[scale_line],
        &["r", "min_avg", "max_avg", "mixed"],
        &rows,
    )
}

fn cmd_run_scheme(args: RunSchemeArgs, seed: u64) -> anyhow::Result<()> {
    let spec = GridSpec::new(args.n)?;
    let (seq, ledger) = recursive_scheme(args.levels, spec)?;
    if let Some(path) = &args.moves_out {
        seq.write_file(path)?;
    }
    let config = format!(
        "cmd=run-scheme levels={} N={} kappa={} eps={} seed={seed}",
        args.levels,
        args.n,
        sig(ledger.kappa),
        sig(ledger.eps),
    );
    let rows: Vec<Vec<String>> = ledger
        .rows
        .iter()
        .map(|row| {
            vec![
                row.level.to_string(),
                row.moves.to_string(),
                sig(row.level_cost),
                sig(row.seminorm_after),
                row.mixing_scale_after.map(sig).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(
        args.ledger.as_deref(),
        &config,
        &[],
        &[
            "level",
            "moves",
            "level_cost",
            "seminorm_after",
            "mixing_scale_after",
        ],
        &rows,
    )
}

fn cmd_ledger(args: LedgerArgs, seed: u64) -> anyhow::Result<()> {
    let field = args.field.load()?;
    let seq = match (&args.moves, args.random) {
        (Some(path), None) => MoveSequence::read_file(path)?,
        (None, Some(len)) => random_corpus(field.spec(), len, seed),
        _ => usage("exactly one of --moves and --random is required"),
    };
    let params = SemiNormParams::with_default_rho(args.eps, args.kappa)?;
    let ledger = seminorm_ledger(&field, &seq, &params)?;
    let moves_desc = match (&args.moves, args.random) {
        (Some(path), _) => format!("moves={}", path.display()),
        (_, Some(len)) => format!("random={len}"),
        _ => unreachable!("validated above"),
    };
    let config = format!(
        "cmd=ledger {} {moves_desc} eps={} kappa={} seed={seed}",
        args.field.describe(),
        sig(args.eps),
        sig(args.kappa),
    );
    let rows: Vec<Vec<String>> = ledger
        .rows
        .iter()
        .map(|row| {
            vec![
                row.index.to_string(),
                sig(row.cost),
                sig(row.seminorm_after),
                sig(row.delta),
                sig(row.delta_over_cost),
                sig(row.defect_bound),
            ]
        })
        .collect();
    write_csv(
        args.csv.as_deref(),
        &config,
        &[format!(
            "initial seminorm: {}",
            sig(ledger.seminorm_initial)
        )],
        &[
            "index",
            "cost",
            "seminorm_after",
            "delta",
            "delta_over_cost",
            "defect_bound",
        ],
        &rows,
    )
}

fn cmd_slider(args: SliderArgs, seed: u64) -> anyhow::Result<()> {
    match args.cascade_budget {
        Some(budget) => {
            let rep = greedy_mix(args.n, budget)?;
            let config = format!(
                "cmd=slider n={} cascade_budget={budget} seed={seed}",
                args.n
            );
            write_csv(
                args.csv.as_deref(),
                &config,
                &[],
                &[
                    "n",
                    "mode",
                    "moves_used",
                    "reached_parity",
                    "mixed_scale_cells",
                ],
                &[vec![
                    args.n.to_string(),
                    "cascade".into(),
                    rep.moves_used.to_string(),
                    rep.reached_parity.to_string(),
                    rep.mixed_scale_cells
                        .map(|c| c.to_string())
                        .unwrap_or_default(),
                ]],
            )
        }
        None => {
            let start = SlideState::columns(args.n)?;
            let goal = SlideState::parity(args.n)?;
            let dist = bfs_min_moves(&start, &goal, args.max_depth)?;
            let config = format!(
                "cmd=slider n={} max_depth={} seed={seed}",
                args.n, args.max_depth
            );
            write_csv(
                args.csv.as_deref(),
                &config,
                &[],
                &["n", "mode", "distance"],
                &[vec![
                    args.n.to_string(),
                    "exhaustive".into(),
                    dist.map(|d| d.to_string()).unwrap_or_default(),
                ]],
            )
        }
    }
}

fn cmd_verify_identity(args: VerifyIdentityArgs, seed: u64) -> anyhow::Result<()> {
    let spec = GridSpec::new(args.n)?;
    let half = spec.side() / 2;
    let a = IndicatorField::from_fn(spec, |_, j| j < half);
    let flow = AnalyticFlow::SteadyShear { a: args.a };
    let rep = verify_transport_identity(&a, &flow, args.t_final, args.eps, args.steps)?;
    let config = format!(
        "cmd=verify-identity N={} steps={} eps={} a={} T={} seed={seed}",
        args.n,
        args.steps,
        sig(args.eps),
        sig(args.a),
        sig(args.t_final),
    );
    if let Some(path) = &args.samples {
        let rows: Vec<Vec<String>> = rep
            .form_samples
            .iter()
            .map(|&(t, s)| vec![sig(t), sig(s)])
            .collect();
        write_csv(Some(path), &config, &[], &["t", "form_value"], &rows)?;
    }
    write_csv(
        args.csv.as_deref(),
        &config,
        &[],
        &["lhs", "rhs", "rel_gap", "seminorm_start", "seminorm_end"],
        &[vec![
            sig(rep.lhs),
            sig(rep.rhs),
            sig(rep.rel_gap),
            sig(rep.seminorm_start),
            sig(rep.seminorm_end),
        ]],
    )
}

fn cmd_counterexample(args: CounterexampleArgs, seed: u64) -> anyhow::Result<()> {
    if args.l < 2 {
        usage("--L must be at least 2");
    }
    let config = format!("cmd=counterexample M={} L={} seed={seed}", args.m, args.l);
    let mut rows = Vec::new();
    for l in 2..=args.l {
        let rep = decompose_interaction(&MultiscaleParams::new(args.m, l)?)?;
        rows.push(vec![
            l.to_string(),
            sig(rep.eps),
            sig(rep.e1),
            sig(rep.e2_signed),
            sig(rep.e3_signed),
            sig(rep.i_total),
            sig(rep.e1_floor),
        ]);
    }
    write_csv(
        args.csv.as_deref(),
        &config,
        &[],
        &["L", "eps", "E1", "E2", "E3", "I", "e1_floor"],
        &rows,
    )
}

/// One plot series: a label and its points.
struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

/// Everything the SVG emitter needs; coordinates must be finite.
struct PlotSpec {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
}

fn cmd_plot(args: PlotArgs, _seed: u64) -> anyhow::Result<()> {
    let (header, rows) = read_csv(&args.csv)?;
    let col = |name: &str| -> anyhow::Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("no column named {name:?} in {:?}", args.csv))
    };
    let xi = col(&args.x)?;
    let mut series = Vec::new();
    for yname in &args.y {
        let yi = col(yname)?;
        let mut points = Vec::new();
        for (line, row) in rows.iter().enumerate() {
            let parse = |idx: usize, name: &str| -> anyhow::Result<f64> {
                row.get(idx)
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        anyhow!("row {} column {name:?} is not a finite number", line + 1)
                    })
            };
            points.push((parse(xi, &args.x)?, parse(yi, yname)?));
        }
        if points.is_empty() {
            bail!("column {yname:?} has no data rows");
        }
        series.push(Series {
            label: yname.clone(),
            points,
        });
    }
    let spec = PlotSpec {
        title: args.title.clone(),
        x_label: args.x.clone(),
        y_label: args.y.join(", "),
        series,
    };
    emit_svg(&spec, &args.out)
}

/// Read one of our CSV tables: comments stripped, header split, rows kept
/// as strings.
fn read_csv(path: &Path) -> anyhow::Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path:?}"))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| anyhow!("{path:?} has no header line"))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((header, rows))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Tick label: plain decimal in a middle range, scientific outside it.
fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.3e}")
    }
}

const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

/// Write a standalone SVG line plot. Output bytes depend only on the input.
fn emit_svg(plot: &PlotSpec, path: &Path) -> anyhow::Result<()> {
    if plot.series.is_empty() || plot.series.iter().any(|s| s.points.is_empty()) {
        bail!("every plot series needs at least one point");
    }
    for s in &plot.series {
        for &(x, y) in &s.points {
            if !x.is_finite() || !y.is_finite() {
                bail!("series {:?} holds a non-finite point", s.label);
            }
        }
    }
    let (w, h) = (800.0, 520.0);
    let (ml, mr, mt, mb) = (80.0, 24.0, 44.0, 56.0);
    let all = plot.series.iter().flat_map(|s| s.points.iter());
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for &(x, y) in all {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    // pad degenerate ranges so single points sit mid-axis
    if x_lo == x_hi {
        let pad = x_lo.abs().max(1.0) * 0.5;
        x_lo -= pad;
        x_hi += pad;
    }
    if y_lo == y_hi {
        let pad = y_lo.abs().max(1.0) * 0.5;
        y_lo -= pad;
        y_hi += pad;
    }
    let sx = |x: f64| ml + (x - x_lo) / (x_hi - x_lo) * (w - ml - mr);
    let sy = |y: f64| h - mb - (y - y_lo) / (y_hi - y_lo) * (h - mt - mb);
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    if !plot.title.is_empty() {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"26\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
            w / 2.0,
            xml_escape(&plot.title)
        ));
    }
    // axes box and ticks
    svg.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" \
         stroke=\"#333\"/>\n",
        w - ml - mr,
        h - mt - mb
    ));
    for k in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * f64::from(k) / 4.0;
        let fy = y_lo + (y_hi - y_lo) * f64::from(k) / 4.0;
        let px = sx(fx);
        let py = sy(fy);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{:.1}\" x2=\"{px:.2}\" y2=\"{:.1}\" stroke=\"#333\"/>\n",
            h - mb,
            h - mb + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            h - mb + 20.0,
            xml_escape(&fmt_tick(fx))
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{py:.2}\" x2=\"{ml}\" y2=\"{py:.2}\" stroke=\"#333\"/>\n",
            ml - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            ml - 9.0,
            py + 4.0,
            xml_escape(&fmt_tick(fy))
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        ml + (w - ml - mr) / 2.0,
        h - 12.0,
        xml_escape(&plot.x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
        mt + (h - mt - mb) / 2.0,
        mt + (h - mt - mb) / 2.0,
        xml_escape(&plot.y_label)
    ));
    for (si, s) in plot.series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        if s.points.len() > 1 {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                 stroke-width=\"1.5\"/>\n",
                pts.join(" ")
            ));
        }
        for &(x, y) in &s.points {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                sx(x),
                sy(y)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{}</text>\n",
            w - mr - 150.0,
            mt + 18.0 + 16.0 * si as f64,
            xml_escape(&s.label)
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).with_context(|| format!("writing {path:?}"))?;
    Ok(())
}
