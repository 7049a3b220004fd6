mod config;
mod fmt;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cyclharm::checks::{self, CheckOutcome};
use cyclharm::eigen::{self, Catalog, EigenRecord, ParityVector, RecordKey};
use cyclharm::expansion::{
    applicable_case, expansion_constant, reciprocal_expansion, spherical_expansion,
    ConvergenceReport,
};
use cyclharm::geometry::{
    curve_polylines, from_cyclidic, surface_chart, surface_patches, to_cyclidic, CurveSet,
    CyclidicCoords, OctantFlags, Params, Point3,
};
use cyclharm::harmonics::HarmonicPair;
use cyclharm::{hexfloat, Error};
use serde_json::json;

use config::{parse_format, Config, ConfigError, Format, Overrides};

#[derive(Parser, Debug)]
#[command(
    name = "cyclharm",
    version,
    about = "5-cyclidic harmonics and reciprocal-distance expansions"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Global {
    /// Config file (JSON); defaults to ./cyclharm.json when present
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Singular points a0,a1,a2,a3
    #[arg(long, global = true, value_parser = parse_four, allow_hyphen_values = true)]
    a: Option<[f64; 4]>,
    /// Gauss-Legendre points per patch direction
    #[arg(long, global = true)]
    quad_order: Option<usize>,
    /// Eigen residual tolerance
    #[arg(long, global = true, value_parser = parse_real)]
    tol: Option<f64>,
    /// Eigenvalue cache file
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// csv or json
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
    /// Worker threads (0: one per core)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Diagnostics on stderr
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Cartesian <-> 5-cyclidic coordinates
    #[command(subcommand)]
    Coords(CoordsCmd),
    /// Eigenvalues of the separated equations
    #[command(subcommand)]
    Eigen(EigenCmd),
    /// Evaluate harmonics
    #[command(subcommand)]
    Harmonic(HarmonicCmd),
    /// Reciprocal-distance expansions
    #[command(subcommand)]
    Expand(ExpandCmd),
    /// Coordinate-surface meshes
    #[command(subcommand)]
    Surface(SurfaceCmd),
    /// Polylines of the curve sets A1 and A2
    Curves {
        #[arg(long, value_parser = parse_curve_set)]
        set: CurveSet,
        #[arg(long, default_value_t = 256)]
        segments: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an invariant suite: geometry, fuchsian, eigen, harmonics, expansion or all
    Check { suite: String },
    /// Print the resolved configuration
    Config,
}

#[derive(Subcommand, Debug)]
enum CoordsCmd {
    /// Cartesian point to (s1, s2, s3)
    To {
        #[arg(long, value_parser = parse_three, allow_hyphen_values = true)]
        point: [f64; 3],
    },
    /// (s1, s2, s3) and a sign word to a Cartesian point
    From {
        #[arg(long, value_parser = parse_three)]
        s: [f64; 3],
        /// signs of x, y, z such as "+-+"
        #[arg(long, default_value = "+++")]
        signs: String,
        /// take the preimage outside the unit sphere
        #[arg(long)]
        outside: bool,
    },
}

#[derive(Args, Debug, Clone)]
struct IndexArgs {
    #[arg(long)]
    kind: u8,
    #[arg(long, value_parser = parse_index)]
    n: [usize; 2],
    /// parity bits, e.g. 0110 (kind 2) or 101 (kinds 1, 3)
    #[arg(long)]
    p: String,
}

#[derive(Subcommand, Debug)]
enum EigenCmd {
    /// One eigenpair
    Solve {
        #[command(flatten)]
        index: IndexArgs,
    },
    /// All eigenpairs up to a total order
    Table {
        #[arg(long)]
        kind: Option<u8>,
        #[arg(long, default_value_t = 2)]
        max_order: usize,
    },
}

#[derive(Subcommand, Debug)]
enum HarmonicCmd {
    /// Internal (G) and external (H) harmonic at a point
    Eval {
        #[command(flatten)]
        index: IndexArgs,
        #[arg(long, value_parser = parse_three, allow_hyphen_values = true)]
        point: [f64; 3],
        /// internal, external or both
        #[arg(long, default_value = "both")]
        role: String,
    },
}

#[derive(Subcommand, Debug)]
enum ExpandCmd {
    /// Partial sums of 1/|r - r'| against the direct value
    Verify {
        /// 1, 2, 3 or sph
        #[arg(long)]
        kind: String,
        #[arg(long, value_parser = parse_three, allow_hyphen_values = true)]
        r: [f64; 3],
        #[arg(long, value_parser = parse_three, allow_hyphen_values = true)]
        rp: [f64; 3],
        #[arg(long, default_value_t = 4)]
        max_order: usize,
    },
}

#[derive(Subcommand, Debug)]
enum SurfaceCmd {
    /// Grid points of the surface s_coord = d on every patch
    Mesh {
        #[arg(long)]
        coord: usize,
        #[arg(long, value_parser = parse_real)]
        d: f64,
        #[arg(long, default_value_t = 16)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_real(s: &str) -> Result<f64, String> {
    hexfloat::parse(s).map_err(|e| e.to_string())
}

fn parse_list<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s.split(',').map(parse_real).collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|_| format!("expected {N} comma-separated reals, got {s:?}"))
}

fn parse_three(s: &str) -> Result<[f64; 3], String> {
    parse_list::<3>(s)
}

fn parse_four(s: &str) -> Result<[f64; 4], String> {
    parse_list::<4>(s)
}

fn parse_index(s: &str) -> Result<[usize; 2], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|_| format!("expected two comma-separated integers, got {s:?}"))
}

fn parse_curve_set(s: &str) -> Result<CurveSet, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Lib(Error),
    Config(String),
    Usage(String),
    Io(std::io::Error),
    Checks(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => Failure::Io(e),
            // an unreadable or stale cache is a configuration problem
            Error::Catalog(m) => Failure::Config(m),
            Error::Json(e) => Failure::Config(e.to_string()),
            e => Failure::Lib(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl Failure {
    fn report(&self) -> (u8, String) {
        match self {
            Failure::Lib(e) if e.is_solver_failure() => (3, format!("solver failure: {e}")),
            Failure::Lib(e) => (2, e.to_string()),
            Failure::Config(m) => (78, format!("config error: {m}")),
            Failure::Usage(m) => (64, m.clone()),
            Failure::Io(e) => (74, format!("i/o error: {e}")),
            Failure::Checks(n) => (1, format!("{n} check(s) failed")),
        }
    }
}

struct Ctx {
    cfg: Config,
    verbose: bool,
    out: Vec<u8>,
}

impl Ctx {
    fn line(&mut self, s: impl AsRef<str>) {
        self.out.extend_from_slice(s.as_ref().as_bytes());
        self.out.push(b'\n');
    }

    fn json(&mut self, v: serde_json::Value) {
        let s = serde_json::to_string_pretty(&v).expect("serializable");
        self.line(s);
    }

    fn note(&self, s: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", s.as_ref());
        }
    }

    fn params(&self) -> Params<f64> {
        self.cfg.params()
    }

    fn load_catalog(&self) -> Result<Catalog, Failure> {
        let params = self.params();
        let mut cat = match &self.cfg.cache {
            Some(p) if p.exists() => Catalog::load(p, Some(&params))?,
            _ => Catalog::new(params),
        };
        cat.tol = self.cfg.tol;
        self.note(format!("cached records: {}", cat.len()));
        Ok(cat)
    }

    fn store_catalog(&self, cat: &Catalog, before: usize) -> Result<(), Failure> {
        if let Some(p) = &self.cfg.cache {
            if cat.len() != before || !p.exists() {
                cat.save(p)?;
            }
        }
        Ok(())
    }

    fn record(&self, cat: &mut Catalog, ix: &IndexArgs) -> Result<EigenRecord, Failure> {
        let p = ParityVector::parse(ix.kind, &ix.p)?;
        let key = RecordKey {
            kind: ix.kind,
            n: ix.n,
            p: p.clone(),
        };
        if let Some(r) = cat.get(&key) {
            return Ok(r.clone());
        }
        let before = cat.len();
        let rec = eigen::solve_eigen(ix.kind, ix.n, &p, &cat.params, cat.tol)?;
        cat.insert(rec.clone());
        self.store_catalog(cat, before)?;
        Ok(rec)
    }
}

fn sign_char(s: i8) -> char {
    if s < 0 {
        '-'
    } else {
        '+'
    }
}

fn parse_signs(s: &str) -> Result<[i8; 3], Failure> {
    let v: Vec<i8> = s
        .chars()
        .filter(|c| *c != ',')
        .map(|c| match c {
            '+' => Ok(1),
            '-' => Ok(-1),
            _ => Err(Failure::Usage(format!("bad sign {c:?} in {s:?}"))),
        })
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|_| Failure::Usage(format!("expected three signs, got {s:?}")))
}

fn coords(ctx: &mut Ctx, cmd: CoordsCmd) -> Result<(), Failure> {
    let params = ctx.params();
    match cmd {
        CoordsCmd::To { point } => {
            let p = Point3::from_array(point);
            if !p.is_finite() {
                return Err(Error::Domain(format!("point {point:?} is not finite")).into());
            }
            let c = to_cyclidic(p, &params);
            let f = OctantFlags::of_point(p);
            let signs: String = [f.sign_x, f.sign_y, f.sign_z]
                .iter()
                .map(|&s| sign_char(s))
                .collect();
            let side = if f.inside { "inside" } else { "outside" };
            match ctx.cfg.format {
                Format::Csv => {
                    ctx.line(format!("s = {}", fmt::nums(&c.as_array(), " ")));
                    ctx.line(format!("flags = {signs} {side}"));
                }
                Format::Json => ctx.json(json!({
                    "s": c.as_array().map(fmt::json),
                    "signs": signs,
                    "inside": f.inside,
                })),
            }
        }
        CoordsCmd::From { s, signs, outside } => {
            let sg = parse_signs(&signs)?;
            let flags = OctantFlags::new(sg[0], sg[1], sg[2], !outside);
            let p = from_cyclidic(&CyclidicCoords::from_array(s), flags, &params)?;
            match ctx.cfg.format {
                Format::Csv => ctx.line(format!("point = {}", fmt::nums(&p.to_array(), " "))),
                Format::Json => ctx.json(json!({ "point": p.to_array().map(fmt::json) })),
            }
        }
    }
    Ok(())
}

const RECORD_HEADER: &str =
    "kind,n1,n2,p,lambda1,lambda2,norm_scale,residual1,residual2,zeros1,zeros2";

fn record_csv(r: &EigenRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.kind,
        r.n[0],
        r.n[1],
        r.p,
        fmt::num(r.lam.lambda1),
        fmt::num(r.lam.lambda2),
        fmt::num(r.norm_scale),
        fmt::num(r.residuals[0]),
        fmt::num(r.residuals[1]),
        r.zero_counts[0],
        r.zero_counts[1]
    )
}

fn record_json(r: &EigenRecord) -> serde_json::Value {
    let mut v = json!({
        "kind": r.kind,
        "n": r.n,
        "p": r.p.to_string(),
        "lambda1": fmt::json(r.lam.lambda1),
        "lambda2": fmt::json(r.lam.lambda2),
        "norm_scale": fmt::json(r.norm_scale),
        "residuals": r.residuals.map(fmt::json),
        "zero_counts": r.zero_counts,
    });
    if let Some(c) = &r.connection {
        v["connection"] = json!({
            "a": fmt::json(c.a_coef),
            "b": fmt::json(c.b_coef),
            "c": fmt::json(c.c_coef),
        });
    }
    v
}

fn emit_records(ctx: &mut Ctx, recs: &[&EigenRecord]) {
    match ctx.cfg.format {
        Format::Csv => {
            ctx.line(RECORD_HEADER);
            for r in recs {
                ctx.line(record_csv(r));
            }
        }
        Format::Json => {
            let v: Vec<_> = recs.iter().map(|r| record_json(r)).collect();
            ctx.json(serde_json::Value::Array(v));
        }
    }
}

fn eigen_cmd(ctx: &mut Ctx, cmd: EigenCmd) -> Result<(), Failure> {
    let mut cat = ctx.load_catalog()?;
    let calls = eigen::solve_count();
    match cmd {
        EigenCmd::Solve { index } => {
            let rec = ctx.record(&mut cat, &index)?;
            emit_records(ctx, &[&rec]);
        }
        EigenCmd::Table { kind, max_order } => {
            let kinds: Vec<u8> = match kind {
                Some(k) => vec![k],
                None => vec![1, 2, 3],
            };
            let before = cat.len();
            for &k in &kinds {
                cat.fill(k, max_order)?;
            }
            ctx.store_catalog(&cat, before)?;
            let recs: Vec<&EigenRecord> = kinds
                .iter()
                .flat_map(|&k| cat.of_kind(k))
                .filter(|r| r.n[0] + r.n[1] <= max_order)
                .collect();
            emit_records(ctx, &recs);
        }
    }
    ctx.note(format!("new solves: {}", eigen::solve_count() - calls));
    Ok(())
}

fn harmonic_cmd(ctx: &mut Ctx, cmd: HarmonicCmd) -> Result<(), Failure> {
    let HarmonicCmd::Eval { index, point, role } = cmd;
    let (want_g, want_h) = match role.as_str() {
        "internal" => (true, false),
        "external" => (false, true),
        "both" => (true, true),
        _ => return Err(Failure::Usage(format!("unknown role {role:?}"))),
    };
    let mut cat = ctx.load_catalog()?;
    let rec = ctx.record(&mut cat, &index)?;
    let h = HarmonicPair::from_record(&rec, &cat.params)?;
    let p = Point3::from_array(point);
    let g = if want_g {
        Some(h.eval_internal(p)?)
    } else {
        None
    };
    let e = if want_h {
        Some(h.eval_external(p)?)
    } else {
        None
    };
    match ctx.cfg.format {
        Format::Csv => {
            if let Some(g) = g {
                ctx.line(format!("G = {}", fmt::num(g)));
            }
            if let Some(e) = e {
                ctx.line(format!("H = {}", fmt::num(e)));
            }
        }
        Format::Json => ctx.json(json!({
            "G": g.map(fmt::json),
            "H": e.map(fmt::json),
        })),
    }
    Ok(())
}

fn report_out(ctx: &mut Ctx, rep: &ConvergenceReport, extra: serde_json::Value) {
    match ctx.cfg.format {
        Format::Csv => {
            let csv = rep.to_csv();
            ctx.out.extend_from_slice(csv.as_bytes());
        }
        Format::Json => {
            let rows: Vec<_> = rep
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "order": r.order,
                        "terms": r.terms,
                        "partial_sum": fmt::json(r.partial_sum),
                        "abs_err": fmt::json(r.abs_err),
                        "rel_err": fmt::json(r.rel_err),
                    })
                })
                .collect();
            let mut v = extra;
            v["reference"] = fmt::json(rep.reference);
            v["rows"] = serde_json::Value::Array(rows);
            ctx.json(v);
        }
    }
}

fn expand_cmd(ctx: &mut Ctx, cmd: ExpandCmd) -> Result<(), Failure> {
    let ExpandCmd::Verify {
        kind,
        r,
        rp,
        max_order,
    } = cmd;
    let (r, rp) = (Point3::from_array(r), Point3::from_array(rp));
    if kind == "sph" {
        let rep = spherical_expansion(r, rp, max_order)?;
        report_out(ctx, &rep, json!({ "kind": "sph" }));
        return Ok(());
    }
    let k: u8 = match kind.as_str() {
        "1" => 1,
        "2" => 2,
        "3" => 3,
        _ => {
            return Err(Failure::Usage(format!(
                "kind must be 1, 2, 3 or sph, got {kind:?}"
            )))
        }
    };
    let params = ctx.params();
    let case = applicable_case(k, r, rp, &params);
    ctx.note(format!("case: {case:?}"));
    let mut cat = ctx.load_catalog()?;
    let before = cat.len();
    cat.fill(k, max_order)?;
    ctx.store_catalog(&cat, before)?;
    let rep = reciprocal_expansion(k, r, rp, max_order, &cat)?;
    let fit = rep.fitted_constant();
    if let Some(f) = fit {
        ctx.note(format!(
            "fitted constant: {} (expected {})",
            fmt::num(f),
            fmt::num(expansion_constant(k))
        ));
    }
    report_out(
        ctx,
        &rep,
        json!({
            "kind": k,
            "case": format!("{case:?}"),
            "constant": fmt::json(rep.constant),
            "fitted_constant": fit.map(fmt::json),
        }),
    );
    Ok(())
}

fn write_target(ctx: &mut Ctx, out: Option<&Path>, text: String) -> Result<(), Failure> {
    match out {
        Some(p) => {
            std::fs::write(p, text)?;
            ctx.note(format!("wrote {}", p.display()));
        }
        None => ctx.out.extend_from_slice(text.as_bytes()),
    }
    Ok(())
}

fn patch_name(f: &OctantFlags) -> String {
    let side = if f.inside { 'i' } else { 'o' };
    format!(
        "{}{}{}{side}",
        sign_char(f.sign_x),
        sign_char(f.sign_y),
        sign_char(f.sign_z)
    )
}

fn surface_cmd(ctx: &mut Ctx, cmd: SurfaceCmd) -> Result<(), Failure> {
    let SurfaceCmd::Mesh {
        coord,
        d,
        resolution,
        out,
    } = cmd;
    if resolution < 8 {
        return Err(
            Error::Domain(format!("resolution must be at least 8, got {resolution}")).into(),
        );
    }
    let params = ctx.params();
    let mut text = String::from("patch,u,v,x,y,z\n");
    let mut worst = 0.0f64;
    for f in surface_patches(coord) {
        for iu in 0..resolution {
            for iv in 0..resolution {
                let u = (iu as f64 + 0.5) / resolution as f64;
                let v = (iv as f64 + 0.5) / resolution as f64;
                let (p, _) = surface_chart(coord, d, u, v, f, &params)?;
                let dev = (to_cyclidic(p, &params).get(coord) - d).abs();
                worst = worst.max(dev);
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    patch_name(&f),
                    fmt::num(u),
                    fmt::num(v),
                    fmt::nums(&p.to_array(), ",")
                ));
            }
        }
    }
    if worst.is_nan() || worst > 1e-8 {
        return Err(Error::Domain(format!("mesh points miss the surface by {worst:e}")).into());
    }
    ctx.note(format!("largest |s{coord} - d|: {worst:e}"));
    write_target(ctx, out.as_deref(), text)
}

fn curves_cmd(
    ctx: &mut Ctx,
    set: CurveSet,
    segments: usize,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let params = ctx.params();
    let curves = curve_polylines(set, segments, &params)?;
    let mut text = String::from("curve,k,x,y,z\n");
    for (c, pts) in curves.iter().enumerate() {
        for (k, p) in pts.iter().enumerate() {
            text.push_str(&format!("{c},{k},{}\n", fmt::nums(&p.to_array(), ",")));
        }
    }
    write_target(ctx, out.as_deref(), text)
}

fn check_cmd(ctx: &mut Ctx, suite: &str) -> Result<(), Failure> {
    let names: Vec<&str> = if suite == "all" {
        checks::SUITES.to_vec()
    } else if checks::SUITES.contains(&suite) {
        vec![suite]
    } else {
        return Err(Failure::Usage(format!(
            "unknown suite {suite:?}; expected all or one of {}",
            checks::SUITES.join(", ")
        )));
    };
    let mut cat = ctx.load_catalog()?;
    let before = cat.len();
    let mut results: Vec<(&str, CheckOutcome)> = vec![];
    for name in names {
        let out = checks::run_suite(name, &mut cat, ctx.cfg.quad_order)?;
        results.extend(out.into_iter().map(|c| (name, c)));
    }
    ctx.store_catalog(&cat, before)?;
    let failed = results.iter().filter(|(_, c)| !c.passed()).count();
    match ctx.cfg.format {
        Format::Csv => {
            ctx.line("suite,check,status,worst,tol,samples");
            for (s, c) in &results {
                let st = if c.passed() { "pass" } else { "FAIL" };
                ctx.line(format!(
                    "{s},{},{st},{},{},{}",
                    c.name,
                    fmt::num(c.worst),
                    fmt::num(c.tol),
                    c.samples
                ));
            }
        }
        Format::Json => {
            let v: Vec<_> = results
                .iter()
                .map(|(s, c)| {
                    json!({
                        "suite": s,
                        "check": c.name,
                        "passed": c.passed(),
                        "worst": fmt::json(c.worst),
                        "tol": fmt::json(c.tol),
                        "samples": c.samples,
                    })
                })
                .collect();
            ctx.json(serde_json::Value::Array(v));
        }
    }
    for (s, c) in &results {
        ctx.note(format!("{s} {}: {:.2}s", c.name, c.seconds));
    }
    if failed > 0 {
        return Err(Failure::Checks(failed));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Vec<u8>, (Vec<u8>, Failure)> {
    let g = &cli.global;
    let overrides = Overrides {
        a: g.a,
        quad_order: g.quad_order,
        tol: g.tol,
        cache: g.cache.clone(),
        format: g.format,
        threads: g.threads,
    };
    let env_cache = std::env::var_os("CYCLHARM_CACHE").map(PathBuf::from);
    let cfg = Config::resolve(g.config.as_deref(), env_cache, &overrides)
        .map_err(|e| (vec![], e.into()))?;
    if cfg.threads > 0 {
        // only fails when a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global();
    }
    let mut ctx = Ctx {
        cfg,
        verbose: g.verbose,
        out: vec![],
    };
    let res = match cli.cmd {
        Cmd::Coords(c) => coords(&mut ctx, c),
        Cmd::Eigen(c) => eigen_cmd(&mut ctx, c),
        Cmd::Harmonic(c) => harmonic_cmd(&mut ctx, c),
        Cmd::Expand(c) => expand_cmd(&mut ctx, c),
        Cmd::Surface(c) => surface_cmd(&mut ctx, c),
        Cmd::Curves { set, segments, out } => curves_cmd(&mut ctx, set, segments, out),
        Cmd::Check { suite } => check_cmd(&mut ctx, &suite),
        Cmd::Config => {
            let c = &ctx.cfg;
            let v = json!({
                "a": c.a.map(fmt::json),
                "quad_order": c.quad_order,
                "tol": fmt::json(c.tol),
                "cache": c.cache.as_ref().map(|p| p.display().to_string()),
                "format": match c.format { Format::Csv => "csv", Format::Json => "json" },
                "threads": c.threads,
            });
            ctx.json(v);
            Ok(())
        }
    };
    match res {
        Ok(()) => Ok(ctx.out),
        Err(f) => Err((ctx.out, f)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (out, failure) = match run(cli) {
        Ok(out) => (out, None),
        Err((out, f)) => (out, Some(f)),
    };
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(&out).and_then(|_| stdout.flush()).is_err() {
        return ExitCode::from(74);
    }
    match failure {
        None => ExitCode::SUCCESS,
        Some(f) => {
            let (code, msg) = f.report();
            eprintln!("cyclharm: {msg}");
            ExitCode::from(code)
        }
    }
}
