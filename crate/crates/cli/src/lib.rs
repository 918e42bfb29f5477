//! Command-line front end: atlas and table generation, state-field queries and
//! the verification suites.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use knva::atlas::{
    load_atlas, save_atlas, verify_duality, AtlasConfig, BasisAtlas, BasisIndex, ComplexLiteral,
};
use knva::distr::{check_affine_jacobi, check_bracket_corollary, check_dp_delta, LieAlgebraData};
use knva::fock::{FockVector, Monomial};
use knva::tables::{check_tables, compute_tables, load_tables, save_tables, StructureTables, TablesConfig};
use knva::vertex::{FieldSpec, Vertex, Y};
use knva::Error;

#[derive(Parser, Debug)]
#[command(name = "knva", version, about = "Krichever-Novikov bases, structure tables and vertex algebra checks")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Output format on stdout.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    pub format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a basis atlas and check duality.
    Atlas(AtlasArgs),
    /// Compute the structure tables of an atlas.
    Tables(TablesArgs),
    /// Run verification suites.
    Verify(VerifyArgs),
    /// Inspect the field of a state.
    Field(FieldArgs),
}

#[derive(Args, Debug)]
pub struct AtlasArgs {
    #[arg(long, default_value_t = 0)]
    pub genus: u32,
    /// Lattice parameter, e.g. `0+1i`.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub p_plus: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub p_minus: Option<String>,
    /// Largest |n|, e.g. `12`, `6.5` or `13/2`.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub trunc: Option<i64>,
    /// Working precision in decimal digits (genus 1).
    #[arg(long, env = "KNVA_PRECISION", default_value_t = 60)]
    pub precision: u32,
    /// Largest field weight the atlas must support; sets the section weights to `1-M..=M`.
    #[arg(long, default_value_t = 2)]
    pub max_weight: i64,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Re-check an existing atlas file instead of building one.
    #[arg(long)]
    pub load: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TablesArgs {
    #[arg(long)]
    pub atlas: PathBuf,
    /// Highest derivative order tabulated.
    #[arg(long, default_value_t = 4)]
    pub k_max: u32,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Suite {
    Duality,
    Bands,
    Vacuum,
    Translation,
    Locality,
    Wick,
    Affine,
    All,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub atlas: PathBuf,
    /// Tables file; computed from the atlas when absent.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    pub suite: Vec<Suite>,
    /// Largest state degree in the field and state sets.
    #[arg(long, default_value_t = 3)]
    pub max_degree: u32,
    /// Index range `|n| <= range` for coefficientwise checks; derived from the window when absent.
    #[arg(long)]
    pub range: Option<String>,
    /// Lie algebra file for the affine suite (default sl2).
    #[arg(long)]
    pub lie: Option<PathBuf>,
    /// Append one JSON record per check to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FieldArgs {
    #[arg(long)]
    pub atlas: Option<PathBuf>,
    #[arg(long)]
    pub tables: Option<PathBuf>,
    /// State literal such as `a[-2]a[-1]|0>`.
    #[arg(long)]
    pub state: String,
    /// Coefficient index, e.g. `-2`, `1/2` or `g/2-1`.
    #[arg(long, allow_hyphen_values = true)]
    pub coeff: Option<String>,
    /// Apply the coefficient to this state.
    #[arg(long)]
    pub apply: Option<String>,
    /// Word expansions are exact on states up to this degree.
    #[arg(long)]
    pub max_degree: Option<u32>,
    /// Without `--coeff`, list all coefficients with `|n| <= range`.
    #[arg(long, default_value = "3")]
    pub range: String,
}

/// Outcome of a run that did not hit a configuration or input error.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// `0` pass, `1` check failure, `2` configuration or input error.
pub fn exit_code(r: &Result<Status>) -> i32 {
    match r {
        Ok(Status::Pass) => 0,
        Ok(Status::Fail) => 1,
        Err(_) => 2,
    }
}

pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<Status> {
    match &cfg.command {
        Command::Atlas(a) => cmd_atlas(a, cfg.format, out),
        Command::Tables(a) => cmd_tables(a, cfg.format, out),
        Command::Verify(a) => cmd_verify(a, cfg.format, out),
        Command::Field(a) => cmd_field(a, cfg.format, out),
    }
}

fn literal(s: &Option<String>, what: &str) -> Result<ComplexLiteral> {
    let s = s.as_deref().ok_or_else(|| anyhow!("genus 1 needs --{what}"))?;
    Ok(ComplexLiteral::parse(s)?)
}

pub fn atlas_config(a: &AtlasArgs) -> Result<AtlasConfig> {
    if a.genus >= 2 {
        bail!("genus ≥ 2 requires --load");
    }
    if a.max_weight < 1 {
        bail!("--max-weight must be at least 1");
    }
    let mut cfg = match a.genus {
        0 => {
            let w = match &a.window {
                Some(s) => BasisIndex::parse(s, 0)?,
                None => BasisIndex::from_int(12),
            };
            let w = w.as_int().ok_or_else(|| anyhow!("genus 0 windows are integers"))?;
            AtlasConfig::genus0(w)
        }
        _ => {
            let w = match &a.window {
                Some(s) => BasisIndex::parse(s, 1)?,
                None => BasisIndex(13),
            };
            AtlasConfig::genus1(w, a.precision, literal(&a.tau, "tau")?, literal(&a.p_plus, "p-plus")?, literal(&a.p_minus, "p-minus")?)
        }
    };
    cfg = cfg.with_lambdas(1 - a.max_weight, a.max_weight);
    if let Some(t) = a.trunc {
        cfg.trunc = t;
    }
    cfg.tolerance = a.tolerance;
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: &mut dyn Write, format: Format, human: &str, value: &Value) -> Result<()> {
    match format {
        Format::Human => write!(out, "{human}")?,
        Format::Json => writeln!(out, "{}", serde_json::to_string(value)?)?,
    }
    Ok(())
}

fn cmd_atlas(a: &AtlasArgs, format: Format, out: &mut dyn Write) -> Result<Status> {
    let atlas = match &a.load {
        Some(p) => load_atlas(p).with_context(|| format!("loading {}", p.display()))?,
        None => BasisAtlas::build(atlas_config(a)?)?,
    };
    let report = verify_duality(&atlas)?;
    let tol = atlas.tolerance();
    let ok = report.passes(tol);
    if let Some(p) = &a.out {
        save_atlas(&atlas, p).with_context(|| format!("writing {}", p.display()))?;
    }
    let human = format!(
        "atlas genus={} window={} trunc={} weights={:?}\nduality: {} pairs, max residual {:e}, P+/P- gap {:e}, tolerance {:e}: {}\n",
        atlas.genus(),
        atlas.config.window,
        atlas.config.trunc,
        atlas.config.lambda_range,
        report.pairs_checked,
        report.max_residual,
        report.max_cross,
        tol,
        if ok { "PASS" } else { "FAIL" }
    );
    emit(out, format, &human, &json!({ "genus": atlas.genus(), "window": atlas.config.window.to_string(), "duality": report, "tolerance": tol, "passed": ok }))?;
    Ok(Status::from_bool(ok))
}

fn cmd_tables(a: &TablesArgs, format: Format, out: &mut dyn Write) -> Result<Status> {
    let atlas = load_atlas(&a.atlas).with_context(|| format!("loading {}", a.atlas.display()))?;
    let t = compute_tables(&atlas, &TablesConfig { k_max: a.k_max })?;
    if let Some(p) = &a.out {
        save_tables(&t, p).with_context(|| format!("writing {}", p.display()))?;
    }
    let b = &t.bands;
    let mut human = format!("tables genus={} window={} k_max={}\n", t.genus, t.window, a.k_max);
    writeln!(human, "gamma band |n+m| <= {}", b.gamma)?;
    writeln!(human, "zeta band C = {}", b.zeta)?;
    for (l, (c1, c2)) in &b.beta {
        writeln!(human, "beta[{l}] c1 = {c1}, c2 = {c2}")?;
    }
    for (l, (o1, o2)) in &b.ell {
        writeln!(human, "ell[{l}] offsets {o1}..={o2}, width {}", b.ell_width[l])?;
    }
    emit(out, format, &human, &json!({ "genus": t.genus, "window": t.window.to_string(), "bands": b }))?;
    Ok(Status::Pass)
}

/// One line of a verification report.
#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub suite: String,
    pub check: String,
    /// `pass`, `fail` or `overflow`.
    pub status: String,
    pub residual: Option<f64>,
    pub detail: Value,
}

impl Record {
    fn new(suite: &str, check: impl Into<String>, passed: bool, residual: Option<f64>, detail: Value) -> Self {
        Record {
            suite: suite.into(),
            check: check.into(),
            status: if passed { "pass" } else { "fail" }.into(),
            residual,
            detail,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    fn human(&self) -> String {
        let r = self.residual.map(|r| format!(" residual={r:e}")).unwrap_or_default();
        let mut line = format!("{:<8} {}/{}{r}\n", self.status.to_uppercase(), self.suite, self.check);
        if !self.passed() {
            if let Some(d) = ["detail", "reason"].iter().find_map(|k| self.detail.get(k).and_then(Value::as_str)) {
                line.push_str(&format!("         {d}\n"));
            }
        }
        line
    }
}

/// Turns window overflows into `overflow` records; other errors abort.
fn guarded<T: Serialize>(suite: &str, check: String, r: std::result::Result<T, Error>, f: impl FnOnce(&T) -> (bool, Option<f64>)) -> Result<Record> {
    match r {
        Ok(v) => {
            let (ok, res) = f(&v);
            Ok(Record::new(suite, check, ok, res, serde_json::to_value(&v)?))
        }
        Err(Error::WindowOverflow(why)) => Ok(Record {
            suite: suite.into(),
            check,
            status: "overflow".into(),
            residual: None,
            detail: json!({ "reason": why }),
        }),
        Err(e) => Err(e.into()),
    }
}

fn load_or_compute_tables(atlas: &BasisAtlas, path: &Option<PathBuf>, k_max: u32) -> Result<StructureTables> {
    match path {
        Some(p) => Ok(load_tables(p).with_context(|| format!("loading {}", p.display()))?),
        None => Ok(compute_tables(atlas, &TablesConfig { k_max })?),
    }
}

fn states(v: &Vertex, d: u32) -> Vec<FockVector> {
    Monomial::up_to_degree(d).into_iter().map(|m| FockVector::basis(v.mode(), m)).collect()
}

/// Largest doubled index of the right parity at most `r2`.
fn parity_floor(genus: u32, r2: i64) -> BasisIndex {
    let g = genus as i64;
    BasisIndex(if (r2 - g).rem_euclid(2) == 0 { r2 } else { r2 - 1 })
}

fn indices(genus: u32, r: BasisIndex) -> Vec<BasisIndex> {
    let g = genus as i64;
    (-r.doubled()..=r.doubled()).filter(|d| (d - g).rem_euclid(2) == 0).map(BasisIndex).collect()
}

pub fn cmd_verify(a: &VerifyArgs, format: Format, out: &mut dyn Write) -> Result<Status> {
    let atlas = load_atlas(&a.atlas).with_context(|| format!("loading {}", a.atlas.display()))?;
    let t = load_or_compute_tables(&atlas, &a.tables, a.max_degree + 1)?;
    if t.genus != atlas.genus() || t.window != atlas.config.window {
        bail!("tables (genus {}, window {}) do not belong to the atlas (genus {}, window {})", t.genus, t.window, atlas.genus(), atlas.config.window);
    }
    let lie = match &a.lie {
        Some(p) => LieAlgebraData::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => LieAlgebraData::sl2(),
    };
    let mut suites: Vec<Suite> = if a.suite.contains(&Suite::All) {
        vec![Suite::Duality, Suite::Bands, Suite::Vacuum, Suite::Translation, Suite::Locality, Suite::Wick, Suite::Affine]
    } else {
        a.suite.clone()
    };
    suites.sort();
    suites.dedup();
    let range = match &a.range {
        Some(s) => Some(BasisIndex::parse(s, t.genus)?),
        None => None,
    };
    let mut report = match &a.report {
        Some(p) => Some(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => None,
    };
    let vertex = Vertex::new(&t);
    let mut all_ok = true;
    for s in suites {
        let records = run_suite(s, &atlas, &t, &vertex, &lie, a.max_degree, range)?;
        for r in records {
            all_ok &= r.passed();
            if let Some(f) = report.as_mut() {
                writeln!(f, "{}", serde_json::to_string(&r)?)?;
            }
            emit(out, format, &r.human(), &serde_json::to_value(&r)?)?;
        }
    }
    Ok(Status::from_bool(all_ok))
}

fn run_suite(
    s: Suite,
    atlas: &BasisAtlas,
    t: &StructureTables,
    v: &Vertex,
    lie: &LieAlgebraData,
    max_degree: u32,
    range: Option<BasisIndex>,
) -> Result<Vec<Record>> {
    let w2 = t.window.doubled();
    let auto = |num: i64, den: i64| range.unwrap_or_else(|| parity_floor(t.genus, w2 * num / den));
    let specs: Vec<FieldSpec> = Monomial::up_to_degree(max_degree).iter().map(Y).collect();
    let mut out = Vec::new();
    match s {
        Suite::All => unreachable!("expanded by the caller"),
        Suite::Duality => {
            let tol = atlas.tolerance();
            out.push(guarded("duality", "residue pairing".into(), verify_duality(atlas), |r| (r.passes(tol), Some(r.max_residual.max(r.max_cross))))?);
        }
        Suite::Bands => {
            let r = check_tables(t, atlas)?;
            for c in &r.checks {
                out.push(Record::new("bands", c.name.clone(), c.passed, Some(c.residual), serde_json::to_value(c)?));
            }
        }
        Suite::Vacuum => {
            for spec in &specs {
                out.push(guarded("vacuum", spec.to_string(), v.check_vacuum(spec), |r| (r.passed, Some(r.annihilation_residual)))?);
            }
        }
        Suite::Translation => {
            let idx = indices(t.genus, auto(1, 3));
            let st = states(v, max_degree.min(2));
            for spec in &specs {
                out.push(guarded("translation", spec.to_string(), v.check_translation(spec, &st, &idx), |r| (r.passed, Some(r.max_residual)))?);
            }
        }
        Suite::Locality => {
            let r = auto(1, 4);
            let st = states(v, max_degree.min(2));
            let small: Vec<&FieldSpec> = specs.iter().filter(|s| s.dimension() <= 2 && !s.is_identity()).collect();
            for a in &small {
                for b in &small {
                    let max_order = (a.dimension() + b.dimension()) as u32;
                    out.push(guarded("locality", format!("{a} x {b}"), v.check_locality(a, b, &st, r, max_order), |r| (r.passed, None))?);
                }
            }
            if t.genus > 0 {
                for k in 0..=1 {
                    for h in 0..=1 {
                        out.push(guarded("locality", format!("[D{k} a-, D{h} a-]"), v.check_minus_commute(k, h, &st, r), |r| (r.passed, Some(r.max_residual)))?);
                    }
                }
                let st1 = states(v, 1);
                out.push(guarded("locality", "[[D1 a-, D0 a], D0 a]".into(), v.check_double_bracket(1, 0, 0, &st1, parity_floor(t.genus, r.doubled().min(3))), |r| (r.passed, Some(r.max_residual)))?);
            }
        }
        Suite::Wick => {
            let r = auto(1, 4);
            let st = states(v, max_degree.min(2));
            let small: Vec<&FieldSpec> = specs.iter().filter(|s| s.weight() >= 1 && s.weight() <= 2 && s.dimension() <= 2).collect();
            for a in &small {
                for b in &small {
                    out.push(guarded("wick", format!("{a} x {b}"), v.check_wick(a, b, &st, r), |r| (r.passed, Some(r.max_residual)))?);
                }
            }
        }
        Suite::Affine => {
            out.push(guarded("affine", "dA_n expansion".into(), check_dp_delta(atlas, t), |r| (r.passed && r.partition_complete, Some(r.max_residual)))?);
            let r = auto(1, 4);
            out.push(guarded("affine", format!("jacobi |n| <= {r}"), check_affine_jacobi(t, lie, r), |r| (r.passed, Some(r.max_residual)))?);
            out.push(guarded("affine", "bracket corollary".into(), check_bracket_corollary(atlas, t, lie), |r| (r.passed, Some(r.alpha_symmetry.max(r.dp_delta))))?);
        }
    }
    Ok(out)
}

pub fn cmd_field(a: &FieldArgs, format: Format, out: &mut dyn Write) -> Result<Status> {
    let t = match (&a.tables, &a.atlas) {
        (Some(p), _) => load_tables(p).with_context(|| format!("loading {}", p.display()))?,
        (None, Some(p)) => {
            let atlas = load_atlas(p).with_context(|| format!("loading {}", p.display()))?;
            compute_tables(&atlas, &TablesConfig::default())?
        }
        (None, None) => bail!("field needs --tables or --atlas"),
    };
    let v = Vertex::new(&t);
    let state = v.fock.parse_state(&a.state)?;
    let fields: Vec<(FieldSpec, knva::Scalar)> = state.terms.iter().map(|(m, c)| (Y(m), c.clone())).collect();
    if fields.is_empty() {
        bail!("the zero state has no field");
    }
    let applied = match &a.apply {
        Some(s) => Some(v.fock.parse_state(s)?),
        None => None,
    };
    let max_degree = match (a.max_degree, &applied) {
        (Some(d), _) => d,
        (None, Some(s)) if !s.is_zero() => s.degree(0.0)? as u32,
        _ => 3,
    };
    let coeffs: Vec<BasisIndex> = match &a.coeff {
        Some(s) => vec![BasisIndex::parse(s, t.genus)?],
        None => indices(t.genus, parity_floor(t.genus, BasisIndex::parse(&a.range, t.genus)?.doubled())),
    };
    let name = fields.iter().map(|(f, c)| if *c == t.mode.one() { f.to_string() } else { format!("{c}*{f}") }).collect::<Vec<_>>().join(" + ");
    let mut human = format!("field: {name}\n");
    let mut rows = Vec::new();
    for n in coeffs {
        let mut op_text = Vec::new();
        let mut result = FockVector::zero(t.mode);
        for (f, c) in &fields {
            let op = v.coefficient_operator(f, n, max_degree)?;
            let s = op.to_string();
            if s != "0" {
                op_text.push(if *c == t.mode.one() { s } else { format!("{c}*({s})") });
            }
            if let Some(w) = &applied {
                result.add_scaled(&v.apply_coefficient(f, n, w)?, c);
            }
        }
        let op_text = if op_text.is_empty() { "0".to_string() } else { op_text.join(" + ") };
        writeln!(human, "[{n}] {op_text}")?;
        let mut row = json!({ "n": n.to_string(), "operator": op_text });
        if applied.is_some() {
            result.prune(t.tolerance);
            let r = if result.is_zero() { "0".to_string() } else { result.to_string() };
            writeln!(human, "  applied: {r}")?;
            row["applied"] = json!(r);
        }
        rows.push(row);
    }
    emit(out, format, &human, &json!({ "field": name, "coefficients": rows }))?;
    Ok(Status::Pass)
}
