//! The `glueforge` command line: reads a JSON document, runs one check or
//! construction and prints a JSON report.
//!
//! Exit status is 0 when every boolean verdict holds, 1 when some verdict is
//! false, and 2 on malformed input or an exceeded enumeration cap.

pub mod document;

use std::collections::BTreeMap;
use std::io::Read;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::GlueError;
use crate::fincat::{FinFn, DEFAULT_CAP};
use crate::gluing::{colimit_glue, hom_transport, limit_glue, Ambient, GluedObject, GluingData, Side};
use crate::presheaf::{
    default_covers, exhaustive_covers, glue_nat_trans, glue_presheaves, is_separated, is_sheaf,
    presheaf_effective_check, PresheafStore,
};
use crate::refine::{compose_gluings, compose_via_sinks, induced_map};
use crate::site::{
    covering_axioms_check, effective_epi_check, effective_gluing_check, is_effective_epi_by_hom,
    universal_effective_epi_check,
};
pub use document::{parse_document, Document, Kind, FORMAT_VERSION};
use document::{GluingDatumDoc, GluingDoc, MapFamilyDoc, MetaGluingDoc, PresheafDoc, RefinementDoc, SinkDoc, SiteDoc};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("reserved character '|' in label {label:?} at {pointer}")]
    Reserved { pointer: String, label: String },
    #[error("command {command} does not accept a {kind} document")]
    KindMismatch { command: String, kind: String },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Glue(#[from] GlueError),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Schema { .. } => "schema",
            CliError::Reserved { .. } => "reserved-character",
            CliError::KindMismatch { .. } => "kind-mismatch",
            CliError::Io(_) => "io",
            CliError::Glue(GlueError::Structural(_)) => "structural",
            CliError::Glue(GlueError::Resource { .. }) => "resource",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Compute the glued-up object of gluing data
    Glue,
    /// Check effectiveness of gluing data, or of a sink as an epimorphism
    CheckEffective,
    /// Check that a sink is a universal effective epimorphism
    CheckCover,
    /// Check the covering axioms of a declared site
    CheckSite,
    /// Check the separation and sheaf conditions of a presheaf
    CheckSheaf,
    /// Glue local presheaves along transition bijections
    GlueSheaves,
    /// Glue natural transformations given on charts
    GlueMap,
    /// Compute the map induced by a refinement
    Refine,
    /// Compose gluings, flat against two-stage
    Compose,
    /// Compare compatible Hom families with maps out of the glued object
    Hom,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Glue => "glue",
            Command::CheckEffective => "check-effective",
            Command::CheckCover => "check-cover",
            Command::CheckSite => "check-site",
            Command::CheckSheaf => "check-sheaf",
            Command::GlueSheaves => "glue-sheaves",
            Command::GlueMap => "glue-map",
            Command::Refine => "refine",
            Command::Compose => "compose",
            Command::Hom => "hom",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum CoverChoice {
    /// Trivial covers, covers by maximal proper opens, and the empty cover of the empty open
    #[default]
    Default,
    /// Every family of opens with the right union
    Exhaustive,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "glueforge", version, about = "Glue finite sets and finite spaces, and check gluing conditions")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// Input document (standard input when omitted)
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Report destination (standard output when omitted)
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Which side to glue on, overriding the document
    #[arg(long, global = true, value_parser = parse_side)]
    pub side: Option<Side>,
    /// Ambient category, overriding the document
    #[arg(long, global = true, value_parser = parse_ambient)]
    pub ambient: Option<Ambient>,
    /// Cap on enumerated products, hom-sets and cover families
    #[arg(long, global = true, env = "GLUEFORGE_CAP", default_value_t = DEFAULT_CAP)]
    pub cap: u64,
    /// Covers used by sheaf checks
    #[arg(long, global = true, value_enum, default_value_t = CoverChoice::Default)]
    pub covers: CoverChoice,
    /// Leave the empty cover of the empty open out of sheaf checks
    #[arg(long, global = true)]
    pub no_empty_cover: bool,
}

fn parse_side(s: &str) -> Result<Side, String> {
    match s {
        "colimit" => Ok(Side::Colimit),
        "limit" => Ok(Side::Limit),
        _ => Err(format!("expected colimit or limit, got {s}")),
    }
}

fn parse_ambient(s: &str) -> Result<Ambient, String> {
    match s {
        "sets" => Ok(Ambient::Sets),
        "top" => Ok(Ambient::Top),
        _ => Err(format!("expected sets or top, got {s}")),
    }
}

/// Flags that shape a command, separate from where input and output go.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flags {
    pub side: Option<Side>,
    pub ambient: Option<Ambient>,
    pub cap: u64,
    pub covers: CoverChoice,
    pub empty_cover: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Flags { side: None, ambient: None, cap: DEFAULT_CAP, covers: CoverChoice::Default, empty_cover: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub verdicts: BTreeMap<String, Value>,
    pub artifacts: BTreeMap<String, Value>,
    pub diagnostics: Vec<String>,
}

impl Report {
    fn new(command: Command) -> Report {
        Report { command: command.name().into(), ..Report::default() }
    }

    fn verdict(&mut self, name: &str, value: impl Into<Value>) -> &mut Self {
        self.verdicts.insert(name.into(), value.into());
        self
    }

    fn artifact(&mut self, name: &str, value: impl Serialize) -> &mut Self {
        self.artifacts.insert(name.into(), serde_json::to_value(value).expect("artifacts serialize"));
        self
    }

    /// Every boolean verdict holds.
    pub fn passes(&self) -> bool {
        self.verdicts.values().all(|v| v.as_bool() != Some(false))
    }

    pub fn exit_code(&self) -> i32 {
        if self.passes() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("reports serialize");
        out.push('\n');
        out
    }
}

fn mismatch(command: Command, kind: Kind) -> CliError {
    CliError::KindMismatch { command: command.name().into(), kind: kind.name().into() }
}

fn sizes(p: &PresheafStore) -> BTreeMap<String, usize> {
    p.opens().into_iter().map(|u| (p.lattice().name(u), p.sections(u).len())).collect()
}

fn label_map(f: &FinFn) -> BTreeMap<String, String> {
    f.pairs().map(|(x, y)| (x.to_string(), y.to_string())).collect()
}

fn glued_summary(report: &mut Report, data: &GluingData, glued: &GluedObject) {
    report.verdict("size", glued.len());
    let violations = glued.law_violations(data);
    report.verdict("laws_hold", violations.is_empty());
    report.diagnostics.extend(violations);
    if glued.side == Side::Colimit {
        report.artifact("classes", glued.classes());
    }
    if data.ambient() == Ambient::Top {
        report.artifact("leg_properties", glued.leg_properties(data));
    }
    report.artifact("glued", glued);
}

/// Runs one command on a parsed document.
pub fn execute(command: Command, doc: &Document, flags: Flags) -> Result<Report, CliError> {
    let mut report = Report::new(command);
    let cap = flags.cap;
    match (command, doc.kind) {
        (Command::Glue, Kind::Gluing) => {
            let data = doc.payload::<GluingDoc>()?.to_data(flags.side, flags.ambient)?;
            let glued = match data.side() {
                Side::Colimit => colimit_glue(&data)?,
                Side::Limit => limit_glue(&data, cap)?,
            };
            glued_summary(&mut report, &data, &glued);
        }
        (Command::CheckEffective, Kind::Gluing) => {
            let data = doc.payload::<GluingDoc>()?.to_data(flags.side, flags.ambient)?;
            let r = effective_gluing_check(&data)?;
            report
                .verdict("congruence", r.congruence)
                .verdict("intersection", r.intersection)
                .verdict("strong", r.strong)
                .verdict("effective", r.effective())
                .artifact("relation_transitive", r.relation_transitive)
                .artifact("edges_injective", r.edges_injective)
                .artifact("legs_injective", r.legs_injective)
                .artifact("edges_surjective", r.edges_surjective);
            report.diagnostics = r.diagnostics;
        }
        (Command::CheckEffective, Kind::Sink) => {
            let sink = doc.payload::<SinkDoc>()?.to_sink(flags.ambient)?;
            report.verdict("effective", effective_epi_check(&sink)?);
            if sink.ambient == Ambient::Sets {
                report.artifact("effective_by_hom", is_effective_epi_by_hom(&sink, cap)?);
            }
            report.artifact("jointly_surjective", sink.jointly_surjective());
        }
        (Command::CheckCover, Kind::Sink) => {
            let body = doc.payload::<SinkDoc>()?;
            let sink = body.to_sink(flags.ambient)?;
            let mut tests = body.tests(&sink)?;
            if body.tests.is_empty() {
                tests = sink.sources.iter().map(|s| (s.space.clone(), s.map.clone())).collect();
            }
            let r = universal_effective_epi_check(&sink, &tests)?;
            report.verdict("effective", r.effective).verdict("universal", r.all).artifact("per_test", &r.per_test);
            if let Some(js) = r.jointly_surjective {
                report.artifact("jointly_surjective", js);
            }
            for (k, ok) in r.per_test.iter().enumerate() {
                if !ok {
                    report.diagnostics.push(format!("base change {k} is not an effective epimorphism"));
                }
            }
        }
        (Command::CheckSite, Kind::Site) => {
            let spec = doc.payload::<SiteDoc>()?.to_spec(flags.ambient)?;
            let r = covering_axioms_check(&spec, cap)?;
            report
                .verdict("identities", r.identities)
                .verdict("composition", r.composition)
                .verdict("base_change", r.base_change);
            report.diagnostics = r.violations;
        }
        (Command::CheckSheaf, Kind::Presheaf) => {
            let body = doc.payload::<PresheafDoc>()?;
            let lattice = body.lattice(cap)?;
            let p = body.to_store(&lattice, lattice.top())?;
            let violations = p.validate();
            if !violations.is_empty() {
                return Err(GlueError::structural(format!("invalid presheaf: {}", violations.join("; "))).into());
            }
            let covers = match flags.covers {
                CoverChoice::Default => default_covers(&lattice, p.domain(), flags.empty_cover),
                CoverChoice::Exhaustive => exhaustive_covers(&lattice, p.domain(), flags.empty_cover, cap)?,
            };
            let sep = is_separated(&p, &covers)?;
            let sheaf = is_sheaf(&p, &covers, cap)?;
            report
                .verdict("separated", sep.holds)
                .verdict("sheaf", sheaf.holds)
                .artifact("covers_checked", covers.len())
                .artifact("sections", sizes(&p));
            report.diagnostics.extend(sep.counterexample);
            if sep.holds {
                report.diagnostics.extend(sheaf.counterexample);
            }
        }
        (Command::GlueSheaves, Kind::GluingDatum) => {
            let d = doc.payload::<GluingDatumDoc>()?.to_datum(cap)?;
            let glued = glue_presheaves(&d, cap)?;
            let e = presheaf_effective_check(&d, &glued);
            report
                .verdict("identity", e.identity)
                .verdict("cocycle", e.cocycle)
                .verdict("psi_bijective", e.psi_bijective);
            let mut locals_sheaves = true;
            for local in &d.locals {
                locals_sheaves &=
                    is_sheaf(local, &default_covers(&d.lattice, local.domain(), flags.empty_cover), cap)?.holds;
            }
            report.artifact("locals_are_sheaves", locals_sheaves);
            if locals_sheaves {
                let check =
                    is_sheaf(&glued.store, &default_covers(&d.lattice, d.lattice.top(), flags.empty_cover), cap)?;
                report.verdict("glued_is_sheaf", check.holds);
                report.diagnostics.extend(check.counterexample);
            }
            report.artifact("sections", sizes(&glued.store));
            report.diagnostics.extend(e.diagnostics);
        }
        (Command::GlueMap, Kind::MapFamily) => {
            let family = doc.payload::<MapFamilyDoc>()?.to_family(cap)?;
            let alpha = glue_nat_trans(&family.charts, &family.source, &family.target, &family.parts, cap)?;
            let lattice = family.source.lattice();
            let components: BTreeMap<String, BTreeMap<String, String>> =
                alpha.components.iter().map(|(&u, f)| (lattice.name(u), label_map(f))).collect();
            report.verdict("natural", alpha.validate().is_empty()).verdict("restricts_to_parts", true);
            report.artifact("components", components);
        }
        (Command::Refine, Kind::Refinement) => {
            let r = doc.payload::<RefinementDoc>()?.to_refinement(flags.ambient)?;
            let violations = r.validate();
            report.verdict("natural", violations.is_empty());
            report.diagnostics.extend(violations);
            if report.passes() {
                let glue = |d: &GluingData| match d.side() {
                    Side::Colimit => colimit_glue(d),
                    Side::Limit => limit_glue(d, cap),
                };
                let (gs, gt) = (glue(&r.source)?, glue(&r.target)?);
                let map = induced_map(&r, &gs, &gt)?;
                report
                    .verdict("legs_commute", true)
                    .artifact("source_size", gs.len())
                    .artifact("target_size", gt.len())
                    .artifact("induced", label_map(&map));
            }
        }
        (Command::Compose, Kind::MetaGluing) => {
            let meta = doc.payload::<MetaGluingDoc>()?.to_meta()?;
            let c = compose_gluings(&meta)?;
            report
                .verdict("agree", c.agree)
                .verdict("size", c.flat.len())
                .artifact("node_sizes", c.nodes.iter().map(GluedObject::len).collect::<Vec<_>>())
                .artifact("two_stage_size", c.two_stage.len())
                .artifact("classes", c.flat.classes())
                .artifact("comparison", label_map(&c.comparison));
        }
        (Command::Compose, Kind::Sink) => {
            let body = doc.payload::<SinkDoc>()?;
            let outer = body.to_sink(flags.ambient)?;
            let inner = body.inner.iter().map(|s| s.to_sink(Some(outer.ambient))).collect::<Result<Vec<_>, _>>()?;
            let c = compose_via_sinks(&outer, &inner)?;
            report
                .verdict("glued_up", c.glued_up)
                .artifact("sources", c.flattened.sources.iter().map(|s| s.label.clone()).collect::<Vec<_>>());
        }
        (Command::Hom, Kind::Gluing) => {
            let body = doc.payload::<GluingDoc>()?;
            let z = body.codomain.as_ref().ok_or_else(|| CliError::Schema {
                pointer: "/payload/codomain".into(),
                message: "hom needs a codomain".into(),
            })?;
            let z = crate::fincat::FinSet::new(z.iter().cloned())?;
            let data = body.to_data(Some(Side::Colimit), flags.ambient)?;
            let t = hom_transport(&data.to_sets(), &z, cap)?;
            report.verdict("bijective", t.bijective).verdict("families", t.families.len()).verdict("homs", t.homs);
        }
        (command, kind) => return Err(mismatch(command, kind)),
    }
    Ok(report)
}

/// The report printed when a command cannot run.
pub fn error_report(command: Command, err: &CliError) -> String {
    let mut detail = json!({ "kind": err.kind(), "message": err.to_string() });
    match err {
        CliError::Parse { line, column, .. } => {
            detail["line"] = json!(line);
            detail["column"] = json!(column);
        }
        CliError::Schema { pointer, .. } | CliError::Reserved { pointer, .. } => {
            detail["pointer"] = json!(pointer);
        }
        _ => {}
    }
    let mut out = serde_json::to_string_pretty(&json!({ "command": command.name(), "error": detail }))
        .expect("reports serialize");
    out.push('\n');
    out
}

pub fn load_document(path: Option<&PathBuf>) -> Result<Document, CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::Io(e.to_string()))?;
            s
        }
    };
    parse_document(&text)
}

/// Runs the parsed command line and returns the exit status.
pub fn run(args: Args) -> i32 {
    let flags = Flags {
        side: args.side,
        ambient: args.ambient,
        cap: args.cap,
        covers: args.covers,
        empty_cover: !args.no_empty_cover,
    };
    let outcome = load_document(args.input.as_ref()).and_then(|doc| execute(args.command, &doc, flags));
    let (text, code) = match &outcome {
        Ok(report) => (report.to_json(), report.exit_code()),
        Err(err) => {
            eprintln!("glueforge: {err}");
            (error_report(args.command, err), 2)
        }
    };
    let written = match &args.output {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    match written {
        Ok(()) => code,
        Err(e) => {
            eprintln!("glueforge: {e}");
            2
        }
    }
}
