//! Commands behind the `tropdiv` binary. Each returns the text to print and
//! the process exit status.
//!
//! Exit statuses: 0 success, 1 verification failure, 2 parse or usage
//! error, 3 inconclusive.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use tropdiv::format::{
    divisor_from_spec, divisor_to_spec, function_from_spec, function_to_spec, graph_from_spec, graph_to_spec,
    parse_divisor, parse_point, EdgeFunctionSpec, GraphSpec, TermSpec,
};
use tropdiv::harness::{random_instance, run_campaign, verify_rr, CampaignConfig, Status};
use tropdiv::{
    canonical, enumerate_cells, linear_equiv, tropical_rank, CellCaps, Divisor, Location, MetricGraph, RankMethod,
    RankOptions, RationalFunction,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("no divisor named `{0}` (and it does not parse as `point:coeff, ...`)")]
    UnknownDivisor(String),
    #[error("no function named `{0}`")]
    UnknownFunction(String),
    #[error(transparent)]
    Model(#[from] tropdiv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_USAGE
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Output {
    #[default]
    Text,
    Records,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, code: EXIT_OK }
    }
}

/// On-disk document: a graph plus named divisors and functions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub graph: GraphSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub divisors: BTreeMap<String, Vec<TermSpec>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, Vec<EdgeFunctionSpec>>,
}

/// A document with every section resolved against its graph.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub graph: Arc<MetricGraph>,
    pub divisors: BTreeMap<String, Divisor>,
    pub functions: BTreeMap<String, RationalFunction>,
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &str, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn parse_document(path: &str, text: &str) -> CliResult<Loaded> {
    let doc: Document = parse_json(path, text)?;
    resolve(&doc)
}

pub fn resolve(doc: &Document) -> CliResult<Loaded> {
    let graph = Arc::new(graph_from_spec(&doc.graph)?);
    let divisors = doc
        .divisors
        .iter()
        .map(|(k, v)| Ok((k.clone(), divisor_from_spec(&graph, v)?)))
        .collect::<CliResult<_>>()?;
    let functions = doc
        .functions
        .iter()
        .map(|(k, v)| Ok((k.clone(), function_from_spec(&graph, v)?)))
        .collect::<CliResult<_>>()?;
    Ok(Loaded {
        graph,
        divisors,
        functions,
    })
}

impl Loaded {
    pub fn to_document(&self) -> Document {
        Document {
            graph: graph_to_spec(&self.graph),
            divisors: self.divisors.iter().map(|(k, d)| (k.clone(), divisor_to_spec(d))).collect(),
            functions: self.functions.iter().map(|(k, f)| (k.clone(), function_to_spec(f))).collect(),
        }
    }

    /// A named divisor, `K` for the canonical divisor, or an inline
    /// `point:coeff, ...` list.
    pub fn divisor(&self, name: &str) -> CliResult<Divisor> {
        if let Some(d) = self.divisors.get(name) {
            return Ok(d.clone());
        }
        if name == "K" {
            return Ok(canonical(&self.graph));
        }
        parse_divisor(&self.graph, name).map_err(|_| CliError::UnknownDivisor(name.to_string()))
    }

    pub fn function(&self, name: &str) -> CliResult<&RationalFunction> {
        self.functions.get(name).ok_or_else(|| CliError::UnknownFunction(name.to_string()))
    }
}

pub fn load_file(path: &Path) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    parse_document(&path.display().to_string(), &text)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("output serializes")
}

pub fn cmd_rank(doc: &Loaded, divisor: &str, opts: &RankOptions, output: Output) -> CliResult<Outcome> {
    let d = doc.divisor(divisor)?;
    let r = tropical_rank(&d, opts)?;
    let witness = r.witness.as_ref().map(|w| w.to_string());
    let text = match output {
        Output::Text => {
            let join = |v: &[i64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
            let scales: Vec<i64> = r.scales_tested.iter().map(|&s| s as i64).collect();
            let mut t = format!(
                "rank {}\nscales {}\nranks {}\nstabilized {}\n",
                r.rank,
                join(&scales),
                join(&r.ranks_observed),
                r.stabilized
            );
            if let Some(w) = &witness {
                t.push_str(&format!("witness {w}\n"));
            }
            t
        }
        Output::Records => {
            to_json(&json!({
                "rank": r.rank,
                "scales_tested": r.scales_tested,
                "ranks_observed": r.ranks_observed,
                "stabilized": r.stabilized,
                "witness": witness,
            })) + "\n"
        }
    };
    Ok(Outcome {
        text,
        code: if r.stabilized { EXIT_OK } else { EXIT_INCONCLUSIVE },
    })
}

fn status_code(s: Status) -> i32 {
    match s {
        Status::Pass => EXIT_OK,
        Status::Fail => EXIT_FAILED,
        Status::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

pub fn cmd_rr(doc: &Loaded, divisor: &str, opts: &RankOptions, output: Output) -> CliResult<Outcome> {
    let d = doc.divisor(divisor)?;
    let record = verify_rr(&doc.graph, &d, opts);
    let text = match output {
        Output::Text => format!("{}\n", record.identity_line()),
        Output::Records => to_json(&record) + "\n",
    };
    Ok(Outcome {
        text,
        code: status_code(record.status),
    })
}

pub fn cmd_canonical(doc: &Loaded, output: Output) -> CliResult<Outcome> {
    let k = canonical(&doc.graph);
    Ok(Outcome::ok(match output {
        Output::Text => format!("{k}\n"),
        Output::Records => to_json(&divisor_to_spec(&k)) + "\n",
    }))
}

pub fn cmd_reduce(doc: &Loaded, divisor: &str, base: &str, output: Output) -> CliResult<Outcome> {
    let d = doc.divisor(divisor)?;
    let base = parse_point(&doc.graph, base)?;
    if doc.graph.has_infinite_edges() {
        // Reduce on the core, then find the function on the whole curve.
        let (retraction, on_core) = tropdiv::rank::core_divisor(&d)?;
        let core_base = retraction
            .to_core(&base)
            .filter(|_| doc.graph.is_core_point(&base))
            .ok_or_else(|| tropdiv::Error::Precondition("base point must lie on the core".into()))?;
        let (reduced, _) = tropdiv::rank::reduce(&on_core, &core_base)?;
        let reduced = reduced.transport(doc.graph.clone(), |p| retraction.from_core(p))?;
        let f = linear_equiv(&d, &reduced)?.expect("reduction stays in the class");
        return Ok(Outcome::ok(reduce_text(&reduced, &f, output)));
    }
    let (reduced, f) = tropdiv::rank::reduce(&d, &base)?;
    Ok(Outcome::ok(reduce_text(&reduced, &f, output)))
}

fn reduce_text(reduced: &Divisor, f: &RationalFunction, output: Output) -> String {
    match output {
        Output::Text => format!("reduced {reduced}\nfunction {}\n", to_json(&function_to_spec(f))),
        Output::Records => {
            to_json(&json!({"reduced": divisor_to_spec(reduced), "function": function_to_spec(f)})) + "\n"
        }
    }
}

pub fn cmd_equiv(doc: &Loaded, d1: &str, d2: &str, output: Output) -> CliResult<Outcome> {
    let (a, b) = (doc.divisor(d1)?, doc.divisor(d2)?);
    let w = linear_equiv(&a, &b)?;
    Ok(Outcome::ok(match (output, &w) {
        (Output::Text, Some(f)) => format!("true\nwitness {}\n", to_json(&function_to_spec(f))),
        (Output::Text, None) => "false\n".to_string(),
        (Output::Records, _) => {
            to_json(&json!({"equivalent": w.is_some(), "witness": w.as_ref().map(function_to_spec)})) + "\n"
        }
    }))
}

fn location_label(g: &MetricGraph, l: &Location) -> String {
    match l {
        Location::Vertex(v) => g.graph().vertex_name(*v).to_string(),
        Location::Edge(e) => g.graph().edge(*e).id.clone(),
    }
}

pub fn cmd_cells(doc: &Loaded, divisor: &str, caps: &CellCaps, output: Output) -> CliResult<Outcome> {
    let d = doc.divisor(divisor)?;
    let report = enumerate_cells(&doc.graph, &d, caps)?;
    let g = &doc.graph;
    let mut text = String::new();
    match output {
        Output::Text => {
            let dims: Vec<String> = report.dimensions().iter().map(|(d, n)| format!("{d}:{n}")).collect();
            text.push_str(&format!("dimensions {}\n", dims.join(" ")));
            text.push_str(&format!(
                "max {}\n",
                tropdiv::max_cell_dimension(&report.cells).map_or("none".to_string(), |m| m.to_string())
            ));
            text.push_str(&format!("candidates {}\ntruncated {}\n", report.candidates, report.truncated));
            for c in &report.cells {
                let placement: Vec<String> = c.signature.placement.iter().map(|l| location_label(g, l)).collect();
                let slopes: Vec<String> = c.signature.slopes.iter().map(|s| s.to_string()).collect();
                text.push_str(&format!(
                    "cell dim {} at [{}] slopes [{}]\n",
                    c.dimension,
                    placement.join(", "),
                    slopes.join(", ")
                ));
            }
        }
        Output::Records => {
            for c in &report.cells {
                let placement: Vec<String> = c.signature.placement.iter().map(|l| location_label(g, l)).collect();
                let sample: Vec<String> = c.sample_points.iter().map(|p| g.describe_point(p)).collect();
                text.push_str(&to_json(&json!({
                    "dimension": c.dimension,
                    "placement": placement,
                    "slopes": c.signature.slopes,
                    "sample_points": sample,
                    "sample_function": function_to_spec(&c.sample),
                })));
                text.push('\n');
            }
            text.push_str(&to_json(&json!({
                "dimensions": report.dimensions(),
                "candidates": report.candidates,
                "truncated": report.truncated,
            })));
            text.push('\n');
        }
    }
    Ok(Outcome {
        text,
        code: if report.truncated { EXIT_INCONCLUSIVE } else { EXIT_OK },
    })
}

pub fn load_config(path: &Path) -> CliResult<CampaignConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    parse_json(&path.display().to_string(), &text)
}

pub fn cmd_campaign(cfg: &CampaignConfig, output: Output) -> CliResult<Outcome> {
    let report = run_campaign(cfg)?;
    let s = &report.summary;
    let code = if s.failed > 0 {
        EXIT_FAILED
    } else if s.inconclusive > 0 {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };
    Ok(Outcome {
        text: match output {
            Output::Text => report.to_text(),
            Output::Records => report.to_records(),
        },
        code,
    })
}

/// The document of campaign instance `index`, with its divisor named `D`.
pub fn cmd_instance(cfg: &CampaignConfig, index: usize) -> CliResult<Outcome> {
    cfg.validate()?;
    let (g, d) = random_instance(cfg, index);
    let loaded = Loaded {
        graph: g,
        divisors: BTreeMap::from([("D".to_string(), d)]),
        functions: BTreeMap::new(),
    };
    Ok(Outcome::ok(render_document(&loaded.to_document())))
}

pub fn cmd_ord(doc: &Loaded, function: &str, point: &str) -> CliResult<Outcome> {
    let f = doc.function(function)?;
    let p = parse_point(&doc.graph, point)?;
    Ok(Outcome::ok(format!("{}\n", f.order(&p))))
}

pub fn cmd_eval(doc: &Loaded, function: &str, point: &str) -> CliResult<Outcome> {
    let f = doc.function(function)?;
    let p = parse_point(&doc.graph, point)?;
    Ok(Outcome::ok(format!("{}\n", f.evaluate(&p))))
}

pub fn render_document(doc: &Document) -> String {
    serde_json::to_string_pretty(doc).expect("document serializes") + "\n"
}

/// Re-emits a document in normal form.
pub fn cmd_normalize(doc: &Loaded) -> CliResult<Outcome> {
    Ok(Outcome::ok(render_document(&doc.to_document())))
}

pub fn rank_options(scale_cap: u32, method: RankMethod) -> RankOptions {
    RankOptions {
        scale_cap,
        method,
        ..RankOptions::default()
    }
}
