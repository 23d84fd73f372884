//! Serializable mirrors of graphs, points, divisors and functions.
//!
//! Every rational is a string `"p"` or `"p/q"`; lengths may also be `"inf"`.
//! Offsets on an unbounded edge are measured from its attachment vertex.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::divisor::Divisor;
use crate::error::{Error, Result};
use crate::function::{EdgeFunction, RationalFunction};
use crate::graph::{Graph, GraphPoint, Length, MetricGraph};
use crate::rational::{format_rational, parse_rational};

pub fn parse_length(s: &str) -> Result<Length> {
    if s.trim() == "inf" {
        Ok(Length::Infinite)
    } else {
        Ok(Length::Finite(parse_rational(s)?))
    }
}

pub fn format_length(l: &Length) -> String {
    l.to_string()
}

// Checked while deserializing so that bad numbers are reported with their
// position in the document.
fn checked_rational<'de, D: serde::Deserializer<'de>>(de: D) -> std::result::Result<String, D::Error> {
    let s = String::deserialize(de)?;
    parse_rational(&s).map_err(serde::de::Error::custom)?;
    Ok(s)
}

fn checked_length<'de, D: serde::Deserializer<'de>>(de: D) -> std::result::Result<String, D::Error> {
    let s = String::deserialize(de)?;
    parse_length(&s).map_err(serde::de::Error::custom)?;
    Ok(s)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    #[serde(deserialize_with = "checked_length")]
    pub length: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Vertex { vertex: String },
    Edge {
        edge: String,
        #[serde(deserialize_with = "checked_rational")]
        offset: String,
    },
    End { end: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub point: PointSpec,
    pub coeff: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakpointSpec {
    #[serde(deserialize_with = "checked_rational")]
    pub offset: String,
    #[serde(deserialize_with = "checked_rational")]
    pub value: String,
}

fn is_zero(x: &i64) -> bool {
    *x == 0
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeFunctionSpec {
    pub edge: String,
    pub breakpoints: Vec<BreakpointSpec>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub end_slope: i64,
}

pub fn graph_from_spec(spec: &GraphSpec) -> Result<MetricGraph> {
    let triples: Vec<(&str, &str, &str)> = spec
        .edges
        .iter()
        .map(|e| (e.id.as_str(), e.from.as_str(), e.to.as_str()))
        .collect();
    let vertices: Vec<&str> = spec.vertices.iter().map(String::as_str).collect();
    let graph = Graph::new(&vertices, &triples)?;
    let lengths = spec
        .edges
        .iter()
        .map(|e| parse_length(&e.length))
        .collect::<Result<Vec<_>>>()?;
    MetricGraph::new(graph, lengths)
}

pub fn graph_to_spec(g: &MetricGraph) -> GraphSpec {
    let gr = g.graph();
    GraphSpec {
        vertices: gr.vertex_names().to_vec(),
        edges: gr
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| EdgeSpec {
                id: e.id.clone(),
                from: gr.vertex_name(e.from).to_string(),
                to: gr.vertex_name(e.to).to_string(),
                length: format_length(g.length(i)),
            })
            .collect(),
    }
}

pub fn point_from_spec(g: &MetricGraph, spec: &PointSpec) -> Result<GraphPoint> {
    match spec {
        PointSpec::Vertex { vertex } => Ok(g.vertex_point(g.graph().vertex(vertex)?)),
        PointSpec::Edge { edge, offset } => {
            let e = g.graph().edge_by_id(edge)?;
            g.edge_point(e, parse_rational(offset)?)
        }
        PointSpec::End { end } => g.end_point(g.graph().edge_by_id(end)?),
    }
}

pub fn point_to_spec(g: &MetricGraph, p: &GraphPoint) -> PointSpec {
    let gr = g.graph();
    match p {
        GraphPoint::Vertex(v) => PointSpec::Vertex {
            vertex: gr.vertex_name(*v).to_string(),
        },
        GraphPoint::Edge { edge, offset } => PointSpec::Edge {
            edge: gr.edge(*edge).id.clone(),
            offset: format_rational(offset),
        },
        GraphPoint::End(e) => PointSpec::End {
            end: gr.edge(*e).id.clone(),
        },
    }
}

/// Parses the compact point syntax used on command lines: a vertex name,
/// `edge@p/q`, or `edge@inf`.
pub fn parse_point(g: &MetricGraph, s: &str) -> Result<GraphPoint> {
    match s.split_once('@') {
        None => Ok(g.vertex_point(g.graph().vertex(s)?)),
        Some((edge, "inf")) => g.end_point(g.graph().edge_by_id(edge)?),
        Some((edge, offset)) => {
            let e = g.graph().edge_by_id(edge)?;
            g.edge_point(e, parse_rational(offset)?)
        }
    }
}

/// Parses the display form of a divisor: `0` or `P:1, e@1/2:-2, ...`.
pub fn parse_divisor(g: &Arc<MetricGraph>, s: &str) -> Result<Divisor> {
    let s = s.trim();
    if s == "0" {
        return Ok(Divisor::zero(g.clone()));
    }
    let mut terms = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        let (point, coeff) = part
            .rsplit_once(':')
            .ok_or_else(|| Error::InvalidPoint(format!("expected `point:coefficient`, got `{part}`")))?;
        let coeff: i64 = coeff
            .trim()
            .parse()
            .map_err(|_| Error::InvalidPoint(format!("bad coefficient in `{part}`")))?;
        terms.push((parse_point(g, point.trim())?, coeff));
    }
    Divisor::from_terms(g.clone(), terms)
}

pub fn divisor_from_spec(g: &Arc<MetricGraph>, terms: &[TermSpec]) -> Result<Divisor> {
    let terms = terms
        .iter()
        .map(|t| Ok((point_from_spec(g, &t.point)?, t.coeff)))
        .collect::<Result<Vec<_>>>()?;
    Divisor::from_terms(g.clone(), terms)
}

pub fn divisor_to_spec(d: &Divisor) -> Vec<TermSpec> {
    d.terms()
        .map(|(p, c)| TermSpec {
            point: point_to_spec(d.host(), p),
            coeff: c,
        })
        .collect()
}

/// Edges missing from the list are an error: a function is given on all of
/// the graph.
pub fn function_from_spec(g: &Arc<MetricGraph>, specs: &[EdgeFunctionSpec]) -> Result<RationalFunction> {
    let gr = g.graph();
    let mut edges: Vec<Option<EdgeFunction>> = vec![None; gr.edge_count()];
    for s in specs {
        let e = gr.edge_by_id(&s.edge)?;
        if edges[e].is_some() {
            return Err(Error::DuplicateId(s.edge.clone()));
        }
        let breakpoints = s
            .breakpoints
            .iter()
            .map(|b| Ok((parse_rational(&b.offset)?, parse_rational(&b.value)?)))
            .collect::<Result<Vec<_>>>()?;
        edges[e] = Some(EdgeFunction {
            breakpoints,
            end_slope: s.end_slope,
        });
    }
    let edges = edges
        .into_iter()
        .enumerate()
        .map(|(i, e)| e.ok_or_else(|| Error::InvalidFunction(format!("edge `{}` is missing", gr.edge(i).id))))
        .collect::<Result<Vec<_>>>()?;
    RationalFunction::from_edges(g.clone(), edges)
}

pub fn function_to_spec(f: &RationalFunction) -> Vec<EdgeFunctionSpec> {
    let gr = f.host().graph();
    f.edge_functions()
        .iter()
        .enumerate()
        .map(|(i, ef)| EdgeFunctionSpec {
            edge: gr.edge(i).id.clone(),
            breakpoints: ef
                .breakpoints
                .iter()
                .map(|(o, v)| BreakpointSpec {
                    offset: format_rational(o),
                    value: format_rational(v),
                })
                .collect(),
            end_slope: ef.end_slope,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve_spec() -> GraphSpec {
        serde_json::from_str(
            r#"{"vertices":["Q","X"],"edges":[
                {"id":"l","from":"Q","to":"Q","length":"3/2"},
                {"id":"r","from":"X","to":"Q","length":"inf"}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn graph_round_trip() {
        let g = graph_from_spec(&curve_spec()).unwrap();
        // the unbounded edge is stored from its attachment vertex
        assert_eq!(g.graph().edge(1).from, 0);
        let spec = graph_to_spec(&g);
        assert_eq!(graph_from_spec(&spec).unwrap(), g);
        assert_eq!(graph_to_spec(&graph_from_spec(&spec).unwrap()), spec);
    }

    #[test]
    fn point_syntax() {
        let g = graph_from_spec(&curve_spec()).unwrap();
        let p: PointSpec = serde_json::from_str(r#"{"edge":"l","offset":"3/4"}"#).unwrap();
        let pt = point_from_spec(&g, &p).unwrap();
        assert_eq!(point_to_spec(&g, &pt), p);
        let end: PointSpec = serde_json::from_str(r#"{"end":"r"}"#).unwrap();
        assert_eq!(point_from_spec(&g, &end).unwrap(), GraphPoint::End(1));
        assert_eq!(parse_point(&g, "r@inf").unwrap(), GraphPoint::End(1));
        assert_eq!(parse_point(&g, "l@0").unwrap(), GraphPoint::Vertex(0));
        assert!(parse_point(&g, "l@1/0").is_err());
        assert!(parse_point(&g, "l@2").is_err());
    }

    #[test]
    fn divisor_and_function_round_trip() {
        let g = Arc::new(graph_from_spec(&curve_spec()).unwrap());
        let d = crate::divisor::canonical(&g);
        assert_eq!(divisor_from_spec(&g, &divisor_to_spec(&d)).unwrap(), d);
        let f = crate::function::end_ramp(&g, &GraphPoint::End(1)).unwrap();
        let spec = function_to_spec(&f);
        assert_eq!(function_from_spec(&g, &spec).unwrap(), f);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"end_slope\":1"));
    }

    #[test]
    fn divisor_text_round_trip() {
        let g = Arc::new(graph_from_spec(&curve_spec()).unwrap());
        let d = parse_divisor(&g, "Q:2, l@1/2:-1, r@inf:1, r@3:1").unwrap();
        assert_eq!(d.degree(), 3);
        assert_eq!(parse_divisor(&g, &d.to_string()).unwrap(), d);
        assert!(parse_divisor(&g, "0").unwrap().is_zero());
        assert!(parse_divisor(&g, "Q").is_err());
    }

    #[test]
    fn bad_numbers_carry_positions() {
        let err = serde_json::from_str::<GraphSpec>(
            "{\"vertices\":[\"a\"],\n \"edges\":[{\"id\":\"l\",\"from\":\"a\",\"to\":\"a\",\"length\":\"1/0\"}]}",
        )
        .unwrap_err();
        assert_eq!(err.line(), 2);
        assert!(err.to_string().contains("1/0"), "{err}");
    }
}
