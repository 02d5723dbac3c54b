//! Machine-readable output. Every format carries a schema tag with a version
//! in a header comment or field. Floats use Rust's shortest round-trip
//! formatting, so identical inputs give byte-identical files.

use std::io::{BufRead, Write};

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::{Family, Graph, GraphSpec};
use crate::metrics::MetricsReport;
use crate::sim::SimTrace;
use crate::spectrum::SpectrumMultiset;

pub const SCHEMA_VERSION: u32 = 1;

pub const METRICS_COLUMNS: [&str; 16] = [
    "family",
    "n",
    "k",
    "N",
    "E",
    "epsilon",
    "epsilon_asym",
    "zeta",
    "zeta_asym",
    "tau_max",
    "H1",
    "H2",
    "lambda_sum",
    "lambda_sq_sum",
    "kirchhoff",
    "mean_hitting",
];

fn spec_fields(spec: GraphSpec) -> String {
    format!("family={} n={} k={}", spec.family.as_str(), spec.n, spec.k)
}

pub fn write_edgelist<W: Write>(g: &Graph, mut w: W) -> Result<()> {
    writeln!(
        w,
        "# selfsim-edgelist v{SCHEMA_VERSION} {} vertices={} edges={}",
        spec_fields(g.spec()),
        g.num_vertices(),
        g.num_edges()
    )?;
    for &(u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

/// Parses the output of [`write_edgelist`]. The edges are taken as given,
/// not regenerated from the header, so a tampered file yields a tampered
/// graph.
pub fn read_edgelist<R: BufRead>(r: R) -> Result<Graph> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.ok_or_else(|| Error::InvalidSpec("empty edge list".into()))?;
    let fields = header
        .strip_prefix("# selfsim-edgelist v1 ")
        .ok_or_else(|| Error::InvalidSpec(format!("unrecognised edge list header: {header}")))?;
    let field = |name: &str| -> Result<&str> {
        fields
            .split_whitespace()
            .find_map(|f| f.strip_prefix(name).and_then(|rest| rest.strip_prefix('=')))
            .ok_or_else(|| Error::InvalidSpec(format!("edge list header lacks {name}")))
    };
    let parse_num = |name: &str| -> Result<u64> {
        field(name)?.parse().map_err(|_| Error::InvalidSpec(format!("bad {name} in edge list header")))
    };
    let family: Family = field("family")?.parse()?;
    let spec = GraphSpec::new(family, parse_num("n")? as u32, parse_num("k")? as u32)?;
    let num_vertices = parse_num("vertices")? as usize;

    let mut edges = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace().map(str::parse::<usize>);
        match (parts.next(), parts.next(), parts.next()) {
            (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
            _ => return Err(Error::InvalidSpec(format!("malformed edge line: {line}"))),
        }
    }
    Graph::from_edges(spec, num_vertices, edges)
}

pub fn graph_json(g: &Graph) -> serde_json::Value {
    let edges: Vec<[usize; 2]> = g.edges().iter().map(|&(u, v)| [u, v]).collect();
    json!({
        "schema": format!("selfsim-graph/{SCHEMA_VERSION}"),
        "spec": g.spec(),
        "num_vertices": g.num_vertices(),
        "edges": edges,
    })
}

/// `value,multiplicity` rows in ascending order, or with `expand` one
/// eigenvalue per line repeated by multiplicity.
pub fn write_spectrum_csv<W: Write>(s: &SpectrumMultiset, expand: bool, mut w: W) -> Result<()> {
    writeln!(w, "# selfsim-spectrum v{SCHEMA_VERSION} {}", spec_fields(s.spec()))?;
    if expand {
        writeln!(w, "value")?;
        for v in s.expand() {
            writeln!(w, "{v}")?;
        }
    } else {
        writeln!(w, "value,multiplicity")?;
        for e in s.entries() {
            writeln!(w, "{},{}", e.value, e.multiplicity)?;
        }
    }
    Ok(())
}

fn metrics_row(r: &MetricsReport) -> String {
    let s = r.spec;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        s.family.short(),
        s.n,
        s.k,
        r.num_vertices,
        r.num_edges,
        r.epsilon,
        r.epsilon_asym,
        r.zeta,
        r.zeta_asym,
        r.tau_max,
        r.h1,
        r.h2,
        r.lambda_sum,
        r.lambda_sq_sum,
        r.kirchhoff,
        r.mean_hitting
    )
}

pub fn write_metrics_csv<W: Write>(reports: &[MetricsReport], mut w: W) -> Result<()> {
    writeln!(w, "# selfsim-metrics v{SCHEMA_VERSION}")?;
    writeln!(w, "{}", METRICS_COLUMNS.join(","))?;
    for r in reports {
        writeln!(w, "{}", metrics_row(r))?;
    }
    Ok(())
}

/// Subset of the metrics table restricted to `columns`, in the given order.
pub fn write_metrics_csv_columns<W: Write>(reports: &[MetricsReport], columns: &[&str], mut w: W) -> Result<()> {
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            METRICS_COLUMNS
                .iter()
                .position(|m| m == c)
                .ok_or_else(|| Error::InvalidSweep(format!("unknown output column {c}")))
        })
        .collect::<Result<_>>()?;
    writeln!(w, "# selfsim-metrics v{SCHEMA_VERSION}")?;
    writeln!(w, "{}", columns.join(","))?;
    for r in reports {
        let row = metrics_row(r);
        let cells: Vec<&str> = row.split(',').collect();
        let picked: Vec<&str> = idx.iter().map(|&i| cells[i]).collect();
        writeln!(w, "{}", picked.join(","))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MetricsDocument<'a> {
    schema: String,
    reports: &'a [MetricsReport],
}

pub fn metrics_json(reports: &[MetricsReport]) -> Result<String> {
    let doc = MetricsDocument { schema: format!("selfsim-metrics/{SCHEMA_VERSION}"), reports };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// `time,x_0,…,x_{N-1}` per recorded step.
pub fn write_trace_csv<W: Write>(trace: &SimTrace, mut w: W) -> Result<()> {
    let kind = serde_json::to_value(trace.kind)?;
    writeln!(
        w,
        "# selfsim-trace v{SCHEMA_VERSION} kind={} seed={} dt={} t_end={} tau={}",
        kind.as_str().unwrap_or_default(),
        trace.seed,
        trace.dt,
        trace.t_end,
        trace.tau
    )?;
    let n = trace.states.first().map_or(0, Vec::len);
    let mut header = String::from("time");
    for i in 0..n {
        header.push_str(&format!(",x_{i}"));
    }
    writeln!(w, "{header}")?;
    for (t, x) in trace.times.iter().zip(&trace.states) {
        let mut line = t.to_string();
        for v in x {
            line.push(',');
            line.push_str(&v.to_string());
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Budget;
    use crate::metrics::full_report;

    fn h23() -> Graph {
        Graph::build(GraphSpec::hierarchical(2, 3).unwrap(), &Budget::default()).unwrap()
    }

    #[test]
    fn edgelist_round_trip() {
        let g = h23();
        let mut buf = Vec::new();
        write_edgelist(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# selfsim-edgelist v1 family=hierarchical n=2 k=3 vertices=9 edges=12\n"));
        assert_eq!(text.lines().count(), 13);
        let back = read_edgelist(&buf[..]).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn edgelist_rejects_garbage() {
        assert!(read_edgelist(&b""[..]).is_err());
        assert!(read_edgelist(&b"0 1\n"[..]).is_err());
        let bad = b"# selfsim-edgelist v1 family=hierarchical n=1 k=3 vertices=3 edges=1\n0 1 2\n";
        assert!(read_edgelist(&bad[..]).is_err());
        let oob = b"# selfsim-edgelist v1 family=hierarchical n=1 k=3 vertices=3 edges=1\n0 7\n";
        assert!(read_edgelist(&oob[..]).is_err());
    }

    #[test]
    fn graph_json_shape() {
        let v = graph_json(&h23());
        assert_eq!(v["schema"], "selfsim-graph/1");
        assert_eq!(v["num_vertices"], 9);
        assert_eq!(v["spec"]["family"], "hierarchical");
        assert_eq!(v["edges"].as_array().unwrap().len(), 12);
    }

    #[test]
    fn spectrum_csv() {
        let s = SpectrumMultiset::compute(GraphSpec::sierpinski(2, 3).unwrap(), &Budget::default()).unwrap();
        let mut buf = Vec::new();
        write_spectrum_csv(&s, false, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "value,multiplicity");
        assert_eq!(lines[2], "0,1");
        assert_eq!(*lines.last().unwrap(), "5,1");

        let mut buf = Vec::new();
        write_spectrum_csv(&s, true, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2 + 9);
    }

    #[test]
    fn metrics_csv_and_json() {
        let r = full_report(GraphSpec::hierarchical(2, 3).unwrap(), &Budget::default()).unwrap();
        let mut buf = Vec::new();
        write_metrics_csv(std::slice::from_ref(&r), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# selfsim-metrics v1");
        assert_eq!(lines[1], METRICS_COLUMNS.join(","));
        assert!(lines[2].starts_with("hier,2,3,9,12,"));
        assert_eq!(lines[2].split(',').count(), 16);

        let mut buf = Vec::new();
        write_metrics_csv_columns(std::slice::from_ref(&r), &["n", "kirchhoff"], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(2).unwrap().split(',').next(), Some("2"));
        assert!(write_metrics_csv_columns(std::slice::from_ref(&r), &["nope"], Vec::new()).is_err());

        let json: serde_json::Value = serde_json::from_str(&metrics_json(&[r]).unwrap()).unwrap();
        assert_eq!(json["schema"], "selfsim-metrics/1");
        assert_eq!(json["reports"][0]["num_vertices"], 9);
    }
}
