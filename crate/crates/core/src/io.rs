//! File formats: design CSV/JSON, domain specification JSON and JSON-lines traces.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::annealer::{TraceRecord, TraceSink};
use crate::design::{Design, MaximinScore};
use crate::domain::{BoundingBox, Domain};
use crate::error::{config_err, Error, Result};

/// Writes `x1,...,xd` then one point per row. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_design_csv<W: Write>(design: &Design, mut out: W) -> Result<()> {
    let header: Vec<String> = (1..=design.dim()).map(|k| format!("x{k}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for p in design.points() {
        let row: Vec<String> = p.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_design_csv<R: BufRead>(input: R, domain_label: &str) -> Result<Design> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty design file".into()))??;
    let names: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    for (k, name) in names.iter().enumerate() {
        if *name != format!("x{}", k + 1) {
            return Err(Error::Parse(format!("header column {} is {name:?}, expected \"x{}\"", k + 1, k + 1)));
        }
    }
    let d = names.len();
    let mut coords = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d {
            return Err(Error::Parse(format!("line {}: {} fields, expected {d}", i + 2, fields.len())));
        }
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|_| Error::Parse(format!("line {}: cannot parse {f:?}", i + 2)))?;
            coords.push(v);
        }
    }
    if coords.is_empty() {
        return Err(Error::Parse("design file has no points".into()));
    }
    Design::new(d, coords, domain_label)
}

/// JSON form of a design with its score and free-form metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDocument {
    pub domain_label: String,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<MaximinScore>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub metadata: serde_json::Value,
}

impl DesignDocument {
    pub fn new(design: &Design, score: Option<MaximinScore>, metadata: serde_json::Value) -> Self {
        Self { domain_label: design.domain_label().to_string(), points: design.rows(), score, metadata }
    }

    pub fn design(&self) -> Result<Design> {
        Design::from_rows(&self.points, self.domain_label.clone())
    }
}

/// `{"kind": ..., "dim": d, "bbox": {"lower": [...], "upper": [...]}, "params": {...}}`.
///
/// `kind` is one of `hypercube`, `triangle2d`, `ball`, `annulus`, `external`. The box is
/// required for `external`, optional for `hypercube` (unit cube of `dim` by default) and
/// derived for the other shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<BoundingBox>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume_upper_bound: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BallParams {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnnulusParams {
    center: Vec<f64>,
    inner: f64,
    outer: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExternalParams {
    command: Vec<String>,
}

impl DomainSpec {
    pub fn named(kind: &str) -> Self {
        Self { kind: kind.into(), dim: None, bbox: None, params: serde_json::Value::Null, label: None, volume_upper_bound: None }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("domain spec: {e}")))
    }

    fn params<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(self.params.clone()).map_err(|e| config_err(format!("{} params: {e}", self.kind)))
    }

    pub fn build(&self) -> Result<Domain> {
        let domain = match self.kind.as_str() {
            "hypercube" => match (&self.bbox, self.dim) {
                (Some(b), _) => Domain::hypercube(b.clone()),
                (None, Some(d)) => Domain::unit_hypercube(d)?,
                (None, None) => return Err(config_err("hypercube needs a bbox or a dim")),
            },
            "triangle2d" => Domain::triangle2d(),
            "ball" => {
                let p: BallParams = self.params()?;
                Domain::ball(p.center, p.radius)?
            }
            "annulus" => {
                let p: AnnulusParams = self.params()?;
                Domain::annulus(p.center, p.inner, p.outer)?
            }
            "external" => {
                let p: ExternalParams = self.params()?;
                let bbox = self.bbox.clone().ok_or_else(|| config_err("external domain needs a bbox"))?;
                Domain::external(bbox, &p.command)?
            }
            other => return Err(config_err(format!("unknown domain kind {other:?}"))),
        };
        if let Some(d) = self.dim {
            if d != domain.dim() {
                return Err(config_err(format!("spec says dim {d}, {} domain has dim {}", self.kind, domain.dim())));
            }
        }
        if let Some(b) = &self.bbox {
            if self.kind != "hypercube" && self.kind != "external" && b != domain.bbox() {
                return Err(config_err(format!("bbox does not match the {} domain", self.kind)));
            }
        }
        let domain = match self.volume_upper_bound {
            Some(v) => domain.with_volume_upper_bound(v)?,
            None => domain,
        };
        Ok(match &self.label {
            Some(l) => domain.with_label(l.clone()),
            None => domain,
        })
    }
}

/// Streams trace records as one JSON object per line.
pub struct JsonLinesTrace<W: Write> {
    out: W,
}

impl<W: Write> JsonLinesTrace<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> TraceSink for JsonLinesTrace<W> {
    fn record(&mut self, record: &TraceRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::uniform_design;
    use crate::rng::seeded;
    use proptest::prelude::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let d = uniform_design(&Domain::triangle2d(), 25, &mut seeded(1, 0)).unwrap();
        let mut buf = Vec::new();
        write_design_csv(&d, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x1,x2\n"));
        let back = read_design_csv(text.as_bytes(), "triangle2d").unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn corrupted_csv() {
        assert!(matches!(read_design_csv("x1,x2\n0.1,abc\n".as_bytes(), "t"), Err(Error::Parse(_))));
        assert!(matches!(read_design_csv("x1,x2\n0.1\n".as_bytes(), "t"), Err(Error::Parse(_))));
        assert!(matches!(read_design_csv("a,b\n0.1,0.2\n".as_bytes(), "t"), Err(Error::Parse(_))));
        assert!(matches!(read_design_csv("".as_bytes(), "t"), Err(Error::Parse(_))));
        assert!(matches!(read_design_csv("x1\n".as_bytes(), "t"), Err(Error::Parse(_))));
    }

    #[test]
    fn domain_specs() {
        let tri = DomainSpec::parse(r#"{"kind": "triangle2d"}"#).unwrap().build().unwrap();
        assert!(tri.contains(&[0.7, 0.2]).unwrap());
        let cube = DomainSpec::parse(r#"{"kind": "hypercube", "dim": 2, "bbox": {"lower": [0, 0], "upper": [2, 1]}}"#)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(cube.volume_upper_bound(), Some(2.0));
        let ball = DomainSpec::parse(r#"{"kind": "ball", "params": {"center": [0, 0], "radius": 1}}"#).unwrap().build().unwrap();
        assert!(!ball.contains(&[1.1, 0.0]).unwrap());
        let ext = DomainSpec::parse(
            r#"{"kind": "external", "dim": 1, "bbox": {"lower": [0], "upper": [1]},
                "params": {"command": ["sh", "-c", "while read a; do echo 1; done"]}}"#,
        )
        .unwrap()
        .build()
        .unwrap();
        assert!(ext.contains(&[0.5]).unwrap());
        assert!(DomainSpec::parse(r#"{"kind": "ball", "params": {"center": [0], "radius": -1}}"#).unwrap().build().is_err());
        assert!(DomainSpec::parse(r#"{"kind": "torus"}"#).unwrap().build().is_err());
        assert!(DomainSpec::parse(r#"{"kind": "triangle2d", "dim": 3}"#).unwrap().build().is_err());
        assert!(DomainSpec::parse(r#"{"kind": "external", "params": {"command": ["true"]}}"#).unwrap().build().is_err());
    }

    #[test]
    fn design_document_round_trip() {
        let d = Design::from_rows(&[vec![0.0, 0.0], vec![3.0, 4.0]], "plane").unwrap();
        let doc = DesignDocument::new(&d, Some(MaximinScore { delta: 5.0, critical_pairs: 1 }), serde_json::json!({"method": "x"}));
        let text = serde_json::to_string(&doc).unwrap();
        let back: DesignDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back.design().unwrap(), d);
        assert_eq!(back, doc);
    }

    proptest! {
        #[test]
        fn csv_round_trip_arbitrary_values(vals in prop::collection::vec(-1e300f64..1e300, 2..40)) {
            let n = vals.len() / 2 * 2;
            prop_assume!(n >= 2);
            let Ok(d) = Design::new(2, vals[..n].to_vec(), "t") else { return Ok(()) };
            let mut buf = Vec::new();
            write_design_csv(&d, &mut buf).unwrap();
            prop_assert_eq!(read_design_csv(buf.as_slice(), "t").unwrap(), d);
        }
    }
}
