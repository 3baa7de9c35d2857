//! CSV and JSON artifacts, and the loaders that read them back.
//!
//! Every CSV starts with one `#` line naming the schema and its version,
//! followed by `key=value` tokens for table-level scalars.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::GammaFn;
use crate::sim::{ComparisonReport, OccupancyBin, ReplicationRow};
use crate::solver::{PolicyTable, Regime, ValueTable};
use crate::strategic::{CoincidenceSet, IncentiveScheme};

pub const SCHEMA_VERSION: u32 = 1;

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Team => "team",
        Regime::Strategic => "strategic",
        Regime::Incentivized => "incentivized",
    }
}

fn parse_regime(s: &str) -> Result<Regime> {
    match s {
        "team" => Ok(Regime::Team),
        "strategic" => Ok(Regime::Strategic),
        "incentivized" => Ok(Regime::Incentivized),
        _ => Err(Error::Format(format!("unknown regime {s:?}"))),
    }
}

fn header_line(schema: &str, fields: &[(&str, String)]) -> String {
    let mut s = format!("# cascade {schema} v{SCHEMA_VERSION}");
    for (k, v) in fields {
        s.push(' ');
        s.push_str(k);
        s.push('=');
        s.push_str(v);
    }
    s.push('\n');
    s
}

/// Parsed `#` line: schema name and its key=value tokens.
struct Header {
    fields: Vec<(String, String)>,
}

impl Header {
    fn get(&self, key: &str) -> Result<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Format(format!("header lacks {key}")))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .parse()
            .map_err(|_| Error::Format(format!("bad header value for {key}")))
    }
}

fn split_header<'a>(text: &'a str, schema: &str) -> Result<(Header, &'a str)> {
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let mut tokens = first.split_whitespace();
    let ok = tokens.next() == Some("#")
        && tokens.next() == Some("cascade")
        && tokens.next() == Some(schema)
        && tokens.next() == Some(&format!("v{SCHEMA_VERSION}"));
    if !ok {
        return Err(Error::Format(format!("expected a {schema} v{SCHEMA_VERSION} header, got {first:?}")));
    }
    let fields = tokens
        .filter_map(|t| t.split_once('='))
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .collect();
    Ok((Header { fields }, rest))
}

fn write_csv<T: Serialize>(path: &Path, header: String, rows: &[T]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(header.as_bytes())?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(body: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(body.as_bytes())
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn gamma_from_id(id: usize, pretty: &str) -> Result<GammaFn> {
    if id >= GammaFn::COUNT {
        return Err(Error::Format(format!("gamma id {id} out of range")));
    }
    let g = GammaFn::from_id(id);
    if g.to_string() != pretty {
        return Err(Error::Format(format!("gamma {id} rendered as {pretty:?}")));
    }
    Ok(g)
}

fn grid_from_points(points: &[f64]) -> Result<Grid> {
    if points.len() < 2 {
        return Err(Error::Format("too few grid rows".into()));
    }
    let grid = Grid::new(points.len());
    if grid.points().zip(points).any(|(a, b)| a != *b) {
        return Err(Error::Format("rows do not form a uniform grid".into()));
    }
    Ok(grid)
}

#[derive(Serialize, Deserialize)]
struct PolicyRow {
    index: usize,
    pi: f64,
    gamma_id: usize,
    gamma_pretty: String,
    kind: String,
    reports: bool,
}

pub fn write_policy_csv(path: &Path, pt: &PolicyTable) -> Result<()> {
    let rows: Vec<PolicyRow> = pt
        .choice
        .iter()
        .enumerate()
        .map(|(i, g)| PolicyRow {
            index: i,
            pi: pt.grid.point(i),
            gamma_id: g.id(),
            gamma_pretty: g.to_string(),
            kind: if g.is_learning() { "learning" } else { "non_learning" }.to_owned(),
            reports: g.reports_any(),
        })
        .collect();
    let header = header_line("policy", &[("regime", regime_name(pt.regime).to_owned())]);
    write_csv(path, header, &rows)
}

pub fn read_policy_csv(path: &Path) -> Result<PolicyTable> {
    let text = fs::read_to_string(path)?;
    let (h, body) = split_header(&text, "policy")?;
    let rows: Vec<PolicyRow> = read_rows(body)?;
    let points: Vec<f64> = rows.iter().map(|r| r.pi).collect();
    let grid = grid_from_points(&points)?;
    let choice = rows
        .iter()
        .map(|r| gamma_from_id(r.gamma_id, &r.gamma_pretty))
        .collect::<Result<_>>()?;
    Ok(PolicyTable {
        grid,
        choice,
        regime: parse_regime(h.get("regime")?)?,
    })
}

#[derive(Serialize, Deserialize)]
struct ValueRow {
    pi: f64,
    #[serde(rename = "V")]
    v: f64,
    gamma_id: usize,
    gamma_pretty: String,
}

/// Relative value function and the team choice per node; the gain and
/// solver diagnostics go in the header.
pub fn write_value_csv(path: &Path, vt: &ValueTable, pt: &PolicyTable) -> Result<()> {
    let rows: Vec<ValueRow> = (0..vt.grid.len())
        .map(|i| ValueRow {
            pi: vt.grid.point(i),
            v: vt.values[i],
            gamma_id: pt.choice[i].id(),
            gamma_pretty: pt.choice[i].to_string(),
        })
        .collect();
    let set: Vec<String> = vt.gamma_set.iter().map(|g| g.id().to_string()).collect();
    let header = header_line(
        "value_function",
        &[
            ("rho", vt.rho.to_string()),
            ("ref_index", vt.ref_index.to_string()),
            ("iterations", vt.iterations.to_string()),
            ("span", vt.span.to_string()),
            ("gamma_set", set.join(",")),
        ],
    );
    write_csv(path, header, &rows)
}

pub fn read_value_csv(path: &Path) -> Result<(ValueTable, PolicyTable)> {
    let text = fs::read_to_string(path)?;
    let (h, body) = split_header(&text, "value_function")?;
    let rows: Vec<ValueRow> = read_rows(body)?;
    let points: Vec<f64> = rows.iter().map(|r| r.pi).collect();
    let grid = grid_from_points(&points)?;
    let gamma_set = h
        .get("gamma_set")?
        .split(',')
        .map(|s| {
            s.parse::<usize>()
                .ok()
                .filter(|&id| id < GammaFn::COUNT)
                .map(GammaFn::from_id)
                .ok_or_else(|| Error::Format(format!("bad gamma id {s:?}")))
        })
        .collect::<Result<_>>()?;
    let vt = ValueTable {
        grid,
        values: rows.iter().map(|r| r.v).collect(),
        rho: h.parse("rho")?,
        ref_index: h.parse("ref_index")?,
        iterations: h.parse("iterations")?,
        span: h.parse("span")?,
        gamma_set,
    };
    let pt = PolicyTable {
        grid,
        choice: rows
            .iter()
            .map(|r| gamma_from_id(r.gamma_id, &r.gamma_pretty))
            .collect::<Result<_>>()?,
        regime: Regime::Team,
    };
    Ok((vt, pt))
}

#[derive(Serialize, Deserialize)]
struct CoincidenceRow {
    index: usize,
    pi: f64,
    member: bool,
    pay: bool,
}

pub fn write_coincidence_csv(path: &Path, cs: &CoincidenceSet, scheme: &IncentiveScheme) -> Result<()> {
    let rows: Vec<CoincidenceRow> = (0..cs.grid.len())
        .map(|i| CoincidenceRow {
            index: i,
            pi: cs.grid.point(i),
            member: cs.member[i],
            pay: scheme.pays_at_index(i),
        })
        .collect();
    let header = header_line("coincidence", &[("amount", scheme.amount.to_string())]);
    write_csv(path, header, &rows)
}

pub fn read_coincidence_csv(path: &Path) -> Result<(CoincidenceSet, IncentiveScheme)> {
    let text = fs::read_to_string(path)?;
    let (h, body) = split_header(&text, "coincidence")?;
    let rows: Vec<CoincidenceRow> = read_rows(body)?;
    let points: Vec<f64> = rows.iter().map(|r| r.pi).collect();
    let grid = grid_from_points(&points)?;
    let pay: Vec<bool> = rows.iter().map(|r| r.pay).collect();
    Ok((
        CoincidenceSet {
            grid,
            member: rows.iter().map(|r| r.member).collect(),
        },
        IncentiveScheme::from_flags(grid, &pay, h.parse("amount")?),
    ))
}

pub fn write_comparison_csv(path: &Path, report: &ComparisonReport) -> Result<()> {
    write_csv(path, header_line("comparison", &[]), &report.replications)
}

pub fn read_comparison_csv(path: &Path) -> Result<Vec<ReplicationRow>> {
    let text = fs::read_to_string(path)?;
    let (_, body) = split_header(&text, "comparison")?;
    read_rows(body)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyRow {
    pub regime: String,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub mass: f64,
}

pub fn write_occupancy_csv(path: &Path, profiles: &[(&str, Vec<OccupancyBin>)]) -> Result<()> {
    let rows: Vec<OccupancyRow> = profiles
        .iter()
        .flat_map(|(name, bins)| {
            bins.iter().map(move |b| OccupancyRow {
                regime: (*name).to_owned(),
                bin_lo: b.lo,
                bin_hi: b.hi,
                mass: b.mass,
            })
        })
        .collect();
    write_csv(path, header_line("occupancy", &[]), &rows)
}

pub fn read_occupancy_csv(path: &Path) -> Result<Vec<OccupancyRow>> {
    let text = fs::read_to_string(path)?;
    let (_, body) = split_header(&text, "occupancy")?;
    read_rows(body)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_gammas, non_dominated_gammas, Params};
    use crate::solver::solve_average_reward;

    #[test]
    fn policy_and_value_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = Params {
            grid_size: 51,
            ..Params::default()
        };
        let (vt, pt) = solve_average_reward(&p, &non_dominated_gammas()).unwrap();
        write_value_csv(&dir.path().join("v.csv"), &vt, &pt).unwrap();
        write_policy_csv(&dir.path().join("p.csv"), &pt).unwrap();
        let (vt2, pt2) = read_value_csv(&dir.path().join("v.csv")).unwrap();
        assert_eq!(vt, vt2);
        assert_eq!(pt, pt2);
        assert_eq!(read_policy_csv(&dir.path().join("p.csv")).unwrap(), pt);
    }

    #[test]
    fn coincidence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(7);
        let cs = CoincidenceSet {
            grid,
            member: vec![true, false, false, true, true, false, true],
        };
        let scheme = IncentiveScheme::from_flags(grid, &[false, true, true, false, false, true, false], 0.05);
        let path = dir.path().join("c.csv");
        write_coincidence_csv(&path, &cs, &scheme).unwrap();
        assert_eq!(read_coincidence_csv(&path).unwrap(), (cs, scheme));
    }

    #[test]
    fn header_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, "index,pi\n0,0\n").unwrap();
        assert!(matches!(read_policy_csv(&path), Err(Error::Format(_))));
        fs::write(&path, "# cascade policy v9 regime=team\nindex\n").unwrap();
        assert!(matches!(read_policy_csv(&path), Err(Error::Format(_))));
    }

    #[test]
    fn every_rule_renders_and_parses() {
        for g in enumerate_gammas() {
            assert_eq!(gamma_from_id(g.id(), &g.to_string()).unwrap(), g);
        }
        assert!(gamma_from_id(16, "").is_err());
    }
}
