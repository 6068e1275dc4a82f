//! Reader and writer for the MATPOWER case subset used by the planner:
//! `mpc.<name> = [ rows ];` matrices with `%` comments, plus the scalar
//! `mpc.baseMVA`.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::case::{BranchRecord, BusKind, BusRecord, CaseError, GenRecord, GridCase, QuadraticCost};

#[derive(Debug)]
enum Rhs {
    Matrix(Vec<Vec<f64>>),
    Scalar(String),
}

#[derive(Debug)]
struct Assignment {
    line: usize,
    rhs: Rhs,
}

fn malformed(block: &str, line: usize, reason: impl Into<String>) -> CaseError {
    CaseError::MalformedBlock {
        block: block.to_string(),
        line,
        reason: reason.into(),
    }
}

fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| match l.find('%') {
            Some(pos) => &l[..pos],
            None => l,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset].bytes().filter(|&b| b == b'\n').count() + 1
}

fn parse_matrix(block: &str, start_line: usize, body: &str) -> Result<Vec<Vec<f64>>, CaseError> {
    let mut rows = Vec::new();
    let mut line = start_line;
    for chunk in body.split_inclusive(['\n', ';']) {
        let row_line = line;
        if chunk.ends_with('\n') {
            line += 1;
        }
        let cells: Vec<&str> = chunk
            .trim_end_matches(['\n', ';'])
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if cells.is_empty() {
            continue;
        }
        let row = cells
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| malformed(block, row_line, format!("invalid number `{s}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn scan_assignments(text: &str) -> Result<HashMap<String, Assignment>, CaseError> {
    let mut out = HashMap::new();
    let mut rest = 0usize;
    while let Some(pos) = text[rest..].find("mpc.") {
        let start = rest + pos;
        let after = start + 4;
        let name_len = text[after..]
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(text.len() - after);
        let name = &text[after..after + name_len];
        let line = line_of(text, start);
        let mut cur = after + name_len;
        let tail = &text[cur..];
        let trimmed = tail.trim_start();
        if !trimmed.starts_with('=') {
            // `mpc` appearing outside an assignment, e.g. in the function line
            rest = cur;
            continue;
        }
        cur += tail.len() - trimmed.len() + 1;
        let tail = &text[cur..];
        let trimmed = tail.trim_start();
        cur += tail.len() - trimmed.len();
        let rhs = if trimmed.starts_with('[') {
            let close = trimmed
                .find(']')
                .ok_or_else(|| malformed(name, line, "unterminated matrix (missing `]`)"))?;
            let body = &trimmed[1..close];
            if body.contains('[') {
                return Err(malformed(name, line, "unterminated matrix (nested `[`)"));
            }
            let body_line = line_of(text, cur);
            let rows = parse_matrix(name, body_line, body)?;
            cur += close + 1;
            Rhs::Matrix(rows)
        } else {
            let end = trimmed.find([';', '\n']).unwrap_or(trimmed.len());
            let value = trimmed[..end].trim().to_string();
            cur += end;
            Rhs::Scalar(value)
        };
        out.insert(name.to_string(), Assignment { line, rhs });
        rest = cur;
    }
    Ok(out)
}

fn matrix<'a>(
    blocks: &'a HashMap<String, Assignment>,
    name: &str,
    min_cols: usize,
) -> Result<(usize, &'a [Vec<f64>]), CaseError> {
    let a = blocks
        .get(name)
        .ok_or_else(|| malformed(name, 0, "missing block"))?;
    match &a.rhs {
        Rhs::Matrix(rows) => {
            for (k, row) in rows.iter().enumerate() {
                if row.len() < min_cols {
                    return Err(malformed(
                        name,
                        a.line,
                        format!("row {} has {} columns, need at least {min_cols}", k + 1, row.len()),
                    ));
                }
            }
            Ok((a.line, rows))
        }
        Rhs::Scalar(_) => Err(malformed(name, a.line, "expected a matrix")),
    }
}

fn as_id(block: &str, line: usize, v: f64) -> Result<usize, CaseError> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(malformed(block, line, format!("`{v}` is not a valid bus id")))
    }
}

/// Parses MATPOWER case text into a validated [`GridCase`].
pub fn parse_matpower_case(text: &str) -> Result<GridCase, CaseError> {
    let clean = strip_comments(text);
    let blocks = scan_assignments(&clean)?;

    let base_mva = match blocks.get("baseMVA") {
        Some(Assignment {
            rhs: Rhs::Scalar(s),
            line,
        }) => s
            .parse::<f64>()
            .map_err(|_| malformed("baseMVA", *line, format!("invalid number `{s}`")))?,
        Some(a) => return Err(malformed("baseMVA", a.line, "expected a scalar")),
        None => return Err(malformed("baseMVA", 0, "missing block")),
    };

    let (bus_line, bus_rows) = matrix(&blocks, "bus", 13)?;
    let mut buses = Vec::with_capacity(bus_rows.len());
    let mut slack: Option<usize> = None;
    for row in bus_rows {
        let id = as_id("bus", bus_line, row[0])?;
        let code = row[1] as i64;
        let kind = BusKind::from_matpower(code).filter(|_| row[1].fract() == 0.0).ok_or_else(|| {
            malformed("bus", bus_line, format!("bus {id}: unsupported bus type {}", row[1]))
        })?;
        if kind == BusKind::Slack {
            if let Some(first) = slack {
                return Err(CaseError::MultipleSlackBuses { first, second: id });
            }
            slack = Some(id);
        }
        buses.push(BusRecord {
            id,
            kind,
            pd: row[2],
            qd: row[3],
            gs: row[4],
            bs: row[5],
            base_kv: row[9],
            vmax: row[11],
            vmin: row[12],
        });
    }

    let (gen_line, gen_rows) = matrix(&blocks, "gen", 10)?;
    let (cost_line, cost_rows) = matrix(&blocks, "gencost", 4)?;
    if cost_rows.len() < gen_rows.len() {
        return Err(malformed(
            "gencost",
            cost_line,
            format!("{} cost rows for {} generators", cost_rows.len(), gen_rows.len()),
        ));
    }
    let mut gens = Vec::with_capacity(gen_rows.len());
    for (k, (row, cost)) in gen_rows.iter().zip(cost_rows).enumerate() {
        gens.push(GenRecord {
            bus: as_id("gen", gen_line, row[0])?,
            pg: row[1],
            qg: row[2],
            qmax: row[3],
            qmin: row[4],
            vg: row[5],
            in_service: row[7] > 0.0,
            pmax: row[8],
            pmin: row[9],
            cost: parse_cost(k + 1, cost)?,
        });
    }

    let (br_line, br_rows) = matrix(&blocks, "branch", 11)?;
    let branches = br_rows
        .iter()
        .map(|row| {
            Ok(BranchRecord {
                from: as_id("branch", br_line, row[0])?,
                to: as_id("branch", br_line, row[1])?,
                r: row[2],
                x: row[3],
                b_total: row[4],
                tap: row[8],
                shift_deg: row[9],
                in_service: row[10] > 0.0,
            })
        })
        .collect::<Result<Vec<_>, CaseError>>()?;

    let case = GridCase {
        base_mva,
        buses,
        gens,
        branches,
    };
    case.validate()?;
    Ok(case)
}

fn parse_cost(row_no: usize, row: &[f64]) -> Result<QuadraticCost, CaseError> {
    let model = row[0];
    if model == 1.0 {
        return Err(CaseError::UnsupportedCostModel {
            row: row_no,
            reason: "piecewise-linear cost (model 1)".into(),
        });
    }
    if model != 2.0 {
        return Err(CaseError::UnsupportedCostModel {
            row: row_no,
            reason: format!("unknown cost model {model}"),
        });
    }
    let n = row[3];
    if n.fract() != 0.0 || !(0.0..=3.0).contains(&n) {
        return Err(CaseError::UnsupportedCostModel {
            row: row_no,
            reason: format!("polynomial with {n} coefficients; only degree <= 2 is supported"),
        });
    }
    let n = n as usize;
    if row.len() < 4 + n {
        return Err(CaseError::UnsupportedCostModel {
            row: row_no,
            reason: format!("declares {n} coefficients but has {}", row.len() - 4),
        });
    }
    // Coefficients are listed highest order first.
    let coeffs = &row[4..4 + n];
    let mut abc = [0.0; 3];
    for (k, &v) in coeffs.iter().enumerate() {
        abc[3 - n + k] = v;
    }
    Ok(QuadraticCost {
        a: abc[0],
        b: abc[1],
        c: abc[2],
    })
}

/// Serializes a case back to MATPOWER text. Columns the model does not keep
/// (area, zone, initial voltages, ratings) are written with neutral values.
pub fn to_matpower(case: &GridCase) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "function mpc = case_export");
    let _ = writeln!(s, "mpc.version = '2';");
    let _ = writeln!(s, "mpc.baseMVA = {};", case.base_mva);
    let _ = writeln!(s, "\n%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin");
    let _ = writeln!(s, "mpc.bus = [");
    for b in &case.buses {
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t1\t1\t0\t{}\t1\t{}\t{};",
            b.id,
            b.kind.matpower_code(),
            b.pd,
            b.qd,
            b.gs,
            b.bs,
            b.base_kv,
            b.vmax,
            b.vmin
        );
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin");
    let _ = writeln!(s, "mpc.gen = [");
    for g in &case.gens {
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{};",
            g.bus,
            g.pg,
            g.qg,
            g.qmax,
            g.qmin,
            g.vg,
            case.base_mva,
            u8::from(g.in_service),
            g.pmax,
            g.pmin
        );
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus");
    let _ = writeln!(s, "mpc.branch = [");
    for br in &case.branches {
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t0\t0\t0\t{}\t{}\t{};",
            br.from,
            br.to,
            br.r,
            br.x,
            br.b_total,
            br.tap,
            br.shift_deg,
            u8::from(br.in_service)
        );
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "\nmpc.gencost = [");
    for g in &case.gens {
        let _ = writeln!(s, "\t2\t0\t0\t3\t{}\t{}\t{};", g.cost.a, g.cost.b, g.cost.c);
    }
    let _ = writeln!(s, "];");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, TWO_BUS};

    #[test]
    fn parses_case30() {
        let case = parse_matpower_case(fixtures::CASE30).unwrap();
        assert_eq!(case.n_bus(), 30);
        assert_eq!(case.gens.len(), 6);
        assert_eq!(case.branches.len(), 41);
        assert_eq!(case.base_mva, 100.0);
        assert_eq!(case.buses[1].pd, 21.7);
        assert_eq!(case.buses[4].bs, 0.19);
        assert_eq!(case.gens[1].cost, QuadraticCost { a: 0.0175, b: 1.75, c: 0.0 });
        assert_eq!(case.slack_index(), 0);
        assert_eq!(case.dispatchable_gens().len(), 5);
    }

    #[test]
    fn parses_minimal_two_bus() {
        let case = parse_matpower_case(TWO_BUS).unwrap();
        assert_eq!(case.n_bus(), 2);
        assert_eq!(case.buses[1].kind, BusKind::Load);
        assert_eq!(case.gens[0].cost, QuadraticCost { a: 0.01, b: 10.0, c: 5.0 });
    }

    #[test]
    fn two_slack_buses_rejected() {
        let text = TWO_BUS.replace("2 1 40", "2 3 40");
        assert_eq!(
            parse_matpower_case(&text),
            Err(CaseError::MultipleSlackBuses { first: 1, second: 2 })
        );
    }

    #[test]
    fn piecewise_linear_cost_rejected() {
        let text = TWO_BUS.replace("2 0 0 3 0.01 10 5;", "1 0 0 2 0 0 100 1000;");
        assert!(matches!(
            parse_matpower_case(&text),
            Err(CaseError::UnsupportedCostModel { row: 1, .. })
        ));
    }

    #[test]
    fn cubic_cost_rejected() {
        let text = TWO_BUS.replace("2 0 0 3 0.01 10 5;", "2 0 0 4 1 0.01 10 5;");
        assert!(matches!(
            parse_matpower_case(&text),
            Err(CaseError::UnsupportedCostModel { .. })
        ));
    }

    #[test]
    fn linear_cost_padded() {
        let text = TWO_BUS.replace("2 0 0 3 0.01 10 5;", "2 0 0 2 10 5;");
        let case = parse_matpower_case(&text).unwrap();
        assert_eq!(case.gens[0].cost, QuadraticCost { a: 0.0, b: 10.0, c: 5.0 });
    }

    #[test]
    fn unterminated_matrix() {
        let text = TWO_BUS.trim_end().strip_suffix("];").unwrap();
        assert!(matches!(
            parse_matpower_case(text),
            Err(CaseError::MalformedBlock { .. })
        ));
    }

    #[test]
    fn missing_block() {
        let text = TWO_BUS.replace("mpc.branch", "mpc.other");
        match parse_matpower_case(&text) {
            Err(CaseError::MalformedBlock { block, .. }) => assert_eq!(block, "branch"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_bus_reference() {
        let text = TWO_BUS.replace("1 2 0 0.1", "1 7 0 0.1");
        assert!(matches!(
            parse_matpower_case(&text),
            Err(CaseError::UnknownBusReference { bus: 7, .. })
        ));
    }

    #[test]
    fn bad_number_reports_line() {
        let text = TWO_BUS.replace("2 1 40", "2 1 4x0");
        match parse_matpower_case(&text) {
            Err(CaseError::MalformedBlock { block, line, .. }) => {
                assert_eq!(block, "bus");
                assert_eq!(line, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn comments_and_commas() {
        let text = TWO_BUS.replace("1 0 0 50 -50 1 100 1 100 0;", "1, 0, 0, 50, -50, 1, 100, 1, 100, 0; % slack unit");
        parse_matpower_case(&text).unwrap();
    }

    #[test]
    fn round_trip_case30() {
        let case = parse_matpower_case(fixtures::CASE30).unwrap();
        let again = parse_matpower_case(&to_matpower(&case)).unwrap();
        assert_eq!(case, again);
    }
}
