//! Datasets as CSV: header `regime,<var1>,<var2>,...`, one record per row,
//! regime `obs` or `do(<name>=<0|1>[;...])`, cells `0`/`1`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::{Intervention, WorldState};
use crate::simulator::{Dataset, Record, Regime};

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(line, e.to_string())
}

fn regime_label(dataset: &Dataset, regime: &Regime) -> String {
    match regime {
        Regime::Observational => "obs".to_string(),
        Regime::Do(i) => {
            let parts: Vec<String> = i
                .assignments
                .iter()
                .map(|(id, v)| format!("{}={}", dataset.variables[id.0], *v as u8))
                .collect();
            format!("do({})", parts.join(";"))
        }
    }
}

fn parse_regime(dataset: &Dataset, line: usize, s: &str) -> Result<Regime> {
    if s == "obs" {
        return Ok(Regime::Observational);
    }
    let inner = s
        .strip_prefix("do(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::parse(line, format!("regime '{}' is neither obs nor do(...)", s)))?;
    let mut intervention = Intervention::new();
    for part in inner.split(';') {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("malformed assignment '{}'", part)))?;
        let id = dataset
            .id_of(name)
            .ok_or_else(|| Error::parse(line, format!("unknown variable '{}' in regime", name)))?;
        let value = parse_cell(line, value)?;
        if intervention.assignments.insert(id, value).is_some() {
            return Err(Error::parse(line, format!("'{}' assigned twice", name)));
        }
    }
    Ok(Regime::Do(intervention))
}

fn parse_cell(line: usize, s: &str) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::parse(line, format!("cell '{}' is not 0 or 1", s))),
    }
}

pub fn write_dataset<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Environment(e.to_string());
    w.write_record(std::iter::once("regime").chain(dataset.variables.iter().map(String::as_str)))
        .map_err(io)?;
    for r in &dataset.records {
        let mut row = vec![regime_label(dataset, &r.regime)];
        row.extend(
            r.state
                .values
                .iter()
                .map(|b| if *b { "1" } else { "0" }.to_string()),
        );
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Environment(e.to_string()))
}

pub fn dataset_to_string(dataset: &Dataset) -> String {
    let mut buf = Vec::new();
    write_dataset(dataset, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("dataset is UTF-8")
}

pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = r.headers().map_err(csv_error)?.clone();
    if header.get(0) != Some("regime") {
        return Err(Error::parse(1, "first column must be 'regime'"));
    }
    let variables: Vec<String> = header.iter().skip(1).map(String::from).collect();
    for (i, v) in variables.iter().enumerate() {
        if v.is_empty() || variables[..i].contains(v) {
            return Err(Error::parse(1, format!("bad or duplicate column '{}'", v)));
        }
    }
    let mut dataset = Dataset::empty(variables);
    for row in r.records() {
        let row = row.map_err(csv_error)?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let regime = parse_regime(&dataset, line, &row[0])?;
        let values = row
            .iter()
            .skip(1)
            .map(|c| parse_cell(line, c))
            .collect::<Result<Vec<_>>>()?;
        if let Regime::Do(i) = &regime {
            if let Some((id, _)) = i.assignments.iter().find(|(id, v)| values[id.0] != **v) {
                return Err(Error::parse(
                    line,
                    format!(
                        "'{}' disagrees with its intervention",
                        dataset.variables[id.0]
                    ),
                ));
            }
        }
        dataset.records.push(Record {
            regime,
            state: WorldState { values },
        });
    }
    Ok(dataset)
}

pub fn dataset_from_str(text: &str) -> Result<Dataset> {
    read_dataset(text.as_bytes())
}
