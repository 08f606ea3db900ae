//! CSV and JSON emitters for plot data. Floats are written in shortest
//! round-trip form, so files re-parse to identical values.

use std::io::{self, Write};

use serde::Serialize;

use crate::analysis::{BodeCurve, McReport};
use crate::sim::TimeSeries;

fn rows<W: Write, I>(mut w: W, header: &str, rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = String>,
{
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{r}")?;
    }
    w.flush()
}

/// `t,y`
pub fn write_time_series<W: Write>(w: W, ts: &TimeSeries) -> io::Result<()> {
    rows(w, "t,y", ts.t.iter().zip(&ts.y).map(|(t, y)| format!("{t},{y}")))
}

/// `omega,mag_db`
pub fn write_bode<W: Write>(w: W, curve: &BodeCurve) -> io::Result<()> {
    rows(
        w,
        "omega,mag_db",
        curve.omega.iter().zip(&curve.mag_db).map(|(o, m)| format!("{o},{m}")),
    )
}

/// `omega,<label1>,<label2>,...` with one magnitude column per curve on a shared grid.
pub fn write_bode_table<W: Write>(w: W, labels: &[&str], curves: &[BodeCurve]) -> io::Result<()> {
    let Some(first) = curves.first() else {
        return rows(w, "omega", std::iter::empty());
    };
    let header = std::iter::once("omega").chain(labels.iter().copied()).collect::<Vec<_>>().join(",");
    rows(
        w,
        &header,
        first.omega.iter().enumerate().map(|(i, o)| {
            let mut line = o.to_string();
            for c in curves {
                line.push(',');
                line.push_str(&c.mag_db[i].to_string());
            }
            line
        }),
    )
}

/// `trial,re,im`
pub fn write_pole_cloud<W: Write>(w: W, report: &McReport) -> io::Result<()> {
    rows(
        w,
        "trial,re,im",
        report.pole_cloud.iter().map(|p| format!("{},{},{}", p.trial, p.re, p.im)),
    )
}

/// `generation,best_F`
pub fn write_history<W: Write>(w: W, history: &[f64]) -> io::Result<()> {
    rows(
        w,
        "generation,best_F",
        history.iter().enumerate().map(|(g, f)| format!("{g},{f}")),
    )
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}
