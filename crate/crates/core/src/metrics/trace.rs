use std::io::{Read, Write};

use crate::col::Regularity;
use crate::error::{ColError, Result};
use crate::geometry::{BregmanGeometry, Point};
use crate::oracles::EquilibriumCertificate;

/// One round as persisted in trace CSVs.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub x: Point,
    pub loss: f64,
    pub gap: f64,
    pub delta: Option<f64>,
    pub xi_norm: f64,
    pub static_regret_cum: f64,
    pub dynamic_regret_cum: f64,
}

/// Per-round quantities kept in memory for the inequality checkers.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundDetail {
    pub best_response: Point,
    /// l_n(x*) for the reference equilibrium.
    pub loss_at_star: Option<f64>,
    /// <grad l_n(x_n), x_n - x*>.
    pub linearized: Option<f64>,
    /// ||x_n - x*||^2, kept separately to avoid a sqrt round trip.
    pub delta_sq: Option<f64>,
    /// Drift budget a_n of a predictable sequence (0 for stationary problems).
    pub drift: f64,
}

/// What the checkers need to know about the run beyond its rows.
#[derive(Clone, Debug, PartialEq)]
pub struct RunContext {
    pub regularity: Regularity,
    pub diameter: f64,
    pub geometry: Option<BregmanGeometry>,
    /// Constant step size, if the run used one.
    pub step: Option<f64>,
    pub certificate: Option<EquilibriumCertificate>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub problem: String,
    pub algorithm: String,
    pub seed: u64,
    pub rows: Vec<TraceRow>,
    /// Empty for traces read back from CSV.
    pub details: Vec<RoundDetail>,
    pub context: Option<RunContext>,
}

impl RunTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.x.dim())
    }

    pub fn x_star(&self) -> Option<&Point> {
        self.context
            .as_ref()?
            .certificate
            .as_ref()
            .map(|c| &c.x_star)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.write_csv_strided(out, 1)
    }

    /// Writes every `stride`-th row plus the last one.
    pub fn write_csv_strided<W: Write>(&self, out: W, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header(self.dim())).map_err(csv_err)?;
        let last = self.rows.len().saturating_sub(1);
        for (i, r) in self.rows.iter().enumerate() {
            if i % stride != 0 && i != last {
                continue;
            }
            let mut rec = Vec::with_capacity(r.x.dim() + 7);
            rec.push(r.n.to_string());
            rec.extend(r.x.iter().map(|v| fmt(*v)));
            rec.push(fmt(r.loss));
            rec.push(fmt(r.gap));
            rec.push(r.delta.map(fmt).unwrap_or_default());
            rec.push(fmt(r.xi_norm));
            rec.push(fmt(r.static_regret_cum));
            rec.push(fmt(r.dynamic_regret_cum));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest decimal that parses back to the same f64.
fn fmt(v: f64) -> String {
    format!("{v:?}")
}

pub fn header(dim: usize) -> Vec<String> {
    let mut h = vec!["n".to_string()];
    h.extend((0..dim).map(|i| format!("x_{i}")));
    for c in [
        "loss",
        "gap",
        "delta",
        "xi_norm",
        "static_regret_cum",
        "dynamic_regret_cum",
    ] {
        h.push(c.to_string());
    }
    h
}

fn csv_err(e: csv::Error) -> ColError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ColError::Io(io),
        other => ColError::Parse {
            line,
            msg: format!("{other:?}"),
        },
    }
}

/// Rows of a trace CSV. The header must match the published schema exactly.
pub fn parse_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let mut records = rd.records();
    let head = match records.next() {
        Some(r) => r.map_err(csv_err)?,
        None => {
            return Err(ColError::Parse {
                line: 1,
                msg: "empty trace".into(),
            })
        }
    };
    if head.len() < 8 {
        return Err(ColError::Parse {
            line: 1,
            msg: format!("header has {} columns, need at least 8", head.len()),
        });
    }
    let dim = head.len() - 7;
    let expected = header(dim);
    if head.iter().ne(expected.iter().map(String::as_str)) {
        return Err(ColError::Parse {
            line: 1,
            msg: format!("header must be `{}`", expected.join(",")),
        });
    }
    let mut rows = Vec::new();
    let mut prev = 0usize;
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(csv_err)?;
        if rec.len() != dim + 7 {
            return Err(ColError::Parse {
                line,
                msg: format!("expected {} fields, found {}", dim + 7, rec.len()),
            });
        }
        let n: usize = rec[0].parse().map_err(|_| ColError::Parse {
            line,
            msg: format!("bad round index `{}`", &rec[0]),
        })?;
        if n <= prev {
            return Err(ColError::Parse {
                line,
                msg: format!("round {n} does not increase"),
            });
        }
        prev = n;
        let num = |j: usize| -> Result<f64> {
            let v: f64 = rec[j].parse().map_err(|_| ColError::Parse {
                line,
                msg: format!("bad number `{}`", &rec[j]),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ColError::Parse {
                    line,
                    msg: format!("non-finite value `{}`", &rec[j]),
                })
            }
        };
        let x = (1..=dim).map(num).collect::<Result<Vec<_>>>()?;
        let delta = if rec[dim + 3].is_empty() {
            None
        } else {
            Some(num(dim + 3)?)
        };
        rows.push(TraceRow {
            n,
            x: Point::from_raw(x),
            loss: num(dim + 1)?,
            gap: num(dim + 2)?,
            delta,
            xi_norm: num(dim + 4)?,
            static_regret_cum: num(dim + 5)?,
            dynamic_regret_cum: num(dim + 6)?,
        });
    }
    Ok(rows)
}
