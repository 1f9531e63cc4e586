use std::io::Write;

use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    FirmLoan,
    InterbankLoan,
    SrtTax,
    FirmRepayment,
    InterbankRepayment,
    FirmDefault,
    WriteOff,
    Recovery,
    BankDefault,
}

/// One row of the per-run event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    pub step: usize,
    pub event: EventKind,
    pub agent: usize,
    pub counterparty: Option<usize>,
    pub amount: f64,
}

pub fn write_trace_csv<W: Write>(events: &[TraceEvent], w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(["step", "event", "agent", "counterparty", "amount"])?;
    for e in events {
        wr.serialize(e)?;
    }
    wr.flush()?;
    Ok(())
}
