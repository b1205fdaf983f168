//! CSV output. Floats are written in shortest round-trip form (`inf` for
//! the infinite relative change of the first iteration).

use std::io::{self, Write};

use cfp_split::SolveReport;

pub const TRACE_HEADER: &str = "k,objective,T_v,max_local_rc,messages_cum";

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// One row per iteration. `messages_cum` counts update and detector traffic.
pub fn write_trace<W: Write + ?Sized>(out: &mut W, report: &SolveReport) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    let mut cum = 0u64;
    for t in &report.trace {
        cum += t.messages + t.detector_messages;
        writeln!(
            out,
            "{},{},{},{},{}",
            t.k,
            fmt_f64(t.objective),
            fmt_f64(t.t_v),
            fmt_f64(t.max_rc),
            cum
        )?;
    }
    Ok(())
}
