//! Trace serialization: one CSV per run, header mandatory, fixed column
//! order, full float precision (f64 `Display` round-trips exactly).

use crate::error::{Error, Result};
use crate::sim::{SimTrace, TraceSample};

pub const CSV_HEADER: &str = "t,X,Y,phi,x_body,V_e,V_d,omega_e,omega_d,theta_e,theta_d,N_a,N_b,N_c,mode,Kp_t,Ki_t,Kd_t,Kp_r,Ki_r,Kd_r,e_t,e_r";

pub fn trace_to_csv(trace: &SimTrace) -> String {
    let mut out = String::with_capacity(trace.samples.len() * 128);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &trace.samples {
        let mode = if s.stuck { 0 } else { 1 };
        let fields = [
            s.t.to_string(),
            s.x.to_string(),
            s.y.to_string(),
            s.phi.to_string(),
            s.x_body.to_string(),
            s.v_e.to_string(),
            s.v_d.to_string(),
            s.omega_e.to_string(),
            s.omega_d.to_string(),
            s.theta_e.to_string(),
            s.theta_d.to_string(),
            s.n_a.to_string(),
            s.n_b.to_string(),
            s.n_c.to_string(),
            mode.to_string(),
            s.gains_t[0].to_string(),
            s.gains_t[1].to_string(),
            s.gains_t[2].to_string(),
            s.gains_r[0].to_string(),
            s.gains_r[1].to_string(),
            s.gains_r[2].to_string(),
            s.e_t.to_string(),
            s.e_r.to_string(),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parse a CSV produced by [`trace_to_csv`] back into samples.
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceSample>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or(Error::BadTrace("empty file".into()))?;
    if header != CSV_HEADER {
        return Err(Error::BadTrace(format!("unexpected header `{header}`")));
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 23 {
            return Err(Error::BadTrace(format!(
                "row {}: expected 23 fields, got {}",
                i + 2,
                fields.len()
            )));
        }
        let f = |idx: usize| -> Result<f64> {
            fields[idx].parse().map_err(|_| {
                Error::BadTrace(format!("row {}: bad number `{}`", i + 2, fields[idx]))
            })
        };
        samples.push(TraceSample {
            t: f(0)?,
            x: f(1)?,
            y: f(2)?,
            phi: f(3)?,
            x_body: f(4)?,
            v_e: f(5)?,
            v_d: f(6)?,
            omega_e: f(7)?,
            omega_d: f(8)?,
            theta_e: f(9)?,
            theta_d: f(10)?,
            n_a: f(11)?,
            n_b: f(12)?,
            n_c: f(13)?,
            stuck: fields[14] == "0",
            gains_t: [f(15)?, f(16)?, f(17)?],
            gains_r: [f(18)?, f(19)?, f(20)?],
            e_t: f(21)?,
            e_r: f(22)?,
        });
    }
    Ok(samples)
}
