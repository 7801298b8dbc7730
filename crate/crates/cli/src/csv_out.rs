//! CSV emission and trace re-parsing. Field order is fixed and floats use
//! the shortest round-trip representation, so identical runs produce
//! byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::CliError;
use chainwave_core::fem::resolvent::ResolventSample;
use chainwave_core::{EnergyTrace, SpectralRoot};

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Io(format!("creating {}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

pub fn spectrum_csv(roots: &[SpectralRoot]) -> String {
    let mut out = String::from("index,z,lambda_im,residual,family,family_k\n");
    for r in roots {
        let (family, k) = match r.family {
            Some(m) => (m.kind.to_string(), m.k.to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{family},{k}",
            r.index, r.z, r.lambda_im, r.residual
        );
    }
    out
}

pub fn trace_csv(trace: &EnergyTrace) -> String {
    let mut out = String::from("t,E,diss_total");
    for i in 1..=trace.term_kinds.len() {
        let _ = write!(out, ",diss_term_{i}");
    }
    out.push_str(",balance_residual\n");
    for s in &trace.samples {
        let _ = write!(out, "{},{},{}", s.t, s.energy, s.diss_total);
        for v in &s.diss_terms {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{}", s.balance_residual);
    }
    out
}

/// Reads the (t, E) columns back from a trace CSV.
pub fn parse_trace_csv(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Io("empty trace file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"t") || cols.get(1) != Some(&"E") {
        return Err(CliError::Io("trace header must start with t,E".into()));
    }
    let mut samples = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64, CliError> {
            s.and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::Io(format!("bad trace row {}", n + 2)))
        };
        let t = parse(fields.next())?;
        let e = parse(fields.next())?;
        samples.push((t, e));
    }
    Ok(samples)
}

pub fn resolvent_csv(sweep: &[ResolventSample]) -> String {
    let mut out = String::from("beta,norm,norm_over_beta\n");
    for s in sweep {
        let _ = writeln!(out, "{},{},{}", s.beta, s.norm, s.norm_over_beta());
    }
    out
}

/// Per-edge sampled mode values prefixed by a comment header with the
/// coefficients and condition residuals.
pub fn mode_csv(
    mode: &chainwave_core::Eigenmode,
    samples_per_edge: usize,
) -> String {
    use chainwave_core::modes::{BeamTail, EdgeModeCoeffs};
    let geom = mode.geometry().clone();
    let mut out = String::new();
    let _ = writeln!(out, "# z = {}", mode.z);
    let _ = writeln!(out, "# lambda_im = {}", mode.z * mode.z);
    let r = mode.residuals;
    let _ = writeln!(
        out,
        "# residuals: seed = {}, terminal = {}, moments = {}, continuity = {}, force = {}",
        r.seed, r.terminal, r.moments, r.continuity, r.force_balance
    );
    for (edge, coeffs) in mode.per_edge.iter().enumerate() {
        match coeffs {
            EdgeModeCoeffs::String { a, b } => {
                let _ = writeln!(out, "# edge {edge} string a = {a} b = {b}");
            }
            EdgeModeCoeffs::Beam { a, b, tail } => match tail {
                BeamTail::SinhCosh { r, s } => {
                    let _ = writeln!(
                        out,
                        "# edge {edge} beam (sinh/cosh) a = {a} b = {b} r = {r} s = {s}"
                    );
                }
                BeamTail::ScaledExp { r, s } => {
                    let _ = writeln!(
                        out,
                        "# edge {edge} beam (scaled-exp) a = {a} b = {b} r = {r} s = {s}"
                    );
                }
            },
        }
    }
    out.push_str("edge,x,phi\n");
    for edge in 0..geom.num_edges() {
        let l = geom.length(edge);
        for i in 0..samples_per_edge {
            let x = l * i as f64 / (samples_per_edge - 1) as f64;
            let _ = writeln!(out, "{edge},{x},{}", mode.eval(edge, x));
        }
    }
    out
}
