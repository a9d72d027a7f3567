//! Plot-ready CSV writers. Reals use 17 significant digits so values survive
//! a text round trip exactly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::integrate::Trajectory;
use crate::lyapunov::{LyapunovEstimate, SweepResult};
use crate::model::Equilibrium;

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory_csv<W: Write>(t: &Trajectory, w: &mut W) -> io::Result<()> {
    writeln!(w, "n,t,x,y")?;
    for (n, (time, s)) in t.times.iter().zip(&t.states).enumerate() {
        writeln!(w, "{n},{},{},{}", num(*time), num(s.x), num(s.y))?;
    }
    if let Some(b) = t.blowup {
        writeln!(w, "# blowup at n={}", b.step + 1)?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(r: &SweepResult, w: &mut W) -> io::Result<()> {
    writeln!(w, "alpha,lambda,method,stderr")?;
    if r.points.is_empty() {
        return Ok(());
    }
    for p in &r.points {
        match &p.result {
            Ok(e) => writeln!(w, "{},{},{},{}", num(p.alpha), num(e.value), r.method, num(e.stderr))?,
            Err(_) => writeln!(w, "{},NaN,{},NaN", num(p.alpha), r.method)?,
        }
    }
    for p in &r.points {
        if let Err(e) = &p.result {
            writeln!(w, "# alpha={} failed: {e}", num(p.alpha))?;
        }
    }
    for c in &r.sign_changes {
        let kind = if c.stabilizing { "stabilizing" } else { "destabilizing" };
        writeln!(
            w,
            "# sign change at alpha={} in [{}, {}] ({kind})",
            num(c.location),
            num(c.lo),
            num(c.hi)
        )?;
    }
    if r.stable_set.is_empty() {
        writeln!(w, "# stable set: empty")?;
    } else {
        let parts: Vec<String> = r
            .stable_set
            .iter()
            .map(|(a, b)| format!("[{}, {}]", num(*a), num(*b)))
            .collect();
        writeln!(w, "# stable set: {}", parts.join(" U "))?;
    }
    Ok(())
}

pub fn write_equilibria_csv<W: Write>(
    points: &[(Equilibrium, [(f64, f64); 2])],
    omitted: &[(String, String)],
    w: &mut W,
) -> io::Result<()> {
    writeln!(w, "index,label,x,y,residual,eig1_re,eig1_im,eig2_re,eig2_im")?;
    for (i, (e, ev)) in points.iter().enumerate() {
        writeln!(
            w,
            "{i},{},{},{},{},{},{},{},{}",
            e.label,
            num(e.point.x),
            num(e.point.y),
            num(e.residual),
            num(ev[0].0),
            num(ev[0].1),
            num(ev[1].0),
            num(ev[1].1)
        )?;
    }
    for (label, why) in omitted {
        writeln!(w, "# {label} omitted: {why}")?;
    }
    Ok(())
}

pub fn write_lyapunov_csv<W: Write>(e: &LyapunovEstimate, w: &mut W) -> io::Result<()> {
    writeln!(w, "lambda,method,stderr,n,periodicity_defect,min_q4_sq")?;
    writeln!(
        w,
        "{},{},{},{},{},{}",
        num(e.value),
        e.method,
        num(e.stderr),
        e.n,
        num(e.diagnostics.periodicity_defect),
        num(e.diagnostics.min_q4_sq)
    )
}

fn emit<F>(path: &Path, f: F) -> io::Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()
}

pub fn emit_trajectory_csv(t: &Trajectory, path: &Path) -> io::Result<()> {
    emit(path, |w| write_trajectory_csv(t, w))
}

pub fn emit_sweep_csv(r: &SweepResult, path: &Path) -> io::Result<()> {
    emit(path, |w| write_sweep_csv(r, w))
}
