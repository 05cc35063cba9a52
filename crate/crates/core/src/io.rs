//! Solution families on disk: one little-endian f64 file per (member, field),
//! row-major time x space, described by a `key=value` manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::solvers::{EpsRecord, Field, Grid1D, SolutionFamily};
use crate::{Error, Result};

pub const MANIFEST: &str = "manifest.txt";
pub const FORMAT: &str = "colwave-dump-1";

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn data_file(k: usize, field: &str) -> String {
    format!("member_{k:02}_{field}.f64")
}

/// Writes the family into `dir` (created if missing).
pub fn write_family(dir: &Path, family: &SolutionFamily) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut m = String::new();
    let mut kv = |k: &str, v: String| {
        m.push_str(k);
        m.push('=');
        m.push_str(&v);
        m.push('\n');
    };
    kv("format", FORMAT.into());
    kv("scenario", family.scenario_id.clone());
    kv("solver", family.solver_id.clone());
    kv("byte_order", "little".into());
    kv("dtype", "f64".into());
    kv("layout", "row_major_time_space".into());
    kv("eps", join(&family.eps_values()));
    kv("members", family.records.len().to_string());
    for (k, r) in family.records.iter().enumerate() {
        let g = &r.grid;
        let p = format!("member.{k}");
        kv(&format!("{p}.eps"), format!("{:?}", r.eps));
        kv(&format!("{p}.scale"), format!("{:?}", r.scale));
        kv(&format!("{p}.drift"), format!("{:?}", r.drift));
        kv(&format!("{p}.grid"), format!("{:?},{:?},{},{:?},{:?},{:?}", g.x_min, g.x_max, g.nx, g.t_end, g.cfl, g.snapshot_dt));
        kv(&format!("{p}.times"), join(&r.times));
        kv(&format!("{p}.fields"), r.fields.iter().map(|f| f.name.as_str()).collect::<Vec<_>>().join(","));
        for f in &r.fields {
            let name = data_file(k, &f.name);
            let mut bytes = Vec::with_capacity(8 * f.data.len());
            for x in &f.data {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
            fs::write(dir.join(&name), bytes)?;
            kv(&format!("{p}.file.{}", f.name), name);
        }
    }
    fs::write(dir.join(MANIFEST), m)?;
    Ok(())
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_manifest(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::InvalidInput(format!("manifest line {}: missing '='", n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn floats(s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad number '{x}' in manifest")))).collect()
}

/// Reads a family written by [`write_family`].
pub fn read_family(dir: &Path) -> Result<SolutionFamily> {
    let m = parse_manifest(&fs::read_to_string(dir.join(MANIFEST))?)?;
    let get = |k: &str| m.get(k).cloned().ok_or_else(|| Error::InvalidInput(format!("manifest lacks '{k}'")));
    if get("format")? != FORMAT || get("byte_order")? != "little" || get("dtype")? != "f64" {
        return Err(Error::Unsupported("manifest describes an unknown layout".into()));
    }
    let members: usize = get("members")?.parse().map_err(|_| Error::InvalidInput("bad member count".into()))?;
    let mut records = Vec::with_capacity(members);
    for k in 0..members {
        let p = format!("member.{k}");
        let gv = floats(&get(&format!("{p}.grid"))?)?;
        if gv.len() != 6 {
            return Err(Error::InvalidInput(format!("{p}.grid needs 6 values")));
        }
        let grid = Grid1D { x_min: gv[0], x_max: gv[1], nx: gv[2] as usize, t_end: gv[3], cfl: gv[4], snapshot_dt: gv[5] };
        let eps = floats(&get(&format!("{p}.eps"))?)?[0];
        let scale = floats(&get(&format!("{p}.scale"))?)?[0];
        let drift = floats(&get(&format!("{p}.drift"))?)?[0];
        let mut rec = EpsRecord::new(eps, scale, grid).with_drift(drift);
        rec.times = floats(&get(&format!("{p}.times"))?)?;
        let expect = rec.times.len() * grid.len();
        for name in get(&format!("{p}.fields"))?.split(',').filter(|s| !s.is_empty()) {
            let bytes = fs::read(dir.join(get(&format!("{p}.file.{name}"))?))?;
            if bytes.len() != 8 * expect {
                return Err(Error::InvalidInput(format!("{p} field {name}: expected {expect} values, found {} bytes", bytes.len())));
            }
            let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            rec.fields.push(Field { name: name.to_string(), data });
        }
        records.push(rec);
    }
    Ok(SolutionFamily::new(&get("scenario")?, &get("solver")?, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = std::env::temp_dir().join(format!("colwave-io-{}", std::process::id()));
        let recs: Vec<EpsRecord> = [0.1, 0.07]
            .iter()
            .map(|&eps| {
                let g = Grid1D::new(-1.0, 1.0, 10, 1.0).with_snapshot_dt(0.5);
                let mut r = EpsRecord::new(eps, eps / 3.0, g).with_drift(eps.sqrt());
                r.add_field("u");
                r.add_field("v");
                for t in g.snapshot_times() {
                    let a: Vec<f64> = g.nodes().iter().map(|x| (x * t / eps).sin()).collect();
                    let b: Vec<f64> = a.iter().map(|y| y * std::f64::consts::PI).collect();
                    r.push_snapshot(t, &[&a, &b]);
                }
                r
            })
            .collect();
        let fam = SolutionFamily::new("demo", "test", recs);
        write_family(&dir, &fam).unwrap();
        let back = read_family(&dir).unwrap();
        fs::remove_dir_all(&dir).unwrap();
        assert_eq!(back, fam);
    }

    #[test]
    fn manifest_errors_are_reported() {
        assert!(parse_manifest("a=1\nbroken\n").is_err());
        assert_eq!(parse_manifest("# c\n\n k = v \n").unwrap()["k"], "v");
    }
}
