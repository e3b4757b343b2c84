use std::path::Path;

use crate::diagnostics::{DiagnosticsRecord, ProfileRow};
use crate::error::Result;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column names of [`write_series`].
pub fn series_header(labels: &[String], pairs: &[(usize, usize)]) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for l in labels {
        for q in ["n", "Px", "Py", "Pz", "T_kin", "theta"] {
            h.push(format!("{q}_{l}"));
        }
    }
    for q in ["Ptot_x", "Ptot_y", "Ptot_z", "Etot", "H", "dHdt", "vel_gap", "Tkin_gap", "theta_gap"] {
        h.push(q.into());
    }
    for (k, j) in pairs {
        h.push(format!("c12_{}_{}", labels[*k], labels[*j]));
        h.push(format!("c21_{}_{}", labels[*k], labels[*j]));
    }
    h
}

/// Time series of diagnostics, one row per record.
pub fn write_series(records: &[DiagnosticsRecord], labels: &[String], path: &Path) -> Result<()> {
    let pairs: Vec<(usize, usize)> = records
        .first()
        .map(|r| r.pairs.iter().map(|p| (p.k, p.j)).collect())
        .unwrap_or_default();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(series_header(labels, &pairs))?;
    for r in records {
        let mut row = vec![num(r.time)];
        for s in &r.species {
            row.extend([s.n, s.p.x, s.p.y, s.p.z, s.t_kin, s.theta].map(num));
        }
        row.extend(
            [r.p_total.x, r.p_total.y, r.p_total.z, r.e_total, r.entropy, r.dhdt, r.vel_gap, r.tkin_gap, r.theta_gap]
                .map(num),
        );
        for p in &r.pairs {
            row.push(num(p.c_kj));
            row.push(num(p.c_jk));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Spatial profile `x, n_k, Ux_k, T_kin_k, theta_k`.
pub fn write_profile(rows: &[ProfileRow], labels: &[String], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut h = vec!["x".to_string()];
    for l in labels {
        for q in ["n", "Ux", "T_kin", "theta"] {
            h.push(format!("{q}_{l}"));
        }
    }
    w.write_record(&h)?;
    for r in rows {
        let mut row = vec![num(r.x)];
        for &(n, u, t, th) in &r.species {
            row.extend([n, u, t, th].map(num));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{PairDiagnostics, SpeciesDiagnostics};
    use nalgebra::Vector3;

    #[test]
    fn series_columns_and_precision() {
        let sp = SpeciesDiagnostics {
            n: 1.0,
            p: Vector3::new(0.5, 0.0, 0.0),
            e: 2.0,
            t_kin: 1.0 / 3.0,
            theta: 0.25,
        };
        let rec = DiagnosticsRecord {
            time: 0.1,
            species: vec![sp, sp],
            p_total: Vector3::new(1.0, 0.0, 0.0),
            e_total: 4.0,
            entropy: -1.0,
            dhdt: 0.0,
            vel_gap: 0.4,
            tkin_gap: 0.5,
            theta_gap: 0.6,
            pairs: vec![PairDiagnostics {
                k: 0,
                j: 1,
                c_kj: 0.7,
                c_jk: 0.8,
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let labels = vec!["1".to_string(), "2".to_string()];
        write_series(&[rec], &labels, &path).unwrap();
        let mut rd = csv::Reader::from_path(&path).unwrap();
        let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header.len(), 1 + 12 + 9 + 2);
        assert_eq!(header[5], "T_kin_1");
        assert_eq!(header.last().unwrap(), "c21_1_2");
        let row = rd.records().next().unwrap().unwrap();
        let t: f64 = row[5].parse().unwrap();
        assert_eq!(t, 1.0 / 3.0);
    }

    #[test]
    fn profile_round_trip() {
        let rows = vec![ProfileRow {
            x: -0.25,
            species: vec![(1.0, 0.1, 0.9, 0.8)],
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_profile(&rows, &["a".to_string()], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,n_a,Ux_a,T_kin_a,theta_a\n"));
        assert_eq!(text.lines().count(), 2);
    }
}
