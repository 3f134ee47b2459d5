//! CSV renderings of experiment reports. Floats use `{:.16e}` so that
//! identical runs give identical bytes.

use std::fmt::Write;

use super::run::ExperimentReport;
use crate::lattice::SiteTable;

/// One output file: name and body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvFile {
    pub name: String,
    pub body: String,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn file(name: impl Into<String>, header: &str) -> CsvFile {
    CsvFile { name: name.into(), body: format!("{header}\n") }
}

fn push_row(f: &mut CsvFile, cols: &[String]) {
    f.body.push_str(&cols.join(","));
    f.body.push('\n');
}

/// Every CSV file of a report, in a fixed order.
pub fn report_csv(report: &ExperimentReport, table: &SiteTable) -> Vec<CsvFile> {
    let mut out = Vec::new();

    let mut fin = file("final.csv", "site,gx,gy,gz,parity,probability");
    for (i, p) in report.final_probabilities.iter().enumerate() {
        let g = table.global(i);
        push_row(
            &mut fin,
            &[i.to_string(), g[0].to_string(), g[1].to_string(), g[2].to_string(), table.parity_labels(i), fmt_f64(*p)],
        );
    }
    out.push(fin);

    if let Some(cells) = &report.cell_probabilities {
        let mut f = file("cells.csv", "cx,cy,cz,probability");
        for c in cells {
            push_row(
                &mut f,
                &[c.cell[0].to_string(), c.cell[1].to_string(), c.cell[2].to_string(), fmt_f64(c.probability)],
            );
        }
        out.push(f);
    }

    if let Some(traj) = &report.trajectory {
        let mut f = file("trajectory.csv", "step,site,probability");
        for (step, probs) in traj {
            for (i, p) in probs.iter().enumerate() {
                push_row(&mut f, &[step.to_string(), i.to_string(), fmt_f64(*p)]);
            }
        }
        out.push(f);
    }

    if let Some(edge) = &report.edge {
        if !edge.plane_series.is_empty() {
            let mut f = file("plane_fraction.csv", "step,fraction");
            for (s, x) in edge.plane_series.iter().enumerate() {
                push_row(&mut f, &[s.to_string(), fmt_f64(*x)]);
            }
            out.push(f);
        }
    }

    if let Some(ret) = &report.returns {
        let mut f = file("returns.csv", "site,class,overlap");
        for (i, o) in ret.overlaps.iter().enumerate() {
            let class = if ret.bulk.binary_search(&i).is_ok() { "bulk" } else { "boundary" };
            push_row(&mut f, &[i.to_string(), class.into(), fmt_f64(*o)]);
        }
        out.push(f);
    }

    if !report.dephasing.is_empty() {
        let mut msd = file("msd.csv", "p_s,step,gamma_t,msd");
        let mut anti = file("anti_diagonal.csv", "p_s,x,magnitude");
        let mut diag = file("distribution.csv", "p_s,site,probability");
        let mut fits =
            file("fits.csv", "p_s,ballistic_exponent,diffusive_exponent,quadratic_coefficient,coherence_length");
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        for (r_idx, run) in report.dephasing.iter().enumerate() {
            let ps = fmt_f64(run.p_s);
            for (s, (gt, x2)) in run.msd.iter().enumerate() {
                push_row(&mut msd, &[ps.clone(), s.to_string(), fmt_f64(*gt), fmt_f64(*x2)]);
            }
            for (x, v) in run.anti_diagonal.iter().enumerate() {
                push_row(&mut anti, &[ps.clone(), x.to_string(), fmt_f64(*v)]);
            }
            for (i, p) in run.final_diagonal.iter().enumerate() {
                push_row(&mut diag, &[ps.clone(), i.to_string(), fmt_f64(*p)]);
            }
            let coh = match run.coherence_length {
                Some(crate::decoherence::CoherenceLength::Finite(l)) => fmt_f64(l),
                Some(crate::decoherence::CoherenceLength::Unbounded) => "inf".into(),
                Some(crate::decoherence::CoherenceLength::Collapsed) => "0".into(),
                None => String::new(),
            };
            push_row(
                &mut fits,
                &[
                    ps.clone(),
                    opt(run.ballistic.map(|b| b.exponent)),
                    opt(run.diffusive.map(|b| b.exponent)),
                    opt(run.quadratic_coefficient),
                    coh,
                ],
            );
            if let Some(map) = &run.density_map {
                let n = run.final_diagonal.len();
                let mut f = CsvFile { name: format!("density_{r_idx}.csv"), body: String::new() };
                let _ = writeln!(f.body, "# |rho(x, x')| at p_s = {ps}, {n} rows");
                for row in map.chunks(n) {
                    push_row(&mut f, &row.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>());
                }
                out.push(f);
            }
        }
        out.extend([msd, anti, diag, fits]);
    }
    out
}
