//! CSV writers. Floats use 17 significant digits so values round-trip.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dic_core::hjbqvi::TcSolution;
use dic_core::no_tc::LoadingSweepRow;
use dic_core::sim::{PathOutcome, SimResult};

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Accumulates a CSV file in memory; `save` writes it in one go.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Self {
            text: format!("{header}\n"),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn floats(&mut self, values: &[f64]) {
        self.row(&values.iter().map(|&x| float(x)).collect::<Vec<_>>());
    }

    pub fn save(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, &self.text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn loading_sweep(rows: &[LoadingSweepRow]) -> Csv {
    let mut csv = Csv::new("phi,alpha_c,alpha_pi1,alpha_k,alpha_q,alpha_v,objective");
    for r in rows {
        csv.floats(&[r.phi, r.alpha_c, r.alpha_pi1, r.alpha_k, r.alpha_q, r.alpha_v, r.objective]);
    }
    csv
}

pub fn tc_values(sol: &TcSolution) -> Csv {
    let mut csv = Csv::new("z,v,Mv,excess,c_hat,pi1_hat,q_hat,trade_flag");
    let excess = sol.excess();
    let pol = &sol.policy;
    for (i, &z) in sol.grid.nodes.iter().enumerate() {
        let mut fields: Vec<String> = [
            z,
            sol.value[i],
            sol.intervention.values[i],
            excess[i],
            pol.c_hat[i],
            pol.pi1_hat[i],
            pol.q_hat[i],
        ]
        .iter()
        .map(|&x| float(x))
        .collect();
        fields.push(u8::from(pol.trade_flag[i]).to_string());
        csv.row(&fields);
    }
    csv
}

pub fn tc_summary<'a>(sols: impl IntoIterator<Item = &'a TcSolution>) -> Csv {
    let mut csv = Csv::new("phi,z_low,z_high,z_star,M,outer_iters");
    for sol in sols {
        let b = &sol.bands;
        let mut fields: Vec<String> = [sol.params.phi, b.z_low, b.z_high, b.z_star, b.m]
            .iter()
            .map(|&x| float(x))
            .collect();
        fields.push(sol.outer_iterations().to_string());
        csv.row(&fields);
    }
    csv
}

pub fn tc_trace(sol: &TcSolution) -> Csv {
    let mut csv = Csv::new("iter,delta_v_inf,M");
    for t in &sol.trace {
        csv.row(&[t.iter.to_string(), float(t.delta_v_inf), float(t.m)]);
    }
    csv
}

pub fn simulation(res: &SimResult) -> Csv {
    let mut csv = Csv::new("mean,stderr,truncation_bound,n_paths,dt,T,solvency_violations");
    csv.row(&[
        float(res.mean),
        float(res.stderr),
        float(res.truncation_bound),
        res.n_paths.to_string(),
        float(res.dt),
        float(res.horizon),
        res.solvency_violations.to_string(),
    ]);
    csv
}

pub fn path_dump(outcomes: &[PathOutcome]) -> Csv {
    let mut csv = Csv::new("path,utility,insolvent,t,x,p,k,s,n1,n2");
    for (i, o) in outcomes.iter().enumerate() {
        let s = &o.terminal;
        let mut fields = vec![i.to_string(), float(o.utility), u8::from(o.insolvent).to_string()];
        fields.extend([s.t, s.x, s.p, s.k, s.s()].iter().map(|&x| float(x)));
        fields.push(s.n1.to_string());
        fields.push(s.n2.to_string());
        csv.row(&fields);
    }
    csv
}

/// File-name fragment for a loading factor, e.g. `phi1.2`.
pub fn phi_tag(phi: f64) -> String {
    format!("phi{phi}")
}
