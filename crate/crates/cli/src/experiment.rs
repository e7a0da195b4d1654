//! Fixed-base versus floating-base identification of a leg.

use std::fmt::Write as _;
use std::path::Path;

use rpna::identify::{Base, ExperimentCell, LegExperiment};
use rpna::model::{cheetah_hip_mount, cheetah_trunk_params, BaseKind, Model};
use rpna::{Error, Result};
use serde::Serialize;

const GROUPS: [(&str, &str); 3] = [
    ("leg torques", "leg torques [Nm]"),
    ("body torques", "body torques [Nm]"),
    ("body forces", "body forces [N]"),
];

#[derive(Serialize)]
pub struct Outcome {
    pub model: String,
    pub samples: usize,
    pub seed: u64,
    pub cells: Vec<ExperimentCell>,
}

pub fn run(
    leg: Model,
    identify_on: Option<Base>,
    validate_on: Option<Base>,
    samples: usize,
    seed: u64,
    save_data: Option<&Path>,
) -> Result<Outcome> {
    if leg.base != BaseKind::Fixed {
        return Err(Error::Model(format!(
            "'{}' must have a fixed base; it is mounted on a trunk here",
            leg.name
        )));
    }
    let mut floating =
        leg.mounted_on_floating_base("trunk", Some(cheetah_trunk_params()), cheetah_hip_mount())?;
    floating.name = format!("{}_on_trunk", leg.name);
    let name = leg.name.clone();
    let exp = LegExperiment::new(leg, floating, samples, seed)?;
    if let Some(dir) = save_data {
        std::fs::create_dir_all(dir)?;
        exp.fixed_data.save_json(dir.join("fixed.json"))?;
        exp.floating_data.save_json(dir.join("floating.json"))?;
    }
    let both = [Base::Fixed, Base::Floating];
    let ids: Vec<Base> = identify_on.map_or(both.to_vec(), |b| vec![b]);
    let vals: Vec<Base> = validate_on.map_or(both.to_vec(), |b| vec![b]);
    let mut cells = Vec::new();
    for &id in &ids {
        for &val in &vals {
            cells.push(exp.run(id, val)?);
        }
    }
    Ok(Outcome {
        model: name,
        samples,
        seed,
        cells,
    })
}

fn channels(v: Option<&[f64]>) -> String {
    match v {
        None => "-".into(),
        Some(v) => {
            let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
            format!("[{}]", parts.join(", "))
        }
    }
}

impl Outcome {
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "model: {}  samples: {}  seed: {}",
            self.model, self.samples, self.seed
        );
        s.push_str("RMS validation residuals\n\n");
        let rows: Vec<Vec<String>> = self
            .cells
            .iter()
            .map(|c| {
                let mut r = vec![
                    c.identified_on.to_string(),
                    c.validated_on.to_string(),
                    c.rank.to_string(),
                    format!("{:.1e}", c.train_rms),
                ];
                r.extend(GROUPS.iter().map(|(g, _)| channels(c.residuals.group(g))));
                r
            })
            .collect();
        let mut header = vec!["identified", "validated", "rank", "train RMS"];
        header.extend(GROUPS.iter().map(|(_, h)| *h));
        let widths: Vec<usize> = (0..header.len())
            .map(|i| {
                rows.iter()
                    .map(|r| r[i].len())
                    .chain([header[i].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: Vec<&str>| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            padded.join("  ").trim_end().to_string()
        };
        let _ = writeln!(s, "{}", line(header));
        for r in &rows {
            let _ = writeln!(s, "{}", line(r.iter().map(String::as_str).collect()));
        }
        s
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("outcome serializes");
        s.push('\n');
        s
    }
}
