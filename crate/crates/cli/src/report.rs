//! Classification grid and per-joint dimensions of one analysis.

use std::fmt::Write as _;

use rpna::nullspace::{analyze, Classification, SystemNullspace};
use rpna::spatial::PARAM_NAMES;
use rpna::{JointAnalysis, Model, Result, RpnaOptions};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    /// Identifiable on its own.
    Identifiable,
    /// Only identifiable in combination; chosen for the minimal set.
    Minimal,
    /// Only identifiable in combination with minimal-set parameters.
    Combination,
    Unidentifiable,
}

impl Mark {
    pub fn glyph(self, ascii: bool) -> &'static str {
        match (self, ascii) {
            (Mark::Identifiable, false) => "✓",
            (Mark::Minimal, false) => "★",
            (Mark::Combination, false) => "·",
            (Mark::Unidentifiable, false) => "✗",
            (Mark::Identifiable, true) => "Y",
            (Mark::Minimal, true) => "*",
            (Mark::Combination, true) => ".",
            (Mark::Unidentifiable, true) => "N",
        }
    }

    fn of(ns: &SystemNullspace, col: usize) -> Mark {
        match ns.classes[col] {
            Classification::Identifiable => Mark::Identifiable,
            Classification::Unidentifiable => Mark::Unidentifiable,
            Classification::CombinationOnly if ns.is_pivot(col) => Mark::Minimal,
            Classification::CombinationOnly => Mark::Combination,
        }
    }
}

/// A dimension, with the value under gravity in parentheses when the
/// report was made with gravity on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dim {
    pub value: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub with_gravity: Option<usize>,
}

impl std::fmt::Display for Dim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.with_gravity {
            Some(g) => write!(f, "{} ({g})", self.value),
            None => write!(f, "{}", self.value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyRow {
    pub name: String,
    pub params: Vec<Mark>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotor: Option<Mark>,
    pub dim_v: Dim,
    pub dim_k: Dim,
    pub dim_t: Dim,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub model: String,
    pub options: RpnaOptions,
    pub param_count: usize,
    pub nullity: usize,
    pub base_param_count: usize,
    pub bodies: Vec<BodyRow>,
    pub regroupings: Vec<String>,
}

fn dim(
    f: impl Fn(&JointAnalysis) -> usize,
    main: &JointAnalysis,
    plain: Option<&JointAnalysis>,
) -> Dim {
    match plain {
        Some(p) => Dim {
            value: f(p),
            with_gravity: Some(f(main)),
        },
        None => Dim {
            value: f(main),
            with_gravity: None,
        },
    }
}

impl Report {
    pub fn build(model: &Model, opts: &RpnaOptions) -> Result<Report> {
        opts.validate()?;
        let (main, ns) = analyze(model, opts)?;
        // dims without gravity are shown next to the gravity values
        let plain = if opts.gravity && !opts.static_only {
            Some(
                analyze(
                    model,
                    &RpnaOptions {
                        gravity: false,
                        ..*opts
                    },
                )?
                .0,
            )
        } else {
            None
        };
        let bodies = main
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let p = plain.as_ref().map(|v| &v[i]);
                let rotor = ns
                    .rotor_bodies
                    .iter()
                    .position(|&b| b == a.body)
                    .map(|k| Mark::of(&ns, 10 * ns.n_bodies + k));
                BodyRow {
                    name: model.bodies[a.body].name.clone(),
                    params: (0..10).map(|j| Mark::of(&ns, 10 * a.body + j)).collect(),
                    rotor,
                    dim_v: dim(JointAnalysis::dim_v, a, p),
                    dim_k: dim(JointAnalysis::dim_k, a, p),
                    dim_t: dim(|x| x.transfer_dim, a, p),
                }
            })
            .collect();
        let regroupings = ns
            .regroupings
            .iter()
            .filter(|g| g.terms.len() > 1)
            .map(|g| ns.render_regrouping(g))
            .collect();
        Ok(Report {
            model: model.name.clone(),
            options: *opts,
            param_count: ns.param_count,
            nullity: ns.nullity,
            base_param_count: ns.base_param_count(),
            bodies,
            regroupings,
        })
    }

    fn count(&self, m: Mark) -> usize {
        self.bodies
            .iter()
            .flat_map(|b| b.params.iter().chain(b.rotor.iter()))
            .filter(|&&x| x == m)
            .count()
    }

    pub fn render_table(&self, ascii: bool) -> String {
        let o = &self.options;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "model: {}  (gravity {}, {}, rotors {})",
            self.model,
            if o.gravity { "on" } else { "off" },
            if o.static_only { "static" } else { "dynamic" },
            if o.include_rotors { "on" } else { "off" },
        );
        s.push('\n');

        let with_rotor = self.bodies.iter().any(|b| b.rotor.is_some());
        let name_w = self
            .bodies
            .iter()
            .map(|b| b.name.chars().count())
            .max()
            .unwrap_or(0)
            .max(4);
        let dims: Vec<[String; 3]> = self
            .bodies
            .iter()
            .map(|b| {
                [
                    b.dim_v.to_string(),
                    b.dim_k.to_string(),
                    b.dim_t.to_string(),
                ]
            })
            .collect();
        let dim_w = dims
            .iter()
            .flatten()
            .map(|d| d.len())
            .max()
            .unwrap_or(0)
            .max(5);

        let _ = write!(s, "{:<name_w$}", "body");
        for n in PARAM_NAMES {
            let _ = write!(s, " {n:>4}");
        }
        if with_rotor {
            let _ = write!(s, " {:>4}", "J_m");
        }
        for h in ["dim V", "dim K", "dim T"] {
            let _ = write!(s, "  {h:>dim_w$}");
        }
        s.push('\n');

        for (b, d) in self.bodies.iter().zip(&dims) {
            let _ = write!(s, "{:<name_w$}", b.name);
            for m in &b.params {
                let _ = write!(s, " {:>4}", m.glyph(ascii));
            }
            if with_rotor {
                let _ = write!(s, " {:>4}", b.rotor.map_or("-", |m| m.glyph(ascii)));
            }
            for x in d {
                let _ = write!(s, "  {x:>dim_w$}");
            }
            s.push('\n');
        }
        s.push('\n');

        let _ = writeln!(
            s,
            "base parameters: {} of {} (nullity {})",
            self.base_param_count, self.param_count, self.nullity
        );
        let _ = writeln!(
            s,
            "{} identifiable, {} minimal, {} in combinations, {} unidentifiable",
            self.count(Mark::Identifiable),
            self.count(Mark::Minimal),
            self.count(Mark::Combination),
            self.count(Mark::Unidentifiable)
        );
        if !self.regroupings.is_empty() {
            s.push_str("\nidentifiable combinations:\n");
            for g in &self.regroupings {
                let _ = writeln!(s, "  {g}");
            }
        }
        s
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rpna::model::builtin;

    fn report(name: &str, opts: RpnaOptions) -> Report {
        Report::build(&builtin(name).unwrap(), &opts).unwrap()
    }

    #[test]
    fn marks_agree_with_base_count() {
        for name in rpna::model::BUILTIN_NAMES {
            for rotors in [false, true] {
                let r = report(
                    name,
                    RpnaOptions {
                        include_rotors: rotors,
                        ..Default::default()
                    },
                );
                let kept = r.count(Mark::Identifiable) + r.count(Mark::Minimal);
                assert_eq!(kept, r.base_param_count, "{name}");
                let rest = r.count(Mark::Combination) + r.count(Mark::Unidentifiable);
                assert_eq!(kept + rest, r.param_count, "{name}");
            }
        }
    }

    #[test]
    fn puma_transfer_dims() {
        let r = report(
            "puma560",
            RpnaOptions {
                include_rotors: false,
                ..Default::default()
            },
        );
        let t: Vec<usize> = r
            .bodies
            .iter()
            .map(|b| b.dim_t.with_gravity.unwrap())
            .collect();
        assert_eq!(t, [9, 3, 3, 3, 3, 3]);
        assert_eq!(r.base_param_count, 36);
    }

    #[test]
    fn puma_second_body_marks() {
        use Mark::*;
        let r = report(
            "puma560",
            RpnaOptions {
                include_rotors: false,
                ..Default::default()
            },
        );
        // m h_x h_y h_z I_xx I_xy I_xz I_yy I_yz I_zz
        let want = [
            Unidentifiable,
            Minimal,
            Identifiable,
            Unidentifiable,
            Minimal,
            Identifiable,
            Minimal,
            Combination,
            Identifiable,
            Minimal,
        ];
        assert_eq!(r.bodies[1].params, want);
    }

    #[test]
    fn dims_without_gravity_have_no_parentheses() {
        let opts = RpnaOptions {
            gravity: false,
            include_rotors: false,
            ..Default::default()
        };
        let r = report("scara", opts);
        assert!(r.bodies.iter().all(|b| b.dim_v.with_gravity.is_none()));
        assert_eq!(r.bodies[0].dim_v.to_string(), "1");
        let r = report(
            "scara",
            RpnaOptions {
                include_rotors: false,
                ..Default::default()
            },
        );
        assert_eq!(r.bodies[0].dim_v.to_string(), "1 (2)");
    }

    #[test]
    fn ascii_table_has_no_unicode() {
        let r = report("cheetah3_leg_fixed", RpnaOptions::default());
        let t = r.render_table(true);
        assert!(t.is_ascii());
        assert!(t.contains("J_m"));
        assert!(r.render_table(false).contains('★'));
    }

    #[test]
    fn json_round_trip_renders_identically() {
        let r = report("puma560", RpnaOptions::default());
        let back: Report = serde_json::from_str(&r.render_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.render_table(false), r.render_table(false));
    }
}
