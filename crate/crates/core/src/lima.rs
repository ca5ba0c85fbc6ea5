//! LIMA numbers (ingredient counts) and the LIMA dominance relation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LimaProfile {
    pub algorithm: &'static str,
    pub aliases: &'static [&'static str],
    pub input_parameters: &'static [&'static str],
    pub ingredients: &'static [&'static str],
}

impl LimaProfile {
    pub fn lima_number(&self) -> usize {
        self.ingredients.len()
    }
}

pub const PROFILES: [LimaProfile; 8] = [
    LimaProfile {
        algorithm: "BDCSM",
        aliases: &["bdcsm"],
        input_parameters: &["p"],
        ingredients: &["partitioning", "clustering", "centroid pooling", "final clustering", "final assignment"],
    },
    LimaProfile {
        algorithm: "Big-means",
        aliases: &["bigmeans", "big-means", "big_means"],
        input_parameters: &["s", "T"],
        ingredients: &[
            "random sampling",
            "conditional reinitialization",
            "centroid update",
            "condition checking and updating",
            "iteration",
            "final assignment",
        ],
    },
    LimaProfile {
        algorithm: "Minibatch K-means",
        aliases: &["minibatch", "mini-batch", "minibatch-kmeans"],
        input_parameters: &["T", "batch_size"],
        ingredients: &[
            "initialization",
            "random sampling",
            "assignment",
            "centroid update",
            "iteration",
            "final assignment",
        ],
    },
    LimaProfile {
        algorithm: "K-means++",
        aliases: &["kmeans++", "kmeanspp", "k-means++"],
        input_parameters: &["T"],
        ingredients: &[
            "random selection",
            "distance calculation",
            "probabilistic selection",
            "iteration",
            "cluster assignment",
            "centroid update",
        ],
    },
    LimaProfile {
        algorithm: "CURE",
        aliases: &["cure"],
        input_parameters: &["s", "f", "k", "q", "c", "alpha"],
        ingredients: &[
            "random sampling",
            "partitioning",
            "hierarchical clustering",
            "representative selection",
            "geometric transformation",
            "iteration",
            "cluster assignment",
        ],
    },
    LimaProfile {
        algorithm: "CluDataSE",
        aliases: &["cludatase"],
        input_parameters: &["s", "eps", "min_pts"],
        ingredients: &[
            "random sampling",
            "density-based clustering",
            "cluster center reduction",
            "k-means clustering",
            "iteration",
            "parameter adjustment",
            "cluster assignment",
        ],
    },
    LimaProfile {
        algorithm: "LW-Coreset",
        aliases: &["lw-coreset", "lwcoreset", "lw_coreset", "coreset"],
        input_parameters: &["s"],
        ingredients: &[
            "mean calculation",
            "distance computation",
            "probability computation",
            "sampling",
            "centroid initialization",
            "centroid update",
            "assignment",
        ],
    },
    LimaProfile {
        algorithm: "IK-means",
        aliases: &["ikmeans", "ik-means", "ik_means"],
        input_parameters: &[],
        ingredients: &[
            "initialization",
            "distance computation",
            "exclusion check",
            "assignment",
            "centroid reinitialization",
            "centroid update",
            "radius update",
            "convergence check",
        ],
    },
];

/// Case-insensitive lookup by display name or alias.
pub fn profile(name: &str) -> Result<&'static LimaProfile> {
    let key = name.trim().to_ascii_lowercase();
    PROFILES
        .iter()
        .find(|p| p.algorithm.to_ascii_lowercase() == key || p.aliases.contains(&key.as_str()))
        .ok_or_else(|| Error::NotFound(format!("no LIMA profile for algorithm {name:?}")))
}

pub fn lima_number(name: &str) -> Result<usize> {
    profile(name).map(LimaProfile::lima_number)
}

/// `A(accuracy, time, LIMA number)`; accuracy is an error measure, lower is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoScore {
    pub accuracy: f64,
    pub time: f64,
    pub lima_number: usize,
}

impl AlgoScore {
    pub fn new(accuracy: f64, time: f64, lima_number: usize) -> Self {
        Self { accuracy, time, lima_number }
    }
}

/// True iff `b` is no worse than `a` on accuracy, time and LIMA number and
/// strictly better on at least one.
///
/// `time_rel_tol` treats `b`'s time as no worse when `t_b <= t_a * (1 + tol)`;
/// with a positive tolerance the relation is no longer transitive.
pub fn dominates(b: &AlgoScore, a: &AlgoScore, time_rel_tol: f64) -> bool {
    let acc = b.accuracy <= a.accuracy;
    let time = b.time <= a.time * (1.0 + time_rel_tol.max(0.0));
    let simple = b.lima_number <= a.lima_number;
    let strict = b.accuracy < a.accuracy || b.time < a.time || b.lima_number < a.lima_number;
    acc && time && simple && strict
}

/// `matrix[i][j]` is whether `scores[i]` dominates `scores[j]`.
pub fn dominance_matrix(scores: &[AlgoScore], time_rel_tol: f64) -> Vec<Vec<bool>> {
    scores.iter().map(|b| scores.iter().map(|a| dominates(b, a, time_rel_tol)).collect()).collect()
}

/// Markdown rendering of [`dominance_matrix`]; row dominates column.
pub fn dominance_markdown(names: &[String], scores: &[AlgoScore], time_rel_tol: f64) -> String {
    let m = dominance_matrix(scores, time_rel_tol);
    let mut out = String::from("| dominates → |");
    for n in names {
        out.push_str(&format!(" {n} |"));
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(names.len()));
    out.push('\n');
    for (i, n) in names.iter().enumerate() {
        let s = &scores[i];
        out.push_str(&format!("| {n} ({:.2}, {:.2}, {}) |", s.accuracy, s.time, s.lima_number));
        for cell in &m[i] {
            out.push_str(if *cell { " ✔ |" } else { "  |" });
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let expect = [
            ("BDCSM", 5, 1),
            ("Big-means", 6, 2),
            ("Minibatch K-means", 6, 2),
            ("K-means++", 6, 1),
            ("CURE", 7, 6),
            ("CluDataSE", 7, 3),
            ("LW-Coreset", 7, 1),
            ("IK-means", 8, 0),
        ];
        for (name, lima, params) in expect {
            let p = profile(name).unwrap();
            assert_eq!(p.lima_number(), lima, "{name}");
            assert_eq!(p.input_parameters.len(), params, "{name}");
        }
        assert_eq!(lima_number("bigmeans").unwrap(), 6);
        assert_eq!(lima_number("KMEANS++").unwrap(), 6);
        assert!(matches!(lima_number("spectral"), Err(Error::NotFound(_))));
    }

    #[test]
    fn dominance_examples() {
        let big = AlgoScore::new(0.6, 4.13, 6);
        let kpp = AlgoScore::new(4.15, 72.51, 6);
        let lw = AlgoScore::new(39.39, 3.92, 7);
        assert!(dominates(&big, &kpp, 0.0));
        assert!(!dominates(&big, &lw, 0.0));
        assert!(dominates(&big, &lw, 0.06));
        assert!(!dominates(&big, &big, 0.0));
        assert!(!dominates(&AlgoScore::new(1.0, 1.0, 6), &AlgoScore::new(0.5, 2.0, 6), 0.0));
    }

    #[test]
    fn markdown_marks_cells() {
        let names = vec!["A".to_string(), "B".to_string()];
        let md = dominance_markdown(&names, &[AlgoScore::new(1.0, 1.0, 5), AlgoScore::new(2.0, 2.0, 6)], 0.0);
        assert!(md.lines().nth(2).unwrap().contains('✔'));
        assert!(!md.lines().nth(3).unwrap().contains('✔'));
    }
}
