//! Discrete Bayesian networks and exact inference.

mod evidence;
mod factor;
mod inference;
mod network;

pub use evidence::Evidence;
pub(crate) use inference::entropy_bits;
pub use inference::{d_separated, posterior, posteriors, probability_of_evidence, prune_barren, Posterior};
pub use network::{build_network, ConditionalTable, Network, Variable, VariableKind, ROW_SUM_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BnError {
    #[error("graph contains a cycle through `{0}`")]
    CyclicGraph(String),
    #[error("no conditional table for `{0}`")]
    MissingTable(String),
    #[error("malformed table for `{variable}`: {reason}")]
    MalformedTable { variable: String, reason: String },
    #[error("invalid variable `{variable}`: {reason}")]
    InvalidVariable { variable: String, reason: String },
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{variable}` has no state `{state}`")]
    UnknownState { variable: String, state: String },
    #[error("invalid evidence on `{variable}`: {reason}")]
    InvalidEvidence { variable: String, reason: String },
    #[error("evidence has probability zero")]
    ImpossibleEvidence,
}


#[cfg(test)]
mod tests {
    use super::fixtures::net_a;
    use super::*;

    fn present(net: &Network, q: &str, ev: &Evidence) -> f64 {
        posterior(net, q, ev).unwrap().probability("present").unwrap()
    }

    #[test]
    fn net_a_structure() {
        let net = net_a();
        assert_eq!(net.len(), 4);
        let mut edges = net.edges();
        edges.sort();
        assert_eq!(edges, vec![("M", "H"), ("PI", "R")]);
    }

    #[test]
    fn net_a_posteriors() {
        let net = net_a();
        let ev = Evidence::new().observe("R", "present");
        assert!((present(&net, "PI", &ev) - 0.018 / 0.067).abs() < 1e-12);
        assert!((present(&net, "M", &ev) - 0.05).abs() < 1e-12);
        assert!((present(&net, "H", &Evidence::new()) - 0.135).abs() < 1e-12);
    }

    #[test]
    fn probability_of_evidence_examples() {
        let net = net_a();
        let p = probability_of_evidence(&net, &Evidence::new().observe("R", "present")).unwrap();
        assert!((p - 0.067).abs() < 1e-12);
        assert_eq!(probability_of_evidence(&net, &Evidence::new()).unwrap(), 1.0);
        let flat = Evidence::new().likelihood("H", vec![1.0, 1.0]);
        assert!((probability_of_evidence(&net, &flat).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn barren_pruning_examples() {
        let net = net_a();
        let pruned = prune_barren(&net, &["PI"], &Evidence::new()).unwrap();
        assert_eq!(pruned.len(), 1);
        assert_eq!(
            posterior(&pruned, "PI", &Evidence::new()).unwrap(),
            posterior(&net, "PI", &Evidence::new()).unwrap()
        );

        let ev = Evidence::new().observe("R", "present");
        let pruned = prune_barren(&net, &["PI", "M"], &ev).unwrap();
        assert!(!pruned.contains("H"));
        assert!((present(&pruned, "PI", &ev) - present(&net, "PI", &ev)).abs() < 1e-15);
        assert_eq!(
            prune_barren(&net, &["X"], &ev).unwrap_err(),
            BnError::UnknownVariable("X".into())
        );
    }

    #[test]
    fn impossible_and_unknown() {
        let net = net_a();
        let tables: Vec<_> = net
            .tables()
            .iter()
            .cloned()
            .map(|mut t| {
                if t.child == "R" {
                    t.entries = vec![1.0, 0.0, 0.1, 0.9];
                }
                t
            })
            .collect();
        let net = net.with_replaced_tables(tables).unwrap();
        let ev = Evidence::new().observe("R", "present").observe("PI", "absent");
        assert_eq!(posterior(&net, "M", &ev).unwrap_err(), BnError::ImpossibleEvidence);
        assert_eq!(probability_of_evidence(&net, &ev).unwrap(), 0.0);
        assert!(matches!(
            posterior(&net, "Q", &Evidence::new()),
            Err(BnError::UnknownVariable(_))
        ));
        assert!(matches!(
            posterior(&net, "PI", &Evidence::new().observe("R", "bogus")),
            Err(BnError::UnknownState { .. })
        ));
    }

    #[test]
    fn observed_query_is_one_hot() {
        let net = net_a();
        let p = posterior(&net, "R", &Evidence::new().observe("R", "present")).unwrap();
        assert_eq!(p.probabilities, vec![0.0, 1.0]);
    }

    #[test]
    fn virtual_evidence_validation() {
        let net = net_a();
        for bad in [vec![0.0, 0.0], vec![1.0], vec![-1.0, 1.0], vec![f64::NAN, 1.0]] {
            let ev = Evidence::new().likelihood("H", bad);
            assert!(matches!(
                posterior(&net, "M", &ev),
                Err(BnError::InvalidEvidence { .. })
            ));
        }
    }

    #[test]
    fn d_separation_on_net_a() {
        let net = net_a();
        let none = Evidence::new();
        assert!(d_separated(&net, "H", &["PI"], &none).unwrap());
        assert!(!d_separated(&net, "H", &["M"], &none).unwrap());
        assert!(d_separated(&net, "H", &["M"], &Evidence::new().observe("H", "present")).unwrap());
    }

    #[test]
    fn d_separation_collider() {
        // A -> C <- B, C -> D
        let vars = ["A", "B", "C", "D"]
            .map(|v| Variable::binary(v, VariableKind::Other))
            .to_vec();
        let tables = vec![
            ConditionalTable::prior("A", vec![0.5, 0.5]),
            ConditionalTable::prior("B", vec![0.5, 0.5]),
            ConditionalTable::new(
                "C",
                vec!["A".into(), "B".into()],
                vec![0.9, 0.1, 0.5, 0.5, 0.5, 0.5, 0.1, 0.9],
            ),
            ConditionalTable::new("D", vec!["C".into()], vec![0.7, 0.3, 0.2, 0.8]),
        ];
        let net = build_network(vars, tables).unwrap();
        assert!(d_separated(&net, "A", &["B"], &Evidence::new()).unwrap());
        assert!(!d_separated(&net, "A", &["B"], &Evidence::new().observe("D", "present")).unwrap());
        assert!(!d_separated(&net, "A", &["B"], &Evidence::new().likelihood("D", vec![0.2, 1.0])).unwrap());
        assert!(d_separated(&net, "D", &["A", "B"], &Evidence::new().observe("C", "absent")).unwrap());
    }
}
