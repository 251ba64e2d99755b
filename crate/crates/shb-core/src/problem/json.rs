//! JSON problem documents: graph + support + probabilities + growth bound
//! + declared lower bound + optional built-in Clarke-oracle tag.

use serde::{Deserialize, Serialize};

use super::{ClarkeOracle, Distribution, StochasticProblem};
use crate::error::{Error, Result};
use crate::graph::json::{graph_from_doc, graph_to_doc, GraphDoc};
use crate::graph::GrowthBound;
use crate::scalar::{cst, Scalar};

#[derive(Debug, Serialize, Deserialize)]
struct ProblemDoc {
    name: String,
    graph: GraphDoc,
    support: Vec<Vec<f64>>,
    probs: Vec<f64>,
    growth: GrowthDoc,
    f_star: f64,
    #[serde(default)]
    clarke_oracle: Option<ClarkeOracle>,
    probe_box: BoxDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct GrowthDoc {
    kappa: Vec<f64>,
    psi_coeffs: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BoxDoc {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn vecf<F: Scalar>(xs: &[f64]) -> Vec<F> {
    xs.iter().map(|&x| cst(x)).collect()
}

/// Parse a problem from its JSON document.
pub fn problem_from_json<F: Scalar>(text: &str) -> Result<StochasticProblem<F>> {
    let doc: ProblemDoc = serde_json::from_str(text)
        .map_err(|e| Error::Validation(format!("bad problem JSON: {e}")))?;
    let graph = graph_from_doc(&doc.graph)?;
    let dist = Distribution::new(
        doc.support.iter().map(|s| vecf(s)).collect(),
        vecf(&doc.probs),
    )?;
    let growth = GrowthBound::new(vecf(&doc.growth.kappa), vecf(&doc.growth.psi_coeffs))?;
    StochasticProblem::new(
        doc.name,
        graph,
        dist,
        growth,
        cst(doc.f_star),
        doc.clarke_oracle,
        (vecf(&doc.probe_box.lo), vecf(&doc.probe_box.hi)),
    )
}

/// Serialize a problem to its JSON document.
pub fn problem_to_json<F: Scalar>(problem: &StochasticProblem<F>) -> String {
    let to64 = |xs: &[F]| xs.iter().map(|x| x.to_report()).collect::<Vec<f64>>();
    let (lo, hi) = problem.probe_box();
    let doc = ProblemDoc {
        name: problem.name().to_string(),
        graph: graph_to_doc(problem.graph()),
        support: problem.distribution().support().iter().map(|s| to64(s)).collect(),
        probs: to64(problem.distribution().probs()),
        growth: GrowthDoc {
            kappa: to64(&problem.growth().kappa),
            psi_coeffs: to64(&problem.growth().psi_coeffs),
        },
        f_star: problem.f_star().to_report(),
        clarke_oracle: problem.clarke_oracle(),
        probe_box: BoxDoc { lo: to64(lo), hi: to64(hi) },
    };
    serde_json::to_string_pretty(&doc).expect("problem serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::catalog;

    #[test]
    fn catalog_problems_round_trip_through_json() {
        for name in catalog::NAMES {
            let p = catalog::by_name::<f64>(name).unwrap();
            let text = problem_to_json(&p);
            let q: StochasticProblem<f64> = problem_from_json(&text).unwrap();
            assert_eq!(q.name(), p.name());
            let w = vec![0.3; p.dim()];
            assert_eq!(q.expected_value(&w).unwrap(), p.expected_value(&w).unwrap());
            assert_eq!(q.clarke_oracle(), p.clarke_oracle());
        }
    }

    #[test]
    fn bad_documents_are_validation_errors() {
        assert!(matches!(
            problem_from_json::<f64>("{\"name\": 3}"),
            Err(Error::Validation(_))
        ));
    }
}
