use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{csv_bytes, write_csv};
use crate::ansatz::{
    count_resources, prepare_tfd_state, standard_closed_forms, AnsatzConfig, ParameterVector,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{Boundary, Hamiltonian};
use crate::metrics::trace_distance;

/// How the system layer count follows from `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerRule {
    NMinusOne,
    Fixed(usize),
}

impl LayerRule {
    pub fn layers(&self, n: usize) -> usize {
        match *self {
            LayerRule::NMinusOne => n.saturating_sub(1).max(1),
            LayerRule::Fixed(l) => l,
        }
    }
}

/// Counts for one configuration next to the simplified `l_A = 1`,
/// `l_S = n - 1` closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceRow {
    pub n: usize,
    pub layers_ancilla: usize,
    pub layers_system: usize,
    pub parameters: usize,
    pub cnot: usize,
    pub sqrt_x: usize,
    pub depth: usize,
    pub closed_parameters: usize,
    pub closed_cnot: usize,
    pub closed_sqrt_x: usize,
    pub closed_depth: usize,
    /// The general sqrt(X) count at `l_A = 1`, `l_S = n - 1` differs from
    /// the simplified closed form.
    pub sqrt_x_mismatch: bool,
}

pub fn report_resources(
    n_values: &[usize],
    layers_ancilla: usize,
    rule: LayerRule,
) -> Result<Vec<ResourceRow>> {
    n_values
        .iter()
        .map(|&n| {
            let config = AnsatzConfig {
                layers_ancilla,
                layers_system: rule.layers(n),
                ..AnsatzConfig::standard(n)
            };
            let count = count_resources(&config)?;
            let general = count_resources(&AnsatzConfig::standard(n))?;
            let closed = standard_closed_forms(n);
            Ok(ResourceRow {
                n,
                layers_ancilla,
                layers_system: config.layers_system,
                parameters: count.num_parameters,
                cnot: count.num_cnot,
                sqrt_x: count.num_sqrt_x,
                depth: count.circuit_depth,
                closed_parameters: closed.num_parameters,
                closed_cnot: closed.num_cnot,
                closed_sqrt_x: closed.num_sqrt_x,
                closed_depth: closed.circuit_depth,
                sqrt_x_mismatch: general.num_sqrt_x != closed.num_sqrt_x,
            })
        })
        .collect()
}

pub fn resources_csv(rows: &[ResourceRow]) -> Result<String> {
    String::from_utf8(csv_bytes(rows)?).map_err(|e| Error::Resource(e.to_string()))
}

pub fn write_resources_csv(path: &Path, rows: &[ResourceRow]) -> Result<()> {
    write_csv(path, rows)
}

/// Oracle quantities of one Gibbs state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsReport {
    pub n: usize,
    pub h: f64,
    pub boundary: Boundary,
    pub beta: f64,
    pub energies: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub log_partition_function: f64,
    pub free_energy: f64,
    pub entropy: f64,
    /// Row-major real and imaginary parts of the density matrix.
    pub state_re: Vec<Vec<f64>>,
    pub state_im: Vec<Vec<f64>>,
}

pub fn exact_gibbs_report(n: usize, h: f64, boundary: Boundary, beta: f64) -> Result<GibbsReport> {
    let spectrum = Hamiltonian::ising(n, h, boundary)?.diagonalize()?;
    let oracle = spectrum.oracle(beta)?;
    let rho = oracle.state()?;
    let m = rho.elements();
    let probabilities = oracle.probabilities.clone();
    let entropy = probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok(GibbsReport {
        n,
        h,
        boundary,
        beta,
        free_energy: oracle.free_energy()?,
        log_partition_function: oracle.log_partition_function,
        energies: spectrum.energies.clone(),
        probabilities,
        entropy,
        state_re: (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| m[(r, c)].re).collect())
            .collect(),
        state_im: (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| m[(r, c)].im).collect())
            .collect(),
    })
}

/// A prepared thermofield double on `2n` qubits (ancillas first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfdReport {
    pub n: usize,
    pub amplitudes_re: Vec<f64>,
    pub amplitudes_im: Vec<f64>,
    /// Trace distance between the two reduced registers.
    pub marginal_trace_distance: f64,
}

pub fn tfd_report(config: &AnsatzConfig, flat: &[f64]) -> Result<TfdReport> {
    if flat.len() != config.num_params() {
        return Err(Error::arg(format!(
            "expected {} parameters, got {}",
            config.num_params(),
            flat.len()
        )));
    }
    let params = ParameterVector::from_flat(config, flat)?;
    let state = prepare_tfd_state(config, &params)?;
    let n = config.n;
    let anc = state.partial_trace(&(0..n).collect::<Vec<_>>())?;
    let sys = state.partial_trace(&(n..2 * n).collect::<Vec<_>>())?;
    Ok(TfdReport {
        n,
        amplitudes_re: state.amplitudes().iter().map(|a| a.re).collect(),
        amplitudes_im: state.amplitudes().iter().map(|a| a.im).collect(),
        marginal_trace_distance: trace_distance(&anc, &sys)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resource_rows() {
        let rows = report_resources(&[3, 4, 6], 1, LayerRule::NMinusOne).unwrap();
        assert_eq!(
            (rows[1].parameters, rows[1].cnot, rows[1].depth),
            (32, 31, 44)
        );
        assert_eq!(rows[0].depth, 43);
        assert_eq!(rows[2].parameters, 72);
        assert!(rows.iter().all(|r| r.sqrt_x_mismatch));
        assert!(rows
            .iter()
            .all(|r| r.parameters == r.closed_parameters && r.cnot == r.closed_cnot));
        assert!(report_resources(&[2], 1, LayerRule::NMinusOne).is_err());
    }

    #[test]
    fn gibbs_report_is_consistent() {
        let r = exact_gibbs_report(2, 0.0, Boundary::Open, 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!((r.log_partition_function - (2.0 * e + 2.0 / e).ln()).abs() < 1e-12);
        let trace: f64 = (0..4).map(|i| r.state_re[i][i]).sum();
        assert!((trace - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tfd_marginals_match() {
        let config = AnsatzConfig::standard(2);
        let flat: Vec<f64> = (0..config.num_params())
            .map(|k| 0.3 * k as f64 - 1.0)
            .collect();
        let r = tfd_report(&config, &flat).unwrap();
        assert!(r.marginal_trace_distance < 1e-10);
        assert!(tfd_report(&config, &flat[1..]).is_err());
    }
}
