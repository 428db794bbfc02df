//! The two-register circuit: a linearly entangled R_Y/CNOT ansatz on the
//! ancillas, transversal CNOTs copying basis labels onto the system, and a
//! brick-wall of parity-preserving R_P gates on the system.
//!
//! Parameter layout (stable, used by the JSON files): `theta` column by
//! column with qubits ascending, then `phi` layer by layer, even sublayer
//! before odd, pairs ascending, each R_P contributing `(phi_i, phi_j)`
//! adjacently. The ring-closing pair `(n-1, 0)` is the last slot of the odd
//! sublayer; it keeps its two slots even when the gate is dropped.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hamiltonian::Boundary;
use crate::statevector::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzConfig {
    /// Qubits per register.
    pub n: usize,
    pub layers_ancilla: usize,
    pub layers_system: usize,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub drop_nonadjacent_rp: bool,
}

/// One gate of the parameterized circuit; parameter fields index the flat
/// `theta ++ phi` vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Ry {
        qubit: usize,
        param: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Rp {
        q1: usize,
        q2: usize,
        param_i: usize,
        param_j: usize,
    },
}

impl Op {
    pub fn apply(&self, state: &mut StateVector, params: &[f64]) -> Result<()> {
        match *self {
            Op::Ry { qubit, param } => state.apply_ry(qubit, params[param]),
            Op::Cnot { control, target } => state.apply_cnot(control, target),
            Op::Rp {
                q1,
                q2,
                param_i,
                param_j,
            } => state.apply_rp(q1, q2, params[param_i], params[param_j]),
        }
    }
}

impl AnsatzConfig {
    /// One ancilla layer and `n - 1` system layers on a closed ring.
    pub fn standard(n: usize) -> Self {
        Self {
            n,
            layers_ancilla: 1,
            layers_system: n.saturating_sub(1).max(1),
            boundary: Boundary::Periodic,
            drop_nonadjacent_rp: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::arg("register size n must be >= 1"));
        }
        if self.layers_ancilla == 0 || self.layers_system == 0 {
            return Err(Error::arg("ancilla and system layer counts must be >= 1"));
        }
        Ok(())
    }

    pub fn num_theta(&self) -> usize {
        self.n * (self.layers_ancilla + 1)
    }

    pub fn num_phi(&self) -> usize {
        2 * self.n * self.layers_system
    }

    pub fn num_params(&self) -> usize {
        self.num_theta() + self.num_phi()
    }

    pub fn total_qubits(&self) -> usize {
        2 * self.n
    }

    /// Whether the `(n-1, 0)` gate is applied. For `n = 2` that pair is
    /// nearest-neighbour and always kept.
    pub fn ring_closed(&self) -> bool {
        match self.n {
            0 | 1 => false,
            2 => true,
            _ => self.boundary == Boundary::Periodic && !self.drop_nonadjacent_rp,
        }
    }

    /// R_P slots of one system layer in application order, as register-local
    /// qubit pairs. `None` marks a reserved slot whose gate is not applied.
    pub fn system_layer_slots(&self) -> Vec<Option<(usize, usize)>> {
        let n = self.n;
        if n == 1 {
            return vec![None];
        }
        let mut slots = Vec::with_capacity(n);
        for a in (0..n - 1).step_by(2) {
            slots.push(Some((a, a + 1)));
        }
        for a in (1..n - 1).step_by(2) {
            slots.push(Some((a, a + 1)));
        }
        slots.push(self.ring_closed().then_some((n - 1, 0)));
        debug_assert_eq!(slots.len(), n);
        slots
    }

    pub fn ancilla_ops(&self) -> Vec<Op> {
        let n = self.n;
        let mut ops = Vec::new();
        for q in 0..n {
            ops.push(Op::Ry { qubit: q, param: q });
        }
        for layer in 0..self.layers_ancilla {
            for q in 0..n.saturating_sub(1) {
                ops.push(Op::Cnot {
                    control: q,
                    target: q + 1,
                });
            }
            for q in 0..n {
                ops.push(Op::Ry {
                    qubit: q,
                    param: (layer + 1) * n + q,
                });
            }
        }
        ops
    }

    pub fn transversal_ops(&self) -> Vec<Op> {
        (0..self.n)
            .map(|q| Op::Cnot {
                control: q,
                target: self.n + q,
            })
            .collect()
    }

    /// System-ansatz gates acting on the register that starts at `offset`.
    pub fn system_ops(&self, offset: usize) -> Vec<Op> {
        let slots = self.system_layer_slots();
        let mut ops = Vec::new();
        let mut param = self.num_theta();
        for _ in 0..self.layers_system {
            for slot in &slots {
                if let Some((a, b)) = *slot {
                    ops.push(Op::Rp {
                        q1: offset + a,
                        q2: offset + b,
                        param_i: param,
                        param_j: param + 1,
                    });
                }
                param += 2;
            }
        }
        ops
    }

    /// The full Gibbs-preparation circuit on `2n` qubits.
    pub fn circuit(&self) -> Vec<Op> {
        let mut ops = self.ancilla_ops();
        ops.extend(self.transversal_ops());
        ops.extend(self.system_ops(self.n));
        ops
    }

    /// The thermofield-double circuit: the system ansatz is repeated on the
    /// ancillas after the transversal CNOTs.
    pub fn tfd_circuit(&self) -> Vec<Op> {
        let mut ops = self.circuit();
        ops.extend(self.system_ops(0));
        ops
    }
}

/// The split parameter set `(theta, phi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl ParameterVector {
    pub fn new(config: &AnsatzConfig, theta: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        let p = Self { theta, phi };
        p.check(config)?;
        Ok(p)
    }

    pub fn zeros(config: &AnsatzConfig) -> Self {
        Self {
            theta: vec![0.0; config.num_theta()],
            phi: vec![0.0; config.num_phi()],
        }
    }

    /// Uniform in `[-pi, pi)` per coordinate.
    pub fn random<R: Rng + ?Sized>(config: &AnsatzConfig, rng: &mut R) -> Self {
        let flat: Vec<f64> = (0..config.num_params())
            .map(|_| rng.gen_range(-PI..PI))
            .collect();
        Self::from_flat(config, &flat).expect("length matches config")
    }

    pub fn from_flat(config: &AnsatzConfig, flat: &[f64]) -> Result<Self> {
        if flat.len() != config.num_params() {
            return Err(Error::arg(format!(
                "expected {} parameters, got {}",
                config.num_params(),
                flat.len()
            )));
        }
        let (theta, phi) = flat.split_at(config.num_theta());
        Ok(Self {
            theta: theta.to_vec(),
            phi: phi.to_vec(),
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.theta.clone();
        v.extend_from_slice(&self.phi);
        v
    }

    pub fn check(&self, config: &AnsatzConfig) -> Result<()> {
        if self.theta.len() != config.num_theta() {
            return Err(Error::arg(format!(
                "theta has {} entries, expected n(l_A + 1) = {}",
                self.theta.len(),
                config.num_theta()
            )));
        }
        if self.phi.len() != config.num_phi() {
            return Err(Error::arg(format!(
                "phi has {} entries, expected 2n l_S = {}",
                self.phi.len(),
                config.num_phi()
            )));
        }
        Ok(())
    }
}

fn check_register(state: &StateVector, needed: usize) -> Result<()> {
    if state.num_qubits() < needed {
        return Err(Error::arg(format!(
            "circuit needs {needed} qubits, state has {}",
            state.num_qubits()
        )));
    }
    Ok(())
}

pub fn apply_ops(state: &mut StateVector, ops: &[Op], flat_params: &[f64]) -> Result<()> {
    for op in ops {
        op.apply(state, flat_params)?;
    }
    Ok(())
}

/// Applies `U_A(theta)` to qubits `0..n` of `state`.
pub fn apply_ancilla_ansatz(
    state: &mut StateVector,
    config: &AnsatzConfig,
    theta: &[f64],
) -> Result<()> {
    config.validate()?;
    if theta.len() != config.num_theta() {
        return Err(Error::arg(format!(
            "theta has {} entries, expected {}",
            theta.len(),
            config.num_theta()
        )));
    }
    check_register(state, config.n)?;
    apply_ops(state, &config.ancilla_ops(), theta)
}

/// `CNOT(A_i -> S_i)` for every `i`, on a `2n`-qubit register.
pub fn apply_transversal_cnots(state: &mut StateVector) -> Result<()> {
    let q = state.num_qubits();
    if !q.is_multiple_of(2) {
        return Err(Error::arg(format!(
            "transversal CNOTs need an even qubit count, got {q}"
        )));
    }
    let n = q / 2;
    for i in 0..n {
        state.apply_cnot(i, n + i)?;
    }
    Ok(())
}

/// Applies `U_S(phi)` to the system register `n..2n`.
pub fn apply_system_ansatz(
    state: &mut StateVector,
    config: &AnsatzConfig,
    phi: &[f64],
) -> Result<()> {
    config.validate()?;
    if phi.len() != config.num_phi() {
        return Err(Error::arg(format!(
            "phi has {} entries, expected {}",
            phi.len(),
            config.num_phi()
        )));
    }
    check_register(state, config.total_qubits())?;
    // system_ops indexes phi after theta; pad the front.
    let mut flat = vec![0.0; config.num_theta()];
    flat.extend_from_slice(phi);
    apply_ops(state, &config.system_ops(config.n), &flat)
}

pub fn prepare_variational_state(
    config: &AnsatzConfig,
    params: &ParameterVector,
) -> Result<StateVector> {
    config.validate()?;
    params.check(config)?;
    let mut state = StateVector::zero(config.total_qubits());
    apply_ops(&mut state, &config.circuit(), &params.to_flat())?;
    Ok(state)
}

pub fn prepare_tfd_state(config: &AnsatzConfig, params: &ParameterVector) -> Result<StateVector> {
    config.validate()?;
    params.check(config)?;
    let mut state = StateVector::zero(config.total_qubits());
    apply_ops(&mut state, &config.tfd_circuit(), &params.to_flat())?;
    Ok(state)
}

/// `U_A(theta)|0>` on an `n`-qubit register alone.
pub fn ancilla_state(config: &AnsatzConfig, theta: &[f64]) -> Result<StateVector> {
    let mut state = StateVector::zero(config.n);
    apply_ancilla_ansatz(&mut state, config, theta)?;
    Ok(state)
}

/// Gate and parameter counts of the closed-ladder circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceCount {
    pub num_parameters: usize,
    pub num_cnot: usize,
    pub num_sqrt_x: usize,
    pub circuit_depth: usize,
}

/// Depth contributed by one system layer: 12 for even `n`, 18 for odd.
pub fn layer_depth(n: usize) -> usize {
    if n.is_multiple_of(2) {
        12
    } else {
        18
    }
}

/// Closed-form counts for `n > 2`. Each R_P decomposes into two CNOTs and
/// six sqrt(X) gates, each R_Y into two sqrt(X) gates.
///
/// When the ring-closing R_P is dropped (open boundary or
/// `drop_nonadjacent_rp`), its parameters, CNOTs and sqrt(X) gates are
/// subtracted; the depth formula is kept as an upper bound.
pub fn count_resources(config: &AnsatzConfig) -> Result<ResourceCount> {
    config.validate()?;
    let n = config.n;
    if n <= 2 {
        return Err(Error::Unsupported(format!(
            "resource formulas hold for n > 2, got n = {n}"
        )));
    }
    let (la, ls) = (config.layers_ancilla, config.layers_system);
    let mut count = ResourceCount {
        num_parameters: n * (la + 1) + 2 * n * ls,
        num_cnot: (n - 1) * la + 2 * n * ls + n,
        num_sqrt_x: 2 * n * (la + 1) + 6 * n * ls,
        circuit_depth: (n + 1) * la + layer_depth(n) * ls + 3,
    };
    if !config.ring_closed() {
        count.num_parameters -= 2 * ls;
        count.num_cnot -= 2 * ls;
        count.num_sqrt_x -= 6 * ls;
    }
    Ok(count)
}

/// The simplified closed forms quoted for `l_A = 1`, `l_S = n - 1`. The
/// sqrt(X) entry `2n(3n - 2)` disagrees with the general formula, which
/// gives `2n(3n - 1)`; [`count_resources`] is the implemented truth.
pub fn standard_closed_forms(n: usize) -> ResourceCount {
    let p = layer_depth(n);
    ResourceCount {
        num_parameters: 2 * n * n,
        num_cnot: 2 * n * n - 1,
        num_sqrt_x: 2 * n * (3 * n - 2),
        circuit_depth: (p + 1) * n + 4 - p,
    }
}
