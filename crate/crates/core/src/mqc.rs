//! Preparation of combination multiple-quantum coherences (MQCs) between the
//! central qubit and the first layer, with the second layer maximally mixed.
//!
//! The first layer starts in a basis state |ξ_n> with n spins flipped; a
//! collective CNOT controlled on the central spin turns |±>|ξ_n> into the
//! entangled pair (|0>|ξ_n> ± |1>|flip ξ_n>)/√2, a coherence of order
//! q = N1 - 2n + 1.

use num_complex::Complex64 as C64;

use crate::algebra::{bit_for_site, DensityMatrix, Operator, StateVector};
use crate::error::{Error, Result};
use crate::topology::TopologySpec;

/// Sign selecting one of the two MQC projectors, or their traceless
/// difference (the deviation combination).
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
    Deviation,
}

/// Label (n, q, sign) of a combination MQC.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct MqcLabel {
    pub n: usize,
    pub q: i64,
    pub sign: Sign,
}

impl MqcLabel {
    pub fn new(n1: usize, n: usize, sign: Sign) -> Result<MqcLabel> {
        if n > n1 {
            return Err(Error::FlipCountOutOfRange { n, max: n1 });
        }
        Ok(MqcLabel { n, q: coherence_order(n1, n), sign })
    }
}

/// Coherence order q = N1 - 2n + 1.
pub fn coherence_order(n1: usize, n: usize) -> i64 {
    n1 as i64 - 2 * n as i64 + 1
}

/// First-layer basis state with `n` spins in |1>. The canonical placement
/// puts the flipped spins on the highest-index slots; physics is placement
/// independent (see `xi_state_with_flips`).
pub fn xi_state(n1: usize, n: usize) -> Result<StateVector> {
    if n > n1 {
        return Err(Error::FlipCountOutOfRange { n, max: n1 });
    }
    let flips: Vec<usize> = (n1 - n..n1).collect();
    xi_state_with_flips(n1, &flips)
}

/// First-layer basis state with an explicit choice of flipped slots
/// (0-based within the layer-1 register).
pub fn xi_state_with_flips(n1: usize, flips: &[usize]) -> Result<StateVector> {
    let mut index = 0usize;
    for &s in flips {
        if s >= n1 {
            return Err(Error::SiteOutOfRange { site: s, n_qubits: n1 });
        }
        let bit = 1usize << bit_for_site(n1, s);
        if index & bit != 0 {
            return Err(Error::DuplicateSite { site: s });
        }
        index |= bit;
    }
    Ok(StateVector::basis(1 << n1, index))
}

/// Collective CNOT with the central spin as control and every first-layer
/// spin as target, identity on the second layer. Unitary and involutory.
pub fn collective_cnot(topology: &TopologySpec) -> Result<Operator> {
    topology.validate()?;
    let n = topology.n_qubits();
    let dim = topology.dim();
    let central_bit = 1usize << bit_for_site(n, topology.central_site());
    let mut hmask = 0usize;
    for s in topology.layer1_sites() {
        hmask |= 1 << bit_for_site(n, s);
    }

    let mut out = Operator::zeros(dim);
    for col in 0..dim {
        let row = if col & central_bit == 0 { col } else { col ^ hmask };
        out.set(row, col, C64::new(1.0, 0.0));
    }
    Ok(out)
}

/// The entangled central-plus-first-layer state
/// (|0>|ξ_n> ± |1>|flip ξ_n>)/√2 on the P⊗H factor.
fn psi(topology: &TopologySpec, sign: Sign, flips: &[usize]) -> Result<StateVector> {
    let n1 = topology.n1();
    let xi = xi_state_with_flips(n1, flips)?;
    let complement: Vec<usize> = (0..n1).filter(|s| !flips.contains(s)).collect();
    let xi_flipped = xi_state_with_flips(n1, &complement)?;

    let zero = StateVector::basis(2, 0);
    let one = StateVector::basis(2, 1);
    let s = match sign {
        Sign::Plus => 1.0,
        Sign::Minus => -1.0,
        Sign::Deviation => {
            return Err(Error::InvalidArgument("deviation is not a pure state".into()))
        }
    };
    let a = zero.kron(&xi);
    let b = one.kron(&xi_flipped);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let data: Vec<C64> = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x + s * y) * inv_sqrt2)
        .collect();
    StateVector::new(data)
}

fn canonical_flips(n1: usize, n: usize) -> Result<Vec<usize>> {
    if n > n1 {
        return Err(Error::FlipCountOutOfRange { n, max: n1 });
    }
    Ok((n1 - n..n1).collect())
}

/// MQC state ρ_q^±: projector onto ψ on the central-plus-first-layer factor,
/// maximally mixed on the second layer.
pub fn prepare_mqc(topology: &TopologySpec, n: usize, sign: Sign) -> Result<DensityMatrix> {
    let flips = canonical_flips(topology.n1(), n)?;
    prepare_mqc_with_flips(topology, sign, &flips)
}

/// Same state with an explicit placement of the `n` flipped first-layer
/// spins (`flips.len()` plays the role of n).
pub fn prepare_mqc_with_flips(
    topology: &TopologySpec,
    sign: Sign,
    flips: &[usize],
) -> Result<DensityMatrix> {
    topology.validate()?;
    let psi = psi(topology, sign, flips)?;
    let proj = psi.outer(&psi)?;
    let n2 = topology.n2();
    let mixed = Operator::identity(1 << n2).scaled(C64::new(1.0 / (1u64 << n2) as f64, 0.0));
    DensityMatrix::state(proj.kron(&mixed))
}

/// Deviation combination ρ_q^x = ρ_q^+ - ρ_q^-; traceless with purity
/// 2 / 2^N2.
pub fn prepare_deviation(topology: &TopologySpec, n: usize) -> Result<DensityMatrix> {
    let flips = canonical_flips(topology.n1(), n)?;
    prepare_deviation_with_flips(topology, &flips)
}

pub fn prepare_deviation_with_flips(
    topology: &TopologySpec,
    flips: &[usize],
) -> Result<DensityMatrix> {
    let plus = prepare_mqc_with_flips(topology, Sign::Plus, flips)?;
    let minus = prepare_mqc_with_flips(topology, Sign::Minus, flips)?;
    DensityMatrix::deviation(plus.matrix().sub(minus.matrix())?)
}
