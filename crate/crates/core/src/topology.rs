//! Hierarchical star-topology register and its Hamiltonian.
//!
//! One central spin couples to `h_per_branch` first-layer spins in each of
//! `branches` branches; every branch additionally carries `f_per_h`
//! second-layer spins, each coupled to all first-layer spins of that branch.
//! All couplings share a single scalar constant J, and optional x/z fields
//! of amplitude g·J drive the dynamics away from integrability.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    check_register_size, embed_pauli, pauli_string, Axis, Layer, Operator, SiteIndex,
};
use crate::error::{Error, Result};

/// Branch count and per-branch layer sizes.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub branches: usize,
    pub h_per_branch: usize,
    /// Second-layer spins per branch; each couples to every first-layer
    /// spin of its branch (within a branch the second layer is shared).
    pub f_per_h: usize,
}

impl TopologySpec {
    pub fn new(branches: usize, h_per_branch: usize, f_per_h: usize) -> Result<TopologySpec> {
        let spec = TopologySpec { branches, h_per_branch, f_per_h };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.branches == 0 || self.h_per_branch == 0 {
            return Err(Error::InvalidArgument(
                "topology needs at least one branch and one first-layer spin per branch".into(),
            ));
        }
        check_register_size(self.n_qubits())
    }

    /// First-layer spin count N1.
    pub fn n1(&self) -> usize {
        self.branches * self.h_per_branch
    }

    /// Second-layer spin count N2.
    pub fn n2(&self) -> usize {
        self.branches * self.f_per_h
    }

    pub fn n_qubits(&self) -> usize {
        1 + self.n1() + self.n2()
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits()
    }

    pub fn central_site(&self) -> usize {
        0
    }

    /// Global indices of the first-layer spins of branch `k` (1-based).
    pub fn branch_h_sites(&self, k: usize) -> Result<Vec<usize>> {
        self.check_branch(k)?;
        let start = 1 + (k - 1) * self.h_per_branch;
        Ok((start..start + self.h_per_branch).collect())
    }

    /// Global indices of the second-layer spins of branch `k` (1-based).
    pub fn branch_f_sites(&self, k: usize) -> Result<Vec<usize>> {
        self.check_branch(k)?;
        let start = 1 + self.n1() + (k - 1) * self.f_per_h;
        Ok((start..start + self.f_per_h).collect())
    }

    pub fn layer1_sites(&self) -> Vec<usize> {
        (1..1 + self.n1()).collect()
    }

    pub fn layer2_sites(&self) -> Vec<usize> {
        (1 + self.n1()..self.n_qubits()).collect()
    }

    fn check_branch(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.branches {
            return Err(Error::InvalidBranch { branch: k, branches: self.branches });
        }
        Ok(())
    }
}

/// Deterministic site assignment: central spin first, then the first layer
/// in branch order, then the second layer in branch order.
pub fn site_map(topology: &TopologySpec) -> Result<Vec<SiteIndex>> {
    topology.validate()?;
    let mut sites = Vec::with_capacity(topology.n_qubits());
    sites.push(SiteIndex { index: 0, layer: Layer::Central });
    for index in topology.layer1_sites() {
        sites.push(SiteIndex { index, layer: Layer::Layer1 });
    }
    for index in topology.layer2_sites() {
        sites.push(SiteIndex { index, layer: Layer::Layer2 });
    }
    Ok(sites)
}

/// Coupling constant and field strength.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianParams {
    /// Scalar coupling in Hz.
    pub j_hz: f64,
    /// Dimensionless field amplitude; g = 0 keeps the dynamics integrable.
    pub g: f64,
    /// Count the central-spin field term once instead of once per branch.
    #[serde(default)]
    pub central_field_once: bool,
}

impl HamiltonianParams {
    pub fn new(j_hz: f64, g: f64) -> Result<HamiltonianParams> {
        let p = HamiltonianParams { j_hz, g, central_field_once: false };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j_hz > 0.0) {
            return Err(Error::InvalidArgument(format!("J must be positive, got {}", self.j_hz)));
        }
        if !(self.g >= 0.0) {
            return Err(Error::InvalidArgument(format!("g must be >= 0, got {}", self.g)));
        }
        Ok(())
    }
}

/// Branch-internal couplings: (πJ/2) [ Σ_m σ_z^P σ_z^m + Σ_{m,n} σ_z^m σ_z^n ]
/// over the first- and second-layer spins of branch `k`. Diagonal in the
/// computational basis.
pub fn build_internal(topology: &TopologySpec, k: usize, j_hz: f64) -> Result<Operator> {
    build_internal_with(topology, k, j_hz, true)
}

fn build_internal_with(
    topology: &TopologySpec,
    k: usize,
    j_hz: f64,
    include_hf: bool,
) -> Result<Operator> {
    topology.validate()?;
    let n = topology.n_qubits();
    let coeff = C64::new(PI * j_hz / 2.0, 0.0);
    let central = topology.central_site();
    let h_sites = topology.branch_h_sites(k)?;
    let f_sites = topology.branch_f_sites(k)?;

    let mut out = Operator::zeros(topology.dim());
    for &m in &h_sites {
        out.add_assign_scaled(coeff, &pauli_string(n, &[(central, Axis::Z), (m, Axis::Z)])?)?;
    }
    if include_hf {
        for &m in &h_sites {
            for &f in &f_sites {
                out.add_assign_scaled(coeff, &pauli_string(n, &[(m, Axis::Z), (f, Axis::Z)])?)?;
            }
        }
    }
    Ok(out)
}

/// Branch external fields: (gJπ/2) Σ_{α ∈ {x,z}} [ σ_α^P + Σ_m σ_α^m + Σ_n σ_α^n ].
///
/// The central-spin term is repeated in every branch, so with K branches the
/// central spin feels a field of amplitude K·gJ while satellites feel gJ;
/// `central_field_once` restricts it to branch 1.
pub fn build_external(
    topology: &TopologySpec,
    k: usize,
    params: &HamiltonianParams,
) -> Result<Operator> {
    topology.validate()?;
    params.validate()?;
    topology.check_branch(k)?;
    let n = topology.n_qubits();
    let coeff = C64::new(params.g * params.j_hz * PI / 2.0, 0.0);

    let mut sites = Vec::new();
    if !params.central_field_once || k == 1 {
        sites.push(topology.central_site());
    }
    sites.extend(topology.branch_h_sites(k)?);
    sites.extend(topology.branch_f_sites(k)?);

    let mut out = Operator::zeros(topology.dim());
    if params.g == 0.0 {
        return Ok(out);
    }
    for axis in [Axis::X, Axis::Z] {
        for &s in &sites {
            out.add_assign_scaled(coeff, &embed_pauli(axis, s, n)?)?;
        }
    }
    Ok(out)
}

/// Full Hamiltonian: sum of internal couplings and external fields over all
/// branches. Hermitian by construction.
pub fn build_hamiltonian(topology: &TopologySpec, params: &HamiltonianParams) -> Result<Operator> {
    build_hamiltonian_with(topology, params, true)
}

/// Hamiltonian with the couplings between the first and second layer removed,
/// the simulation analog of refocusing those interactions away. Used by the
/// decoherence-only evolution mode.
pub fn build_hamiltonian_hf_decoupled(
    topology: &TopologySpec,
    params: &HamiltonianParams,
) -> Result<Operator> {
    build_hamiltonian_with(topology, params, false)
}

fn build_hamiltonian_with(
    topology: &TopologySpec,
    params: &HamiltonianParams,
    include_hf: bool,
) -> Result<Operator> {
    topology.validate()?;
    params.validate()?;
    let one = C64::new(1.0, 0.0);
    let mut out = Operator::zeros(topology.dim());
    for k in 1..=topology.branches {
        out.add_assign_scaled(one, &build_internal_with(topology, k, params.j_hz, include_hf)?)?;
        out.add_assign_scaled(one, &build_external(topology, k, params)?)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{collective_sum, commutator, set_register_ceiling, DEFAULT_REGISTER_CEILING};

    fn k1() -> TopologySpec {
        TopologySpec::new(1, 2, 3).unwrap()
    }

    fn k2() -> TopologySpec {
        TopologySpec::new(2, 2, 3).unwrap()
    }

    #[test]
    fn site_counts() {
        let t = k1();
        assert_eq!(t.n_qubits(), 6);
        assert_eq!(t.n1(), 2);
        assert_eq!(t.n2(), 3);

        let t = k2();
        assert_eq!(t.n_qubits(), 11);
        assert_eq!(t.n1(), 4);
        assert_eq!(t.n2(), 6);
    }

    #[test]
    fn site_map_layout() {
        let sites = site_map(&k1()).unwrap();
        assert_eq!(sites.len(), 6);
        assert_eq!(sites[0], SiteIndex { index: 0, layer: Layer::Central });
        assert!(sites[1..3].iter().all(|s| s.layer == Layer::Layer1));
        assert!(sites[3..].iter().all(|s| s.layer == Layer::Layer2));
        let idx: Vec<usize> = sites.iter().map(|s| s.index).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn three_branches_exceed_default_ceiling() {
        let err = TopologySpec::new(3, 2, 3).unwrap_err();
        assert!(matches!(err, Error::RegisterCeiling { qubits: 16, ceiling: 12 }));

        // raising the ceiling admits the 16-spin register
        set_register_ceiling(16);
        let t = TopologySpec::new(3, 2, 3).unwrap();
        assert_eq!(t.n_qubits(), 16);
        set_register_ceiling(DEFAULT_REGISTER_CEILING);
    }

    #[test]
    fn branch_sites_k2() {
        let t = k2();
        assert_eq!(t.branch_h_sites(1).unwrap(), vec![1, 2]);
        assert_eq!(t.branch_h_sites(2).unwrap(), vec![3, 4]);
        assert_eq!(t.branch_f_sites(1).unwrap(), vec![5, 6, 7]);
        assert_eq!(t.branch_f_sites(2).unwrap(), vec![8, 9, 10]);
        assert!(t.branch_h_sites(3).is_err());
        assert!(t.branch_h_sites(0).is_err());
    }

    #[test]
    fn internal_is_diagonal_with_known_corner_entry() {
        let t = k1();
        let j = 8.7;
        let h = build_internal(&t, 1, j).unwrap();
        assert!(h.is_diagonal());
        // |00...0>: every z-product contributes +1, and there are
        // h + h*f = 2 + 6 = 8 coupling terms
        let want = PI * j / 2.0 * 8.0;
        assert!((h.get(0, 0).re - want).abs() < 1e-12);
        assert_eq!(h.get(0, 0).im, 0.0);

        let zp = embed_pauli(Axis::Z, 0, t.n_qubits()).unwrap();
        assert_eq!(commutator(&h, &zp).unwrap(), Operator::zeros(t.dim()));
    }

    #[test]
    fn external_vanishes_at_zero_field_and_is_hermitian() {
        let t = k1();
        let p0 = HamiltonianParams::new(1.0, 0.0).unwrap();
        assert_eq!(build_external(&t, 1, &p0).unwrap(), Operator::zeros(t.dim()));

        let p = HamiltonianParams::new(1.0, 1.0).unwrap();
        let h = build_external(&t, 1, &p).unwrap();
        assert_eq!(h.hermiticity_residual(), 0.0);
    }

    #[test]
    fn branch_f_collective_z_has_ladder_spectrum() {
        // eigenvalues of the collective z over one branch's three
        // second-layer sites, brute-forced on the 64-dim register
        let t = k1();
        let f = collective_sum(Axis::Z, &t.branch_f_sites(1).unwrap(), t.n_qubits()).unwrap();
        let eig = crate::evolution::EigenDecomp::compute(&f).unwrap();
        let mut distinct: Vec<i64> =
            eig.eigenvalues().iter().map(|&l| l.round() as i64).collect();
        for (&l, &r) in eig.eigenvalues().iter().zip(distinct.iter()) {
            assert!((l - r as f64).abs() < 1e-12);
        }
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(distinct, vec![-3, -1, 1, 3]);
    }

    #[test]
    fn external_largest_eigenvalue_at_unit_field() {
        // per-site fields commute across sites, so the top of the spectrum
        // is n_sites * (pi/2) * sqrt(2) at g = 1, J = 1
        let t = k1();
        let p = HamiltonianParams::new(1.0, 1.0).unwrap();
        let h = build_external(&t, 1, &p).unwrap();
        let eig = crate::evolution::EigenDecomp::compute(&h).unwrap();
        let largest = eig.eigenvalues().last().copied().unwrap();
        let want = t.n_qubits() as f64 * (PI / 2.0) * 2f64.sqrt();
        assert!((largest - want).abs() < 1e-9, "largest {largest} vs analytic {want}");
    }

    #[test]
    fn external_matches_field_sum_construction() {
        // independent route: g J π/2 * (collective x + collective z over all sites)
        let t = k1();
        let p = HamiltonianParams::new(1.0, 1.0).unwrap();
        let h = build_external(&t, 1, &p).unwrap();
        let n = t.n_qubits();
        let all: Vec<usize> = (0..n).collect();
        let coeff = C64::new(PI / 2.0, 0.0);
        let mut want = Operator::zeros(t.dim());
        want.add_assign_scaled(coeff, &collective_sum(Axis::X, &all, n).unwrap()).unwrap();
        want.add_assign_scaled(coeff, &collective_sum(Axis::Z, &all, n).unwrap()).unwrap();
        assert!(h.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn hamiltonian_recombines_from_branch_pieces() {
        let t = k2();
        let p = HamiltonianParams::new(8.7, 0.3).unwrap();
        let h = build_hamiltonian(&t, &p).unwrap();

        let mut sum = Operator::zeros(t.dim());
        for k in 1..=2 {
            sum.add_assign_scaled(C64::new(1.0, 0.0), &build_internal(&t, k, p.j_hz).unwrap())
                .unwrap();
            sum.add_assign_scaled(C64::new(1.0, 0.0), &build_external(&t, k, &p).unwrap())
                .unwrap();
        }
        assert!(h.max_abs_diff(&sum) < 1e-14);
        assert!(h.hermiticity_residual() < 1e-14);
    }

    #[test]
    fn zero_field_hamiltonian_is_diagonal_and_z_conserving() {
        let t = k1();
        let p = HamiltonianParams::new(8.7, 0.0).unwrap();
        let h = build_hamiltonian(&t, &p).unwrap();
        assert!(h.is_diagonal());
        for s in 0..t.n_qubits() {
            let z = embed_pauli(Axis::Z, s, t.n_qubits()).unwrap();
            assert!(commutator(&h, &z).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_linear_in_j() {
        let t = k1();
        let p1 = HamiltonianParams::new(4.35, 0.2).unwrap();
        let p2 = HamiltonianParams::new(8.7, 0.2).unwrap();
        let h1 = build_hamiltonian(&t, &p1).unwrap().scaled(C64::new(2.0, 0.0));
        let h2 = build_hamiltonian(&t, &p2).unwrap();
        assert_eq!(h1, h2);
    }

    /// Conjugating by a permutation of qubits, expressed as a relabeling of
    /// basis-index bits.
    fn permute_qubits(op: &Operator, perm: &[usize]) -> Operator {
        let n = perm.len();
        let dim = op.dim();
        let move_index = |idx: usize| -> usize {
            let mut out = 0usize;
            for (to, &from) in perm.iter().enumerate() {
                let bit = (idx >> crate::algebra::bit_for_site(n, from)) & 1;
                out |= bit << crate::algebra::bit_for_site(n, to);
            }
            out
        };
        let mut out = Operator::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                out.set(move_index(i), move_index(j), op.get(i, j));
            }
        }
        out
    }

    #[test]
    fn hamiltonian_invariant_under_layer1_swap_within_branch() {
        let t = k1();
        let p = HamiltonianParams::new(8.7, 0.3).unwrap();
        let h = build_hamiltonian(&t, &p).unwrap();
        // swap the two first-layer spins of branch 1 (sites 1 and 2)
        let perm = vec![0, 2, 1, 3, 4, 5];
        let hp = permute_qubits(&h, &perm);
        assert!(h.max_abs_diff(&hp) < 1e-12);
    }

    #[test]
    fn hamiltonian_invariant_under_full_branch_swap() {
        let t = k2();
        let p = HamiltonianParams::new(8.7, 0.3).unwrap();
        let h = build_hamiltonian(&t, &p).unwrap();
        // swap branch 1 <-> branch 2: first-layer pairs and second-layer triplets
        let perm = vec![0, 3, 4, 1, 2, 8, 9, 10, 5, 6, 7];
        let hp = permute_qubits(&h, &perm);
        assert!(h.max_abs_diff(&hp) < 1e-12);
    }

    #[test]
    fn central_field_once_flag() {
        let t = k2();
        let mut p = HamiltonianParams::new(1.0, 0.5).unwrap();
        p.central_field_once = true;
        let h_once = build_hamiltonian(&t, &p).unwrap();
        p.central_field_once = false;
        let h_full = build_hamiltonian(&t, &p).unwrap();

        // difference is exactly one extra copy of the central-field term
        let n = t.n_qubits();
        let coeff = C64::new(p.g * p.j_hz * PI / 2.0, 0.0);
        let mut extra = Operator::zeros(t.dim());
        extra.add_assign_scaled(coeff, &embed_pauli(Axis::X, 0, n).unwrap()).unwrap();
        extra.add_assign_scaled(coeff, &embed_pauli(Axis::Z, 0, n).unwrap()).unwrap();
        let diff = h_full.sub(&h_once).unwrap();
        assert!(diff.max_abs_diff(&extra) < 1e-14);
    }

    #[test]
    fn decoupled_hamiltonian_drops_only_hf_terms() {
        let t = k1();
        let p = HamiltonianParams::new(8.7, 0.2).unwrap();
        let full = build_hamiltonian(&t, &p).unwrap();
        let dec = build_hamiltonian_hf_decoupled(&t, &p).unwrap();
        let n = t.n_qubits();
        let coeff = C64::new(PI * p.j_hz / 2.0, 0.0);
        let mut hf = Operator::zeros(t.dim());
        for &m in &t.branch_h_sites(1).unwrap() {
            for &f in &t.branch_f_sites(1).unwrap() {
                hf.add_assign_scaled(coeff, &pauli_string(n, &[(m, Axis::Z), (f, Axis::Z)]).unwrap())
                    .unwrap();
            }
        }
        assert!(full.sub(&dec).unwrap().max_abs_diff(&hf) < 1e-14);
    }
}
