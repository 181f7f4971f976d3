//! Out-of-time-ordered correlators: the general four-point functional, its
//! commutator-norm form, the MQC overlap series, the NMR-signal identity
//! used as a cross-check, the layer-scrambling OTOC, and the high-temperature
//! expansion verifier.

use num_complex::Complex64 as C64;

use crate::algebra::{
    bit_for_site, collective_sum, embed_pauli, overlap_trace, Axis, DensityMatrix, Operator,
};
use crate::error::{Error, Result};
use crate::evolution::{
    eigen_cached, lindblad_evolve_observe, unitary_overlap_series, EvolutionMode,
    heisenberg_fourpoint_series, DecoherenceParams, LindbladDiagnostics,
};
use crate::mqc::{coherence_order, prepare_deviation, prepare_deviation_with_flips, xi_state};
use crate::topology::{
    build_hamiltonian, build_hamiltonian_hf_decoupled, HamiltonianParams, TopologySpec,
};

const UNITARITY_TOL: f64 = 1e-10;

/// Everything needed to interpret a stored series.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SeriesMeta {
    pub topology: TopologySpec,
    pub params: HamiltonianParams,
    pub mode: String,
    pub label: String,
    /// Raw divisor applied to the series (the t = 0 scale).
    pub normalization: f64,
    /// Largest imaginary part encountered before taking the real part;
    /// values above ~1e-9 indicate a numerical problem.
    pub imag_residue: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lindblad: Option<LindbladDiagnostics>,
}

/// Time-domain OTOC samples on a dimensionless Jt grid, normalized to 1 at
/// Jt = 0.
#[derive(Clone, Debug, serde::Serialize)]
pub struct OtocSeries {
    pub jt: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: SeriesMeta,
}

/// Thermal weight for the general OTOC functional: a pure state (the
/// zero-temperature limit) or the normalized identity (infinite temperature).
#[derive(Copy, Clone)]
pub enum OtocWeight<'a> {
    Pure(&'a DensityMatrix),
    InfiniteTemperature,
}

/// Tr[B†(t) A† B(t) A · w] with B(t) = U†(t) B0 U(t).
pub fn otoc_general(
    a: &Operator,
    b0: &Operator,
    h: &Operator,
    t: f64,
    weight: OtocWeight<'_>,
) -> Result<C64> {
    if a.dim() != b0.dim() || a.dim() != h.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b0.dim().max(h.dim()) });
    }
    let eig = eigen_cached(h)?;
    let u = eig.propagator(t);
    let bt = u.adjoint_matmul(b0)?.matmul(&u)?;
    let chain = bt.adjoint_matmul(&a.adjoint())?.matmul(&bt)?.matmul(a)?;
    match weight {
        OtocWeight::Pure(state) => overlap_trace(&chain, state.matrix()),
        OtocWeight::InfiniteTemperature => Ok(chain.trace() / a.dim() as f64),
    }
}

/// 1 - ½ ⟨C†(t) C(t)⟩ with C(t) = [A, B(t)], averaged at infinite
/// temperature. For unitary A and B0 this equals Re of [`otoc_general`].
pub fn otoc_commutator_form(a: &Operator, b0: &Operator, h: &Operator, t: f64) -> Result<f64> {
    for op in [a, b0] {
        let resid = op.unitarity_residual();
        if resid > UNITARITY_TOL {
            return Err(Error::NotUnitary { residual: resid });
        }
    }
    let eig = eigen_cached(h)?;
    let u = eig.propagator(t);
    let bt = u.adjoint_matmul(b0)?.matmul(&u)?;
    let c = crate::algebra::commutator(a, &bt)?;
    // Tr[C†C] is the squared Frobenius norm
    let csq: f64 = c.data().iter().map(|z| z.norm_sqr()).sum();
    Ok(1.0 - 0.5 * csq / a.dim() as f64)
}

fn real_series_with_residue(values: &[C64], norm: f64) -> (Vec<f64>, f64) {
    let re = values.iter().map(|v| v.re / norm).collect();
    let residue = values.iter().map(|v| v.im.abs() / norm).fold(0.0, f64::max);
    (re, residue)
}

/// OTOC of the deviation combination MQC: Tr[ρ(t) ρ_q^x(0)] / Tr[(ρ_q^x)²],
/// with ρ(t) produced by the requested evolution mode.
pub fn otoc_mqc(
    topology: &TopologySpec,
    params: &HamiltonianParams,
    n: usize,
    jt_grid: &[f64],
    mode: &EvolutionMode,
) -> Result<OtocSeries> {
    let rho_x = prepare_deviation(topology, n)?;
    let label = format!("q={} (n={n})", coherence_order(topology.n1(), n));
    deviation_overlap_series(topology, params, rho_x, label, jt_grid, mode)
}

/// Same series with an explicit placement of the flipped first-layer spins.
pub fn otoc_mqc_with_flips(
    topology: &TopologySpec,
    params: &HamiltonianParams,
    flips: &[usize],
    jt_grid: &[f64],
    mode: &EvolutionMode,
) -> Result<OtocSeries> {
    let rho_x = prepare_deviation_with_flips(topology, flips)?;
    let label = format!("q={} (flips {flips:?})", coherence_order(topology.n1(), flips.len()));
    deviation_overlap_series(topology, params, rho_x, label, jt_grid, mode)
}

fn mode_hamiltonian(
    topology: &TopologySpec,
    params: &HamiltonianParams,
    mode: &EvolutionMode,
) -> Result<Operator> {
    match mode {
        EvolutionMode::DecoherenceOnly(_) => build_hamiltonian_hf_decoupled(topology, params),
        _ => build_hamiltonian(topology, params),
    }
}

/// Overlap of the evolving state with a fixed observable, normalized by
/// `norm`; shared by the MQC OTOC and the NMR-signal cross-check.
fn observable_overlap_series(
    topology: &TopologySpec,
    params: &HamiltonianParams,
    rho0: &DensityMatrix,
    observable: &Operator,
    norm: f64,
    label: String,
    jt_grid: &[f64],
    mode: &EvolutionMode,
) -> Result<OtocSeries> {
    params.validate()?;
    let h = mode_hamiltonian(topology, params, mode)?;
    let j = params.j_hz;

    let (values, imag_residue, lindblad) = match mode {
        EvolutionMode::UnitaryOnly | EvolutionMode::Ctp { .. } => {
            let ctp_total = match mode {
                EvolutionMode::Ctp { total_jt } => Some(*total_jt),
                _ => None,
            };
            if let Some(total) = ctp_total {
                if let Some(&last) = jt_grid.last() {
                    if last > total {
                        return Err(Error::InvalidSchedule { net: last, total });
                    }
                }
            }
            let eig = eigen_cached(&h)?;
            let rho_e = eig.to_eigenbasis(rho0.matrix())?;
            let obs_e = if std::ptr::eq(rho0.matrix(), observable) {
                rho_e.clone()
            } else {
                eig.to_eigenbasis(observable)?
            };
            let raw = unitary_overlap_series(&eig, &rho_e, &obs_e, jt_grid, j, ctp_total)?;
            let (re, residue) = real_series_with_residue(&raw, norm);
            (re, residue, None)
        }
        EvolutionMode::DecoherenceOnly(dec) | EvolutionMode::UnitaryPlusDecoherence(dec) => {
            let mut raw = vec![C64::new(0.0, 0.0); jt_grid.len()];
            let diag = lindblad_evolve_observe(rho0, &h, jt_grid, j, dec, |k, rho| {
                raw[k] = overlap_trace(rho, observable).expect("dims");
            })?;
            let (re, residue) = real_series_with_residue(&raw, norm);
            (re, residue, Some(diag))
        }
    };

    Ok(OtocSeries {
        jt: jt_grid.to_vec(),
        values,
        meta: SeriesMeta {
            topology: *topology,
            params: *params,
            mode: mode.label().to_string(),
            label,
            normalization: norm,
            imag_residue,
            lindblad,
        },
    })
}

fn deviation_overlap_series(
    topology: &TopologySpec,
    params: &HamiltonianParams,
    rho_x: DensityMatrix,
    label: String,
    jt_grid: &[f64],
    mode: &EvolutionMode,
) -> Result<OtocSeries> {
    let norm = rho_x.purity();
    let observable = rho_x.matrix().clone();
    observable_overlap_series(topology, params, &rho_x, &observable, norm, label, jt_grid, mode)
}

/// Measurement-side operator of the NMR readout:
/// U_c (σ_x^P ⊗ |ξ_n><ξ_n| ⊗ 1^F) U_c†.
///
/// Built by direct index fill: the collective CNOT maps |1, h, f> to
/// |1, ~h, f>, so the conjugated operator connects (0, ξ_n, f) with
/// (1, flip ξ_n, f) for every second-layer configuration f.
pub fn measurement_observable(topology: &TopologySpec, n: usize) -> Result<Operator> {
    topology.validate()?;
    let n1 = topology.n1();
    if n > n1 {
        return Err(Error::FlipCountOutOfRange { n, max: n1 });
    }
    let nq = topology.n_qubits();
    let n2 = topology.n2();
    let dim = topology.dim();

    let xi = xi_state(n1, n)?;
    let xi_index = xi
        .amplitudes()
        .iter()
        .position(|z| z.norm() > 0.5)
        .expect("basis state");
    let h_shift = n2; // layer-1 bits sit above the layer-2 bits
    let central_bit = 1usize << bit_for_site(nq, topology.central_site());
    let h_mask_full = ((1usize << n1) - 1) << h_shift;

    let mut out = Operator::zeros(dim);
    let one = C64::new(1.0, 0.0);
    for f in 0..(1usize << n2) {
        let ket = (xi_index << h_shift) | f;
        let bra = central_bit | ((ket ^ h_mask_full) & h_mask_full) | f;
        out.set(ket, bra, one);
        out.set(bra, ket, one);
    }
    Ok(out)
}

/// NMR signal s_q^x(t): overlap of the evolved state with the measurement
/// operator, normalized by its own t = 0 value. Equals [`otoc_mqc`] at the
/// same arguments.
pub fn nmr_signal_series(
    topology: &TopologySpec,
    params: &HamiltonianParams,
    n: usize,
    jt_grid: &[f64],
    mode: &EvolutionMode,
) -> Result<OtocSeries> {
    let rho_x = prepare_deviation(topology, n)?;
    let observable = measurement_observable(topology, n)?;
    let norm = overlap_trace(rho_x.matrix(), &observable)?.re;
    let label = format!("nmr q={} (n={n})", coherence_order(topology.n1(), n));
    observable_overlap_series(topology, params, &rho_x, &observable, norm, label, jt_grid, mode)
}

/// Single-time NMR signal.
pub fn nmr_signal(
    topology: &TopologySpec,
    params: &HamiltonianParams,
    n: usize,
    jt: f64,
    mode: &EvolutionMode,
) -> Result<f64> {
    let grid = if jt == 0.0 { vec![0.0] } else { vec![0.0, jt] };
    let series = nmr_signal_series(topology, params, n, &grid, mode)?;
    Ok(*series.values.last().expect("non-empty grid"))
}

/// OTOC of information initially on the central spin probed by the
/// collective second-layer σ_y: Re Tr[B†(t) A B(t) A] / 2^N with
/// A = σ_y on the central spin and B0 the collective σ_y over the second
/// layer, normalized to 1 at t = 0. Identically 1 at g = 0.
pub fn layer_scrambling_otoc(
    topology: &TopologySpec,
    params: &HamiltonianParams,
    jt_grid: &[f64],
) -> Result<OtocSeries> {
    params.validate()?;
    topology.validate()?;
    let nq = topology.n_qubits();
    let a = embed_pauli(Axis::Y, topology.central_site(), nq)?;
    let b = collective_sum(Axis::Y, &topology.layer2_sites(), nq)?;
    let h = build_hamiltonian(topology, params)?;
    let eig = eigen_cached(&h)?;
    let a_e = eig.to_eigenbasis(&a)?;
    let b_e = eig.to_eigenbasis(&b)?;
    let raw = heisenberg_fourpoint_series(&eig, &a_e, &b_e, jt_grid, params.j_hz)?;

    let dim = topology.dim() as f64;
    let t0 = raw[0].re / dim;
    let (values, imag_residue) = real_series_with_residue(&raw, t0 * dim);
    Ok(OtocSeries {
        jt: jt_grid.to_vec(),
        values,
        meta: SeriesMeta {
            topology: *topology,
            params: *params,
            mode: "unitary_only".to_string(),
            label: "layer_scrambling".to_string(),
            normalization: t0,
            imag_residue,
            lindblad: None,
        },
    })
}

/// Constant attenuation a fixed-total-time protocol would suffer from
/// dephasing alone: the initial coherence connects basis states differing
/// on the central spin and every first-layer spin, so its elementwise decay
/// rate is 2γ(1 + N1), held for the full duration T.
pub fn ctp_attenuation_factor(
    topology: &TopologySpec,
    dec: &DecoherenceParams,
    total_jt: f64,
) -> f64 {
    let hamming = 1.0 + topology.n1() as f64;
    (-2.0 * dec.gamma_jt() * hamming * total_jt).exp()
}

/// Evaluates the full high-temperature OTOC for ρ(0) = 1/2 + ε ρ_Δ on a
/// single qubit and returns the residual against the truncated expansion
/// ¼ + (ε²/8) Tr(ρ_Δ²) + ε² Re Tr[B†(t) ρ_Δ B(t) ρ_Δ].
pub fn mixed_expansion_check(
    b0: &Operator,
    h: &Operator,
    t: f64,
    rho_delta: &Operator,
    eps: f64,
) -> Result<f64> {
    if rho_delta.dim() != 2 || b0.dim() != 2 || h.dim() != 2 {
        return Err(Error::InvalidArgument(
            "mixed_expansion_check is defined on a single-qubit register".into(),
        ));
    }
    if rho_delta.hermiticity_residual() > 1e-12 || rho_delta.trace().norm() > 1e-12 {
        return Err(Error::InvalidArgument(
            "rho_delta must be a traceless Hermitian deviation".into(),
        ));
    }
    let resid = b0.unitarity_residual();
    if resid > UNITARITY_TOL {
        return Err(Error::NotUnitary { residual: resid });
    }

    let u = crate::evolution::propagator(h, t)?;
    let bt = u.adjoint_matmul(b0)?.matmul(&u)?;

    let half = C64::new(0.5, 0.0);
    let rho0 = Operator::identity(2).scaled(half).add(&rho_delta.scaled(C64::new(eps, 0.0)))?;
    let rho0_sq = rho0.matmul(&rho0)?;
    let o_full = bt.adjoint_matmul(&rho0)?.matmul(&bt)?.matmul(&rho0_sq)?.trace().re;

    let tr_delta_sq = overlap_trace(rho_delta, rho_delta)?.re;
    let kernel = bt.adjoint_matmul(rho_delta)?.matmul(&bt)?.matmul(rho_delta)?.trace().re;
    let truncated = 0.25 + eps * eps / 8.0 * tr_delta_sq + eps * eps * kernel;

    Ok((o_full - truncated).abs())
}
