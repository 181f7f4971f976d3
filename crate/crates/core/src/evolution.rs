//! Time evolution engines: exact unitary propagation from a Hermitian
//! eigendecomposition, constant-time-protocol (CTP) scheduling, and the
//! deterministic single-qubit dephasing update.
//!
//! Grids are given as dimensionless times Jt; `j_hz` converts to physical
//! time. Eigendecompositions of a given Hamiltonian are cached process-wide
//! so that sweeps over many grid times and coherence orders pay for the
//! diagonalization once.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::algebra::{DensityMatrix, Operator};
use crate::error::{Error, Result};
use crate::util::hash_complex_slice;

const HERMITICITY_TOL: f64 = 1e-9;

/// Default integrator step in units of 1/J.
pub const DEFAULT_DT_JT: f64 = 0.005;

/// Engine-level bound on γ·N·dt for the dephasing update.
pub const GAMMA_N_DT_LIMIT: f64 = 0.1;

// ---------------------------------------------------------------------------
// Eigendecomposition and propagators
// ---------------------------------------------------------------------------

/// Eigenvalues and eigenvectors of a Hermitian operator, eigenvalues
/// ascending. All propagators and basis transforms derive from this.
#[derive(Debug)]
pub struct EigenDecomp {
    eigenvalues: Vec<f64>,
    vectors: Operator,
}

impl EigenDecomp {
    pub fn compute(h: &Operator) -> Result<EigenDecomp> {
        let herm = h.hermiticity_residual();
        if herm > HERMITICITY_TOL {
            return Err(Error::NotHermitian { residual: herm });
        }
        let eig = h.to_nalgebra().symmetric_eigen();
        let dim = h.dim();

        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = Operator::zeros(dim);
        for (col, &k) in order.iter().enumerate() {
            for row in 0..dim {
                vectors.set(row, col, eig.eigenvectors[(row, k)]);
            }
        }
        Ok(EigenDecomp { eigenvalues, vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &Operator {
        &self.vectors
    }

    /// Phase factors e^{-i λ_k t}.
    pub fn phases(&self, t: f64) -> Vec<C64> {
        self.eigenvalues.iter().map(|&l| C64::new(0.0, -l * t).exp()).collect()
    }

    /// U(t) = V e^{-iΛt} V†.
    pub fn propagator(&self, t: f64) -> Operator {
        let dim = self.dim();
        let phases = self.phases(t);
        let mut scaled = self.vectors.clone();
        for row in 0..dim {
            for col in 0..dim {
                let v = scaled.get(row, col) * phases[col];
                scaled.set(row, col, v);
            }
        }
        scaled.matmul_adjoint(&self.vectors).expect("same dims")
    }

    /// V† A V.
    pub fn to_eigenbasis(&self, a: &Operator) -> Result<Operator> {
        self.vectors.adjoint_matmul(a)?.matmul(&self.vectors)
    }

    /// V A V†.
    pub fn from_eigenbasis(&self, a: &Operator) -> Result<Operator> {
        self.vectors.matmul(a)?.matmul_adjoint(&self.vectors)
    }
}

static EIGEN_CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<EigenDecomp>>>> = OnceLock::new();

/// Eigendecomposition with process-wide memoization keyed by the exact bit
/// pattern of the operator.
pub fn eigen_cached(h: &Operator) -> Result<Arc<EigenDecomp>> {
    let key = (h.dim(), hash_complex_slice(h.data()));
    let cache = EIGEN_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return Ok(Arc::clone(hit));
    }
    let computed = Arc::new(EigenDecomp::compute(h)?);
    let mut guard = cache.lock().unwrap();
    let entry = guard.entry(key).or_insert_with(|| Arc::clone(&computed));
    Ok(Arc::clone(entry))
}

/// U(t) = e^{-iHt} by Hermitian eigendecomposition. For many times on the
/// same Hamiltonian, compute an [`EigenDecomp`] once (or use [`eigen_cached`])
/// and call its `propagator`.
pub fn propagator(h: &Operator, t: f64) -> Result<Operator> {
    Ok(EigenDecomp::compute(h)?.propagator(t))
}

// ---------------------------------------------------------------------------
// CTP schedule
// ---------------------------------------------------------------------------

/// Backward/forward split of a fixed-total-time evolution: scrambling acts
/// for the net time t while the wall time (and hence decoherence exposure)
/// stays pinned at T.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CtpSchedule {
    pub total: f64,
    pub net: f64,
    pub backward: f64,
    pub forward: f64,
}

pub fn ctp_schedule(net: f64, total: f64) -> Result<CtpSchedule> {
    if !(0.0..=total).contains(&net) || total < 0.0 || !net.is_finite() || !total.is_finite() {
        return Err(Error::InvalidSchedule { net, total });
    }
    Ok(CtpSchedule { total, net, backward: (total - net) / 2.0, forward: (total + net) / 2.0 })
}

// ---------------------------------------------------------------------------
// Dephasing update
// ---------------------------------------------------------------------------

/// Dephasing strength: T2* sets γ = 1/(2 T2*), both in units of 1/J, plus
/// the integrator step.
#[derive(Copy, Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecoherenceParams {
    pub t2_star_jt: f64,
    #[serde(default = "default_dt")]
    pub dt_jt: f64,
}

fn default_dt() -> f64 {
    DEFAULT_DT_JT
}

impl DecoherenceParams {
    pub fn new(t2_star_jt: f64) -> DecoherenceParams {
        DecoherenceParams { t2_star_jt, dt_jt: DEFAULT_DT_JT }
    }

    /// γ in units of J.
    pub fn gamma_jt(&self) -> f64 {
        1.0 / (2.0 * self.t2_star_jt)
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if !(self.t2_star_jt > 0.0) || !(self.dt_jt > 0.0) {
            return Err(Error::InvalidArgument(
                "T2* and dt must be positive and finite".into(),
            ));
        }
        let gndt = self.gamma_jt() * n_qubits as f64 * self.dt_jt;
        if gndt >= GAMMA_N_DT_LIMIT {
            return Err(Error::StepTooLarge { value: gndt, limit: GAMMA_N_DT_LIMIT });
        }
        Ok(())
    }
}

/// Evolution mode selecting which dynamics acts between grid points.
#[derive(Clone, Debug, PartialEq)]
pub enum EvolutionMode {
    UnitaryOnly,
    /// Dephasing with the first-to-second-layer couplings refocused away;
    /// the caller supplies the decoupled Hamiltonian.
    DecoherenceOnly(DecoherenceParams),
    UnitaryPlusDecoherence(DecoherenceParams),
    /// Fixed total time T; each grid point t is reached by a backward
    /// evolution of (T-t)/2 composed with a forward evolution of (T+t)/2.
    Ctp { total_jt: f64 },
}

impl EvolutionMode {
    pub fn label(&self) -> &'static str {
        match self {
            EvolutionMode::UnitaryOnly => "unitary_only",
            EvolutionMode::DecoherenceOnly(_) => "decoherence_only",
            EvolutionMode::UnitaryPlusDecoherence(_) => "unitary_plus_decoherence",
            EvolutionMode::Ctp { .. } => "ctp",
        }
    }

    pub fn decoherence(&self) -> Option<&DecoherenceParams> {
        match self {
            EvolutionMode::DecoherenceOnly(d) | EvolutionMode::UnitaryPlusDecoherence(d) => {
                Some(d)
            }
            _ => None,
        }
    }
}

/// Apply the ensemble-averaged dephasing map in place:
/// entry (a, b) is scaled by 1 - 2 γ dt · hamming(a ⊕ b).
///
/// This is the exact Kraus sum γ dt Σ_i Z_i σ Z_i + (1 - γ N dt) σ for
/// single-qubit σ_z jump operators on every qubit: diagonal pairs of bits
/// contribute +1 and differing pairs -1, so Σ_i z_i(a) z_i(b) = N - 2h.
fn apply_dephasing_mask(sigma: &mut Operator, gamma_dt: f64) {
    let dim = sigma.dim();
    let data = sigma.data_mut();
    for a in 0..dim {
        let row = &mut data[a * dim..(a + 1) * dim];
        for (b, entry) in row.iter_mut().enumerate() {
            let h = (a ^ b).count_ones() as f64;
            *entry *= 1.0 - 2.0 * gamma_dt * h;
        }
    }
}

/// One dephasing step: conjugate by U(dt), then apply the no-jump/jump
/// average. Trace and Hermiticity are preserved up to floating-point
/// rounding; the update is deterministic.
pub fn lindblad_step(
    rho: &DensityMatrix,
    h: &Operator,
    dt: f64,
    gamma: f64,
) -> Result<DensityMatrix> {
    let n = rho.matrix().n_qubits();
    let gndt = gamma * n as f64 * dt;
    if gndt > 1.0 {
        return Err(Error::StepTooLarge { value: gndt, limit: 1.0 });
    }
    let u = propagator(h, dt)?;
    let mut sigma = rho.matrix().conjugated_by(&u)?;
    apply_dephasing_mask(&mut sigma, gamma * dt);
    Ok(DensityMatrix::trusted(sigma, rho.kind()))
}

/// Conservation diagnostics accumulated over a dephasing trajectory.
#[derive(Copy, Clone, Debug, Default, serde::Serialize)]
pub struct LindbladDiagnostics {
    pub steps: usize,
    pub max_step_trace_drift: f64,
    pub cumulative_trace_drift: f64,
    pub max_hermiticity_residual: f64,
    pub max_dt_jt: f64,
}

enum StepPropagator {
    Dense { u: Operator, u_dag: Operator },
    /// Diagonal Hamiltonian: conjugation reduces to elementwise phases.
    Diagonal { phases: Vec<C64> },
}

impl StepPropagator {
    fn build(h: &Operator, dt: f64) -> Result<StepPropagator> {
        if h.is_diagonal() {
            let phases = (0..h.dim())
                .map(|k| C64::new(0.0, -h.get(k, k).re * dt).exp())
                .collect();
            Ok(StepPropagator::Diagonal { phases })
        } else {
            let u = eigen_cached(h)?.propagator(dt);
            let u_dag = u.adjoint();
            Ok(StepPropagator::Dense { u, u_dag })
        }
    }

    fn conjugate(&self, rho: &Operator) -> Operator {
        match self {
            StepPropagator::Dense { u, u_dag } => {
                u.matmul(rho).expect("dims").matmul(u_dag).expect("dims")
            }
            StepPropagator::Diagonal { phases } => {
                let dim = rho.dim();
                let mut out = rho.clone();
                let data = out.data_mut();
                for a in 0..dim {
                    for b in 0..dim {
                        data[a * dim + b] *= phases[a] * phases[b].conj();
                    }
                }
                out
            }
        }
    }
}

/// Step a dephasing trajectory across `jt_grid`, invoking `observe` with the
/// state at every grid point (including Jt = 0). Between neighboring grid
/// points the step count is chosen so the effective dt never exceeds the
/// configured one.
pub fn lindblad_evolve_observe<F>(
    rho0: &DensityMatrix,
    h: &Operator,
    jt_grid: &[f64],
    j_hz: f64,
    dec: &DecoherenceParams,
    mut observe: F,
) -> Result<LindbladDiagnostics>
where
    F: FnMut(usize, &Operator),
{
    validate_grid(jt_grid)?;
    let n = rho0.matrix().n_qubits();
    dec.validate(n)?;
    let gamma_jt = dec.gamma_jt();

    let mut diagnostics = LindbladDiagnostics::default();
    let mut propagators: HashMap<u64, StepPropagator> = HashMap::new();
    let mut rho = rho0.matrix().clone();
    let trace0 = rho.trace().re;

    observe(0, &rho);
    for k in 1..jt_grid.len() {
        let gap = jt_grid[k] - jt_grid[k - 1];
        if gap == 0.0 {
            observe(k, &rho);
            continue;
        }
        let steps = (gap / dec.dt_jt).ceil().max(1.0) as usize;
        let dt_jt = gap / steps as f64;
        diagnostics.max_dt_jt = diagnostics.max_dt_jt.max(dt_jt);
        let prop = match propagators.entry(dt_jt.to_bits()) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(StepPropagator::build(h, dt_jt / j_hz)?)
            }
        };
        for _ in 0..steps {
            let trace_before = rho.trace().re;
            let mut next = prop.conjugate(&rho);
            apply_dephasing_mask(&mut next, gamma_jt * dt_jt);
            let trace_after = next.trace().re;
            diagnostics.max_step_trace_drift = diagnostics
                .max_step_trace_drift
                .max((trace_after - trace_before).abs());
            diagnostics.max_hermiticity_residual = diagnostics
                .max_hermiticity_residual
                .max(next.hermiticity_residual());
            diagnostics.steps += 1;
            rho = next;
        }
        observe(k, &rho);
    }
    diagnostics.cumulative_trace_drift = (rho.trace().re - trace0).abs();
    Ok(diagnostics)
}

fn validate_grid(jt_grid: &[f64]) -> Result<()> {
    if jt_grid.is_empty() || jt_grid[0] != 0.0 {
        return Err(Error::InvalidArgument("time grid must start at 0".into()));
    }
    if jt_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("time grid must be sorted ascending".into()));
    }
    Ok(())
}

/// State snapshots at each grid time under the requested mode.
///
/// `unitary_only` conjugates by U(t); `ctp` composes the backward and
/// forward propagators literally; the dephasing modes run the stepwise
/// update (for `decoherence_only` the caller passes the decoupled
/// Hamiltonian).
pub fn evolve(
    rho0: &DensityMatrix,
    h: &Operator,
    jt_grid: &[f64],
    j_hz: f64,
    mode: &EvolutionMode,
) -> Result<Vec<DensityMatrix>> {
    validate_grid(jt_grid)?;
    let kind = rho0.kind();
    match mode {
        EvolutionMode::UnitaryOnly => {
            let eig = eigen_cached(h)?;
            jt_grid
                .iter()
                .map(|&jt| {
                    let u = eig.propagator(jt / j_hz);
                    Ok(DensityMatrix::trusted(rho0.matrix().conjugated_by(&u)?, kind))
                })
                .collect()
        }
        EvolutionMode::Ctp { total_jt } => {
            let eig = eigen_cached(h)?;
            jt_grid
                .iter()
                .map(|&jt| {
                    let sched = ctp_schedule(jt, *total_jt)?;
                    let backward = eig.propagator(sched.backward / j_hz);
                    let forward = eig.propagator(sched.forward / j_hz);
                    let w = backward.adjoint_matmul(&forward)?;
                    Ok(DensityMatrix::trusted(rho0.matrix().conjugated_by(&w)?, kind))
                })
                .collect()
        }
        EvolutionMode::DecoherenceOnly(dec) | EvolutionMode::UnitaryPlusDecoherence(dec) => {
            let mut out = Vec::with_capacity(jt_grid.len());
            lindblad_evolve_observe(rho0, h, jt_grid, j_hz, dec, |_, rho| {
                out.push(DensityMatrix::trusted(rho.clone(), kind));
            })?;
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// Eigenbasis series kernels
// ---------------------------------------------------------------------------

/// CTP phase selector for the series kernels: `None` evolves for the plain
/// time t, `Some(T)` composes e^{+iλ(T-t)/2} e^{-iλ(T+t)/2}.
fn point_phases(eig: &EigenDecomp, t: f64, ctp_total: Option<f64>) -> Vec<C64> {
    match ctp_total {
        None => eig.phases(t),
        Some(total) => {
            let backward = (total - t) / 2.0;
            let forward = (total + t) / 2.0;
            eig.eigenvalues()
                .iter()
                .map(|&l| C64::new(0.0, l * backward).exp() * C64::new(0.0, -l * forward).exp())
                .collect()
        }
    }
}

/// Series of overlaps Tr[ρ(t) O] for unitary dynamics, evaluated in the
/// eigenbasis: Tr[ρ(t) O] = Σ_{j,l} p_j(t) conj(p_l(t)) ρ̃[j,l] Õ[l,j].
///
/// `rho_eig` and `obs_eig` are the initial state and observable already
/// transformed with [`EigenDecomp::to_eigenbasis`]. Grid points evaluate in
/// parallel; each point is O(dim²).
pub fn unitary_overlap_series(
    eig: &EigenDecomp,
    rho_eig: &Operator,
    obs_eig: &Operator,
    jt_grid: &[f64],
    j_hz: f64,
    ctp_total_jt: Option<f64>,
) -> Result<Vec<C64>> {
    validate_grid(jt_grid)?;
    let dim = eig.dim();
    if rho_eig.dim() != dim || obs_eig.dim() != dim {
        return Err(Error::DimensionMismatch { left: rho_eig.dim(), right: dim });
    }
    // transpose the observable once so the inner loop is contiguous
    let mut obs_t = vec![C64::new(0.0, 0.0); dim * dim];
    for l in 0..dim {
        for j in 0..dim {
            obs_t[j * dim + l] = obs_eig.get(l, j);
        }
    }

    let values: Vec<C64> = jt_grid
        .par_iter()
        .map(|&jt| {
            let phases = point_phases(eig, jt / j_hz, ctp_total_jt.map(|t| t / j_hz));
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..dim {
                let pj = phases[j];
                let row_rho = &rho_eig.data()[j * dim..(j + 1) * dim];
                let row_obs = &obs_t[j * dim..(j + 1) * dim];
                let mut inner = C64::new(0.0, 0.0);
                for l in 0..dim {
                    inner += phases[l].conj() * row_rho[l] * row_obs[l];
                }
                acc += pj * inner;
            }
            acc
        })
        .collect();
    Ok(values)
}

/// Series of four-point traces Tr[B†(t) A B(t) A] for unitary dynamics,
/// with `a_eig`, `b_eig` in the eigenbasis. Each point costs two dense
/// products.
pub fn heisenberg_fourpoint_series(
    eig: &EigenDecomp,
    a_eig: &Operator,
    b_eig: &Operator,
    jt_grid: &[f64],
    j_hz: f64,
) -> Result<Vec<C64>> {
    validate_grid(jt_grid)?;
    let dim = eig.dim();
    if a_eig.dim() != dim || b_eig.dim() != dim {
        return Err(Error::DimensionMismatch { left: a_eig.dim(), right: dim });
    }
    let mut values = Vec::with_capacity(jt_grid.len());
    for &jt in jt_grid {
        let t = jt / j_hz;
        // B(t) = U† B U picks up e^{+iλ_j t} b̃[j,l] e^{-iλ_l t}
        let mut bt = b_eig.clone();
        let phases = eig.phases(t);
        {
            let data = bt.data_mut();
            for j in 0..dim {
                for l in 0..dim {
                    data[j * dim + l] *= phases[j].conj() * phases[l];
                }
            }
        }
        let q = a_eig.matmul(&bt)?.matmul(a_eig)?;
        let mut acc = C64::new(0.0, 0.0);
        for (be, qe) in bt.data().iter().zip(q.data()) {
            acc += be.conj() * qe;
        }
        values.push(acc);
    }
    Ok(values)
}
