"""Pulsed, driven-dissipative Kerr oscillator in a truncated Fock space.

Hamiltonian (rotating frame of the laser):

    H = (E_p - hbar w_L) a+a + (U/2) a+a+aa + hbar F(t) (a + a+)

with loss rate gamma_p/hbar. The public detuning is delta = E_L - E_1P,
i.e. ``E_p - hbar w_L = -delta``.

Density matrices are column-stacked into vectors so the Lindbladian is a
(d^2 x d^2) matrix L(t) = L0 + F(t) L1. The run stores the propagator of
every coarse time interval; the same propagators serve the one-time
trajectory and the quantum-regression two-time correlations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from ..core import HBAR
from ..errors import DomainError, NumericalError, TruncationError

COARSE_POINTS = 201
TARGET_PEAK_OCCUPATION = 0.01
WEAK_DRIVE_LIMIT = 0.05
TRUNCATION_LIMIT = 1e-8
RTOL = 1e-10
ATOL = 1e-12
DRIVE_NEGLIGIBLE = 1e-15  # relative envelope below which an interval is drive-free

_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class PulseShape:
    """Temporal envelope of the drive F(t) (units 1/ps).

    ``fwhm_tau_p`` is the intensity FWHM for a Gaussian and the plateau
    length for a flat-top pulse (tanh edges of duration ``edge``).
    The simulation covers [-window_T, +window_T].
    """

    kind: str = "gaussian"
    amplitude_F0: float | None = None  # None: auto-scale to the target occupation
    fwhm_tau_p: float = 3.0
    window_T: float = 30.0
    edge: float = 0.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "flat_top"):
            raise DomainError(f"unknown pulse kind {self.kind!r}")
        if not self.fwhm_tau_p > 0:
            raise DomainError("pulse width must be > 0")
        if self.window_T < 4 * self.fwhm_tau_p:
            raise DomainError("window_T must be at least 4x the pulse FWHM")
        if self.amplitude_F0 is not None and self.amplitude_F0 < 0:
            raise DomainError("amplitude must be >= 0")

    def envelope(self, t):
        """Unit-amplitude envelope."""
        t = np.asarray(t, dtype=float)
        if self.kind == "gaussian":
            # |F|^2 has FWHM tau_p
            return np.exp(-2.0 * math.log(2.0) * (t / self.fwhm_tau_p) ** 2)
        half = self.fwhm_tau_p / 2
        rise = self.edge if self.edge > 0 else self.fwhm_tau_p / 100
        return 0.5 * (np.tanh((t + half) / rise) - np.tanh((t - half) / rise))

    def __call__(self, t):
        amp = 0.0 if self.amplitude_F0 is None else self.amplitude_F0
        return amp * self.envelope(t)

    def support(self):
        """Interval outside which the envelope is below DRIVE_NEGLIGIBLE."""
        if self.kind == "gaussian":
            reach = self.fwhm_tau_p * math.sqrt(-math.log(DRIVE_NEGLIGIBLE) / (2 * math.log(2)))
        else:
            rise = self.edge if self.edge > 0 else self.fwhm_tau_p / 100
            reach = self.fwhm_tau_p / 2 + rise * 0.5 * -math.log(DRIVE_NEGLIGIBLE / 2)
        return -reach, reach


def gaussian_pulse(gamma, amplitude=None, width_factor=1.0, window_factor=10.0):
    """Fourier-limited Gaussian pulse: intensity FWHM = width_factor * hbar/gamma."""
    tau = width_factor * HBAR / gamma
    return PulseShape("gaussian", amplitude, tau, window_factor * tau)


def flat_top_pulse(gamma, length_factor=50.0, amplitude=None, edge_factor=1.0):
    """Quasi-CW drive: plateau of length_factor * hbar/gamma with smooth edges."""
    tau = length_factor * HBAR / gamma
    return PulseShape("flat_top", amplitude, tau, 4 * tau, edge_factor * HBAR / gamma)


@dataclass(frozen=True)
class BlockadeParams:
    """One simulation point. ``detuning`` is delta = E_L - E_1P (meV)."""

    detuning: float
    U_dd: float
    gamma_p: float
    drive: PulseShape
    fock_cutoff: int = 6
    coarse_points: int = COARSE_POINTS

    def __post_init__(self):
        if self.fock_cutoff < 4:
            raise DomainError("fock_cutoff must be >= 4")
        if not self.gamma_p > 0:
            raise DomainError("gamma_p must be > 0")
        if self.coarse_points < 3:
            raise DomainError("need at least three coarse time points")

    @property
    def e_p_minus_el(self):
        """Detuning as it enters the Hamiltonian, E_p - hbar w_L."""
        return -self.detuning

    @property
    def dim(self):
        return self.fock_cutoff + 1

    def with_detuning(self, detuning):
        return replace(self, detuning=detuning)


def annihilation(dim):
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def _spre(a):
    return np.kron(np.eye(a.shape[0]), a)


def _spost(a):
    return np.kron(a.T, np.eye(a.shape[0]))


def liouvillian_parts(params: BlockadeParams):
    """(L0, L1) with L(t) = L0 + F(t) L1 acting on column-stacked rho."""
    a = annihilation(params.dim)
    ad = a.conj().T
    num = ad @ a
    h0 = params.e_p_minus_el * num + 0.5 * params.U_dd * (ad @ ad @ a @ a)
    h1 = HBAR * (a + ad)
    rate = params.gamma_p / HBAR
    # d rho/dt = (i/hbar)[rho, H] + rate (a rho a+ - {a+a, rho}/2)
    comm = lambda h: (1j / HBAR) * (_spost(h) - _spre(h))
    dissipator = rate * (np.kron(a.conj(), a) - 0.5 * _spre(num) - 0.5 * _spost(num))
    return comm(h0) + dissipator, comm(h1)


def _vec(rho):
    return rho.reshape(-1, order="F")


def _unvec(v, dim):
    return v.reshape(dim, dim, order="F")


def linear_response_peak(params: BlockadeParams, amplitude=1.0):
    """Peak |alpha|^2 of the U-independent coherent amplitude for a given drive.

    d alpha/dt = -(i D'/hbar + gamma/2hbar) alpha - i F(t)
    """
    drive = params.drive
    z = -(1j * params.e_p_minus_el + 0.5 * params.gamma_p) / HBAR
    env = drive.envelope

    def rhs(t, y):
        alpha = y[0] + 1j * y[1]
        d = z * alpha - 1j * amplitude * env(t)
        return [d.real, d.imag]

    t_eval = np.linspace(-drive.window_T, drive.window_T, 4 * params.coarse_points)
    sol = solve_ivp(rhs, (t_eval[0], t_eval[-1]), [0.0, 0.0], t_eval=t_eval, method="DOP853",
                    rtol=1e-9, atol=1e-14, max_step=drive.fwhm_tau_p / 4)
    return float(np.max(sol.y[0] ** 2 + sol.y[1] ** 2))


def scale_drive(params: BlockadeParams, target=TARGET_PEAK_OCCUPATION):
    """Return params whose drive amplitude gives a peak linear occupation ``target``."""
    if params.drive.amplitude_F0 is not None:
        return params
    peak = linear_response_peak(params, 1.0)
    amp = math.sqrt(target / peak)
    return replace(params, drive=replace(params.drive, amplitude_F0=amp))


@dataclass
class BlockadeRun:
    params: BlockadeParams
    times: np.ndarray = field(repr=False)  # ps, coarse grid
    rho_trajectory: np.ndarray = field(repr=False)  # (K, d, d)
    N_t: np.ndarray = field(repr=False)  # Tr(a rho a+)
    propagators: list = field(repr=False)  # K-1 interval propagators
    weak_drive_ok: bool = True
    diagnostics: dict = field(default_factory=dict)
    G2_grid: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self):
        return self.params.dim


def _interval_propagator(l0, l1, drive, t0, t1):
    d2 = l0.shape[0]

    def rhs(t, y):
        # one product with the assembled generator is half the work of two
        return ((l0 + drive(t) * l1) @ y.reshape(d2, d2)).ravel()

    sol = solve_ivp(rhs, (t0, t1), np.eye(d2, dtype=complex).ravel(), method="DOP853",
                    rtol=RTOL, atol=ATOL)
    if sol.status != 0:
        raise NumericalError("propagation failed (step size underflow?)",
                             {"interval": (t0, t1), "message": sol.message})
    return sol.y[:, -1].reshape(d2, d2)


def evolve(params: BlockadeParams, check=True):
    """Integrate the master equation from vacuum over the pulse window.

    The drive amplitude is auto-scaled first when ``params.drive`` has none.
    """
    params = scale_drive(params)
    drive = params.drive
    l0, l1 = liouvillian_parts(params)
    times = np.linspace(-drive.window_T, drive.window_T, params.coarse_points)
    lo, hi = drive.support()
    cache = {}
    props = []
    for t0, t1 in zip(times[:-1], times[1:]):
        if drive.amplitude_F0 == 0 or t1 <= lo or t0 >= hi:
            f = 0.0
        else:
            # plateau of a flat-top pulse: drive constant to rounding, exact exponential
            e0, em, e1 = drive.envelope([t0, 0.5 * (t0 + t1), t1])
            f = float(drive(t0)) if max(abs(em - e0), abs(e1 - e0)) < DRIVE_NEGLIGIBLE else None
        if f is None:
            props.append(_interval_propagator(l0, l1, drive, t0, t1))
            continue
        key = (round(t1 - t0, 12), f)
        if key not in cache:
            cache[key] = expm((l0 + f * l1) * (t1 - t0))
        props.append(cache[key])

    dim = params.dim
    rho0 = np.zeros((dim, dim), dtype=complex)
    rho0[0, 0] = 1.0
    vecs = np.empty((len(times), dim * dim), dtype=complex)
    vecs[0] = _vec(rho0)
    for k, p in enumerate(props):
        vecs[k + 1] = p @ vecs[k]
    rhos = vecs.reshape(len(times), dim, dim).transpose(0, 2, 1)
    a = annihilation(dim)
    n_t = np.einsum("ij,kji->k", a.conj().T @ a, rhos).real
    run = BlockadeRun(params, times, rhos, n_t, props)
    run.weak_drive_ok = bool(n_t.max() <= WEAK_DRIVE_LIMIT)
    run.diagnostics["peak_occupation"] = float(n_t.max())
    run.diagnostics["drive_amplitude"] = drive.amplitude_F0
    if check:
        check_run(run)
    return run


def check_run(run: BlockadeRun):
    """Validate trace, hermiticity, positivity and truncation of a trajectory."""
    rhos = run.rho_trajectory
    trace_err = float(np.max(np.abs(np.trace(rhos, axis1=1, axis2=2) - 1)))
    herm_err = float(np.max(np.abs(rhos - rhos.conj().transpose(0, 2, 1))))
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (rhos + rhos.conj().transpose(0, 2, 1)))))
    top = float(np.max(rhos[:, -1, -1].real))
    run.diagnostics.update(trace_error=trace_err, hermiticity_error=herm_err,
                           min_eigenvalue=min_eig, top_population=top)
    if top >= TRUNCATION_LIMIT:
        raise TruncationError(
            f"population of the top Fock level reached {top:.3g}; increase fock_cutoff "
            f"beyond {run.params.fock_cutoff}", run.diagnostics)
    if trace_err > 1e-8 or herm_err > 1e-10 or min_eig < -1e-9:
        raise NumericalError("density matrix lost trace/hermiticity/positivity", run.diagnostics)
    return run.diagnostics


def two_time_g2(run: BlockadeRun):
    """G2(t, t') = Tr(a U_{t,t'}[a rho(t') a+] a+) on the coarse grid, symmetrized.

    Each column k of the working block is the conditioned state injected at
    t_k; the whole block is pushed through one interval propagator per step.
    """
    dim = run.dim
    a = annihilation(dim)
    jump = np.kron(a.conj(), a)  # vec(a X a+) = jump @ vec(X)
    num_row = _vec(np.eye(dim, dtype=complex)) @ jump  # vec -> Tr(a X a+)
    k_total = len(run.times)
    vecs = run.rho_trajectory.transpose(0, 2, 1).reshape(k_total, -1)
    block = np.zeros((dim * dim, k_total), dtype=complex)
    g = np.zeros((k_total, k_total))
    for k in range(k_total):
        block[:, k] = jump @ vecs[k]
        g[: k + 1, k] = (num_row @ block[:, : k + 1]).real
        if k < k_total - 1:
            block[:, : k + 1] = run.propagators[k] @ block[:, : k + 1]
    g = np.triu(g) + np.triu(g, 1).T
    run.G2_grid = g
    return g


def normalized_g2(run: BlockadeRun):
    g = run.G2_grid if run.G2_grid is not None else two_time_g2(run)
    n = run.N_t
    with np.errstate(divide="ignore", invalid="ignore"):
        return g / np.outer(n, n)


def trapezoid_weights(times):
    w = np.empty_like(times)
    dt = np.diff(times)
    w[0], w[-1] = dt[0] / 2, dt[-1] / 2
    w[1:-1] = (dt[:-1] + dt[1:]) / 2
    return w


def pulse_integrated_g2(run: BlockadeRun):
    """Pulse-averaged zero-delay correlation 2 * int_{t1<t2} G2 / (int N)^2.

    With G2 symmetric the doubled upper-triangle integral equals the full
    square, so one tensor-product trapezoid rule serves both integrals and
    uncorrelated light gives exactly one.
    """
    g = run.G2_grid if run.G2_grid is not None else two_time_g2(run)
    w = trapezoid_weights(run.times)
    norm = float(w @ run.N_t)
    if not norm > 0:
        raise DomainError("no emission in the window: g2 is undefined")
    return float(w @ g @ w) / norm ** 2


def steady_state_g2(run: BlockadeRun, at=0.0):
    """Equal-time g2(t, t) at the coarse point closest to ``at``."""
    k = int(np.argmin(np.abs(run.times - at)))
    a = annihilation(run.dim)
    rho = run.rho_trajectory[k]
    g2 = np.trace(a @ a @ rho @ a.conj().T @ a.conj().T).real
    n = np.trace(a @ rho @ a.conj().T).real
    if not n > 0:
        raise DomainError("no occupation: g2 is undefined")
    return float(g2 / n ** 2)


def simulate_g2(params: BlockadeParams):
    """Convenience: evolve, correlate and integrate one detuning point."""
    run = evolve(params)
    two_time_g2(run)
    return pulse_integrated_g2(run), run
