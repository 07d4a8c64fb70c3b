"""Dissipative N-qubit quantum reservoir.

The reservoir is an all-to-all coupled register of at most six two-level
systems.  Each input sample shifts the detunings and/or Rabi frequencies,
the density matrix is evolved under a Lindblad master equation from a fixed
initial state, and the per-qubit expectation values form one feature column.

Conventions used throughout:

* ``hbar = 1``; all frequencies and times are dimensionless.
* Computational basis ``|q1 q2 ... qN>`` with qubit 1 the most significant bit.
* ``sigma_z = diag(1, -1)`` so ``|0>`` is the ground state, and
  ``sigma_d = (1 - sigma_z) / 2 = diag(0, 1)`` projects on the excited state.
* Raising operator ``|1><0|``, lowering operator ``|0><1|``.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import IntegrationError, SpecError
from .features import FeatureMatrix

MAX_QUBITS = 6

# Validation thresholds for integrated states.
TRACE_DIVERGENCE = 1e-4
IMAG_READOUT_LIMIT = 1e-6


class Encoding(str, enum.Enum):
    """Which Hamiltonian parameters carry the input shift ``r * u``."""

    DETUNING = "detuning"
    RABI = "rabi"
    BOTH = "both"


class Observable(str, enum.Enum):
    INVERSION = "inversion"  # <sigma_z>
    EXCITED_POPULATION = "excited_population"  # <sigma_d>


class Collapse(str, enum.Enum):
    RAISING_LITERAL = "raising"
    LOWERING = "lowering"


@dataclasses.dataclass(frozen=True)
class ReservoirSpec:
    """Full configuration of one quantum reservoir experiment.

    ``spread`` is the relative half-width of the uniform draws around
    ``delta0``, ``omega0`` and ``v0``; ``spread=0`` pins every qubit to the
    centers.
    """

    __pydantic_config__ = {"extra": "forbid"}

    n_qubits: int = 5
    delta0: float = 8.0
    omega0: float = 6.0
    v0: float = 1.0
    r_scale: float = 1.0
    spread: float = 0.1
    gamma: float = 1e-8
    t_evolve: float = math.pi
    n_steps: int = 3000
    encoding: Encoding = Encoding.DETUNING
    observable: Observable = Observable.INVERSION
    collapse: Collapse = Collapse.RAISING_LITERAL
    seed: int = 0

    def __post_init__(self):
        # Accept plain strings for the enum fields (config files, kwargs).
        for name, cls in (("encoding", Encoding), ("observable", Observable), ("collapse", Collapse)):
            value = getattr(self, name)
            if not isinstance(value, cls):
                try:
                    object.__setattr__(self, name, cls(value))
                except ValueError:
                    choices = ", ".join(c.value for c in cls)
                    raise SpecError(f"{name} must be one of {choices}, got {value!r}") from None
        if isinstance(self.n_qubits, bool) or int(self.n_qubits) != self.n_qubits:
            raise SpecError(f"n_qubits must be an integer, got {self.n_qubits!r}")
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise SpecError(f"n_qubits must lie in [1, {MAX_QUBITS}], got {self.n_qubits}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise SpecError(f"n_steps must be a positive integer, got {self.n_steps}")
        if not self.t_evolve > 0:
            raise SpecError(f"t_evolve must be positive, got {self.t_evolve}")
        if not 0 <= self.spread < 1:
            raise SpecError(f"spread must lie in [0, 1), got {self.spread}")
        if not self.gamma >= 0:
            raise SpecError(f"gamma must be non-negative, got {self.gamma}")
        for name in ("delta0", "omega0", "v0", "r_scale"):
            if not math.isfinite(getattr(self, name)):
                raise SpecError(f"{name} must be finite")
        if not 0 <= int(self.seed) < 2**64:
            raise SpecError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, enum.Enum):
                out[key] = value.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ReservoirSpec":
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise SpecError(f"unknown reservoir fields: {sorted(unknown)}")
        return cls(**data)

    def replace(self, **changes) -> "ReservoirSpec":
        return dataclasses.replace(self, **changes)

    def spec_hash(self) -> str:
        """Stable identifier of (configuration, seed); equal specs hash equal."""
        blob = json.dumps(self.to_dict(), sort_keys=True, default=float)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclasses.dataclass(frozen=True)
class QubitParams:
    """One random draw of detunings, Rabi frequencies and couplings."""

    delta: np.ndarray
    omega: np.ndarray
    coupling: np.ndarray

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float)
        omega = np.asarray(self.omega, dtype=float)
        coupling = np.asarray(self.coupling, dtype=float)
        n = delta.shape[0]
        if delta.shape != (n,) or omega.shape != (n,) or coupling.shape != (n, n):
            raise SpecError("QubitParams shapes must be (N,), (N,), (N, N)")
        if not np.array_equal(coupling, coupling.T):
            raise SpecError("coupling matrix must be symmetric")
        if np.any(np.diag(coupling) != 0):
            raise SpecError("coupling matrix must have a zero diagonal")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "coupling", coupling)

    @property
    def n_qubits(self) -> int:
        return self.delta.shape[0]

    def to_dict(self) -> dict:
        return {
            "delta": self.delta.tolist(),
            "omega": self.omega.tolist(),
            "coupling": self.coupling.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "QubitParams":
        return cls(np.array(data["delta"]), np.array(data["omega"]), np.array(data["coupling"]))


@dataclasses.dataclass(frozen=True)
class InitialState:
    """Per-qubit amplitudes ``a_n`` in [0, 1] and phases ``phi_n`` in [0, 2pi)."""

    amplitudes: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=float)
        phi = np.asarray(self.phases, dtype=float)
        if a.shape != phi.shape or a.ndim != 1:
            raise SpecError("amplitudes and phases must be 1-D vectors of equal length")
        if np.any((a < 0) | (a > 1)):
            raise SpecError("amplitudes must lie in [0, 1]")
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "phases", np.mod(phi, 2 * np.pi))

    @classmethod
    def ground(cls, n_qubits: int) -> "InitialState":
        return cls(np.ones(n_qubits), np.zeros(n_qubits))

    @classmethod
    def random(cls, n_qubits: int, rng: np.random.Generator) -> "InitialState":
        """Seeded random product state: all amplitudes drawn, then all phases."""
        a = rng.uniform(0.0, 1.0, n_qubits)
        phi = rng.uniform(0.0, 2 * np.pi, n_qubits)
        return cls(a, phi)


def sample_qubit_params(spec: ReservoirSpec, rng: Optional[np.random.Generator] = None) -> QubitParams:
    """Draw the heterogeneous qubit parameters for one experiment.

    Draw order is fixed so results are reproducible from the seed: all N
    detunings, then all N Rabi frequencies, then the couplings of the upper
    triangle in row-major order ``(0,1), (0,2), ..., (N-2,N-1)``.

    Args:
        spec: Reservoir configuration.
        rng: Random stream; defaults to ``np.random.default_rng(spec.seed)``.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    n = spec.n_qubits
    lo, hi = 1.0 - spec.spread, 1.0 + spec.spread

    def draw(center, size):
        return rng.uniform(center * lo, center * hi, size)

    delta = draw(spec.delta0, n)
    omega = draw(spec.omega0, n)
    rows, cols = np.triu_indices(n, k=1)
    upper = draw(spec.v0, rows.size)
    coupling = np.zeros((n, n))
    coupling[rows, cols] = upper
    coupling[cols, rows] = upper
    return QubitParams(delta, omega, coupling)


def basis_bits(n_qubits: int) -> np.ndarray:
    """``(2**N, N)`` table of qubit occupations; column 0 is qubit 1 (MSB)."""
    idx = np.arange(2**n_qubits)
    shifts = np.arange(n_qubits - 1, -1, -1)
    return (idx[:, None] >> shifts[None, :]) & 1


def _flip_masks(n_qubits: int) -> list:
    return [1 << (n_qubits - 1 - q) for q in range(n_qubits)]


def encode(params: QubitParams, inputs, spec: ReservoirSpec):
    """Per-sample detunings and Rabi frequencies, each of shape ``(K, N)``."""
    u = np.asarray(inputs, dtype=float).reshape(-1, 1)
    if not np.all(np.isfinite(u)):
        raise SpecError("input samples must be finite")
    shift = spec.r_scale * u
    delta = np.broadcast_to(params.delta, (u.shape[0], params.n_qubits))
    omega = np.broadcast_to(params.omega, (u.shape[0], params.n_qubits))
    if spec.encoding in (Encoding.DETUNING, Encoding.BOTH):
        delta = delta + shift
    if spec.encoding in (Encoding.RABI, Encoding.BOTH):
        omega = omega + shift
    return delta, omega


def build_hamiltonians(params: QubitParams, inputs, spec: ReservoirSpec) -> np.ndarray:
    """Stack of Hamiltonians ``H(u_k)``, shape ``(K, 2**N, 2**N)``.

    ``H = sum_n [-Delta_n(u) sd_n + Omega_n(u)/2 sx_n]
          + sum_{m>n} V_mn sd_m sd_n / (N - 1)``
    """
    n = params.n_qubits
    if n != spec.n_qubits:
        raise SpecError(f"params have {n} qubits but spec has {spec.n_qubits}")
    d = 2**n
    delta, omega = encode(params, inputs, spec)
    bits = basis_bits(n).astype(float)
    diag = -delta @ bits.T
    if n > 1:
        rows, cols = np.triu_indices(n, k=1)
        pair_occ = bits[:, rows] * bits[:, cols]
        diag = diag + (pair_occ @ params.coupling[rows, cols]) / (n - 1)
    H = np.zeros((delta.shape[0], d, d), dtype=complex)
    idx = np.arange(d)
    H[:, idx, idx] = diag
    for q, mask in enumerate(_flip_masks(n)):
        H[:, idx, idx ^ mask] += 0.5 * omega[:, q : q + 1]
    return H


def build_hamiltonian(params: QubitParams, u: float, spec: ReservoirSpec) -> np.ndarray:
    """Hamiltonian for a single input sample ``u``."""
    if not math.isfinite(u):
        raise SpecError(f"input sample must be finite, got {u}")
    return build_hamiltonians(params, [u], spec)[0]


def prepare_initial_state(spec: ReservoirSpec, state: Optional[InitialState] = None) -> np.ndarray:
    """Pure product state ``rho0 = |psi0><psi0|``; all-ground by default."""
    if state is None:
        state = InitialState.ground(spec.n_qubits)
    if state.amplitudes.shape[0] != spec.n_qubits:
        raise SpecError("initial state length does not match n_qubits")
    psi = np.ones(1, dtype=complex)
    for a, phi in zip(state.amplitudes, state.phases):
        qubit = np.array([a, math.sqrt(max(0.0, 1.0 - a * a)) * np.exp(-1j * phi)])
        psi = np.kron(psi, qubit)
    return np.outer(psi, psi.conj())


def _single_qubit_op(op: np.ndarray, q: int, n: int) -> np.ndarray:
    left = np.eye(2**q)
    right = np.eye(2 ** (n - q - 1))
    return np.kron(np.kron(left, op), right)


def collapse_operators(spec: ReservoirSpec) -> list:
    """Dense collapse operators ``sqrt(gamma) sigma_n^{+/-}`` for every qubit."""
    if spec.collapse is Collapse.LOWERING:
        op = np.array([[0.0, 1.0], [0.0, 0.0]])
    else:
        op = np.array([[0.0, 0.0], [1.0, 0.0]])
    amp = math.sqrt(spec.gamma)
    return [amp * _single_qubit_op(op, q, spec.n_qubits) for q in range(spec.n_qubits)]


def lindblad_rhs(H: np.ndarray, rho: np.ndarray, spec: ReservoirSpec) -> np.ndarray:
    """Right-hand side ``-i[H, rho] + sum_n (C rho C^+ - {C^+ C, rho}/2)``.

    Reference implementation with dense collapse operators.  The integrator
    uses an equivalent sliced form (see ``_Propagator``).
    """
    H = np.asarray(H)
    rho = np.asarray(rho)
    if H.shape[-2:] != rho.shape[-2:] or H.shape[-1] != spec.dim:
        raise SpecError(f"dimension mismatch: H {H.shape}, rho {rho.shape}, dim {spec.dim}")
    out = -1j * (H @ rho - rho @ H)
    if spec.gamma > 0:
        for C in collapse_operators(spec):
            Cd = C.conj().T
            CdC = Cd @ C
            out = out + C @ rho @ Cd - 0.5 * (CdC @ rho + rho @ CdC)
    return out


class _Propagator:
    """Batched fixed-step RK4 for one set of Hamiltonians.

    The anticommutator part is folded into ``H_eff = H - (i/2) sum_n C^+C``,
    which is diagonal because each ``C^+C`` is a single-qubit projector, and
    the jump terms are applied by slicing the qubit axes instead of dense
    matrix products.  Stage states stay exactly Hermitian, so
    ``rho H_eff^+`` is evaluated as ``(H_eff rho)^+``.
    """

    def __init__(self, H: np.ndarray, spec: ReservoirSpec):
        self.n = spec.n_qubits
        self.gamma = spec.gamma
        # Jump operator for qubit q maps level `src` to level `dst`.
        if spec.collapse is Collapse.LOWERING:
            self.src, self.dst = 1, 0
        else:
            self.src, self.dst = 0, 1
        self.H_eff = np.array(H, dtype=complex)
        if self.gamma > 0:
            bits = basis_bits(self.n)
            n_src = np.sum(bits == self.src, axis=1)
            idx = np.arange(spec.dim)
            self.H_eff[..., idx, idx] -= 0.5j * self.gamma * n_src

    def _jump(self, rho: np.ndarray, out: np.ndarray) -> None:
        batch = rho.shape[0]
        for q in range(self.n):
            a, b = 2**q, 2 ** (self.n - q - 1)
            view_in = rho.reshape(batch, a, 2, b, a, 2, b)
            view_out = out.reshape(batch, a, 2, b, a, 2, b)
            view_out[:, :, self.dst, :, :, self.dst, :] += (
                self.gamma * view_in[:, :, self.src, :, :, self.src, :]
            )

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        A = self.H_eff @ rho
        k = A - np.conj(np.swapaxes(A, -1, -2))
        k *= -1j
        if self.gamma > 0:
            self._jump(rho, k)
        return k

    def run(self, rho: np.ndarray, t_final: float, n_steps: int) -> np.ndarray:
        h = t_final / n_steps
        half = 0.5 * h
        sixth = h / 6.0
        f = self.rhs
        for _ in range(n_steps):
            k1 = f(rho)
            k2 = f(rho + half * k1)
            k3 = f(rho + half * k2)
            k4 = f(rho + h * k3)
            k2 += k3
            k2 *= 2.0
            k1 += k2
            k1 += k4
            rho = rho + sixth * k1
        return rho


class _IntegratingFactor(_Propagator):
    """Integrating-factor (Lawson) RK4.

    The no-jump part ``-i(H_eff rho - rho H_eff^+)`` is solved exactly with
    the half-step propagator ``V = exp(-i h/2 H_eff)`` and classical RK4 is
    applied to the jump term in that frame.  Every stage is a positive
    combination of completely positive maps, so states stay positive
    semidefinite; at ``gamma == 0`` the step is exact.
    """

    def __init__(self, H: np.ndarray, spec: ReservoirSpec):
        super().__init__(H, spec)
        h = spec.t_evolve / spec.n_steps
        self.V = scipy.linalg.expm(-0.5j * h * self.H_eff)
        self.Vd = np.conj(np.swapaxes(self.V, -1, -2))

    def _conj(self, rho: np.ndarray) -> np.ndarray:
        return self.V @ rho @ self.Vd

    def J(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho)
        self._jump(rho, out)
        return out

    def run(self, rho: np.ndarray, t_final: float, n_steps: int) -> np.ndarray:
        h = t_final / n_steps
        if self.gamma == 0:
            for _ in range(n_steps):
                rho = self._conj(self._conj(rho))
            return rho
        for _ in range(n_steps):
            a = self._conj(rho)
            c1 = self._conj(self.J(rho))
            j2 = self.J(a + 0.5 * h * c1)
            j3 = self.J(a + 0.5 * h * j2)
            b = self._conj(a)
            c3 = self._conj(j3)
            j4 = self.J(b + h * c3)
            rho = b + (h / 6.0) * (self._conj(c1 + 2.0 * j2) + 2.0 * c3 + j4)
        return rho


def _exact_unitary(rho0: np.ndarray, H: np.ndarray, t: float) -> np.ndarray:
    w, V = np.linalg.eigh(H)
    U = (V * np.exp(-1j * w * t)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))
    return U @ rho0 @ np.conj(np.swapaxes(U, -1, -2))


def evolve(rho0: np.ndarray, H: np.ndarray, spec: ReservoirSpec, method: str = "auto") -> np.ndarray:
    """Integrate the master equation over ``[0, spec.t_evolve]``.

    ``H`` may be a single ``(d, d)`` matrix or a stack ``(B, d, d)``; ``rho0``
    broadcasts against it.  ``method`` is ``"rk4"``, ``"exact"`` (only valid
    for ``gamma == 0``), ``"ifrk4"`` (integrating-factor RK4, positivity
    preserving) or ``"auto"`` (exact when ``gamma == 0``, else ``"ifrk4"``).

    Raises:
        IntegrationError: if the trace drifts by more than 1e-4 or the state
            becomes non-finite.  For stacked input the error carries the
            offending batch index in ``.column``.
    """
    H = np.asarray(H, dtype=complex)
    rho0 = np.asarray(rho0, dtype=complex)
    d = spec.dim
    if H.shape[-2:] != (d, d) or rho0.shape[-2:] != (d, d):
        raise SpecError(f"dimension mismatch: H {H.shape}, rho0 {rho0.shape}, dim {d}")
    single = H.ndim == 2
    Hb = H.reshape(-1, d, d)
    rho_b = np.broadcast_to(rho0, Hb.shape[:1] + (d, d)).copy()
    if method == "auto":
        method = "exact" if spec.gamma == 0 else "ifrk4"
    with np.errstate(over="ignore", invalid="ignore"):
        out = _integrate(rho_b, Hb, spec, method)
        out = 0.5 * (out + np.conj(np.swapaxes(out, -1, -2)))
        _check_states(out)
    return out[0] if single else out


def _integrate(rho_b, Hb, spec, method):
    if method == "exact":
        if spec.gamma != 0:
            raise SpecError("exact unitary path requires gamma == 0")
        out = _exact_unitary(rho_b, Hb, spec.t_evolve)
    elif method == "rk4":
        out = _Propagator(Hb, spec).run(rho_b, spec.t_evolve, spec.n_steps)
    elif method == "ifrk4":
        out = _IntegratingFactor(Hb, spec).run(rho_b, spec.t_evolve, spec.n_steps)
    else:
        raise SpecError(f"unknown evolution method {method!r}")
    return out


def _check_states(rho: np.ndarray) -> None:
    finite = np.all(np.isfinite(rho), axis=(-2, -1))
    trace_dev = np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0)
    bad = ~finite | ~(trace_dev <= TRACE_DIVERGENCE)
    if np.any(bad):
        col = int(np.flatnonzero(bad)[0])
        raise IntegrationError(
            f"integrator diverged (trace deviation {trace_dev[col]:.3e}); "
            "increase n_steps or reduce parameter magnitudes",
            column=col,
        )


def observable_diagonals(spec: ReservoirSpec) -> np.ndarray:
    """``(N, 2**N)`` diagonals of the per-qubit readout observables."""
    bits = basis_bits(spec.n_qubits).T.astype(float)
    if spec.observable is Observable.INVERSION:
        return 1.0 - 2.0 * bits
    return bits


def measure_readout(rho: np.ndarray, spec: ReservoirSpec) -> np.ndarray:
    """Per-qubit expectation values ``tr(rho O_n)``.

    Accepts a single state (returns shape ``(N,)``) or a stack (``(B, N)``).
    """
    rho = np.asarray(rho)
    pops = np.diagonal(rho, axis1=-2, axis2=-1)
    values = pops @ observable_diagonals(spec).T
    imag = np.abs(values.imag)
    if np.any(imag > IMAG_READOUT_LIMIT):
        raise IntegrationError(f"readout has imaginary part {imag.max():.3e}; state is corrupted")
    return np.ascontiguousarray(values.real)


def compute_features(
    series,
    spec: ReservoirSpec,
    params: Optional[QubitParams] = None,
    rho0: Optional[np.ndarray] = None,
    threads: int = 1,
    chunk_size: int = 128,
    method: str = "auto",
) -> FeatureMatrix:
    """Reservoir readouts for every sample, shape ``N x K``.

    Each sample restarts from ``rho0`` under its own Hamiltonian, so columns
    are independent; they are processed in chunks, optionally on a thread
    pool.  Per-column arithmetic does not depend on chunking, so the result
    is bit-identical for any ``threads`` / ``chunk_size``.
    """
    u = np.asarray(series, dtype=float)
    if u.ndim != 1:
        raise SpecError("series must be one-dimensional")
    if params is None:
        params = sample_qubit_params(spec)
    if rho0 is None:
        rho0 = prepare_initial_state(spec)
    K = u.shape[0]
    out = np.empty((spec.n_qubits, K))
    if K == 0:
        return FeatureMatrix(out, spec_hash=spec.spec_hash())
    if chunk_size < 1:
        raise SpecError("chunk_size must be positive")
    starts = list(range(0, K, chunk_size))

    def work(start):
        stop = min(start + chunk_size, K)
        H = build_hamiltonians(params, u[start:stop], spec)
        try:
            rho = evolve(rho0, H, spec, method=method)
            out[:, start:stop] = measure_readout(rho, spec).T
        except IntegrationError as exc:
            offset = start + (exc.column or 0)
            raise IntegrationError(str(exc).split(": ", 1)[-1], column=offset) from exc

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, starts))
    else:
        for start in starts:
            work(start)
    return FeatureMatrix(out, spec_hash=spec.spec_hash())


def estimate_cost(spec: ReservoirSpec, n_samples: int) -> float:
    """Rough operation count ``samples * steps * dim**3`` for a run."""
    return float(n_samples) * spec.n_steps * float(spec.dim) ** 3


def matrix_to_debug(matrix: np.ndarray) -> list:
    """Row-major nested list of ``[re, im]`` pairs."""
    m = np.asarray(matrix, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_debug(data: Sequence) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]
