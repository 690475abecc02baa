"""Sparse multi-photon Fock states over labeled optical modes.

A state is a sparse map from occupation-number tuples (one entry per
registered mode) to complex amplitudes.  Mode-subset unitaries are applied
through the second-quantization homomorphism: every creation operator on an
input mode is rewritten as the matrix image over the output modes, expanded
with the standard sqrt(n!) normalization.  All operations are pure functions
returning new states; a ``FockState`` is never mutated after construction, so
states can be shared freely between threads.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
import numpy as np

from .errors import (
    BadParam,
    BadPartition,
    DuplicateMode,
    ModeMismatch,
    NotPhase,
    NotUnitary,
    PhotonBudget,
    UnknownMode,
)

# Amplitudes below this modulus are dropped from the sparse map.
PRUNE_EPSILON = 1e-14
# Maximum allowed entrywise deviation of u†u from the identity.
UNITARITY_TOL = 1e-10
# Default total-photon budget: one shutter photon plus one probe photon.
# Two is also the minimum for the nonlinear-sign gates to be nontrivial.
DEFAULT_PHOTON_BUDGET = 2


class Box(Enum):
    """Spatial tag of a mode: one of the three boxes or an auxiliary rail."""

    A = "A"
    B = "B"
    C = "C"
    AUX = "aux"


class TimeSlot(Enum):
    """Temporal tag of a mode."""

    T1 = "t1"
    T2 = "t2"
    T3 = "t3"
    TF = "tf"
    NONE = "none"


class Role(Enum):
    """Channel role of a mode."""

    SHUTTER = "shutter"
    PROBE_IN = "probe_in"
    PROBE_R = "probe_r"
    PROBE_T = "probe_t"
    DETECTOR = "detector"
    INTERNAL = "internal"


@dataclass(frozen=True)
class ModeLabel:
    """Identity of one optical mode.

    The ``name`` is the opaque identity used by the simulation; box, time
    slot and role are bookkeeping tags for scenario construction and
    reporting only.
    """

    name: str
    box: Box = Box.AUX
    time_slot: TimeSlot = TimeSlot.NONE
    role: Role = Role.INTERNAL

    def __str__(self):
        return self.name


def mode(name, box="aux", time_slot="none", role="internal"):
    """Build a :class:`ModeLabel` from plain strings."""
    return ModeLabel(name, Box(box), TimeSlot(time_slot), Role(role))


@dataclass(frozen=True)
class ProjectionOutcome:
    """Renormalized post-measurement state together with its probability."""

    state: "FockState"
    probability: float


class FockState:
    """Pure state over an ordered tuple of registered modes.

    Parameters
    ----------
    modes:
        Ordered mode labels; their order fixes the occupation-tuple layout.
    amplitudes:
        Sparse map from occupation tuples to complex amplitudes.  Entries
        with modulus below :data:`PRUNE_EPSILON` are dropped.
    n_total_max:
        Total-photon budget enforced on every stored configuration.
    """

    __slots__ = ("modes", "amplitudes", "n_total_max", "_index")

    def __init__(self, modes, amplitudes, n_total_max=DEFAULT_PHOTON_BUDGET):
        modes = tuple(modes)
        index = {}
        for i, label in enumerate(modes):
            if label in index or label.name in {m.name for m in modes[:i]}:
                raise DuplicateMode(f"duplicate mode label {label.name!r}")
            index[label] = i
        clean = {}
        n_modes = len(modes)
        for config, amp in amplitudes.items():
            config = tuple(int(n) for n in config)
            if len(config) != n_modes:
                raise BadParam(
                    f"occupation tuple {config} does not match {n_modes} modes"
                )
            if any(n < 0 for n in config):
                raise BadParam(f"negative occupation in {config}")
            if sum(config) > n_total_max:
                raise PhotonBudget(
                    f"configuration {config} exceeds photon budget {n_total_max}"
                )
            amp = complex(amp)
            if abs(amp) >= PRUNE_EPSILON:
                clean[config] = amp
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "amplitudes", clean)
        object.__setattr__(self, "n_total_max", int(n_total_max))
        object.__setattr__(self, "_index", index)

    def __setattr__(self, name, value):
        raise AttributeError("FockState is immutable")

    def index_of(self, label):
        """Position of ``label`` in the registered mode order."""
        try:
            return self._index[label]
        except KeyError:
            raise UnknownMode(f"mode {label.name!r} is not registered") from None

    def amplitude(self, config):
        return self.amplitudes.get(tuple(config), 0j)

    def norm(self):
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    @property
    def is_zero(self):
        return not self.amplitudes

    def normalized(self):
        """Unit-norm copy; the zero state is returned unchanged."""
        n = self.norm()
        if n < PRUNE_EPSILON:
            return FockState(self.modes, {}, self.n_total_max)
        return FockState(
            self.modes,
            {c: a / n for c, a in self.amplitudes.items()},
            self.n_total_max,
        )

    def scaled(self, factor):
        return FockState(
            self.modes,
            {c: a * factor for c, a in self.amplitudes.items()},
            self.n_total_max,
        )

    def __repr__(self):
        return (
            f"FockState({len(self.modes)} modes, {len(self.amplitudes)} "
            f"configurations, norm={self.norm():.6g})"
        )


def register_modes(labels, n_total_max=DEFAULT_PHOTON_BUDGET):
    """Return the vacuum state over ``labels``.

    Raises :class:`DuplicateMode` if any label (or label name) repeats.
    """
    labels = tuple(labels)
    if not labels:
        raise BadParam("at least one mode is required")
    vacuum = (0,) * len(labels)
    return FockState(labels, {vacuum: 1.0 + 0j}, n_total_max)


def basis_state(template, config):
    """Basis state with the given occupation tuple over ``template``'s modes."""
    return FockState(template.modes, {tuple(config): 1.0 + 0j}, template.n_total_max)


def inject_photon(state, label):
    """Apply the normalized creation operator on ``label``.

    Each configuration's count at the mode increments and its amplitude picks
    up the bosonic sqrt(n+1) factor; the result is renormalized.  Injecting
    into the vacuum yields the one-photon basis state.
    """
    pos = state.index_of(label)
    out = {}
    for config, amp in state.amplitudes.items():
        if sum(config) + 1 > state.n_total_max:
            raise PhotonBudget(
                f"injecting into {label.name!r} exceeds photon budget "
                f"{state.n_total_max}"
            )
        lifted = list(config)
        lifted[pos] += 1
        out[tuple(lifted)] = amp * math.sqrt(lifted[pos])
    return FockState(state.modes, out, state.n_total_max).normalized()


def superposition_source(state, weights):
    """Add one photon in a coherent superposition of modes.

    ``weights`` maps mode labels to complex amplitudes; the injected photon
    is sum_m w_m a†_m acting on the current state, renormalized afterwards.
    """
    if not weights:
        raise BadParam("superposition source needs at least one mode")
    positions = {state.index_of(m): complex(w) for m, w in weights.items()}
    out = defaultdict(complex)
    for config, amp in state.amplitudes.items():
        if sum(config) + 1 > state.n_total_max:
            raise PhotonBudget(
                f"source exceeds photon budget {state.n_total_max}"
            )
        for pos, w in positions.items():
            if w == 0:
                continue
            lifted = list(config)
            lifted[pos] += 1
            out[tuple(lifted)] += amp * w * math.sqrt(lifted[pos])
    result = FockState(state.modes, out, state.n_total_max)
    if result.is_zero:
        raise BadParam("superposition weights are all zero")
    return result.normalized()


def _check_unitary(u, k):
    u = np.asarray(u, dtype=complex)
    if u.shape != (k, k):
        raise BadParam(f"expected a {k}x{k} matrix, got shape {u.shape}")
    defect = np.max(np.abs(u.conj().T @ u - np.eye(k)))
    if defect > UNITARITY_TOL:
        raise NotUnitary(f"matrix deviates from unitarity by {defect:.3e}")
    return u


def apply_mode_unitary(state, labels, u):
    """Apply a k-mode unitary through the Fock-space homomorphism.

    Every creation operator on input mode i is rewritten as
    sum_j u[j, i] a†_j; products are expanded multinomially with sqrt(n!)
    normalization.  Total photon number is conserved exactly.
    """
    labels = tuple(labels)
    if len(set(labels)) != len(labels):
        raise BadParam("mode list for a unitary must not repeat")
    u = _check_unitary(u, len(labels))
    positions = [state.index_of(m) for m in labels]
    k = len(labels)
    columns = [u[:, i] for i in range(k)]

    out = defaultdict(complex)
    for config, amp in state.amplitudes.items():
        sub = tuple(config[p] for p in positions)
        if sum(sub) == 0:
            out[config] += amp
            continue
        norm_in = math.sqrt(math.prod(math.factorial(n) for n in sub))
        poly = {(0,) * k: amp / norm_in}
        for i, n in enumerate(sub):
            col = columns[i]
            for _ in range(n):
                grown = defaultdict(complex)
                for mono, coeff in poly.items():
                    for j in range(k):
                        cj = col[j]
                        if cj == 0:
                            continue
                        lifted = list(mono)
                        lifted[j] += 1
                        grown[tuple(lifted)] += coeff * cj
                poly = grown
        for mono, coeff in poly.items():
            weight = coeff * math.sqrt(
                math.prod(math.factorial(m) for m in mono)
            )
            if abs(weight) < PRUNE_EPSILON:
                continue
            target = list(config)
            for p, m in zip(positions, mono):
                target[p] = m
            out[tuple(target)] += weight
    return FockState(state.modes, out, state.n_total_max)


def apply_fock_phase(state, label, phases):
    """Multiply each configuration by ``phases[n]`` for its count at ``label``.

    Every entry must have unit modulus.  The list must cover the largest
    occupation present on the mode.
    """
    phases = [complex(p) for p in phases]
    for p in phases:
        if abs(abs(p) - 1.0) > UNITARITY_TOL:
            raise NotPhase(f"phase entry {p} does not have unit modulus")
    pos = state.index_of(label)
    out = {}
    for config, amp in state.amplitudes.items():
        n = config[pos]
        if n >= len(phases):
            raise NotPhase(
                f"phase list of length {len(phases)} does not cover "
                f"occupation {n}"
            )
        out[config] = amp * phases[n]
    return FockState(state.modes, out, state.n_total_max)


def inner_product(a, b):
    """Hermitian inner product <a|b> over identical mode lists."""
    if a.modes != b.modes:
        raise ModeMismatch("states are defined over different mode lists")
    small, big = (a, b) if len(a.amplitudes) <= len(b.amplitudes) else (b, a)
    total = 0j
    for config, amp in small.amplitudes.items():
        other = big.amplitudes.get(config)
        if other is None:
            continue
        if small is a:
            total += amp.conjugate() * other
        else:
            total += other.conjugate() * amp
    return total


def fidelity(a, b):
    """|<a|b>|² for normalized states (global phase drops out)."""
    return abs(inner_product(a, b)) ** 2


def project_pattern(state, pattern):
    """Project onto configurations matching a partial occupation pattern.

    ``pattern`` maps mode labels to required photon counts; unconstrained
    modes are left free.  A probability of zero is a valid outcome and
    returns the flagged zero state.
    """
    constraints = [(state.index_of(m), int(n)) for m, n in pattern.items()]
    kept = {
        config: amp
        for config, amp in state.amplitudes.items()
        if all(config[p] == n for p, n in constraints)
    }
    probability = sum(abs(a) ** 2 for a in kept.values())
    projected = FockState(state.modes, kept, state.n_total_max).normalized()
    return ProjectionOutcome(projected, float(probability))


def project_predicate(state, predicate):
    """Project onto configurations satisfying ``predicate(config)``.

    The predicate must depend on occupation numbers only, so the projector
    is Fock-diagonal.
    """
    kept = {c: a for c, a in state.amplitudes.items() if predicate(c)}
    probability = sum(abs(a) ** 2 for a in kept.values())
    projected = FockState(state.modes, kept, state.n_total_max).normalized()
    return ProjectionOutcome(projected, float(probability))


def project_onto(state, target):
    """Rank-one projection onto ``target`` (same full mode list)."""
    overlap = inner_product(target, state)
    return ProjectionOutcome(target, float(abs(overlap) ** 2))


def postselect_subsystem(state, target):
    """Project the modes of ``target`` onto it and return the rest.

    ``target`` is a normalized state over a proper subset of ``state``'s
    modes.  The returned outcome carries the renormalized conditional state
    of the remaining modes and the Born probability |(<t| ⊗ 1)|state>|².
    """
    sub_labels = set(target.modes)
    if not sub_labels or sub_labels == set(state.modes):
        raise BadPartition("target must cover a proper nonempty mode subset")
    sub_positions = [state.index_of(m) for m in target.modes]
    rest_positions = [
        i for i, m in enumerate(state.modes) if m not in sub_labels
    ]
    rest_modes = tuple(state.modes[i] for i in rest_positions)

    out = defaultdict(complex)
    for config, amp in state.amplitudes.items():
        sub = tuple(config[p] for p in sub_positions)
        t_amp = target.amplitudes.get(sub)
        if t_amp is None:
            continue
        rest = tuple(config[p] for p in rest_positions)
        out[rest] += t_amp.conjugate() * amp
    probability = sum(abs(a) ** 2 for a in out.values())
    conditional = FockState(rest_modes, out, state.n_total_max).normalized()
    return ProjectionOutcome(conditional, float(probability))


def schmidt_spectrum(state, partition):
    """Squared Schmidt coefficients across ``partition`` versus the rest.

    The amplitude map is reshaped into a matrix over the two configuration
    subspaces and its singular values are squared.  For a normalized state
    the spectrum is descending and sums to one; a product state gives [1].
    """
    part = set(partition)
    if not part or part == set(state.modes):
        raise BadPartition("partition must be a proper nonempty mode subset")
    left_positions = [state.index_of(m) for m in part]
    right_positions = [
        i for i, m in enumerate(state.modes) if m not in part
    ]

    left_index, right_index = {}, {}
    entries = []
    for config, amp in state.amplitudes.items():
        lc = tuple(config[p] for p in left_positions)
        rc = tuple(config[p] for p in right_positions)
        li = left_index.setdefault(lc, len(left_index))
        ri = right_index.setdefault(rc, len(right_index))
        entries.append((li, ri, amp))
    matrix = np.zeros((len(left_index), len(right_index)), dtype=complex)
    for li, ri, amp in entries:
        matrix[li, ri] = amp
    singular = np.linalg.svd(matrix, compute_uv=False)
    spectrum = [float(s) ** 2 for s in singular if s**2 > PRUNE_EPSILON]
    return spectrum
