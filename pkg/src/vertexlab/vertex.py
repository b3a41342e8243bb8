"""Vertex weights, quadrant sampler, height function, and the exact
symmetrization probabilities of the row partition law.

The sampler always runs the step-boundary model on the full quadrant; the
step-Bernoulli and generalized step-Bernoulli boundaries are the same model
with the leading nu parameters pinned to zero, read off at shifted columns.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import INFINITY, ModelParams, Partition, q_pochhammer
from .rng import stream

U_COLLISION_TOL = 1e-12


@dataclass(frozen=True)
class VertexOutcome:
    """One admissible output (i2, j2) of a vertex with its weight."""

    i1: float
    j1: int
    i2: float
    j2: int
    weight: float


def vertex_weight_row(u: float, a: float, nu: float, i1, j1: int, q: float):
    """Admissible outcomes of a single vertex with inputs (i1, j1).

    i1 may be the INFINITY sentinel (q^g -> 0 analytically), used by the
    coupling construction.  Weights follow the four-entry table of the
    stochastic model and sum to one; a negative weight means the parameters
    are outside the stochastic regime and is rejected.
    """
    if j1 not in (0, 1):
        raise ValueError(f"j1 must be 0 or 1, got {j1}")
    if i1 != INFINITY and (i1 < 0 or i1 != int(i1)):
        raise ValueError(f"i1 must be a nonnegative integer or INFINITY, got {i1}")
    qg = 0.0 if i1 == INFINITY else q ** int(i1)
    denom = 1.0 - a * u
    if denom == 0.0:
        raise ValueError(f"singular vertex weight: a*u = 1 for a={a}, u={u}")
    if j1 == 0:
        outcomes = [VertexOutcome(i1, 0, i1, 0, (1.0 - a * u * qg) / denom)]
        if i1 == INFINITY or i1 > 0:
            down = INFINITY if i1 == INFINITY else i1 - 1
            outcomes.append(VertexOutcome(i1, 0, down, 1, -a * u * (1.0 - qg) / denom))
    else:
        up = INFINITY if i1 == INFINITY else i1 + 1
        outcomes = [
            VertexOutcome(i1, 1, i1, 1, (nu * qg - a * u) / denom),
            VertexOutcome(i1, 1, up, 0, (1.0 - nu * qg) / denom),
        ]
    for o in outcomes:
        if o.weight < -1e-14:
            raise ValueError(
                f"negative vertex weight {o.weight} at (i1,j1)=({i1},{j1}) "
                f"for u={u}, a={a}, nu={nu}: outside the stochastic regime"
            )
    return outcomes


@dataclass(frozen=True)
class Boundary:
    """Boundary condition: r leading nu parameters pinned to zero.

    r=0 is the step boundary, r=1 step-Bernoulli, r>=2 the generalized
    step-Bernoulli of order r.
    """

    r: int = 0

    def validate(self, p: ModelParams):
        if any(p.nu[i] != 0.0 for i in range(self.r)):
            raise ValueError(
                f"boundary of order r={self.r} requires nu_1..nu_{self.r} = 0"
            )


STEP = Boundary(0)
STEP_BERNOULLI = Boundary(1)


def gen_step_bernoulli(r: int) -> Boundary:
    if r < 1:
        raise ValueError("generalized step-Bernoulli order must be >= 1")
    return Boundary(r)


@dataclass
class HeightField:
    """Height values h(N, T) on 1 <= N <= n_max+1, 0 <= T <= t_max.

    values[T, N-1] = h(N, T).  Paths that leave the right edge of the window
    while horizontal are counted in every h(N, T') with T' at or above their
    exit row, so heights inside the window are exact.
    """

    n_max: int
    t_max: int
    values: np.ndarray
    boundary: Boundary = STEP
    exit_bound: float = 0.0

    def h(self, N: int, T: int) -> int:
        return int(self.values[T, N - 1])

    def to_csv(self) -> str:
        lines = ["N,T,h"]
        for T in range(self.t_max + 1):
            for N in range(1, self.n_max + 2):
                lines.append(f"{N},{T},{int(self.values[T, N - 1])}")
        return "\n".join(lines) + "\n"


def _window_check(p: ModelParams, window):
    n_max, t_max = window
    if n_max < 1 or t_max < 0:
        raise ValueError(f"window too small: {window}")
    if n_max > len(p.a) or t_max > len(p.u):
        raise ValueError("window exceeds available parameters")
    return n_max, t_max


def _horizontal_exit_bound(p: ModelParams, n_max: int, t_max: int) -> float:
    """Upper bound on the probability that any path crosses the whole window
    horizontally (per-vertex right-passing probability is maximal at g=0)."""
    total = 0.0
    for t in range(t_max):
        u = p.u[t]
        prob = 1.0
        for n in range(n_max):
            prob *= (p.nu[n] - p.a[n] * u) / (1.0 - p.a[n] * u)
        total += prob
    return total


def sample_quadrant(
    p: ModelParams, boundary: Boundary, window, seed: int
) -> HeightField:
    """Markovian sweep sampler of the quadrant model on the given window.

    Identical seed, parameters, and window give a bit-identical HeightField.
    """
    boundary.validate(p)
    n_max, t_max = _window_check(p, window)
    rng = stream(seed, 0)
    m = [0] * n_max
    values = np.zeros((t_max + 1, n_max + 1), dtype=np.int64)
    exited = 0
    for T in range(1, t_max + 1):
        u = p.u[T - 1]
        j = 1
        for N in range(1, n_max + 1):
            outcomes = vertex_weight_row(u, p.a[N - 1], p.nu[N - 1], m[N - 1], j, p.q)
            draw = rng.random()
            pick = outcomes[-1]
            acc = 0.0
            for o in outcomes:
                acc += o.weight
                if draw < acc:
                    pick = o
                    break
            m[N - 1] = int(pick.i2)
            j = pick.j2
        exited += j
        suffix = 0
        values[T, n_max] = exited
        for N in range(n_max, 0, -1):
            suffix += m[N - 1]
            values[T, N - 1] = suffix + exited
    return HeightField(
        n_max,
        t_max,
        values,
        boundary,
        exit_bound=_horizontal_exit_bound(p, n_max, t_max),
    )


def sample_quadrant_batch(
    p: ModelParams, boundary: Boundary, window, n_samples: int, seed: int
) -> np.ndarray:
    """Vectorized sampler: returns heights of shape (n_samples, t_max+1, n_max+1)
    with heights[s, T, N-1] = h(N, T).  Used by the Monte Carlo checks."""
    boundary.validate(p)
    n_max, t_max = _window_check(p, window)
    rng = stream(seed, 0)
    S = int(n_samples)
    m = np.zeros((S, n_max), dtype=np.int32)
    heights = np.zeros((S, t_max + 1, n_max + 1), dtype=np.int16)
    exited = np.zeros(S, dtype=np.int32)
    for T in range(1, t_max + 1):
        u = p.u[T - 1]
        j = np.ones(S, dtype=bool)
        for N in range(1, n_max + 1):
            a, nu = p.a[N - 1], p.nu[N - 1]
            g = m[:, N - 1]
            qg = p.q ** g
            denom = 1.0 - a * u
            first = rng.random(S) < np.where(
                j, (nu * qg - a * u) / denom, (1.0 - a * u * qg) / denom
            )
            m[:, N - 1] = np.where(j, np.where(first, g, g + 1), np.where(first, g, g - 1))
            j = np.where(j, first, ~first)
        exited += j
        suffix = np.cumsum(m[:, ::-1], axis=1)[:, ::-1]
        heights[:, T, :n_max] = suffix + exited[:, None]
        heights[:, T, n_max] = exited
    return heights


def row_partitions(t: int, cap: int):
    """All partitions with exactly t parts, each in [1, cap], as tuples."""
    if t == 0:
        yield ()
        return
    for combo in itertools.combinations_with_replacement(range(1, cap + 1), t):
        yield tuple(sorted(combo, reverse=True))


def _check_u_distinct(u):
    scale = max(abs(x) for x in u) if u else 1.0
    for i in range(len(u)):
        for j in range(i + 1, len(u)):
            if abs(u[i] - u[j]) < U_COLLISION_TOL * scale:
                raise ValueError(f"u collision: u[{i}] ~ u[{j}] = {u[i]}")


def _f_stoch_arrays(parts, u, a, nu, q: float) -> float:
    t = len(parts)
    if t == 0:
        return 1.0
    _check_u_distinct(u)
    mult: dict = {}
    for x in parts:
        mult[x] = mult.get(x, 0) + 1
    pref = 1.0
    for r, k in mult.items():
        pref *= q_pochhammer(nu[r - 1], q, k) / q_pochhammer(q, q, k)
    # slot_factor[i][s]: the i-th slot's product with spectral parameter u_s
    slot_factor = [
        [
            (1.0 - q)
            / (1.0 - a[parts[i] - 1] * u[s])
            * math.prod(
                (nu[j] - a[j] * u[s]) / (1.0 - a[j] * u[s])
                for j in range(parts[i] - 1)
            )
            for s in range(t)
        ]
        for i in range(t)
    ]
    total = 0.0
    for sigma in itertools.permutations(range(t)):
        term = 1.0
        for al in range(t):
            for be in range(al + 1, t):
                term *= (u[sigma[al]] - q * u[sigma[be]]) / (
                    u[sigma[al]] - u[sigma[be]]
                )
        for i in range(t):
            term *= slot_factor[i][sigma[i]]
        total += term
    return pref * total


def f_stoch(kappa, p: ModelParams, T: int) -> float:
    """Probability P(mu^(T) = kappa) under the step boundary, by the exact
    T!-term symmetrized formula.  Intended for small T only (oracle use)."""
    parts = tuple(Partition(tuple(kappa)).parts)
    if len(parts) != T or (parts and parts[-1] < 1):
        raise ValueError("kappa must have exactly T parts, all >= 1")
    if parts and parts[0] > len(p.a):
        raise ValueError("kappa exceeds available columns")
    return _f_stoch_arrays(parts, p.u[:T], p.a, p.nu, p.q)


def _f_tilde_arrays(parts, u, a, nu, q: float, M: int) -> float:
    """Denominator-cleared weight Phi_M * F^stoch, with the (1 - a_j u) factors
    cancelled inside the symmetrand so the result is finite even at
    a_j u_i = 1."""
    t = len(parts)
    if t == 0:
        return 1.0
    _check_u_distinct(u)
    mult: dict = {}
    for x in parts:
        mult[x] = mult.get(x, 0) + 1
    pref = 1.0
    for r, k in mult.items():
        pref *= q_pochhammer(nu[r - 1], q, k) / q_pochhammer(q, q, k)
    slot_factor = [
        [
            (1.0 - q)
            * math.prod((nu[j] - a[j] * u[s]) for j in range(parts[i] - 1))
            * math.prod((1.0 - a[j] * u[s]) for j in range(parts[i], M))
            for s in range(t)
        ]
        for i in range(t)
    ]
    total = 0.0
    for sigma in itertools.permutations(range(t)):
        term = 1.0
        for al in range(t):
            for be in range(al + 1, t):
                term *= (u[sigma[al]] - q * u[sigma[be]]) / (
                    u[sigma[al]] - u[sigma[be]]
                )
        for i in range(t):
            term *= slot_factor[i][sigma[i]]
        total += term
    return pref * total


def f_tilde(kappa, p: ModelParams, T: int, M: int) -> float:
    """Phi_M(u_1..u_T) * f_stoch(kappa): a polynomial in the (a, nu) once
    M >= kappa_1."""
    parts = tuple(Partition(tuple(kappa)).parts)
    if len(parts) != T or (parts and parts[-1] < 1):
        raise ValueError("kappa must have exactly T parts, all >= 1")
    if parts and M < parts[0]:
        raise ValueError(f"M = {M} must be >= kappa_1 = {parts[0]}")
    if M > len(p.a):
        raise ValueError("M exceeds available columns")
    return _f_tilde_arrays(parts, p.u[:T], p.a, p.nu, p.q, M)


def sum_f_stoch_truncated(p: ModelParams, T: int, N: int) -> float:
    """Sum of f_stoch over kappa_1 <= N+1 with the column N+1 parameters
    replaced by a=nu=0, which pins all paths inside the first N+1 columns;
    the result is exactly 1."""
    if N + 1 > len(p.a):
        a = p.a[:N] + (0.0,)
        nu = p.nu[:N] + (0.0,)
    else:
        a = p.a[:N] + (0.0,) + p.a[N + 1 :]
        nu = p.nu[:N] + (0.0,) + p.nu[N + 1 :]
    total = 0.0
    for parts in row_partitions(T, N + 1):
        total += _f_stoch_arrays(parts, p.u[:T], a, nu, p.q)
    return total
