"""Experiment orchestration: Monte Carlo estimation, statistical comparison,
and the suite of verification checks with one check id per acceptance
criterion.

Every check is deterministic given its seed: replica streams come from the
counter-based generator in rng, so reports are byte-identical across runs
and shard counts (runtimes excluded).
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import coupling, diffops, moments, qtasep, schur, vertex
from .core import ModelParams, Specialization
from .rng import stream


def mc_estimate(sampler, observable, budget: int, seeds) -> tuple:
    """Shard `budget` across seeds; sampler(seed, n) -> raw samples,
    observable(raw) -> value array.  Streaming mean/variance aggregation;
    deterministic given the seed list."""
    seeds = list(seeds)
    if budget < 1000:
        raise ValueError("budget must be >= 1000")
    shard = budget // len(seeds)
    count = 0
    total = 0.0
    total_sq = 0.0
    for s in seeds:
        vals = np.asarray(observable(sampler(s, shard)), dtype=float)
        count += vals.size
        total += float(vals.sum())
        total_sq += float((vals**2).sum())
    mean = total / count
    var = max(total_sq / count - mean**2, 0.0) * count / max(count - 1, 1)
    return mean, math.sqrt(var / count)


@dataclass
class ComparisonReport:
    mode: str  # EXACT_TV | CHI2 | KS
    statistic: float
    p_value: float | None
    passed: bool
    details: dict = field(default_factory=dict)


def distribution_compare(pmf_a, pmf_b, mode: str, **kw) -> ComparisonReport:
    """EXACT_TV for oracle-vs-oracle pmf dicts; CHI2 for empirical counts
    against an oracle pmf; KS for samples against a continuous cdf."""
    if mode == "EXACT_TV":
        keys = set(pmf_a) | set(pmf_b)
        if not keys:
            raise ValueError("empty support")
        tv = 0.5 * sum(abs(pmf_a.get(k, 0.0) - pmf_b.get(k, 0.0)) for k in keys)
        tol = kw.get("tol", 1e-10)
        return ComparisonReport("EXACT_TV", tv, None, tv <= tol)
    if mode == "CHI2":
        counts, oracle = pmf_a, pmf_b
        n = sum(counts.values())
        min_expected = kw.get("min_expected", 5.0)
        keys = sorted(oracle, key=lambda k: -oracle[k])
        pooled_obs, pooled_exp = [], []
        tail_obs = n
        tail_exp = float(n)
        for k in keys:
            e = n * oracle[k]
            if e >= min_expected and tail_exp - e > min_expected:
                pooled_obs.append(counts.get(k, 0))
                pooled_exp.append(e)
                tail_obs -= counts.get(k, 0)
                tail_exp -= e
            else:
                break
        pooled_obs.append(tail_obs)
        pooled_exp.append(tail_exp)
        chi2 = sum((o - e) ** 2 / e for o, e in zip(pooled_obs, pooled_exp))
        dof = max(len(pooled_obs) - 1, 1)
        p = float(stats.chi2.sf(chi2, dof))
        alpha = kw.get("alpha", 1e-4)
        return ComparisonReport(
            "CHI2", chi2, p, p > alpha, {"dof": dof, "cells": len(pooled_obs)}
        )
    if mode == "KS":
        samples, cdf = pmf_a, pmf_b
        vals = np.sort(np.asarray(samples, dtype=float))
        n = len(vals)
        F = np.array([cdf(v) for v in vals])
        ks = float(
            max(np.abs(np.arange(1, n + 1) / n - F).max(), np.abs(np.arange(n) / n - F).max())
        )
        tol = kw.get("tol", 0.05)
        return ComparisonReport("KS", ks, None, ks <= tol)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Parameter draws used across checks: the ranges keep every regime flag
# satisfied by construction (a*c < 1, min a > q max a, margins off endpoints)


def draw_params(rng, n_cols: int, n_rows: int, bernoulli: bool = False) -> ModelParams:
    q = rng.uniform(0.25, 0.55)
    a = rng.uniform(0.75, 1.25, n_cols)
    nu = rng.uniform(0.05, 0.5, n_cols)
    if bernoulli:
        nu[0] = 0.0
    u = -rng.uniform(0.3, 2.5, n_rows)
    return ModelParams(q=q, u=tuple(u), a=tuple(a), nu=tuple(nu))


@dataclass
class CheckResult:
    check_id: str
    passed: bool
    statistic: float
    tolerance: float
    runtime: float
    details: dict = field(default_factory=dict)

    def payload(self) -> dict:
        """Reproducible part of the report (runtime excluded)."""
        return {
            "check": self.check_id,
            "pass": bool(self.passed),
            "statistic": float(self.statistic),
            "tolerance": float(self.tolerance),
            "details": json.loads(json.dumps(self.details, default=float)),
        }


# --- the sixteen checks ----------------------------------------------------


def check_stochasticity(seed: int = 0, budget: int = 1000) -> CheckResult:
    """Vertex outcome weights sum to one for random admissible parameters."""
    t0 = time.time()
    rng = stream(seed, 1)
    worst = 0.0
    for _ in range(budget):
        q = rng.uniform(0.05, 0.95)
        u = -rng.uniform(0.01, 5.0)
        a = rng.uniform(0.05, 3.0)
        nu = rng.uniform(0.0, 0.999)
        g = int(rng.integers(0, 41))
        for j1 in (0, 1):
            outs = vertex.vertex_weight_row(u, a, nu, g, j1, q)
            worst = max(worst, abs(sum(o.weight for o in outs) - 1.0))
    return CheckResult(
        "stochasticity", worst <= 1e-12, worst, 1e-12, time.time() - t0
    )


def check_sum_to_one(seed: int = 0, budget: int = 10) -> CheckResult:
    """Finite sum of symmetrization weights with a zero column equals one."""
    t0 = time.time()
    rng = stream(seed, 2)
    worst = 0.0
    for _ in range(budget):
        p = draw_params(rng, 6, 4)
        for T in range(1, 5):
            for N in range(1, 5):
                s = vertex.sum_f_stoch_truncated(p, T, N)
                worst = max(worst, abs(s - 1.0))
    return CheckResult("sum-to-one", worst <= 1e-10, worst, 1e-10, time.time() - t0)


def check_sampler_pmf(seed: int = 0, budget: int = 10**6) -> CheckResult:
    """Empirical row-partition pmf against the symmetrization formula."""
    t0 = time.time()
    rng = stream(seed, 3)
    p = draw_params(rng, 40, 3)
    n_win = 40
    details = {}
    worst_p = 1.0
    heights = vertex.sample_quadrant_batch(p, vertex.STEP, (n_win, 3), budget, seed)
    key_max = 12
    for T in (1, 2, 3):
        m = heights[:, T, :n_win] - heights[:, T, 1:]
        enumerated = {
            parts: vertex.f_stoch(parts, p, T)
            for parts in vertex.row_partitions(T, key_max)
        }
        # encode each sample's partition as a base-(T+1) signature of the
        # per-column multiplicities; samples with any part beyond key_max
        # fall into the pooled tail cell (matched by the oracle's deficit)
        base = T + 1
        sig = np.zeros(budget, dtype=np.int64)
        overflow = np.zeros(budget, dtype=bool)
        for col in range(n_win):
            cnt = m[:, col]
            if col < key_max:
                sig = sig * base + cnt
            else:
                overflow |= cnt > 0
        vals, cts = np.unique(sig[~overflow], return_counts=True)
        lookup = dict(zip(vals.tolist(), cts.tolist()))
        counts = {}
        for parts in enumerated:
            mult = {}
            for xv in parts:
                mult[xv] = mult.get(xv, 0) + 1
            code = 0
            for col in range(key_max):
                code = code * base + mult.get(col + 1, 0)
            counts[parts] = lookup.get(code, 0)
        counts["__tail__"] = budget - sum(counts.values())
        rep = distribution_compare(counts, enumerated, "CHI2", alpha=1e-4)
        details[f"T={T}"] = {"chi2": rep.statistic, "p": rep.p_value}
        worst_p = min(worst_p, rep.p_value)
    return CheckResult(
        "sampler-pmf",
        worst_p > 1e-4,
        worst_p,
        1e-4,
        time.time() - t0,
        details,
    )


def check_operator_lemma(seed: int = 0, budget: int = 20) -> CheckResult:
    """Action of the conjugated operator on the truncated weight sums."""
    t0 = time.time()
    rng = stream(seed, 4)
    worst = 0.0
    for draw in range(budget):
        p = draw_params(rng, 4, 3)
        N = int(rng.integers(1, 4))
        T = int(rng.integers(1, 4))
        M = N
        u = p.u[:T]

        def partial_sum(pt):
            return sum(
                vertex._f_tilde_arrays(parts, u, pt.a, pt.nu, p.q, M)
                for parts in vertex.row_partitions(T, N)
            )

        base = diffops.EvaluablePoint(p.a[:M], p.nu[:M])
        lhs = diffops.apply_D(partial_sum, N, base, p.q)
        rhs = (1.0 - p.q**T * math.prod(p.nu[:N])) * partial_sum(base)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-30))
        # multilevel version at ell = 2: D_{N2} D_{N1} applied to the sum
        # multiplies each weight by the two-factor product observable
        N1 = int(rng.integers(1, N + 1))
        N2 = int(rng.integers(1, N1 + 1))
        lhs2 = diffops.apply_D(
            lambda pt: diffops.apply_D(partial_sum, N1, pt, p.q), N2, base, p.q
        )
        rhs2 = 0.0
        for parts in vertex.row_partitions(T, N):
            w = vertex._f_tilde_arrays(parts, u, base.a, base.nu, p.q, M)
            for j, Nj in enumerate((N1, N2), start=1):
                h = sum(1 for x in parts if x >= Nj + 1)
                w *= p.q**h - p.q ** (T + 2 - j) * math.prod(p.nu[:Nj])
            rhs2 += w
        worst = max(worst, abs(lhs2 - rhs2) / max(abs(rhs2), 1e-30))
    return CheckResult(
        "operator-lemma", worst <= 1e-9, worst, 1e-9, time.time() - t0
    )


def check_route_triangle(seed: int = 0, budget: int = 1) -> CheckResult:
    """Operator, quadrature, and residue evaluations of the moment formulas
    agree pairwise."""
    t0 = time.time()
    rng = stream(seed, 5)
    worst = 0.0
    for _ in range(budget):
        p = draw_params(rng, 4, 3)
        cases = [((n,), t) for n in (1, 2, 3) for t in (1, 2, 3)]
        cases += [
            ((n1, n2), t)
            for n1 in (1, 2, 3)
            for n2 in range(1, n1 + 1)
            for t in (1, 2, 3)
        ]
        for N_list, T in cases:
            op = diffops.operator_expectation(N_list, T, max(N_list), p)
            quad, _ = moments.moment_product_quadrature(N_list, T, p)
            res = moments.product_moment_residues(N_list, T, p)
            worst = max(worst, abs(op - quad), abs(quad - res))
            if all(n >= 1 for n in N_list):
                hres = moments.moment_height_residues(N_list, T, p)
                hrec = moments.height_moment_from_products(
                    N_list, T, p, lambda sub: (
                        1.0 if not sub else moments.moment_product_quadrature(sub, T, p)[0]
                    )
                )
                worst = max(worst, abs(hres - hrec))
    return CheckResult(
        "route-triangle", worst <= 1e-9, worst, 1e-9, time.time() - t0
    )


def check_moment_closure(seed: int = 0, budget: int = 10**6) -> CheckResult:
    """Residue-route joint q-moments against big Monte Carlo."""
    t0 = time.time()
    rng = stream(seed, 6)
    p = draw_params(rng, 10, 4)
    heights = vertex.sample_quadrant_batch(p, vertex.STEP, (10, 4), budget, seed)
    worst_dev = 0.0
    details = {}
    n_lists = [(n,) for n in (1, 2, 3, 4)]
    n_lists += [(n1, n2) for n1 in (1, 2, 3, 4) for n2 in range(1, n1 + 1)]
    for T in (1, 2, 3, 4):
        for N_list in n_lists:
            obs = np.ones(budget)
            for N in N_list:
                obs = obs * p.q ** heights[:, T, N].astype(float)
            mean = float(obs.mean())
            se = float(obs.std(ddof=1) / math.sqrt(budget))
            exact = moments.moment_height_residues(N_list, T, p)
            dev = abs(mean - exact) / se if se > 0 else 0.0
            worst_dev = max(worst_dev, dev)
            details[f"T={T},N={N_list}"] = round(dev, 3)
    return CheckResult(
        "moment-closure", worst_dev <= 4.0, worst_dev, 4.0, time.time() - t0, details
    )


def check_formal_identity(seed: int = 0, budget: int = 100) -> CheckResult:
    t0 = time.time()
    rng = stream(seed, 7)
    worst = 0.0
    for _ in range(budget):
        ell = int(rng.integers(1, 6))
        X = rng.uniform(-2, 2, ell)
        b = rng.uniform(-2, 2, ell)
        q = rng.uniform(0.05, 0.95)
        worst = max(worst, moments.formal_identity_check(ell, X, b, q))
    return CheckResult(
        "formal-identity", worst <= 1e-12, worst, 1e-12, time.time() - t0
    )


def check_qwhittaker_n1(seed: int = 0, budget: int = 1) -> CheckResult:
    """Nested-integral q-Whittaker moments against the series oracle, N=1."""
    t0 = time.time()
    rng = stream(seed, 8)
    worst = 0.0
    specs = [
        Specialization(alphas=(0.25,)),
        Specialization(betas=(0.7, 0.4)),
        Specialization(gamma=0.5),
        Specialization(alphas=(0.2, 0.1), betas=(0.5,), gamma=0.3),
    ]
    for rho in specs:
        a1 = float(rng.uniform(0.7, 1.2))
        q = float(rng.uniform(0.3, 0.6))
        pmf = moments.qwhittaker_n1_pmf(rho, a1, q, 250)
        for k in (1, 2, 3):
            oracle = sum(q ** (k * n) * w for n, w in enumerate(pmf))
            quad = moments.moment_qwhittaker(k, 1, rho, (a1,), q, method="quadrature")
            res = moments.moment_qwhittaker(k, 1, rho, (a1,), q, method="residues")
            worst = max(worst, abs(oracle - quad), abs(oracle - res))
    return CheckResult(
        "qwhittaker-n1", worst <= 1e-8, worst, 1e-8, time.time() - t0
    )


def check_commutation(seed: int = 0, budget: int = 1) -> CheckResult:
    """Truncated transition matrices commute entrywise."""
    t0 = time.time()
    rng = stream(seed, 9)
    worst = 0.0
    for L in (1, 2, 3):
        a = tuple(rng.uniform(0.7, 1.3, L))
        q = float(rng.uniform(0.3, 0.6))
        al1, al2 = rng.uniform(0.15, 0.4, 2) / max(a)
        be = float(rng.uniform(0.3, 1.5))
        box = (-5, 5)
        G1 = qtasep.transition_matrix("GEOM", a, L, box, alpha=float(al1), q=q)
        G2 = qtasep.transition_matrix("GEOM", a, L, box, alpha=float(al2), q=q)
        B = qtasep.transition_matrix("BER", a, L, box, beta=be, q=q)
        bg = B.matrix @ G1.matrix
        gb = G1.matrix @ B.matrix
        worst = max(worst, float(np.abs(bg - gb).max()))
        gg = G1.matrix @ G2.matrix - G2.matrix @ G1.matrix
        worst = max(worst, float(np.abs(gg).max()))
    return CheckResult(
        "commutation", worst <= 1e-10, worst, 1e-10, time.time() - t0
    )


def check_local_coupling(seed: int = 0, budget: int = 50) -> CheckResult:
    """Enumeration TV for the two local coupling propositions."""
    t0 = time.time()
    rng = stream(seed, 10)
    worst = 0.0
    for _ in range(budget):
        L = int(rng.integers(1, 4))
        a = tuple(rng.uniform(0.7, 1.3, L))
        q = float(rng.uniform(0.3, 0.6))
        alpha = float(rng.uniform(0.1, 0.5) / max(a))
        beta = float(rng.uniform(0.3, 1.5))
        x = []
        pos = int(rng.integers(-2, 3))
        for i in range(L):
            x.append(pos)
            pos -= int(rng.integers(1, 4))
        m = int(rng.integers(1, L + 1))
        ra = coupling.joint_law_check_prop_A(tuple(x), m, a, alpha, beta, q)
        rb = coupling.joint_law_check_prop_B(tuple(x), m, a, alpha, beta, q)
        worst = max(worst, ra.tv_distance + ra.truncation_deficit,
                    rb.tv_distance + rb.truncation_deficit)
    return CheckResult(
        "local-coupling", worst <= 1e-8, worst, 1e-8, time.time() - t0
    )


def _all_paths(n_steps: int):
    for moves in itertools.product("NT", repeat=n_steps):
        yield qtasep.TimeLikePath.from_moves("".join(moves))


def check_coupling_theorem(seed: int = 0, budget: int = 10) -> CheckResult:
    """Double-DP TV for the time-like-path theorem, all short paths plus
    random longer ones and one generalized step-Bernoulli instance."""
    t0 = time.time()
    rng = stream(seed, 11)
    p = draw_params(rng, 7, 5, bernoulli=True)
    worst = 0.0
    details = {}
    for n_steps in (0, 1, 2, 3):
        for path in _all_paths(n_steps):
            rep = coupling.theorem_capling_check(path, p)
            worst = max(worst, rep.tv_distance + rep.truncation_deficit)
    for _ in range(budget):
        moves = "".join(rng.choice(["N", "T"], 4))
        rep = coupling.theorem_capling_check(qtasep.TimeLikePath.from_moves(moves), p)
        worst = max(worst, rep.tv_distance + rep.truncation_deficit)
        details[moves] = rep.tv_distance
    # generalized step-Bernoulli, order 2
    nu2 = (0.0, 0.0) + p.nu[2:]
    p2 = ModelParams(q=p.q, u=p.u, a=p.a, nu=nu2)
    rep = coupling.theorem_capling_check(
        qtasep.TimeLikePath.from_moves("TNT"), p2, r=2
    )
    worst = max(worst, rep.tv_distance + rep.truncation_deficit)
    details["gen-r2"] = rep.tv_distance
    return CheckResult(
        "coupling-theorem", worst <= 1e-8, worst, 1e-8, time.time() - t0, details
    )


def check_distribution_equality(seed: int = 0, budget: int = 10**6) -> CheckResult:
    """Two-sample chi-square between h^Ber(N+1,T) and x_N(N,T)+N."""
    t0 = time.time()
    rng = stream(seed, 12)
    p = draw_params(rng, 6, 4, bernoulli=True)
    worst_p = 1.0
    details = {}
    heights = vertex.sample_quadrant_batch(
        p, vertex.STEP_BERNOULLI, (6, 4), budget, seed
    )
    for N, T in itertools.product((1, 2, 3, 4), (1, 2, 3, 4)):
        hv = heights[:, T, N]
        xv = qtasep.sample_mixed_batch(p, N, T, budget, seed + 77 + N + 10 * T)
        xs = xv[:, N - 1] + N
        k_top = int(max(hv.max(), xs.max()))
        c1 = np.bincount(hv.astype(np.int64), minlength=k_top + 1).astype(float)
        c2 = np.bincount(xs.astype(np.int64), minlength=k_top + 1).astype(float)
        # pool cells with few counts
        keep = (c1 + c2) >= 10
        o1 = np.append(c1[keep], c1[~keep].sum())
        o2 = np.append(c2[keep], c2[~keep].sum())
        n1, n2 = o1.sum(), o2.sum()
        pooled = (o1 + o2) / (n1 + n2)
        with np.errstate(divide="ignore", invalid="ignore"):
            chi2 = np.nansum(
                (o1 - n1 * pooled) ** 2 / (n1 * pooled)
                + (o2 - n2 * pooled) ** 2 / (n2 * pooled)
            )
        dof = max(int((pooled > 0).sum()) - 1, 1)
        pval = float(stats.chi2.sf(chi2, dof))
        details[f"N={N},T={T}"] = round(pval, 6)
        worst_p = min(worst_p, pval)
    return CheckResult(
        "distribution-equality", worst_p > 1e-4, worst_p, 1e-4,
        time.time() - t0, details,
    )


def check_schur_matching(seed: int = 0, budget: int = 10**6) -> CheckResult:
    """Vertex Monte Carlo of the infinite-product observable vs brute-force
    Schur expectation, special parameters nu_i = q."""
    t0 = time.time()
    rng = stream(seed, 13)
    from .core import INFINITY, q_pochhammer

    worst_dev = 0.0
    details = {}
    for N, T in itertools.product((1, 2, 3), (1, 2, 3)):
        q = 0.5
        u = -2.0
        a1 = 1.3
        s = schur.SchurSetup(q=q, u=u, a1=a1, N=N, T=T)
        p = ModelParams(
            q=q, u=(u,) * T, a=(a1,) + (1.0,) * (N + 1), nu=(0.0,) + (q,) * (N + 1)
        )
        heights = vertex.sample_quadrant_batch(
            p, vertex.STEP_BERNOULLI, (N + 2, T), budget, seed + N + 10 * T
        )
        hv = heights[:, T, N]
        for zeta in (0.3, 1.0):
            table = {
                h: 1.0 / q_pochhammer(-zeta * q**h, q, INFINITY)
                for h in set(hv.tolist())
            }
            vals = np.array([table[h] for h in hv.tolist()])
            mean = float(vals.mean())
            se = float(vals.std(ddof=1) / math.sqrt(budget))

            # product over all j >= 0: the lambda-dependent numerators stop
            # at j = T-1 but the (1 + zeta q^j) denominators continue
            denom = q_pochhammer(-zeta, q, INFINITY)

            def rhs_obs(lam):
                out = 1.0 / denom
                for j in range(T):
                    out *= 1.0 + zeta * q ** (lam[T - 1 - j] + j)
                return out

            exact = schur.schur_bruteforce_expectation(s, rhs_obs, part_cutoff=38)
            dev = abs(mean - exact) / se
            details[f"N={N},T={T},zeta={zeta}"] = round(dev, 3)
            worst_dev = max(worst_dev, dev)
    return CheckResult(
        "schur-matching", worst_dev <= 4.0, worst_dev, 4.0, time.time() - t0, details
    )


def check_fredholm_bruteforce(seed: int = 0, budget: int = 1) -> CheckResult:
    """Fredholm determinant length law against partition enumeration."""
    t0 = time.time()
    worst = 0.0
    cases = [(N, T, -2.0) for N in (1, 2, 3) for T in (1, 2, 3)]
    cases += [(3, 3, -1.0), (2, 3, -1.5)]
    for N, T, u in cases:
        s = schur.SchurSetup(q=0.5, u=u, a1=1.2, N=N, T=T)
        pmf = schur.schur_length_pmf(s, part_cutoff=40)
        cdf = schur.fredholm_length_cdf(s, range(T + 1), cutoff=25)
        acc = 0.0
        for k in range(T + 1):
            acc += pmf[k]
            worst = max(worst, abs(cdf[k] - acc))
    return CheckResult(
        "fredholm-bruteforce", worst <= 1e-6, worst, 1e-6, time.time() - t0
    )


def check_lln(seed: int = 0, budget: int = 200) -> CheckResult:
    """Law of large numbers at u=-1, eta=1, tau=2, M=400."""
    t0 = time.time()
    rep = schur.asymptotics_experiment(0.5, -1.0, 1.0, 1.0, 2.0, [400], budget, seed)
    err = rep.mean_err
    return CheckResult(
        "lln", err <= 0.05, err, 0.05, time.time() - t0,
        {"X_theory": rep.x_theory},
    )


def check_tracy_widom(seed: int = 0, budget: int = 500) -> CheckResult:
    """Tracy-Widom surrogate at M=2000 plus distribution-function sanity."""
    t0 = time.time()
    grid = np.linspace(-8, 5, 100)
    F = [schur.tracy_widom_cdf(r) for r in grid]
    mono = all(F[i] <= F[i + 1] + 1e-12 for i in range(len(F) - 1))
    tails = F[0] < 1e-4 and F[-1] > 1 - 1e-6
    stab = abs(schur.tracy_widom_cdf(-1.0, 48) - schur.tracy_widom_cdf(-1.0, 96))
    rep = schur.asymptotics_experiment(0.5, -1.0, 1.0, 1.0, 2.0, [2000], budget, seed)
    ks = rep.ks_stat
    passed = mono and tails and stab <= 1e-8 and ks <= 0.15
    return CheckResult(
        "tracy-widom", passed, ks, 0.15, time.time() - t0,
        {"monotone": mono, "tails": tails, "quad_stability": stab,
         "mean_err": rep.mean_err},
    )


CHECKS = {
    "stochasticity": check_stochasticity,
    "sum-to-one": check_sum_to_one,
    "sampler-pmf": check_sampler_pmf,
    "operator-lemma": check_operator_lemma,
    "route-triangle": check_route_triangle,
    "moment-closure": check_moment_closure,
    "formal-identity": check_formal_identity,
    "qwhittaker-n1": check_qwhittaker_n1,
    "commutation": check_commutation,
    "local-coupling": check_local_coupling,
    "coupling-theorem": check_coupling_theorem,
    "distribution-equality": check_distribution_equality,
    "schur-matching": check_schur_matching,
    "fredholm-bruteforce": check_fredholm_bruteforce,
    "lln": check_lln,
    "tracy-widom": check_tracy_widom,
}

DEFAULT_SUITE = [c for c in CHECKS if c != "tracy-widom"]
FULL_SUITE = list(CHECKS)


def run_suite(spec, out_dir=None, seed: int = 0, budget_scale: float = 1.0):
    """Run a list of checks (suite name, list of ids, or a JSON spec file);
    returns (exit_code, results).  Writes per-check JSON and a summary CSV
    when out_dir is given."""
    import pathlib

    if isinstance(spec, str):
        if spec == "default":
            check_ids = DEFAULT_SUITE
        elif spec == "full":
            check_ids = FULL_SUITE
        else:
            doc = json.loads(pathlib.Path(spec).read_text())
            check_ids = doc["checks"]
            seed = doc.get("seed", seed)
            budget_scale = doc.get("budget_scale", budget_scale)
    else:
        check_ids = list(spec)
    results = []
    for cid in check_ids:
        if cid not in CHECKS:
            raise KeyError(f"unknown check id {cid!r}")
        fn = CHECKS[cid]
        kwargs = {"seed": seed}
        if budget_scale != 1.0:
            import inspect

            default_budget = inspect.signature(fn).parameters["budget"].default
            kwargs["budget"] = max(int(default_budget * budget_scale), 1)
        results.append(fn(**kwargs))
    if out_dir is not None:
        out = pathlib.Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for r in results:
            doc = r.payload()
            doc["runtime_s"] = round(r.runtime, 3)
            (out / f"{r.check_id}.json").write_text(json.dumps(doc, indent=2))
        lines = ["check,pass,statistic,tolerance,runtime_s"]
        for r in results:
            lines.append(
                f"{r.check_id},{int(r.passed)},{r.statistic},{r.tolerance},"
                f"{round(r.runtime, 3)}"
            )
        (out / "summary.csv").write_text("\n".join(lines) + "\n")
    exit_code = 0 if all(r.passed for r in results) else 1
    return exit_code, results
