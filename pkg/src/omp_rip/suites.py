"""Randomized verification suites behind ``omp-rip verify``.

Instance ``i`` of a suite run with base seed ``b`` uses seed ``b + i``, so
any failing instance can be replayed alone with ``--instances 1 --seed``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from ._parallel import parallel_map
from .harness import gen_gaussian_matrix, make_rng, sphere_noise
from .objective import QuadraticObjective, SensingProblem
from .omp import OmpConfig, omp_run
from .rsc import RscProfile, build_profile, proposition1_check
from .theory import (
    SLACK,
    TargetSignal,
    condition_eq4_min_s,
    corollary1_check,
    lemma1_oracle,
    lemma2_oracle,
    lemma3_oracle,
    verify_corollary2,
    verify_theorem1,
)

__all__ = ["SUITES", "SuiteResult", "run_suite", "lemma_instance", "theorem1_instance", "corollaries_instance"]

LEMMA_N, LEMMA_D, LEMMA_KMAX = 8, 12, 3
NOISE_LEVELS = (0.0, 0.01, 0.1, 1.0)
IDENTITY_D = 31
IDENTITY_NOISE = (0.0, 0.01, 0.1)
TALL_N, TALL_D = 200, 12


def _random_target(rng, d, kmax) -> TargetSignal:
    kbar = int(rng.integers(1, kmax + 1))
    support = rng.choice(d, size=kbar, replace=False)
    xbar = np.zeros(d)
    if rng.random() < 0.5:
        mags = np.ones(kbar)
    else:
        mags = 0.5 ** np.arange(kbar, dtype=float)
    xbar[support] = rng.choice((-1.0, 1.0), size=kbar) * mags * rng.uniform(0.5, 2.0)
    return TargetSignal.from_vector(xbar)


def lemma_instance(seed: int) -> dict:
    """One random quadratic instance, all three lemmas at every admissible level.

    Levels run from each lemma's minimum up to ``n``; beyond ``n`` the lower
    constant is zero by rank and the statements are vacuous.
    """
    rng = make_rng(seed)
    A = gen_gaussian_matrix(LEMMA_N, LEMMA_D, seed)
    target = _random_target(rng, LEMMA_D, LEMMA_KMAX)
    noise = NOISE_LEVELS[int(rng.integers(len(NOISE_LEVELS)))]
    y = A @ target.xbar + sphere_noise(LEMMA_N, noise, rng)
    F = sorted(int(i) for i in rng.choice(LEMMA_D, size=int(rng.integers(0, 4)), replace=False))
    obj = QuadraticObjective.from_arrays(A, y)
    rsc = build_profile(A, LEMMA_N, "exact")

    missing = set(target.Fbar) - set(F)
    union = set(target.Fbar) | set(F)
    checks = {}
    oracles = (
        ("lemma1", lemma1_oracle, max(1, len(missing))),
        ("lemma2", lemma2_oracle, max(1, len(union))),
        ("lemma3", lemma3_oracle, max(1, len(union))),
    )
    for name, oracle, s_min in oracles:
        if name == "lemma3" and not missing:
            checks[name] = {"levels": [], "max_violation": 0.0}
            continue
        levels = list(range(s_min, LEMMA_N + 1))
        worst = max(oracle(obj, target, F, s, rsc) for s in levels)
        checks[name] = {"levels": levels, "max_violation": worst}
    return {
        "seed": seed,
        "kbar": target.kbar,
        "Fbar": list(target.Fbar),
        "F": F,
        "noise_level": noise,
        "checks": checks,
        "max_violation": max(c["max_violation"] for c in checks.values()),
    }


def theorem1_instance(seed: int, index: int) -> dict:
    """Even instances: ``A = I_31``, ``xbar = 7 e_0``; odd: tall Gaussian ``200 x 12``."""
    rng = make_rng(seed)
    if index % 2 == 0:
        d = IDENTITY_D
        A = np.eye(d)
        xbar = np.zeros(d)
        xbar[0] = 7.0
        target = TargetSignal.from_vector(xbar)
        noise = IDENTITY_NOISE[(index // 2) % len(IDENTITY_NOISE)]
        family = "identity31"
    else:
        d = TALL_D
        A = gen_gaussian_matrix(TALL_N, d, seed, normalize_columns=True)
        target = _random_target(rng, d, 2)
        noise = NOISE_LEVELS[int(rng.integers(len(NOISE_LEVELS)))]
        family = "tall-gaussian"
    y = A @ target.xbar + sphere_noise(A.shape[0], noise, rng)
    obj = QuadraticObjective.from_arrays(A, y)
    rsc = build_profile(A, d, "exact")
    if family == "identity31":
        s = IDENTITY_D
    else:
        s = condition_eq4_min_s(target.Fbar, (), rsc, allow_beyond_d=True)
    report = verify_theorem1(obj, target, omp_run(obj, OmpConfig(k0=s - target.kbar)), s, rsc)
    return {
        "seed": seed,
        "family": family,
        "noise_level": noise,
        "report": report.to_dict(),
        "max_violation": report.violation,
        "asserted": report.asserted,
    }


def corollaries_instance(seed: int, index: int) -> dict:
    """Run-length arithmetic, the noise-level bound and eps_s bounds."""
    rng = make_rng(seed)
    violations = {}

    # run-length condition with rho_plus/rho_minus = 2 and with rho = 1
    kbar = 1 + index % 3
    ratio2 = RscProfile.constant(1.0, 2.0, 1000)
    s_min = condition_eq4_min_s(range(kbar), (), ratio2)
    expected = math.ceil((1 + 8 * math.log(40)) * kbar)
    verdict = corollary1_check(2.0, 1.0, kbar)
    ok = s_min == expected and s_min <= 31 * kbar and verdict.holds and verdict.k0 == 30 * kbar
    ok = ok and condition_eq4_min_s([0], (), RscProfile.constant(1.0, 1.0, 32)) == 13
    violations["corollary1_arithmetic"] = 0.0 if ok else math.inf

    # noise-level bound on the identity family and a tall Gaussian family
    if index % 2 == 0:
        A = np.eye(IDENTITY_D)
        xbar = np.zeros(IDENTITY_D)
        xbar[int(rng.integers(IDENTITY_D))] = 1.0
        noise = (0.0, 0.05, 0.1)[index // 2 % 3]
    else:
        A = gen_gaussian_matrix(TALL_N, TALL_D, seed, normalize_columns=True)
        xbar = _random_target(rng, TALL_D, 1).xbar
        noise = NOISE_LEVELS[int(rng.integers(len(NOISE_LEVELS)))]
    target = TargetSignal.from_vector(xbar)
    y = A @ xbar + sphere_noise(A.shape[0], noise, rng)
    p = SensingProblem(A, y)
    rsc = build_profile(A, 0, "exact", levels=[target.kbar, 31 * target.kbar])
    result = omp_run(QuadraticObjective(p), OmpConfig(k0=30 * target.kbar))
    rep = verify_corollary2(p, target, result, rsc)
    violations["corollary2"] = rep.violation

    # eps_s and its three bounds, suboptimality measured exactly
    A = gen_gaussian_matrix(LEMMA_N, 10, seed)
    t = _random_target(rng, 10, 2)
    y = A @ t.xbar + sphere_noise(LEMMA_N, 0.3, rng)
    obj = QuadraticObjective.from_arrays(A, y)
    s = 2
    best = min(
        obj.value(obj.restricted_minimize(S))
        for S in _subsets(10, min(10, t.kbar + s))
    )
    epsbar = max(0.0, obj.value(t.xbar) - best)
    rho_plus = build_profile(A, 0, "exact", levels=[s])(s)[1]
    try:
        proposition1_check(obj, t.xbar, s, rho_plus, epsbar, slack=SLACK)
        violations["proposition1"] = 0.0
    except AssertionError:
        violations["proposition1"] = math.inf

    return {
        "seed": seed,
        "corollary2": rep.to_dict(),
        "violations": violations,
        "max_violation": max(violations.values()),
    }


def _subsets(d, k):
    from itertools import combinations
    return combinations(range(d), k)


def _lemmas(base, i):
    return lemma_instance(base + i)


def _theorem1(base, i):
    return theorem1_instance(base + i, i)


def _corollaries(base, i):
    return corollaries_instance(base + i, i)


SUITES = {"lemmas": _lemmas, "theorem1": _theorem1, "corollaries": _corollaries}


@dataclass
class SuiteResult:
    name: str
    instances: list = field(default_factory=list)

    @property
    def max_violation(self) -> float:
        return max((r["max_violation"] for r in self.instances), default=0.0)

    @property
    def failures(self) -> int:
        return sum(r["max_violation"] > SLACK for r in self.instances)

    def worst(self) -> dict | None:
        return max(self.instances, key=lambda r: r["max_violation"], default=None)

    def aggregate(self) -> dict:
        return {"instances": len(self.instances), "failures": self.failures,
                "max_violation": self.max_violation}


def run_suite(name: str, instances: int, seed: int, jobs: int = 1) -> SuiteResult:
    fn = partial(SUITES[name], seed)
    return SuiteResult(name, parallel_map(fn, range(instances), jobs))
