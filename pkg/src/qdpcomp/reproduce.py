"""Seeded certification runs for each named composition result.

Every runner returns a JSON-ready dict with a boolean ``pass`` plus the
numbers that decided it. Randomness comes only from ``seed``; instance ``j``
of a batch uses ``default_rng(seed + offset + j)`` with a fixed per-runner
offset, so each report is a pure function of its arguments.
"""
from __future__ import annotations

import math

import numpy as np

from . import __version__, accountant as acc, linops
from .adversary import falsify, parity_test
from .channels import (
    PHI_PLUS, NeighborRelation, bell_joint, bell_relation, compose_tensor, depolarizing,
    ket, marginal_channel, product_relation, proj, random_channel,
)
from .divergences import (
    classical_renyi, d_sandwiched, log_mmgf, measured_outcome_pairs, verify_qdp,
)
from .ensembles import random_pure, rng_for

NAMES = ("no-go", "locc-basic", "mmgf-additivity", "qma-measured", "advanced-pure", "lostar")
SCOPES = {
    "no-go": "all-povm",
    "locc-basic": "one-way-locc",
    "mmgf-additivity": "all-povm",
    "qma-measured": "all-povm",
    "advanced-pure": "all-povm",
    "lostar": "lo-star",
}

TOL = 1e-9


def _report(name: str, seed: int, passed: bool, **checks) -> dict:
    return {"name": name, "pass": bool(passed), "version": __version__, "seed": int(seed),
            "scope": SCOPES[name], "checks": checks}


def certified_delta(channel, relation, eps: float) -> float:
    """Tightest delta at ``eps``, confirmed by the exact verifier."""
    verdict = verify_qdp(channel, relation, eps, 0.0)
    delta = verdict.delta_required
    if not verify_qdp(channel, relation, eps, delta).passed:
        raise RuntimeError("verifier rejected its own delta_min")
    return delta


# -- individual results -----------------------------------------------------

def no_go(seed: int = 42, trials: int = 1000) -> dict:
    joint = bell_joint()
    rel = bell_relation()
    marg = [marginal_channel(joint, [2, 2], [i]) for i in (0, 1)]
    marginal_delta = [verify_qdp(m, rel, 0.0, 0.0).delta_required for m in marg]
    marginal_outputs = [[float(np.abs(m(a) - np.eye(2) / 2).max()) for _, _, a, _ in rel.oriented()]
                        for m in marg]
    joint_delta, fidelity = {}, {}
    for eps in (0.0, 1.0, 10.0):
        v = verify_qdp(joint, rel, eps, 0.0)
        joint_delta[repr(eps)] = v.delta_required
        fidelity[repr(eps)] = float((PHI_PLUS.conj() @ v.witness @ PHI_PLUS).real
                                    / max(np.trace(v.witness).real, 1.0))
    search = falsify(10.0, 0.9, joint, rel, "all-povm", trials=trials, seed=seed)
    passed = (
        max(marginal_delta) <= 1e-12
        and min(joint_delta.values()) >= 1 - 1e-12
        and min(fidelity.values()) >= 1 - 1e-9
        and search.found
        and search.worst_margin >= 0.1 - TOL
    )
    return _report(
        "no-go", seed, passed,
        marginal_delta_at_eps0=marginal_delta,
        marginal_max_deviation_from_maximally_mixed=max(max(x) for x in marginal_outputs),
        joint_delta=joint_delta,
        witness_fidelity_phi_plus=fidelity,
        falsifier={"eps": 10.0, "delta": 0.9, "found": search.found,
                   "worst_margin": search.worst_margin, "origin": search.witness.get("origin")},
    )


def _random_qubit_instance(rng, n_pairs: int = 1):
    ch = random_channel(2, 2, 2, rng)
    rel = NeighborRelation([(random_pure(2, rng), random_pure(2, rng)) for _ in range(n_pairs)])
    return ch, rel


def locc_basic(seed: int = 42, instances: int = 20, trials: int = 10_000, probe_trials: int = 500) -> dict:
    rows = []
    for j in range(instances):
        rng = rng_for(seed, 10_000 + j)
        (c1, r1), (c2, r2) = _random_qubit_instance(rng), _random_qubit_instance(rng)
        e1, e2 = (float(x) for x in rng.uniform(0.05, 1.0, size=2))
        d1, d2 = certified_delta(c1, r1, e1), certified_delta(c2, r2, e2)
        res = acc.basic_compose_locc([(e1, d1), (e2, d2)])
        comp = compose_tensor([c1, c2])
        prel = product_relation([r1, r2])
        rep = falsify(res.eps, res.delta, comp, prel, "one-way-locc", trials=trials,
                      seed=seed + 100_000 * (j + 1), out_dims=[2, 2])
        probe = falsify(res.eps, res.delta, comp, prel, "all-povm", trials=probe_trials,
                        seed=seed + 100_000 * (j + 1), out_dims=[2, 2])
        rows.append({
            "eps": [e1, e2], "delta": [d1, d2],
            "composed": [res.eps, res.delta],
            "found": rep.found, "worst_margin": rep.worst_margin,
            "corollary_holds": res.delta <= res.extras["delta_corollary"] + 1e-15,
            "global_probe_worst_margin": probe.worst_margin,
        })
    passed = all(not r["found"] and r["corollary_holds"] for r in rows)
    return _report("locc-basic", seed, passed,
                   instances=instances, trials_per_instance=trials,
                   worst_margin=max(r["worst_margin"] for r in rows),
                   global_probe_worst_margin=max(r["global_probe_worst_margin"] for r in rows),
                   rows=rows)


def mmgf_additivity(seed: int = 42, instances: int = 100, lambdas=acc.DEFAULT_LAMBDAS) -> dict:
    max_err = 0.0
    max_profile_err = 0.0
    for j in range(instances):
        rng = rng_for(seed, 20_000 + j)
        (c1, r1), (c2, r2) = _random_qubit_instance(rng), _random_qubit_instance(rng)
        comp = compose_tensor([c1, c2])
        (a1, b1), (a2, b2) = r1.pairs[0], r2.pairs[0]
        rho, sigma = linops.tensor(a1.mat, a2.mat), linops.tensor(b1.mat, b2.mat)
        for lam in lambdas:
            lhs = log_mmgf(rho, sigma, lam, comp)
            rhs = log_mmgf(a1.mat, b1.mat, lam, c1) + log_mmgf(a2.mat, b2.mat, lam, c2)
            max_err = max(max_err, abs(lhs - rhs))
        summed = acc.profile_add([acc.moments_profile(c1, r1, lambdas), acc.moments_profile(c2, r2, lambdas)])
        direct = acc.moments_profile(comp, product_relation([r1, r2]), lambdas)
        max_profile_err = max(max_profile_err,
                              max(abs(x - y) for x, y in zip(summed.log_mmgf_sup, direct.log_mmgf_sup)))
    passed = max_err <= 1e-9 and max_profile_err <= 1e-9
    return _report("mmgf-additivity", seed, passed, instances=instances, lambdas=list(lambdas),
                   max_abs_log_error=max_err, max_profile_error=max_profile_err)


def qma_measured(seed: int = 42, instances: int = 50, povms: int = 500, alphas=(2.0, 3.0, 5.0)) -> dict:
    grid = tuple(sorted(set(acc.DEFAULT_LAMBDAS) | set(alphas)))
    worst_gap = -math.inf
    violations = 0
    for j in range(instances):
        rng = rng_for(seed, 30_000 + j)
        ch, rel = _random_qubit_instance(rng, n_pairs=2)
        profile = acc.moments_profile(ch, rel, grid)
        bounds = {alpha: acc.qma_to_measured_rdp(profile, alpha) for alpha in alphas}
        for k, (_, _, a, b) in enumerate(rel.oriented()):
            outcomes = measured_outcome_pairs(ch(a), ch(b), n=povms,
                                              seed=seed + 1_000_000 * (j + 1) + 1000 * k)
            for alpha in alphas:
                lower = max(classical_renyi(p, q, alpha) for p, q in outcomes)
                worst_gap = max(worst_gap, lower - bounds[alpha])
                violations += lower > bounds[alpha] + TOL
    return _report("qma-measured", seed, violations == 0, instances=instances,
                   povms_per_pair=povms, alphas=list(alphas), violations=int(violations),
                   max_lower_minus_bound=worst_gap)


def depolarizing_for_eps(eps: float):
    """Qubit depolarizing channel that is exactly (eps, 0)-QDP on {|0>, |1>}."""
    p = 2 / (1 + math.exp(eps))
    return depolarizing(p), bell_relation()


def advanced_pure(seed: int = 42, k: int = 100, eps: float = 0.1, delta: float = 1e-5) -> dict:
    res = acc.advanced_compose_pure([eps] * k, delta)
    premise_eps = 0.5
    ch, rel = depolarizing_for_eps(premise_eps)
    certified = verify_qdp(ch, rel, premise_eps, 0.0).passed
    premise = {}
    for alpha in range(2, 11):
        worst = max(d_sandwiched(ch(a), ch(b), alpha) for _, _, a, b in rel.oriented())
        premise[str(alpha)] = {"d_sandwiched": worst,
                               "bound": min(premise_eps**2 * alpha / 2, premise_eps)}
    premise_ok = all(v["d_sandwiched"] <= v["bound"] + 1e-12 for v in premise.values())
    # end-to-end: three certified copies, composed guarantee checked exactly
    small = acc.advanced_compose_pure([premise_eps] * 3, 1e-3)
    comp = compose_tensor([ch] * 3)
    end_to_end = verify_qdp(comp, product_relation([rel] * 3), small.eps, small.delta)
    passed = (abs(res.eps - 5.29852) <= 1e-4 and res.eps < res.extras["eps_basic"]
              and certified and premise_ok and end_to_end.passed)
    return _report("advanced-pure", seed, passed,
                   composed={"k": k, "eps_i": eps, "delta": delta, "eps": res.eps,
                             "eps_basic": res.extras["eps_basic"]},
                   renyi_premise={"eps": premise_eps, "certified": certified, "by_alpha": premise},
                   end_to_end={"eps": small.eps, "delta": small.delta,
                               "delta_required": end_to_end.delta_required, "pass": end_to_end.passed})


def lostar(seed: int = 42, trials: int = 10_000) -> dict:
    parity = parity_test().operator()
    expected = proj(ket("01")) + proj(ket("10"))
    parity_ok = bool(np.array_equal(parity, expected))
    arith = acc.advanced_compose_lostar_approx([(0.5, 0.001)] * 3, 0.01)
    arith_ok = abs(arith.delta - 0.0129670) <= 1e-6

    # pure instance: three certified depolarizing channels
    eps_list = [0.3, 0.5, 0.8]
    pure_parts = [depolarizing_for_eps(e) for e in eps_list]
    pure_ok = all(verify_qdp(c, r, e, 0.0).passed for (c, r), e in zip(pure_parts, eps_list))
    pure = acc.advanced_compose_lostar_pure(eps_list, 0.05)
    pure_run = falsify(pure.eps, pure.delta, compose_tensor([c for c, _ in pure_parts]),
                       product_relation([r for _, r in pure_parts]), "lo-star",
                       trials=trials, seed=seed, out_dims=[2, 2, 2])

    # approximate instance: random channels with certified (eps_i, delta_i)
    rng = rng_for(seed, 40_000)
    parts = [_random_qubit_instance(rng) for _ in range(3)]
    eps_a = [float(x) for x in rng.uniform(0.1, 0.6, size=3)]
    params = [(e, certified_delta(c, r, e)) for (c, r), e in zip(parts, eps_a)]
    approx = acc.advanced_compose_lostar_approx(params, 0.01)
    approx_run = falsify(approx.eps, approx.delta, compose_tensor([c for c, _ in parts]),
                         product_relation([r for _, r in parts]), "lo-star",
                         trials=trials, seed=seed + 500_000, out_dims=[2, 2, 2])
    passed = parity_ok and arith_ok and pure_ok and not pure_run.found and not approx_run.found
    return _report("lostar", seed, passed,
                   parity_operator_exact=parity_ok,
                   delta_bar={"value": arith.delta, "expected": 0.0129670},
                   pure={"eps": eps_list, "composed": [pure.eps, pure.delta], "certified": pure_ok,
                         "found": pure_run.found, "worst_margin": pure_run.worst_margin},
                   approx={"params": [list(p) for p in params], "composed": [approx.eps, approx.delta],
                           "found": approx_run.found, "worst_margin": approx_run.worst_margin},
                   trials_per_instance=trials)


RUNNERS = {
    "no-go": no_go,
    "locc-basic": locc_basic,
    "mmgf-additivity": mmgf_additivity,
    "qma-measured": qma_measured,
    "advanced-pure": advanced_pure,
    "lostar": lostar,
}


def reproduce(name: str, seed: int = 42) -> dict:
    if name not in RUNNERS:
        raise KeyError(f"unknown result {name!r}; choose from {', '.join(NAMES)}")
    return RUNNERS[name](seed=seed)
