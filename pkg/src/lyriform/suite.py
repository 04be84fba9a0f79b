"""Randomized property suite for the distance family, and oracle cross-checks.

Each check is named by a short tag (``wincrease``, ``lp2`` ...) so a failure
points at the inequality that broke.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree, shortest_path

from .measures import ProbabilityMeasure, mixture, pushforward
from .metric_core import FiniteMetricSpace
from .oracle import bottleneck_bruteforce, lp_subset_oracle, transport_vertices
from .ot_distances import (
    Distance,
    bottleneck_match,
    levy_prokhorov,
    quasiconvexity_modulus,
    wasserstein_1_dual,
    wasserstein_inf,
    wasserstein_p,
)

P_LADDER = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)


def random_space(rng: np.random.Generator, n: int) -> FiniteMetricSpace:
    """Random metric on ``n`` points: Euclidean points or a weighted graph metric."""
    if n == 1:
        return FiniteMetricSpace(np.zeros((1, 1)))
    kind = rng.integers(3)
    if kind < 2:
        x = rng.random((n, int(rng.integers(1, 4)))) * rng.uniform(0.5, 3.0)
        d = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2)
        if np.any(d[~np.eye(n, dtype=bool)] <= 1e-9):
            return random_space(rng, n)
        return FiniteMetricSpace(d, coords=x)
    w = rng.uniform(0.1, 2.0, (n, n))
    w = np.triu(w, 1)
    keep = rng.random((n, n)) < 0.4
    tree = minimum_spanning_tree(w).toarray() > 0
    adj = np.where(keep | tree, w, 0.0)
    d = shortest_path(adj, method="D", directed=False)
    return FiniteMetricSpace(np.minimum(d, d.T))


def random_weights(rng: np.random.Generator, n: int) -> np.ndarray:
    choice = rng.integers(3)
    if choice == 0:
        return rng.random(n) + 1e-3
    w = rng.dirichlet(np.full(n, 0.5 if choice == 1 else 1.0))
    if choice == 2 and n > 2:
        w[rng.random(n) < 0.3] = 0.0
        if w.sum() == 0:
            w[0] = 1.0
    return w


def random_measure(space: FiniteMetricSpace, rng: np.random.Generator) -> ProbabilityMeasure:
    return ProbabilityMeasure(space, random_weights(rng, space.size))


@dataclass
class CheckRow:
    tag: str
    checked: int = 0
    failures: int = 0
    worst: float = 0.0  # largest violation (or error) seen
    note: str = ""
    examples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, violation: float, tol: float, info=None) -> None:
        self.checked += 1
        self.worst = max(self.worst, float(violation))
        if violation > tol:
            self.failures += 1
            if len(self.examples) < 3 and info is not None:
                self.examples.append(info)

    def to_json(self) -> dict:
        return {"tag": self.tag, "checked": self.checked, "failures": self.failures, "worst": self.worst, "passed": self.passed, "note": self.note}


def _rows(tags):
    return {t: CheckRow(t) for t in tags}


SUITE_TAGS = (
    "wincrease", "winf2", "winf2gap", "lp2", "lpdom", "duality", "coupling",
    "symmetry", "triangle", "convex", "midpt", "qc", "pushforward",
)


def run_suite(seed: int = 0, instances: int = 30, max_points: int = 10, tol: float = 1e-7) -> list[CheckRow]:
    """Run every property on ``instances`` random spaces with up to ``max_points`` points."""
    rows = _rows(SUITE_TAGS)
    kinds = [Distance("w1"), Distance("wp", 2.0), Distance("winf"), Distance("lp")]
    for inst in range(instances):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(inst,)))
        n = int(rng.integers(2, max_points + 1))
        space = random_space(rng, n)
        diam = space.diam
        mu, nu, xi = (random_measure(space, rng) for _ in range(3))
        info = {"instance": inst}

        ws = {}
        for p in P_LADDER:
            val, cpl = wasserstein_p(mu, nu, p)
            ws[p] = val
            rows["coupling"].record(cpl.marginal_error(), 1e-9, info)
        winf, cpl = wasserstein_inf(mu, nu)
        rows["coupling"].record(cpl.marginal_error(), 1e-9, info)
        lp = levy_prokhorov(mu, nu)
        w1 = ws[1.0]

        for i, p in enumerate(P_LADDER):
            for q in P_LADDER[i:]:
                rows["wincrease"].record(ws[p] - ws[q], tol, info)
            rows["wincrease"].record(ws[p] - diam ** (1 - 1 / p) * w1 ** (1 / p), tol, info)
        rows["winf2"].record(max(ws[p] - winf for p in P_LADDER), tol, info)
        rows["winf2gap"].record(abs(ws[64.0] - winf) - 0.05 * diam, 0.0, info)
        rows["lp2"].record(lp * lp - w1, tol, info)
        rows["lp2"].record(w1 - (diam + 1) * lp, tol, info)
        rows["lpdom"].record(lp - winf, tol, info)
        rows["duality"].record(abs(wasserstein_1_dual(mu, nu)[0] - w1), 1e-8, info)

        for dist in kinds:
            a, b, c = dist(mu, nu), dist(nu, xi), dist(mu, xi)
            rows["symmetry"].record(abs(a - dist(nu, mu)), tol, info)
            rows["triangle"].record(c - a - b, tol, info)

        # convexity and quasiconvexity over three pairs
        sig = [random_measure(space, rng) for _ in range(3)]
        tau = [random_measure(space, rng) for _ in range(3)]
        lam = rng.dirichlet(np.ones(3))
        lam = lam / lam.sum()
        mix_s, mix_t = mixture(lam, sig), mixture(lam, tau)
        w1s = [wasserstein_p(s, t, 1.0)[0] for s, t in zip(sig, tau)]
        rows["convex"].record(wasserstein_p(mix_s, mix_t, 1.0)[0] - float(lam @ w1s), tol, info)
        for dist in kinds:
            h = quasiconvexity_modulus(dist.p, diam)
            worst = max(dist(s, t) for s, t in zip(sig, tau))
            rows["qc"].record(dist(mix_s, mix_t) - h(worst), tol, info)

        # midpoint balance: (s + t')/2 = (s' + t)/2 by construction
        a_, b_, c_, d_ = (random_measure(space, rng) for _ in range(4))
        s1, t2 = mixture([0.5, 0.5], [a_, b_]), mixture([0.5, 0.5], [c_, d_])
        s2, t1 = mixture([0.5, 0.5], [a_, c_]), mixture([0.5, 0.5], [b_, d_])
        rows["midpt"].record(abs(wasserstein_p(s1, t1, 1.0)[0] - wasserstein_p(s2, t2, 1.0)[0]), tol, info)

        # pushforward by a random point map into the same space
        fmap = rng.integers(n, size=n)
        img = space.dist[np.ix_(fmap, fmap)]
        off = ~np.eye(n, dtype=bool)
        lip = float((img[off] / space.dist[off]).max()) if n > 1 else 0.0
        fm, fn = pushforward(fmap, mu), pushforward(fmap, nu)
        for dist in kinds:
            k = lip if dist.kind != "lp" else max(lip, 1.0)
            rows["pushforward"].record(dist(fm, fn) - k * dist(mu, nu), tol, info)
        # isometric relabeling onto a permuted copy preserves every distance
        perm = rng.permutation(n)
        copy = FiniteMetricSpace(space.dist[np.ix_(np.argsort(perm), np.argsort(perm))])
        pm, pn = pushforward(perm, mu, copy), pushforward(perm, nu, copy)
        for dist in kinds:
            rows["pushforward"].record(abs(dist(pm, pn) - dist(mu, nu)), tol, info)

    rows["lp2"].note = "lp^2 <= W1 <= (diam + 1) lp"
    rows["lpdom"].note = "W_inf >= lp"
    rows["wincrease"].note = "W_p <= W_q <= diam^(1-1/q) W_1^(1/q)"
    rows["winf2"].note = "W_p <= W_inf"
    rows["winf2gap"].note = "|W_64 - W_inf| <= 0.05 diam (heuristic, fails when little mass sits at the bottleneck)"
    rows["pushforward"].note = "Lipschitz point maps; LP uses max(K, 1)"
    return list(rows.values())


VERIFY_CHECKS = ("transport", "bottleneck", "lp", "dual")


def run_verify(seed: int = 0, instances: int = 100, checks=VERIFY_CHECKS) -> list[CheckRow]:
    """Compare the solvers with the brute-force oracles on random small instances."""
    rows = {}
    for name in checks:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(VERIFY_CHECKS.index(name),)))
        row = CheckRow(name)
        for inst in range(instances):
            info = {"instance": inst}
            if name == "transport":
                space = random_space(rng, int(rng.integers(2, 7)))
                mu, nu = _small_support(space, rng, 4), _small_support(space, rng, 4)
                p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
                row.record(abs(wasserstein_p(mu, nu, p)[0] - transport_vertices(mu, nu, p)), 1e-9, info)
            elif name == "bottleneck":
                size = int(rng.integers(1, 8))
                space = random_space(rng, int(rng.integers(2, 9)))
                xs = rng.integers(space.size, size=size)
                ys = rng.integers(space.size, size=size)
                val, perm = bottleneck_match(space, xs, ys)
                ref, _ = bottleneck_bruteforce(space, xs, ys)
                achieved = space.dist[xs, ys[perm]].max()
                row.record(max(abs(val - ref), abs(achieved - val)), 0.0, info)
            elif name == "lp":
                space = random_space(rng, int(rng.integers(2, 6)))
                mu, nu = random_measure(space, rng), random_measure(space, rng)
                row.record(abs(levy_prokhorov(mu, nu) - lp_subset_oracle(mu, nu)), 2e-4, info)
            elif name == "dual":
                space = random_space(rng, int(rng.integers(2, 9)))
                mu, nu = random_measure(space, rng), random_measure(space, rng)
                row.record(abs(wasserstein_1_dual(mu, nu)[0] - wasserstein_p(mu, nu, 1.0)[0]), 1e-8, info)
            else:
                raise ValueError(f"unknown check {name!r}")
        rows[name] = row
    return list(rows.values())


def _small_support(space, rng, k):
    w = random_weights(rng, space.size)
    if np.count_nonzero(w) > k:
        keep = rng.choice(np.flatnonzero(w), size=k, replace=False)
        mask = np.zeros(space.size, dtype=bool)
        mask[keep] = True
        w = np.where(mask, w, 0.0)
    return ProbabilityMeasure(space, w)


def format_table(rows: list[CheckRow]) -> str:
    lines = [f"{'check':<12} {'result':<6} {'checked':>8} {'failures':>8} {'worst':>12}  note"]
    for r in rows:
        lines.append(
            f"{r.tag:<12} {'PASS' if r.passed else 'FAIL':<6} {r.checked:>8} {r.failures:>8} {r.worst:>12.3e}  {r.note}"
        )
    return "\n".join(lines)
