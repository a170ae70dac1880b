"""Independent reference implementations used to check the package.

Everything here is written as plain loops straight from the system model,
with no imports from the package internals, so agreement is meaningful.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def ref_uncertainty_bound(kappa: float, h_norm: float) -> float:
    return kappa * kappa + 2.0 * kappa * h_norm


def ref_sinr_tables(w, rho, q, h, theta, sigma):
    """Nominal / worst-low / worst-high SINR per (RRH, codebook, user).

    w: (B, N, K, M) beams, h: (B, N, K, M) nominal channels, theta: (B, N, K)
    protection bounds, q: (N, C) codebook supports, rho: (B, C, K) schedule.
    Only users sharing a codebook interfere; same-RRH co-codebook users are
    the intra term, every other RRH's co-codebook beams are the inter term.
    """
    B, N, K, M = w.shape
    C = q.shape[1]
    nominal = np.zeros((B, C, K))
    low = np.zeros((B, C, K))
    high = np.zeros((B, C, K))
    for b in range(B):
        for c in range(C):
            for k in range(K):
                sig_nom = sig_low = sig_high = 0.0
                int_nom = int_low = int_high = 0.0
                for n in range(N):
                    if not q[n, c]:
                        continue
                    own = abs(np.dot(w[b, n, k], h[b, n, k])) ** 2
                    pw = float(np.sum(np.abs(w[b, n, k]) ** 2))
                    prot = theta[b, n, k] * pw
                    sig_nom += own
                    sig_low += max(0.0, own - prot)
                    sig_high += own + prot
                    # only co-codebook users interfere; cross-codebook
                    # collisions on a shared subcarrier are resolved by the
                    # sparse-code receiver
                    for b2 in range(B):
                        for k2 in range(K):
                            if not rho[b2, c, k2]:
                                continue
                            if b2 == b and k2 == k:
                                continue
                            cross = abs(np.dot(w[b2, n, k2], h[b2, n, k])) ** 2
                            pw2 = float(np.sum(np.abs(w[b2, n, k2]) ** 2))
                            prot2 = theta[b2, n, k] * pw2
                            int_nom += cross
                            int_high += cross + prot2
                            int_low += max(0.0, cross - prot2)
                nominal[b, c, k] = sig_nom / (int_nom + sigma)
                low[b, c, k] = sig_low / (int_high + sigma)
                high[b, c, k] = sig_high / (int_low + sigma)
    return nominal, low, high


def ref_reuse_count(rho, q):
    N = q.shape[0]
    B, C, K = rho.shape
    counts = np.zeros(N, dtype=int)
    for n in range(N):
        for b in range(B):
            for c in range(C):
                for k in range(K):
                    if q[n, c] and rho[b, c, k]:
                        counts[n] += 1
    return counts


def sample_ball_errors(rng, kappa, m, count):
    """Uniform-direction draws with radius uniform on [0, kappa]."""
    raw = rng.normal(size=(count, m)) + 1j * rng.normal(size=(count, m))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    return raw * (rng.uniform(0.0, kappa, size=(count, 1)))


def monte_carlo_rate_range(w, rho, q, h, kappa, sigma, draws, seed):
    """Observed min/max rate per scheduled triple over random error sets.

    Every link error is redrawn each round inside its radius-kappa ball, the
    true rates are evaluated with no protection terms, and the pointwise
    envelope over rounds is returned.  The worst-case brackets must contain
    this envelope.
    """
    rng = np.random.default_rng(seed)
    B, N, K, M = w.shape
    C = q.shape[1]
    lo = {}
    hi = {}
    triples = [
        (b, c, k)
        for b in range(B)
        for c in range(C)
        for k in range(K)
        if rho[b, c, k]
    ]
    for _ in range(draws):
        err = sample_ball_errors(rng, kappa, M, B * N * K).reshape(B, N, K, M)
        h_true = h + err
        zero_theta = np.zeros((B, N, K))
        nom, _, _ = ref_sinr_tables(w, rho, q, h_true, zero_theta, sigma)
        for t in triples:
            r = math.log2(1.0 + nom[t])
            lo[t] = min(lo.get(t, r), r)
            hi[t] = max(hi.get(t, r), r)
    return lo, hi


def single_link_optimum(h, kappa, power, sigma):
    """Best worst-case rate of one isolated link under a power cap.

    The protected received power is |w.h|^2 - (kappa^2 + 2 kappa |h|) |w|^2,
    maximized by the matched direction at full power.
    """
    hn = float(np.linalg.norm(h))
    prot = kappa * kappa + 2.0 * kappa * hn
    return math.log2(1.0 + power * max(0.0, hn * hn - prot) / sigma)


def brute_force_assignment(
    r_hat,
    r_bar,
    power_cost,
    q,
    reuse_limit,
    power_caps,
    fronthaul_caps,
    slice_min,
    slice_of_user,
    single_codebook,
    allowed=None,
):
    """Lexicographically smallest optimum over ALL subsets of allowed triples.

    Returns (best_triples, best_value) or None when no subset meets every
    constraint.  Exponential; intended for tiny instances only.
    """
    B, C, K = r_hat.shape
    N = q.shape[0]
    if allowed is None:
        allowed = np.ones((B, C, K), dtype=bool)
    cand = [
        (b, c, k)
        for b in range(B)
        for c in range(C)
        for k in range(K)
        if allowed[b, c, k]
    ]
    best = None
    for size in range(len(cand) + 1):
        for combo in itertools.combinations(cand, size):
            rrh_of = {}
            ok = True
            for b, c, k in combo:
                if k in rrh_of and rrh_of[k] != b:
                    ok = False
                    break
                rrh_of[k] = b
            if not ok:
                continue
            if single_codebook:
                if len({k for _, _, k in combo}) != len(combo):
                    continue
            for n in range(N):
                if sum(1 for _, c, _ in combo if q[n, c]) > reuse_limit:
                    ok = False
                    break
            if not ok:
                continue
            for b in range(B):
                if sum(power_cost[t] for t in combo if t[0] == b) > power_caps[b] + 1e-12:
                    ok = False
                    break
                if sum(r_bar[t] for t in combo if t[0] == b) > fronthaul_caps[b] + 1e-12:
                    ok = False
                    break
            if not ok:
                continue
            for v, r_min in enumerate(slice_min):
                got = sum(r_hat[t] for t in combo if slice_of_user[t[2]] == v)
                if got < r_min - 1e-12:
                    ok = False
                    break
            if not ok:
                continue
            value = float(np.sum(np.sort([r_hat[t] for t in combo]))) if combo else 0.0
            key = (-value, tuple(sorted(combo)))
            if best is None or key < best[0]:
                best = (key, tuple(sorted(combo)), value)
    if best is None:
        return None
    return best[1], best[2]
