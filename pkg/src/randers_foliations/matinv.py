"""Invariants sigma_lambda of tuples of square matrices.

For matrices A_1, ..., A_k of common size m and a multi-index
lam = (lam_1, ..., lam_k) with |lam| <= m, sigma_lambda(A_1, ..., A_k) is the
coefficient of t_1^lam_1 * ... * t_k^lam_k in det(I + t_1 A_1 + ... + t_k A_k).
For a single matrix these are the elementary symmetric functions of its
eigenvalues; sigma_1 is the trace, sigma_m the determinant.

Two independent routes are provided:

* ``sigma_via_determinant`` evaluates the determinant on the integer grid
  {0, ..., m}^k and recovers the coefficient by exact multivariate polynomial
  interpolation (Vandermonde solve per variable).  This is the oracle; it is
  used directly for k >= 3.
* ``sigma_single`` / ``sigma_pair`` compute the same coefficients from traces
  of matrix words (Newton's identities for k = 1, a truncated
  exp-trace-log expansion for k = 2).

``newton_transform`` implements T_0 = I, T_r = sigma_r(A) I - A T_{r-1}, and
``verify_appendix_identities`` samples random tuples and measures the residual
of every algebraic identity the rest of the package relies on.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

__all__ = [
    "sigma_single",
    "sigma_pair",
    "sigma_multi",
    "sigma_via_determinant",
    "newton_transform",
    "verify_appendix_identities",
]

MAX_DIM = 16


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] < 1:
        raise ValueError("matrix dimension must be >= 1")
    if A.shape[0] > MAX_DIM:
        raise ValueError(f"matrix dimension {A.shape[0]} exceeds supported maximum {MAX_DIM}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def _check_tuple(mats: Sequence) -> list[np.ndarray]:
    if len(mats) == 0:
        raise ValueError("need at least one matrix")
    out = [_as_square(A) for A in mats]
    m = out[0].shape[0]
    for A in out[1:]:
        if A.shape[0] != m:
            raise ValueError("all matrices in a tuple must share the same dimension")
    return out


def sigma_single(A, k: int) -> float:
    """Elementary symmetric function sigma_k(A) via Newton's identities."""
    A = _as_square(A)
    m = A.shape[0]
    if not 0 <= k <= m:
        raise ValueError(f"order k={k} out of range [0, {m}]")
    # power sums p_i = tr(A^i), then e_k = (1/k) sum (-1)^(i-1) e_{k-i} p_i
    p = np.empty(k + 1)
    P = np.eye(m)
    for i in range(1, k + 1):
        P = P @ A
        p[i] = np.trace(P)
    e = np.empty(k + 1)
    e[0] = 1.0
    for r in range(1, k + 1):
        s = 0.0
        for i in range(1, r + 1):
            s += (-1) ** (i - 1) * e[r - i] * p[i]
        e[r] = s / r
    return float(e[k])


def _poly2_mul(P: np.ndarray, Q: np.ndarray, max_total: int) -> np.ndarray:
    """Product of bivariate coefficient arrays, truncated at total degree max_total."""
    n = max_total + 1
    out = np.zeros((n, n))
    for i in range(min(P.shape[0], n)):
        for j in range(min(P.shape[1], n - i)):
            c = P[i, j]
            if c == 0.0:
                continue
            ii = min(n - i, Q.shape[0])
            for a in range(ii):
                jj = min(n - i - a - j, Q.shape[1] - 0)
                if jj <= 0:
                    continue
                out[i + a, j : j + jj] += c * Q[a, :jj]
    return out


def sigma_pair(A, B, lam: Sequence[int]) -> float:
    """sigma_(i,j)(A, B) from traces of words in A, B (exp of tr log expansion)."""
    A, B = _check_tuple([A, B])
    m = A.shape[0]
    i0, j0 = int(lam[0]), int(lam[1])
    if i0 < 0 or j0 < 0 or i0 + j0 > m:
        raise ValueError(f"multi-index {tuple(lam)} out of range for dimension {m}")
    if i0 + j0 == 0:
        return 1.0
    # L = tr log(I + sA + tB) truncated at total degree m.  The matrix
    # coefficients of (sA + tB)^n are accumulated degree by degree.
    n = m + 1
    L = np.zeros((n, n))
    terms = {(1, 0): A.copy(), (0, 1): B.copy()}
    for p, M in terms.items():
        L[p] += np.trace(M)
    power = terms
    for deg in range(2, m + 1):
        nxt: dict[tuple[int, int], np.ndarray] = {}
        for (i, j), M in power.items():
            for (di, dj), base in (((1, 0), A), ((0, 1), B)):
                key = (i + di, j + dj)
                prod = M @ base
                if key in nxt:
                    nxt[key] += prod
                else:
                    nxt[key] = prod
        power = nxt
        sign = (-1) ** (deg + 1)
        for p, M in power.items():
            L[p] += sign * np.trace(M) / deg
    # D = exp(L), truncated
    D = np.zeros((n, n))
    D[0, 0] = 1.0
    term = np.zeros((n, n))
    term[0, 0] = 1.0
    for q in range(1, m + 1):
        term = _poly2_mul(term, L, m) / q
        D += term
    return float(D[i0, j0])


def sigma_via_determinant(mats: Sequence, lam: Sequence[int]) -> float:
    """Oracle: multivariate interpolation of det(I + sum t_i A_i) on {0..m}^k.

    Exact (up to float roundoff) for any tuple; independent of the trace-based
    fast paths.
    """
    mats = _check_tuple(mats)
    lam = tuple(int(x) for x in lam)
    if len(lam) != len(mats):
        raise ValueError("multi-index length must match the number of matrices")
    if any(x < 0 for x in lam):
        raise ValueError("multi-index entries must be nonnegative")
    m = mats[0].shape[0]
    if sum(lam) > m:
        raise ValueError(f"|lambda| = {sum(lam)} exceeds matrix dimension {m}")
    k = len(mats)
    shape = (m + 1,) * k
    vals = np.empty(shape)
    eye = np.eye(m)
    for idx in np.ndindex(*shape):
        M = eye.copy()
        for t, A in zip(idx, mats):
            if t:
                M += t * A
        vals[idx] = np.linalg.det(M)
    # V[p, q] = p^q on nodes p = 0..m; solve along each axis
    V = np.vander(np.arange(m + 1, dtype=float), increasing=True)
    coeff = vals
    for axis in range(k):
        moved = np.moveaxis(coeff, axis, 0)
        flat = moved.reshape(m + 1, -1)
        solved = np.linalg.solve(V, flat)
        coeff = np.moveaxis(solved.reshape(moved.shape), 0, axis)
    return float(coeff[lam])


def sigma_multi(mats: Sequence, lam: Sequence[int]) -> float:
    """sigma_lambda(A_1, ..., A_k); reduces to sigma_single when k == 1.

    Zero entries of the multi-index are dropped first (the corresponding
    matrices cannot contribute).  Trace fast paths are used for k <= 2, the
    interpolation oracle for k >= 3.
    """
    mats = _check_tuple(mats)
    lam = tuple(int(x) for x in lam)
    if len(lam) != len(mats):
        raise ValueError("multi-index length must match the number of matrices")
    if any(x < 0 for x in lam):
        raise ValueError("multi-index entries must be nonnegative")
    m = mats[0].shape[0]
    if sum(lam) > m:
        raise ValueError(f"|lambda| = {sum(lam)} exceeds matrix dimension {m}")
    active = [(A, l) for A, l in zip(mats, lam) if l > 0]
    if not active:
        return 1.0
    if len(active) == 1:
        return sigma_single(active[0][0], active[0][1])
    if len(active) == 2:
        return sigma_pair(active[0][0], active[1][0], (active[0][1], active[1][1]))
    return sigma_via_determinant([A for A, _ in active], [l for _, l in active])


def newton_transform(A, r: int) -> np.ndarray:
    """Newton transformation T_r(A) = sigma_r(A) I - A T_{r-1}(A), T_0 = I.

    Satisfies tr T_r(A) = (m - r) sigma_r(A) and T_r(c A) = c^r T_r(A).
    """
    A = _as_square(A)
    m = A.shape[0]
    if not 0 <= r <= m:
        raise ValueError(f"order r={r} out of range [0, {m}]")
    T = np.eye(m)
    for s in range(1, r + 1):
        T = sigma_single(A, s) * np.eye(m) - A @ T
    return T


def _rand_matrix(rng: np.random.Generator, m: int) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=(m, m))


def _rand_multi_index(rng: np.random.Generator, k: int, m: int) -> tuple[int, ...]:
    # random weak composition with 1 <= |lam| <= m
    total = int(rng.integers(1, m + 1))
    cuts = np.sort(rng.integers(0, total + 1, size=k - 1)) if k > 1 else np.empty(0, int)
    parts = np.diff(np.concatenate(([0], cuts, [total])))
    return tuple(int(x) for x in parts)


def _rel(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))


def verify_appendix_identities(seed: int, trials: int, m_max: int) -> dict[str, float]:
    """Sample random tuples and return the max residual of each identity.

    Checked: vanishing/reduction on a zero matrix or zero index, permutation
    symmetry, the identity-matrix binomial law, merging of repeated matrices,
    additivity/scaling in one slot, the sigma_{k,l} product expansion, and the
    rank-one update expansion through Newton transformations.  All residuals
    are normalised by max(1, |lhs|, |rhs|).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if m_max < 2:
        raise ValueError("m_max must be >= 2")
    rng = np.random.default_rng(seed)
    res: dict[str, float] = {
        "zero_law": 0.0,
        "permutation": 0.0,
        "identity_law": 0.0,
        "merge_law": 0.0,
        "additivity": 0.0,
        "scaling": 0.0,
        "sigma_kl": 0.0,
        "rank_one_update": 0.0,
        "oracle_agreement": 0.0,
    }
    for _ in range(trials):
        m = int(rng.integers(2, m_max + 1))
        k = int(rng.integers(1, 4))
        mats = [_rand_matrix(rng, m) for _ in range(k)]
        lam = _rand_multi_index(rng, k, m)

        # fast path vs interpolation oracle
        res["oracle_agreement"] = max(
            res["oracle_agreement"], _rel(sigma_multi(mats, lam), sigma_via_determinant(mats, lam))
        )

        # (zero) first slot zero matrix, and zero index reduction
        if lam[0] > 0:
            val = sigma_multi([np.zeros((m, m))] + mats[1:], lam)
            res["zero_law"] = max(res["zero_law"], abs(val))
        val0 = sigma_multi([_rand_matrix(rng, m)] + mats, (0,) + lam)
        res["zero_law"] = max(res["zero_law"], _rel(val0, sigma_multi(mats, lam)))

        # (permutation)
        perm = rng.permutation(k)
        lhs = sigma_multi([mats[p] for p in perm], [lam[p] for p in perm])
        res["permutation"] = max(res["permutation"], _rel(lhs, sigma_multi(mats, lam)))

        # (identity law) sigma_{(r,) + lam}(I, A_2...) = C(m - |lam|, r) sigma_lam
        if sum(lam) < m:
            r = int(rng.integers(0, m - sum(lam) + 1))
            lhs = sigma_multi([np.eye(m)] + mats, (r,) + lam)
            rhs = math.comb(m - sum(lam), r) * sigma_multi(mats, lam)
            res["identity_law"] = max(res["identity_law"], _rel(lhs, rhs))

        # (merge law) repeated matrix slots merge with a binomial factor
        l1 = int(rng.integers(0, m + 1 - sum(lam)))
        l2 = int(rng.integers(0, m + 1 - sum(lam) - l1))
        A = mats[0]
        lhs = sigma_multi([A, A] + mats[1:], (l1, l2) + lam[1:]) if l1 + l2 + sum(lam[1:]) <= m else None
        if lhs is not None:
            rhs = math.comb(l1 + l2, l1) * sigma_multi([A] + mats[1:], (l1 + l2,) + lam[1:])
            res["merge_law"] = max(res["merge_law"], _rel(lhs, rhs))

        # (additivity in a degree-one slot) and (scaling)
        B = _rand_matrix(rng, m)
        hat = lam[1:]
        if 1 + sum(hat) <= m:
            lhs = sigma_multi([mats[0] + B] + mats[1:], (1,) + hat)
            rhs = sigma_multi(mats, (1,) + hat) + sigma_multi([B] + mats[1:], (1,) + hat)
            res["additivity"] = max(res["additivity"], _rel(lhs, rhs))
        a = float(rng.uniform(0.5, 2.0))
        lhs = sigma_multi([a * mats[0]] + mats[1:], lam)
        rhs = a ** lam[0] * sigma_multi(mats, lam)
        res["scaling"] = max(res["scaling"], _rel(lhs, rhs))

        # sigma_{k,l}(B, C) = sigma_k(B) sigma_l(C) - sum_i sigma_{k-i,l-i,i}(B, C, BC)
        B1, C1 = _rand_matrix(rng, m), _rand_matrix(rng, m)
        kk = int(rng.integers(1, m))
        ll = int(rng.integers(1, m - kk + 1)) if m - kk >= 1 else 0
        if kk >= 1 and ll >= 1:
            lhs = sigma_multi([B1, C1], (kk, ll))
            rhs = sigma_single(B1, kk) * sigma_single(C1, ll)
            for i in range(1, min(kk, ll) + 1):
                rhs -= sigma_multi([B1, C1, B1 @ C1], (kk - i, ll - i, i))
            res["sigma_kl"] = max(res["sigma_kl"], _rel(lhs, rhs))

        # rank-one update: sigma_k(C + D + A_1 + ... + A_s)
        C2 = _rand_matrix(rng, m)
        D2 = _rand_matrix(rng, m)
        s = int(rng.integers(1, 3))
        ranks = [np.outer(rng.uniform(-1, 1, m), rng.uniform(-1, 1, m)) for _ in range(s)]
        korder = int(rng.integers(1, m + 1))
        lhs = sigma_single(C2 + D2 + sum(ranks), korder)
        rhs = sigma_single(C2, korder)
        for j in range(1, korder + 1):
            rhs += sigma_multi([C2, D2], (korder - j, j))
        acc = C2 + D2
        for Ai in ranks:
            rhs += np.trace(newton_transform(acc, korder - 1) @ Ai)
            acc = acc + Ai
        res["rank_one_update"] = max(res["rank_one_update"], _rel(lhs, rhs))

        # the bare single-update special case: sigma_k(C + A) = sigma_k(C)
        # + tr(T_{k-1}(C) A) for rank-one A
        A1 = ranks[0]
        lhs = sigma_single(C2 + A1, korder)
        rhs = sigma_single(C2, korder) + np.trace(newton_transform(C2, korder - 1) @ A1)
        res["rank_one_update"] = max(res["rank_one_update"], _rel(lhs, rhs))
    return res
