"""Small dense-matrix helpers (numpy only)."""

from __future__ import annotations

import numpy as np


def expm(M):
    """Matrix exponential by scaling-and-squaring on the Taylor series."""
    M = np.asarray(M, dtype=complex if np.iscomplexobj(M) else float)
    norm = np.linalg.norm(M, np.inf)
    s = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0.5 else 0
    A = M / (2 ** s)
    out = np.eye(M.shape[0], dtype=M.dtype)
    term = np.eye(M.shape[0], dtype=M.dtype)
    for k in range(1, 21):
        term = term @ A / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def phi1(M):
    """Integral of exp(t M) over t in [0, 1]: M^-1 (e^M - I), computed as a series."""
    M = np.asarray(M, dtype=float)
    norm = np.linalg.norm(M, np.inf)
    s = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0.5 else 0
    A = M / (2 ** s)
    out = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for k in range(1, 21):
        term = term @ A / k
        out = out + term / (k + 1)
    # phi1 satisfies phi1(2A) = (phi1(A) + exp(A) phi1(A)) / 2
    E = expm(A)
    for _ in range(s):
        out = 0.5 * (out + E @ out)
        E = E @ E
    return out


def cond(M):
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if s.size == 0 or s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])


def symmetrize(M):
    return 0.5 * (M + M.T)
