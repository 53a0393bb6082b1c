"""Numpy implementation of the propagation core (fallback for ``_ckernels``)."""
import numpy as np

BACKEND = "numpy"


def _views(psi, n):
    # qubit k is bit k of the basis index -> axis 1 of shape (2**(n-1-k), 2, 2**k)
    return [psi.reshape(1 << (n - 1 - k), 2, 1 << k) for k in range(n)]


def apply(psi, diag, n, up, out):
    """``out = H psi`` for diagonal ``diag`` and drive coupling ``up`` = <r|H|g>."""
    dim = psi.shape[0]
    if diag.shape[0] != dim or out.shape[0] != dim or dim != 1 << n:
        raise ValueError("dimension mismatch")
    np.multiply(diag, psi, out=out)
    if up != 0:
        down = np.conj(up)
        for src, dst in zip(_views(psi, n), _views(out, n)):
            dst[:, 1, :] += up * src[:, 0, :]
            dst[:, 0, :] += down * src[:, 1, :]
    return out


def propagate(psi, vdw, nr, hb, omega, phi, dglobal, dlocal, h, tol, max_terms):
    """Advance ``psi`` in place; see ``_ckernels.propagate``."""
    dim = psi.shape[0]
    n = dim.bit_length() - 1
    if 1 << n != dim or not (vdw.shape[0] == nr.shape[0] == hb.shape[0] == dim):
        raise ValueError("dimension mismatch")
    steps = omega.shape[0]
    if not (phi.shape[0] == dglobal.shape[0] == dlocal.shape[0] == steps):
        raise ValueError("parameter arrays must have one entry per step")
    worst = 0
    tmp = np.empty_like(psi)
    for s in range(steps):
        diag = vdw - dglobal[s] * nr - dlocal[s] * hb
        up = 0.5 * omega[s] * complex(np.cos(phi[s]), -np.sin(phi[s]))
        term = psi.copy()
        for m in range(1, max_terms + 1):
            apply(term, diag, n, up, tmp)
            tmp *= -1j * h / m
            psi += tmp
            term, tmp = tmp, term
            if np.linalg.norm(term) < tol:
                break
        else:
            return -1
        worst = max(worst, m)
    return worst
