"""Array-level kernels shared by the pipelines.

Everything here works on raw ``complex128`` arrays of shape (D, D) where
D = prod(shape) and `shape` is the lattice shape (N,)*n.
"""

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla


def to_freq(Y, shape):
    """F Y F^* for the unitary n-dimensional DFT F."""
    n = len(shape)
    D = int(np.prod(shape))
    A = np.asarray(Y, dtype=complex).reshape(tuple(shape) * 2)
    A = sfft.fftn(A, axes=range(n), norm="ortho")
    A = sfft.ifftn(A, axes=range(n, 2 * n), norm="ortho", overwrite_x=True)
    return A.reshape(D, D)


def from_freq(Yf, shape):
    """Inverse of :func:`to_freq`."""
    n = len(shape)
    D = int(np.prod(shape))
    A = np.asarray(Yf, dtype=complex).reshape(tuple(shape) * 2)
    A = sfft.ifftn(A, axes=range(n), norm="ortho")
    A = sfft.fftn(A, axes=range(n, 2 * n), norm="ortho", overwrite_x=True)
    return A.reshape(D, D)


def vec_to_freq(v, shape):
    return sfft.fftn(np.asarray(v, dtype=complex).reshape(shape), norm="ortho").ravel()


def vec_from_freq(vf, shape):
    return sfft.ifftn(np.asarray(vf, dtype=complex).reshape(shape), norm="ortho").ravel()


def singular_values(A):
    return sla.svdvals(A, check_finite=False)


def schatten_from_sv(s, q):
    if q == np.inf:
        return float(s.max()) if s.size else 0.0
    if s.size == 0 or s.max() == 0:
        return 0.0
    top = s.max()
    return float(top * np.sum((s / top) ** q) ** (1.0 / q))


def spectral_norm_power(A, tol=1e-8, maxiter=500, seed=0):
    """Largest singular value by power iteration on A^* A."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(maxiter):
        w = A.conj().T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = float(np.sqrt(nw))
        if abs(new - sigma) <= tol * new:
            return new
        sigma = new
    return sigma
