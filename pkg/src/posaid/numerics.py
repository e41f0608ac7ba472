"""Special functions, PSD factorization, log-det capacity and seeding.

Everything else in the package builds on these primitives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import ContractError, DomainError, NumericalRankError

#: Default first jitter, relative to the mean diagonal of the matrix.
DEFAULT_JITTER = 1e-10
#: Largest relative jitter tried before giving up.
JITTER_CAP = 1e-4


def bessel_j0(x):
    """Zeroth-order Bessel function of the first kind, real argument.

    Ascending series for ``|x| < 8``, Hankel amplitude/phase rational
    form above. Absolute error stays below 1e-12 for ``|x| <= 1e4``.

    Parameters
    ----------
    x : float or array_like
        Finite real argument(s).

    Returns
    -------
    float or numpy.ndarray
        ``J0(x)``, a Python float for scalar input.

    Raises
    ------
    DomainError
        If any input is NaN or infinite.
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError("bessel_j0 requires finite input")
    out = kernels.j0_array(arr)
    if arr.ndim == 0:
        return float(np.asarray(out).reshape(-1)[0])
    return out


@dataclass(frozen=True)
class RngStream:
    """Counter-style random stream: ``(base_seed, stream_index)`` names it.

    The same pair always produces the same sequence, regardless of how
    many workers run or in what order; distinct indices are independent
    (numpy ``SeedSequence`` spawn keys). ``substream`` derives further
    independent streams for separate uses within one trial.
    """

    base_seed: int
    stream_index: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.base_seed < 2**64:
            raise ContractError("base_seed must be an unsigned 64-bit integer")
        if self.stream_index < 0:
            raise ContractError("stream_index must be non-negative")

    def substream(self, index: int) -> "RngStream":
        return RngStream(self.base_seed, self.stream_index, self.path + (int(index),))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.base_seed, spawn_key=(self.stream_index, *self.path))
        return np.random.Generator(np.random.PCG64(seq))


def as_generator(rng) -> np.random.Generator:
    """Accept an ``RngStream``, a numpy ``Generator`` or an int seed."""
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_standard_complex_gaussian(n, rng) -> np.ndarray:
    """Draw i.i.d. CN(0, 1) samples; ``n`` is a count or a shape tuple.

    Real and imaginary parts are independent N(0, 1/2).
    """
    shape = (n,) if np.isscalar(n) else tuple(n)
    if any(s < 0 for s in shape) or (np.isscalar(n) and n < 1):
        raise ContractError("sample count must be positive")
    gen = as_generator(rng)
    z = gen.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def as_hermitian(A, tol: float = 1e-10) -> np.ndarray:
    """Validate conjugate symmetry and return the exactly symmetrized matrix."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix has non-finite entries")
    scale = max(np.abs(A).max(initial=0.0), 1.0)
    if np.abs(A - A.conj().T).max(initial=0.0) > tol * scale:
        raise ContractError("matrix is not Hermitian")
    return 0.5 * (A + A.conj().T)


def cholesky_psd(A, jitter: float | None = None, *, max_jitter: float | None = None):
    """Cholesky factor of a PSD matrix, adding diagonal jitter only if needed.

    The factorization is first attempted with ``jitter`` (0 when None).
    On failure the jitter is escalated by factors of 10, starting from
    ``DEFAULT_JITTER`` times the mean diagonal, until ``max_jitter``
    (default ``JITTER_CAP`` times the mean diagonal).

    Parameters
    ----------
    A : array_like, shape (n, n)
        Hermitian positive semidefinite matrix.
    jitter : float, optional
        Absolute diagonal loading for the first attempt.
    max_jitter : float, optional
        Absolute cap on the escalated jitter.

    Returns
    -------
    L : numpy.ndarray
        Lower-triangular factor with ``L @ L.conj().T == A + used * I``.
    used : float
        The jitter that made the factorization succeed.

    Raises
    ------
    NumericalRankError
        If the matrix cannot be factorized at the cap.
    """
    A = as_hermitian(A)
    n = A.shape[0]
    first = 0.0 if jitter is None else float(jitter)
    if first < 0:
        raise DomainError("jitter must be non-negative")
    mean_diag = float(np.mean(np.abs(np.diag(A)))) or 1.0
    cap = JITTER_CAP * mean_diag if max_jitter is None else float(max_jitter)
    eye = np.eye(n, dtype=A.dtype)

    used = first
    while True:
        try:
            return np.linalg.cholesky(A + used * eye), used
        except np.linalg.LinAlgError:
            pass
        if used >= cap:
            break
        used = max(used * 10.0, DEFAULT_JITTER * mean_diag)
        used = min(used, cap)
    min_eig = float(np.linalg.eigvalsh(A)[0])
    raise NumericalRankError(
        f"Cholesky failed at jitter cap {cap:.3g}; smallest eigenvalue {min_eig:.3g}",
        min_eigenvalue=min_eig,
        jitter=used,
    )


def logdet_capacity(H, rho):
    """``log2 det(I_N + (rho / M) H H^H)`` through a Cholesky factor.

    ``H`` may carry leading batch dimensions; the result then has that
    batch shape.
    """
    H = np.asarray(H)
    if H.ndim < 2:
        raise ContractError("H must be at least two-dimensional")
    if not np.all(np.isfinite(H)) or not np.isfinite(rho):
        raise DomainError("logdet_capacity requires finite inputs")
    if rho < 0:
        raise DomainError("rho must be non-negative")
    n_rx, n_tx = H.shape[-2:]
    gram = H @ np.swapaxes(H.conj(), -1, -2)
    A = np.eye(n_rx) + (rho / n_tx) * gram
    L = np.linalg.cholesky(A)
    diag = np.diagonal(L, axis1=-2, axis2=-1).real
    out = 2.0 * np.sum(np.log2(diag), axis=-1)
    if np.ndim(out) == 0:
        return float(np.asarray(out).reshape(-1)[0])
    return out
