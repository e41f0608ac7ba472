"""Ground-truth channel realizations along the path of a moving array.

Geometry (group-local coordinates, metres): the group's first column sits
at ``(k - 1) * d`` in block ``k`` with ``d = v0 T0 / B0``; column ``j``
trails it by ``(j - 1) * lambda0 / 2``. Each (receive antenna, group)
pair owns an independent zero-mean unit-variance complex Gaussian field
over the path, redrawn every ``t0`` seconds.

Two ground-truth laws are available:

``physical``
    All columns of a group read one Gaussian process with the J0 kernel,
    sampled jointly on every position visited in the epoch.
``idealized``
    The first-column track is such a process; every other column is drawn
    from its exact conditional law given the bracketing track values, so
    columns of one block are conditionally independent. This is the
    covariance model the MMSE estimator is derived under.
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

import numpy as np

from .correlation import bracketing_index, kernel_matrix, solve_psd
from .numerics import as_generator, cholesky_psd, sample_standard_complex_gaussian
from .params import GroupLayout, SystemParams, safe_floor


class FieldMode(str, enum.Enum):
    PHYSICAL = "physical"
    IDEALIZED = "idealized"


@dataclass
class ChannelBlock:
    """True channel of block ``k`` (1-based) with global column positions."""

    k: int
    H: np.ndarray
    positions: np.ndarray
    epoch: int


#: Maximum distinct positions per (group, epoch) before grid snapping.
MAX_GRID_POINTS = 4096
#: Snapping resolution as a fraction of lambda0 when the cap is hit.
SNAP_FRACTION = 1.0 / 64.0


class FieldGenerator:
    """Samples channel blocks for one ``(params, layout, mode)`` scenario.

    Factorizations depend only on the relative geometry of an epoch, so
    they are cached and shared between Monte Carlo trials. Instances hold
    no random state; pass a fresh stream per trial.

    Parameters
    ----------
    params, layout
        Scenario and column grouping.
    mode
        ``"physical"`` or ``"idealized"``.
    conditioning_depth
        Idealized mode only: number of track values taken on each side of
        a column when drawing it. Defaults to ``max(params.L0, 2)``; the
        estimator's covariance model is exact for any ``L0`` up to it.
    """

    def __init__(self, params: SystemParams, layout: GroupLayout, mode="physical",
                 conditioning_depth: int | None = None, max_grid: int = MAX_GRID_POINTS):
        self.params = params
        self.layout = layout
        self.mode = FieldMode(mode)
        self.depth = max(params.L0, 2) if conditioning_depth is None else int(conditioning_depth)
        self.max_grid = max_grid
        self.T0 = params.T0
        self.d = params.anchor_spacing
        self.half = 0.5 * params.lambda0
        self._cache = {}

    # -- geometry ---------------------------------------------------------

    def epoch_of(self, k: int) -> int:
        return safe_floor((k - 1) * self.T0 / (self.params.B0 * self.params.t0))

    def epoch_ranges(self, K: int):
        """Yield ``(epoch, first_block, last_block)`` covering blocks 1..K."""
        start = 1
        while start <= K:
            e = self.epoch_of(start)
            stop = start
            while stop + 1 <= K and self.epoch_of(stop + 1) == e:
                stop += 1
            yield e, start, stop
            start = stop + 1

    def anchor_position(self, k: int) -> float:
        return (k - 1) * self.d

    def column_position(self, k: int, j: int) -> float:
        """Group-local position of 1-based column ``j`` at block ``k``."""
        return (k - 1) * self.d - (j - 1) * self.half

    def global_positions(self, k: int) -> np.ndarray:
        """Positions of all M real columns at block ``k``."""
        m = np.arange(self.layout.M)
        return (k - 1) * self.d - m * self.half

    # -- sampling ---------------------------------------------------------

    def generate(self, K: int, rng) -> list[ChannelBlock]:
        if K < 1:
            raise ValueError("K must be >= 1")
        gen = as_generator(rng)
        blocks = []
        for epoch, first, last in self.epoch_ranges(K):
            values = self._sample_epoch(last - first + 1, gen)  # (n_blocks, N, Me*Mg)
            for idx, k in enumerate(range(first, last + 1)):
                H = values[idx][:, : self.layout.M]
                blocks.append(ChannelBlock(k=k, H=H, positions=self.global_positions(k), epoch=epoch))
        return blocks

    def _sample_epoch(self, n_blocks: int, gen) -> np.ndarray:
        N, Me, Mg = self.params.N, self.layout.Me, self.layout.Mg
        n_proc = N * Mg
        if self.mode is FieldMode.PHYSICAL:
            L, index = self._physical_factor(n_blocks)
            z = sample_standard_complex_gaussian((L.shape[0], n_proc), gen)
            field = L @ z  # (n_points, N*Mg)
            vals = field[index]  # (n_blocks, Me, N*Mg)
        else:
            L, C, cond_std = self._idealized_factor(n_blocks)
            z = sample_standard_complex_gaussian((n_blocks, n_proc), gen)
            track = L @ z
            noise = sample_standard_complex_gaussian((C.shape[0], n_proc), gen)
            cols = C @ track + cond_std[:, None] * noise  # (n_blocks*(Me-1), N*Mg)
            vals = np.empty((n_blocks, Me, n_proc), dtype=complex)
            vals[:, 0] = track
            if Me > 1:
                vals[:, 1:] = cols.reshape(n_blocks, Me - 1, n_proc)
        # (n_blocks, Me, N, Mg) -> (n_blocks, N, Mg, Me) -> columns g*Me + j
        vals = vals.reshape(n_blocks, Me, N, Mg).transpose(0, 2, 3, 1)
        return vals.reshape(n_blocks, N, Mg * Me)

    def _physical_factor(self, n_blocks: int):
        key = ("physical", n_blocks)
        if key not in self._cache:
            Me = self.layout.Me
            ks = np.arange(n_blocks)[:, None]
            js = np.arange(Me)[None, :]
            pos = ks * self.d - js * self.half
            quantum = self.params.lambda0 * 1e-9
            if np.unique(np.round(pos / quantum)).size > self.max_grid:
                quantum = self.params.lambda0 * SNAP_FRACTION
            keys = np.round(pos / quantum).astype(np.int64)
            uniq, index = np.unique(keys, return_inverse=True)
            points = uniq * quantum
            K = kernel_matrix(points, points, self.params.lambda0)
            L, _ = cholesky_psd(K)
            self._cache[key] = (L, index.reshape(n_blocks, Me))
        return self._cache[key]

    def _idealized_factor(self, n_blocks: int):
        key = ("idealized", n_blocks)
        if key not in self._cache:
            lam = self.params.lambda0
            anchors = np.arange(n_blocks) * self.d
            K = kernel_matrix(anchors, anchors, lam)
            L, jitter = cholesky_psd(K)
            Me = self.layout.Me
            C = np.zeros((n_blocks * (Me - 1), n_blocks))
            cond_std = np.ones(n_blocks * (Me - 1))
            row = 0
            for kk in range(n_blocks):
                for j in range(2, Me + 1):
                    z = kk * self.d - (j - 1) * self.half
                    i0 = bracketing_index(z, anchors)
                    lo, hi = max(i0 - self.depth + 1, 0), min(i0 + self.depth, n_blocks - 1)
                    if hi >= lo:
                        S = np.arange(lo, hi + 1)
                        k_s = kernel_matrix([z], anchors[S], lam)[0]
                        sigma = K[np.ix_(S, S)] + jitter * np.eye(S.size)
                        coef = solve_psd(sigma, k_s)
                        C[row, S] = coef
                        cond_std[row] = np.sqrt(max(1.0 - k_s @ coef, 0.0))
                    row += 1
            self._cache[key] = (L, C, cond_std)
        return self._cache[key]


def generate_blocks(params: SystemParams, layout: GroupLayout, K: int, mode="physical", rng=0,
                    **kwargs) -> list[ChannelBlock]:
    """Generate ``K`` consecutive channel blocks; see :class:`FieldGenerator`."""
    return FieldGenerator(params, layout, mode, **kwargs).generate(K, rng)


# -- binary dump -----------------------------------------------------------

_MAGIC = b"PAFB"
_VERSION = 1
_HEADER = struct.Struct("<4sHBx32sIIIQ")
_MODES = {FieldMode.PHYSICAL: 0, FieldMode.IDEALIZED: 1}


def write_blocks(path, blocks, params: SystemParams, mode, seed: int) -> None:
    """Write blocks as a fixed header followed by row-major complex64 matrices.

    Header (little-endian, 60 bytes): magic ``PAFB``, u16 version, u8 mode
    (0 physical, 1 idealized), 1 pad byte, 32-byte SHA-256 of the params,
    u32 K, u32 M, u32 N, u64 seed.
    """
    K = len(blocks)
    N, M = blocks[0].H.shape
    header = _HEADER.pack(_MAGIC, _VERSION, _MODES[FieldMode(mode)], params.digest(), K, M, N, seed)
    data = np.stack([b.H for b in blocks]).astype("<c8", copy=False)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(data).tobytes())


def read_blocks(path, params: SystemParams | None = None):
    """Read a dump written by :func:`write_blocks`.

    Returns ``(header, H)`` with ``H`` of shape ``(K, N, M)``; when
    ``params`` is given its digest must match and a list of
    :class:`ChannelBlock` (positions and epochs rebuilt) is returned instead
    of the raw array.
    """
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, mode, digest, K, M, N, seed = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != _VERSION:
        raise ValueError(f"{path}: not a channel-block dump (magic={magic!r}, version={version})")
    modes = {v: k for k, v in _MODES.items()}
    header = {"K": K, "M": M, "N": N, "mode": modes[mode].value, "seed": seed, "params_sha256": digest.hex()}
    H = np.frombuffer(raw, dtype="<c8", offset=_HEADER.size, count=K * N * M).reshape(K, N, M)
    if params is None:
        return header, H
    if params.digest() != digest:
        raise ValueError(f"{path}: parameter hash does not match the supplied params")
    from .params import group_layout

    gen = FieldGenerator(params, group_layout(M, params), modes[mode])
    blocks = [ChannelBlock(k=k + 1, H=H[k].astype(complex), positions=gen.global_positions(k + 1),
                           epoch=gen.epoch_of(k + 1)) for k in range(K)]
    return header, blocks
