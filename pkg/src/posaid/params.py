"""System constants, block length and the group geometry of the array."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError, ContractError, HistoryUnderflow


def safe_floor(x: float) -> int:
    """``floor`` that does not drop an integer ratio computed as n - 1ulp."""
    return math.floor(x + 1e-9 * max(1.0, abs(x)))


@dataclass(frozen=True)
class SystemParams:
    """Physical and system constants of one scenario.

    Units: ``lambda0`` m, ``B0`` symbols/s, ``v0`` m/s, ``t0`` s, ``P0``
    linear SNR per channel use, angles in radians. ``psi`` defaults to
    ``theta`` (array aligned with the direction of motion).
    """

    lambda0: float = 0.15
    B0: float = 1e7
    v0: float = 100.0
    xi0: float = 20.0
    t0: float = 5e-3
    P0: float = 1000.0
    M: int = 16
    N: int = 16
    L0: int = 1
    theta: float = 0.0
    psi: float | None = None

    def __post_init__(self):
        for name in ("lambda0", "B0", "v0", "xi0", "t0", "P0"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be a positive finite number, got {value!r}")
        for name in ("M", "N", "L0"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.xi0 < 2:
            raise ConfigurationError(f"xi0 must be >= 2 (block much shorter than coherence time), got {self.xi0}")
        if self.xi0 < 10:
            warnings.warn(f"xi0={self.xi0} is small; the block-constant channel model assumes xi0 >> 1",
                          stacklevel=3)
        if self.L0 > self.xi0:
            raise ConfigurationError(f"L0={self.L0} exceeds xi0={self.xi0}")
        if self.psi is None:
            object.__setattr__(self, "psi", self.theta)

    @property
    def doppler(self) -> float:
        """Maximum Doppler shift ``v0 / lambda0`` in Hz."""
        return self.v0 / self.lambda0

    @property
    def T0(self) -> int:
        return block_length(self)

    @property
    def anchor_spacing(self) -> float:
        """Distance travelled per block, ``v0 T0 / B0`` (floored T0)."""
        return self.v0 * self.T0 / self.B0

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> bytes:
        """SHA-256 of the canonical JSON form; used in dump headers."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).digest()


@dataclass(frozen=True)
class GroupLayout:
    """Partition of the M transmit columns into Mg groups of Me columns."""

    Me: int
    Mg: int
    padded_columns: int = 0
    M: int = field(init=False)

    def __post_init__(self):
        if self.Me < 1 or self.Mg < 1:
            raise ConfigurationError("Me and Mg must be >= 1")
        if not 0 <= self.padded_columns < self.Me:
            raise ConfigurationError("padded_columns must lie in [0, Me)")
        object.__setattr__(self, "M", self.Me * self.Mg - self.padded_columns)

    @classmethod
    def conventional(cls, M: int) -> "GroupLayout":
        """Every column is its own group: the full-pilot baseline."""
        return cls(Me=1, Mg=M, padded_columns=0)

    def column_index(self, group: int, offset: int) -> int:
        """0-based global column of 0-based ``(group, offset)``."""
        return group * self.Me + offset


def block_length(params: SystemParams, floored: bool = True):
    """Symbols per block, ``floor(lambda0 B0 / (2 xi0 v0))``.

    With ``floored=False`` the exact ratio is returned as a float, for
    cross-checking closed forms that drop the floor.
    """
    exact = params.lambda0 * params.B0 / (2.0 * params.xi0 * params.v0)
    if not floored:
        return exact
    T0 = safe_floor(exact)
    if T0 < 2:
        raise ConfigurationError(
            f"block length T0={T0} < 2 at v0={params.v0} m/s; speed too high for "
            f"lambda0={params.lambda0}, B0={params.B0}, xi0={params.xi0}"
        )
    return T0


def max_group_size(params: SystemParams) -> int:
    """Largest Me keeping the last column inside the environment coherence time."""
    return max(1, safe_floor(2.0 * params.v0 * params.t0 / params.lambda0 + 1.0))


def group_layout(M: int, params: SystemParams, Me: int | None = None) -> GroupLayout:
    """Groups of ``Me`` columns (default: the maximum allowed), zero-padded at the end."""
    if M < 1:
        raise ContractError("M must be >= 1")
    Me = max_group_size(params) if Me is None else int(Me)
    Mg = -(-M // Me)
    return GroupLayout(Me=Me, Mg=Mg, padded_columns=Me * Mg - M)


def blocks_per_column_lag(params: SystemParams, floored: bool = True) -> float:
    """Blocks the array needs to advance by one antenna spacing, ``lambda0 B0 / (2 v0 T0)``."""
    T0 = block_length(params, floored)
    return params.lambda0 * params.B0 / (2.0 * params.v0 * T0)


def anchor_block_index(k: int, j: int, params: SystemParams, floored: bool = True) -> int:
    """Block ``k0`` whose anchor sits just ahead of column ``j`` at block ``k``.

    Column ``j`` (1-based, ``j >= 2``) at block ``k`` lies between the
    group's first-column positions at blocks ``k0`` and ``k0 + 1``.

    Raises
    ------
    HistoryUnderflow
        If ``k0 < 1``: the column has not yet been visited by the anchor.
    """
    if j < 2:
        raise ContractError("anchor_block_index needs j >= 2")
    if k < 1:
        raise ContractError("block index k must be >= 1")
    k0 = safe_floor(k - (j - 1) * blocks_per_column_lag(params, floored))
    if k0 < 1:
        raise HistoryUnderflow(f"k0={k0} < 1 for k={k}, j={j}: insufficient anchor history")
    return k0


# -- configuration files ---------------------------------------------------

PARAM_KEYS = ("lambda0", "B0", "v0", "xi0", "t0", "P0", "M", "N", "L0", "theta", "psi")
RUN_KEYS = ("seed", "trials")
_INT_KEYS = {"M", "N", "L0", "seed", "trials"}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in PARAM_KEYS and key not in RUN_KEYS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = int(value) if key in _INT_KEYS else float(value)
        except ValueError:
            raise ConfigurationError(f"{source}:{lineno}: bad value for {key!r}: {value!r}") from None
    return values


def load_config(path) -> tuple[SystemParams, dict]:
    """Read a config file into ``(SystemParams, {"seed": ..., "trials": ...})``."""
    path = Path(path)
    values = parse_config_text(path.read_text(encoding="utf-8"), source=str(path))
    run = {k: values.pop(k) for k in RUN_KEYS if k in values}
    return SystemParams(**values), run
