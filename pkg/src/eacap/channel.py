"""Memoryless quantum channels in Kraus form."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .qmatrix import ATOL, BipartiteState, DensityMatrix

STANDARD_KINDS = ("identity", "depolarizing", "dephasing", "amplitude_damping", "erasure")


class ChannelSpecError(ValueError):
    """A channel description (file, shorthand or parameters) could not be used."""


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """``N(rho) = sum_i A_i rho A_i^dagger`` with each ``A_i`` of shape ``(dim_out, dim_in)``.

    Construction only checks shapes; trace preservation is reported by
    :func:`validate` so that malformed families can still be inspected.
    """

    kraus: tuple[np.ndarray, ...]
    name: str = "custom"

    def __post_init__(self):
        ops = tuple(np.array(a, dtype=complex) for a in self.kraus)
        if not ops:
            raise ChannelSpecError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if len(shape) != 2:
            raise ChannelSpecError("Kraus operators must be matrices")
        for a in ops:
            if a.shape != shape:
                raise ChannelSpecError(f"Kraus operator shapes differ: {shape} vs {a.shape}")
            a.setflags(write=False)
        object.__setattr__(self, "kraus", ops)

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def stacked(self) -> np.ndarray:
        """Kraus operators as one ``(K, dim_out, dim_in)`` array."""
        return np.stack(self.kraus)


@dataclass(frozen=True)
class ValidationReport:
    deviation: float
    passed: bool


def validate(ch: KrausChannel, atol: float = ATOL) -> ValidationReport:
    """Max entrywise deviation of ``sum A^dagger A`` from the identity."""
    k = ch.stacked
    gram = np.einsum("kji,kjl->il", k.conj(), k)
    dev = float(np.max(np.abs(gram - np.eye(ch.dim_in))))
    return ValidationReport(dev, dev <= atol)


def apply_array(ch: KrausChannel, matrix: np.ndarray) -> np.ndarray:
    k = ch.stacked
    return np.einsum("kab,bc,kdc->ad", k, matrix, k.conj())


def apply(ch: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    if rho.dim != ch.dim_in:
        raise ValueError(f"state has dim {rho.dim}, channel expects {ch.dim_in}")
    return DensityMatrix(apply_array(ch, rho.matrix))


def apply_extended(ch: KrausChannel, s: BipartiteState) -> BipartiteState:
    """``(N x I)(s)``: the channel acts on the first subsystem only."""
    if s.dim_a != ch.dim_in:
        raise ValueError(f"first subsystem has dim {s.dim_a}, channel expects {ch.dim_in}")
    ident = np.eye(s.dim_b)
    ops = [np.kron(a, ident) for a in ch.kraus]
    if s.vector is not None and len(ops) == 1:
        return BipartiteState.from_vector(ops[0] @ s.vector, ch.dim_out, s.dim_b)
    m = s.state.matrix
    out = sum(a @ m @ a.conj().T for a in ops)
    return BipartiteState(ch.dim_out, s.dim_b, DensityMatrix(out))


def choi_matrix(ch: KrausChannel) -> BipartiteState:
    """``(N x I)(|Phi><Phi|)`` for the normalized maximally entangled ``|Phi>``."""
    d = ch.dim_in
    phi = np.eye(d, dtype=complex).ravel() / np.sqrt(d)
    return apply_extended(ch, BipartiteState.from_vector(phi, d, d))


def channels_equal(a: KrausChannel, b: KrausChannel, atol: float = ATOL) -> bool:
    """Equality of the underlying maps, judged on their Choi matrices."""
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        return False
    return bool(np.allclose(choi_matrix(a).matrix, choi_matrix(b).matrix, rtol=0, atol=atol))


def _weyl_operators(dim: int) -> list[np.ndarray]:
    """The ``dim**2`` generalized Pauli operators ``X^a Z^b``."""
    omega = np.exp(2j * np.pi / dim)
    shift = np.roll(np.eye(dim), 1, axis=0)
    clock = np.diag(omega ** np.arange(dim))
    return [
        np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
        for a in range(dim)
        for b in range(dim)
    ]


def make_standard(kind: str, dim: int = 2, param: float | None = None) -> KrausChannel:
    """Build a named channel family.

    Conventions:

    * ``depolarizing``: ``(1 - p) rho + p I/dim``
    * ``dephasing``: ``(1 - p) rho + p diag(rho)``; ``p = 1`` is complete dephasing
    * ``amplitude_damping``: qubit decay ``|1> -> |0>`` with probability ``gamma``
    * ``erasure``: ``(1 - p) rho + p |e><e|`` on an output of dimension ``dim + 1``
    """
    if kind not in STANDARD_KINDS:
        raise ChannelSpecError(
            f"unknown channel family {kind!r}; supported: {', '.join(STANDARD_KINDS)}"
        )
    if dim < 2:
        raise ChannelSpecError(f"dimension must be at least 2, got {dim}")
    if kind == "identity":
        return KrausChannel((np.eye(dim),), name=f"identity:{dim}")
    if param is None:
        raise ChannelSpecError(f"{kind} channel needs a parameter in [0, 1]")
    p = float(param)
    if not 0.0 <= p <= 1.0:
        raise ChannelSpecError(f"{kind} parameter must lie in [0, 1], got {p}")
    name = f"{kind}:{p:g}:{dim}"

    if kind == "depolarizing":
        weyl = _weyl_operators(dim)
        ops = [np.sqrt(1 - p + p / dim**2) * weyl[0]]
        ops += [np.sqrt(p) / dim * w for w in weyl[1:]]
    elif kind == "dephasing":
        ops = [np.sqrt(1 - p) * np.eye(dim)]
        for j in range(dim):
            proj = np.zeros((dim, dim))
            proj[j, j] = np.sqrt(p)
            ops.append(proj)
    elif kind == "amplitude_damping":
        if dim != 2:
            raise ChannelSpecError("amplitude_damping is only defined for dim 2")
        ops = [
            np.array([[1.0, 0.0], [0.0, np.sqrt(1 - p)]]),
            np.array([[0.0, np.sqrt(p)], [0.0, 0.0]]),
        ]
    else:  # erasure
        embed = np.vstack([np.eye(dim), np.zeros((1, dim))])
        ops = [np.sqrt(1 - p) * embed]
        for j in range(dim):
            flag = np.zeros((dim + 1, dim))
            flag[dim, j] = np.sqrt(p)
            ops.append(flag)
    ops = [a for a in ops if np.any(a)]
    ch = KrausChannel(tuple(ops), name=name)
    report = validate(ch)
    if not report.passed:  # pragma: no cover - constructor self-check
        raise ChannelSpecError(f"{name} failed trace preservation ({report.deviation:.2e})")
    return ch


def parse_shorthand(text: str) -> KrausChannel:
    """Parse ``name[:param][:dim]``, e.g. ``depolarizing:0.3:2`` or ``identity:3``.

    ``dim`` defaults to 2.  For ``identity`` a single field is the dimension.
    """
    parts = text.strip().split(":")
    kind = parts[0]
    if kind not in STANDARD_KINDS:
        raise ChannelSpecError(
            f"unknown channel family {kind!r}; supported: {', '.join(STANDARD_KINDS)}"
        )
    fields = parts[1:]
    try:
        if kind == "identity":
            if len(fields) > 1:
                raise ChannelSpecError("identity takes at most a dimension: identity[:dim]")
            return make_standard(kind, int(fields[0]) if fields else 2)
        if not fields or len(fields) > 2:
            raise ChannelSpecError(f"expected {kind}:param[:dim], got {text!r}")
        dim = int(fields[1]) if len(fields) == 2 else 2
        return make_standard(kind, dim, float(fields[0]))
    except ValueError as exc:
        if isinstance(exc, ChannelSpecError):
            raise
        raise ChannelSpecError(f"malformed channel shorthand {text!r}: {exc}") from exc


def channel_to_json(ch: KrausChannel) -> dict:
    return {
        "name": ch.name,
        "dim_in": ch.dim_in,
        "dim_out": ch.dim_out,
        "kraus": [
            [[[float(z.real), float(z.imag)] for z in row] for row in a] for a in ch.kraus
        ],
    }


def channel_from_json(obj: dict) -> KrausChannel:
    """Inverse of :func:`channel_to_json`; checks declared dims and trace preservation."""
    try:
        dim_in = int(obj["dim_in"])
        dim_out = int(obj["dim_out"])
        ops = []
        for a in obj["kraus"]:
            arr = np.asarray(a, dtype=float)
            if arr.ndim != 3 or arr.shape[2] != 2:
                raise ChannelSpecError("each Kraus entry must be a [re, im] pair")
            ops.append(arr[..., 0] + 1j * arr[..., 1])
        name = str(obj.get("name", "custom"))
    except (KeyError, TypeError) as exc:
        raise ChannelSpecError(f"malformed channel object: {exc!r}") from exc
    except ValueError as exc:
        if isinstance(exc, ChannelSpecError):
            raise
        raise ChannelSpecError(f"malformed channel object: {exc}") from exc
    ch = KrausChannel(tuple(ops), name=name)
    if (ch.dim_in, ch.dim_out) != (dim_in, dim_out):
        raise ChannelSpecError(
            f"declared dims ({dim_in} -> {dim_out}) do not match Kraus shape "
            f"({ch.dim_in} -> {ch.dim_out})"
        )
    report = validate(ch)
    if not report.passed:
        raise ChannelSpecError(
            f"Kraus operators are not trace preserving (deviation {report.deviation:.3e})"
        )
    return ch


def load_channel(source: str | Path) -> KrausChannel:
    """Load a channel from a JSON file path or a shorthand string."""
    path = Path(source)
    if str(source).endswith(".json") or path.is_file():
        try:
            obj = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ChannelSpecError(f"cannot read channel file {source}: {exc}") from exc
        return channel_from_json(obj)
    return parse_shorthand(str(source))


def from_kraus(ops: Sequence, name: str = "custom") -> KrausChannel:
    return KrausChannel(tuple(ops), name=name)
