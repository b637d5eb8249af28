"""Gray-labeled constellations with unit average energy.

A constellation couples a set of complex points with a bijective labeling
from L-bit strings to point indices.  Bit vectors are ordered MSB-first:
``bits[0]`` is mapper input 1 and contributes ``2**(L-1)`` to the label
integer.  QAM labelings use an independent reflected-binary Gray code per
I/Q axis; PSK labelings use a reflected-binary Gray code around the ring.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

KINDS = ("BPSK", "QPSK", "PSK8", "QAM16", "QAM64")


def _gray(k: np.ndarray) -> np.ndarray:
    return k ^ (k >> 1)


def _pam_points(m: int) -> np.ndarray:
    """Ascending odd-integer PAM grid with m levels: -(m-1), ..., m-1."""
    return np.arange(-(m - 1), m, 2, dtype=float)


@dataclass(frozen=True)
class Constellation:
    """Complex constellation with a Gray bit labeling.

    Attributes
    ----------
    name : str
        One of ``KINDS``.
    L : int
        Bits per symbol; ``2**L`` points.
    points : np.ndarray
        Complex points in geometric enumeration order (grid order for QAM,
        ring order for PSK), unit average energy.
    labels : np.ndarray
        ``labels[b]`` is the point index carrying the L-bit label with
        integer value ``b`` (MSB-first).
    """

    name: str
    L: int
    points: np.ndarray
    labels: np.ndarray
    symbols: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.points.shape != (2**self.L,) or self.labels.shape != (2**self.L,):
            raise ValueError("points/labels must have 2**L entries")
        if sorted(self.labels.tolist()) != list(range(2**self.L)):
            raise ValueError("labels must be a bijection onto point indices")
        # symbols[b] = point carrying label integer b
        object.__setattr__(self, "symbols", self.points[self.labels])

    @property
    def m(self) -> int:
        return 2**self.L

    def to_json(self) -> str:
        """JSON dump: name, L, points as [re, im] pairs, labels."""
        return json.dumps(
            {
                "name": self.name,
                "L": self.L,
                "points": [[float(p.real), float(p.imag)] for p in self.points],
                "labels": [int(v) for v in self.labels],
            },
            indent=2,
        )


def _qam(bits_per_axis: int) -> tuple[np.ndarray, np.ndarray]:
    m_axis = 2**bits_per_axis
    pam = _pam_points(m_axis)
    # grid order: point index = i_axis * m_axis + q_axis
    pts = (pam[:, None] + 1j * pam[None, :]).ravel()
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    pos = np.arange(m_axis)
    gray = _gray(pos)
    pos_of_gray = np.empty(m_axis, dtype=np.int64)
    pos_of_gray[gray] = pos  # Gray code -> PAM level index
    lab = np.arange(4**bits_per_axis)
    hi = lab >> bits_per_axis  # first half of the bits -> I axis
    lo = lab & (m_axis - 1)  # second half -> Q axis
    labels = pos_of_gray[hi] * m_axis + pos_of_gray[lo]
    return pts, labels


def _psk(L: int) -> tuple[np.ndarray, np.ndarray]:
    m = 2**L
    k = np.arange(m)
    pts = np.exp(2j * np.pi * k / m)
    gray = _gray(k)
    labels = np.empty(m, dtype=np.int64)
    labels[gray] = k  # ring position of each label
    return pts, labels


def make_constellation(kind: str, labeling: str = "Gray") -> Constellation:
    """Build one of the supported Gray-labeled unit-energy constellations.

    Parameters
    ----------
    kind : str
        ``"BPSK"``, ``"QPSK"``, ``"PSK8"``, ``"QAM16"`` or ``"QAM64"``.
    labeling : str
        Only ``"Gray"`` is supported (reflected-binary: per axis for QAM,
        around the ring for PSK).
    """
    if labeling != "Gray":
        raise ValueError(f"unsupported labeling: {labeling!r}")
    if kind == "BPSK":
        pts = np.array([1.0 + 0j, -1.0 + 0j])
        labels = np.array([0, 1], dtype=np.int64)
        L = 1
    elif kind == "QPSK":
        pts, labels = _qam(1)
        L = 2
    elif kind == "QAM16":
        pts, labels = _qam(2)
        L = 4
    elif kind == "QAM64":
        pts, labels = _qam(3)
        L = 6
    elif kind == "PSK8":
        pts, labels = _psk(3)
        L = 3
    else:
        raise ValueError(f"unsupported constellation kind: {kind!r}")
    return Constellation(kind, L, pts, labels)


def bits_to_int(bits: np.ndarray) -> np.ndarray:
    """Pack an MSB-first bit axis (last axis) into label integers."""
    bits = np.asarray(bits)
    L = bits.shape[-1]
    weights = 1 << np.arange(L - 1, -1, -1)
    return (bits * weights).sum(axis=-1)


def int_to_bits(vals: np.ndarray, L: int) -> np.ndarray:
    """Unpack label integers into an MSB-first bit axis appended last."""
    vals = np.asarray(vals)
    shifts = np.arange(L - 1, -1, -1)
    return ((vals[..., None] >> shifts) & 1).astype(np.uint8)


def map_bits(cons: Constellation, bits: np.ndarray) -> np.ndarray:
    """Map L-bit vectors (last axis) to constellation symbols.

    Returns the complex symbol array with the bit axis removed.  Raises
    ``ValueError`` if the trailing axis does not have length L or contains
    values outside {0, 1}.
    """
    bits = np.asarray(bits)
    if bits.shape[-1] != cons.L:
        raise ValueError(f"expected {cons.L} bits per symbol, got {bits.shape[-1]}")
    if bits.size and (bits.min() < 0 or bits.max() > 1):
        raise ValueError("bits must be 0/1 valued")
    return cons.symbols[bits_to_int(bits)]
