"""Multi-indices I = (i_1, ..., i_n) labelling jet coordinates u_I."""

from __future__ import annotations

from itertools import product as _cartesian


class MultiIndex(tuple):
    """Exponent vector of non-negative integers, one slot per independent variable.

    Positions are 0-based: ``MultiIndex((0, 2))`` is u_yy for n = 2.
    """

    __slots__ = ()

    def __new__(cls, entries=()):
        entries = tuple(int(e) for e in entries)
        if any(e < 0 for e in entries):
            raise ValueError(f"multi-index entries must be >= 0, got {entries}")
        return super().__new__(cls, entries)

    @classmethod
    def zero(cls, n: int) -> "MultiIndex":
        return cls((0,) * n)

    @classmethod
    def unit(cls, n: int, i: int, times: int = 1) -> "MultiIndex":
        e = [0] * n
        e[i] = times
        return cls(e)

    @property
    def n(self) -> int:
        return len(self)

    def order(self) -> int:
        return sum(self)

    def raised(self, i: int, times: int = 1) -> "MultiIndex":
        e = list(self)
        e[i] += times
        return MultiIndex(e)

    def last_minus(self, alpha: int) -> "MultiIndex":
        """I - alpha := (i_1, ..., i_{n-1}, i_n - alpha); requires alpha <= i_n."""
        if alpha > self[-1]:
            raise ValueError(f"cannot subtract {alpha} from last entry of {tuple(self)}")
        return MultiIndex(self[:-1] + (self[-1] - alpha,))

    def tangential(self) -> "MultiIndex":
        """I - i_n: the same index with the normal (last) slot zeroed."""
        return self.last_minus(self[-1])

    def __add__(self, other):
        if isinstance(other, MultiIndex):
            if len(other) != len(self):
                raise ValueError("multi-index length mismatch")
            return MultiIndex(a + b for a, b in zip(self, other))
        return NotImplemented

    def __repr__(self) -> str:
        return f"MultiIndex({tuple(self)})"


def multi_indices(n: int, max_order: int, min_order: int = 0) -> list[MultiIndex]:
    """All I in N_0^n with min_order <= |I| <= max_order, graded then lexicographic."""
    out = []
    for k in range(min_order, max_order + 1):
        level = [MultiIndex(c) for c in _cartesian(range(k + 1), repeat=n) if sum(c) == k]
        level.sort(reverse=True)
        out.extend(level)
    return out
