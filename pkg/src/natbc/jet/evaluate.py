"""Numeric evaluation and randomized identity testing."""

from __future__ import annotations

import math

import numpy as np

from .calculus import variables
from .expr import Constant, Expr, Indep, JetVar, Neg, Power, Product, Quotient, Sum, Unary, Var

DEFAULT_TRIALS = 200
DEFAULT_TOL = 1e-9
SAMPLE_LOW, SAMPLE_HIGH = -2.0, 2.0
REDRAW_FACTOR = 20
DEFAULT_SEED = 20240611


class DomainViolation(ArithmeticError):
    """Division by zero, sqrt of a negative, ln of a non-positive, ... at an evaluation point."""

    def __init__(self, message: str, subtree: Expr):
        self.subtree = subtree
        super().__init__(f"{message}: {subtree}")


class SamplingExhausted(RuntimeError):
    """Too many sample points fell outside the domain of the compared expressions."""


class JetPoint(dict):
    """Assignment JetVar -> value (floats or equally-shaped arrays)."""

    @classmethod
    def random(cls, space, rng=None, order=None, low=SAMPLE_LOW, high=SAMPLE_HIGH, size=None):
        rng = np.random.default_rng(rng)
        return cls({v: rng.uniform(low, high, size) for v in space.jet_vars(order)})

    def __missing__(self, key):
        raise KeyError(f"no value assigned to {key!r}")


_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


class _Evaluator:
    def __init__(self, env, shape):
        self.env = env
        self.shape = shape
        self.valid = np.ones(shape, dtype=bool)
        self.first_bad = None
        self.memo = {}

    def bad(self, mask, node, why):
        mask = np.asarray(mask, dtype=bool) & self.valid
        if mask.any():
            if self.first_bad is None:
                self.first_bad = (why, node)
            self.valid &= ~mask

    def __call__(self, e: Expr):
        k = id(e)
        hit = self.memo.get(k)
        if hit is not None:
            return hit[1]
        val = self._eval(e)
        self.memo[k] = (e, val)
        return val

    def _eval(self, e: Expr):
        if isinstance(e, Constant):
            return np.full(self.shape, float(e.value))
        if isinstance(e, Var):
            v = e.var
            try:
                val = self.env[v]
            except KeyError:
                raise KeyError(f"evaluation point has no value for {v!r}") from None
            return np.broadcast_to(np.asarray(val, dtype=float), self.shape)
        if isinstance(e, Sum):
            out = self(e.terms[0]).copy()
            for t in e.terms[1:]:
                out += self(t)
            return out
        if isinstance(e, Product):
            out = self(e.factors[0]).copy()
            for f in e.factors[1:]:
                out *= self(f)
            return out
        if isinstance(e, Neg):
            return -self(e.arg)
        if isinstance(e, Quotient):
            num, den = self(e.num), self(e.den)
            z = den == 0
            self.bad(z, e, "division by zero")
            with np.errstate(all="ignore"):
                return np.where(z, np.nan, num / np.where(z, 1.0, den))
        if isinstance(e, Power):
            b = self(e.base)
            p = e.exponent
            with np.errstate(all="ignore"):
                if p.denominator == 1:
                    k = int(p)
                    if k < 0:
                        z = b == 0
                        self.bad(z, e, "zero to a negative power")
                        return np.where(z, np.nan, np.where(z, 1.0, b) ** k)
                    return b**k
                neg = (b < 0) | ((b == 0) & (p < 0))
                self.bad(neg, e, "fractional power outside its domain")
                return np.where(neg, np.nan, np.abs(b) ** float(p))
        if isinstance(e, Unary):
            a = self(e.arg)
            with np.errstate(all="ignore"):
                if e.fn == "sqrt":
                    neg = a < 0
                    self.bad(neg, e, "sqrt of a negative number")
                    return np.where(neg, np.nan, np.sqrt(np.abs(a)))
                if e.fn == "ln":
                    neg = a <= 0
                    self.bad(neg, e, "ln of a non-positive number")
                    return np.where(neg, np.nan, np.log(np.where(neg, 1.0, a)))
                out = _FUNCS[e.fn](a)
                self.bad(~np.isfinite(out) & np.isfinite(a), e, f"{e.fn} overflow")
                return out
        raise TypeError(f"cannot evaluate {type(e).__name__}")


def evaluate_many(e: Expr, env) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized evaluation; returns (values, valid_mask). Invalid entries are NaN."""
    shape = np.broadcast_shapes(*(np.shape(v) for v in env.values())) if env else ()
    ev = _Evaluator(env, shape)
    vals = ev(e)
    valid = ev.valid & np.isfinite(vals)
    return np.where(valid, vals, np.nan), valid


def evaluate(e: Expr, point) -> float:
    """IEEE double value of e at a point; DomainViolation names the offending subtree."""
    ev = _Evaluator(point, ())
    val = ev(e)
    if ev.first_bad is not None:
        why, node = ev.first_bad
        raise DomainViolation(why, node)
    val = float(val)
    if not math.isfinite(val):
        raise DomainViolation("non-finite result", e)
    return val


def compile_numpy(e: Expr, order: list[JetVar]):
    """Return f(*arrays) evaluating e with the variables in ``order``; invalid points give NaN."""

    def f(*args):
        env = dict(zip(order, args))
        vals, _ = evaluate_many(e, env)
        return vals

    return f


def equivalent(
    a: Expr,
    b: Expr,
    trials: int = DEFAULT_TRIALS,
    tol: float = DEFAULT_TOL,
    seed=None,
    low: float = SAMPLE_LOW,
    high: float = SAMPLE_HIGH,
) -> bool:
    """Randomized identity test.

    Draws every variable of a and b uniformly from [low, high], discards points
    where either side is undefined, and requires |a - b| <= tol * (1 + |a|) at
    ``trials`` valid points.  At most ``REDRAW_FACTOR * trials`` points are drawn.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    vs = sorted(variables(a) | variables(b), key=lambda v: v.key())
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    budget = REDRAW_FACTOR * trials
    drawn = 0
    got = 0
    while got < trials:
        want = trials - got
        batch = min(max(2 * want, 16), budget - drawn)
        if batch <= 0:
            raise SamplingExhausted(f"only {got} of {trials} sample points were in the domain")
        env = {v: rng.uniform(low, high, batch) for v in vs}
        drawn += batch
        va, ma = evaluate_many(a, env) if vs else _const_eval(a, batch)
        vb, mb = evaluate_many(b, env) if vs else _const_eval(b, batch)
        ok = ma & mb
        if not ok.any():
            continue
        va, vb = va[ok][:want], vb[ok][:want]
        if np.any(np.abs(va - vb) > tol * (1.0 + np.abs(va))):
            return False
        got += len(va)
    return True


def _const_eval(e, batch):
    vals, valid = evaluate_many(e, {Indep(0): np.zeros(batch)})
    return vals, valid


def max_discrepancy(a: Expr, b: Expr, points: int = 100, seed=None) -> float:
    """Largest |a - b| / (1 + |a|) over random valid points (diagnostics)."""
    vs = sorted(variables(a) | variables(b), key=lambda v: v.key())
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    env = {v: rng.uniform(SAMPLE_LOW, SAMPLE_HIGH, points) for v in vs} or {Indep(0): np.zeros(points)}
    va, ma = evaluate_many(a, env)
    vb, mb = evaluate_many(b, env)
    ok = ma & mb
    if not ok.any():
        return math.nan
    return float(np.max(np.abs(va[ok] - vb[ok]) / (1.0 + np.abs(va[ok]))))


__all__ = [
    "DomainViolation",
    "SamplingExhausted",
    "JetPoint",
    "evaluate",
    "evaluate_many",
    "equivalent",
    "compile_numpy",
    "max_discrepancy",
]
