"""Piecewise symbolic forcing terms with exact integrals.

A :class:`PiecewiseForcing` is an ordered list of :class:`ForcingPiece`
objects covering an interval.  Each piece is a constant, a polynomial or a
power singularity ``x -> -C |pole - x|**(-beta)`` whose pole sits at (or
beyond) one end of the piece.  All integrals against polynomial weights are
evaluated from antiderivatives, so there is no quadrature error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import NonIntegrableSingularity, OutOfDomain

_ZERO_COEF = 1e-14


@dataclass(frozen=True)
class Constant:
    c: float

    def poly(self):
        return np.array([float(self.c)])


@dataclass(frozen=True)
class Polynomial:
    """Polynomial with coefficients in ascending order."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def poly(self):
        return np.array(self.coeffs) if self.coeffs else np.array([0.0])


@dataclass(frozen=True)
class PowerSingularity:
    """``x -> -C * |pole - x| ** (-beta)``; negative for ``C > 0``."""

    C: float
    beta: float
    pole: float


Kind = Constant | Polynomial | PowerSingularity


def _antideriv_power(t, s):
    # antiderivative of t**s for t >= 0
    if s == -1.0:
        return math.log(t)
    return t ** (s + 1.0) / (s + 1.0)


@dataclass(frozen=True)
class ForcingPiece:
    lo: float
    hi: float
    kind: Kind

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"piece needs lo < hi, got ({self.lo}, {self.hi})")
        k = self.kind
        if isinstance(k, PowerSingularity):
            if self.lo < k.pole < self.hi:
                raise ValueError("power singularity pole lies inside its piece")
            if k.beta <= 0:
                raise ValueError("power singularity needs beta > 0")

    # -- evaluation ---------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = self.kind
        if isinstance(k, PowerSingularity):
            with np.errstate(divide="ignore"):
                return -k.C * np.abs(k.pole - x) ** (-k.beta)
        return P.polyval(x, k.poly())

    @property
    def is_singular(self):
        return isinstance(self.kind, PowerSingularity)

    @property
    def is_zero(self):
        k = self.kind
        if isinstance(k, PowerSingularity):
            return k.C == 0.0
        return not np.any(k.poly())

    # -- exact integrals ----------------------------------------------------
    def integral(self, a, b, weight=(1.0,)):
        """Exact ``int_a^b f(x) w(x) dx`` for a polynomial weight ``w``.

        ``weight`` holds ascending coefficients.  ``[a, b]`` must lie in the
        closed piece.
        """
        a = max(a, self.lo)
        b = min(b, self.hi)
        if b <= a:
            return 0.0
        w = np.asarray(weight, dtype=float)
        k = self.kind
        if not isinstance(k, PowerSingularity):
            anti = P.polyint(P.polymul(k.poly(), w))
            return float(P.polyval(b, anti) - P.polyval(a, anti))
        if k.C == 0.0:
            return 0.0
        right = k.pole >= self.hi
        # substitute t = |pole - x|: w(x) = sum d_j t**j
        if right:
            shifted = _compose_affine(w, k.pole, -1.0)
            t_lo, t_hi = k.pole - b, k.pole - a
        else:
            shifted = _compose_affine(w, k.pole, 1.0)
            t_lo, t_hi = a - k.pole, b - k.pole
        scale = max(np.max(np.abs(shifted)), 1.0)
        total = 0.0
        for j, d in enumerate(shifted):
            if abs(d) <= _ZERO_COEF * scale:
                continue
            s = j - k.beta
            if t_lo <= 0.0:
                if s <= -1.0:
                    raise NonIntegrableSingularity(
                        f"integrand ~ t**{s:g} is not integrable at the pole {k.pole}"
                    )
                lower = 0.0
            else:
                lower = _antideriv_power(t_lo, s)
            total += d * (_antideriv_power(t_hi, s) - lower)
        return float(-k.C * total)

    def sine_integral(self, a, b, freq, phase):
        """``int_a^b f(x) sin(freq*x + phase) dx``.

        Polynomial pieces use the closed-form antiderivative
        ``e^{i theta} sum_j (-1)^j p^(j)(x) / (i k)^(j+1)``.  Singular pieces
        fall back to QUADPACK's algebraic-weight rule (QAWS).
        """
        a = max(a, self.lo)
        b = min(b, self.hi)
        if b <= a:
            return 0.0
        k = self.kind
        if not isinstance(k, PowerSingularity):
            return _poly_sine_integral(k.poly(), a, b, freq, phase)
        from scipy.integrate import quad

        s = lambda x: math.sin(freq * x + phase)  # noqa: E731
        if k.pole in (a, b):
            end = k.pole
            if k.beta >= 1.0:
                theta0 = freq * end + phase
                if k.beta >= 2.0 or abs(math.sin(theta0)) > 1e-12:
                    raise NonIntegrableSingularity("sine-weighted integral diverges at pole")
                # sin(theta0 + k t) = cos(theta0) sin(k t) with t = x - pole; move one power of |t| into sinc
                c0 = math.cos(theta0)
                sinc = lambda x: c0 * freq * np.sinc(freq * (x - end) / math.pi)  # noqa: E731
                sign = -1.0 if end == b else 1.0
                wvar = (0.0, 1.0 - k.beta) if end == b else (1.0 - k.beta, 0.0)
                val, _ = quad(sinc, a, b, weight="alg", wvar=wvar, epsabs=0, epsrel=1e-13, limit=200)
                val *= sign
            else:
                wvar = (0.0, -k.beta) if end == b else (-k.beta, 0.0)
                val, _ = quad(s, a, b, weight="alg", wvar=wvar, epsabs=0, epsrel=1e-13, limit=200)
        else:
            val, _ = quad(lambda x: float(self(x)) * s(x), a, b, epsabs=0, epsrel=1e-13, limit=200)
            return val
        return -k.C * val

    # -- structural helpers -------------------------------------------------
    def split(self, x):
        if not self.lo < x < self.hi:
            raise ValueError("split point must be interior")
        return ForcingPiece(self.lo, x, self.kind), ForcingPiece(x, self.hi, self.kind)

    def negated(self):
        k = self.kind
        if isinstance(k, PowerSingularity):
            return ForcingPiece(self.lo, self.hi, PowerSingularity(-k.C, k.beta, k.pole))
        if isinstance(k, Constant):
            return ForcingPiece(self.lo, self.hi, Constant(-k.c))
        return ForcingPiece(self.lo, self.hi, Polynomial(tuple(-c for c in k.coeffs)))

    def sign_subpieces(self):
        """Split at interior polynomial roots; yield ``(piece, sign)``."""
        k = self.kind
        if isinstance(k, PowerSingularity):
            return [(self, -int(np.sign(k.C)))]
        if isinstance(k, Constant):
            return [(self, int(np.sign(k.c)))]
        cuts = [self.lo]
        coeffs = np.trim_zeros(k.poly(), "b")
        if coeffs.size > 1:
            for r in P.polyroots(coeffs):
                if abs(r.imag) < 1e-12 and self.lo < r.real < self.hi:
                    cuts.append(float(r.real))
        cuts = sorted(set(cuts)) + [self.hi]
        out = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi - lo <= 1e-14 * max(1.0, abs(hi)):
                continue
            sgn = int(np.sign(P.polyval(0.5 * (lo + hi), k.poly())))
            out.append((ForcingPiece(lo, hi, k), sgn))
        return out

    def mirrored(self):
        """Reflection ``x -> -x``."""
        k = self.kind
        if isinstance(k, PowerSingularity):
            kind = PowerSingularity(k.C, k.beta, -k.pole)
        elif isinstance(k, Constant):
            kind = k
        else:
            kind = Polynomial(tuple(c * (-1) ** j for j, c in enumerate(k.coeffs)))
        return ForcingPiece(-self.hi, -self.lo, kind)


def _compose_affine(w, p, sign):
    """Coefficients of ``t -> w(p + sign*t)``."""
    out = np.zeros(len(w))
    base = np.array([p, sign])
    term = np.array([1.0])
    for c in w:
        out[: len(term)] += c * term
        term = P.polymul(term, base)
    return out


def _poly_sine_integral(coeffs, a, b, freq, phase):
    coeffs = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
    if coeffs.size == 0:
        return 0.0
    if freq == 0.0:
        anti = P.polyint(coeffs)
        return math.sin(phase) * float(P.polyval(b, anti) - P.polyval(a, anti))
    ik = 1j * freq

    def anti(x):
        acc = 0.0 + 0.0j
        d = coeffs
        j = 0
        while d.size:
            acc += (-1) ** j * P.polyval(x, d) / ik ** (j + 1)
            d = P.polyder(d) if d.size > 1 else np.array([])
            j += 1
        return (np.exp(1j * (freq * x + phase)) * acc).imag

    return float(anti(b) - anti(a))


class WeightKind(Enum):
    DISTANCE = "distance"
    TENT = "tent"
    FIRST_EIGENFUNCTION = "eigen"


@dataclass(frozen=True)
class PiecewiseForcing:
    pieces: tuple
    domain: tuple = field(default=None)

    def __post_init__(self):
        pieces = tuple(sorted(self.pieces, key=lambda p: p.lo))
        if not pieces:
            raise ValueError("a forcing needs at least one piece")
        object.__setattr__(self, "pieces", pieces)
        dom = self.domain if self.domain is not None else (pieces[0].lo, pieces[-1].hi)
        dom = (float(dom[0]), float(dom[1]))
        object.__setattr__(self, "domain", dom)
        if pieces[0].lo != dom[0] or pieces[-1].hi != dom[1]:
            raise ValueError("pieces must cover the domain")
        for left, right in zip(pieces[:-1], pieces[1:]):
            if left.hi != right.lo:
                raise ValueError(f"gap or overlap between pieces at {left.hi} / {right.lo}")

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, lo, hi):
        return cls((ForcingPiece(lo, hi, Constant(0.0)),))

    @classmethod
    def from_constants(cls, breaks: Sequence[float], values: Sequence[float]):
        if len(breaks) != len(values) + 1:
            raise ValueError("need len(breaks) == len(values) + 1")
        return cls(tuple(ForcingPiece(lo, hi, Constant(v)) for lo, hi, v in zip(breaks[:-1], breaks[1:], values)))

    @classmethod
    def symmetric(cls, radial_pieces: Sequence[ForcingPiece]):
        """Even extension to ``(-R, R)`` of a profile given on ``(0, R)``."""
        radial = cls(tuple(radial_pieces))
        if radial.domain[0] != 0.0:
            raise ValueError("radial profile must start at 0")
        mirrored = [p.mirrored() for p in radial.pieces]
        return cls(tuple(mirrored) + radial.pieces)

    # -- basic queries ------------------------------------------------------
    @property
    def length(self):
        return self.domain[1] - self.domain[0]

    @property
    def breakpoints(self):
        return np.array([p.lo for p in self.pieces] + [self.domain[1]])

    @property
    def is_symmetric_domain(self):
        return self.domain[0] == -self.domain[1]

    @property
    def max_beta(self):
        return max((p.kind.beta for p in self.pieces if p.is_singular and not p.is_zero), default=0.0)

    def in_l1(self):
        return self.max_beta < 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, np.nan)
        for i, p in enumerate(self.pieces):
            last = i == len(self.pieces) - 1
            mask = (x >= p.lo) & ((x <= p.hi) if last else (x < p.hi))
            if np.any(mask):
                out[mask] = p(x[mask])
        return out if out.ndim else float(out)

    def _check_range(self, a, b):
        lo, hi = self.domain
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        if a < lo - tol or b > hi + tol:
            raise OutOfDomain(f"[{a}, {b}] not inside domain {self.domain}")

    # -- integrals ----------------------------------------------------------
    def integrate(self, a=None, b=None, weight=(1.0,)):
        """Exact ``int_a^b f w`` with ``w`` a polynomial (ascending coefficients)."""
        a = self.domain[0] if a is None else a
        b = self.domain[1] if b is None else b
        if b < a:
            return -self.integrate(b, a, weight)
        self._check_range(a, b)
        return float(sum(p.integral(a, b, weight) for p in self.pieces if p.hi > a and p.lo < b))

    def sine_integral(self, a, b, freq, phase):
        self._check_range(a, b)
        return float(sum(p.sine_integral(a, b, freq, phase) for p in self.pieces if p.hi > a and p.lo < b))

    def positive_part(self):
        return self._sign_part(+1)

    def negative_part(self):
        """``f^- = -min(f, 0)`` (nonnegative)."""
        return self._sign_part(-1)

    def _sign_part(self, want):
        out = []
        for piece in self.pieces:
            for sub, sgn in piece.sign_subpieces():
                if sgn == want:
                    out.append(sub if want > 0 else sub.negated())
                else:
                    out.append(ForcingPiece(sub.lo, sub.hi, Constant(0.0)))
        return PiecewiseForcing(tuple(out), self.domain).simplified()

    def sign_pieces(self):
        """Sign-definite refinement: list of ``(piece, sign)``."""
        return [item for piece in self.pieces for item in piece.sign_subpieces()]

    def simplified(self):
        """Merge adjacent pieces carrying identical constant kinds."""
        merged = [self.pieces[0]]
        for p in self.pieces[1:]:
            q = merged[-1]
            if isinstance(p.kind, Constant) and p.kind == q.kind:
                merged[-1] = ForcingPiece(q.lo, p.hi, q.kind)
            else:
                merged.append(p)
        return PiecewiseForcing(tuple(merged), self.domain)

    def restrict(self, a, b):
        self._check_range(a, b)
        out = []
        for p in self.pieces:
            lo, hi = max(p.lo, a), min(p.hi, b)
            if hi > lo:
                out.append(ForcingPiece(lo, hi, p.kind))
        return PiecewiseForcing(tuple(out), (a, b))

    def radial_profile(self):
        """Profile on ``(0, R)``.

        A forcing on ``(-R, R)`` is restricted to its right half; a forcing
        whose domain already starts at 0 is returned unchanged.
        """
        lo, hi = self.domain
        if lo == 0.0:
            return self
        if lo == -hi:
            return self.restrict(0.0, hi)
        raise ValueError(f"domain {self.domain} is neither (0, R) nor (-R, R)")

    def extended(self, lo, hi):
        """Zero padding to the larger interval ``(lo, hi)``."""
        if lo > self.domain[0] or hi < self.domain[1]:
            raise ValueError("extension must contain the current domain")
        pieces = list(self.pieces)
        if lo < self.domain[0]:
            pieces.insert(0, ForcingPiece(lo, self.domain[0], Constant(0.0)))
        if hi > self.domain[1]:
            pieces.append(ForcingPiece(self.domain[1], hi, Constant(0.0)))
        return PiecewiseForcing(tuple(pieces), (lo, hi))

    def scaled(self, factor):
        """Multiply the forcing values by ``factor``."""
        out = []
        for p in self.pieces:
            k = p.kind
            if isinstance(k, Constant):
                kind = Constant(factor * k.c)
            elif isinstance(k, Polynomial):
                kind = Polynomial(tuple(factor * c for c in k.coeffs))
            else:
                kind = PowerSingularity(factor * k.C, k.beta, k.pole)
            out.append(ForcingPiece(p.lo, p.hi, kind))
        return PiecewiseForcing(tuple(out), self.domain)

    def stretched(self, s):
        """``x -> f(x / s)`` on the domain scaled by ``s > 0``."""
        out = []
        for p in self.pieces:
            k = p.kind
            if isinstance(k, Constant):
                kind = k
            elif isinstance(k, Polynomial):
                kind = Polynomial(tuple(c / s**j for j, c in enumerate(k.coeffs)))
            else:
                kind = PowerSingularity(k.C * s**k.beta, k.beta, k.pole * s)
            out.append(ForcingPiece(p.lo * s, p.hi * s, kind))
        return PiecewiseForcing(tuple(out), (self.domain[0] * s, self.domain[1] * s))


# -- module-level operations -------------------------------------------------


def integrate(f: PiecewiseForcing, a: float, b: float) -> float:
    """Exact ``int_a^b f``."""
    return f.integrate(a, b)


def weighted_integral(f: PiecewiseForcing, w: WeightKind, a=None, b=None, R=None) -> float:
    """Exact ``int_a^b f w`` for the supported weights.

    DISTANCE is the distance to the boundary of ``f.domain``; TENT is
    ``R - s`` (``R`` defaults to the right end of the domain);
    FIRST_EIGENFUNCTION is ``sin(pi (x - lo) / L)`` on ``f.domain``.
    """
    lo, hi = f.domain
    a = lo if a is None else a
    b = hi if b is None else b
    w = WeightKind(w)
    if w is WeightKind.TENT:
        R = hi if R is None else R
        return f.integrate(a, b, (R, -1.0))
    if w is WeightKind.DISTANCE:
        mid = 0.5 * (lo + hi)
        total = 0.0
        if a < mid:
            total += f.integrate(a, min(b, mid), (-lo, 1.0))
        if b > mid:
            total += f.integrate(max(a, mid), b, (hi, -1.0))
        return total
    k = math.pi / (hi - lo)
    return f.sine_integral(a, b, k, -k * lo)


def double_tail_integral(f_minus: PiecewiseForcing, r0: float, r: float, R: float) -> float:
    """Exact ``int_r^R ( int_{r0}^t f_minus(s) ds ) dt`` for ``r0 <= r <= R``.

    Swapping the order of integration gives
    ``(R - r) int_{r0}^r f_minus + int_r^R f_minus(s) (R - s) ds``.
    """
    if not r0 <= r <= R:
        raise ValueError("need r0 <= r <= R")
    if r == R:
        return 0.0
    head = (R - r) * f_minus.integrate(r0, r) if r > r0 else 0.0
    return head + f_minus.integrate(r, R, (R, -1.0))
