"""Real-analytic vorticity distributions with bounded derivative.

Every supported family is stored in one normal form

    gamma(t) = offset + slope * t + sum_i a_i * sin(k_i * t)

which covers constant, affine, degree-one polynomial and trigonometric
series distributions. All derivatives and the antiderivative
``Gamma(t) = int_0^t gamma`` are available in closed form, and
``gamma'`` is bounded on the real line by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

KINDS = ("constant", "affine", "polynomial", "trig-series")


@dataclass(frozen=True)
class VorticityModel:
    kind: str
    coefficients: tuple = ()
    offset: float = 0.0
    slope: float = 0.0
    terms: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown vorticity kind {self.kind!r}")
        for a, k in self.terms:
            if not (np.isfinite(a) and np.isfinite(k)):
                raise ParameterError("trig-series terms must be finite")
        if not (np.isfinite(self.offset) and np.isfinite(self.slope)):
            raise ParameterError("vorticity coefficients must be finite")

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, omega0: float) -> "VorticityModel":
        """gamma(t) = omega0."""
        omega0 = float(omega0)
        return cls("constant", (omega0,), offset=omega0)

    @classmethod
    def affine(cls, omega0: float) -> "VorticityModel":
        """gamma(t) = omega0 * t."""
        omega0 = float(omega0)
        return cls("affine", (omega0,), slope=omega0)

    @classmethod
    def polynomial(cls, coefficients) -> "VorticityModel":
        """gamma(t) = c0 + c1 t; higher degrees would make gamma' unbounded."""
        c = [float(v) for v in coefficients]
        while len(c) > 2 and c[-1] == 0.0:
            c.pop()
        if len(c) > 2:
            raise ParameterError(
                "polynomial vorticity of degree >= 2 has unbounded derivative"
            )
        c += [0.0] * (2 - len(c))
        return cls("polynomial", tuple(c), offset=c[0], slope=c[1])

    @classmethod
    def trig_series(cls, terms, offset: float = 0.0, slope: float = 0.0):
        """gamma(t) = offset + slope t + sum a sin(k t) for (a, k) in terms."""
        pairs = tuple((float(a), float(k)) for a, k in terms)
        flat = tuple(v for pair in pairs for v in pair)
        return cls("trig-series", flat, offset=float(offset), slope=float(slope),
                   terms=pairs)

    # -- evaluation -------------------------------------------------------
    @staticmethod
    def _arg(t):
        t = np.asarray(t)
        return t if t.dtype.kind == "f" else t.astype(float)

    def _amp_freq(self):
        if not self.terms:
            return np.zeros(0), np.zeros(0)
        arr = np.asarray(self.terms, dtype=float)
        return arr[:, 0], arr[:, 1]

    def gamma(self, t):
        t = self._arg(t)
        out = self.offset + self.slope * t
        for a, k in self.terms:
            out = out + a * np.sin(k * t)
        return out

    def d1(self, t):
        t = self._arg(t)
        out = np.full_like(t, self.slope)
        for a, k in self.terms:
            out = out + a * k * np.cos(k * t)
        return out

    def d2(self, t):
        t = self._arg(t)
        out = np.zeros_like(t)
        for a, k in self.terms:
            out = out - a * k * k * np.sin(k * t)
        return out

    def antiderivative(self, t):
        t = self._arg(t)
        out = self.offset * t + 0.5 * self.slope * t * t
        for a, k in self.terms:
            if k != 0.0:
                out = out + (a / k) * (1.0 - np.cos(k * t))
        return out

    def eval(self, t, order: int = 0):
        if order == 0:
            out = self.gamma(t)
        elif order == 1:
            out = self.d1(t)
        elif order == 2:
            out = self.d2(t)
        else:
            raise ParameterError(f"unsupported derivative order {order!r}")
        return float(out) if np.ndim(out) == 0 else out

    def local(self, t: float) -> tuple[float, float, float]:
        """(gamma, gamma', gamma'') at a scalar; used inside ODE right-hand sides."""
        g = self.offset + self.slope * t
        g1 = self.slope
        g2 = 0.0
        for a, k in self.terms:
            sn = math.sin(k * t)
            g += a * sn
            g1 += a * k * math.cos(k * t)
            g2 -= a * k * k * sn
        return g, g1, g2

    def derivative_bounds(self) -> tuple[float, float]:
        """Return (rho, R) with rho <= gamma'(t) <= R for every real t.

        Exact for constant, affine and single-term series. With several
        incommensurate terms the triangle-inequality bound is returned,
        which is still a valid enclosure.
        """
        a, k = self._amp_freq()
        spread = float(np.sum(np.abs(a * k)))
        return self.slope - spread, self.slope + spread

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        if self.kind in ("constant", "affine"):
            return {"kind": self.kind, "omega0": self.coefficients[0]}
        if self.kind == "polynomial":
            return {"kind": self.kind, "coefficients": list(self.coefficients)}
        return {
            "kind": self.kind,
            "terms": [list(p) for p in self.terms],
            "offset": self.offset,
            "slope": self.slope,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VorticityModel":
        try:
            kind = data["kind"]
            if kind == "constant":
                return cls.constant(data["omega0"])
            if kind == "affine":
                return cls.affine(data["omega0"])
            if kind == "polynomial":
                return cls.polynomial(data["coefficients"])
            if kind == "trig-series":
                return cls.trig_series(
                    data.get("terms", []), data.get("offset", 0.0), data.get("slope", 0.0)
                )
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed vorticity record {data!r}") from exc
        raise ParameterError(f"unknown vorticity kind {kind!r}")


def evaluate(model: VorticityModel, t, order: int = 0):
    return model.eval(t, order)


def antiderivative(model: VorticityModel, t):
    out = model.antiderivative(t)
    return float(out) if np.ndim(out) == 0 else out


def derivative_bounds(model: VorticityModel) -> tuple[float, float]:
    return model.derivative_bounds()
