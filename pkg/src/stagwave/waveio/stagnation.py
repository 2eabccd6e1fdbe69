"""Interior stagnation points, streamlines and critical layers.

Because the flattening map is a diffeomorphism, grad psi = 0 in the fluid
exactly where psi_hat_x = psi_hat_s = 0 in the strip, so the search runs
in (x, s) and results are mapped to y = (1 + eta) s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from matplotlib.path import Path
from scipy.optimize import brentq
from skimage import measure

from .fields import PhysicalField

_EDGE = 1e-6


@dataclass
class StagnationPoint:
    x: float
    y: float
    s: float
    kind: str  # "center", "saddle" or "degenerate"
    psi: float
    polished: bool = True
    gradient: float = 0.0


@dataclass
class StagnationResult:
    points: list
    events: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def xy(self) -> list:
        return [(p.x, p.y) for p in self.points]


def _classify(d: dict) -> str:
    det = d["xx"] * d["ss"] - d["xs"] ** 2
    scale = max(abs(d["xx"] * d["ss"]), d["xs"] ** 2, 1e-300)
    if abs(det) <= 1e-10 * scale:
        return "degenerate"
    return "center" if det > 0 else "saddle"


def _newton(interp, x, s, tol, lo_s, hi_s, max_iter=30):
    for _ in range(max_iter):
        d = interp.derivs(x, s)
        g = np.array([d["x"], d["s"]])
        if np.max(np.abs(g)) <= tol:
            return x, s, d, True
        Hm = np.array([[d["xx"], d["xs"]], [d["xs"], d["ss"]]])
        try:
            dx, ds = np.linalg.solve(Hm, g)
        except np.linalg.LinAlgError:
            return x, s, d, False
        x, s = x - dx, s - ds
        if not (lo_s < s < hi_s):
            return x, s, d, False
    d = interp.derivs(x, s)
    return x, s, d, bool(max(abs(d["x"]), abs(d["s"])) <= tol)


def stagnation_points(field: PhysicalField, tol: float = 1e-10, nx_scan: int = 256,
                      ns_scan: int = 256, flat_tol: float = 1e-12) -> StagnationResult:
    """Interior zeros of grad psi over one period, with saddle/center labels."""
    interp = field.interp
    period = field.period
    result = StagnationResult(points=[])
    xs = np.linspace(0.0, period, nx_scan, endpoint=False)
    ss = np.linspace(0.0, 1.0, ns_scan)[1:-1]
    Px = interp.psi_hat_mesh(xs, ss, 1, 0)
    Ps = interp.psi_hat_mesh(xs, ss, 0, 1)
    scale = max(float(np.max(np.abs(Ps))), 1e-300)

    # x-independent flow: zeros of psi_s form whole lines
    if float(np.max(np.abs(Px))) <= flat_tol * scale:
        col = Ps[0]
        for j in np.nonzero(np.sign(col[:-1]) * np.sign(col[1:]) <= 0)[0]:
            f = lambda s: float(interp.psi_hat_mesh(0.0, s, 0, 1)[0, 0])
            s0 = brentq(f, ss[j], ss[j + 1], xtol=1e-14) if f(ss[j]) * f(ss[j + 1]) < 0 \
                else float(ss[j])
            y0 = (1.0 + float(interp.eta(0.0))) * s0
            result.events.append({"event": "degenerate-line", "s": s0, "y": y0})
        return result

    cands = []
    # the symmetry lines x = 0 and x = period/2 carry psi_x = 0 identically
    for xl in (0.0, 0.5 * period):
        col = interp.psi_hat_mesh(xl, ss, 0, 1)[0]
        for j in np.nonzero(np.sign(col[:-1]) * np.sign(col[1:]) < 0)[0]:
            f = lambda s, xl=xl: float(interp.psi_hat_mesh(xl, s, 0, 1)[0, 0])
            cands.append((xl, brentq(f, ss[j], ss[j + 1], xtol=1e-15)))
    # off-axis candidates: cells where both components change sign
    def changes(a):
        # corners of cell (i, j), periodic in x
        nxt = np.roll(a, -1, axis=0)
        quad = np.stack([a[:, :-1], a[:, 1:], nxt[:, :-1], nxt[:, 1:]])
        return (quad.max(0) > 0) & (quad.min(0) < 0)

    cells = np.argwhere(changes(Px) & changes(Ps))
    for i, j in cells:
        xc = xs[i] + 0.5 * (xs[1] - xs[0])
        sc = 0.5 * (ss[j] + ss[j + 1])
        # the symmetry lines were handled exactly above
        if min(abs(xc), abs(xc - 0.5 * period), abs(xc - period)) < 2 * (xs[1] - xs[0]):
            continue
        cands.append((xc, sc))

    found = []
    for x0, s0 in cands:
        x, s, d, ok = _newton(interp, x0, s0, tol, _EDGE, 1 - _EDGE)
        if not (_EDGE < s < 1 - _EDGE):
            continue
        x = x % period
        if any(math.hypot((x - q.x + period / 2) % period - period / 2, s - q.s) < 1e-7
               for q in found):
            continue
        grad = max(abs(d["x"]), abs(d["s"]))
        y = (1.0 + float(interp.eta(x))) * s
        found.append(StagnationPoint(x=float(x), y=float(y), s=float(s), kind=_classify(d),
                                     psi=d["psi"], polished=ok, gradient=grad))
    found.sort(key=lambda p: (p.x, p.s))
    result.points = found
    return result


@dataclass
class Contour:
    level: float
    points: np.ndarray  # (m, 2) physical (x, y)
    closed: bool
    encloses: list = field(default_factory=list)


@dataclass
class ContourSet:
    contours: list
    critical_layers: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.contours)

    def __len__(self):
        return len(self.contours)

    @property
    def closed(self) -> list:
        return [c for c in self.contours if c.closed]


def streamlines(field: PhysicalField, levels, stagnation: StagnationResult | None = None,
                nx: int = 400, ns: int = 200, periods: int = 2) -> ContourSet:
    """Marching-squares level sets of psi over ``periods`` wavelengths.

    The window is centred on x = 0, so cells around either symmetry line
    are interior. A critical layer is a closed contour containing a center.
    """
    interp = field.interp
    period = field.period
    half = 0.5 * periods * period
    xs = np.linspace(-half, half, nx)
    ss = np.linspace(0.0, 1.0, ns)
    psi = interp.psi_hat_mesh(xs, ss)
    eta = interp.eta(xs)
    centers = []
    if stagnation is not None:
        for k, p in enumerate(stagnation.points):
            if p.kind != "center":
                continue
            for shift in range(-periods, periods + 1):
                xc = p.x + shift * period
                if -half < xc < half:
                    centers.append((k, xc, p.y))
    out = ContourSet(contours=[])
    for level in np.atleast_1d(levels):
        for c in measure.find_contours(psi, float(level)):
            # fractional indices -> (x, s) -> physical (x, y)
            xi = np.interp(c[:, 0], np.arange(nx), xs)
            si = np.interp(c[:, 1], np.arange(ns), ss)
            yi = (1.0 + np.interp(xi, xs, eta)) * si
            pts = np.column_stack([xi, yi])
            closed = bool(len(c) > 3 and np.allclose(c[0], c[-1]))
            con = Contour(level=float(level), points=pts, closed=closed)
            if closed and centers:
                path = Path(pts)
                con.encloses = sorted({k for k, xc, yc in centers
                                       if path.contains_point((xc, yc))})
                if con.encloses:
                    out.critical_layers.append(con)
            out.contours.append(con)
    return out


def critical_layer_levels(stagnation: StagnationResult,
                          fractions=(0.25, 0.5, 0.75)) -> list:
    """Levels between each center and the nearest saddle value of psi."""
    centers = [p for p in stagnation.points if p.kind == "center"]
    saddles = [p for p in stagnation.points if p.kind == "saddle"]
    levels = []
    for c in centers:
        if not saddles:
            continue
        sd = min(saddles, key=lambda q: abs(q.psi - c.psi))
        levels += [c.psi + f * (sd.psi - c.psi) for f in fractions]
    return levels
