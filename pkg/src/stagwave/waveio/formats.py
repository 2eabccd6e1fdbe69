"""Run configuration, state snapshots and CSV outputs.

Snapshots are one text file: a ``#``-prefixed JSON header line followed
by CSV rows ``eta_i, phi_i0, ..., phi_i(Ns-1)`` written with 17
significant digits, which round-trips float64 exactly.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, ParameterError
from ..operator.grid import Grid
from ..operator.system import WaveState
from ..trivial_flow import FlowParameters, solve_trivial
from ..vorticity import VorticityModel

FMT = "%.17g"
SNAPSHOT_VERSION = 1


# -- run configuration ---------------------------------------------------------

@dataclass
class RunConfig:
    vorticity: VorticityModel
    mu: float
    lam: float | None
    kappa: float
    mode_n: int
    Nx: int = 64
    Ns: int = 33
    continuation: dict = field(default_factory=dict)
    root: str = "positive"

    def params(self) -> FlowParameters:
        if self.lam is None:
            raise ConfigError("parameters.lambda is required for this command")
        return FlowParameters(self.mu, self.lam)

    def to_dict(self) -> dict:
        return {
            "vorticity": self.vorticity.to_dict(),
            "parameters": {"mu": self.mu, "lambda": self.lam if self.lam is not None else "auto"},
            "kappa": self.kappa,
            "mode_n": self.mode_n,
            "grid": {"Nx": self.Nx, "Ns": self.Ns},
            "continuation": dict(self.continuation),
            "root": self.root,
        }


def _number(data, key, where, default=None, integer=False):
    if key not in data:
        if default is not None:
            return default
        raise ConfigError(f"missing {where}.{key}")
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}.{key} must be a finite number, got {v!r}")
    if integer:
        if int(v) != v:
            raise ConfigError(f"{where}.{key} must be an integer")
        return int(v)
    return float(v)


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("run configuration must be a JSON object")
    try:
        model = VorticityModel.from_dict(data["vorticity"])
    except KeyError as exc:
        raise ConfigError("missing vorticity") from exc
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    params = data.get("parameters")
    if not isinstance(params, dict):
        raise ConfigError("missing parameters object")
    mu = _number(params, "mu", "parameters")
    lam_raw = params.get("lambda", "auto")
    if lam_raw in (None, "auto"):
        lam = None
    else:
        lam = _number(params, "lambda", "parameters")
        if lam == 0.0:
            raise ConfigError("parameters.lambda must be nonzero")
    kappa = _number(data, "kappa", "config")
    if kappa <= 0:
        raise ConfigError("kappa must be positive")
    mode_n = _number(data, "mode_n", "config", default=1, integer=True)
    grid = data.get("grid", {}) or {}
    if not isinstance(grid, dict):
        raise ConfigError("grid must be an object")
    Nx = _number(grid, "Nx", "grid", default=64, integer=True)
    Ns = _number(grid, "Ns", "grid", default=33, integer=True)
    if Nx < 8 or Ns < 8:
        raise ConfigError("grid.Nx and grid.Ns must be at least 8")
    cont = data.get("continuation", {}) or {}
    if not isinstance(cont, dict):
        raise ConfigError("continuation must be an object")
    root = data.get("root", "positive")
    if root not in ("positive", "negative"):
        raise ConfigError("root must be 'positive' or 'negative'")
    return RunConfig(model, mu, lam, kappa, mode_n, Nx, Ns, dict(cont), root)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return parse_config(data)


# -- snapshots ---------------------------------------------------------------------

def write_snapshot(path, state: WaveState, meta: dict | None = None) -> Path:
    path = Path(path)
    header = {
        "format": "stagwave-snapshot",
        "version": SNAPSHOT_VERSION,
        "mu": state.flow.mu,
        "lambda": state.flow.lam,
        "grid": state.grid.to_dict(),
        "vorticity": state.model.to_dict(),
        "flow_tol": state.flow.tol,
    }
    if meta:
        header.update(meta)
    payload = np.column_stack([state.eta, state.phi])
    buf = io.StringIO()
    np.savetxt(buf, payload, fmt=FMT, delimiter=",")
    with open(path, "w") as fh:
        fh.write("# " + json.dumps(header) + "\n")
        fh.write(buf.getvalue())
    return path


def read_snapshot(path):
    """(WaveState, header) from :func:`write_snapshot` output."""
    path = Path(path)
    try:
        with open(path) as fh:
            first = fh.readline()
            body = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read snapshot {path}: {exc}") from exc
    if not first.startswith("# "):
        raise ConfigError(f"{path} has no snapshot header")
    try:
        header = json.loads(first[2:])
    except json.JSONDecodeError as exc:
        raise ConfigError(f"corrupt snapshot header in {path}") from exc
    g = header["grid"]
    grid = Grid(float(g["kappa_eff"]), int(g["Nx"]), int(g["Ns"]))
    data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
    if data.shape != (grid.Nx, grid.Ns + 1):
        raise ConfigError(f"snapshot payload has shape {data.shape}")
    model = VorticityModel.from_dict(header["vorticity"])
    flow = solve_trivial(model, FlowParameters(header["mu"], header["lambda"]),
                         header.get("flow_tol", 1e-12))
    return WaveState(data[:, 0].copy(), data[:, 1:].copy(), flow, grid), header


# -- CSV writers ---------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FMT % v
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


BRANCH_COLUMNS = ["t", "mu", "eta_inf", "eta_max", "min_depth", "min_shear", "inv_size",
                  "newton_iters", "lambda", "residual_norm", "snapshot"]


def branch_rows(branch, snapshot_names=None):
    for i, p in enumerate(branch.points):
        m = p.monitors
        name = snapshot_names[i] if snapshot_names else ""
        yield [p.t, p.mu, float(np.max(np.abs(p.state.eta))), m.eta_max, m.min_depth,
               m.min_shear, m.inv_size, p.newton_iters, p.lam, p.residual_norm, name]


def write_branch_log(path, branch, snapshot_names=None, append: bool = False) -> Path:
    path = Path(path)
    rows = list(branch_rows(branch, snapshot_names))
    if append and path.exists():
        with open(path, "a", newline="") as fh:
            w = csv.writer(fh)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        return path
    return write_csv(path, BRANCH_COLUMNS, rows)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_trivial_csv(path, flow, points: int = 101) -> Path:
    s = np.linspace(0.0, 1.0, points)
    y = flow.state(s)
    rows = np.column_stack([s, y[0], y[1], y[2], y[4]])
    return write_csv(path, ["s", "psi_bar", "psi_bar_s", "psi_mu", "psi_lambda"], rows)


def write_field_csv(path, field) -> Path:
    u, v = field.u_rel
    p = field.p if field.p is not None else np.full_like(field.psi, np.nan)
    X = np.repeat(field.x[:, None], field.s.size, axis=1)
    S = np.repeat(field.s[None, :], field.x.size, axis=0)
    rows = np.column_stack([a.ravel() for a in (X, S, field.y, field.psi, u, v, p)])
    return write_csv(path, ["x", "s", "y", "psi", "u_minus_c", "v", "p"], rows)


def write_contours_csv(path, contours) -> Path:
    rows = []
    for cid, c in enumerate(contours.contours):
        tag = "critical-layer" if c.encloses else ("closed" if c.closed else "open")
        for x, y in c.points:
            rows.append([cid, c.level, tag, x, y])
    return write_csv(path, ["contour", "level", "tag", "x", "y"], rows)
