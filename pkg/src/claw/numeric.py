"""Fixed-step RK4 integration of state + adjoint systems and drift monitoring."""
from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import sympy as sp

from . import symexpr as sx
from .errors import DomainError, NonFinite, UnboundSymbol


@dataclass(frozen=True)
class NumericConfig:
    t0: float = 0.0
    t1: float = 10.0
    h: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError("t1 must exceed t0")
        if not self.h > 0:
            raise ValueError("step size must be positive")
        if (self.t1 - self.t0) / self.h < 1:
            raise ValueError("interval must hold at least one step")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    adjoints: np.ndarray
    params: dict
    min_state: float = field(default=math.inf)

    def __post_init__(self):
        if not len(self.times) == len(self.states) == len(self.adjoints):
            raise ValueError("trajectory arrays must share one length")

    @property
    def m(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True)
class Drift:
    name: str
    initial: float
    max_abs: float
    max_rel: float


@dataclass(frozen=True)
class DriftReport:
    entries: tuple

    def __getitem__(self, name) -> Drift:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)


def sample_params(params: Sequence[sp.Symbol], seed: int, low=0.05, high=1.0) -> dict:
    rng = random.Random(seed)
    return {p: rng.uniform(low, high) for p in params}


def _denominators(exprs) -> list:
    dens = []
    for e in exprs:
        _, den = sp.fraction(sp.together(e))
        if den.free_symbols:
            dens.append(den)
    return dens


def _time_grid(cfg: NumericConfig) -> np.ndarray:
    n = int(math.floor((cfg.t1 - cfg.t0) / cfg.h * (1 + 1e-12)))
    times = cfg.t0 + cfg.h * np.arange(n + 1)
    if cfg.t1 - times[-1] > 1e-12 * max(1.0, abs(cfg.t1)):
        times = np.append(times, cfg.t1)
    else:
        times[-1] = cfg.t1
    return times


def _jet(m):
    return [sx.T, *(sx.u(k) for k in range(1, m + 1)), *(sx.v(k) for k in range(1, m + 1))]


def _compile(exprs, args):
    # numpy exp keeps long doubles long; everything else is plain arithmetic
    return sp.lambdify(args, list(exprs), modules=[{"exp": np.exp}, "math"], cse=True)


def _bind_params(params: Mapping) -> dict:
    return {sp.Symbol(k) if isinstance(k, str) else k: float(val) for k, val in params.items()}


def integrate(
    sys,
    adj,
    params: Mapping,
    u0,
    v0,
    cfg: NumericConfig,
    *,
    dtype=np.longdouble,
    require_positive=True,
) -> Trajectory:
    """Classical RK4 on the combined 2m-dimensional system, landing on t1.

    Arithmetic runs in ``dtype`` (80-bit extended by default) with a
    compensated step update, which keeps rounding well below the
    truncation error at the step sizes used for drift checks.
    """
    m = sys.m
    params = _bind_params(params)
    missing = set(sys.params) - set(params)
    if missing:
        raise UnboundSymbol("unbound parameter(s): " + ", ".join(sorted(p.name for p in missing)))
    u0 = np.asarray(u0, dtype=dtype)
    v0 = np.asarray(v0, dtype=dtype)
    if u0.shape != (m,) or v0.shape != (m,):
        raise ValueError(f"initial values need {m} state and {m} adjoint components")
    if require_positive and (np.any(u0 <= 0) or u0.sum() <= 0):
        raise DomainError("initial state must be componentwise positive")

    pnames = sorted(params, key=lambda p: p.name)
    args = _jet(m) + pnames
    pvals = [dtype(params[p]) for p in pnames]
    rhs_exprs = [*sys.f, *adj.g]
    rhs = _compile(rhs_exprs, args)
    dens = _denominators(rhs_exprs)
    den_fn = _compile(dens, args) if dens else None

    def f(t, y):
        try:
            return np.array(rhs(t, *y, *pvals), dtype=dtype)
        except OverflowError as exc:
            raise NonFinite(f"overflow at t={float(t)}") from exc
        except FloatingPointError as exc:
            if "overflow" in str(exc):
                raise NonFinite(f"overflow at t={float(t)}") from exc
            raise DomainError(f"pole hit at t={float(t)}") from exc
        except ZeroDivisionError as exc:
            raise DomainError(f"pole hit at t={float(t)}") from exc

    def den_signs(t, y):
        try:
            return np.sign(np.array(den_fn(t, *y, *pvals), dtype=dtype))
        except (ZeroDivisionError, FloatingPointError, OverflowError) as exc:
            raise DomainError(f"pole hit at t={float(t)}") from exc

    times = _time_grid(cfg).astype(dtype)
    ys = np.empty((len(times), 2 * m), dtype=dtype)
    y = np.concatenate([u0, v0])
    carry = np.zeros_like(y)  # Kahan compensation for the step update
    ys[0] = y
    den_sign = den_signs(times[0], y) if den_fn is not None else None
    if den_sign is not None and np.any(den_sign == 0):
        raise DomainError("initial point lies on a pole")
    half = dtype(0.5)
    sixth = dtype(1) / dtype(6)
    with np.errstate(divide="raise", over="raise", invalid="raise"):
        for i in range(1, len(times)):
            t = times[i - 1]
            h = times[i] - t
            try:
                k1 = f(t, y)
                k2 = f(t + h * half, y + h * half * k1)
                k3 = f(t + h * half, y + h * half * k2)
                k4 = f(t + h, y + h * k3)
                incr = h * sixth * (k1 + 2 * k2 + 2 * k3 + k4) - carry
                new = y + incr
                carry = (new - y) - incr
            except FloatingPointError as exc:
                raise NonFinite(f"overflow at t={float(t)}") from exc
            y = new
            if not np.all(np.isfinite(y)):
                raise NonFinite(f"non-finite state at t={float(times[i])}")
            if den_fn is not None:
                signs = den_signs(times[i], y)
                if np.any(signs == 0) or np.any(signs != den_sign):
                    raise DomainError(f"denominator crossed a pole at t={float(times[i])}")
            if require_positive and np.any(y[:m] <= 0):
                raise DomainError(f"state left the positive orthant at t={float(times[i])}")
            ys[i] = y
    return Trajectory(times, ys[:, :m].copy(), ys[:, m:].copy(), params, float(ys[:, :m].min()))


def evaluate_along(traj: Trajectory, expr) -> np.ndarray:
    m = traj.m
    pnames = sorted(traj.params, key=lambda p: p.name)
    e = sx.exact(expr)
    stray = e.free_symbols - set(_jet(m)) - set(pnames)
    if stray:
        raise UnboundSymbol("unbound symbol(s): " + ", ".join(sorted(s.name for s in stray)))
    dtype = traj.states.dtype.type
    fn = _compile([e], _jet(m) + pnames)
    pvals = [dtype(traj.params[p]) for p in pnames]
    out = np.empty(len(traj.times), dtype=dtype)
    columns = np.column_stack([traj.times, traj.states, traj.adjoints])
    with np.errstate(divide="raise", over="raise", invalid="raise"):
        for i, row in enumerate(columns):
            try:
                out[i] = fn(*row, *pvals)[0]
            except (ZeroDivisionError, FloatingPointError) as exc:
                raise DomainError(f"cannot evaluate at t={float(row[0])}: {exc}") from exc
            except OverflowError as exc:
                raise NonFinite(f"overflow at t={float(row[0])}") from exc
    return out


def monitor(traj: Trajectory, qs) -> DriftReport:
    """Drift statistics for each quantity; items are ConservedQuantity or (name, expr)."""
    entries = []
    for q in qs:
        name, expr = (q.name, q.C) if hasattr(q, "C") else q
        values = evaluate_along(traj, expr)
        if not np.all(np.isfinite(values)):
            raise NonFinite(f"quantity {name} is not finite along the trajectory")
        dev = np.abs(values - values[0])
        max_abs = float(dev.max())
        initial = float(values[0])
        entries.append(Drift(name, initial, max_abs, max_abs / (1 + abs(initial))))
    return DriftReport(tuple(entries))


def write_csv(traj: Trajectory, stream) -> None:
    m = traj.m
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["t", *(f"u{k}" for k in range(1, m + 1)), *(f"v{k}" for k in range(1, m + 1))])
    for t, us, vs in zip(traj.times, traj.states, traj.adjoints):
        writer.writerow([f"{float(x):.17g}" for x in (t, *us, *vs)])
