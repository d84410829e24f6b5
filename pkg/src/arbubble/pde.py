"""Finite-difference solvers: full two-factor, one-factor deterministic, and
the constant-coefficient chart equation.

All three march backward from expiry (tau = 0 is the payoff).  Space stencils
are second-order central differences; the S-axis uses log-spaced nodes with
nonuniform-grid weights, which are exact on linear functions, so the payoff
V = S is transported exactly up to roundoff.  Boundary rows replace the
second-derivative term by zero and the first derivative by its one-sided
difference (also exact on linears); contracts carrying a strike instead pin
the S_min boundary to zero, the natural call condition.

The two-factor stepper is a Douglas splitting: one explicit application of
the whole operator (including the mixed derivative, the only term coupling
the sweeps), then implicit corrections in S and in f, each a batch of
tridiagonal solves.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._kernels import get_backend
from .errors import DomainError, InstabilityDetected, SingularBand
from .model import (BubbleModel, Contract, GaussianBubble, GenericBubble,
                    LognormalBubble, MarketParams, bubble_coefficients,
                    default_eps_sing, potential_v)

_FMT = "%.17g"


def _log_nodes(s_min: float, s_max: float, n: int, anchor: Optional[float] = None):
    if s_min <= 0.0 or s_max <= s_min:
        raise DomainError("need 0 < s_min < s_max")
    lo, hi = np.log(s_min), np.log(s_max)
    step = (hi - lo) / (n - 1)
    if anchor is None:
        return np.exp(lo + step * np.arange(n))
    k = int(round((np.log(anchor) - lo) / step))
    if not 0 <= k < n:
        raise DomainError("anchor outside the S-domain")
    xi = np.log(anchor) + step * (np.arange(n) - k)
    S = np.exp(xi)
    S[k] = anchor
    return S


def _lin_nodes(f_min: float, f_max: float, n: int, anchor: Optional[float] = None):
    if f_max <= f_min:
        raise DomainError("need f_min < f_max")
    step = (f_max - f_min) / (n - 1)
    if anchor is None:
        return f_min + step * np.arange(n)
    k = int(round((anchor - f_min) / step))
    if not 0 <= k < n:
        raise DomainError("anchor outside the f-domain")
    f = anchor + step * (np.arange(n) - k)
    f[k] = anchor
    return f


@dataclass(frozen=True)
class Grid1D:
    """Log-spaced S-nodes and a time-step count."""

    S: np.ndarray
    n_t: int

    @classmethod
    def make(cls, s_min: float, s_max: float, n_s: int, n_t: int,
             anchor: Optional[float] = None) -> "Grid1D":
        if n_s < 16:
            raise DomainError("need at least 16 S-nodes")
        if n_t < 1:
            raise DomainError("need at least one time step")
        return cls(S=_log_nodes(s_min, s_max, n_s, anchor), n_t=n_t)


@dataclass(frozen=True)
class Grid2D:
    """Log-spaced S-axis and a linear f-axis split around the singular band.

    `segments` are index slices into `f`; no node lies within eps_sing of
    sigma, and f-sweeps never couple nodes across the gap.
    """

    S: np.ndarray
    f: np.ndarray
    segments: tuple
    n_t: int
    eps_sing: float

    @classmethod
    def make(cls, s_min: float, s_max: float, n_s: int,
             f_min: float, f_max: float, n_f: int, n_t: int,
             sigma: float, eps_sing: Optional[float] = None,
             s_anchor: Optional[float] = None,
             f_anchor: Optional[float] = None) -> "Grid2D":
        if n_s < 16 or n_f < 16:
            raise DomainError("need at least 16 nodes per axis")
        if n_t < 1:
            raise DomainError("need at least one time step")
        if eps_sing is None:
            eps_sing = default_eps_sing(sigma)
        S = _log_nodes(s_min, s_max, n_s, s_anchor)
        f_all = _lin_nodes(f_min, f_max, n_f, f_anchor)
        keep = np.abs(f_all - sigma) > eps_sing
        if not keep.any():
            raise DomainError("entire f-axis lies inside the singular band")
        f = f_all[keep]
        # runs of consecutive kept indices become independent sub-domains
        idx = np.flatnonzero(keep)
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate(([0], breaks + 1))
        ends = np.concatenate((breaks + 1, [len(idx)]))
        segments = []
        for a, b in zip(starts, ends):
            if b - a < 3:
                raise DomainError(
                    "an f sub-domain has fewer than 3 nodes; widen the axis "
                    "or move it away from the singular band"
                )
            segments.append(slice(int(a), int(b)))
        return cls(S=S, f=f, segments=tuple(segments), n_t=n_t,
                   eps_sing=eps_sing)


@dataclass(frozen=True)
class GridChart:
    """Uniform (x, y) chart grid for the constant-coefficient equation."""

    x: np.ndarray
    y: np.ndarray
    tau_max: float
    n_t: int

    @classmethod
    def make(cls, x_min: float, x_max: float, n_x: int,
             y_min: float, y_max: float, n_y: int,
             tau_max: float, n_t: int) -> "GridChart":
        if n_x < 16 or n_y < 2:
            raise DomainError("chart grid too small")
        if tau_max <= 0.0 or n_t < 1:
            raise DomainError("need tau_max > 0 and at least one step")
        return cls(x=np.linspace(x_min, x_max, n_x),
                   y=np.linspace(y_min, y_max, n_y),
                   tau_max=tau_max, n_t=n_t)


def _write_csv(path, header, rows_iter):
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows_iter:
            fh.write(",".join(_FMT % v for v in row) + "\n")


@dataclass
class PriceSurface:
    """V[i, j, k] on (S_i, f_j, tau_k); tau_k ascends from 0 (the payoff)."""

    S: np.ndarray
    f: np.ndarray
    tau: np.ndarray
    values: np.ndarray
    segments: tuple = ()
    meta: dict = field(default_factory=dict)

    def slice_at(self, tau: float) -> np.ndarray:
        k = int(np.argmin(np.abs(self.tau - tau)))
        return self.values[:, :, k]

    def value_at(self, S: float, f: float, tau: float) -> float:
        i = int(np.argmin(np.abs(self.S - S)))
        j = int(np.argmin(np.abs(self.f - f)))
        k = int(np.argmin(np.abs(self.tau - tau)))
        return float(self.values[i, j, k])

    def to_csv(self, path) -> None:
        def rows():
            for i, Si in enumerate(self.S):
                for j, fj in enumerate(self.f):
                    for k, tk in enumerate(self.tau):
                        yield (Si, fj, tk, self.values[i, j, k])

        _write_csv(path, "S,f,tau,V", rows())


def read_surface_csv(path) -> PriceSurface:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    S = np.unique(data[:, 0])
    f_vals = data[: len(data) // len(S), 1]
    f = np.unique(f_vals)
    tau = np.unique(data[:, 2])
    V = data[:, 3].reshape(len(S), len(f), len(tau))
    return PriceSurface(S=S, f=f, tau=tau, values=V)


@dataclass
class Surface1D:
    S: np.ndarray
    tau: np.ndarray
    values: np.ndarray  # (nS, n_tau)

    def value_at(self, S: float, tau: float) -> float:
        i = int(np.argmin(np.abs(self.S - S)))
        k = int(np.argmin(np.abs(self.tau - tau)))
        return float(self.values[i, k])


@dataclass
class ChartSurface:
    x: np.ndarray
    y: np.ndarray
    tau: np.ndarray
    values: np.ndarray  # (nX, nY, n_tau)


def _d_weights(x: np.ndarray):
    """Nonuniform 3-point weights for d/dx and d2/dx2 at interior nodes.

    Returns (w1m, w1c, w1p, w2m, w2c, w2p), each of length n with zeros at
    the two boundary slots.  Exact for quadratics, hence for linears.
    """
    n = len(x)
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    w1m = np.zeros(n); w1c = np.zeros(n); w1p = np.zeros(n)
    w2m = np.zeros(n); w2c = np.zeros(n); w2p = np.zeros(n)
    w1m[1:-1] = -hp / (hm * (hm + hp))
    w1c[1:-1] = (hp - hm) / (hm * hp)
    w1p[1:-1] = hm / (hp * (hm + hp))
    w2m[1:-1] = 2.0 / (hm * (hm + hp))
    w2c[1:-1] = -2.0 / (hm * hp)
    w2p[1:-1] = 2.0 / (hp * (hm + hp))
    return w1m, w1c, w1p, w2m, w2c, w2p


def _apply_tridiag(lo, di, up, V, axis):
    """Banded operator application along `axis` of a 2D array."""
    out = di * V
    if axis == 0:
        out[1:, :] += lo[1:, :] * V[:-1, :]
        out[:-1, :] += up[:-1, :] * V[1:, :]
    else:
        out[:, 1:] += lo[:, 1:] * V[:, :-1]
        out[:, :-1] += up[:, :-1] * V[:, 1:]
    return out


def _s_operator(S, rate, sigma, dirichlet_low):
    """Bands of A_S = (sigma^2 S^2 / 2) d2 + rate*S d - rate, shape (nS, nF).

    `rate` has shape (nF,) or (nS, nF).  Boundary rows carry the one-sided
    first derivative and no curvature; with `dirichlet_low` the bottom row
    is zeroed so the boundary value stays pinned.
    """
    nS = len(S)
    rate = np.asarray(rate, dtype=float)
    if rate.ndim == 1:
        rate = np.broadcast_to(rate, (nS, rate.shape[0]))
    w1m, w1c, w1p, w2m, w2c, w2p = _d_weights(S)
    half_s2 = 0.5 * sigma * sigma * S * S
    Scol = S[:, None]; h2 = half_s2[:, None]
    lo = h2 * w2m[:, None] + rate * Scol * w1m[:, None]
    di = h2 * w2c[:, None] + rate * Scol * w1c[:, None] - rate
    up = h2 * w2p[:, None] + rate * Scol * w1p[:, None]
    h0 = S[1] - S[0]
    hN = S[-1] - S[-2]
    if dirichlet_low:
        lo[0, :] = di[0, :] = up[0, :] = 0.0
    else:
        di[0, :] = rate[0, :] * S[0] * (-1.0 / h0) - rate[0, :]
        up[0, :] = rate[0, :] * S[0] * (1.0 / h0)
        lo[0, :] = 0.0
    di[-1, :] = rate[-1, :] * S[-1] * (1.0 / hN) - rate[-1, :]
    lo[-1, :] = rate[-1, :] * S[-1] * (-1.0 / hN)
    up[-1, :] = 0.0
    return lo, di, up


def _f_operator(fseg, gamma2_half, drift):
    """Bands of A_f = (Gamma^2/2) d2 + g d on one uniform segment.

    gamma2_half and drift have shape (nS, nseg); returns bands of the same
    shape.  Boundary rows: one-sided drift, no curvature.
    """
    df = fseg[1] - fseg[0]
    inv2 = 1.0 / (df * df)
    invc = 1.0 / (2.0 * df)
    lo = gamma2_half * inv2 - drift * invc
    di = -2.0 * gamma2_half * inv2
    up = gamma2_half * inv2 + drift * invc
    # boundary rows: upwind one-sided drift when it reads inward, else no
    # advection; a downwind row at an inflow boundary amplifies under the
    # implicit solve
    g0 = drift[:, 0]
    lo[:, 0] = 0.0
    di[:, 0] = np.where(g0 >= 0.0, -g0 / df, 0.0)
    up[:, 0] = np.where(g0 >= 0.0, g0 / df, 0.0)
    gN = drift[:, -1]
    up[:, -1] = 0.0
    di[:, -1] = np.where(gN < 0.0, gN / df, 0.0)
    lo[:, -1] = np.where(gN < 0.0, -gN / df, 0.0)
    return lo, di, up


def _cross_apply(V, S, fseg, coeff):
    """sigma*Gamma*S * d2V/dSdf with zero rows on every boundary."""
    out = np.zeros_like(V)
    if V.shape[0] < 3 or V.shape[1] < 3:
        return out
    w1m, w1c, w1p, _, _, _ = _d_weights(S)
    dS = (w1m[:, None] * np.vstack([V[:1], V[:-1]])
          + w1c[:, None] * V
          + w1p[:, None] * np.vstack([V[1:], V[-1:]]))
    df = fseg[1] - fseg[0]
    out[1:-1, 1:-1] = (dS[1:-1, 2:] - dS[1:-1, :-2]) / (2.0 * df)
    return coeff * out


def _solve_banded_batch(lo, di, up, rhs, backend):
    """Solve along axis 0: systems are the columns; kernels batch over rows."""
    return backend.thomas_batch(
        np.ascontiguousarray(lo.T), np.ascontiguousarray(di.T),
        np.ascontiguousarray(up.T), np.ascontiguousarray(rhs.T)).T


def _coefficients(params, bubble, S, fseg, t):
    Smesh, Fmesh = np.meshgrid(S, fseg, indexing="ij")
    mu_f, gamma = bubble_coefficients(bubble, Smesh, Fmesh, t)
    mu_f = np.broadcast_to(np.asarray(mu_f, dtype=float), Smesh.shape)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), Smesh.shape)
    drift = mu_f - (params.mu - params.r) * gamma / (params.sigma - Fmesh)
    return gamma, drift


def solve_full(params: MarketParams, bubble: BubbleModel, contract: Contract,
               grid: Grid2D, backend_name: Optional[str] = None) -> PriceSurface:
    """March the two-factor equation from the payoff to tau = T.

    Raises InstabilityDetected if any value exceeds 1000x the payoff bound.
    """
    if isinstance(bubble, LognormalBubble) and np.any(grid.f <= 0.0):
        raise DomainError("lognormal bubble requires a positive f-axis")
    if np.any(np.abs(grid.f - params.sigma) <= grid.eps_sing):
        raise SingularBand("grid carries nodes inside the singular band")
    backend = get_backend(backend_name)
    S, f, n_t = grid.S, grid.f, grid.n_t
    T = contract.expiry
    dt = T / n_t
    nS, nF = len(S), len(f)
    dirichlet_low = contract.strike is not None

    Smesh, Fmesh = np.meshgrid(S, f, indexing="ij")
    V = np.asarray(contract.payoff(Smesh, Fmesh), dtype=float)
    if V.shape != (nS, nF):
        V = np.broadcast_to(np.asarray(V, dtype=float), (nS, nF)).copy()
    out = np.empty((nS, nF, n_t + 1))
    out[:, :, 0] = V
    bound = float(np.max(np.abs(V)))
    limit = 1e3 * bound

    rate = params.r + potential_v(f, params, grid.eps_sing)
    sL, sD, sU = _s_operator(S, rate, params.sigma, dirichlet_low)
    static = not isinstance(bubble, GenericBubble)
    seg_ops = {}

    def f_ops(t):
        ops = []
        for seg in grid.segments:
            fseg = f[seg]
            gamma, drift = _coefficients(params, bubble, S, fseg, t)
            g2h = 0.5 * gamma * gamma
            ops.append((_f_operator(fseg, g2h, drift), params.sigma * gamma * Smesh[:, seg]))
        return ops

    if static:
        seg_ops = f_ops(0.0)

    ident = np.ones((nS, nF))
    for k in range(n_t):
        t_new = T - (k + 1) * dt
        ops = seg_ops if static else f_ops(t_new)

        AsV = _apply_tridiag(sL, sD, sU, V, axis=0)
        AfV = np.zeros_like(V)
        CV = np.zeros_like(V)
        for seg, ((fL, fD, fU), ccoef) in zip(grid.segments, ops):
            AfV[:, seg] = _apply_tridiag(fL, fD, fU, V[:, seg], axis=1)
            CV[:, seg] = _cross_apply(V[:, seg], S, f[seg], ccoef)

        Y0 = V + dt * (AsV + AfV + CV)
        # implicit S correction, batched over f-columns
        Y1 = _solve_banded_batch(-dt * sL, ident - dt * sD, -dt * sU,
                                 Y0 - dt * AsV, backend)
        # implicit f correction, batched over S-rows, per segment
        Y2 = np.empty_like(Y1)
        for seg, ((fL, fD, fU), _) in zip(grid.segments, ops):
            rhs = Y1[:, seg] - dt * AfV[:, seg]
            Y2[:, seg] = backend.thomas_batch(
                np.ascontiguousarray(-dt * fL), np.ascontiguousarray(1.0 - dt * fD),
                np.ascontiguousarray(-dt * fU), np.ascontiguousarray(rhs))
        V = Y2
        if not np.all(np.isfinite(V)) or (bound > 0.0 and np.max(np.abs(V)) > limit):
            raise InstabilityDetected(
                f"solution escaped the payoff bound at step {k + 1}/{n_t}"
            )
        out[:, :, k + 1] = V

    tau = dt * np.arange(n_t + 1)
    return PriceSurface(S=S, f=f, tau=tau, values=out, segments=grid.segments,
                        meta={"scheme": "douglas-split", "backend": backend_name
                              or "default", "params": params, "bubble": bubble,
                              "contract": contract})


def solve_deterministic(params: MarketParams, f: Callable, contract: Contract,
                        grid: Grid1D, eps_sing: Optional[float] = None,
                        theta: float = 0.5, rannacher: int = 2,
                        backend_name: Optional[str] = None) -> Surface1D:
    """One-factor solver for a prescribed bubble path f(S, t).

    Crank-Nicolson by default with a short backward-Euler start; theta = 1
    gives plain backward Euler (used by the reduction check to mirror the
    two-factor stepper exactly).
    """
    if eps_sing is None:
        eps_sing = default_eps_sing(params.sigma)
    backend = get_backend(backend_name)
    S, n_t = grid.S, grid.n_t
    T = contract.expiry
    dt = T / n_t
    nS = len(S)
    dirichlet_low = contract.strike is not None

    V = np.asarray(contract.payoff(S, np.zeros_like(S)), dtype=float)
    V = np.broadcast_to(V, (nS,)).copy()
    out = np.empty((nS, n_t + 1))
    out[:, 0] = V
    bound = float(np.max(np.abs(V)))
    limit = 1e3 * bound

    def bands_at(t):
        fv = np.broadcast_to(np.asarray(f(S, t), dtype=float), (nS,))
        rate = params.r + potential_v(fv, params, eps_sing)
        return _s_operator(S, np.broadcast_to(rate[:, None], (nS, 1)),
                           params.sigma, dirichlet_low)

    for k in range(n_t):
        th = 1.0 if k < rannacher else theta
        t_new = T - (k + 1) * dt
        t_old = T - k * dt
        lo_n, di_n, up_n = bands_at(t_new)
        if th < 1.0:
            lo_o, di_o, up_o = bands_at(t_old)
            rhs = V + (1.0 - th) * dt * _apply_tridiag(
                lo_o, di_o, up_o, V[:, None], axis=0)[:, 0]
        else:
            rhs = V
        sol = backend.thomas_batch(
            np.ascontiguousarray((-th * dt * lo_n)[:, 0][None, :]),
            np.ascontiguousarray((1.0 - th * dt * di_n)[:, 0][None, :]),
            np.ascontiguousarray((-th * dt * up_n)[:, 0][None, :]),
            np.ascontiguousarray(rhs[None, :]))
        V = sol[0]
        if not np.all(np.isfinite(V)) or (bound > 0.0 and np.max(np.abs(V)) > limit):
            raise InstabilityDetected(f"1-factor solve diverged at step {k + 1}")
        out[:, k + 1] = V

    return Surface1D(S=S, tau=dt * np.arange(n_t + 1), values=out)


def solve_asymptotic(alphas, terminal: Callable, grid: GridChart,
                     out_taus: Optional[Sequence[float]] = None,
                     rannacher: int = 2,
                     backend_name: Optional[str] = None) -> ChartSurface:
    """Constant-coefficient chart equation.

    Diffusion and x-advection are Crank-Nicolson in x; the y-advection is an
    exact translation, folded into the terminal data of each row (the rows
    never couple), so no y-interpolation error enters.  The first `rannacher`
    steps are backward Euler to damp kinked terminal data; pass 0 for smooth
    terminals where the startup damping would dominate the error.
    """
    backend = get_backend(backend_name)
    x, y = grid.x, grid.y
    nX, nY = len(x), len(y)
    if out_taus is None:
        out_taus = (grid.tau_max,)
    dx = x[1] - x[0]
    ax, ay = alphas.alpha_x, alphas.alpha_y

    # bands of A = (1/2) d2/dx2 + ax d/dx with one-sided boundary rows
    lo = np.full(nX, 0.5 / (dx * dx) - ax / (2.0 * dx))
    di = np.full(nX, -1.0 / (dx * dx))
    up = np.full(nX, 0.5 / (dx * dx) + ax / (2.0 * dx))
    lo[0] = 0.0; di[0] = -ax / dx; up[0] = ax / dx
    up[-1] = 0.0; di[-1] = ax / dx; lo[-1] = -ax / dx

    taus = [0.0] + [float(t) for t in out_taus]
    vals = np.empty((nX, nY, len(taus)))
    xm, ym = np.meshgrid(x, y, indexing="ij")
    vals[:, :, 0] = np.broadcast_to(
        np.asarray(terminal(xm, ym), dtype=float), (nX, nY))

    for col, tau_out in enumerate(out_taus, start=1):
        n_t = max(1, int(round(grid.n_t * tau_out / grid.tau_max)))
        dt = tau_out / n_t
        # characteristic foot: each row y_j reads terminal data at y_j + ay*tau
        psi = np.asarray(terminal(xm, ym + ay * tau_out), dtype=float)
        psi = np.broadcast_to(psi, (nX, nY)).copy()
        dl_i = np.ascontiguousarray(np.tile(-0.5 * dt * lo, (nY, 1)))
        d_i = np.ascontiguousarray(np.tile(1.0 - 0.5 * dt * di, (nY, 1)))
        du_i = np.ascontiguousarray(np.tile(-0.5 * dt * up, (nY, 1)))
        dl_b = np.ascontiguousarray(np.tile(-dt * lo, (nY, 1)))
        d_b = np.ascontiguousarray(np.tile(1.0 - dt * di, (nY, 1)))
        du_b = np.ascontiguousarray(np.tile(-dt * up, (nY, 1)))
        for k in range(n_t):
            if k < rannacher:  # damped start against the payoff kink
                rhs = psi.T
                psi = backend.thomas_batch(dl_b, d_b, du_b,
                                           np.ascontiguousarray(rhs)).T
            else:
                Ap = _apply_tridiag(lo[:, None], di[:, None], up[:, None],
                                    psi, axis=0)
                rhs = (psi + 0.5 * dt * Ap).T
                psi = backend.thomas_batch(dl_i, d_i, du_i,
                                           np.ascontiguousarray(rhs)).T
        vals[:, :, col] = psi

    return ChartSurface(x=x, y=y, tau=np.asarray(taus), values=vals)


def _f_flow(bubble: BubbleModel, f0: float, S: np.ndarray):
    """Deterministic bubble path t -> f(t) with f(0) = f0 for Gamma = 0."""
    if isinstance(bubble, GaussianBubble):
        if bubble.gamma != 0.0:
            raise DomainError("reduction check requires Gamma = 0")
        return lambda Sarr, t: np.full_like(np.asarray(Sarr, dtype=float),
                                            f0 + bubble.mu_f * t)
    if isinstance(bubble, LognormalBubble):
        if bubble.gamma_bar != 0.0:
            raise DomainError("reduction check requires Gamma = 0")
        return lambda Sarr, t: np.full_like(np.asarray(Sarr, dtype=float),
                                            f0 * np.exp(bubble.mu_f_bar * t))
    if isinstance(bubble, GenericBubble):
        gval = np.asarray(bubble.gamma(S, np.full_like(S, f0), 0.0))
        if np.any(gval != 0.0):
            raise DomainError("reduction check requires Gamma = 0")

        def flow(Sarr, t, _cache={}):
            # per-S RK4 on df/dt = mu_f(S, f, t); coarse fixed step
            key = float(t)
            if key not in _cache:
                Sarr = np.asarray(Sarr, dtype=float)
                n = max(16, int(abs(t) * 64) + 1)
                h = t / n
                fv = np.full_like(Sarr, f0)
                tt = 0.0
                for _ in range(n):
                    k1 = np.asarray(bubble.mu_f(Sarr, fv, tt))
                    k2 = np.asarray(bubble.mu_f(Sarr, fv + 0.5 * h * k1, tt + 0.5 * h))
                    k3 = np.asarray(bubble.mu_f(Sarr, fv + 0.5 * h * k2, tt + 0.5 * h))
                    k4 = np.asarray(bubble.mu_f(Sarr, fv + h * k3, tt + h))
                    fv = fv + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                    tt += h
                _cache[key] = fv
            return _cache[key]

        return flow
    raise DomainError(f"reduction check does not support {bubble!r}")


def reduction_check_gamma0(params: MarketParams, bubble: BubbleModel,
                           contract: Contract, grid: Grid2D,
                           backend_name: Optional[str] = None) -> float:
    """Max relative deviation between the Gamma = 0 two-factor solve and the
    one-factor solver run along the deterministic bubble path.

    The one-factor reference uses backward Euler on the same S-grid and step
    count, which is exactly what the two-factor stepper degenerates to, so
    the comparison isolates the dimensional reduction itself.
    """
    surf2 = solve_full(params, bubble, contract, grid, backend_name)
    grid1 = Grid1D(S=grid.S, n_t=grid.n_t)
    df = grid.f[1] - grid.f[0]
    T = contract.expiry
    worst = 0.0
    compared = 0
    for j, f0 in enumerate(grid.f):
        flow = _f_flow(bubble, float(f0), grid.S)
        # a row is only comparable while its bubble path stays on the grid;
        # once it leaves, the 2-factor solve has no data to transport in
        ts = np.linspace(0.0, T, 65)
        fpath = np.array([float(np.mean(flow(grid.S, t))) for t in ts])
        if fpath.min() < grid.f[0] - 1e-12 or fpath.max() > grid.f[-1] + 1e-12:
            continue
        if fpath.max() > grid.f[-1] - 2.0 * df and fpath[-1] != f0:
            continue
        if fpath.min() < grid.f[0] + 2.0 * df and fpath[-1] != f0:
            continue
        compared += 1
        surf1 = solve_deterministic(params, flow, contract, grid1,
                                    eps_sing=grid.eps_sing, theta=1.0,
                                    rannacher=0, backend_name=backend_name)
        a = surf2.values[:, j, -1]
        b = surf1.values[:, -1]
        # floor keeps underflow-level nodes from dominating the ratio
        floor = 1e-12 * float(np.max(np.abs(b)))
        mask = (a != b)
        if mask.any():
            rel = np.abs(a - b)[mask] / np.maximum(np.abs(b)[mask],
                                                   max(floor, 1e-300))
            worst = max(worst, float(rel.max()))
    if compared == 0:
        raise DomainError("no f-row keeps its bubble path on the grid")
    return worst
