"""Path simulation of the coupled asset/bubble dynamics and the probabilistic
cross-checks built on it.

Both state variables ride the same Brownian increment: each step draws one
normal per path and feeds it to the asset and the bubble update alike, so
the two diffusions are perfectly correlated by construction.

Draws come from a counter-based generator keyed by (seed, step, absolute
path index).  A path's trajectory therefore depends only on its global
index, never on how paths are partitioned into worker blocks, and results
are bit-identical for any worker count.

`pricing` mode runs the drifts implied by the backward pricing equation,
with the killing exponent accumulated per path; `physical` mode runs the
observed drifts and keeps the discount at 1.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ._kernels import get_backend
from .errors import DomainError, TooFewPaths, Unsupported
from .model import (BubbleModel, Contract, DeterministicBubble, GaussianBubble,
                    GenericBubble, LognormalBubble, MarketParams,
                    bubble_coefficients, default_eps_sing, potential_v)

_FMT = "%.17g"


@dataclass(frozen=True)
class RngSpec:
    """Master seed for the counter-based substreams (one per path index)."""

    seed: int

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must fit in 64 bits")


@dataclass
class PathBundle:
    """Simulated paths at the recorded times.

    With record='terminal' the state arrays are 1D (final step only);
    with record='full' they are (n_paths, steps+1) including t=0.
    `D` is the accumulated discount exp(-sum (r+v(f)) dt) in pricing mode
    and identically 1 in physical mode.  Absorbed paths touched the
    singular band; their state is frozen from that step on and they are
    excluded from pricing averages.
    """

    t: np.ndarray
    S: np.ndarray
    f: np.ndarray
    D: np.ndarray
    absorbed: np.ndarray
    seed: int
    steps: int
    mode: str
    record: str
    S0: float
    f0: float

    @property
    def n_paths(self) -> int:
        return self.S.shape[0]

    @property
    def n_absorbed(self) -> int:
        return int(np.count_nonzero(self.absorbed))

    def terminal(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.record == "terminal":
            return self.S, self.f, self.D
        return self.S[:, -1], self.f[:, -1], self.D[:, -1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("path,step,t,S,f,D\n")
            if self.record == "terminal":
                for p in range(self.n_paths):
                    fh.write("%d,%d," % (p, self.steps)
                             + ",".join(_FMT % v for v in
                                        (self.t[-1], self.S[p], self.f[p],
                                         self.D[p])) + "\n")
            else:
                for p in range(self.n_paths):
                    for k in range(self.S.shape[1]):
                        fh.write("%d,%d," % (p, k)
                                 + ",".join(_FMT % v for v in
                                            (self.t[k], self.S[p, k],
                                             self.f[p, k], self.D[p, k]))
                                 + "\n")


def _py_step(lnS, f, A, absorbed, z, dt, params, bubble, t, band_lo, band_hi,
             pricing):
    """Numpy step for bubble models without a dedicated kernel."""
    active = ~absorbed
    S = np.exp(lnS)
    if isinstance(bubble, DeterministicBubble):
        fv = np.broadcast_to(np.asarray(bubble.f(S, t), dtype=float), f.shape)
        np.copyto(f, fv, where=active)
        mu_f = np.zeros_like(f)
        gamma = np.zeros_like(f)
    else:
        mu_f, gamma = bubble_coefficients(bubble, S, f, t)
        mu_f = np.broadcast_to(np.asarray(mu_f, dtype=float), f.shape)
        gamma = np.broadcast_to(np.asarray(gamma, dtype=float), f.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        v = (params.r - params.mu) * f / (params.sigma - f)
        if pricing:
            ds_drift = (params.r + v) - 0.5 * params.sigma * params.sigma
            df_drift = mu_f - (params.mu - params.r) * gamma / (params.sigma - f)
        else:
            ds_drift = params.mu - 0.5 * params.sigma * params.sigma
            df_drift = mu_f
        sq = np.sqrt(dt)
        new_lnS = lnS + ds_drift * dt + params.sigma * sq * z
        new_f = f + df_drift * dt + gamma * sq * z
        new_A = A + (params.r + v) * dt if pricing else A
    np.copyto(lnS, new_lnS, where=active)
    np.copyto(f, new_f, where=active)
    np.copyto(A, new_A, where=active)
    if isinstance(bubble, DeterministicBubble):
        # f is derived, not a state: re-evaluate at the post-step point so
        # recorded (S, f) pairs line up
        fv = np.broadcast_to(
            np.asarray(bubble.f(np.exp(lnS), t + dt), dtype=float), f.shape)
        np.copyto(f, fv, where=active)
    hit = active & (f >= band_lo) & (f <= band_hi)
    absorbed |= hit


def simulate(params: MarketParams, bubble: BubbleModel, S0: float, f0: float,
             T: float, steps: int, n_paths: int, rng: RngSpec,
             mode: str = "pricing", record: str = "terminal",
             n_workers: int = 1, eps_sing: Optional[float] = None,
             backend_name: Optional[str] = None) -> PathBundle:
    """Euler-Maruyama in log-S (and log-f for the lognormal bubble)."""
    if S0 <= 0.0:
        raise DomainError("S0 must be positive")
    if steps < 1 or n_paths < 1:
        raise DomainError("need steps >= 1 and n_paths >= 1")
    if T <= 0.0:
        raise DomainError("T must be positive")
    if mode not in ("pricing", "physical"):
        raise DomainError(f"unknown mode {mode!r}")
    if record not in ("terminal", "full"):
        raise DomainError(f"unknown record {record!r}")
    if isinstance(bubble, LognormalBubble) and f0 <= 0.0:
        raise DomainError("lognormal bubble requires f0 > 0")
    if eps_sing is None:
        eps_sing = default_eps_sing(params.sigma)
    backend = get_backend(backend_name)
    dt = T / steps
    pricing = 1 if mode == "pricing" else 0
    band_lo = params.sigma - eps_sing
    band_hi = params.sigma + eps_sing

    lnS = np.full(n_paths, np.log(S0))
    f = np.full(n_paths, float(f0))
    A = np.zeros(n_paths)
    absorbed = np.zeros(n_paths, dtype=bool)
    absorbed |= (f >= band_lo) & (f <= band_hi)

    lognormal = isinstance(bubble, LognormalBubble)
    gaussian = isinstance(bubble, GaussianBubble)
    if lognormal:
        lnf = np.log(f)
        lband_lo = np.log(band_lo) if band_lo > 0.0 else -np.inf
        lband_hi = np.log(band_hi)

    if record == "full":
        recS = np.empty((n_paths, steps + 1))
        recF = np.empty((n_paths, steps + 1))
        recA = np.zeros((n_paths, steps + 1))
        recS[:, 0] = S0
        recF[:, 0] = f0

    def run_block(a, b):
        for k in range(steps):
            z = backend.philox_normals(rng.seed, k, a, b - a)
            t = k * dt
            if gaussian:
                backend.step_gaussian(
                    lnS[a:b], f[a:b], A[a:b], absorbed[a:b], z, dt,
                    params.mu, params.sigma, params.r, bubble.mu_f,
                    bubble.gamma, band_lo, band_hi, pricing)
            elif lognormal:
                fvec = np.exp(lnf[a:b])
                backend.step_lognormal(
                    lnS[a:b], lnf[a:b], fvec, A[a:b], absorbed[a:b], z, dt,
                    params.mu, params.sigma, params.r, bubble.mu_f_bar,
                    bubble.gamma_bar, lband_lo, lband_hi, pricing)
                np.copyto(f[a:b], np.exp(lnf[a:b]))
            else:
                _py_step(lnS[a:b], f[a:b], A[a:b], absorbed[a:b], z, dt,
                         params, bubble, t, band_lo, band_hi, pricing)
            if record == "full":
                recS[a:b, k + 1] = np.exp(lnS[a:b])
                recF[a:b, k + 1] = f[a:b]
                recA[a:b, k + 1] = A[a:b]

    blocks = []
    base = n_paths // max(1, n_workers)
    extra = n_paths % max(1, n_workers)
    start = 0
    for w in range(max(1, n_workers)):
        size = base + (1 if w < extra else 0)
        if size > 0:
            blocks.append((start, start + size))
            start += size
    if n_workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as ex:
            list(ex.map(lambda ab: run_block(*ab), blocks))
    else:
        for a, b in blocks:
            run_block(a, b)

    t_grid = dt * np.arange(steps + 1)
    if record == "terminal":
        return PathBundle(t=t_grid[-1:], S=np.exp(lnS), f=f.copy(),
                          D=np.exp(-A), absorbed=absorbed, seed=rng.seed,
                          steps=steps, mode=mode, record=record,
                          S0=float(S0), f0=float(f0))
    return PathBundle(t=t_grid, S=recS, f=recF, D=np.exp(-recA),
                      absorbed=absorbed, seed=rng.seed, steps=steps,
                      mode=mode, record=record, S0=float(S0), f0=float(f0))


def feynman_kac_price(params: MarketParams, bubble: BubbleModel,
                      contract: Contract, S0: float, f0: float,
                      paths: PathBundle) -> Tuple[float, float]:
    """Killed-diffusion expectation E[D_T * payoff(S_T, f_T)].

    Only non-absorbed paths enter; raises TooFewPaths below 100 of them.
    """
    if paths.mode != "pricing":
        raise Unsupported("feynman_kac_price needs paths simulated in "
                          "pricing mode")
    ST, fT, DT = paths.terminal()
    keep = ~paths.absorbed
    n = int(np.count_nonzero(keep))
    if n < 100:
        raise TooFewPaths(f"only {n} non-absorbed paths")
    vals = DT[keep] * np.asarray(contract.payoff(ST[keep], fT[keep]),
                                 dtype=float)
    value = float(np.mean(vals))
    stderr = float(np.std(vals, ddof=1) / np.sqrt(n))
    return value, stderr


@dataclass
class ResidualStats:
    max: float
    rms: float
    n_points: int
    coverage: float


def _derivative_grids(surface, params):
    """Grid derivatives of V(S, f, tau); one-sided at boundaries.

    Returns dV/dS, d2V/dS2, dV/df, d2V/df2, d2V/dSdf and dV/dt where
    t = T - tau (so dV/dt = -dV/dtau).
    """
    from .pde import _d_weights

    S, f, tau, V = surface.S, surface.f, surface.tau, surface.values
    w1m, w1c, w1p, w2m, w2c, w2p = _d_weights(S)
    Vm = np.concatenate([V[:1], V[:-1]], axis=0)
    Vp = np.concatenate([V[1:], V[-1:]], axis=0)
    V_S = w1m[:, None, None] * Vm + w1c[:, None, None] * V + w1p[:, None, None] * Vp
    V_SS = w2m[:, None, None] * Vm + w2c[:, None, None] * V + w2p[:, None, None] * Vp
    V_S[0] = (V[1] - V[0]) / (S[1] - S[0])
    V_S[-1] = (V[-1] - V[-2]) / (S[-1] - S[-2])
    V_SS[0] = 0.0
    V_SS[-1] = 0.0

    df = f[1] - f[0]
    V_f = np.gradient(V, f, axis=1)
    V_ff = np.empty_like(V)
    V_ff[:, 1:-1] = (V[:, 2:] - 2.0 * V[:, 1:-1] + V[:, :-2]) / (df * df)
    V_ff[:, 0] = 0.0
    V_ff[:, -1] = 0.0

    V_Sf = np.gradient(V_S, f, axis=1)
    V_tau = np.gradient(V, tau, axis=2)
    return V_S, V_SS, V_f, V_ff, V_Sf, -V_tau


def replication_residual(surface, paths: PathBundle, params: MarketParams,
                         bubble: BubbleModel) -> ResidualStats:
    """Hedging-consistency residual interpolated from a solved surface.

    R = (mu - r) S (sigma S V_S + Gamma V_f - V f)
        - (sigma S - S f) (L V - r V),
    with L the physical-drift operator.  For an exact solution both brackets
    are proportional, so R vanishes; the reported statistics are normalized
    by |mu - r| sigma S^2 (|V| + 1% of the surface scale), the size of either
    bracket, with the floor keeping far out-of-the-money points meaningful.
    """
    from scipy.interpolate import RegularGridInterpolator

    if paths.record != "full":
        raise DomainError("replication_residual needs record='full' paths")
    if getattr(surface, "segments", ()) and len(surface.segments) > 1:
        raise DomainError("surface must not straddle the singular band")

    S, f, tau = surface.S, surface.f, surface.tau
    T = float(tau[-1])
    V = surface.values
    grids = (S, f, tau)
    V_S, V_SS, V_f, V_ff, V_Sf, V_t = _derivative_grids(surface, params)
    interp = [RegularGridInterpolator(grids, g, bounds_error=False,
                                      fill_value=np.nan)
              for g in (V, V_S, V_SS, V_f, V_ff, V_Sf, V_t)]

    keep = ~paths.absorbed
    Sp = paths.S[keep].ravel()
    fp = paths.f[keep].ravel()
    tp = np.broadcast_to(paths.t, paths.S[keep].shape).ravel()
    pts = np.column_stack([Sp, fp, T - tp])
    vals = [g(pts) for g in interp]
    ok = np.all(np.isfinite(np.column_stack(vals)), axis=1)
    coverage = float(np.count_nonzero(ok)) / max(1, len(ok))
    if not ok.any():
        raise DomainError("no path points fall inside the surface domain")
    v, vS, vSS, vf, vff, vSf, vt = (a[ok] for a in vals)
    Sp, fp, tp = Sp[ok], fp[ok], tp[ok]

    mu_f, gamma = bubble_coefficients(bubble, Sp, fp, tp)
    mu_f = np.broadcast_to(np.asarray(mu_f, dtype=float), Sp.shape)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), Sp.shape)
    sig = params.sigma
    L = (vt + 0.5 * sig * sig * Sp * Sp * vSS + 0.5 * gamma * gamma * vff
         + Sp * sig * gamma * vSf + params.mu * Sp * vS + mu_f * vf)
    R = ((params.mu - params.r) * Sp * (sig * Sp * vS + gamma * vf - v * fp)
         - (sig * Sp - Sp * fp) * (L - params.r * v))
    scale = float(np.max(np.abs(V)))
    denom = abs(params.mu - params.r) * sig * Sp * Sp * (np.abs(v) + 0.01 * scale)
    denom = np.maximum(denom, 1e-300)
    norm = np.abs(R) / denom
    return ResidualStats(max=float(norm.max()),
                         rms=float(np.sqrt(np.mean(norm * norm))),
                         n_points=int(norm.size), coverage=coverage)
