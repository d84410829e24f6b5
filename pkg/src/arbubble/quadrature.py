"""Propagator-convolution pricing for arbitrary payoffs.

The reduced equation's Green function is a 1D heat kernel in x times a
transported delta in y.  The delta is always eliminated analytically: it
pins the bubble argument of the payoff to the f0 back-map, leaving a single
integral over u' = ln S' against a Gaussian kernel of mean ln S + A*sigma*tau
and width sigma*sqrt(tau).  Panels are Gauss-Legendre with the strike kink
(when announced) placed on a panel boundary and adaptive bisection elsewhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .closedform import alphas_for, discount_factor
from .errors import DomainError, NonIntegrablePayoff, Unsupported
from .model import (BubbleModel, GaussianBubble, LognormalBubble, MarketParams,
                    Regime)
from .transforms import f0_gaussian, f0_lognormal


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration controls: truncation half-width (in units of sigma*sqrt(tau)),
    relative tolerance for adaptive panel bisection, and Gauss-Legendre order."""

    half_width: float = 10.0
    rel_tol: float = 1e-8
    panel_nodes: int = 20
    max_depth: int = 24

    def __post_init__(self):
        if self.half_width < 6.0:
            raise DomainError("half_width must be at least 6 kernel widths")
        if not 0.0 < self.rel_tol <= 1e-4:
            raise DomainError("rel_tol must lie in (0, 1e-4]")


def propagator(x, y, tau: float, alphas):
    """Green-function factors at (x, y, tau).

    Returns (gaussian density in x, transported y-offset): the density is
    (2 pi tau)^(-1/2) exp(-(x + alpha_x tau)^2 / (2 tau)) and the offset
    y + alpha_y tau is the argument of the delta constraint.
    """
    if tau <= 0.0:
        raise DomainError("propagator requires tau > 0")
    x = np.asarray(x, dtype=float)
    dens = np.exp(-((x + alphas.alpha_x * tau) ** 2) / (2.0 * tau)) \
        / np.sqrt(2.0 * np.pi * tau)
    offset = np.asarray(y, dtype=float) + alphas.alpha_y * tau
    if dens.ndim == 0:
        return float(dens), float(offset)
    return dens, offset


def _gl_cache():
    cache = {}

    def nodes(n):
        if n not in cache:
            cache[n] = leggauss(n)
        return cache[n]

    return nodes


_gl_nodes = _gl_cache()


def _panel_integral(fn, a, b, order):
    xs, ws = _gl_nodes(order)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.dot(ws, fn(mid + half * xs)))


def _adaptive(fn, a, b, order, rel_tol, atol, depth, max_depth, coarse):
    mid = 0.5 * (a + b)
    left = _panel_integral(fn, a, mid, order)
    right = _panel_integral(fn, mid, b, order)
    fine = left + right
    if depth >= max_depth or abs(fine - coarse) <= rel_tol * abs(fine) + atol:
        return fine
    return (_adaptive(fn, a, mid, order, rel_tol, atol, depth + 1, max_depth, left)
            + _adaptive(fn, mid, b, order, rel_tol, atol, depth + 1, max_depth, right))


def _model_of(bubble: BubbleModel) -> str:
    if isinstance(bubble, GaussianBubble):
        return "gaussian"
    if isinstance(bubble, LognormalBubble):
        return "lognormal"
    raise Unsupported(f"propagator pricing needs a Gaussian or lognormal bubble, got {bubble!r}")


def price_generic(model, regime: Regime, S: float, f: float, tau: float,
                  params: MarketParams, bubble: BubbleModel, payoff,
                  kinks=(), spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Discounted convolution price of payoff(S', f0) in an asymptotic regime.

    `kinks` may list S-values where the payoff has kinks (the call strike);
    they become panel boundaries so Gauss-Legendre keeps spectral accuracy.
    tau = 0 returns the payoff directly (delta limit of the kernel).
    """
    tag = _model_of(bubble)
    if isinstance(model, str) and model.lower() != tag:
        raise Unsupported(f"model tag {model!r} does not match bubble {bubble!r}")
    if S <= 0.0:
        raise DomainError("S must be positive")
    if tag == "lognormal" and f <= 0.0:
        raise DomainError("lognormal bubble requires f > 0")
    if tau < 0.0:
        raise DomainError("tau must be nonnegative")
    if tau == 0.0:
        return float(payoff(np.asarray(S, dtype=float), np.asarray(f, dtype=float)))

    pair = alphas_for(regime, tag, params)
    disc = discount_factor(regime, tau, params)
    sigma = params.sigma
    w = sigma * math.sqrt(tau)
    m = math.log(S) + pair.total * sigma * tau

    if tag == "gaussian":
        def f0_of(Sp):
            return f0_gaussian(S, Sp, f, tau, params, bubble, pair.alpha_y)
    else:
        def f0_of(Sp):
            return f0_lognormal(S, Sp, f, tau, params, bubble, pair.alpha_y)

    def eval_payoff(Sp):
        vals = np.asarray(payoff(Sp, f0_of(Sp)), dtype=float)
        if vals.shape != Sp.shape:
            vals = np.broadcast_to(vals, Sp.shape)
        return vals

    def integrand(u):
        Sp = np.exp(u)
        kern = np.exp(-((u - m) ** 2) / (2.0 * w * w)) / (w * math.sqrt(2.0 * math.pi))
        return kern * eval_payoff(Sp)

    lo = m - spec.half_width * w
    hi = m + spec.half_width * w
    # a kink near or beyond the truncation edge carries the dominant mass for
    # out-of-the-money contracts: keep at least 6 kernel widths beyond it
    kink_cuts = []
    for kink in kinks:
        if kink <= 0.0:
            continue
        uk = math.log(kink)
        lo = min(lo, uk - 6.0 * w)
        hi = max(hi, uk + 6.0 * w)
        kink_cuts.extend((uk - 4 * w, uk - 2 * w, uk - w, uk,
                          uk + w, uk + 2 * w, uk + 4 * w))
    cuts = {lo, hi}
    for k in (m - 7 * w, m - 5 * w, m - 3 * w, m - 2 * w, m - w, m,
              m + w, m + 2 * w, m + 3 * w, m + 5 * w, m + 7 * w, *kink_cuts):
        if lo < k < hi:
            cuts.add(k)
    bounds = sorted(cuts)

    # linear-growth precondition; probe a geometric decade past the domain top
    # so kink curvature cannot masquerade as super-linear growth
    top = np.exp(bounds[-1])
    pv = np.abs(eval_payoff(np.array([top, 4.0 * top, 16.0 * top])))
    if pv[1] > 0.0 and pv[2] > 0.0:
        slope = math.log(pv[2] / pv[1]) / math.log(4.0)
        if slope > 1.5:
            raise NonIntegrablePayoff(
                f"payoff grows like S^{slope:.2f} beyond the sampled domain"
            )

    coarse = [_panel_integral(integrand, a, b, spec.panel_nodes)
              for a, b in zip(bounds[:-1], bounds[1:])]
    scale = sum(abs(c) for c in coarse)
    atol = spec.rel_tol * (scale + 1e-300) * 1e-3
    total = 0.0
    for (a, b), c in zip(zip(bounds[:-1], bounds[1:]), coarse):
        total += _adaptive(integrand, a, b, spec.panel_nodes, spec.rel_tol,
                           atol, 0, spec.max_depth, c)
    return disc * total
