"""Command-line front end.

Subcommands: price, surface, figures, validate, simulate.  A flat JSON file
given by --config supplies defaults for the shared flags (keys are the flag
names without dashes, e.g. "grid-ns"); explicit flags override it.
--dump-config writes the merged configuration and exits without running.

Exit codes: 0 success, 1 a validation suite failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import numpy as np

from . import closedform, montecarlo, pde, quadrature
from .errors import ArbubbleError
from .model import (Contract, DeterministicBubble, GaussianBubble,
                    LognormalBubble, MarketParams, Regime, call_contract)

_FMT = "%.17g"

# shared flag schema: (config key, type, default, help)
_SHARED = [
    ("S", float, 10.0, "spot price"),
    ("f", float, 0.1, "bubble level"),
    ("strike", float, 10.0, "call strike"),
    ("tau", float, 1.0, "time to expiry"),
    ("r", float, 0.2, "risk-free rate"),
    ("mu", float, 0.8, "underlying drift"),
    ("sigma", float, 0.4, "volatility"),
    ("gamma", float, 0.05, "bubble diffusion (gaussian) or log-diffusion (lognormal)"),
    ("muf", float, 0.0, "bubble drift (gaussian) or log-drift (lognormal)"),
    ("model", str, "gaussian", "bubble model: gaussian|lognormal|deterministic"),
    ("regime", str, "weak", "asymptotic regime or 'full'"),
    ("engine", str, "closed", "pricing engine: closed|quadrature|pde|mc"),
    ("grid-ns", int, 129, "S-nodes for PDE grids"),
    ("grid-nf", int, 33, "f-nodes for PDE grids"),
    ("grid-nt", int, 256, "time steps for PDE grids"),
    ("paths", int, 100000, "Monte Carlo paths"),
    ("steps", int, 256, "Monte Carlo time steps"),
    ("seed", int, 12345, "Monte Carlo seed"),
]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="arbubble",
                                 description="Option pricing under an "
                                             "endogenous arbitrage bubble")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_shared(p):
        for key, typ, _, hlp in _SHARED:
            p.add_argument("--" + key, type=typ, default=None, help=hlp)
        p.add_argument("--out", type=str, default=None, help="output path")
        p.add_argument("--config", type=str, default=None,
                       help="flat JSON config file")
        p.add_argument("--dump-config", action="store_true",
                       help="print the merged config and exit")

    add_shared(sub.add_parser("price", help="price one contract"))
    add_shared(sub.add_parser("surface", help="solve and export a full "
                                              "price surface (CSV)"))
    pf = sub.add_parser("figures", help="regenerate weak/strong call curves")
    pf.add_argument("figure", type=int, choices=(1, 2))
    add_shared(pf)
    pv = sub.add_parser("validate", help="run a validation suite")
    pv.add_argument("suite", choices=("oracle", "reduction", "mc"))
    add_shared(pv)
    add_shared(sub.add_parser("simulate", help="simulate paths and export "
                                               "them (CSV)"))
    return ap


def merge_config(args: argparse.Namespace):
    """defaults < config file < explicit flags; unknown keys are an error.

    Returns (cfg, explicit) where `explicit` holds the keys set by the file
    or a flag, letting subcommands with their own canonical parameters
    (figures) apply them only when the user did not override.
    """
    cfg = {key: default for key, _, default, _ in _SHARED}
    explicit = set()
    if args.config is not None:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}")
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a flat JSON object")
        known = {key for key, _, _, _ in _SHARED}
        for key, val in loaded.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            cfg[key] = val
            explicit.add(key)
    for key, typ, _, _ in _SHARED:
        flag = getattr(args, key.replace("-", "_"))
        if flag is not None:
            cfg[key] = flag
            explicit.add(key)
        try:
            cfg[key] = typ(cfg[key])
        except (TypeError, ValueError):
            raise ConfigError(f"bad value for {key!r}: {cfg[key]!r}")
    return cfg, explicit


class ConfigError(Exception):
    pass


def _market(cfg) -> MarketParams:
    return MarketParams(mu=cfg["mu"], sigma=cfg["sigma"], r=cfg["r"])


def _bubble(cfg):
    tag = cfg["model"]
    if tag == "gaussian":
        return GaussianBubble(mu_f=cfg["muf"], gamma=cfg["gamma"])
    if tag == "lognormal":
        return LognormalBubble(mu_f_bar=cfg["muf"], gamma_bar=cfg["gamma"])
    if tag == "deterministic":
        level = cfg["f"]
        return DeterministicBubble(f=lambda S, t: np.full_like(
            np.asarray(S, dtype=float), level))
    raise ConfigError(f"unknown model {tag!r}")


def _regime(cfg) -> Regime:
    try:
        return Regime(cfg["regime"])
    except ValueError:
        raise ConfigError(f"unknown regime {cfg['regime']!r}")


def _emit(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)


def _price_pde_asymptotic(cfg, params, regime) -> float:
    al = closedform.alphas_for(regime, cfg["model"], params)
    K, sig, tau = cfg["strike"], params.sigma, cfg["tau"]
    z0 = np.log(cfg["S"] / K) / sig
    span = 3.0 * np.sqrt(tau) + abs(al.alpha_x) * tau + abs(z0) + 6.0
    ch = pde.GridChart.make(-span, span, max(cfg["grid-ns"], 257), -1.0, 1.0,
                            5, tau, cfg["grid-nt"])
    term = lambda x, y: np.maximum(K * np.exp(sig * (x + y)) - K, 0.0)
    surf = pde.solve_asymptotic(al, term, ch)
    jmid = len(ch.y) // 2  # y = 0 row; the call solution depends on x+y only
    psi0 = float(np.interp(z0, ch.x, surf.values[:, jmid, -1]))
    return closedform.discount_factor(regime, tau, params) * psi0


def _price_pde_full(cfg, params, bubble) -> float:
    S0, f0, tau = cfg["S"], cfg["f"], cfg["tau"]
    if cfg["model"] == "deterministic":
        g1 = pde.Grid1D.make(S0 * np.exp(-2.5), S0 * np.exp(2.5),
                             cfg["grid-ns"], cfg["grid-nt"], anchor=S0)
        surf1 = pde.solve_deterministic(
            params, bubble.f, Contract(expiry=tau, payoff=lambda S, f:
                                       np.maximum(S - cfg["strike"], 0.0),
                                       strike=cfg["strike"]), g1)
        return surf1.value_at(S0, tau)
    if cfg["model"] == "lognormal":
        f_lo, f_hi = f0 * np.exp(-1.5), f0 * np.exp(1.5)
    else:
        f_lo, f_hi = f0 - 0.3, f0 + 0.3
    g = pde.Grid2D.make(S0 * np.exp(-2.5), S0 * np.exp(2.5), cfg["grid-ns"],
                        f_lo, f_hi, cfg["grid-nf"], cfg["grid-nt"],
                        sigma=params.sigma, s_anchor=S0, f_anchor=f0)
    surf = pde.solve_full(params, bubble, call_contract(cfg["strike"], tau), g)
    return surf.value_at(S0, f0, tau)


def cmd_price(cfg) -> int:
    params = _market(cfg)
    engine = cfg["engine"]
    if engine not in ("closed", "quadrature", "pde", "mc"):
        raise ConfigError(f"unknown engine {engine!r}")
    regime_tag = cfg["regime"]
    if engine in ("closed", "quadrature") and regime_tag == "full":
        raise ConfigError(f"engine {engine!r} needs an asymptotic regime")
    if engine == "mc" and regime_tag != "full":
        raise ConfigError("engine 'mc' simulates the full model; use "
                          "--regime full")
    S0, f0, tau = cfg["S"], cfg["f"], cfg["tau"]
    stderr = None

    if tau == 0.0:
        value = max(S0 - cfg["strike"], 0.0)
    elif engine == "closed":
        value = closedform.price_call(_regime(cfg), cfg["model"], S0, f0, tau,
                                      params, _bubble(cfg), cfg["strike"])
    elif engine == "quadrature":
        value = quadrature.price_generic(
            cfg["model"], _regime(cfg), S0, f0, tau, params, _bubble(cfg),
            payoff=lambda Sp, f0p: np.maximum(Sp - cfg["strike"], 0.0),
            kinks=(cfg["strike"],))
    elif engine == "pde":
        if regime_tag == "full":
            value = _price_pde_full(cfg, params, _bubble(cfg))
        else:
            value = _price_pde_asymptotic(cfg, params, _regime(cfg))
    else:
        bundle = montecarlo.simulate(
            params, _bubble(cfg), S0, f0, tau, cfg["steps"], cfg["paths"],
            montecarlo.RngSpec(cfg["seed"]))
        value, stderr = montecarlo.feynman_kac_price(
            params, _bubble(cfg), call_contract(cfg["strike"], tau), S0, f0,
            bundle)

    cols = [engine, regime_tag, _FMT % S0, _FMT % f0, _FMT % tau, _FMT % value]
    if stderr is not None:
        cols.append(_FMT % stderr)
    line = ",".join(cols) + "\n"
    _emit(line, cfg.get("out"))
    if cfg.get("out") is not None:
        sys.stdout.write(line)
    return 0


def cmd_surface(cfg) -> int:
    if cfg.get("out") is None:
        raise ConfigError("surface needs --out")
    params = _market(cfg)
    if cfg["model"] == "deterministic":
        raise ConfigError("surface export needs a stochastic bubble model")
    bubble = _bubble(cfg)
    surf_grid = pde.Grid2D.make(
        cfg["S"] * np.exp(-2.5), cfg["S"] * np.exp(2.5), cfg["grid-ns"],
        *((cfg["f"] * np.exp(-1.5), cfg["f"] * np.exp(1.5))
          if cfg["model"] == "lognormal" else (cfg["f"] - 0.3, cfg["f"] + 0.3)),
        cfg["grid-nf"], cfg["grid-nt"], sigma=params.sigma,
        s_anchor=cfg["S"], f_anchor=cfg["f"])
    surf = pde.solve_full(params, bubble,
                          call_contract(cfg["strike"], cfg["tau"]), surf_grid)
    surf.to_csv(cfg["out"])
    sys.stdout.write("wrote %s (%d x %d x %d nodes)\n"
                     % (cfg["out"], len(surf.S), len(surf.f), len(surf.tau)))
    return 0


_FIGURES = {1: dict(mu=0.8, r=0.2), 2: dict(mu=0.2, r=0.8)}


def cmd_figures(figure: int, cfg, explicit=()) -> int:
    over = _FIGURES[figure]
    mu = cfg["mu"] if "mu" in explicit else over["mu"]
    r = cfg["r"] if "r" in explicit else over["r"]
    params = MarketParams(mu=mu, sigma=cfg["sigma"], r=r)
    strike, tau = cfg["strike"], cfg["tau"]
    S = np.linspace(0.1, 30.0, 300)
    rows = ["S,V_weak,V_strong"]
    for s in S:
        if tau == 0.0:
            vw = vs = max(s - strike, 0.0)
        else:
            vw = closedform.price_call(Regime.WEAK, "gaussian", s, 0.0, tau,
                                       params, None, strike)
            vs = closedform.price_call(Regime.STRONG, "gaussian", s, 0.0, tau,
                                       params, None, strike)
        rows.append(",".join(_FMT % v for v in (s, vw, vs)))
    out = cfg.get("out") or f"figure{figure}.csv"
    _emit("\n".join(rows) + "\n", out)
    sys.stdout.write(f"wrote {out}\n")
    return 0


def _report(rows) -> int:
    """rows: (check, expected, actual, tolerance) with tolerance <= 0 meaning
    informational; prints the CSV report and returns the exit code."""
    lines = ["check,expected,actual,tolerance,pass"]
    ok = True
    for check, expected, actual, tol in rows:
        if tol > 0.0:
            good = abs(actual - expected) <= tol
            ok = ok and good
        else:
            good = True
        lines.append("%s,%s,%s,%s,%s"
                     % (check, _FMT % expected, _FMT % actual,
                        _FMT % tol, str(good).lower()))
    sys.stdout.write("\n".join(lines) + "\n")
    return 0 if ok else 1


def _suite_oracle(cfg):
    params = _market(cfg)
    S0, K, tau, f0 = cfg["S"], cfg["strike"], cfg["tau"], cfg["f"]
    rows = []
    for regime in (Regime.WEAK, Regime.STRONG, Regime.NEG_SIGMA):
        for model in ("gaussian", "lognormal"):
            if regime is Regime.NEG_SIGMA and model == "lognormal":
                continue
            bub = (GaussianBubble(cfg["muf"], cfg["gamma"]) if model == "gaussian"
                   else LognormalBubble(cfg["muf"], cfg["gamma"]))
            fv = f0 if model == "gaussian" else max(f0, 0.05)
            closed = closedform.price_call(regime, model, S0, fv, tau, params,
                                           bub, K)
            quad = quadrature.price_generic(
                model, regime, S0, fv, tau, params, bub,
                payoff=lambda Sp, f0p: np.maximum(Sp - K, 0.0), kinks=(K,))
            rows.append(("quad_vs_closed_%s_%s" % (regime.value, model),
                         closed, quad, max(1e-6 * abs(closed), 1e-12)))
    # side-by-side comparison: the weak closed form is deliberately not the
    # textbook Black-Scholes price; surface both numbers for inspection
    weak = closedform.price_call(Regime.WEAK, "gaussian", S0, f0, tau, params,
                                 GaussianBubble(cfg["muf"], cfg["gamma"]), K)
    bs = closedform.bs_reference(S0, K, tau, params.r, params.sigma)
    rows.append(("weak_closed_vs_textbook_bs_info", bs, weak, 0.0))
    return rows


def _suite_reduction(cfg):
    params = _market(cfg)
    K, tau = cfg["strike"], cfg["tau"]
    rows = []
    grid = pde.Grid2D.make(cfg["S"] * np.exp(-2.3), cfg["S"] * np.exp(2.3),
                           max(cfg["grid-ns"], 48), -0.1, 0.3,
                           max(min(cfg["grid-nf"], 24), 16), cfg["grid-nt"],
                           sigma=params.sigma, s_anchor=cfg["S"], f_anchor=0.0)
    dev_call = pde.reduction_check_gamma0(
        params, GaussianBubble(0.0, 0.0), call_contract(K, tau), grid)
    rows.append(("reduction_gamma0_call", 0.0, dev_call, 1e-2))
    dev_lin = pde.reduction_check_gamma0(
        params, GaussianBubble(0.0, 0.0),
        Contract(expiry=tau, payoff=lambda S, f: S + 0.0 * f, strike=None),
        grid)
    rows.append(("reduction_gamma0_linear", 0.0, dev_lin, 1e-10))
    return rows


def _suite_mc(cfg):
    params = _market(cfg)
    bubble = _bubble(cfg)
    S0, f0, K, tau = cfg["S"], cfg["f"], cfg["strike"], cfg["tau"]
    grid = pde.Grid2D.make(S0 * np.exp(-2.2), S0 * np.exp(2.2), 177,
                           f0 - 0.4, f0 + 0.24, 65, 600, sigma=params.sigma,
                           s_anchor=S0, f_anchor=f0)
    surf = pde.solve_full(params, bubble, call_contract(K, tau), grid)
    v_pde = surf.value_at(S0, f0, tau)
    bundle = montecarlo.simulate(params, bubble, S0, f0, tau, cfg["steps"],
                                 cfg["paths"], montecarlo.RngSpec(cfg["seed"]))
    v_mc, se = montecarlo.feynman_kac_price(
        params, bubble, call_contract(K, tau), S0, f0, bundle)
    tol = max(3.0 * se, 0.01 * abs(v_pde))
    rows = [("fk_vs_pde", v_pde, v_mc, tol),
            ("absorbed_fraction", 0.0,
             bundle.n_absorbed / bundle.n_paths, 1e-3)]
    return rows


def cmd_validate(suite: str, cfg) -> int:
    rows = {"oracle": _suite_oracle, "reduction": _suite_reduction,
            "mc": _suite_mc}[suite](cfg)
    return _report(rows)


def cmd_simulate(cfg) -> int:
    if cfg.get("out") is None:
        raise ConfigError("simulate needs --out")
    params = _market(cfg)
    bundle = montecarlo.simulate(
        params, _bubble(cfg), cfg["S"], cfg["f"], cfg["tau"], cfg["steps"],
        cfg["paths"], montecarlo.RngSpec(cfg["seed"]), record="full")
    bundle.to_csv(cfg["out"])
    sys.stdout.write("wrote %s: %d paths, %d steps, %d absorbed\n"
                     % (cfg["out"], bundle.n_paths, bundle.steps,
                        bundle.n_absorbed))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, explicit = merge_config(args)
        cfg["out"] = args.out
        if args.dump_config:
            text = json.dumps({k: cfg[k] for k, _, _, _ in _SHARED},
                              indent=2, sort_keys=True) + "\n"
            _emit(text, args.out)
            return 0
        if args.command == "price":
            return cmd_price(cfg)
        if args.command == "surface":
            return cmd_surface(cfg)
        if args.command == "figures":
            return cmd_figures(args.figure, cfg, explicit)
        if args.command == "validate":
            return cmd_validate(args.suite, cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except ArbubbleError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
