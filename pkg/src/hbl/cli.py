"""Command-line front end: config ingestion, subcommand dispatch, artifacts.

Configs are JSON documents (schema ``hbl-config/1``) whose numeric fields
are decimal strings, parsed losslessly at the working precision.  Every
artifact embeds the resolved config and the library version; identical
configs produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from mpmath import mp, mpf, mpc

from . import __version__
from . import numerics as nu
from .errors import HblError, InvalidConfig, UnsupportedFractions
from .model import (
    BrownianConfig,
    Regime,
    classify_separation,
    ellipse_endpoints,
    phase_boundary,
    semicircle_density,
)
from .mop import MultiIndexPair, WeightSystem
from . import kernel, painleve, rh, scaling

CONFIG_SCHEMA = "hbl-config/1"
USAGE_EXIT = 64
_DIGITS = 30


def _fmt(x) -> str:
    if isinstance(x, mpc):
        return mp.nstr(x, _DIGITS)
    return mp.nstr(nu.to_ext(x), _DIGITS)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def load_config(path: str) -> BrownianConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh, parse_float=str, parse_int=str)
    if raw.get("schema") != CONFIG_SCHEMA:
        raise InvalidConfig(
            f"config schema must be {CONFIG_SCHEMA!r}, got {raw.get('schema')!r}"
        )
    for key in ("a", "b"):
        if key not in raw or len(raw[key]) != 2:
            raise InvalidConfig(f"config field {key!r} must list two positions")
    p = raw.get("p", ["0.5", "0.5"])
    if len(p) != 2:
        raise InvalidConfig("config field 'p' must list two fractions")
    kwargs = {}
    if "L" in raw and "T" in raw:
        raise InvalidConfig("config must set either 'T' or 'L', not both")
    if "L" in raw:
        kwargs["L"] = raw["L"]
    else:
        kwargs["T"] = raw.get("T", "1")
    return BrownianConfig(
        raw["a"][0], raw["a"][1], raw["b"][0], raw["b"][1], p[0], p[1], **kwargs
    )


def config_echo(cfg: BrownianConfig) -> dict:
    out = {
        "schema": CONFIG_SCHEMA,
        "a": [_fmt(cfg.a1), _fmt(cfg.a2)],
        "b": [_fmt(cfg.b1), _fmt(cfg.b2)],
        "p": [_fmt(cfg.p1), _fmt(cfg.p2)],
    }
    if cfg.L is not None:
        out["L"] = _fmt(cfg.L)
    else:
        out["T"] = _fmt(cfg.T)
    return out


def _metadata(cfg: BrownianConfig) -> dict:
    return {
        "version": __version__,
        "precision_bits": mp.prec,
        "config": config_echo(cfg),
    }


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path: Path, header: Sequence[str], rows, metadata: dict) -> None:
    """CSV artifact: '#' metadata preamble, header row, '.' decimals, LF."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# " + json.dumps(metadata, sort_keys=True) + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _parse_index(ns) -> MultiIndexPair:
    n = tuple(int(v) for v in ns.n.split(","))
    m = tuple(int(v) for v in ns.m.split(","))
    return MultiIndexPair(n, m)


def _weight_system(cfg: BrownianConfig, t, size: int) -> WeightSystem:
    return WeightSystem.from_config(cfg, t, size)


def cmd_classify(cfg: BrownianConfig, ns, out: Path) -> int:
    rep = classify_separation(cfg)
    payload = {
        "regime": rep.regime.value,
        "t_crit": _fmt(rep.t_crit),
        "T_crit": _fmt(rep.T_crit),
    }
    print(json.dumps(payload, sort_keys=True))
    if ns.out:
        write_json(out / "classify.json", {**_metadata(cfg), **payload})
    return 0


def cmd_geometry(cfg: BrownianConfig, ns, out: Path) -> int:
    t = nu.to_ext(ns.t)
    rows = []
    for j in (1, 2):
        alpha, beta = ellipse_endpoints(cfg, t, j)
        samples = ns.samples
        for i in range(samples):
            x = alpha + (beta - alpha) * i / (samples - 1)
            rows.append((j, _fmt(x), _fmt(semicircle_density(cfg, t, j, x))))
    payload = _metadata(cfg)
    payload["t"] = _fmt(t)
    for j in (1, 2):
        alpha, beta = ellipse_endpoints(cfg, t, j)
        payload[f"alpha_{j}"] = _fmt(alpha)
        payload[f"beta_{j}"] = _fmt(beta)
    write_json(out / "geometry.json", payload)
    write_csv(out / "geometry.csv", ("group", "x", "density"), rows, _metadata(cfg))
    print(f"wrote {out / 'geometry.json'} and {out / 'geometry.csv'}")
    return 0


def cmd_coefficients(cfg: BrownianConfig, ns, out: Path) -> int:
    idx = _parse_index(ns)
    t = nu.to_ext(ns.t)
    ws = _weight_system(cfg, t, idx.size_n)
    exp = rh.assemble_rh_expansion(ws, idx)
    H = rh.recurrence_matrix_H(exp)
    size = exp.p + exp.q
    payload = _metadata(cfg)
    payload.update(
        {
            "t": _fmt(t),
            "n": list(idx.n),
            "m": list(idx.m),
            "N": _fmt(ws.N),
            "Y1": [[_fmt(exp.Y1[i, j]) for j in range(size)] for i in range(size)],
            "Y2": [[_fmt(exp.Y2[i, j]) for j in range(size)] for i in range(size)],
        }
    )
    write_json(out / "coefficients.json", payload)
    rows = [
        (i + 1, j + 1, _fmt(H[i, j]))
        for i in range(size)
        for j in range(i + 1, size)
    ]
    write_csv(
        out / "recurrence_products.csv", ("i", "j", "c_ij_c_ji"), rows, _metadata(cfg)
    )
    print(f"wrote {out / 'coefficients.json'} and {out / 'recurrence_products.csv'}")
    return 0


def cmd_identities(cfg: BrownianConfig, ns, out: Path) -> int:
    idx = _parse_index(ns)
    t = nu.to_ext(ns.t)
    ws = _weight_system(cfg, t, idx.size_n)
    exp = rh.assemble_rh_expansion(ws, idx)
    tol = mpf(10) ** ns.tol_exponent
    checks = []

    def record(name, residual):
        checks.append(
            {
                "name": name,
                "residual": _fmt(residual),
                "pass": bool(residual <= tol),
            }
        )

    rep = rh.scalar_product_report(exp)
    record("scalar_products", rep.max_residual)
    zs = [mpf(0), mpf(1), mpc(-1, 1)]
    worst_fw = mpf(0)
    worst_bw = mpf(0)
    for k in range(exp.p):
        for l in range(exp.q):
            worst_fw = max(worst_fw, rh.verify_five_term_recurrence(ws, idx, k, l, zs))
            worst_bw = max(worst_bw, rh.verify_backward_recurrence(ws, idx, k, l, zs))
    record("five_term_recurrence", worst_fw)
    record("backward_recurrence", worst_bw)
    worst_inv = mpf(0)
    z0 = mpc(2, 1)
    for k in range(exp.p):
        for l in range(exp.q):
            sh = idx.shift_n(k).shift_m(l)
            exp_sh = rh.assemble_rh_expansion(ws, sh)
            U = rh.forward_transfer(exp, exp_sh, k, l, z0)
            Ub = rh.backward_transfer(exp, exp_sh, k, l, z0)
            worst_inv = max(worst_inv, nu.max_abs(U * Ub - nu.identity(exp.p + exp.q)))
    record("transfer_inverse", worst_inv)
    ws_sw, idx_sw = rh.swapped_system(ws, idx)
    exp_sw = rh.assemble_rh_expansion(ws_sw, idx_sw)
    record("involution", rh.involution_check(exp, exp_sw))
    worst_diag = mpf(0)
    for k in range(exp.p):
        for l in range(exp.q):
            worst_diag = max(worst_diag, rh.diagonal_recurrence(exp, k, l).disagreement)
    record("diagonal_coefficient_cross_check", worst_diag)
    payload = _metadata(cfg)
    payload.update(
        {
            "t": _fmt(t),
            "n": list(idx.n),
            "m": list(idx.m),
            "tolerance": _fmt(tol),
            "checks": checks,
            "all_pass": all(c["pass"] for c in checks),
        }
    )
    write_json(out / "identities.json", payload)
    print(json.dumps({"all_pass": payload["all_pass"]}))
    return 0 if payload["all_pass"] else 3


def cmd_density(cfg: BrownianConfig, ns, out: Path) -> int:
    idx = _parse_index(ns)
    t = nu.to_ext(ns.t)
    ws = _weight_system(cfg, t, idx.size_n)
    grid = kernel.default_grid(cfg, t, points=ns.points)
    prof = kernel.density_profile(ws, idx, cfg, t, grid=grid)
    rows = [
        (_fmt(x), _fmt(v), _fmt(s1), _fmt(s2), flag)
        for (x, v, s1, s2, flag) in prof.rows()
    ]
    write_csv(
        out / "density.csv",
        ("x", "density", "semicircle_1", "semicircle_2", "interval"),
        rows,
        _metadata(cfg),
    )
    payload = _metadata(cfg)
    payload.update(
        {
            "t": _fmt(t),
            "n": list(idx.n),
            "m": list(idx.m),
            "sup_distance_interval_1": _fmt(prof.sup_distance_1),
            "sup_distance_interval_2": _fmt(prof.sup_distance_2),
        }
    )
    write_json(out / "density.json", payload)
    print(f"wrote {out / 'density.csv'}")
    return 0


def cmd_painleve(cfg: Optional[BrownianConfig], ns, out: Path) -> int:
    sol = painleve.solve_hastings_mcleod(
        s_lo=nu.to_ext(ns.s_lo), s_hi=nu.to_ext(ns.s_hi), tol=nu.to_ext(ns.tol)
    )
    rows = []
    for i, s in enumerate(sol.grid):
        if i % ns.stride:
            continue
        u = sol.q_prime[i] ** 2 - s * sol.q[i] ** 2 - sol.q[i] ** 4
        rows.append((_fmt(s), _fmt(sol.q[i]), _fmt(sol.q_prime[i]), _fmt(u)))
    meta = {
        "version": __version__,
        "precision_bits": mp.prec,
        "s_lo": _fmt(sol.s_lo),
        "s_hi": _fmt(sol.s_hi),
        "tolerance": _fmt(sol.tol),
        "achieved_residual": _fmt(sol.achieved_residual),
    }
    write_csv(out / "painleve.csv", ("s", "q", "q_prime", "u"), rows, meta)
    print(f"wrote {out / 'painleve.csv'}")
    return 0


def cmd_scaling(cfg: BrownianConfig, ns, out: Path) -> int:
    t = nu.to_ext(ns.t)
    n_list = tuple(int(v) for v in ns.n_list.split(","))
    rep = classify_separation(cfg)
    meta = _metadata(cfg)
    meta["t"] = _fmt(t)
    meta["regime"] = rep.regime.value
    if rep.regime is Regime.CRITICAL:
        L = nu.to_ext(ns.L if ns.L is not None else (cfg.L or 0))
        study = scaling.double_scaling_study(cfg, L, t, n_list)
        meta.update({"L": _fmt(L), "K": _fmt(study.K), "s": _fmt(study.s),
                     "q_of_s": _fmt(study.q_of_s)})
        rows = [r.as_dict() for r in study.rows]
    elif rep.regime is Regime.SMALL:
        study = scaling.small_separation_study(cfg, t, n_list)
        meta.update(
            {
                "limit_c12c21": _fmt(study.limit_c12c21),
                "limit_c14c41": _fmt(study.limit_c14c41),
                "order_c12c21": repr(study.order_c12c21),
                "order_c14c41": repr(study.order_c14c41),
            }
        )
        rows = [r.as_dict() for r in study.rows]
    else:
        study = scaling.large_separation_decay(cfg, t, n_list)
        meta.update(
            {
                "slope_c12c21": repr(study.fit_c12c21.slope),
                "r_squared_c12c21": repr(study.fit_c12c21.r_squared),
                "slope_c14c41": repr(study.fit_c14c41.slope),
                "r_squared_c14c41": repr(study.fit_c14c41.r_squared),
            }
        )
        rows = [r.as_dict() for r in study.rows]
    header = list(rows[0].keys())
    write_csv(out / "scaling.csv", header, ([r[h] for h in header] for r in rows), meta)
    write_json(out / "scaling.json", {**meta, "rows": rows})
    print(f"wrote {out / 'scaling.csv'} and {out / 'scaling.json'}")
    return 0


def cmd_spectral(cfg: BrownianConfig, ns, out: Path) -> int:
    idx = _parse_index(ns)
    t = nu.to_ext(ns.t)
    ws = _weight_system(cfg, t, idx.size_n)
    exp = rh.assemble_rh_expansion(ws, idx)
    report = rh.spectral_curve(exp)
    payload = _metadata(cfg)
    payload.update(
        {
            "t": _fmt(t),
            "n": list(idx.n),
            "m": list(idx.m),
            "polynomial": {
                f"xi^{i} z^{j}": _fmt(c) for (i, j), c in sorted(report.polynomial.items())
            },
            "branches": [
                {
                    "slope": _fmt(b.slope),
                    "constant": _fmt(b.constant),
                    "inverse_z": _fmt(b.inverse_z),
                    "fit_error": _fmt(b.fit_error),
                }
                for b in report.branches
            ],
        }
    )
    write_json(out / "spectral.json", payload)
    print(f"wrote {out / 'spectral.json'}")
    return 0


def cmd_phase_diagram(cfg: BrownianConfig, ns, out: Path) -> int:
    samples = ns.samples
    curve_rows = []
    for i in range(1, samples):
        t = mpf(i) / samples
        try:
            curve_rows.append((_fmt(t), _fmt(phase_boundary(cfg, t))))
        except UnsupportedFractions:
            raise
    raster_rows = []
    t_crit = classify_separation(cfg).t_crit
    for i in range(1, ns.raster):
        t = mpf(i) / ns.raster
        for j in range(1, ns.raster):
            T = mpf(2) * j / ns.raster
            probe = BrownianConfig(
                cfg.a1, cfg.a2, cfg.b1, cfg.b2, cfg.p1, cfg.p2, T=T
            )
            raster_rows.append((_fmt(t), _fmt(T), classify_separation(probe).regime.value))
    meta = _metadata(cfg)
    meta["t_crit"] = _fmt(t_crit)
    write_csv(out / "phase_boundary.csv", ("t", "T"), curve_rows, meta)
    write_csv(out / "phase_raster.csv", ("t", "T", "regime"), raster_rows, meta)
    print(f"wrote {out / 'phase_boundary.csv'} and {out / 'phase_raster.csv'}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="hbl", description=__doc__)
    parser.add_argument("--precision", type=int, default=nu.DEFAULT_PRECISION_BITS,
                        help="working precision in bits (default 256)")
    parser.add_argument("--out", default=None, help="artifact output directory")
    sub = parser.add_subparsers(dest="command")

    def add(name, needs_config=True, needs_index=False, needs_t=False, **kwargs):
        sp = sub.add_parser(name, **kwargs)
        if needs_config:
            sp.add_argument("--config", required=True, help="config JSON path")
        if needs_index:
            sp.add_argument("--n", required=True, help="comma list, e.g. 2,2")
            sp.add_argument("--m", required=True, help="comma list, e.g. 2,2")
        if needs_t:
            sp.add_argument("--t", required=True, help="time in (0,1)")
        return sp

    add("classify")
    sp = add("geometry", needs_t=True)
    sp.add_argument("--samples", type=int, default=101)
    add("coefficients", needs_index=True, needs_t=True)
    sp = add("identities", needs_index=True, needs_t=True)
    sp.add_argument("--tol-exponent", type=int, default=-18)
    sp = add("density", needs_index=True, needs_t=True)
    sp.add_argument("--points", type=int, default=400)
    sp = add("painleve", needs_config=False)
    sp.add_argument("--s-lo", default="-10")
    sp.add_argument("--s-hi", default="10")
    sp.add_argument("--tol", default="1e-12")
    sp.add_argument("--stride", type=int, default=10)
    sp = add("scaling", needs_t=True)
    sp.add_argument("--L", default=None, help="double-scaling constant")
    sp.add_argument("--n-list", default="8,12,16,24,32,48,64")
    add("spectral", needs_index=True, needs_t=True)
    sp = add("phase-diagram")
    sp.add_argument("--samples", type=int, default=200)
    sp.add_argument("--raster", type=int, default=40)
    return parser


_HANDLERS = {
    "classify": cmd_classify,
    "geometry": cmd_geometry,
    "coefficients": cmd_coefficients,
    "identities": cmd_identities,
    "density": cmd_density,
    "painleve": cmd_painleve,
    "scaling": cmd_scaling,
    "spectral": cmd_spectral,
    "phase-diagram": cmd_phase_diagram,
}


def _report_error(exc: HblError) -> None:
    sys.stderr.write(
        json.dumps({"error": exc.code, "message": str(exc)}, sort_keys=True) + "\n"
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else USAGE_EXIT
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return USAGE_EXIT
    nu.set_precision(ns.precision)
    out = Path(ns.out) if ns.out else Path(".")
    out.mkdir(parents=True, exist_ok=True)
    handler = _HANDLERS[ns.command]
    cfg = None
    try:
        if getattr(ns, "config", None):
            cfg = load_config(ns.config)
        return handler(cfg, ns, out)
    except HblError as exc:
        _report_error(exc)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
