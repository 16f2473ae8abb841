"""Command-line driver: simulate, fit, gof, heatmap, study.

File contract
-------------
* data CSV: header row, two numeric columns (u,v or raw x,y).
* ``fit`` writes ``<out>.chain.csv`` (one row per stored draw: sweep,
  omega, flattened eta, flattened free masses) and ``<out>.summary.json``
  (config echo, counts, acceptance rates, posterior mean, rho interval,
  LPML, chain path).
* ``gof`` reads a summary JSON, prints one table row and writes
  ``<out>.gof.json``.
* ``heatmap`` writes ``<out>.svg``, ``<out>.cells.csv`` and
  ``<out>.cdf.csv`` from exactly one grid source.

Exit codes: 0 success, 1 numeric failure, 2 I/O or usage failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import families as fam
from . import gof as gof_mod
from .grid import MassGrid, PseudoSample, cdf as grid_cdf, cell_counts, rank_transform
from .mcmc import Chain, McmcConfig, run_chain
from .mle import empirical_checkerboard
from .prior import SpatialBetaPrior

__all__ = ["main"]

# fixed ramp for heatmaps: densities clamped to [0, 3], white -> mid blue -> dark blue
_RAMP_STOPS = [(255, 255, 255), (107, 174, 214), (8, 48, 107)]
_RAMP_CLAMP = 3.0

STUDY_SETTINGS = [
    ("product", None),
    ("gumbel", 1.3),
    ("clayton", -0.3),
    ("clayton", 1.0),
    ("amh", -0.5),
    ("amh", 0.7),
    ("normal", -0.5),
    ("normal", 0.5),
]


class CliDataError(Exception):
    """Malformed input file (exit code 2)."""


def _read_xy_csv(path):
    """Two numeric columns under a header row; raises CliDataError with line numbers."""
    if not os.path.exists(path):
        raise CliDataError(f"input file not found: {path}")
    xs, ys = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CliDataError(f"{path}: empty file") from None
        if len(header) < 2:
            raise CliDataError(f"{path}: expected two columns, found {len(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise CliDataError(f"{path}:{lineno}: expected two columns")
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
            except ValueError:
                raise CliDataError(f"{path}:{lineno}: non-numeric value") from None
    if not xs:
        raise CliDataError(f"{path}: no data rows")
    return np.asarray(xs), np.asarray(ys)


def _write_uv_csv(path, u, v):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "v"])
        for a, b in zip(u, v):
            writer.writerow([format(a, ".17g"), format(b, ".17g")])


def _family_from_args(args, name_attr="family", theta_attr="theta"):
    name = getattr(args, name_attr)
    theta = getattr(args, theta_attr)
    if name == "product":
        if theta is not None:
            raise ValueError("--theta is not accepted for the product family")
        return fam.CopulaFamily("product")
    return fam.CopulaFamily(name, theta)


def _pseudo_sample(args):
    x, y = _read_xy_csv(args.inp)
    if args.mode == "rank":
        return rank_transform(x, y, ties=args.ties)
    if np.any(x <= 0) or np.any(x > 1) or np.any(y <= 0) or np.any(y > 1):
        raise ValueError(
            "raw mode expects data already in (0, 1]^2; use --mode rank for real data"
        )
    return PseudoSample(u=x, v=y)


# -- subcommands ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    family = _family_from_args(args)
    rng = np.random.default_rng(args.seed)
    s = fam.sample(family, args.n, rng)
    _write_uv_csv(args.out, s.u, s.v)
    print(f"wrote {args.n} draws from {family.name} to {args.out}")
    return 0


def _fit_once(sample, args):
    counts = cell_counts(sample, args.m)
    prior = SpatialBetaPrior.constant(args.m, a=args.a, b=args.b, c=args.c)
    config = McmcConfig(
        iterations=args.iters, burn_in=args.burnin, thin=args.thin,
        delta=args.delta, seed=args.seed,
    )
    chain = run_chain(counts, prior, config)
    return counts, chain


def _summary_dict(args, counts, chain):
    rates = chain.acceptance_rates()
    mean = gof_mod.posterior_mean_grid(chain)
    lo, hi = gof_mod.rho_interval(chain)
    rho_draws = gof_mod.chain_rho_draws(chain)
    return {
        "input": args.inp,
        "mode": args.mode,
        "ties": args.ties,
        "m": args.m,
        "n": counts.n,
        "a": args.a,
        "b": args.b,
        "c": args.c,
        "delta": args.delta,
        "iterations": args.iters,
        "burn_in": args.burnin,
        "thin": args.thin,
        "seed": args.seed,
        "counts": counts.r.tolist(),
        "chain_csv": os.path.basename(args.out) + ".chain.csv",
        "stored_draws": len(chain),
        "acceptance_pooled": rates["pooled"],
        "acceptance_per_cell": rates["per_cell"].tolist(),
        "posterior_mean_free": mean.free.tolist(),
        "posterior_mean_full": mean.full.tolist(),
        "rho_mean": float(rho_draws.mean()),
        "rho_interval": [lo, hi],
        "lpml": gof_mod.lpml(chain, counts),
        "lpml_sum": gof_mod.lpml(chain, counts, per_observation=False),
    }


def cmd_fit(args) -> int:
    sample = _pseudo_sample(args)
    counts, chain = _fit_once(sample, args)
    chain.to_csv(args.out + ".chain.csv")
    summary = _summary_dict(args, counts, chain)
    with open(args.out + ".summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"fit m={args.m} c={args.c} on n={counts.n} points: "
        f"rho interval ({summary['rho_interval'][0]:.3f}, {summary['rho_interval'][1]:.3f}), "
        f"LPML {summary['lpml']:.3f}, acceptance {summary['acceptance_pooled']:.2f}"
    )
    return 0


def _load_summary(path):
    if not os.path.exists(path):
        raise CliDataError(f"summary file not found: {path}")
    with open(path) as fh:
        try:
            summary = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CliDataError(f"{path}: not valid JSON ({exc})") from None
    for key in ("counts", "chain_csv", "m"):
        if key not in summary:
            raise CliDataError(f"{path}: missing key {key!r}; not a fit summary")
    chain_path = summary["chain_csv"]
    if not os.path.isabs(chain_path):
        chain_path = os.path.join(os.path.dirname(os.path.abspath(path)), chain_path)
    if not os.path.exists(chain_path):
        raise CliDataError(f"chain file not found: {chain_path}")
    chain = Chain.from_csv(chain_path)
    from .grid import CellCounts

    counts = CellCounts(m=summary["m"], r=np.asarray(summary["counts"], dtype=int))
    return summary, counts, chain


def cmd_gof(args) -> int:
    summary, counts, chain = _load_summary(args.inp)
    reference = None
    true_rho = None
    if args.reference is not None:
        reference = _family_from_args(args, name_attr="reference")
        true_rho = fam.true_rho(reference)
    elif args.theta is not None:
        raise ValueError("--theta requires --reference")
    empirical = empirical_checkerboard(counts) if reference is not None else None
    rep = gof_mod.report(
        chain,
        counts,
        reference=reference,
        c_tag=summary.get("c"),
        data_mode=summary.get("mode"),
        empirical=empirical,
    )
    print(" m    c    rho  rho-interval        LPML       SN    SN-emp")
    print(rep.to_table_row(true_rho=true_rho))
    out = args.out or os.path.splitext(args.inp)[0] + ".gof"
    payload = rep.to_dict()
    payload["true_rho"] = true_rho
    with open(out + ".json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _ramp_color(value: float) -> str:
    t = min(max(value, 0.0), _RAMP_CLAMP) / _RAMP_CLAMP
    if t <= 0.5:
        lo, hi, frac = _RAMP_STOPS[0], _RAMP_STOPS[1], t / 0.5
    else:
        lo, hi, frac = _RAMP_STOPS[1], _RAMP_STOPS[2], (t - 0.5) / 0.5
    rgb = tuple(round(a + (b - a) * frac) for a, b in zip(lo, hi))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _write_heatmap_svg(path, density: np.ndarray) -> None:
    """m x m coloured cells, v-axis pointing up, 480 px square, no text."""
    m = density.shape[0]
    size = 480
    cell = size / m
    lines = [
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{size}" height="{size}" viewBox="0 0 {size} {size}">'
    ]
    for j in range(m):
        for k in range(m):
            x = j * cell
            y = size - (k + 1) * cell
            lines.append(
                f'<rect x="{x:.3f}" y="{y:.3f}" width="{cell:.3f}" height="{cell:.3f}" '
                f'fill="{_ramp_color(density[j, k])}"/>'
            )
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _heatmap_source(args):
    """Resolve the single grid source: chain summary, data CSV, or family."""
    src_json = args.inp if (args.inp and args.inp.endswith(".json")) else None
    src_csv = args.inp if (args.inp and not args.inp.endswith(".json")) else None
    chosen = [s for s in (src_json, src_csv, args.family) if s is not None]
    if len(chosen) != 1:
        raise ValueError("heatmap needs exactly one source: --in summary.json, --in data.csv with --m, or --family")
    if src_json:
        summary, _, chain = _load_summary(src_json)
        grid = gof_mod.posterior_mean_grid(chain)
        return grid.m**2 * grid.full, lambda uu, vv: grid_cdf(grid, uu, vv)
    if src_csv:
        if args.m is None:
            raise ValueError("--m is required with a data CSV source")
        sample = _pseudo_sample(args)
        grid = empirical_checkerboard(cell_counts(sample, args.m))
        return grid.m**2 * grid.full, lambda uu, vv: grid_cdf(grid, uu, vv)
    family = _family_from_args(args)
    res = 128
    corners = np.arange(res + 1) / res
    uu, vv = np.meshgrid(corners, corners, indexing="ij")
    corner_cdf = fam.cdf(family, uu.ravel(), vv.ravel()).reshape(res + 1, res + 1)
    masses = (
        corner_cdf[1:, 1:] - corner_cdf[:-1, 1:] - corner_cdf[1:, :-1] + corner_cdf[:-1, :-1]
    )
    return res**2 * masses, lambda u2, v2: fam.cdf(family, u2, v2)


def cmd_heatmap(args) -> int:
    density, cdf_fn = _heatmap_source(args)
    _write_heatmap_svg(args.out + ".svg", density)
    with open(args.out + ".cells.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "k", "density"])
        m = density.shape[0]
        for j in range(m):
            for k in range(m):
                writer.writerow([j + 1, k + 1, format(density[j, k], ".17g")])
    axis = np.linspace(0.0, 1.0, 65)
    uu, vv = np.meshgrid(axis, axis, indexing="ij")
    surf = cdf_fn(uu.ravel(), vv.ravel())
    with open(args.out + ".cdf.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "v", "C"])
        for a, b, c in zip(uu.ravel(), vv.ravel(), surf):
            writer.writerow([format(a, ".17g"), format(b, ".17g"), format(c, ".17g")])
    print(f"wrote {args.out}.svg, {args.out}.cells.csv, {args.out}.cdf.csv")
    return 0


# -- simulation study ----------------------------------------------------------

def _study_cell(job):
    """One (family, theta, m, c) configuration fitted in raw and rank mode."""
    name, theta, m, c, n, base_seed, iters, burnin, thin, delta, a, b = job
    family = fam.CopulaFamily(name, theta)
    seed = abs(hash((name, theta, m, c))) % 100_000 + base_seed
    rng = np.random.default_rng(seed)
    raw = fam.sample(family, n, rng)
    ranked = rank_transform(raw.u, raw.v, ties="lenient")
    prior = SpatialBetaPrior.constant(m, a=a, b=b, c=c)
    out = {"family": name, "theta": theta, "m": m, "c": c, "true_rho": fam.true_rho(family)}
    for mode, sample_ in (("raw", raw), ("rank", ranked)):
        counts = cell_counts(sample_, m)
        chain = run_chain(
            counts, prior,
            McmcConfig(iterations=iters, burn_in=burnin, thin=thin, delta=delta, seed=seed + 1),
        )
        rep = gof_mod.report(
            chain, counts, reference=family, data_mode=mode,
            empirical=empirical_checkerboard(counts) if mode == "rank" else None,
        )
        out[mode] = rep.to_dict()
    return out


def cmd_study(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    wanted = args.families.split(",") if args.families else [s[0] for s in STUDY_SETTINGS]
    settings = [s for s in STUDY_SETTINGS if s[0] in wanted]
    if not settings:
        raise ValueError(f"no study families match {args.families!r}")
    jobs = [
        (name, theta, m, c, args.n, args.seed, args.iters, args.burnin,
         args.thin, args.delta, args.a, args.b)
        for name, theta in settings
        for m in (5, 8)
        for c in (0, 1, 2)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_study_cell, jobs))
    else:
        results = [_study_cell(job) for job in jobs]

    by_family: dict[str, list] = {}
    for res in results:
        by_family.setdefault(res["family"], []).append(res)
    header = (
        f"{'theta':>6} {'m':>2} {'c':>2} {'rho':>6} | "
        f"{'rho-hat':^17} {'LPML':>8} {'SN_B':>6} | "
        f"{'rho-hat^r':^17} {'LPML^r':>8} {'SN_B^r':>7} {'SN_F^r':>7}"
    )
    for family, rows in by_family.items():
        rows.sort(key=lambda r: (r["theta"] if r["theta"] is not None else 0.0, r["m"], r["c"]))
        lines = [header]
        for r in rows:
            raw, rank = r["raw"], r["rank"]
            theta_s = f"{r['theta']:6.2f}" if r["theta"] is not None else "     -"
            lines.append(
                f"{theta_s} {r['m']:>2d} {r['c']:>2d} {r['true_rho']:6.2f} | "
                f"({raw['rho_interval'][0]:6.3f},{raw['rho_interval'][1]:6.3f}) "
                f"{raw['lpml']:8.3f} {raw['sup_norm']:6.3f} | "
                f"({rank['rho_interval'][0]:6.3f},{rank['rho_interval'][1]:6.3f}) "
                f"{rank['lpml']:8.3f} {rank['sup_norm']:7.3f} "
                f"{rank['sup_norm_empirical']:7.3f}"
            )
        table_path = os.path.join(args.out, f"table_{family}.txt")
        with open(table_path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        print(f"wrote {table_path}")
    with open(os.path.join(args.out, "study.json"), "w") as fh:
        json.dump(results, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


# -- argument parsing ----------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridcopula",
        description="Checkerboard copula estimation: simulation, Bayesian fitting, diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_mcmc(p):
        p.add_argument("--m", type=int, default=5, help="partition order (default 5)")
        p.add_argument("--a", type=float, default=0.1, help="beta shape a (default 0.1)")
        p.add_argument("--b", type=float, default=0.1, help="beta shape b (default 0.1)")
        p.add_argument("--c", type=int, default=1, help="latent binomial cap (default 1)")
        p.add_argument("--delta", type=float, default=0.25, help="MH window fraction (default 0.25)")
        p.add_argument("--iters", type=int, default=5000, help="total sweeps (default 5000)")
        p.add_argument("--burnin", type=int, default=500, help="discarded sweeps (default 500)")
        p.add_argument("--thin", type=int, default=2, help="keep every k-th sweep (default 2)")
        p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")

    p_sim = sub.add_parser("simulate", help="draw a sample from a reference copula")
    p_sim.add_argument("--family", required=True, choices=fam.FAMILY_NAMES)
    p_sim.add_argument("--theta", type=float, default=None, help="family parameter")
    p_sim.add_argument("--n", type=int, required=True, help="sample size")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="output CSV path")
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="run the Gibbs sampler on a two-column CSV")
    p_fit.add_argument("--in", dest="inp", required=True, help="input data CSV")
    p_fit.add_argument("--mode", choices=("raw", "rank"), default="rank",
                       help="'rank' applies the rank transformation first (default)")
    p_fit.add_argument("--ties", choices=("strict", "lenient"), default="strict",
                       help="tie handling in rank mode (default strict)")
    add_common_mcmc(p_fit)
    p_fit.add_argument("--out", required=True, help="output prefix")
    p_fit.set_defaults(func=cmd_fit)

    p_gof = sub.add_parser("gof", help="goodness-of-fit row for a fitted chain")
    p_gof.add_argument("--in", dest="inp", required=True, help="fit summary JSON")
    p_gof.add_argument("--reference", choices=fam.FAMILY_NAMES, default=None,
                       help="reference family for the sup norm")
    p_gof.add_argument("--theta", type=float, default=None, help="reference parameter")
    p_gof.add_argument("--out", default=None, help="output prefix (default: summary path)")
    p_gof.set_defaults(func=cmd_gof)

    p_heat = sub.add_parser("heatmap", help="density heatmap SVG + cell/CDF CSVs")
    p_heat.add_argument("--in", dest="inp", default=None,
                        help="fit summary JSON (posterior mean) or data CSV (empirical)")
    p_heat.add_argument("--m", type=int, default=None, help="order for the empirical grid")
    p_heat.add_argument("--mode", choices=("raw", "rank"), default="rank")
    p_heat.add_argument("--ties", choices=("strict", "lenient"), default="strict")
    p_heat.add_argument("--family", choices=fam.FAMILY_NAMES, default=None,
                        help="true-density source")
    p_heat.add_argument("--theta", type=float, default=None)
    p_heat.add_argument("--out", required=True, help="output prefix")
    p_heat.set_defaults(func=cmd_heatmap)

    p_study = sub.add_parser("study", help="run the full simulation-study matrix")
    p_study.add_argument("--out", required=True, help="output directory")
    p_study.add_argument("--n", type=int, default=200, help="sample size per cell (default 200)")
    p_study.add_argument("--families", default=None,
                         help="comma-separated subset of families (default: all)")
    p_study.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")
    p_study.add_argument("--a", type=float, default=0.1)
    p_study.add_argument("--b", type=float, default=0.1)
    p_study.add_argument("--delta", type=float, default=0.25)
    p_study.add_argument("--iters", type=int, default=5000)
    p_study.add_argument("--burnin", type=int, default=500)
    p_study.add_argument("--thin", type=int, default=2)
    p_study.add_argument("--seed", type=int, default=0)
    p_study.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
