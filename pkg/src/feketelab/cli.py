"""Batch experiment driver.

Every library capability is a subcommand; runs are driven by a flat
key=value configuration file plus flag overrides (flags win).  Each
reporting subcommand writes delimited output (17 significant digits, so
doubles round-trip) and a rendered figure into the output directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import reporting
from .basis import enumerate_basis
from .convergence import diagonal_diameter_scan, convergence_experiment
from .domains import build_mesh, make_weight, neighborhood_mesh, shape_from_spec
from .fekete import aawf_array, extract, make_eps_schedule
from .gram import DiscreteMeasure, bergman_at_atoms, gram_matrix, logdet_gram, optimal_measure
from .perturbation import derivative_experiment
from .verify import run_verify

SUBCOMMANDS = (
    "mesh",
    "fekete",
    "diameter",
    "gram",
    "bergman",
    "optimal",
    "perturb",
    "converge",
    "verify",
)

# configuration schema: key -> (parser, default)
_SCHEMA = {
    "shape": (str, "interval:-1,1"),
    "weight": (str, "constant"),
    "eps_law": (str, "zero"),
    "eps0": (float, 1.0),
    "epsilon": (float, 0.0),
    "nmin": (int, 2),
    "nmax": (int, 8),
    "n": (int, 4),
    "extractor": (str, "greedy+exchange"),
    "slack": (float, 0.02),
    "moment_degree": (int, 4),
    "resolution": (int, 200),
    "tol": (float, 1e-3),
    "probe": (str, "re"),
    "seed": (int, 0),
    "out": (str, "out"),
    "fast": (lambda v: str(v).lower() in ("1", "true", "yes"), False),
}

_EXTRACTOR_ALIASES = {"greedy": "greedy", "exchange": "greedy+exchange",
                      "greedy+exchange": "greedy+exchange", "brute": "brute-force",
                      "brute-force": "brute-force"}


class ConfigError(ValueError):
    pass


def _normalize_key(key: str) -> str:
    return key.strip().replace("-", "_")


def read_config(path: str) -> dict:
    """Flat key=value file; '#' starts a comment; keys must be in the schema."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value, got {line!r}")
            key, _, value = line.partition("=")
            key = _normalize_key(key)
            if key not in _SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown configuration key {key!r}")
            parse, _ = _SCHEMA[key]
            try:
                out[key] = parse(value.strip())
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    return out


def resolve_settings(args: argparse.Namespace) -> dict:
    """Defaults, overridden by the config file, overridden by flags."""
    settings = {key: default for key, (_, default) in _SCHEMA.items()}
    if getattr(args, "config", None):
        settings.update(read_config(args.config))
    for key in _SCHEMA:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    ex = settings["extractor"]
    if ex not in _EXTRACTOR_ALIASES:
        raise ConfigError(
            f"invalid value for key 'extractor': {ex!r} (choose from {sorted(set(_EXTRACTOR_ALIASES))})"
        )
    settings["extractor"] = _EXTRACTOR_ALIASES[ex]
    if settings["nmin"] < 1 or settings["nmax"] < settings["nmin"]:
        raise ConfigError("invalid values for keys 'nmin'/'nmax': need 1 <= nmin <= nmax")
    if settings["eps_law"] not in ("zero", "inv-n"):
        raise ConfigError(f"invalid value for key 'eps_law': {settings['eps_law']!r}")
    return settings


def _outpath(settings: dict, name: str) -> str:
    return os.path.join(settings["out"], name)


def _n_range(settings: dict) -> range:
    return range(settings["nmin"], settings["nmax"] + 1)


def _schedule(settings: dict):
    return make_eps_schedule(settings["eps_law"], settings["eps0"])


# ---------------------------------------------------------------------------
# subcommands


def cmd_mesh(settings: dict) -> int:
    shape = shape_from_spec(settings["shape"])
    mesh = neighborhood_mesh(shape, settings["epsilon"], settings["resolution"])
    reporting.write_text(_outpath(settings, "mesh.csv"), mesh.to_csv())
    reporting.fig_mesh(mesh, _outpath(settings, "mesh.png"))
    meta = {
        "shape": shape.label,
        "epsilon": mesh.epsilon,
        "points": len(mesh),
        "fill_distance": mesh.fill_distance,
    }
    reporting.write_text(_outpath(settings, "mesh.json"), json.dumps(meta))
    print(f"wrote mesh with {len(mesh)} points to {settings['out']}")
    return 0


def cmd_fekete(settings: dict) -> int:
    array = aawf_array(
        settings["shape"],
        settings["weight"],
        _schedule(settings),
        _n_range(settings),
        slack=settings["slack"],
        extractor=settings["extractor"],
        resolution=settings["resolution"],
    )
    reporting.write_text(_outpath(settings, "fekete.csv"), array.to_csv())
    reporting.write_text(_outpath(settings, "fekete.json"), array.to_json())
    reporting.fig_fekete(array, _outpath(settings, "fekete.png"))
    flagged = sum(r.flagged for r in array.records)
    print(
        f"extracted degrees {settings['nmin']}..{settings['nmax']}: "
        f"{flagged} flagged, trend_consistent={array.trend_consistent}"
    )
    return 0


def cmd_diameter(settings: dict) -> int:
    report = diagonal_diameter_scan(
        settings["shape"],
        settings["weight"],
        _schedule(settings),
        _n_range(settings),
        extractor=settings["extractor"],
        resolution=settings["resolution"],
    )
    reporting.write_text(_outpath(settings, "diameter.csv"), report.to_csv())
    reporting.write_text(_outpath(settings, "diameter_long.csv"), report.to_long_csv())
    reporting.write_text(_outpath(settings, "diameter.json"), report.to_json())
    reporting.fig_diameter(report, _outpath(settings, "diameter.png"))
    print(
        f"diameter scan done; extrapolated limit (K mesh) = "
        f"{report.meta['limit_estimate_k']:.6g}"
    )
    return 0


def _extracted_measure(settings: dict):
    shape = shape_from_spec(settings["shape"])
    w = make_weight(settings["weight"])
    n = settings["n"]
    basis = enumerate_basis(shape.dim, n)
    mesh = neighborhood_mesh(shape, settings["epsilon"], settings["resolution"])
    pts = extract(mesh, basis, w, settings["extractor"])
    return mesh, w, basis, DiscreteMeasure.uniform(pts)


def cmd_gram(settings: dict) -> int:
    mesh, w, basis, mu = _extracted_measure(settings)
    G = gram_matrix(basis, settings["n"], w, mu)
    ld = logdet_gram(G)
    reporting.write_text(_outpath(settings, "gram.json"), G.to_json())
    reporting.write_text(_outpath(settings, "measure.csv"), mu.to_csv())
    reporting.fig_gram(G.entries, ld, _outpath(settings, "gram.png"))
    print(f"gram matrix {G.m}x{G.m}, log det = {ld:.17g}")
    return 0


def cmd_bergman(settings: dict) -> int:
    mesh, w, basis, mu = _extracted_measure(settings)
    vals = bergman_at_atoms(basis, settings["n"], w, mu)
    from .gram import _bergman_values

    mesh_vals = _bergman_values(basis, settings["n"], w, mu, mesh.points)
    lines = [",".join(f"re_{k+1},im_{k+1}" for k in range(mesh.dim)) + ",bergman"]
    for p, v in zip(mesh.points, mesh_vals):
        coords = ",".join(f"{p[k].real:.17g},{p[k].imag:.17g}" for k in range(mesh.dim))
        lines.append(f"{coords},{v:.17g}")
    reporting.write_text(_outpath(settings, "bergman.csv"), "\n".join(lines) + "\n")
    reporting.fig_bergman(mesh.points, mesh_vals, basis.m, _outpath(settings, "bergman.png"))
    print(
        f"bergman function on {len(mesh)} mesh points; at the {basis.m} extracted "
        f"atoms max |B - m_n| = {float(np.max(np.abs(vals - basis.m))):.3e}"
    )
    return 0


def cmd_optimal(settings: dict) -> int:
    shape = shape_from_spec(settings["shape"])
    w = make_weight(settings["weight"])
    n = settings["n"]
    basis = enumerate_basis(shape.dim, n)
    mesh = neighborhood_mesh(shape, settings["epsilon"], settings["resolution"])
    mu = optimal_measure(mesh, basis, n, w, tol=settings["tol"])
    B = bergman_at_atoms(basis, n, w, mu)
    ratio = float(B.max()) / basis.m
    reporting.write_text(_outpath(settings, "optimal_measure.csv"), mu.to_csv())
    reporting.write_text(_outpath(settings, "optimal_measure.json"), mu.to_json())
    reporting.fig_optimal(mu, ratio, _outpath(settings, "optimal.png"))
    print(f"optimal measure on {mu.size} atoms, max B_n/m_n = {ratio:.17g}")
    return 0


def cmd_perturb(settings: dict) -> int:
    rows = derivative_experiment(
        settings["shape"],
        settings["weight"],
        settings["probe"],
        _n_range(settings),
        _schedule(settings),
        extractor=settings["extractor"],
        resolution=settings["resolution"],
    )
    reporting.write_text(_outpath(settings, "perturb.csv"), reporting.perturb_rows_to_csv(rows))
    reporting.fig_perturb(rows, _outpath(settings, "perturb.png"))
    last = rows[-1]
    print(
        f"perturbation experiment done; at n={last['n']} gap to reference "
        f"derivative = {last['gap']:.6g}"
    )
    return 0


def cmd_converge(settings: dict) -> int:
    report = convergence_experiment(
        settings["shape"],
        settings["weight"],
        _schedule(settings),
        _n_range(settings),
        s=settings["moment_degree"],
        extractor=settings["extractor"],
        resolution=settings["resolution"],
    )
    reporting.write_text(_outpath(settings, "converge.csv"), report.to_csv())
    reporting.write_text(_outpath(settings, "converge_long.csv"), report.to_long_csv())
    reporting.write_text(_outpath(settings, "converge.json"), report.to_json())
    reporting.fig_converge(report, _outpath(settings, "converge.png"))
    last = report.rows[-1]
    print(
        f"convergence scan vs {report.meta['reference']}; discrepancy at "
        f"n={last['n']} is {last['discrepancy']:.6g}"
    )
    return 0


def cmd_verify(settings: dict) -> int:
    results = run_verify(seed=settings["seed"], fast=settings["fast"])
    lines = []
    for name, ok, detail in results:
        line = f"{'PASS' if ok else 'FAIL'} {name} -- {detail}"
        lines.append(line)
        print(line)
    reporting.write_text(_outpath(settings, "verify.txt"), "\n".join(lines) + "\n")
    return 0 if all(ok for _, ok, _ in results) else 1


_COMMANDS = {
    "mesh": cmd_mesh,
    "fekete": cmd_fekete,
    "diameter": cmd_diameter,
    "gram": cmd_gram,
    "bergman": cmd_bergman,
    "optimal": cmd_optimal,
    "perturb": cmd_perturb,
    "converge": cmd_converge,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="feketelab",
        description="weighted Fekete arrays: extraction, Gram/Bergman machinery, diagnostics",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key=value configuration file")
        p.add_argument("--shape", help="shape spec, e.g. interval:-1,1 or disk:2")
        p.add_argument("--weight", help="weight spec, e.g. constant or gaussian:1")
        p.add_argument("--eps-law", dest="eps_law", choices=("zero", "inv-n"))
        p.add_argument("--eps0", type=float)
        p.add_argument("--epsilon", type=float, help="fixed neighborhood radius (single-degree runs)")
        p.add_argument("--nmin", type=int)
        p.add_argument("--nmax", type=int)
        p.add_argument("--n", type=int, help="degree for single-degree runs")
        p.add_argument("--extractor", choices=sorted(set(_EXTRACTOR_ALIASES)))
        p.add_argument("--slack", type=float)
        p.add_argument("--moment-degree", dest="moment_degree", type=int)
        p.add_argument("--resolution", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--probe", help="perturbation probe: const:c, re, re2, abs2")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        if name == "verify":
            p.add_argument("--fast", action="store_const", const=True, default=None,
                           help="reduced instance counts")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = resolve_settings(args)
        os.makedirs(settings["out"], exist_ok=True)
        return _COMMANDS[args.subcommand](settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
