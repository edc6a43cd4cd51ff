"""Batch command-line front end.

Subcommands map one-to-one onto library calls: estimate-dim and test run
the sequential estimator or a single hypothesis test on CSV inputs,
neyman-critical simulates critical values, simulate-table reproduces
Monte-Carlo table cells, edr-directions emits estimated direction curves
and inspect summarizes the between-slice model. Every output embeds the
resolved configuration and the package version, so a report is
reproducible from its own provenance block. Identical invocations
(including seeds) produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .dimtest import (
    DEFAULT_CRITICAL_SEED,
    DimensionConfig,
    chi2_test,
    adjusted_chi2_test,
    estimate_dimension,
    neyman_test,
    simulate_neyman_critical,
    _cached_critical,
)
from .errors import (
    DegenerateError,
    DomainError,
    EdrdimError,
    NumericalError,
)
from .fdata import load_curves, load_multivariate
from .fpca import eigensystem, pc_scores, usable_rank
from .simlab import McReport, run_table, table_settings
from .sir import build_sir, estimate_edr_directions, make_slices

_METHOD_ALIASES = {
    "chi2": "chi2",
    "adjusted-chi2": "adjusted_chi2",
    "adjusted_chi2": "adjusted_chi2",
    "neyman": "adaptive_neyman",
    "adaptive-neyman": "adaptive_neyman",
    "adaptive_neyman": "adaptive_neyman",
}

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


@dataclass(frozen=True)
class RunConfig:
    """Resolved invocation knobs, persisted into every output."""

    command: str
    method: str | None = None
    H: int = 8
    m: int | None = None
    N: int | None = None
    k0: int | None = None
    K: int | None = None
    alpha: float = 0.05
    seed: int = 0
    replicates: int | None = None
    table: int | None = None
    rows: tuple[str, ...] | None = None
    parallelism: int | None = None
    curves: str | None = None
    response: str | None = None
    multivariate: str | None = None
    out: str | None = None
    format: str = "json"

    def to_json_dict(self) -> dict:
        out = {k: v for k, v in vars(self).items() if v is not None}
        if self.rows is not None:
            out["rows"] = list(self.rows)
        return out


def _provenance(config: RunConfig) -> dict:
    return {"version": __version__, "config": config.to_json_dict()}


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(payload: dict, config: RunConfig) -> None:
    payload = {**_provenance(config), **payload}
    _emit(json.dumps(payload, indent=2) + "\n", config.out)


def _emit_csv(header: str, rows: list[str], config: RunConfig) -> None:
    prov = _provenance(config)
    lines = [
        f"# version={prov['version']}",
        "# config=" + json.dumps(prov["config"], sort_keys=True),
        header,
    ]
    lines.extend(rows)
    _emit("\n".join(lines) + "\n", config.out)


def _load_predictors(args):
    has_curves = bool(getattr(args, "curves", None))
    has_matrix = bool(getattr(args, "multivariate", None))
    if has_curves == has_matrix:
        raise DomainError("give exactly one of --curves and --multivariate")
    if has_matrix:
        data = load_multivariate(args.multivariate)
        with open(args.response, "r", encoding="utf-8") as fh:
            y = [float(line.strip()) for line in fh if line.strip()]
        from .fdata import ResponseVector

        return data, ResponseVector(np.array(y))
    return load_curves(args.curves, args.response)


def _dump_fpca(prefix: str, eig, scores) -> None:
    np.savetxt(prefix + ".eigenvalues.csv", eig.eigenvalues, delimiter=",")
    np.savetxt(prefix + ".eigenfunctions.csv", eig.eigenfunctions, delimiter=",")
    np.savetxt(prefix + ".scores.csv", scores.scores, delimiter=",")


def _config_from(args, command: str) -> RunConfig:
    return RunConfig(
        command=command,
        method=getattr(args, "method", None),
        H=getattr(args, "H", 8),
        m=getattr(args, "m", None),
        N=getattr(args, "N", None),
        k0=getattr(args, "k0", None),
        K=getattr(args, "K", None),
        alpha=getattr(args, "alpha", 0.05),
        seed=getattr(args, "seed", 0),
        replicates=getattr(args, "reps", None),
        table=getattr(args, "table", None),
        rows=tuple(args.rows) if getattr(args, "rows", None) else None,
        parallelism=getattr(args, "parallelism", None),
        curves=getattr(args, "curves", None),
        response=getattr(args, "response", None),
        multivariate=getattr(args, "multivariate", None),
        out=getattr(args, "out", None),
        format=getattr(args, "format", "json"),
    )


def _resolve_method(name: str) -> str:
    try:
        return _METHOD_ALIASES[name]
    except KeyError:
        raise DomainError(f"unknown method {name!r}") from None


def _cmd_estimate_dim(args) -> int:
    method = _resolve_method(args.method)
    config = _config_from(args, "estimate-dim")
    x, y = _load_predictors(args)
    dim_config = DimensionConfig(
        method=method,
        H=args.H,
        m=args.m,
        N=args.N,
        alpha=args.alpha,
        seed=args.seed if args.seed is not None else DEFAULT_CRITICAL_SEED,
    )
    estimate = estimate_dimension(x, y, dim_config)
    if args.dump_fpca:
        curves = x.to_curves() if hasattr(x, "to_curves") else x
        eig = eigensystem(curves)
        _dump_fpca(args.dump_fpca, eig, pc_scores(curves, eig, usable_rank(eig)))
    _emit_json(estimate.to_json_dict(), config)
    return EXIT_OK


def _cmd_test(args) -> int:
    method = _resolve_method(args.method)
    config = _config_from(args, "test")
    x, y = _load_predictors(args)
    curves = x.to_curves() if hasattr(x, "to_curves") else x
    eig = eigensystem(curves)
    part = make_slices(y, args.H)
    if method in ("chi2", "adjusted_chi2"):
        if args.m is None:
            raise DomainError(f"method {args.method!r} needs --m")
        scores = pc_scores(curves, eig, args.m)
        sir = build_sir(scores, part)
        if method == "chi2":
            result = chi2_test(sir, curves.n, args.k0, args.alpha)
        else:
            result = adjusted_chi2_test(scores, part, sir, curves.n, args.k0, args.alpha)
    else:
        N = args.N if args.N is not None else min(args.k0 + 30, usable_rank(eig))
        scores = pc_scores(curves, eig, N)
        seed = args.seed if args.seed is not None else DEFAULT_CRITICAL_SEED
        crit = _cached_critical(args.H, args.k0, N, args.alpha, args.reps, seed)
        result = neyman_test(scores, part, curves.n, args.k0, N, args.alpha, crit)
    _emit_json(result.to_json_dict(), config)
    return EXIT_OK


def _cmd_neyman_critical(args) -> int:
    config = _config_from(args, "neyman-critical")
    table = simulate_neyman_critical(
        args.H, args.k0, args.N, args.alpha, args.reps, args.seed
    )
    _emit_json(
        {
            "H": table.H,
            "k0": table.k0,
            "N": table.N,
            "alpha": table.alpha,
            "replicates": table.replicates,
            "seed": table.seed,
            "u_alpha": table.u_alpha,
        },
        config,
    )
    return EXIT_OK


def _parse_row(row: str) -> dict:
    out = {}
    for item in row.split(","):
        key, _, value = item.partition("=")
        key = key.strip()
        value = value.strip()
        if key in ("model", "n", "p"):
            out[key] = int(value)
        elif key == "dist":
            out[key] = value
        else:
            raise DomainError(f"unknown scenario field {key!r}")
    if "model" not in out or "n" not in out:
        raise DomainError("a scenario row needs at least model=... and n=...")
    return out


def _parse_methods(spec: str) -> list[tuple[str, int | None]]:
    cells = []
    for item in spec.split(","):
        name, _, m = item.partition(":")
        method = _resolve_method(name.strip())
        cells.append((method, int(m) if m else None))
    return cells


def _cmd_simulate_table(args) -> int:
    config = _config_from(args, "simulate-table")
    settings = []
    for row in args.rows:
        fields = _parse_row(row)
        row_settings = table_settings(
            args.table,
            model=fields["model"],
            dist=fields.get("dist", "normal"),
            n=fields["n"],
            p=fields.get("p"),
            H=args.H,
            alpha=args.alpha,
        )
        if args.methods:
            wanted = _parse_methods(args.methods)
            row_settings = [
                s for s in row_settings if (s.method, s.m) in wanted
                or (s.method == "adaptive_neyman" and (s.method, None) in wanted)
            ]
        settings.extend(row_settings)
    if not settings:
        raise DomainError("no table cells selected")
    reports = run_table(settings, args.reps, args.seed, args.parallelism)
    if args.format == "csv":
        _emit_csv(McReport.CSV_HEADER, [r.to_csv_row() for r in reports], config)
    else:
        _emit_json({"reports": [r.to_json_dict() for r in reports]}, config)
    return EXIT_OK


def _cmd_edr_directions(args) -> int:
    config = _config_from(args, "edr-directions")
    x, y = _load_predictors(args)
    curves = x.to_curves() if hasattr(x, "to_curves") else x
    eig = eigensystem(curves)
    part = make_slices(y, args.H)
    scores = pc_scores(curves, eig, args.m)
    sir = build_sir(scores, part)
    directions = estimate_edr_directions(sir, eig, args.K)
    header = ",".join(repr(float(t)) for t in curves.grid.points)
    rows = [",".join(repr(float(v)) for v in row) for row in directions]
    _emit_csv(header, rows, config)
    return EXIT_OK


def _cmd_inspect(args) -> int:
    config = _config_from(args, "inspect")
    x, y = _load_predictors(args)
    curves = x.to_curves() if hasattr(x, "to_curves") else x
    eig = eigensystem(curves)
    part = make_slices(y, args.H)
    scores = pc_scores(curves, eig, args.m)
    sir = build_sir(scores, part)
    if args.dump_fpca:
        _dump_fpca(args.dump_fpca, eig, scores)
    _emit_json({"sir": sir.to_json_dict()}, config)
    return EXIT_OK


def _add_io_flags(parser: argparse.ArgumentParser, response=True) -> None:
    parser.add_argument("--curves", help="curve CSV (header row of grid times)")
    parser.add_argument("--multivariate", help="headerless n x p CSV")
    if response:
        parser.add_argument("--response", required=True, help="one response per line")
    parser.add_argument("--out", help="write output here instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edrdim",
        description="Estimate the dimension of an effective dimension reduction space.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate-dim", help="sequential dimension estimate")
    _add_io_flags(p)
    p.add_argument("--method", default="chi2")
    p.add_argument("--H", type=int, default=8)
    p.add_argument("--m", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int)
    p.add_argument("--dump-fpca", help="prefix for debug CSV dumps of the FPCA")
    p.set_defaults(run=_cmd_estimate_dim)

    p = sub.add_parser("test", help="one test of H0: K <= k0")
    _add_io_flags(p)
    p.add_argument("--method", default="chi2")
    p.add_argument("--k0", type=int, required=True)
    p.add_argument("--H", type=int, default=8)
    p.add_argument("--m", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int, default=100_000,
                   help="critical-value replicates (adaptive test)")
    p.set_defaults(run=_cmd_test)

    p = sub.add_parser("neyman-critical", help="simulate adaptive critical values")
    p.add_argument("--H", type=int, default=8)
    p.add_argument("--k0", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=DEFAULT_CRITICAL_SEED)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(run=_cmd_neyman_critical)

    p = sub.add_parser("simulate-table", help="Monte-Carlo table cells")
    p.add_argument("--table", type=int, required=True, choices=(1, 2, 3, 4, 5))
    p.add_argument("--rows", action="append", required=True,
                   help="scenario like model=1,dist=normal,n=200")
    p.add_argument("--methods", help="cells like chi2:5,adjusted-chi2:7,neyman")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--H", type=int, default=8)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(run=_cmd_simulate_table)

    p = sub.add_parser("edr-directions", help="estimated direction curves as CSV")
    _add_io_flags(p)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--H", type=int, default=8)
    p.set_defaults(run=_cmd_edr_directions)

    p = sub.add_parser("inspect", help="between-slice model summary as JSON")
    _add_io_flags(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--H", type=int, default=8)
    p.add_argument("--dump-fpca", help="prefix for debug CSV dumps of the FPCA")
    p.set_defaults(run=_cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.run(args)
    except (NumericalError, DegenerateError) as exc:
        print(f"edrdim: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (EdrdimError, FileNotFoundError, ValueError) as exc:
        print(f"edrdim: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
