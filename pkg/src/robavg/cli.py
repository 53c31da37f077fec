"""Command-line front end: ``robavg simulate | evaluate | fit``.

Exit status is 0 on success, 2 for configuration errors and 3 for
numerical failures.  Tables start with ``# key=value`` lines echoing the
configuration (no timestamps), followed by identifier columns and then
one column per method in the fixed order of :data:`METHOD_ORDER`.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import NamedDataset, resolve
from .errors import ParseError, RobAvgError
from .evaluation import delete_one_table
from .methods import METHOD_ORDER, UnknownMethod, run_methods, validate_methods
from .simulation import RNG_NAME, SettingAConfig, SettingBConfig, run_replications

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


def parse_methods(text: str | None) -> tuple[str, ...]:
    if not text:
        return METHOD_ORDER
    return validate_methods([t.strip() for t in text.split(",") if t.strip()])


def parse_ranges(text: str | None) -> list[int] | None:
    """``"1-14,20"`` (1-based, inclusive) to sorted 0-based indices."""
    if text is None:
        return None
    out = set()
    for part in filter(None, (p.strip() for p in text.split(","))):
        lo, sep, hi = part.partition("-")
        try:
            a = int(lo)
            b = int(hi) if sep else a
        except ValueError:
            raise ConfigError(f"bad row range {part!r}") from None
        if a < 1 or b < a:
            raise ConfigError(f"bad row range {part!r}")
        out.update(range(a - 1, b))
    return sorted(out)


def _fmt(x: float) -> str:
    return "nan" if not np.isfinite(x) else f"{x:.6f}"


def render_table(echo: dict, id_cols: list[str], rows: list[list], methods, fmt: str) -> str:
    buf = io.StringIO()
    header = [*id_cols, *methods]
    if fmt == "markdown":
        for k, v in echo.items():
            buf.write(f"<!-- {k}={v} -->\n")
        buf.write("| " + " | ".join(header) + " |\n")
        buf.write("|" + "|".join("---" for _ in header) + "|\n")
        for r in rows:
            buf.write("| " + " | ".join(str(c) for c in r) + " |\n")
    else:
        for k, v in echo.items():
            buf.write(f"# {k}={v}\n")
        buf.write(",".join(header) + "\n")
        for r in rows:
            buf.write(",".join(str(c) for c in r) + "\n")
    return buf.getvalue()


def _sidecar(path: Path) -> Path:
    stem = path.name[:-4] if path.name.endswith(".csv") else path.name
    return path.with_name(stem + ".se.csv")


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


def _simulation_configs(args):
    if args.setting == "A":
        cases = _int_list(args.case)
        return [SettingAConfig(n, r2, c, args.contam, calibration=args.calibration)
                for n in _int_list(args.n) for r2 in _float_list(args.r2) for c in cases]
    return [SettingBConfig(s, args.gross_error) for s in _float_list(args.sigma)]


def cmd_simulate(args) -> int:
    methods = parse_methods(args.methods)
    cfgs = _simulation_configs(args)
    echo = {"command": "simulate", "setting": args.setting, "R": args.R, "seed": args.seed,
            "rng": RNG_NAME, "methods": ",".join(methods), "version": __version__}
    if args.setting == "A":
        echo.update(n=args.n, r2=args.r2, case=args.case, contam_fraction=args.contam,
                    calibration=args.calibration)
        id_cols = ["setting", "n", "r2", "case", "contam_fraction"]
    else:
        echo.update(sigma=args.sigma, gross_error=int(args.gross_error))
        id_cols = ["setting", "n", "sigma", "gross_error"]
    rows, se_rows, failed = [], [], []
    for cfg in cfgs:
        tab = run_replications(cfg, methods, args.R, args.seed)
        ids = [cfg.describe()[c] for c in id_cols]
        rows.append([*ids, *(_fmt(tab.reports[m].ape) for m in methods)])
        se_rows.append([*ids, *(_fmt(tab.reports[m].se) for m in methods)])
        failed.extend((cfg.describe(), r, msg) for r, msg in tab.failures)
    _emit(render_table(echo, id_cols, rows, methods, args.format), args.output)
    if args.output is not None:
        se_echo = {**echo, "statistic": "standard_error"}
        _sidecar(Path(args.output)).write_text(
            render_table(se_echo, id_cols, se_rows, methods, "csv"), encoding="utf-8")
    if failed:
        ids = ", ".join(str(r) for _, r, _ in failed)
        print(f"robavg: {len(failed)} replication(s) failed: {ids}", file=sys.stderr)
        for desc, r, msg in failed[:10]:
            print(f"  replication {r} {desc}: {msg}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _load(args) -> NamedDataset:
    try:
        return resolve(args.dataset, parse_ranges(args.outliers), args.response)
    except OSError as exc:
        raise ConfigError(f"cannot read dataset: {exc}") from None


def cmd_evaluate(args) -> int:
    methods = parse_methods(args.methods)
    ds = _load(args)
    data = ds.data.with_intercept()
    out = sorted(ds.outlier_indices)
    tab = delete_one_table(data, ds.candidates(), methods, out)
    echo = {"command": "evaluate", "dataset": args.dataset, "n": ds.data.n,
            "outliers": ",".join(str(i + 1) for i in out) or "none",
            "methods": ",".join(methods), "version": __version__}
    rows = [[ds.name, ds.data.n - len(out), *(_fmt(tab[m].ape) for m in methods)]]
    _emit(render_table(echo, ["dataset", "n_eval"], rows, methods, args.format), args.output)
    return EXIT_OK


def cmd_fit(args) -> int:
    labels = parse_methods(args.method)
    if len(labels) != 1:
        raise ConfigError("fit takes exactly one method")
    label = labels[0]
    ds = _load(args)
    data = ds.data.with_intercept()
    cands = ds.candidates()
    fm = run_methods([label], data, cands)[label]
    names = data.column_names or tuple(f"c{j}" for j in range(data.p))
    report = {
        "method": label,
        "dataset": args.dataset,
        "n": data.n,
        "kind": "selection" if fm.is_selection else "averaging",
        "chosen_model": fm.chosen,
        "weights": [float(w) for w in fm.weights],
        "models": [
            {"id": m.id, "columns": [names[c] for c in m.columns],
             "score": float(fm.scores[m.id]),
             "coefficients": [float(v) for v in fm.coefficients[m.id]]}
            for m in cands
        ],
    }
    _emit(json.dumps(report, indent=2) + "\n", args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robavg", description="Robust Mallows-type model averaging.")
    p.add_argument("--version", action="version", version=f"robavg {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="Monte-Carlo APE table")
    s.add_argument("--setting", choices=["A", "B"], required=True)
    s.add_argument("--case", default="1", help="setting A error cases, e.g. 1,2,3")
    s.add_argument("--n", default="100", help="setting A sample sizes, comma separated")
    s.add_argument("--r2", default="0.5", help="setting A R^2 values, comma separated")
    s.add_argument("--contam", type=float, default=0.07, help="contaminated fraction for cases 2 and 3")
    s.add_argument("--calibration", choices=["clean", "mixture"], default="clean")
    s.add_argument("--sigma", default="1", help="setting B error sds, comma separated")
    s.add_argument("--gross-error", action="store_true", help="setting B: set the last response to 10")
    s.add_argument("--R", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--methods", help="comma-separated labels (default: all)")
    s.add_argument("--output", "-o")
    s.add_argument("--format", choices=["csv", "markdown"], default="csv")
    s.set_defaults(func=cmd_simulate)

    for name, helptext in (("evaluate", "delete-one APE on a dataset"),
                           ("fit", "fit one method and report weights")):
        e = sub.add_parser(name, help=helptext)
        e.add_argument("--dataset", required=True, help="stackloss, hald or csv:PATH")
        e.add_argument("--response", default="y", help="response column for csv datasets")
        e.add_argument("--outliers", help="1-based rows, e.g. 1-14 or 21")
        e.add_argument("--output", "-o")
        if name == "evaluate":
            e.add_argument("--methods", help="comma-separated labels (default: all)")
            e.add_argument("--format", choices=["csv", "markdown"], default="csv")
            e.set_defaults(func=cmd_evaluate)
        else:
            e.add_argument("--method", required=True)
            e.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "R", 1) < 1:
            raise ConfigError("--R must be at least 1")
        return args.func(args)
    except (UnknownMethod, ConfigError, ParseError) as exc:
        print(f"robavg: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RobAvgError as exc:
        print(f"robavg: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"robavg: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
