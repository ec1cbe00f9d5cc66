"""Command-line front end.

Subcommands
-----------
estimate-single : distance between arm KDEs of one randomized study
estimate-multi  : per-site average distance for a multi-source study
estimate-obs    : doubly-robust distance for an observational study
simulate        : write synthetic benchmark data as CSV

Each estimate command ingests a CSV, runs the matching estimator with its
bootstrap interval plus the conventional mean-effect baselines, and writes
one JSON report. Reports are byte-identical across runs with identical
configuration (seeds included); no timestamps or environment state leak in.

CSV schemas (header required):
  randomized    a,y[,y2,y3]
  multi-source  site,a,y[,y2,y3]
  observational x1..xk,a,y[,y2,y3]
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass

import numpy as np

from .bootstrap import (
    BootstrapConfig,
    DegenerateResample,
    ci_multi,
    ci_observational,
    ci_single,
)
from .data import MultiSourceSample, ObservationalSample, RandomizedSample
from .density import EmptyArm, PropensityUnderflow, silverman_bandwidth
from .distance import MCIntegrationConfig, default_n_points
from .estimators import (
    ate_doubly_robust,
    ate_ipw,
    ate_plugin_regression,
    bootstrap_ate_report,
    diff_in_means_report,
    horvitz_thompson_report,
)
from .kernels import FAMILIES, by_name
from .nuisance import CrossFitPlan, DegenerateArm, SingularDesign
from .simulate import (
    SuperDistributionSpec,
    gen_confounded,
    gen_multi_source,
    gen_single_samemean,
)

_OUTCOME_NAMES = ("y", "y2", "y3")


class SchemaError(Exception):
    """CSV header does not match the expected schema."""


@dataclass
class RunConfig:
    """Resolved configuration for one estimation run."""

    subcommand: str
    input_path: str
    output_path: str | None
    kernel: str
    bandwidth: str
    bandwidth1: str | None
    bandwidth0: str | None
    mc_points: int | None
    seed: int
    bootstrap: int
    alpha: float
    folds: int
    propensity_model: str
    outcome_model: str
    refit_nuisances: bool
    pi1: float | None


# ---------------------------------------------------------------------------
# CSV ingestion / serialization
# ---------------------------------------------------------------------------


def _read_rows(path: str) -> tuple[list[str], list[tuple[int, list[str]]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("file is empty; expected a header row") from None
        rows = [(lineno, row) for lineno, row in enumerate(reader, start=2)]
    return [c.strip() for c in header], rows


def _outcome_columns(names: list[str]) -> list[str]:
    cols = [c for c in _OUTCOME_NAMES if c in names]
    if "y" not in cols:
        raise SchemaError(f"missing outcome column 'y' (header: {names})")
    expected = list(_OUTCOME_NAMES[: len(cols)])
    if cols != expected:
        raise SchemaError(f"outcome columns must be {expected}, found {cols}")
    return cols


def _parse_float(value: str, lineno: int, column: str) -> float:
    value = value.strip()
    if value == "":
        raise ValueError(f"row {lineno}: missing value in column {column!r}")
    try:
        return float(value)
    except ValueError:
        raise ValueError(
            f"row {lineno}: non-numeric value {value!r} in column {column!r}"
        ) from None


def _parse_treatment(value: str, lineno: int) -> int:
    value = value.strip()
    if value not in ("0", "1"):
        raise ValueError(f"row {lineno}: treatment must be 0 or 1, got {value!r}")
    return int(value)


def _split_row(row: list[str], n_cols: int, lineno: int) -> list[str]:
    if len(row) != n_cols:
        raise ValueError(
            f"row {lineno}: expected {n_cols} fields, found {len(row)}"
        )
    return row


def ingest_randomized(path: str, pi1: float | None = None) -> RandomizedSample:
    header, rows = _read_rows(path)
    ycols = _outcome_columns(header)
    if set(header) != {"a", *ycols} or header[0] != "a":
        raise SchemaError(f"expected header a,{','.join(ycols)} - got {header}")
    yidx = [header.index(c) for c in ycols]
    aidx = header.index("a")
    A, Y = [], []
    for lineno, row in rows:
        row = _split_row(row, len(header), lineno)
        A.append(_parse_treatment(row[aidx], lineno))
        Y.append([_parse_float(row[j], lineno, header[j]) for j in yidx])
    if not A:
        raise SchemaError("no data rows")
    return RandomizedSample(np.array(A), np.array(Y), pi1=pi1)


def ingest_multi(path: str, pi1: float | None = None) -> MultiSourceSample:
    header, rows = _read_rows(path)
    ycols = _outcome_columns([c for c in header if c != "site"])
    if header[:2] != ["site", "a"] or set(header) != {"site", "a", *ycols}:
        raise SchemaError(f"expected header site,a,{','.join(ycols)} - got {header}")
    yidx = [header.index(c) for c in ycols]
    by_site: dict[str, tuple[list, list]] = {}
    order: list[str] = []
    for lineno, row in rows:
        row = _split_row(row, len(header), lineno)
        site = row[0].strip()
        if site == "":
            raise ValueError(f"row {lineno}: missing site label")
        if site not in by_site:
            by_site[site] = ([], [])
            order.append(site)
        a, ys = by_site[site]
        a.append(_parse_treatment(row[1], lineno))
        ys.append([_parse_float(row[j], lineno, header[j]) for j in yidx])
    if not order:
        raise SchemaError("no data rows")
    sites = [
        RandomizedSample(np.array(by_site[s][0]), np.array(by_site[s][1]), pi1=pi1)
        for s in order
    ]
    return MultiSourceSample(sites)


def ingest_observational(path: str) -> ObservationalSample:
    header, rows = _read_rows(path)
    xcols = [c for c in header if c.startswith("x")]
    ycols = _outcome_columns([c for c in header if c not in xcols and c != "a"])
    expected = [f"x{i}" for i in range(1, len(xcols) + 1)]
    if xcols != expected or header != [*xcols, "a", *ycols]:
        raise SchemaError(
            f"expected header x1..xk,a,{','.join(ycols)} - got {header}"
        )
    if not xcols:
        raise SchemaError("observational data needs at least one covariate column")
    xidx = [header.index(c) for c in xcols]
    yidx = [header.index(c) for c in ycols]
    aidx = header.index("a")
    X, A, Y = [], [], []
    for lineno, row in rows:
        row = _split_row(row, len(header), lineno)
        X.append([_parse_float(row[j], lineno, header[j]) for j in xidx])
        A.append(_parse_treatment(row[aidx], lineno))
        Y.append([_parse_float(row[j], lineno, header[j]) for j in yidx])
    if not A:
        raise SchemaError("no data rows")
    return ObservationalSample(np.array(X), np.array(A), np.array(Y))


def ingest_csv(path: str, schema: str, pi1: float | None = None):
    """Typed dataset from a CSV file; schema is one of
    "randomized", "multi", "observational"."""
    if schema == "randomized":
        return ingest_randomized(path, pi1)
    if schema == "multi":
        return ingest_multi(path, pi1)
    if schema == "observational":
        return ingest_observational(path)
    raise ValueError(f"unknown schema {schema!r}")


def _fmt(value: float) -> str:
    return repr(float(value))


def serialize_randomized(data: RandomizedSample) -> str:
    ycols = _OUTCOME_NAMES[: data.dimension]
    out = io.StringIO()
    out.write("a," + ",".join(ycols) + "\n")
    for a, y in zip(data.A, data.Y):
        out.write(f"{int(a)}," + ",".join(_fmt(v) for v in y) + "\n")
    return out.getvalue()


def serialize_multi(data: MultiSourceSample) -> str:
    ycols = _OUTCOME_NAMES[: data.dimension]
    out = io.StringIO()
    out.write("site,a," + ",".join(ycols) + "\n")
    for i, site in enumerate(data.sites):
        label = f"s{i + 1}"
        for a, y in zip(site.A, site.Y):
            out.write(f"{label},{int(a)}," + ",".join(_fmt(v) for v in y) + "\n")
    return out.getvalue()


def serialize_observational(data: ObservationalSample) -> str:
    xcols = [f"x{i}" for i in range(1, data.n_covariates + 1)]
    ycols = _OUTCOME_NAMES[: data.dimension]
    out = io.StringIO()
    out.write(",".join(xcols) + ",a," + ",".join(ycols) + "\n")
    for x, a, y in zip(data.X, data.A, data.Y):
        out.write(
            ",".join(_fmt(v) for v in x)
            + f",{int(a)},"
            + ",".join(_fmt(v) for v in y)
            + "\n"
        )
    return out.getvalue()


# ---------------------------------------------------------------------------
# run dispatch
# ---------------------------------------------------------------------------


def _resolve_bandwidth(text: str | None, auto: float) -> float:
    if text is None or text == "auto":
        return auto
    h = float(text)
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    return h


def _randomized_baselines(data, alpha: float) -> dict:
    pooled = data
    if isinstance(data, MultiSourceSample):
        pooled = RandomizedSample(
            np.concatenate([s.A for s in data.sites]),
            np.vstack([s.Y for s in data.sites]),
            pi1=data.sites[0].pi1,
        )
    out = {}
    if pooled.dimension == 1:
        out["diff_in_means"] = diff_in_means_report(pooled, alpha)
        if pooled.pi1 is not None:
            out["horvitz_thompson"] = horvitz_thompson_report(pooled, alpha)
    return out


def _observational_baselines(data, config: RunConfig) -> dict:
    if data.dimension != 1:
        return {}
    plan = CrossFitPlan(n_folds=config.folds, seed=config.seed)
    estimators = {
        "plugin_regression": lambda d: ate_plugin_regression(d, config.outcome_model),
        "ipw": lambda d: ate_ipw(d, config.propensity_model),
        "doubly_robust": lambda d: ate_doubly_robust(
            d, config.propensity_model, config.outcome_model, plan
        ),
    }
    out = {}
    for i, (name, fn) in enumerate(estimators.items()):
        out[name] = bootstrap_ate_report(
            data,
            fn,
            method=name,
            alpha=config.alpha,
            n_replicates=config.bootstrap,
            seed=config.seed + i,
        )
    return out


def run(config: RunConfig) -> dict:
    """Execute one estimation run and return the report document."""
    if config.subcommand == "estimate-single":
        data = ingest_randomized(config.input_path, config.pi1)
        pooled_Y = data.Y
    elif config.subcommand == "estimate-multi":
        data = ingest_multi(config.input_path, config.pi1)
        pooled_Y = np.vstack([s.Y for s in data.sites])
    elif config.subcommand == "estimate-obs":
        data = ingest_observational(config.input_path)
        pooled_Y = data.Y
    else:
        raise ValueError(f"unknown subcommand {config.subcommand!r}")

    d = pooled_Y.shape[1]
    spec = by_name(config.kernel, d)
    auto_h = silverman_bandwidth(pooled_Y)
    mc_points = config.mc_points or default_n_points(d)
    cfg = MCIntegrationConfig(n_points=mc_points, seed=config.seed)
    bcfg = BootstrapConfig(
        n_replicates=config.bootstrap, alpha=config.alpha, seed=config.seed
    )

    if config.subcommand == "estimate-obs":
        h = _resolve_bandwidth(config.bandwidth, auto_h)
        plan = CrossFitPlan(n_folds=config.folds, seed=config.seed)
        report = ci_observational(
            data,
            h=h,
            spec=spec,
            plan=plan,
            propensity_model=config.propensity_model,
            outcome_model=config.outcome_model,
            cfg=cfg,
            bcfg=bcfg,
            refit_nuisances=config.refit_nuisances,
        )
        baselines = _observational_baselines(data, config)
        resolved = {"bandwidth": h}
    else:
        base = _resolve_bandwidth(config.bandwidth, auto_h)
        h1 = _resolve_bandwidth(config.bandwidth1, base)
        h0 = _resolve_bandwidth(config.bandwidth0, base)
        ci_fn = ci_single if config.subcommand == "estimate-single" else ci_multi
        report = ci_fn(data, h1=h1, h0=h0, spec=spec, cfg=cfg, bcfg=bcfg)
        baselines = _randomized_baselines(data, config.alpha)
        resolved = {"bandwidth1": h1, "bandwidth0": h0}

    document = {
        "subcommand": config.subcommand,
        "input": config.input_path,
        "n_rows": int(sum(s.n for s in data.sites))
        if isinstance(data, MultiSourceSample)
        else int(data.n),
        "outcome_dimension": d,
        "config": {
            "kernel": config.kernel,
            "mc_points": mc_points,
            "seed": config.seed,
            "bootstrap_replicates": config.bootstrap,
            "alpha": config.alpha,
            "folds": config.folds,
            "propensity_model": config.propensity_model,
            "outcome_model": config.outcome_model,
            "refit_nuisances": config.refit_nuisances,
            "pi1": config.pi1,
            **resolved,
        },
        "distance": report.to_dict(),
        "baselines": baselines,
    }
    if isinstance(data, MultiSourceSample):
        document["n_sites"] = data.n_sites
    return document


def _write_report(document: dict, output_path: str | None) -> None:
    text = json.dumps(document, indent=2, sort_keys=True) + "\n"
    if output_path is None:
        sys.stdout.write(text)
    else:
        with open(output_path, "w") as fh:
            fh.write(text)


def _run_simulate(args: argparse.Namespace) -> None:
    if args.generator in ("single-two-beta", "single-uni-bimodal"):
        kind = "two-beta" if args.generator == "single-two-beta" else "uni-vs-bimodal"
        text = serialize_randomized(gen_single_samemean(kind, args.n, args.seed))
    elif args.generator == "multi-source":
        spec = SuperDistributionSpec(n_sites=args.sites, site_size=args.site_size)
        text = serialize_multi(gen_multi_source(spec, args.seed))
    elif args.generator in ("obs-linear", "obs-null"):
        scenario = "linear" if args.generator == "obs-linear" else "null"
        data, _ = gen_confounded(args.n, args.seed, scenario=scenario)
        text = serialize_observational(data)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown generator {args.generator!r}")
    if args.output is None:
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)


_ERRORS = (
    SchemaError,
    EmptyArm,
    PropensityUnderflow,
    DegenerateArm,
    SingularDesign,
    DegenerateResample,
    ValueError,
    OSError,
)


def _error_name(exc: Exception) -> str:
    module = type(exc).__module__.rsplit(".", 1)[-1]
    return f"{module}.{type(exc).__name__}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfdist",
        description="Causal effects as L1 distances between counterfactual "
        "outcome distributions.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True, help="input CSV path")
        p.add_argument("--output", default=None, help="report path (default stdout)")
        p.add_argument("--kernel", choices=FAMILIES, default="epanechnikov")
        p.add_argument("--bandwidth", default="auto",
                       help='bandwidth, or "auto" for the rule-of-thumb value')
        p.add_argument("--mc-points", type=int, default=None,
                       help="Monte-Carlo integration points (default 100000 x 10^(d-1))")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--bootstrap", type=int, default=100, metavar="B",
                       help="bootstrap replicates (default 100)")
        p.add_argument("--alpha", type=float, default=0.05)

    for name in ("estimate-single", "estimate-multi"):
        p = sub.add_parser(name, help=f"{name.split('-')[1]} randomized study")
        add_common(p)
        p.add_argument("--bandwidth1", default=None, help="arm-1 bandwidth override")
        p.add_argument("--bandwidth0", default=None, help="arm-0 bandwidth override")
        p.add_argument("--pi1", type=float, default=None,
                       help="known P(A=1), enables the Horvitz-Thompson baseline")

    p = sub.add_parser("estimate-obs", help="observational study")
    add_common(p)
    p.add_argument("--folds", type=int, default=2, help="cross-fitting folds")
    p.add_argument("--propensity-model", choices=("logistic", "kernel-smoother"),
                   default="logistic")
    p.add_argument("--outcome-model", choices=("nadaraya-watson", "ridge-linear"),
                   default="nadaraya-watson")
    p.add_argument("--refit-nuisances", action="store_true",
                   help="refit nuisances on every bootstrap resample")

    p = sub.add_parser("simulate", help="write synthetic benchmark data as CSV")
    p.add_argument("--generator", required=True,
                   choices=("single-two-beta", "single-uni-bimodal",
                            "multi-source", "obs-linear", "obs-null"))
    p.add_argument("--n", type=int, default=1000, help="rows (single/observational)")
    p.add_argument("--sites", type=int, default=50, help="sites (multi-source)")
    p.add_argument("--site-size", type=int, default=100, help="rows per site")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None, help="CSV path (default stdout)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.subcommand == "simulate":
            _run_simulate(args)
            return 0
        config = RunConfig(
            subcommand=args.subcommand,
            input_path=args.input,
            output_path=args.output,
            kernel=args.kernel,
            bandwidth=args.bandwidth,
            bandwidth1=getattr(args, "bandwidth1", None),
            bandwidth0=getattr(args, "bandwidth0", None),
            mc_points=args.mc_points,
            seed=args.seed,
            bootstrap=args.bootstrap,
            alpha=args.alpha,
            folds=getattr(args, "folds", 2),
            propensity_model=getattr(args, "propensity_model", "logistic"),
            outcome_model=getattr(args, "outcome_model", "nadaraya-watson"),
            refit_nuisances=getattr(args, "refit_nuisances", False),
            pi1=getattr(args, "pi1", None),
        )
        document = run(config)
        _write_report(document, config.output_path)
        return 0
    except _ERRORS as exc:
        print(f"error: {_error_name(exc)}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
