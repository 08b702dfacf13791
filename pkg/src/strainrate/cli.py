"""Command-line pipeline.

Subcommands: ``simulate`` (synthetic corpus), ``metrics`` (per-element and
per-impact tables), ``compare`` (scheme difference tables + Bland-Altman
points/plots), ``fit-risk`` (logistic models + 50%-risk thresholds),
``evaluate`` (repeated split rounds + predictability ANOVA), ``misuse``
(threshold-misuse false rates), ``report`` (everything).

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numerical
failure.  Failures emit exactly one machine-parseable line on stderr::

    error kind=<ExceptionName> detail="<message>"
"""

import argparse
import csv
import json
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .aggregate import compute_impact_metrics
from .dataio import read_dataset, write_dataset
from .errors import (
    DatasetFormatError,
    DegenerateDifferences,
    DegenerateGroups,
    EmptyCollection,
    FlatModel,
    InvalidTensor,
    InvalidValue,
    InvertedRiskDirection,
    SampleTooSmall,
    SeparationDetected,
    SeriesTooShort,
    ShapeMismatch,
    SingleClass,
    SingularDeformation,
    SingularDesign,
    StrainRateError,
)
from .motion import CorpusSpec, DatasetSpec, LabeledCohortSpec, MotionFamily, generate_corpus
from .risk import (
    RISK_VARIABLES,
    MisuseScenario,
    cohort_from_summaries,
    fit_logistic,
    misuse_false_rates,
    null_deviance,
    risk_threshold,
    split_evaluation,
)
from .stats import (
    ComparisonLevel,
    MetricPair,
    bland_altman_points,
    comparison_samples,
    one_way_anova,
    scheme_comparison_report,
)
from .svgplot import bland_altman_svg

_DATA_ERRORS = (
    DatasetFormatError,
    EmptyCollection,
    InvalidTensor,
    InvalidValue,
    SeriesTooShort,
    ShapeMismatch,
    SampleTooSmall,
    SingularDeformation,
    FileNotFoundError,
    ValueError,
)
_NUMERIC_ERRORS = (
    SingleClass,
    SeparationDetected,
    SingularDesign,
    FlatModel,
    DegenerateDifferences,
    DegenerateGroups,
)

_COMPARE_HEADER = [
    "Dataset", "N", "ME (1/s)", "MAE (1/s)", "RSME (1/s)", "MPE (%)", "MAPE (%)",
    "LoA Upper (1/s)", "LoA Lower (1/s)", "Excluded Refs", "t", "df", "p",
    "Significant (p<0.05)", "Normality K2", "Normality p",
]


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 (not 2) on usage errors, with a parseable line."""

    def error(self, message):
        self.exit(1, _error_line("UsageError", message))


def _error_line(kind, message):
    return f'error kind={kind} detail="{message}"\n'


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _emit(out_dir, stem, fmt, header, csv_rows, json_rows):
    path = out_dir / f"{stem}.{fmt}"
    if fmt == "csv":
        _write_csv(path, header, csv_rows)
    else:
        _write_json(path, json_rows)
    print(f"wrote {path}")
    return path


def _impact_metrics(records, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(compute_impact_metrics, records))
    return [compute_impact_metrics(r) for r in records]


def _load_metrics(args):
    records = read_dataset(args.manifest)
    return _impact_metrics(records, args.threads)


def _out_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- simulate ---

def _demo_spec(seed):
    return CorpusSpec(
        seed=seed,
        datasets=[
            DatasetSpec(
                tag="demo-mixed",
                n_elements=6,
                duration=0.1,
                dt=1e-3,
                impacts={
                    MotionFamily.UNIAXIAL: 3,
                    MotionFamily.SIMPLE_SHEAR: 3,
                    MotionFamily.RIGID_ROTATION: 2,
                    MotionFamily.ROTATING_STRETCH: 4,
                    MotionFamily.SMOOTH_RANDOM: 4,
                },
            ),
            DatasetSpec(
                tag="demo-labeled",
                n_elements=6,
                duration=0.1,
                dt=2e-3,
                labeled_cohort=LabeledCohortSpec(),
            ),
        ],
    )


def _cmd_simulate(args):
    if args.spec is not None:
        spec = CorpusSpec.from_json_file(args.spec)
    else:
        spec = _demo_spec(args.seed)
    records = generate_corpus(spec)
    manifest = write_dataset(records, _out_dir(args) / args.dataset_dir)
    print(f"wrote {manifest}")
    return 0


# --- metrics ---

def _cmd_metrics(args):
    ims = _load_metrics(args)
    out = _out_dir(args)

    header = ["impact_id", "element_id", "mps", "mpsr1", "mpsr2", "mps_x_sr1", "mps_x_sr2"]
    csv_rows, json_rows = [], []
    for im in ims:
        for em in im.elements:
            row = [im.impact_id, em.element_id, em.mps, em.mpsr1, em.mpsr2,
                   em.mps_x_sr1, em.mps_x_sr2]
            csv_rows.append(row)
            json_rows.append(dict(zip(header, row)))
    _emit(out, "element_metrics", args.format, header, csv_rows, json_rows)

    header = ["impact_id", "dataset_tag", "injury_label", "p95_mps", "p95_mpsr1",
              "p95_mpsr2", "p95_mps_x_sr1", "p95_mps_x_sr2"]
    csv_rows, json_rows = [], []
    for im in ims:
        s = im.summary
        row = [s.impact_id, s.dataset_tag, s.injury_label, s.p95_mps, s.p95_mpsr1,
               s.p95_mpsr2, s.p95_mps_x_sr1, s.p95_mps_x_sr2]
        csv_rows.append(row)
        json_rows.append(dict(zip(header, row)))
    _emit(out, "impact_summaries", args.format, header, csv_rows, json_rows)
    return 0


# --- compare ---

def _comparison_rows(report):
    csv_rows, json_rows = [], []
    for row in report.rows:
        s, tt, norm = row.stats, row.t_test, row.normality
        record = {
            "dataset": row.label,
            "n": s.n if s else None,
            "me": s.me if s else None,
            "mae": s.mae if s else None,
            "rsme": s.rmse if s else None,
            "mpe": s.mpe if s else None,
            "mape": s.mape if s else None,
            "loa_upper": s.loa_upper if s else None,
            "loa_lower": s.loa_lower if s else None,
            "n_reference_excluded": s.n_reference_excluded if s else None,
            "t": tt.t_statistic if tt else None,
            "df": tt.degrees_of_freedom if tt else None,
            "p": tt.p_value if tt else None,
            "significant_at_05": tt.significant_at_05 if tt else None,
            "normality_k2": norm.statistic if norm else None,
            "normality_p": norm.p_value if norm else None,
        }
        json_rows.append(record)
        csv_rows.append(list(record.values()))
    return csv_rows, json_rows


def _cmd_compare(args):
    ims = _load_metrics(args)
    out = _out_dir(args)
    levels = (
        [ComparisonLevel.ELEMENT, ComparisonLevel.IMPACT]
        if args.level == "both"
        else [ComparisonLevel(args.level)]
    )
    for pair in (MetricPair.MPSR, MetricPair.MPSXSR):
        for level in levels:
            report = scheme_comparison_report(ims, level, pair)
            stem = f"compare_{pair.value}_{level.value}"
            csv_rows, json_rows = _comparison_rows(report)
            _emit(out, stem, args.format, _COMPARE_HEADER, csv_rows, json_rows)

            a, b = comparison_samples(ims, level, pair)
            points = bland_altman_points(a, b)
            ba_path = out / f"bland_altman_{pair.value}_{level.value}.csv"
            _write_csv(ba_path, ["mean", "difference"], points.tolist())
            print(f"wrote {ba_path}")

            if args.svg:
                pooled = report.row("Average by Impacts").stats
                svg = bland_altman_svg(
                    points,
                    pooled.me,
                    pooled.loa_lower,
                    pooled.loa_upper,
                    title=f"{pair.value} scheme difference ({level.value} level)",
                )
                svg_path = ba_path.with_suffix(".svg")
                svg_path.write_text(svg, encoding="utf-8")
                print(f"wrote {svg_path}")
    return 0


# --- fit-risk ---

def _fit_variable(summaries, variable, risk_level=0.5):
    cohort = cohort_from_summaries(summaries, variable)
    model = fit_logistic(cohort)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InvertedRiskDirection)
        threshold = risk_threshold(model, risk_level)
    return cohort, model, threshold


def _cmd_fit_risk(args):
    ims = _load_metrics(args)
    summaries = [im.summary for im in ims]
    out = _out_dir(args)
    for variable in args.variables:
        cohort, model, threshold = _fit_variable(summaries, variable)
        payload = {
            "variable": variable,
            "n": int(cohort.values.size),
            "n_positive": cohort.n_positive,
            "n_negative": cohort.n_negative,
            "beta0": model.beta0,
            "beta1": model.beta1,
            "deviance": model.deviance,
            "null_deviance": null_deviance(cohort.labels),
            "converged": model.converged,
            "iterations": model.iterations,
            "threshold50": threshold,
        }
        path = out / f"risk_{variable}.json"
        _write_json(path, payload)
        print(f"wrote {path}")
    return 0


# --- evaluate ---

def _round_payload(rnd):
    payload = {
        "round": rnd.round_index,
        "skipped": rnd.skipped,
        "skip_reason": rnd.skip_reason,
        "threshold": rnd.threshold,
        "threshold_source": rnd.threshold_source,
        "inverted": rnd.inverted,
    }
    if rnd.metrics is not None:
        payload.update(
            accuracy=rnd.metrics.accuracy,
            precision=rnd.metrics.precision,
            recall=rnd.metrics.recall,
            f1=rnd.metrics.f1,
            precision_defined=rnd.metrics.precision_defined,
            recall_defined=rnd.metrics.recall_defined,
        )
    return payload


def _cmd_evaluate(args):
    ims = _load_metrics(args)
    summaries = [im.summary for im in ims]
    out = _out_dir(args)
    per_variable = {}
    for variable in args.variables:
        cohort = cohort_from_summaries(summaries, variable)
        evaluation = split_evaluation(
            cohort, rounds=args.rounds, train_fraction=args.train_fraction, seed=args.seed
        )
        per_variable[variable] = evaluation
        payload = {
            "variable": variable,
            "rounds": args.rounds,
            "train_fraction": args.train_fraction,
            "seed": args.seed,
            "n_skipped": evaluation.n_skipped,
            "mean_accuracy": evaluation.mean_accuracy,
            "mean_precision": evaluation.mean_precision,
            "mean_recall": evaluation.mean_recall,
            "mean_f1": evaluation.mean_f1,
            "per_round": [_round_payload(r) for r in evaluation.rounds],
        }
        path = out / f"evaluate_{variable}.json"
        _write_json(path, payload)
        print(f"wrote {path}")

    if len(args.variables) >= 2:
        anova = {}
        for metric in ("accuracy", "precision", "recall", "f1"):
            groups = [
                [getattr(r.metrics, metric) for r in ev.rounds if not r.skipped]
                for ev in per_variable.values()
            ]
            try:
                result = one_way_anova(groups)
                anova[metric] = {
                    "f_statistic": result.f_statistic,
                    "df_between": result.df_between,
                    "df_within": result.df_within,
                    "p_value": result.p_value,
                    "significant_at_05": result.p_value < 0.05,
                }
            except (DegenerateGroups, SampleTooSmall) as exc:
                anova[metric] = {"degenerate": True, "reason": str(exc)}
        path = out / "predictability_anova.json"
        _write_json(path, {"variables": list(args.variables), "anova": anova})
        print(f"wrote {path}")
    return 0


# --- misuse ---

_PAIR_VARIABLES = {
    "mpsr": ("mpsr1", "mpsr2"),
    "mpsxsr": ("mps_x_sr1", "mps_x_sr2"),
}
_SCENARIO_PAIR = {
    MisuseScenario.SN1: "mpsr",
    MisuseScenario.SN2: "mpsr",
    MisuseScenario.SN3: "mpsxsr",
    MisuseScenario.SN4: "mpsxsr",
}


def _cmd_misuse(args):
    ims = _load_metrics(args)
    summaries = [im.summary for im in ims]
    out = _out_dir(args)
    scenarios = (
        list(MisuseScenario) if args.scenario == "all" else [MisuseScenario(args.scenario)]
    )
    thresholds = {}
    for scenario in scenarios:
        pair = _SCENARIO_PAIR[scenario]
        if pair not in thresholds:
            var1, var2 = _PAIR_VARIABLES[pair]
            _, _, t1 = _fit_variable(summaries, var1)
            _, _, t2 = _fit_variable(summaries, var2)
            thresholds[pair] = (t1, t2)
        t1, t2 = thresholds[pair]
        report = misuse_false_rates(summaries, scenario, t1, t2)
        payload = {
            "scenario": scenario.value,
            "pair": report.pair,
            "threshold_scheme1": report.threshold_scheme1,
            "threshold_scheme2": report.threshold_scheme2,
            "per_dataset": {
                tag: {"n_impacts": d.n_impacts, "n_false": d.n_false, "rate": d.rate}
                for tag, d in report.per_dataset.items()
            },
            "rate_by_impacts": report.rate_by_impacts,
            "rate_by_datasets": report.rate_by_datasets,
        }
        path = out / f"misuse_{scenario.value}.json"
        _write_json(path, payload)
        print(f"wrote {path}")
    return 0


# --- report ---

def _cmd_report(args):
    _cmd_metrics(args)
    args.level = "both"
    _cmd_compare(args)
    records = read_dataset(args.manifest)
    if any(r.injury_label is not None for r in records):
        args.variables = sorted(RISK_VARIABLES)
        _cmd_fit_risk(args)
        args.variables = ["mpsr1", "mpsr2", "mps_x_sr1", "mps_x_sr2"]
        _cmd_evaluate(args)
        args.scenario = "all"
        _cmd_misuse(args)
    else:
        print("no labeled impacts: skipping fit-risk, evaluate, misuse")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="strainrate", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=0, help="root random seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for per-impact metric computation "
                             "(never changes results)")
    parser.add_argument("--output-dir", default=".", help="directory for outputs")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="tabular report format")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("spec", nargs="?", default=None,
                   help="corpus spec JSON (omit for the built-in demo corpus)")
    p.add_argument("--dataset-dir", default="dataset",
                   help="dataset directory name under --output-dir")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("metrics", help="per-element metrics and per-impact summaries")
    p.add_argument("manifest", help="dataset manifest.json")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("compare", help="scheme-1 vs scheme-2 difference tables")
    p.add_argument("manifest")
    p.add_argument("--level", choices=("element", "impact", "both"), default="both")
    p.add_argument("--svg", action="store_true", help="emit Bland-Altman SVG plots")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("fit-risk", help="logistic risk models and 50%%-risk thresholds")
    p.add_argument("manifest")
    p.add_argument("--variable", dest="variables", action="append",
                   choices=sorted(RISK_VARIABLES),
                   help="risk variable (repeatable; default: all)")
    p.set_defaults(func=_cmd_fit_risk)

    p = sub.add_parser("evaluate", help="repeated stratified split evaluation")
    p.add_argument("manifest")
    p.add_argument("--rounds", type=int, default=40)
    p.add_argument("--train-fraction", type=float, default=0.6)
    p.add_argument("--variable", dest="variables", action="append",
                   choices=sorted(RISK_VARIABLES),
                   help="risk variable (repeatable; default: the four rate variables)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("misuse", help="threshold-misuse false-rate analysis")
    p.add_argument("manifest")
    p.add_argument("--scenario", choices=("SN1", "SN2", "SN3", "SN4", "all"), default="all")
    p.set_defaults(func=_cmd_misuse)

    p = sub.add_parser("report", help="run metrics, compare, fit-risk, evaluate, misuse")
    p.add_argument("manifest")
    p.add_argument("--svg", action="store_true")
    p.add_argument("--rounds", type=int, default=40)
    p.add_argument("--train-fraction", type=float, default=0.6)
    p.set_defaults(func=_cmd_report)
    return parser


def cli(argv=None) -> int:
    """Run the CLI; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.threads < 1:
        sys.stderr.write(_error_line("UsageError", "--threads must be >= 1"))
        return 1
    if getattr(args, "variables", "skip") is None:
        args.variables = (
            ["mpsr1", "mpsr2", "mps_x_sr1", "mps_x_sr2"]
            if args.command == "evaluate"
            else sorted(RISK_VARIABLES)
        )

    try:
        return args.func(args)
    except _NUMERIC_ERRORS as exc:
        sys.stderr.write(_error_line(type(exc).__name__, str(exc)))
        return 3
    except _DATA_ERRORS as exc:
        sys.stderr.write(_error_line(type(exc).__name__, str(exc)))
        return 2
    except StrainRateError as exc:
        sys.stderr.write(_error_line(type(exc).__name__, str(exc)))
        return 2


def main() -> None:
    sys.exit(cli())
