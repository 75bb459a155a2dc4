"""Command-line entry point: ``sensor-assist <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings

from . import algebra, qec
from . import deutsch_jozsa as dj
from . import montecarlo as mc
from .algebra import FRACTION_FIELDS, DomainError


def fmt(x) -> str:
    """Raw value at 17 significant digits."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return format(float(x), ".17g")


def r4(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    return round(float(x), 4)


def _json_clean(obj):
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return None
    if isinstance(obj, dict):
        return {k: _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    return obj


def dump_json(obj) -> str:
    return json.dumps(_json_clean(obj), indent=2, allow_nan=False) + "\n"


def dump_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_output(text: str, path: str | None) -> None:
    """Write to ``path`` atomically, or to stdout when no path is given."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- parameter handling ------------------------------------------------------

def _probability(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"must be a probability in [0, 1], got {v}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {v}")
    return v


def resolve_probabilities(args) -> algebra.ErrorProbabilities:
    """Exactly one of --phat or --o must accompany --p."""
    if args.p is None:
        raise DomainError("--p is required")
    if (args.phat is None) == (args.o is None):
        raise DomainError("give exactly one of --phat or --o together with --p")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if args.phat is not None:
            return algebra.ErrorProbabilities.from_total(args.phat, args.p)
        return algebra.ErrorProbabilities(args.o, args.p)


# -- subcommands -------------------------------------------------------------

def cmd_truth_table(args) -> str:
    rows = qec.truth_table_rows()
    if args.format == "json":
        return dump_json(rows)
    return qec.truth_table_csv()


def fractions_report(probs: algebra.ErrorProbabilities) -> dict:
    fr = algebra.outcome_fractions(probs)
    std = algebra.standard_aggregate(fr)
    ast = algebra.assisted_aggregate(fr)
    report = {
        "o": probs.o,
        "p": probs.p,
        "phat": probs.phat,
        "fractions": fr.as_dict(),
        "standard": std,
        "assisted": ast,
        "effective_correct_standard": algebra.effective_correct(fr, "standard"),
        "effective_correct_assisted": algebra.effective_correct(fr, "assisted"),
        "effective_fault_standard": algebra.effective_fault(fr, "standard"),
        "effective_fault_assisted": algebra.effective_fault(fr, "assisted"),
    }
    report["rounded"] = {
        "standard": {k: r4(v) for k, v in std.items()},
        "assisted": {k: r4(v) for k, v in ast.items()},
        "effective_correct_standard": r4(report["effective_correct_standard"]),
        "effective_correct_assisted": r4(report["effective_correct_assisted"]),
    }
    return report


def cmd_fractions(args) -> str:
    report = fractions_report(resolve_probabilities(args))
    if args.format == "json":
        return dump_json(report)
    rows = [[k, fmt(report[k]), r4(report[k])] for k in ("o", "p", "phat")]
    rows += [[k, fmt(v), r4(v)] for k, v in report["fractions"].items()]
    rows += [[f"standard_{k}", fmt(v), r4(v)] for k, v in report["standard"].items()]
    rows += [[f"assisted_{k}", fmt(v), r4(v)] for k, v in report["assisted"].items()]
    rows += [[k, fmt(report[k]), r4(report[k])] for k in
             ("effective_correct_standard", "effective_correct_assisted",
              "effective_fault_standard", "effective_fault_assisted")]
    return dump_csv(["quantity", "value", "rounded_4dp"], rows)


SWEEP_COLUMNS = ("phat", "entangling_fraction", "eff_fault_standard", "eff_fault_assisted",
                 "eff_fault_standard_4dp", "eff_fault_assisted_4dp", "flag")


def cmd_sweep(args) -> str:
    if args.steps < 2:
        raise DomainError("--steps must be >= 2")
    if not 0.0 <= args.phat_min <= args.phat_max < 1.0:
        raise DomainError("need 0 <= phat-min <= phat-max < 1")
    if not 0.0 <= args.frac_min <= args.frac_max <= 1.0:
        raise DomainError("need 0 <= frac-min <= frac-max <= 1")
    cells = algebra.sweep_grid((args.phat_min, args.phat_max), (args.frac_min, args.frac_max), args.steps)
    if args.format == "json":
        return dump_json([
            {"phat": c.phat, "entangling_fraction": c.entangling_fraction,
             "eff_fault_standard": c.eff_fault_standard, "eff_fault_assisted": c.eff_fault_assisted,
             "flag": c.error}
            for c in cells
        ])
    rows = [[fmt(c.phat), fmt(c.entangling_fraction), fmt(c.eff_fault_standard), fmt(c.eff_fault_assisted),
             r4(c.eff_fault_standard), r4(c.eff_fault_assisted), c.error or ""] for c in cells]
    return dump_csv(SWEEP_COLUMNS, rows)


def cmd_qec_mc(args) -> str:
    probs = resolve_probabilities(args)
    config = mc.QecMonteCarloConfig(
        shots=args.shots, o=probs.o, p=probs.p, seed=args.seed,
        sensor_efficiency=args.sensor_efficiency, audit_fraction=args.audit_fraction,
        variant=args.variant, workers=args.workers,
    )
    result = mc.run_qec_montecarlo(config)
    if args.sensor_efficiency == 1.0:
        analytic = algebra.outcome_fractions(probs)
        z = result.z_scores(analytic)
    else:
        analytic, z = None, None  # closed form assumes every environmental flip is detected
    emp = result.fractions
    fields = []
    for k in FRACTION_FIELDS:
        fields.append({
            "field": k,
            "count": result.counts[k],
            "empirical": getattr(emp, k),
            "analytic": getattr(analytic, k) if analytic else None,
            "z": z[k] if z else None,
        })
    if args.format == "json":
        return dump_json({
            "shots": config.shots, "seed": config.seed, "o": probs.o, "p": probs.p, "phat": probs.phat,
            "sensor_efficiency": config.sensor_efficiency, "variant": config.variant,
            "fields": fields,
            "audited_shots": result.audited,
            "audit_mismatches": len(result.audit_mismatches),
        })
    rows = [[f["field"], f["count"], fmt(f["empirical"]),
             fmt(f["analytic"]) if f["analytic"] is not None else "",
             fmt(f["z"]) if f["z"] is not None else ""] for f in fields]
    return dump_csv(["field", "count", "empirical", "analytic", "z"], rows)


def _dj_row(rep: dj.ExperimentReport):
    return {
        "trial": rep.trial,
        "shots": rep.shots,
        "accepted": rep.accepted_count,
        "rejected": rep.rejected_count,
        "rejected_fraction": rep.rejected_fraction,
        "counts": dict(rep.counts),
        "correct_fraction": rep.correct_fraction,
    }


def cmd_dj(args) -> str:
    circuit = dj.build_dj_circuit()
    if args.circuit:
        with open(args.circuit) as fh:
            circuit = dj.parse_circuit(fh.read())
    config = dj.DjConfig(
        shots=args.shots, trials=args.trials, gate_error_prob=args.gate_error,
        detectable_fraction=args.detectable, veto_enabled=args.veto, seed=args.seed, workers=args.workers,
    )
    if config.trials == 1:
        reports = [dj.run_dj_experiment(config, circuit)]
        stats = None
    else:
        stats = dj.run_trials(config, circuit)
        reports = stats.reports
    expected = dj.expected_rejected_fraction(
        circuit.num_sites, config.gate_error_prob, config.detectable_fraction) if config.veto_enabled else 0.0

    summary = None
    if stats is not None:
        summary = {
            "state_fraction_mean": stats.state_mean,
            "state_fraction_std": stats.state_std,
            "correct_fraction_mean": stats.correct_mean,
            "correct_fraction_std": stats.correct_std,
            "rejected_fraction_mean": float(stats.rejected_fractions.mean()),
            "rejected_fraction_std": float(stats.rejected_fractions.std(ddof=1)),
        }

    if args.format == "json":
        out = {
            "config": {
                "shots": config.shots, "trials": config.trials, "gate_error_prob": config.gate_error_prob,
                "detectable_fraction": config.detectable_fraction, "veto_enabled": config.veto_enabled,
                "seed": config.seed, "error_sites": circuit.num_sites,
            },
            "expected_rejected_fraction": expected,
            "trials": [_dj_row(r) for r in reports],
        }
        if summary is not None:
            out["summary"] = summary
        return dump_json(out)

    header = ["trial", "shots", "accepted", "rejected", *dj.STATES, "correct_fraction", "rejected_fraction"]
    rows = [[r.trial, r.shots, r.accepted_count, r.rejected_count, *(r.counts[s] for s in dj.STATES),
             fmt(r.correct_fraction), fmt(r.rejected_fraction)] for r in reports]
    if summary is not None:
        for stat in ("mean", "std"):
            states = summary[f"state_fraction_{stat}"]
            rows.append([stat, "", "", "", *(fmt(states[s]) for s in dj.STATES),
                         fmt(summary[f"correct_fraction_{stat}"]), fmt(summary[f"rejected_fraction_{stat}"])])
    return dump_csv(header, rows)


# -- parser ------------------------------------------------------------------

def _common(p, default_format):
    p.add_argument("--format", choices=("csv", "json"), default=default_format)
    p.add_argument("--out", metavar="PATH", help="output file (default: standard output)")
    p.add_argument("--seed", type=_seed, default=0, help="master seed, unsigned 64-bit")


def _prob_params(p):
    p.add_argument("--phat", type=_probability, help="probability that any error hits a qubit")
    p.add_argument("--o", type=_probability, help="environmental (sensor-detectable) error probability")
    p.add_argument("--p", type=_probability, help="entangling error probability")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sensor-assist", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("truth-table", help="all 64 error cases of the sensor-assisted code")
    _common(p, "csv")
    p.set_defaults(func=cmd_truth_table)

    p = sub.add_parser("fractions", help="closed-form outcome fractions")
    _common(p, "json")
    _prob_params(p)
    p.set_defaults(func=cmd_fractions)

    p = sub.add_parser("sweep", help="effective fault rate over a (phat, entangling fraction) grid")
    _common(p, "csv")
    p.add_argument("--phat-min", type=float, default=0.0)
    p.add_argument("--phat-max", type=float, default=0.5)
    p.add_argument("--frac-min", type=float, default=0.0)
    p.add_argument("--frac-max", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=50, help="grid points per axis")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("qec-mc", help="Monte Carlo check of the outcome fractions")
    _common(p, "json")
    _prob_params(p)
    p.add_argument("--shots", type=_positive_int, default=1_000_000)
    p.add_argument("--sensor-efficiency", type=_probability, default=1.0)
    p.add_argument("--audit-fraction", type=_probability, default=0.01)
    p.add_argument("--variant", choices=[v.value for v in qec.Variant], default="bitflip")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=cmd_qec_mc)

    p = sub.add_parser("dj", help="noisy Deutsch-Jozsa benchmark with sensor veto")
    _common(p, "json")
    p.add_argument("--shots", type=_positive_int, default=81920)
    p.add_argument("--trials", type=_positive_int, default=1)
    p.add_argument("--gate-error", type=_probability, default=0.07)
    p.add_argument("--detectable", type=_probability, default=0.40)
    p.add_argument("--veto", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--circuit", metavar="FILE", help="gate-list file overriding the built-in circuit")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.set_defaults(func=cmd_dj)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = args.func(args)
        write_output(text, args.out)
    except (DomainError, ValueError, OSError) as exc:
        print(f"sensor-assist {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
