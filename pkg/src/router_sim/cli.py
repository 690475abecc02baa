"""Command-line front end: run scenarios, simulate circuit files, sweep.

Exit codes are a stable contract: 0 success, 2 built-in assertion failure,
3 usage error, 4 parse/compile error.  JSON output is schema-stable with a
fixed field set and 12-significant-digit numbers; identical inputs produce
byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import dsl, scenarios
from .errors import CompileError, SimulationError

DEFAULT_TOL = 1e-9

EXIT_OK = 0
EXIT_ASSERTION = 2
EXIT_USAGE = 3
EXIT_PARSE = 4

_CERTAINTY_KEYS = {
    "three_box_shutter": "reflected_given_postselection",
    "disappearing_full": "restored_given_postselection",
    "simplified_3path": "restored_given_postselection",
    "simplest_2path": "restored_given_postselection",
    "absence_test": "restored_given_postselection",
    "stricter_6beam": "restored_given_postselection",
}

_ALPHA_ARITY = {
    "three_box_shutter": 2,
    "disappearing_full": 5,
    "stricter_6beam": 6,
    "bell_test": 5,
}

SCENARIO_NAMES = (
    "three_box_shutter",
    "disappearing_full",
    "simplified_3path",
    "simplest_2path",
    "absence_test",
    "stricter_6beam",
    "bell_test",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _round12(value):
    return float(f"{value:.12g}")


def _json_ready(obj):
    if isinstance(obj, float):
        return _round12(obj)
    if isinstance(obj, complex):
        return [_round12(obj.real), _round12(obj.imag)]
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    return obj


def _result_payload(result, parameters):
    outcomes = [
        {"label": label, "probability": prob}
        for label, prob in result.conditional_probabilities.items()
    ]
    weak = [
        {"box": box, "time": time, "re": value.real, "im": value.imag}
        for (box, time), value in sorted(result.weak_values.items(),
                                         key=lambda kv: (kv[0][1], kv[0][0]))
    ]
    abl = [
        {"box": box, "time": time, "p": value}
        for (box, time), value in sorted(result.abl_values.items(),
                                         key=lambda kv: (kv[0][1], kv[0][0]))
    ]
    return {
        "name": result.name,
        "parameters": parameters,
        "outcomes": outcomes,
        "conditioned_fidelity": result.fidelity_to_target,
        "weak_values": weak,
        "abl": abl,
        "schmidt": list(result.schmidt_spectrum or []),
    }


def _emit_json(payload, stream):
    stream.write(json.dumps(_json_ready(payload), indent=2))
    stream.write("\n")


def _emit_outcomes_csv(rows, stream):
    writer = csv.writer(stream)
    writer.writerow(["label", "probability"])
    for label, probability in rows:
        writer.writerow([label, f"{probability:.12g}"])


def _parse_alphas(raw, arity):
    if raw is None or raw == "equal":
        return scenarios.equal_alphas(arity)
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    values = []
    for part in parts:
        value = dsl.parse_weight(part)
        if value is None:
            raise UsageError(f"invalid coefficient {part!r}")
        values.append(value)
    if len(values) != arity:
        raise UsageError(
            f"expected {arity} comma-separated coefficients, got {len(values)}"
        )
    return np.asarray(values, dtype=complex)


def _run_scenario(name, args):
    if name == "three_box_shutter":
        if args.alpha1 is not None or args.alpha2 is not None:
            a1 = dsl.parse_weight(args.alpha1 or "0")
            a2 = dsl.parse_weight(args.alpha2 or "0")
            if a1 is None or a2 is None:
                raise UsageError("invalid --alpha1/--alpha2")
        elif args.alphas is not None:
            a1, a2 = _parse_alphas(args.alphas, 2)
        else:
            a1 = a2 = 1 / math.sqrt(2)
        result = scenarios.three_box_shutter(a1, a2)
        params = {"alphas": [complex(a1), complex(a2)],
                  "perturbation": args.perturb}
        return result, params
    if name == "disappearing_full":
        alphas = _parse_alphas(args.alphas, 5)
        result = scenarios.disappearing_full(alphas, args.perturb)
        return result, {"alphas": [complex(a) for a in alphas],
                        "perturbation": args.perturb}
    if name == "simplified_3path":
        return scenarios.simplified_3path(args.perturb), {
            "alphas": [], "perturbation": args.perturb}
    if name == "simplest_2path":
        return scenarios.simplest_2path(args.perturb), {
            "alphas": [], "perturbation": args.perturb}
    if name == "absence_test":
        return scenarios.absence_test(args.perturb), {
            "alphas": [], "perturbation": args.perturb}
    if name == "stricter_6beam":
        alphas = _parse_alphas(args.alphas, 6)
        result = scenarios.stricter_6beam(alphas, args.perturb)
        return result, {"alphas": [complex(a) for a in alphas],
                        "perturbation": args.perturb}
    if name == "bell_test":
        alphas = _parse_alphas(args.alphas, 5)
        alice = scenarios.SUPERPOSE if args.alice == "superpose" \
            else scenarios.OPEN_BOXES
        bob = scenarios.SUPERPOSE if args.bob == "superpose" \
            else scenarios.OPEN_CAVITIES
        result = scenarios.bell_scenario(alphas, alice, bob)
        return result, {
            "alphas": [complex(a) for a in alphas],
            "alice_setting": args.alice,
            "bob_setting": args.bob,
        }
    raise UsageError(
        f"unknown scenario {name!r}; valid names: {', '.join(SCENARIO_NAMES)}"
    )


def _check_assertions(name, result, perturb, tol):
    """True when every built-in certainty claim holds within tolerance."""
    if perturb is not None:
        return True
    if name == "bell_test":
        total = sum(result.conditional_probabilities.values())
        gap = result.metadata.get("no_signaling_gap", 0.0)
        return abs(total - 1.0) <= tol and gap <= tol
    key = _CERTAINTY_KEYS.get(name)
    if key is None:
        return True
    value = result.conditional_probabilities.get(key, 0.0)
    ok = abs(value - 1.0) <= tol
    if name == "three_box_shutter":
        ok = ok and abs(result.fidelity_to_target - 1.0) <= tol
    return ok


def cmd_run(args, stream):
    result, params = _run_scenario(args.scenario, args)
    payload = _result_payload(result, params)
    if args.format == "csv":
        _emit_outcomes_csv(
            list(result.conditional_probabilities.items()), stream
        )
    else:
        _emit_json(payload, stream)
    if not _check_assertions(args.scenario, result, args.perturb, args.tol):
        return EXIT_ASSERTION
    return EXIT_OK


def cmd_simulate(args, stream):
    try:
        with open(args.file, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise UsageError(str(exc)) from exc
    report = dsl.simulate_text(text)
    if args.format == "csv":
        rows = []
        for det in report["detections"]:
            rows.append((det["name"], det["probability"]))
            for i, value in enumerate(det["conditional"]):
                rows.append((f"{det['name']}|postselect{i}", value))
        _emit_outcomes_csv(rows, stream)
    else:
        payload = {
            "file": os.path.basename(args.file),
            "postselections": report["postselections"],
            "detections": report["detections"],
        }
        _emit_json(payload, stream)
    return EXIT_OK


def _sweep_points(args):
    if args.random is not None:
        if args.random <= 0:
            raise UsageError("--random needs a positive count")
        arity = _ALPHA_ARITY.get(args.scenario)
        if arity is None:
            raise UsageError(
                f"scenario {args.scenario!r} takes no coefficient sweep"
            )
        rng = np.random.default_rng(args.seed)
        points = []
        for _ in range(args.random):
            vec = rng.normal(size=arity) + 1j * rng.normal(size=arity)
            points.append(vec / np.linalg.norm(vec))
        return points
    if args.alpha1_grid is not None:
        try:
            start, stop, count = args.alpha1_grid.split(":")
            start, stop, count = float(start), float(stop), int(count)
        except ValueError as exc:
            raise UsageError(
                "--alpha1-grid expects start:stop:count"
            ) from exc
        if count <= 0:
            raise UsageError("empty sweep grid")
        arity = _ALPHA_ARITY.get(args.scenario)
        if arity is None:
            raise UsageError(
                f"scenario {args.scenario!r} takes no coefficient sweep"
            )
        points = []
        for a1 in np.linspace(start, stop, count):
            a1 = min(max(a1, -1.0), 1.0)
            rest = math.sqrt(max(0.0, 1.0 - a1 * a1) / (arity - 1))
            vec = np.full(arity, rest, dtype=complex)
            vec[0] = a1
            points.append(vec)
        return points
    raise UsageError("sweep needs --random N or --alpha1-grid start:stop:count")


def _sweep_one(scenario, point):
    if scenario == "bell_test":
        result = scenarios.bell_scenario(point)
        summary = {
            "no_signaling_gap": result.metadata["no_signaling_gap"],
            "chsh": result.metadata["chsh"],
        }
    else:
        if scenario == "three_box_shutter":
            result = scenarios.three_box_shutter(point[0], point[1])
        elif scenario == "disappearing_full":
            result = scenarios.disappearing_full(point)
        elif scenario == "stricter_6beam":
            result = scenarios.stricter_6beam(point)
        else:
            raise UsageError(f"scenario {scenario!r} is not sweepable")
        summary = dict(result.conditional_probabilities)
        summary["fidelity"] = result.fidelity_to_target
    return {
        "alphas": [complex(a) for a in point],
        "summary": summary,
        "schmidt": list(result.schmidt_spectrum or []),
    }


def cmd_sweep(args, stream):
    points = _sweep_points(args)
    with ThreadPoolExecutor(max_workers=min(8, len(points))) as pool:
        records = list(
            pool.map(lambda p: _sweep_one(args.scenario, p), points)
        )
    for index, record in enumerate(records):
        record_out = {"index": index}
        record_out.update(record)
        records[index] = record_out
    if args.format == "csv":
        writer = csv.writer(stream)
        keys = sorted(records[0]["summary"]) if records else []
        writer.writerow(["index", "alphas"] + keys + ["schmidt"])
        for record in records:
            alphas = ";".join(
                dsl.render_weight(a) for a in record["alphas"]
            )
            writer.writerow(
                [record["index"], alphas]
                + [f"{record['summary'][k]:.12g}" for k in keys]
                + [";".join(f"{s:.12g}" for s in record["schmidt"])]
            )
    else:
        _emit_json({"scenario": args.scenario, "records": records}, stream)
    return EXIT_OK


def cmd_list(args, stream):
    for name in SCENARIO_NAMES:
        stream.write(name + "\n")
    return EXIT_OK


def build_parser():
    parser = _Parser(
        prog="router-sim",
        description=(
            "Exact simulator for pre-/post-selected photonic router circuits"
        ),
    )
    sub = parser.add_subparsers(dest="command")

    def add_common(p):
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument(
            "--tol", type=float,
            default=float(os.environ.get("ROUTER_SIM_TOL", DEFAULT_TOL)),
            help="tolerance for built-in certainty assertions",
        )

    run = sub.add_parser("run", help="run a built-in scenario")
    run.add_argument("scenario")
    run.add_argument("--alphas", help='"equal" or comma-separated weights')
    run.add_argument("--alpha1")
    run.add_argument("--alpha2")
    run.add_argument("--perturb", help="named perturbation variant")
    run.add_argument("--alice", choices=("open", "superpose"), default="open")
    run.add_argument("--bob", choices=("open", "superpose"), default="open")
    add_common(run)

    simulate = sub.add_parser("simulate", help="simulate a .circuit file")
    simulate.add_argument("file")
    add_common(simulate)

    sweep = sub.add_parser("sweep", help="evaluate a scenario over a grid")
    sweep.add_argument("scenario")
    sweep.add_argument("--random", type=int, help="number of random points")
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--alpha1-grid", help="start:stop:count for alpha1")
    add_common(sweep)

    lister = sub.add_parser("list", help="list scenario names")
    lister.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def main(argv=None, stream=None):
    stream = stream or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required (run, simulate, sweep, list)")
        if args.command == "run":
            if args.scenario not in SCENARIO_NAMES:
                raise UsageError(
                    f"unknown scenario {args.scenario!r}; valid names: "
                    f"{', '.join(SCENARIO_NAMES)}"
                )
            return cmd_run(args, stream)
        if args.command == "simulate":
            return cmd_simulate(args, stream)
        if args.command == "sweep":
            if args.scenario not in SCENARIO_NAMES:
                raise UsageError(
                    f"unknown scenario {args.scenario!r}; valid names: "
                    f"{', '.join(SCENARIO_NAMES)}"
                )
            return cmd_sweep(args, stream)
        if args.command == "list":
            return cmd_list(args, stream)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except dsl.ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CompileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ASSERTION


if __name__ == "__main__":
    sys.exit(main())
