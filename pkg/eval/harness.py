#!/usr/bin/env python3
"""Acceptance studies for the soliton lab.

Usage:
    python eval/harness.py                      # every study
    python eval/harness.py --only free-soliton  # one study
    python eval/harness.py --smoke              # only load and validate the configs
"""
from __future__ import annotations

import argparse
import json
import operator
import pathlib
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from src.solitonlab.core.exceptions import SolitonLabError
from src.solitonlab.core.logging import configure_logging
from src.solitonlab.harness.loader import load_config
from src.solitonlab.harness.runner import run_experiment
from src.solitonlab.harness.sweep import sweep_orders

Check = Tuple[str, str, float]
COMPARATORS: Dict[str, Callable[[float, float], bool]] = {"<": operator.lt, ">=": operator.ge}


@dataclass
class Study:
    name: str
    config: str
    kind: str = "run"
    checks: List[Check] = field(default_factory=list)
    parameter: Optional[str] = None
    values: List[float] = field(default_factory=list)


STUDIES = [
    Study(
        "certify-cubic",
        "certify_cubic.toml",
        checks=[("spectrum.negative_counts.L1", "<", 1.5), ("spectrum.rho", ">=", 1e-6)],
    ),
    Study(
        "free-soliton",
        "free_soliton.toml",
        checks=[
            ("observables.deviation_a", "<", 1e-3),
            ("observables.w_h1_sup", "<", 1e-3),
            ("observables.deviation_gamma", "<", 1e-3),
        ],
    ),
    Study(
        "cosine-main",
        "cosine_main.toml",
        checks=[("observables.ehrenfest", "<", 1e-3), ("observables.mass_drift", "<", 1e-10)],
    ),
    Study(
        "newton-order",
        "newton_order.toml",
        kind="sweep",
        parameter="eps_V",
        values=[0.1, 0.05, 0.025],
        checks=[
            ("deviation_a_checkpoint", ">=", 1.5),
            ("alpha_sup_checkpoint", ">=", 1.5),
            ("deviation_a", ">=", 0.9),
            ("w_h1_sup", ">=", 0.9),
            ("mu_drift_checkpoint", ">=", 1.5),
        ],
    ),
    Study(
        "initial-gap",
        "initial_gap.toml",
        kind="sweep",
        parameter="eps_0",
        values=[0.01, 0.02, 0.04],
        checks=[("initial_gap", ">=", 1.8)],
    ),
    Study(
        "strang-order",
        "strang_order.toml",
        kind="sweep",
        parameter="dt",
        values=[0.005, 0.01, 0.02],
        checks=[("energy_drift", ">=", 1.8)],
    ),
]


def _lookup(payload: Dict[str, Any], path: str) -> Any:
    value: Any = payload
    for part in path.split("."):
        value = value.get(part) if isinstance(value, dict) else None
    return value


def _judge(value: Optional[float], comparator: str, threshold: float) -> bool:
    return value is not None and COMPARATORS[comparator](float(value), threshold)


def evaluate_study(study: Study, studies_dir: pathlib.Path, out: pathlib.Path, smoke: bool) -> Dict[str, Any]:
    config = load_config(studies_dir / study.config)
    if smoke:
        return {"study": study.name, "status": "smoke_passed", "details": "Config validated"}
    try:
        if study.kind == "sweep":
            assert study.parameter is not None
            report = sweep_orders(config, study.parameter, study.values, output_root=out)
            measured = {name: report.fit(name).slope for name, _, _ in study.checks}
            extra: Dict[str, Any] = {"orders": {f.observable: f.r_squared for f in report.fits}}
        else:
            summary = run_experiment(config, output_root=out).as_dict()
            measured = {name: _lookup(summary, name) for name, _, _ in study.checks}
            extra = {"output_dir": summary["output_dir"]}
    except SolitonLabError as exc:
        return {"study": study.name, "status": "error", "exit_code": exc.exit_code, "details": str(exc)}

    failures = [
        f"{name}: {measured[name]} not {comparator} {threshold}"
        for name, comparator, threshold in study.checks
        if not _judge(measured[name], comparator, threshold)
    ]
    return {
        "study": study.name,
        "status": "passed" if not failures else "failed",
        "measured": measured,
        "failures": failures,
        **extra,
    }


def run(studies_dir: pathlib.Path, out: pathlib.Path, only: Optional[List[str]], smoke: bool) -> None:
    selected = [s for s in STUDIES if not only or s.name in only]
    results = [evaluate_study(study, studies_dir, out, smoke) for study in selected]
    summary = {
        "total": len(results),
        "passed": sum(1 for r in results if r["status"] == "passed"),
        "failed": sum(1 for r in results if r["status"] == "failed"),
        "errors": sum(1 for r in results if r["status"] == "error"),
        "smoke_passed": sum(1 for r in results if r["status"] == "smoke_passed"),
    }

    report_dir = pathlib.Path(".reports")
    report_dir.mkdir(exist_ok=True)
    report_path = report_dir / "eval-summary.json"
    with report_path.open("w", encoding="utf-8") as handle:
        json.dump({"results": results, "summary": summary}, handle, indent=2)

    print(json.dumps(summary, indent=2))
    print(f"Wrote report to {report_path}")


def parse_args() -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Soliton lab acceptance studies")
    parser.add_argument("--studies", type=pathlib.Path, default=pathlib.Path("eval/studies"))
    parser.add_argument("--out", type=pathlib.Path, default=pathlib.Path(".runs/eval"))
    parser.add_argument("--only", nargs="+", default=None, help="Study names to run")
    parser.add_argument("--smoke", action="store_true", help="Only validate the study configs")
    return parser.parse_args()


if __name__ == "__main__":
    configure_logging()
    args = parse_args()
    run(args.studies, args.out, args.only, smoke=args.smoke)
