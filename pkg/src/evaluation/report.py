"""CSV tables and SVG charts comparing evaluated runs."""
import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from src.evaluation.exceptions import ReportError
from src.evaluation.harness import EvalReport
from src.training.metrics import MetricRecord, read_metrics

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["run_id", "env_id", "mode", "n_trials", "sr", "ct", "seed"]
MODES = ("IND", "OOD")
SVG_SALT = "corft-report"
RUN_FILE = "run.json"
EVAL_FILE = "eval_reports.jsonl"
METRICS_FILE = "metrics.jsonl"


@dataclass
class RunRecord:
    """Evaluation reports and training curve of one run directory."""
    run_id: str
    env_id: str
    seed: int = 0
    reports: List[EvalReport] = field(default_factory=list)
    metrics: List[MetricRecord] = field(default_factory=list)

    def latest(self, mode: str) -> Optional[EvalReport]:
        matching = [r for r in self.reports if r.mode == mode]
        return matching[-1] if matching else None


def load_run(run_dir: Union[str, Path]) -> RunRecord:
    """
    Read a self-describing run directory (run.json, eval_reports.jsonl, metrics.jsonl).

    Raises:
        ReportError: run.json missing or unreadable
    """
    run_dir = Path(run_dir)
    try:
        info = json.loads((run_dir / RUN_FILE).read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ReportError(f"{run_dir} is not a run directory: {e}") from e

    reports = []
    eval_path = run_dir / EVAL_FILE
    if eval_path.exists():
        with eval_path.open("r", encoding="utf-8") as f:
            reports = [EvalReport.model_validate_json(line) for line in f if line.strip()]
    return RunRecord(
        run_id=info.get("run_id", run_dir.name),
        env_id=info["env_id"],
        seed=int(info.get("seed", 0)),
        reports=reports,
        metrics=read_metrics(run_dir / METRICS_FILE),
    )


def _format_number(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def render_csv(runs: Sequence[RunRecord]) -> str:
    """CSV text with one row per run and evaluated mode; absent modes are noted after the rows."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    missing = []
    for run in runs:
        for mode in MODES:
            report = run.latest(mode)
            if report is None:
                missing.append(f"{run.run_id}:{mode}")
                continue
            writer.writerow([run.run_id, run.env_id, mode, report.n_trials,
                             _format_number(report.sr), _format_number(report.ct), report.seed])
    for entry in missing:
        buffer.write(f"# not evaluated: {entry}\n")
    return buffer.getvalue()


def _single_env(runs: Sequence[RunRecord], chart: str) -> str:
    env_ids = sorted({run.env_id for run in runs})
    if len(env_ids) != 1:
        raise ReportError(f"{chart} chart mixes env ids {env_ids}")
    return env_ids[0]


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _sr_chart(runs: Sequence[RunRecord], out_dir: Path) -> List[Path]:
    env_id = _single_env(runs, "SR")
    written = []
    for mode in MODES:
        values = [(run.run_id, run.latest(mode)) for run in runs]
        values = [(run_id, report.sr) for run_id, report in values if report is not None]
        if not values:
            logger.info(f"No {mode} evaluations; {mode} SR chart omitted")
            continue
        fig, ax = plt.subplots(figsize=(4 + len(values), 3))
        ax.bar([run_id for run_id, _ in values], [sr for _, sr in values], color="tab:blue")
        ax.set_ylim(0.0, 1.0)
        ax.set_ylabel("success rate")
        ax.set_title(f"{env_id} {mode} SR")
        written.append(_save(fig, out_dir / f"sr_{mode.lower()}.svg"))
    return written


def _ct_chart(runs: Sequence[RunRecord], out_dir: Path) -> List[Path]:
    env_id = _single_env(runs, "CT")
    reports = [(run.run_id, run.latest("IND")) for run in runs]
    if any(report is None or report.ct is None for _, report in reports):
        logger.info(f"{env_id}: a run never succeeded IND; CT chart omitted")
        return []
    fig, ax = plt.subplots(figsize=(4 + len(reports), 3))
    ax.bar([run_id for run_id, _ in reports], [report.ct for _, report in reports], color="tab:orange")
    ax.set_ylabel("cycle time (steps)")
    ax.set_title(f"{env_id} IND CT")
    return [_save(fig, out_dir / "ct_ind.svg")]


def _curve_chart(runs: Sequence[RunRecord], out_dir: Path) -> List[Path]:
    curves = {run.run_id: [(m.step, m.td_error if m.td_error is not None else m.bc_loss)
                           for m in run.metrics if m.td_error is not None or m.bc_loss is not None]
              for run in runs}
    curves = {run_id: points for run_id, points in curves.items() if points}
    if not curves:
        return []
    env_id = _single_env(runs, "training curve")
    fig, ax = plt.subplots(figsize=(6, 3))
    for run_id, points in curves.items():
        ax.plot([p[0] for p in points], [p[1] for p in points], label=run_id)
    ax.set_yscale("log")
    ax.set_xlabel("gradient step")
    ax.set_ylabel("TD error / BC loss")
    ax.set_title(f"{env_id} training curves")
    ax.legend()
    return [_save(fig, out_dir / "curves.svg")]


def compare_report(runs: Sequence[RunRecord], out_dir: Union[str, Path]) -> Dict[str, Path]:
    """
    Write results.csv plus SR, CT and training-curve SVGs for a set of runs.

    File bytes depend only on the inputs.

    Args:
        runs: At least one run
        out_dir: Directory to write into

    Returns:
        Artifact name -> path

    Raises:
        ReportError: no runs, or runs of different environments in one chart
    """
    if not runs:
        raise ReportError("compare_report needs at least one run")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    csv_path = out_dir / "results.csv"
    csv_path.write_text(render_csv(runs), encoding="utf-8")
    artifacts = {"results.csv": csv_path}

    with plt.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "path"}):
        for path in _sr_chart(runs, out_dir) + _ct_chart(runs, out_dir) + _curve_chart(runs, out_dir):
            artifacts[path.name] = path
    logger.info(f"Report for {len(runs)} run(s) written to {out_dir}: {', '.join(sorted(artifacts))}")
    return artifacts
