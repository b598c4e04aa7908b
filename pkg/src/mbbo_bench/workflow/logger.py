"""Report writers: AEI table, overall performance table, wall-time table, cost curves."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path
from typing import Sequence

from ..metrics import AEIResult, RunRecord, aei
from .tester import final_best

GAP_FLOOR = 1e-12
CURVE_POINTS = 51
REPORT_FILES = ("aei.csv", "perf_table.md", "walltime.csv", "cost_curves.csv")


def fmt_sci(x: float) -> str:
    """Three-digit scientific notation without exponent padding, e.g. ``7.689E-9``."""
    if not math.isfinite(x):
        return str(x)
    mant, exp = f"{x:.3E}".split("E")
    return f"{mant}E{int(exp):+d}"


def _mean(values):
    return math.fsum(values) / len(values)


def _std(values):
    m = _mean(values)
    return math.sqrt(math.fsum((v - m) ** 2 for v in values) / len(values))


def group_records(records: Sequence[RunRecord]) -> dict[str, dict[str, list[RunRecord]]]:
    """``{algorithm: {problem: [records sorted by run]}}``."""
    out: dict[str, dict[str, list[RunRecord]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        out[r.algorithm][r.problem].append(r)
    return {a: {k: sorted(v, key=lambda r: r.run) for k, v in ps.items()} for a, ps in out.items()}


def problem_order(records: Sequence[RunRecord]) -> list[str]:
    seen: dict[str, None] = {}
    for r in records:
        seen.setdefault(r.problem, None)
    return list(seen)


def default_reference(roster: Sequence[str]) -> str | None:
    if "cma-es" in roster:
        return "cma-es"
    return next((a for a in roster if a != "random-search"), None)


def gap(obj: float, obj_ref: float, obj_rs: float) -> float:
    return (obj - obj_ref) / max(obj_rs - obj_ref, GAP_FLOOR)


def compute_aei(records: Sequence[RunRecord], roster: Sequence[str], max_fes: int, t0: float) -> dict[str, AEIResult]:
    grouped = group_records(records)
    rs = [r for ps in grouped["random-search"].values() for r in ps]
    return {a: aei([r for ps in grouped[a].values() for r in ps], rs, max_fes, t0) for a in roster}


def write_aei(path: Path, results: dict[str, AEIResult], problems: Sequence[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("algorithm", "problem", "z_obj", "z_fes", "z_com", "score", "dispersion"))
        for name, res in results.items():
            for k in problems:
                z = res.z[k]
                w.writerow((name, k, repr(z[0]), repr(z[1]), repr(z[2]), repr(res.per_problem[k]), ""))
            w.writerow((name, "overall", "", "", "", repr(res.score), repr(res.dispersion)))


def read_aei(path: str | Path) -> dict[str, float]:
    """Overall AEI per algorithm."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row["problem"] == "overall":
                out[row["algorithm"]] = float(row["score"])
    return out


def perf_table(records: Sequence[RunRecord], roster: Sequence[str], reference: str | None = None) -> str:
    """Markdown table: Obj, Gap and FEs per problem, mean with std beneath in parentheses."""
    grouped = group_records(records)
    problems = problem_order(records)
    reference = reference or default_reference(roster)
    has_gap = reference is not None and "random-search" in grouped and reference in grouped
    lines = [
        "| Problem | Metric | " + " | ".join(roster) + " |",
        "|---|---|" + "---|" * len(roster),
    ]
    for k in problems:
        objs = {a: [r.v_obj_raw for r in grouped[a][k]] for a in roster}
        fes = {a: [r.v_fes_raw for r in grouped[a][k]] for a in roster}
        cells = [f"{fmt_sci(_mean(objs[a]))}<br>({fmt_sci(_std(objs[a]))})" for a in roster]
        lines.append(f"| {k} | Obj | " + " | ".join(cells) + " |")
        if has_gap:
            ref, rs = _mean(objs[reference]), _mean(objs["random-search"])
            cells = [f"{gap(_mean(objs[a]), ref, rs):.3f}" for a in roster]
            lines.append("|  | Gap | " + " | ".join(cells) + " |")
        cells = [f"{fmt_sci(_mean(fes[a]))}<br>({fmt_sci(_std(fes[a]))})" for a in roster]
        lines.append("|  | FEs | " + " | ".join(cells) + " |")
    notes = ["", "Obj: final best cost minus the reference cost, plus 1E-12; mean over runs, std in parentheses."]
    if has_gap:
        notes.append(f"Gap: (Obj - Obj[{reference}]) / (Obj[random-search] - Obj[{reference}]) on mean Obj.")
    return "\n".join(lines + notes) + "\n"


def write_walltime(path: Path, records: Sequence[RunRecord], roster: Sequence[str],
                   results: dict[str, AEIResult] | None) -> None:
    grouped = group_records(records)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("algorithm", "mean_t2_s", "mean_t1_s", "mean_z_com"))
        for a in roster:
            rs = [r for ps in grouped[a].values() for r in ps]
            zc = ""
            if results is not None:
                res = results[a]
                zc = repr(_mean([res.z[k][2] for k in sorted(res.z)]))
            w.writerow((a, repr(_mean([r.t2_s for r in rs])), repr(_mean([r.t1_s for r in rs])), zc))


def _value_at(trace, fes: float, before: float) -> float:
    v = before
    for f, c in trace:
        if f > fes:
            break
        v = c
    return v


def cost_curves(records: Sequence[RunRecord], roster: Sequence[str], max_fes: int,
                points: int = CURVE_POINTS) -> list[tuple[str, int, float]]:
    """Mean normalized best cost on a fixed FEs grid.

    Per problem, costs are rescaled to [0, 1] between the best final cost and
    the worst first-generation cost over all runs of all algorithms; before a
    run's first evaluation its value is taken as 1.
    """
    grouped = group_records(records)
    problems = problem_order(records)
    lo, hi = {}, {}
    for k in problems:
        runs = [r for a in roster for r in grouped[a][k] if r.trace]
        lo[k] = min(final_best(r) for r in runs)
        hi[k] = max(r.trace[0][1] for r in runs)
    grid = [round(i * max_fes / (points - 1)) for i in range(points)]
    rows = []
    for a in roster:
        for g in grid:
            vals = []
            for k in problems:
                span = hi[k] - lo[k]
                for r in grouped[a][k]:
                    c = _value_at(r.trace, g, hi[k])
                    vals.append((c - lo[k]) / span if span > 0 else 0.0)
            rows.append((a, g, _mean(vals)))
    return rows


def write_cost_curves(path: Path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("algorithm", "fes", "mean_normalized_cost"))
        for a, g, v in rows:
            w.writerow((a, g, repr(v)))


def read_cost_curves(path: str | Path) -> list[tuple[str, int, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [(r["algorithm"], int(r["fes"]), float(r["mean_normalized_cost"])) for r in csv.DictReader(fh)]


def logger_log(records: Sequence[RunRecord], roster: Sequence[str], out_dir: str | Path, max_fes: int, t0: float,
               reference: str | None = None, with_aei: bool = True) -> dict[str, Path]:
    """Write every report into ``out_dir``; returns their paths by file name."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / name for name in REPORT_FILES}
    results = compute_aei(records, roster, max_fes, t0) if with_aei else None
    if results is not None:
        write_aei(paths["aei.csv"], results, problem_order(records))
    else:
        paths.pop("aei.csv")
    paths["perf_table.md"].write_text(perf_table(records, roster, reference), encoding="utf-8")
    write_walltime(paths["walltime.csv"], records, roster, results)
    write_cost_curves(paths["cost_curves.csv"], cost_curves(records, roster, max_fes))
    return paths
