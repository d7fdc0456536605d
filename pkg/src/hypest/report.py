"""Scenario files, table rendering and CSV round-tripping of simulation summaries."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, fields, replace
from decimal import ROUND_HALF_EVEN, Decimal
from importlib import resources
from typing import Sequence

from .asymptotics import ScenarioParams
from .errors import ConfigInvalidError
from .formulas import INTERACTIONS
from .simulator import EstimatorSummary, SimulationSummary

_FLOAT_KEYS = {"pi0", "pi1", "lambda0", "lambda_a", "lambda_r", "sigma2_l1", "b0", "b_a",
               "b_l1", "b_r", "b_l1r", "sigma2_y"}
_INT_KEYS = {"n", "n_reps", "seed"}
_ALIASES = {"reps": "n_reps", "name": "label"}


def fmt3(x: float) -> str:
    """Round half-to-even at 3 decimals on the decimal representation; no negative zero."""
    if x != x:
        return "nan"
    d = Decimal(repr(float(x))).quantize(Decimal("0.001"), rounding=ROUND_HALF_EVEN)
    if d == 0:
        d = abs(d)
    return f"{d:.3f}"


def parse_interactions(text: str | None) -> tuple[str, ...]:
    if text is None:
        return ()
    items = [t.strip().lower() for t in text.replace(" ", ",").split(",") if t.strip()]
    if items in ([], ["none"]):
        return ()
    aliases = {"l1r": "l1:r", "ar": "a:r", "l0r": "l0:r"}
    out = tuple(sorted({aliases.get(t, t) for t in items}))
    bad = [t for t in out if t not in INTERACTIONS]
    if bad:
        raise ConfigInvalidError(f"unknown interaction terms {bad}; choose from {INTERACTIONS}")
    return out


def parse_scenario_text(text: str, source: str = "<string>") -> list[tuple[ScenarioParams, tuple[str, ...]]]:
    """Parse ``[scenario]`` blocks of ``key = value`` lines (``#`` starts a comment).

    Keys before the first block are defaults for every block. Each block
    yields ``(ScenarioParams, g2_interactions)``.
    """
    defaults: dict[str, str] = {}
    blocks: list[dict[str, str]] = []
    current = defaults
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower() == "[scenario]":
            current = {}
            blocks.append(current)
            continue
        if "=" not in line:
            raise ConfigInvalidError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        current[_ALIASES.get(key, key)] = value
    if not blocks:
        blocks = [{}]
    return [scenario_from_mapping({**defaults, **b}, source) for b in blocks]


def scenario_from_mapping(values: dict[str, str], source: str = "<config>"):
    kwargs: dict[str, object] = {}
    g2 = ()
    for key, value in values.items():
        try:
            if key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            elif key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key == "label":
                kwargs[key] = value
            elif key == "g2_interactions":
                g2 = parse_interactions(value)
            else:
                raise ConfigInvalidError(f"{source}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigInvalidError):
                raise
            raise ConfigInvalidError(f"{source}: bad value for {key}: {value!r}") from None
    try:
        return ScenarioParams(**kwargs), g2
    except ValueError as exc:
        raise ConfigInvalidError(f"{source}: {exc}") from None


def load_scenarios(path) -> list[tuple[ScenarioParams, tuple[str, ...]]]:
    with open(path) as fh:
        return parse_scenario_text(fh.read(), str(path))


def default_scenarios() -> list[tuple[ScenarioParams, tuple[str, ...]]]:
    text = resources.files("hypest").joinpath("data/scenarios.ini").read_text()
    return parse_scenario_text(text, "scenarios.ini")


def override(params: ScenarioParams, **changes) -> ScenarioParams:
    changes = {k: v for k, v in changes.items() if v is not None}
    try:
        return replace(params, **changes)
    except ValueError as exc:
        raise ConfigInvalidError(str(exc)) from None


def scenario_dict(params: ScenarioParams) -> dict:
    return asdict(params)


# -- tables ---------------------------------------------------------------

_ROW_STATS = ("bias", "empirical_se", "mcse_bias", "n_failures", "mean")


def _names(summaries: Sequence[SimulationSummary]) -> tuple[str, ...]:
    if not summaries:
        return ()
    names = summaries[0].estimator_names
    for s in summaries[1:]:
        if s.estimator_names != names:
            raise ValueError("summaries carry different estimator sets")
    return names


def _use_label(summaries) -> bool:
    return len({s.scenario.label for s in summaries}) > 1


def render_markdown(summaries: Sequence[SimulationSummary]) -> str:
    names = _names(summaries)
    label = _use_label(summaries)
    header = (["Scenario"] if label else []) + ["π0", "π1"]
    for name in names:
        header += [f"{name} Bias", f"{name} Emp. SE"]
        if summaries[0].asy_se_for(name) is not None:
            header.append(f"{name} Asy. SE")
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---:" for _ in header) + "|"]
    for s in summaries:
        cells = ([s.scenario.label] if label else []) + [f"{s.scenario.pi0:g}", f"{s.scenario.pi1:g}"]
        for name in names:
            row = s.row(name)
            cells += [fmt3(row.bias), fmt3(row.empirical_se)]
            asy = s.asy_se_for(name)
            if asy is not None:
                cells.append(fmt3(asy))
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


_PARAM_COLS = tuple(f.name for f in fields(ScenarioParams) if f.name != "label")


def _csv_header(names) -> list[str]:
    head = ["scenario", *_PARAM_COLS, "g2_interactions", "true_delta", "asy_se_pre",
            "asy_se_prepost"]
    for name in names:
        head += [f"{name}_{stat}" for stat in _ROW_STATS]
    head += ["asy_se_pre_3dp", "asy_se_prepost_3dp"]
    for name in names:
        head += [f"{name}_bias_3dp", f"{name}_emp_se_3dp"]
    return head


def render_csv(summaries: Sequence[SimulationSummary]) -> str:
    names = _names(summaries)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_csv_header(names))
    for s in summaries:
        sc = s.scenario
        row = [sc.label, *(repr(getattr(sc, k)) for k in _PARAM_COLS),
               ";".join(s.g2_interactions), repr(s.true_delta), repr(s.asy_se_pre),
               repr(s.asy_se_prepost)]
        for name in names:
            r = s.row(name)
            row += [repr(float(r.bias)), repr(float(r.empirical_se)), repr(float(r.mcse_bias)),
                    r.n_failures, repr(float(r.mean))]
        row += [fmt3(s.asy_se_pre), fmt3(s.asy_se_prepost)]
        for name in names:
            r = s.row(name)
            row += [fmt3(r.bias), fmt3(r.empirical_se)]
        w.writerow(row)
    return buf.getvalue()


def render_table(summaries: SimulationSummary | Sequence[SimulationSummary], fmt: str = "md") -> str:
    """Render one or more summaries as a markdown table or CSV (deterministic)."""
    if isinstance(summaries, SimulationSummary):
        summaries = [summaries]
    summaries = list(summaries)
    if fmt in ("md", "markdown"):
        return render_markdown(summaries)
    if fmt == "csv":
        return render_csv(summaries)
    raise ValueError(f"unknown format {fmt!r}")


def read_summary_csv(text: str) -> list[SimulationSummary]:
    """Parse :func:`render_csv` output back into summaries (full stored precision)."""
    reader = csv.DictReader(io.StringIO(text))
    names = []
    for col in reader.fieldnames or []:
        if col.endswith("_n_failures"):
            names.append(col[: -len("_n_failures")])
    out = []
    for rec in reader:
        params = ScenarioParams(label=rec["scenario"], **{
            k: (int if k in _INT_KEYS else float)(rec[k]) for k in _PARAM_COLS})
        rows = tuple(
            EstimatorSummary(
                name=name,
                bias=float(rec[f"{name}_bias"]),
                empirical_se=float(rec[f"{name}_empirical_se"]),
                mcse_bias=float(rec[f"{name}_mcse_bias"]),
                n_failures=int(rec[f"{name}_n_failures"]),
                mean=float(rec[f"{name}_mean"]),
            )
            for name in names
        )
        g2 = tuple(t for t in rec["g2_interactions"].split(";") if t)
        out.append(SimulationSummary(params, rows, float(rec["asy_se_pre"]),
                                     float(rec["asy_se_prepost"]), float(rec["true_delta"]), g2))
    return out


def render_replicates(summary: SimulationSummary) -> str:
    """Per-replicate estimates as ``replicate,estimator,delta_hat,status``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replicate", "estimator", "delta_hat", "status"])
    names = summary.estimator_names
    for i in range(summary.estimates.shape[0]):
        for j, name in enumerate(names):
            w.writerow([i, name, repr(float(summary.estimates[i, j])), summary.statuses[i][j]])
    return buf.getvalue()


__all__ = [
    "fmt3", "parse_scenario_text", "load_scenarios", "default_scenarios", "render_table",
    "render_markdown", "render_csv", "read_summary_csv", "render_replicates", "parse_interactions",
]
