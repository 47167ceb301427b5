"""Scenario JSON files, CSV result files and a small SVG regret chart."""

import hashlib
import json
import math

from .arm_models import ArmModel
from .exceptions import BanditLabError, ScenarioFormatError
from .sim_engine import Scenario, builtin_scenarios

CSV_COLUMNS = ("t", "mean_regret", "sd_regret", "mean_cum_reward")


def fmt(x):
    """Locale-independent 9-significant-digit number formatting."""
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".9g")


def scenario_from_dict(doc, default_name="custom"):
    if not isinstance(doc, dict):
        raise ScenarioFormatError("scenario document must be a JSON object")
    arms_doc = doc.get("arms")
    if not isinstance(arms_doc, list) or not arms_doc:
        raise ScenarioFormatError("scenario needs a non-empty 'arms' list")
    arms = []
    for i, arm_doc in enumerate(arms_doc, start=1):
        if not isinstance(arm_doc, dict):
            raise ScenarioFormatError(f"arm {i}: expected an object")
        P = arm_doc.get("transition")
        r = arm_doc.get("rewards")
        if not isinstance(P, list) or not all(isinstance(row, list) for row in P):
            raise ScenarioFormatError(f"arm {i}: 'transition' must be a row-major list of rows")
        if not isinstance(r, list):
            raise ScenarioFormatError(f"arm {i}: 'rewards' must be a list")
        labels = arm_doc.get("states", ())
        widths = {len(row) for row in P}
        if len(widths) > 1:
            row = next(j for j, row in enumerate(P) if len(row) != len(P[0]))
            raise ScenarioFormatError(f"arm {i}, row {row}: ragged transition matrix")
        try:
            arms.append(ArmModel(P, r, name=arm_doc.get("name", f"arm {i}"), state_labels=tuple(labels)))
        except (BanditLabError, ValueError, TypeError) as exc:
            raise ScenarioFormatError(f"arm {i}: {exc}") from exc
    try:
        return Scenario(tuple(arms), name=str(doc.get("name", default_name)))
    except (BanditLabError, ValueError) as exc:
        raise ScenarioFormatError(str(exc)) from exc


def load_scenario_file(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return scenario_from_dict(doc, default_name=str(path))


def resolve_scenario(name_or_path):
    builtins = builtin_scenarios()
    if name_or_path in builtins:
        return builtins[name_or_path]
    return load_scenario_file(name_or_path)


def scenario_hash(scenario):
    canon = json.dumps(scenario.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def write_result_csv(fh, result, manifest):
    """Manifest comments, header, one row per checkpoint, trailing plays."""
    for key, value in manifest.items():
        fh.write(f"# {key}={value}\n")
    fh.write(",".join(CSV_COLUMNS) + "\n")
    for t, m, s, c in zip(result.t, result.mean_regret, result.sd_regret, result.mean_cum_reward):
        fh.write(f"{int(t)},{fmt(m)},{fmt(s)},{fmt(c)}\n")
    fh.write(f"# summary final_t={int(result.t[-1])}\n")
    for i, plays in enumerate(result.mean_plays, start=1):
        fh.write(f"# mean_plays_{i}={fmt(plays)}\n")


def read_result_csv(path):
    """Parse a result CSV back into ``(manifest, rows, summary)``."""
    manifest, summary, rows = {}, {}, []
    header = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# summary"):
                target = summary
                line = line[len("# summary"):]
                for part in line.split():
                    k, v = part.split("=", 1)
                    target[k] = v
                continue
            if line.startswith("# "):
                k, v = line[2:].split("=", 1)
                (summary if header is not None else manifest)[k] = v
                continue
            if header is None:
                header = line.split(",")
                continue
            vals = line.split(",")
            rows.append({k: (int(v) if k == "t" else float(v)) for k, v in zip(header, vals)})
    return manifest, rows, summary


def regret_svg(t, regret, title="", logx=False, width=640, height=400):
    """Single polyline chart of mean regret against slot."""
    left, right, top, bottom = 70, 20, 30, 50
    xs = [math.log10(v) for v in t] if logx else [float(v) for v in t]
    ys = [float(v) for v in regret]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = width - left - right, height - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    points = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
    xlabel = "log10(slot)" if logx else "slot"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
        f'<text x="{left}" y="{top + ph + 20}" font-size="11">{fmt(x0)}</text>',
        f'<text x="{left + pw}" y="{top + ph + 20}" font-size="11" text-anchor="end">{fmt(x1)}</text>',
        f'<text x="{left + pw / 2}" y="{height - 10}" font-size="12" text-anchor="middle">{xlabel}</text>',
        f'<text x="{left - 5}" y="{top + ph}" font-size="11" text-anchor="end">{fmt(y0)}</text>',
        f'<text x="{left - 5}" y="{top + 10}" font-size="11" text-anchor="end">{fmt(y1)}</text>',
        f'<text x="{width / 2}" y="18" font-size="13" text-anchor="middle">{title}</text>',
        f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{points}"/>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"
