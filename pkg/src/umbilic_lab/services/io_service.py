import csv
import io
import json
import logging
import math
import re
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import dictdiffer  # type: ignore
import numpy as np

from ..core.config import atomic_write_text
from ..core.exceptions import OutOfRange, SchemaMismatch
from ..models import CurvatureSamples, Profile, TubeSamples, as_samples
from ..schemas.report import DiffEntry, Report, ReportDiff

log = logging.getLogger(__name__)

TIMING_FIELD = "wall_clock_seconds"


def _fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    return format(float(value), ".17g")


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buffer.getvalue()


def emit_diagram(points: "CurvatureSamples | Sequence[Any]", path: Path) -> Path:
    """Write kappa1,kappa2 rows ordered by source position."""
    samples = as_samples(points)
    if len(samples) == 0:
        raise OutOfRange("Cannot emit an empty curvature diagram.")
    order = np.lexsort((samples.y, samples.x))
    rows = zip(samples.kappa1[order].tolist(), samples.kappa2[order].tolist())
    atomic_write_text(path, _csv_text(["kappa1", "kappa2"], rows))
    log.info(f"Wrote {len(samples)} diagram rows to {path}.")
    return path


def write_profile_csv(pf: Profile, path: Path) -> Path:
    """Write profile.csv."""
    atomic_write_text(path, _csv_text(["s", "x", "z", "theta", "kappa"], pf.rows()))
    return path


def write_tube_csv(tube: TubeSamples, path: Path) -> Path:
    """Write tube.csv."""
    atomic_write_text(path, _csv_text(["t", "phi", "k1", "k2"], tube.rows()))
    return path


def to_builtin(obj: Any) -> Any:
    """Plain JSON-ready structure; non-finite floats become "inf", "-inf" or "nan"."""
    if isinstance(obj, Mapping):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_builtin(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return obj


_FLOAT_TAG = "\x00float:"
_TAGGED_FLOAT = re.compile(r'"\\u0000float:([^"]*)"')


def _float_text(value: float) -> str:
    text = format(value, ".17g")
    return text if any(ch in text for ch in ".en") else text + ".0"


def _tag_floats(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _tag_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_tag_floats(v) for v in obj]
    if isinstance(obj, float):
        return _FLOAT_TAG + _float_text(obj)
    return obj


def dumps_report(report: Report) -> str:
    """Canonical report.json text with sorted keys and 17-digit floats."""
    data = _tag_floats(to_builtin(report.model_dump(mode="python")))
    text = json.dumps(
        data, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False
    )
    return _TAGGED_FLOAT.sub(r"\1", text) + "\n"


def write_report(report: Report, path: Path) -> Path:
    """Write report.json atomically."""
    atomic_write_text(path, dumps_report(report))
    log.info(f"Wrote report with {len(report.certificates)} certificates to {path}.")
    return path


def load_report(path: Path) -> Dict[str, Any]:
    """Load a report.json as a dict, raising SchemaMismatch on bad input."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise SchemaMismatch(
            f"Cannot read report {path}: {e}", details={"path": str(path)}
        )
    if not isinstance(data, dict) or not {"scenario", "certificates"}.issubset(data):
        raise SchemaMismatch(f"{path} is not a report.", details={"path": str(path)})
    return data


def _dotted(node: Any) -> str:
    if isinstance(node, (list, tuple)):
        return ".".join(str(p) for p in node)
    return str(node)


def _within(old: Any, new: Any, rel: float) -> bool:
    numeric = (int, float)
    if isinstance(old, bool) or isinstance(new, bool):
        return False
    if not (isinstance(old, numeric) and isinstance(new, numeric)):
        return False
    return abs(new - old) <= rel * max(abs(old), abs(new))


def _closure_residual(report: Mapping[str, Any]) -> Optional[float]:
    value = report.get("artifacts", {}).get("closure_residual")
    return float(value) if isinstance(value, (int, float)) else None


def compare_reports(
    a: Mapping[str, Any],
    b: Mapping[str, Any],
    tolerance: float = 0.0,
    field_tolerances: Optional[Mapping[str, float]] = None,
) -> ReportDiff:
    """Field-wise diff of two reports, ignoring the timing field.

    ``field_tolerances`` maps a dotted path prefix to a relative tolerance that
    overrides ``tolerance`` for changed numbers under it.
    """
    kind_a = a.get("scenario", {}).get("kind")
    kind_b = b.get("scenario", {}).get("kind")
    if kind_a is None or kind_a != kind_b:
        raise SchemaMismatch(
            f"Reports have different scenario kinds: {kind_a!r} vs {kind_b!r}.",
            details={"a": kind_a, "b": kind_b},
        )
    overrides = dict(field_tolerances or {})
    entries: List[DiffEntry] = []
    for action, node, change in dictdiffer.diff(
        dict(a), dict(b), ignore={TIMING_FIELD}, tolerance=tolerance
    ):
        path = _dotted(node)
        if action == "change":
            old, new = change
            matching = [
                tol for prefix, tol in overrides.items() if path.startswith(prefix)
            ]
            rel = matching[0] if matching else None
            if rel is not None and _within(old, new, rel):
                continue
            entries.append(DiffEntry(action=action, path=path, old=old, new=new))
        else:
            for key, value in change:
                entries.append(
                    DiffEntry(
                        action=action,
                        path=f"{path}.{key}" if path else str(key),
                        old=value if action == "remove" else None,
                        new=value if action == "add" else None,
                    )
                )
    ratio = None
    if kind_a == "sandglass":
        ra, rb = _closure_residual(a), _closure_residual(b)
        if ra is not None and rb:
            ratio = abs(ra) / abs(rb)
    if entries:
        log.warning(f"Reports drift in {len(entries)} field(s).")
    return ReportDiff(kind=str(kind_a), entries=entries, closure_ratio=ratio)
