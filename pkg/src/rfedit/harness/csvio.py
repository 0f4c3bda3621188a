"""CSV emission with lossless float formatting and fixed line endings."""

import csv
import io
import math
from dataclasses import astuple, dataclass, fields

from ..errors import ParseError


@dataclass(frozen=True)
class ResultRow:
    method: str
    seed: int
    T: int
    NFE: int
    terminal_mse: float = None
    background_mse: float = None
    target_loglik: float = None
    eta: float = None
    flags: str = ""
    wall_time_ms: float = None


RESULT_COLUMNS = tuple(f.name for f in fields(ResultRow))
CURVE_COLUMNS = ("method", "seed", "t", "sigma", "mse")


def fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def render(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def write_csv(path, columns, rows):
    text = render(columns, rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text


def write_results(path, rows):
    return write_csv(path, RESULT_COLUMNS, [astuple(r) for r in rows])


def read_curves(paths):
    """Load curve rows ``(method, seed, t, sigma, mse)`` from one or more CSVs."""
    out = []
    for path in paths:
        try:
            with open(path, encoding="utf-8", newline="") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if header is None:
                    continue
                if tuple(header) != CURVE_COLUMNS:
                    raise ParseError(f"expected header {','.join(CURVE_COLUMNS)}", f"{path}: line 1")
                for lineno, rec in enumerate(reader, start=2):
                    if not rec:
                        continue
                    if len(rec) != len(CURVE_COLUMNS):
                        raise ParseError(f"expected {len(CURVE_COLUMNS)} fields, got {len(rec)}", f"{path}: line {lineno}")
                    try:
                        out.append((rec[0], int(rec[1]), int(rec[2]), float(rec[3]), float(rec[4])))
                    except ValueError as e:
                        raise ParseError(str(e), f"{path}: line {lineno}") from None
        except OSError as e:
            raise ParseError(e.strerror or str(e), str(path)) from None
    return out
