"""Text formats: parameter CSV and config files, data and result CSVs, tables.

Machine-readable floats are written with 17 significant digits, which
round-trips IEEE doubles exactly.
"""
import csv
import io as _io
import sys

import numpy as np

from .estimation import CovMatrix
from .marginals import BEARING_MARGINALS, GenTParams
from .params import (
    ParamVector,
    canonical_order,
    mask_label,
    parse_mask_label,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def fmt(x):
    return f"{x:.17g}"


def _toml_float(x):
    text = fmt(x)
    if not any(ch in text for ch in ".ein"):
        text += ".0"
    return text


def param_label(k, mask, d=None):
    return f"lambda{k}_{mask_label(mask, d)}"


# parameter vectors ---------------------------------------------------------

def params_to_csv(p):
    buf = _io.StringIO()
    buf.write(f"# d={p.d}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "mask", "lambda"])
    for (k, mask), v in p.items():
        w.writerow([k, mask, fmt(v)])
    return buf.getvalue()


def _data_lines(text):
    comments = [ln for ln in text.splitlines() if ln.startswith("#")]
    body = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    return comments, body


def _comment_meta(comments):
    meta = {}
    for ln in comments:
        for part in ln.lstrip("#").replace(",", " ").split():
            if "=" in part:
                key, val = part.split("=", 1)
                meta[key.strip()] = val.strip()
    return meta


def params_from_csv(text, d=None):
    """Parse the ``k,mask,lambda`` layout; absent entries are zero."""
    comments, body = _data_lines(text)
    rows = list(csv.reader(body))
    if not rows or [c.strip() for c in rows[0]] != ["k", "mask", "lambda"]:
        raise FormatError("parameter CSV must start with header 'k,mask,lambda'")
    entries = {}
    try:
        for row in rows[1:]:
            k, mask, val = int(row[0]), int(row[1]), float(row[2])
            entries[(k, mask)] = val
    except (ValueError, IndexError) as exc:
        raise FormatError(f"malformed parameter row: {exc}") from exc
    if d is None:
        meta = _comment_meta(comments)
        if "d" in meta:
            d = int(meta["d"])
        elif entries:
            d = max(m.bit_length() for _, m in entries)
        else:
            raise FormatError("cannot infer the dimension of an empty parameter file")
    return ParamVector.from_dict(d, entries)


def params_to_config(p):
    lines = [f"d = {p.d}"]
    for (k, mask), v in p.items():
        lines.append(f"lambda{k}.{mask_label(mask, p.d)} = {_toml_float(v)}")
    return "\n".join(lines) + "\n"


def params_from_mapping(cfg, d=None):
    """Collect ``lambda1.*`` / ``lambda2.*`` keys from a parsed config."""
    d = int(cfg.get("d", d or 0)) or None
    entries = {}
    for k in (1, 2):
        block = cfg.get(f"lambda{k}", {})
        if not isinstance(block, dict):
            raise FormatError(f"'lambda{k}' must be a dotted section")
        for label, val in block.items():
            entries[(k, parse_mask_label(str(label)))] = float(val)
    if d is None:
        if not entries:
            raise FormatError("config defines neither 'd' nor any coefficient")
        d = max(m.bit_length() for _, m in entries)
    return ParamVector.from_dict(d, entries)


def load_config(path):
    """Read a ``key = value`` config with dotted keys (TOML syntax)."""
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def params_from_config_text(text):
    try:
        return params_from_mapping(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise FormatError(str(exc)) from exc


def read_params(path, d=None):
    """Load a parameter vector from a CSV (``.csv``) or config file."""
    with open(path) as fh:
        text = fh.read()
    if str(path).endswith(".csv"):
        return params_from_csv(text, d)
    return params_from_config_text(text)


def write_params(p, path):
    text = params_to_csv(p) if str(path).endswith(".csv") else params_to_config(p)
    with open(path, "w") as fh:
        fh.write(text)


def marginals_from_mapping(cfg, d=4):
    """``channel.N.a/b/c`` blocks (N = 1..d by column); defaults to the bearing fits."""
    block = cfg.get("channel", {})
    out = []
    for j in range(1, d + 1):
        entry = block.get(str(j))
        if entry is None:
            if j > len(BEARING_MARGINALS):
                raise FormatError(f"no marginal parameters for column {j}")
            out.append(BEARING_MARGINALS[j - 1])
            continue
        try:
            out.append(GenTParams(float(entry["a"]), float(entry["b"]), float(entry["c"])))
        except KeyError as exc:
            raise FormatError(f"channel.{j} is missing {exc}") from exc
    return out


# data ------------------------------------------------------------------------

def sample_to_csv(batch):
    buf = _io.StringIO()
    buf.write(
        f"# seed={batch.seed} n={batch.n} d={batch.d} model={batch.model_hash}\n"
    )
    buf.write(",".join(f"u{j}" for j in range(1, batch.d + 1)) + "\n")
    for row in batch.rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def read_data_csv(path):
    """Numeric matrix from a CSV with a header row; ``#`` lines are skipped.

    Returns
    -------
    header : list of str
    data : ndarray, shape (n, d)
    """
    with open(path) as fh:
        text = fh.read()
    return parse_data_csv(text)


def parse_data_csv(text):
    _, body = _data_lines(text)
    rows = list(csv.reader(body))
    if not rows:
        raise FormatError("data file is empty")
    header = [h.strip() for h in rows[0]]
    try:
        [float(h) for h in header]
    except ValueError:
        pass
    else:
        raise FormatError("data CSV requires a header row")
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(f"row {lineno} has {len(row)} fields, expected {len(header)}")
        try:
            values.append([float(c) for c in row])
        except ValueError as exc:
            raise FormatError(f"non-numeric cell in row {lineno}: {exc}") from exc
    if not values:
        raise FormatError("data file has no rows")
    return header, np.array(values)


def estimates_to_csv(res):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "mask", "lambda", "se", "pvalue"])
    for k, mask, est, se, pv in res.rows():
        w.writerow([k, mask, fmt(est), fmt(se), fmt(pv)])
    return buf.getvalue()


def covariance_to_csv(cov):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"{k}:{mask}" for k, mask in cov.order])
    for row in cov.matrix:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def covariance_from_csv(text):
    rows = list(csv.reader(text.strip().splitlines()))
    order = tuple(tuple(int(x) for x in h.split(":")) for h in rows[0])
    return CovMatrix(order, np.array([[float(v) for v in r] for r in rows[1:]]))


# tables ----------------------------------------------------------------------

def table_csv(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def table_md(header, rows, digits=4):
    def cell(v):
        if isinstance(v, (float, np.floating)):
            return f"{v:.{digits}g}" if abs(v) >= 1e-3 or v == 0 else f"{v:.2e}"
        return str(v)

    cells = [[str(h) for h in header]] + [[cell(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["| " + " | ".join(c.rjust(w) for c, w in zip(r, widths)) + " |" for r in cells]
    lines.insert(1, "|" + "|".join("-" * (w + 2) for w in widths) + "|")
    return "\n".join(lines) + "\n"


def study_table_rows(table):
    labels = [param_label(k, m, table.d) for k, m in canonical_order(table.d)]
    header = ["parameter", "truth"] + [f"n={n}" for n in table.sizes]
    rows = [
        [lab, float(t)] + [float(v) for v in vals]
        for lab, t, vals in zip(labels, table.truth, table.values)
    ]
    return header, rows
