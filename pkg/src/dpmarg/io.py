"""File ingestion: attribute databases as CSV, query distributions as JSON."""

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .queries import (
    MarginalQuery,
    QueryDistribution,
    RowDatabase,
    lift_distribution,
    uniform_marginal_distribution,
)


def save_database_csv(db: RowDatabase, path):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"a{i}" for i in range(1, db.d + 1)])
        for row in db.rows:
            writer.writerow([int(v) for v in row])


def load_database_csv(path, zero_one: bool = False) -> RowDatabase:
    """Read a CSV of n rows and d integer columns valued -1/+1.

    With zero_one=True the file may use 0/1 instead and 0 is remapped to -1.
    A non-numeric first row is treated as a header.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"{path} is empty; expected at least a header")
    start = 0
    try:
        [int(c) for c in rows[0]]
    except ValueError:
        start = 1
    data = []
    width = None
    for r in rows[start:]:
        try:
            vals = [int(c) for c in r]
        except ValueError as exc:
            raise ValidationError(f"non-integer database entry in {path}: {exc}") from exc
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ValidationError("rows of unequal length")
        data.append(vals)
    if not data:
        if start == 1:
            ncols = len(rows[0])
            return RowDatabase(np.zeros((0, ncols), dtype=np.int8))
        raise ValidationError(f"{path} has no data rows")
    arr = np.array(data, dtype=np.int64)
    if zero_one:
        bad = ~np.isin(arr, (0, 1))
        if bad.any():
            raise ValidationError("entries must be 0/1 under --zero-one")
        arr = np.where(arr == 0, -1, 1)
    return RowDatabase(arr.astype(np.int8))


def load_distribution_json(path_or_dict, d: int):
    """Parse a marginal-query distribution spec and its lift to parities.

    Accepted forms:
      {"type": "uniform_k_subsets", "k": 2}
      {"type": "explicit", "k": 2,
       "entries": [{"S": [1,2], "beta": [1,-1], "weight": 0.5}, ...]}

    Returns (marginal_weights, parity_distribution).
    """
    if isinstance(path_or_dict, (str, Path)):
        with open(path_or_dict) as fh:
            spec = json.load(fh)
    else:
        spec = dict(path_or_dict)
    kind = spec.get("type")
    if kind == "uniform_k_subsets":
        k = int(spec["k"])
        if not 1 <= k <= d:
            raise ValidationError(f"k={k} invalid for d={d}")
        marg = uniform_marginal_distribution(d, k)
    elif kind == "explicit":
        entries = spec.get("entries")
        if not entries:
            raise ValidationError("explicit distribution needs a nonempty 'entries' list")
        k = int(spec.get("k", len(entries[0]["S"])))
        marg = {}
        for ent in entries:
            mq = MarginalQuery(tuple(ent["S"]), tuple(ent["beta"]))
            if mq.k != k:
                raise ValidationError(f"entry {ent} does not have k={k}")
            if max(mq.S) > d:
                raise ValidationError(f"entry {ent} references attribute > d={d}")
            w = float(ent["weight"])
            if w < 0:
                raise ValidationError("weights must be nonnegative")
            marg[mq] = marg.get(mq, 0.0) + w
        total = sum(marg.values())
        if total <= 0:
            raise ValidationError("weights sum to zero")
        marg = {mq: w / total for mq, w in marg.items()}
    else:
        raise ValidationError(f"unknown distribution type {kind!r}")
    return marg, lift_distribution(marg, k)
