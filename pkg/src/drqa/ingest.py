"""CSV input and output for configurations, profiles, and tallies.

All writers quote per RFC 4180 and print floats with ``repr``, so values
round-trip losslessly and repeated runs emit identical bytes.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .agreement import AgreementProfile, RankMovementTally
from .geometry import Configuration


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def ingest_csv(path, has_header: bool = True,
               missing_token: str = "NA") -> Configuration:
    """Read a rectangular numeric CSV into a Configuration.

    Empty cells and ``missing_token`` cells become masked entries.  Row
    labels are taken from the first column when the header names it
    ``id`` or ``label``, or when every entry in that column is
    non-numeric.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path.name}: no rows")

    header = None
    if has_header:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise ValueError(f"{path.name}: header but no data rows")

    width = len(rows[0])
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(
                f"{path.name}: row {r + 1} has {len(row)} fields, "
                f"expected {width}"
            )
    if header is not None and len(header) != width:
        raise ValueError(
            f"{path.name}: header has {len(header)} fields, "
            f"data rows have {width}"
        )

    cells = [[c.strip() for c in row] for row in rows]

    def is_missing(cell: str) -> bool:
        return cell == "" or cell == missing_token

    first_is_label = False
    if width > 1:
        if header is not None and header[0].lower() in ("id", "label"):
            first_is_label = True
        elif all(not is_missing(row[0]) and not _is_number(row[0])
                 for row in cells):
            first_is_label = True

    labels = None
    if first_is_label:
        labels = tuple(row[0] for row in cells)
        cells = [row[1:] for row in cells]
        width -= 1
    if width == 0:
        raise ValueError(f"{path.name}: no data columns")

    items = np.zeros((len(cells), width))
    mask = np.ones((len(cells), width), dtype=bool)
    for r, row in enumerate(cells):
        for c, cell in enumerate(row):
            if is_missing(cell):
                mask[r, c] = False
            elif _is_number(cell):
                items[r, c] = float(cell)
            else:
                col = c + 2 if first_is_label else c + 1
                raise ValueError(
                    f"{path.name}: non-numeric cell {cell!r} at "
                    f"row {r + 1}, column {col}"
                )
    return Configuration(items, labels=labels, mask=mask,
                         provenance=(f"ingested:{path.name}",))


def impute_column_mean(config: Configuration) -> Configuration:
    """Fill masked cells with their column means.

    Fully observed input is returned unchanged.  A column with no
    observed cell has no mean to offer and is rejected by index.
    """
    if config.fully_observed:
        return config
    mask = config.mask
    observed_per_col = mask.sum(axis=0)
    if (observed_per_col == 0).any():
        j = int(np.argmin(observed_per_col))
        raise ValueError(f"column {j} has no observed values to average")
    items = config.items.copy()
    col_sum = np.where(mask, items, 0.0).sum(axis=0)
    means = col_sum / observed_per_col
    rows, cols = np.nonzero(~mask)
    items[rows, cols] = means[cols]
    return Configuration(items, labels=config.labels,
                         provenance=config.provenance + ("imputed:column_mean",))


# ---------------------------------------------------------------------------
# Writers and readers


def _ids(config: Configuration):
    if config.labels is not None:
        return config.labels
    return tuple(str(i) for i in range(config.n))


def write_configuration(config: Configuration, path) -> None:
    """Write items as ``id,dim1..dimk`` rows; masked cells stay empty."""
    path = Path(path)
    mask = config.mask
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["id"] + [f"dim{j + 1}" for j in range(config.m)])
        for i, row_id in enumerate(_ids(config)):
            row = [row_id]
            for j in range(config.m):
                observed = mask is None or mask[i, j]
                row.append(repr(float(config.items[i, j])) if observed else "")
            out.writerow(row)


def write_profile(profile: AgreementProfile, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["k", "agreement", "adjusted_agreement"])
        for k in range(1, profile.n):
            out.writerow([k, repr(float(profile.ar[k - 1])),
                          repr(float(profile.ar_adjusted[k - 1]))])


def read_profile(path) -> AgreementProfile:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["k", "agreement"]:
        raise ValueError(f"{path.name}: not an agreement profile file")
    body = rows[1:]
    ks = [int(r[0]) for r in body]
    if ks != list(range(1, len(ks) + 1)):
        raise ValueError(f"{path.name}: profile rows must cover k = 1..n-1")
    ar = np.array([float(r[1]) for r in body])
    adjusted = np.array([float(r[2]) for r in body])
    return AgreementProfile(len(ks) + 1, ar, adjusted)


def write_per_item(ks, values, path, labels=None) -> None:
    """Write an items-by-k value matrix with one column per k."""
    values = np.asarray(values, dtype=float)
    ks = [int(k) for k in ks]
    if values.ndim != 2 or values.shape[1] != len(ks):
        raise ValueError("values must have one column per k")
    ids = labels if labels is not None else [str(i) for i in range(len(values))]
    path = Path(path)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["id"] + [f"k={k}" for k in ks])
        for row_id, row in zip(ids, values):
            out.writerow([row_id] + [repr(float(v)) for v in row])


def read_per_item(path):
    """Read a per-item value matrix back as ``(ks, values, labels)``."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["id"] or len(rows[0]) < 2:
        raise ValueError(f"{path.name}: not a per-item value file")
    try:
        ks = tuple(int(c.removeprefix("k=")) for c in rows[0][1:])
    except ValueError:
        raise ValueError(f"{path.name}: malformed k columns") from None
    labels = tuple(r[0] for r in rows[1:])
    values = np.array([[float(c) for c in r[1:]] for r in rows[1:]])
    return ks, values, labels


def write_movements(tallies, path) -> None:
    """Write rank-movement tallies, one row per boundary k."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["k", "hard_intrusions", "soft_intrusions",
                      "hard_extrusions", "soft_extrusions",
                      "unchanged", "outside"])
        for t in tallies:
            if not isinstance(t, RankMovementTally):
                raise TypeError("expected RankMovementTally rows")
            out.writerow([t.k, t.hard_intrusions, t.soft_intrusions,
                          t.hard_extrusions, t.soft_extrusions,
                          t.unchanged, t.outside])
