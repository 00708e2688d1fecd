"""Versioned artifact files: delimited tables and structured JSON documents.

Every artifact starts with a kind/version header; readers fail loudly on a
mismatch. Floats are written with ``repr`` so a read-back is bit-exact.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ArtifactError
from .ingest import CleaningLog, CodedMatrix, MixedTable
from .scaling import CategoryPoint, ScalingSolution

ARTIFACT_VERSION = 1
_MAGIC = "# homclust-artifact"


def fmt(value: object) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    return str(value)


def parse_bool(cell: str) -> bool:
    if cell == "true":
        return True
    if cell == "false":
        return False
    raise ArtifactError(f"invalid boolean cell {cell!r}")


def write_table(
    path: Path,
    kind: str,
    header: Sequence[str],
    rows: Iterable[Sequence[object]],
    meta: Mapping | None = None,
    *,
    delimiter: str = ",",
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write(f"{_MAGIC} kind={kind} version={ARTIFACT_VERSION}\n")
    buf.write("# meta=" + json.dumps(meta or {}, sort_keys=True, separators=(",", ":")) + "\n")
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def read_table(
    path: Path, kind: str, *, delimiter: str = ","
) -> tuple[dict, list[str], list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"artifact {path} does not exist")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith(_MAGIC):
            raise ArtifactError(f"{path} is not a homclust artifact")
        fields = dict(p.split("=", 1) for p in first[len(_MAGIC) :].split() if "=" in p)
        if fields.get("kind") != kind:
            raise ArtifactError(f"{path} holds {fields.get('kind')!r}, expected {kind!r}")
        if int(fields.get("version", -1)) != ARTIFACT_VERSION:
            raise ArtifactError(
                f"{path} has artifact version {fields.get('version')}, "
                f"this build reads version {ARTIFACT_VERSION}"
            )
        meta_line = fh.readline().rstrip("\n")
        if not meta_line.startswith("# meta="):
            raise ArtifactError(f"{path} is missing its meta line")
        meta = json.loads(meta_line[len("# meta=") :])
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader)
        rows = [row for row in reader]
    return meta, header, rows


def write_json_artifact(path: Path, kind: str, payload: Mapping) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"artifact": kind, "version": ARTIFACT_VERSION, **payload}
    path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def read_json_artifact(path: Path, kind: str) -> dict:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"artifact {path} does not exist")
    doc = json.loads(path.read_text("utf-8"))
    if doc.get("artifact") != kind:
        raise ArtifactError(f"{path} holds {doc.get('artifact')!r}, expected {kind!r}")
    if doc.get("version") != ARTIFACT_VERSION:
        raise ArtifactError(f"{path} has version {doc.get('version')}, expected {ARTIFACT_VERSION}")
    return doc


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# cleaned table

def write_cleaned_table(path: Path, table: MixedTable) -> Path:
    numeric = list(table.numeric.keys())
    categorical = list(table.categorical.keys())
    header = ["id", *numeric, *categorical]
    rows = []
    for i in range(table.n_rows):
        row: list[object] = [table.ids[i]]
        row += [float(table.numeric[c][i]) for c in numeric]
        row += [table.categorical[c][i] for c in categorical]
        rows.append(row)
    meta = {
        "numeric": numeric,
        "categorical": categorical,
        "roles": {c: table.roles[c] for c in numeric + categorical},
    }
    return write_table(path, "cleaned-table", header, rows, meta)


def read_cleaned_table(path: Path) -> MixedTable:
    meta, header, rows = read_table(path, "cleaned-table")
    numeric = meta["numeric"]
    categorical = meta["categorical"]
    idx = {name: header.index(name) for name in header}
    ids = [r[idx["id"]] for r in rows]
    table = MixedTable(
        ids=ids,
        numeric={
            c: np.array([float(r[idx[c]]) for r in rows], dtype=float) for c in numeric
        },
        categorical={c: [r[idx[c]] for r in rows] for c in categorical},
        roles=dict(meta["roles"]),
    )
    table.validate()
    return table


def write_cleaning_log(path: Path, log: CleaningLog) -> Path:
    return write_json_artifact(path, "cleaning-log", {"counts": log.to_dict()})


def read_cleaning_log(path: Path) -> CleaningLog:
    doc = read_json_artifact(path, "cleaning-log")
    return CleaningLog(**doc["counts"])


# ---------------------------------------------------------------------------
# coded matrix

def write_coded_matrix(path: Path, coded: CodedMatrix) -> Path:
    header = ["id", *coded.variables]
    rows = [
        [coded.ids[i], *[int(v) for v in coded.codes[i]]] for i in range(coded.n_rows)
    ]
    meta = {
        "variables": coded.variables,
        "kinds": coded.kinds,
        "level_counts": coded.level_counts,
        "level_labels": coded.level_labels,
    }
    return write_table(path, "coded-matrix", header, rows, meta)


def read_coded_matrix(path: Path) -> CodedMatrix:
    meta, header, rows = read_table(path, "coded-matrix")
    variables = meta["variables"]
    idx = {name: header.index(name) for name in header}
    codes = np.array(
        [[int(r[idx[v]]) for v in variables] for r in rows], dtype=int
    )
    coded = CodedMatrix(
        ids=[r[idx["id"]] for r in rows],
        variables=list(variables),
        codes=codes,
        kinds=list(meta["kinds"]),
        level_counts=[int(k) for k in meta["level_counts"]],
        level_labels=[list(l) for l in meta["level_labels"]],
    )
    coded.validate()
    return coded


# ---------------------------------------------------------------------------
# scaling solution

def write_object_scores(path: Path, ids: Sequence[str], X: np.ndarray, meta: Mapping) -> Path:
    p = X.shape[1]
    header = ["id", *[f"dim{d + 1}" for d in range(p)]]
    rows = [[ids[i], *[float(x) for x in X[i]]] for i in range(X.shape[0])]
    return write_table(path, "object-scores", header, rows, meta)


def read_object_scores(path: Path) -> tuple[list[str], np.ndarray, dict]:
    meta, header, rows = read_table(path, "object-scores")
    dims = [h for h in header if h.startswith("dim")]
    ids = [r[0] for r in rows]
    X = np.array([[float(r[header.index(d)]) for d in dims] for r in rows], dtype=float)
    return ids, X, meta


def write_category_points(path: Path, points: Sequence[CategoryPoint]) -> Path:
    if not points:
        raise ArtifactError("no category points to write")
    p = len(points[0].coords)
    header = ["variable", "level", "label", *[f"dim{d + 1}" for d in range(p)], "ordinal"]
    rows = [
        [pt.variable, pt.level, pt.label, *[float(c) for c in pt.coords], pt.ordinal]
        for pt in points
    ]
    return write_table(path, "category-points", header, rows, {"p": p})


def read_category_points(path: Path) -> list[CategoryPoint]:
    meta, header, rows = read_table(path, "category-points")
    p = int(meta["p"])
    out = []
    for r in rows:
        out.append(
            CategoryPoint(
                variable=r[0],
                level=int(r[1]),
                label=r[2],
                coords=tuple(float(x) for x in r[3 : 3 + p]),
                ordinal=parse_bool(r[3 + p]),
            )
        )
    return out


def write_loss_history(path: Path, history: Sequence[float]) -> Path:
    rows = [[i + 1, float(v)] for i, v in enumerate(history)]
    return write_table(path, "loss-history", ["iteration", "loss"], rows, {})


def read_loss_history(path: Path) -> list[float]:
    _, _, rows = read_table(path, "loss-history")
    return [float(r[1]) for r in rows]


def scaling_meta_payload(solution: ScalingSolution) -> dict:
    return {
        "p": solution.p,
        "seed": solution.seed,
        "converged": solution.converged,
        "final_loss": solution.final_loss,
        "iterations": len(solution.loss_history),
        "variables": solution.variables,
        "kinds": solution.kinds,
    }


# ---------------------------------------------------------------------------
# partitions

def write_partition_labels(path: Path, ids: Sequence[str], labels: np.ndarray, meta: Mapping) -> Path:
    rows = [[ids[i], int(labels[i])] for i in range(len(ids))]
    return write_table(path, "partition-labels", ["id", "cluster"], rows, meta)


def read_partition_labels(path: Path) -> tuple[list[str], np.ndarray, dict]:
    meta, header, rows = read_table(path, "partition-labels")
    ids = [r[0] for r in rows]
    labels = np.array([int(r[1]) for r in rows], dtype=int)
    return ids, labels, meta


def write_memberships(path: Path, ids: Sequence[str], U: np.ndarray, meta: Mapping) -> Path:
    k = U.shape[1]
    header = ["id", *[f"cluster{c + 1}" for c in range(k)]]
    rows = [[ids[i], *[float(u) for u in U[i]]] for i in range(U.shape[0])]
    return write_table(path, "partition-memberships", header, rows, meta)


def read_memberships(path: Path) -> tuple[list[str], np.ndarray]:
    _, header, rows = read_table(path, "partition-memberships")
    ids = [r[0] for r in rows]
    U = np.array([[float(x) for x in r[1:]] for r in rows], dtype=float)
    return ids, U


# ---------------------------------------------------------------------------
# model selection

def write_selection_grid(path: Path, entries, meta: Mapping) -> Path:
    header = ["method", "k", "avg_silhouette", "converged"]
    rows = []
    for e in entries:
        sil = "" if e.avg_silhouette is None else float(e.avg_silhouette)
        rows.append([e.method, e.k, sil, e.converged])
    return write_table(path, "selection-grid", header, rows, meta)


def read_selection_grid(path: Path) -> tuple[dict, list[dict]]:
    meta, header, rows = read_table(path, "selection-grid")
    out = []
    for r in rows:
        out.append(
            {
                "method": r[0],
                "k": int(r[1]),
                "avg_silhouette": None if r[2] == "" else float(r[2]),
                "converged": parse_bool(r[3]),
            }
        )
    return meta, out
