"""File formats: genotype TSV, family and strata tables, CSV outputs, manifests.

All writers are atomic (temp file in the target directory, then rename) and
deterministic: fixed column orders, repr-formatted floats (shortest
round-trip), no timestamps. The genotype format is a UTF-8 TSV whose first
row holds individual ids (after a corner label) and whose first column holds
SNP ids; cells are 0, 1, 2 or NA.
"""

import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ParseError, StratumMismatch, UnknownId
from .model import (
    MISSING,
    ROW_STANDARDIZED,
    FamilyStructure,
    GenotypeMatrix,
    ScaledMatrix,
)

NA_TOKEN = "NA"
NO_FAMILY = "."

_CELL = {"0": 0, "1": 1, "2": 2, NA_TOKEN: MISSING}
_TOKEN = {0: "0", 1: "1", 2: "2", MISSING: NA_TOKEN}


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_bytes(path, data):
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x):
    """Shortest round-trip decimal form of a float."""
    return repr(float(x))


# === genotype TSV ===


def write_genotypes(G, path):
    lines = ["snp_id\t" + "\t".join(G.individual_ids)]
    for i, snp in enumerate(G.snp_ids):
        row = G.values[i]
        lines.append(snp + "\t" + "\t".join(_TOKEN[int(v)] for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_genotypes(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise ParseError(f"{path}: empty genotype file")
        cols = header.rstrip("\n").split("\t")
        if len(cols) < 2:
            raise ParseError(f"{path}: header must name at least one individual")
        individual_ids = tuple(cols[1:])
        n = len(individual_ids)
        snp_ids = []
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != n + 1:
                raise ParseError(
                    f"{path}:{lineno}: expected {n + 1} fields, got {len(fields)}"
                )
            snp_ids.append(fields[0])
            try:
                rows.append([_CELL[c] for c in fields[1:]])
            except KeyError as e:
                raise ParseError(
                    f"{path}:{lineno}: bad genotype cell {e.args[0]!r} "
                    f"(expected 0, 1, 2 or {NA_TOKEN})"
                ) from None
    values = np.array(rows, dtype=np.int8).reshape(len(snp_ids), n)
    return GenotypeMatrix(values, tuple(snp_ids), individual_ids)


def write_scaled_tsv(S, path):
    """Scaled matrix in the genotype TSV layout with float cells."""
    lines = ["snp_id\t" + "\t".join(S.individual_ids)]
    for i, snp in enumerate(S.snp_ids):
        lines.append(snp + "\t" + "\t".join(fmt(v) for v in S.values[i]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_scaled_tsv(path, kind=ROW_STANDARDIZED):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise ParseError(f"{path}: empty scaled-matrix file")
        cols = header.rstrip("\n").split("\t")
        if len(cols) < 2 or cols[0] != "snp_id":
            raise ParseError(f"{path}: expected snp_id<TAB>individual ids header")
        individual_ids = tuple(cols[1:])
        n = len(individual_ids)
        snp_ids = []
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != n + 1:
                raise ParseError(
                    f"{path}:{lineno}: expected {n + 1} fields, got {len(fields)}"
                )
            snp_ids.append(fields[0])
            try:
                rows.append([float(v) for v in fields[1:]])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad scaled value") from None
    values = np.array(rows, dtype=np.float64).reshape(len(snp_ids), n)
    return ScaledMatrix(values, kind, tuple(snp_ids), individual_ids)


# === family and strata tables ===


def write_family_file(fam, individual_ids, path):
    """Two-column TSV: individual_id, family_id ('.' for singletons).

    Representatives are not persisted; they are recomputed from data when
    needed.
    """
    family_names = _family_names(fam.n_families)
    by_individual = {}
    for k, members in enumerate(fam.families):
        for j in members:
            by_individual[j] = family_names[k]
    lines = ["individual_id\tfamily_id"]
    for j, ind in enumerate(individual_ids):
        lines.append(f"{ind}\t{by_individual.get(j, NO_FAMILY)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def _family_names(count):
    width = max(3, len(str(count)))
    return [f"F{k + 1:0{width}d}" for k in range(count)]


def read_family_file(path, individual_ids):
    """Parse a family table against a known individual ordering.

    Individuals absent from the file (or mapped to '.') are singletons;
    groups that end up with a single listed member are treated as
    singletons too. Unknown ids raise UnknownId.
    """
    fam, _ = read_family_groups(path, individual_ids)
    return fam


def read_family_groups(path, individual_ids):
    """read_family_file plus the {family_id: member indices} mapping."""
    index = {ind: j for j, ind in enumerate(individual_ids)}
    groups = {}
    seen = set()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header.split("\t")[:2] != ["individual_id", "family_id"]:
            raise ParseError(f"{path}: expected header individual_id<TAB>family_id")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 fields")
            ind, famid = fields
            if ind not in index:
                raise UnknownId(f"{path}:{lineno}: unknown individual id {ind!r}")
            if ind in seen:
                raise ParseError(f"{path}:{lineno}: duplicate individual id {ind!r}")
            seen.add(ind)
            if famid != NO_FAMILY:
                groups.setdefault(famid, []).append(index[ind])
    families = [m for _, m in sorted(groups.items()) if len(m) >= 2]
    fam = FamilyStructure(len(individual_ids), families)
    return fam, {famid: tuple(sorted(m)) for famid, m in groups.items()}


def write_strata(labels, individual_ids, path):
    lines = ["individual_id,stratum"]
    for ind, lab in zip(individual_ids, labels):
        lines.append(f"{ind},{lab}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_strata(path, individual_ids):
    index = {ind: j for j, ind in enumerate(individual_ids)}
    labels = [None] * len(individual_ids)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header.split(",")[:2] != ["individual_id", "stratum"]:
            raise ParseError(f"{path}: expected header individual_id,stratum")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 fields")
            ind, lab = fields
            if ind not in index:
                raise UnknownId(f"{path}:{lineno}: unknown individual id {ind!r}")
            labels[index[ind]] = lab
    missing = [individual_ids[j] for j, lab in enumerate(labels) if lab is None]
    if missing:
        raise StratumMismatch(
            f"{path}: no stratum for {len(missing)} individual(s), "
            f"first missing {missing[0]!r}"
        )
    return np.array(labels, dtype=object)


# === scores, values, edges, metrics ===


def write_scores_csv(ids, scores, path):
    k = scores.shape[1]
    header = "individual_id" + "".join(f",score_{l + 1}" for l in range(k))
    lines = [header]
    for j, ind in enumerate(ids):
        lines.append(ind + "".join("," + fmt(v) for v in scores[j]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_scores_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if not header or header[0] != "individual_id":
            raise ParseError(f"{path}: expected individual_id,score_1,... header")
        k = len(header) - 1
        ids = []
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != k + 1:
                raise ParseError(f"{path}:{lineno}: expected {k + 1} fields")
            ids.append(fields[0])
            try:
                rows.append([float(v) for v in fields[1:]])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad score value") from None
    return tuple(ids), np.array(rows, dtype=np.float64).reshape(len(ids), k)


def write_values_csv(values, path):
    lines = ["component,value"]
    for l, v in enumerate(values):
        lines.append(f"{l + 1},{fmt(v)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_values_csv(path):
    values = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != "component,value":
            raise ParseError(f"{path}: expected header component,value")
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 fields")
            try:
                values.append(float(fields[1]))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad value") from None
    return np.array(values, dtype=np.float64)


def write_edges_csv(edges, individual_ids, path):
    """edges: iterable of (j1, j2, corr) index pairs with j1 < j2."""
    lines = ["id1,id2,corr"]
    for j1, j2, c in edges:
        lines.append(f"{individual_ids[j1]},{individual_ids[j2]},{fmt(c)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_table_csv(header, rows, path):
    """Generic CSV writer; cells are written as given (floats via fmt)."""
    lines = [",".join(header)]
    for row in rows:
        cells = [fmt(c) if isinstance(c, float) else str(c) for c in row]
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_matrix_csv(row_labels, col_labels, values, path):
    """Labeled matrix CSV: header ',col...', one labeled row per line.

    NaN cells are written empty.
    """
    lines = ["," + ",".join(col_labels)]
    for r, label in enumerate(row_labels):
        cells = [
            "" if math.isnan(values[r][c]) else fmt(float(values[r][c]))
            for c in range(len(col_labels))
        ]
        lines.append(label + "," + ",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_matrix_csv(path):
    """Inverse of write_matrix_csv: (row_labels, col_labels, (r, c) array)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if len(header) < 2 or header[0] != "":
            raise ParseError(f"{path}: expected a leading empty header cell")
        col_labels = header[1:]
        row_labels = []
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != len(col_labels) + 1:
                raise ParseError(
                    f"{path}:{lineno}: expected {len(col_labels) + 1} fields"
                )
            row_labels.append(fields[0])
            try:
                rows.append(
                    [float(v) if v else float("nan") for v in fields[1:]]
                )
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad matrix value") from None
    values = np.array(rows, dtype=np.float64).reshape(
        len(row_labels), len(col_labels)
    )
    return tuple(row_labels), tuple(col_labels), values


# === flat key=value config ===


def read_config(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key:
                raise ParseError(f"{path}:{lineno}: empty key")
            if key in out:
                raise ParseError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = value
    return out


# === run manifests ===


@dataclass
class RunManifest:
    """Reproducibility record written next to every CLI output set."""

    subcommand: str
    version: str
    seed: int | None
    config_hash: str
    parameters: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)


def write_manifest(manifest, path):
    text = json.dumps(asdict(manifest), sort_keys=True, indent=2) + "\n"
    atomic_write_text(path, text)


def read_manifest(path):
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        return RunManifest(**raw)
    except TypeError as e:
        raise ParseError(f"{path}: not a run manifest ({e})") from None
