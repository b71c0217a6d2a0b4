"""Group vocabulary: the catalog of donor / bridge / acceptor groups and
connector modes, with their conjugation and descriptor weight vectors.

The vocabulary lives in a hand-editable sectioned text file (see
``docs/formats.md``).  A bundled default ships with the package; widths are
pinned to the 7 / 9 / 11 region layout the evolutionary genome uses unless
the caller explicitly widens them.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path

from .errors import VocabularyError

REGION_NAMES = ("donors", "bridges", "acceptors")
STANDARD_REGION_WIDTHS = {"donors": 7, "bridges": 9, "acceptors": 11}
N_CONNECTORS = 3
SCHEMA_VERSION = "nlodesign-vocab-1"


@dataclass(frozen=True)
class GroupDef:
    """One donor, bridge or acceptor group.

    conj_weight counts conjugated-double-bond equivalents; des_weights is
    the group's row of the descriptor weight matrix; g_weights is its row
    of the second-order sub-group count matrix (non-negative integers).
    """

    name: str
    conj_weight: float
    des_weights: tuple[float, ...]
    g_weights: tuple[int, ...]

    def __post_init__(self):
        if self.conj_weight < 0:
            raise VocabularyError(f"group {self.name!r}: conj_weight must be >= 0")
        if any(g < 0 or int(g) != g for g in self.g_weights):
            raise VocabularyError(
                f"group {self.name!r}: g_weights must be non-negative integers"
            )


@dataclass(frozen=True)
class ConnectorDef:
    """A connector mode between regions (double bond, ring fusion, triple bond)."""

    name: str
    conj_weight: float

    def __post_init__(self):
        if self.conj_weight < 0:
            raise VocabularyError(f"connector {self.name!r}: conj_weight must be >= 0")


@dataclass(frozen=True)
class GroupVocabulary:
    """Immutable group catalog; safe to share across concurrent tasks."""

    donors: tuple[GroupDef, ...]
    bridges: tuple[GroupDef, ...]
    acceptors: tuple[GroupDef, ...]
    connectors: tuple[ConnectorDef, ...]
    des_columns: dict[str, tuple[str, ...]] = field(default_factory=dict)
    g_columns: dict[str, tuple[str, ...]] = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def region(self, name: str) -> tuple[GroupDef, ...]:
        if name not in REGION_NAMES:
            raise KeyError(name)
        return getattr(self, name)

    @property
    def region_widths(self) -> dict[str, int]:
        return {name: len(self.region(name)) for name in REGION_NAMES}

    @property
    def des_width(self) -> int:
        """Total descriptor width across regions (order: acceptors, bridges, donors)."""
        return sum(len(self.des_columns[r]) for r in REGION_NAMES)

    @property
    def g_width(self) -> int:
        return sum(len(self.g_columns[r]) for r in REGION_NAMES)

    def validate(self, strict_widths: bool = True) -> None:
        if strict_widths:
            for region, want in STANDARD_REGION_WIDTHS.items():
                got = len(self.region(region))
                if got != want:
                    raise VocabularyError(
                        f"region {region!r} has {got} groups, expected {want} "
                        "(pass allow_nonstandard_widths to override)"
                    )
        if len(self.connectors) != N_CONNECTORS:
            raise VocabularyError(
                f"expected exactly {N_CONNECTORS} connectors, got {len(self.connectors)}"
            )
        for region in REGION_NAMES:
            groups = self.region(region)
            names = [g.name for g in groups]
            dupes = {n for n in names if names.count(n) > 1}
            if dupes:
                raise VocabularyError(f"duplicate group name(s) in {region}: {sorted(dupes)}")
            des_w = len(self.des_columns.get(region, ()))
            g_w = len(self.g_columns.get(region, ()))
            for g in groups:
                if len(g.des_weights) != des_w:
                    raise VocabularyError(
                        f"{region}/{g.name}: des_weights width {len(g.des_weights)} != "
                        f"declared {des_w}"
                    )
                if len(g.g_weights) != g_w:
                    raise VocabularyError(
                        f"{region}/{g.name}: g_weights width {len(g.g_weights)} != "
                        f"declared {g_w}"
                    )
        conn_names = [c.name for c in self.connectors]
        if len(set(conn_names)) != len(conn_names):
            raise VocabularyError(f"duplicate connector name(s): {conn_names}")


def _parse_row(line: str, region: str, des_w: int, g_w: int) -> GroupDef:
    parts = [p.strip() for p in line.split("|")]
    if len(parts) != 3:
        raise VocabularyError(
            f"{region}: expected 'name conj | des... | g...' in row {line!r}"
        )
    head = parts[0].split()
    if len(head) != 2:
        raise VocabularyError(f"{region}: bad 'name conj' field in row {line!r}")
    name, conj = head[0], float(head[1])
    des = tuple(float(v) for v in parts[1].split())
    g_raw = parts[2].split()
    try:
        g = tuple(int(v) for v in g_raw)
    except ValueError as exc:
        raise VocabularyError(f"{region}/{name}: g_weights must be integers") from exc
    if len(des) != des_w or len(g) != g_w:
        raise VocabularyError(
            f"{region}/{name}: row widths ({len(des)} des, {len(g)} g) do not match "
            f"header ({des_w} des, {g_w} g)"
        )
    return GroupDef(name, conj, des, g)


def load_vocabulary(path: str | Path, allow_nonstandard_widths: bool = False) -> GroupVocabulary:
    """Parse a vocabulary file.  Deterministic: same bytes, same vocabulary."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise VocabularyError(f"cannot read vocabulary file {path}: {exc}") from exc
    header: dict[str, str] = {}
    rows: dict[str, list[str]] = {r: [] for r in (*REGION_NAMES, "connectors")}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        # full-line comments only: group names may legitimately contain '#'
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in ("header", *rows):
                raise VocabularyError(f"line {lineno}: unknown section [{section}]")
            continue
        if section == "header":
            if "=" not in line:
                raise VocabularyError(f"line {lineno}: expected 'key = value' in header")
            key, _, value = line.partition("=")
            header[key.strip()] = value.strip()
        elif section is not None:
            rows[section].append(line)
        else:
            raise VocabularyError(f"line {lineno}: content before any section")
    if not header and not any(rows.values()):
        raise VocabularyError(f"{path}: empty vocabulary file")
    version = header.get("schema_version", "")
    if version != SCHEMA_VERSION:
        raise VocabularyError(f"unsupported schema_version {version!r}")

    des_columns: dict[str, tuple[str, ...]] = {}
    g_columns: dict[str, tuple[str, ...]] = {}
    for region in REGION_NAMES:
        des_columns[region] = tuple(header.get(f"{region}.des", "").split())
        g_columns[region] = tuple(header.get(f"{region}.g", "").split())

    regions: dict[str, tuple[GroupDef, ...]] = {}
    for region in REGION_NAMES:
        des_w, g_w = len(des_columns[region]), len(g_columns[region])
        regions[region] = tuple(
            _parse_row(line, region, des_w, g_w) for line in rows[region]
        )
    connectors = []
    for line in rows["connectors"]:
        fields = line.split()
        if len(fields) != 2:
            raise VocabularyError(f"connectors: expected 'name conj' in row {line!r}")
        connectors.append(ConnectorDef(fields[0], float(fields[1])))

    vocab = GroupVocabulary(
        donors=regions["donors"],
        bridges=regions["bridges"],
        acceptors=regions["acceptors"],
        connectors=tuple(connectors),
        des_columns=des_columns,
        g_columns=g_columns,
        schema_version=version,
    )
    vocab.validate(strict_widths=not allow_nonstandard_widths)
    return vocab


def save_vocabulary(vocab: GroupVocabulary, path: str | Path) -> None:
    """Write the sectioned text form; load_vocabulary(save) is the identity."""
    lines = ["[header]", f"schema_version = {vocab.schema_version}"]
    for region in REGION_NAMES:
        lines.append(f"{region}.des = {' '.join(vocab.des_columns[region])}")
        lines.append(f"{region}.g = {' '.join(vocab.g_columns[region])}")
    for region in REGION_NAMES:
        lines.append("")
        lines.append(f"[{region}]")
        for g in vocab.region(region):
            des = " ".join(repr(v) for v in g.des_weights)
            gw = " ".join(str(v) for v in g.g_weights)
            lines.append(f"{g.name} {g.conj_weight!r} | {des} | {gw}")
    lines.append("")
    lines.append("[connectors]")
    for c in vocab.connectors:
        lines.append(f"{c.name} {c.conj_weight!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def default_vocabulary_path() -> Path:
    """Path of the bundled default vocabulary (7 donors, 9 bridges, 11 acceptors)."""
    return Path(importlib.resources.files("nlodesign") / "assets" / "vocabulary.txt")


def load_default_vocabulary() -> GroupVocabulary:
    return load_vocabulary(default_vocabulary_path())
