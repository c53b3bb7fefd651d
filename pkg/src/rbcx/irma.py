"""IRMA codes, the hierarchical code error and run-level evaluation.

An IRMA code ``TTTT-DDD-AAA-BBB`` has four axes (technical, directional,
anatomical, biological). The error between a true and a predicted axis
string walks the positions left to right::

    raw = sum_i delta_i / (b_i * i)

with ``delta_i`` 0 for a match, 0.5 for a wildcard ``*`` and 1 for a
mismatch; once a position is mismatched every later position counts as
mismatched. ``b_i`` is the branching factor at position ``i`` (1-based).
Each axis is divided by its all-wrong value so it lies in [0, 1], and the
code error is the mean over the four axes.
"""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path

from .errors import IrmaParseError, ValidationError

AXIS_LENGTHS = (4, 3, 3, 3)
AXIS_NAMES = ("technical", "directional", "anatomical", "biological")
AXIS_KEYS = ("T", "D", "A", "B")
CODE_LENGTH = sum(AXIS_LENGTHS)
WILDCARD = "*"
DEFAULT_BRANCHING = 10


@dataclass(frozen=True)
class IrmaCode:
    axes: tuple[str, str, str, str]

    @property
    def compact(self) -> str:
        return "".join(self.axes)

    def __str__(self):
        return "-".join(self.axes)


def _check_chars(text: str, offset: int = 0) -> None:
    for i, ch in enumerate(text):
        if not (ch.isascii() and ch.isalnum()) and ch != WILDCARD:
            raise IrmaParseError(f"illegal character {ch!r} in IRMA code", offset + i)


def parse_code(text: str) -> IrmaCode:
    """Parse ``TTTT-DDD-AAA-BBB`` or its 13-character unseparated form."""
    raw = text
    text = text.strip()
    lead = len(raw) - len(raw.lstrip())
    if "-" in text:
        groups = text.split("-")
        if len(groups) != len(AXIS_LENGTHS):
            raise IrmaParseError(
                f"expected 4 hyphen-separated groups, got {len(groups)} in {raw!r}"
            )
        pos = lead
        for group, want in zip(groups, AXIS_LENGTHS):
            if len(group) != want:
                raise IrmaParseError(
                    f"group {group!r} should have {want} characters in {raw!r}", pos
                )
            _check_chars(group, pos)
            pos += len(group) + 1
        return IrmaCode(tuple(groups))
    if len(text) != CODE_LENGTH:
        raise IrmaParseError(
            f"expected {CODE_LENGTH} characters without separators, got {len(text)} in {raw!r}"
        )
    _check_chars(text, lead)
    axes, pos = [], 0
    for n in AXIS_LENGTHS:
        axes.append(text[pos : pos + n])
        pos += n
    return IrmaCode(tuple(axes))


@dataclass(frozen=True)
class BranchingScheme:
    """Per-axis, per-position branching factors."""

    axes: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.axes) != len(AXIS_LENGTHS):
            raise ValidationError("branching scheme needs exactly 4 axes")
        for factors, n in zip(self.axes, AXIS_LENGTHS):
            if len(factors) != n:
                raise ValidationError(f"axis needs {n} branching factors, got {len(factors)}")
            if any(int(b) != b or b < 1 for b in factors):
                raise ValidationError("branching factors must be integers >= 1")

    @classmethod
    def uniform(cls, factor: int = DEFAULT_BRANCHING) -> "BranchingScheme":
        return cls(tuple((factor,) * n for n in AXIS_LENGTHS))


def parse_scheme(text: str) -> BranchingScheme:
    """Parse a scheme file body.

    Grammar: one ``<axis>: b1 b2 ...`` line per axis, where ``<axis>`` is
    T/D/A/B or the full axis name; ``#`` starts a comment. Axes that are not
    listed use the uniform default.
    """
    factors = {k: (DEFAULT_BRANCHING,) * n for k, n in zip(AXIS_KEYS, AXIS_LENGTHS)}
    names = {name: key for key, name in zip(AXIS_KEYS, AXIS_NAMES)}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise IrmaParseError(f"scheme line {lineno}: expected '<axis>: factors'")
        key, values = line.split(":", 1)
        key = key.strip()
        key = names.get(key.lower(), key.upper())
        if key not in factors:
            raise IrmaParseError(f"scheme line {lineno}: unknown axis {key!r}")
        try:
            nums = tuple(int(v) for v in values.split())
        except ValueError:
            raise IrmaParseError(f"scheme line {lineno}: factors must be integers") from None
        factors[key] = nums
    return BranchingScheme(tuple(factors[k] for k in AXIS_KEYS))


def load_scheme(path: str | PathLike) -> BranchingScheme:
    return parse_scheme(Path(path).read_text(encoding="utf-8"))


def _raw_axis_error(truth: str, predicted: str, branching: Sequence[int]) -> float:
    total = 0.0
    cascade = False
    for i, (t, p, b) in enumerate(zip(truth, predicted, branching), start=1):
        if cascade:
            delta = 1.0
        elif p == t:
            delta = 0.0
        elif p == WILDCARD:
            delta = 0.5
        else:
            delta = 1.0
            cascade = True
        total += delta / (b * i)
    return total


def axis_error(truth: str, predicted: str, branching: Sequence[int] | None = None, normalize: bool = True) -> float:
    """Hierarchical error of one axis; in [0, 1] when ``normalize``."""
    if len(truth) != len(predicted):
        raise ValidationError(f"axis lengths differ: {truth!r} vs {predicted!r}")
    if branching is None:
        branching = (DEFAULT_BRANCHING,) * len(truth)
    if len(branching) != len(truth):
        raise ValidationError("need one branching factor per axis position")
    if any(b < 1 for b in branching):
        raise ValidationError("branching factors must be >= 1")
    raw = _raw_axis_error(truth, predicted, branching)
    if not normalize:
        return raw
    worst = sum(1.0 / (b * i) for i, b in enumerate(branching, start=1))
    return raw / worst


def code_error(truth: IrmaCode, predicted: IrmaCode, scheme: BranchingScheme | None = None) -> float:
    """Mean of the four normalised axis errors."""
    scheme = scheme or BranchingScheme.uniform()
    errs = [
        axis_error(t, p, b)
        for t, p, b in zip(truth.axes, predicted.axes, scheme.axes)
    ]
    return sum(errs) / len(errs)


@dataclass(frozen=True)
class QueryError:
    query_id: str
    retrieved_id: str | None
    error: float


@dataclass
class ErrorReport:
    per_query: list[QueryError]
    e_total: float
    n_zero_fraction: float
    unlabeled: list[str] = field(default_factory=list)

    @property
    def n_labeled(self) -> int:
        return len(self.per_query)

    def summary(self) -> dict:
        return {
            "e_total": round(self.e_total, 6),
            "n_zero": round(100.0 * self.n_zero_fraction, 4),
            "n_queries": self.n_labeled,
            "n_unlabeled": len(self.unlabeled),
        }


def evaluate_run(results: Iterable[Sequence], scheme: BranchingScheme | None = None) -> ErrorReport:
    """Score rank-1 answers.

    Each item is ``(query_id, retrieved_id, truth, predicted)`` or just
    ``(truth, predicted)``. Queries whose truth is ``None`` are unlabeled:
    they are listed in the report but excluded from ``e_total``. A labeled
    query whose answer has no code scores the maximal error 1.
    """
    scheme = scheme or BranchingScheme.uniform()
    per_query, unlabeled = [], []
    n_items = 0
    for n_items, item in enumerate(results, start=1):
        if len(item) == 2:
            qid, rid, truth, pred = str(n_items - 1), None, item[0], item[1]
        else:
            qid, rid, truth, pred = item
        if truth is None:
            unlabeled.append(qid)
            continue
        err = 1.0 if pred is None else code_error(truth, pred, scheme)
        per_query.append(QueryError(qid, rid, err))
    if n_items == 0:
        raise ValidationError("evaluate_run needs at least one result")
    e_total = sum(q.error for q in per_query)
    n_zero = sum(q.error == 0.0 for q in per_query)
    frac = n_zero / len(per_query) if per_query else 0.0
    return ErrorReport(per_query, e_total, frac, unlabeled)


def parse_ground_truth(text: str) -> dict[str, IrmaCode | None]:
    """Parse ``image_id;irma_code`` lines.

    ``#`` lines and blank lines are skipped, as is a header line whose code
    column is not a code. When a line has more than two fields the last one
    is the code. An empty code marks the image as unlabeled.
    """
    labels: dict[str, IrmaCode | None] = {}
    seen_data = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(";")]
        image_id = fields[0]
        code_text = fields[-1] if len(fields) > 1 else ""
        if not code_text:
            labels[image_id] = None
            seen_data = True
            continue
        try:
            code = parse_code(code_text)
        except IrmaParseError as exc:
            if not seen_data and "irma" in line.lower():
                continue  # header
            raise IrmaParseError(f"line {lineno}: {exc}") from None
        labels[image_id] = code
        seen_data = True
    return labels


def load_ground_truth(path: str | PathLike) -> dict[str, IrmaCode | None]:
    return parse_ground_truth(Path(path).read_text(encoding="utf-8"))
