"""Metadata identifiers and the schema that splits them.

Every stored field is named by an identifier: an ordered set of
``keyword=value`` pairs. A deployment-wide schema declares which keywords
exist and partitions them into three groups that drive data placement:

* dataset dims  -- select the directory / namespace a field lives in,
* collocation dims -- group fields that are indexed together,
* element dims  -- distinguish a field within its collocated group.

The canonical string form of a key is ``k1=v1,k2=v2,...`` with keywords in
schema order; it is used verbatim as directory, namespace, and index-entry
names, so keywords and values must avoid the reserved characters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import (
    IdentifierError,
    MissingDimensionError,
    SchemaError,
    SchemaSyntaxError,
    UnknownKeywordError,
)

RESERVED_CHARS = ("=", ",", "/", "\n")

_SECTION_NAMES = ("dataset", "collocation", "element")


class _Wildcard:
    """Sentinel matching any value in a partial identifier."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "WILDCARD"


WILDCARD = _Wildcard()


def _check_token(token: str, what: str) -> str:
    if isinstance(token, int):
        token = str(token)
    if not isinstance(token, str):
        raise IdentifierError(f"{what} must be a string, got {type(token).__name__}")
    if not token:
        raise IdentifierError(f"{what} must not be empty")
    for ch in RESERVED_CHARS:
        if ch in token:
            raise IdentifierError(f"{what} {token!r} contains reserved character {ch!r}")
    return token


class Identifier:
    """Immutable ordered map of keyword -> value naming one field."""

    __slots__ = ("_entries", "_map", "_hash")

    def __init__(self, entries: Mapping[str, str] | Iterable[tuple[str, str]]):
        if isinstance(entries, Mapping):
            pairs = list(entries.items())
        else:
            pairs = [(k, v) for k, v in entries]
        checked = []
        seen = set()
        for key, value in pairs:
            key = _check_token(key, "keyword")
            value = _check_token(value, "value")
            if key in seen:
                raise IdentifierError(f"duplicate keyword {key!r} in identifier")
            seen.add(key)
            checked.append((key, value))
        self._entries = tuple(checked)
        self._map = dict(checked)
        self._hash = hash(frozenset(self._map.items()))

    @property
    def entries(self) -> tuple[tuple[str, str], ...]:
        return self._entries

    def __getitem__(self, keyword: str) -> str:
        return self._map[keyword]

    def get(self, keyword: str, default=None):
        return self._map.get(keyword, default)

    def __contains__(self, keyword: str) -> bool:
        return keyword in self._map

    def __iter__(self) -> Iterator[str]:
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._entries)

    def keywords(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self._entries)

    def as_dict(self) -> dict[str, str]:
        return dict(self._entries)

    def canonical(self) -> str:
        """Encode as ``k=v,k=v`` in this identifier's own entry order."""
        return ",".join(f"{k}={v}" for k, v in self._entries)

    @classmethod
    def from_canonical(cls, text: str) -> "Identifier":
        if not text:
            return cls(())
        pairs = []
        for item in text.split(","):
            key, sep, value = item.partition("=")
            if not sep:
                raise IdentifierError(f"malformed canonical entry {item!r}")
            pairs.append((key, value))
        return cls(pairs)

    def __eq__(self, other) -> bool:
        # entry order is presentation only; identity is the keyword->value map
        if not isinstance(other, Identifier):
            return NotImplemented
        return self._map == other._map

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Identifier({self.canonical()!r})"


@dataclass(frozen=True)
class Schema:
    """The deployment's split of identifier keywords into three dimension groups."""

    dataset_dims: tuple[str, ...]
    collocation_dims: tuple[str, ...]
    element_dims: tuple[str, ...]

    def __post_init__(self):
        for name, dims in (
            ("dataset", self.dataset_dims),
            ("collocation", self.collocation_dims),
            ("element", self.element_dims),
        ):
            if not dims:
                raise SchemaError(f"{name} section declares no keywords")
            for dim in dims:
                _check_token(dim, "keyword")
        all_dims = self.dataset_dims + self.collocation_dims + self.element_dims
        seen = set()
        for dim in all_dims:
            if dim in seen:
                raise SchemaError(f"duplicate keyword {dim!r} across schema sections")
            seen.add(dim)

    @property
    def all_dims(self) -> tuple[str, ...]:
        return self.dataset_dims + self.collocation_dims + self.element_dims

    def to_text(self) -> str:
        return (
            f"dataset: {','.join(self.dataset_dims)}\n"
            f"collocation: {','.join(self.collocation_dims)}\n"
            f"element: {','.join(self.element_dims)}\n"
        )


@dataclass(frozen=True)
class SplitKey:
    """An identifier partitioned into dataset / collocation / element sub-keys."""

    dataset: Identifier
    collocation: Identifier
    element: Identifier

    def combined(self) -> Identifier:
        return Identifier(
            self.dataset.entries + self.collocation.entries + self.element.entries
        )


class PartialIdentifier:
    """Identifier with per-keyword value lists or wildcards, for queries.

    An entry constrains its keyword to the listed values; :data:`WILDCARD`
    matches any value. Keywords not mentioned are unconstrained.
    """

    __slots__ = ("_entries", "_map")

    def __init__(self, entries):
        if isinstance(entries, Mapping):
            pairs = list(entries.items())
        else:
            pairs = list(entries)
        checked = []
        for key, values in pairs:
            key = _check_token(key, "keyword")
            if values is WILDCARD:
                checked.append((key, WILDCARD))
                continue
            if isinstance(values, (str, int)):
                values = (values,)
            values = tuple(_check_token(v, "value") for v in values)
            if not values:
                raise IdentifierError(f"empty value list for keyword {key!r}")
            checked.append((key, values))
        self._entries = tuple(checked)
        self._map = dict(checked)
        if len(self._map) != len(self._entries):
            raise IdentifierError("duplicate keyword in partial identifier")

    @property
    def entries(self):
        return self._entries

    def constraint(self, keyword: str):
        """Values allowed for a keyword, WILDCARD, or None when unconstrained."""
        return self._map.get(keyword)

    def keywords(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self._entries)

    def matches(self, identifier: Identifier) -> bool:
        for key, values in self._entries:
            actual = identifier.get(key)
            if actual is None:
                return False
            if values is WILDCARD:
                continue
            if actual not in values:
                return False
        return True

    def single_value(self, keyword: str) -> str | None:
        """The keyword's value when constrained to exactly one, else None."""
        values = self._map.get(keyword)
        if values is None or values is WILDCARD or len(values) != 1:
            return None
        return values[0]

    def __repr__(self) -> str:
        parts = []
        for key, values in self._entries:
            if values is WILDCARD:
                parts.append(f"{key}=*")
            else:
                parts.append(f"{key}={'|'.join(values)}")
        return f"PartialIdentifier({','.join(parts)!r})"


def parse_schema(text: str) -> Schema:
    """Parse the three-section schema file format.

    Lines ``dataset:``, ``collocation:``, ``element:`` each carry a
    comma-separated keyword list; ``#`` starts a comment; each section must
    appear exactly once and be non-empty.
    """
    sections: dict[str, tuple[str, ...]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, rest = line.partition(":")
        name = name.strip()
        if not sep or name not in _SECTION_NAMES:
            raise SchemaSyntaxError(f"expected one of {_SECTION_NAMES}, got {raw!r}", lineno)
        if name in sections:
            raise SchemaSyntaxError(f"section {name!r} appears twice", lineno)
        keywords = tuple(k.strip() for k in rest.split(",") if k.strip())
        if not keywords:
            raise SchemaSyntaxError(f"section {name!r} declares no keywords", lineno)
        sections[name] = keywords
    missing = [name for name in _SECTION_NAMES if name not in sections]
    if missing:
        raise SchemaSyntaxError(f"missing section(s): {', '.join(missing)}")
    return Schema(
        dataset_dims=sections["dataset"],
        collocation_dims=sections["collocation"],
        element_dims=sections["element"],
    )


def parse_schema_file(path) -> Schema:
    with open(path, "r", encoding="utf-8") as f:
        return parse_schema(f.read())


def split_identifier(schema: Schema, identifier: Identifier) -> SplitKey:
    """Partition an identifier into its dataset/collocation/element sub-keys.

    The identifier must carry a value for every schema dimension and no
    undeclared keywords; each sub-key lists its dimensions in schema order.
    """
    declared = set(schema.all_dims)
    for keyword in identifier.keywords():
        if keyword not in declared:
            raise UnknownKeywordError(keyword)
    parts = []
    for dims in (schema.dataset_dims, schema.collocation_dims, schema.element_dims):
        pairs = []
        for dim in dims:
            value = identifier.get(dim)
            if value is None:
                raise MissingDimensionError(dim)
            pairs.append((dim, value))
        parts.append(Identifier(pairs))
    return SplitKey(dataset=parts[0], collocation=parts[1], element=parts[2])


def split_partial(schema: Schema, partial: PartialIdentifier, require: str = "dataset"):
    """Extract the fixed dataset (and optionally collocation) sub-keys of a partial.

    ``require`` is ``"dataset"`` or ``"collocation"``; every dimension of the
    required groups must be constrained to exactly one value.
    """
    declared = set(schema.all_dims)
    for keyword in partial.keywords():
        if keyword not in declared:
            raise UnknownKeywordError(keyword)
    groups = [("dataset", schema.dataset_dims)]
    if require == "collocation":
        groups.append(("collocation", schema.collocation_dims))
    fixed = []
    for name, dims in groups:
        pairs = []
        for dim in dims:
            value = partial.single_value(dim)
            if value is None:
                raise IdentifierError(
                    f"partial identifier must fix {name} dimension {dim!r} to a single value"
                )
            pairs.append((dim, value))
        fixed.append(Identifier(pairs))
    return tuple(fixed)


AxisProvider = Callable[[Identifier, Identifier, str], Sequence[str]]


def expand_request(
    schema: Schema, partial: PartialIdentifier, axes: AxisProvider
) -> list[Identifier]:
    """Expand a partial request into fully specified identifiers.

    Dataset and collocation dimensions must be fixed to single values.
    Element dimensions given as explicit lists keep their order; wildcarded
    (or omitted) element dimensions take the axis values for the fixed
    (dataset, collocation), sorted lexicographically. The result is the
    Cartesian product over element dimensions in schema order; an empty axis
    for a wildcarded dimension yields an empty expansion.
    """
    dataset, collocation = split_partial(schema, partial, require="collocation")
    value_lists: list[list[tuple[str, str]]] = []
    for dim in schema.element_dims:
        constraint = partial.constraint(dim)
        if constraint is None or constraint is WILDCARD:
            values = sorted(axes(dataset, collocation, dim))
        else:
            values = list(dict.fromkeys(constraint))
        value_lists.append([(dim, v) for v in values])
    fixed = dataset.entries + collocation.entries
    result = []
    for combo in itertools.product(*value_lists):
        result.append(Identifier(fixed + tuple(combo)))
    return result


DEFAULT_SCHEMA = Schema(
    dataset_dims=("class", "stream", "expver", "date", "time"),
    collocation_dims=("type", "levtype"),
    element_dims=("step", "levelist", "number", "param"),
)

# Moves the dims that vary most across parallel writers into the collocation
# key so concurrent sessions never share an index; used with the kv/blob
# backend to avoid index contention.
CONTENTION_AVOIDANCE_SCHEMA = Schema(
    dataset_dims=("class", "stream", "expver", "date", "time"),
    collocation_dims=("type", "levtype", "number", "levelist"),
    element_dims=("step", "param"),
)
