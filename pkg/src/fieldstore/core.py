"""User-facing store API: sessions, data handles, and backend contracts.

A :class:`Session` wraps one Store/Catalogue backend pair and exposes the
five primary operations: ``archive``, ``flush``, ``retrieve``, ``list`` and
``close``. Semantics:

1. data is either visible and correctly indexed, or not visible at all;
2. ``archive`` blocks until the store holds a copy of the data (visibility
   at this point is backend-defined: the filesystem backend exposes data at
   flush, the object backend immediately);
3. ``flush`` blocks until everything archived by this session is persisted,
   indexed, and visible to concurrent and future reading sessions;
4. visible data is immutable;
5. re-archiving an identifier replaces the field; the old bytes stay
   visible until the new ones are fully persisted and indexed.

A session is single-threaded; any number of sessions, in the same or in
different OS processes, may operate concurrently on one store root.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import ConfigError, FieldStoreError, MergeError, SessionClosedError
from .schema import (
    Identifier,
    PartialIdentifier,
    Schema,
    SplitKey,
    expand_request,
    parse_schema_file,
    split_identifier,
)


@dataclass(frozen=True)
class LocationDescriptor:
    """Backend-scoped pointer to stored bytes: resource name, offset, length."""

    uri: str
    offset: int
    length: int

    def end(self) -> int:
        return self.offset + self.length


@dataclass(frozen=True)
class ListEntry:
    """One listed field: its full identifier and current location."""

    identifier: Identifier
    location: LocationDescriptor


class SegmentReader(abc.ABC):
    """Backend-specific strategy that reads location-descriptor segments."""

    backend_kind: str

    @abc.abstractmethod
    def read_segments(self, segments: tuple[LocationDescriptor, ...]) -> bytes:
        """Read and concatenate the given segments, in order."""


class DataHandle:
    """Lazy reader over an ordered list of stored segments.

    No bulk data is touched until :meth:`read` is called; reading yields the
    concatenation of the segment byte ranges in order.
    """

    __slots__ = ("segments", "_reader")

    def __init__(self, reader: SegmentReader, segments: Iterable[LocationDescriptor]):
        self._reader = reader
        self.segments = tuple(segments)

    @property
    def backend_kind(self) -> str:
        return self._reader.backend_kind

    @property
    def reader(self) -> SegmentReader:
        return self._reader

    def total_length(self) -> int:
        return sum(seg.length for seg in self.segments)

    def read(self) -> bytes:
        return self._reader.read_segments(self.segments)


def coalesce_segments(
    segments: Iterable[LocationDescriptor],
) -> tuple[LocationDescriptor, ...]:
    """Merge adjacent segments that are contiguous within the same resource."""
    merged: list[LocationDescriptor] = []
    for seg in segments:
        if merged:
            prev = merged[-1]
            if prev.uri == seg.uri and prev.end() == seg.offset:
                merged[-1] = LocationDescriptor(prev.uri, prev.offset, prev.length + seg.length)
                continue
        merged.append(seg)
    return tuple(merged)


def merge_handles(handles: list[DataHandle]) -> DataHandle:
    """Merge handles into one, coalescing contiguous same-resource segments.

    Read order (and therefore the concatenated bytes) is preserved; only the
    number of underlying I/O operations can shrink. All handles must come
    from the same backend.
    """
    if not handles:
        raise MergeError("cannot merge an empty list of handles")
    kinds = {h.backend_kind for h in handles}
    if len(kinds) != 1:
        raise MergeError(f"cannot merge handles from different backends: {sorted(kinds)}")
    segments = [seg for h in handles for seg in h.segments]
    return DataHandle(handles[0].reader, coalesce_segments(segments))


class StoreBackend(abc.ABC):
    """Bulk byte storage: write fields, sync them, build read handles."""

    backend_kind: str

    @abc.abstractmethod
    def archive(self, split: SplitKey, data: bytes) -> LocationDescriptor: ...

    @abc.abstractmethod
    def flush(self) -> None: ...

    @abc.abstractmethod
    def retrieve(self, loc: LocationDescriptor) -> DataHandle: ...

    @abc.abstractmethod
    def empty_handle(self) -> DataHandle: ...

    def close(self) -> None:
        """Release per-session resources; does not imply a flush."""


class CatalogueBackend(abc.ABC):
    """Field index: map element keys to locations, list and expand them."""

    backend_kind: str

    @abc.abstractmethod
    def archive(self, split: SplitKey, loc: LocationDescriptor) -> None: ...

    @abc.abstractmethod
    def flush(self) -> None: ...

    @abc.abstractmethod
    def close(self) -> None: ...

    @abc.abstractmethod
    def axis(self, dataset: Identifier, collocation: Identifier, dim: str) -> list[str]: ...

    @abc.abstractmethod
    def retrieve(self, split: SplitKey) -> LocationDescriptor | None: ...

    @abc.abstractmethod
    def list(self, partial: PartialIdentifier) -> Iterator[ListEntry]: ...


class Session:
    """One writer/reader session over a configured backend pair."""

    def __init__(self, schema: Schema, store: StoreBackend, catalogue: CatalogueBackend):
        if store.backend_kind != catalogue.backend_kind:
            raise FieldStoreError("store and catalogue backends do not match")
        self.schema = schema
        self.store = store
        self.catalogue = catalogue
        self._closed = False

    @property
    def backend_kind(self) -> str:
        return self.store.backend_kind

    def _check_open(self):
        if self._closed:
            raise SessionClosedError("session is closed")

    def _as_identifier(self, identifier) -> Identifier:
        if isinstance(identifier, Identifier):
            return identifier
        return Identifier(identifier)

    def archive(self, identifier, data: bytes) -> None:
        """Take control of a copy of ``data`` under ``identifier``.

        The field may already be visible to readers when this returns, but is
        never partially visible; :meth:`flush` guarantees visibility.
        """
        self._check_open()
        if not isinstance(data, (bytes, bytearray, memoryview)):
            raise TypeError("field data must be bytes-like")
        data = bytes(data)
        if not data:
            raise FieldStoreError("cannot archive an empty field")
        split = split_identifier(self.schema, self._as_identifier(identifier))
        loc = self.store.archive(split, data)
        self.catalogue.archive(split, loc)

    def flush(self) -> None:
        """Persist and publish everything archived by this session so far."""
        self._check_open()
        self.store.flush()
        self.catalogue.flush()

    def retrieve(self, query) -> DataHandle:
        """Build a merged lazy handle over the listed identifiers, in order.

        Identifiers must be fully specified (use :meth:`expand` first for
        wildcards); missing fields are silently skipped.
        """
        self._check_open()
        if isinstance(query, (Identifier, Mapping)):
            query = [query]
        handles = []
        for identifier in query:
            split = split_identifier(self.schema, self._as_identifier(identifier))
            loc = self.catalogue.retrieve(split)
            if loc is not None:
                handles.append(self.store.retrieve(loc))
        if not handles:
            return self.store.empty_handle()
        return merge_handles(handles)

    def expand(self, partial: PartialIdentifier) -> list[Identifier]:
        """Expand wildcards/value lists into concrete identifiers via the axes."""
        self._check_open()
        return expand_request(self.schema, partial, self.catalogue.axis)

    def list(self, partial: PartialIdentifier) -> Iterator[ListEntry]:
        """Iterate all visible fields matching the partial identifier.

        The partial must fix every dataset dimension to a single value; each
        matching field is yielded once with its latest location.
        """
        self._check_open()
        return self.catalogue.list(partial)

    def close(self) -> None:
        """Finalize this session's index state. Idempotent."""
        if self._closed:
            return
        self.catalogue.close()
        self.store.close()
        self._closed = True

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()
        return False


@dataclass(frozen=True)
class StoreConfig:
    """Parsed store configuration: backend choice, schema path, root path."""

    backend: str
    schema: str
    root: str


def load_config(path) -> StoreConfig:
    """Parse a ``key = value`` store configuration file."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, value = key.strip(), value.strip()
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value
    for required in ("backend", "schema", "root"):
        if required not in values:
            raise ConfigError(f"{path}: missing required key {required!r}")
    unknown = set(values) - {"backend", "schema", "root"}
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")
    if values["backend"] not in ("fs", "obj"):
        raise ConfigError(f"{path}: backend must be 'fs' or 'obj', got {values['backend']!r}")
    return StoreConfig(backend=values["backend"], schema=values["schema"], root=values["root"])


def open_session(config, schema: Schema | None = None) -> Session:
    """Open a session from a :class:`StoreConfig` or a config file path.

    ``schema`` overrides the schema file named by the config (used by tests
    and the benchmark to switch schemas programmatically).
    """
    if not isinstance(config, StoreConfig):
        config = load_config(config)
    if schema is None:
        schema = parse_schema_file(config.schema)
    if config.backend == "fs":
        from .fsbackend import open_fs_backend

        store, catalogue = open_fs_backend(Path(config.root), schema)
    else:
        from .engine import connect as engine_connect
        from .objbackend import open_obj_backend

        engine = engine_connect(config.root)
        store, catalogue = open_obj_backend(engine, schema)
    return Session(schema, store, catalogue)
