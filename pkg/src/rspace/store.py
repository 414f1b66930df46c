"""Key-value resource store.

Every resource is written under its point key and posted under one key per
coordinate, so both point lookups and per-dimension posting scans are direct.
With a ``path`` the store persists to an sqlite file in WAL mode; each resource
(point entry plus all postings) is committed in a single transaction.
"""
from __future__ import annotations

import json
import re
import sqlite3
import threading
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Set, Union

from .errors import SchemaError, StoreError
from .space import CoordinatePath, Dimension, Point, ResourceSpace, as_path

Scalar = Union[str, int, float]

POINT = "POINT"
COORDINATE = "COORDINATE"
_KIND_BYTE = {POINT: b"P", COORDINATE: b"C"}
_BYTE_KIND = {v: k for k, v in _KIND_BYTE.items()}
_SEP = b"\x00"


@dataclass(frozen=True)
class Resource:
    id: str
    point: Point
    attributes: Mapping[str, Scalar] = field(default_factory=dict)
    content: Optional[str] = None

    def __hash__(self) -> int:
        return hash(self.id)

    def get(self, name: str, default=None):
        if name == "id":
            return self.id
        return self.attributes.get(name, default)

    def to_record(self) -> dict:
        return {"id": self.id, "point": self.point.key, "attributes": dict(self.attributes),
                "content": self.content}

    @classmethod
    def from_record(cls, rec: dict) -> "Resource":
        return cls(rec["id"], Point.parse(rec["point"]), rec.get("attributes") or {}, rec.get("content"))


@dataclass(frozen=True)
class StoreKey:
    kind: str
    payload: str

    def encode(self) -> bytes:
        return _KIND_BYTE[self.kind] + self.payload.encode("utf-8")

    @classmethod
    def decode(cls, raw: bytes) -> "StoreKey":
        return cls(_BYTE_KIND[raw[:1]], raw[1:].decode("utf-8"))

    @classmethod
    def for_point(cls, p: Point) -> "StoreKey":
        return cls(POINT, p.key)

    @classmethod
    def for_coordinate(cls, c: CoordinatePath) -> "StoreKey":
        return cls(COORDINATE, str(c))


class ResourceStore:
    def __init__(self, space: ResourceSpace, path: Optional[str] = None):
        self.space = space
        self.path = path
        self._lock = threading.RLock()
        self._by_id: Dict[str, Resource] = {}
        self._by_point: Dict[Point, Dict[str, Resource]] = {}
        self._postings: Dict[CoordinatePath, List[str]] = {}
        self._under: Dict[CoordinatePath, int] = {}
        self._attr_names: Set[str] = set()
        self._db: Optional[sqlite3.Connection] = None
        if path is not None:
            self._open(path)

    # -- persistence -------------------------------------------------------

    def _open(self, path: str) -> None:
        db = sqlite3.connect(path, check_same_thread=False)
        db.execute("PRAGMA journal_mode=WAL")
        db.execute("PRAGMA synchronous=FULL")
        db.execute("CREATE TABLE IF NOT EXISTS kv (k BLOB PRIMARY KEY, v BLOB) WITHOUT ROWID")
        db.commit()
        self._db = db
        prefix = _KIND_BYTE[POINT]
        rows = db.execute("SELECT v FROM kv WHERE k >= ? AND k < ? ORDER BY k",
                          (prefix, bytes([prefix[0] + 1]))).fetchall()
        for (raw,) in rows:
            self._index(Resource.from_record(json.loads(raw)))

    def close(self) -> None:
        if self._db is not None:
            self._db.close()
            self._db = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- writes --------------------------------------------------------------

    def put_resource(self, r: Resource) -> None:
        with self._lock:
            if r.id in self._by_id:
                raise StoreError(f"duplicate resource id {r.id!r}")
            try:
                self.space.validate_point(r.point)
            except Exception as e:
                raise StoreError(f"invalid point for resource {r.id!r}: {e}") from None
            if self._db is not None:
                rid = r.id.encode("utf-8")
                rows = [(StoreKey.for_point(r.point).encode() + _SEP + rid,
                         json.dumps(r.to_record(), sort_keys=True).encode("utf-8"))]
                rows += [(StoreKey.for_coordinate(c).encode() + _SEP + rid, b"") for c in r.point.coords]
                with self._db:
                    self._db.executemany("INSERT INTO kv (k, v) VALUES (?, ?)", rows)
            self._index(r)

    def put_many(self, resources: Iterable[Resource]) -> None:
        for r in resources:
            self.put_resource(r)

    def _index(self, r: Resource) -> None:
        self._by_id[r.id] = r
        self._by_point.setdefault(r.point, {})[r.id] = r
        for c in r.point.coords:
            self._postings.setdefault(c, []).append(r.id)
            for a in c.ancestors():
                self._under[a] = self._under.get(a, 0) + 1
        self._attr_names.update(r.attributes)

    # -- reads ---------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._by_id)

    def __contains__(self, rid: object) -> bool:
        return rid in self._by_id

    def get(self, rid: str) -> Resource:
        try:
            return self._by_id[rid]
        except KeyError:
            raise StoreError(f"unknown resource {rid!r}") from None

    def resources(self) -> Iterator[Resource]:
        """All resources in insertion order."""
        with self._lock:
            items = list(self._by_id.values())
        return iter(items)

    def get_by_point(self, p: Point) -> List[Resource]:
        """Resources stored exactly at ``p``, sorted by id."""
        with self._lock:
            bucket = self._by_point.get(p)
            return sorted(bucket.values(), key=lambda r: r.id) if bucket else []

    def get_by_coordinate(self, c: Union[CoordinatePath, str]) -> Set[str]:
        """Ids of resources whose coordinate on c's dimension equals c exactly."""
        with self._lock:
            return set(self._postings.get(as_path(c), ()))

    def count_at(self, c: CoordinatePath) -> int:
        return len(self._postings.get(c, ()))

    def count_under(self, dim: Union[Dimension, str], c: Union[CoordinatePath, str]) -> int:
        d = dim if isinstance(dim, Dimension) else self.space.dim(dim)
        c = d.require(c)
        return self._under.get(c, 0)

    def points(self) -> List[Point]:
        with self._lock:
            return sorted(self._by_point, key=lambda p: p.key)

    def point_count(self, p: Point) -> int:
        bucket = self._by_point.get(p)
        return len(bucket) if bucket else 0

    @property
    def attribute_names(self) -> Set[str]:
        return set(self._attr_names)

    def audit(self) -> List[str]:
        """Cross-check point buckets against coordinate postings (and disk, if persistent)."""
        problems = []
        with self._lock:
            expected: Dict[CoordinatePath, Set[str]] = {}
            for p, bucket in self._by_point.items():
                for rid, r in bucket.items():
                    if r.point != p or self._by_id.get(rid) is not r:
                        problems.append(f"resource {rid} misfiled under {p}")
                    for c in p.coords:
                        expected.setdefault(c, set()).add(rid)
            for c, ids in self._postings.items():
                if set(ids) != expected.get(c, set()):
                    problems.append(f"postings for {c} disagree with point buckets")
            for c in expected:
                if c not in self._postings:
                    problems.append(f"missing postings for {c}")
            if self._db is not None:
                n_points = self._db.execute("SELECT count(*) FROM kv WHERE k >= ? AND k < ?",
                                            (b"P", b"Q")).fetchone()[0]
                n_posts = self._db.execute("SELECT count(*) FROM kv WHERE k >= ? AND k < ?",
                                           (b"C", b"D")).fetchone()[0]
                if n_points != len(self._by_id):
                    problems.append(f"disk holds {n_points} point entries, memory {len(self._by_id)}")
                if n_posts != len(self._by_id) * len(self.space):
                    problems.append("disk posting count does not match resources x dimensions")
        return problems


# -- corpus XML ----------------------------------------------------------------

_INT_RE = re.compile(r"^-?\d+$")


def _decode_scalar(value: str, kind: Optional[str]) -> Scalar:
    if kind == "str":
        return value
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    if _INT_RE.match(value):
        return int(value)
    try:
        return float(value)
    except ValueError:
        return value


def _encode_scalar(value: Scalar):
    if isinstance(value, bool):
        return str(int(value)), "int"
    if isinstance(value, int):
        return str(value), "int"
    if isinstance(value, float):
        return repr(value), "float"
    text = str(value)
    return text, ("str" if _decode_scalar(text, None) != text else None)


def parse_corpus_xml(text: Union[str, bytes], space: ResourceSpace) -> List[Resource]:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as e:
        raise SchemaError(f"malformed corpus document: {e}") from None
    if root.tag != "Resources":
        raise SchemaError("corpus root must be <Resources>")
    out = []
    for el in root:
        if el.tag != "Resource" or not el.get("id"):
            raise SchemaError("corpus entries must be <Resource id=...>")
        coords: Dict[str, str] = {}
        attrs: Dict[str, Scalar] = {}
        for ch in el:
            if ch.tag == "At":
                dim = ch.get("dim")
                if dim in coords:
                    raise SchemaError(f"resource {el.get('id')} has two coordinates on {dim}")
                coords[dim] = ch.get("path", "")
            elif ch.tag == "Attr":
                attrs[ch.get("name")] = _decode_scalar(ch.get("value", ""), ch.get("type"))
            else:
                raise SchemaError(f"unexpected element <{ch.tag}> in resource")
        try:
            point = space.point(coords)
        except Exception as e:
            raise SchemaError(f"resource {el.get('id')}: {e}") from None
        out.append(Resource(el.get("id"), point, attrs, el.get("content")))
    return out


def corpus_to_xml(resources: Iterable[Resource]) -> str:
    root = ET.Element("Resources")
    for r in resources:
        attrs = {"id": r.id}
        if r.content is not None:
            attrs["content"] = r.content
        el = ET.SubElement(root, "Resource", attrs)
        for c in r.point.coords:
            ET.SubElement(el, "At", dim=c.dimension, path=str(c))
        for name in sorted(r.attributes):
            value, kind = _encode_scalar(r.attributes[name])
            a = {"name": name, "value": value}
            if kind is not None:
                a["type"] = kind
            ET.SubElement(el, "Attr", a)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"
