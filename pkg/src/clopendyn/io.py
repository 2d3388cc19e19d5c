"""Reading system documents and writing deterministic JSON."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .core_dynamics import FiniteSystem
from .errors import InputError
from .expansion import ExactComplex, fmt_number
from .inverse_limit import InverseSystem, LevelClopen, validate
from .symbolic import ClopenSet, ShiftSpace, check_clopen

__all__ = [
    "KINDS",
    "SystemDocument",
    "digest",
    "dumps",
    "load_document",
    "parse_bases",
    "parse_set",
]

KINDS = {"finite": FiniteSystem, "inverse_limit": InverseSystem, "shift": ShiftSpace}


@dataclass(frozen=True)
class SystemDocument:
    kind: str
    name: str
    system: FiniteSystem | InverseSystem | ShiftSpace

    @classmethod
    def from_json(cls, obj: Any) -> "SystemDocument":
        if not isinstance(obj, dict):
            raise InputError("a system document must be a JSON object")
        kind = obj.get("kind")
        if kind not in KINDS:
            raise InputError(f"'kind' must be one of {sorted(KINDS)}, got {kind!r}")
        if "payload" not in obj:
            raise InputError("document has no 'payload'")
        name = obj.get("name", "")
        if not isinstance(name, str):
            raise InputError("'name' must be a string")
        try:
            system = KINDS[kind].from_json(obj["payload"])
        except InputError as exc:
            raise InputError(f"invalid {kind} payload: {exc}") from None
        if kind == "inverse_limit":
            report = validate(system)
            if not report.ok:
                v = report.violations[0]
                raise InputError(f"tower fails validation ({len(report.violations)} violations), first: {v.kind} at level {v.level}: {v.detail}")
        return cls(kind, name, system)

    @classmethod
    def of(cls, system, name: str = "") -> "SystemDocument":
        for kind, tp in KINDS.items():
            if isinstance(system, tp):
                return cls(kind, name, system)
        raise InputError(f"unsupported system type {type(system).__name__}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "name": self.name, "payload": self.system.to_json()}


def load_document(path: str | Path) -> tuple[SystemDocument, bytes]:
    """Parse a UTF-8 JSON system document; returns it with the raw bytes."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        obj = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not UTF-8 ({exc.reason} at byte {exc.start})") from None
    except json.JSONDecodeError as exc:
        lines = exc.doc.splitlines()
        line = lines[exc.lineno - 1] if exc.lineno <= len(lines) else ""
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}\n    {line}") from None
    try:
        return SystemDocument.from_json(obj), raw
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None


def _default(x):
    if isinstance(x, (Fraction, ExactComplex, complex)):
        return fmt_number(x)
    if isinstance(x, (frozenset, set)):
        return sorted(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if hasattr(x, "to_json"):
        return x.to_json()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, fixed indentation, exact rationals as ``p/q``."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, default=_default) + "\n"


def digest(*parts: bytes | str) -> str:
    h = hashlib.sha256()
    for p in parts:
        b = p.encode("utf-8") if isinstance(p, str) else p
        h.update(len(b).to_bytes(8, "big"))
        h.update(b)
    return h.hexdigest()


def parse_bases(text: str) -> list[int]:
    try:
        bases = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"--bases expects comma-separated integers, got {text!r}") from None
    if not bases:
        raise InputError("--bases is empty")
    return bases


def parse_set(system, text: str):
    """Read a clopen set from the command line.

    * shift: comma-separated words of one length, e.g. ``10,11``; ``{}`` or
      an empty string is the empty set at length 1.
    * finite system: comma-separated states.
    * tower: ``level:states``, e.g. ``2:0,3``.
    """
    text = text.strip()
    if isinstance(system, ShiftSpace):
        words = [w.strip() for w in text.split(",") if w.strip() and w.strip() != "{}"]
        if not words:
            return ClopenSet(1, frozenset())
        if any(not w.isdigit() for w in words):
            raise InputError(f"words must be digit strings, got {text!r}")
        lengths = {len(w) for w in words}
        if len(lengths) != 1:
            raise InputError("all words of a clopen set must have the same length")
        U = ClopenSet(lengths.pop(), frozenset(tuple(int(c) for c in w) for w in words))
        return check_clopen(system, U)
    level = 1
    if isinstance(system, InverseSystem):
        if ":" not in text:
            raise InputError("tower sets are written level:states, e.g. 2:0,3")
        head, text = text.split(":", 1)
        try:
            level = int(head)
        except ValueError:
            raise InputError(f"bad level {head!r}") from None
        system._check_level(level)
        F = system.level(level)
    else:
        F = system
    try:
        states = frozenset(int(t) for t in text.split(",") if t.strip() and t.strip() != "{}")
    except ValueError:
        raise InputError(f"states must be integers, got {text!r}") from None
    bad = [s for s in states if not 0 <= s < F.size]
    if bad:
        raise InputError(f"state {bad[0]} is outside [0, {F.size})")
    if isinstance(system, InverseSystem):
        return LevelClopen(level, states)
    return states
