"""Run manifests: what was run, on which inputs, with which seeds."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .documents import _dump


def digest_bytes(data: bytes) -> str:
    """64-bit BLAKE2b content hash as 16 lowercase hex digits."""
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def digest_file(path) -> str:
    h = hashlib.blake2b(digest_size=8)
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def toolkit_version() -> str:
    from .. import __version__
    return __version__


@dataclass
class RunManifest:
    """Provenance of one command.

    The timestamped form goes to a sidecar file; :meth:`stable` omits the
    timestamps so it can be embedded in byte-stable reports.
    """

    argv: list
    inputs: dict = field(default_factory=dict)  # path -> digest
    seeds: list = field(default_factory=list)
    toolkit_version: str = field(default_factory=toolkit_version)
    started: str = field(default_factory=_now)
    finished: str | None = None

    @classmethod
    def for_inputs(cls, argv, paths=(), seeds=()):
        return cls(argv=[str(a) for a in argv],
                   inputs={str(p): digest_file(p) for p in paths},
                   seeds=[int(s) for s in seeds])

    def stable(self) -> dict:
        return {"toolkit_version": self.toolkit_version, "argv": list(self.argv),
                "inputs": dict(self.inputs), "seeds": list(self.seeds)}

    def as_dict(self) -> dict:
        doc = self.stable()
        doc.update(started=self.started, finished=self.finished)
        return doc

    def verify(self) -> dict:
        """Recompute every input digest; maps path -> True when unchanged."""
        out = {}
        for path, expected in self.inputs.items():
            try:
                out[path] = digest_file(path) == expected
            except OSError:
                out[path] = False
        return out

    def write(self, path) -> None:
        if self.finished is None:
            self.finished = _now()
        _dump(path, self.as_dict())
