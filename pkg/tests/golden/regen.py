"""Rewrite the emitter golden files: ``python tests/golden/regen.py [task ...]``.

Only run this after auditing a diff of the new output by hand. Files larger
than GZIP_ABOVE bytes are stored gzipped (with a zeroed mtime so the archive
bytes are reproducible). Emissions above DIGEST_ABOVE bytes are too big to
check in and are stored as ``<sha256> <size>`` instead.

Merge is only emitted as Sketch: unrolling it takes several minutes and its
SMT and LP encodings run to hundreds of megabytes.
"""

import gzip
import hashlib
import sys
from pathlib import Path

from tptsynth.bench import load_task, task_names
from tptsynth.lp import build_lp, emit_lp
from tptsynth.sketch_emit import emit_sketch
from tptsynth.smt import emit_smtlib

HERE = Path(__file__).resolve().parent
GZIP_ABOVE = 200_000
DIGEST_ABOVE = 20_000_000
FORMATS = ("smt2", "lp", "sk")
SKETCH_ONLY = {"assembly_merge"}


def formats(name: str) -> tuple:
    return ("sk",) if name in SKETCH_ONLY else FORMATS


def emissions(name: str) -> dict:
    task = load_task(name)
    checked = task.checked()
    out = {"sk": emit_sketch(checked).text}
    if name in SKETCH_ONLY:
        return out
    g = task.compile()
    out["smt2"] = emit_smtlib(g.program).text
    out["lp"] = emit_lp(build_lp(g))
    return out


def digest(raw: bytes) -> str:
    return f"{hashlib.sha256(raw).hexdigest()} {len(raw)}\n"


def golden_path(name: str, fmt: str) -> Path:
    for suffix in ("", ".gz", ".sha256"):
        p = HERE / f"{name}.{fmt}{suffix}"
        if p.exists():
            return p
    raise FileNotFoundError(f"no golden file for {name}.{fmt}")


def matches_golden(name: str, fmt: str, text: str) -> bool:
    p = golden_path(name, fmt)
    raw = text.encode("utf-8")
    if p.suffix == ".sha256":
        return p.read_text() == digest(raw)
    data = p.read_bytes()
    if p.suffix == ".gz":
        data = gzip.decompress(data)
    return data == raw


def write(name: str) -> None:
    for fmt, text in emissions(name).items():
        raw = text.encode("utf-8")
        for suffix in ("", ".gz", ".sha256"):
            (HERE / f"{name}.{fmt}{suffix}").unlink(missing_ok=True)
        if len(raw) > DIGEST_ABOVE:
            (HERE / f"{name}.{fmt}.sha256").write_text(digest(raw))
        elif len(raw) > GZIP_ABOVE:
            (HERE / f"{name}.{fmt}.gz").write_bytes(gzip.compress(raw, 9, mtime=0))
        else:
            (HERE / f"{name}.{fmt}").write_bytes(raw)
        print(f"{name}.{fmt}: {len(raw)} bytes")


if __name__ == "__main__":
    for n in sys.argv[1:] or task_names():
        write(n)
