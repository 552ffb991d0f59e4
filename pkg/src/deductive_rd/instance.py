"""Plain-text instance files.

::

    % optional comment lines (generator metadata lives here)
    [rules]
    c :- a, b.
    [stored]
    a. p=0.3333333333333333
    b. p=0.3333333333333333
    c. p=0.3333333333333333
    [reconstruction]
    stored

Stored lines keep the canonical scan order.  Probabilities are written with
``repr`` so a write/read round trip is lossless.  The reconstruction section is
``stored``, ``closure`` or one fact per line.
"""
from __future__ import annotations

import re
from pathlib import Path
from typing import Mapping

from .datalog import DatalogSyntaxError, parse_facts, parse_program
from .source import DeductiveSource, SourceError

SECTIONS = ("rules", "stored", "reconstruction")
_HEADER = re.compile(r"^\[(\w+)\]\s*$")
_PROB = re.compile(r"^(?P<fact>.*?\.)\s*p\s*=\s*(?P<p>\S+)\s*$")


class InstanceFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def _split(text: str) -> dict[str, list[tuple[int, str]]]:
    parts: dict[str, list[tuple[int, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        m = _HEADER.match(line)
        if m:
            current = m.group(1).lower()
            if current not in SECTIONS:
                raise InstanceFormatError(f"unknown section [{current}]", lineno)
            if current in parts:
                raise InstanceFormatError(f"duplicate section [{current}]", lineno)
            parts[current] = []
        elif current is None:
            raise InstanceFormatError("content before the first section header", lineno)
        else:
            parts[current].append((lineno, line))
    return parts


def _reparse(lines: list[tuple[int, str]], parser):
    # keep original line numbers in syntax errors
    out = []
    for lineno, line in lines:
        try:
            out.extend(parser(line))
        except DatalogSyntaxError as exc:
            raise InstanceFormatError(str(exc).split(": ", 1)[-1], lineno) from None
    return out


def loads(text: str, cap: int | None = None) -> DeductiveSource:
    parts = _split(text)
    if "stored" not in parts:
        raise InstanceFormatError("missing [stored] section")
    rules_text = "\n".join(line for _, line in parts.get("rules", []))
    try:
        program = parse_program(rules_text)
    except DatalogSyntaxError as exc:
        raise InstanceFormatError(str(exc)) from None
    stored, probs = [], []
    for lineno, line in parts["stored"]:
        m = _PROB.match(line)
        fact_text = m.group("fact") if m else line
        facts = _reparse([(lineno, fact_text)], parse_facts)
        if len(facts) != 1:
            raise InstanceFormatError("expected one fact per stored line", lineno)
        stored.append(facts[0])
        if m:
            try:
                probs.append(float(m.group("p")))
            except ValueError:
                raise InstanceFormatError(f"bad probability {m.group('p')!r}", lineno) from None
    if probs and len(probs) != len(stored):
        raise InstanceFormatError("give a probability on every stored line or on none")
    recon_lines = parts.get("reconstruction", [])
    if not recon_lines:
        recon = "stored"
    elif len(recon_lines) == 1 and recon_lines[0][1] in ("stored", "closure"):
        recon = recon_lines[0][1]
    else:
        recon = _reparse(recon_lines, parse_facts)
    kwargs = {} if cap is None else {"cap": cap}
    try:
        return DeductiveSource.build(program, stored, probs or None, recon, **kwargs)
    except SourceError as exc:
        raise InstanceFormatError(str(exc)) from None


def load(path: str | Path, cap: int | None = None) -> DeductiveSource:
    return loads(Path(path).read_text(), cap=cap)


def dumps(source: DeductiveSource, meta: Mapping[str, object] | None = None) -> str:
    lines = [f"% {k}={v}" for k, v in (meta or {}).items()]
    lines.append("[rules]")
    lines.extend(str(source.program).splitlines())
    lines.append("[stored]")
    lines.extend(f"{s}. p={p!r}" for s, p in zip(source.stored, source.probs))
    lines.append("[reconstruction]")
    if source.recon == tuple(sorted(source.stored)):
        lines.append("stored")
    elif source.recon == tuple(sorted(source.cn)):
        lines.append("closure")
    else:
        lines.extend(f"{t}." for t in source.recon)
    return "\n".join(lines) + "\n"


def dump(source: DeductiveSource, path: str | Path, meta: Mapping[str, object] | None = None) -> None:
    Path(path).write_text(dumps(source, meta))
