"""Byte-deterministic Turtle and CSV writers, plus readers for the same dialect.

The Turtle reader only understands what :func:`write_turtle` emits (prefix
declarations followed by one ``subject predicate object .`` statement per
line); anything else raises :class:`TurtleParseError`.
"""

from __future__ import annotations

import csv
import io
import json
import re
from typing import Iterable, TextIO

from .errors import TurtleParseError
from .kg import ENTITY, VOCAB, XSD, XSD_DOUBLE, KnowledgeGraph, Literal

PREFIXES = (("ent", ENTITY), ("pdpk", VOCAB), ("xsd", XSD))
_LOCAL_OK = re.compile(r"^[A-Za-z][A-Za-z0-9_.\-]*(?<!\.)$")


def _term(iri: str) -> str:
    for prefix, ns in PREFIXES:
        if iri.startswith(ns) and _LOCAL_OK.match(iri[len(ns):]):
            return f"{prefix}:{iri[len(ns):]}"
    return f"<{iri}>"


def _literal(lit: Literal) -> str:
    return f'"{lit.lexical}"^^{_term(lit.datatype)}'


def _sort_key(triple):
    h, r, t = triple
    return (h, r, t.lexical if isinstance(t, Literal) else t)


def turtle_text(kg: KnowledgeGraph) -> str:
    lines = [f"@prefix {p}: <{ns}> ." for p, ns in PREFIXES]
    lines.append("")
    for h, r, t in sorted(kg.iri_triples(), key=_sort_key):
        obj = _literal(t) if isinstance(t, Literal) else _term(t)
        lines.append(f"{_term(h)} {_term(r)} {obj} .")
    return "\n".join(lines) + "\n"


def write_turtle(kg: KnowledgeGraph, sink: TextIO) -> None:
    sink.write(turtle_text(kg))


_PREFIX_LINE = re.compile(r"^@prefix\s+([A-Za-z][\w\-]*)?:\s*<([^>]*)>\s*\.$")
_TOKEN = re.compile(r'"((?:[^"\\]|\\.)*)"(?:\^\^(\S+))?|<[^>]*>|[^\s]+')


def _expand(token: str, prefixes: dict, lineno: int) -> str:
    if token.startswith("<") and token.endswith(">"):
        return token[1:-1]
    prefix, sep, local = token.partition(":")
    if not sep or prefix not in prefixes:
        raise TurtleParseError(f"line {lineno}: cannot resolve term {token!r}")
    return prefixes[prefix] + local


def parse_turtle(text: str, representation: str, annotations=None) -> KnowledgeGraph:
    prefixes: dict[str, str] = {}
    triples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _PREFIX_LINE.match(line)
        if m:
            prefixes[m.group(1) or ""] = m.group(2)
            continue
        if not line.endswith(" ."):
            raise TurtleParseError(f"line {lineno}: expected one statement terminated by ' .'")
        body = line[:-2].strip()
        tokens = [m for m in _TOKEN.finditer(body)]
        if len(tokens) != 3:
            raise TurtleParseError(f"line {lineno}: expected subject, predicate and object")
        subj = _expand(tokens[0].group(0), prefixes, lineno)
        pred = _expand(tokens[1].group(0), prefixes, lineno)
        obj_tok = tokens[2]
        if obj_tok.group(0).startswith('"'):
            datatype = _expand(obj_tok.group(2), prefixes, lineno) if obj_tok.group(2) else XSD_DOUBLE
            if datatype != XSD_DOUBLE:
                raise TurtleParseError(f"line {lineno}: unsupported datatype {datatype}")
            obj = Literal(float(obj_tok.group(1)), datatype)
        else:
            obj = _expand(obj_tok.group(0), prefixes, lineno)
        triples.append((subj, pred, obj))
    return KnowledgeGraph.from_iri_triples(representation, triples, annotations)


def read_turtle(path, representation: str, annotations=None) -> KnowledgeGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_turtle(fh.read(), representation, annotations)


def metadata_turtle(manifest: dict) -> str:
    """Small provenance document describing the generating configuration."""
    subject = "<http://purl.org/pdpk/dataset>"
    lines = [f"@prefix pdpk: <{VOCAB}> .", f"@prefix xsd: <{XSD}> .", ""]
    props = [("generatorVersion", manifest["version"])]
    props += [(f"config_{k}", v) for k, v in manifest["config"].items()]
    props += [(f"count_{k}", v) for k, v in manifest["counts"].items() if isinstance(v, int)]
    for name, value in props:
        if isinstance(value, str):
            obj = json.dumps(value)
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            # structured values are embedded as JSON text
            obj = json.dumps(json.dumps(value))
        elif isinstance(value, int):
            obj = f'"{value}"^^xsd:integer'
        else:
            obj = f'"{value!r}"^^xsd:double'
        lines.append(f"{subject} pdpk:{name} {obj} .")
    return "\n".join(lines) + "\n"


# -- process data ---------------------------------------------------------

def csv_header(p_count: int, q_count: int) -> list[str]:
    return (["process_id", "behaviour", "iteration", "score"]
            + [f"p_{k}" for k in range(p_count)] + [f"q_{j}" for j in range(q_count)])


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def write_process_csv(processes: Iterable, p_count: int, q_count: int, sink: TextIO) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(csv_header(p_count, q_count))
    for proc in sorted(processes, key=lambda p: p.id):
        for it in proc.iterations:
            writer.writerow([proc.id, proc.behaviour, it.index, _fmt(it.score)]
                            + [_fmt(x) for x in it.parametrisation] + [_fmt(x) for x in it.qualities])


def process_csv_text(processes: Iterable, p_count: int, q_count: int) -> str:
    buf = io.StringIO()
    write_process_csv(processes, p_count, q_count, buf)
    return buf.getvalue()


def read_process_rows(text: str) -> tuple[list[str], list[list[str]]]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return [], []
    return rows[0], rows[1:]
