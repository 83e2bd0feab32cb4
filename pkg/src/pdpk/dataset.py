"""Dataset assembly, manifest and on-disk layout."""

from __future__ import annotations

import json
import os
import shutil
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from . import __version__
from .config import GeneratorConfig
from .kg import (
    REPRESENTATIONS,
    FixedCount,
    FreedmanDiaconis,
    KnowledgeGraph,
    Rule,
    build_kg,
    dependency_samples,
    extract_rules,
)
from .pqspace import PQSpace, ValueRange, build_pq_space
from .process import ParametrisationProcess, ProcessIteration, generate_processes
from .rng import substream
from .serialize import (
    metadata_turtle,
    process_csv_text,
    read_process_rows,
    read_turtle,
    turtle_text,
)

PROCESS_FILE = "process_data.csv"
MANIFEST_FILE = "manifest.json"
METADATA_FILE = "metadata.ttl"


def kg_file(representation: str) -> str:
    return f"kg_{representation}.ttl"


DATASET_FILES = (PROCESS_FILE, *(kg_file(r) for r in REPRESENTATIONS), MANIFEST_FILE, METADATA_FILE)


@dataclass
class Dataset:
    config: GeneratorConfig
    space: PQSpace
    processes: list[ParametrisationProcess]
    rules: list[Rule]
    kgs: Mapping[str, KnowledgeGraph]
    manifest: dict = field(default_factory=dict)

    def iteration_count(self) -> int:
        return sum(len(p.iterations) for p in self.processes)


def condition_strategy(config: GeneratorConfig, space: PQSpace):
    if config.condition_strategy == "fixed_count":
        return FixedCount(config.condition_bins)
    return FreedmanDiaconis(dependency_samples(space))


def generate_dataset(config: GeneratorConfig) -> Dataset:
    """Space, processes, rules and all four graphs for ``config``."""
    space = build_pq_space(config, substream(config.seed, "space"))
    processes = generate_processes(space, config, substream(config.seed, "processes"))
    rules = extract_rules(space, condition_strategy(config, space))
    kgs = {rep: build_kg(rules, rep) for rep in REPRESENTATIONS} if rules else {}
    ds = Dataset(config, space, processes, rules, kgs)
    ds.manifest = build_manifest(ds)
    return ds


def _rule_dict(r: Rule) -> dict:
    return {"quality": r.quality, "parameter": r.parameter, "lower": r.condition_range.min,
            "upper": r.condition_range.max, "rho": r.quantified_adjustment}


def rule_from_dict(d: Mapping) -> Rule:
    return Rule(int(d["quality"]), int(d["parameter"]), ValueRange(float(d["lower"]), float(d["upper"])),
                float(d["rho"]))


def build_manifest(ds: Dataset) -> dict:
    kg_counts = {}
    for rep, kg in ds.kgs.items():
        kg_counts[rep] = {
            "triples": len(kg.triples),
            "edges": len(kg.entity_triples()),
            "vertices": len(kg.vertices()),
            "relations": len(kg.structural_relations()),
        }
    return {
        "format": "pdpk-manifest",
        "version": __version__,
        "config": ds.config.to_dict(),
        "counts": {
            "parameters": len(ds.space.parameters),
            "qualities": len(ds.space.qualities),
            "dependencies": len(ds.space.dependencies),
            "known": len(ds.space.known),
            "processes": len(ds.processes),
            "iterations": ds.iteration_count(),
            "rules": len(ds.rules),
            "kg": kg_counts,
        },
        "files": [PROCESS_FILE, *(kg_file(rep) for rep in ds.kgs), MANIFEST_FILE, METADATA_FILE],
        "space": ds.space.to_dict(),
        "processes": [
            {"id": p.id, "behaviour": p.behaviour, "q_opt": list(p.q_opt), "threshold": p.threshold,
             "converged": p.converged, "iterations": len(p.iterations)}
            for p in ds.processes
        ],
        "rules": [_rule_dict(r) for r in ds.rules],
        "annotations": {rep: {iri: dict(a) for iri, a in sorted(kg.annotations.items())}
                        for rep, kg in ds.kgs.items()},
    }


def manifest_text(manifest: dict) -> str:
    return json.dumps(manifest, indent=2) + "\n"


def dataset_texts(ds: Dataset) -> dict[str, str]:
    """Every output file of ``ds`` as text, keyed by file name."""
    out = {PROCESS_FILE: process_csv_text(ds.processes, len(ds.space.parameters), len(ds.space.qualities))}
    for rep, kg in ds.kgs.items():
        out[kg_file(rep)] = turtle_text(kg)
    out[MANIFEST_FILE] = manifest_text(ds.manifest)
    out[METADATA_FILE] = metadata_turtle(ds.manifest)
    return out


def write_files_atomically(out_dir, texts: Mapping[str, str]) -> None:
    """Write all files into a sibling temp dir first, then move them in place."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
    try:
        for name, text in texts.items():
            target = tmp / name
            target.parent.mkdir(parents=True, exist_ok=True)
            with open(target, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        if not out_dir.exists():
            os.replace(tmp, out_dir)
            return
        for name in texts:
            dest = out_dir / name
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(tmp / name, dest)
    finally:
        if tmp.exists():
            shutil.rmtree(tmp)


def write_dataset(ds: Dataset, out_dir) -> None:
    write_files_atomically(out_dir, dataset_texts(ds))


def read_manifest(dataset_dir) -> dict:
    with open(Path(dataset_dir) / MANIFEST_FILE, encoding="utf-8") as fh:
        return json.load(fh)


def load_dataset(dataset_dir) -> Dataset:
    """Rebuild a :class:`Dataset` from files written by :func:`write_dataset`.

    Process values come back at the CSV's 9-digit precision.
    """
    d = Path(dataset_dir)
    manifest = read_manifest(d)
    config = GeneratorConfig(**manifest["config"])
    space = PQSpace.from_dict(manifest["space"])
    rules = [rule_from_dict(r) for r in manifest["rules"]]
    kgs = {}
    for rep in REPRESENTATIONS:
        path = d / kg_file(rep)
        if path.exists():
            kgs[rep] = read_turtle(path, rep, manifest["annotations"].get(rep, {}))
    with open(d / PROCESS_FILE, encoding="utf-8") as fh:
        header, rows = read_process_rows(fh.read())
    processes = _processes_from_rows(header, rows, manifest["processes"], len(space.parameters))
    return Dataset(config, space, processes, rules, kgs, manifest)


def _processes_from_rows(header, rows, meta, p_count) -> list[ParametrisationProcess]:
    by_id: dict[int, list[ProcessIteration]] = {}
    for row in rows:
        values = [float(x) for x in row[4:]]
        it = ProcessIteration(int(row[2]), tuple(values[:p_count]), tuple(values[p_count:]), float(row[3]))
        by_id.setdefault(int(row[0]), []).append(it)
    return [
        ParametrisationProcess(m["id"], m["behaviour"], tuple(m["q_opt"]), m["threshold"],
                               tuple(by_id.get(m["id"], ())), m["converged"])
        for m in meta
    ]
