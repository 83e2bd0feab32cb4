import io
import json
from collections import Counter

import numpy as np
import pytest
import rdflib
from hypothesis import given, settings
from hypothesis import strategies as st

from pdpk.config import GeneratorConfig, config_fields, load_config
from pdpk.dataset import DATASET_FILES, dataset_texts, generate_dataset, load_dataset, write_dataset
from pdpk.errors import ConfigError, SplitInfeasibleError, TurtleParseError
from pdpk.kg import REPRESENTATIONS, XSD_DOUBLE, KnowledgeGraph, Literal, Rule, build_kg
from pdpk.pqspace import ValueRange
from pdpk.process import ParametrisationProcess, ProcessIteration
from pdpk.rng import substream, substream_seed
from pdpk.serialize import csv_header, parse_turtle, process_csv_text, turtle_text, write_process_csv
from pdpk.splits import DOWNSTREAM, LINK_PREDICTION, split_downstream, split_link_prediction


class TestConfig:
    def test_defaults(self):
        cfg = load_config("{}")
        assert (cfg.seed, cfg.p_count, cfg.q_count) == (42, 46, 16)
        assert (cfg.pq_causal_share, cfg.pq_known_share) == (0.10, 0.75)
        assert (cfg.fanout_min, cfg.fanout_max, cfg.max_iterations, cfg.total_iterations) == (1, 14, 15, 500)

    def test_overrides(self):
        cfg = load_config('{"seed": 7, "total_iterations": 100}')
        assert cfg.seed == 7 and cfg.total_iterations == 100 and cfg.p_count == 46

    @pytest.mark.parametrize("text,path", [
        ('{"pq_causal_share": 1.5}', "pq_causal_share"),
        ('{"fanout_max": 17}', "fanout_max"),
        ('{"lp_test_fraction": 0}', "lp_test_fraction"),
        ('{"seed": "x"}', "seed"),
        ('{"parameter_domains": [5, 1]}', "parameter_domains"),
        ('{"colour": 1}', "colour"),
        ("[1]", ""),
        ("{", ""),
    ])
    def test_rejections(self, text, path):
        with pytest.raises(ConfigError) as err:
            load_config(text)
        assert path in [p for p, _ in err.value.problems]

    def test_fields_round_trip(self):
        assert load_config(json.dumps(config_fields())) == GeneratorConfig()


def _process(pid, n, p=2, q=1):
    its = tuple(ProcessIteration(i, tuple(float(i + k) / 3 for k in range(p)), (0.5,) * q, 0.25) for i in range(n))
    return ParametrisationProcess(pid, "exploitative", (0,), 0.1, its, False)


class TestCsv:
    def test_shape(self):
        text = process_csv_text([_process(0, 3)], 2, 1)
        lines = text.split("\n")
        assert lines[-1] == "" and "\r" not in text
        rows = lines[:-1]
        assert len(rows) == 4
        assert all(len(r.split(",")) == 7 for r in rows)
        assert rows[0] == "process_id,behaviour,iteration,score,p_0,p_1,q_0"
        assert rows[2].split(",")[4] == "0.333333333"

    def test_empty(self):
        buf = io.StringIO()
        write_process_csv([], 2, 1, buf)
        assert buf.getvalue() == ",".join(csv_header(2, 1)) + "\n"

    def test_order_and_determinism(self):
        procs = [_process(1, 2), _process(0, 2)]
        text = process_csv_text(procs, 2, 1)
        assert text == process_csv_text(procs, 2, 1)
        assert [r.split(",")[0] for r in text.splitlines()[1:]] == ["0", "0", "1", "1"]

    def test_benchmark_columns(self, benchmark):
        text = dataset_texts(benchmark)["process_data.csv"]
        rows = text.splitlines()
        assert len(rows) == 1 + benchmark.iteration_count()
        assert {len(r.split(",")) for r in rows} == {4 + 46 + 16}


class TestTurtle:
    def test_single_rule_statements(self):
        kg = build_kg([Rule(0, 0, ValueRange(0, 10), -1.0)], "ch_e")
        body = [ln for ln in turtle_text(kg).splitlines() if ln and not ln.startswith("@prefix")]
        assert len(body) == 2

    @pytest.mark.parametrize("rep", REPRESENTATIONS)
    def test_rdflib_agrees(self, benchmark, rep):
        kg = benchmark.kgs[rep]
        text = turtle_text(kg)
        g = rdflib.Graph().parse(data=text, format="turtle")
        assert len(g) == len(kg.triples)
        ours = {(h, r, ("lit", t.value) if isinstance(t, Literal) else t) for h, r, t in kg.iri_triples()}
        theirs = set()
        for s, p, o in g:
            if isinstance(o, rdflib.Literal):
                assert str(o.datatype) == XSD_DOUBLE
                theirs.add((str(s), str(p), ("lit", float(o))))
            else:
                theirs.add((str(s), str(p), str(o)))
        assert ours == theirs

    def test_sorted_and_deterministic(self, benchmark):
        kg = benchmark.kgs["ch_l_eta"]
        text = turtle_text(kg)
        assert text == turtle_text(build_kg(benchmark.rules, "ch_l_eta"))
        body = [ln for ln in text.splitlines() if ln and not ln.startswith("@prefix")]
        assert len(body) == len(kg.triples)

    @pytest.mark.parametrize("rep", REPRESENTATIONS)
    def test_round_trip(self, benchmark, rep):
        kg = benchmark.kgs[rep]
        back = parse_turtle(turtle_text(kg), rep, kg.annotations)
        assert back == kg
        assert turtle_text(back) == turtle_text(kg)

    def test_parse_errors(self):
        with pytest.raises(TurtleParseError):
            parse_turtle("ex:a ex:b ex:c .\n", "ch_e")
        with pytest.raises(TurtleParseError):
            parse_turtle("@prefix ex: <http://e/> .\nex:a ex:b .\n", "ch_e")

    @settings(max_examples=60, deadline=None)
    @given(st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False))
    def test_literal_round_trip(self, x):
        kg = KnowledgeGraph.from_iri_triples("ch_l_eta", [("http://purl.org/pdpk/entity#ann_0_0_0_10",
                                                           "http://purl.org/pdpk/vocab#adjustmentValue",
                                                           Literal(x))])
        back = parse_turtle(turtle_text(kg), "ch_l_eta")
        assert back.triples[0][2].value == x


class TestDataset:
    def test_manifest_counts(self, benchmark):
        m = benchmark.manifest
        assert m["counts"]["processes"] == len(benchmark.processes)
        assert m["counts"]["iterations"] == benchmark.iteration_count()
        assert m["counts"]["rules"] == len(benchmark.rules)
        assert m["counts"]["dependencies"] == len(benchmark.space.dependencies)
        for rep, kg in benchmark.kgs.items():
            assert m["counts"]["kg"][rep]["edges"] == len(kg.entity_triples())
        assert sorted(m["files"]) == sorted(DATASET_FILES)

    def test_write_and_load(self, benchmark, tmp_path):
        write_dataset(benchmark, tmp_path / "ds")
        assert sorted(p.name for p in (tmp_path / "ds").iterdir()) == sorted(DATASET_FILES)
        ds = load_dataset(tmp_path / "ds")
        assert ds.config == benchmark.config
        assert ds.rules == benchmark.rules
        assert ds.kgs == benchmark.kgs
        assert dataset_texts(ds) == dataset_texts(benchmark)
        for text in dataset_texts(ds).values():
            assert "\r" not in text

    def test_regeneration_is_byte_identical(self, benchmark):
        assert dataset_texts(generate_dataset(GeneratorConfig())) == dataset_texts(benchmark)

    def test_substreams_are_distinct(self):
        seeds = {substream_seed(42, n) for n in ("space", "processes", "lp_split", "downstream_split", "embeddings")}
        assert len(seeds) == 5


def _toy_kg(n_rules):
    return build_kg([Rule(j % 3, k, ValueRange(0, 10), -1.0) for j, k in zip(range(n_rules), range(n_rules))], "ch_e")


class TestLinkPredictionSplit:
    def test_counts(self):
        kg = KnowledgeGraph.from_iri_triples("ch_e", [(f"e:{i % 3}", "r:x", f"e:{3 + i % 4}") for i in range(10)] +
                                             [(f"e:{i % 2}", "r:y", f"e:{5 + i % 3}") for i in range(6)])
        source = kg.entity_triples()
        res = split_link_prediction(kg, 0.2, np.random.default_rng(0))
        assert len(res.test) == round(0.2 * len(source))
        assert not set(res.test) & set(res.train)
        assert set(res.test) | set(res.train) == set(kg.triples)

    def test_ten_triples(self):
        triples = [(f"e:{h}", "r:x", f"e:{t}") for h, t in
                   [(0, 1), (1, 2), (2, 0), (0, 2), (1, 0), (2, 1), (0, 3), (3, 1), (3, 2), (2, 3)]]
        kg = KnowledgeGraph.from_iri_triples("ch_e", triples)
        res = split_link_prediction(kg, 0.2, np.random.default_rng(1))
        assert (len(res.test), len(res.train)) == (2, 8)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.6))
    def test_evaluability(self, benchmark, seed, fraction):
        kg = benchmark.kgs["rei_e"]
        res = split_link_prediction(kg, fraction, np.random.default_rng(seed))
        train_ents = Counter()
        train_rels = set()
        for h, r, t in res.train:
            if not isinstance(t, Literal):
                train_ents.update((h, t))
                train_rels.add(r)
        for h, r, t in res.test:
            assert train_ents[h] and train_ents[t] and r in train_rels
        assert res.report["requested_test"] - len(res.test) >= 0

    def test_singleton_tail_never_in_test(self):
        kg = _toy_kg(6)
        once = {e for e, c in Counter(x for h, _, t in kg.entity_triples() for x in (h, t)).items() if c == 1}
        for seed in range(30):
            res = split_link_prediction(kg, 0.5, np.random.default_rng(seed))
            assert not any(h in once or t in once for h, _, t in res.test)

    def test_deterministic(self, benchmark):
        kg = benchmark.kgs["ch_e"]
        a = split_link_prediction(kg, 0.2, substream(42, "lp_split"))
        b = split_link_prediction(kg, 0.2, substream(42, "lp_split"))
        assert a.test == b.test and a.kind == LINK_PREDICTION

    def test_infeasible(self):
        kg = build_kg([Rule(0, 0, ValueRange(0, 10), -1.0)], "ch_e")
        with pytest.raises(SplitInfeasibleError):
            split_link_prediction(kg, 0.5, np.random.default_rng(0))
        single = KnowledgeGraph.from_iri_triples("ch_e", [("e:a", "r:x", "e:b")])
        with pytest.raises(SplitInfeasibleError):
            split_link_prediction(single, 0.5, np.random.default_rng(0))

    def test_bad_fraction(self, benchmark):
        with pytest.raises(ValueError):
            split_link_prediction(benchmark.kgs["ch_e"], 0.0, np.random.default_rng(0))

    def test_literals_stay_in_train(self, benchmark):
        kg = benchmark.kgs["ch_l_eta"]
        res = split_link_prediction(kg, 0.3, np.random.default_rng(0))
        lit = kg.literal_layer_relations()
        assert all(r not in lit for _, r, _ in res.test)
        assert all(tr in res.train for tr in kg.triples if isinstance(tr[2], Literal))


class TestDownstreamSplit:
    def test_counts_and_noop(self, benchmark):
        res = split_downstream(benchmark, 0.2, substream(42, "downstream_split"))
        n = benchmark.iteration_count()
        assert len(res.test) == int(0.2 * n + 0.5)
        assert len(res.train) + len(res.test) == n
        assert not set(res.train) & set(res.test)
        assert res.kind == DOWNSTREAM
        assert all(res.pruned_kg[rep] == kg for rep, kg in benchmark.kgs.items())
        assert res.report["pruning"].startswith("no-op")

    def test_five_hundred(self, benchmark):
        ds = benchmark
        from dataclasses import replace
        trimmed, total = [], 0
        for p in ds.processes:
            its = p.iterations[: max(0, 500 - total)]
            if its:
                trimmed.append(replace(p, iterations=its))
                total += len(its)
        res = split_downstream(replace(ds, processes=trimmed), 0.2, np.random.default_rng(0))
        assert total == 500 and len(res.test) == 100

    def test_independent_of_lp_stream(self, benchmark):
        a = split_downstream(benchmark, 0.2, substream(42, "downstream_split"))
        b = split_downstream(benchmark, 0.2, substream(42, "lp_split"))
        assert a.test != b.test
