"""Acceptance suite: one test per gating criterion, at stated scale and
tolerance. The conftest terminal hook prints a PASS/FAIL line per criterion
at the end of the run."""

import json
import struct
import time

import numpy as np
import pytest

from helpers import brute_force_ranking, make_cluster_fixture, make_random_entries
from test_cli import _run_pipeline, _write_fixture
from visrag import kb
from visrag.core import KnowledgeEntry, Taxonomy
from visrag.errors import (
    CountMismatch,
    DuplicateId,
    FormatError,
    NonFiniteValue,
    TaxonomyViolation,
)
from visrag.evaluate import prediction_metrics, topk_retrieval_accuracy
from visrag.llm import EchoFirstContextSpecies, MockLlmClient
from visrag.pca import pca_fit, pca_transform
from visrag.pipeline import (
    DEFAULT_QUESTION,
    Mode,
    assemble_prompt,
    classify_batch,
    load_default_descriptions,
    load_template,
    render_prompt,
)
from visrag.store import HnswParams, build_index

TAX = Taxonomy.default()


@pytest.mark.acceptance("oracle kNN equivalence (exact == brute force, all k)")
def test_oracle_knn_equivalence():
    start = time.monotonic()
    rng = np.random.default_rng(2024)
    for instance in range(50):
        n = int(rng.integers(1, 2001))
        dim = int(rng.integers(2, 129))
        entries = make_random_entries(n, dim, rng)
        if instance % 7 == 0 and n >= 4:
            # deliberate exact ties: duplicate one embedding under other ids
            dup = entries[0].embedding
            for j in (1, 2, 3):
                entries[j] = KnowledgeEntry(
                    id=entries[j].id, species=entries[j].species,
                    category=entries[j].category, description="d", embedding=dup,
                )
        idx = build_index(entries, "exact")
        matrix = np.stack([e.embedding for e in entries])
        for _ in range(2):
            q = rng.normal(size=dim).astype(np.float32)
            # querying with k = n yields the full ranking, whose every
            # prefix is the exact top-k: one comparison covers all k <= n
            hits = idx.query(q, k=n)
            order, sims = brute_force_ranking(matrix, q)
            assert [h.entry_id for h in hits] == [entries[i].id for i in order]
            assert [h.rank for h in hits] == list(range(1, n + 1))
            for h, i in zip(hits, order):
                assert abs(h.similarity - float(sims[i])) < 1e-9
    elapsed = time.monotonic() - start
    assert elapsed < 60.0, f"oracle equivalence took {elapsed:.1f}s (budget 60s)"


@pytest.mark.acceptance("HNSW recall@10 >= 0.95 on 10k x dim-64 store")
def test_hnsw_recall_at_scale():
    start = time.monotonic()
    rng = np.random.default_rng(99)
    entries = make_random_entries(10_000, 64, rng)
    exact = build_index(entries, "exact")
    approx = build_index(entries, HnswParams())  # defaults: m=16, efc=200, efs=64, seed=0
    recalls = []
    for _ in range(100):
        q = rng.normal(size=64).astype(np.float32)
        truth = {h.entry_id for h in exact.query(q, 10)}
        got = {h.entry_id for h in approx.query(q, 10)}
        recalls.append(len(truth & got) / 10.0)
    mean_recall = float(np.mean(recalls))
    elapsed = time.monotonic() - start
    assert mean_recall >= 0.95, f"mean recall@10 = {mean_recall:.4f}"
    assert elapsed < 120.0, f"recall run took {elapsed:.1f}s (budget 120s)"


@pytest.mark.acceptance("metric correctness vs independent recounts")
def test_metric_correctness_against_recounts():
    rng = np.random.default_rng(7)
    cats = sorted(TAX.categories)
    species_pool = sorted(TAX.species_of["Tuna"])
    for _ in range(100):
        n = int(rng.integers(1, 60))
        # -- retrieval metric vs recount, monotone in k
        hit_lists = [
            [str(c) for c in rng.choice(cats, size=int(rng.integers(1, 6)))]
            for _ in range(n)
        ]
        truths = [str(c) for c in rng.choice(cats, size=n)]
        prev = 0.0
        for k in range(1, 7):
            acc = topk_retrieval_accuracy(hit_lists, truths, k)
            recount = sum(1 for h, t in zip(hit_lists, truths) if t in h[:k]) / n
            assert acc == recount
            assert acc >= prev - 1e-12  # monotone non-decreasing
            prev = acc
        # -- species accuracy dominated by category accuracy on same hits
        sp_hits = [
            [str(s) for s in rng.choice(species_pool, size=len(h))] for h in hit_lists
        ]
        cat_hits = [[TAX.category_of(s) for s in hs] for hs in sp_hits]
        sp_truths = [str(s) for s in rng.choice(species_pool, size=n)]
        cat_truths = [TAX.category_of(s) for s in sp_truths]
        for k in (1, 2, 3):
            assert topk_retrieval_accuracy(sp_hits, sp_truths, k) <= (
                topk_retrieval_accuracy(cat_hits, cat_truths, k) + 1e-12
            )
        # -- prediction metrics vs recount
        preds = [
            None if rng.random() < 0.2 else str(c)
            for c in rng.choice(cats, size=n)
        ]
        rep = prediction_metrics(preds, truths, TAX)
        assert rep.final_top1 == sum(p == t for p, t in zip(preds, truths)) / n
        for c in cats:
            tp = sum(1 for p, t in zip(preds, truths) if p == t == c)
            fp = sum(1 for p, t in zip(preds, truths) if p == c and t != c)
            fn = sum(1 for p, t in zip(preds, truths) if t == c and p != c)
            m = rep.per_class[c]
            assert m.precision == (tp / (tp + fp) if tp + fp else None)
            assert m.recall == (tp / (tp + fn) if tp + fn else None)


@pytest.mark.acceptance("echo-mock bridge: final_top1 == retrieval top-1, >= 0.99")
def test_echo_mock_bridge_on_gaussian_clusters():
    start = time.monotonic()
    entries, queries = make_cluster_fixture(
        n_per_class=50, n_queries_per_class=50, sigma=0.05, dim=8, seed=42
    )
    index = build_index(entries, "exact")
    client = MockLlmClient(EchoFirstContextSpecies())
    predictions = classify_batch(
        index, client, queries, mode=Mode.RAG, k=3, taxonomy=TAX, max_in_flight=4
    )
    truths = [q.category for q in queries]
    final_top1 = prediction_metrics(
        [p.category for p in predictions], truths, TAX
    ).final_top1
    top1_labels = [
        [index.entry(h.entry_id).category for h in index.query(q.embedding, 1)]
        for q in queries
    ]
    retrieval_top1 = topk_retrieval_accuracy(top1_labels, truths, 1)
    elapsed = time.monotonic() - start
    assert final_top1 == retrieval_top1  # exact equality, not approximate
    assert final_top1 >= 0.99
    assert elapsed < 60.0, f"bridge run took {elapsed:.1f}s (budget 60s)"


@pytest.mark.acceptance("mode ablation shape (raw/category/rag prompt structure)")
def test_mode_ablation_prompt_shape():
    template = load_template()
    # raw: zero taxonomy terms, zero description text
    raw_prompt = render_prompt(assemble_prompt(Mode.RAW, DEFAULT_QUESTION, TAX), template)
    assert raw_prompt == "Question: What is the species of the fish?\nAnswer:"
    lowered = raw_prompt.lower()
    for term in TAX.categories | TAX.species_lexicon():
        assert term.lower() not in lowered
    for desc in load_default_descriptions().values():
        assert desc.lower() not in lowered
    # category: exactly the six categories, in the documented order
    cat_prompt = render_prompt(
        assemble_prompt(Mode.CATEGORY_LIST, DEFAULT_QUESTION, TAX), template
    )
    assert "Possible kinds: Billfish, Mahi mahi, Opah, Shark, Tuna, Other.\n" in cat_prompt
    # rag: exactly k blocks, in rank order, no category list
    entries, queries = make_cluster_fixture(n_per_class=5, n_queries_per_class=1, dim=8, seed=1)
    index = build_index(entries)
    for k in (1, 2, 3):
        hits = index.query(queries[0].embedding, k)
        descriptions = tuple(
            f"Species: {index.entry(h.entry_id).species}. "
            f"{index.entry(h.entry_id).description}"
            for h in hits
        )
        prompt = render_prompt(
            assemble_prompt(Mode.RAG, DEFAULT_QUESTION, TAX, hits, descriptions),
            template,
        )
        assert prompt.count("] Species:") == k
        positions = [prompt.index(f"[{r}] ") for r in range(1, k + 1)]
        assert positions == sorted(positions)
        assert f"[{k + 1}] " not in prompt
        assert "Possible kinds" not in prompt


@pytest.mark.acceptance("PCA correctness vs eigendecomposition oracle")
def test_pca_against_covariance_oracle():
    rng = np.random.default_rng(17)
    for _ in range(20):
        n = int(rng.integers(5, 80))
        dim = int(rng.integers(3, 24))
        x = rng.normal(size=(n, dim)) * rng.uniform(0.2, 4.0, size=dim)
        model = pca_fit(x, n_components=2)
        # independent oracle: eigendecomposition of the sample covariance
        mean = x.mean(axis=0)
        centered = x - mean
        cov = (centered.T @ centered) / (n - 1)
        w, v = np.linalg.eigh(cov)
        order = np.argsort(w)[::-1][:2]
        oracle_vars = w[order]
        oracle_comps = v[:, order].T
        assert np.allclose(model.explained_variance, oracle_vars, atol=1e-6)
        for got, want in zip(model.components, oracle_comps):
            assert abs(abs(float(got @ want)) - 1.0) < 1e-6  # up to sign
        gram = model.components @ model.components.T
        assert np.allclose(gram, np.eye(2), atol=1e-6)
        assert np.allclose(pca_transform(model, mean), 0.0, atol=1e-9)


@pytest.mark.acceptance("format round-trips bit-exact; malformed -> declared errors")
def test_format_round_trips_and_error_mapping(tmp_path):
    rng = np.random.default_rng(5)
    vecs = rng.normal(size=(100, 12)).astype(np.float32)
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    entries = [
        KnowledgeEntry(
            id=f"e{i:03d}", species="Tuna", category="Tuna",
            description=f"spécimen {i} — 魚", embedding=vecs[i],
        )
        for i in range(100)
    ]
    emb, meta = tmp_path / "s.vrag", tmp_path / "s.jsonl"
    kb.persist_entries(entries, emb, meta)
    again = kb.load_entries(emb, meta, TAX)
    assert all(a.embedding.tobytes() == b.embedding.tobytes() for a, b in zip(entries, again))
    assert all(
        (a.id, a.species, a.category, a.description)
        == (b.id, b.species, b.category, b.description)
        for a, b in zip(entries, again)
    )

    good = emb.read_bytes()

    def variant(name, data):
        p = tmp_path / name
        p.write_bytes(data)
        return p

    cases = [
        (variant("magic.vrag", b"NOPE" + good[4:]), FormatError),
        (variant("version.vrag", good[:4] + struct.pack("<H", 2) + good[6:]), FormatError),
        (variant("trunc.vrag", good[:-7]), FormatError),
        (variant("extra.vrag", good + b"\x00"), FormatError),
        (variant("header.vrag", good[:10]), FormatError),
        (
            variant("nan.vrag", good[:18] + struct.pack("<f", float("nan")) + good[22:]),
            NonFiniteValue,
        ),
    ]
    for path, expected in cases:
        with pytest.raises(expected):
            kb.read_embedding_file(path)

    # metadata-side malformed fixtures, each mapping to one declared class
    def meta_variant(name, lines):
        p = tmp_path / name
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return p

    small_emb = tmp_path / "two.vrag"
    kb.write_embedding_file(small_emb, vecs[:2])
    rec = '{"id": "%s", "species": "Tuna", "category": "Tuna", "description": "x"}'
    with pytest.raises(CountMismatch):
        kb.ingest(small_emb, meta_variant("count.jsonl", [rec % "a"]), TAX)
    with pytest.raises(DuplicateId):
        kb.ingest(small_emb, meta_variant("dup.jsonl", [rec % "a", rec % "a"]), TAX)
    with pytest.raises(FormatError):
        kb.ingest(small_emb, meta_variant("json.jsonl", [rec % "a", "{bad"]), TAX)
    with pytest.raises(FormatError):
        kb.ingest(
            small_emb,
            meta_variant("nodesc.jsonl", [rec % "a", '{"id": "b", "species": "Tuna", "category": "Tuna"}']),
            TAX,
        )
    with pytest.raises(TaxonomyViolation):
        kb.ingest(
            small_emb,
            meta_variant(
                "walrus.jsonl",
                [rec % "a", '{"id": "b", "species": "Walrus", "category": "Walrus", "description": "x"}'],
            ),
            TAX,
        )
    with pytest.raises(TaxonomyViolation):
        kb.ingest(
            small_emb,
            meta_variant(
                "pair.jsonl",
                [rec % "a", '{"id": "b", "species": "Albacore", "category": "Shark", "description": "x"}'],
            ),
            TAX,
        )


@pytest.mark.acceptance("CLI pipeline reproducibility (byte-identical outputs)")
def test_cli_pipeline_reproducibility(tmp_path):
    _write_fixture(tmp_path, n_per_class=10, n_queries_per_class=5)
    args = ("--engine", "hnsw", "--m", "8", "--seed", "11")
    outs1 = _run_pipeline(tmp_path, "x1", args)
    outs2 = _run_pipeline(tmp_path, "x2", args)
    by_tag1 = dict(zip(("store", "cls", "eval", "ret", "viz"), outs1))
    by_tag2 = dict(zip(("store", "cls", "eval", "ret", "viz"), outs2))
    compare = [
        ("cls", "predictions.jsonl"),
        ("eval", "report.json"),
        ("eval", "per_class.csv"),
        ("ret", "report.json"),
        ("ret", "per_class.csv"),
        ("viz", "coords.csv"),
        ("viz", "scatter.svg"),
    ]
    for tag, name in compare:
        assert (by_tag1[tag] / name).read_bytes() == (by_tag2[tag] / name).read_bytes(), (
            f"{tag}/{name} not byte-identical across identical runs"
        )
    report = json.loads((by_tag1["eval"] / "report.json").read_text())
    assert report["final_top1"] is not None
