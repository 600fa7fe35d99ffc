"""Clustering oracle, context rules, canonical document emission."""
from pathlib import Path

import numpy as np
import pytest

from actmap.errors import FormatError
from actmap.geometry import BoundingBox
from actmap.mapdoc import (ActivityInstance, ActivityMapDoc, Cluster, GroundTruthInterval,
                           attach_links, cluster_instances, doc_to_json, emit_map,
                           evaluate_against_ground_truth, filter_min_duration,
                           instances_from_classifications, load_map, make_link,
                           resolve_simultaneous_typing)
from actmap.proposals import Proposal

GOLDEN = Path(__file__).parent / "data" / "golden_actmap.json"


def inst(t0, t1, person="Ann", kind="typing", p=0.8):
    return ActivityInstance(kind, person, float(t0), float(t1), p)


def test_cluster_merges_below_gap():
    clusters = cluster_instances([inst(0, 3), inst(4, 7)], gap_seconds=3)
    assert len(clusters) == 1
    assert (clusters[0].t_start, clusters[0].t_end, clusters[0].n) == (0.0, 7.0, 2)


def test_cluster_gap_exactly_3_splits():
    clusters = cluster_instances([inst(0, 3), inst(6, 9)], gap_seconds=3)
    assert len(clusters) == 2


def merge_oracle(instances, gap):
    """Repeat-until-fixpoint pairwise merging (independent of the sweep)."""
    spans = [[i.t_start, i.t_end, (i.person, i.kind), 1] for i in instances]
    changed = True
    while changed:
        changed = False
        for a in range(len(spans)):
            for b in range(a + 1, len(spans)):
                sa, sb = spans[a], spans[b]
                if sa[2] != sb[2]:
                    continue
                lo, hi = (sa, sb) if sa[0] <= sb[0] else (sb, sa)
                if hi[0] - lo[1] < gap:
                    merged = [min(sa[0], sb[0]), max(sa[1], sb[1]), sa[2], sa[3] + sb[3]]
                    spans = [s for i, s in enumerate(spans) if i not in (a, b)] + [merged]
                    changed = True
                    break
            if changed:
                break
    return sorted((s[2][0], s[0], s[1], s[3]) for s in spans)


def test_cluster_matches_bruteforce_oracle():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 12))
        instances = []
        for _ in range(n):
            t0 = float(rng.uniform(0, 60))
            instances.append(inst(t0, t0 + float(rng.uniform(0.5, 8)),
                                  person=str(rng.choice(["A", "B"])),
                                  kind=str(rng.choice(["typing", "writing"]))))
        clusters = cluster_instances(instances, gap_seconds=3)
        got = sorted((c.person, c.t_start, c.t_end, c.n) for c in clusters)
        assert got == merge_oracle(instances, 3.0)


def test_cluster_idempotent():
    rng = np.random.default_rng(1)
    instances = [inst(float(t0), float(t0) + float(rng.uniform(1, 5)))
                 for t0 in rng.uniform(0, 100, size=20)]
    once = cluster_instances(instances, 3)
    again = cluster_instances([ActivityInstance(c.kind, c.person, c.t_start, c.t_end, c.p_mean)
                               for c in once], 3)
    assert [(c.t_start, c.t_end) for c in again] == [(c.t_start, c.t_end) for c in once]


def test_cluster_output_sorted_by_person_then_time():
    instances = [inst(10, 14, person="Zoe"), inst(0, 4, person="Zoe"), inst(5, 8, person="Al")]
    clusters = cluster_instances(instances, 1)
    assert [(c.person, c.t_start) for c in clusters] == [("Al", 5.0), ("Zoe", 0.0), ("Zoe", 10.0)]


def test_filter_min_duration():
    clusters = cluster_instances([inst(0, 2), inst(10, 15)], 1)
    assert filter_min_duration(clusters, 0) == clusters
    kept = filter_min_duration(clusters, 3)
    assert [(c.t_start, c.t_end) for c in kept] == [(10.0, 15.0)]
    rng = np.random.default_rng(2)
    for _ in range(100):
        cs = cluster_instances([inst(float(t), float(t) + float(rng.uniform(0.5, 6)))
                                for t in rng.uniform(0, 50, 8)], 3)
        min_s = float(rng.uniform(0, 8))
        out = filter_min_duration(cs, min_s)
        assert all(c in cs for c in out)
        assert all(c.span >= min_s for c in out)


def cl(t0, t1, person, p, kind="typing"):
    return Cluster(kind, person, float(t0), float(t1), 1, p)


def test_resolve_disjoint_unchanged():
    clusters = [cl(0, 5, "Ann", 0.9), cl(6, 10, "Bob", 0.8)]
    out = resolve_simultaneous_typing(clusters)
    assert {(c.person, c.t_start, c.t_end) for c in out} == {("Ann", 0, 5), ("Bob", 6, 10)}


def test_resolve_full_overlap_keeps_higher_probability():
    clusters = [cl(0, 10, "Ann", 0.9), cl(0, 10, "Bob", 0.6)]
    out = resolve_simultaneous_typing(clusters)
    assert len(out) == 1
    assert out[0].person == "Ann"


def test_resolve_partial_overlap_trims_loser():
    clusters = [cl(0, 10, "Ann", 0.9), cl(5, 20, "Bob", 0.6)]
    out = resolve_simultaneous_typing(clusters)
    spans = {(c.person, c.t_start, c.t_end) for c in out}
    assert spans == {("Ann", 0.0, 10.0), ("Bob", 10.0, 20.0)}


def test_resolve_split_in_the_middle():
    clusters = [cl(0, 30, "Ann", 0.6), cl(10, 20, "Bob", 0.9)]
    out = resolve_simultaneous_typing(clusters)
    spans = sorted((c.person, c.t_start, c.t_end) for c in out)
    assert spans == [("Ann", 0.0, 10.0), ("Ann", 20.0, 30.0), ("Bob", 10.0, 20.0)]


def test_resolve_random_patterns_single_typist_dense_sampling():
    rng = np.random.default_rng(3)
    for _ in range(100):
        clusters = []
        for person in ("A", "B", "C"):
            for _ in range(int(rng.integers(0, 4))):
                t0 = float(rng.uniform(0, 40))
                clusters.append(cl(t0, t0 + float(rng.uniform(1, 15)), person,
                                   float(rng.uniform(0.5, 0.99))))
        out = resolve_simultaneous_typing(clusters)
        before = sum(c.span for c in clusters)
        after = sum(c.span for c in out)
        assert after <= before + 1e-9
        for t in np.arange(0, 60, 0.1):
            active = [c for c in out if c.t_start <= t < c.t_end]
            assert len({c.person for c in active}) <= 1


def test_resolve_passes_writing_through():
    clusters = [cl(0, 10, "Ann", 0.9, kind="writing"), cl(0, 10, "Bob", 0.6, kind="writing")]
    out = resolve_simultaneous_typing(clusters)
    assert len(out) == 2


def test_make_link_floor_rule():
    assert make_link("https://host/v/1", 83.7) == "https://host/v/1?t=83"
    assert make_link("https://host/v/1", 0.0) == "https://host/v/1?t=0"
    with pytest.raises(ValueError):
        make_link("", 5)


def test_link_roundtrip_recovers_floor():
    rng = np.random.default_rng(4)
    for _ in range(50):
        t = float(rng.uniform(0, 5000))
        link = make_link("https://h/v", t)
        assert int(link.rsplit("?t=", 1)[1]) == int(np.floor(t))


def test_instances_from_classifications_threshold():
    props = [Proposal("typing", "Ann", k * 90, BoundingBox(0, 0, 10, 10)) for k in range(3)]
    instances = instances_from_classifications(props, [0.3, 0.5, 0.9])
    assert [(i.t_start, i.t_end) for i in instances] == [(3.0, 6.0), (6.0, 9.0)]  # 0.5 counts


def sample_doc():
    instances = [inst(0, 3, "Ann", p=0.9), inst(4, 7, "Ann", p=0.7),
                 inst(30, 33, "Bob", p=0.8), inst(60, 63, "Cid", p=0.6),
                 inst(61, 64, "Bob", p=0.9)]
    clusters = resolve_simultaneous_typing(cluster_instances(instances, 3))
    doc = ActivityMapDoc(session_id="synthetic-S1", duration_seconds=120.0,
                         video_url="https://example.org/v/s1",
                         clusters=clusters,
                         parameters={"gap_seconds": 3.0, "min_duration_seconds": 0.0,
                                     "threshold": 0.5, "one_keyboard_rule": True})
    gt = [GroundTruthInterval("Ann", "typing", 0.0, 8.0),
          GroundTruthInterval("Dee", "typing", 100.0, 110.0)]
    doc.evaluation = evaluate_against_ground_truth(doc.clusters, gt)
    attach_links(doc)
    return doc


def test_emit_empty_doc_is_valid(tmp_path):
    doc = ActivityMapDoc("s", 10.0, "https://h/v", clusters=[])
    path = tmp_path / "m.json"
    emit_map(doc, path)
    back = load_map(path)
    assert back.clusters == []
    assert back.session_id == "s"


def test_emit_parse_emit_byte_identical(tmp_path):
    doc = sample_doc()
    p1 = tmp_path / "a.json"
    emit_map(doc, p1)
    back = load_map(p1)
    p2 = tmp_path / "b.json"
    emit_map(back, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_wrong_schema_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"schema": "actmap/2", "clusters": []}')
    with pytest.raises(FormatError, match="actmap/1"):
        load_map(path)


def test_evaluation_marks():
    doc = sample_doc()
    ev = doc.evaluation
    tp_people = {doc.clusters[i].person for i in ev["tp"]}
    fp_people = {doc.clusters[i].person for i in ev["fp"]}
    assert tp_people == {"Ann"}
    assert "Bob" in fp_people
    assert [g["person"] for g in ev["fn"]] == ["Dee"]


def test_golden_document():
    got = doc_to_json(sample_doc())
    assert got == GOLDEN.read_text()
