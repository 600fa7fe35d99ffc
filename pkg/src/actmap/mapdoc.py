"""Activity-map documents: clustering, context rules, canonical emission.

Classified proposals become activity instances; same-person instances less
than gap_seconds apart merge into clusters; context rules drop short
clusters and enforce the one-keyboard rule. The emitted "actmap/1" JSON is
canonical (sorted keys, 3-decimal floats) so output is byte-reproducible,
and it is the contract consumed by the web viewer.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .errors import FormatError

SCHEMA = "actmap/1"
DEFAULT_GAP_SECONDS = 3.0
SOURCE_FPS = 30


@dataclass(frozen=True)
class ActivityInstance:
    kind: str
    person: str
    t_start: float
    t_end: float
    probability: float

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError(f"instance must have t_end > t_start, got [{self.t_start}, {self.t_end}]")
        if not 0.0 < self.probability < 1.0:
            raise ValueError(f"probability must be in (0,1), got {self.probability}")


@dataclass(frozen=True)
class Cluster:
    kind: str
    person: str
    t_start: float
    t_end: float
    n: int
    p_mean: float
    link: str | None = None

    @property
    def span(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class GroundTruthInterval:
    person: str
    kind: str
    t_start: float
    t_end: float


def instances_from_classifications(proposals, probabilities, threshold: float = 0.5,
                                   fps: int = SOURCE_FPS) -> list[ActivityInstance]:
    """Proposals at or above the probability threshold become instances."""
    out = []
    for prop, p in zip(proposals, probabilities):
        if p >= threshold:
            out.append(ActivityInstance(prop.activity_kind, prop.person,
                                        prop.frame_start / fps,
                                        (prop.frame_start + prop.duration) / fps,
                                        float(p)))
    return out


def cluster_instances(instances, gap_seconds: float = DEFAULT_GAP_SECONDS) -> list[Cluster]:
    """Merge same-person, same-kind instances whose gap is strictly below
    gap_seconds; output sorted by (person, t_start)."""
    groups: dict[tuple[str, str], list[ActivityInstance]] = {}
    for inst in instances:
        groups.setdefault((inst.person, inst.kind), []).append(inst)
    clusters = []
    for (person, kind), members in groups.items():
        members.sort(key=lambda i: (i.t_start, i.t_end))
        run = [members[0]]
        run_end = members[0].t_end
        for inst in members[1:]:
            if inst.t_start - run_end < gap_seconds:
                run.append(inst)
                run_end = max(run_end, inst.t_end)
            else:
                clusters.append(_close_run(kind, person, run))
                run = [inst]
                run_end = inst.t_end
        clusters.append(_close_run(kind, person, run))
    clusters.sort(key=lambda c: (c.person, c.t_start, c.kind))
    return clusters


def _close_run(kind, person, run) -> Cluster:
    return Cluster(kind=kind, person=person,
                   t_start=min(i.t_start for i in run),
                   t_end=max(i.t_end for i in run),
                   n=len(run),
                   p_mean=sum(i.probability for i in run) / len(run))


def filter_min_duration(clusters, min_seconds: float) -> list[Cluster]:
    """Drop clusters spanning less than min_seconds; 0 is the identity."""
    return [c for c in clusters if c.span >= min_seconds]


def resolve_simultaneous_typing(clusters) -> list[Cluster]:
    """One keyboard per group: where typing clusters of different persons
    overlap, only the highest-mean-probability cluster keeps the overlap
    (ties: earlier start, then lexicographic person). Losers are trimmed or
    split; non-typing clusters pass through untouched."""
    typing = [c for c in clusters if c.kind == "typing"]
    others = [c for c in clusters if c.kind != "typing"]
    if len(typing) <= 1:
        return sorted(typing + others, key=lambda c: (c.person, c.t_start, c.kind))
    bounds = sorted({c.t_start for c in typing} | {c.t_end for c in typing})
    pieces: dict[int, list[tuple[float, float]]] = {i: [] for i in range(len(typing))}
    for a, b in zip(bounds, bounds[1:]):
        active = [i for i, c in enumerate(typing) if c.t_start <= a and c.t_end >= b]
        if not active:
            continue
        winner = min(active, key=lambda i: (-typing[i].p_mean, typing[i].t_start, typing[i].person))
        pieces[winner].append((a, b))
    survivors = []
    for i, segs in pieces.items():
        if not segs:
            continue
        merged = [list(segs[0])]
        for a, b in segs[1:]:
            if a == merged[-1][1]:
                merged[-1][1] = b
            else:
                merged.append([a, b])
        for a, b in merged:
            survivors.append(replace(typing[i], t_start=a, t_end=b))
    return sorted(survivors + others, key=lambda c: (c.person, c.t_start, c.kind))


def make_link(base_url: str, t_start: float) -> str:
    """Deep link into the hosted video at whole-second resolution."""
    if not base_url:
        raise ValueError("base_url must be nonempty")
    return f"{base_url}?t={int(math.floor(t_start))}"


@dataclass
class ActivityMapDoc:
    session_id: str
    duration_seconds: float
    video_url: str
    clusters: list[Cluster] = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    evaluation: dict | None = None


def attach_links(doc: ActivityMapDoc) -> None:
    doc.clusters = [replace(c, link=make_link(doc.video_url, c.t_start)) for c in doc.clusters]


def evaluate_against_ground_truth(clusters, gt_intervals) -> dict:
    """Per-cluster true/false-positive marks plus missed ground-truth intervals.

    A cluster is TP when it overlaps (positive length) any same-person,
    same-kind ground-truth interval, otherwise FP; GT intervals overlapped
    by no cluster are FN.
    """
    def overlaps(c, g):
        return (c.person == g.person and c.kind == g.kind
                and min(c.t_end, g.t_end) - max(c.t_start, g.t_start) > 0)

    tp, fp = [], []
    for i, c in enumerate(clusters):
        (tp if any(overlaps(c, g) for g in gt_intervals) else fp).append(i)
    fn = [{"person": g.person, "kind": g.kind, "t_start": g.t_start, "t_end": g.t_end}
          for g in gt_intervals if not any(overlaps(c, g) for c in clusters)]
    return {"tp": tp, "fp": fp, "fn": fn}


# -- canonical serialization -----------------------------------------------------

def _rounded(value):
    if isinstance(value, float):
        return round(value, 3)
    if isinstance(value, dict):
        return {k: _rounded(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_rounded(v) for v in value]
    return value


def doc_to_json(doc: ActivityMapDoc) -> str:
    clusters = sorted(doc.clusters, key=lambda c: (c.person, c.t_start, c.kind))
    payload = {
        "schema": SCHEMA,
        "session": {
            "id": doc.session_id,
            "duration_seconds": doc.duration_seconds,
            "video_url": doc.video_url,
        },
        "parameters": doc.parameters,
        "clusters": [{
            "kind": c.kind, "person": c.person, "t_start": c.t_start, "t_end": c.t_end,
            "n": c.n, "p_mean": c.p_mean, "link": c.link or make_link(doc.video_url, c.t_start),
        } for c in clusters],
    }
    if doc.evaluation is not None:
        payload["evaluation"] = doc.evaluation
    return json.dumps(_rounded(payload), sort_keys=True, indent=2) + "\n"


def emit_map(doc: ActivityMapDoc, path) -> None:
    with open(path, "w") as fh:
        fh.write(doc_to_json(doc))


def load_map(path) -> ActivityMapDoc:
    with open(path) as fh:
        data = json.load(fh)
    if data.get("schema") != SCHEMA:
        raise FormatError(f"unsupported schema '{data.get('schema')}', expected '{SCHEMA}'")
    try:
        clusters = [Cluster(kind=c["kind"], person=c["person"], t_start=c["t_start"],
                            t_end=c["t_end"], n=c["n"], p_mean=c["p_mean"], link=c.get("link"))
                    for c in data["clusters"]]
        doc = ActivityMapDoc(session_id=data["session"]["id"],
                             duration_seconds=data["session"]["duration_seconds"],
                             video_url=data["session"]["video_url"],
                             clusters=clusters,
                             parameters=data.get("parameters", {}),
                             evaluation=data.get("evaluation"))
    except KeyError as exc:
        raise FormatError(f"activity map document is missing field {exc}") from exc
    return doc
