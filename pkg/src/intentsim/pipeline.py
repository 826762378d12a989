"""End-to-end analysis: thought records -> emergence detection -> clustering
-> temporal emergence diagram, plus the fixed-name output bundle.

Outputs written under the chosen directory:

* ``repository.jsonl``   one detected intention per line (with embedding)
* ``clusters.csv``       record-to-cluster assignment table with labels
* ``diagram.json``       versioned diagram document (schema 1)
* ``diagram.dot``        the same diagram as graph-description text
* ``analysis_events.jsonl``  intention/warning events in trace format
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import Clustering, kmeans_cluster, label_cluster, scan_k
from .diagram import (
    DEFAULT_WINDOW_TICKS,
    EmergenceDiagram,
    EmergencePoint,
    InfluenceMap,
    WindowSpec,
    build_diagram,
    render_diagram,
)
from .embedding import (
    DEFAULT_DIM,
    EmbeddingEndpointConfig,
    HashingEmbedder,
    RemoteEmbedder,
)
from .mining import (
    DEFAULT_MEMORY_CAPACITY,
    DEFAULT_THETA,
    IntentionRepository,
    LlmEmergenceDetector,
    MiningResult,
    SimilarityDetector,
    ThoughtRecord,
    mine_records,
    records_from_rows,
    records_from_trace,
)
from .trace import TraceWriter, ingest_external

ANALYSIS_FILES = ("repository.jsonl", "clusters.csv", "diagram.json", "diagram.dot")


@dataclass
class AnalysisOptions:
    k: int = 5
    theta: float = DEFAULT_THETA
    window_ticks: int = DEFAULT_WINDOW_TICKS
    seed: int = 0
    embedder_kind: str = "fallback_hash"
    embed_dim: int = DEFAULT_DIM
    embed_endpoint: EmbeddingEndpointConfig | None = None
    detector_kind: str = "similarity"
    detector_ask: object = None
    inspector: bool = True
    analyzer: bool = True
    memory_capacity: int = DEFAULT_MEMORY_CAPACITY
    scan_k: bool = False
    total_ticks: int | None = None
    # Optional callable(list of member texts) -> short label; medoid text
    # labeling is the default.
    label_summarizer: object = None


@dataclass
class AnalysisResult:
    repository: IntentionRepository
    clustering: Clustering | None
    cluster_labels: dict[int, str]
    diagram: EmergenceDiagram
    influence: InfluenceMap
    points: list[EmergencePoint]
    skipped_missing: int
    chosen_k: int
    warnings: list[str] = field(default_factory=list)


def make_embedder(options: AnalysisOptions):
    if options.embedder_kind == "fallback_hash":
        return HashingEmbedder(dim=options.embed_dim, seed=options.seed)
    if options.embedder_kind == "remote":
        if options.embed_endpoint is None:
            raise ValueError("remote embedder requires an endpoint config")
        return RemoteEmbedder(endpoint=options.embed_endpoint)
    raise ValueError(f"unknown embedder kind {options.embedder_kind!r}")


def make_detector(options: AnalysisOptions, warn_sink):
    if options.detector_kind == "similarity":
        return SimilarityDetector(theta=options.theta)
    if options.detector_kind == "llm":
        if options.detector_ask is None:
            raise ValueError("llm detector requires an ask callable")
        from .backends.llm import load_prompt

        return LlmEmergenceDetector(
            ask=options.detector_ask,
            template=load_prompt("emergence_check.txt"),
            fallback=SimilarityDetector(theta=options.theta),
            on_fallback=warn_sink,
        )
    raise ValueError(f"unknown detector kind {options.detector_kind!r}")


def analyze_records(
    records: list[ThoughtRecord],
    options: AnalysisOptions,
) -> AnalysisResult:
    warnings: list[str] = []
    intention_hits: list[ThoughtRecord] = []

    if options.analyzer and records:
        embedder = make_embedder(options)
        detector = make_detector(options, warnings.append)
        mining: MiningResult = mine_records(
            records,
            detector,
            embedder,
            memory_capacity=options.memory_capacity,
            intention_sink=intention_hits.append,
        )
        repo = mining.repository
        skipped = mining.skipped_missing
    else:
        repo = IntentionRepository()
        skipped = sum(1 for r in records if r.missing)
        if not options.analyzer:
            warnings.append("emergence detection disabled: repository left empty")

    total_ticks = options.total_ticks
    if total_ticks is None:
        total_ticks = max((r.tick for r in records), default=-1) + 1
    spec = WindowSpec.for_span(total_ticks, options.window_ticks)

    clustering: Clustering | None = None
    labels: dict[int, str] = {}
    chosen_k = options.k
    if len(repo):
        vectors = repo.vectors()
        nonzero = int(np.sum(np.any(vectors != 0.0, axis=1)))
        if nonzero == 0:
            warnings.append("no embeddable intentions; skipping clustering")
        else:
            if options.scan_k and nonzero >= 3:
                chosen_k, _scores = scan_k(vectors, options.seed)
                warnings.append(f"k scan selected k={chosen_k}")
            if chosen_k > nonzero:
                warnings.append(
                    f"k={chosen_k} exceeds {nonzero} clusterable intentions; using k={nonzero}"
                )
                chosen_k = nonzero
            clustering = kmeans_cluster(vectors, chosen_k, options.seed)
            for cluster_id in range(clustering.k):
                members = [
                    (entry.record_id, entry.combined_text, entry.embedding)
                    for idx, entry in enumerate(repo.entries)
                    if clustering.assignments[idx] == cluster_id
                ]
                if not members:
                    continue
                if options.label_summarizer is not None:
                    try:
                        labels[cluster_id] = str(
                            options.label_summarizer([m[1] for m in members])
                        )
                        continue
                    except Exception as exc:
                        warnings.append(f"label summarizer failed ({exc}); using medoid")
                text, _rid = label_cluster(members, clustering.centroids[cluster_id])
                labels[cluster_id] = text

    if clustering is not None:
        diagram, influence, points = build_diagram(
            repo, clustering, spec, cluster_labels=labels, warn_sink=warnings.append
        )
    else:
        diagram = EmergenceDiagram(window_ticks=spec.window_ticks, n_windows=spec.n_windows)
        influence, points = {}, []

    return AnalysisResult(
        repository=repo,
        clustering=clustering,
        cluster_labels=labels,
        diagram=diagram,
        influence=influence,
        points=points,
        skipped_missing=skipped,
        chosen_k=chosen_k if clustering is not None else 0,
        warnings=warnings,
    )


def clusters_csv(result: AnalysisResult) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["record_id", "agent_id", "tick", "cluster", "label"])
    if result.clustering is not None:
        for idx, entry in enumerate(result.repository.entries):
            cluster = int(result.clustering.assignments[idx])
            label = result.cluster_labels.get(cluster, "") if cluster >= 0 else ""
            writer.writerow([entry.record_id, entry.agent_id, entry.tick, cluster, label])
    return out.getvalue()


def write_analysis_outputs(
    result: AnalysisResult,
    out_dir: str | Path,
    source_digest: str = "",
    seed: int = 0,
) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}

    repo_path = out / "repository.jsonl"
    result.repository.save_jsonl(repo_path)
    paths["repository"] = repo_path

    clusters_path = out / "clusters.csv"
    clusters_path.write_text(clusters_csv(result), encoding="utf-8")
    paths["clusters"] = clusters_path

    diagram_json = out / "diagram.json"
    diagram_json.write_text(render_diagram(result.diagram, "json"), encoding="utf-8")
    paths["diagram_json"] = diagram_json

    diagram_dot = out / "diagram.dot"
    diagram_dot.write_text(render_diagram(result.diagram, "dot"), encoding="utf-8")
    paths["diagram_dot"] = diagram_dot

    events_path = out / "analysis_events.jsonl"
    with TraceWriter(events_path, source_digest, seed) as writer:
        writer.emit("sim_start", 0, {"stage": "analysis"})
        last_tick = 0
        for entry in result.repository.entries:
            last_tick = max(last_tick, entry.tick)
            writer.emit(
                "intention",
                entry.tick,
                {
                    "agent": entry.agent_id,
                    "record_id": entry.record_id,
                    "text": entry.combined_text,
                },
            )
        for message in result.warnings:
            writer.emit("warning", last_tick, {"message": message})
        writer.emit("sim_end", last_tick, {"intentions": len(result.repository)})
    paths["analysis_events"] = events_path
    return paths


def write_similarity_csv(repo: IntentionRepository, path: str | Path) -> Path:
    """Pairwise cosine matrix of the repository, record ids as labels."""
    from .embedding import similarity_matrix

    path = Path(path)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    ids = [entry.record_id for entry in repo.entries]
    writer.writerow(["record_id", *ids])
    if ids:
        matrix = similarity_matrix(repo.vectors())
        for rid, row in zip(ids, matrix):
            writer.writerow([rid, *[f"{value:.6f}" for value in row]])
    path.write_text(out.getvalue(), encoding="utf-8")
    return path


def analyze_trace_events(events, options: AnalysisOptions) -> AnalysisResult:
    records = records_from_trace(events, inspector=options.inspector)
    if options.total_ticks is None:
        for event in events:
            if event.kind == "sim_start" and "config" in event.payload:
                options.total_ticks = event.payload["config"]["total_steps"]
                break
    return analyze_records(records, options)


def analyze_external(path, mapping, options: AnalysisOptions):
    """Ingest a foreign log and run the same pipeline over it."""
    ingest = ingest_external(path, mapping)
    records = records_from_rows(ingest.rows)
    result = analyze_records(records, options)
    result.warnings.extend(ingest.warnings)
    return result, ingest
