"""Command-line entry point.

Commands: ``simulate`` (run the world, write a trace), ``analyze`` (mine a
trace or a foreign log into repository / clusters / diagram), ``metrics``
(CSV reports from a trace), ``diagram`` (re-render an existing analysis).

Exit codes: 0 success; 1 unexpected error; 2 usage error (unknown flag or
bad argument); 3 missing input file; 4 invalid configuration or schema;
5 trace format or ordering violation.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .backends.llm import LlmBackend, LlmEndpointConfig
from .backends.scripted import ScriptedBackend, ScriptedPolicy
from .config import SimConfig, load_config
from .diagram import EmergenceDiagram, render_diagram
from .embedding import EmbeddingEndpointConfig
from .engine import run_simulation
from .errors import (
    ClusteringError,
    ConfigError,
    IntentsimError,
    TraceError,
)
from .metrics import write_metrics_reports
from .pipeline import (
    AnalysisOptions,
    analyze_external,
    analyze_trace_events,
    write_analysis_outputs,
    write_similarity_csv,
)
from .trace import IngestMapping, load_trace

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_BAD_CONFIG = 4
EXIT_BAD_TRACE = 5


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except FileNotFoundError as exc:
            _fail(EXIT_MISSING_FILE, f"missing file: {exc.filename or exc}")
        except ConfigError as exc:
            _fail(EXIT_BAD_CONFIG, str(exc))
        except TraceError as exc:
            _fail(EXIT_BAD_TRACE, str(exc))
        except (ClusteringError, ValueError) as exc:
            _fail(EXIT_BAD_CONFIG, str(exc))
        except click.ClickException:
            raise
        except IntentsimError as exc:
            _fail(EXIT_ERROR, str(exc))

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group(epilog="Exit codes: 0 ok, 1 error, 2 usage, 3 missing file, 4 bad config/schema, 5 bad trace.")
def main() -> None:
    """Delivery-world simulator and intention emergence analyzer."""


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None, help="Config file (key = value lines); defaults apply when omitted.")
@click.option("--out", "out_path", type=click.Path(), required=True, help="Trace file to write.")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--backend", type=click.Choice(["scripted", "llm"]), default="scripted", show_default=True)
@click.option("--hours-policy", type=click.Choice(["fixed_hours", "imitate_top_ranked"]), default="fixed_hours", show_default=True)
@click.option("--selection-policy", type=click.Choice(["greedy_nearest", "route_optimizer"]), default="greedy_nearest", show_default=True)
@click.option("--imitate-delta", type=int, default=1, show_default=True, help="Hours widened on each side when imitating.")
@click.option("--fixed-start", type=int, default=None, help="Constant shift start for fixed_hours.")
@click.option("--fixed-end", type=int, default=None, help="Constant shift end for fixed_hours.")
@click.option("--llm-url", default=None, help="Chat-completion endpoint URL (llm backend).")
@click.option("--llm-model", default=None, help="Model id sent to the chat endpoint.")
@click.option("--no-inspector", is_flag=True, help="Record single-perspective thoughts only (calculation side).")
@click.option("--created-at", default=None, help="Timestamp stored in the trace header (omitted by default so reruns are byte-identical).")
@_guarded
def simulate(
    config_path,
    out_path,
    seed,
    backend,
    hours_policy,
    selection_policy,
    imitate_delta,
    fixed_start,
    fixed_end,
    llm_url,
    llm_model,
    no_inspector,
    created_at,
):
    """Run the simulation and write its event trace."""
    config = load_config(config_path) if config_path else SimConfig()
    if seed is not None:
        config = SimConfig(**{**config.to_dict(), "seed": seed})
    if backend == "llm":
        if not llm_url or not llm_model:
            raise click.UsageError("--backend llm requires --llm-url and --llm-model")
        chosen = LlmBackend(
            LlmEndpointConfig(base_url=llm_url, model_id=llm_model),
            dual=not no_inspector,
        )
    else:
        hours_params = {"delta": imitate_delta}
        if hours_policy == "fixed_hours":
            hours_params = {}
            if fixed_start is not None and fixed_end is not None:
                hours_params = {"start": fixed_start, "end": fixed_end}
        chosen = ScriptedBackend(
            hours_policy=ScriptedPolicy(hours_policy, hours_params),
            selection_policy=ScriptedPolicy(selection_policy),
        )
    world = run_simulation(
        config, chosen, out_path, inspector=not no_inspector, created=created_at
    )
    click.echo(
        f"simulated {config.total_steps} ticks, {config.n_riders} riders, "
        f"{world.next_order_id} orders -> {out_path}"
    )


@main.command()
@click.option("--trace", "trace_path", type=click.Path(), default=None, help="Simulation trace to analyze.")
@click.option("--external", "external_path", type=click.Path(), default=None, help="Foreign JSONL log to ingest instead of a trace.")
@click.option("--mapping", "mapping_path", type=click.Path(), default=None, help="Field mapping file for --external.")
@click.option("--out", "out_dir", type=click.Path(), required=True, help="Output directory.")
@click.option("--k", type=int, default=5, show_default=True, help="Number of intention clusters.")
@click.option("--theta", type=float, default=0.8, show_default=True, help="Novelty threshold for the similarity detector.")
@click.option("--window-ticks", type=int, default=1200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for embedding/clustering.")
@click.option("--embedder", type=click.Choice(["fallback", "remote"]), default="fallback", show_default=True)
@click.option("--embed-url", default=None, help="Embedding endpoint URL (remote embedder).")
@click.option("--embed-model", default=None, help="Embedding model id (remote embedder).")
@click.option("--memory-capacity", type=int, default=50, show_default=True)
@click.option("--scan-k", is_flag=True, help="Pick k by silhouette scan over 2..10.")
@click.option("--detector", type=click.Choice(["similarity", "llm"]), default="similarity", show_default=True)
@click.option("--llm-url", default=None, help="Chat endpoint for --detector llm / --label-llm.")
@click.option("--llm-model", default=None, help="Model id for --detector llm / --label-llm.")
@click.option("--label-llm", is_flag=True, help="Summarize cluster labels with the chat endpoint instead of the medoid text.")
@click.option("--similarity-csv", is_flag=True, help="Also export the pairwise similarity matrix as similarity.csv.")
@click.option("--no-inspector", is_flag=True, help="Drop instinct-side texts before analysis.")
@click.option("--no-analyzer", is_flag=True, help="Skip emergence detection (repository stays empty).")
@_guarded
def analyze(
    trace_path,
    external_path,
    mapping_path,
    out_dir,
    k,
    theta,
    window_ticks,
    seed,
    embedder,
    embed_url,
    embed_model,
    memory_capacity,
    scan_k,
    detector,
    llm_url,
    llm_model,
    label_llm,
    similarity_csv,
    no_inspector,
    no_analyzer,
):
    """Mine thoughts into intentions, cluster them, and build the diagram."""
    if (trace_path is None) == (external_path is None):
        raise click.UsageError("provide exactly one of --trace or --external")
    options = AnalysisOptions(
        k=k,
        theta=theta,
        window_ticks=window_ticks,
        seed=seed,
        embedder_kind="fallback_hash" if embedder == "fallback" else "remote",
        detector_kind=detector,
        inspector=not no_inspector,
        analyzer=not no_analyzer,
        memory_capacity=memory_capacity,
        scan_k=scan_k,
    )
    if options.embedder_kind == "remote":
        if not embed_url or not embed_model:
            raise click.UsageError("--embedder remote requires --embed-url and --embed-model")
        options.embed_endpoint = EmbeddingEndpointConfig(base_url=embed_url, model_id=embed_model)
    if detector == "llm" or label_llm:
        if not llm_url or not llm_model:
            raise click.UsageError("--detector llm / --label-llm require --llm-url and --llm-model")
        from .backends.llm import ChatClient

        client = ChatClient(LlmEndpointConfig(base_url=llm_url, model_id=llm_model))

        def ask(prompt: str) -> str:
            return client.complete([{"role": "user", "content": prompt}])

        if detector == "llm":
            options.detector_ask = ask
        if label_llm:
            options.label_summarizer = lambda texts: ask(
                "Give one short label (under ten words) for this group of intentions:\n- "
                + "\n- ".join(texts[:20])
            )
    if trace_path is not None:
        log = load_trace(trace_path)
        result = analyze_trace_events(log.events, options)
        digest = log.header.config_digest
    else:
        if mapping_path is None:
            raise click.UsageError("--external requires --mapping")
        mapping = IngestMapping.load(mapping_path)
        result, ingest = analyze_external(external_path, mapping, options)
        digest = ""
        if ingest.skipped:
            click.echo(f"ingest skipped {ingest.skipped} record(s)", err=True)
    paths = write_analysis_outputs(result, out_dir, source_digest=digest, seed=seed)
    if similarity_csv:
        write_similarity_csv(result.repository, Path(out_dir) / "similarity.csv")
    click.echo(
        f"{len(result.repository)} intentions, k={result.chosen_k}, "
        f"{len(result.points)} emergence points -> {paths['diagram_json'].parent}"
    )


@main.command()
@click.option("--trace", "trace_path", type=click.Path(), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--window-ticks", type=int, default=1200, show_default=True)
@click.option("--downsample", type=int, default=4, show_default=True, help="Heatmap block size (1 = raw grid).")
@_guarded
def metrics(trace_path, out_dir, window_ticks, downsample):
    """Write the CSV report bundle for a simulation trace."""
    log = load_trace(trace_path)
    written = write_metrics_reports(
        log.events, out_dir, window_ticks=window_ticks, downsample=downsample
    )
    click.echo(f"wrote {len(written)} report file(s) under {out_dir}")


@main.command()
@click.option("--analysis", "analysis_dir", type=click.Path(), default=None, help="Analysis directory containing diagram.json.")
@click.option("--json", "json_path", type=click.Path(), default=None, help="Diagram JSON document to re-render.")
@click.option("--format", "fmt", type=click.Choice(["dot", "json", "svg"]), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@_guarded
def diagram(analysis_dir, json_path, fmt, out_path):
    """Re-render an existing analysis diagram in another format."""
    import json as _json

    if (analysis_dir is None) == (json_path is None):
        raise click.UsageError("provide exactly one of --analysis or --json")
    source = Path(json_path) if json_path else Path(analysis_dir) / "diagram.json"
    if not source.exists():
        raise FileNotFoundError(str(source))
    data = _json.loads(source.read_text(encoding="utf-8"))
    doc = EmergenceDiagram.from_json_dict(data)
    Path(out_path).write_text(render_diagram(doc, fmt), encoding="utf-8")
    click.echo(f"rendered {fmt} diagram -> {out_path}")


if __name__ == "__main__":
    main()
