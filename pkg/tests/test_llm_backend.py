import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from intentsim.backends.llm import ChatClient, LlmBackend, LlmEndpointConfig, extract_dual_thoughts
from intentsim.backends.types import DecisionContext, OfferedOrder
from intentsim.embedding import EmbeddingEndpointConfig, RemoteEmbedder
from intentsim.errors import BackendError, EmbeddingError


class StubHandler(BaseHTTPRequestHandler):
    """Chat/embedding stub; replies come from the server's scripted queue."""

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        request = json.loads(self.rfile.read(length))
        self.server.requests.append((self.path, request))
        script = self.server.script
        reply = script.pop(0) if script else {"status": 500, "body": b"exhausted"}
        status = reply.get("status", 200)
        if "chat" in reply:
            body = json.dumps(
                {"choices": [{"message": {"content": reply["chat"]}}]}
            ).encode()
        elif "embedding" in reply:
            body = json.dumps(
                {"data": [{"embedding": vec} for vec in reply["embedding"]]}
            ).encode()
        else:
            body = reply.get("body", b"")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), StubHandler)
    server.script = []
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()


def endpoint_for(server, retries=1):
    host, port = server.server_address
    return LlmEndpointConfig(
        base_url=f"http://{host}:{port}/v1/chat/completions",
        model_id="stub-model",
        max_retries=retries,
        retry_backoff_s=0.0,
        timeout_ms=5000,
    )


def make_ctx(**overrides):
    base = dict(
        rider_id=1,
        persona="You are Sam Chen, a 30-year-old delivery rider.",
        position=(28, 104),
        yesterday_shift=(10, 18),
        distance_rank=34,
        earnings_rank=28,
        orders_rank=31,
        n_riders=100,
        leader_id=0,
        leader_shift=(8, 20),
        current_tick=120,
        day=1,
    )
    base.update(overrides)
    return DecisionContext(**base)


def test_work_hours_decision_parsed_from_reply(stub_server):
    stub_server.script = [
        {"chat": "<think>Feeling ambitious today.</think>I'll start early."},
        {"chat": '<think>Math says widen.</think>{"go_to_work_time":"10:00","get_off_work_time":"18:00"}'},
    ]
    backend = LlmBackend(endpoint_for(stub_server))
    decision, pair = backend.decide_work_hours(make_ctx())
    assert (decision.go_to_work_hour, decision.get_off_work_hour) == (10, 18)
    assert pair.bounded == "Feeling ambitious today."
    assert pair.rational == "Math says widen."


def test_requests_carry_temperature_zero_and_model(stub_server):
    stub_server.script = [
        {"chat": "<think>a</think>"},
        {"chat": '{"go_to_work_time":"9:00","get_off_work_time":"17:00"}'},
    ]
    backend = LlmBackend(endpoint_for(stub_server))
    backend.decide_work_hours(make_ctx())
    for _, request in stub_server.requests:
        assert request["temperature"] == 0
        assert request["model"] == "stub-model"
        assert request["messages"][0]["role"] == "system"


def test_dual_preambles_differ(stub_server):
    stub_server.script = [
        {"chat": "<think>instinct</think>"},
        {"chat": '{"go_to_work_time":"9:00","get_off_work_time":"17:00"}'},
    ]
    backend = LlmBackend(endpoint_for(stub_server))
    backend.decide_work_hours(make_ctx())
    systems = [req["messages"][0]["content"] for _, req in stub_server.requests]
    assert "bounded rational way" in systems[0]
    assert "completely rational way" in systems[1]
    assert all(s.startswith("You are Sam Chen") for s in systems)


def test_malformed_reply_is_reasked_with_error(stub_server):
    stub_server.script = [
        {"chat": "bounded side"},
        {"chat": '{"go_to_work_time":"8:30","get_off_work_time":"17:00"}'},
        {"chat": '{"go_to_work_time":"8:00","get_off_work_time":"17:00"}'},
    ]
    backend = LlmBackend(endpoint_for(stub_server, retries=2))
    decision, _ = backend.decide_work_hours(make_ctx())
    assert decision.go_to_work_hour == 8
    retry_request = stub_server.requests[-1][1]
    user_turns = [m for m in retry_request["messages"] if m["role"] == "user"]
    assert "minutes must be 00" in user_turns[-1]["content"]


def test_unparseable_after_retries_raises_backend_error(stub_server):
    stub_server.script = [
        {"chat": "bounded side"},
        {"chat": "nope"},
        {"chat": "still nope"},
    ]
    backend = LlmBackend(endpoint_for(stub_server, retries=1))
    with pytest.raises(BackendError):
        backend.decide_work_hours(make_ctx())


def test_order_selection_round_trip(stub_server):
    stub_server.script = [
        {"chat": "<think>those two look close</think>"},
        {"chat": 'Taking the close ones. {"order_list":[3,7]}'},
    ]
    backend = LlmBackend(endpoint_for(stub_server))
    offers = (
        OfferedOrder(id=3, pickup=(1, 1), dropoff=(2, 2), payment=8.0, pickup_distance=2),
        OfferedOrder(id=7, pickup=(3, 3), dropoff=(4, 4), payment=6.0, pickup_distance=6),
    )
    selection, _ = backend.select_orders(make_ctx(capacity_left=2, offered=offers))
    assert selection.order_ids == (3, 7)
    prompt = stub_server.requests[0][1]["messages"][1]["content"]
    assert '"order_id": 3' in prompt
    assert "[28,104]" in prompt


def test_transport_failure_retries_then_raises(stub_server):
    stub_server.script = [{"status": 500, "body": b"boom"}] * 4
    client = ChatClient(endpoint_for(stub_server, retries=1))
    with pytest.raises(BackendError, match="after retries"):
        client.complete([{"role": "user", "content": "hi"}])
    assert len(stub_server.requests) == 2  # initial + one retry


def test_exchange_sink_sees_raw_pairs(stub_server):
    stub_server.script = [
        {"chat": "<think>a</think>"},
        {"chat": '{"go_to_work_time":"9:00","get_off_work_time":"17:00"}'},
    ]
    backend = LlmBackend(endpoint_for(stub_server))
    exchanges = []
    backend.exchange_sink = lambda agent, payload: exchanges.append((agent, payload))
    backend.decide_work_hours(make_ctx())
    assert len(exchanges) == 2
    assert all(agent == 1 for agent, _ in exchanges)
    assert all("request" in p and "response" in p for _, p in exchanges)


def test_single_perspective_mode_skips_bounded_call(stub_server):
    stub_server.script = [
        {"chat": '{"go_to_work_time":"9:00","get_off_work_time":"17:00"}'},
    ]
    backend = LlmBackend(endpoint_for(stub_server), dual=False)
    decision, pair = backend.decide_work_hours(make_ctx())
    assert pair.bounded == ""
    assert len(stub_server.requests) == 1


def test_extract_dual_thoughts_two_generations(stub_server):
    stub_server.script = [
        {"chat": "<think>gut says rest</think>{}"},
        {"chat": "<think>numbers say ride</think>{}"},
    ]
    backend = LlmBackend(endpoint_for(stub_server))
    pair = extract_dual_thoughts("Should you ride today?", ("note",), make_ctx(), backend)
    assert pair.bounded == "gut says rest"
    assert pair.rational == "numbers say ride"


def test_remote_embedder_normalizes(stub_server):
    host, port = stub_server.server_address
    stub_server.script = [{"embedding": [[3.0, 4.0], [0.0, 2.0]]}]
    embedder = RemoteEmbedder(
        EmbeddingEndpointConfig(base_url=f"http://{host}:{port}/embed", model_id="e")
    )
    matrix = embedder.embed_many(["a", "b"])
    assert np.allclose(matrix[0], [0.6, 0.8])
    assert np.allclose(matrix[1], [0.0, 1.0])
    request = stub_server.requests[0][1]
    assert request == {"model": "e", "input": ["a", "b"]}


def test_remote_embedder_failure_raises(stub_server):
    stub_server.script = [{"status": 500, "body": b"x"}] * 3
    embedder = RemoteEmbedder(
        EmbeddingEndpointConfig(
            base_url=f"http://{stub_server.server_address[0]}:{stub_server.server_address[1]}/embed",
            model_id="e",
            max_retries=1,
        )
    )
    with pytest.raises(EmbeddingError):
        embedder.embed_many(["a"])


def test_simulation_with_llm_backend_logs_exchanges(stub_server, tmp_path):
    from intentsim.config import SimConfig
    from intentsim.engine import run_simulation
    from intentsim.trace import load_trace

    # One day of 10 ticks, no orders: two riders decide hours once each.
    cfg = SimConfig(grid_size=20, total_steps=10, steps_per_day=10, n_riders=2,
                    base_order_rate=0.0, peak_ticks_per_day=(5,), seed=1)
    stub_server.script = [
        {"chat": "<think>rider 0 gut</think>"},
        {"chat": '<think>rider 0 math</think>{"go_to_work_time":"9:00","get_off_work_time":"17:00"}'},
        {"chat": "<think>rider 1 gut</think>"},
        {"chat": '<think>rider 1 math</think>{"go_to_work_time":"8:00","get_off_work_time":"16:00"}'},
    ]
    backend = LlmBackend(endpoint_for(stub_server))
    path = tmp_path / "llm.jsonl"
    run_simulation(cfg, backend, path)
    events = load_trace(path).events
    exchanges = [e for e in events if e.kind == "llm_exchange"]
    assert len(exchanges) == 4
    assert all("request" in e.payload and "response" in e.payload for e in exchanges)
    decisions = [e for e in events if e.kind == "decision"]
    assert [(d.payload["start"], d.payload["end"]) for d in decisions] == [(9, 17), (8, 16)]
    thoughts = [e for e in events if e.kind == "thought"]
    assert thoughts[0].payload["bounded"] == "rider 0 gut"
    assert thoughts[1].payload["rational"] == "rider 1 math"


def test_llm_detector_via_cli(stub_server, tmp_path):
    import json as _json

    from click.testing import CliRunner

    from intentsim.cli import main as cli_main

    rows = [
        {"speaker": 1, "step": 1, "utterance": "first plan"},
        {"speaker": 1, "step": 2, "utterance": "second plan"},
    ]
    log = tmp_path / "foreign.jsonl"
    log.write_text("\n".join(_json.dumps(r) for r in rows) + "\n")
    mapping = tmp_path / "map.json"
    mapping.write_text(_json.dumps({"agent": "speaker", "tick": "step", "text": "utterance"}))
    stub_server.script = [{"chat": "yes"}, {"chat": "no"}]
    host, port = stub_server.server_address
    runner = CliRunner()
    result = runner.invoke(cli_main, [
        "analyze", "--external", str(log), "--mapping", str(mapping),
        "--out", str(tmp_path / "out"), "--k", "1", "--window-ticks", "10",
        "--detector", "llm",
        "--llm-url", f"http://{host}:{port}/v1/chat/completions",
        "--llm-model", "stub-model",
    ])
    assert result.exit_code == 0, result.output
    repo_lines = (tmp_path / "out" / "repository.jsonl").read_text().splitlines()
    assert len(repo_lines) == 1  # second record judged not novel
    prompts = [req["messages"][0]["content"] for _, req in stub_server.requests]
    assert all("novel intention" in p for p in prompts)


def test_label_llm_via_cli(stub_server, tmp_path):
    import json as _json

    from click.testing import CliRunner

    from intentsim.cli import main as cli_main

    rows = [
        {"speaker": 1, "step": 1, "utterance": "ride to the market square"},
        {"speaker": 2, "step": 2, "utterance": "ride to the market now"},
    ]
    log = tmp_path / "foreign.jsonl"
    log.write_text("\n".join(_json.dumps(r) for r in rows) + "\n")
    mapping = tmp_path / "map.json"
    mapping.write_text(_json.dumps({"agent": "speaker", "tick": "step", "text": "utterance"}))
    stub_server.script = [{"chat": "market rush"}]
    host, port = stub_server.server_address
    runner = CliRunner()
    result = runner.invoke(cli_main, [
        "analyze", "--external", str(log), "--mapping", str(mapping),
        "--out", str(tmp_path / "out"), "--k", "1", "--window-ticks", "10",
        "--label-llm",
        "--llm-url", f"http://{host}:{port}/v1/chat/completions",
        "--llm-model", "stub-model",
    ])
    assert result.exit_code == 0, result.output
    doc = _json.loads((tmp_path / "out" / "diagram.json").read_text())
    assert doc["cluster_labels"] == {"0": "market rush"}
