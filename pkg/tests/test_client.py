import json
from pathlib import Path

import httpx
import numpy as np
import pytest

from graphtrf.client import (
    ChatClient, ChatRequest, SimCell, SimClient, SimProfile, sample_tokens, sim_chat, wrong_answer,
)
from graphtrf.errors import AuthError, ClientError, MalformedResponse, ProfileMissing, RateLimited, Transport
from graphtrf.generate import gen_qa_instance
from graphtrf.graph import GenConfig, TaskKind
from graphtrf.protocol import judge, validate_answer
from graphtrf.render import TRF_ORDER, TrfKind, assemble_prompt

GOLDEN = Path(__file__).parent / "golden"


def ok_body(text="<answer>Yes</answer>", usage=True):
    body = {"choices": [{"message": {"role": "assistant", "content": text}}]}
    if usage:
        body["usage"] = {"prompt_tokens": 100, "completion_tokens": 57}
    return body


def make_client(handler, **kw):
    sleeps = []
    client = ChatClient("https://llm.example/v1/", "gpt-4o", api_key="k", transport=httpx.MockTransport(handler),
                        sleep=sleeps.append, **kw)
    return client, sleeps


def test_wire_payload_golden():
    req = ChatRequest("Is there a cycle in this undirected graph?", "gpt-4o", image=b"\x89PNG\r\n\x1a\n")
    assert req.payload() == json.loads((GOLDEN / "chat_payload.json").read_text())


def test_text_only_payload():
    body = ChatRequest("hi", "m", temperature=0.0, max_tokens=16).payload()
    assert body["messages"][-1] == {"role": "user", "content": "hi"}
    assert body["temperature"] == 0.0 and body["max_tokens"] == 16


def test_request_validation():
    with pytest.raises(ValueError):
        ChatRequest("x", "m", temperature=2.5)


def test_post_and_usage_passthrough():
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers["authorization"]
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json=ok_body())

    client, sleeps = make_client(handler)
    assert client.chat(ChatRequest("q", "gpt-4o")) == ("<answer>Yes</answer>", 57)
    assert seen["url"] == "https://llm.example/v1/chat/completions"
    assert seen["auth"] == "Bearer k"
    assert seen["body"]["model"] == "gpt-4o"
    assert sleeps == []


def test_usage_fallback_estimate():
    client, _ = make_client(lambda r: httpx.Response(200, json=ok_body("x" * 120, usage=False)))
    assert client.chat(ChatRequest("q", "m"))[1] == 30


def test_retry_then_success():
    calls = iter([httpx.Response(429), httpx.Response(503), httpx.Response(200, json=ok_body())])
    client, sleeps = make_client(lambda r: next(calls))
    assert client.chat(ChatRequest("q", "m"))[1] == 57
    assert sleeps == [1.0, 2.0]


def test_rate_limited_after_retries():
    count = []

    def handler(request):
        count.append(1)
        return httpx.Response(429)

    client, sleeps = make_client(handler)
    with pytest.raises(RateLimited):
        client.chat(ChatRequest("q", "m"))
    assert len(count) == 4 and sleeps == [1.0, 2.0, 4.0]


def test_transport_error_retried():
    def handler(request):
        raise httpx.ConnectError("refused")

    client, sleeps = make_client(handler)
    with pytest.raises(Transport):
        client.chat(ChatRequest("q", "m"))
    assert sleeps == [1.0, 2.0, 4.0]


def test_timeout_surfaces_transport():
    def handler(request):
        raise httpx.ReadTimeout("slow")

    client, _ = make_client(handler)
    with pytest.raises(Transport):
        client.chat(ChatRequest("q", "m"))


def test_auth_errors_not_retried():
    client, sleeps = make_client(lambda r: httpx.Response(401))
    with pytest.raises(AuthError):
        client.chat(ChatRequest("q", "m"))
    assert sleeps == []
    client, _ = make_client(lambda r: httpx.Response(400, text="bad"))
    with pytest.raises(ClientError):
        client.chat(ChatRequest("q", "m"))


def test_malformed_body():
    client, _ = make_client(lambda r: httpx.Response(200, json={"nope": 1}))
    with pytest.raises(MalformedResponse):
        client.chat(ChatRequest("q", "m"))


def test_missing_key(monkeypatch):
    monkeypatch.delenv("GRAPHTRF_API_KEY", raising=False)
    with pytest.raises(AuthError):
        ChatClient("https://x", "m")
    monkeypatch.setenv("GRAPHTRF_API_KEY", "env-key")
    assert ChatClient("https://x", "m").api_key == "env-key"


def test_respond_sends_image():
    bodies = []

    def handler(request):
        bodies.append(json.loads(request.content))
        return httpx.Response(200, json=ok_body())

    client, _ = make_client(handler)
    inst = gen_qa_instance(TaskKind.CYC, GenConfig(), 1)

    class StubRaster:
        def rasterize(self, dot):
            return b"\x89PNGdata"

    prompt = assemble_prompt(inst, TrfKind.VDOT, rasterizer=StubRaster())
    client.respond(inst, prompt, seed=[0])
    content = bodies[0]["messages"][-1]["content"]
    assert content[1]["image_url"]["url"].startswith("data:image/png;base64,")


# simulation


def test_sim_accuracy_matches_profile():
    inst = gen_qa_instance(TaskKind.CONN, GenConfig(), 0)
    profile = SimProfile({(TaskKind.CONN, TrfKind.VNEATO): SimCell(0.951, 7.7, 1.5)})
    rng = np.random.default_rng(42)
    n = 10_000
    hits = sum(judge(inst, *sim_chat(profile, inst, TrfKind.VNEATO, rng)).correct for _ in range(n))
    assert abs(hits / n - 0.951) <= 0.02
    assert abs(hits / n - 0.951) <= 3 * np.sqrt(0.951 * 0.049 / n)


@pytest.mark.parametrize("task", list(TaskKind))
def test_sim_extremes(task):
    inst = gen_qa_instance(task, GenConfig(), 7)
    always = SimProfile(default=SimCell(1.0, 10.0))
    never = SimProfile(default=SimCell(0.0, 10.0))
    rng = np.random.default_rng(0)
    for _ in range(20):
        assert judge(inst, *sim_chat(always, inst, TrfKind.TSET, rng)).correct
        run = judge(inst, *sim_chat(never, inst, TrfKind.TSET, rng))
        assert not run.correct and run.extracted is not None


@pytest.mark.parametrize("task", list(TaskKind))
def test_wrong_answers_are_wrong(task):
    for i in range(20):
        inst = gen_qa_instance(task, GenConfig(), (8, i))
        assert not validate_answer(inst, wrong_answer(inst))


def test_sim_determinism():
    inst = gen_qa_instance(TaskKind.SP, GenConfig(), 1)
    client = SimClient(SimProfile(default=SimCell(0.5, 100.0, 20.0)))
    prompt = assemble_prompt(inst, TrfKind.TLIST)
    assert client.respond(inst, prompt, [1, 2, 3]) == client.respond(inst, prompt, [1, 2, 3])


def test_token_sampling():
    rng = np.random.default_rng(1)
    xs = [sample_tokens(rng, 2.0, 5.0) for _ in range(2000)]
    assert min(xs) >= 1
    assert sample_tokens(rng, 7.7, 0.0) == 8


def test_profile_missing_and_toml_round_trip(tmp_path):
    p = SimProfile({(TaskKind.CONN, TrfKind.TSET): SimCell(0.5, 10.0, 1.0)}, name="x")
    with pytest.raises(ProfileMissing):
        p.cell(TaskKind.CYC, TrfKind.TSET)
    path = tmp_path / "p.toml"
    p.save(path)
    q = SimProfile.load(path)
    assert q.cells == p.cells and q.name == "x" and q.default is None
    with_default = SimProfile(default=SimCell(0.2, 3.0))
    assert SimProfile.from_toml(with_default.to_toml()).cell(TaskKind.NC, TrfKind.VDOT) == SimCell(0.2, 3.0)


def test_presets_cover_every_cell():
    from graphtrf.cli import load_sim

    for name in ("gpt4o", "gemini25pro"):
        prof = load_sim(name)
        for task in TaskKind:
            for trf in TRF_ORDER:
                prof.cell(task, trf)
