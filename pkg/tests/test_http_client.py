"""Wire-format contract of the endpoint client, against a fake server."""

from __future__ import annotations

import json

import httpx
import pytest

from conftest import make_sheet
from radlabel.core import ReportDocument
from radlabel.extract import (
    AuthFailure,
    EndpointUnreachable,
    HttpChatClient,
    LlmEndpointConfig,
    build_prompt,
    extract_labels,
    serialize_sheet,
)


def fake_endpoint(mode: str, template):
    """WSGI chat-completions stand-in capturing the last request."""
    seen: dict = {}

    def app(environ, start_response):
        assert environ["PATH_INFO"] == "/chat/completions"
        assert environ["REQUEST_METHOD"] == "POST"
        length = int(environ.get("CONTENT_LENGTH") or 0)
        seen["headers"] = {
            key[5:].replace("_", "-").lower(): value
            for key, value in environ.items() if key.startswith("HTTP_")
        }
        seen["body"] = json.loads(environ["wsgi.input"].read(length))
        if mode == "reject":
            start_response("401 Unauthorized", [("Content-Type", "application/json")])
            return [b'{"error": "bad token"}']
        if mode == "explode":
            start_response("500 Internal Server Error",
                           [("Content-Type", "application/json")])
            return [b'{"error": "boom"}']
        content = serialize_sheet(make_sheet(template, report_id="r-0"))
        payload = {"choices": [{"message": {"role": "assistant", "content": content}}]}
        start_response("200 OK", [("Content-Type", "application/json")])
        return [json.dumps(payload).encode("utf-8")]

    return app, seen


def http_client(app, config: LlmEndpointConfig) -> HttpChatClient:
    client = HttpChatClient(config)
    client._client = httpx.Client(transport=httpx.WSGITransport(app=app),
                                  base_url="http://endpoint.test",
                                  headers=client._client.headers)
    return client


CONFIG = LlmEndpointConfig(base_url="http://endpoint.test", model_name="any-chat-model",
                           auth_env="RADLABEL_TEST_TOKEN", max_retries=1)


class TestWireFormat:
    def test_request_body_shape_and_auth_header(self, clavicle_template, monkeypatch):
        monkeypatch.setenv("RADLABEL_TEST_TOKEN", "sekrit")
        app, seen = fake_endpoint("ok", clavicle_template)
        client = http_client(app, CONFIG)
        payload = build_prompt(clavicle_template, "Befundtext.")
        raw = client.complete(payload, "r-0")
        body = seen["body"]
        assert set(body) == {"model", "messages", "temperature", "max_tokens"}
        assert body["model"] == "any-chat-model"
        assert body["messages"] == [{"role": "user", "content": payload.user_text}]
        assert body["temperature"] == 0.0
        assert body["max_tokens"] == 16 * 26
        assert seen["headers"]["authorization"] == "Bearer sekrit"
        assert json.loads(raw)  # first choice's message content comes back verbatim

    def test_extraction_through_http(self, clavicle_template, monkeypatch):
        monkeypatch.setenv("RADLABEL_TEST_TOKEN", "sekrit")
        app, _ = fake_endpoint("ok", clavicle_template)
        client = http_client(app, CONFIG)
        report = ReportDocument(report_id="r-0", region="clavicle", text="Befund.")
        result = extract_labels(report, clavicle_template, client)
        assert result.ok and result.attempts == 1

    def test_missing_token_env_fails_fast(self, monkeypatch):
        monkeypatch.delenv("RADLABEL_TEST_TOKEN", raising=False)
        with pytest.raises(AuthFailure):
            HttpChatClient(CONFIG)

    def test_401_maps_to_auth_failure(self, clavicle_template, monkeypatch):
        monkeypatch.setenv("RADLABEL_TEST_TOKEN", "wrong")
        app, _ = fake_endpoint("reject", clavicle_template)
        client = http_client(app, CONFIG)
        with pytest.raises(AuthFailure):
            client.complete(build_prompt(clavicle_template, "x"), "r-0")

    def test_5xx_maps_to_endpoint_unreachable(self, clavicle_template, monkeypatch):
        monkeypatch.setenv("RADLABEL_TEST_TOKEN", "t")
        app, _ = fake_endpoint("explode", clavicle_template)
        client = http_client(app, CONFIG)
        with pytest.raises(EndpointUnreachable):
            client.complete(build_prompt(clavicle_template, "x"), "r-0")

    def test_connection_error_maps_to_endpoint_unreachable(self, clavicle_template,
                                                           monkeypatch):
        monkeypatch.setenv("RADLABEL_TEST_TOKEN", "t")
        config = LlmEndpointConfig(base_url="http://127.0.0.1:1", model_name="m",
                                   auth_env="RADLABEL_TEST_TOKEN", timeout_s=0.2)
        client = HttpChatClient(config)
        with pytest.raises(EndpointUnreachable):
            client.complete(build_prompt(clavicle_template, "x"), "r-0")

    def test_config_from_json(self):
        config = LlmEndpointConfig.from_json_obj({
            "base_url": "https://api.example.test/v1",
            "model_name": "gpt-like",
            "auth_env": "KEY",
            "timeout_s": 10,
            "max_retries": 2,
            "parallelism": 8,
        })
        assert config.parallelism == 8
        with pytest.raises(ValueError):
            LlmEndpointConfig(base_url="x", model_name="m", parallelism=0)
