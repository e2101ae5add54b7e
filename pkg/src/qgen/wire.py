"""Minimal HTTP JSON transport for the real provider adapters.

Kept in one place so tests and the mock-mode network assertion can
monkeypatch a single entry point.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request

from .errors import ProviderError

RETRYABLE_STATUSES = frozenset({408, 429, 500, 502, 503, 504})


def http_post_json(url: str, payload: dict, headers: dict[str, str], timeout: float = 60.0) -> dict:
    """POST a JSON payload and return the decoded JSON response body."""
    body = json.dumps(payload).encode("utf-8")
    request = urllib.request.Request(
        url, data=body, headers={"Content-Type": "application/json", **headers}, method="POST"
    )
    try:
        with urllib.request.urlopen(request, timeout=timeout) as resp:
            data = resp.read()
    except urllib.error.HTTPError as exc:
        raise ProviderError(exc.code, exc.reason or "HTTP error", retryable=exc.code in RETRYABLE_STATUSES) from exc
    except urllib.error.URLError as exc:
        raise ProviderError(0, f"network error: {exc.reason}", retryable=True) from exc
    try:
        return json.loads(data.decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProviderError(0, f"provider returned undecodable body: {exc}", retryable=False) from exc
