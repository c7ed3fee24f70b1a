"""Cached HTTP download of corpus files.

Files are stored in a cache directory keyed by the SHA-256 of the URL, so
repeat runs never re-download unless explicitly refreshed.  The transport
is injectable for testing.
"""

from __future__ import annotations

import hashlib
import http.client
import logging
import os
import socket
import tempfile
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path

from .errors import FetchError

log = logging.getLogger(__name__)

CACHE_ENV_VAR = "HEXSTYLE_CACHE_DIR"


def default_cache_dir() -> Path:
    override = os.environ.get(CACHE_ENV_VAR)
    if override:
        return Path(override)
    return Path.home() / ".cache" / "hexstyle"


@dataclass(frozen=True)
class FetchResponse:
    status: int
    content_type: str | None
    body: bytes


def urllib_transport(url: str) -> FetchResponse:
    """Default transport; maps urllib failures onto FetchError kinds."""
    try:
        with urllib.request.urlopen(url, timeout=60) as resp:
            # non-HTTP schemes (file://) carry no status; treat as success
            status = getattr(resp, "status", None)
            return FetchResponse(
                status=200 if status is None else status,
                content_type=resp.headers.get("Content-Type") if resp.headers else None,
                body=resp.read(),
            )
    except urllib.error.HTTPError as exc:
        raise FetchError(
            f"HTTP {exc.code} fetching {url}", kind="http", status=exc.code
        ) from exc
    except urllib.error.URLError as exc:
        reason = exc.reason
        if isinstance(reason, socket.gaierror):
            raise FetchError(f"DNS failure for {url}: {reason}", kind="dns") from exc
        raise FetchError(f"connection failure for {url}: {reason}", kind="connect") from exc
    except (ConnectionError, socket.timeout, http.client.HTTPException) as exc:
        raise FetchError(f"connection failure for {url}: {exc}", kind="connect") from exc


def cache_path_for(url: str, cache_dir) -> Path:
    digest = hashlib.sha256(url.encode("utf-8")).hexdigest()
    return Path(cache_dir) / f"{digest}.xml"


def fetch_corpus(url: str, cache_dir=None, *, refresh=False, transport=None) -> Path:
    """Return a local path for ``url``, downloading at most once.

    A cached file is returned without touching the network unless
    ``refresh`` is set.  HTTP statuses other than 200 raise FetchError;
    a non-XML content type is stored anyway with a warning.
    """
    if cache_dir is None:
        cache_dir = default_cache_dir()
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_path_for(url, cache_dir)
    if path.exists() and not refresh:
        return path

    transport = transport or urllib_transport
    response = transport(url)
    if response.status != 200:
        raise FetchError(
            f"HTTP {response.status} fetching {url}", kind="http", status=response.status
        )
    ctype = response.content_type or ""
    if ctype and "xml" not in ctype.lower():
        log.warning("content type %r for %s does not look like XML; storing anyway",
                    ctype, url)

    # unique temp file plus atomic rename keeps concurrent fetchers of
    # the same key from seeing partial writes
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(response.body)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return path
