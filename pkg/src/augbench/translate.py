"""Backtranslation: pluggable translation providers, persistent cache, rate limiting."""
from __future__ import annotations

import hashlib
import json
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, runtime_checkable

import requests

from .augment import Thesaurus, bundled_thesaurus

_DATA_DIR = Path(__file__).parent / "data"

# Table 2 names 9 pivot languages for its 10-language row; the tenth is not
# published, so "it" fills the slot (documented in the README).
DEFAULT_LANGUAGES = ("es", "fr", "de", "af", "ru", "cs", "et", "ht", "bn", "it")


class TranslationError(Exception):
    pass


class TransientTranslationError(TranslationError):
    """Retry budget exhausted on timeouts / 429 / 5xx."""


class PermanentTranslationError(TranslationError):
    """Non-retryable failure (4xx other than 429)."""


class CacheError(TranslationError):
    pass


@runtime_checkable
class TranslationProvider(Protocol):
    provider_id: str

    def translate(self, text: str, source: str, target: str) -> str: ...


def cache_key(provider_id: str, source: str, target: str, text: str) -> str:
    h = hashlib.sha256()
    for part in (provider_id, source, target, text):
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


class TranslationCache:
    """Append-only JSONL cache keyed by (provider, source, target, text) hash.

    Entries: {"key","source","target","provider","text_hash","result"}.
    Later duplicate keys win on load; appends are crash-safe (one line per entry).
    A None path gives an in-memory cache.
    """

    def __init__(self, path: Optional[str | Path] = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self.load(self.path)

    def load(self, path: str | Path) -> int:
        """Merge entries from a JSONL cache file (e.g. a pre-seeded cache)."""
        n = 0
        try:
            with open(path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        obj = json.loads(line)
                        self._entries[obj["key"]] = obj["result"]
                    except (json.JSONDecodeError, KeyError) as e:
                        raise CacheError(f"{path}: bad cache line {lineno}: {e}") from e
                    n += 1
        except OSError as e:
            raise CacheError(f"cannot read cache {path}: {e}") from e
        return n

    def get(self, key: str) -> Optional[str]:
        return self._entries.get(key)

    def put(self, key: str, source: str, target: str, provider: str, text: str,
            result: str) -> None:
        with self._lock:
            self._entries[key] = result
            if self.path is None:
                return
            entry = {
                "key": key,
                "source": source,
                "target": target,
                "provider": provider,
                "text_hash": hashlib.sha256(text.encode("utf-8")).hexdigest(),
                "result": result,
            }
            try:
                with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                    fh.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")
            except OSError as e:
                raise CacheError(f"cannot append to cache {self.path}: {e}") from e

    def __len__(self) -> int:
        return len(self._entries)


@dataclass
class BacktranslationRecord:
    parent_id: Optional[str]
    pivot_language: str
    intermediate_text: str
    final_text: str
    cache_hits: int  # 0..2
    provider_calls: int


def backtranslate(
    text: str,
    pivot: str,
    provider: Optional[TranslationProvider],
    cache: Optional[TranslationCache] = None,
    parent_id: Optional[str] = None,
) -> BacktranslationRecord:
    """Round-trip text en -> pivot -> en, serving each leg from cache when possible."""
    if pivot == "en":
        raise TranslationError("pivot language must differ from 'en'")
    if cache is None:
        cache = TranslationCache()

    hits = 0
    calls = 0

    def leg(src: str, tgt: str, t: str, leg_name: str) -> str:
        nonlocal hits, calls
        pid = provider.provider_id if provider is not None else None
        if pid is not None:
            key = cache_key(pid, src, tgt, t)
            cached = cache.get(key)
            if cached is not None:
                hits += 1
                return cached
        if provider is None:
            raise TranslationError(f"no provider and cache miss on {leg_name} leg ({src}->{tgt})")
        try:
            calls += 1
            result = provider.translate(t, src, tgt)
        except TranslationError as e:
            raise type(e)(f"{leg_name} leg en<->{pivot} failed: {e}") from e
        cache.put(key, src, tgt, pid, t, result)
        return result

    intermediate = leg("en", pivot, text, "forward")
    final = leg(pivot, "en", intermediate, "backward")
    return BacktranslationRecord(
        parent_id=parent_id,
        pivot_language=pivot,
        intermediate_text=intermediate,
        final_text=final,
        cache_hits=hits,
        provider_calls=calls,
    )


class TokenBucket:
    """Blocking token-bucket rate limiter (refill `rate` tokens/second)."""

    def __init__(self, rate: float, burst: float = 1.0, clock=time.monotonic,
                 sleep=time.sleep):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.burst = max(1.0, burst)
        self._tokens = self.burst
        self._last = clock()
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self._tokens = min(self.burst, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            self._sleep(wait)


_RETRYABLE_STATUS = {429}


class HttpProvider:
    """JSON-over-HTTP translation client with token-bucket rate limiting and retries.

    Request body: {"q": text, "source": src, "target": tgt} (+ "api_key" when set).
    Expected response: {"translatedText": "..."}.  Retries timeouts, connection
    errors, 429 and 5xx with exponential backoff; other 4xx fail immediately.
    """

    def __init__(
        self,
        endpoint: str,
        api_key: Optional[str] = None,
        rate_limit: float = 10.0,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        backoff_cap: float = 30.0,
        timeout: float = 30.0,
        session: Optional[requests.Session] = None,
        sleep=time.sleep,
        provider_id: Optional[str] = None,
    ):
        self.endpoint = endpoint
        self.api_key = api_key
        self.provider_id = provider_id or f"http:{endpoint}"
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.timeout = timeout
        self._session = session or requests.Session()
        self._sleep = sleep
        self._bucket = TokenBucket(rate_limit, sleep=sleep)
        self.requests_made = 0

    def _backoff(self, attempt: int) -> float:
        return min(self.backoff_cap, self.backoff_base * (2 ** attempt))

    def translate(self, text: str, source: str, target: str) -> str:
        body = {"q": text, "source": source, "target": target}
        if self.api_key:
            body["api_key"] = self.api_key
        last_err: Optional[str] = None
        for attempt in range(self.max_retries):
            self._bucket.acquire()
            try:
                self.requests_made += 1
                resp = self._session.post(self.endpoint, json=body, timeout=self.timeout)
            except (requests.Timeout, requests.ConnectionError) as e:
                last_err = str(e)
                self._sleep(self._backoff(attempt))
                continue
            if resp.status_code == 200:
                try:
                    return resp.json()["translatedText"]
                except (ValueError, KeyError) as e:
                    raise PermanentTranslationError(
                        f"malformed response from {self.endpoint}: {e}"
                    ) from e
            if resp.status_code in _RETRYABLE_STATUS or resp.status_code >= 500:
                last_err = f"HTTP {resp.status_code}"
                self._sleep(self._backoff(attempt))
                continue
            raise PermanentTranslationError(
                f"HTTP {resp.status_code} from {self.endpoint}"
            )
        raise TransientTranslationError(
            f"gave up after {self.max_retries} attempts: {last_err}"
        )


def _stable_hash(*parts) -> int:
    h = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


class MockProvider:
    """Deterministic offline pseudo-translator for hermetic tests and dry runs.

    The forward leg rotates the token sequence by a language-keyed offset
    (reversible) and substitutes ~noise_rate of tokens with synonyms (not
    reversible, giving realistic word-level drift).  The backward leg undoes
    the rotation.  Fully deterministic in (seed, language, text).
    """

    def __init__(self, seed: int = 0, noise_rate: float = 0.1,
                 drift_table: Optional[Thesaurus] = None):
        if not 0.0 <= noise_rate <= 0.25:
            raise ValueError("noise_rate must be in [0, 0.25]")
        self.seed = seed
        self.noise_rate = noise_rate
        self.drift = drift_table if drift_table is not None else bundled_thesaurus()
        self.provider_id = f"mock:{seed}:{noise_rate}"
        self.calls = 0

    def _rotation(self, lang: str, length: int) -> int:
        return _stable_hash("rot", lang) % length if length else 0

    def translate(self, text: str, source: str, target: str) -> str:
        self.calls += 1
        tokens = text.split()
        if not tokens:
            return text
        if source == "en":
            lang = target
            r = self._rotation(lang, len(tokens))
            out = tokens[r:] + tokens[:r]
            n_subs = int(round(self.noise_rate * len(out)))
            if n_subs:
                rng = random.Random(_stable_hash(self.seed, lang, text))
                candidates = [i for i, t in enumerate(out) if t in self.drift]
                for i in sorted(rng.sample(candidates, min(n_subs, len(candidates)))):
                    out[i] = rng.choice(self.drift.lookup(out[i]))
        else:
            lang = source
            r = self._rotation(lang, len(tokens))
            k = len(tokens) - r
            out = tokens[k:] + tokens[:k]
        return " ".join(out)


class ReplayProvider:
    """Provider stub that only identifies a pre-seeded cache; any live call fails."""

    def __init__(self, provider_id: str = "paper"):
        self.provider_id = provider_id

    def translate(self, text: str, source: str, target: str) -> str:
        raise PermanentTranslationError(
            f"replay provider {self.provider_id!r} has no live backend; "
            f"cache miss for {source}->{target}"
        )


def paper_cache_path() -> Path:
    """Pre-seeded cache reproducing the published example backtranslations."""
    return _DATA_DIR / "paper_backtranslations.jsonl"
