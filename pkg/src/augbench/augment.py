"""Tokenization, thesaurus lookup, and random token-perturbation augmentations."""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

from .corpus import Corpus, Document, Origin

_DATA_DIR = Path(__file__).parent / "data"

SENTENCE_FINAL = (".", "!", "?")


class AugmentError(Exception):
    pass


def _is_punct_char(c: str) -> bool:
    return not c.isalnum() and not c.isspace()


def _is_punct_token(tok: str) -> bool:
    return all(_is_punct_char(c) for c in tok)


def tokenize(text: str) -> list[str]:
    """Split on whitespace; each maximal run of punctuation becomes its own token."""
    tokens: list[str] = []
    for chunk in text.split():
        run = ""
        run_punct = False
        for c in chunk:
            p = _is_punct_char(c)
            if run and p != run_punct:
                tokens.append(run)
                run = ""
            run += c
            run_punct = p
        if run:
            tokens.append(run)
    return tokens


def detokenize(tokens: Sequence[str]) -> str:
    """Join with spaces; punctuation-only tokens attach to the preceding token."""
    out = ""
    for tok in tokens:
        if out and not _is_punct_token(tok):
            out += " "
        out += tok
    return out


class Thesaurus:
    """Case-insensitive word -> synonym-list lookup.  Stored forms are lowercase."""

    def __init__(self, entries: dict[str, list[str]] | None = None):
        self._entries: dict[str, list[str]] = {}
        for word, syns in (entries or {}).items():
            word = word.lower()
            cleaned = []
            for s in syns:
                s = s.lower()
                if s == word:
                    raise AugmentError(f"thesaurus entry {word!r} lists itself as a synonym")
                if s not in cleaned:
                    cleaned.append(s)
            if cleaned:
                self._entries[word] = cleaned

    @classmethod
    def from_tsv(cls, path: str | Path) -> "Thesaurus":
        """Read `word<TAB>syn1,syn2,...` lines; blank lines and # comments skipped."""
        entries: dict[str, list[str]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise AugmentError(f"{path}: bad thesaurus line {lineno}: {line!r}")
                entries[parts[0].strip()] = [s.strip() for s in parts[1].split(",") if s.strip()]
        return cls(entries)

    def lookup(self, word: str) -> list[str]:
        return self._entries.get(word.lower(), [])

    def words(self) -> list[str]:
        return list(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self._entries


def bundled_thesaurus() -> Thesaurus:
    return Thesaurus.from_tsv(_DATA_DIR / "thesaurus.tsv")


def bundled_stopwords() -> frozenset[str]:
    words = (_DATA_DIR / "stopwords.txt").read_text(encoding="utf-8").split()
    return frozenset(w.lower() for w in words)


def edit_count(alpha: float, length: int) -> int:
    """Number of edits for a sequence: max(1, round(alpha * length))."""
    return max(1, int(round(alpha * length)))


def _at_sentence_start(tokens: Sequence[str], i: int) -> bool:
    if i == 0:
        return True
    prev = tokens[i - 1]
    return _is_punct_token(prev) and prev.endswith(SENTENCE_FINAL)


def _match_case(original: str, synonym: str, tokens: Sequence[str], i: int) -> str:
    if original.istitle() and _at_sentence_start(tokens, i):
        return synonym.title()
    return synonym


def synonym_replace(
    tokens: Sequence[str],
    alpha: float,
    thesaurus: Thesaurus,
    stopwords: frozenset[str] | set[str],
    rng_seed: int,
) -> list[str]:
    """Replace up to max(1, round(alpha*len)) eligible tokens with uniform synonyms."""
    tokens = list(tokens)
    if not tokens:
        return tokens
    rng = random.Random(rng_seed)
    eligible = [
        i for i, t in enumerate(tokens)
        if t.lower() not in stopwords and not _is_punct_token(t) and t in thesaurus
    ]
    if not eligible:
        return tokens
    n = min(edit_count(alpha, len(tokens)), len(eligible))
    out = list(tokens)
    for i in sorted(rng.sample(eligible, n)):
        syn = rng.choice(thesaurus.lookup(tokens[i]))
        out[i] = _match_case(tokens[i], syn, tokens, i)
    return out


def random_insert(
    tokens: Sequence[str],
    alpha: float,
    thesaurus: Thesaurus,
    stopwords: frozenset[str] | set[str],
    rng_seed: int,
) -> list[str]:
    """Insert max(1, round(alpha*len)) synonyms of random eligible tokens at random gaps."""
    tokens = list(tokens)
    if not tokens:
        return tokens
    rng = random.Random(rng_seed)
    eligible = [
        t for t in tokens
        if t.lower() not in stopwords and not _is_punct_token(t) and t in thesaurus
    ]
    if not eligible:
        return tokens
    out = list(tokens)
    for _ in range(edit_count(alpha, len(tokens))):
        word = rng.choice(eligible)
        syn = rng.choice(thesaurus.lookup(word))
        out.insert(rng.randrange(len(out) + 1), syn)
    return out


def random_swap(tokens: Sequence[str], alpha: float, rng_seed: int) -> list[str]:
    """Exchange max(1, round(alpha*len)) uniformly random distinct position pairs."""
    out = list(tokens)
    if len(out) < 2:
        return out
    rng = random.Random(rng_seed)
    for _ in range(edit_count(alpha, len(out))):
        i, j = rng.sample(range(len(out)), 2)
        out[i], out[j] = out[j], out[i]
    return out


def random_delete(tokens: Sequence[str], p: float, rng_seed: int) -> list[str]:
    """Delete each token independently with probability p; retain one if all go."""
    tokens = list(tokens)
    if not tokens:
        return tokens
    rng = random.Random(rng_seed)
    out = [t for t in tokens if rng.random() >= p]
    if not out:
        out = [tokens[rng.randrange(len(tokens))]]
    return out


class AugTechnique(str, Enum):
    SYNONYM_REPLACE = "sr"
    RANDOM_INSERT = "ri"
    RANDOM_SWAP = "rs"
    RANDOM_DELETE = "rd"
    BACKTRANSLATE = "bt"


class LanguageStrategy(str, Enum):
    ALL_LANGUAGES = "all"
    ROUND_ROBIN = "roundrobin"


@dataclass
class AugmentSpec:
    technique: AugTechnique
    alpha: float = 0.1
    copies_per_original: int = 1
    languages: tuple[str, ...] = ()
    language_strategy: LanguageStrategy = LanguageStrategy.ALL_LANGUAGES
    seed: int = 0
    stopwords: frozenset[str] = field(default_factory=bundled_stopwords)

    def __post_init__(self):
        self.technique = AugTechnique(self.technique)
        self.language_strategy = LanguageStrategy(self.language_strategy)
        if not 0.0 <= self.alpha <= 1.0:
            raise AugmentError(f"alpha must be in [0,1], got {self.alpha}")
        if self.copies_per_original < 1:
            raise AugmentError("copies_per_original must be >= 1")
        if self.technique is AugTechnique.BACKTRANSLATE:
            if not self.languages:
                raise AugmentError("backtranslation requires a nonempty language list")
        elif self.languages:
            raise AugmentError(f"{self.technique.value} does not take languages")


def derive_seed(base_seed: int, doc_id: str, copy: int) -> int:
    """Per-document RNG stream, stable under corpus growth."""
    h = hashlib.sha256(f"{base_seed}|{doc_id}|{copy}".encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


@dataclass
class AugmentRun:
    corpus: Corpus
    generated: int = 0
    unmodified: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (doc_id, reason)


def augment_dataset(
    corpus: Corpus,
    spec: AugmentSpec,
    thesaurus: Optional[Thesaurus] = None,
    translator=None,
    cache=None,
) -> AugmentRun:
    """Append k synthetic documents per Original train document.

    Backtranslation with the all-languages strategy makes one copy per
    language; round-robin assigns languages cyclically across documents in
    corpus order.  Translation failures skip the document and are recorded.
    """
    bt = spec.technique is AugTechnique.BACKTRANSLATE
    if bt and translator is None:
        raise AugmentError("backtranslation requires a translation provider")
    if not bt and translator is not None:
        raise AugmentError("translator given for a non-backtranslation technique")
    if not bt and thesaurus is None:
        thesaurus = bundled_thesaurus()

    from . import translate as _translate  # local import; translate imports nothing from here

    originals = [d for d in corpus.split_docs("train") if d.is_original]
    run = AugmentRun(corpus=corpus)
    synthetics: list[Document] = []

    for pos, doc in enumerate(originals):
        if bt:
            if spec.language_strategy is LanguageStrategy.ALL_LANGUAGES:
                jobs = [(lang, 0) for lang in spec.languages]
            else:
                lang = spec.languages[pos % len(spec.languages)]
                jobs = [(lang, c) for c in range(spec.copies_per_original)]
            for lang, copy in jobs:
                try:
                    rec = _translate.backtranslate(
                        doc.text, lang, translator, cache, parent_id=doc.id
                    )
                except _translate.TranslationError as e:
                    run.skipped.append((doc.id, f"{lang}: {e}"))
                    continue
                synthetics.append(_make_synthetic(doc, rec.final_text, spec, lang, copy))
        else:
            for copy in range(spec.copies_per_original):
                seed = derive_seed(spec.seed, doc.id, copy)
                toks = tokenize(doc.text)
                if spec.technique is AugTechnique.SYNONYM_REPLACE:
                    new = synonym_replace(toks, spec.alpha, thesaurus, spec.stopwords, seed)
                elif spec.technique is AugTechnique.RANDOM_INSERT:
                    new = random_insert(toks, spec.alpha, thesaurus, spec.stopwords, seed)
                elif spec.technique is AugTechnique.RANDOM_SWAP:
                    new = random_swap(toks, spec.alpha, seed)
                else:
                    new = random_delete(toks, spec.alpha, seed)
                if new == toks:
                    run.unmodified += 1
                synthetics.append(_make_synthetic(doc, detokenize(new), spec, None, copy))

    run.generated = len(synthetics)
    run.corpus = corpus.with_documents(synthetics)
    return run


def _make_synthetic(
    parent: Document, text: str, spec: AugmentSpec, lang: Optional[str], copy: int
) -> Document:
    tag = f"{spec.technique.value}:{lang}" if lang else spec.technique.value
    return Document(
        id=f"{parent.id}#aug[{tag}:{copy}]",
        text=text,
        label=parent.label,
        split=parent.split,
        origin=Origin(kind="synthetic", technique=spec.technique.value, lang=lang,
                      parent=parent.id),
    )
