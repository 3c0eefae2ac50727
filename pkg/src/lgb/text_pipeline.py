"""Unified user text sequences: tweet-aware normalization, assembly, vocabulary.

Every account is rendered as one token sequence: a profile segment
(attributes as "key value" pairs), a description segment, and one segment
per tweet, with "</s>" between segments. Mentions, hashtags, URLs and
emoticons are collapsed to placeholder tokens so the encoder sees their
kind rather than their surface form.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .graph_store import UserRecord

DELIMITER = "</s>"
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
MENTION_TOKEN = "@USER"
HASHTAG_TOKEN = "#HASHTAG"
URL_TOKEN = "HTTPURL"
HEADER_USER = "User"
HEADER_PROFILE = "profile:"
HEADER_DESCRIPTION = "Description:"
HEADER_TWEET = "Tweet:"

RESERVED_TOKENS = (
    PAD_TOKEN, UNK_TOKEN, DELIMITER, MENTION_TOKEN, HASHTAG_TOKEN, URL_TOKEN,
    HEADER_USER, HEADER_PROFILE, HEADER_DESCRIPTION, HEADER_TWEET,
)

# ASCII emoticons -> colon-delimited names. Fixed small table; anything the
# table misses simply tokenizes as punctuation.
EMOTICON_NAMES: Mapping[str, str] = {
    ":)": ":slightly_smiling_face:", ":-)": ":slightly_smiling_face:",
    "=)": ":slightly_smiling_face:", ":]": ":slightly_smiling_face:",
    ":(": ":frowning_face:", ":-(": ":frowning_face:",
    "=(": ":frowning_face:", ":[": ":frowning_face:",
    ":D": ":grinning_face:", ":-D": ":grinning_face:", "=D": ":grinning_face:",
    ";)": ":winking_face:", ";-)": ":winking_face:",
    ":P": ":face_with_tongue:", ":-P": ":face_with_tongue:",
    ":p": ":face_with_tongue:", ":-p": ":face_with_tongue:",
    ":/": ":confused_face:", ":-/": ":confused_face:",
    ":'(": ":crying_face:", ":'-(": ":crying_face:",
    ":O": ":face_with_open_mouth:", ":-O": ":face_with_open_mouth:",
    ":o": ":face_with_open_mouth:",
    "<3": ":red_heart:",
}

# Common unicode emoji -> names; emoji outside the table become ":emoji:".
EMOJI_NAMES: Mapping[str, str] = {
    "\U0001F600": ":grinning_face:",
    "\U0001F601": ":beaming_face:",
    "\U0001F602": ":face_with_tears_of_joy:",
    "\U0001F923": ":rolling_on_the_floor_laughing:",
    "\U0001F60A": ":smiling_face_with_smiling_eyes:",
    "\U0001F60D": ":smiling_face_with_heart_eyes:",
    "\U0001F62D": ":loudly_crying_face:",
    "\U0001F621": ":enraged_face:",
    "\U0001F44D": ":thumbs_up:",
    "\U0001F44E": ":thumbs_down:",
    "❤": ":red_heart:",
    "\U0001F495": ":two_hearts:",
    "\U0001F525": ":fire:",
    "\U0001F389": ":party_popper:",
    "\U0001F4AF": ":hundred_points:",
    "\U0001F64F": ":folded_hands:",
    "\U0001F60E": ":smiling_face_with_sunglasses:",
    "\U0001F914": ":thinking_face:",
    "\U0001F605": ":grinning_face_with_sweat:",
    "\U0001F644": ":face_with_rolling_eyes:",
}
GENERIC_EMOJI = ":emoji:"

_EMOTICON_ALTS = "|".join(
    re.escape(e) + (r"(?![A-Za-z])" if e[-1].isalpha() else "")
    for e in sorted(EMOTICON_NAMES, key=len, reverse=True)
)

_TOKEN_RE = re.compile(
    r"(?P<delim></s>)"
    r"|(?P<url>https?://\S+|www\.\S+)"
    r"|(?P<mention>@\w+)"
    r"|(?P<hashtag>#\w+)"
    r"|(?P<colonname>:[A-Za-z_]+:)"
    rf"|(?P<emoticon>{_EMOTICON_ALTS})"
    r"|(?P<emoji>[\U0001F000-\U0001FAFF☀-➿]️?)"
    r"|(?P<word>\w+(?:'\w+)?)"
    r"|(?P<punct>\S)"
)

_WORD_RE = re.compile(r"\w+")


def _lower_token(tok: str) -> str:
    # Per-char lowercasing that never splits a token: a char keeps its case
    # when lowering it would introduce non-word chars (e.g. combining marks).
    out = []
    for ch in tok:
        low = ch.lower()
        if low != ch and not _WORD_RE.fullmatch(low):
            low = ch
        out.append(low)
    return "".join(out)


def tokenize(raw: str) -> list[str]:
    """Split text into tweet-aware surface tokens (URLs, @mentions, #tags,
    emoticons and emoji each stay a single token)."""
    return [m.group(0) for m in _TOKEN_RE.finditer(raw)]


def normalize(raw: str) -> list[str]:
    """Tokenize and normalize: mentions -> @USER, hashtags -> #HASHTAG,
    URLs -> HTTPURL, emoticons/emoji -> colon names, everything else
    lowercased. Total (never raises) and idempotent on its own output."""
    out: list[str] = []
    for m in _TOKEN_RE.finditer(raw):
        kind = m.lastgroup
        tok = m.group(0)
        if kind == "url":
            out.append(URL_TOKEN)
        elif kind == "mention":
            out.append(MENTION_TOKEN)
        elif kind == "hashtag":
            out.append(HASHTAG_TOKEN)
        elif kind == "emoticon":
            out.append(EMOTICON_NAMES[tok])
        elif kind == "emoji":
            out.append(EMOJI_NAMES.get(tok.rstrip("️"), GENERIC_EMOJI))
        elif kind == "colonname":
            out.append(tok.lower())
        elif kind == "delim":
            out.append(tok)
        elif tok == URL_TOKEN:  # fixed point for re-normalization
            out.append(tok)
        else:
            out.append(_lower_token(tok))
    return out


@dataclass(frozen=True)
class SegmentCaps:
    """Per-segment content-token caps (headers and delimiters don't count)."""

    profile: int = 32
    description: int = 64
    tweets: int = 160


Segment = tuple[str, tuple[str, ...]]  # (kind in {profile, description, tweet}, tokens)


@dataclass(frozen=True)
class TextSequence:
    """One account's unified token sequence and its per-segment breakdown."""

    node_id: str
    segments: tuple[Segment, ...]
    flat_tokens: tuple[str, ...]

    @classmethod
    def from_segments(cls, node_id: str, segments: Sequence[Segment]) -> "TextSequence":
        return cls(node_id=node_id, segments=tuple(segments),
                   flat_tokens=flatten_segments(segments))


def flatten_segments(segments: Sequence[Segment]) -> tuple[str, ...]:
    profile = next(toks for kind, toks in segments if kind == "profile")
    description = next(toks for kind, toks in segments if kind == "description")
    tweets = [toks for kind, toks in segments if kind == "tweet"]

    flat: list[str] = [HEADER_USER, HEADER_PROFILE, *profile,
                       DELIMITER, HEADER_DESCRIPTION, *description,
                       DELIMITER, HEADER_TWEET]
    for i, toks in enumerate(tweets):
        if i > 0:
            flat.append(DELIMITER)
        flat.extend(toks)
    return tuple(flat)


def _profile_tokens(u: UserRecord) -> list[str]:
    # fixed attribute order: name, follower/following counts, extras by key
    pairs: list[tuple[str, object]] = [
        ("name", u.name),
        ("followers_count", u.followers_count),
        ("following_count", u.following_count),
    ]
    pairs.extend(sorted(u.extra_attributes.items()))
    toks: list[str] = []
    for key, value in pairs:
        toks.extend(normalize(key))
        toks.extend(normalize(str(value)))
    return toks


def build_sequence(u: UserRecord, caps: SegmentCaps = SegmentCaps()) -> TextSequence:
    """Assemble the unified sequence for one account.

    Segment order is profile, description, then tweets in original order;
    each segment is truncated to its cap and empty segments still emit
    their header. Tweets that normalize to nothing are dropped rather than
    emitting a dangling delimiter.
    """
    profile = tuple(_profile_tokens(u)[: caps.profile])
    description = tuple(normalize(u.description)[: caps.description])

    tweet_segments: list[Segment] = []
    budget = caps.tweets
    for tweet in u.tweets:
        if budget <= 0:
            break
        toks = normalize(tweet)[:budget]
        if not toks:
            continue
        budget -= len(toks)
        tweet_segments.append(("tweet", tuple(toks)))

    segments: list[Segment] = [("profile", profile), ("description", description)]
    segments.extend(tweet_segments)
    return TextSequence.from_segments(u.id, segments)


class Vocabulary:
    """Frozen bijective token<->id map with reserved special tokens."""

    def __init__(self, tokens: Sequence[str]):
        for i, tok in enumerate(RESERVED_TOKENS):
            if i >= len(tokens) or tokens[i] != tok:
                raise ValueError(f"vocabulary must start with the reserved tokens {RESERVED_TOKENS}")
        self._id_to_token = tuple(tokens)
        self._token_to_id = {t: i for i, t in enumerate(tokens)}
        if len(self._token_to_id) != len(self._id_to_token):
            raise ValueError("vocabulary tokens must be unique")

    pad_id = property(lambda self: self._token_to_id[PAD_TOKEN])
    unk_id = property(lambda self: self._token_to_id[UNK_TOKEN])

    def __len__(self) -> int:
        return len(self._id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self._token_to_id

    def id_of(self, token: str) -> int:
        return self._token_to_id.get(token, self.unk_id)

    def token_of(self, idx: int) -> str:
        return self._id_to_token[idx]

    @property
    def tokens(self) -> tuple[str, ...]:
        return self._id_to_token

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for i, tok in enumerate(self._id_to_token):
                fh.write(f"{tok}\t{i}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        tokens: list[str] = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                tok, _, idx = line.rstrip("\n").partition("\t")
                if int(idx) != len(tokens):
                    raise ValueError(f"{path}: non-contiguous vocabulary ids")
                tokens.append(tok)
        return cls(tokens)


def build_vocabulary(sequences: Iterable[TextSequence], min_count: int = 1,
                     max_size: int = 50_000) -> Vocabulary:
    """Frequency vocabulary over the corpus: count >= min_count, most
    frequent first, lexicographic tie-break, capped at max_size total."""
    sequences = list(sequences)
    if not sequences:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts: Counter[str] = Counter()
    reserved = set(RESERVED_TOKENS)
    for seq in sequences:
        counts.update(t for t in seq.flat_tokens if t not in reserved)

    tokens = list(RESERVED_TOKENS)
    for tok, cnt in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
        if cnt < min_count or len(tokens) >= max_size:
            break
        tokens.append(tok)
    return Vocabulary(tokens)


def to_ids(seq: TextSequence, vocab: Vocabulary, max_len: int = 256) -> list[int]:
    """Token ids for a sequence: unknown -> UNK, truncated to max_len,
    never padded (batching pads)."""
    return [vocab.id_of(t) for t in seq.flat_tokens[:max_len]]
