"""Domain types shared by every subsystem, plus the ingestion record format.

Datasets arrive as JSON Lines: one UTF-8 JSON object per line, one post per
object. Required fields are id, platform, author_id, text, created_at;
everything else is optional and defaults to absent. The full field table
lives in docs/ingestion-format.md.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

__all__ = [
    "Platform",
    "Sentiment",
    "Post",
    "User",
    "Batch",
    "FilterSpec",
    "RecordError",
    "ParseReport",
    "parse_record",
    "serialize_record",
    "parse_lines",
]


class Platform(str, Enum):
    TWITTER = "twitter"
    YOUTUBE = "youtube"


class Sentiment(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"
    UNKNOWN = "unknown"


# ids end up in whitespace-delimited export tables, so they must not contain
# whitespace or control characters
_ID_RE = re.compile(r"^[^\s\x00-\x1f\x7f]+$")
_LANG_RE = re.compile(r"^[a-z]{2}$")
_COUNTRY_RE = re.compile(r"^[A-Z]{2}$")


class RecordError(ValueError):
    """A single malformed ingestion record. Carries the 1-based line number."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


@dataclass(slots=True, frozen=True)
class Post:
    id: str
    platform: Platform
    author_id: str
    text: str
    created_at: datetime  # always tz-aware UTC, second resolution
    language: str = "und"
    sentiment: Sentiment = Sentiment.UNKNOWN
    retweet_of: Optional[str] = None
    video_id: Optional[str] = None
    channel_id: Optional[str] = None
    parent_comment_id: Optional[str] = None
    mentions: tuple[str, ...] = ()
    hashtags: tuple[str, ...] = ()
    urls: tuple[str, ...] = ()
    engagement: int = 0
    country: Optional[str] = None
    embedding: Optional[tuple[float, ...]] = None
    author_handle: Optional[str] = None
    author_name: Optional[str] = None
    author_description: Optional[str] = None

    @property
    def is_reply(self) -> bool:
        return self.parent_comment_id is not None

    def embedding_array(self) -> Optional[np.ndarray]:
        if self.embedding is None:
            return None
        return np.asarray(self.embedding, dtype=np.float64)


@dataclass(slots=True)
class User:
    id: str
    platform: Platform
    handle: str = ""
    display_name: str = ""
    description: str = ""


@dataclass(slots=True, frozen=True)
class Batch:
    batch_id: int
    source_path: str
    post_count: int
    ingested_at: datetime


@dataclass(slots=True, frozen=True)
class FilterSpec:
    """Conjunctive query: every present field must match.

    An empty FilterSpec matches all posts. Keywords use AND semantics with
    case-insensitive substring-on-token matching; community/topic accept a
    label id or a label name and resolve through the current partition /
    topic model.
    """

    keywords: tuple[str, ...] = ()
    date_from: Optional[datetime] = None
    date_to: Optional[datetime] = None  # inclusive
    language: Optional[str] = None
    sentiment: Optional[Sentiment] = None
    community: Optional[str] = None
    topic: Optional[str] = None

    def is_empty(self) -> bool:
        return self == FilterSpec()


@dataclass(slots=True)
class ParseReport:
    accepted: int = 0
    rejects: list[RecordError] = field(default_factory=list)

    @property
    def rejected(self) -> int:
        return len(self.rejects)

    @property
    def total(self) -> int:
        return self.accepted + self.rejected


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC-3339 timestamp into aware UTC, truncated to seconds."""
    if not isinstance(value, str):
        raise ValueError("created_at must be an RFC-3339 string")
    text = value.strip()
    # py3.10 fromisoformat does not accept a trailing Z
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise ValueError(f"invalid RFC-3339 timestamp {value!r}") from None
    if dt.tzinfo is None:
        raise ValueError(f"timestamp {value!r} lacks a UTC offset")
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def normalize_mention(raw: str) -> str:
    return raw.lstrip("@").lower()


def _require_id(obj: dict, key: str, line_no: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not _ID_RE.match(value):
        raise RecordError(line_no, f"field {key!r} missing or not a valid id")
    return value


def _optional_id(obj: dict, key: str, line_no: int) -> Optional[str]:
    value = obj.get(key)
    if value is None:
        return None
    if not isinstance(value, str) or not _ID_RE.match(value):
        raise RecordError(line_no, f"field {key!r} is not a valid id")
    return value


def _string_list(obj: dict, key: str, line_no: int) -> list[str]:
    value = obj.get(key)
    if value is None:
        return []
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise RecordError(line_no, f"field {key!r} must be a list of strings")
    return value


def parse_record(line: bytes | str, line_no: int = 1) -> Post:
    """Parse one ingestion line into a validated Post.

    Unknown fields are ignored; missing optional fields default to absent.
    Raises RecordError with the line number and a reason on any violation.
    """
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise RecordError(line_no, f"not valid UTF-8: {exc}") from None
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(line_no, f"not valid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise RecordError(line_no, "record is not an object")

    post_id = _require_id(obj, "id", line_no)
    author_id = _require_id(obj, "author_id", line_no)

    platform_raw = obj.get("platform")
    try:
        platform = Platform(platform_raw)
    except ValueError:
        raise RecordError(line_no, f"unknown platform {platform_raw!r}") from None

    text = obj.get("text")
    if not isinstance(text, str):
        raise RecordError(line_no, "field 'text' missing or not a string")

    if "created_at" not in obj:
        raise RecordError(line_no, "field 'created_at' missing")
    try:
        created_at = parse_timestamp(obj["created_at"])
    except ValueError as exc:
        raise RecordError(line_no, str(exc)) from None

    language = obj.get("language", "und")
    if not isinstance(language, str):
        raise RecordError(line_no, "field 'language' must be a string")
    language = language.lower()
    if language != "und" and not _LANG_RE.match(language):
        raise RecordError(line_no, f"language {obj.get('language')!r} is not ISO-639-1 or 'und'")

    sentiment_raw = obj.get("sentiment", "unknown")
    try:
        sentiment = Sentiment(sentiment_raw)
    except ValueError:
        raise RecordError(line_no, f"unknown sentiment {sentiment_raw!r}") from None

    retweet_of = _optional_id(obj, "retweet_of", line_no)
    video_id = _optional_id(obj, "video_id", line_no)
    channel_id = _optional_id(obj, "channel_id", line_no)
    parent_comment_id = _optional_id(obj, "parent_comment_id", line_no)

    country = obj.get("country")
    if country is not None:
        if not isinstance(country, str) or not _COUNTRY_RE.match(country.upper()):
            raise RecordError(line_no, f"country {country!r} is not ISO-3166 alpha-2")
        country = country.upper()

    # platform exclusivity rules
    if platform is Platform.YOUTUBE:
        if country is not None:
            raise RecordError(line_no, "geolocation not supported for youtube")
        if retweet_of is not None:
            raise RecordError(line_no, "field 'retweet_of' not valid for youtube")
    else:
        for key in ("video_id", "channel_id", "parent_comment_id"):
            if obj.get(key) is not None:
                raise RecordError(line_no, f"field {key!r} not valid for twitter")

    engagement = obj.get("engagement", 0)
    if not isinstance(engagement, int) or isinstance(engagement, bool) or engagement < 0:
        raise RecordError(line_no, "field 'engagement' must be a non-negative integer")

    mentions = tuple(normalize_mention(m) for m in _string_list(obj, "mentions", line_no))
    hashtags = tuple(h.lstrip("#").lower() for h in _string_list(obj, "hashtags", line_no))
    urls = tuple(_string_list(obj, "urls", line_no))

    embedding = obj.get("embedding")
    if embedding is not None:
        if (
            not isinstance(embedding, list)
            or not embedding
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in embedding)
        ):
            raise RecordError(line_no, "field 'embedding' must be a non-empty array of reals")
        embedding = tuple(float(v) for v in embedding)

    def opt_str(key: str) -> Optional[str]:
        value = obj.get(key)
        if value is None:
            return None
        if not isinstance(value, str):
            raise RecordError(line_no, f"field {key!r} must be a string")
        return value

    return Post(
        id=post_id,
        platform=platform,
        author_id=author_id,
        text=text,
        created_at=created_at,
        language=language,
        sentiment=sentiment,
        retweet_of=retweet_of,
        video_id=video_id,
        channel_id=channel_id,
        parent_comment_id=parent_comment_id,
        mentions=mentions,
        hashtags=hashtags,
        urls=urls,
        engagement=engagement,
        country=country,
        embedding=embedding,
        author_handle=opt_str("author_handle"),
        author_name=opt_str("author_name"),
        author_description=opt_str("author_description"),
    )


def serialize_record(post: Post) -> str:
    """Canonical one-line JSON form. parse_record(serialize_record(p)) == p."""
    obj: dict = {
        "id": post.id,
        "platform": post.platform.value,
        "author_id": post.author_id,
        "text": post.text,
        "created_at": format_timestamp(post.created_at),
    }
    if post.language != "und":
        obj["language"] = post.language
    if post.sentiment is not Sentiment.UNKNOWN:
        obj["sentiment"] = post.sentiment.value
    for key in ("retweet_of", "video_id", "channel_id", "parent_comment_id", "country"):
        value = getattr(post, key)
        if value is not None:
            obj[key] = value
    if post.mentions:
        obj["mentions"] = list(post.mentions)
    if post.hashtags:
        obj["hashtags"] = list(post.hashtags)
    if post.urls:
        obj["urls"] = list(post.urls)
    if post.engagement:
        obj["engagement"] = post.engagement
    if post.embedding is not None:
        obj["embedding"] = list(post.embedding)
    for key in ("author_handle", "author_name", "author_description"):
        value = getattr(post, key)
        if value is not None:
            obj[key] = value
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def parse_lines(lines: Iterable[bytes | str]) -> tuple[list[Post], ParseReport]:
    """Parse a whole ingestion stream. Rejects are tallied, never dropped silently."""
    posts: list[Post] = []
    report = ParseReport()
    for line_no, line in enumerate(lines, start=1):
        if isinstance(line, bytes):
            stripped = line.strip()
        else:
            stripped = line.strip()
        if not stripped:
            report.rejects.append(RecordError(line_no, "empty line"))
            continue
        try:
            posts.append(parse_record(stripped, line_no))
        except RecordError as exc:
            report.rejects.append(exc)
    report.accepted = len(posts)
    return posts, report


def users_from_posts(posts: Sequence[Post], registry: Optional[dict[str, User]] = None) -> dict[str, User]:
    """Fold author/channel identities out of a post stream into a user registry.

    Channels and commenters are both users; later records enrich earlier
    blank fields but never overwrite non-empty ones.
    """
    users = registry if registry is not None else {}
    for post in posts:
        user = users.get(post.author_id)
        if user is None:
            user = User(id=post.author_id, platform=post.platform)
            users[post.author_id] = user
        if post.author_handle and not user.handle:
            user.handle = post.author_handle
        if post.author_name and not user.display_name:
            user.display_name = post.author_name
        if post.author_description and not user.description:
            user.description = post.author_description
        if post.channel_id and post.channel_id not in users:
            users[post.channel_id] = User(id=post.channel_id, platform=post.platform)
    return users


def iter_file_lines(path) -> Iterator[bytes]:
    with open(path, "rb") as fh:
        for raw in fh:
            yield raw
