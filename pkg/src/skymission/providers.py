"""Clients for the goal-extraction and object-grounding model stages.

Two provider families implement the same two-method surface:

* :class:`ChatCompletionsProvider` speaks an OpenAI-compatible
  chat-completions protocol over HTTP (plain text for goal extraction and
  action generation, text plus a base64 image for grounding).
* :class:`MockProvider` replays a JSON fixture of per-goal detections and
  answers in the same wire shapes, so pipelines run offline and
  bit-reproducibly.

Grounding responses use the XML-like point markup emitted by pointing
vision models: ``<point x="10.5" y="20.1" alt="building">building</point>``
or the multi-point ``<points x1=".." y1=".." x2=".." ...>`` form, with
coordinates as percentages of image width/height.
"""

from __future__ import annotations

import base64
import io
import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Protocol

import requests
from PIL import Image

from .geo import GeoReference, PixelPoint

logger = logging.getLogger(__name__)

PROVIDER_KINDS = ("mock", "http-chat", "http-vlm")


class ProviderError(RuntimeError):
    """Transport-level failure after exhausting retries."""


class ResponseParseError(ValueError):
    """Model answered in an unexpected shape; carries the raw text."""

    def __init__(self, message: str, raw: str):
        super().__init__(f"{message}: {raw[:200]!r}")
        self.raw = raw


class NoGoalsError(ValueError):
    """The instruction yielded no target categories."""


@dataclass(frozen=True)
class Instruction:
    """Operator request in natural language."""

    text: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("instruction must not be empty")


@dataclass(frozen=True)
class GoalSet:
    """Ordered target categories, deduplicated case-insensitively."""

    goals: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.goals:
            raise ValueError("goal set must not be empty")
        seen = set()
        for g in self.goals:
            if not g or not g.strip():
                raise ValueError("goals must be non-empty strings")
            key = g.lower()
            if key in seen:
                raise ValueError(f"duplicate goal {g!r}")
            seen.add(key)


@dataclass
class GroundedPoints:
    """Pixel detections per goal, with the raw model answers kept for audit.

    ``rejected`` records percent coordinates that fell outside the image
    after conversion; they are excluded from results rather than clamped,
    since a fabricated position would corrupt downstream error metrics.
    """

    by_goal: dict[str, list[PixelPoint]] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)
    rejected: dict[str, list[tuple[float, float]]] = field(default_factory=dict)

    def total(self) -> int:
        return sum(len(v) for v in self.by_goal.values())

    def in_order(self) -> list[tuple[str, PixelPoint]]:
        """All in-bounds detections, goal by goal in insertion order."""
        return [(goal, p) for goal, pts in self.by_goal.items() for p in pts]


@dataclass(frozen=True)
class ProviderConfig:
    """How to reach one model stage. The auth token itself never appears
    here, only the name of the environment variable holding it."""

    kind: str = "mock"
    endpoint: str = ""
    model: str = ""
    token_env: str = ""
    timeout_s: float = 60.0
    max_retries: int = 2
    backoff_base_s: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in PROVIDER_KINDS:
            raise ValueError(f"unknown provider kind {self.kind!r}, expected one of {PROVIDER_KINDS}")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


class Provider(Protocol):
    def complete_text(self, prompt: str) -> str: ...

    def complete_vision(self, prompt: str, image: bytes, media_type: str) -> str: ...


# --------------------------------------------------------------------------
# prompts and response parsing
# --------------------------------------------------------------------------

def goal_prompt(instruction: Instruction) -> str:
    return (
        "You translate aerial survey requests into target categories.\n"
        "From the request below, list every kind of map feature the aircraft must visit.\n"
        "Answer with one category per line, lowercase singular nouns only.\n"
        "No bullets, no numbering, no explanations.\n"
        "\n"
        f"Request: {instruction.text}"
    )


def grounding_prompt(goal: str) -> str:
    return (
        f"Mark every {goal} visible in this satellite image. "
        f'Respond only with tags like <point x="10.5" y="20.1" alt="{goal}">{goal}</point>, '
        "where x and y are percentages of the image width and height. "
        "If nothing matches, answer: none found"
    )


_GOAL_LINE = re.compile(r"^[a-z0-9][a-z0-9 _-]{0,63}$", re.IGNORECASE)


def parse_goal_lines(text: str) -> list[str]:
    """Parse a strict one-goal-per-line answer.

    Raises :class:`ResponseParseError` when any non-empty line is not a
    bare category name, and :class:`NoGoalsError` when nothing remains.
    Duplicates (case-insensitive) collapse to their first occurrence.
    """
    goals: list[str] = []
    seen: set[str] = set()
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if not _GOAL_LINE.match(line):
            raise ResponseParseError("expected one bare category per line", text)
        key = line.lower()
        if key not in seen:
            seen.add(key)
            goals.append(line)
    if not goals:
        raise NoGoalsError("model returned no target categories")
    return goals


class PointMark(NamedTuple):
    x_pct: float
    y_pct: float
    label: str


_TAG = re.compile(r"<(point|points)\b([^>]*?)(?:/>|>(.*?)</\1>)", re.IGNORECASE | re.DOTALL)
_ATTR = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*\"([^\"]*)\"")


def parse_point_markup(text: str) -> list[PointMark]:
    """Extract percent-coordinate points from pointing-model markup.

    Handles single ``<point x= y=>`` tags and multi ``<points x1= y1= x2= ...>``
    tags. Labels come from the ``alt`` attribute or the tag body. Tags with
    malformed coordinate numbers are skipped with a warning; this function
    never raises on arbitrary text.
    """
    marks: list[PointMark] = []
    for m in _TAG.finditer(text):
        attrs = dict(_ATTR.findall(m.group(2) or ""))
        label = attrs.get("alt", "") or (m.group(3) or "").strip()
        try:
            if m.group(1).lower() == "point":
                marks.append(PointMark(float(attrs["x"]), float(attrs["y"]), label))
            else:
                idx = 1
                pairs = []
                while f"x{idx}" in attrs or f"y{idx}" in attrs:
                    pairs.append(PointMark(float(attrs[f"x{idx}"]), float(attrs[f"y{idx}"]), label))
                    idx += 1
                if not pairs:
                    raise KeyError("x1")
                marks.extend(pairs)
        except (KeyError, ValueError) as exc:
            logger.warning("skipping malformed point tag %r: %s", m.group(0)[:80], exc)
    return marks


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def extract_goals(instr: Instruction, provider: Provider) -> GoalSet:
    """Ask the provider for the target categories named by an instruction."""
    raw = provider.complete_text(goal_prompt(instr))
    if not raw.strip():
        raise NoGoalsError("model returned no target categories")
    return GoalSet(tuple(parse_goal_lines(raw)))


def locate_objects(
    goals: GoalSet, image: bytes, ref: GeoReference, provider: Provider
) -> GroundedPoints:
    """Ground each goal on the image, converting percent answers to pixels.

    A goal with zero detections is recorded with an empty list rather than
    treated as an error. Detections outside the image are kept in
    ``rejected`` and excluded from the results.
    """
    with Image.open(io.BytesIO(image)) as img:
        fmt = img.format or "PNG"
        width, height = img.size
    if (width, height) != (ref.width_px, ref.height_px):
        raise ValueError(
            f"image is {width}x{height} px but georeference says "
            f"{ref.width_px}x{ref.height_px}"
        )
    media_type = {"PNG": "image/png", "JPEG": "image/jpeg"}.get(fmt, "application/octet-stream")

    grounded = GroundedPoints()
    for goal in goals.goals:
        raw = provider.complete_vision(grounding_prompt(goal), image, media_type)
        grounded.provenance[goal] = raw
        points: list[PixelPoint] = []
        rejected: list[tuple[float, float]] = []
        for mark in parse_point_markup(raw):
            x = mark.x_pct / 100.0 * ref.width_px
            y = mark.y_pct / 100.0 * ref.height_px
            if 0.0 <= x <= ref.width_px and 0.0 <= y <= ref.height_px:
                points.append(PixelPoint(x, y))
            else:
                rejected.append((mark.x_pct, mark.y_pct))
        grounded.by_goal[goal] = points
        if rejected:
            grounded.rejected[goal] = rejected
    return grounded


# --------------------------------------------------------------------------
# providers
# --------------------------------------------------------------------------

class MockProvider:
    """Deterministic stand-in backed by a per-image detections fixture.

    The fixture maps goal names to percent-coordinate pairs::

        {"building": [[22.0, 18.5], [48.0, 22.0]], "pond": [[70.0, 60.0]]}

    Goal extraction answers with every fixture key mentioned in the prompt;
    grounding answers with point markup synthesized from the fixture.
    """

    def __init__(self, detections: dict[str, list[list[float]] | list[tuple[float, float]]]):
        self.detections = {str(k): [(float(x), float(y)) for x, y in v] for k, v in detections.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "MockProvider":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete_text(self, prompt: str) -> str:
        text = prompt.lower()
        return "\n".join(k for k in self.detections if k.lower() in text)

    def complete_vision(self, prompt: str, image: bytes, media_type: str) -> str:
        text = prompt.lower()
        for goal, coords in self.detections.items():
            if goal.lower() not in text:
                continue
            if not coords:
                return "none found"
            if len(coords) == 1:
                x, y = coords[0]
                return f'<point x="{x}" y="{y}" alt="{goal}">{goal}</point>'
            attrs = " ".join(
                f'x{i}="{x}" y{i}="{y}"' for i, (x, y) in enumerate(coords, start=1)
            )
            return f'<points {attrs} alt="{goal}">{goal}</points>'
        return "none found"


class ChatCompletionsProvider:
    """OpenAI-compatible chat-completions client with retrying transport.

    Retries apply to connection failures and 429/5xx responses only, with
    exponential backoff (base 1 s, doubling per attempt); a malformed
    response body is never retried because it would fail identically.
    Instances hold no mutable state, so one handle may serve concurrent
    requests.
    """

    def __init__(self, config: ProviderConfig):
        if config.kind == "mock":
            raise ValueError("use MockProvider for mock configs")
        if not config.endpoint:
            raise ValueError("HTTP provider requires an endpoint URL")
        self.config = config

    def complete_text(self, prompt: str) -> str:
        return self._complete([{"role": "user", "content": prompt}])

    def complete_vision(self, prompt: str, image: bytes, media_type: str) -> str:
        encoded = base64.b64encode(image).decode("ascii")
        content = [
            {"type": "text", "text": prompt},
            {"type": "image_url", "image_url": {"url": f"data:{media_type};base64,{encoded}"}},
        ]
        return self._complete([{"role": "user", "content": content}])

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.config.token_env, "") if self.config.token_env else ""
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def _complete(self, messages: list[dict]) -> str:
        payload = {"model": self.config.model, "messages": messages}
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("POST %s (auth: %s)", self.config.endpoint,
                         "Bearer ***" if self.config.token_env else "none")
            logger.debug("request body: %s", json.dumps(payload)[:2000])
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self.config.backoff_base_s * 2 ** (attempt - 1))
            try:
                resp = requests.post(
                    self.config.endpoint,
                    json=payload,
                    headers=self._headers(),
                    timeout=self.config.timeout_s,
                )
            except requests.RequestException as exc:
                last_error = exc
                logger.debug("transport error (attempt %d): %s", attempt + 1, exc)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                logger.debug("retryable status %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            if resp.status_code != 200:
                raise ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            logger.debug("response body: %s", resp.text[:2000])
            return self._parse_body(resp.text)
        raise ProviderError(
            f"request failed after {self.config.max_retries + 1} attempts: {last_error}"
        )

    @staticmethod
    def _parse_body(body: str) -> str:
        try:
            data = json.loads(body)
            content = data["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise ResponseParseError(f"malformed chat-completions response ({exc})", body) from exc
        if not isinstance(content, str):
            raise ResponseParseError("message content is not text", body)
        return content


def build_provider(config: ProviderConfig, fixture_path: str | Path | None = None) -> Provider:
    """Instantiate the provider named by a config.

    Mock configs need the path of the per-image detections fixture.
    """
    if config.kind == "mock":
        if fixture_path is None:
            raise ValueError("mock provider requires a detections fixture path")
        return MockProvider.from_file(fixture_path)
    return ChatCompletionsProvider(config)
