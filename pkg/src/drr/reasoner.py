"""Reasoner abstraction: prompt construction, response parsing, and backends."""

from __future__ import annotations

import json
import os
import random
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from . import prompts
from .errors import ContextLengthMismatch, FixtureMissing, RemoteError, UnparseableAnswer
from .qa_data import QaItem

# An answer is an integer choice index, the NONE_OF_THE_ABOVE sentinel string,
# or None when the response could not be parsed.
Answer = int | str | None


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.1
    top_p: float = 0.9
    max_new_tokens: int = 512
    seed: int | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if not (0 < self.top_p <= 1):
            raise ValueError("top_p must be in (0, 1]")
        if self.max_new_tokens <= 0:
            raise ValueError("max_new_tokens must be positive")


@dataclass(frozen=True)
class ChatMessage:
    role: str  # "system" | "user" | "assistant"
    content: str


@dataclass(frozen=True)
class PromptStrategy:
    kind: str  # "direct" | "gradual"
    turn1_params: GenerationParams
    later_params: GenerationParams
    allow_abstain_token: bool = True

    @classmethod
    def direct(cls) -> "PromptStrategy":
        return cls(
            kind="direct",
            turn1_params=GenerationParams(temperature=0.1, top_p=0.9),
            later_params=GenerationParams(temperature=0.6, top_p=0.7),
        )

    @classmethod
    def gradual(cls) -> "PromptStrategy":
        params = GenerationParams(temperature=0.6, top_p=0.9)
        return cls(kind="gradual", turn1_params=params, later_params=params)

    @classmethod
    def named(cls, kind: str) -> "PromptStrategy":
        if kind == "direct":
            return cls.direct()
        if kind == "gradual":
            return cls.gradual()
        raise ValueError(f"unknown strategy kind: {kind!r}")

    def params_for_turn(self, turn: int) -> GenerationParams:
        return self.turn1_params if turn == 1 else self.later_params

    @property
    def feedback_line(self) -> str:
        if self.kind == "direct":
            return prompts.DIRECT_FEEDBACK_LINE
        return prompts.GRADUAL_FEEDBACK_LINE

    def system_prompt(self, turn: int) -> str:
        if self.kind == "direct":
            return prompts.STANDARD_QA_PROMPT_DIRECT if turn == 1 else prompts.EXPLORATION_PROMPT
        return prompts.STANDARD_QA_PROMPT_GRADUAL

    def environment_block(self, index: int, answer_text: str, rationale: str) -> str:
        """Render one prior (answer, rationale) pair plus the feedback line.

        ``index`` is the 1-based position of the pair in the history.
        """
        if self.kind == "direct":
            return (
                f"Previous LLM Answer: Answer: {answer_text}\n"
                f"Rationale: {rationale}\n"
                f"{prompts.DIRECT_FEEDBACK_LINE}"
            )
        return (
            f"LLM Answer {index}: {answer_text}\n"
            f"Rationale {index}: {rationale}\n"
            f"{prompts.GRADUAL_FEEDBACK_LINE}"
        )


@dataclass(frozen=True)
class ReasonerResponse:
    answer: Answer
    rationale: str
    raw_text: str


def answer_to_text(answer: Answer) -> str:
    """Token rendered for an answer in prompts and critic inputs."""
    if answer is None:
        return ""
    if answer == prompts.NONE_OF_THE_ABOVE:
        return prompts.NONE_OF_THE_ABOVE_TEXT
    return str(answer)


def format_choices(item: QaItem) -> str:
    return "\n".join(f"{i}: {text}" for i, text in enumerate(item.choices))


def build_prompt(
    item: QaItem,
    context: list[tuple[str, str]],
    turn: int,
    strategy: PromptStrategy,
) -> list[ChatMessage]:
    """Build the chat messages for one reasoning turn.

    ``context`` holds the prior (answer_text, rationale) pairs in chronological
    order and must have exactly turn - 1 entries.
    """
    if len(context) != turn - 1:
        raise ContextLengthMismatch(turn - 1, len(context))
    parts = [f"Question: {item.question}", f"Choices:\n{format_choices(item)}"]
    for i, (ans, rat) in enumerate(context, start=1):
        parts.append(strategy.environment_block(i, ans, rat))
    return [
        ChatMessage("system", strategy.system_prompt(turn)),
        ChatMessage("user", "\n\n".join(parts)),
    ]


_ANSWER_LINE = re.compile(r"^[\s>*#`\-]*answer\s*:\s*(.*)$", re.IGNORECASE)
_RATIONALE_MARK = re.compile(r"rationale\s*:", re.IGNORECASE)
_INT_TOKEN = re.compile(r"\d+")


def parse_response(raw: str, n_choices: int, allow_abstain: bool = True) -> ReasonerResponse:
    """Extract the answer and rationale from a raw completion.

    Tolerates markdown fences, surrounding whitespace, and parenthesized
    answers like "Answer: (2)". Raises UnparseableAnswer when no valid
    answer token is found.
    """
    cleaned = "\n".join(line for line in raw.splitlines() if not line.strip().startswith("```"))
    answer: Answer = None
    found = False
    for match in (_ANSWER_LINE.match(line) for line in cleaned.splitlines()):
        if match is None:
            continue
        token = match.group(1).strip()
        # Answers sometimes run on: "Answer: 2 Rationale: ..." on one line.
        rat_inline = _RATIONALE_MARK.search(token)
        if rat_inline:
            token = token[: rat_inline.start()].strip()
        if prompts.NONE_OF_THE_ABOVE_TEXT in token.lower():
            if not allow_abstain:
                raise UnparseableAnswer(raw)
            answer = prompts.NONE_OF_THE_ABOVE
        else:
            int_match = _INT_TOKEN.search(token)
            if int_match is None:
                raise UnparseableAnswer(raw)
            index = int(int_match.group())
            if not (0 <= index < n_choices):
                raise UnparseableAnswer(raw)
            answer = index
        found = True
        break
    if not found:
        raise UnparseableAnswer(raw)
    rat_match = _RATIONALE_MARK.search(cleaned)
    if rat_match:
        rationale = cleaned[rat_match.end():].strip()
    else:
        # No marker: fall back to everything after the answer line.
        lines = cleaned.splitlines()
        rest: list[str] = []
        seen_answer = False
        for line in lines:
            if not seen_answer and _ANSWER_LINE.match(line):
                seen_answer = True
                continue
            if seen_answer:
                rest.append(line)
        rationale = "\n".join(rest).strip()
    return ReasonerResponse(answer=answer, rationale=rationale, raw_text=raw)


class Reasoner:
    """Generation backend interface."""

    def generate(self, messages: list[ChatMessage], params: GenerationParams) -> str:
        raise NotImplementedError

    def propose(
        self,
        item: QaItem,
        messages: list[ChatMessage],
        turn: int,
        params: GenerationParams,
    ) -> str:
        """Loop-facing entry point; fixture backends key off (item, turn)."""
        return self.generate(messages, params)


class ScriptedReasoner(Reasoner):
    """Replays a fixture table keyed by (question id, turn)."""

    def __init__(self, fixtures: dict[tuple[str, int], str]):
        self._fixtures = dict(fixtures)
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedReasoner":
        fixtures: dict[tuple[str, int], str] = {}
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                fixtures[(str(obj["id"]), int(obj["turn"]))] = str(obj["text"])
        return cls(fixtures)

    def generate(self, messages: list[ChatMessage], params: GenerationParams) -> str:
        raise FixtureMissing("<unkeyed>", 0)

    def propose(self, item, messages, turn, params):
        with self._lock:
            key = (item.id, turn)
            if key not in self._fixtures:
                raise FixtureMissing(item.id, turn)
            return self._fixtures[key]


class StochasticSimReasoner(Reasoner):
    """Emits a well-formed response, correct with probability p.

    Each (id, turn) pair draws from its own seeded substream so results do
    not depend on processing order.
    """

    def __init__(self, p_correct: float, seed: int = 0):
        if not (0 <= p_correct <= 1):
            raise ValueError("p_correct must be in [0, 1]")
        self.p_correct = p_correct
        self.seed = seed

    def generate(self, messages: list[ChatMessage], params: GenerationParams) -> str:
        raise NotImplementedError("StochasticSimReasoner needs the item; use propose()")

    def propose(self, item, messages, turn, params):
        rng = random.Random(f"{self.seed}|{item.id}|{turn}")
        n = len(item.choices)
        if rng.random() < self.p_correct:
            index = item.gold_index
        else:
            index = rng.randrange(n - 1)
            if index >= item.gold_index:
                index += 1
        return (
            f"Answer: {index}\n"
            f"Rationale: Simulated reasoning for question {item.id}, turn {turn}."
        )


class RemoteChatReasoner(Reasoner):
    """JSON chat-completion client with bounded retries and backoff.

    Retries transport errors and HTTP 429/5xx; at most ``max_in_flight``
    requests run concurrently.
    """

    RETRY_BACKOFF = (1.0, 2.0, 4.0)

    def __init__(
        self,
        url: str,
        model: str,
        max_in_flight: int = 4,
        timeout: float = 60.0,
        session: requests.Session | None = None,
        max_attempts: int = 3,
    ):
        self.url = url
        self.model = model
        self.timeout = timeout
        self.max_attempts = max_attempts
        self._session = session or requests.Session()
        self._slots = threading.Semaphore(max_in_flight)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get("DRR_API_KEY")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def generate(self, messages: list[ChatMessage], params: GenerationParams) -> str:
        if not messages:
            raise ValueError("messages must be non-empty")
        payload = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_new_tokens,
        }
        if params.seed is not None:
            payload["seed"] = params.seed
        last_error: RemoteError | None = None
        with self._slots:
            for attempt in range(self.max_attempts):
                try:
                    resp = self._session.post(
                        self.url, json=payload, headers=self._headers(), timeout=self.timeout
                    )
                except requests.RequestException as exc:
                    last_error = RemoteError(None, str(exc))
                else:
                    if resp.status_code == 200:
                        try:
                            return resp.json()["choices"][0]["message"]["content"]
                        except (KeyError, IndexError, TypeError, ValueError) as exc:
                            raise RemoteError(resp.status_code, f"malformed response: {exc}")
                    last_error = RemoteError(resp.status_code, resp.text)
                    if resp.status_code != 429 and resp.status_code < 500:
                        raise last_error
                if attempt < self.max_attempts - 1:
                    time.sleep(self.RETRY_BACKOFF[min(attempt, len(self.RETRY_BACKOFF) - 1)])
        raise last_error


@dataclass
class RecordingReasoner(Reasoner):
    """Wraps another backend and logs every (messages, params) request."""

    inner: Reasoner
    requests_log: list[tuple[list[ChatMessage], GenerationParams]] = field(default_factory=list)

    def generate(self, messages, params):
        self.requests_log.append((messages, params))
        return self.inner.generate(messages, params)

    def propose(self, item, messages, turn, params):
        self.requests_log.append((messages, params))
        return self.inner.propose(item, messages, turn, params)
