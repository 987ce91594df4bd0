"""Automatic construction of degradation-sensitive QA samples.

State machine: generate -> filter -> cross-verify.  A candidate question
survives the filter only if a judged answer from the original video matches
the reference answer while the answer from the low-bitrate rendition does
not (the question is sensitive to degradation).  Survivors are re-answered
by an independent verifier model and kept only when the verifier agrees
with the reference answer.

Model endpoints are abstract judge clients; stub judges (scripted or
seeded-random) ship for tests and dry runs.  All progress is appended to a
line-delimited ledger, so a crashed run resumes by reloading the manifest.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field, asdict
from typing import Callable, Iterable, Optional

STATES = ("generated", "filtered_accept", "filtered_reject", "verified", "rejected")
_FORWARD = {
    "generated": {"filtered_accept", "filtered_reject"},
    "filtered_accept": {"verified", "rejected"},
    "filtered_reject": set(),
    "verified": set(),
    "rejected": set(),
}
TERMINAL_STATES = {"filtered_reject", "verified", "rejected"}

STAGES = ("filter_original", "filter_degraded", "semantic_match", "cross_verify")


class JudgeError(RuntimeError):
    """A judge client failed to produce a usable response."""


@dataclass
class CandidateQa:
    id: str
    question: str
    answer: str
    source_video: str
    state: str = "generated"
    tag: str = ""

    def advance(self, new_state: str) -> None:
        if new_state not in _FORWARD.get(self.state, set()):
            raise ValueError(f"illegal state transition {self.state} -> {new_state}")
        self.state = new_state


@dataclass(frozen=True)
class JudgeVerdict:
    candidate_id: str
    stage: str
    verdict: bool

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")


@dataclass(frozen=True)
class PipelineStats:
    n_generated: int
    n_filter_accepted: int
    n_verified: int
    filter_rate: float
    verify_rate: float
    overall_rate: float
    n_parked: int = 0

    @property
    def is_empty(self) -> bool:
        return self.n_generated == 0

    @classmethod
    def from_counts(cls, n_generated: int, n_accepted: int, n_verified: int,
                    n_parked: int = 0) -> "PipelineStats":
        if n_generated == 0:
            return cls(0, 0, 0, 0.0, 0.0, 0.0, n_parked)
        filter_rate = n_accepted / n_generated
        verify_rate = n_verified / n_accepted if n_accepted else 0.0
        return cls(n_generated, n_accepted, n_verified,
                   filter_rate, verify_rate, n_verified / n_generated, n_parked)


@dataclass(frozen=True)
class JudgeRequest:
    video_ref: str
    question: str
    reference_answer: Optional[str] = None
    candidate_response: Optional[str] = None


@dataclass(frozen=True)
class JudgeResponse:
    text: Optional[str] = None
    verdict: Optional[bool] = None


class JudgeClient:
    """Request/response interface to a judging model; transport is a
    deployment detail."""

    def ask(self, request: JudgeRequest) -> JudgeResponse:
        raise NotImplementedError


class RetryingJudge(JudgeClient):
    """Retries a flaky judge with exponential backoff before giving up."""

    def __init__(self, inner: JudgeClient, attempts: int = 3,
                 backoff_s: float = 0.1, sleeper: Callable[[float], None] = time.sleep):
        self.inner = inner
        self.attempts = attempts
        self.backoff_s = backoff_s
        self.sleeper = sleeper

    def ask(self, request: JudgeRequest) -> JudgeResponse:
        delay = self.backoff_s
        for attempt in range(self.attempts):
            try:
                return self.inner.ask(request)
            except JudgeError:
                if attempt == self.attempts - 1:
                    raise
                self.sleeper(delay)
                delay *= 2.0
        raise JudgeError("unreachable")


class ScriptedJudge(JudgeClient):
    """Deterministic stub: a function mapping requests to responses."""

    def __init__(self, fn: Callable[[JudgeRequest], JudgeResponse]):
        self.fn = fn

    def ask(self, request: JudgeRequest) -> JudgeResponse:
        return self.fn(request)


class ExactMatchJudge(JudgeClient):
    """Semantic-consistency stand-in: exact string comparison."""

    def ask(self, request: JudgeRequest) -> JudgeResponse:
        if request.candidate_response is None or request.reference_answer is None:
            raise JudgeError("match judge needs a response and a reference answer")
        return JudgeResponse(verdict=request.candidate_response == request.reference_answer)


class StubAnswerJudge(JudgeClient):
    """Seeded stub model answering with the reference answer at a fixed
    probability, else an off-answer.  Drives stochastic dry runs."""

    def __init__(self, correct_rate: float, rng: random.Random):
        self.correct_rate = correct_rate
        self.rng = rng

    def ask(self, request: JudgeRequest) -> JudgeResponse:
        if request.reference_answer is None:
            raise JudgeError("stub answer judge needs the reference answer")
        if self.rng.random() < self.correct_rate:
            return JudgeResponse(text=request.reference_answer)
        return JudgeResponse(text="(stub) something else entirely")


@dataclass
class PipelineJudges:
    original: JudgeClient
    degraded: JudgeClient
    match: JudgeClient
    verifier: JudgeClient


def stub_judges(filter_accept_rate: float, verify_accept_rate: float,
                seed: int = 0) -> PipelineJudges:
    """Stubs whose stage acceptance probabilities are the given rates.

    The original-video model always answers correctly; the degraded-video
    model answers incorrectly with probability ``filter_accept_rate`` (so
    the filter accepts at that rate); the verifier agrees with probability
    ``verify_accept_rate``.
    """
    rng = random.Random(seed)
    return PipelineJudges(
        original=StubAnswerJudge(1.0, rng),
        degraded=StubAnswerJudge(1.0 - filter_accept_rate, rng),
        match=ExactMatchJudge(),
        verifier=StubAnswerJudge(verify_accept_rate, rng),
    )


def degraded_ref(video_ref: str, bitrate_kbps: int = 200) -> str:
    """Manifest-level name of the low-bitrate rendition of a video."""
    return f"{video_ref}#degraded-{bitrate_kbps}kbps"


def preprocess_manifest(candidates: Iterable[CandidateQa],
                        transcode_hook: Optional[Callable[[str, str], None]] = None,
                        bitrate_kbps: int = 200) -> dict:
    """Map each source video to its degraded rendition, invoking the
    external transcode hook once per video.  Video artifacts stay opaque
    file references throughout."""
    mapping = {}
    for cand in candidates:
        if cand.source_video in mapping:
            continue
        target = degraded_ref(cand.source_video, bitrate_kbps)
        if transcode_hook is not None:
            transcode_hook(cand.source_video, target)
        mapping[cand.source_video] = target
    return mapping


def _judge_match(judge_match: JudgeClient, candidate: CandidateQa, response: str) -> bool:
    verdict = judge_match.ask(JudgeRequest(
        video_ref=candidate.source_video, question=candidate.question,
        reference_answer=candidate.answer, candidate_response=response)).verdict
    if verdict is None:
        raise JudgeError("match judge returned no verdict")
    return verdict


def filter_candidate(candidate: CandidateQa, judge_original: JudgeClient,
                     judge_degraded: JudgeClient, judge_match: JudgeClient) -> bool:
    """Degradation-sensitivity filter.

    Accept iff the original-video answer matches the reference while the
    degraded-video answer does not.  Judge failures propagate so the caller
    can park the candidate for retry instead of rejecting it.
    """
    resp_orig = judge_original.ask(JudgeRequest(
        video_ref=candidate.source_video, question=candidate.question,
        reference_answer=candidate.answer)).text
    if resp_orig is None:
        raise JudgeError("original-video judge returned no text")
    if not _judge_match(judge_match, candidate, resp_orig):
        return False
    resp_degr = judge_degraded.ask(JudgeRequest(
        video_ref=degraded_ref(candidate.source_video), question=candidate.question,
        reference_answer=candidate.answer)).text
    if resp_degr is None:
        raise JudgeError("degraded-video judge returned no text")
    return not _judge_match(judge_match, candidate, resp_degr)


def cross_verify(candidate: CandidateQa, verifier: JudgeClient,
                 judge_match: JudgeClient) -> bool:
    """Accept iff an independent verifier's answer agrees with the
    candidate's reference answer."""
    resp = verifier.ask(JudgeRequest(
        video_ref=candidate.source_video, question=candidate.question,
        reference_answer=candidate.answer)).text
    if resp is None:
        raise JudgeError("verifier returned no text")
    return _judge_match(judge_match, candidate, resp)


class VerdictLedger:
    """Append-only record of verdicts and state changes; the single
    serialization point of the pipeline."""

    def __init__(self, path=None):
        self.path = path
        self.verdicts: list[JudgeVerdict] = []
        self._seen: set[tuple[str, str]] = set()
        self._fh = open(path, "a", encoding="utf-8") if path else None

    def record_verdict(self, verdict: JudgeVerdict) -> None:
        key = (verdict.candidate_id, verdict.stage)
        if key in self._seen:
            raise ValueError(f"duplicate verdict for {key}")
        self._seen.add(key)
        self.verdicts.append(verdict)
        self._write({"kind": "verdict", "candidate_id": verdict.candidate_id,
                     "stage": verdict.stage, "verdict": verdict.verdict})

    def record_state(self, candidate_id: str, state: str) -> None:
        self._write({"kind": "state", "candidate_id": candidate_id, "state": state})

    def _write(self, payload: dict) -> None:
        if self._fh is not None:
            self._fh.write(json.dumps(payload) + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


@dataclass
class PipelineResult:
    stats: PipelineStats
    parked: list = field(default_factory=list)


class QaPipeline:
    """Drives candidates through filter and cross-verification."""

    def __init__(self, judges: PipelineJudges, ledger: Optional[VerdictLedger] = None,
                 retry_attempts: int = 3, sleeper: Callable[[float], None] = time.sleep):
        wrap = lambda c: RetryingJudge(c, attempts=retry_attempts, sleeper=sleeper)
        self.judges = PipelineJudges(
            original=wrap(judges.original), degraded=wrap(judges.degraded),
            match=wrap(judges.match), verifier=wrap(judges.verifier))
        self.ledger = ledger or VerdictLedger()

    def run(self, candidates: list[CandidateQa]) -> PipelineResult:
        parked = []
        for cand in candidates:
            if cand.state == "generated":
                try:
                    accept = filter_candidate(cand, self.judges.original,
                                              self.judges.degraded, self.judges.match)
                except JudgeError:
                    parked.append(cand)
                    continue
                cand.advance("filtered_accept" if accept else "filtered_reject")
                self.ledger.record_state(cand.id, cand.state)
            if cand.state == "filtered_accept":
                try:
                    ok = cross_verify(cand, self.judges.verifier, self.judges.match)
                except JudgeError:
                    parked.append(cand)
                    continue
                self.ledger.record_verdict(JudgeVerdict(cand.id, "cross_verify", ok))
                cand.advance("verified" if ok else "rejected")
                self.ledger.record_state(cand.id, cand.state)
        return PipelineResult(stats=stats(candidates, n_parked=len(parked)), parked=parked)


def stats(candidates: Iterable[CandidateQa], n_parked: int = 0) -> PipelineStats:
    """Aggregate yield statistics from candidate end states."""
    n_gen = n_acc = n_ver = 0
    for cand in candidates:
        n_gen += 1
        if cand.state in ("filtered_accept", "verified", "rejected"):
            n_acc += 1
        if cand.state == "verified":
            n_ver += 1
    return PipelineStats.from_counts(n_gen, n_acc, n_ver, n_parked)


def write_manifest(path, candidates: Iterable[CandidateQa]) -> None:
    """Line-delimited manifest: id, video_ref, question, answer, state, tag."""
    with open(path, "w", encoding="utf-8") as fh:
        for cand in candidates:
            row = {"id": cand.id, "video_ref": cand.source_video,
                   "question": cand.question, "answer": cand.answer,
                   "state": cand.state, "tag": cand.tag}
            fh.write(json.dumps(row) + "\n")


def read_manifest(path) -> list[CandidateQa]:
    candidates = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            candidates.append(CandidateQa(
                id=row["id"], question=row["question"], answer=row["answer"],
                source_video=row["video_ref"], state=row.get("state", "generated"),
                tag=row.get("tag", "")))
    return candidates


def synth_manifest(n: int, video_pool: int = 50) -> list[CandidateQa]:
    """Synthetic candidates for dry runs and tests."""
    return [CandidateQa(id=f"qa{i:05d}", question=f"what does item {i} say?",
                        answer=f"answer-{i}", source_video=f"video{i % video_pool:03d}.mp4",
                        tag="text_rich")
            for i in range(n)]
