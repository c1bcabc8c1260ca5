"""Profile assembly, stratified sampling, and repo-level summaries.

Combines the six dimension scores into per-PR trust profiles, draws
outcome-stratified samples with a fully deterministic seeded shuffle, and
folds profiles into the summary statistics reported per repository.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .config import AnalysisConfig
from .corpus import PullRequest, RepoSnapshot, outcome
from .errors import ConfigError, InsufficientStratumError
from .metrics import (
    DIMENSIONS,
    DimensionScore,
    VouchLexicon,
    action_score,
    commitment_score,
    competence_score,
    institutional_score,
    personality_score,
    transferred_detect,
)


@dataclass(frozen=True)
class TrustProfile:
    """All six dimension scores for one PR plus their weighted combination.

    ``overall`` is the weighted mean of the available scores with the
    weight vector renormalized over available dimensions; absent when no
    dimension is available. ``coverage`` counts available dimensions.
    The PR's outcome is carried along so reports and summaries do not
    need the snapshot.
    """

    pr_number: int
    outcome: str
    scores: dict[str, DimensionScore]
    overall: float | None
    coverage: int


def build_profile(
    pr: PullRequest,
    snapshot: RepoSnapshot,
    config: AnalysisConfig,
    lexicon: VouchLexicon,
) -> TrustProfile:
    """Run all six metrics on one PR and combine them."""
    scores = {
        "action": action_score(
            pr, snapshot, f_cap=config.f_cap, exclude_bots=config.exclude_bots
        ),
        "commitment": commitment_score(pr),
        "competence": competence_score(pr, snapshot, window=config.competence_window),
        "institutional": institutional_score(
            pr, snapshot, exclude_bots=config.exclude_bots
        ),
        "personality": personality_score(pr, snapshot),
        "transferred": transferred_detect(pr, snapshot, lexicon),
    }
    return TrustProfile(
        pr_number=pr.number,
        outcome=outcome(pr),
        scores=scores,
        overall=combine_scores(scores, config.weights),
        coverage=sum(1 for s in scores.values() if s.available),
    )


def combine_scores(
    scores: dict[str, DimensionScore], weights: dict[str, float]
) -> float | None:
    """Weighted mean over available dimensions, weights renormalized."""
    available = [(weights[d], scores[d].score) for d in DIMENSIONS if scores[d].available]
    if not available:
        return None
    total = sum(w for w, _ in available)
    return sum(w * s for w, s in available) / total


def analyze_snapshot(
    snapshot: RepoSnapshot,
    config: AnalysisConfig,
    lexicon: VouchLexicon | None = None,
) -> tuple[list[TrustProfile], "RepoSummary"]:
    """Profile every PR in the snapshot and summarize the result."""
    if lexicon is None:
        lexicon = config.load_lexicon()
    profiles = [build_profile(pr, snapshot, config, lexicon) for pr in snapshot.pulls]
    return profiles, summarize(profiles, snapshot)


# ---------------------------------------------------------------------------
# Stratified sampling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplePlan:
    """How many PRs to draw and how to split them between outcomes.

    accepted_count = round-half-up(accept_ratio * per_repo_n),
    rejected_count = per_repo_n - accepted_count.
    """

    per_repo_n: int
    accept_ratio: float
    seed: int

    def __post_init__(self) -> None:
        if self.per_repo_n < 1:
            raise ConfigError(f"per_repo_n must be >= 1, got {self.per_repo_n}")
        if not 0.0 <= self.accept_ratio <= 1.0:
            raise ConfigError(f"accept_ratio must be in [0, 1], got {self.accept_ratio}")

    @property
    def accepted_count(self) -> int:
        return math.floor(self.accept_ratio * self.per_repo_n + 0.5)

    @property
    def rejected_count(self) -> int:
        return self.per_repo_n - self.accepted_count


def stratified_sample(snapshot: RepoSnapshot, plan: SamplePlan) -> list[int]:
    """Draw PR numbers uniformly without replacement from each outcome stratum.

    Open PRs are never sampled. The draw is deterministic: a single
    Mersenne Twister generator (random.Random seeded with plan.seed)
    drives a Fisher-Yates shuffle of each stratum, accepted first, each
    stratum pre-sorted ascending by number; the first accepted_count and
    rejected_count elements are taken and the union is returned sorted.
    randbelow uses unbiased rejection sampling on getrandbits, so the
    sequence is identical across platforms.
    """
    accepted = [pr.number for pr in snapshot.pulls if outcome(pr) == "accepted"]
    rejected = [pr.number for pr in snapshot.pulls if outcome(pr) == "rejected"]

    if len(accepted) < plan.accepted_count:
        raise InsufficientStratumError("accepted", plan.accepted_count, len(accepted))
    if len(rejected) < plan.rejected_count:
        raise InsufficientStratumError("rejected", plan.rejected_count, len(rejected))

    rng = random.Random(plan.seed)
    picked = _shuffled(accepted, rng)[: plan.accepted_count]
    picked += _shuffled(rejected, rng)[: plan.rejected_count]
    return sorted(picked)


def _shuffled(items: Sequence[int], rng: random.Random) -> list[int]:
    out = list(items)
    for i in range(len(out) - 1, 0, -1):
        j = _randbelow(rng, i + 1)
        out[i], out[j] = out[j], out[i]
    return out


def _randbelow(rng: random.Random, n: int) -> int:
    bits = n.bit_length()
    value = rng.getrandbits(bits)
    while value >= n:
        value = rng.getrandbits(bits)
    return value


# ---------------------------------------------------------------------------
# Repo-level summary
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StratumSummary:
    """Counts and means over the PRs of one outcome stratum."""

    pr_count: int
    mean_comment_frequency: float | None
    prs_with_post_feedback_commits: int
    prs_with_review_response: int
    first_timer_prs: int
    prs_with_shared_org_counterparty: int
    prs_with_full_acceptance_closer: int
    prs_with_transferred_flag: int


@dataclass(frozen=True)
class RepoSummary:
    """Per-outcome summary statistics for one analyzed repository.

    Open (pending) PRs are excluded from both strata. The
    rejected-by-first-timers count is the rejected stratum's
    first_timer_prs.
    """

    accepted: StratumSummary
    rejected: StratumSummary

    @property
    def rejected_by_first_timers(self) -> int:
        return self.rejected.first_timer_prs


def summarize(profiles: Iterable[TrustProfile], snapshot: RepoSnapshot) -> RepoSummary:
    """Fold per-PR profiles into the per-stratum summary.

    Permutation-invariant over the profile list; raises ValueError on
    empty input. Means are taken over non-absent values only.
    """
    profiles = list(profiles)
    if not profiles:
        raise ValueError("summarize requires at least one profile")
    strata = {"accepted": [], "rejected": []}
    for profile in profiles:
        if profile.outcome in strata:
            strata[profile.outcome].append(profile)
    return RepoSummary(
        accepted=_summarize_stratum(strata["accepted"]),
        rejected=_summarize_stratum(strata["rejected"]),
    )


def _summarize_stratum(profiles: list[TrustProfile]) -> StratumSummary:
    frequencies = []
    post_feedback = 0
    responses = 0
    first_timers = 0
    shared_org = 0
    full_acceptance_closer = 0
    transferred_flags = 0
    for profile in profiles:
        action = profile.scores["action"].evidence
        frequencies.append(action["frequency"])
        if action["revision_commits"] > 0:
            post_feedback += 1
        if profile.scores["commitment"].evidence["any_response"]:
            responses += 1
        if profile.scores["competence"].evidence["prior_pr_count"] == 0:
            first_timers += 1
        if profile.scores["institutional"].evidence["shared"] >= 1:
            shared_org += 1
        if profile.scores["personality"].evidence["closer_propensity"] == 1.0:
            full_acceptance_closer += 1
        transferred = profile.scores["transferred"]
        if transferred.available and transferred.score == 1.0:
            transferred_flags += 1
    return StratumSummary(
        pr_count=len(profiles),
        # fsum is exactly rounded, keeping the mean permutation-invariant
        mean_comment_frequency=(math.fsum(frequencies) / len(frequencies)) if frequencies else None,
        prs_with_post_feedback_commits=post_feedback,
        prs_with_review_response=responses,
        first_timer_prs=first_timers,
        prs_with_shared_org_counterparty=shared_org,
        prs_with_full_acceptance_closer=full_acceptance_closer,
        prs_with_transferred_flag=transferred_flags,
    )
