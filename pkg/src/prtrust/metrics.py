"""Per-PR scores for the six interpersonal-trust dimensions.

Each metric is a pure function of an immutable snapshot and returns a
DimensionScore: raw evidence plus a normalized value in [0, 1], or an
explicit "not available" when the PR carries no usable signal for that
dimension. Per-PR scoring is reentrant and may run concurrently.

Bot accounts (logins ending in "[bot]") are excluded from comment and
counterparty counts by default; pass exclude_bots=False to keep them.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from importlib import resources
from math import log10
from pathlib import Path
from typing import Any, Iterable

from .corpus import PullRequest, RepoSnapshot
from .errors import ConfigError, UnknownLoginError

DIMENSIONS = (
    "action",
    "commitment",
    "competence",
    "institutional",
    "personality",
    "transferred",
)

DEFAULT_F_CAP = 4.0
DEFAULT_COMPETENCE_WINDOW = 1000

_BOT_SUFFIX = "[bot]"
_POSSESSIVES = ("his", "her", "their")


@dataclass(frozen=True)
class DimensionScore:
    """One trust dimension's evidence and normalized score for one PR.

    ``score`` is present (in [0, 1]) exactly when ``available`` is true;
    ``evidence`` is a JSON-safe record whose keys are dimension-specific.
    """

    dimension: str
    available: bool
    score: float | None
    evidence: dict[str, Any]


def _is_bot(login: str) -> bool:
    return login.endswith(_BOT_SUFFIX)


def _profile(snapshot: RepoSnapshot, login: str):
    try:
        return snapshot.users[login]
    except KeyError:
        raise UnknownLoginError(f"login '{login}' does not resolve in the snapshot") from None


# ---------------------------------------------------------------------------
# Action-based trust: fast, frequent feedback and responsive revision
# ---------------------------------------------------------------------------

def action_score(
    pr: PullRequest,
    snapshot: RepoSnapshot,
    *,
    f_cap: float = DEFAULT_F_CAP,
    exclude_bots: bool = True,
) -> DimensionScore:
    """Score comment frequency and post-feedback revision activity.

    comment_count counts issue comments, review comments, and reviews with
    a non-empty body (empty-body approvals are reviews, not comments).
    frequency = comment_count / active_days where active_days spans
    creation to close (or to the fetch instant for open PRs), rounded up
    to whole days with a one-day floor. revision_commits counts commits
    strictly after the earliest non-author comment or review (ties broken
    by event id).

    score = 0.5 * min(frequency / f_cap, 1) + 0.5 * [revision_commits > 0].
    Always available.
    """
    if f_cap <= 0:
        raise ConfigError(f"f_cap must be positive, got {f_cap}")

    def keep(login: str) -> bool:
        return not (exclude_bots and _is_bot(login))

    comments = [c for c in pr.issue_comments + pr.review_comments if keep(c.author)]
    body_reviews = [r for r in pr.reviews if r.body and keep(r.author)]
    comment_count = len(comments) + len(body_reviews)
    non_author_count = sum(1 for c in comments if c.author != pr.author) + sum(
        1 for r in body_reviews if r.author != pr.author
    )

    end = pr.closed_at if pr.closed_at is not None else snapshot.fetched_at
    elapsed = int((end - pr.created_at).total_seconds())
    active_days = max(1, -(-elapsed // 86400))
    frequency = comment_count / active_days

    feedback_at = _earliest_feedback(pr, exclude_bots)
    revision_commits = 0
    if feedback_at is not None:
        revision_commits = sum(1 for c in pr.commits if c.committed_at > feedback_at)

    score = 0.5 * min(frequency / f_cap, 1.0) + 0.5 * (1.0 if revision_commits > 0 else 0.0)
    return DimensionScore(
        dimension="action",
        available=True,
        score=score,
        evidence={
            "comment_count": comment_count,
            "non_author_comment_count": non_author_count,
            "active_days": active_days,
            "frequency": frequency,
            "revision_commits": revision_commits,
        },
    )


def _earliest_feedback(pr: PullRequest, exclude_bots: bool) -> datetime | None:
    """Timestamp of the first non-author comment or review, or None."""
    candidates: list[tuple[datetime, int]] = []
    for comment in pr.issue_comments + pr.review_comments:
        if comment.author != pr.author and not (exclude_bots and _is_bot(comment.author)):
            candidates.append((comment.created_at, comment.id))
    for review in pr.reviews:
        if review.author != pr.author and not (exclude_bots and _is_bot(review.author)):
            candidates.append((review.submitted_at, review.id))
    return min(candidates)[0] if candidates else None


# ---------------------------------------------------------------------------
# Commitment trust: responding to review requests, addressing feedback
# ---------------------------------------------------------------------------

def commitment_score(pr: PullRequest) -> DimensionScore:
    """Score how review requests were answered and change requests addressed.

    A requestee responded when they authored any review or comment at or
    after their (earliest) request time. author_addressed holds when every
    changes_requested review is followed by at least one author commit.

    score blends the response ratio (weight 0.7, present when anyone was
    requested) with author_addressed (weight 0.3, present when any
    changes_requested review exists), renormalized over present parts.
    Unavailable when neither signal applies.
    """
    requested_at: dict[str, datetime] = {}
    for request in pr.review_requests:
        seen = requested_at.get(request.requestee)
        if seen is None or request.requested_at < seen:
            requested_at[request.requestee] = request.requested_at

    responded = {
        login for login, since in requested_at.items() if _responded(pr, login, since)
    }
    change_requests = [r for r in pr.reviews if r.verdict == "changes_requested"]
    author_addressed = all(
        any(c.author == pr.author and c.committed_at > review.submitted_at for c in pr.commits)
        for review in change_requests
    )

    evidence = {
        "requested": len(requested_at),
        "responded": len(responded),
        "any_response": len(responded) >= 1,
        "author_addressed": author_addressed,
    }
    if not requested_at and not change_requests:
        return DimensionScore("commitment", False, None, evidence)

    weighted: list[tuple[float, float]] = []
    if requested_at:
        weighted.append((0.7, len(responded) / len(requested_at)))
    if change_requests:
        weighted.append((0.3, 1.0 if author_addressed else 0.0))
    total = sum(w for w, _ in weighted)
    score = sum(w * v for w, v in weighted) / total
    return DimensionScore("commitment", True, score, evidence)


def _responded(pr: PullRequest, login: str, since: datetime) -> bool:
    for review in pr.reviews:
        if review.author == login and review.submitted_at >= since:
            return True
    for comment in pr.issue_comments + pr.review_comments:
        if comment.author == login and comment.created_at >= since:
            return True
    return False


# ---------------------------------------------------------------------------
# Competence trust: track record, following, repository role
# ---------------------------------------------------------------------------

def competence_score(
    pr: PullRequest,
    snapshot: RepoSnapshot,
    window: int = DEFAULT_COMPETENCE_WINDOW,
) -> DimensionScore:
    """Score the author's prior record, follower count, and write access.

    Prior PRs are the author's decided (merged or closed-unmerged) PRs
    among the ``window`` most recent repo PRs numbered below this one.
    Components, each in [0, 1] and skipped when absent:

        c_hist   = prior_accepted / prior_pr_count   (absent with no priors)
        c_follow = min(log10(1 + followers) / 3, 1)
        c_perm   = 1 if permission is write/admin    (absent when unknown)

    score = mean of present components.
    """
    if window < 1:
        raise ConfigError(f"competence window must be >= 1, got {window}")

    priors = [p for p in snapshot.pulls if p.number < pr.number][-window:]
    decided = [p for p in priors if p.author == pr.author and p.state != "open"]
    prior_count = len(decided)
    prior_accepted = sum(1 for p in decided if p.state == "merged")

    profile = _profile(snapshot, pr.author)
    c_hist = prior_accepted / prior_count if prior_count else None
    c_follow = min(log10(1 + profile.followers) / 3.0, 1.0)
    if profile.permission_unknown:
        c_perm = None
        has_write: bool | None = None
    else:
        has_write = profile.permission in ("write", "admin")
        c_perm = 1.0 if has_write else 0.0

    components = [c for c in (c_hist, c_follow, c_perm) if c is not None]
    available = bool(components)
    score = sum(components) / len(components) if available else None
    return DimensionScore(
        dimension="competence",
        available=available,
        score=score,
        evidence={
            "prior_pr_count": prior_count,
            "prior_accepted": prior_accepted,
            "prior_acceptance_rate": c_hist,
            "followers": profile.followers,
            "has_write": has_write,
        },
    )


# ---------------------------------------------------------------------------
# Institutional trust: shared organization membership
# ---------------------------------------------------------------------------

def institutional_score(
    pr: PullRequest,
    snapshot: RepoSnapshot,
    *,
    exclude_bots: bool = True,
) -> DimensionScore:
    """Score the org overlap between the author and their counterparties.

    Counterparties are the distinct non-author users who commented,
    reviewed, or closed the PR. Unavailable when there are none or when
    the author lists no organizations; otherwise the fraction whose org
    set intersects the author's.
    """
    participants: set[str] = set()
    for comment in pr.issue_comments + pr.review_comments:
        participants.add(comment.author)
    for review in pr.reviews:
        participants.add(review.author)
    if pr.closer is not None:
        participants.add(pr.closer)
    counterparties = sorted(
        login
        for login in participants
        if login != pr.author and not (exclude_bots and _is_bot(login))
    )

    author_orgs = _profile(snapshot, pr.author).orgs
    shared_logins = [
        login for login in counterparties if _profile(snapshot, login).orgs & author_orgs
    ]
    evidence = {
        "counterparties": len(counterparties),
        "shared": len(shared_logins),
        "shared_logins": shared_logins,
    }
    if not counterparties or not author_orgs:
        return DimensionScore("institutional", False, None, evidence)
    return DimensionScore(
        "institutional", True, len(shared_logins) / len(counterparties), evidence
    )


# ---------------------------------------------------------------------------
# Personality-based trust: the closer's propensity to accept
# ---------------------------------------------------------------------------

def personality_propensity(login: str, snapshot: RepoSnapshot) -> float | None:
    """Fraction of PRs this user closed that were accepted, or None.

    Uses the profile's closure_history when present; otherwise counts the
    PRs in this snapshot closed by the user. Absent when they closed
    nothing.
    """
    propensity, _ = _propensity_with_source(login, snapshot)
    return propensity


def _propensity_with_source(login: str, snapshot: RepoSnapshot) -> tuple[float | None, str]:
    profile = _profile(snapshot, login)
    if profile.closure_history is not None:
        closed, accepted = profile.closure_history
        return (accepted / closed if closed else None), "closure_history"
    closed_prs = [p for p in snapshot.pulls if p.closer == login and p.state != "open"]
    if not closed_prs:
        return None, "snapshot"
    accepted_count = sum(1 for p in closed_prs if p.state == "merged")
    return accepted_count / len(closed_prs), "snapshot"


def personality_score(pr: PullRequest, snapshot: RepoSnapshot) -> DimensionScore:
    """Score the closer's acceptance propensity, falling back to reviewers.

    The score is the closer's propensity when defined, else the maximum
    defined propensity among the PR's reviewers; unavailable when neither
    exists. Evidence records which source (closure_history or snapshot
    closure counts) produced each propensity.
    """
    sources: dict[str, str] = {}
    closer_propensity: float | None = None
    if pr.closer is not None:
        closer_propensity, source = _propensity_with_source(pr.closer, snapshot)
        sources[pr.closer] = source

    reviewer_propensities: dict[str, float | None] = {}
    for login in sorted({r.author for r in pr.reviews}):
        propensity, source = _propensity_with_source(login, snapshot)
        reviewer_propensities[login] = propensity
        sources[login] = source

    evidence = {
        "closer": pr.closer,
        "closer_propensity": closer_propensity,
        "reviewer_propensities": reviewer_propensities,
        "propensity_sources": sources,
    }
    if closer_propensity is not None:
        return DimensionScore("personality", True, closer_propensity, evidence)
    defined = [p for p in reviewer_propensities.values() if p is not None]
    if defined:
        return DimensionScore("personality", True, max(defined), evidence)
    return DimensionScore("personality", False, None, evidence)


# ---------------------------------------------------------------------------
# Transferred trust: established members vouching for the author
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VouchLexicon:
    """Ordered, case-insensitive phrase patterns that suggest a vouch.

    Pattern syntax: plain substring match on lower-cased text, with at
    most one ``*`` wildcard matching any (possibly empty) run of
    characters. Matching is leftmost and minimal: the head of the pattern
    is located first, then the tail at the earliest position after it.
    No regular-expression engine is involved.
    """

    patterns: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.patterns:
            raise ConfigError("vouch lexicon must contain at least one pattern")
        for pattern in self.patterns:
            if not pattern:
                raise ConfigError("vouch lexicon patterns must be non-empty")
            if pattern.count("*") > 1:
                raise ConfigError(
                    f"vouch pattern {pattern!r} uses more than one '*' wildcard"
                )

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "VouchLexicon":
        """Build a lexicon from file lines; blank lines and # comments skipped."""
        patterns = []
        for line in lines:
            stripped = line.strip()
            if stripped and not stripped.startswith("#"):
                patterns.append(stripped)
        return cls(tuple(patterns))

    @classmethod
    def from_file(cls, path: str | Path) -> "VouchLexicon":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read lexicon file {path}: {exc}") from exc
        return cls.from_lines(text.splitlines())

    def find(self, text: str) -> tuple[str, int, int] | None:
        """Return (pattern, start, end) for the first matching pattern.

        Offsets index the lower-cased text; patterns are tried in order.
        """
        lowered = text.lower()
        for pattern in self.patterns:
            span = _match_pattern(pattern.lower(), lowered)
            if span is not None:
                return pattern, span[0], span[1]
        return None


def _match_pattern(pattern: str, text: str) -> tuple[int, int] | None:
    if "*" not in pattern:
        start = text.find(pattern)
        return (start, start + len(pattern)) if start >= 0 else None
    head, _, tail = pattern.partition("*")
    start = text.find(head)
    if start < 0:
        return None
    if not tail:
        return (start, start + len(head))
    rest = text.find(tail, start + len(head))
    if rest < 0:
        return None
    return (start, rest + len(tail))


def default_lexicon() -> VouchLexicon:
    """The lexicon shipped with the package (see data/default_lexicon.txt)."""
    text = resources.files("prtrust").joinpath("data/default_lexicon.txt").read_text("utf-8")
    return VouchLexicon.from_lines(text.splitlines())


def transferred_detect(
    pr: PullRequest,
    snapshot: RepoSnapshot,
    lexicon: VouchLexicon,
) -> DimensionScore:
    """Detect comments where an established member vouches for the author.

    A vouch is a comment or review body that (a) is not by the PR author,
    (b) matches a lexicon pattern, (c) references the author by @mention,
    login substring, or a third-person possessive inside the matched span,
    and (d) comes from an established member: write/admin permission, or
    at least 5 prior decided PRs with an acceptance rate of at least 0.5.

    Always available; score is 1 when any vouch exists, else 0. The
    evidence is flagged low-confidence: this is a phrase heuristic, not
    language understanding.
    """
    vouches: list[dict[str, Any]] = []
    for event_id, author, body in _bodies(pr):
        if author == pr.author or not body:
            continue
        hit = lexicon.find(body)
        if hit is None:
            continue
        pattern, start, end = hit
        if not _references_author(body, (start, end), pr.author):
            continue
        if not _is_established(author, pr, snapshot):
            continue
        vouches.append({"comment_id": event_id, "pattern": pattern, "voucher": author})

    return DimensionScore(
        dimension="transferred",
        available=True,
        score=1.0 if vouches else 0.0,
        evidence={"vouches": vouches, "low_confidence": True},
    )


def _bodies(pr: PullRequest):
    for comment in pr.issue_comments:
        yield comment.id, comment.author, comment.body
    for comment in pr.review_comments:
        yield comment.id, comment.author, comment.body
    for review in pr.reviews:
        yield review.id, review.author, review.body


def _references_author(body: str, span: tuple[int, int], author: str) -> bool:
    lowered = body.lower()
    login = author.lower()
    if f"@{login}" in lowered or login in lowered:
        return True
    matched = lowered[span[0]:span[1]]
    words = "".join(c if c.isalpha() else " " for c in matched).split()
    return any(word in _POSSESSIVES for word in words)


def _is_established(login: str, pr: PullRequest, snapshot: RepoSnapshot) -> bool:
    profile = _profile(snapshot, login)
    if not profile.permission_unknown and profile.permission in ("write", "admin"):
        return True
    decided = [
        p for p in snapshot.pulls
        if p.number < pr.number and p.author == login and p.state != "open"
    ]
    if len(decided) < 5:
        return False
    accepted = sum(1 for p in decided if p.state == "merged")
    return accepted / len(decided) >= 0.5
