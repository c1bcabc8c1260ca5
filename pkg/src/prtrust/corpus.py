"""Domain model and on-disk format for pull-request interaction snapshots.

A snapshot is an immutable capture of one repository's pull requests, the
users they reference, and the users' org memberships at a fetch instant.
Everything downstream (metrics, sampling, reports) operates on validated
snapshots; loading is pure and never touches the network.

Snapshot file format: a single UTF-8 JSON document

    {"repo": {"owner", "name", "fetched_at"},
     "users": [UserProfile...],
     "pulls": [PullRequest...]}

with snake_case field names and timestamps as ISO-8601 UTC strings
("2022-01-01T00:00:00Z"). All timestamps are stored at second precision;
event ordering ties are broken by event id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

from .errors import SnapshotParseError, SnapshotValidationError

PR_STATES = ("merged", "closed_unmerged", "open")
CONTRIBUTION_KINDS = ("code", "documentation", "mixed")
REVIEW_VERDICTS = ("approved", "commented", "changes_requested", "dismissed")
PERMISSIONS = ("admin", "write", "read", "none")

OUTCOMES = ("accepted", "rejected", "pending")

# A path is documentation when its extension or any path segment matches.
DOC_EXTENSIONS = (".md", ".rst", ".txt", ".adoc")
DOC_SEGMENTS = ("docs", "doc")


# ---------------------------------------------------------------------------
# Timestamps
# ---------------------------------------------------------------------------

def parse_timestamp(value: Any, where: str) -> datetime:
    """Parse an ISO-8601 timestamp into an aware UTC datetime (second precision).

    Accepts a trailing "Z" or an explicit offset; naive timestamps are
    rejected. Sub-second precision is truncated.
    """
    if not isinstance(value, str):
        raise SnapshotParseError(f"{where}: timestamp must be a string, got {_typename(value)}")
    raw = value.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise SnapshotParseError(f"{where}: invalid timestamp {value!r}") from exc
    if parsed.tzinfo is None:
        raise SnapshotParseError(f"{where}: timestamp {value!r} lacks a UTC offset")
    return parsed.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(value: datetime) -> str:
    """Render an aware datetime as "YYYY-MM-DDTHH:MM:SSZ"."""
    return value.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Comment:
    """One issue or review comment on a pull request."""

    id: int
    author: str
    created_at: datetime
    body: str


@dataclass(frozen=True)
class Review:
    """One submitted review; the body may be empty (e.g. a bare approval)."""

    id: int
    author: str
    submitted_at: datetime
    verdict: str
    body: str


@dataclass(frozen=True)
class ReviewRequest:
    """The act of asking a specific user to review the PR.

    Requests are explicit timestamped events reconstructed from the PR
    timeline, so reviewers who already responded are still represented
    (the live "pending reviewers" field drops them).
    """

    requestee: str
    requested_at: datetime


@dataclass(frozen=True)
class CommitEvent:
    """One commit attached to the PR branch."""

    sha: str
    author: str
    committed_at: datetime


@dataclass(frozen=True)
class UserProfile:
    """Per-login social and permission data.

    ``closure_history`` is an optional (closed_count, accepted_count) pair
    describing PRs this user closed outside the snapshot window.
    ``permission_unknown`` is set when the fetch could not read the
    collaborator permission; metrics then treat permission as absent
    evidence rather than "none".
    """

    login: str
    followers: int
    orgs: frozenset[str]
    permission: str
    closure_history: tuple[int, int] | None = None
    permission_unknown: bool = False


@dataclass(frozen=True)
class PullRequest:
    """One pull request with its full interaction record."""

    number: int
    author: str
    state: str
    created_at: datetime
    closed_at: datetime | None
    closer: str | None
    labels: frozenset[str]
    contribution_kind: str
    files: tuple[str, ...]
    commits: tuple[CommitEvent, ...]
    issue_comments: tuple[Comment, ...]
    review_comments: tuple[Comment, ...]
    reviews: tuple[Review, ...]
    review_requests: tuple[ReviewRequest, ...]


@dataclass(frozen=True)
class RepoSnapshot:
    """Immutable capture of one repository's PR interaction data.

    Safe to share across concurrent readers; nothing mutates it after load.
    """

    repo_owner: str
    repo_name: str
    fetched_at: datetime
    pulls: tuple[PullRequest, ...]
    users: dict[str, UserProfile] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def classify_contribution(files: Iterable[str]) -> str:
    """Classify a changed-file list as code, documentation, or mixed.

    A path counts as documentation when its extension is one of
    .md/.rst/.txt/.adoc (case-insensitive) or any path segment equals
    "docs" or "doc". All-doc lists are "documentation", no-doc lists are
    "code", anything else is "mixed"; an empty list is "code".
    """
    paths = list(files)
    doc_count = sum(1 for path in paths if _is_doc_path(path))
    if doc_count == 0:
        return "code"
    if doc_count == len(paths):
        return "documentation"
    return "mixed"


def _is_doc_path(path: str) -> bool:
    lowered = path.lower()
    if lowered.endswith(DOC_EXTENSIONS):
        return True
    return any(segment in DOC_SEGMENTS for segment in lowered.replace("\\", "/").split("/"))


def outcome(pr: PullRequest) -> str:
    """Map PR state to the binary study outcome: merged PRs are accepted,
    closed-without-merge PRs are rejected, open PRs are pending."""
    if pr.state == "merged":
        return "accepted"
    if pr.state == "closed_unmerged":
        return "rejected"
    return "pending"


def restrict(snapshot: RepoSnapshot, numbers: Iterable[int]) -> RepoSnapshot:
    """Return a snapshot whose pulls are limited to the given PR numbers.

    The full users map and repo metadata are preserved.
    """
    keep = set(numbers)
    return RepoSnapshot(
        repo_owner=snapshot.repo_owner,
        repo_name=snapshot.repo_name,
        fetched_at=snapshot.fetched_at,
        pulls=tuple(pr for pr in snapshot.pulls if pr.number in keep),
        users=snapshot.users,
    )


# ---------------------------------------------------------------------------
# Decode (JSON dict -> domain objects)
# ---------------------------------------------------------------------------

def _typename(value: Any) -> str:
    return type(value).__name__


def _require_dict(value: Any, where: str) -> dict:
    if not isinstance(value, dict):
        raise SnapshotParseError(f"{where}: expected an object, got {_typename(value)}")
    return value


def _require_list(value: Any, where: str) -> list:
    if not isinstance(value, list):
        raise SnapshotParseError(f"{where}: expected an array, got {_typename(value)}")
    return value


def _take(data: dict, key: str, where: str, *, optional: bool = False, default: Any = None) -> Any:
    if key not in data:
        if optional:
            return default
        raise SnapshotParseError(f"{where}: missing field '{key}'")
    return data[key]


def _check_keys(data: dict, allowed: Iterable[str], where: str) -> None:
    extra = set(data) - set(allowed)
    if extra:
        raise SnapshotParseError(f"{where}: unknown field '{sorted(extra)[0]}'")


def _str_field(data: dict, key: str, where: str) -> str:
    value = _take(data, key, where)
    if not isinstance(value, str):
        raise SnapshotParseError(f"{where}: field '{key}' must be a string, got {_typename(value)}")
    return value


def _int_field(data: dict, key: str, where: str) -> int:
    value = _take(data, key, where)
    if not isinstance(value, int) or isinstance(value, bool):
        raise SnapshotParseError(f"{where}: field '{key}' must be an integer, got {_typename(value)}")
    return value


def _string_list(data: dict, key: str, where: str) -> list[str]:
    values = _require_list(_take(data, key, where), f"{where}.{key}")
    for i, item in enumerate(values):
        if not isinstance(item, str):
            raise SnapshotParseError(f"{where}.{key}[{i}]: expected a string, got {_typename(item)}")
    return values


def _decode_comment(data: Any, where: str) -> Comment:
    data = _require_dict(data, where)
    _check_keys(data, ("id", "author", "created_at", "body"), where)
    return Comment(
        id=_int_field(data, "id", where),
        author=_str_field(data, "author", where),
        created_at=parse_timestamp(_take(data, "created_at", where), f"{where}.created_at"),
        body=_str_field(data, "body", where),
    )


def _decode_review(data: Any, where: str) -> Review:
    data = _require_dict(data, where)
    _check_keys(data, ("id", "author", "submitted_at", "verdict", "body"), where)
    return Review(
        id=_int_field(data, "id", where),
        author=_str_field(data, "author", where),
        submitted_at=parse_timestamp(_take(data, "submitted_at", where), f"{where}.submitted_at"),
        verdict=_str_field(data, "verdict", where),
        body=_str_field(data, "body", where),
    )


def _decode_review_request(data: Any, where: str) -> ReviewRequest:
    data = _require_dict(data, where)
    _check_keys(data, ("requestee", "requested_at"), where)
    return ReviewRequest(
        requestee=_str_field(data, "requestee", where),
        requested_at=parse_timestamp(_take(data, "requested_at", where), f"{where}.requested_at"),
    )


def _decode_commit(data: Any, where: str) -> CommitEvent:
    data = _require_dict(data, where)
    _check_keys(data, ("sha", "author", "committed_at"), where)
    return CommitEvent(
        sha=_str_field(data, "sha", where),
        author=_str_field(data, "author", where),
        committed_at=parse_timestamp(_take(data, "committed_at", where), f"{where}.committed_at"),
    )


def _decode_user(data: Any, where: str) -> UserProfile:
    data = _require_dict(data, where)
    _check_keys(
        data,
        ("login", "followers", "orgs", "permission", "closure_history", "permission_unknown"),
        where,
    )
    login = _str_field(data, "login", where)
    closure: tuple[int, int] | None = None
    raw_closure = _take(data, "closure_history", where, optional=True)
    if raw_closure is not None:
        raw_closure = _require_dict(raw_closure, f"{where}.closure_history")
        _check_keys(raw_closure, ("closed_count", "accepted_count"), f"{where}.closure_history")
        closure = (
            _int_field(raw_closure, "closed_count", f"{where}.closure_history"),
            _int_field(raw_closure, "accepted_count", f"{where}.closure_history"),
        )
    unknown = _take(data, "permission_unknown", where, optional=True, default=False)
    if not isinstance(unknown, bool):
        raise SnapshotParseError(f"{where}: field 'permission_unknown' must be a boolean")
    return UserProfile(
        login=login,
        followers=_int_field(data, "followers", where),
        orgs=frozenset(_string_list(data, "orgs", where)),
        permission=_str_field(data, "permission", where),
        closure_history=closure,
        permission_unknown=unknown,
    )


_PR_FIELDS = (
    "number", "author", "state", "created_at", "closed_at", "closer", "labels",
    "contribution_kind", "files", "commits", "issue_comments", "review_comments",
    "reviews", "review_requests",
)


def _decode_pull(data: Any, index: int) -> PullRequest:
    where = f"pulls[{index}]"
    data = _require_dict(data, where)
    _check_keys(data, _PR_FIELDS, where)
    number = _int_field(data, "number", where)
    where = f"PR {number}"

    closed_at = None
    if data.get("closed_at") is not None:
        closed_at = parse_timestamp(data["closed_at"], f"{where}.closed_at")
    closer = data.get("closer")
    if closer is not None and not isinstance(closer, str):
        raise SnapshotParseError(f"{where}: field 'closer' must be a string or absent")

    labels = _string_list(data, "labels", where)
    if len(set(labels)) != len(labels):
        raise SnapshotValidationError(f"{where}: duplicate label in 'labels'")

    return PullRequest(
        number=number,
        author=_str_field(data, "author", where),
        state=_str_field(data, "state", where),
        created_at=parse_timestamp(_take(data, "created_at", where), f"{where}.created_at"),
        closed_at=closed_at,
        closer=closer,
        labels=frozenset(labels),
        contribution_kind=_str_field(data, "contribution_kind", where),
        files=tuple(_string_list(data, "files", where)),
        commits=tuple(
            _decode_commit(c, f"{where}.commits[{i}]")
            for i, c in enumerate(_require_list(_take(data, "commits", where), f"{where}.commits"))
        ),
        issue_comments=tuple(
            _decode_comment(c, f"{where}.issue_comments[{i}]")
            for i, c in enumerate(_require_list(_take(data, "issue_comments", where), f"{where}.issue_comments"))
        ),
        review_comments=tuple(
            _decode_comment(c, f"{where}.review_comments[{i}]")
            for i, c in enumerate(_require_list(_take(data, "review_comments", where), f"{where}.review_comments"))
        ),
        reviews=tuple(
            _decode_review(r, f"{where}.reviews[{i}]")
            for i, r in enumerate(_require_list(_take(data, "reviews", where), f"{where}.reviews"))
        ),
        review_requests=tuple(
            _decode_review_request(r, f"{where}.review_requests[{i}]")
            for i, r in enumerate(_require_list(_take(data, "review_requests", where), f"{where}.review_requests"))
        ),
    )


def snapshot_from_dict(data: Any) -> RepoSnapshot:
    """Decode and validate a snapshot from its JSON-dict form."""
    data = _require_dict(data, "snapshot")
    _check_keys(data, ("repo", "users", "pulls"), "snapshot")
    repo = _require_dict(_take(data, "repo", "snapshot"), "repo")
    _check_keys(repo, ("owner", "name", "fetched_at"), "repo")

    users: dict[str, UserProfile] = {}
    for i, raw in enumerate(_require_list(_take(data, "users", "snapshot"), "users")):
        profile = _decode_user(raw, f"users[{i}]")
        if profile.login in users:
            raise SnapshotValidationError(f"users[{i}]: duplicate login '{profile.login}'")
        users[profile.login] = profile

    pulls = tuple(
        _decode_pull(raw, i)
        for i, raw in enumerate(_require_list(_take(data, "pulls", "snapshot"), "pulls"))
    )

    snapshot = RepoSnapshot(
        repo_owner=_str_field(repo, "owner", "repo"),
        repo_name=_str_field(repo, "name", "repo"),
        fetched_at=parse_timestamp(_take(repo, "fetched_at", "repo"), "repo.fetched_at"),
        pulls=pulls,
        users=users,
    )
    validate(snapshot)
    return snapshot


def load_snapshot(path: str | Path) -> RepoSnapshot:
    """Load and validate a snapshot file.

    Raises SnapshotParseError for unreadable or malformed files and
    SnapshotValidationError when a domain invariant is violated; the
    message locates the offending PR number or login.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SnapshotParseError(f"cannot read snapshot file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SnapshotParseError(f"{path}: not valid JSON: {exc}") from exc
    return snapshot_from_dict(data)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(snapshot: RepoSnapshot) -> None:
    """Check every domain invariant, raising on the first violation."""
    for login, profile in snapshot.users.items():
        _validate_user(profile, login)

    previous_number: int | None = None
    for pr in snapshot.pulls:
        if previous_number is not None and pr.number <= previous_number:
            raise SnapshotValidationError(
                f"PR {pr.number}: pull numbers must be unique and strictly "
                f"increasing (follows {previous_number})"
            )
        previous_number = pr.number
        _validate_pull(pr, snapshot)


def _validate_user(profile: UserProfile, login: str) -> None:
    where = f"user '{login}'"
    if profile.login != login:
        raise SnapshotValidationError(f"{where}: login key mismatch '{profile.login}'")
    if profile.followers < 0:
        raise SnapshotValidationError(f"{where}: followers must be non-negative")
    if profile.permission not in PERMISSIONS:
        raise SnapshotValidationError(
            f"{where}: permission must be one of {PERMISSIONS}, got '{profile.permission}'"
        )
    if profile.closure_history is not None:
        closed, accepted = profile.closure_history
        if closed < 0 or accepted < 0:
            raise SnapshotValidationError(f"{where}: closure_history counts must be non-negative")
        if accepted > closed:
            raise SnapshotValidationError(
                f"{where}: closure_history accepted_count {accepted} exceeds closed_count {closed}"
            )


def _validate_pull(pr: PullRequest, snapshot: RepoSnapshot) -> None:
    where = f"PR {pr.number}"
    if pr.number <= 0:
        raise SnapshotValidationError(f"{where}: number must be positive")
    if pr.state not in PR_STATES:
        raise SnapshotValidationError(f"{where}: state must be one of {PR_STATES}, got '{pr.state}'")
    if pr.contribution_kind not in CONTRIBUTION_KINDS:
        raise SnapshotValidationError(
            f"{where}: contribution_kind must be one of {CONTRIBUTION_KINDS}, "
            f"got '{pr.contribution_kind}'"
        )

    if pr.state == "open":
        if pr.closed_at is not None:
            raise SnapshotValidationError(f"{where}: open PR must not carry closed_at")
        if pr.closer is not None:
            raise SnapshotValidationError(f"{where}: open PR must not carry a closer")
    else:
        if pr.closed_at is None:
            raise SnapshotValidationError(f"{where}: state '{pr.state}' requires closed_at")
        if pr.closer is None:
            raise SnapshotValidationError(f"{where}: state '{pr.state}' requires a closer")
        if pr.closed_at < pr.created_at:
            raise SnapshotValidationError(f"{where}: closed_at precedes created_at")

    def check_login(login: str, role: str) -> None:
        if login not in snapshot.users:
            raise SnapshotValidationError(f"{where}: unknown login '{login}' ({role})")

    def check_window(ts: datetime, what: str) -> None:
        if ts < pr.created_at:
            raise SnapshotValidationError(f"{where}: {what} precedes PR created_at")
        if ts > snapshot.fetched_at:
            raise SnapshotValidationError(f"{where}: {what} is after snapshot fetched_at")

    if pr.created_at > snapshot.fetched_at:
        raise SnapshotValidationError(f"{where}: created_at is after snapshot fetched_at")
    if pr.closed_at is not None and pr.closed_at > snapshot.fetched_at:
        raise SnapshotValidationError(f"{where}: closed_at is after snapshot fetched_at")

    check_login(pr.author, "author")
    if pr.closer is not None:
        check_login(pr.closer, "closer")

    seen_comment_ids: set[int] = set()
    for kind, comments in (("issue comment", pr.issue_comments), ("review comment", pr.review_comments)):
        for comment in comments:
            if comment.id in seen_comment_ids:
                raise SnapshotValidationError(f"{where}: duplicate comment id {comment.id}")
            seen_comment_ids.add(comment.id)
            check_login(comment.author, f"{kind} author")
            check_window(comment.created_at, f"{kind} {comment.id} timestamp")

    seen_review_ids: set[int] = set()
    for review in pr.reviews:
        if review.id in seen_review_ids:
            raise SnapshotValidationError(f"{where}: duplicate review id {review.id}")
        seen_review_ids.add(review.id)
        if review.verdict not in REVIEW_VERDICTS:
            raise SnapshotValidationError(
                f"{where}: review {review.id} verdict must be one of {REVIEW_VERDICTS}, "
                f"got '{review.verdict}'"
            )
        check_login(review.author, "review author")
        check_window(review.submitted_at, f"review {review.id} timestamp")

    for request in pr.review_requests:
        if request.requestee == pr.author:
            raise SnapshotValidationError(
                f"{where}: review request targets the PR author '{request.requestee}'"
            )
        check_login(request.requestee, "requested reviewer")
        check_window(request.requested_at, f"review request for '{request.requestee}'")

    seen_shas: set[str] = set()
    for commit in pr.commits:
        if not commit.sha or any(c not in "0123456789abcdefABCDEF" for c in commit.sha):
            raise SnapshotValidationError(f"{where}: commit sha '{commit.sha}' is not a hex string")
        if commit.sha in seen_shas:
            raise SnapshotValidationError(f"{where}: duplicate commit sha '{commit.sha}'")
        seen_shas.add(commit.sha)
        check_login(commit.author, "commit author")
        check_window(commit.committed_at, f"commit {commit.sha[:12]} timestamp")


# ---------------------------------------------------------------------------
# Encode (domain objects -> JSON dict)
# ---------------------------------------------------------------------------

def _encode_user(profile: UserProfile) -> dict:
    out: dict[str, Any] = {
        "login": profile.login,
        "followers": profile.followers,
        "orgs": sorted(profile.orgs),
        "permission": profile.permission,
    }
    if profile.closure_history is not None:
        closed, accepted = profile.closure_history
        out["closure_history"] = {"closed_count": closed, "accepted_count": accepted}
    if profile.permission_unknown:
        out["permission_unknown"] = True
    return out


def _encode_pull(pr: PullRequest) -> dict:
    out: dict[str, Any] = {
        "number": pr.number,
        "author": pr.author,
        "state": pr.state,
        "created_at": format_timestamp(pr.created_at),
    }
    if pr.closed_at is not None:
        out["closed_at"] = format_timestamp(pr.closed_at)
    if pr.closer is not None:
        out["closer"] = pr.closer
    out["labels"] = sorted(pr.labels)
    out["contribution_kind"] = pr.contribution_kind
    out["files"] = list(pr.files)
    out["commits"] = [
        {"sha": c.sha, "author": c.author, "committed_at": format_timestamp(c.committed_at)}
        for c in pr.commits
    ]
    out["issue_comments"] = [_encode_comment(c) for c in pr.issue_comments]
    out["review_comments"] = [_encode_comment(c) for c in pr.review_comments]
    out["reviews"] = [
        {
            "id": r.id,
            "author": r.author,
            "submitted_at": format_timestamp(r.submitted_at),
            "verdict": r.verdict,
            "body": r.body,
        }
        for r in pr.reviews
    ]
    out["review_requests"] = [
        {"requestee": r.requestee, "requested_at": format_timestamp(r.requested_at)}
        for r in pr.review_requests
    ]
    return out


def _encode_comment(comment: Comment) -> dict:
    return {
        "id": comment.id,
        "author": comment.author,
        "created_at": format_timestamp(comment.created_at),
        "body": comment.body,
    }


def snapshot_to_dict(snapshot: RepoSnapshot) -> dict:
    """Encode a snapshot into its JSON-dict form (users sorted by login)."""
    return {
        "repo": {
            "owner": snapshot.repo_owner,
            "name": snapshot.repo_name,
            "fetched_at": format_timestamp(snapshot.fetched_at),
        },
        "users": [_encode_user(snapshot.users[login]) for login in sorted(snapshot.users)],
        "pulls": [_encode_pull(pr) for pr in snapshot.pulls],
    }


def save_snapshot(snapshot: RepoSnapshot, path: str | Path) -> None:
    """Write a snapshot file; the output reloads to a structurally equal value."""
    text = json.dumps(snapshot_to_dict(snapshot), indent=2, ensure_ascii=False) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")
