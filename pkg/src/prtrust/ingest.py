"""Snapshot construction from the GitHub REST API.

Fetches PR metadata, comments, reviews, commits, changed files, and
timeline events per pull request, plus followers, org memberships, and
repo permission per distinct user, with bounded parallelism and a
URL+ETag response cache. Review requests are reconstructed from timeline
events so reviewers who already responded are still counted.

Cache layout: {cache_dir}/{sha256(url)}.json holding
{"url", "retrieved_at", "link_next", "body"}, plus a .etag sidecar.
A warm cache answers every request with a 304 revalidation, and the
recorded retrieval times are reused, so re-runs produce byte-identical
snapshots.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable
from urllib.parse import quote

import requests

from . import __version__
from .corpus import (
    Comment,
    CommitEvent,
    PullRequest,
    RepoSnapshot,
    Review,
    ReviewRequest,
    UserProfile,
    classify_contribution,
    format_timestamp,
    parse_timestamp,
    validate,
)
from .errors import AuthError, FetchError, NotFoundError, PartialFetchError, RateLimitError

logger = logging.getLogger(__name__)

API_ROOT = "https://api.github.com"
_PAGE_SIZE = 100
_MAX_RETRIES = 3          # per request, on network errors and 5xx
_MAX_RATE_WAITS = 3       # bounded even with a token
_TIMEOUT = 30.0

_VERDICTS = {
    "APPROVED": "approved",
    "COMMENTED": "commented",
    "CHANGES_REQUESTED": "changes_requested",
    "DISMISSED": "dismissed",
}

_GHOST = "ghost"          # GitHub's placeholder for deleted accounts


@dataclass(frozen=True)
class FetchPlan:
    """What to fetch: repository, depth, and fetch environment."""

    repo_owner: str
    repo_name: str
    max_pulls: int
    include_open: bool = False
    auth_token: str | None = None
    cache_dir: str | Path | None = None
    concurrency: int = 4

    def __post_init__(self) -> None:
        if self.max_pulls < 1:
            raise ValueError(f"max_pulls must be >= 1, got {self.max_pulls}")
        if self.concurrency < 1:
            raise ValueError(f"concurrency must be >= 1, got {self.concurrency}")


@dataclass
class RateBudget:
    """Remaining API quota as reported by response headers."""

    remaining: int | None = None
    reset_at: datetime | None = None


class GitHubClient:
    """Minimal GitHub REST client: caching, retries, rate-limit handling.

    Thread-safe for concurrent GETs of distinct URLs; the rate budget and
    retrieval-time bookkeeping are lock-protected.
    """

    def __init__(
        self,
        token: str | None = None,
        cache_dir: str | Path | None = None,
        session: Any = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._token = token
        self._cache_dir = Path(cache_dir) if cache_dir is not None else None
        if self._cache_dir is not None:
            self._cache_dir.mkdir(parents=True, exist_ok=True)
        self._session = session if session is not None else requests.Session()
        self._sleep = sleep
        self._lock = threading.Lock()
        self.budget = RateBudget()
        self.max_retrieved_at: datetime | None = None
        self.stats = {"http_requests": 0, "cache_hits": 0, "uncached": 0}

    # -- cache ------------------------------------------------------------

    def _cache_paths(self, url: str) -> tuple[Path, Path] | None:
        if self._cache_dir is None:
            return None
        digest = hashlib.sha256(url.encode("utf-8")).hexdigest()
        return self._cache_dir / f"{digest}.json", self._cache_dir / f"{digest}.etag"

    def _read_cached(self, url: str) -> tuple[dict, str] | None:
        paths = self._cache_paths(url)
        if paths is None:
            return None
        body_path, etag_path = paths
        if not body_path.exists() or not etag_path.exists():
            return None
        try:
            envelope = json.loads(body_path.read_text(encoding="utf-8"))
            etag = etag_path.read_text(encoding="utf-8").strip()
        except (OSError, json.JSONDecodeError):
            return None
        return envelope, etag

    def _write_cached(self, url: str, envelope: dict, etag: str | None) -> None:
        paths = self._cache_paths(url)
        if paths is None or etag is None:
            return
        body_path, etag_path = paths
        tmp = body_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(envelope, ensure_ascii=False), encoding="utf-8")
        tmp.replace(body_path)
        etag_path.write_text(etag, encoding="utf-8")

    # -- bookkeeping --------------------------------------------------------

    def _note_retrieved(self, retrieved_at: datetime) -> None:
        with self._lock:
            if self.max_retrieved_at is None or retrieved_at > self.max_retrieved_at:
                self.max_retrieved_at = retrieved_at

    def _update_budget(self, headers: Any) -> None:
        remaining = headers.get("X-RateLimit-Remaining")
        reset = headers.get("X-RateLimit-Reset")
        with self._lock:
            if remaining is not None:
                try:
                    self.budget.remaining = int(remaining)
                except ValueError:
                    pass
            if reset is not None:
                try:
                    self.budget.reset_at = datetime.fromtimestamp(int(reset), tz=timezone.utc)
                except ValueError:
                    pass

    # -- requests -----------------------------------------------------------

    def _headers(self, etag: str | None) -> dict[str, str]:
        headers = {
            "Accept": "application/vnd.github+json",
            "User-Agent": f"prtrust/{__version__}",
        }
        if self._token:
            headers["Authorization"] = f"Bearer {self._token}"
        if etag:
            headers["If-None-Match"] = etag
        return headers

    def get(self, url: str) -> tuple[Any, datetime, str | None]:
        """GET one URL, serving from cache via ETag revalidation when possible.

        Returns (payload, retrieved_at, next_page_url). retrieved_at is the
        time the body was originally fetched, so cached responses replay
        their recorded time.
        """
        cached = self._read_cached(url)
        etag = cached[1] if cached else None

        retries = 0
        rate_waits = 0
        while True:
            try:
                with self._lock:
                    self.stats["http_requests"] += 1
                response = self._session.get(url, headers=self._headers(etag), timeout=_TIMEOUT)
            except requests.RequestException as exc:
                if retries >= _MAX_RETRIES:
                    raise FetchError(f"network error fetching {url}: {exc}") from exc
                self._sleep(0.5 * 2**retries)
                retries += 1
                continue

            self._update_budget(response.headers)
            status = response.status_code

            if status == 304 and cached is not None:
                envelope = cached[0]
                retrieved_at = parse_timestamp(envelope["retrieved_at"], "cache entry")
                self._note_retrieved(retrieved_at)
                with self._lock:
                    self.stats["cache_hits"] += 1
                return envelope["body"], retrieved_at, envelope.get("link_next")

            if status == 200:
                retrieved_at = datetime.now(timezone.utc).replace(microsecond=0)
                try:
                    payload = response.json()
                except ValueError as exc:
                    raise FetchError(f"non-JSON response from {url}") from exc
                link_next = _parse_next_link(response.headers.get("Link"))
                envelope = {
                    "url": url,
                    "retrieved_at": format_timestamp(retrieved_at),
                    "link_next": link_next,
                    "body": payload,
                }
                self._write_cached(url, envelope, response.headers.get("ETag"))
                self._note_retrieved(retrieved_at)
                with self._lock:
                    self.stats["uncached"] += 1
                return payload, retrieved_at, link_next

            if status == 404:
                raise NotFoundError(f"not found: {url}")

            if status in (403, 429) and _is_rate_limited(response):
                reset_at = self.budget.reset_at
                if self._token and rate_waits < _MAX_RATE_WAITS:
                    delay = _seconds_until(reset_at, response.headers)
                    logger.warning("rate limit exhausted; waiting %.0f s until reset", delay)
                    self._sleep(delay)
                    rate_waits += 1
                    continue
                raise RateLimitError(
                    f"rate limit exhausted fetching {url}"
                    + (f" (resets at {format_timestamp(reset_at)})" if reset_at else "")
                    + "; completed responses are cached, re-run the same fetch to resume",
                    reset_at=reset_at,
                )

            if status in (401, 403):
                raise AuthError(f"request to {url} was rejected with HTTP {status}")

            if status >= 500:
                if retries >= _MAX_RETRIES:
                    raise FetchError(f"{url} kept failing with HTTP {status}")
                self._sleep(0.5 * 2**retries)
                retries += 1
                continue

            raise FetchError(f"unexpected HTTP {status} from {url}")

    def get_paginated(self, url: str, stop_after: int | None = None) -> list:
        """Collect list items across pages, following rel="next" links."""
        items: list = []
        next_url: str | None = url
        while next_url:
            payload, _, next_url = self.get(next_url)
            if not isinstance(payload, list):
                raise FetchError(f"expected a JSON array from {url}")
            items.extend(payload)
            if stop_after is not None and len(items) >= stop_after:
                break
        return items


def _parse_next_link(header: str | None) -> str | None:
    if not header:
        return None
    for part in header.split(","):
        segment = part.strip()
        if 'rel="next"' in segment:
            start = segment.find("<")
            end = segment.find(">")
            if 0 <= start < end:
                return segment[start + 1:end]
    return None


def _is_rate_limited(response: Any) -> bool:
    if response.headers.get("X-RateLimit-Remaining") == "0":
        return True
    return response.headers.get("Retry-After") is not None


def _seconds_until(reset_at: datetime | None, headers: Any) -> float:
    retry_after = headers.get("Retry-After")
    if retry_after is not None:
        try:
            return max(1.0, float(retry_after))
        except ValueError:
            pass
    if reset_at is None:
        return 60.0
    return max(1.0, (reset_at - datetime.now(timezone.utc)).total_seconds() + 1.0)


# ---------------------------------------------------------------------------
# Timeline reconstruction
# ---------------------------------------------------------------------------

def reconstruct_review_requests(timeline_events: list) -> list[ReviewRequest]:
    """Rebuild review-request events from a PR timeline.

    Emits one request per requestee at their earliest request time. A
    later request-removed event does not erase the request (the ask still
    happened); duplicate requests keep the earliest timestamp. Events of
    unknown kind, and team requests without a reviewer login, are ignored.
    """
    earliest: dict[str, datetime] = {}
    for event in timeline_events:
        if not isinstance(event, dict) or event.get("event") != "review_requested":
            continue
        reviewer = event.get("requested_reviewer") or {}
        login = reviewer.get("login")
        raw_time = event.get("created_at")
        if not login or not raw_time:
            continue
        at = parse_timestamp(raw_time, "timeline event")
        if login not in earliest or at < earliest[login]:
            earliest[login] = at
    return [
        ReviewRequest(requestee=login, requested_at=at)
        for login, at in sorted(earliest.items(), key=lambda kv: (kv[1], kv[0]))
    ]


def _closer_from_timeline(timeline_events: list, merged: bool) -> str | None:
    closed_actor = None
    for event in timeline_events:
        if not isinstance(event, dict):
            continue
        kind = event.get("event")
        actor = (event.get("actor") or {}).get("login")
        if kind == "merged" and merged:
            return actor or _GHOST
        if kind == "closed":
            closed_actor = actor or _GHOST
    return closed_actor


# ---------------------------------------------------------------------------
# Snapshot assembly
# ---------------------------------------------------------------------------

def fetch_snapshot(
    plan: FetchPlan,
    session: Any = None,
    sleep: Callable[[float], None] = time.sleep,
) -> RepoSnapshot:
    """Fetch and validate a snapshot of the plan's repository.

    Covers the max_pulls most recent PRs (reordered ascending). A missing
    repository aborts with NotFoundError; a PR whose sub-resources have
    vanished is skipped with a warning. Failures after the PR listing are
    wrapped in PartialFetchError carrying the completed PR numbers; the
    cache makes a re-run resume cheaply.
    """
    token = plan.auth_token or os.environ.get("GITHUB_TOKEN")
    client = GitHubClient(token=token, cache_dir=plan.cache_dir, session=session, sleep=sleep)
    owner = quote(plan.repo_owner, safe="")
    name = quote(plan.repo_name, safe="")

    state = "all" if plan.include_open else "closed"
    list_url = (
        f"{API_ROOT}/repos/{owner}/{name}/pulls"
        f"?state={state}&sort=created&direction=desc&per_page={_PAGE_SIZE}"
    )
    listed = client.get_paginated(list_url, stop_after=plan.max_pulls)[: plan.max_pulls]

    pulls: dict[int, PullRequest] = {}
    logins: set[str] = set()

    def fetch_one(item: dict) -> tuple[PullRequest | None, set[str]]:
        try:
            return _fetch_pull(client, owner, name, item)
        except NotFoundError:
            logger.warning(
                "PR #%s disappeared while fetching; skipping", item.get("number")
            )
            return None, set()

    try:
        _run_bounded(
            [lambda item=item: fetch_one(item) for item in listed],
            plan.concurrency,
            lambda result: _collect_pull(result, pulls, logins),
        )
    except FetchError as exc:
        raise PartialFetchError(
            f"fetch aborted after {len(pulls)} of {len(listed)} PRs: {exc}",
            completed=frozenset(pulls),
        ) from exc

    users: dict[str, UserProfile] = {}
    try:
        _run_bounded(
            [lambda login=login: _fetch_user(client, owner, name, login) for login in sorted(logins)],
            plan.concurrency,
            lambda profile: users.__setitem__(profile.login, profile),
        )
    except FetchError as exc:
        raise PartialFetchError(
            f"fetch aborted while loading user profiles: {exc}",
            completed=frozenset(pulls),
        ) from exc

    event_max = _max_event_timestamp(pulls.values())
    fetched_at = client.max_retrieved_at or datetime.now(timezone.utc).replace(microsecond=0)
    if event_max is not None and event_max > fetched_at:
        fetched_at = event_max

    snapshot = RepoSnapshot(
        repo_owner=plan.repo_owner,
        repo_name=plan.repo_name,
        fetched_at=fetched_at,
        pulls=tuple(pulls[number] for number in sorted(pulls)),
        users=users,
    )
    validate(snapshot)
    return snapshot


def _collect_pull(
    result: tuple[PullRequest | None, set[str]],
    pulls: dict[int, PullRequest],
    logins: set[str],
) -> None:
    pr, seen = result
    if pr is not None:
        pulls[pr.number] = pr
        logins.update(seen)


def _run_bounded(tasks: list, concurrency: int, consume: Callable[[Any], None]) -> None:
    """Run callables on a bounded pool; the first failure cancels the rest.

    Completed results are consumed (on the calling thread) as they finish,
    so a later failure still leaves the finished work recorded; the final
    assembly sorts, keeping results independent of completion order.
    """
    if not tasks:
        return
    with ThreadPoolExecutor(max_workers=concurrency) as pool:
        futures = [pool.submit(task) for task in tasks]
        try:
            for future in as_completed(futures):
                consume(future.result())
        except BaseException:
            for future in futures:
                future.cancel()
            raise


def _fetch_pull(
    client: GitHubClient, owner: str, name: str, item: dict
) -> tuple[PullRequest, set[str]]:
    number = item["number"]
    base = f"{API_ROOT}/repos/{owner}/{name}"
    author = (item.get("user") or {}).get("login") or _GHOST
    created_at = parse_timestamp(item["created_at"], f"PR {number} created_at")
    merged = item.get("merged_at") is not None
    if item.get("state") == "open":
        state = "open"
        closed_at = None
    else:
        state = "merged" if merged else "closed_unmerged"
        closed_at = parse_timestamp(item["closed_at"], f"PR {number} closed_at")

    reviews_raw = client.get_paginated(f"{base}/pulls/{number}/reviews?per_page={_PAGE_SIZE}")
    review_comments_raw = client.get_paginated(f"{base}/pulls/{number}/comments?per_page={_PAGE_SIZE}")
    issue_comments_raw = client.get_paginated(f"{base}/issues/{number}/comments?per_page={_PAGE_SIZE}")
    commits_raw = client.get_paginated(f"{base}/pulls/{number}/commits?per_page={_PAGE_SIZE}")
    files_raw = client.get_paginated(f"{base}/pulls/{number}/files?per_page={_PAGE_SIZE}")
    timeline = client.get_paginated(f"{base}/issues/{number}/timeline?per_page={_PAGE_SIZE}")

    reviews = []
    for raw in reviews_raw:
        verdict = _VERDICTS.get(raw.get("state", ""))
        if verdict is None or raw.get("submitted_at") is None:
            continue  # pending or exotic review states carry no signal
        reviews.append(
            Review(
                id=raw["id"],
                author=(raw.get("user") or {}).get("login") or _GHOST,
                submitted_at=parse_timestamp(raw["submitted_at"], f"PR {number} review"),
                verdict=verdict,
                body=raw.get("body") or "",
            )
        )
    reviews.sort(key=lambda r: (r.submitted_at, r.id))

    def decode_comments(raw_list: list, what: str) -> list[Comment]:
        out = [
            Comment(
                id=raw["id"],
                author=(raw.get("user") or {}).get("login") or _GHOST,
                created_at=parse_timestamp(raw["created_at"], f"PR {number} {what}"),
                body=raw.get("body") or "",
            )
            for raw in raw_list
        ]
        out.sort(key=lambda c: (c.created_at, c.id))
        return out

    commits = []
    for raw in commits_raw:
        commit_info = raw.get("commit") or {}
        when = (commit_info.get("committer") or {}).get("date") or (
            commit_info.get("author") or {}
        ).get("date")
        if when is None:
            continue
        committed_at = parse_timestamp(when, f"PR {number} commit")
        # Branch commits regularly predate the PR; clamp into its window.
        if committed_at < created_at:
            committed_at = created_at
        commits.append(
            CommitEvent(
                sha=raw["sha"],
                author=(raw.get("author") or {}).get("login") or author,
                committed_at=committed_at,
            )
        )
    commits.sort(key=lambda c: (c.committed_at, c.sha))

    requests_list = [
        r for r in reconstruct_review_requests(timeline) if r.requestee != author
    ]
    closer = None
    if state != "open":
        closer = _closer_from_timeline(timeline, merged) or _GHOST

    files = sorted(raw["filename"] for raw in files_raw)
    pr = PullRequest(
        number=number,
        author=author,
        state=state,
        created_at=created_at,
        closed_at=closed_at,
        closer=closer,
        labels=frozenset(label["name"] for label in item.get("labels") or []),
        contribution_kind=classify_contribution(files),
        files=tuple(files),
        commits=tuple(commits),
        issue_comments=tuple(decode_comments(issue_comments_raw, "issue comment")),
        review_comments=tuple(decode_comments(review_comments_raw, "review comment")),
        reviews=tuple(reviews),
        review_requests=tuple(requests_list),
    )

    seen = {author} | {c.author for c in pr.issue_comments + pr.review_comments}
    seen |= {r.author for r in pr.reviews}
    seen |= {r.requestee for r in pr.review_requests}
    seen |= {c.author for c in pr.commits}
    if closer is not None:
        seen.add(closer)
    return pr, seen


def _fetch_user(client: GitHubClient, owner: str, name: str, login: str) -> UserProfile:
    encoded = quote(login, safe="")
    try:
        profile_raw, _, _ = client.get(f"{API_ROOT}/users/{encoded}")
        followers = int(profile_raw.get("followers") or 0)
    except NotFoundError:
        logger.warning("user '%s' no longer exists; recording an empty profile", login)
        return UserProfile(
            login=login, followers=0, orgs=frozenset(), permission="none",
            permission_unknown=True,
        )

    try:
        orgs_raw = client.get_paginated(f"{API_ROOT}/users/{encoded}/orgs?per_page={_PAGE_SIZE}")
        orgs = frozenset(org["login"] for org in orgs_raw if org.get("login"))
    except NotFoundError:
        orgs = frozenset()

    permission = "none"
    permission_unknown = False
    try:
        perm_raw, _, _ = client.get(
            f"{API_ROOT}/repos/{owner}/{name}/collaborators/{encoded}/permission"
        )
        value = perm_raw.get("permission")
        permission = value if value in ("admin", "write", "read", "none") else "none"
    except NotFoundError:
        permission = "none"  # not a collaborator
    except AuthError:
        permission_unknown = True  # token cannot read collaborator permissions

    return UserProfile(
        login=login,
        followers=max(0, followers),
        orgs=orgs,
        permission=permission,
        permission_unknown=permission_unknown,
    )


def _max_event_timestamp(pulls) -> datetime | None:
    latest: datetime | None = None

    def bump(value: datetime | None) -> None:
        nonlocal latest
        if value is not None and (latest is None or value > latest):
            latest = value

    for pr in pulls:
        bump(pr.created_at)
        bump(pr.closed_at)
        for comment in pr.issue_comments + pr.review_comments:
            bump(comment.created_at)
        for review in pr.reviews:
            bump(review.submitted_at)
        for request in pr.review_requests:
            bump(request.requested_at)
        for commit in pr.commits:
            bump(commit.committed_at)
    return latest
