"""Exception types shared across the package."""

from __future__ import annotations

from datetime import datetime


class SnapshotError(Exception):
    """Base class for snapshot loading and validation failures."""


class SnapshotParseError(SnapshotError):
    """The snapshot file is structurally malformed (bad JSON, shape, or types)."""


class SnapshotValidationError(SnapshotError):
    """A decoded snapshot violates a domain invariant.

    The message names the violated invariant and the offending PR number
    or login.
    """


class ConfigError(Exception):
    """Invalid configuration file or configuration value."""


class UnknownLoginError(Exception):
    """A login was referenced that does not resolve in the snapshot."""


class FetchError(Exception):
    """Base class for GitHub fetch failures."""


class AuthError(FetchError):
    """Authentication or authorization failure (401/403, not rate-limit)."""


class NotFoundError(FetchError):
    """The requested repository or resource does not exist."""


class RateLimitError(FetchError):
    """The API rate limit is exhausted and no token is available to wait on.

    The run is resumable: completed responses are cached, so re-running the
    same fetch after ``reset_at`` continues where it left off.
    """

    def __init__(self, message: str, reset_at: datetime | None = None):
        super().__init__(message)
        self.reset_at = reset_at


class PartialFetchError(FetchError):
    """A fetch aborted after some pull requests had completed.

    ``completed`` holds the numbers of fully fetched PRs; their responses
    are cached, so re-running the same plan resumes cheaply.
    """

    def __init__(self, message: str, completed: frozenset[int]):
        super().__init__(message)
        self.completed = completed


class InsufficientStratumError(Exception):
    """A sampling stratum holds fewer PRs than the plan requires."""

    def __init__(self, stratum: str, needed: int, available: int):
        super().__init__(
            f"stratum '{stratum}' holds {available} PRs, plan needs {needed} "
            f"(short by {needed - available})"
        )
        self.stratum = stratum
        self.needed = needed
        self.available = available
