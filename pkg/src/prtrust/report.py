"""Report assembly and deterministic emission (JSON, CSV, markdown).

All numeric cells are printed with 6 decimal places, rounded half-up, so
independent implementations diff cleanly. Output is UTF-8 without BOM,
LF newlines; emission is deterministic (same bundle, identical bytes).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any

from . import __version__
from .aggregate import RepoSummary, StratumSummary, TrustProfile
from .corpus import RepoSnapshot, format_timestamp, parse_timestamp
from .errors import SnapshotParseError
from .metrics import DIMENSIONS, DimensionScore

FORMATS = ("json", "csv", "markdown")

CSV_COLUMNS = (
    "pr_number", "outcome", "action", "commitment", "competence",
    "institutional", "personality", "transferred", "overall", "coverage",
)


@dataclass(frozen=True)
class ReportBundle:
    """Everything one analysis run produced, plus what produced it.

    The config echo (including resolved lexicon patterns) is sufficient
    to reproduce the same profiles from the same snapshot.
    """

    repo_owner: str
    repo_name: str
    fetched_at: datetime
    version: str
    config: dict[str, Any]
    profiles: tuple[TrustProfile, ...]
    summary: RepoSummary


def build_bundle(
    snapshot: RepoSnapshot,
    profiles: list[TrustProfile],
    summary: RepoSummary,
    config_echo: dict[str, Any],
) -> ReportBundle:
    return ReportBundle(
        repo_owner=snapshot.repo_owner,
        repo_name=snapshot.repo_name,
        fetched_at=snapshot.fetched_at,
        version=__version__,
        config=config_echo,
        profiles=tuple(profiles),
        summary=summary,
    )


def format_score(value: float | None) -> str:
    """Six decimal places, half-up; empty string for absent values."""
    if value is None:
        return ""
    return str(Decimal(repr(value)).quantize(Decimal("0.000001"), rounding=ROUND_HALF_UP))


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def _score_to_dict(score: DimensionScore) -> dict:
    return {
        "available": score.available,
        "score": score.score,
        "evidence": score.evidence,
    }


def _profile_to_dict(profile: TrustProfile) -> dict:
    return {
        "pr_number": profile.pr_number,
        "outcome": profile.outcome,
        "overall": profile.overall,
        "coverage": profile.coverage,
        "dimensions": {d: _score_to_dict(profile.scores[d]) for d in DIMENSIONS},
    }


def _stratum_to_dict(stratum: StratumSummary) -> dict:
    return {
        "pr_count": stratum.pr_count,
        "mean_comment_frequency": stratum.mean_comment_frequency,
        "prs_with_post_feedback_commits": stratum.prs_with_post_feedback_commits,
        "prs_with_review_response": stratum.prs_with_review_response,
        "first_timer_prs": stratum.first_timer_prs,
        "prs_with_shared_org_counterparty": stratum.prs_with_shared_org_counterparty,
        "prs_with_full_acceptance_closer": stratum.prs_with_full_acceptance_closer,
        "prs_with_transferred_flag": stratum.prs_with_transferred_flag,
    }


def bundle_to_dict(bundle: ReportBundle) -> dict:
    return {
        "version": bundle.version,
        "repo": {
            "owner": bundle.repo_owner,
            "name": bundle.repo_name,
            "fetched_at": format_timestamp(bundle.fetched_at),
        },
        "config": bundle.config,
        "profiles": [_profile_to_dict(p) for p in bundle.profiles],
        "summary": {
            "accepted": _stratum_to_dict(bundle.summary.accepted),
            "rejected": _stratum_to_dict(bundle.summary.rejected),
        },
    }


def bundle_from_dict(data: dict) -> ReportBundle:
    try:
        profiles = tuple(
            TrustProfile(
                pr_number=raw["pr_number"],
                outcome=raw["outcome"],
                scores={
                    d: DimensionScore(
                        dimension=d,
                        available=raw["dimensions"][d]["available"],
                        score=raw["dimensions"][d]["score"],
                        evidence=raw["dimensions"][d]["evidence"],
                    )
                    for d in DIMENSIONS
                },
                overall=raw["overall"],
                coverage=raw["coverage"],
            )
            for raw in data["profiles"]
        )
        summary = RepoSummary(
            accepted=StratumSummary(**data["summary"]["accepted"]),
            rejected=StratumSummary(**data["summary"]["rejected"]),
        )
        return ReportBundle(
            repo_owner=data["repo"]["owner"],
            repo_name=data["repo"]["name"],
            fetched_at=parse_timestamp(data["repo"]["fetched_at"], "report.repo.fetched_at"),
            version=data["version"],
            config=data["config"],
            profiles=profiles,
            summary=summary,
        )
    except (KeyError, TypeError) as exc:
        raise SnapshotParseError(f"malformed report bundle: {exc!r}") from exc


def load_bundle(path: str | Path) -> ReportBundle:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SnapshotParseError(f"cannot read report file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SnapshotParseError(f"{path}: not valid JSON: {exc}") from exc
    return bundle_from_dict(data)


# ---------------------------------------------------------------------------
# CSV and markdown renderings
# ---------------------------------------------------------------------------

def csv_text(bundle: ReportBundle) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for profile in bundle.profiles:
        cells = [str(profile.pr_number), profile.outcome]
        for dimension in DIMENSIONS:
            score = profile.scores[dimension]
            cells.append(format_score(score.score) if score.available else "")
        cells.append(format_score(profile.overall))
        cells.append(str(profile.coverage))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _count(value: int) -> str:
    return str(value)


def markdown_summary(bundle: ReportBundle) -> str:
    """Render the per-stratum summary table as GitHub-flavored markdown."""
    accepted = bundle.summary.accepted
    rejected = bundle.summary.rejected
    pending = len(bundle.profiles) - accepted.pr_count - rejected.pr_count

    def mean_total() -> float | None:
        parts = [
            (s.pr_count, s.mean_comment_frequency)
            for s in (accepted, rejected)
            if s.mean_comment_frequency is not None
        ]
        total_n = sum(n for n, _ in parts)
        if total_n == 0:
            return None
        return sum(n * m for n, m in parts) / total_n

    rows = [
        ("Pull requests", _count(accepted.pr_count), _count(rejected.pr_count),
         _count(accepted.pr_count + rejected.pr_count)),
        ("Mean comment frequency (per day)",
         format_score(accepted.mean_comment_frequency),
         format_score(rejected.mean_comment_frequency),
         format_score(mean_total())),
        ("PRs with post-feedback commits",
         _count(accepted.prs_with_post_feedback_commits),
         _count(rejected.prs_with_post_feedback_commits),
         _count(accepted.prs_with_post_feedback_commits + rejected.prs_with_post_feedback_commits)),
        ("PRs with a review response",
         _count(accepted.prs_with_review_response),
         _count(rejected.prs_with_review_response),
         _count(accepted.prs_with_review_response + rejected.prs_with_review_response)),
        ("PRs by first-time authors",
         _count(accepted.first_timer_prs),
         _count(rejected.first_timer_prs),
         _count(accepted.first_timer_prs + rejected.first_timer_prs)),
        ("PRs with a shared-org counterparty",
         _count(accepted.prs_with_shared_org_counterparty),
         _count(rejected.prs_with_shared_org_counterparty),
         _count(accepted.prs_with_shared_org_counterparty + rejected.prs_with_shared_org_counterparty)),
        ("PRs whose closer accepted all they closed",
         _count(accepted.prs_with_full_acceptance_closer),
         _count(rejected.prs_with_full_acceptance_closer),
         _count(accepted.prs_with_full_acceptance_closer + rejected.prs_with_full_acceptance_closer)),
        ("PRs with a transferred-trust vouch",
         _count(accepted.prs_with_transferred_flag),
         _count(rejected.prs_with_transferred_flag),
         _count(accepted.prs_with_transferred_flag + rejected.prs_with_transferred_flag)),
    ]

    lines = [
        f"# Trust summary: {bundle.repo_owner}/{bundle.repo_name}",
        "",
        f"Snapshot fetched at {format_timestamp(bundle.fetched_at)}; "
        f"{len(bundle.profiles)} PRs analyzed "
        f"({accepted.pr_count} accepted, {rejected.pr_count} rejected, {pending} pending).",
        "",
        "| Statistic | Accepted | Rejected | Total |",
        "| --- | ---: | ---: | ---: |",
    ]
    lines.extend(f"| {name} | {a} | {r} | {t} |" for name, a, r, t in rows)
    return "\n".join(lines) + "\n"


def json_text(bundle: ReportBundle) -> str:
    return json.dumps(bundle_to_dict(bundle), indent=2, ensure_ascii=False) + "\n"


def emit(bundle: ReportBundle, format: str, path: str | Path) -> None:
    """Write the bundle to ``path`` in the requested format."""
    if format == "json":
        text = json_text(bundle)
    elif format == "csv":
        text = csv_text(bundle)
    elif format == "markdown":
        text = markdown_summary(bundle)
    else:
        raise ValueError(f"unknown report format '{format}' (expected one of {FORMATS})")
    Path(path).write_text(text, encoding="utf-8", newline="\n")
