"""Analysis configuration and the key=value config-file format.

Config files are UTF-8 text, one ``key = value`` pair per line; blank
lines and lines starting with ``#`` are ignored. Recognized keys:

    f_cap, competence_window, accept_ratio, per_repo_n, seed,
    weights.action, weights.commitment, weights.competence,
    weights.institutional, weights.personality, weights.transferred,
    lexicon_path, exclude_bots

Command-line flags always override config-file values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .metrics import DIMENSIONS, VouchLexicon, default_lexicon


def _uniform_weights() -> dict[str, float]:
    return {dimension: 1.0 / len(DIMENSIONS) for dimension in DIMENSIONS}


@dataclass
class AnalysisConfig:
    """Every knob that affects an analysis or sampling run.

    Weights must be strictly positive; they are renormalized over the
    available dimensions when combining scores, so only ratios matter.
    """

    f_cap: float = 4.0
    competence_window: int = 1000
    accept_ratio: float = 0.75
    per_repo_n: int = 25
    seed: int = 0
    weights: dict[str, float] = field(default_factory=_uniform_weights)
    lexicon_path: str | None = None
    exclude_bots: bool = True

    def validate(self) -> None:
        if self.f_cap <= 0:
            raise ConfigError(f"f_cap must be positive, got {self.f_cap}")
        if self.competence_window < 1:
            raise ConfigError(f"competence_window must be >= 1, got {self.competence_window}")
        if not 0.0 <= self.accept_ratio <= 1.0:
            raise ConfigError(f"accept_ratio must be in [0, 1], got {self.accept_ratio}")
        if self.per_repo_n < 1:
            raise ConfigError(f"per_repo_n must be >= 1, got {self.per_repo_n}")
        if set(self.weights) != set(DIMENSIONS):
            raise ConfigError(f"weights must cover exactly the dimensions {DIMENSIONS}")
        for dimension, weight in self.weights.items():
            if weight <= 0:
                raise ConfigError(f"weights.{dimension} must be positive, got {weight}")

    def load_lexicon(self) -> VouchLexicon:
        """Resolve the vouch lexicon: the configured file or the built-in one."""
        if self.lexicon_path is not None:
            return VouchLexicon.from_file(self.lexicon_path)
        return default_lexicon()


def _parse_bool(value: str, where: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {value!r}")


def _parse_float(value: str, where: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: expected a number, got {value!r}") from exc


def _parse_int(value: str, where: str) -> int:
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: expected an integer, got {value!r}") from exc


def load_config(path: str | Path) -> AnalysisConfig:
    """Parse a key=value config file into a validated AnalysisConfig."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc

    config = AnalysisConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw_value = stripped.partition("=")
        key = key.strip()
        value = raw_value.strip()
        where = f"{path}:{lineno}: {key}"

        if key == "f_cap":
            config.f_cap = _parse_float(value, where)
        elif key == "competence_window":
            config.competence_window = _parse_int(value, where)
        elif key == "accept_ratio":
            config.accept_ratio = _parse_float(value, where)
        elif key == "per_repo_n":
            config.per_repo_n = _parse_int(value, where)
        elif key == "seed":
            config.seed = _parse_int(value, where)
        elif key == "lexicon_path":
            config.lexicon_path = value
        elif key == "exclude_bots":
            config.exclude_bots = _parse_bool(value, where)
        elif key.startswith("weights."):
            dimension = key[len("weights."):]
            if dimension not in DIMENSIONS:
                raise ConfigError(f"{where}: unknown dimension in weight key")
            config.weights[dimension] = _parse_float(value, where)
        else:
            raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")

    config.validate()
    return config


def config_echo(config: AnalysisConfig, lexicon: VouchLexicon) -> dict:
    """The config record embedded in reports.

    Includes the resolved lexicon patterns so a report plus the snapshot
    it was computed from reproduces the run exactly.
    """
    return {
        "f_cap": config.f_cap,
        "competence_window": config.competence_window,
        "accept_ratio": config.accept_ratio,
        "per_repo_n": config.per_repo_n,
        "seed": config.seed,
        "weights": {d: config.weights[d] for d in DIMENSIONS},
        "exclude_bots": config.exclude_bots,
        "lexicon_path": config.lexicon_path,
        "lexicon_patterns": list(lexicon.patterns),
    }
