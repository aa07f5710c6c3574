"""設定ファイル (suite config) の読み込みとログ設定"""
from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigParseError, ConfigValidationError, TraceLabError
from .field_core import PRIME_CAP, is_prime
from .pgl2 import PatternSpec, Sigma
from .trace_fns import CharTuplePair, TraceTable, hyp_batch, kloosterman_batch

logger = logging.getLogger(__name__)

CONFIG_ENV = "TRACELAB_CONFIG"
THREADS_ENV = "TRACELAB_THREADS"
LOG_LEVEL_ENV = "TRACELAB_LOG_LEVEL"
DEFAULT_CONFIG = "config.json"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

Matrix = Tuple[Tuple[int, int], Tuple[int, int]]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class KloostermanTrace(_Model):
    kind: Literal["kloosterman"]
    r: int = Field(ge=2)


class HypergeometricTrace(_Model):
    kind: Literal["hypergeometric"]
    chi: List[int] = Field(default_factory=list)
    rho: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _nonempty(self) -> "HypergeometricTrace":
        if not self.chi and not self.rho:
            raise ValueError("chi and rho cannot both be empty")
        return self


TraceSpec = Union[KloostermanTrace, HypergeometricTrace]


class PatternConfig(_Model):
    id: str = Field(min_length=1)
    trace: TraceSpec = Field(discriminator="kind")
    gammas: List[Matrix] = Field(min_length=1)
    sigmas: Optional[List[str]] = None
    h: int = 0
    profile: Optional[str] = None

    @field_validator("sigmas")
    @classmethod
    def _known_sigmas(cls, v: Optional[List[str]]) -> Optional[List[str]]:
        if v is not None:
            for s in v:
                Sigma.parse(s)
        return v

    @model_validator(mode="after")
    def _lengths(self) -> "PatternConfig":
        if self.sigmas is not None and len(self.sigmas) != len(self.gammas):
            raise ValueError(f"{len(self.gammas)} gammas but {len(self.sigmas)} sigmas")
        return self

    def spec(self) -> PatternSpec:
        return PatternSpec(self.id, tuple(self.gammas), tuple(self.sigmas or ()), self.h)


class PrimeRange(_Model):
    start: int = Field(ge=2)
    stop: int = Field(ge=2)
    step: int = Field(default=1, ge=1)

    def primes(self) -> List[int]:
        # step 個おきに素数を拾う
        return [p for p in range(self.start, self.stop + 1) if is_prime(p)][:: self.step]


class LoggingConfig(_Model):
    level: str = "INFO"
    log_file: Optional[str] = None

    @field_validator("level")
    @classmethod
    def _known_level(cls, v: str) -> str:
        if not isinstance(logging.getLevelName(v.upper()), int):
            raise ValueError(f"unknown log level '{v}'")
        return v.upper()


class SuiteConfig(_Model):
    primes: Union[List[int], PrimeRange]
    patterns: List[PatternConfig] = Field(min_length=1)
    output: str = "report.csv"
    threads: Optional[int] = Field(default=None, ge=1)
    frozen_constants: Optional[str] = None
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    @field_validator("primes")
    @classmethod
    def _all_prime(cls, v):
        plist = v.primes() if isinstance(v, PrimeRange) else v
        if not plist:
            raise ValueError("no primes selected")
        for p in plist:
            if p < 3 or not is_prime(p):
                raise ValueError(f"{p} is not prime")
            if p > PRIME_CAP:
                raise ValueError(f"{p} exceeds the prime cap {PRIME_CAP}")
        return v

    @field_validator("patterns")
    @classmethod
    def _unique_ids(cls, v: List[PatternConfig]) -> List[PatternConfig]:
        seen = set()
        for pat in v:
            if pat.id in seen:
                raise ValueError(f"duplicate pattern id '{pat.id}'")
            seen.add(pat.id)
        return v

    def prime_list(self) -> List[int]:
        if isinstance(self.primes, PrimeRange):
            return self.primes.primes()
        return sorted(set(self.primes))


def _field_path(loc: Tuple) -> str:
    return ".".join(str(part) for part in loc)


def load_config(path: Union[str, Path]) -> SuiteConfig:
    """Parse and validate a suite config file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(f"{path}: {e.msg}", e.lineno, e.colno) from e
    try:
        config = SuiteConfig.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        raise ConfigValidationError(first["msg"], _field_path(first["loc"])) from e
    logger.info("loaded %s: %d primes, %d patterns", path, len(config.prime_list()), len(config.patterns))
    return config


def resolve_config_path(explicit: Optional[str] = None) -> Path:
    if explicit:
        return Path(explicit)
    env = os.getenv(CONFIG_ENV)
    if env:
        return Path(env)
    return Path.cwd() / DEFAULT_CONFIG


def resolve_threads(flag: Optional[int] = None, config: Optional[SuiteConfig] = None) -> int:
    if flag:
        return flag
    env = os.getenv(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError as e:
            raise TraceLabError(f"{THREADS_ENV} must be an integer, got '{env}'") from e
        if value >= 1:
            return value
    if config is not None and config.threads:
        return config.threads
    return os.cpu_count() or 1


def setup_logging(settings: Optional[LoggingConfig] = None) -> None:
    settings = settings or LoggingConfig()
    level = os.getenv(LOG_LEVEL_ENV, settings.level).upper()
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.log_file:
        handlers.append(logging.FileHandler(settings.log_file))
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


def build_trace(spec: TraceSpec):
    """A table builder (FieldContext -> TraceTable) for a trace spec."""
    if isinstance(spec, KloostermanTrace):
        return lambda ctx: kloosterman_batch(ctx, spec.r)

    def _hyp(ctx) -> TraceTable:
        return hyp_batch(ctx, CharTuplePair.from_exponents(ctx, spec.chi, spec.rho))

    return _hyp
