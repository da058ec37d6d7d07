"""Ranking-survey backend: definitions, sessions, response log, mean ranks."""

from .definition import (
    DEFAULT_PROMPTS,
    DefinitionError,
    SurveyDefinition,
    SurveyQuestion,
    SurveyTask,
    build_definition,
    load_definition,
)
from .report import MeanRankReport, mean_rank_report
from .service import create_app, serve
from .store import (
    RankingRecord,
    ReplayError,
    ResponseLog,
    Session,
    StorageError,
    UnknownIdError,
    ValidationError,
    new_session,
    submit_ranking,
    validate_rankings,
)

__all__ = [
    "DEFAULT_PROMPTS",
    "DefinitionError",
    "MeanRankReport",
    "RankingRecord",
    "ReplayError",
    "ResponseLog",
    "Session",
    "StorageError",
    "SurveyDefinition",
    "SurveyQuestion",
    "SurveyTask",
    "UnknownIdError",
    "ValidationError",
    "build_definition",
    "create_app",
    "load_definition",
    "mean_rank_report",
    "new_session",
    "serve",
    "submit_ranking",
    "validate_rankings",
]
