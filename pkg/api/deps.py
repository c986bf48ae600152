from fastapi import HTTPException, status
from core.config import Settings, settings
from core.errors import GradualChangeError, InvalidConfigError
from data.loader import series_from_rows
from data.models import FunctionalSeries, SeriesPayload
import logging

logger = logging.getLogger(__name__)


def get_settings() -> Settings:
    return settings


def get_series(payload: SeriesPayload) -> FunctionalSeries:
    try:
        return series_from_rows(payload.values, payload.s_grid, payload.labels)
    except GradualChangeError as e:
        raise bad_request(e)


def bad_request(e: ValueError) -> HTTPException:
    """400 with a machine-readable code; plain ValueErrors count as invalid configuration."""
    if not isinstance(e, GradualChangeError):
        e = InvalidConfigError(str(e))
    logger.warning(f"Rejected request: {e.code}: {e.message}")
    return HTTPException(
        status_code=status.HTTP_400_BAD_REQUEST,
        detail={"code": e.code, "message": e.message},
    )


def internal_error(action: str, e: Exception) -> HTTPException:
    logger.error(f"Internal server error during {action}: {str(e)}")
    return HTTPException(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        detail={"code": "Internal", "message": f"Internal server error during {action}"},
    )
