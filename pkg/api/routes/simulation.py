from typing import List
from fastapi import APIRouter, Depends
from pydantic import ValidationError
from starlette.concurrency import run_in_threadpool
from api.deps import bad_request, get_settings, internal_error
from core.config import Settings
from data.models import DgpSpec, MeanFunction, StudyRequest, StudyRow
from services.simulation_service import rejection_study
import logging

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/study", response_model=List[StudyRow])
async def run_study(request: StudyRequest, current: Settings = Depends(get_settings)):
    """Empirical rejection rates on synthetic series"""
    logger.debug(f"Study request: {request.mean.value}/{request.errors.value}, n={request.n}, reps={request.reps}")
    try:
        if request.mean == MeanFunction.CUSTOM:
            raise ValueError("custom means are available from Python only")
        spec = DgpSpec(mean=request.mean, errors=request.errors, n=request.n, N=request.points, seed=request.seed)
        return await run_in_threadpool(
            rejection_study,
            spec,
            request.deltas,
            request.alpha,
            request.reps,
            request.boot,
            request.seed,
            request.bandwidth,
            current.THREADS,
        )
    except (ValueError, ValidationError) as e:
        raise bad_request(e)
    except Exception as e:
        raise internal_error("simulation study", e)
