from fastapi import APIRouter
from starlette.concurrency import run_in_threadpool
from api.deps import bad_request, get_series, internal_error
from data.models import (
    BandwidthRequest,
    CVReport,
    FirstTimeRequest,
    FirstTimeResult,
    SurfaceRequest,
    TestRequest,
    TestResult,
)
from services.inference_service import fit_deviation, run_test
from services.tuning_service import cv_bandwidth
import logging

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("/test", response_model=TestResult)
async def test_relevant_change(request: TestRequest):
    """Bootstrap test of H0: d_inf <= delta"""
    series = get_series(request.series)
    logger.debug(f"Relevance test on {series.n} curves, delta={request.delta}")
    try:
        return await run_in_threadpool(run_test, series, request.delta, request.alpha, request.config)
    except ValueError as e:
        raise bad_request(e)
    except Exception as e:
        raise internal_error("testing", e)


@router.post("/first-time", response_model=FirstTimeResult)
async def estimate_first_time(request: FirstTimeRequest):
    series = get_series(request.series)

    def estimate() -> FirstTimeResult:
        return run_test(series, request.delta, request.alpha, request.config).first_time

    try:
        return await run_in_threadpool(estimate)
    except ValueError as e:
        raise bad_request(e)
    except Exception as e:
        raise internal_error("first-time estimation", e)


@router.post("/bandwidth", response_model=CVReport)
async def select_bandwidth(request: BandwidthRequest):
    series = get_series(request.series)
    try:
        return await run_in_threadpool(cv_bandwidth, series, request.candidates, request.k)
    except ValueError as e:
        raise bad_request(e)
    except Exception as e:
        raise internal_error("bandwidth selection", e)


@router.post("/surface")
async def deviation_surface(request: SurfaceRequest):
    """Corrected mean surface, benchmark and deviation on the evaluation grid"""
    series = get_series(request.series)
    try:
        fit = await run_in_threadpool(fit_deviation, series, request.config)
    except ValueError as e:
        raise bad_request(e)
    except Exception as e:
        raise internal_error("surface estimation", e)

    return {
        "bandwidth": fit.bandwidth,
        "d_inf": fit.deviation.sup,
        "t_grid": fit.deviation.t_grid.tolist(),
        "s_grid": fit.deviation.s_grid.tolist(),
        "mu_tilde": fit.surface.values.tolist(),
        "g_hat": fit.benchmark.values.tolist(),
        "deviation": fit.deviation.values.tolist(),
    }
