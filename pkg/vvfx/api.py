"""
API route handlers. Thin layer, delegates to pricing.py.
"""

from fastapi import APIRouter, HTTPException

from vvfx.models import (
    DomainError,
    NumericalError,
    PriceRequest,
    PricingResult,
    SmileReport,
    SmileRequest,
)
from vvfx.pricing import curve_for, price_instrument
from vvfx.smile import smile_report

router = APIRouter(prefix="/api")


def _http_error(e: Exception) -> HTTPException:
    if isinstance(e, DomainError):
        status, code = 422, "invalid_input"
    else:
        status, code = 500, "numerical_failure"
    return HTTPException(
        status_code=status,
        detail={"error": {"code": code, "message": str(e)}},
    )


@router.post("/price", response_model=PricingResult)
def price(request: PriceRequest):
    """Vanna-Volga price of one instrument on the snapshot's smile."""
    try:
        return price_instrument(request.instrument, request.snapshot, request.params)
    except (DomainError, NumericalError) as e:
        raise _http_error(e) from e


@router.post("/smile", response_model=SmileReport)
def smile(request: SmileRequest):
    """Pillars, broker strangle and a strike grid for one tenor."""
    try:
        curve = curve_for(request.snapshot, request.tau)
        return smile_report(curve, request.grid_points)
    except (DomainError, NumericalError) as e:
        raise _http_error(e) from e
