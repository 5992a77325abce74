from typing import Optional

from fastapi import APIRouter, Query

from app.schemas.schemas import BaseResponse
from app.services.gallery_service import list_entries, run_entry
from app.utils.helpers import format_success_response

router = APIRouter()


@router.get("/", response_model=BaseResponse)
async def get_entries():
    """List gallery entries"""
    return format_success_response(
        message="Gallery entries retrieved successfully",
        data={"entries": [entry.model_dump() for entry in list_entries()]}
    )


@router.get("/{name}", response_model=BaseResponse)
def run_gallery_entry(
    name: str,
    dimension: Optional[int] = Query(default=None, gt=0),
    seed: Optional[int] = None,
    budget: Optional[int] = Query(default=None, gt=0),
):
    """Evaluate one gallery entry and return its pass/fail table"""
    table = run_entry(name, dimension=dimension, seed=seed, budget=budget)
    return format_success_response(
        message="Gallery entry passed" if table.passed else "Gallery entry failed",
        data=table.model_dump(mode="json")
    )
