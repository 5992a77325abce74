from fastapi import APIRouter
from app.api.v1.endpoints import analysis, gallery, norms

api_router = APIRouter()

api_router.include_router(
    analysis.router,
    prefix="/analysis",
    tags=["analysis"]
)

api_router.include_router(
    norms.router,
    prefix="/norms",
    tags=["norms"]
)

api_router.include_router(
    gallery.router,
    prefix="/gallery",
    tags=["gallery"]
)
