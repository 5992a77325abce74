from celery import Celery
from app.core.config import settings

celery_app = Celery(
    "latticelab",
    broker=settings.celery_broker_url,
    backend=settings.celery_result_backend,
    include=["app.tasks.analysis_tasks"]
)

celery_app.conf.update(
    task_serializer="json",
    accept_content=["json"],
    result_serializer="json",
    timezone="UTC",
    enable_utc=True,
    task_track_started=True,
    task_time_limit=60 * 60,
    task_soft_time_limit=55 * 60,
    worker_prefetch_multiplier=1,
    worker_max_tasks_per_child=100,
    # no broker needed in development and tests
    task_always_eager=settings.celery_task_always_eager,
    task_store_eager_result=False,
)
