#!/usr/bin/env python3
"""Start a worker for queued analyses: python celery_worker.py [extra worker options]"""
import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

if __name__ == "__main__":
    from app.core.celery_app import celery_app
    from app.core.config import settings

    celery_app.worker_main(["worker", f"--loglevel={settings.log_level.lower()}", *sys.argv[1:]])
