from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Database
    database_url: str = "sqlite:///./latticelab.db"

    # Celery
    celery_broker_url: str = "redis://localhost:6379/1"
    celery_result_backend: str = "redis://localhost:6379/2"
    celery_task_always_eager: bool = True

    # Application
    app_name: str = "LatticeLab API"
    app_version: str = "1.0.0"
    debug: bool = True
    log_level: str = "INFO"
    log_file: str = ""

    # API
    api_v1_str: str = "/api/v1"

    # Search defaults
    default_seed: int = 0
    default_budget: int = 20000
    refine_steps: int = 200
    search_block_size: int = 1000
    # rows (neighbours x sets per neighbour) one block may spend on refinement
    refine_work_cap: int = 1 << 22
    jobs: int = 1

    # Tolerances
    gauge_tol: float = 1e-9
    relation_tol: float = 1e-6
    replay_tol: float = 1e-9
    strict_rect_tol: float = 1e-6

    # Enumeration limits
    exhaustive_cap: int = 20
    rectangularize_cap: int = 24
    max_spec_depth: int = 8
    gauge_scale_cap_log2: int = 64
    condition_warning: float = 1e12

    # Diagnostics
    diagnostics_samples: int = 100000
    check_samples: int = 10000

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=False,
        extra="allow",
    )


settings = Settings()
