import json
import os

# the app engine and the Celery task session must see the test database
os.environ.setdefault("DATABASE_URL", "sqlite:///./test_latticelab.db")
os.environ.setdefault("CELERY_TASK_ALWAYS_EAGER", "true")

import pytest
from fastapi.testclient import TestClient
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from app.main import app
from app.db.database import get_db, Base
from app.core.config import settings
from app.lattice.norms import bbody_spec, pnorm_spec, v_basis_pullback
from app.schemas.schemas import dump_norm_spec

# Test database
SQLALCHEMY_DATABASE_URL = settings.database_url

engine = create_engine(SQLALCHEMY_DATABASE_URL, connect_args={"check_same_thread": False})
TestingSessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)

# Create test database tables
Base.metadata.create_all(bind=engine)


def override_get_db():
    try:
        db = TestingSessionLocal()
        yield db
    finally:
        db.close()


app.dependency_overrides[get_db] = override_get_db

client = TestClient(app)

@pytest.fixture
def test_client():
    return client


@pytest.fixture
def test_db():
    db = TestingSessionLocal()
    try:
        yield db
    finally:
        db.close()


@pytest.fixture(autouse=True)
def clear_database():
    """Clear database after each test"""
    yield
    db = TestingSessionLocal()
    try:
        for table in reversed(Base.metadata.sorted_tables):
            db.execute(table.delete())
        db.commit()
    finally:
        db.close()


@pytest.fixture
def bbody():
    return bbody_spec()


@pytest.fixture
def euclidean():
    return pnorm_spec(2.0)


@pytest.fixture
def spec_file(tmp_path):
    """Write a norm spec to a JSON file and return its path"""
    def write(spec, name="spec.json"):
        path = tmp_path / name
        data = spec if isinstance(spec, dict) else dump_norm_spec(spec)
        path.write_text(json.dumps(data))
        return str(path)
    return write


@pytest.fixture
def vpullback4():
    return v_basis_pullback(4)
