from typing import List
from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
from dotenv import load_dotenv
load_dotenv()


class Settings(BaseSettings):
    PROJECT_NAME: str = "Gradual Change Detection"
    API_V1_STR: str = "/api"
    LOG_LEVEL: str = "INFO"

    # CORS
    CORS_ORIGINS: List[str] = ["*"]

    # Compute
    THREADS: int = 1
    DRAW_CHUNK: int = 64

    # Inference defaults
    BOOTSTRAP_REPS: int = 1000
    ALPHA: float = 0.1
    RHO_SCALE: float = 0.1

    # Bandwidth selection
    CV_FOLDS: int = 10
    CV_GRID_SIZE: int = 10

    # Ingestion
    MISSING_MAX_FRACTION: float = 0.10

    # Simulation
    SIMULATION_POINTS: int = 101

    @field_validator('THREADS', 'DRAW_CHUNK', mode='before')
    def at_least_one(cls, v):
        return max(1, int(v or 1))

    @field_validator('LOG_LEVEL', mode='before')
    def upper_level(cls, v):
        return str(v or "INFO").upper()

    model_config = SettingsConfigDict(
        env_prefix="GRADUAL_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )


settings = Settings()
