from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # threads for dispersion sweeps; everything else is single-threaded
    VISCOFLOW_THREADS: int = Field(default=1, ge=1)
    DEBUG: bool = False
    LOG_LEVEL: str = "INFO"
    DEFAULT_CFL: float = 0.4
    DEFAULT_N_GHOST: int = 2

    class Config:
        env_file = ".env"
        extra = "ignore"


settings = Settings()
