from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    """Process-level settings; physics and grids live in the JSON run config."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="WORKBENCH_",
        case_sensitive=False,
        extra="ignore",
    )

    # Execution
    default_threads: int = 1
    output_root: str = "runs"

    # Output formatting (fixed width keeps data CSVs byte-identical across runs)
    csv_float_format: str = "%.12e"

    # Logging Configuration
    log_level: str = "INFO"


# Global settings instance
settings = Settings()
