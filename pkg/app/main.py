"""
Steklov zeta toolkit — FastAPI entry point

The same pipelines as the command line (python -m app ...), served over HTTP:
POST /run takes a RunConfig and answers with the JSON report.

Run:
    python -m uvicorn app.main:app --host 127.0.0.1 --port 8000

Environment (.env is loaded):
    STEKLOV_DEFAULT_TRUNC  truncation order when a request omits it (128)
    STEKLOV_MAX_WORKERS    thread-pool size for scans (4)
    STEKLOV_DB_PATH        SQLite audit database
    STEKLOV_AUDIT          0 disables the run audit
"""
from dotenv import load_dotenv
load_dotenv()

import logging

from fastapi import FastAPI

# Fully-qualified imports so module resolution is stable under uvicorn
from app import __version__
from app.data.db_config import DB_PATH, init_db
from app.route.run_route import router as run_router


def create_app() -> FastAPI:
    app = FastAPI(
        title="Steklov Zeta Toolkit API",
        version=__version__,
        description="Steklov spectra, zeta differences, variation formulas and the deformation flow.",
        docs_url="/docs",
        redoc_url="/redoc",
    )

    app.include_router(run_router)

    @app.get("/", tags=["root"])
    def root():
        return {
            "service": "Steklov Zeta Toolkit",
            "status": "ok",
            "docs": "/docs",
        }

    @app.on_event("startup")
    def _startup():
        logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")

        try:
            init_db()
            logging.info("SQLite initialized at: %s", DB_PATH)
        except Exception as ex:
            logging.warning("DB init warning: %s: %s", type(ex).__name__, ex)

        try:
            from app.schemas import run_schema as _schema
            logging.info("RunConfig fields: %s", list(_schema.RunConfig.model_fields.keys()))
        except Exception as ex:
            logging.warning("Schema import warning: %s: %s", type(ex).__name__, ex)

    return app


# App instance for uvicorn
app = create_app()

if __name__ == "__main__":
    import uvicorn

    uvicorn.run("app.main:app", host="127.0.0.1", port=8000)
