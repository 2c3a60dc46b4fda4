"""
Entry point for the HTTP service. Creates the FastAPI app and sets up lifespan.
"""

from contextlib import asynccontextmanager

from fastapi import FastAPI
from loguru import logger

from vvfx.api import router
from vvfx.config import settings
from vvfx.pricing import clear_caches

# ──────────────────────────────────────────────
# Sentry (optional)
# ──────────────────────────────────────────────

if settings.sentry_dsn:
    import sentry_sdk

    sentry_sdk.init(settings.sentry_dsn)


# ──────────────────────────────────────────────
# Lifespan (startup/shutdown)
# ──────────────────────────────────────────────


@asynccontextmanager
async def lifespan(app: FastAPI):
    logger.info("Starting vvfx on port {}", settings.port)
    logger.info("Threads: {}, smile cache: {}", settings.threads, settings.smile_cache_size)
    yield
    clear_caches()
    logger.info("Shutting down...")


app = FastAPI(title="vvfx", lifespan=lifespan)
app.include_router(router)


if __name__ == "__main__":
    import uvicorn

    uvicorn.run("vvfx.main:app", host=settings.host, port=settings.port)
