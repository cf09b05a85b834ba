import logging

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from dcprotect import __version__
from dcprotect.api import groups, scenarios, topology
from dcprotect.config import settings

logging.basicConfig(
    level=settings.log_level.upper(),
    format="%(asctime)s %(levelname)s %(name)s: %(message)s",
)
logger = logging.getLogger(__name__)

# Initialize FastAPI app
app = FastAPI(
    title="DC Microgrid Adaptive Protection",
    description="Setting groups, GOOSE-coordinated relays and protection timing studies for DC microgrids",
    version=__version__,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=settings.allowed_origins.split(","),
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(topology.router)
app.include_router(groups.router)
app.include_router(scenarios.router)


@app.on_event("startup")
async def startup_event():
    logger.info(f"Topology: {settings.topology_path}, seed {settings.seed}")


@app.get("/")
async def root():
    """Root endpoint"""
    return {
        "message": "DC Microgrid Adaptive Protection API",
        "docs": "/docs",
    }


@app.get("/health")
async def health_check():
    """Health check endpoint"""
    return {"status": "healthy"}
