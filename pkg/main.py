import logging

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

import app_config
from database.db import Base, engine
from database import models  # noqa: F401  registers the tables
from routes import experiment_routes

logging.basicConfig(level=app_config.LOG_LEVEL)

app = FastAPI(title="IDPINN EXPERIMENT SERVER")

# CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# DB init
Base.metadata.create_all(bind=engine)


# Routers
app.include_router(experiment_routes.router)


@app.get("/")
def root():
    return {"message": "IDPINN experiment server", "configs": app_config.CONFIG_DIR}
