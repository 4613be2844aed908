from fastapi import FastAPI

from .server import ResultStore


def create_app(store: ResultStore) -> FastAPI:
    app = FastAPI(title="rtasr status")

    @app.get("/")
    @app.get("/health")
    async def health():
        return {"status": "ok", "server": "running", **store.status()}

    @app.get("/results")
    async def results(limit: int = 50):
        return store.snapshot()[-limit:] if limit > 0 else []

    return app
