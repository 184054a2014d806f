"""Distributed orchestration: jobs, chunks, workers, persistence, HTTP API."""

from avmask.manager.core import Orchestrator
from avmask.manager.model import Chunk, Job, ManagerState, WorkerRecord
from avmask.manager.planner import ChunkPlan, auto_overlap, plan_chunks

__all__ = [
    "Orchestrator",
    "Chunk",
    "Job",
    "ManagerState",
    "WorkerRecord",
    "ChunkPlan",
    "auto_overlap",
    "plan_chunks",
]
