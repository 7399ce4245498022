"""Bundled example model: an underwater robot's vision and control system.

Two camera pipelines (front with stereo merge, bottom with a single
camera) share components from one repository, five control components run
alongside them, and the platform has one CPU-GPU node and one plain CPU
node.  Loading goes through the regular model format, so the fixture
also doubles as a format example.
"""

from __future__ import annotations

from importlib import resources

from .formats import parse_model
from .model import Platform, Repository, SystemArchitecture

__all__ = ["robot_model_text", "robot_model"]


def robot_model_text() -> str:
    return (
        resources.files("mvalloc")
        .joinpath("data/robot.json")
        .read_text(encoding="utf-8")
    )


def robot_model() -> tuple[Repository, Platform, SystemArchitecture]:
    repo, platform, architecture = parse_model(robot_model_text())
    assert architecture is not None
    return repo, platform, architecture
