"""Desk-scale nursing-robot stack: walking, locomanipulation, depth tracking,
multi-contact balance, and teleoperation over a deterministic simulator."""

__version__ = "0.1.0"
