"""CSV log streams, replay summaries, and plot rendering.

Floats are written with a fixed shortest-stable format so identical runs
produce byte-identical files; no wall-clock timestamps appear in any
stream.
"""

from __future__ import annotations

import csv
import hashlib
from pathlib import Path

import numpy as np

WALKING_HEADER = ["t", "com_x", "com_y", "vel_x", "vel_y", "zmp_cmd_x", "zmp_cmd_y",
                  "zmp_meas_x", "zmp_meas_y", "dcm_x", "dcm_y", "dcm_err",
                  "support", "controller"]
TSD_HEADER = ["t", "x", "y", "yaw", "v", "w", "fdes_x", "fdes_y",
              "fmeas_x", "fmeas_y", "shift_x", "shift_y", "loaded"]
TRACK_HEADER = ["t", "qw", "qx", "qy", "qz", "tx", "ty", "tz",
                "residual", "inliers", "converged"]
MODES_HEADER = ["t", "controller", "state", "cmd_x", "cmd_y", "fault"]
EVENTS_HEADER = ["t", "kind", "detail"]

STREAMS = {
    "walking.csv": WALKING_HEADER,
    "tsd.csv": TSD_HEADER,
    "track.csv": TRACK_HEADER,
    "modes.csv": MODES_HEADER,
    "events.csv": EVENTS_HEADER,
}


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10g}"
    return str(value)


class LogSet:
    """One writer per stream, rows flushed on close."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._rows = {name: [] for name in STREAMS}

    def write(self, stream: str, row) -> None:
        self._rows[stream].append([fmt(v) for v in row])

    def close(self) -> dict:
        """Write all streams; returns sha256 checksums per file."""
        checksums = {}
        for name, header in STREAMS.items():
            path = self.directory / name
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(header)
                writer.writerows(self._rows[name])
            checksums[name] = hashlib.sha256(path.read_bytes()).hexdigest()
        return checksums


def read_stream(path) -> tuple[list, list]:
    """(header, rows); truncated trailing lines are dropped with a count."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        return [], []
    header = rows[0]
    body = [r for r in rows[1:] if len(r) == len(header)]
    return header, body


def replay_summary(log_dir) -> dict:
    """Parse whatever streams exist; missing ones become warnings."""
    log_dir = Path(log_dir)
    summary = {"streams": {}, "warnings": []}
    for name, header in STREAMS.items():
        path = log_dir / name
        if not path.exists():
            summary["warnings"].append(f"missing stream {name}")
            continue
        head, rows = read_stream(path)
        entry = {"rows": len(rows)}
        with open(path, newline="") as fh:
            total_lines = sum(1 for _ in fh) - 1
        if total_lines != len(rows):
            entry["truncated_rows"] = total_lines - len(rows)
            summary["warnings"].append(
                f"{name}: {total_lines - len(rows)} malformed rows skipped")
        if name == "walking.csv" and rows:
            t = np.array([float(r[0]) for r in rows])
            dcm_err = np.array([float(r[11]) for r in rows])
            entry["duration"] = float(t[-1] - t[0])
            entry["dcm_err_max"] = float(dcm_err.max())
        if name == "track.csv" and rows:
            converged = np.array([r[10] == "1" for r in rows])
            entry["frames"] = len(rows)
            entry["converged_fraction"] = float(converged.mean())
        summary["streams"][name] = entry
    return summary


def render_plots(log_dir, out_dir) -> list:
    """Static PNG artifacts for every stream that is present."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    log_dir = Path(log_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    path = log_dir / "walking.csv"
    if path.exists():
        _, rows = read_stream(path)
        if rows:
            data = np.array([[float(v) for v in r[:12]] for r in rows])
            fig, axes = plt.subplots(2, 1, figsize=(10, 6), sharex=True)
            for i, axis_name in enumerate(("x", "y")):
                axes[i].plot(data[:, 0], data[:, 1 + i], label="com")
                axes[i].plot(data[:, 0], data[:, 5 + i], label="zmp cmd", alpha=0.7)
                axes[i].plot(data[:, 0], data[:, 9 + i], label="dcm", alpha=0.7)
                axes[i].set_ylabel(f"{axis_name} (m)")
                axes[i].legend(loc="upper left", fontsize=8)
            axes[1].set_xlabel("t (s)")
            fig.suptitle("walking: CoM / ZMP / DCM")
            target = out_dir / "walking.png"
            fig.savefig(target, dpi=110)
            plt.close(fig)
            written.append(target)

    path = log_dir / "tsd.csv"
    if path.exists():
        _, rows = read_stream(path)
        if rows:
            data = np.array([[float(v) for v in r[:6]] for r in rows])
            fig, ax = plt.subplots(figsize=(7, 7))
            ax.plot(data[:, 1], data[:, 2], label="tsd path")
            ax.set_aspect("equal")
            ax.set_xlabel("x (m)")
            ax.set_ylabel("y (m)")
            ax.legend()
            fig.suptitle("TSD path")
            target = out_dir / "tsd_path.png"
            fig.savefig(target, dpi=110)
            plt.close(fig)
            written.append(target)

    path = log_dir / "track.csv"
    if path.exists():
        _, rows = read_stream(path)
        if rows:
            t = np.array([float(r[0]) for r in rows])
            residual = np.array([float(r[8]) for r in rows])
            inliers = np.array([float(r[9]) for r in rows])
            fig, ax1 = plt.subplots(figsize=(10, 4))
            ax1.plot(t, residual, label="rms residual (m)")
            ax1.set_xlabel("t (s)")
            ax1.set_ylabel("residual (m)")
            ax2 = ax1.twinx()
            ax2.plot(t, inliers, color="tab:orange", label="inliers")
            ax2.set_ylabel("inlier fraction")
            fig.suptitle("bed tracking")
            target = out_dir / "tracking.png"
            fig.savefig(target, dpi=110)
            plt.close(fig)
            written.append(target)
    return written
