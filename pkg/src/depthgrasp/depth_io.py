"""Depth frames, camera intrinsics, and pinhole backprojection.

Depth values are raw sensor units scaled to millimeters by
``CameraIntrinsics.depth_scale``. A raw value of 0 means "no reading" and is
never backprojected. Supported frame formats: 16-bit binary PGM (``P5``,
big-endian samples), raw little-endian 16-bit (``raw16le``, dimensions from a
JSON sidecar), and plain CSV.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# A 3D point in the camera frame is a length-3 float array (x, y, z) in mm.
Point3 = np.ndarray

DEPTH_FORMATS = ("pgm16", "raw16le", "csv")


class DepthIOError(Exception):
    """Unreadable, malformed, or dimensionally inconsistent depth input."""


def point3(x: float, y: float, z: float) -> Point3:
    return np.array([x, y, z], dtype=np.float64)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters: focal lengths and principal point in pixels.

    ``depth_scale`` converts raw depth samples to millimeters (mm per raw
    unit, 1.0 for a sensor that already reports integer millimeters).
    """

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    depth_scale: float = 1.0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError(
                f"principal point ({self.cx}, {self.cy}) outside "
                f"{self.width}x{self.height} image"
            )
        if not self.depth_scale > 0:
            raise ValueError(f"depth_scale must be positive, got {self.depth_scale}")

    def to_matrix(self) -> np.ndarray:
        """3x3 intrinsic matrix [[fx,0,cx],[0,fy,cy],[0,0,1]]."""
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass(frozen=True)
class DepthFrame:
    """One depth image: (height, width) row-major samples plus a frame index.

    ``data`` is uint16 when loaded from disk; the simulator produces float64
    samples (still within the unsigned 16-bit value range) so that geometric
    round-trip accuracy is not limited by quantization.
    """

    data: np.ndarray
    width: int
    height: int
    timestamp: int = 0

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ValueError(f"depth data must be 2D, got shape {data.shape}")
        if data.shape != (self.height, self.width):
            raise ValueError(
                f"data shape {data.shape} does not match "
                f"height={self.height}, width={self.width}"
            )
        if data.size and (data.min() < 0 or data.max() > 65535):
            raise ValueError("depth samples must lie in [0, 65535]")
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class PointCloud:
    """Ordered 3D points with optional per-point densities and confidences."""

    points: np.ndarray
    densities: np.ndarray | None = None
    confidences: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must have shape (N, 3), got {pts.shape}")
        object.__setattr__(self, "points", pts)
        for name in ("densities", "confidences"):
            arr = getattr(self, name)
            if arr is None:
                continue
            arr = np.asarray(arr)
            if arr.shape != (len(pts),):
                raise ValueError(f"{name} length {arr.shape} != point count {len(pts)}")
            object.__setattr__(self, name, arr)
        if self.confidences is not None and len(pts):
            w = self.confidences
            if w.min() < 0.0 or w.max() > 1.0:
                raise ValueError("confidences must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.points)


def backproject(frame: DepthFrame, intr: CameraIntrinsics, stride: int = 1) -> PointCloud:
    """Lift every sampled pixel with nonzero depth into the camera frame.

    Z = raw * depth_scale, X = (u - cx) * Z / fx, Y = (v - cy) * Z / fy.
    Pixels are sampled on a ``stride``-spaced grid starting at (0, 0); output
    points follow row-major pixel order.
    """
    if frame.width != intr.width or frame.height != intr.height:
        raise ValueError(
            f"frame is {frame.width}x{frame.height} but intrinsics declare "
            f"{intr.width}x{intr.height}"
        )
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    raw = frame.data[::stride, ::stride]
    vs, us = np.mgrid[0 : frame.height : stride, 0 : frame.width : stride]
    valid = raw > 0
    z = raw[valid].astype(np.float64) * intr.depth_scale
    u = us[valid].astype(np.float64)
    v = vs[valid].astype(np.float64)
    x = (u - intr.cx) * z / intr.fx
    y = (v - intr.cy) * z / intr.fy
    return PointCloud(np.stack([x, y, z], axis=1))


def project(p: Point3, intr: CameraIntrinsics) -> tuple[float, float]:
    """Pinhole projection of a camera-frame point to real-valued pixel (u, v)."""
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    if z <= 0:
        raise ValueError(f"cannot project point with non-positive z = {z}")
    return (x * intr.fx / z + intr.cx, y * intr.fy / z + intr.cy)


# ---------------------------------------------------------------------------
# file I/O

# anchored via .match(buf, pos); '^' would bind to the buffer start instead
_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _next_pgm_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    m = _PGM_TOKEN.match(buf, pos)
    if m is None:
        raise ValueError("unexpected end of header")
    return m.group(1), m.end()


def _load_pgm16(path: Path) -> tuple[np.ndarray, int, int]:
    buf = path.read_bytes()
    try:
        magic, pos = _next_pgm_token(buf, 0)
        if magic != b"P5":
            raise ValueError(f"expected P5 magic, got {magic[:8]!r}")
        wtok, pos = _next_pgm_token(buf, pos)
        htok, pos = _next_pgm_token(buf, pos)
        mtok, pos = _next_pgm_token(buf, pos)
        width, height, maxval = int(wtok), int(htok), int(mtok)
    except ValueError as e:
        raise DepthIOError(f"{path}: malformed header: {e}") from e
    if width <= 0 or height <= 0:
        raise DepthIOError(f"{path}: malformed header: non-positive dimensions")
    if not 256 <= maxval <= 65535:
        raise DepthIOError(
            f"{path}: malformed header: maxval {maxval} is not a 16-bit PGM"
        )
    pos += 1  # single whitespace byte separates header from samples
    expected = width * height * 2
    payload = buf[pos : pos + expected]
    if len(payload) != expected or len(buf) - pos != expected:
        raise DepthIOError(
            f"{path}: dimension mismatch: header says {width}x{height} "
            f"({expected} bytes) but payload has {len(buf) - pos} bytes"
        )
    data = np.frombuffer(payload, dtype=">u2").reshape(height, width)
    return data.astype(np.uint16), width, height


def _sidecar_dims(path: Path) -> tuple[int, int]:
    sidecar = path.with_name(path.name + ".json")
    if not sidecar.exists():
        raise DepthIOError(
            f"{path}: raw16le needs width/height arguments or sidecar {sidecar.name}"
        )
    try:
        meta = json.loads(sidecar.read_text())
        return int(meta["width"]), int(meta["height"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise DepthIOError(f"{sidecar}: malformed sidecar: {e}") from e


def _load_raw16le(path: Path, width: int | None, height: int | None) -> tuple[np.ndarray, int, int]:
    if width is None or height is None:
        width, height = _sidecar_dims(path)
    buf = path.read_bytes()
    expected = width * height * 2
    if len(buf) != expected:
        raise DepthIOError(
            f"{path}: dimension mismatch: {width}x{height} needs {expected} bytes, "
            f"file has {len(buf)}"
        )
    data = np.frombuffer(buf, dtype="<u2").reshape(height, width)
    return data.astype(np.uint16), width, height


def _load_csv(path: Path) -> tuple[np.ndarray, int, int]:
    rows = []
    try:
        text = path.read_text()
    except UnicodeDecodeError as e:
        raise DepthIOError(f"{path}: malformed header: not a text file: {e}") from e
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([int(tok) for tok in line.split(",")])
        except ValueError as e:
            raise DepthIOError(f"{path}: line {lineno}: {e}") from e
    if not rows:
        raise DepthIOError(f"{path}: malformed header: no samples")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DepthIOError(f"{path}: dimension mismatch: ragged rows")
    data = np.array(rows, dtype=np.int64)
    if data.min() < 0 or data.max() > 65535:
        raise DepthIOError(f"{path}: sample outside [0, 65535]")
    return data.astype(np.uint16), width, len(rows)


def load_depth_frame(
    path: str | Path,
    format: str,
    *,
    width: int | None = None,
    height: int | None = None,
    timestamp: int = 0,
) -> DepthFrame:
    """Load a depth frame, preserving raw samples bit-exactly.

    ``format`` is one of ``pgm16``, ``raw16le``, ``csv``. For ``raw16le`` the
    dimensions come from the keyword arguments or from a ``<name>.json``
    sidecar with ``width``/``height`` keys.
    """
    path = Path(path)
    if format not in DEPTH_FORMATS:
        raise ValueError(f"unknown depth format {format!r}, expected one of {DEPTH_FORMATS}")
    try:
        if format == "pgm16":
            data, w, h = _load_pgm16(path)
        elif format == "raw16le":
            data, w, h = _load_raw16le(path, width, height)
        else:
            data, w, h = _load_csv(path)
    except OSError as e:
        raise DepthIOError(f"{path}: unreadable: {e}") from e
    return DepthFrame(data=data, width=w, height=h, timestamp=timestamp)


def save_pgm16(data: np.ndarray, path: str | Path) -> None:
    """Write a 16-bit binary PGM (maxval 65535, big-endian samples).

    Float input is rounded to the nearest integer and clipped to [0, 65535].
    """
    arr = np.asarray(data)
    if arr.ndim != 2:
        raise ValueError(f"expected 2D image, got shape {arr.shape}")
    samples = np.clip(np.rint(arr), 0, 65535).astype(">u2")
    h, w = samples.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        f.write(samples.tobytes())


def save_pgm8(data: np.ndarray, path: str | Path) -> None:
    """Write an 8-bit binary PGM (maxval 255), used for label images."""
    arr = np.asarray(data)
    if arr.ndim != 2:
        raise ValueError(f"expected 2D image, got shape {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise ValueError("8-bit PGM samples must lie in [0, 255]")
    samples = arr.astype(np.uint8)
    h, w = samples.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(samples.tobytes())


def load_intrinsics(path: str | Path) -> CameraIntrinsics:
    """Read intrinsics from JSON: fx, fy, cx, cy, width, height, depth_scale."""
    path = Path(path)
    try:
        cfg = json.loads(path.read_text())
    except OSError as e:
        raise DepthIOError(f"{path}: unreadable: {e}") from e
    except json.JSONDecodeError as e:
        raise DepthIOError(f"{path}: malformed JSON: {e}") from e
    try:
        return CameraIntrinsics(
            fx=float(cfg["fx"]),
            fy=float(cfg["fy"]),
            cx=float(cfg["cx"]),
            cy=float(cfg["cy"]),
            width=int(cfg["width"]),
            height=int(cfg["height"]),
            depth_scale=float(cfg.get("depth_scale", 1.0)),
        )
    except KeyError as e:
        raise DepthIOError(f"{path}: missing intrinsics key {e}") from e
