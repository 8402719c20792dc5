"""Binary containers for range-compressed data and focused images.

Both formats are a fixed 64-byte little-endian header followed by the
payload as row-major complex64, so files round-trip bit-for-bit and can be
memory-mapped from other tools. Headers carry everything needed to rebuild
the matching in-memory object.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import ConfigError
from .focus import Beam, FocusedImage, ImageGrid
from .signal import WINDOW_IDS, WINDOW_NAMES, FmcwParams, RangeCompressedMatrix

RC_MAGIC = b"SARC"
IMAGE_MAGIC = b"SARI"
FORMAT_VERSION = 1

# magic, version, window_id, rows, cols, f0, bandwidth, pulse_duration,
# prf, zero_pad, fast_time_samples, max_range
_RC_HEADER = struct.Struct("<4sHHIIddddIId")
# magic, version, reserved, ny, nx, x0, y0, dx, dy, alpha_p, delta_alpha
_IMAGE_HEADER = struct.Struct("<4sHHIIdddddd")

assert _RC_HEADER.size == 64 and _IMAGE_HEADER.size == 64


def write_rc(path, rc: RangeCompressedMatrix) -> None:
    """Serialize a range-compressed matrix (payload stored complex64)."""
    rows, cols = rc.data.shape
    header = _RC_HEADER.pack(
        RC_MAGIC, FORMAT_VERSION, WINDOW_IDS[rc.window], rows, cols,
        rc.params.f0, rc.params.bandwidth, rc.params.pulse_duration,
        rc.params.prf, rc.zero_pad_factor, rc.params.fast_time_samples,
        rc.params.max_range,
    )
    payload = np.ascontiguousarray(rc.data, dtype=np.complex64)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def _read_payload(fh, count: int, path) -> np.ndarray:
    raw = fh.read(count * 8)
    if len(raw) != count * 8:
        raise ConfigError(f"truncated payload in {path}")
    return np.frombuffer(raw, dtype=np.complex64).copy()


def read_rc(path) -> RangeCompressedMatrix:
    """Load a range-compressed matrix written by `write_rc`."""
    with open(path, "rb") as fh:
        head = fh.read(_RC_HEADER.size)
        if len(head) != _RC_HEADER.size:
            raise ConfigError(f"truncated header in {path}")
        (magic, version, window_id, rows, cols, f0, bandwidth,
         pulse_duration, prf, zero_pad, n_fast, max_range) = _RC_HEADER.unpack(head)
        if magic != RC_MAGIC:
            raise ConfigError(f"{path} is not a range-compressed container")
        if version != FORMAT_VERSION:
            raise ConfigError(
                f"unsupported container version {version} in {path}"
            )
        if window_id not in WINDOW_NAMES:
            raise ConfigError(f"unknown window id {window_id} in {path}")
        data = _read_payload(fh, rows * cols, path).reshape(rows, cols)
    params = FmcwParams(
        f0=f0, bandwidth=bandwidth, pulse_duration=pulse_duration,
        prf=prf, max_range=max_range, fast_time_samples=n_fast,
    )
    return RangeCompressedMatrix(
        data=data,
        range_axis=np.arange(rows) * params.range_bin_spacing(zero_pad),
        slow_time_axis=np.arange(cols) / prf,
        params=params,
        window=WINDOW_NAMES[window_id],
        zero_pad_factor=zero_pad,
    )


def write_image(path, img: FocusedImage) -> None:
    """Serialize a focused image (payload stored complex64)."""
    ny, nx = img.data.shape
    header = _IMAGE_HEADER.pack(
        IMAGE_MAGIC, FORMAT_VERSION, 0, ny, nx,
        img.grid.x0, img.grid.y0, img.grid.dx, img.grid.dy,
        img.beam.alpha_p, img.beam.delta_alpha,
    )
    payload = np.ascontiguousarray(img.data, dtype=np.complex64)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_image(path) -> FocusedImage:
    """Load a focused image written by `write_image`."""
    with open(path, "rb") as fh:
        head = fh.read(_IMAGE_HEADER.size)
        if len(head) != _IMAGE_HEADER.size:
            raise ConfigError(f"truncated header in {path}")
        (magic, version, _reserved, ny, nx, x0, y0, dx, dy,
         alpha_p, delta_alpha) = _IMAGE_HEADER.unpack(head)
        if magic != IMAGE_MAGIC:
            raise ConfigError(f"{path} is not a focused-image container")
        if version != FORMAT_VERSION:
            raise ConfigError(
                f"unsupported container version {version} in {path}"
            )
        data = _read_payload(fh, ny * nx, path).reshape(ny, nx)
    return FocusedImage(
        data=data,
        grid=ImageGrid(x0=x0, y0=y0, dx=dx, dy=dy, nx=nx, ny=ny),
        beam=Beam(alpha_p=alpha_p, delta_alpha=delta_alpha),
    )
