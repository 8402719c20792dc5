"""Image scaling, multi-beam color composition, and raster output.

Focused beams are rendered as decibel magnitude images normalized to their
peak. Three beams can be fused into an RGB composite sharing one joint peak
so channel brightness is comparable: scatterers visible in all beams render
near-white, while directional scatterers take the color of the beam that
sees them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import ConfigError
from .focus import FocusedImage, ImageGrid


@dataclass(frozen=True, eq=False)
class RgbComposite:
    """RGB [ny x nx x 3] render of three beams, channel values in [0, 1]."""

    rgb: np.ndarray
    dynamic_range_db: float
    grid: ImageGrid | None = None


def _image_data(img) -> np.ndarray:
    data = img.data if isinstance(img, FocusedImage) else np.asarray(img)
    if data.ndim != 2:
        raise ConfigError("image data must be 2D")
    return data


def magnitude_db(img, floor_db: float = -60.0) -> np.ndarray:
    """Peak-normalized magnitude in dB, clamped to [floor_db, 0].

    An all-zero image maps to ``floor_db`` everywhere.
    """
    if floor_db >= 0.0:
        raise ConfigError(f"floor_db must be < 0, got {floor_db}")
    mag = np.abs(_image_data(img)).astype(np.float64)
    peak = float(mag.max()) if mag.size else 0.0
    if peak == 0.0:
        return np.full(mag.shape, floor_db)
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(mag / peak)
    return np.clip(db, floor_db, 0.0)


def rgb_compose(images, dynamic_range_db: float = 40.0) -> RgbComposite:
    """Map three beams onto R, G, B against one joint peak.

    Each channel is 1 + db / dynamic_range_db clamped to [0, 1], where db is
    measured against the brightest pixel across all three beams. Equal beam
    responses therefore produce gray, and scaling every beam by one complex
    factor leaves the composite unchanged.
    """
    if dynamic_range_db <= 0.0:
        raise ConfigError(
            f"dynamic_range_db must be > 0, got {dynamic_range_db}"
        )
    mags = [np.abs(_image_data(img)).astype(np.float64) for img in images]
    if len(mags) != 3:
        raise ConfigError(f"rgb_compose needs exactly 3 images, got {len(mags)}")
    shape = mags[0].shape
    if any(m.shape != shape for m in mags):
        raise ConfigError("all composite images must share one shape")
    peak = max(float(m.max()) for m in mags) if mags[0].size else 0.0
    rgb = np.zeros(shape + (3,), dtype=np.float64)
    if peak > 0.0:
        for k, mag in enumerate(mags):
            with np.errstate(divide="ignore"):
                db = 20.0 * np.log10(mag / peak)
            rgb[..., k] = np.clip(1.0 + db / dynamic_range_db, 0.0, 1.0)
    grid = images[0].grid if isinstance(images[0], FocusedImage) else None
    return RgbComposite(rgb=rgb, dynamic_range_db=dynamic_range_db, grid=grid)


def _gray_u8(db: np.ndarray, floor_db: float) -> np.ndarray:
    scale = (db - floor_db) / (-floor_db)
    return np.round(255.0 * np.clip(scale, 0.0, 1.0)).astype(np.uint8)


def _display(arr: np.ndarray) -> np.ndarray:
    """Flip rows so increasing y renders upward."""
    return np.ascontiguousarray(arr[::-1])


def write_pgm(path, gray: np.ndarray) -> None:
    """Write a uint8 grayscale array as binary PGM (P5)."""
    if gray.dtype != np.uint8 or gray.ndim != 2:
        raise ConfigError("PGM output requires a 2D uint8 array")
    ny, nx = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())


def write_ppm(path, rgb: np.ndarray) -> None:
    """Write a uint8 RGB array as binary PPM (P6)."""
    if rgb.dtype != np.uint8 or rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ConfigError("PPM output requires an [ny x nx x 3] uint8 array")
    ny, nx = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{nx} {ny}\n255\n".encode("ascii"))
        fh.write(rgb.tobytes())


def save_magnitude_pgm(path, img, floor_db: float = -60.0) -> None:
    """Render one image to a peak-normalized grayscale PGM."""
    write_pgm(path, _display(_gray_u8(magnitude_db(img, floor_db), floor_db)))


def save_magnitude_png(path, img, floor_db: float = -60.0) -> None:
    """Render one image to a peak-normalized grayscale PNG."""
    gray = _display(_gray_u8(magnitude_db(img, floor_db), floor_db))
    Image.fromarray(gray, mode="L").save(path, format="PNG")


def composite_u8(comp: RgbComposite) -> np.ndarray:
    return np.round(255.0 * np.clip(comp.rgb, 0.0, 1.0)).astype(np.uint8)


def save_composite_ppm(path, comp: RgbComposite) -> None:
    """Write an RGB composite as binary PPM."""
    write_ppm(path, _display(composite_u8(comp)))


def save_composite_png(path, comp: RgbComposite) -> None:
    """Write an RGB composite as PNG."""
    Image.fromarray(_display(composite_u8(comp)), mode="RGB").save(
        path, format="PNG"
    )
