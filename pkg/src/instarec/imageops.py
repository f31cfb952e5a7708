"""Low-level raster operations shared across the toolkit.

Images are ``uint8`` RGB arrays of shape ``(H, W, 3)``; masks are boolean
``(H, W)`` arrays.  Everything here is pure numpy and deterministic.
"""
from __future__ import annotations

import numpy as np


def as_rgb(image: np.ndarray) -> np.ndarray:
    """Validate and return an ``(H, W, 3)`` uint8 image."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {image.shape}")
    if image.dtype != np.uint8:
        raise ValueError(f"expected uint8 image, got {image.dtype}")
    return image


def to_gray(image: np.ndarray) -> np.ndarray:
    """Luminance grayscale as float64 in [0, 255]."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image
    return image[..., 0] * 0.299 + image[..., 1] * 0.587 + image[..., 2] * 0.114


def rgb_to_hue_sat(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hexcone hue (degrees in [0, 360)) and saturation (in [0, 1]).

    Achromatic pixels (max == min, or black) get hue 0 and saturation 0.
    """
    rgb = np.asarray(image, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {rgb.shape}")
    if rgb.max() > 1.0:
        rgb = rgb / 255.0
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    cmax = rgb.max(axis=2)
    cmin = rgb.min(axis=2)
    delta = cmax - cmin
    chromatic = delta > 0

    hue = np.zeros_like(cmax)
    safe = np.where(chromatic, delta, 1.0)
    r_is_max = chromatic & (cmax == r)
    g_is_max = chromatic & ~r_is_max & (cmax == g)
    b_is_max = chromatic & ~r_is_max & ~g_is_max
    hue[r_is_max] = (((g - b) / safe)[r_is_max] % 6.0)
    hue[g_is_max] = ((b - r) / safe)[g_is_max] + 2.0
    hue[b_is_max] = ((r - g) / safe)[b_is_max] + 4.0
    hue = (hue * 60.0) % 360.0

    sat = np.zeros_like(cmax)
    nonblack = cmax > 0
    sat[nonblack] = (delta / np.where(nonblack, cmax, 1.0))[nonblack]
    return hue, sat


def hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Inverse hexcone: hue in [0, 360), s/v in [0, 1] -> float RGB in [0, 1]."""
    h = np.asarray(h, dtype=np.float64) % 360.0
    s = np.clip(np.asarray(s, dtype=np.float64), 0.0, 1.0)
    v = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)
    c = v * s
    hp = h / 60.0
    x = c * (1.0 - np.abs(hp % 2.0 - 1.0))
    zeros = np.zeros_like(c)
    sector = np.floor(hp).astype(int) % 6
    r = np.choose(sector, [c, x, zeros, zeros, x, c])
    g = np.choose(sector, [x, c, c, x, zeros, zeros])
    b = np.choose(sector, [zeros, zeros, x, c, c, x])
    m = v - c
    return np.stack([r + m, g + m, b + m], axis=-1)


def sample_bilinear(image: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                    fill: tuple[float, ...] | float = 0.0) -> np.ndarray:
    """Sample ``image`` at float coordinates with bilinear interpolation.

    ``xs``/``ys`` may have any common shape; coordinates outside the image
    evaluate to ``fill``.  Returns float64 with one trailing channel axis
    when the input has one.
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape[:2]
    has_channels = img.ndim == 3
    if not has_channels:
        img = img[:, :, None]
    nchan = img.shape[2]
    fill_vec = np.broadcast_to(np.asarray(fill, dtype=np.float64), (nchan,))

    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0

    out = np.zeros(xs.shape + (nchan,), dtype=np.float64)
    valid = (xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1)
    x0c = np.clip(x0, 0, w - 1)
    y0c = np.clip(y0, 0, h - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)

    top = img[y0c, x0c] * (1 - fx)[..., None] + img[y0c, x1c] * fx[..., None]
    bot = img[y1c, x0c] * (1 - fx)[..., None] + img[y1c, x1c] * fx[..., None]
    interp = top * (1 - fy)[..., None] + bot * fy[..., None]

    out[valid] = interp[valid]
    out[~valid] = fill_vec
    return out if has_channels else out[..., 0]


def resize_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize using the pixel-center convention.

    Returns the same dtype as the input; a same-size resize returns an
    unchanged copy.
    """
    img = np.asarray(image)
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img.copy()
    sy = h / out_h
    sx = w / out_w
    ys = (np.arange(out_h) + 0.5) * sy - 0.5
    xs = (np.arange(out_w) + 0.5) * sx - 0.5
    ys = np.clip(ys, 0, h - 1)
    xs = np.clip(xs, 0, w - 1)
    grid_x, grid_y = np.meshgrid(xs, ys)
    out = sample_bilinear(img, grid_x, grid_y)
    if np.issubdtype(img.dtype, np.integer):
        info = np.iinfo(img.dtype)
        return np.clip(np.rint(out), info.min, info.max).astype(img.dtype)
    return out.astype(img.dtype)


def resize_nearest(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbour resize; used for masks."""
    img = np.asarray(image)
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img.copy()
    ys = np.minimum((np.arange(out_h) + 0.5) * h / out_h, h - 1).astype(np.int64)
    xs = np.minimum((np.arange(out_w) + 0.5) * w / out_w, w - 1).astype(np.int64)
    return img[ys][:, xs].copy()


def mask_bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    """Bounding box ``(row0, row1, col0, col1)`` of a boolean mask (half-open).

    Raises ``ValueError`` for a mask with no foreground pixels.
    """
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        raise ValueError("mask has no foreground pixels")
    return int(rows[0]), int(rows[-1]) + 1, int(cols[0]), int(cols[-1]) + 1
